//! Textual model specifications.
//!
//! A specification is `link ':' expression`, for example
//! `logit: -2 + 0.8*x1 + 0.3*x1*x2 + exp(x3)/4`. The expression is split
//! into its top-level summands; each summand becomes a polynomial component
//! when it is a product of constants and integer powers of features, and an
//! opaque expression component otherwise. The split is what
//! [`term_structure`] reports and what the closed-form attribution paths
//! dispatch on.

mod expr;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt::Write as _;

pub use expr::{BinOp, Expr, ExprDisplay, UnaryFn};

use crate::error::ParseError;
use crate::model::{Component, FeatureSpace, ModelSpec, Polynomial, MAX_POWER};
use expr::format_number;
use lexer::{tokenize, Tok};
use parser::Parser;

/// File extension of model specification files.
pub const MODEL_FILE_EXTENSION: &str = "bshap-model";

pub fn parse_model_spec(text: &str, space: &FeatureSpace) -> Result<ModelSpec, ParseError> {
    let mut p = Parser::new(text, space)?;
    let link = p.parse_link()?;
    let expr = p.parse_to_end()?;
    let components = lower(&expr);
    Ok(ModelSpec::new(space.clone(), link, components)
        .expect("parsed components reference known features"))
}

/// Parses a bare expression (no link prefix).
pub fn parse_expression(text: &str, space: &FeatureSpace) -> Result<Expr, ParseError> {
    Parser::new(text, space)?.parse_to_end()
}

/// Builds a feature space from the identifiers a specification uses, in
/// order of first appearance. Function names and the link are skipped.
pub fn infer_space(text: &str) -> Result<FeatureSpace, ParseError> {
    let lexed = tokenize(text)?;
    let toks = &lexed.tokens;
    let mut names: Vec<String> = Vec::new();
    let start = match toks.get(1) {
        Some(t) if t.tok == Tok::Colon => 2,
        _ => 0,
    };
    for (i, t) in toks.iter().enumerate().skip(start) {
        if let Tok::Ident(name) = &t.tok {
            let is_call = matches!(toks.get(i + 1), Some(n) if n.tok == Tok::LParen);
            if !is_call && !names.contains(name) {
                names.push(name.clone());
            }
        }
    }
    if names.is_empty() {
        names.push("x1".into());
    }
    Ok(FeatureSpace::from_names(names).expect("identifiers are unique and non-empty"))
}

/// Splits an expression into signed top-level summands and lowers each.
fn lower(expr: &Expr) -> Vec<Component> {
    let mut summands = Vec::new();
    split_summands(expr, false, &mut summands);
    summands
        .into_iter()
        .map(|(e, negative)| match monomial(e) {
            Some((c, factors)) => {
                let c = if negative { -c } else { c };
                match Polynomial::new(c, factors) {
                    Ok(p) => Component::Polynomial(p),
                    Err(_) => opaque(e, negative),
                }
            }
            None => opaque(e, negative),
        })
        .collect()
}

fn opaque(e: &Expr, negative: bool) -> Component {
    Component::Expression(if negative {
        Expr::negated(e.clone())
    } else {
        e.clone()
    })
}

fn split_summands<'e>(e: &'e Expr, negative: bool, out: &mut Vec<(&'e Expr, bool)>) {
    match e {
        Expr::Binary(BinOp::Add, l, r) => {
            split_summands(l, negative, out);
            split_summands(r, negative, out);
        }
        Expr::Binary(BinOp::Sub, l, r) => {
            split_summands(l, negative, out);
            split_summands(r, !negative, out);
        }
        Expr::Neg(inner) => split_summands(inner, !negative, out),
        _ => out.push((e, negative)),
    }
}

/// `Some((coefficient, factors))` when `e` is a constant times integer
/// powers of features.
fn monomial(e: &Expr) -> Option<(f64, Vec<(usize, u32)>)> {
    match e {
        Expr::Const(c) => Some((*c, Vec::new())),
        Expr::Feature(i) => Some((1.0, vec![(*i, 1)])),
        Expr::Neg(a) => monomial(a).map(|(c, f)| (-c, f)),
        Expr::Binary(BinOp::Mul, a, b) => {
            let (ca, mut fa) = monomial(a)?;
            let (cb, fb) = monomial(b)?;
            fa.extend(fb);
            Some((ca * cb, fa))
        }
        Expr::Binary(BinOp::Div, a, b) => {
            let (ca, fa) = monomial(a)?;
            match monomial(b)? {
                (cb, fb) if fb.is_empty() && cb != 0.0 => Some((ca / cb, fa)),
                _ => None,
            }
        }
        Expr::Binary(BinOp::Pow, a, b) => {
            let (cb, fb) = monomial(b)?;
            if !fb.is_empty() || cb.fract() != 0.0 || !(0.0..=MAX_POWER as f64).contains(&cb) {
                return None;
            }
            let n = cb as u32;
            let (ca, fa) = monomial(a)?;
            if n == 0 {
                return Some((1.0, Vec::new()));
            }
            Some((
                ca.powi(n as i32),
                fa.into_iter().map(|(i, p)| (i, p * n)).collect(),
            ))
        }
        _ => None,
    }
}

/// Variable subsets of a model's additive components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionStructure {
    /// One entry per component that reads at least one feature.
    pub terms: Vec<BTreeSet<usize>>,
    pub max_order: usize,
}

impl InteractionStructure {
    /// Features read by some term.
    pub fn support(&self) -> BTreeSet<usize> {
        self.terms.iter().flatten().copied().collect()
    }

    pub fn describe(&self, space: &FeatureSpace) -> String {
        self.terms
            .iter()
            .map(|t| {
                let names: Vec<&str> = t.iter().map(|&i| space.name(i)).collect();
                format!("{{{}}}", names.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn term_structure(model: &ModelSpec) -> InteractionStructure {
    let terms: Vec<BTreeSet<usize>> = model
        .components()
        .iter()
        .map(Component::variables)
        .filter(|v| !v.is_empty())
        .collect();
    let max_order = terms.iter().map(BTreeSet::len).max().unwrap_or(0);
    InteractionStructure { terms, max_order }
}

/// Renders a model as DSL text, or as the JSON document when it contains
/// tabulated components.
pub fn serialize_model_spec(model: &ModelSpec) -> String {
    if model
        .components()
        .iter()
        .any(|c| matches!(c, Component::Tabulated(_)))
    {
        return model.to_json();
    }
    let space = model.space();
    let mut out = format!("{}: ", model.link().name());
    for (i, c) in model.components().iter().enumerate() {
        let (negative, body) = match c {
            Component::Polynomial(p) => {
                (p.coefficient.is_sign_negative(), polynomial_body(p, space))
            }
            Component::Expression(Expr::Neg(inner)) => (true, operand(inner, space)),
            Component::Expression(e) => (false, operand(e, space)),
            Component::Tabulated(_) => unreachable!(),
        };
        match (i, negative) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(&body);
    }
    out
}

fn operand(e: &Expr, space: &FeatureSpace) -> String {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) | Expr::Neg(_) => {
            format!("({})", e.display(space))
        }
        _ => e.display(space).to_string(),
    }
}

fn polynomial_body(p: &Polynomial, space: &FeatureSpace) -> String {
    let c = p.coefficient.abs();
    let mut s = String::new();
    if p.factors.is_empty() || c != 1.0 {
        s.push_str(&format_number(c));
    }
    for (j, &(i, pow)) in p.factors.iter().enumerate() {
        if j > 0 || !s.is_empty() {
            s.push('*');
        }
        s.push_str(space.name(i));
        if pow > 1 {
            let _ = write!(s, "^{pow}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ParseErrorKind;
    use crate::model::Link;

    fn space(k: usize) -> FeatureSpace {
        FeatureSpace::numbered(k)
    }

    fn eval(text: &str, k: usize, x: &[f64]) -> f64 {
        parse_model_spec(text, &space(k)).unwrap().score(x)
    }

    #[test]
    fn hand_evaluations() {
        assert_eq!(eval("logit: 0.5 + 2*x1 - x2", 2, &[1.0, 1.0]), 1.5);
        assert_eq!(eval("identity: x1*x2", 2, &[2.0, 3.0]), 6.0);
        assert_eq!(eval("identity: 2*x1^2", 1, &[3.0]), 18.0);
        assert_eq!(eval("identity: 2^3^2", 1, &[0.0]), 512.0);
        assert_eq!(eval("identity: -x1^2", 1, &[3.0]), -9.0);
        assert_eq!(eval("identity: 8/2/2", 1, &[0.0]), 2.0);
        assert_eq!(eval("identity: 1 - 2 - 3", 1, &[0.0]), -4.0);
        assert_eq!(eval("identity: 2^-1", 1, &[0.0]), 0.5);
        assert_eq!(eval("identity: min(x1, 2) + max(x1, 2)", 1, &[5.0]), 7.0);
        assert_eq!(eval("identity: log(exp(x1))", 1, &[1.5]), 1.5);
        assert_eq!(eval("identity: logistic(0)", 1, &[0.0]), 0.5);
        assert_eq!(
            eval("identity: 3 # trailing comment\n + x1", 1, &[1.0]),
            4.0
        );
    }

    #[test]
    fn lowering_into_components() {
        let m = parse_model_spec("logit: 0.5 + 2*x1 - x2", &space(2)).unwrap();
        assert_eq!(m.link(), Link::Logit);
        assert_eq!(m.components().len(), 3);
        assert!(m
            .components()
            .iter()
            .all(|c| matches!(c, Component::Polynomial(_))));

        let m = parse_model_spec("identity: x1*x2*x3", &space(3)).unwrap();
        assert_eq!(
            m.components(),
            &[Component::Polynomial(
                Polynomial::new(1.0, [(0, 1), (1, 1), (2, 1)]).unwrap()
            )]
        );
        assert_eq!(term_structure(&m).max_order, 3);

        // non-integer and over-large powers stay opaque
        let m = parse_model_spec("identity: x1^2.5 + x1^9", &space(1)).unwrap();
        assert!(m
            .components()
            .iter()
            .all(|c| matches!(c, Component::Expression(_))));
    }

    #[test]
    fn structures() {
        let s = term_structure(&parse_model_spec("identity: x1 + x2 + x3", &space(3)).unwrap());
        assert_eq!(s.max_order, 1);
        assert_eq!(s.terms.len(), 3);

        let s = term_structure(
            &parse_model_spec("identity: x1*x2 + x1*x3 + exp(x2)*x3", &space(3)).unwrap(),
        );
        assert_eq!(s.max_order, 2);
        let sets: Vec<Vec<usize>> = s
            .terms
            .iter()
            .map(|t| t.iter().copied().collect())
            .collect();
        assert_eq!(sets, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);

        let s = term_structure(&parse_model_spec("identity: exp(x1*x2*x3*x4)", &space(4)).unwrap());
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.max_order, 4);

        let s = term_structure(&parse_model_spec("identity: 3", &space(2)).unwrap());
        assert_eq!(s.max_order, 0);
        assert!(s.terms.is_empty());
    }

    #[test]
    fn positioned_errors() {
        let s = space(3);
        let cases = [
            ("logit: (x1", ParseErrorKind::UnbalancedParenthesis, 1, 10),
            ("logit: x1)", ParseErrorKind::UnbalancedParenthesis, 1, 10),
            ("logit: x4", ParseErrorKind::UnknownIdentifier, 1, 8),
            ("logit: X1", ParseErrorKind::UnknownIdentifier, 1, 8),
            ("logit: exp(x1, x2)", ParseErrorKind::Arity, 1, 8),
            ("logit: min(x1)", ParseErrorKind::Arity, 1, 8),
            ("logit: foo(x1)", ParseErrorKind::UnknownIdentifier, 1, 8),
            ("probit: x1", ParseErrorKind::UnknownLink, 1, 1),
            ("logit x1", ParseErrorKind::UnexpectedToken, 1, 7),
            ("logit: x1 +", ParseErrorKind::UnexpectedEnd, 1, 11),
            ("logit: x1 x2", ParseErrorKind::UnexpectedToken, 1, 11),
            ("logit:\n  x1 $", ParseErrorKind::Lexical, 2, 6),
            ("   # nothing", ParseErrorKind::Empty, 1, 1),
            ("logit: (x1 x2)", ParseErrorKind::UnexpectedToken, 1, 12),
        ];
        for (text, kind, line, column) in cases {
            let err = parse_model_spec(text, &s).unwrap_err();
            assert_eq!(
                (err.kind, err.line, err.column),
                (kind, line, column),
                "{text}: {err}"
            );
        }
    }

    #[test]
    fn serialization_round_trips() {
        let s = space(3);
        for text in [
            "logit: x1 - 0.5*x2",
            "identity: -2*x1^2 + x2*x3 - 7",
            "identity: -exp(x1) + x2 - log(x3 + 2)/3",
            "logit: 1e-9*x1 - (x2 - x3)^3 + min(x1, -x2)",
            "identity: -(x1 + x2) * x3",
        ] {
            let m = parse_model_spec(text, &s).unwrap();
            let text2 = serialize_model_spec(&m);
            let m2 = parse_model_spec(&text2, &s).unwrap();
            assert_eq!(m, m2, "{text} -> {text2}");
        }
        let m = parse_model_spec("identity: 2*x1^2", &space(1)).unwrap();
        let back = parse_model_spec(&serialize_model_spec(&m), &space(1)).unwrap();
        assert_eq!(back.score(&[3.0]), 18.0);
    }

    #[test]
    fn infers_space_from_identifiers() {
        let s = infer_space("logit: b + exp(a) * b - c").unwrap();
        assert_eq!(s.names().collect::<Vec<_>>(), vec!["b", "a", "c"]);
    }
}
