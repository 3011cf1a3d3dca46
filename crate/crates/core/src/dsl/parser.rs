//! Pratt parser for model specifications.
//!
//! ```text
//! model := link ':' expr
//! link  := 'logit' | 'identity'
//! ```
//!
//! Binding strength, tightest first: `^` (right associative), unary `-`,
//! `* /`, `+ -`.

use super::expr::{BinOp, Expr, UnaryFn};
use super::lexer::{tokenize, Tok, Token};
use crate::error::{ParseError, ParseErrorKind};
use crate::model::{FeatureSpace, Link};

const ADD_BP: u8 = 10;
const MUL_BP: u8 = 20;
const PREFIX_BP: u8 = 30;
const POW_BP: u8 = 40;

pub(crate) struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    last: (usize, usize),
    space: &'a FeatureSpace,
}

impl<'a> Parser<'a> {
    pub fn new(text: &str, space: &'a FeatureSpace) -> Result<Self, ParseError> {
        let lexed = tokenize(text)?;
        if lexed.tokens.is_empty() {
            return Err(ParseError::new(
                ParseErrorKind::Empty,
                1,
                1,
                "empty model specification",
            ));
        }
        Ok(Self {
            tokens: lexed.tokens,
            pos: 0,
            last: lexed.last,
            space,
        })
    }

    pub fn parse_link(&mut self) -> Result<Link, ParseError> {
        let tok = self.next_or_end("a link name")?;
        let link = match &tok.tok {
            Tok::Ident(s) if s == "logit" => Link::Logit,
            Tok::Ident(s) if s == "identity" => Link::Identity,
            other => {
                return Err(ParseError::new(
                    ParseErrorKind::UnknownLink,
                    tok.line,
                    tok.column,
                    format!(
                        "expected link 'logit' or 'identity', found {}",
                        describe(other)
                    ),
                ))
            }
        };
        let colon = self.next_or_end("':' after the link")?;
        if colon.tok != Tok::Colon {
            return Err(ParseError::new(
                ParseErrorKind::UnexpectedToken,
                colon.line,
                colon.column,
                format!(
                    "expected ':' after the link, found {}",
                    describe(&colon.tok)
                ),
            ));
        }
        Ok(link)
    }

    pub fn parse_to_end(&mut self) -> Result<Expr, ParseError> {
        let e = self.expr(0)?;
        if let Some(t) = self.tokens.get(self.pos) {
            let kind = if t.tok == Tok::RParen {
                ParseErrorKind::UnbalancedParenthesis
            } else {
                ParseErrorKind::UnexpectedToken
            };
            let msg = if t.tok == Tok::RParen {
                "unmatched ')'".to_string()
            } else {
                format!(
                    "unexpected {} after a complete expression",
                    describe(&t.tok)
                )
            };
            return Err(ParseError::new(kind, t.line, t.column, msg));
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn next_or_end(&mut self, expected: &str) -> Result<Token, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.end_error(
                ParseErrorKind::UnexpectedEnd,
                format!("expected {expected}"),
            )),
        }
    }

    fn end_error(&self, kind: ParseErrorKind, msg: String) -> ParseError {
        ParseError::new(
            kind,
            self.last.0,
            self.last.1,
            format!("unexpected end of input: {msg}"),
        )
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, lbp, rbp) = match self.peek() {
                Some(Tok::Plus) => (BinOp::Add, ADD_BP, ADD_BP + 1),
                Some(Tok::Minus) => (BinOp::Sub, ADD_BP, ADD_BP + 1),
                Some(Tok::Star) => (BinOp::Mul, MUL_BP, MUL_BP + 1),
                Some(Tok::Slash) => (BinOp::Div, MUL_BP, MUL_BP + 1),
                Some(Tok::Caret) => (BinOp::Pow, POW_BP + 1, POW_BP),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(rbp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let t = self.next_or_end("an operand")?;
        match t.tok {
            Tok::Number(v) => Ok(Expr::Const(v)),
            Tok::Minus => Ok(Expr::negated(self.expr(PREFIX_BP)?)),
            Tok::LParen => {
                let inner = self.expr(0)?;
                match self.tokens.get(self.pos) {
                    Some(c) if c.tok == Tok::RParen => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(c) => Err(ParseError::new(
                        ParseErrorKind::UnexpectedToken,
                        c.line,
                        c.column,
                        format!(
                            "expected ')' to close '(' at {}:{}, found {}",
                            t.line,
                            t.column,
                            describe(&c.tok)
                        ),
                    )),
                    None => Err(self.end_error(
                        ParseErrorKind::UnbalancedParenthesis,
                        format!("'(' at {}:{} is never closed", t.line, t.column),
                    )),
                }
            }
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.call(&name, t.line, t.column)
                } else {
                    self.space
                        .index_of(&name)
                        .map(Expr::Feature)
                        .ok_or_else(|| {
                            ParseError::new(
                                ParseErrorKind::UnknownIdentifier,
                                t.line,
                                t.column,
                                format!("unknown feature '{name}'"),
                            )
                        })
                }
            }
            Tok::RParen => Err(ParseError::new(
                ParseErrorKind::UnbalancedParenthesis,
                t.line,
                t.column,
                "unmatched ')'",
            )),
            other => Err(ParseError::new(
                ParseErrorKind::UnexpectedToken,
                t.line,
                t.column,
                format!("expected an operand, found {}", describe(&other)),
            )),
        }
    }

    fn call(&mut self, name: &str, line: usize, column: usize) -> Result<Expr, ParseError> {
        let arity = match name {
            "exp" | "log" | "logistic" => 1,
            "min" | "max" => 2,
            _ => {
                return Err(ParseError::new(
                    ParseErrorKind::UnknownIdentifier,
                    line,
                    column,
                    format!("unknown function '{name}'"),
                ))
            }
        };
        let open = self.next_or_end("'('")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
        } else {
            loop {
                args.push(self.expr(0)?);
                match self.tokens.get(self.pos).cloned() {
                    Some(Token {
                        tok: Tok::Comma, ..
                    }) => self.pos += 1,
                    Some(Token {
                        tok: Tok::RParen, ..
                    }) => {
                        self.pos += 1;
                        break;
                    }
                    Some(c) => {
                        return Err(ParseError::new(
                            ParseErrorKind::UnexpectedToken,
                            c.line,
                            c.column,
                            format!(
                                "expected ',' or ')' in call to {name}, found {}",
                                describe(&c.tok)
                            ),
                        ))
                    }
                    None => {
                        return Err(self.end_error(
                            ParseErrorKind::UnbalancedParenthesis,
                            format!("'(' at {}:{} is never closed", open.line, open.column),
                        ))
                    }
                }
            }
        }
        if args.len() != arity {
            return Err(ParseError::new(
                ParseErrorKind::Arity,
                line,
                column,
                format!("{name} takes {arity} argument(s), got {}", args.len()),
            ));
        }
        let mut args = args.into_iter();
        let a = args.next().expect("arity >= 1");
        Ok(match name {
            "exp" => Expr::Call(UnaryFn::Exp, Box::new(a)),
            "log" => Expr::Call(UnaryFn::Log, Box::new(a)),
            "logistic" => Expr::Call(UnaryFn::Logistic, Box::new(a)),
            "min" => Expr::binary(BinOp::Min, a, args.next().expect("arity 2")),
            _ => Expr::binary(BinOp::Max, a, args.next().expect("arity 2")),
        })
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Number(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Colon => "':'".into(),
    }
}
