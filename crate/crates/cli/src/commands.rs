use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use bshap_core::attribution::{explain, AttributionSpace, Grouping};
use bshap_core::data::{generate_synthetic, load_dataset, Dataset, SynthConfig};
use bshap_core::diagnostics::{
    check_continuity, check_monotonicity, pdp_1d, permutation_importance, ProbeSpec,
};
use bshap_core::dsl::{infer_space, parse_model_spec, serialize_model_spec, term_structure};
use bshap_core::reference::{select_reference, ReferencePolicy};
use bshap_core::report::{build_report, render_report, ReasonSummary, ReportFormat, ReportTable};
use bshap_core::{Decision, DecisionConfig, Error, FeaturePoint, FeatureSpace, ModelSpec};

use crate::config::{parse_groups, RunConfig, DEFAULT_QUANTILE};
use crate::{
    CheckArgs, Command, Common, DecideArgs, ExplainArgs, ImportanceArgs, Internal, PdpArgs,
    ReferenceArgs, SynthArgs, ValidateArgs, EXIT_INPUT, EXIT_OK,
};

const DEFAULT_TAU: f64 = 0.25;
/// Rows explained in parallel before their reports are written.
const BATCH_CHUNK: usize = 256;
const ROUND_TRIP_PROBES: usize = 64;

pub(crate) fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Explain(a) => cmd_explain(a, out, err),
        Command::Decide(a) => cmd_decide(a, out),
        Command::Reference(a) => cmd_reference(a, out, err),
        Command::Check(a) => cmd_check(a, out),
        Command::Pdp(a) => cmd_pdp(a, out),
        Command::Importance(a) => cmd_importance(a, out),
        Command::Synth(a) => cmd_synth(a, out, err),
        Command::ValidateSpec(a) => cmd_validate(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| anyhow!(Internal(format!("cannot write output: {e}"))))
}

/// Flags merged over the config file.
struct Ctx {
    cfg: RunConfig,
    model: Option<PathBuf>,
    space: Option<PathBuf>,
    data: Option<PathBuf>,
    tau: f64,
    seed: u64,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let cfg = match &c.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(Self {
            model: c.model.clone().or_else(|| cfg.model.clone()),
            space: c.space.clone().or_else(|| cfg.space.clone()),
            data: c.data.clone().or_else(|| cfg.data.clone()),
            tau: c.tau.or(cfg.tau).unwrap_or(DEFAULT_TAU),
            seed: c.seed.or(cfg.seed).unwrap_or(0),
            cfg,
        })
    }

    fn decision(&self) -> Result<DecisionConfig> {
        Ok(DecisionConfig::new(self.tau)?)
    }

    fn model(&self) -> Result<ModelSpec> {
        let path = self
            .model
            .as_ref()
            .ok_or_else(|| anyhow!("no model given: pass --model or set `model` in the config"))?;
        load_model(path, self.space.as_deref())
    }

    fn dataset(&self, space: &FeatureSpace) -> Result<Option<Dataset>> {
        self.data.as_ref().map(|p| read_rows(p, space)).transpose()
    }

    fn require_dataset(&self, space: &FeatureSpace, why: &str) -> Result<Dataset> {
        self.dataset(space)?.ok_or_else(|| {
            anyhow!("{why} needs a dataset: pass --data or set `data` in the config")
        })
    }

    fn format<T: std::str::FromStr<Err = String>>(
        &self,
        flag: Option<&String>,
        default: &str,
    ) -> Result<T> {
        let s = flag
            .or(self.cfg.format.as_ref())
            .map(String::as_str)
            .unwrap_or(default);
        s.parse().map_err(anyhow::Error::msg)
    }
}

fn read_rows(path: &Path, space: &FeatureSpace) -> Result<Dataset> {
    load_dataset(path, space).with_context(|| format!("{}", path.display()))
}

fn load_space(path: &Path) -> Result<FeatureSpace> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    FeatureSpace::from_json(&text).with_context(|| format!("{}", path.display()))
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn load_model(path: &Path, space: Option<&Path>) -> Result<ModelSpec> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let space = space.map(load_space).transpose()?;
    if is_json(path) {
        let space =
            space.ok_or_else(|| anyhow!("a JSON model needs --space to name its features"))?;
        return ModelSpec::from_json(&text, &space).with_context(|| format!("{}", path.display()));
    }
    let positioned = |e: bshap_core::ParseError| anyhow!("{}:{e}", path.display());
    let space = match space {
        Some(s) => s,
        None => infer_space(&text).map_err(positioned)?,
    };
    parse_model_spec(&text, &space).map_err(positioned)
}

fn parse_policy(spec: &str, space: &FeatureSpace) -> Result<ReferencePolicy> {
    Ok(match spec.split_once(':') {
        None if spec == "percentile" => ReferencePolicy::Percentile(DEFAULT_QUANTILE),
        None if spec == "nearest" => ReferencePolicy::NearestAccepted {
            restrict_to_mutable: false,
        },
        None if spec == "nearest-mutable" => ReferencePolicy::NearestAccepted {
            restrict_to_mutable: true,
        },
        Some(("percentile", q)) => {
            ReferencePolicy::Percentile(q.trim().parse().with_context(|| format!("bad quantile '{q}'"))?)
        }
        Some(("fixed", path)) => {
            let ds = read_rows(Path::new(path), space)?;
            ReferencePolicy::FixedPoint(ds.rows()[0].clone())
        }
        _ => bail!("unknown policy '{spec}' (expected percentile[:q], nearest, nearest-mutable or fixed:FILE)"),
    })
}

fn policy_from(flag: Option<&String>, ctx: &Ctx, space: &FeatureSpace) -> Result<ReferencePolicy> {
    let spec = match flag {
        Some(s) => s.clone(),
        None => ctx
            .cfg
            .policy_string()?
            .unwrap_or_else(|| format!("percentile:{DEFAULT_QUANTILE}")),
    };
    parse_policy(&spec, space)
}

fn grouping_from(flag: Option<&String>, ctx: &Ctx, space: &FeatureSpace) -> Result<Grouping> {
    Ok(match flag {
        Some(g) => parse_groups(g, space)?,
        None => ctx
            .cfg
            .grouping(space)?
            .unwrap_or_else(|| Grouping::singletons(space)),
    })
}

fn write_report(
    out: &mut dyn Write,
    table: &ReportTable,
    format: ReportFormat,
    row: Option<usize>,
) -> Result<()> {
    let text = match (format, row) {
        (_, None) => render_report(table, format),
        (ReportFormat::Json, Some(r)) => {
            serde_json::to_string(&json!({ "row": r, "report": table })).expect("report serializes")
                + "\n"
        }
        (ReportFormat::Markdown, Some(r)) => {
            format!("### row {r}\n\n{}\n", render_report(table, format))
        }
        (ReportFormat::Csv, Some(r)) => render_report(table, format)
            .lines()
            .skip(1)
            .map(|l| format!("{r},{l}\n"))
            .collect(),
    };
    emit(out, &text)
}

fn cmd_explain(a: ExplainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx::new(&a.common)?;
    let model = ctx.model()?;
    let space = model.space().clone();
    let cfg = ctx.decision()?;
    let policy = policy_from(a.policy.as_ref(), &ctx, &space)?;
    let grouping = grouping_from(a.groups.as_ref(), &ctx, &space)?;
    let attribution_space: AttributionSpace = a
        .attribution_space
        .as_ref()
        .or(ctx.cfg.attribution_space.as_ref())
        .map(String::as_str)
        .unwrap_or("link")
        .parse()
        .map_err(anyhow::Error::msg)?;
    let format: ReportFormat = ctx.format(a.format.as_ref(), "markdown")?;
    let data = ctx.dataset(&space)?;

    let targets: Vec<(usize, FeaturePoint)> = if a.batch {
        let ds = data
            .as_ref()
            .ok_or_else(|| anyhow!("--batch needs --data"))?;
        ds.rows()
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                cfg.decide_probability(model.probability(r.values())) == Decision::Decline
            })
            .map(|(i, r)| (i + 1, r.clone()))
            .collect()
    } else {
        let path = a
            .declined
            .as_ref()
            .ok_or_else(|| anyhow!("nothing to explain: pass --declined FILE or --batch"))?;
        let ds = read_rows(path, &space)?;
        for (i, r) in ds.rows().iter().enumerate() {
            if model.decide(r, &cfg)? == Decision::Accept {
                let _ = writeln!(
                    err,
                    "warning: row {} of {} is accepted at tau = {}",
                    i + 1,
                    path.display(),
                    cfg.threshold()
                );
            }
        }
        ds.rows()
            .iter()
            .enumerate()
            .map(|(i, r)| (i + 1, r.clone()))
            .collect()
    };
    let multi = a.batch || targets.len() > 1;

    // the reference does not depend on x^D except for the nearest policies
    let shared = match policy {
        ReferencePolicy::NearestAccepted { .. } => None,
        _ => Some(select_reference(
            &policy,
            data.as_ref(),
            &model,
            &cfg,
            None,
        )?),
    };

    if format == ReportFormat::Csv && multi {
        emit(out, "row,unit,ref_value,declined_value,contribution,pct\n")?;
    }
    let mut summary = ReasonSummary::default();
    let mut failures = 0;
    for chunk in targets.chunks(BATCH_CHUNK) {
        let reports: Vec<(usize, bshap_core::Result<ReportTable>)> = chunk
            .par_iter()
            .map(|(row, xd)| {
                let report = (|| {
                    let xa = match &shared {
                        Some(p) => p.clone(),
                        None => select_reference(&policy, data.as_ref(), &model, &cfg, Some(xd))?,
                    };
                    let result = explain(&model, xd, &xa, &grouping, attribution_space)?;
                    build_report(&result, xd, &xa, &model, &cfg)
                })();
                (*row, report)
            })
            .collect();
        for (row, report) in reports {
            match report {
                Ok(table) => {
                    summary.add(&table);
                    write_report(out, &table, format, multi.then_some(row))?;
                }
                Err(e @ (Error::NoReference(_) | Error::ReferenceDeclined { .. })) if multi => {
                    failures += 1;
                    let _ = writeln!(err, "row {row}: {e}");
                }
                Err(e) if multi => return Err(anyhow!(e).context(format!("row {row}"))),
                Err(e) => return Err(e.into()),
            }
        }
    }
    if a.batch && targets.is_empty() {
        let _ = writeln!(
            err,
            "no row of the dataset is declined at tau = {}",
            cfg.threshold()
        );
    }
    if a.summary {
        let text = match format {
            ReportFormat::Json => {
                serde_json::to_string(&json!({ "summary": summary })).expect("summary serializes")
                    + "\n"
            }
            _ => format!("\n{}", summary.to_text()),
        };
        emit(out, &text)?;
    }
    if failures > 0 {
        let _ = writeln!(err, "{failures} rows could not be explained");
        return Ok(EXIT_INPUT);
    }
    Ok(EXIT_OK)
}

fn cmd_decide(a: DecideArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx::new(&a.common)?;
    let model = ctx.model()?;
    let cfg = ctx.decision()?;
    let path = a
        .input
        .or_else(|| ctx.data.clone())
        .ok_or_else(|| anyhow!("pass --input FILE or --data FILE"))?;
    let ds = read_rows(&path, model.space())?;
    let mut text = String::from("row,f,p,decision\n");
    for (i, r) in ds.rows().iter().enumerate() {
        let f = model.score(r.values());
        let p = model.probability(r.values());
        text.push_str(&format!(
            "{},{f},{p},{}\n",
            i + 1,
            cfg.decide_probability(p).as_str()
        ));
    }
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_reference(a: ReferenceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx::new(&a.common)?;
    let model = ctx.model()?;
    let space = model.space().clone();
    let cfg = ctx.decision()?;
    let policy = policy_from(a.policy.as_ref(), &ctx, &space)?;
    let data = ctx.dataset(&space)?;
    let declined = a
        .declined
        .as_ref()
        .map(|p| read_rows(p, &space))
        .transpose()?;
    let xd = declined.as_ref().map(|d| &d.rows()[0]);
    let xa = select_reference(&policy, data.as_ref(), &model, &cfg, xd)?;
    let p = model.probability(xa.values());
    let f = model.score(xa.values());
    match a.format.as_deref().unwrap_or("csv") {
        "csv" => {
            let mut buf = Vec::new();
            Dataset::new(space.clone(), vec![xa], None)?.write_csv(&mut buf)?;
            emit(out, &String::from_utf8(buf).expect("csv is utf-8"))?;
            let _ = writeln!(err, "p(x^A) = {p}, f(x^A) = {f}, tau = {}", cfg.threshold());
        }
        "json" => {
            let doc = json!({
                "features": space.names().collect::<Vec<_>>(),
                "values": xa.values(),
                "probability": p,
                "score": f,
                "threshold": cfg.threshold(),
            });
            emit(out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        }
        other => bail!("unknown format '{other}' (expected csv or json)"),
    }
    Ok(EXIT_OK)
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("range '{s}' is not of the form lo:hi"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .with_context(|| format!("bad range bound '{lo}'"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .with_context(|| format!("bad range bound '{hi}'"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        bail!("range '{s}' must satisfy lo < hi");
    }
    Ok((lo, hi))
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx::new(&a.common)?;
    let model = ctx.model()?;
    let k = model.space().len();
    let bounds = match &a.range {
        Some(r) => vec![parse_range(r)?; k],
        None => ctx
            .dataset(model.space())?
            .ok_or_else(|| anyhow!("pass --range LO:HI or --data to set the probing ranges"))?
            .ranges(),
    };
    let probe = ProbeSpec {
        grid_points: a.grid,
        random_line_probes: a.probes,
        seed: ctx.seed,
        relative_step: a.step,
        jump_threshold: a.jump_threshold,
    };
    let mono = check_monotonicity(&model, &bounds, &probe)?;
    let cont = check_continuity(&model, &bounds, &probe)?;
    let text = match a.format.as_deref().unwrap_or("text") {
        "text" => format!("{}\n{}", mono.to_text(), cont.to_text()),
        "json" => {
            serde_json::to_string_pretty(&json!({ "monotonicity": mono, "continuity": cont }))?
                + "\n"
        }
        other => bail!("unknown format '{other}' (expected text or json)"),
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_pdp(a: PdpArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx::new(&a.common)?;
    let model = ctx.model()?;
    let k = model
        .space()
        .index_of(&a.feature)
        .ok_or_else(|| anyhow!("unknown feature '{}'", a.feature))?;
    let ds = ctx.require_dataset(model.space(), "pdp")?;
    emit(out, &pdp_1d(&model, &ds, k, a.grid)?.to_csv())?;
    Ok(EXIT_OK)
}

fn cmd_importance(a: ImportanceArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx::new(&a.common)?;
    let model = ctx.model()?;
    let grouping = grouping_from(a.groups.as_ref(), &ctx, model.space())?;
    let ds = ctx.require_dataset(model.space(), "importance")?;
    let imp = permutation_importance(&model, &ds, &grouping, ctx.seed, a.repeats)?;
    let text = match a.format.as_deref().unwrap_or("text") {
        "text" => imp.to_text(),
        "json" => serde_json::to_string_pretty(&imp)? + "\n",
        other => bail!("unknown format '{other}' (expected text or json)"),
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx::new(&a.common)?;
    let model = ctx.model()?;
    let mut cfg = SynthConfig::new(a.n, ctx.seed);
    if let Some(path) = &a.mixing {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        cfg.mixing =
            Some(serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?);
    }
    let ds = generate_synthetic(model.space(), &model, &cfg)?;
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    match &a.out {
        Some(path) => {
            fs::write(path, &buf).with_context(|| format!("cannot write {}", path.display()))?;
            let _ = writeln!(err, "wrote {} rows to {}", ds.len(), path.display());
        }
        None => emit(out, &String::from_utf8(buf).expect("csv is utf-8"))?,
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let model = load_model(&a.file, a.space.as_deref())?;
    let space = model.space();
    let canonical = serialize_model_spec(&model);
    let reparsed = if canonical.trim_start().starts_with('{') {
        ModelSpec::from_json(&canonical, space)
    } else {
        parse_model_spec(&canonical, space).map_err(Error::from)
    }
    .map_err(|e| anyhow!(Internal(format!("canonical form does not parse: {e}"))))?;

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
    for _ in 0..ROUND_TRIP_PROBES {
        let x: Vec<f64> = (0..space.len())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let (u, v) = (model.score(&x), reparsed.score(&x));
        if (u - v).abs() > 1e-12 * u.abs().max(1.0) {
            bail!(Internal(format!(
                "round trip changed the score at {x:?}: {u} vs {v}"
            )));
        }
    }
    let structure = term_structure(&model);
    let mut text = format!(
        "ok: {}\nlink: {}\nfeatures: {}\ncomponents: {}\ninteraction order: {}\nterms: {}\nround trip: {ROUND_TRIP_PROBES} probes agree\n",
        a.file.display(),
        model.link().name(),
        space.names().collect::<Vec<_>>().join(", "),
        model.components().len(),
        structure.max_order,
        structure.describe(space),
    );
    if a.print {
        text.push_str(&canonical);
        text.push('\n');
    }
    emit(out, &text)?;
    Ok(EXIT_OK)
}
