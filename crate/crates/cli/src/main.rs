//! `exchkit` command-line front end.
//!
//! Every verb prints one JSON object (or CSV where noted) on standard output.
//! Exit codes: 0 computed, 2 usage or domain error, 3 numerical failure.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exchkit::curie_weiss::{cw_measure, three_body_measure, CwParams, Scaling, ThreeBodyParams};
use exchkit::definetti::{embed_model, mixture_check, sample_mixture, MixtureModel, ModelKind};
use exchkit::extendibility::{ie_check, l_extendible, scaled_cw, ExtendVerdict, IeVerdict, IeWitness};
use exchkit::extension::{
    alpha, beta, chi_star, h_star, h_star_branch, positivity_certificate, q_extension, Positivity,
};
use exchkit::moment::{discrete_moment_feasible, Feasibility, DEFAULT_CAP};
use exchkit::scalar::parse_rational;
use exchkit::{CountDistribution, Error, Scalar, DEFAULT_TOL};
use num::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};

/// Largest grid `scan` will evaluate.
const MAX_GRID: usize = 200_000;

#[derive(Parser)]
#[command(name = "exchkit", version, about = "Extendibility, moment and mixture checks for exchangeable measures")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Clone)]
enum Verb {
    /// Infinite extendibility (mixture of i.i.d. laws).
    IeCheck(Common),
    /// Extendibility to `--l` sites, with witness or certificate.
    ExtendCheck(Common),
    /// Feasibility of power moments `--moments` on `{0, ..., l}`.
    MomentCheck(Common),
    /// Signed extension Q(j) of the antiferromagnetic Curie-Weiss measure.
    QFormula(Common),
    /// Positivity certificate for `J = c/l` at field `h`.
    Certify(Common),
    /// Threshold field h*(c) and its ingredients.
    Hstar(Common),
    /// Mixture representation check for a mean-field spin model.
    MixtureVerify(Common),
    /// Runs a verb over a parameter grid and prints CSV.
    Scan(ScanArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    l: Option<u64>,
    /// Curie-Weiss field factor.
    #[arg(long)]
    a: Option<String>,
    /// Curie-Weiss coupling factor.
    #[arg(long)]
    b: Option<String>,
    #[arg(long = "J")]
    j: Option<String>,
    /// Field; a comma-separated list for Potts, clock and Heisenberg models.
    #[arg(long = "h", allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long = "J2", allow_hyphen_values = true)]
    j2: Option<f64>,
    #[arg(long = "J3", allow_hyphen_values = true)]
    j3: Option<f64>,
    #[arg(long, value_enum, default_value = "unit")]
    scaling: ScalingArg,
    /// Rescaled coupling: `b = 1 + c/l` with `--rho`, or `J = c/l`.
    #[arg(long)]
    c: Option<String>,
    /// Density for `b = 1 + c/l` Curie-Weiss measures.
    #[arg(long)]
    rho: Option<String>,
    /// Explicit count distribution `pi[0],...,pi[n]`.
    #[arg(long)]
    pi: Option<String>,
    /// Power moments `v[0],...,v[n]` for moment-check.
    #[arg(long)]
    moments: Option<String>,
    /// Model for mixture-verify: ising, potts:Q, clock:Q or heisenberg:R.
    #[arg(long)]
    model: Option<String>,
    /// Monte Carlo samples for mixture-verify.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Draws from the mixture sampler (CSV output lists them).
    #[arg(long, default_value_t = 0)]
    draws: usize,
    /// Force exact rational arithmetic.
    #[arg(long, conflicts_with = "tol")]
    exact: bool,
    /// Float mode with this tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Clone)]
struct ScanArgs {
    /// Verb evaluated at each grid point.
    #[arg(long, value_enum)]
    verb: ScanVerb,
    /// `name=start:stop:step` or `name=v1,v2,...`; repeat for more axes.
    #[arg(long = "grid", required = true)]
    grid: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ScanVerb {
    IeCheck,
    ExtendCheck,
    MomentCheck,
    QFormula,
    Certify,
    Hstar,
}

#[derive(ValueEnum, Clone, Copy, Default)]
enum ScalingArg {
    #[default]
    Unit,
    Linear,
    Quadratic,
}

#[derive(ValueEnum, Clone, Copy, Default, PartialEq, Eq)]
enum Format {
    #[default]
    Json,
    Csv,
}

/// Command failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Parse(_) | Error::EnumerationCap { .. } => 2,
            _ => 3,
        };
        Fail { code, msg: e.to_string() }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail { code: 2, msg: msg.into() })
}

type Out = Result<Value, Fail>;

fn need<T: Clone>(v: &Option<T>, name: &str) -> Result<T, Fail> {
    match v {
        Some(x) => Ok(x.clone()),
        None => usage(format!("missing --{name}")),
    }
}

fn float(s: &str) -> Result<f64, Fail> {
    s.trim().parse::<f64>().or_else(|_| Ok(parse_rational(s)?.to_f64()))
}

fn float_list(s: &str) -> Result<Vec<f64>, Fail> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(float).collect()
}

/// A measure in the arithmetic chosen by the flags.
enum Measure {
    Exact(CountDistribution<BigRational>),
    Float(CountDistribution<f64>, f64),
}

impl Common {
    fn float_tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    fn mode_label(&self, exact: bool) -> Value {
        if exact {
            json!({"mode": "exact"})
        } else {
            json!({"mode": "float", "tol": self.float_tol()})
        }
    }

    /// Exact when `--exact`, or when no `--tol` is given and all inputs are
    /// rational.
    fn choose_exact(&self, rational: bool) -> Result<bool, Fail> {
        if self.exact && !rational {
            return usage("--exact needs rational inputs");
        }
        Ok(self.exact || (self.tol.is_none() && rational))
    }

    fn measure(&self) -> Result<Measure, Fail> {
        if let Some(pi) = &self.pi {
            let parts: Vec<&str> = pi.split(',').collect();
            let exact: Option<Vec<BigRational>> = parts.iter().map(|p| parse_rational(p).ok()).collect();
            return if self.choose_exact(exact.is_some())? {
                Ok(Measure::Exact(CountDistribution::new(exact.unwrap(), 0.0)?))
            } else {
                let v = parts.iter().map(|p| float(p)).collect::<Result<Vec<_>, _>>()?;
                Ok(Measure::Float(CountDistribution::new(v, self.float_tol())?, self.float_tol()))
            };
        }
        let n = need(&self.n, "n")?;
        if self.j2.is_some() || self.j3.is_some() {
            if self.exact {
                return usage("three-body measures are float only");
            }
            let h = self.h.as_deref().map(float).transpose()?.unwrap_or(0.0);
            let p = ThreeBodyParams {
                n,
                h,
                j2: self.j2.unwrap_or(0.0),
                j3: self.j3.unwrap_or(0.0),
                scaling: match self.scaling {
                    ScalingArg::Unit => Scaling::Unit,
                    ScalingArg::Linear => Scaling::Linear,
                    ScalingArg::Quadratic => Scaling::Quadratic,
                },
            };
            return Ok(Measure::Float(three_body_measure(&p), self.float_tol()));
        }
        if let (Some(rho), Some(c)) = (&self.rho, &self.c) {
            let l = need(&self.l, "l")?;
            let (rho, c) = (parse_rational(rho)?, parse_rational(c)?);
            let mu = scaled_cw(n, &rho, &c, l)?;
            return Ok(if self.choose_exact(true)? {
                Measure::Exact(mu)
            } else {
                Measure::Float(mu.to_f64(), self.float_tol())
            });
        }
        if let (Some(a), Some(b)) = (&self.a, &self.b) {
            let exact = match (parse_rational(a), parse_rational(b)) {
                (Ok(a), Ok(b)) => Some((a, b)),
                _ => None,
            };
            return if self.choose_exact(exact.is_some())? {
                let (a, b) = exact.unwrap();
                Ok(Measure::Exact(cw_measure(&CwParams::new(n, a, b)?)))
            } else {
                Ok(Measure::Float(cw_measure(&CwParams::new(n, float(a)?, float(b)?)?), self.float_tol()))
            };
        }
        if let Some(j) = &self.j {
            if self.exact {
                return usage("--J/--h parameters are float only; use --a and --b");
            }
            let h = self.h.as_deref().map(float).transpose()?.unwrap_or(0.0);
            let p = CwParams::from_jh(n, float(j)?, h);
            return Ok(Measure::Float(cw_measure(&p), self.float_tol()));
        }
        usage("give --pi, --a/--b, --J/--h, --rho/--c or --J2/--J3")
    }
}

fn pi_json<T: Scalar>(mu: &CountDistribution<T>) -> Value {
    Value::Array(mu.pi().iter().map(Scalar::to_json).collect())
}

fn ie_json<T: Scalar>(mu: &CountDistribution<T>, tol: f64) -> Out {
    let v = ie_check(mu, tol)?;
    let mut out = json!({"verdict": v.label()});
    match &v {
        IeVerdict::Ie(IeWitness::StrictHankel) => out["witness"] = json!({"kind": "strict_hankel"}),
        IeVerdict::Ie(IeWitness::PointMass(p)) => out["witness"] = json!({"kind": "point_mass", "p": p.to_json()}),
        IeVerdict::Ie(IeWitness::GridLaw { grid, weights }) => {
            out["witness"] = json!({
                "kind": "grid_law",
                "grid": grid,
                "weights": weights.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            })
        }
        IeVerdict::NotIe { matrix } => out["failing_hankel"] = json!(matrix),
        IeVerdict::Marginal => {}
    }
    Ok(out)
}

fn ie_verb(args: &Common) -> Out {
    match args.measure()? {
        Measure::Exact(mu) => Ok(merge(ie_json(&mu, 0.0)?, args.mode_label(true))),
        Measure::Float(mu, tol) => Ok(merge(ie_json(&mu, tol)?, args.mode_label(false))),
    }
}

fn extend_json<T: Scalar>(mu: &CountDistribution<T>, l: u64, tol: f64) -> Out {
    let r = l_extendible(mu, l, tol, DEFAULT_CAP)?;
    let mut out = json!({
        "verdict": r.verdict.label(),
        "l": l,
        "targets": r.targets.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        "variance": r.variance.as_ref().map(Scalar::to_json),
        "variance_negative": r.variance_negative(),
    });
    match &r.verdict {
        ExtendVerdict::Extendible { witness } => out["witness"] = pi_json(witness),
        ExtendVerdict::NotExtendible { certificate } => out["certificate"] = certificate.to_json(),
        ExtendVerdict::Marginal => {}
    }
    Ok(out)
}

fn extend_verb(args: &Common) -> Out {
    let l = need(&args.l, "l")?;
    match args.measure()? {
        Measure::Exact(mu) => Ok(merge(extend_json(&mu, l, 0.0)?, args.mode_label(true))),
        Measure::Float(mu, tol) => Ok(merge(extend_json(&mu, l, tol)?, args.mode_label(false))),
    }
}

fn feasibility_json<T: Scalar>(v: &[T], l: u64, tol: f64) -> Out {
    Ok(match discrete_moment_feasible(v, l, tol, DEFAULT_CAP)? {
        Feasibility::Feasible { witness } => json!({
            "verdict": "Feasible",
            "witness": witness.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        }),
        Feasibility::Infeasible { certificate, pairing } => json!({
            "verdict": "Infeasible",
            "certificate": certificate,
            "pairing": pairing.to_json(),
        }),
        Feasibility::InfeasibleLp { coefficients, pairing } => json!({
            "verdict": "Infeasible",
            "certificate": {"kind": "lp", "coefficients": coefficients.iter().map(Scalar::to_json).collect::<Vec<_>>()},
            "pairing": pairing.to_json(),
        }),
        Feasibility::Marginal { min_pairing } => json!({"verdict": "Marginal", "min_pairing": min_pairing.to_json()}),
    })
}

fn moment_verb(args: &Common) -> Out {
    let l = need(&args.l, "l")?;
    let text = need(&args.moments, "moments")?;
    let parts: Vec<&str> = text.split(',').collect();
    let exact: Option<Vec<BigRational>> = parts.iter().map(|p| parse_rational(p).ok()).collect();
    if args.choose_exact(exact.is_some())? {
        let v = exact.unwrap();
        Ok(merge(feasibility_json(&v, l, 0.0)?, args.mode_label(true)))
    } else {
        let v = parts.iter().map(|p| float(p)).collect::<Result<Vec<_>, _>>()?;
        Ok(merge(feasibility_json(&v, l, args.float_tol())?, args.mode_label(false)))
    }
}

/// `J` from `--J`, or `c / l` from `--c`.
fn coupling(args: &Common, l: u64) -> Result<f64, Fail> {
    match (&args.j, &args.c) {
        (Some(j), None) => float(j),
        (None, Some(c)) => Ok(float(c)? / l as f64),
        _ => usage("give exactly one of --J and --c"),
    }
}

fn q_verb(args: &Common) -> Result<(Value, Option<String>), Fail> {
    let n = need(&args.n, "n")?;
    let l = need(&args.l, "l")?;
    let j = coupling(args, l)?;
    let h = float(&need(&args.h, "h")?)?;
    let tol = args.tol.unwrap_or(1e-12);
    let qv = q_extension(n, l as usize, j, h, tol)?;
    let (argmin, min) = qv.argmin();
    let out = json!({
        "n": n,
        "l": l,
        "J": j,
        "h": h,
        "tol": tol,
        "q": qv.q,
        "ln_abs": qv.ln_abs,
        "sign": qv.sign,
        "tail_bound": qv.tail_bound,
        "min_q": min,
        "argmin": argmin,
        "sum": qv.sum(),
        "all_positive": qv.all_positive(),
        "max_error": qv.max_error(),
        "verdict": if qv.all_positive() { "Positive" } else { "SignChange" },
    });
    Ok((out, Some(qv.to_csv())))
}

fn certify_verb(args: &Common) -> Out {
    let c = float(&need(&args.c, "c")?)?;
    let h = float(&need(&args.h, "h")?)?;
    let cert = positivity_certificate(c, h)?;
    let mut out = json!({"c": c, "h": h, "verdict": cert.label(), "h_star": h_star(c)?});
    if let Positivity::Certified { chi_bar, eps, c_bar } | Positivity::NotCertified { chi_bar, eps, c_bar } = cert {
        out["chi_bar"] = json!(chi_bar);
        out["eps"] = json!(eps);
        out["c_bar"] = json!(c_bar);
    }
    Ok(out)
}

fn hstar_verb(args: &Common) -> Out {
    let c = float(&need(&args.c, "c")?)?;
    let mut out = json!({
        "c": c,
        "h_star": h_star(c)?,
        "branch": h_star_branch(c),
        "alpha": alpha(c)?,
        "verdict": h_star_branch(c),
    });
    if c >= 1.0 {
        out["chi_star"] = json!(chi_star(c)?);
    }
    if c > 1.0 {
        out["beta"] = json!(beta(c)?);
    }
    Ok(out)
}

fn parse_model(s: &str) -> Result<ModelKind, Fail> {
    let (name, param) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b.parse::<usize>().map_err(|_| Fail { code: 2, msg: format!("bad model parameter in {s:?}") })?)),
        None => (s, None),
    };
    Ok(match (name.to_ascii_lowercase().as_str(), param) {
        ("ising", None) => ModelKind::Ising,
        ("potts", Some(q)) => ModelKind::Potts(q),
        ("clock", Some(q)) => ModelKind::Clock(q),
        ("heisenberg", Some(r)) => ModelKind::Heisenberg(r),
        _ => return usage(format!("unknown model {s:?}; use ising, potts:Q, clock:Q or heisenberg:R")),
    })
}

fn mixture_verb(args: &Common) -> Result<(Value, Option<String>), Fail> {
    let kind = parse_model(&need(&args.model, "model")?)?;
    let n = need(&args.n, "n")?;
    let j = float(&need(&args.j, "J")?)?;
    let h = args.h.as_deref().map(float_list).transpose()?.unwrap_or_default();
    let model = MixtureModel::new(embed_model(kind, j, &h)?, n)?;
    let tol = args.tol.unwrap_or(1e-8);
    let mut out = json!({"model": kind, "n": n, "J": j, "h": h, "seed": args.seed});
    if model.base.atom_count().is_some() {
        let r = mixture_check(&model, tol, args.samples, args.seed)?;
        out["verdict"] = json!(if r.passed { "Consistent" } else { "Inconsistent" });
        out["check"] = serde_json::to_value(&r).expect("serializable report");
    } else {
        out["verdict"] = json!("Unchecked");
    }
    let mut csv = None;
    if args.draws > 0 {
        let set = sample_mixture(&model, args.draws, args.seed)?;
        out["sampler"] = json!({
            "draws": args.draws,
            "proposals": set.proposals,
            "acceptance_rate": set.acceptance_rate,
            "max_ratio": set.max_ratio,
            "envelope_centers": set.envelope_centers,
            "envelope_variance": set.envelope_variance,
        });
        csv = Some(set.to_csv());
    }
    Ok((out, csv))
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

/// Evaluates a verb for JSON output; CSV where the verb has a table.
fn run_verb(verb: &Verb) -> Result<(Value, Option<String>), Fail> {
    match verb {
        Verb::IeCheck(a) => Ok((ie_verb(a)?, None)),
        Verb::ExtendCheck(a) => Ok((extend_verb(a)?, None)),
        Verb::MomentCheck(a) => Ok((moment_verb(a)?, None)),
        Verb::QFormula(a) => q_verb(a),
        Verb::Certify(a) => Ok((certify_verb(a)?, None)),
        Verb::Hstar(a) => Ok((hstar_verb(a)?, None)),
        Verb::MixtureVerify(a) => mixture_verb(a),
        Verb::Scan(s) => Ok((Value::Null, Some(scan(s)?))),
    }
}

/// One grid axis: the flag it sets and its values as strings.
fn parse_axis(spec: &str) -> Result<(String, Vec<String>), Fail> {
    let Some((name, range)) = spec.split_once('=') else {
        return usage(format!("grid axis {spec:?} must look like name=start:stop:step or name=v1,v2"));
    };
    let values = if range.contains(':') {
        let p: Vec<&str> = range.split(':').collect();
        if p.len() != 3 {
            return usage(format!("range {range:?} needs start:stop:step"));
        }
        let (start, stop, step) = (parse_rational(p[0])?, parse_rational(p[1])?, parse_rational(p[2])?);
        if step <= BigRational::from_i64(0) {
            return usage("grid step must be positive");
        }
        let count = ((stop.clone() - start.clone()) / step.clone()).floor().to_f64();
        if !(count >= 0.0) {
            return usage(format!("empty range {range:?}"));
        }
        if count > MAX_GRID as f64 {
            return usage(format!("grid axis {name} has about {count:.0} points, above the limit of {MAX_GRID}"));
        }
        (0..=count as i64)
            .map(|i| exchkit::scalar::format_rational(&(start.clone() + step.clone() * BigRational::from_i64(i))))
            .collect()
    } else {
        range.split(',').map(|s| s.trim().to_string()).collect()
    };
    Ok((name.to_string(), values))
}

fn set_param(c: &mut Common, name: &str, value: &str) -> Result<(), Fail> {
    let bad = || Fail { code: 2, msg: format!("bad value {value:?} for {name}") };
    match name {
        "n" => c.n = Some(value.parse().map_err(|_| bad())?),
        "l" => c.l = Some(value.parse().map_err(|_| bad())?),
        "a" => c.a = Some(value.into()),
        "b" => c.b = Some(value.into()),
        "J" => c.j = Some(value.into()),
        "h" => c.h = Some(value.into()),
        "J2" => c.j2 = Some(float(value)?),
        "J3" => c.j3 = Some(float(value)?),
        "c" => c.c = Some(value.into()),
        "rho" => c.rho = Some(value.into()),
        _ => return usage(format!("cannot scan over {name:?}")),
    }
    Ok(())
}

/// Columns reported by `scan` for each verb, read from the JSON payload.
fn scan_columns(verb: ScanVerb) -> &'static [&'static str] {
    match verb {
        ScanVerb::IeCheck => &["verdict", "failing_hankel", "mode"],
        ScanVerb::ExtendCheck => &["verdict", "variance", "certificate", "mode"],
        ScanVerb::MomentCheck => &["verdict", "pairing", "mode"],
        ScanVerb::QFormula => &["verdict", "min_q", "argmin", "sum"],
        ScanVerb::Certify => &["verdict", "h_star", "chi_bar", "eps", "c_bar"],
        ScanVerb::Hstar => &["h_star", "branch", "alpha", "beta", "chi_star"],
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Object(o) if o.contains_key("polynomial") => o["polynomial"]["factored"].as_str().unwrap_or("").to_string(),
        Value::Object(o) if o.contains_key("kind") => o["kind"].as_str().unwrap_or("").to_string(),
        other => other.to_string(),
    }
}

fn scan(s: &ScanArgs) -> Result<String, Fail> {
    let axes = s.grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>, _>>()?;
    let total = axes.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len())).unwrap_or(usize::MAX);
    if total > MAX_GRID {
        return usage(format!("grid has {total} points, above the limit of {MAX_GRID}"));
    }
    let points: Vec<Vec<&str>> = (0..total)
        .map(|mut idx| {
            let mut p = vec![""; axes.len()];
            for (k, (_, vals)) in axes.iter().enumerate().rev() {
                p[k] = &vals[idx % vals.len()];
                idx /= vals.len();
            }
            p
        })
        .collect();
    let rows: Vec<Result<String, Fail>> = points
        .par_iter()
        .map(|p| {
            let mut c = s.common.clone();
            for ((name, _), v) in axes.iter().zip(p) {
                set_param(&mut c, name, v)?;
            }
            // per-point failures become rows with the error column set
            let verb = match s.verb {
                ScanVerb::IeCheck => Verb::IeCheck(c),
                ScanVerb::ExtendCheck => Verb::ExtendCheck(c),
                ScanVerb::MomentCheck => Verb::MomentCheck(c),
                ScanVerb::QFormula => Verb::QFormula(c),
                ScanVerb::Certify => Verb::Certify(c),
                ScanVerb::Hstar => Verb::Hstar(c),
            };
            let mut row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            match run_verb(&verb) {
                Ok((v, _)) => {
                    row.extend(scan_columns(s.verb).iter().map(|k| cell(&v[*k])));
                    row.push(String::new());
                }
                Err(f) => {
                    row.extend(scan_columns(s.verb).iter().map(|_| String::new()));
                    row.push(f.msg);
                }
            }
            Ok(row.iter().map(|x| csv_escape(x)).collect::<Vec<_>>().join(","))
        })
        .collect();
    let mut out: Vec<String> = axes.iter().map(|(n, _)| n.clone()).collect();
    out.extend(scan_columns(s.verb).iter().map(|s| s.to_string()));
    out.push("error".into());
    let mut text = out.join(",") + "\n";
    for r in rows {
        text.push_str(&r?);
        text.push('\n');
    }
    Ok(text)
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn format_of(verb: &Verb) -> Format {
    match verb {
        Verb::IeCheck(a)
        | Verb::ExtendCheck(a)
        | Verb::MomentCheck(a)
        | Verb::QFormula(a)
        | Verb::Certify(a)
        | Verb::Hstar(a)
        | Verb::MixtureVerify(a) => a.format,
        Verb::Scan(_) => Format::Csv,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = std::env::var("EXCHKIT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let format = format_of(&cli.verb);
    match run_verb(&cli.verb) {
        Ok((json, csv)) => {
            match (format, csv) {
                (Format::Csv, Some(text)) => print!("{text}"),
                (Format::Csv, None) => {
                    eprintln!("{}", json!({"error": "this verb has no CSV output"}));
                    return ExitCode::from(2);
                }
                (Format::Json, _) => println!("{}", serde_json::to_string(&json).expect("serializable")),
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", json!({"error": f.msg, "exit_code": f.code}));
            ExitCode::from(f.code)
        }
    }
}
