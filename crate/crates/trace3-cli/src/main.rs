//! `trace3`: twisted traces of harmonic modular functions and Eisenstein
//! series on hyperbolic 3-space.
//!
//! Every subcommand writes a single JSON document
//! `{"input": ..., "result": ..., "meta": ...}` to stdout (or `--output`).
//! Exact values are decimal strings; truncated series carry a
//! `tailEstimate`. Exit codes: 0 success, 2 validation error, 3 numeric
//! range error, 4 unsupported discriminant.
//!
//! The frequency `mu` is passed as `x,y` in the basis `(1, g)` with
//! `g = sqrt(D)/2` for even `D` and `(1 + sqrt(D))/2` for odd `D`; the
//! series frequency is `nu = mu / sqrt(D)` with `sqrt(D) = i sqrt(|D|)`.
//! For `D = -4`, `--mu 0,1` is `mu = i`, i.e. `nu = 1/2`.
//!
//! The coefficient cache directory comes from `--cache-dir`, falling back
//! to the `TRACE3_CACHE` environment variable; with neither, coefficients
//! are kept in memory only.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use trace3_core::cache::CoeffCache;
use trace3_core::niebur::{self, Point3};
use trace3_core::orbits;
use trace3_core::qexp;
use trace3_core::special;
use trace3_core::sums;
use trace3_core::{Discriminant, DualLatticeElement, Error};

#[derive(Parser)]
#[command(name = "trace3", version, about = "Twisted traces on hyperbolic 3-space")]
struct Cli {
    /// Directory for the persistent coefficient cache.
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,

    /// Worker threads for the inner series; results are identical for any
    /// thread count.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Write the JSON document to this path instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Include wall-clock seconds in the meta block (off by default so
    /// repeated runs are byte-identical).
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Closed,
    Series,
    Direct,
    All,
}

#[derive(Args)]
struct MuArg {
    /// Frequency numerator `mu` as `x,y` in the presentation basis.
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    mu: String,
}

#[derive(Subcommand)]
enum Command {
    /// q-expansion of the Faber basis element j_n.
    Jn {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 16)]
        prec: i64,
    },
    /// Fourier coefficient c_n(m) of j_n.
    Coeff {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
    },
    /// Twisted trace of the harmonic function J_nu.
    TraceNiebur {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[command(flatten)]
        mu: MuArg,
        #[arg(long)]
        m: u64,
        #[arg(long, value_enum, default_value_t = Method::Closed)]
        method: Method,
        /// Spectral parameter for the series method (1 = harmonic value).
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 2000)]
        cmax: u64,
    },
    /// Twisted trace of the weight-0 Eisenstein series.
    TraceEisenstein {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
        #[arg(long, default_value_t = 5000)]
        cmax: u64,
    },
    /// Orbit classes of binary hermitian forms of determinant |D| m.
    Orbits {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        m: u64,
    },
    /// Twisted trace of the constant function 1 (exact rational).
    TraceOne {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        m: u64,
    },
    /// Direct Poincare-series evaluation of J_nu at a point.
    #[command(name = "eval-J")]
    EvalJ {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[command(flatten)]
        mu: MuArg,
        /// Evaluation point as `zx,zy,r`.
        #[arg(long, value_name = "ZX,ZY,R", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 200)]
        cmax: u64,
    },
    /// Harmonic generating function over frequencies at a point.
    #[command(name = "eval-L")]
    EvalL {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        m: u64,
        #[arg(long, value_name = "ZX,ZY,R", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 40)]
        numax: u64,
    },
    /// Weight-2 generating function component at a point.
    #[command(name = "eval-F")]
    EvalF {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        ell: u8,
        #[arg(long, value_name = "ZX,ZY,R", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 40)]
        numax: u64,
    },
    /// Identity suites (exponential sums, duality, special functions,
    /// Eisenstein, harmonicity).
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
    /// Coefficient cache maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum VerifySuite {
    /// Exponential-sum identity: G~_c/c against the Kloosterman side.
    Lemma31 {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: Option<i64>,
        #[arg(long, default_value_t = 40)]
        cmax: u64,
    },
    /// Coefficient duality c_m(n) = -b_n(m).
    Duality {
        #[arg(long, default_value_t = 30)]
        nmax: u32,
    },
    /// Bessel/Gamma identities: Wronskian, recurrence, half-integer forms,
    /// K-derivative.
    Bessel,
    /// Eisenstein trace: series against the closed form.
    Eisenstein {
        #[arg(long, default_value_t = 5000)]
        cmax: u64,
        #[arg(long, default_value_t = 3.0)]
        s: f64,
    },
    /// Harmonicity and raising-operator consistency of the generating
    /// functions.
    Harmonic {
        #[arg(long = "D", allow_hyphen_values = true, default_value_t = -4)]
        d: i64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, default_value_t = 40)]
        numax: u64,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    Stats,
    Clear,
}

#[derive(Serialize)]
struct Meta {
    version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    cmax: Option<u64>,
    #[serde(rename = "tailEstimate", skip_serializing_if = "Option::is_none")]
    tail_estimate: Option<f64>,
    seconds: Option<f64>,
}

#[derive(Serialize)]
struct Output {
    input: Value,
    result: Value,
    meta: Meta,
}

struct Outcome {
    input: Value,
    result: Value,
    cmax: Option<u64>,
    tail_estimate: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(outcome) => {
            let out = Output {
                input: outcome.input,
                result: outcome.result,
                meta: Meta {
                    version: env!("CARGO_PKG_VERSION").to_string(),
                    cmax: outcome.cmax,
                    tail_estimate: outcome.tail_estimate,
                    seconds: cli.timings.then(|| started.elapsed().as_secs_f64()),
                },
            };
            let doc = serde_json::to_string_pretty(&out).expect("serializable output");
            match &cli.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, doc + "\n") {
                        eprintln!("{}", error_json("io", &e.to_string()));
                        return ExitCode::from(3);
                    }
                }
                None => println!("{doc}"),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (kind, code) = match &e {
                Error::Validation(_) => ("validation", 2),
                Error::Range(_) | Error::Convergence(_) => ("range", 3),
                Error::UnsupportedDiscriminant(_) => ("unsupported-discriminant", 4),
                Error::Cache(_) => ("cache", 3),
            };
            eprintln!("{}", error_json(kind, &e.to_string()));
            ExitCode::from(code)
        }
    }
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::to_string(&json!({"error": {"kind": kind, "message": message}}))
        .expect("serializable error")
}

fn run(cli: &Cli) -> trace3_core::Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot build thread pool: {e}")))?;
    let cache = open_cache(cli)?;
    pool.install(|| dispatch(cli, &cache))
}

fn open_cache(cli: &Cli) -> trace3_core::Result<CoeffCache> {
    let dir = cli
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("TRACE3_CACHE").map(PathBuf::from));
    match dir {
        Some(dir) => CoeffCache::on_disk(dir),
        None => Ok(CoeffCache::in_memory()),
    }
}

fn parse_mu(disc: &Discriminant, text: &str) -> trace3_core::Result<DualLatticeElement> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Validation(format!("mu must be `x,y`, got `{text}`")));
    }
    let x: i64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("bad mu coordinate `{}`", parts[0])))?;
    let y: i64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("bad mu coordinate `{}`", parts[1])))?;
    DualLatticeElement::new(disc.element_from_standard(x, y))
}

fn parse_point(text: &str) -> trace3_core::Result<Point3> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!("point must be `zx,zy,r`, got `{text}`")));
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("bad point coordinate `{part}`")))?;
    }
    Point3::new(vals[0], vals[1], vals[2])
}

fn mu_json(mu: &DualLatticeElement) -> Value {
    let (x, y) = mu.mu().standard_coords();
    json!({
        "x": x,
        "y": y,
        "scaledNorm": mu.scaled_norm().to_string(),
        "content": mu.content().to_string(),
    })
}

fn trace_report_json(report: &niebur::TraceReport) -> Value {
    serde_json::to_value(report).expect("serializable report")
}

fn dispatch(cli: &Cli, cache: &CoeffCache) -> trace3_core::Result<Outcome> {
    match &cli.command {
        Command::Jn { n, prec } => {
            if *n < 1 {
                return Err(Error::Validation("jn requires n >= 1".into()));
            }
            if *prec < 1 {
                return Err(Error::Validation("jn requires prec >= 1".into()));
            }
            let series = qexp::jn(*n, *prec);
            let coeffs: Vec<Value> = (series.valuation()..series.precision())
                .map(|e| json!({"exponent": e, "value": series.coeff(e).to_string()}))
                .collect();
            Ok(Outcome {
                input: json!({"command": "jn", "n": n, "prec": prec}),
                result: json!({"valuation": series.valuation(), "precision": series.precision(), "coefficients": coeffs}),
                cmax: None,
                tail_estimate: None,
            })
        }
        Command::Coeff { n, m } => {
            if *n < 1 {
                return Err(Error::Validation("coeff requires n >= 1".into()));
            }
            let value = qexp::coeff(cache, *n, *m);
            Ok(Outcome {
                input: json!({"command": "coeff", "n": n, "m": m}),
                result: json!({"value": value.to_string()}),
                cmax: None,
                tail_estimate: None,
            })
        }
        Command::TraceNiebur { d, mu, m, method, s, cmax } => {
            let disc = Discriminant::new(*d)?;
            let nu = parse_mu(&disc, &mu.mu)?;
            if *m < 1 {
                return Err(Error::Validation("trace-niebur requires m >= 1".into()));
            }
            let mut reports: Vec<niebur::TraceReport> = Vec::new();
            if matches!(method, Method::Closed | Method::All) {
                let exact = niebur::trace_niebur_closed(cache, &disc, &nu, *m);
                reports.push(niebur::TraceReport {
                    method: niebur::TraceMethod::Closed,
                    value: exact.to_f64().unwrap_or(f64::INFINITY),
                    exact: Some(exact.to_string()),
                    s: 1.0,
                    cmax: None,
                    numax: None,
                    tail_estimate: None,
                });
            }
            if matches!(method, Method::Series | Method::All) {
                let eval = niebur::trace_niebur_series(&disc, &nu, *m, *s, *cmax)?;
                reports.push(niebur::TraceReport {
                    method: niebur::TraceMethod::Series,
                    value: eval.value,
                    exact: None,
                    s: *s,
                    cmax: Some(*cmax),
                    numax: None,
                    tail_estimate: Some(eval.tail_estimate),
                });
            }
            if matches!(method, Method::Direct | Method::All) {
                let eval = orbits::trace_niebur_direct(&disc, &nu, *m, *cmax)?;
                reports.push(niebur::TraceReport {
                    method: niebur::TraceMethod::Direct,
                    value: eval.value,
                    exact: None,
                    s: 1.0,
                    cmax: Some(*cmax),
                    numax: None,
                    tail_estimate: Some(eval.tail_estimate),
                });
            }
            let tail = reports.iter().filter_map(|r| r.tail_estimate).fold(None, |a: Option<f64>, t| {
                Some(a.map_or(t, |v| v.max(t)))
            });
            let result = if reports.len() == 1 {
                let mut v = trace_report_json(&reports[0]);
                if let Some(exact) = reports[0].exact.clone() {
                    v["value"] = Value::String(exact);
                }
                v
            } else {
                json!({"reports": reports.iter().map(trace_report_json).collect::<Vec<_>>()})
            };
            Ok(Outcome {
                input: json!({
                    "command": "trace-niebur",
                    "D": d,
                    "mu": mu_json(&nu),
                    "m": m,
                    "method": method_name(*method),
                    "s": s,
                    "cmax": cmax,
                }),
                result,
                cmax: Some(*cmax),
                tail_estimate: tail,
            })
        }
        Command::TraceEisenstein { d, m, s, method, cmax } => {
            let disc = Discriminant::new(*d)?;
            if *m < 1 {
                return Err(Error::Validation("trace-eisenstein requires m >= 1".into()));
            }
            let mut entries = serde_json::Map::new();
            let mut tail = None;
            if matches!(method, Method::Closed | Method::All) {
                let closed = if (*s - 1.0).abs() < 1e-12 {
                    niebur::trace_eisenstein_at_one(&disc, *m)
                } else {
                    niebur::trace_eisenstein_closed(&disc, *m, *s)?
                };
                entries.insert("closed".into(), json!(closed));
            }
            if matches!(method, Method::Series | Method::All) && *s > 1.0 {
                let eval = niebur::trace_eisenstein_series(&disc, *m, *s, *cmax)?;
                tail = Some(eval.tail_estimate);
                entries.insert(
                    "series".into(),
                    json!({"value": eval.value, "tailEstimate": eval.tail_estimate}),
                );
            }
            if entries.is_empty() {
                return Err(Error::Validation(
                    "series method requires s > 1; use method closed at s = 1".into(),
                ));
            }
            Ok(Outcome {
                input: json!({
                    "command": "trace-eisenstein",
                    "D": d,
                    "m": m,
                    "s": s,
                    "method": method_name(*method),
                    "cmax": cmax,
                }),
                result: Value::Object(entries),
                cmax: Some(*cmax),
                tail_estimate: tail,
            })
        }
        Command::Orbits { d, m } => {
            let disc = Discriminant::new(*d)?;
            if *m < 1 {
                return Err(Error::Validation("orbits requires m >= 1".into()));
            }
            let classes = orbits::orbit_classes(&disc, *m)?;
            let rows: Vec<Value> = classes
                .iter()
                .map(|c| {
                    let (za, zb) = c.point.z.coords();
                    let (bx, by) = c.form.b(&disc).standard_coords();
                    json!({
                        "form": {"a": c.form.a, "b": format!("{bx},{by}"), "c": c.form.c},
                        "point": {
                            "z": [za.to_string(), zb.to_string()],
                            "rSquared": c.point.r_squared.to_string(),
                        },
                        "stabilizerOrder": c.stabilizer,
                        "chi": c.chi,
                    })
                })
                .collect();
            Ok(Outcome {
                input: json!({"command": "orbits", "D": d, "m": m}),
                result: json!({"classCount": rows.len(), "classes": rows}),
                cmax: None,
                tail_estimate: None,
            })
        }
        Command::TraceOne { d, m } => {
            let disc = Discriminant::new(*d)?;
            if *m < 1 {
                return Err(Error::Validation("trace-one requires m >= 1".into()));
            }
            let value = orbits::trace_one(&disc, *m)?;
            Ok(Outcome {
                input: json!({"command": "trace-one", "D": d, "m": m}),
                result: json!({"value": value.to_string()}),
                cmax: None,
                tail_estimate: None,
            })
        }
        Command::EvalJ { d, mu, point, cmax } => {
            let disc = Discriminant::new(*d)?;
            let nu = parse_mu(&disc, &mu.mu)?;
            let p = parse_point(point)?;
            let eval = orbits::eval_j_direct(&disc, &nu, &p, *cmax)?;
            Ok(Outcome {
                input: json!({
                    "command": "eval-J",
                    "D": d,
                    "mu": mu_json(&nu),
                    "point": [p.zx, p.zy, p.r],
                    "cmax": cmax,
                }),
                result: json!({"value": eval.value, "terms": eval.terms, "tailEstimate": eval.tail_estimate}),
                cmax: Some(*cmax),
                tail_estimate: Some(eval.tail_estimate),
            })
        }
        Command::EvalL { d, m, point, numax } => {
            let disc = Discriminant::new(*d)?;
            let p = parse_point(point)?;
            let value = niebur::eval_l_series(cache, &disc, *m, &p, *numax)?;
            // truncation estimate: contribution of the outer half of the
            // frequency shells
            let half = niebur::eval_l_series(cache, &disc, *m, &p, (*numax / 2).max(1))?;
            let tail = (value - half).abs();
            Ok(Outcome {
                input: json!({
                    "command": "eval-L",
                    "D": d,
                    "m": m,
                    "point": [p.zx, p.zy, p.r],
                    "numax": numax,
                }),
                result: json!({"value": value, "tailEstimate": tail}),
                cmax: None,
                tail_estimate: Some(tail),
            })
        }
        Command::EvalF { d, m, ell, point, numax } => {
            let disc = Discriminant::new(*d)?;
            let p = parse_point(point)?;
            let (re, im) = niebur::eval_f_ell(cache, &disc, *m, *ell, &p, *numax)?;
            let (hre, him) =
                niebur::eval_f_ell(cache, &disc, *m, *ell, &p, (*numax / 2).max(1))?;
            let tail = (re - hre).hypot(im - him);
            Ok(Outcome {
                input: json!({
                    "command": "eval-F",
                    "D": d,
                    "m": m,
                    "ell": ell,
                    "point": [p.zx, p.zy, p.r],
                    "numax": numax,
                }),
                result: json!({"re": re, "im": im, "tailEstimate": tail}),
                cmax: None,
                tail_estimate: Some(tail),
            })
        }
        Command::Verify { suite } => verify(cli, cache, suite),
        Command::Cache { action } => match action {
            CacheAction::Stats => {
                let stats = cache.stats()?;
                Ok(Outcome {
                    input: json!({"command": "cache-stats"}),
                    result: json!({
                        "directory": cache.directory().map(|p| p.display().to_string()),
                        "memoryBlocks": stats.memory_blocks,
                        "diskFiles": stats.disk_files,
                        "diskBytes": stats.disk_bytes,
                    }),
                    cmax: None,
                    tail_estimate: None,
                })
            }
            CacheAction::Clear => {
                let removed = cache.clear()?;
                Ok(Outcome {
                    input: json!({"command": "cache-clear"}),
                    result: json!({"removedFiles": removed}),
                    cmax: None,
                    tail_estimate: None,
                })
            }
        },
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Closed => "closed",
        Method::Series => "series",
        Method::Direct => "direct",
        Method::All => "all",
    }
}

fn verify(
    _cli: &Cli,
    cache: &CoeffCache,
    suite: &VerifySuite,
) -> trace3_core::Result<Outcome> {
    match suite {
        VerifySuite::Lemma31 { d, cmax } => {
            let discs: Vec<i64> = match d {
                Some(d) => vec![*d],
                None => vec![-3, -4, -7, -8, -11, -15, -20],
            };
            let mut max_residual = 0.0f64;
            let mut checks = 0u64;
            for dv in &discs {
                let disc = Discriminant::new(*dv)?;
                for (x, y) in [(1i64, 0i64), (0, 1), (1, 1), (2, 0), (2, 1), (3, 0)] {
                    let nu = DualLatticeElement::new(disc.element(x, y))?;
                    for m in 1..=4u64 {
                        for c in 1..=*cmax {
                            let r = sums::lemma_residual(&disc, m, Some(&nu), c);
                            max_residual = max_residual.max(r);
                            checks += 1;
                        }
                    }
                }
            }
            Ok(Outcome {
                input: json!({"command": "verify-lemma31", "D": d, "cmax": cmax}),
                result: json!({
                    "maxResidual": max_residual,
                    "checks": checks,
                    "pass": max_residual < 1e-9,
                }),
                cmax: Some(*cmax),
                tail_estimate: None,
            })
        }
        VerifySuite::Duality { nmax } => {
            let prec = *nmax as i64 + 1;
            let mut worst: Option<(u32, u32)> = None;
            let jns: Vec<_> = (1..=*nmax).map(|n| qexp::jn(n, prec)).collect();
            let sns: Vec<_> = (1..=*nmax)
                .map(|n| qexp::sn_expansion(n, prec))
                .collect::<trace3_core::Result<_>>()?;
            let mut checks = 0u64;
            for m in 1..=*nmax {
                for n in 1..=*nmax {
                    let c_m_n = jns[(m - 1) as usize].coeff(n as i64);
                    let b_n_m = sns[(n - 1) as usize].coeff(m as i64);
                    if c_m_n != -b_n_m {
                        worst = Some((m, n));
                    }
                    checks += 1;
                }
            }
            Ok(Outcome {
                input: json!({"command": "verify-duality", "nmax": nmax}),
                result: json!({"checks": checks, "pass": worst.is_none(), "firstFailure": worst}),
                cmax: None,
                tail_estimate: None,
            })
        }
        VerifySuite::Bessel => {
            let mut worst_wronskian = 0.0f64;
            for v in [0.0f64, 0.5, 1.0, 1.5] {
                for x in [0.1f64, 1.0, 10.0, 100.0] {
                    let w = special::bessel_i(v, x)? * special::bessel_k(v + 1.0, x)?
                        + special::bessel_i(v + 1.0, x)? * special::bessel_k(v, x)?;
                    worst_wronskian = worst_wronskian.max((w * x - 1.0).abs());
                }
            }
            let mut worst_half = 0.0f64;
            for x in [0.5f64, 2.0, 10.0, 50.0] {
                let pi = std::f64::consts::PI;
                let i_half = (2.0 / (pi * x)).sqrt() * x.sinh();
                worst_half = worst_half
                    .max(((special::bessel_i(0.5, x)? - i_half) / i_half).abs());
                let k_half = (pi / (2.0 * x)).sqrt() * (-x).exp();
                worst_half = worst_half
                    .max(((special::bessel_k(0.5, x)? - k_half) / k_half).abs());
                let j_half = (2.0 / (pi * x)).sqrt() * x.sin();
                if j_half.abs() > 1e-3 {
                    worst_half = worst_half
                        .max(((special::bessel_j(0.5, x)? - j_half) / j_half).abs());
                }
            }
            // d/dy K_1 = -K_0 - K_1/y at y = 2
            let y = 2.0;
            let h = 1e-5;
            let deriv =
                (special::bessel_k(1.0, y + h)? - special::bessel_k(1.0, y - h)?) / (2.0 * h);
            let ident = -special::bessel_k(0.0, y)? - special::bessel_k(1.0, y)? / y;
            let k_deriv_err = (deriv - ident).abs();
            let pass = worst_wronskian < 1e-9 && worst_half < 1e-11 && k_deriv_err < 1e-8;
            Ok(Outcome {
                input: json!({"command": "verify-bessel"}),
                result: json!({
                    "wronskianMaxError": worst_wronskian,
                    "halfIntegerMaxRelError": worst_half,
                    "kDerivativeError": k_deriv_err,
                    "pass": pass,
                }),
                cmax: None,
                tail_estimate: None,
            })
        }
        VerifySuite::Eisenstein { cmax, s } => {
            let mut worst = 0.0f64;
            for dv in [-3i64, -4] {
                let disc = Discriminant::new(dv)?;
                for m in 1..=3u64 {
                    let series = niebur::trace_eisenstein_series(&disc, m, *s, *cmax)?;
                    let closed = niebur::trace_eisenstein_closed(&disc, m, *s)?;
                    worst = worst.max(((series.value - closed) / closed).abs());
                }
            }
            Ok(Outcome {
                input: json!({"command": "verify-eisenstein", "cmax": cmax, "s": s}),
                result: json!({"maxRelativeGap": worst, "pass": worst < 1e-3}),
                cmax: Some(*cmax),
                tail_estimate: None,
            })
        }
        VerifySuite::Harmonic { d, m, numax } => {
            let disc = Discriminant::new(*d)?;
            let r = ((disc.abs() * m) as f64).sqrt() * 1.5;
            let p = Point3::on_axis(r)?;
            let (lap, value) = niebur::laplacian_fd(cache, &disc, *m, &p, *numax, 1e-4)?;
            let harmonic_ratio = lap.abs() / value.abs().max(1e-300);
            let gap = niebur::raising_operator_gap(cache, &disc, *m, &p, *numax, 1e-4)?;
            Ok(Outcome {
                input: json!({"command": "verify-harmonic", "D": d, "m": m, "numax": numax}),
                result: json!({
                    "laplacianRatio": harmonic_ratio,
                    "raisingOperatorGap": gap,
                    "pass": harmonic_ratio < 1e-3 && gap < 1e-4,
                }),
                cmax: None,
                tail_estimate: None,
            })
        }
    }
}
