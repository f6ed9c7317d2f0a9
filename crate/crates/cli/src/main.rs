mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hzforms::num::{self, BigComplex};
use hzforms::saddle::{self, Kqr, Strategy};
use hzforms::{bound, cotk, hurwitz, linform, quadrature, verify, Error, ErrorKind, NMode, Params};
use rug::{Float, Rational};
use serde_json::{json, Value};

use config::FileConfig;

const PRECISION_ENV: &str = "HZFORMS_PRECISION";
const DEFAULT_PRECISION: u32 = 256;

#[derive(Parser, Debug)]
#[command(name = "hzforms", version, about = "Linear forms in Hurwitz zeta values: build, verify, and study their asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true)]
    k: Option<u32>,
    #[arg(long, global = true)]
    q: Option<u32>,
    #[arg(long, global = true)]
    r: Option<u32>,
    #[arg(long, global = true)]
    n: Option<u32>,

    /// Working precision in bits (≥ 64). Default from $HZFORMS_PRECISION, else 256.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Require q! | n (the default).
    #[arg(long, global = true, conflicts_with = "relaxed")]
    strict: bool,
    /// Only require n even and (p−1) | n for p | q.
    #[arg(long, global = true)]
    relaxed: bool,
    /// `key = value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partial-fraction coefficients C_{n,j}.
    Coeffs,
    /// The exact linear form and its divisibility checks.
    Linform,
    /// ζ(k, a/q) with a certified error.
    Zeta {
        #[arg(long)]
        a: u64,
    },
    /// Cosine expansion of cot_k.
    Cotk,
    /// Saddle point τ_λ (λ = k − 2 by default) and the constants α, ω, φ.
    Saddle {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value = "auto")]
        strategy: StrategyArg,
    },
    /// Roots of the saddle polynomial and their position about Re z = −r/2.
    Census,
    /// S_n by contour quadrature.
    Quadrature {
        /// Abscissa of the vertical line (default ⌊nμ₀⌋ + ½).
        #[arg(long)]
        abscissa: Option<f64>,
    },
    /// log|S_n| against the saddle prediction over a list of n.
    Fit {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u32>,
    },
    /// Dimension lower bound for (k, q, r).
    Bound(BoundArgs),
    /// log|τ − q| / log² q over a q grid with r = ⌊log² q⌋.
    Scan {
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_grid_point)]
        q_grid: Vec<u32>,
    },
    /// Every check for one parameter set.
    VerifyAll,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(subcommand)]
    scan: Option<BoundScan>,
}

#[derive(Subcommand, Debug)]
enum BoundScan {
    /// Trend over a q grid with r = ⌊log² q⌋.
    Scan {
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_grid_point)]
        q_grid: Vec<u32>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StrategyArg {
    Newton,
    Census,
    Auto,
}

/// Accepts `1000` or `1e3`.
fn parse_grid_point(s: &str) -> Result<u32, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.fract() != 0.0 || !(2.0..=u32::MAX as f64).contains(&x) {
        return Err(format!("`{s}` is not an integer q ≥ 2"));
    }
    Ok(x as u32)
}

/// Failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn usage(msg: impl Into<String>) -> Self {
        Fail { code: 2, msg: msg.into() }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => 2,
            ErrorKind::Verification => 1,
            ErrorKind::Numeric => 3,
        };
        Fail { code, msg: e.to_string() }
    }
}

/// Flags merged over the config file and environment.
struct Resolved {
    k: Option<u32>,
    q: Option<u32>,
    r: Option<u32>,
    n: Option<u32>,
    prec: u32,
    format: Format,
    output: Option<PathBuf>,
    jobs: Option<usize>,
    mode: NMode,
}

impl Resolved {
    fn from_cli(cli: &Cli) -> Result<Resolved, Fail> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p).map_err(Fail::usage)?,
            None => FileConfig::default(),
        };
        let env_prec = match std::env::var(PRECISION_ENV) {
            Ok(v) => Some(v.parse::<u32>().map_err(|_| Fail::usage(format!("{PRECISION_ENV}: bad value `{v}`")))?),
            Err(_) => None,
        };
        let prec = cli
            .precision_bits
            .or(file.get("precision_bits").map_err(Fail::usage)?)
            .or(env_prec)
            .unwrap_or(DEFAULT_PRECISION);
        if prec < 64 {
            return Err(Fail::usage(format!("precision_bits = {prec} must be at least 64")));
        }
        let format = match (cli.format, file.get_str("format")) {
            (Some(f), _) => f,
            (None, Some(s)) => Format::from_str(s, true).map_err(|_| Fail::usage(format!("config: bad format `{s}`")))?,
            (None, None) => Format::Json,
        };
        let mode = if cli.relaxed {
            NMode::Relaxed
        } else if cli.strict {
            NMode::Strict
        } else {
            match file.get_str("mode") {
                None | Some("strict") => NMode::Strict,
                Some("relaxed") => NMode::Relaxed,
                Some(m) => return Err(Fail::usage(format!("config: bad mode `{m}`"))),
            }
        };
        Ok(Resolved {
            k: cli.k.or(file.get("k").map_err(Fail::usage)?),
            q: cli.q.or(file.get("q").map_err(Fail::usage)?),
            r: cli.r.or(file.get("r").map_err(Fail::usage)?),
            n: cli.n.or(file.get("n").map_err(Fail::usage)?),
            prec,
            format,
            output: cli.output.clone().or(file.get_str("output").map(PathBuf::from)),
            jobs: cli.jobs.or(file.get("jobs").map_err(Fail::usage)?),
            mode,
        })
    }

    fn need(&self, v: Option<u32>, name: &str, cmd: &str) -> Result<u32, Fail> {
        v.ok_or_else(|| Fail::usage(format!("`{cmd}` requires --{name}")))
    }

    fn params(&self, cmd: &str) -> Result<Params, Fail> {
        let (k, q, r, n) = (
            self.need(self.k, "k", cmd)?,
            self.need(self.q, "q", cmd)?,
            self.need(self.r, "r", cmd)?,
            self.need(self.n, "n", cmd)?,
        );
        Ok(Params::validate(k, q, r, n, self.mode)?)
    }

    fn kqr(&self, cmd: &str) -> Result<Kqr, Fail> {
        Ok(Kqr::new(self.need(self.k, "k", cmd)?, self.need(self.q, "q", cmd)?, self.need(self.r, "r", cmd)?)?)
    }
}

/// What a command produced.
struct Outcome {
    body: Value,
    csv: Option<String>,
    /// `false` when a requested verification failed.
    passed: bool,
}

impl Outcome {
    fn json(body: Value) -> Self {
        Outcome { body, csv: None, passed: true }
    }
}

fn dec(x: &Float) -> String {
    num::to_decimal(x)
}

fn certified(c: &linform::Certified) -> Value {
    json!({ "value": dec(&c.value), "err2exp": num::err2exp(&c.error) })
}

fn complex(z: &BigComplex) -> Value {
    json!([dec(&z.re), dec(&z.im)])
}

fn run_command(cmd: &Command, cfg: &Resolved) -> Result<Outcome, Fail> {
    let prec = cfg.prec;
    Ok(match cmd {
        Command::Coeffs => {
            let t = linform::build_coefficients(&cfg.params("coeffs")?)?;
            linform::verify_table(&t)?;
            Outcome { csv: Some(t.to_csv()), ..Outcome::json(t.to_json()) }
        }
        Command::Linform => {
            let t = linform::build_coefficients(&cfg.params("linform")?)?;
            let form = linform::rho(&t);
            let d = linform::verify_divisibility(&form);
            let mut body = form.to_json();
            body["divisibility"] = serde_json::to_value(&d).unwrap();
            Outcome { body, csv: None, passed: d.all() }
        }
        Command::Zeta { a } => {
            let (k, q) = (cfg.need(cfg.k, "k", "zeta")?, cfg.need(cfg.q, "q", "zeta")?);
            let z = hurwitz::hurwitz_zeta(k, *a, q as u64, prec)?;
            Outcome::json(serde_json::to_value(z.to_json()).unwrap())
        }
        Command::Cotk => {
            let e = cotk::expansion(cfg.need(cfg.k, "k", "cotk")?)?;
            let csv = e.c.iter().fold(String::from("l,c\n"), |s, (l, c)| s + &format!("{l},{c}\n"));
            let vk: Vec<String> = e.vk.iter().map(Rational::to_string).collect();
            let mut body = serde_json::to_value(e.to_json()).unwrap();
            body["vk"] = json!(vk);
            Outcome { csv: Some(csv), ..Outcome::json(body) }
        }
        Command::Saddle { lambda, strategy } => {
            let kqr = cfg.kqr("saddle")?;
            let strategy = match strategy {
                StrategyArg::Newton => Strategy::Newton,
                StrategyArg::Census => Strategy::Census,
                StrategyArg::Auto => Strategy::Auto,
            };
            match lambda {
                None if matches!(strategy, Strategy::Auto) => {
                    let sd = saddle::saddle_constants(&kqr, prec)?;
                    let (w, p) = sd.oscillation_disjuncts(1e-12);
                    let mut body = sd.to_json();
                    body["omega_not_in_pi_z"] = json!(w);
                    body["phi_not_in_half_pi_odd"] = json!(p);
                    body["disjuncts_numeric_only"] = json!(true);
                    Outcome::json(body)
                }
                _ => {
                    let l = lambda.unwrap_or((kqr.k() - 2) as f64);
                    let pt = saddle::find_tau(&kqr, l, prec, strategy)?;
                    let f0 = saddle::f0_eval(&kqr, &pt.tau)?;
                    Outcome::json(json!({
                        "k": kqr.k(), "q": kqr.q(), "r": kqr.r(), "lambda": l,
                        "tau": complex(&pt.tau),
                        "log_q_minus_tau": complex(&pt.log_q_minus_tau),
                        "f0": complex(&f0),
                        "residual_err2exp": num::err2exp(&pt.residual),
                        "strategy": pt.strategy,
                    }))
                }
            }
        }
        Command::Census => {
            let rep = saddle::p_roots_census(&cfg.kqr("census")?, prec)?;
            Outcome::json(rep.to_json())
        }
        Command::Quadrature { abscissa } => {
            let params = cfg.params("quadrature")?;
            let mut spec = quadrature::ContourSpec::auto(&params)?;
            if let Some(m) = abscissa {
                spec = spec.with_abscissa(*m);
            }
            let q = quadrature::s_n_contour(&params, &spec, prec)?;
            Outcome::json(json!({
                "params": params,
                "abscissa": dec(&spec.abscissa),
                "height": q.height,
                "s_n": certified(&q.real_part()),
                "imag_part": dec(&q.value.im),
                "delta_err2exp": num::err2exp(&q.delta),
                "truncation_err2exp": num::err2exp(&q.truncation),
            }))
        }
        Command::Fit { n_list } => {
            let rep = quadrature::asymptotic_fit(&cfg.kqr("fit")?, n_list, cfg.mode)?;
            let csv = rep.to_csv();
            let passed = rep.residuals_decrease();
            let mut body = serde_json::to_value(&rep).unwrap();
            body["residuals_decrease"] = json!(passed);
            Outcome { body, csv: Some(csv), passed }
        }
        Command::Bound(BoundArgs { scan: None }) => {
            let rep = bound::dimension_lower(&cfg.kqr("bound")?, prec)?;
            Outcome::json(rep.to_json())
        }
        Command::Bound(BoundArgs { scan: Some(BoundScan::Scan { q_grid }) }) => {
            let k = cfg.need(cfg.k, "k", "bound scan")?;
            let rows = bound::trend_scan(k, q_grid, prec)?;
            let csv = bound::trend_csv(&rows);
            Outcome { body: json!({ "k": k, "rows": rows }), csv: Some(csv), passed: true }
        }
        Command::Scan { q_grid } => {
            let k = cfg.need(cfg.k, "k", "scan")?;
            let rows = saddle::tau_asymptotic_scan(k, q_grid, prec)?;
            let csv = rows
                .iter()
                .fold(String::from("q,r,log_dist,ratio\n"), |s, t| s + &format!("{},{},{:.12},{:.12}\n", t.q, t.r, t.log_dist, t.ratio));
            Outcome { body: json!({ "k": k, "rows": rows }), csv: Some(csv), passed: true }
        }
        Command::VerifyAll => {
            let rep = verify::verify_all(&cfg.params("verify-all")?, prec);
            let passed = rep.all_passed;
            Outcome { body: serde_json::to_value(&rep).unwrap(), csv: None, passed }
        }
    })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Coeffs => "coeffs",
        Command::Linform => "linform",
        Command::Zeta { .. } => "zeta",
        Command::Cotk => "cotk",
        Command::Saddle { .. } => "saddle",
        Command::Census => "census",
        Command::Quadrature { .. } => "quadrature",
        Command::Fit { .. } => "fit",
        Command::Bound(BoundArgs { scan: None }) => "bound",
        Command::Bound(_) => "bound scan",
        Command::Scan { .. } => "scan",
        Command::VerifyAll => "verify-all",
    }
}

fn run(cli: Cli) -> Result<bool, Fail> {
    let cfg = Resolved::from_cli(&cli)?;
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Fail::usage(format!("--jobs: {e}")))?;
    }
    let name = command_name(&cli.command);
    let start = Instant::now();
    let out = run_command(&cli.command, &cfg)?;
    let text = match cfg.format {
        Format::Csv => out.csv.ok_or_else(|| Fail::usage(format!("`{name}` has no CSV form; use --format json")))?,
        Format::Json => {
            let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let report = json!({
                "schema": verify::SCHEMA,
                "command": name,
                "precision_bits": cfg.prec,
                "body": out.body,
                "passed": out.passed,
                "metadata": {
                    "version": env!("CARGO_PKG_VERSION"),
                    "generated_unix": unix,
                    "elapsed_ms": start.elapsed().as_millis() as u64,
                },
            });
            serde_json::to_string_pretty(&report).unwrap() + "\n"
        }
    };
    match &cfg.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail { code: 3, msg: format!("{}: {e}", p.display()) })?,
        None => print!("{text}"),
    }
    Ok(out.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("hzforms: verification failed");
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("hzforms: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
