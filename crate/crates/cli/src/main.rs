use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affine_ts::admissibility::validate_admissibility;
use affine_ts::config::{fmt_real, load_model, load_series};
use affine_ts::inference::{gmm_estimate, mle_estimate, EstimationConfig, Family, MomentSpec};
use affine_ts::model::ModelSpec;
use affine_ts::pricing::{bond_price_with, price_european_call, yield_curve_with, QuadratureConfig};
use affine_ts::riccati::{characteristic_function_with, SolverConfig};
use affine_ts::simulate::{simulate_cir_exact, simulate_euler, simulate_ou_exact, PathSet, ScalarParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Affine term-structure models: validation, transforms, pricing, simulation and estimation.
#[derive(Parser, Debug)]
#[command(name = "affine-ts", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory receiving `<command>.<ext>` when --out is absent.
    #[arg(long, global = true, env = "AFFINE_TS_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Relative tolerance of the Riccati solver.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Repeat for more diagnostics on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the admissibility conditions of a model file.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Characteristic function E[exp(<u, X_t>)] for each u.
    Cf {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long)]
        t: f64,
        /// Complex vector as `a+bi` entries separated by ';', one vector per
        /// occurrence of the flag.
        #[arg(long, required = true, allow_hyphen_values = true)]
        u: Vec<String>,
    },
    /// Zero-coupon bond prices.
    PriceBond {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        maturities: Vec<f64>,
    },
    /// Discount factors and continuously compounded zero rates.
    YieldCurve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        maturities: Vec<f64>,
    },
    /// European call on exp(X_coord) by damped Fourier inversion.
    PriceCall {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long)]
        t: f64,
        /// Strike prices (not log strikes).
        #[arg(long, value_delimiter = ',', required = true)]
        strike: Vec<f64>,
        #[arg(long, default_value_t = 1.5)]
        damping: f64,
        #[arg(long, default_value_t = 200.0)]
        truncation: f64,
        #[arg(long, default_value_t = 0)]
        coord: usize,
    },
    /// Sample paths written as CSV.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
        scheme: SchemeArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit (b, beta, sigma) of a scalar family to an observed series.
    Estimate {
        /// CSV with columns time, x_1, ..
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = FamilyArg::Ou)]
        family: FamilyArg,
        /// Scalar template for the `fourier` family.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Mle)]
        method: MethodArg,
        /// GMM conditions `m,n,lag;m,n,lag;..`; defaults to the exactly identified set.
        #[arg(long)]
        moments: Option<String>,
        /// Starting values b,beta,sigma.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.01, -0.5, 0.1])]
        init: Vec<f64>,
        /// Observation spacing; inferred from the time column when absent.
        #[arg(long)]
        dt: Option<f64>,
        /// Column of the state to use (0-based, after time).
        #[arg(long, default_value_t = 0)]
        coord: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SchemeArg {
    ExactOu,
    ExactCir,
    Euler,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    Ou,
    Cir,
    /// Likelihood by Fourier inversion of the template model.
    Fourier,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Mle,
    Gmm,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<affine_ts::Error> for Failure {
    fn from(e: affine_ts::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    eprintln!("affine-ts {VERSION}");
    eprintln!("{cli:#?}");
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn model(path: &Path) -> Result<ModelSpec, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("model file {} does not exist", path.display())));
    }
    Ok(load_model(path)?)
}

/// The state vector, defaulting to the origin.
fn state(spec: &ModelSpec, x: &[f64]) -> Result<Vec<f64>, Failure> {
    match x.len() {
        0 => Ok(vec![0.0; spec.n()]),
        n if n == spec.n() => Ok(x.to_vec()),
        n => Err(Failure::Usage(format!("--x has {n} entries but the model has N = {}", spec.n()))),
    }
}

fn output(common: &Common, name: &str, ext: &str) -> Result<Box<dyn Write>, Failure> {
    let path = match (&common.out, &common.out_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(format!("{name}.{ext}"))),
        (None, None) => None,
    };
    Ok(match path {
        Some(p) => {
            if common.verbose > 0 {
                eprintln!("writing {}", p.display());
            }
            Box::new(BufWriter::new(File::create(&p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solver(common: &Common) -> Result<SolverConfig, Failure> {
    if !(common.tol > 0.0 && common.tol < 1.0) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {}", common.tol)));
    }
    Ok(SolverConfig::with_tolerances(common.tol, common.tol * 1e-2))
}

fn parse_complex_vector(text: &str) -> Result<Vec<Complex64>, Failure> {
    text.split(';')
        .map(|s| {
            let s = s.trim();
            s.parse::<Complex64>().map_err(|_| Failure::Usage(format!("'{s}' is not a complex number like 0+1i")))
        })
        .collect()
}

fn run(cli: &Cli) -> Outcome {
    let common = &cli.common;
    match &cli.command {
        Command::Validate { model: path } => {
            let spec = model(path)?;
            let report = validate_admissibility(&spec)?;
            let mut out = output(common, "validate", "txt")?;
            if report.ok {
                writeln!(out, "admissible")?;
                out.flush()?;
                return Ok(());
            }
            writeln!(out, "inadmissible")?;
            for v in &report.violations {
                writeln!(out, "{:?}: {}", v.condition, v.message)?;
            }
            out.flush()?;
            Err(Failure::Domain(format!("{} admissibility violation(s)", report.violations.len())))
        }
        Command::Cf { model: path, x, t, u } => {
            let spec = model(path)?;
            let x = state(&spec, x)?;
            let cfg = solver(common)?;
            let mut out = output(common, "cf", "csv")?;
            writeln!(out, "u,re,im")?;
            for text in u {
                let u = parse_complex_vector(text)?;
                let v = characteristic_function_with(&spec, &x, *t, &u, &cfg)?;
                writeln!(out, "\"{}\",{},{}", text.trim(), fmt_real(v.re), fmt_real(v.im))?;
            }
            out.flush()?;
            Ok(())
        }
        Command::PriceBond { model: path, x, maturities } => {
            let spec = model(path)?;
            let x = state(&spec, x)?;
            let cfg = solver(common)?;
            let mut out = output(common, "price-bond", "csv")?;
            writeln!(out, "maturity,price")?;
            for &tau in maturities {
                writeln!(out, "{},{}", fmt_real(tau), fmt_real(bond_price_with(&spec, &x, tau, &cfg)?))?;
            }
            out.flush()?;
            Ok(())
        }
        Command::YieldCurve { model: path, x, maturities } => {
            let spec = model(path)?;
            let x = state(&spec, x)?;
            let curve = yield_curve_with(&spec, &x, maturities, &solver(common)?)?;
            let mut out = output(common, "yield-curve", "csv")?;
            writeln!(out, "maturity,discount,zero_rate")?;
            for k in 0..curve.len() {
                writeln!(
                    out,
                    "{},{},{}",
                    fmt_real(curve.maturities[k]),
                    fmt_real(curve.discounts[k]),
                    fmt_real(curve.zero_rates[k])
                )?;
            }
            out.flush()?;
            Ok(())
        }
        Command::PriceCall { model: path, x, t, strike, damping, truncation, coord } => {
            let spec = model(path)?;
            let x = state(&spec, x)?;
            let q = QuadratureConfig {
                damping: *damping,
                truncation: *truncation,
                coord: *coord,
                solver: solver(common)?,
                ..QuadratureConfig::default()
            };
            let mut out = output(common, "price-call", "csv")?;
            writeln!(out, "strike,log_strike,price,error_estimate")?;
            for &k in strike {
                if !(k > 0.0) {
                    return Err(Failure::Usage(format!("strike must be positive, got {k}")));
                }
                let quote = price_european_call(&spec, &x, *t, k.ln(), &q)?;
                if common.verbose > 0 {
                    eprintln!("strike {k}: {} integrand evaluations, tail bound {:e}", quote.evaluations, quote.tail_bound);
                }
                writeln!(out, "{},{},{},{}", fmt_real(k), fmt_real(k.ln()), fmt_real(quote.price), fmt_real(quote.error_estimate))?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Simulate { model: path, scheme, x, dt, steps, paths, seed } => {
            let spec = model(path)?;
            let x = state(&spec, x)?;
            let set: PathSet = match scheme {
                SchemeArg::Euler => simulate_euler(&spec, &x, *dt, *steps, *paths, *seed)?,
                SchemeArg::ExactOu | SchemeArg::ExactCir => {
                    let want_m = matches!(scheme, SchemeArg::ExactCir) as usize;
                    if spec.n() != 1 || spec.m() != want_m || spec.has_jumps() {
                        return Err(Failure::Usage(format!(
                            "{scheme:?} needs a one-dimensional diffusion with m = {want_m}"
                        )));
                    }
                    let half_var = if want_m == 1 { spec.alpha[0][(0, 0)] } else { spec.a[(0, 0)] };
                    let p = ScalarParams::new(spec.b[0], spec.beta[0][0], (2.0 * half_var).max(0.0).sqrt());
                    if want_m == 1 {
                        simulate_cir_exact(p.b, p.beta, p.sigma, x[0], *dt, *steps, *paths, *seed)?
                    } else {
                        simulate_ou_exact(p.b, p.beta, p.sigma, x[0], *dt, *steps, *paths, *seed)?
                    }
                }
            };
            let mut out = output(common, "simulate", "csv")?;
            set.write_csv(&mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Estimate { data, family, model: template, method, moments, init, dt, coord } => {
            if !data.is_file() {
                return Err(Failure::Usage(format!("data file {} does not exist", data.display())));
            }
            let series = load_series(data)?;
            if *coord >= series.dim() {
                return Err(Failure::Usage(format!("--coord {coord} but the data has {} state columns", series.dim())));
            }
            let dt = match dt {
                Some(d) => *d,
                None => series
                    .uniform_step()
                    .ok_or_else(|| Failure::Usage("time column is not uniformly spaced; pass --dt".into()))?,
            };
            let family = match family {
                FamilyArg::Ou => Family::Ou,
                FamilyArg::Cir => Family::Cir,
                FamilyArg::Fourier => {
                    let path = template.as_ref().ok_or_else(|| Failure::Usage("--family fourier needs --model".into()))?;
                    Family::GeneralScalar(Box::new(model(path)?))
                }
            };
            if init.len() != 3 {
                return Err(Failure::Usage("--init takes b,beta,sigma".into()));
            }
            let init = ScalarParams::new(init[0], init[1], init[2]);
            let values = series.column(*coord);
            let cfg = EstimationConfig::default();
            let result = match method {
                MethodArg::Mle => mle_estimate(&values, &family, dt, &init, &cfg)?,
                MethodArg::Gmm => {
                    let spec = match moments {
                        Some(text) => text.parse::<MomentSpec>().map_err(|e| Failure::Usage(e.to_string()))?,
                        None => MomentSpec::exactly_identified(dt),
                    };
                    gmm_estimate(&values, &family, dt, &spec, &init, &cfg)?
                }
            };
            let mut out = output(common, "estimate", "json")?;
            serde_json::to_writer_pretty(&mut out, &result).map_err(|e| Failure::Domain(e.to_string()))?;
            writeln!(out)?;
            out.flush()?;
            if !result.converged {
                eprintln!("warning: optimizer did not report convergence");
            }
            Ok(())
        }
    }
}
