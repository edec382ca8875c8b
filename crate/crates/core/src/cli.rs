//! Command-line front end.
//!
//! Every output file starts with a `# {json}` line recording the command,
//! parameters, seed, settings and tool version; rerunning that configuration
//! reproduces the file byte for byte.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 failed
//! verification.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::inversion::{pgf_to_pmf, raw_coefficients, InversionSettings};
use crate::params::SemiStableParams;
use crate::pgf::PgfExpr;
use crate::processes::{simulate_ar1, simulate_levy_paths, write_levy_csv, Ar1Config, Ar1Start};
use crate::sampling::{LevySampler, PmfSampler, MAX_TAIL_MASS};
use crate::verify::{calibration_stream, run_all, stats::Binning, VerifySettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// Environment variable naming the directory for outputs without `--output`.
pub const OUTPUT_DIR_ENV: &str = "SEMISTABLE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "semistable",
    version,
    about = "Integer-valued semi-stable laws, thinning and INAR(1) paths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the pmf table of P, or of P^t with --t.
    Pmf(PmfArgs),
    /// Simulate paths of X_n = b ⊗ X_(n-1) + e_n.
    Ar1(Ar1Args),
    /// Simulate Levy paths on a time grid.
    Levy(LevyArgs),
    /// Run the verification suite and write the JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// JSON file with {"alpha", "A", "b"}.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["alpha", "amplitude", "b"])]
    pub params: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long = "A", id = "amplitude", allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
}

impl ParamArgs {
    /// Inline values fall back to the defaults `alpha = 0.5, A = 0.5, b = 0.25`.
    pub fn resolve(&self) -> Result<SemiStableParams> {
        if let Some(path) = &self.params {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            return serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())));
        }
        let d = SemiStableParams::flagship();
        SemiStableParams::new(
            self.alpha.unwrap_or(d.alpha()),
            self.amplitude.unwrap_or(d.amplitude()),
            self.b.unwrap_or(d.b()),
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; defaults to a fixed name in the output directory.
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_name = "DIR", env = OUTPUT_DIR_ENV, default_value = ".")]
    pub output_dir: PathBuf,
}

impl OutputArgs {
    fn path(&self, default_name: &str) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| self.output_dir.join(default_name))
    }
}

#[derive(Debug, Clone, Args)]
pub struct InversionArgs {
    /// Initial table length (power of two).
    #[arg(long, default_value_t = 64)]
    pub n_terms: usize,
    /// Fixed inversion radius in (0, 1).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Largest acceptable tail mass.
    #[arg(long)]
    pub tail_tol: Option<f64>,
}

impl InversionArgs {
    fn settings(&self, default_tail: f64) -> InversionSettings {
        let mut s = InversionSettings::default()
            .with_n_terms(self.n_terms)
            .with_tail_tol(self.tail_tol.unwrap_or(default_tail));
        s.radius = self.radius;
        s
    }
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Tabulate P^t instead of P.
    #[arg(long)]
    pub t: Option<f64>,
    /// Write the first --n-terms Taylor coefficients without pmf checks,
    /// inverted at --radius (default 0.3).
    #[arg(long)]
    pub raw: bool,
}

/// Radius of `pmf --raw` when `--radius` is absent.
pub const RAW_RADIUS: f64 = 0.3;

#[derive(Debug, Args)]
pub struct Ar1Args {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub n_steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_paths: usize,
    /// Start from X_0 = 0 instead of the stationary law.
    #[arg(long)]
    pub zero_start: bool,
    /// Per-step mean, variance and TV distance to the stationary pmf.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
    /// Null replicates behind the summary's TV threshold.
    #[arg(long, default_value_t = 10_000)]
    pub calibration_reps: usize,
}

#[derive(Debug, Args)]
pub struct LevyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub inversion: InversionArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n_paths: usize,
    /// Explicit time grid, starting at 0.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["t_max", "dt"])]
    pub times: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Per-time mean and variance across paths.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_draws: Option<usize>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    /// Times of the scaling identity.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    #[arg(long)]
    pub calibration_reps: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Add checks that must fail.
    #[arg(long)]
    pub negative_controls: bool,
}

/// Parses `args` and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Pmf(a) => cmd_pmf(&a),
        Command::Ar1(a) => cmd_ar1(&a),
        Command::Levy(a) => cmd_levy(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}

#[derive(Serialize)]
struct Header<'a, S: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    params: SemiStableParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    settings: S,
}

impl<'a, S: Serialize> Header<'a, S> {
    fn new(command: &'a str, params: SemiStableParams, seed: Option<u64>, settings: S) -> Self {
        Header {
            tool: "semistable",
            version: crate::VERSION,
            command,
            params,
            seed,
            settings,
        }
    }

    fn value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn cmd_pmf(args: &PmfArgs) -> Result<i32> {
    let params = args.params.resolve()?;
    let settings = args
        .inversion
        .settings(InversionSettings::default().tail_tol);
    let base = PgfExpr::semi_stable(params);
    let expr = match args.t {
        Some(t) => base.power(t)?,
        None => base,
    };
    let path = args.output.path("pmf.csv");
    if args.raw {
        let settings = InversionSettings {
            radius: Some(args.inversion.radius.unwrap_or(RAW_RADIUS)),
            ..settings
        };
        let coefs = raw_coefficients(&expr, &settings)?;
        let header = Header::new(
            "pmf",
            params,
            None,
            json!({ "inversion": settings, "t": args.t, "raw": true }),
        );
        let mut w = create(&path)?;
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        writeln!(w, "n,coefficient")?;
        for (n, c) in coefs.iter().enumerate() {
            writeln!(w, "{n},{c}")?;
        }
        w.flush()?;
        return Ok(EXIT_OK);
    }
    let table = pgf_to_pmf(&expr, &settings)?;
    let header = Header::new(
        "pmf",
        params,
        None,
        json!({ "inversion": settings, "t": args.t }),
    );
    let mut w = create(&path)?;
    table.write_csv(&mut w, Some(&header.value()?))?;
    w.flush()?;
    Ok(EXIT_OK)
}

pub fn cmd_ar1(args: &Ar1Args) -> Result<i32> {
    let params = args.params.resolve()?;
    let mut config = Ar1Config::new(params, args.n_steps, args.n_paths, args.seed);
    config.settings = args.inversion.settings(MAX_TAIL_MASS / 2.0);
    if args.zero_start {
        config.start = Ar1Start::Zero;
    }
    let paths = simulate_ar1(&config)?;
    let header = Header::new(
        "ar1",
        params,
        Some(args.seed),
        json!({
            "inversion": config.settings,
            "n_steps": args.n_steps,
            "n_paths": args.n_paths,
            "start": config.start,
        }),
    );
    let path = args.output.path("ar1.csv");
    let mut w = create(&path)?;
    paths.write_csv(&mut w, &header.value()?)?;
    w.flush()?;

    if let Some(summary) = &args.summary {
        let table = pgf_to_pmf(&PgfExpr::semi_stable(params), &config.settings)?;
        let target = PmfSampler::new(&table)?.conditional_probs();
        let bins = Binning::new(&target, args.n_paths);
        let threshold = if args.n_paths > 0 && args.calibration_reps > 0 {
            bins.one_sample_threshold(
                args.n_paths,
                args.calibration_reps,
                calibration_stream(args.seed),
            )
        } else {
            f64::NAN
        };
        let mut header = header.value()?;
        header["calibration_reps"] = json!(args.calibration_reps);
        let mut w = create(summary)?;
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        writeln!(w, "step,mean,variance,tv,tv_threshold")?;
        for (step, (mean, var)) in paths.moments().into_iter().enumerate() {
            let tv = bins.one_sample_tv(&paths.column(step));
            writeln!(w, "{step},{mean},{var},{tv},{threshold}")?;
        }
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn levy_grid(args: &LevyArgs) -> Result<Vec<f64>> {
    if let Some(times) = &args.times {
        return Ok(times.clone());
    }
    if !(args.dt > 0.0 && args.t_max >= 0.0 && args.t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_max >= 0, got dt = {}, t_max = {}",
            args.dt, args.t_max
        )));
    }
    let n = (args.t_max / args.dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * args.dt).collect())
}

pub fn cmd_levy(args: &LevyArgs) -> Result<i32> {
    let params = args.params.resolve()?;
    let settings = args.inversion.settings(MAX_TAIL_MASS / 2.0);
    let times = levy_grid(args)?;
    let sampler = LevySampler::new(params, settings);
    let paths = simulate_levy_paths(&sampler, &times, args.n_paths, args.seed)?;
    let header = Header::new(
        "levy",
        params,
        Some(args.seed),
        json!({ "inversion": settings, "n_paths": args.n_paths, "times": times }),
    )
    .value()?;
    let path = args.output.path("levy.csv");
    let mut w = create(&path)?;
    write_levy_csv(&mut w, &paths, &header)?;
    w.flush()?;

    if let Some(summary) = &args.summary {
        let mut w = create(summary)?;
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        writeln!(w, "time,mean,variance")?;
        let n = paths.len() as f64;
        for (j, t) in times.iter().enumerate() {
            let mean = paths.iter().map(|p| p.values[j] as f64).sum::<f64>() / n;
            let var = paths
                .iter()
                .map(|p| (p.values[j] as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0).max(1.0);
            writeln!(w, "{t},{mean},{var}")?;
        }
        w.flush()?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let params = args.params.resolve()?;
    let mut s = VerifySettings {
        negative_controls: args.negative_controls,
        ..VerifySettings::default()
    };
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.n_draws {
        s.n_draws = v;
    }
    if let Some(v) = args.n_paths {
        s.n_paths = v;
    }
    if let Some(v) = args.n_steps {
        s.n_steps = v;
    }
    if let Some(v) = &args.t {
        s.t_list = v.clone();
    }
    if let Some(v) = args.calibration_reps {
        s.calibration_reps = v;
    }
    if let Some(v) = args.tail_tol {
        s.tail_tol = v;
    }
    let report = run_all(&params, &s)?;
    let path = args.output.path("verify.json");
    let mut w = create(&path)?;
    writeln!(w, "{}", report.to_json()?)?;
    w.flush()?;
    for c in report.failures() {
        eprintln!(
            "check {} not as expected: statistic {:?}, threshold {:e}; {}",
            c.name, c.statistic, c.threshold, c.details
        );
    }
    let n_bad = report.failures().count();
    eprintln!(
        "{} checks, {} as expected; overall {}",
        report.checks.len(),
        report.checks.len() - n_bad,
        if report.overall { "pass" } else { "FAIL" }
    );
    Ok(if report.overall {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    })
}
