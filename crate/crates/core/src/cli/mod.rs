//! Command-line front end: `find`, `verify`, `profile`, `sample` and
//! `isotropize`.
//!
//! Exit codes: 0 success, 1 a check or certification failed, 2 usage or
//! configuration error, 3 direction budget exhausted (partial output is
//! still written).

pub mod config;

use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use config::{resolve_body, Format, RunConfig};

use crate::construction::{
    make_grid, prepare, FindOptions, DEFAULT_BETA, DEFAULT_C0, DEFAULT_C_OUTER, DEFAULT_EPS,
};
use crate::error::{Error, Result};
use crate::isotropy::isotropize;
use crate::moments::{profiles_to_csv, EvaluatorKind, MomentProfile};
use crate::rng::{derive_seed, Domain};
use crate::sampling::{default_method, sample_uniform, sphere_point};
use crate::verify::{run_suite, summary_table, Suite, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Parser, Debug)]
#[command(
    name = "subgauss",
    version,
    about = "Subgaussian directions in convex bodies"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvaluatorArg {
    Mc,
    Quad,
    Auto,
}

impl From<EvaluatorArg> for EvaluatorKind {
    fn from(e: EvaluatorArg) -> Self {
        match e {
            EvaluatorArg::Mc => EvaluatorKind::MonteCarlo,
            EvaluatorArg::Quad => EvaluatorKind::Quadrature,
            EvaluatorArg::Auto => EvaluatorKind::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Bin,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Bin => Format::Bin,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Body descriptor: a JSON file, inline JSON, or a kind name
    /// (cube, ball, simplex, lp_ball, cone, polytope).
    #[arg(long, global = true)]
    pub body: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long = "c0", global = true, default_value_t = DEFAULT_C0)]
    pub c0: f64,
    #[arg(long = "C0", global = true, default_value_t = DEFAULT_C_OUTER)]
    pub c_outer: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, global = true, value_enum, default_value_t = EvaluatorArg::Auto)]
    pub evaluator: EvaluatorArg,
    /// Maximum number of single L^p evaluations in `find`.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Isotropize, select directions greedily and certify them.
    Find,
    /// Run a verification suite.
    Verify {
        /// all, moments, correlation, endpoint, counterexample, volume or mass
        suite: String,
    },
    /// L^p profiles of given directions.
    Profile {
        /// Comma-separated direction (normalized before use); repeatable.
        #[arg(long, allow_hyphen_values = true)]
        theta: Vec<String>,
        /// Coordinate direction e_i (0-based); repeatable.
        #[arg(long)]
        axis: Vec<usize>,
        /// Number of uniformly random directions to add.
        #[arg(long, default_value_t = 0)]
        random: usize,
        /// Comma-separated orders.
        #[arg(long, default_value = "1,2,4,8")]
        p: String,
    },
    /// Draw a uniform sample of the body.
    Sample,
    /// Estimate the covariance and the isotropic map.
    Isotropize,
}

impl CommonArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let body = resolve_body(self.body.as_deref(), self.n)?;
        Ok(RunConfig {
            n: body.n,
            body,
            seed: self.seed,
            samples: self.samples.unwrap_or(DEFAULT_SAMPLES),
            c0: self.c0,
            c_outer: self.c_outer,
            eps: self.eps,
            beta: self.beta,
            evaluator: self.evaluator.into(),
            budget: self.budget,
            threads: self.threads,
            out: self.out.clone(),
            format: self.format.map(Into::into),
        })
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExhausted { .. } => EXIT_BUDGET,
        Error::InvalidParam(_)
        | Error::DimensionMismatch { .. }
        | Error::Unsupported(_)
        | Error::BadBurnIn { .. }
        | Error::InsufficientSamples { .. }
        | Error::QOutOfRange { .. }
        | Error::DimensionTooSmall { .. }
        | Error::PTooLargeForBudget { .. }
        | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    let threads = cli.common.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| dispatch(&cli, &mut buf));
    let _ = stdout.write_all(&buf);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    if let Command::Verify { suite } = &cli.command {
        return cmd_verify(suite, &cli.common, out);
    }
    let cfg = cli.common.config()?;
    match &cli.command {
        Command::Find => cmd_find(&cfg, out),
        Command::Profile {
            theta,
            axis,
            random,
            p,
        } => cmd_profile(&cfg, theta, axis, *random, p, out),
        Command::Sample => cmd_sample(&cfg, out),
        Command::Isotropize => cmd_isotropize(&cfg, out),
        Command::Verify { .. } => unreachable!("handled above"),
    }
}

fn emit(cfg: &RunConfig, name: &str, bytes: &[u8], out: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            let path = config::write_artifact(dir, name, bytes)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn finish(cfg: &RunConfig, command: &str) -> Result<()> {
    if let Some(dir) = &cfg.out {
        config::write_meta(dir, cfg, command)?;
    }
    Ok(())
}

fn profile_csv(cfg: &RunConfig, profiles: &[MomentProfile]) -> Result<Vec<u8>> {
    let mut buf = cfg.csv_comment().into_bytes();
    profiles_to_csv(profiles, &mut buf)?;
    Ok(buf)
}

/// Isotropize, find, certify, write the direction set and profiles.
pub fn cmd_find(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let body = cfg.build_body()?;
    let grid = make_grid(cfg.n, cfg.c0, cfg.c_outer, cfg.eps)?;
    let prep = prepare(&body, cfg.samples, cfg.seed, cfg.evaluator)?;
    let options = FindOptions {
        beta: cfg.beta,
        budget: cfg.budget,
        seed: derive_seed(cfg.seed, Domain::Candidates as u64),
        ..FindOptions::default()
    };
    let (set, exhausted) = match prep.find(&grid, &options) {
        Ok(s) => (s, false),
        Err(Error::BudgetExhausted { partial }) => (*partial, true),
        Err(e) => return Err(e),
    };
    let cert = prep.certify(&set, true);
    let mut payload = cfg.stamp();
    payload["complete"] = json!(set.is_complete());
    payload["transform"] = json!(prep.transform);
    payload["direction_set"] = json!(set);
    payload["certificate"] = json!(cert);
    payload["profile_csv"] = json!("profiles.csv");
    emit(
        cfg,
        "directions.json",
        serde_json::to_string_pretty(&payload)?.as_bytes(),
        out,
    )?;
    if cfg.out.is_some() {
        emit(cfg, "profiles.csv", &profile_csv(cfg, &set.profiles)?, out)?;
    }
    finish(cfg, "find")?;
    writeln!(
        out,
        "{}: {} of {} directions, certified {}, empirical ratio range [{:.4}, {:.4}], {} candidates",
        body.name(),
        set.thetas.len(),
        set.target_m,
        if cert.all_pass { "yes" } else { "no" },
        cert.empirical_c,
        cert.empirical_upper,
        set.stats.candidates
    )?;
    Ok(if exhausted {
        EXIT_BUDGET
    } else if set.is_complete() && cert.all_pass {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

/// Runs a suite; the report lists every check.
pub fn cmd_verify(suite: &str, common: &CommonArgs, out: &mut dyn Write) -> Result<i32> {
    let suite: Suite = suite.parse()?;
    let cfg = SuiteConfig {
        seed: common.seed,
        samples: common.samples.unwrap_or(SuiteConfig::default().samples),
        c0: common.c0,
        c_outer: common.c_outer,
        eps: common.eps,
    };
    let results = run_suite(suite, &cfg)?;
    let text = serde_json::to_vec(&cfg)?;
    let hash = hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&text));
    let report = json!({
        "config_hash": hash,
        "seed": cfg.seed,
        "suite": suite,
        "config": cfg,
        "results": results,
    });
    if let Some(dir) = &common.out {
        let path = config::write_artifact(
            dir,
            "report.json",
            serde_json::to_string_pretty(&report)?.as_bytes(),
        )?;
        writeln!(out, "wrote {}", path.display())?;
    } else if common.format == Some(FormatArg::Json) {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    }
    write!(out, "{}", summary_table(&results))?;
    Ok(if results.iter().all(|r| r.as_expected()) {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("not a number: {s:?}")))
        })
        .collect()
}

/// Profiles for explicit, coordinate and random directions.
pub fn cmd_profile(
    cfg: &RunConfig,
    thetas: &[String],
    axes: &[usize],
    random: usize,
    ps: &str,
    out: &mut dyn Write,
) -> Result<i32> {
    let body = cfg.build_body()?;
    let n = body.dim;
    let ps = parse_list(ps)?;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for t in thetas {
        let v = parse_list(t)?;
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(len > 0.0) {
            return Err(Error::invalid("zero direction"));
        }
        dirs.push(v.iter().map(|x| x / len).collect());
    }
    for &i in axes {
        if i >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: i + 1,
            });
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    let streams = crate::rng::Streams::new(cfg.seed, Domain::Directions);
    for k in 0..random {
        dirs.push(sphere_point(n, &mut streams.stream(k as u64)));
    }
    if dirs.is_empty() {
        return Err(Error::invalid(
            "no direction given: use --theta, --axis or --random",
        ));
    }
    let needs_sample = cfg.evaluator != EvaluatorKind::Quadrature;
    let mc = if needs_sample {
        let batch = sample_uniform(
            &body,
            cfg.samples,
            derive_seed(cfg.seed, Domain::BodySampling as u64),
            default_method(&body),
        )?;
        Some(crate::moments::SampleEvaluator::with_body(
            &body, &batch, None,
        ))
    } else {
        None
    };
    let quad = crate::moments::QuadratureEvaluator::new(&body, None);
    let mut profiles = Vec::new();
    for (id, theta) in dirs.iter().enumerate() {
        let mut entries = Vec::new();
        let mut truncated = false;
        for &p in &ps {
            let e = match cfg.evaluator {
                EvaluatorKind::Quadrature => {
                    Some(crate::moments::LpEvaluator::norms(&quad, theta, &[p])?[0])
                }
                EvaluatorKind::MonteCarlo => {
                    let mc = mc.as_ref().expect("sample drawn");
                    (p <= crate::moments::LpEvaluator::max_p(mc, theta))
                        .then(|| crate::moments::LpEvaluator::norms(mc, theta, &[p]))
                        .transpose()?
                        .map(|v| v[0])
                }
                EvaluatorKind::Auto => crate::construction::direction_norm(
                    &body,
                    theta,
                    p,
                    mc.as_ref().map(|m| m as &dyn crate::moments::LpEvaluator),
                )?,
            };
            match e {
                Some(e) => entries.push(e),
                None => truncated = true,
            }
        }
        profiles.push(MomentProfile {
            theta_id: id,
            theta: theta.clone(),
            n,
            lk: 0.0,
            entries,
            truncated,
        });
    }
    match cfg.format {
        Some(Format::Json) => {
            let mut payload = cfg.stamp();
            payload["profiles"] = json!(profiles);
            emit(
                cfg,
                "profiles.json",
                serde_json::to_string_pretty(&payload)?.as_bytes(),
                out,
            )?;
        }
        _ => emit(cfg, "profiles.csv", &profile_csv(cfg, &profiles)?, out)?,
    }
    finish(cfg, "profile")?;
    Ok(EXIT_OK)
}

/// Uniform sample in CSV, JSON or the binary layout.
pub fn cmd_sample(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let body = cfg.build_body()?;
    let batch = sample_uniform(
        &body,
        cfg.samples,
        derive_seed(cfg.seed, Domain::BodySampling as u64),
        default_method(&body),
    )?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = cfg.csv_comment().into_bytes();
            batch.write_csv(&mut buf)?;
            emit(cfg, "samples.csv", &buf, out)?;
        }
        Format::Json => {
            let mut payload = cfg.stamp();
            payload["dim"] = json!(batch.dim);
            payload["len"] = json!(batch.len);
            payload["method"] = json!(batch.method);
            payload["points"] = json!(batch.rows().collect::<Vec<_>>());
            emit(
                cfg,
                "samples.json",
                serde_json::to_string(&payload)?.as_bytes(),
                out,
            )?;
        }
        Format::Bin => {
            let dir = cfg
                .out
                .as_deref()
                .ok_or_else(|| Error::invalid("--format bin needs --out"))?;
            let mut buf = Vec::new();
            batch.write_binary(&mut buf)?;
            emit(cfg, "samples.bin", &buf, out)?;
            let header = serde_json::to_string_pretty(&cfg.stamp())?;
            config::write_artifact(dir, "samples.bin.json", header.as_bytes())?;
        }
    }
    finish(cfg, "sample")?;
    Ok(EXIT_OK)
}

/// Covariance, the map `T`, `L_K` and the residual diagnostics as JSON.
pub fn cmd_isotropize(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let body = cfg.build_body()?;
    let batch = sample_uniform(
        &body,
        cfg.samples,
        derive_seed(cfg.seed, Domain::BodySampling as u64),
        default_method(&body),
    )?;
    let (cov, t) = isotropize(&batch)?;
    let mut payload = cfg.stamp();
    payload["sigma"] = json!(cov.sigma.transpose().as_slice());
    payload["mean"] = json!(cov.mean);
    payload["frobenius_ci"] = json!(cov.frobenius_ci);
    payload["transform"] = json!(t);
    emit(
        cfg,
        "isotropize.json",
        serde_json::to_string_pretty(&payload)?.as_bytes(),
        out,
    )?;
    finish(cfg, "isotropize")?;
    let ok = t.cov_residual.zip(t.cov_ci).is_none_or(|(r, c)| r <= c);
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    run(std::env::args_os(), &mut stdout, &mut stderr)
}

/// Whether a path holds a finished run (used by tests and scripts).
pub fn has_artifacts(dir: &Path) -> bool {
    dir.join("meta.json").is_file()
}
