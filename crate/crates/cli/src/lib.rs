//! Command-line front end for `open-rcd`.
//!
//! Exit codes: 0 on success, 1 on configuration or I/O errors, 2 when a run
//! finishes but some empirical curve exceeds its bound.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use open_rcd::bounds::{self, BoundParams};
use open_rcd::config::ConfigFile;
use open_rcd::cost::{ReplacementDistribution, ReplacementMode};
use open_rcd::harness::{self, ExperimentConfig};
use open_rcd::output::{self, sci};
use open_rcd::rcd::contraction_factor;
use open_rcd::seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FLAGGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "open-rcd", version, about = "Random coordinate descent in open multi-agent systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo experiment; writes aggregate and summary CSVs plus a manifest.
    Run(Overrides),
    /// Single trajectory dump (trial 0 of the equivalent run).
    Trace(Overrides),
    /// Table of the closed-form constants and bounds.
    Bounds(Overrides),
    /// Checks sampled functions against the class and the replacement-impact bounds.
    Selftest {
        #[command(flatten)]
        overrides: Overrides,
        /// Replacements sampled per mode.
        #[arg(long, default_value_t = 2_000)]
        samples: u64,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file; flags take precedence over its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, conflicts_with = "beta")]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Expected replacements per update, (1 - p) / p.
    #[arg(long = "rho-r", conflicts_with = "p")]
    pub rho_r: Option<f64>,
    /// Probability that an event is an update.
    #[arg(long)]
    pub p: Option<f64>,
    /// Horizon (number of events).
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replacement law: rr, ar or quadratic.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    /// Step size rule: two-beta (1/(2 beta)) or beta (1/beta).
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Overrides {
    fn as_config(&self) -> ConfigFile {
        ConfigFile {
            n: self.n,
            alpha: self.alpha,
            beta: self.beta,
            kappa: self.kappa,
            p: self.p,
            rho_r: self.rho_r,
            t: self.t,
            trials: self.trials,
            seed: self.seed,
            mode: self.mode.clone(),
            step: self.step.clone(),
            workers: self.workers,
            out: self.out.clone(),
            code_version: None,
        }
    }

    /// File values overlaid with flags.
    pub fn layered(&self) -> anyhow::Result<ConfigFile> {
        let base = match &self.config {
            Some(path) => ConfigFile::read(path)
                .with_context(|| format!("config: cannot load {}", path.display()))?,
            None => ConfigFile::default(),
        };
        Ok(base.merged(&self.as_config()))
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn parse_and_dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: &Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Run(o) => run(o, out),
        Command::Trace(o) => trace(o, out),
        Command::Bounds(o) => bounds_table(o, out),
        Command::Selftest { overrides, samples } => selftest(overrides, *samples, out),
    }
}

fn resolve(o: &Overrides) -> anyhow::Result<(ConfigFile, ExperimentConfig)> {
    let file = o.layered()?;
    let cfg = file.resolve()?;
    Ok((file, cfg))
}

/// `results.csv` -> `results.<suffix>`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("out: cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("out: cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_manifest(cfg: &ExperimentConfig, out_path: &Path) -> anyhow::Result<PathBuf> {
    let path = sidecar(out_path, "manifest.toml");
    let manifest = ConfigFile::manifest(cfg, out_path.to_str());
    let mut w = create(&path)?;
    w.write_all(manifest.to_toml()?.as_bytes())?;
    w.flush()?;
    Ok(path)
}

fn run(o: &Overrides, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (file, cfg) = resolve(o)?;
    let out_path = PathBuf::from(file.out.as_deref().unwrap_or("run.csv"));
    let result = harness::run_experiment(&cfg)?;

    output::write_aggregate_csv(&result, create(&out_path)?)?;
    let summary = sidecar(&out_path, "summary.csv");
    output::write_summary_csv(&result, create(&summary)?)?;
    let manifest = write_manifest(&cfg, &out_path)?;

    writeln!(out, "wrote {}", out_path.display())?;
    writeln!(out, "wrote {}", summary.display())?;
    writeln!(out, "wrote {}", manifest.display())?;
    writeln!(out, "mean C0 {}", sci(result.mean_c0))?;
    for v in &result.violations {
        writeln!(
            out,
            "flagged: {} at T={} mean {} (stderr {}) exceeds {} = {}",
            v.series,
            v.checkpoint,
            sci(v.mean),
            sci(v.stderr),
            v.bound,
            sci(v.bound_value)
        )?;
    }
    Ok(if result.flagged() { EXIT_FLAGGED } else { EXIT_OK })
}

fn trace(o: &Overrides, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (file, cfg) = resolve(o)?;
    let out_path = PathBuf::from(file.out.as_deref().unwrap_or("trace.csv"));
    let traj = harness::single_realization_trace(&cfg)?;

    output::write_trajectory_csv(&traj, create(&out_path)?)?;
    let functions = sidecar(&out_path, "functions.jsonl");
    output::write_functions_jsonl(&traj, create(&functions)?)?;
    let manifest = write_manifest(&cfg, &out_path)?;

    writeln!(out, "wrote {}", out_path.display())?;
    writeln!(out, "wrote {}", functions.display())?;
    writeln!(out, "wrote {}", manifest.display())?;
    writeln!(out, "replacements {}", traj.replacement_count())?;
    Ok(EXIT_OK)
}

fn bounds_table(o: &Overrides, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (_, cfg) = resolve(o)?;
    let params = BoundParams::with_worst_case_c0(cfg.n, cfg.class, cfg.p)?;
    let mut rows: Vec<(&str, f64)> = vec![
        ("n", cfg.n as f64),
        ("alpha", params.alpha()),
        ("beta", params.beta()),
        ("kappa", params.kappa()),
        ("p", cfg.p),
        ("rho_r", params.rho_r()),
        ("gamma", contraction_factor(&params)?),
        ("eta", params.eta()?),
        ("m_f", params.m_f()),
        ("theta_general", params.theta_general()),
        ("theta_quadratic", params.theta_quad()),
        ("pot_avg_bound", bounds::pot_bound_rate(&params)),
        ("reg_asymptotic_general", bounds::reg_bound_asymptotic(&params, false)?),
        ("reg_asymptotic_quadratic", bounds::reg_bound_asymptotic(&params, true)?),
    ];
    // Finite-horizon rows only when a horizon was asked for.
    if o.t.is_some() || o.layered()?.t.is_some() {
        let t = cfg.horizon;
        rows.push(("horizon", t as f64));
        rows.push(("c0_worst_case", params.c0));
        rows.push(("pot_bound", bounds::pot_bound(&params, t)));
        rows.push(("reg_finite_general", bounds::reg_bound_finite(&params, t, params.theta_general())?));
        rows.push(("reg_finite_quadratic", bounds::reg_bound_finite(&params, t, params.theta_quad())?));
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        writeln!(out, "{k:<width$}  {}", sci(v))?;
    }
    Ok(EXIT_OK)
}

fn selftest(o: &Overrides, samples: u64, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (_, cfg) = resolve(o)?;
    let upper = 2.0 * cfg.n as f64;
    let mut class_ok = true;
    let mut flagged = false;
    for mode in [
        ReplacementMode::Random,
        ReplacementMode::Adversarial,
        ReplacementMode::QuadraticUniform,
    ] {
        let mut dist = ReplacementDistribution::new(
            mode,
            cfg.class,
            seed::derive(cfg.master_seed, seed::stream::REPLACEMENTS, 3),
        );
        let failures = (0..200).filter(|_| !dist.sample().verify_class(2_000, upper)).count();
        class_ok &= failures == 0;
        writeln!(out, "{mode}: class check on 200 functions, {failures} failures")?;

        let mode_cfg = ExperimentConfig { mode, ..cfg.clone() };
        let report = harness::replacement_impact_study(&mode_cfg, samples)?;
        let ok = report.within_bound();
        flagged |= !ok;
        writeln!(
            out,
            "{mode}: replacement impact {} (stderr {}) vs bound {} [{}]",
            sci(report.mean),
            sci(report.stderr),
            sci(report.theta),
            if ok { "ok" } else { "exceeded" }
        )?;
    }
    if !class_ok {
        bail!("sampled functions violate the declared class");
    }
    Ok(if flagged { EXIT_FLAGGED } else { EXIT_OK })
}
