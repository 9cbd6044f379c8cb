//! Command-line front end: configuration ingestion, pipeline orchestration,
//! machine-readable outputs.
//!
//! Exit codes: 0 ok, 1 domain/precondition, 2 usage, 3 infeasibility,
//! 4 depth/budget exceeded.

mod config;
mod oracle;

use clap::{Parser, Subcommand};
use config::Config;
use mfpack_core::construction::{schedule, validate};
use mfpack_core::dyadic::DyadicWord;
use mfpack_core::localdim::{
    compare_bounds, default_candidates, exponent_trace, level_set_sample, lk_estimate,
    member_packing, t_estimate,
};
use mfpack_core::packing::partition_sum;
use mfpack_core::spectrum::estimate_tau;
use mfpack_core::Error as CoreError;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mfpack", version, about = "Dyadic multifractal analysis toolkit")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Primary output path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = auto).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the feasibility checks on the configured construction.
    Validate,
    /// Build generations eagerly and print the family table.
    Construct,
    /// Evaluate interval masses for the configured words.
    Mass,
    /// Estimate the scaling exponents and write (q, tau_hat, residual) CSV.
    Spectrum,
    /// Trace local exponents along a point or a selected path.
    Trace,
    /// Sample the finite-depth level set.
    Levelset,
    /// Optimize one replacement family and report its score.
    Lquantity,
    /// Tabulate T estimates over an (eta, p) grid.
    Tmu,
    /// Compare the q>=0 bound against the replacement-scaled q>=1 bound.
    CompareBounds,
    /// Cross-check the exact packing-supremum oracle on random instances.
    Oracle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // a failure here only means a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match run(&cli) {
        Ok(output) => {
            if let Err(e) = write_output(&cli.out, &output) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// CLI-level error: usage problems wrap everything the core does not cover.
#[derive(Debug)]
pub(crate) enum CliError {
    Usage(String),
    Core(CoreError),
    /// A feasibility report that did not pass (validate).
    ReportFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::ReportFailed(_) => 1,
            CliError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::Hypothesis(_) | CoreError::ModelIntegrity(_) => 1,
                CoreError::Infeasible(_) => 3,
                CoreError::DepthExceeded(_)
                | CoreError::BudgetExceeded(_)
                | CoreError::CappedSchedule { .. } => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::ReportFailed(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config PATH is required for this command".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

pub(crate) fn section<'a, T>(opt: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    opt.as_ref()
        .ok_or_else(|| CliError::Usage(format!("config is missing the \"{name}\" section")))
}

pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Validate => cmd_validate(&cfg),
        Command::Construct => cmd_construct(&cfg),
        Command::Mass => cmd_mass(&cfg),
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Trace => cmd_trace(&cfg),
        Command::Levelset => cmd_levelset(&cfg),
        Command::Lquantity => cmd_lquantity(&cfg),
        Command::Tmu => cmd_tmu(&cfg),
        Command::CompareBounds => cmd_compare_bounds(&cfg),
        Command::Oracle => oracle::cmd_oracle(&cfg, cli.seed),
    }
}

fn cmd_validate(cfg: &Config) -> Result<String, CliError> {
    let params = cfg
        .model
        .selective_params()
        .ok_or_else(|| CliError::Usage("validate needs a selective model".into()))?
        .to_params();
    let report = validate(&params);
    // a representative slice of the schedule rides along
    let sched = schedule(&params, 4).map(|s| s.entries).unwrap_or_default();
    #[derive(serde::Serialize)]
    struct ValidateOut<'a> {
        report: &'a mfpack_core::construction::FeasibilityReport,
        schedule_head: Vec<u64>,
    }
    let out = to_json(&ValidateOut { report: &report, schedule_head: sched });
    if report.pass {
        Ok(out)
    } else {
        // the report still reaches stdout before the nonzero exit
        print!("{out}");
        let first = report.first_failure().expect("failed report names a check");
        Err(CliError::ReportFailed(format!(
            "validation failed at {}: {}",
            first.name, first.detail
        )))
    }
}

fn cmd_construct(cfg: &Config) -> Result<String, CliError> {
    let params_spec = cfg
        .model
        .selective_params()
        .ok_or_else(|| CliError::Usage("construct needs a selective model".into()))?;
    let generations = cfg
        .construct
        .as_ref()
        .and_then(|c| c.generations)
        .or(params_spec.generations)
        .unwrap_or(4);
    let fam = mfpack_core::construction::SelectedFamily::new(params_spec.to_params())?;
    let mut out = String::from("generation,word,lineage,partner\n");
    for k in 0..=generations {
        let gen = fam.generation(k)?;
        for node in &gen {
            out.push_str(&format!(
                "{k},{},{},{}\n",
                node.word,
                node.lineage,
                gen[node.partner].word
            ));
        }
    }
    Ok(out)
}

fn cmd_mass(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let opts = section(&cfg.mass, "mass")?;
    let mut out = String::from("word,order,log2_mass,mass\n");
    for w in &opts.words {
        let word = DyadicWord::parse(w)?;
        let mass = model.mass(&word)?;
        out.push_str(&format!("{word},{},{},{}\n", word.order(), mass.log2, mass.value()));
    }
    Ok(out)
}

fn cmd_spectrum(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let opts = section(&cfg.spectrum, "spectrum")?;
    let est = estimate_tau(&model, &opts.q_grid(), (opts.n_min, opts.n_max))?;
    let mut out = String::from("q,tau_hat,residual\n");
    for f in &est.fits {
        out.push_str(&format!("{},{},{}\n", f.q, f.slope, f.rms_residual));
    }
    // normalization anchor printed for the log
    if let Some(anchor) = est.fits.iter().find(|f| (f.q - 1.0).abs() < 1e-12) {
        eprintln!("tau(1) = {} (exact normalization anchor)", anchor.slope);
    }
    if let Some(t) = opts.partition_t {
        let mut rows = String::from("n,q,t,log2_S\n");
        for n in opts.n_min..=opts.n_max {
            for &q in &opts.q_grid() {
                let s = partition_sum(&model, n, q, t)?;
                rows.push_str(&format!("{n},{q},{t},{}\n", s.log2));
            }
        }
        match &opts.partition_out {
            Some(path) => std::fs::write(path, rows)
                .map_err(|e| CliError::Usage(format!("cannot write partition dump: {e}")))?,
            None => out.push_str(&rows),
        }
    }
    Ok(out)
}

fn cmd_trace(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let opts = section(&cfg.trace, "trace")?;
    let trace = exponent_trace(&model, &opts.target, &opts.orders)?;
    let mut out = format!("# {}\nn,exponent\n", trace.descriptor);
    for (n, e) in &trace.samples {
        out.push_str(&format!("{n},{e}\n"));
    }
    Ok(out)
}

fn cmd_levelset(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let opts = section(&cfg.levelset, "levelset")?;
    let candidates = match &opts.candidates {
        Some(c) => c.clone(),
        None => default_candidates(&model, opts.depth, 16)?,
    };
    let sample = level_set_sample(
        &model,
        opts.alpha,
        opts.eta,
        opts.p,
        opts.depth,
        opts.limsup_slack,
        &candidates,
    )?;
    Ok(to_json(&sample))
}

fn cmd_lquantity(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let opts = section(&cfg.lquantity, "lquantity")?;
    let candidates = default_candidates(&model, opts.depth, 16)?;
    let sample = level_set_sample(
        &model, opts.alpha, opts.eta, opts.p, opts.depth, 0.2, &candidates,
    )?;
    if sample.members.is_empty() {
        return Err(CliError::Core(CoreError::Domain(
            "empty level-set sample: the replacement score is undefined".into(),
        )));
    }
    let base = member_packing(&sample.members, opts.p)?;
    let out = lk_estimate(
        &model,
        &sample.members,
        &base,
        opts.k,
        opts.u_rule,
        &opts.budget,
        &[],
    )?;
    Ok(to_json(&out))
}

fn cmd_tmu(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let opts = section(&cfg.tmu, "tmu")?;
    let mut out = String::from("eta,p,t_hat,members,ceiling_ok\n");
    for &eta in &opts.etas {
        for &p in &opts.ps {
            let t = t_estimate(&model, opts.alpha, eta, p, opts.depth, &opts.budget)?;
            let value = t.value.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into());
            out.push_str(&format!("{eta},{p},{value},{},{}\n", t.members, t.ceiling_ok));
        }
    }
    Ok(out)
}

fn cmd_compare_bounds(cfg: &Config) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let opts = section(&cfg.compare_bounds, "compare_bounds")?;
    let est =
        estimate_tau(&model, &opts.spectrum.q_grid(), (opts.spectrum.n_min, opts.spectrum.n_max))?;
    let report = compare_bounds(&model, opts.alpha, &est.curve, &opts.t)?;
    // flat documented schema on top, the full report as detail
    use mfpack_core::spectrum::{LegendreOutcome, OlsenOutcome};
    let olsen = match &report.olsen {
        OlsenOutcome::Applicable { outcome } if outcome.is_attained() => {
            Some(outcome.grid_value())
        }
        _ => None,
    };
    let bracketed = matches!(
        &report.olsen,
        OlsenOutcome::Applicable { outcome: LegendreOutcome::Attained { .. } }
    ) && report.tail_inf.is_attained();
    #[derive(serde::Serialize)]
    struct CompareOut {
        alpha: f64,
        olsen: Option<f64>,
        new: Option<f64>,
        t_hat: Option<f64>,
        improvement: Option<bool>,
        bracketed: bool,
        detail: mfpack_core::localdim::BoundComparison,
    }
    Ok(to_json(&CompareOut {
        alpha: report.alpha,
        olsen,
        new: report.new_bound,
        t_hat: report.t_hat,
        improvement: report.improvement,
        bracketed,
        detail: report,
    }))
}
