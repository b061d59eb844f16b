use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qre_core::code::CecMode;
use qre_core::experiment::{default_grid, emit_csv, fit_rows, run_point, run_sweep, summarize, SweepRow, SweepSpec, SweepVar};
use qre_core::network::{load_config, z_profile, ProtocolSettings, SimConfig, Topology, T_LINK};
use qre_core::noise::HardwareProfile;
use qre_core::validate;

#[derive(Parser)]
#[command(name = "qre", version, about = "Steane-encoded repeater chain simulator")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes of one configuration and print a summary
    Run(RunArgs),
    /// Run a sweep spec file and write CSV
    Sweep(SweepArgs),
    /// Single-parameter suppression sweeps with slope fits
    Threshold(ThresholdArgs),
    /// Coordinated hardware-improvement sweep
    Zsweep(ZsweepArgs),
    /// Link-count and distance scaling, both protocol modes
    Scale(ScaleArgs),
    /// Built-in consistency checks
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cec,
    None,
    Both,
}

impl Mode {
    fn modes(self) -> Vec<CecMode> {
        match self {
            Mode::Cec => vec![CecMode::Cec],
            Mode::None => vec![CecMode::None],
            Mode::Both => vec![CecMode::Cec, CecMode::None],
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; without it a chain is built from --links/--link-km
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 1)]
    links: usize,
    #[arg(long, default_value_t = 20.0)]
    link_km: f64,
    #[arg(long)]
    z: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep spec (JSON)
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "cec")]
    mode: Mode,
    #[arg(long, default_value_t = 2)]
    links: usize,
    #[arg(long, default_value_t = 20.0)]
    link_km: f64,
}

#[derive(Args)]
struct ZsweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "cec")]
    mode: Mode,
    /// Chain lengths to sweep (repeatable)
    #[arg(long, default_values_t = [1usize, 5])]
    links: Vec<usize>,
    #[arg(long, default_value_t = 20.0)]
    link_km: f64,
    /// Single z value instead of the 0..1 grid
    #[arg(long)]
    z: Option<f64>,
}

#[derive(Args)]
struct ScaleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "both")]
    mode: Mode,
    #[arg(long, default_value_t = 0.9)]
    z: f64,
    #[arg(long, default_value_t = 20.0)]
    link_km: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Random circuits for the oracle comparison
    #[arg(long, default_value_t = 200)]
    circuits: usize,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Threshold(a) => threshold(a),
        Command::Zsweep(a) => zsweep(a),
        Command::Scale(a) => scale(a),
        Command::Validate(a) => validate_all(a),
    }
}

fn write_rows(rows: &[SweepRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            emit_csv(rows, path)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            qre_core::experiment::write_csv(rows, std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            load_config(&text).with_context(|| format!("loading {}", path.display()))?
        }
        None => SimConfig::new(
            Topology::chain(a.links, a.link_km)?,
            HardwareProfile::baseline(),
            ProtocolSettings::default(),
        )?,
    };
    if let Some(z) = a.z {
        cfg.hardware = z_profile(z, &HardwareProfile::baseline(), T_LINK)?;
    }
    let runs = a.common.runs.unwrap_or(cfg.experiment.runs);
    let seed = a.common.seed.unwrap_or(cfg.experiment.seed);
    if runs == 0 {
        bail!("--runs must be at least 1");
    }
    let modes = a.mode.map(Mode::modes).unwrap_or_else(|| vec![cfg.protocol.cec_mode]);
    let var = if a.z.is_some() { SweepVar::Z } else { SweepVar::NumLinks };
    let value = a.z.unwrap_or(cfg.topology.num_links() as f64);
    let mut rows = Vec::new();
    for mode in modes {
        cfg.protocol.cec_mode = mode;
        if runs == 1 {
            let r = qre_core::protocol::run_episode(&cfg, seed)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        let records = run_point(&cfg, runs, seed)?;
        rows.push(summarize(var, value, mode, &records));
    }
    if runs > 1 || a.common.out.is_some() {
        write_rows(&rows, a.common.out.as_deref())?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut spec: SweepSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(r) = a.common.runs {
        spec.runs = r;
    }
    if let Some(s) = a.common.seed {
        spec.seed = s;
    }
    if let Some(m) = a.mode {
        spec.modes = m.modes();
    }
    let rows = run_sweep(&spec)?;
    write_rows(&rows, a.common.out.as_deref())?;
    if spec.var.is_single_param() {
        report_fits(&rows, spec.var, &spec.modes);
    }
    Ok(())
}

fn report_fits(rows: &[SweepRow], var: SweepVar, modes: &[CecMode]) {
    for &mode in modes {
        match fit_rows(rows, var, mode) {
            Ok(f) => eprintln!(
                "{var} [{}]: slope {:.3}, R^2 {:.4}, {} points",
                qre_core::experiment::mode_name(mode),
                f.slope,
                f.r_squared,
                f.points.len()
            ),
            Err(e) => eprintln!("{var} [{}]: no fit ({e})", qre_core::experiment::mode_name(mode)),
        }
    }
}

fn threshold(a: ThresholdArgs) -> Result<()> {
    let mut all = Vec::new();
    for var in [SweepVar::F2q, SweepVar::Fm, SweepVar::Fphys, SweepVar::F1q, SweepVar::Finit] {
        let mut spec = SweepSpec::new(var, default_grid(var).expect("threshold variable"), a.common.runs.unwrap_or(20_000));
        spec.links = a.links;
        spec.link_km = a.link_km;
        spec.seed = a.common.seed.unwrap_or(0);
        spec.modes = a.mode.modes();
        let rows = run_sweep(&spec)?;
        report_fits(&rows, var, &spec.modes);
        all.extend(rows);
    }
    write_rows(&all, a.common.out.as_deref())
}

fn zsweep(a: ZsweepArgs) -> Result<()> {
    let grid = match a.z {
        Some(z) => vec![z],
        None => (0..=10).map(|i| i as f64 / 10.0).collect(),
    };
    let mut all = Vec::new();
    for &links in &a.links {
        let mut spec = SweepSpec::new(SweepVar::Z, grid.clone(), a.common.runs.unwrap_or(10_000));
        spec.links = links;
        spec.link_km = a.link_km;
        spec.seed = a.common.seed.unwrap_or(0);
        spec.modes = a.mode.modes();
        all.extend(run_sweep(&spec)?);
    }
    write_rows(&all, a.common.out.as_deref())
}

fn scale(a: ScaleArgs) -> Result<()> {
    let hardware = z_profile(a.z, &HardwareProfile::baseline(), T_LINK)?;
    let runs = a.common.runs.unwrap_or(2_000);
    let seed = a.common.seed.unwrap_or(0);

    let mut fixed_total = SweepSpec::new(SweepVar::NumLinks, vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0], runs);
    fixed_total.total_km = Some(100.0);
    let mut spaced = SweepSpec::new(SweepVar::Distance, vec![100.0, 400.0, 1000.0, 2000.0], runs);
    spaced.link_km = a.link_km;

    let mut all = Vec::new();
    for mut spec in [fixed_total, spaced] {
        spec.hardware = hardware.clone();
        spec.seed = seed;
        spec.modes = a.mode.modes();
        all.extend(run_sweep(&spec)?);
    }
    write_rows(&all, a.common.out.as_deref())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn validate_all(a: ValidateArgs) -> Result<()> {
    let mut ok = true;

    let d = validate::decoder_exhaustive();
    let pass = d.bad_inputs.is_empty() && d.bad_corrections.is_empty();
    ok &= pass;
    println!(
        "decoder: {} inputs, {} corrections: {}",
        d.inputs,
        d.corrections_checked,
        verdict(pass)
    );

    for row in validate::resource_accounting(&[2, 3, 5, 10], 0)? {
        ok &= row.matches();
        println!(
            "resources N={}: counted {:?} expected {:?}: {}",
            row.nodes,
            row.counted,
            row.expected,
            verdict(row.matches())
        );
    }

    let s = validate::zero_noise_soundness(&[2, 3, 5, 10], 100, 20.0)?;
    ok &= s.bad.is_empty();
    println!("zero-noise soundness: {} episodes, {} imperfect: {}", s.episodes, s.bad.len(), verdict(s.bad.is_empty()));

    let f = validate::single_fault_injection(0, CecMode::Cec)?;
    ok &= f.failures.is_empty();
    println!(
        "single faults: {} stages, {} injections, {} uncorrected: {}",
        f.stages,
        f.injections,
        f.failures.len(),
        verdict(f.failures.is_empty())
    );

    if a.circuits > 0 {
        let o = validate::oracle::oracle_equivalence(a.circuits, a.shots, a.seed)?;
        ok &= o.failures.is_empty();
        println!(
            "oracle: {} circuits, {} mismatched, max |z| {:.2}: {}",
            o.circuits,
            o.failures.len(),
            o.max_abs_z,
            verdict(o.failures.is_empty())
        );
    }

    if !ok {
        bail!("validation failed");
    }
    Ok(())
}
