// SPDX-License-Identifier: Apache-2.0

mod config;
mod output;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::{Table, Value};

use ionprobe::decoupling::suppression_condition;
use ionprobe::error::Error;
use ionprobe::figures::{reproduce, Figure, FigureOptions};
use ionprobe::fit::log_log_slope;
use ionprobe::hilbert::HilbertSpace;
use ionprobe::models::{
    presets, rabi_frequency_axial, transverse_force_parameters, ProbeKind, ProbeParams,
};
use ionprobe::sensing::{
    estimate_axial_force, estimate_transverse_force, fit_rabi_signal, heating_limited_sensitivity,
    shot_noise_sensitivity, PhaseTrace,
};
use ionprobe::swtransform::{double_commutator_norm, first_order_defect, sw_scaling};

use config::{force_components, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Back to a library error, for callbacks that must return one.
    pub fn into_library(self) -> Error {
        match self {
            CliError::Config(m) => Error::InvalidParameter(m),
            CliError::Numerical(m) => Error::Estimation(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite
            | Error::StepFailure { .. }
            | Error::DerivativeFloor
            | Error::Estimation(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

const UNITS: &str = "Units: all physical quantities are SI. Frequencies (g, omega, delta, \
drive_omega) are angular frequencies in rad/s; a value quoted as \"4 kHz\" is entered as 4e3. \
Forces in N, lengths in m, times in s, heating rates in quanta/s.";

#[derive(Parser)]
#[command(
    name = "ionprobe",
    version,
    about = "Single trapped-ion force-sensing simulator",
    after_help = UNITS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write the signal CSV, metadata and plot.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Closed-form force sensitivity in N/sqrt(Hz).
    Sensitivity(SensitivityArgs),
    /// Fit a force to recorded signal CSVs.
    Estimate {
        /// Config providing the `[probe]` parameters (its force is ignored).
        #[arg(long)]
        config: PathBuf,
        /// Signal CSV; repeat with one `--phi` each for transverse estimates.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// Ramsey preparation phase of each input (JT only).
        #[arg(long, allow_negative_numbers = true)]
        phi: Vec<f64>,
    },
    /// Cartesian-product parameter sweep over `[[sweep.parameter]]` entries.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check the canonical transformation behind the effective Hamiltonians.
    VerifySw(VerifyArgs),
    /// Write the data series behind a reference figure.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeArg {
    Jc,
    Qr,
    Jt,
}

impl From<ProbeArg> for ProbeKind {
    fn from(p: ProbeArg) -> Self {
        match p {
            ProbeArg::Jc => ProbeKind::Jc,
            ProbeArg::Qr => ProbeKind::Qr,
            ProbeArg::Jt => ProbeKind::Jt,
        }
    }
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long, value_enum)]
    probe: ProbeArg,
    /// Phonon frequency [rad/s].
    #[arg(long)]
    omega: f64,
    /// Spin-phonon coupling [rad/s].
    #[arg(long)]
    g: f64,
    /// Ground-state spread [m].
    #[arg(long)]
    z: f64,
    /// Heating rate per mode [1/s]; comma-separated or repeated.
    #[arg(long, value_delimiter = ',')]
    heating: Vec<f64>,
    /// Interrogation time [s] for the shot-noise limit.
    #[arg(long)]
    time: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    kind: ProbeArg,
    /// Fock cutoff per mode (default 20, or 6 for jt).
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, default_value_t = 1e3)]
    g_min: f64,
    #[arg(long, default_value_t = 1e4)]
    g_max: f64,
    #[arg(long, default_value_t = 5)]
    points: usize,
    /// Include the third-order term; JC and JT residuals then scale as g⁴.
    #[arg(long)]
    third_order: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// fig1a, fig1b, fig2, fig3, fig4a, fig4b or all.
    #[arg(long)]
    figure: String,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Fock cutoff of single-mode figures.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Fock cutoff per mode of two-mode figures.
    #[arg(long)]
    cutoff_2d: Option<usize>,
    /// Samples per axis.
    #[arg(long)]
    points: Option<usize>,
    /// Trap frequencies [rad/s] of fig2, comma-separated.
    #[arg(long, value_delimiter = ',')]
    omegas: Vec<f64>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SIM_THREADS") else {
        return Ok(());
    };
    let n: usize =
        v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            CliError::Config(format!("SIM_THREADS='{v}' is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn section<T: serde::Serialize>(v: &T) -> Value {
    Value::try_from(v).unwrap_or_else(|_| Value::Table(Table::new()))
}

fn derived(params: &ProbeParams) -> Table {
    let mut t = Table::new();
    t.insert(
        "coupling_ratio".into(),
        Value::Float(params.coupling_ratio()),
    );
    match params.kind {
        ProbeKind::Jt => {
            if let Ok(tf) = transverse_force_parameters(params) {
                t.insert("omega_rms".into(), Value::Float(tf.omega_rms));
                if let Some(xi) = tf.xi {
                    t.insert("xi".into(), Value::Float(xi));
                }
            }
        }
        _ => {
            if let Ok(of) = rabi_frequency_axial(params) {
                t.insert("omega_f".into(), Value::Float(of));
            }
        }
    }
    if params.drive_omega > 0.0 {
        t.insert(
            "residual_to_drive_ratio".into(),
            Value::Float(suppression_condition(params).ratio()),
        );
    }
    t
}

fn probe_table(cfg: &ExperimentConfig, params: &ProbeParams) -> Table {
    let mut p = Table::new();
    p.insert(
        "kind".into(),
        Value::String(params.kind.name().to_lowercase()),
    );
    p.insert("g".into(), Value::Float(params.g));
    p.insert("omega".into(), Value::Float(params.omega));
    p.insert("z".into(), Value::Float(params.spread()));
    p.insert("delta".into(), Value::Float(params.delta()));
    p.insert("drive_omega".into(), Value::Float(params.drive_omega));
    p.insert("force".into(), floats(&force_components(params)));
    p.insert("heating".into(), floats(&params.heating));
    p.insert("hbar".into(), Value::Float(params.hbar));
    p.insert("hamiltonian".into(), section(&cfg.probe.hamiltonian));
    p
}

fn metadata(
    cfg: &ExperimentConfig,
    trace: &ionprobe::dynamics::SignalTrace,
) -> Result<String, CliError> {
    let params = cfg.params()?;
    let space = cfg.space()?;
    let mut root = Table::new();
    root.insert("probe".into(), Value::Table(probe_table(cfg, &params)));
    root.insert("initial".into(), section(&cfg.initial));
    root.insert("protocol".into(), section(&cfg.protocol));
    root.insert("time".into(), section(&cfg.time));
    let mut sp = Table::new();
    sp.insert(
        "cutoffs".into(),
        Value::Array(
            space
                .cutoffs()
                .iter()
                .map(|&c| Value::Integer(c as i64))
                .collect(),
        ),
    );
    root.insert("space".into(), Value::Table(sp));
    root.insert("derived".into(), Value::Table(derived(&params)));
    let mut diag = Table::new();
    diag.insert("max_tail".into(), floats(&trace.max_tails()));
    for (k, v) in &trace.metadata {
        diag.insert(k.clone(), Value::String(v.clone()));
    }
    root.insert("diagnostics".into(), Value::Table(diag));
    toml::to_string(&root).map_err(|e| CliError::Numerical(format!("metadata: {e}")))
}

fn run_simulate(config: &Path, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::from_path(config)?;
    if let Some(d) = output_dir {
        cfg.output.dir = d;
    }
    cfg.validate()?;
    output::ensure_dir(&cfg.output.dir)?;
    let trace = runner::simulate(&cfg)?;
    let dir = &cfg.output.dir;
    let name = &cfg.output.name;
    let csv = output::write_text(dir, &format!("{name}.csv"), &output::signal_csv(&trace))?;
    let meta = output::write_text(dir, &format!("{name}.meta.toml"), &metadata(&cfg, &trace)?)?;
    println!("signal: {}", csv.display());
    println!("metadata: {}", meta.display());
    if cfg.output.svg {
        let svg = output::svg_plot(
            name,
            "t [s]",
            "P_up",
            &[("p_up", &trace.times, &trace.p_up)],
        );
        let path = output::write_text(dir, &format!("{name}.svg"), &svg)?;
        println!("plot: {}", path.display());
    }
    let tails: Vec<String> = trace
        .max_tails()
        .iter()
        .map(|t| format!("{t:.3e}"))
        .collect();
    println!("max tail population: [{}]", tails.join(", "));
    // the damped-Rabi summary fit only describes spin-up or spin-down starts
    if cfg.initial.spin == config::SpinChoice::Superposition {
        return Ok(());
    }
    match fit_rabi_signal(&trace) {
        Ok(fit) => {
            let w = fit.params[0];
            let (label, value) = match cfg.params()?.kind {
                ProbeKind::Qr => ("omega_f", w / 2.0),
                ProbeKind::Jc => ("omega_f", w),
                ProbeKind::Jt => ("omega_rms", w),
            };
            println!(
                "fitted {label} = {value:.6e} rad/s, gamma = {:.3e} 1/s, rms {:.2e}",
                fit.params[1], fit.rms
            );
        }
        Err(e) => log::info!("no Rabi fit: {e}"),
    }
    Ok(())
}

fn run_sensitivity(a: &SensitivityArgs) -> Result<(), CliError> {
    let kind = ProbeKind::from(a.probe);
    let params = match kind {
        ProbeKind::Jc => ProbeParams::jc(a.g, a.omega, a.z, 0.0),
        ProbeKind::Qr => ProbeParams::qr(a.g, a.omega, a.z, 0.0),
        ProbeKind::Jt => ProbeParams::jt(a.g, a.omega, a.z, 0.0, 0.0),
    };
    let params = if a.heating.is_empty() {
        params
    } else {
        let rates = if a.heating.len() == 1 {
            vec![a.heating[0]; kind.num_modes()]
        } else {
            a.heating.clone()
        };
        if rates.len() != kind.num_modes() {
            return Err(CliError::Config(format!(
                "{} probe needs {} heating rate(s)",
                kind.name(),
                kind.num_modes()
            )));
        }
        params.with_heating(rates)
    };
    params.validate()?;
    if params.heating.iter().any(|r| *r > 0.0) {
        let r = heating_limited_sensitivity(&params)?;
        println!(
            "heating-limited sensitivity: {:.2e} N/sqrt(Hz) (value {:.6e}, t_opt {:.4e} s)",
            r.value, r.value, r.time
        );
    }
    if let Some(t) = a.time {
        let r = shot_noise_sensitivity(&params, t)?;
        println!(
            "shot-noise sensitivity at t = {t:e} s: {:.2e} N/sqrt(Hz) (value {:.6e})",
            r.value, r.value
        );
    } else if params.heating.iter().all(|r| *r <= 0.0) {
        return Err(CliError::Config(
            "give --heating for the heating-limited value or --time for the shot-noise value"
                .into(),
        ));
    }
    Ok(())
}

fn run_estimate(config: &Path, inputs: &[PathBuf], phis: &[f64]) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_path(config)?;
    let params = cfg.params()?;
    let traces = inputs
        .iter()
        .map(|p| output::read_signal_csv(p))
        .collect::<Result<Vec<_>, _>>()?;
    match params.kind {
        ProbeKind::Jt => {
            if phis.len() != traces.len() {
                return Err(CliError::Config(format!(
                    "{} inputs need {} --phi values, got {}",
                    traces.len(),
                    traces.len(),
                    phis.len()
                )));
            }
            let family: Vec<PhaseTrace> = phis
                .iter()
                .zip(traces)
                .map(|(&phi, trace)| PhaseTrace { phi, trace })
                .collect();
            let e = estimate_transverse_force(&family, &params)?;
            let xi = e.xi.unwrap_or(f64::NAN);
            println!("force magnitude = {:.6e} N", e.magnitude);
            println!(
                "force components = ({:.6e}, {:.6e}) N",
                e.magnitude * xi.cos(),
                e.magnitude * xi.sin()
            );
            println!(
                "xi = {xi:.6} rad{}",
                if e.xi_mod_pi { " (modulo pi)" } else { "" }
            );
            println!("omega_rms = {:.6e} rad/s", e.rabi);
            println!("residual rms = {:.3e}", e.residual_rms);
        }
        _ => {
            if traces.len() != 1 {
                return Err(CliError::Config("axial estimates take one input".into()));
            }
            let e = estimate_axial_force(&traces[0], &params)?;
            println!("force = {:.6e} N", e.magnitude);
            println!("omega_f = {:.6e} rad/s", e.rabi);
            println!("gamma = {:.6e} 1/s", e.gamma.unwrap_or(f64::NAN));
            println!("residual rms = {:.3e}", e.residual_rms);
            if e.aliasing_suspected {
                println!("warning: fitted frequency is near the sampling Nyquist limit");
            }
        }
    }
    Ok(())
}

fn run_sweep(config: &Path, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::from_path(config)?;
    if let Some(d) = output_dir {
        cfg.output.dir = d;
    }
    cfg.validate()?;
    let table = runner::sweep(&cfg)?;
    output::ensure_dir(&cfg.output.dir)?;
    let path = output::write_text(
        &cfg.output.dir,
        &format!("{}.sweep.csv", cfg.output.name),
        &output::sweep_csv(&table),
    )?;
    println!("sweep: {} ({} rows)", path.display(), table.rows.len());
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Result<bool, CliError> {
    let kind = ProbeKind::from(a.kind);
    let params = match kind {
        ProbeKind::Jc => presets::axial_jc(),
        ProbeKind::Qr => presets::axial_qr(),
        ProbeKind::Jt => presets::transverse_jt(),
    };
    let cutoff = a
        .cutoff
        .unwrap_or(if kind == ProbeKind::Jt { 6 } else { 20 });
    let space = HilbertSpace::new(vec![cutoff; kind.num_modes()])?;
    let mut pass = true;
    let defect = first_order_defect(&params, &space)?;
    pass &= defect <= 1e-9;
    println!("probe: {}", kind.name());
    println!("first-order defect (relative): {defect:.3e} (limit 1e-9)");
    let dc = double_commutator_norm(&params, &space)?;
    if kind == ProbeKind::Qr {
        pass &= dc <= 1e-10;
        println!("double commutator (relative): {dc:.3e} (limit 1e-10)");
    } else {
        println!("double commutator (relative): {dc:.3e}");
        if a.points < 2 || !(a.g_min > 0.0 && a.g_max > a.g_min) {
            return Err(CliError::Config(
                "need --points >= 2 and 0 < --g-min < --g-max".into(),
            ));
        }
        let (l0, l1) = (a.g_min.ln(), a.g_max.ln());
        let gs: Vec<f64> = (0..a.points)
            .map(|k| (l0 + (l1 - l0) * k as f64 / (a.points - 1) as f64).exp())
            .collect();
        let scaling = sw_scaling(&params, cutoff, &gs, a.third_order)?;
        for r in &scaling.reports {
            println!(
                "g = {:.4e} rad/s: residual {:.4e} J",
                r.g_value, r.residual_norm
            );
        }
        let expected = scaling.reports[0].predicted_order as f64;
        let slope = log_log_slope(
            &gs,
            &scaling
                .reports
                .iter()
                .map(|r| r.residual_norm)
                .collect::<Vec<_>>(),
        );
        pass &= (slope - expected).abs() <= 0.3;
        println!("residual slope: {slope:.3} (expected {expected} +/- 0.3)");
    }
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn run_reproduce(a: &ReproduceArgs) -> Result<(), CliError> {
    let figures: Vec<Figure> = if a.figure.eq_ignore_ascii_case("all") {
        Figure::ALL.to_vec()
    } else {
        vec![a.figure.parse::<Figure>()?]
    };
    let mut opts = FigureOptions::default();
    if let Some(c) = a.cutoff {
        opts.cutoff = c;
    }
    if let Some(c) = a.cutoff_2d {
        opts.cutoff_2d = c;
    }
    if let Some(p) = a.points {
        if p < 2 {
            return Err(CliError::Config("--points must be at least 2".into()));
        }
        opts.points = p;
    }
    if !a.omegas.is_empty() {
        opts.fig2_omegas = a.omegas.clone();
    }
    output::ensure_dir(&a.output_dir)?;
    for fig in figures {
        let data = reproduce(fig, &opts)?;
        let id = fig.id();
        let csv = output::write_text(
            &a.output_dir,
            &format!("{id}.csv"),
            &output::figure_csv(&data),
        )?;
        let mut meta = Table::new();
        meta.insert("figure".into(), Value::String(id.into()));
        meta.insert("x_label".into(), Value::String(data.x_label.clone()));
        meta.insert("y_label".into(), Value::String(data.y_label.clone()));
        meta.insert(
            "series".into(),
            Value::Array(
                data.series
                    .iter()
                    .map(|s| Value::String(s.name.clone()))
                    .collect(),
            ),
        );
        let mut m = Table::new();
        for (k, v) in &data.metadata {
            m.insert(k.clone(), Value::String(v.clone()));
        }
        meta.insert("values".into(), Value::Table(m));
        let text = toml::to_string(&meta).map_err(|e| CliError::Numerical(e.to_string()))?;
        output::write_text(&a.output_dir, &format!("{id}.meta.toml"), &text)?;
        let series: Vec<(&str, &[f64], &[f64])> = data
            .series
            .iter()
            .map(|s| (s.name.as_str(), s.x.as_slice(), s.y.as_slice()))
            .collect();
        let svg = output::svg_plot(id, &data.x_label, &data.y_label, &series);
        output::write_text(&a.output_dir, &format!("{id}.svg"), &svg)?;
        println!("{id}: {}", csv.display());
        for (k, v) in &data.metadata {
            println!("  {k} = {v}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, output_dir } => run_simulate(&config, output_dir).map(|_| true),
        Command::Sensitivity(a) => run_sensitivity(&a).map(|_| true),
        Command::Estimate { config, input, phi } => {
            run_estimate(&config, &input, &phi).map(|_| true)
        }
        Command::Sweep { config, output_dir } => run_sweep(&config, output_dir).map(|_| true),
        Command::VerifySw(a) => run_verify(&a),
        Command::Reproduce(a) => run_reproduce(&a).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
