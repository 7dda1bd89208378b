use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use exh::config::{parse_list, ModeChoice, RunConfig};
use exh::harness::{
    self, correlation_scan, hydrodynamic_experiment, hydrostatic_experiment, lattice_grid, ode_reference, pde_reference,
    preset, run_replicas_with, test_panel, ConvergenceReport, ExperimentSpec, HydrostaticSpec, ProfileRow,
};
use exh::output::{self, fmt17, CorrelationRow};
use exh::plot;
use exh_core::kmc::{EnsembleOptions, SamplerMode};
use exh_core::pde::{correlation_ode, fractional_generator_ode, regime_dispatch, robin_eigenvalues, MeanGenerator, PdeFamily};
use exh_core::stationary::{brute_force_stationary, macro_profile, phi_ss_field, rho_ss_profile};
use exh_core::{Error, InitialMeasure, JumpKernel, KernelChoice, Model, ModelParams};

/// Largest N for which simulate integrates the correlation equation.
const MAX_CORRELATION_ODE_N: usize = 128;
/// Largest N for which the exact stationary oracle is tabulated.
const MAX_ORACLE_N: usize = 10;

#[derive(Parser, Debug)]
#[command(name = "exh", version, about = "Exclusion process with reservoirs: simulation and verification")]
struct Cli {
    /// Run configuration (key = value with [sections]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    #[arg(long, global = true, env = "EXH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo ensemble with ODE/PDE references.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// auto, exact, thinning or lazy.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        max_events: Option<u64>,
        /// Also estimate pair correlations.
        #[arg(long)]
        correlations: bool,
    },
    /// Closed-form stationary profile (and the exact oracle for small N).
    Stationary {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Deterministic solutions at the lattice points.
    Pde {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Robin eigenvalues.
    Spectrum {
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Number of modes.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// Runs a verification suite and writes report.csv plus plots.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::Quick)]
        suite: Suite,
    },
    /// Prints which macroscopic equation applies in each θ range.
    Regimes {
        #[arg(long, default_value = "nn")]
        kernel: String,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// nn or lj.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct ScheduleArgs {
    /// Comma-separated macroscopic times.
    #[arg(long)]
    times: Option<String>,
    /// step, linear, constant or bump.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    left: Option<f64>,
    #[arg(long)]
    right: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Suite {
    Quick,
    Hydrodynamic,
    Hydrostatic,
    Correlations,
    All,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(Error),
    Io(std::io::Error),
    /// The suite ran but some comparison failed.
    Red(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::InvalidKernel(_) | Error::Unsupported(_) | Error::StateSpaceTooLarge { .. } => {
                Failure::Config(e.to_string())
            }
            other => Failure::Numerical(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    match run(&cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            let path = cfg.out.join("diagnostics.txt");
            let text = format!("error: {e}\ndebug: {e:?}\n\nresolved configuration:\n{}", cfg.to_text());
            let _ = fs::create_dir_all(&cfg.out).and_then(|_| fs::write(&path, text));
            eprintln!("numerical failure: {e} (details in {})", path.display());
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Red(k)) => {
            eprintln!("{k} comparison(s) failed");
            ExitCode::from(1)
        }
    }
}

/// Defaults, then the config file, then flags.
fn resolve(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    match &cli.command {
        Command::Simulate { model, schedule, mode, max_events, correlations } => {
            apply_model(&mut cfg, model)?;
            apply_schedule(&mut cfg, schedule)?;
            if let Some(m) = mode {
                cfg.mode = ModeChoice::parse(m)?;
            }
            if let Some(m) = max_events {
                cfg.max_events = *m;
            }
            cfg.correlations |= *correlations;
        }
        Command::Stationary { model } => apply_model(&mut cfg, model)?,
        Command::Pde { model, schedule } => {
            apply_model(&mut cfg, model)?;
            apply_schedule(&mut cfg, schedule)?;
        }
        Command::Spectrum { .. } | Command::Verify { .. } | Command::Regimes { .. } => {}
    }
    Ok(cfg)
}

fn apply_model(cfg: &mut RunConfig, m: &ModelArgs) -> Result<(), String> {
    if let Some(v) = m.n {
        cfg.n = v;
    }
    if let Some(v) = m.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = m.beta {
        cfg.beta = v;
    }
    if let Some(v) = m.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = m.theta {
        cfg.theta = v;
    }
    cfg.kernel = kernel_choice(m.kernel.as_deref(), m.gamma, cfg.kernel)?;
    Ok(())
}

fn kernel_choice(kind: Option<&str>, gamma: Option<f64>, current: KernelChoice) -> Result<KernelChoice, String> {
    match (kind, gamma) {
        (Some("nn"), _) => Ok(KernelChoice::NearestNeighbor),
        (Some("lj"), Some(g)) => Ok(KernelChoice::LongJump { gamma: g }),
        (Some("lj"), None) => match current {
            KernelChoice::LongJump { .. } => Ok(current),
            KernelChoice::NearestNeighbor => Err("--kernel lj needs --gamma".into()),
        },
        (Some(other), _) => Err(format!("unknown kernel `{other}` (expected nn or lj)")),
        (None, Some(g)) => match current {
            KernelChoice::LongJump { .. } => Ok(KernelChoice::LongJump { gamma: g }),
            KernelChoice::NearestNeighbor => Err("--gamma given for the nearest-neighbor kernel".into()),
        },
        (None, None) => Ok(current),
    }
}

fn apply_schedule(cfg: &mut RunConfig, s: &ScheduleArgs) -> Result<(), String> {
    if let Some(t) = &s.times {
        cfg.times = parse_list(t).map_err(|e| format!("--times: {e}"))?;
    }
    if let Some(p) = &s.profile {
        preset(p, 0.0, 1.0)?;
        cfg.profile = p.clone();
    }
    if let Some(v) = s.left {
        cfg.left = v;
    }
    if let Some(v) = s.right {
        cfg.right = v;
    }
    Ok(())
}

fn run(command: &Command, cfg: &RunConfig) -> Outcome {
    match command {
        Command::Regimes { kernel, gamma, kappa } => regimes(kernel, *gamma, *kappa),
        Command::Spectrum { kappa, n, tol } => {
            prepare(cfg)?;
            spectrum(cfg, *kappa, *n, *tol)
        }
        Command::Stationary { .. } => {
            prepare(cfg)?;
            stationary(cfg)
        }
        Command::Pde { .. } => {
            prepare(cfg)?;
            pde(cfg)
        }
        Command::Simulate { .. } => {
            prepare(cfg)?;
            simulate(cfg)
        }
        Command::Verify { suite } => {
            prepare(cfg)?;
            verify(cfg, *suite)
        }
    }
}

fn prepare(cfg: &RunConfig) -> Outcome {
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.resolved"), cfg.to_text())?;
    Ok(())
}

fn params(cfg: &RunConfig) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(cfg.n, cfg.alpha, cfg.beta, cfg.kappa, cfg.theta, cfg.kernel)?)
}

fn regimes(kind: &str, gamma: Option<f64>, kappa: f64) -> Outcome {
    let choice = kernel_choice(Some(kind), gamma, KernelChoice::NearestNeighbor).map_err(Failure::Config)?;
    let kernel = JumpKernel::build(choice, 1e-12)?;
    let rows: Vec<(String, f64)> = match choice {
        KernelChoice::NearestNeighbor => vec![("theta < 1".into(), 0.0), ("theta = 1".into(), 1.0), ("theta > 1".into(), 2.0)],
        KernelChoice::LongJump { gamma } if gamma > 2.0 => {
            let c = 1.0 - gamma;
            vec![
                (format!("theta < {c}"), c - 1.0),
                (format!("theta = {c}"), c),
                (format!("{c} < theta < 1"), 0.5 * (c + 1.0)),
                ("theta = 1".into(), 1.0),
                ("theta > 1".into(), 2.0),
            ]
        }
        KernelChoice::LongJump { .. } => {
            vec![("theta < -1".into(), -2.0), ("theta = -1".into(), -1.0), ("theta > -1".into(), 0.0)]
        }
    };
    println!("{:<20} {:<34} {:>10} {:>18}", "range", "equation", "diffusion", "time scale");
    let mut notes = Vec::new();
    for (range, theta) in rows {
        let r = regime_dispatch(&kernel, theta, kappa);
        let family = match &r.family {
            PdeFamily::HeatDirichlet => "heat, Dirichlet".to_string(),
            PdeFamily::HeatRobin { h } => format!("heat, Robin h={h:.6}"),
            PdeFamily::HeatNeumann => "heat, Neumann".to_string(),
            PdeFamily::Reaction => format!("reaction, kappa_hat={:.6}", r.kappa_hat),
            PdeFamily::ReactionDiffusion => format!("reaction-diffusion, kappa_hat={:.6}", r.kappa_hat),
            PdeFamily::FractionalReactionDiffusion => "fractional reaction-diffusion".to_string(),
            PdeFamily::Unsupported { reason } => {
                notes.push(format!("{range}: {reason}"));
                "unsupported".to_string()
            }
        };
        let time = match (&r.family, r.time_exponent) {
            (PdeFamily::Reaction, _) => "N^(gamma+theta+1)".to_string(),
            (_, Some(e)) => format!("N^{e}"),
            (_, None) => "-".into(),
        };
        println!("{range:<20} {family:<34} {:>10.6} {time:>18}", r.diffusion);
    }
    for n in notes {
        println!("note: {n}");
    }
    Ok(())
}

fn spectrum(cfg: &RunConfig, kappa: f64, n: usize, tol: f64) -> Outcome {
    let modes = robin_eigenvalues(kappa, n, tol)?;
    output::write_spectrum(&cfg.out.join("spectrum.csv"), &modes)?;
    println!("{:>4} {:>26} {:>26}", "n", "lambda", "residual");
    for (i, m) in modes.iter().enumerate() {
        println!("{:>4} {:>26} {:>26}", i + 1, fmt17(m.lambda), fmt17(m.residual));
    }
    Ok(())
}

fn stationary(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let model = Model::new(p.clone())?;
    let nn = p.kernel == KernelChoice::NearestNeighbor;
    let profile = if nn { rho_ss_profile(&p)? } else { MeanGenerator::new(&model).steady_state()? };
    let oracle = if p.n <= MAX_ORACLE_N { Some(brute_force_stationary(&model)?) } else { None };
    let grid = lattice_grid(p.n);
    let mut rows = Vec::new();
    println!("{:>6} {:>24} {:>24}", "x", "rho", "macro");
    for (i, (&q, &r)) in grid.iter().zip(&profile).enumerate() {
        let mac = if nn { macro_profile(q, p.theta, p.kappa, p.alpha, p.beta) } else { f64::NAN };
        println!("{:>6} {:>24} {:>24}", i + 1, fmt17(r), fmt17(mac));
        rows.push(vec![(i + 1) as f64, q, r, mac, oracle.as_ref().map_or(f64::NAN, |o| o.profile[i])]);
    }
    output::write_table(&cfg.out.join("stationary.csv"), &["x", "q", "rho", "rho_macro", "rho_oracle"], &rows)?;
    if nn {
        let phi = phi_ss_field(&p)?;
        let index = exh_core::pairs::PairIndex::new(p.n);
        let rows: Vec<Vec<f64>> = index
            .pairs()
            .enumerate()
            .map(|(k, (x, y))| vec![x as f64, y as f64, phi[k], oracle.as_ref().map_or(f64::NAN, |o| o.correlations[k])])
            .collect();
        output::write_table(&cfg.out.join("stationary_correlations.csv"), &["x", "y", "phi", "phi_oracle"], &rows)?;
    }
    if let Some(o) = &oracle {
        println!("oracle residual {:.3e}", o.residual);
    }
    fs::write(cfg.out.join("stationary.svg"), plot::stationary_figure(p.alpha, p.beta, &[0.5, 1.0, 2.0]))?;
    Ok(())
}

fn pde(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let model = Model::new(p.clone())?;
    let regime = regime_dispatch(&model.kernel, p.theta, p.kappa);
    let g = preset(&cfg.profile, cfg.left, cfg.right).map_err(Failure::Config)?;
    let grid = lattice_grid(p.n);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let fractional = regime.family == PdeFamily::FractionalReactionDiffusion;
    let frac = if fractional { Some(fractional_generator_ode(&model, &g, &cfg.times)?) } else { None };
    if let PdeFamily::Unsupported { reason } = &regime.family {
        return Err(Failure::Config(format!("no macroscopic equation for this regime: {reason}")));
    }
    for (k, &t) in cfg.times.iter().enumerate() {
        let v = match &frac {
            Some(f) => f[k].clone(),
            None => pde_reference(&regime, &p, &g, t)?.unwrap_or_default(),
        };
        for (&q, &r) in grid.iter().zip(&v) {
            rows.push(vec![t, q, r]);
        }
        series.push(plot::Series::line(&format!("t={t}"), grid.iter().copied().zip(v).collect()));
    }
    output::write_table(&cfg.out.join("pde.csv"), &["t", "q", "rho"], &rows)?;
    let label = if fractional { "fractional generator ODE" } else { "PDE solution" };
    fs::write(cfg.out.join("pde.svg"), plot::line_chart(label, "q", "rho", &series))?;
    println!("{label}: {} points x {} times written to {}", grid.len(), cfg.times.len(), cfg.out.display());
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Outcome {
    let p = params(cfg)?;
    let model = Model::new(p.clone())?;
    let regime = regime_dispatch(&model.kernel, p.theta, p.kappa);
    let g = preset(&cfg.profile, cfg.left, cfg.right).map_err(Failure::Config)?;
    let mode = match cfg.mode {
        ModeChoice::Auto => SamplerMode::auto(&model),
        ModeChoice::Fixed(m) => m,
    };
    let opts = EnsembleOptions { mode, master_seed: cfg.seed, max_events: cfg.max_events };
    let measure = InitialMeasure::BernoulliProduct(g.clone());
    let summary = run_replicas_with(&model, &measure, &cfg.times, cfg.replicas, opts, cfg.correlations)?;
    let estimates = summary.density.iter().map(|d| d.estimate()).collect::<exh_core::Result<Vec<_>>>()?;
    let ode = if regime.family == PdeFamily::FractionalReactionDiffusion {
        Some(fractional_generator_ode(&model, &g, &cfg.times)?)
    } else {
        ode_reference(&model, &g, &cfg.times)?
    };
    let pde: Vec<Option<Vec<f64>>> = cfg.times.iter().map(|&t| pde_reference(&regime, &p, &g, t)).collect::<exh_core::Result<_>>()?;
    let mut rows: Vec<ProfileRow> = Vec::new();
    for (k, &t) in cfg.times.iter().enumerate() {
        for x in 1..p.n {
            rows.push(ProfileRow {
                params: p.clone(),
                t,
                x,
                rho_mc: estimates[k].mean[x - 1],
                rho_stderr: estimates[k].stderr[x - 1],
                rho_ode: ode.as_ref().map(|o| o[k][x - 1]),
                rho_pde: pde[k].as_ref().map(|v| v[x - 1]),
            });
        }
    }
    output::write_profiles(&cfg.out.join("profiles.csv"), &rows)?;
    let panel = test_panel();
    let mut obs = Vec::new();
    for (k, &t) in cfg.times.iter().enumerate() {
        for (j, acc) in summary.pairings[k].iter().enumerate() {
            obs.push(vec![t, j as f64, acc.mean(), acc.stderr()]);
        }
    }
    output::write_table(&cfg.out.join("observables.csv"), &["t", "g_index", "pairing", "stderr"], &obs)?;
    let point = harness::PointResult {
        params: p.clone(),
        regime,
        estimates,
        ode,
        pde,
        report: ConvergenceReport::default(),
    };
    for (k, &t) in cfg.times.iter().enumerate() {
        fs::write(cfg.out.join(format!("profile_t{k}.svg")), plot::profile_overlay(&point, k, t))?;
    }
    if cfg.correlations {
        write_simulated_correlations(cfg, &model, &summary.correlations)?;
    }
    println!("{} replicas, N={}, mode {:?}; test functions {}", cfg.replicas, p.n, mode, panel.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "));
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn write_simulated_correlations(
    cfg: &RunConfig,
    model: &Model,
    accs: &[exh_core::observables::CorrelationAccumulator],
) -> Outcome {
    let n = model.params.n;
    let ode = if n <= MAX_CORRELATION_ODE_N && model.params.kernel == KernelChoice::NearestNeighbor {
        let g = preset(&cfg.profile, cfg.left, cfg.right).map_err(Failure::Config)?;
        let rho0 = g.on_lattice(n)?;
        let index = exh_core::pairs::PairIndex::new(n);
        Some(correlation_ode(model, &rho0, &vec![0.0; index.len()], &cfg.times)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for (k, &t) in cfg.times.iter().enumerate() {
        let est = accs[k].estimate()?;
        let mut grid = vec![vec![f64::NAN; n - 1]; n - 1];
        for (i, (x, y)) in est.index.pairs().enumerate() {
            grid[x - 1][y - 1] = est.phi[i];
            rows.push(CorrelationRow {
                t,
                x,
                y,
                phi_mc: est.phi[i],
                phi_stderr: est.stderr[i],
                phi_ode: ode.as_ref().map(|o| o.phi[k][i]),
            });
        }
        fs::write(cfg.out.join(format!("correlations_t{k}.svg")), plot::heatmap(&format!("phi_mc, t={t}"), &grid))?;
    }
    output::write_correlations(&cfg.out.join("correlations.csv"), &rows)?;
    Ok(())
}

fn nn_spec(name: &str, ns: Vec<usize>, replicas: u64, seed: u64) -> Result<ExperimentSpec, Failure> {
    let step = preset("step", 0.8, 0.2).map_err(Failure::Config)?;
    let mut spec = ExperimentSpec::new(name, KernelChoice::NearestNeighbor, ns, vec![0.0, 1.0, 2.0], step);
    spec.replicas = replicas;
    spec.seed = seed;
    Ok(spec)
}

fn verify(cfg: &RunConfig, suite: Suite) -> Outcome {
    let mut report = ConvergenceReport::default();
    let mut profiles = Vec::new();
    let mut run_hydro = |spec: ExperimentSpec, report: &mut ConvergenceReport| -> Outcome {
        let (r, points) = hydrodynamic_experiment(&spec)?;
        for p in &points {
            for (k, &t) in spec.times.iter().enumerate() {
                let name = format!("{}_{}_N{}_theta{}_t{k}.svg", spec.name, p.params.kernel.label(), p.params.n, p.params.theta);
                fs::write(cfg.out.join(name), plot::profile_overlay(p, k, t))?;
            }
            profiles.extend(p.profile_rows(&spec.times));
        }
        report.extend(r);
        Ok(())
    };
    let quick = suite == Suite::Quick;
    if quick || suite == Suite::All || suite == Suite::Hydrodynamic {
        let (ns, reps) = if quick { (vec![16, 32], cfg.replicas.min(64)) } else { (vec![64, 128, 256], cfg.replicas) };
        run_hydro(nn_spec("hydrodynamic", ns, reps, cfg.seed)?, &mut report)?;
    }
    if quick || suite == Suite::All || suite == Suite::Hydrostatic {
        let mut spec = HydrostaticSpec::new(if quick { 32 } else { 128 }, vec![0.0, 1.0, 2.0]);
        spec.seed = cfg.seed;
        let (r, points) = hydrostatic_experiment(&spec)?;
        let mut rows = Vec::new();
        for p in &points {
            for x in 1..p.params.n {
                rows.push(vec![p.params.theta, x as f64, p.estimate.mean[x - 1], p.estimate.stderr[x - 1], p.reference[x - 1]]);
            }
        }
        output::write_table(&cfg.out.join("hydrostatic.csv"), &["theta", "x", "rho_mc", "rho_stderr", "rho_ref"], &rows)?;
        report.extend(r);
    }
    if quick || suite == Suite::All || suite == Suite::Correlations {
        let ns: Vec<usize> = if quick { vec![32, 64, 128] } else { (5..=10).map(|k| 1usize << k).collect() };
        let spot = if quick { None } else { Some((1.0, 6, cfg.replicas.max(1000), cfg.seed)) };
        let table = correlation_scan(&[0.0, 1.0, 2.0], &ns, spot)?;
        output::write_scaling(&cfg.out.join("scaling.csv"), &table)?;
        print!("{table}");
        let p = ModelParams::nearest_neighbor(32, 0.0, 1.0, 1.0, 0.0)?;
        let phi = phi_ss_field(&p)?;
        let index = exh_core::pairs::PairIndex::new(32);
        let mut grid = vec![vec![f64::NAN; 31]; 31];
        for (k, (x, y)) in index.pairs().enumerate() {
            grid[x - 1][y - 1] = phi[k];
        }
        fs::write(cfg.out.join("correlations_stationary.svg"), plot::heatmap("phi_ss, N=32, theta=0", &grid))?;
    }
    fs::write(cfg.out.join("stationary.svg"), plot::stationary_figure(0.2, 0.8, &[0.5, 1.0, 2.0]))?;
    output::write_report(&cfg.out.join("report.csv"), &report.rows)?;
    if !profiles.is_empty() {
        output::write_profiles(&cfg.out.join("profiles.csv"), &profiles)?;
    }
    for n in &report.notices {
        println!("note: {n}");
    }
    for t in &report.trends {
        println!("trend {}: slope {:.3}, monotone {}", t.key, t.slope, t.monotone);
    }
    let failed = report.rows.iter().filter(|r| r.pass == Some(false)).count();
    println!("{} rows, {failed} failed; report in {}", report.rows.len(), Path::new(&cfg.out).join("report.csv").display());
    if failed > 0 {
        return Err(Failure::Red(failed));
    }
    Ok(())
}
