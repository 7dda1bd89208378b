//! End-to-end experiments: Monte Carlo ensembles against the discrete
//! Kolmogorov equations and the limiting PDEs.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;

use exh_core::kmc::{init_state, run_ensemble, EnsembleOptions, RngStream, SamplerMode, Simulator, SnapshotSchedule, DEFAULT_MAX_EVENTS};
use exh_core::linalg::solve_tridiagonal;
use exh_core::model::bump;
use exh_core::observables::{CorrelationAccumulator, DynkinProbe, DensityAccumulator, DensityEstimate, ScalarAccumulator};
use exh_core::pde::reaction::FdOptions;
use exh_core::pde::{
    heat_dirichlet_spectral, reaction_diffusion_fd, reaction_exact, regime_dispatch, robin_spectral_solution, MeanGenerator,
    PdeFamily, Regime,
};
use exh_core::stationary::{brute_force_stationary, macro_profile, phi_ss_field};
use exh_core::{Error, InitialMeasure, KernelChoice, LatticeState, Model, ModelParams, Profile, Result};

/// Replicas per parallel work unit. Fixed so that merges happen in the same
/// order whatever the thread count.
pub const CHUNK: u64 = 8;

/// Largest N for which the long-jump mean equation (dense) is solved.
pub const MAX_DENSE_ODE_N: usize = 256;

pub type TestFn = fn(f64) -> f64;

fn g_one(_: f64) -> f64 {
    1.0
}
fn g_id(q: f64) -> f64 {
    q
}
fn g_parabola(q: f64) -> f64 {
    q * (1.0 - q)
}
fn g_sine(q: f64) -> f64 {
    (std::f64::consts::PI * q).sin()
}
fn g_bump(q: f64) -> f64 {
    bump((q - 0.5) / 0.3)
}

/// Test functions for the pairings ⟨π, G⟩; the last one has compact support.
pub fn test_panel() -> Vec<(&'static str, TestFn)> {
    vec![("one", g_one), ("q", g_id), ("q(1-q)", g_parabola), ("sin(pi q)", g_sine), ("bump", g_bump)]
}

/// Named initial profiles: step (left on [0, ½)), linear, constant (left), bump.
pub fn preset(name: &str, left: f64, right: f64) -> std::result::Result<Profile, String> {
    match name {
        "step" => Ok(Profile::Step { left, right, at: 0.5 }),
        "linear" => Ok(Profile::Linear { left, right }),
        "constant" => Ok(Profile::Constant(left)),
        "bump" => Ok(Profile::Bump { base: left, height: right - left, center: 0.5, width: 0.25 }),
        other => Err(format!("unknown profile preset `{other}` (expected step, linear, constant or bump)")),
    }
}

/// Lattice points x/N, x ∈ Λ_N.
pub fn lattice_grid(n: usize) -> Vec<f64> {
    (1..n).map(|x| x as f64 / n as f64).collect()
}

/// Per-snapshot ensemble sums, mergeable in any grouping.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub density: Vec<DensityAccumulator>,
    /// pairings[snapshot][panel index]
    pub pairings: Vec<Vec<ScalarAccumulator>>,
    /// Empty unless requested.
    pub correlations: Vec<CorrelationAccumulator>,
}

impl EnsembleSummary {
    fn new(n: usize, snapshots: usize, panel: usize, correlations: bool) -> Self {
        EnsembleSummary {
            density: (0..snapshots).map(|_| DensityAccumulator::new(n)).collect(),
            pairings: vec![vec![ScalarAccumulator::default(); panel]; snapshots],
            correlations: if correlations { (0..snapshots).map(|_| CorrelationAccumulator::new(n)).collect() } else { Vec::new() },
        }
    }

    fn merge(&mut self, other: &EnsembleSummary) -> Result<()> {
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            a.merge(b)?;
        }
        for (a, b) in self.pairings.iter_mut().zip(&other.pairings) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.correlations.iter_mut().zip(&other.correlations) {
            a.merge(b)?;
        }
        Ok(())
    }
}

fn pairing(state: &LatticeState, g: TestFn) -> f64 {
    let n = state.n();
    let s: f64 = (1..n).filter(|&x| state.get(x) == 1).map(|x| g(x as f64 / n as f64)).sum();
    s / (n - 1) as f64
}

/// Runs `replicas` replicas in fixed chunks of [`CHUNK`] on the rayon pool and
/// merges them in chunk order.
pub fn run_replicas(
    model: &Model,
    measure: &InitialMeasure,
    times: &[f64],
    replicas: u64,
    seed: u64,
    mode: SamplerMode,
) -> Result<EnsembleSummary> {
    let opts = EnsembleOptions { mode, master_seed: seed, max_events: DEFAULT_MAX_EVENTS };
    run_replicas_with(model, measure, times, replicas, opts, false)
}

pub fn run_replicas_with(
    model: &Model,
    measure: &InitialMeasure,
    times: &[f64],
    replicas: u64,
    opts: EnsembleOptions,
    correlations: bool,
) -> Result<EnsembleSummary> {
    let schedule = SnapshotSchedule::new(times.to_vec())?;
    let panel = test_panel();
    let n = model.params.n;
    let chunks = replicas.div_ceil(CHUNK);
    let parts: Vec<Result<EnsembleSummary>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(replicas);
            let mut sum = EnsembleSummary::new(n, times.len(), panel.len(), correlations);
            run_ensemble(model, measure, &schedule, range, opts, &mut |k: usize, _r: u64, s: &LatticeState| {
                sum.density[k].add(s)?;
                for (acc, (_, g)) in sum.pairings[k].iter_mut().zip(&panel) {
                    acc.add(pairing(s, *g));
                }
                if let Some(c) = sum.correlations.get_mut(k) {
                    c.add(s)?;
                }
                Ok(())
            })?;
            Ok(sum)
        })
        .collect();
    let mut total = EnsembleSummary::new(n, times.len(), panel.len(), correlations);
    for p in parts {
        total.merge(&p?)?;
    }
    Ok(total)
}

/// Reference solution of the dispatched PDE at lattice points x/N, or `None`
/// when the regime has no continuum solver here.
pub fn pde_reference(regime: &Regime, params: &ModelParams, g: &Profile, t: f64) -> Result<Option<Vec<f64>>> {
    let grid = lattice_grid(params.n);
    let (a, b) = (params.alpha, params.beta);
    let tol = 1e-10;
    let v = match &regime.family {
        PdeFamily::HeatDirichlet => heat_dirichlet_spectral(g, a, b, regime.diffusion, t, &grid, tol)?.values,
        PdeFamily::HeatRobin { h } => robin_spectral_solution(g, *h, a, b, regime.diffusion, t, &grid, tol)?.values,
        PdeFamily::HeatNeumann => robin_spectral_solution(g, 0.0, a, b, regime.diffusion, t, &grid, tol)?.values,
        PdeFamily::Reaction => {
            let gamma = params.kernel.gamma().unwrap_or(f64::NAN);
            reaction_exact(g, regime.kappa_hat, gamma, a, b, t, &grid)?
        }
        PdeFamily::ReactionDiffusion => {
            let gamma = params.kernel.gamma().unwrap_or(f64::NAN);
            let cells = (4 * params.n).max(512);
            let sol = reaction_diffusion_fd(g, regime.sigma_hat, regime.kappa_hat, gamma, a, b, t, FdOptions { cells, max_dt: 1e-3 })?;
            grid.iter().map(|&q| interpolate(&sol.grid, &sol.values, q)).collect()
        }
        PdeFamily::FractionalReactionDiffusion | PdeFamily::Unsupported { .. } => return Ok(None),
    };
    Ok(Some(v))
}

fn interpolate(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    let i = xs.partition_point(|&x| x < q);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let w = (q - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}

/// Mean profile from the discrete equation, when it is affordable.
pub fn ode_reference(model: &Model, g: &Profile, times: &[f64]) -> Result<Option<Vec<Vec<f64>>>> {
    if model.params.kernel != KernelChoice::NearestNeighbor && model.params.n > MAX_DENSE_ODE_N {
        return Ok(None);
    }
    MeanGenerator::new(model).evolve(&g.on_lattice(model.params.n)?, times).map(Some)
}

/// One comparison between a Monte Carlo quantity and a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub value: f64,
    pub stderr: f64,
    pub tol: f64,
}

impl Comparison {
    /// |MC − ref| ≤ max(tol, 3·stderr).
    pub fn pass(&self) -> bool {
        self.value <= self.tol.max(3.0 * self.stderr)
    }
}

/// Sup over `cells` macroscopic cells of the cell-averaged difference; the
/// returned stderr belongs to the worst cell. A cell passes iff its own
/// difference is within max(tol, 3·stderr).
pub fn sup_grid(est: &DensityEstimate, reference: &[f64], cells: usize, tol: f64) -> (Comparison, bool) {
    let n = est.mean.len() + 1;
    let mut worst = Comparison { value: 0.0, stderr: 0.0, tol };
    let mut all = true;
    for k in 0..cells {
        let sites: Vec<usize> = (1..n).filter(|&x| ((x as f64 / n as f64) * cells as f64) as usize == k).collect();
        if sites.is_empty() {
            continue;
        }
        let m = sites.len() as f64;
        let diff = sites.iter().map(|&x| est.mean[x - 1] - reference[x - 1]).sum::<f64>() / m;
        let se = sites.iter().map(|&x| est.stderr[x - 1].powi(2)).sum::<f64>().sqrt() / m;
        let c = Comparison { value: diff.abs(), stderr: se, tol };
        all &= c.pass();
        if c.value > worst.value {
            worst = c;
        }
    }
    (worst, all)
}

/// Root mean square over lattice points.
pub fn l2_grid(est: &DensityEstimate, reference: &[f64], tol: f64) -> Comparison {
    let m = est.mean.len() as f64;
    let v = (est.mean.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / m).sqrt();
    let se = (est.stderr.iter().map(|s| s * s).sum::<f64>() / m).sqrt();
    Comparison { value: v, stderr: se, tol }
}

pub fn param_hash(p: &ModelParams) -> String {
    let mut h = DefaultHasher::new();
    format!("{p:?}").hash(&mut h);
    format!("{:016x}", h.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub param_hash: String,
    pub n: usize,
    pub theta: f64,
    pub t: f64,
    pub norm: String,
    pub value: f64,
    pub stderr: f64,
    pub tol: f64,
    /// `None` for exploratory rows without a reference.
    pub pass: Option<bool>,
    pub seed: u64,
    pub replicas: u64,
}

/// d_N for one (experiment, θ, t, norm) across the N values.
#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    pub key: String,
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Least-squares slope of log d_N against log N.
    pub slope: f64,
    /// d_N non-increasing within 3 combined standard errors.
    pub monotone: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub trends: Vec<Trend>,
    pub notices: Vec<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn extend(&mut self, other: ConvergenceReport) {
        self.rows.extend(other.rows);
        self.trends.extend(other.trends);
        self.notices.extend(other.notices);
    }

    fn build_trends(&mut self) {
        let mut keys: Vec<(String, f64, f64, String)> = Vec::new();
        for r in &self.rows {
            let k = (r.experiment.clone(), r.theta, r.t, r.norm.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        for (exp, theta, t, norm) in keys {
            let mut pts: Vec<&ReportRow> = self
                .rows
                .iter()
                .filter(|r| r.experiment == exp && r.theta == theta && r.t == t && r.norm == norm)
                .collect();
            if pts.len() < 2 {
                continue;
            }
            pts.sort_by_key(|r| r.n);
            let ns: Vec<usize> = pts.iter().map(|r| r.n).collect();
            let values: Vec<f64> = pts.iter().map(|r| r.value).collect();
            let stderrs: Vec<f64> = pts.iter().map(|r| r.stderr).collect();
            let monotone = (1..values.len()).all(|i| values[i] <= values[i - 1] + 3.0 * stderrs[i].hypot(stderrs[i - 1]));
            let slope = fit_slope(&ns.iter().map(|&n| n as f64).collect::<Vec<_>>(), &values);
            self.trends.push(Trend { key: format!("{exp} theta={theta} t={t} {norm}"), ns, values, stderrs, slope, monotone });
        }
    }
}

/// Least-squares slope of log y against log x (non-positive y are skipped).
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Profile rows for profiles.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub params: ModelParams,
    pub t: f64,
    pub x: usize,
    pub rho_mc: f64,
    pub rho_stderr: f64,
    pub rho_ode: Option<f64>,
    pub rho_pde: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub kernels: Vec<KernelChoice>,
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub initial: Profile,
    pub times: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
    /// Macroscopic cells of the sup-grid norm.
    pub cells: usize,
    pub sup_tol: f64,
    pub pairing_tol: f64,
    /// Run (kernel, θ) points without an identified limit, with no reference.
    pub exploratory: bool,
    pub mode: Option<SamplerMode>,
}

impl ExperimentSpec {
    pub fn new(name: &str, kernel: KernelChoice, ns: Vec<usize>, thetas: Vec<f64>, initial: Profile) -> Self {
        ExperimentSpec {
            name: name.into(),
            kernels: vec![kernel],
            ns,
            thetas,
            kappas: vec![1.0],
            alpha: 0.2,
            beta: 0.8,
            initial,
            times: vec![0.05],
            replicas: 200,
            seed: 1,
            cells: 16,
            sup_tol: 0.05,
            pairing_tol: 0.02,
            exploratory: false,
            mode: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.thetas.is_empty() || self.kappas.is_empty() || self.kernels.is_empty() {
            return Err(Error::InvalidParams("experiment grid is empty".into()));
        }
        if self.replicas < 2 {
            return Err(Error::InvalidParams("at least two replicas are needed for a standard error".into()));
        }
        if self.cells == 0 {
            return Err(Error::InvalidParams("sup-grid needs at least one cell".into()));
        }
        SnapshotSchedule::new(self.times.clone()).map(|_| ())
    }
}

/// Everything measured at one grid point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub params: ModelParams,
    pub regime: Regime,
    pub estimates: Vec<DensityEstimate>,
    pub ode: Option<Vec<Vec<f64>>>,
    pub pde: Vec<Option<Vec<f64>>>,
    pub report: ConvergenceReport,
}

impl PointResult {
    pub fn profile_rows(&self, times: &[f64]) -> Vec<ProfileRow> {
        let mut rows = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let est = &self.estimates[k];
            for x in 1..self.params.n {
                rows.push(ProfileRow {
                    params: self.params.clone(),
                    t,
                    x,
                    rho_mc: est.mean[x - 1],
                    rho_stderr: est.stderr[x - 1],
                    rho_ode: self.ode.as_ref().map(|o| o[k][x - 1]),
                    rho_pde: self.pde[k].as_ref().map(|p| p[x - 1]),
                });
            }
        }
        rows
    }
}

fn run_point(spec: &ExperimentSpec, kernel: KernelChoice, kappa: f64, theta: f64, n: usize) -> Result<Option<PointResult>> {
    let probe = exh_core::JumpKernel::build(kernel, 1e-12)?;
    let regime = regime_dispatch(&probe, theta, kappa);
    let unsupported = matches!(regime.family, PdeFamily::Unsupported { .. });
    if unsupported && !spec.exploratory {
        return Ok(None);
    }
    let params = if unsupported {
        ModelParams::exploratory(n, spec.alpha, spec.beta, kappa, theta, kernel)?
    } else {
        ModelParams::new(n, spec.alpha, spec.beta, kappa, theta, kernel)?
    };
    let model = Model::with_kernel(params.clone(), probe);
    let mode = spec.mode.unwrap_or_else(|| SamplerMode::auto(&model));
    let measure = InitialMeasure::BernoulliProduct(spec.initial.clone());
    let summary = run_replicas(&model, &measure, &spec.times, spec.replicas, spec.seed, mode)?;
    let estimates: Vec<DensityEstimate> = summary.density.iter().map(|d| d.estimate()).collect::<Result<_>>()?;
    let ode = if unsupported { None } else { ode_reference(&model, &spec.initial, &spec.times)? };
    let pde: Vec<Option<Vec<f64>>> = if unsupported {
        vec![None; spec.times.len()]
    } else {
        spec.times.iter().map(|&t| pde_reference(&regime, &params, &spec.initial, t)).collect::<Result<_>>()?
    };
    let mut report = ConvergenceReport::default();
    let hash = param_hash(&params);
    let row = |norm: &str, c: Option<Comparison>, t: f64, pass: Option<bool>| ReportRow {
        experiment: spec.name.clone(),
        param_hash: hash.clone(),
        n,
        theta,
        t,
        norm: norm.into(),
        value: c.map_or(f64::NAN, |c| c.value),
        stderr: c.map_or(f64::NAN, |c| c.stderr),
        tol: c.map_or(f64::NAN, |c| c.tol),
        pass,
        seed: spec.seed,
        replicas: spec.replicas,
    };
    if unsupported {
        report.notices.push(format!("{}: {} θ={theta} N={n} is exploratory (no reference)", spec.name, kernel.label()));
    }
    let panel = test_panel();
    for (k, &t) in spec.times.iter().enumerate() {
        let est = &estimates[k];
        // continuum reference for N-convergence; the discrete equation otherwise
        let (reference, tag) = match (&pde[k], &ode) {
            (Some(p), _) => (Some(p.clone()), "pde"),
            (None, Some(o)) => (Some(o[k].clone()), "ode"),
            _ => (None, ""),
        };
        let Some(reference) = reference else {
            let pairs = &summary.pairings[k];
            for ((name, _), acc) in panel.iter().zip(pairs) {
                let c = Comparison { value: acc.mean(), stderr: acc.stderr(), tol: f64::NAN };
                report.rows.push(row(&format!("pairing[{name}] (value)"), Some(c), t, None));
            }
            continue;
        };
        let (sup, ok) = sup_grid(est, &reference, spec.cells, spec.sup_tol);
        report.rows.push(row(&format!("sup-grid/{tag}"), Some(sup), t, Some(ok)));
        let l2 = l2_grid(est, &reference, spec.sup_tol);
        report.rows.push(row(&format!("l2-grid/{tag}"), Some(l2), t, Some(l2.pass())));
        let grid = lattice_grid(n);
        for ((name, g), acc) in panel.iter().zip(&summary.pairings[k]) {
            let refv: f64 = grid.iter().zip(&reference).map(|(&q, r)| g(q) * r).sum::<f64>() / (n - 1) as f64;
            let c = Comparison { value: (acc.mean() - refv).abs(), stderr: acc.stderr(), tol: spec.pairing_tol };
            report.rows.push(row(&format!("pairing[{name}]/{tag}"), Some(c), t, Some(c.pass())));
        }
    }
    Ok(Some(PointResult { params, regime, estimates, ode, pde, report }))
}

/// Runs every grid point (in parallel) and assembles the report in grid order.
pub fn hydrodynamic_experiment(spec: &ExperimentSpec) -> Result<(ConvergenceReport, Vec<PointResult>)> {
    spec.validate()?;
    let mut points = Vec::new();
    for &k in &spec.kernels {
        for &kappa in &spec.kappas {
            for &theta in &spec.thetas {
                for &n in &spec.ns {
                    points.push((k, kappa, theta, n));
                }
            }
        }
    }
    let results: Vec<Result<Option<PointResult>>> =
        points.par_iter().map(|&(k, kappa, theta, n)| run_point(spec, k, kappa, theta, n)).collect();
    let mut report = ConvergenceReport::default();
    let mut out = Vec::new();
    for ((k, _, theta, n), r) in points.into_iter().zip(results) {
        match r? {
            Some(p) => {
                report.extend(p.report.clone());
                out.push(p);
            }
            None => report.notices.push(format!("{}: {} θ={theta} N={n} skipped: regime unsupported", spec.name, k.label())),
        }
    }
    report.build_trends();
    Ok((report, out))
}

#[derive(Debug, Clone)]
pub struct HydrostaticSpec {
    pub n: usize,
    pub thetas: Vec<f64>,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub replicas: u64,
    pub seed: u64,
    /// Snapshots per replica after burn-in, `spacing` apart.
    pub samples: usize,
    pub spacing: f64,
    /// Longest burn-in; beyond it the discrete equation must show the mean
    /// has settled, otherwise the row is flagged inconclusive.
    pub max_burn_in: f64,
    pub cells: usize,
    pub tol: f64,
}

impl HydrostaticSpec {
    pub fn new(n: usize, thetas: Vec<f64>) -> Self {
        HydrostaticSpec {
            n,
            thetas,
            kappa: 1.0,
            alpha: 0.2,
            beta: 0.8,
            replicas: 64,
            seed: 1,
            samples: 20,
            spacing: 0.05,
            max_burn_in: 2.0,
            cells: 16,
            tol: 0.03,
        }
    }
}

/// Smallest eigenvalue of −A for the (symmetric, tridiagonal) NN mean
/// generator, by inverse iteration.
pub fn spectral_gap(model: &Model) -> Result<f64> {
    let gen = MeanGenerator::new(model);
    let a = gen.to_dense();
    let m = gen.dim();
    let lower: Vec<f64> = (0..m).map(|i| if i > 0 { -a[(i, i - 1)] } else { 0.0 }).collect();
    let upper: Vec<f64> = (0..m).map(|i| if i + 1 < m { -a[(i, i + 1)] } else { 0.0 }).collect();
    let diag: Vec<f64> = (0..m).map(|i| -a[(i, i)]).collect();
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * (i as f64).sin()).collect();
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = solve_tridiagonal(&lower, &diag, &upper, &v)?;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let av: Vec<f64> = (0..m)
            .map(|i| {
                let mut s = diag[i] * next[i];
                if i > 0 {
                    s += lower[i] * next[i - 1];
                }
                if i + 1 < m {
                    s += upper[i] * next[i + 1];
                }
                s
            })
            .collect();
        let l: f64 = av.iter().zip(&next).map(|(a, b)| a * b).sum();
        let done = (l - lambda).abs() <= 1e-12 * l.abs();
        lambda = l;
        v = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}

#[derive(Debug, Clone)]
pub struct HydrostaticPoint {
    pub params: ModelParams,
    pub burn_in: f64,
    pub estimate: DensityEstimate,
    pub reference: Vec<f64>,
    pub inconclusive: bool,
}

/// Samples the stationary state (burn-in from the product measure with the
/// macroscopic profile, or the exact chain for N ≤ 6) and compares with ρ̄.
pub fn hydrostatic_experiment(spec: &HydrostaticSpec) -> Result<(ConvergenceReport, Vec<HydrostaticPoint>)> {
    let results: Vec<Result<(ConvergenceReport, HydrostaticPoint)>> =
        spec.thetas.par_iter().map(|&theta| hydrostatic_point(spec, theta)).collect();
    let mut report = ConvergenceReport::default();
    let mut points = Vec::new();
    for r in results {
        let (rep, p) = r?;
        report.extend(rep);
        points.push(p);
    }
    Ok((report, points))
}

fn hydrostatic_point(spec: &HydrostaticSpec, theta: f64) -> Result<(ConvergenceReport, HydrostaticPoint)> {
    let n = spec.n;
    let params = ModelParams::nearest_neighbor(n, spec.alpha, spec.beta, spec.kappa, theta)?;
    let model = Model::new(params.clone())?;
    let grid = lattice_grid(n);
    let rho_bar: Vec<f64> = grid.iter().map(|&q| macro_profile(q, theta, spec.kappa, spec.alpha, spec.beta)).collect();
    let mut report = ConvergenceReport::default();
    let mut inconclusive = false;
    let (estimate, burn_in) = if n <= 6 {
        let o = brute_force_stationary(&model)?;
        (DensityEstimate { mean: o.profile, stderr: vec![0.0; n - 1], replicas: 0 }, 0.0)
    } else {
        let gap = spectral_gap(&model)?;
        let mut burn = 10.0 / gap;
        if burn > spec.max_burn_in {
            burn = spec.max_burn_in;
            let ode = MeanGenerator::new(&model);
            let settled = ode.evolve(&rho_bar, &[burn])?;
            let ss = ode.steady_state()?;
            let dev = settled[0].iter().zip(&ss).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if dev > 0.1 * spec.tol {
                inconclusive = true;
                report.notices.push(format!("hydrostatic θ={theta}: burn-in capped at {burn} leaves mean deviation {dev:.3e}"));
            }
        }
        let times: Vec<f64> = (0..spec.samples).map(|k| burn + k as f64 * spec.spacing).collect();
        let (est, drift) = time_averaged_profile(&model, &rho_bar, &times, spec)?;
        if drift {
            inconclusive = true;
            report.notices.push(format!("hydrostatic θ={theta}: profile drift between the two halves of the sampling window"));
        }
        (est, burn)
    };
    let (sup, ok) = sup_grid(&estimate, &rho_bar, spec.cells, spec.tol);
    let hash = param_hash(&params);
    let pass = if inconclusive { None } else { Some(ok) };
    report.rows.push(ReportRow {
        experiment: "hydrostatic".into(),
        param_hash: hash.clone(),
        n,
        theta,
        t: f64::INFINITY,
        norm: "sup-grid/stat".into(),
        value: sup.value,
        stderr: sup.stderr,
        tol: sup.tol,
        pass,
        seed: spec.seed,
        replicas: spec.replicas,
    });
    let closed = exh_core::stationary::rho_ss_profile(&params)?;
    let gap = closed.iter().zip(&rho_bar).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    report.rows.push(ReportRow {
        experiment: "hydrostatic".into(),
        param_hash: hash,
        n,
        theta,
        t: f64::INFINITY,
        norm: "closed-form-gap".into(),
        value: gap,
        stderr: 0.0,
        tol: spec.tol,
        pass: Some(gap <= spec.tol),
        seed: spec.seed,
        replicas: 0,
    });
    Ok((report, HydrostaticPoint { params, burn_in, estimate, reference: rho_bar, inconclusive }))
}

/// Replica means of the time-averaged occupations, and whether the first and
/// second halves of the window disagree beyond 4 standard errors.
fn time_averaged_profile(model: &Model, start: &[f64], times: &[f64], spec: &HydrostaticSpec) -> Result<(DensityEstimate, bool)> {
    let n = model.params.n;
    let start = start.to_vec();
    let g = Profile::custom(move |q| start[((q * n as f64).round() as usize).clamp(1, n - 1) - 1]);
    let measure = InitialMeasure::BernoulliProduct(g);
    let schedule = SnapshotSchedule::new(times.to_vec())?;
    let half = times.len() / 2;
    let chunks = spec.replicas.div_ceil(CHUNK);
    type Acc = (Vec<ScalarAccumulator>, Vec<ScalarAccumulator>);
    let parts: Vec<Result<Acc>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(spec.replicas);
            let mut full = vec![ScalarAccumulator::default(); n - 1];
            let mut diff = vec![ScalarAccumulator::default(); n - 1];
            let mut cur = vec![0.0; n - 1];
            let mut first = vec![0.0; n - 1];
            let opts = EnsembleOptions { mode: SamplerMode::ExactTable, master_seed: spec.seed, max_events: DEFAULT_MAX_EVENTS };
            let last = times.len() - 1;
            run_ensemble(model, &measure, &schedule, range, opts, &mut |k: usize, _r: u64, s: &LatticeState| {
                for x in 1..n {
                    cur[x - 1] += s.get(x) as f64;
                }
                if k + 1 == half {
                    first.copy_from_slice(&cur);
                }
                if k == last {
                    let m2 = (times.len() - half) as f64;
                    for i in 0..n - 1 {
                        full[i].add(cur[i] / times.len() as f64);
                        diff[i].add(first[i] / half as f64 - (cur[i] - first[i]) / m2);
                    }
                    cur.iter_mut().for_each(|v| *v = 0.0);
                }
                Ok(())
            })?;
            Ok((full, diff))
        })
        .collect();
    let mut full = vec![ScalarAccumulator::default(); n - 1];
    let mut diff = vec![ScalarAccumulator::default(); n - 1];
    for p in parts {
        let (f, d) = p?;
        for i in 0..n - 1 {
            full[i].merge(&f[i]);
            diff[i].merge(&d[i]);
        }
    }
    let est = DensityEstimate {
        mean: full.iter().map(|a| a.mean()).collect(),
        stderr: full.iter().map(|a| a.stderr()).collect(),
        replicas: spec.replicas,
    };
    let halves = DensityEstimate {
        mean: diff.iter().map(|a| a.mean()).collect(),
        stderr: diff.iter().map(|a| a.stderr()).collect(),
        replicas: spec.replicas,
    };
    let (worst, _) = sup_grid(&halves, &vec![0.0; n - 1], spec.cells, 0.0);
    Ok((est, worst.value > 4.0 * worst.stderr && worst.stderr > 0.0))
}

/// (M_t, ∫₀ᵗ Γ_s ds) per replica for the Dynkin martingale of `g`, in replica order.
pub fn martingale_samples(
    model: &Model,
    g: TestFn,
    measure: &InitialMeasure,
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let chunks = replicas.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<(f64, f64)>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::new();
            for r in c * CHUNK..((c + 1) * CHUNK).min(replicas) {
                let stream = RngStream::new(seed, r);
                let mut rng = stream.rng();
                rng.set_word_pos(1u128 << 60);
                let state = init_state(measure, model.params.n, &mut rng)?;
                let mut probe = DynkinProbe::new(model, g, &state)?;
                let mut sim = Simulator::new(model, SamplerMode::ExactTable, state, stream)?;
                sim.advance_to(t, &mut probe)?;
                out.push((probe.martingale(), probe.quadratic_variation()));
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(replicas as usize);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub theta: f64,
    pub n: usize,
    pub max_abs_phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotCheck {
    pub theta: f64,
    pub n: usize,
    pub replicas: u64,
    /// max over pairs of |φ_mc − φ_ss|/stderr.
    pub max_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// (θ, fitted exponent of max|φ_ss| in N)
    pub fits: Vec<(f64, f64)>,
    pub spot: Option<SpotCheck>,
}

impl fmt::Display for ScalingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>6} {:>14}", "theta", "N", "max|phi_ss|")?;
        for r in &self.rows {
            writeln!(f, "{:>6} {:>6} {:>14.6e}", r.theta, r.n, r.max_abs_phi)?;
        }
        for (t, s) in &self.fits {
            writeln!(f, "theta={t}: fitted exponent {s:.4}")?;
        }
        if let Some(s) = &self.spot {
            writeln!(f, "MC spot check theta={} N={} replicas={}: max |z| = {:.3}", s.theta, s.n, s.replicas, s.max_z)?;
        }
        Ok(())
    }
}

/// max|φ_ss| over V_N for each (θ, N) with α=0, β=1, κ=1, plus fitted
/// exponents. `spot` = (θ, N, replicas, seed) runs a Monte Carlo check of the
/// correlations from an exact stationary sample (N ≤ 10).
pub fn correlation_scan(thetas: &[f64], ns: &[usize], spot: Option<(f64, usize, u64, u64)>) -> Result<ScalingTable> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &theta in thetas {
        let mut vals = Vec::new();
        for &n in ns {
            let p = ModelParams::nearest_neighbor(n, 0.0, 1.0, 1.0, theta)?;
            let m = phi_ss_field(&p)?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            rows.push(ScalingRow { theta, n, max_abs_phi: m });
            vals.push(m);
        }
        fits.push((theta, fit_slope(&ns.iter().map(|&n| n as f64).collect::<Vec<_>>(), &vals)));
    }
    let spot = match spot {
        Some((theta, n, replicas, seed)) => Some(correlation_spot_check(theta, n, replicas, seed)?),
        None => None,
    };
    Ok(ScalingTable { rows, fits, spot })
}

fn correlation_spot_check(theta: f64, n: usize, replicas: u64, seed: u64) -> Result<SpotCheck> {
    let p = ModelParams::nearest_neighbor(n, 0.0, 1.0, 1.0, theta)?;
    let model = Model::new(p.clone())?;
    let dist = brute_force_stationary(&model)?.distribution;
    let schedule = SnapshotSchedule::new(vec![0.1])?;
    let chunks = replicas.div_ceil(CHUNK);
    let parts: Vec<Result<CorrelationAccumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = CorrelationAccumulator::new(n);
            let opts = EnsembleOptions { mode: SamplerMode::ExactTable, master_seed: seed, max_events: DEFAULT_MAX_EVENTS };
            let range = c * CHUNK..((c + 1) * CHUNK).min(replicas);
            run_ensemble(&model, &InitialMeasure::StationarySample(dist.clone()), &schedule, range, opts, &mut |_, _, s: &LatticeState| acc.add(s))?;
            Ok(acc)
        })
        .collect();
    let mut acc = CorrelationAccumulator::new(n);
    for part in parts {
        acc.merge(&part?)?;
    }
    let est = acc.estimate()?;
    let exact = phi_ss_field(&p)?;
    let max_z = est.phi.iter().zip(&est.stderr).zip(&exact).map(|((m, s), e)| (m - e).abs() / s).fold(0.0, f64::max);
    Ok(SpotCheck { theta, n, replicas, max_z })
}
