//! One test per acceptance criterion. Each prints a PASS/FAIL line with the
//! measured quantity and the pinned tolerance before asserting.

use exh::harness::{
    correlation_scan, hydrodynamic_experiment, hydrostatic_experiment, lattice_grid, martingale_samples, preset, run_replicas,
    ExperimentSpec, HydrostaticSpec, TestFn,
};
use exh_core::kmc::SamplerMode;
use exh_core::model::detailed_balance_check;
use exh_core::observables::DensityEstimate;
use exh_core::pde::fractional::TestFunction;
use exh_core::pde::{
    correlation_steady_state, discrete_profile_ode, fractional_generator_ode, fractional_laplacian_check, kernel_laplacian_check,
    reaction_exact, regime_dispatch, robin_eigenvalues, MeanGenerator, PdeFamily,
};
use exh_core::stationary::{brute_force_stationary, phi_ss, phi_ss_field, rho_ss_profile};
use exh_core::{InitialMeasure, JumpKernel, KernelChoice, Model, ModelParams, Profile};

const SEED: u64 = 1;
const LJ3: KernelChoice = KernelChoice::LongJump { gamma: 3.0 };
const LJ15: KernelChoice = KernelChoice::LongJump { gamma: 1.5 };

fn verdict(id: u32, ok: bool, detail: &str) -> bool {
    println!("criterion {id:>2} {}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Cell averages over `cells` macroscopic cells restricted to [lo, hi]:
/// (worst |diff|/stderr, number of cells).
fn cell_z(est: &DensityEstimate, reference: &[f64], cells: usize, lo: f64, hi: f64) -> (f64, usize) {
    let n = est.mean.len() + 1;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 0..cells {
        let (a, b) = (k as f64 / cells as f64, (k + 1) as f64 / cells as f64);
        if a < lo - 1e-12 || b > hi + 1e-12 {
            continue;
        }
        let sites: Vec<usize> = (1..n).filter(|&x| ((x as f64 / n as f64) * cells as f64) as usize == k).collect();
        let m = sites.len() as f64;
        let diff = sites.iter().map(|&x| est.mean[x - 1] - reference[x - 1]).sum::<f64>() / m;
        let se = sites.iter().map(|&x| est.stderr[x - 1].powi(2)).sum::<f64>().sqrt() / m;
        worst = worst.max(diff.abs() / se);
        count += 1;
    }
    (worst, count)
}

#[test]
fn c01_reversibility() {
    let mut worst: f64 = 0.0;
    for rho in [0.3, 0.5, 0.7] {
        for n in [3, 4, 5] {
            for theta in [-1.0, 0.0, 1.0, 2.0] {
                for kernel in [KernelChoice::NearestNeighbor, LJ3] {
                    let m = Model::new(ModelParams::new(n, rho, rho, 1.0, theta, kernel).unwrap()).unwrap();
                    worst = worst.max(detailed_balance_check(&m).unwrap());
                }
            }
        }
    }
    assert!(verdict(1, worst <= 1e-12, &format!("max detailed-balance violation {worst:.3e} (tol 1e-12)")));
}

#[test]
fn c02_closed_forms_match_exact_oracle() {
    let mut worst: f64 = 0.0;
    for n in [3, 4, 5] {
        for theta in [0.0, 1.0, 2.0] {
            let p = ModelParams::nearest_neighbor(n, 0.0, 1.0, 1.0, theta).unwrap();
            let o = brute_force_stationary(&Model::new(p.clone()).unwrap()).unwrap();
            worst = worst.max(max_abs_diff(&o.profile, &rho_ss_profile(&p).unwrap()));
            worst = worst.max(max_abs_diff(&o.correlations, &phi_ss_field(&p).unwrap()));
        }
    }
    let p4 = ModelParams::nearest_neighbor(4, 0.0, 1.0, 1.0, 0.0).unwrap();
    let phi12 = phi_ss(1, 2, &p4).unwrap();
    let ok = worst <= 1e-10 && (phi12 + 1.0 / 24.0).abs() <= 1e-12;
    assert!(verdict(2, ok, &format!("max |oracle - closed form| {worst:.3e} (tol 1e-10); phi_ss(1,2) at N=4 = {phi12:.15}")));
}

#[test]
fn c03_fixed_points() {
    let (mut mean_res, mut corr_err): (f64, f64) = (0.0, 0.0);
    for n in [4, 16, 64, 128] {
        for theta in [0.0, 1.0, 2.0] {
            for kappa in [1.0, 2.5] {
                let p = ModelParams::nearest_neighbor(n, 0.2, 0.8, kappa, theta).unwrap();
                let m = Model::new(p.clone()).unwrap();
                let rho = rho_ss_profile(&p).unwrap();
                let r = MeanGenerator::new(&m).apply(&rho);
                mean_res = mean_res.max(r.iter().fold(0.0, |a, v| a.max(v.abs())));
                // the closed-form correlations exist for κ = 1 only
                if kappa == 1.0 {
                    corr_err = corr_err.max(max_abs_diff(&correlation_steady_state(&m).unwrap(), &phi_ss_field(&p).unwrap()));
                }
            }
        }
    }
    let ok = mean_res <= 1e-10 && corr_err <= 1e-10;
    assert!(verdict(3, ok, &format!("sup |N^2 B(a x + b)| {mean_res:.3e}, sup |phi_cg - phi_ss| {corr_err:.3e} (tol 1e-10)")));
}

#[test]
fn c04_monte_carlo_matches_mean_evolution() {
    let times = [0.02, 0.1];
    let g = preset("step", 0.8, 0.2).unwrap();
    let (mut total, mut within2, mut within3) = (0usize, 0usize, 0usize);
    let mut worst_z: f64 = 0.0;
    for theta in [0.0, 1.0, 2.0] {
        let m = Model::new(ModelParams::nearest_neighbor(32, 0.2, 0.8, 1.0, theta).unwrap()).unwrap();
        let ode = discrete_profile_ode(&m, &g, &times).unwrap();
        let s = run_replicas(&m, &InitialMeasure::BernoulliProduct(g.clone()), &times, 10_000, SEED, SamplerMode::ExactTable).unwrap();
        for (k, d) in s.density.iter().enumerate() {
            let est = d.estimate().unwrap();
            for x in 0..31 {
                let z = (est.mean[x] - ode[k][x]).abs() / est.stderr[x];
                worst_z = worst_z.max(z);
                total += 1;
                within2 += (z <= 2.0) as usize;
                within3 += (z <= 3.0) as usize;
            }
        }
    }
    let frac2 = within2 as f64 / total as f64;
    let ok = within3 == total && frac2 >= 0.95;
    let detail = format!("{within3}/{total} sites within 3 stderr (max z {worst_z:.2}), {:.1}% within 2 stderr (need all, 95%)", 100.0 * frac2);
    assert!(verdict(4, ok, &detail));
}

#[test]
fn c05_hydrodynamic_limit_nearest_neighbor() {
    let mut spec = ExperimentSpec::new(
        "c5",
        KernelChoice::NearestNeighbor,
        vec![64, 128, 256],
        vec![0.0, 1.0, 2.0],
        preset("step", 0.8, 0.2).unwrap(),
    );
    spec.seed = SEED;
    let (report, _) = hydrodynamic_experiment(&spec).unwrap();
    let mut ok = true;
    for theta in [0.0, 1.0, 2.0] {
        let row = report.rows.iter().find(|r| r.n == 256 && r.theta == theta && r.norm == "sup-grid/pde").unwrap();
        let trend = report.trends.iter().find(|t| t.key.starts_with(&format!("c5 theta={theta} ")) && t.key.ends_with("sup-grid/pde")).unwrap();
        let pass = row.pass == Some(true) && trend.monotone;
        println!(
            "  theta={theta}: sup-grid {:?} over N={:?}, at N=256 {:.4} (stderr {:.4}, tol 0.05), non-increasing within noise: {}",
            trend.values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            trend.ns,
            row.value,
            row.stderr,
            trend.monotone
        );
        ok &= pass;
    }
    assert!(verdict(5, ok, "sup-grid distance to the Dirichlet/Robin/Neumann solutions"));
}

#[test]
fn c06_robin_spectrum() {
    let neumann = robin_eigenvalues(0.0, 50, 1e-14).unwrap();
    let exact_roots = neumann.iter().enumerate().all(|(i, m)| (m.sqrt_lambda - (i + 1) as f64 * std::f64::consts::PI).abs() <= 1e-14 * (i + 1) as f64 * 4.0);
    let robin = robin_eigenvalues(1.0, 50, 1e-15).unwrap();
    let max_res = robin.iter().map(|m| m.residual).fold(0.0, f64::max);
    let ratios: Vec<f64> = robin.iter().enumerate().skip(19).map(|(i, m)| m.lambda / ((i + 1) as f64 * std::f64::consts::PI).powi(2)).collect();
    let (rmin, rmax) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let ratio_ok = rmin >= 0.99 && rmax <= 1.01;
    println!("  kappa=0 roots equal n*pi: {exact_roots}; kappa=1 max residual {max_res:.3e} (tol 1e-10)");
    println!("  lambda_n/(n pi)^2 for 20 <= n <= 50 in [{rmin:.4}, {rmax:.4}] (need [0.99, 1.01])");
    assert!(verdict(6, exact_roots && max_res <= 1e-10 && ratio_ok, "Robin spectrum"));
}

#[test]
fn c07_correlation_scaling() {
    let ns: Vec<usize> = (5..=10).map(|k| 1usize << k).collect();
    let table = correlation_scan(&[0.0, 1.0, 2.0], &ns, None).unwrap();
    let mut ok = true;
    for ((theta, slope), want) in table.fits.iter().zip([-2.0, -1.0, -2.0]) {
        let pass = (slope - want).abs() <= 0.1;
        println!("  theta={theta}: fitted exponent {slope:.4}, expected {want} +- 0.1: {}", if pass { "ok" } else { "off" });
        ok &= pass;
    }
    assert!(verdict(7, ok, "max|phi_ss| exponents over N in 32..1024"));
}

#[test]
fn c08_long_jump_regimes() {
    // (a) reaction regime, time scale N
    let n = 256;
    let p = ModelParams::new(n, 0.2, 0.8, 1.0, -3.0, LJ3).unwrap();
    let m = Model::new(p.clone()).unwrap();
    let regime = regime_dispatch(&m.kernel, -3.0, 1.0);
    assert_eq!(regime.family, PdeFamily::Reaction);
    assert!((p.time_scale() - n as f64).abs() < 1e-9);
    let g = Profile::Linear { left: 0.9, right: 0.1 };
    let times = [0.1, 0.5];
    let s = run_replicas(&m, &InitialMeasure::BernoulliProduct(g.clone()), &times, 400, SEED, SamplerMode::auto(&m)).unwrap();
    let grid = lattice_grid(n);
    let mut ok_a = true;
    for (k, &t) in times.iter().enumerate() {
        let est = s.density[k].estimate().unwrap();
        let reference = reaction_exact(&g, regime.kappa_hat, 3.0, 0.2, 0.8, t, &grid).unwrap();
        let (z, cells) = cell_z(&est, &reference, 16, 0.2, 0.8);
        println!("  (a) theta=-3 t={t}: worst cell |diff|/stderr {z:.2} over {cells} interior cells (need <= 3)");
        ok_a &= z <= 3.0;
    }
    // (b), (c) heat equation with Dirichlet and Robin boundary conditions
    let mut spec = ExperimentSpec::new("c8", LJ3, vec![256], vec![0.0, 1.0], preset("step", 0.8, 0.2).unwrap());
    spec.seed = SEED;
    let (report, points) = hydrodynamic_experiment(&spec).unwrap();
    assert_eq!(points[0].regime.family, PdeFamily::HeatDirichlet);
    assert!(matches!(points[1].regime.family, PdeFamily::HeatRobin { .. }));
    assert_eq!(points[1].regime.m_hat, 0.5);
    let mut ok_bc = true;
    for (label, theta) in [("(b)", 0.0), ("(c)", 1.0)] {
        let row = report.rows.iter().find(|r| r.theta == theta && r.norm == "sup-grid/pde").unwrap();
        println!("  {label} theta={theta}: sup-grid {:.4} (stderr {:.4}, tol 0.05)", row.value, row.stderr);
        ok_bc &= row.pass == Some(true);
    }
    assert!(verdict(8, ok_a && ok_bc, "long jumps, gamma=3: reaction, Dirichlet and Robin regimes"));
}

#[test]
fn c09_generator_convergence() {
    let k3 = JumpKernel::long_jump(3.0).unwrap();
    let g = TestFunction::bump(0.5, 0.4);
    let errs = kernel_laplacian_check(&k3, &g, &[256, 512, 1024, 2048, 4096]).unwrap();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    println!("  gamma=3 kernel Laplacian errors {:?}: strictly decreasing {decreasing}", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>());
    let k15 = JumpKernel::long_jump(1.5).unwrap();
    let frac = fractional_laplacian_check(&k15, &g, &[4096], (0.2, 0.8), 4, 1e-10).unwrap()[0];
    println!("  gamma=1.5 regional fractional operator: sup error on [0.2, 0.8] at N=4096 {frac:.4} (tol 1e-2)");
    assert!(verdict(9, decreasing && frac <= 1e-2, "generator convergence"));
}

#[test]
fn c10_fractional_hydrodynamics() {
    let n = 256;
    let m = Model::new(ModelParams::new(n, 0.2, 0.8, 1.0, -1.0, LJ15).unwrap()).unwrap();
    assert_eq!(regime_dispatch(&m.kernel, -1.0, 1.0).family, PdeFamily::FractionalReactionDiffusion);
    let g = preset("step", 0.8, 0.2).unwrap();
    let times = [0.02, 0.1];
    let ode = fractional_generator_ode(&m, &g, &times).unwrap();
    let s = run_replicas(&m, &InitialMeasure::BernoulliProduct(g), &times, 200, SEED, SamplerMode::auto(&m)).unwrap();
    let mut ok = true;
    for (k, &t) in times.iter().enumerate() {
        let est = s.density[k].estimate().unwrap();
        let (z, cells) = cell_z(&est, &ode[k], 16, 0.0, 1.0);
        println!("  t={t}: worst cell |diff|/stderr {z:.2} over {cells} cells (need <= 3)");
        ok &= z <= 3.0;
    }
    let ss = MeanGenerator::new(&m).steady_state().unwrap();
    let (l, r) = ((ss[0] - 0.2).abs(), (ss[n - 2] - 0.8).abs());
    println!("  steady state |rho(1) - alpha| {l:.3e}, |rho(N-1) - beta| {r:.3e} (tol 0.05)");
    ok &= l <= 0.05 && r <= 0.05;
    assert!(verdict(10, ok, "fractional regime, gamma=1.5, theta=-1"));
}

fn parabola(q: f64) -> f64 {
    q * (1.0 - q)
}

#[test]
fn c11_dynkin_martingale() {
    let m = Model::new(ModelParams::nearest_neighbor(64, 0.2, 0.8, 1.0, 1.0).unwrap()).unwrap();
    let measure = InitialMeasure::BernoulliProduct(preset("step", 0.8, 0.2).unwrap());
    let g: TestFn = parabola;
    let samples = martingale_samples(&m, g, &measure, 0.1, 10_000, SEED).unwrap();
    let r = samples.len() as f64;
    let mean_sd = |v: &[f64]| {
        let mu = v.iter().sum::<f64>() / r;
        let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (r - 1.0);
        (mu, (var / r).sqrt())
    };
    let ms: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ds: Vec<f64> = samples.iter().map(|s| s.0 * s.0 - s.1).collect();
    let qv = samples.iter().map(|s| s.1).sum::<f64>() / r;
    let (mu, se) = mean_sd(&ms);
    let (dmu, dse) = mean_sd(&ds);
    println!("  mean M_t {mu:.3e} (stderr {se:.3e}); E[M_t^2] - E[QV] {dmu:.3e} (stderr {dse:.3e}); E[QV] {qv:.3e}");
    let ok = mu.abs() <= 3.0 * se && dmu.abs() <= 3.0 * dse;
    assert!(verdict(11, ok, "Dynkin martingale and its quadratic variation"));
}

#[test]
fn c12_hydrostatic_limit() {
    let mut spec = HydrostaticSpec::new(128, vec![0.0, 1.0, 2.0]);
    spec.seed = SEED;
    let (report, points) = hydrostatic_experiment(&spec).unwrap();
    let mut ok = true;
    for (row, p) in report.rows.iter().filter(|r| r.norm == "sup-grid/stat").zip(&points) {
        println!(
            "  theta={}: sup-grid {:.4} (stderr {:.4}, tol 0.03), burn-in {:.3}, inconclusive {}",
            row.theta, row.value, row.stderr, p.burn_in, p.inconclusive
        );
        ok &= row.pass == Some(true);
    }
    for n in &report.notices {
        println!("  note: {n}");
    }
    assert!(verdict(12, ok, "stationary profile against the macroscopic branches"));
}
