use exh::harness::{
    correlation_scan, hydrodynamic_experiment, hydrostatic_experiment, martingale_samples, preset, ExperimentSpec,
    HydrostaticSpec,
};
use exh_core::{InitialMeasure, KernelChoice, Model, ModelParams};

fn small_spec() -> ExperimentSpec {
    let mut s = ExperimentSpec::new("small", KernelChoice::NearestNeighbor, vec![12, 24], vec![0.0, 1.0], preset("step", 0.8, 0.2).unwrap());
    s.replicas = 24;
    s.times = vec![0.01, 0.05];
    s
}

#[test]
fn report_rows_are_bit_exact_across_runs_and_pools() {
    let spec = small_spec();
    let (a, _) = hydrodynamic_experiment(&spec).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let (b, _) = pool.install(|| hydrodynamic_experiment(&spec).unwrap());
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.value.to_bits(), y.value.to_bits());
        assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        assert_eq!((x.seed, x.replicas), (spec.seed, spec.replicas));
    }
    let mut other = spec.clone();
    other.seed = 2;
    let (c, _) = hydrodynamic_experiment(&other).unwrap();
    assert!(a.rows.iter().zip(&c.rows).any(|(x, y)| x.value != y.value));
}

#[test]
fn every_row_carries_its_provenance() {
    let spec = small_spec();
    let (report, points) = hydrodynamic_experiment(&spec).unwrap();
    assert_eq!(points.len(), 4);
    // sup, l2 and five pairings per (point, time)
    assert_eq!(report.rows.len(), 4 * 2 * 7);
    assert!(report.rows.iter().all(|r| r.pass.is_some() && r.param_hash.len() == 16 && r.stderr.is_finite()));
    assert!(report.trends.iter().any(|t| t.ns == vec![12, 24]));
    let rows = points[0].profile_rows(&spec.times);
    assert_eq!(rows.len(), 2 * 11);
    assert!(rows.iter().all(|r| r.rho_ode.is_some() && r.rho_pde.is_some()));
}

#[test]
fn open_regime_is_skipped_unless_exploratory() {
    let mut spec = ExperimentSpec::new("open", KernelChoice::LongJump { gamma: 1.5 }, vec![16], vec![0.0], preset("step", 0.8, 0.2).unwrap());
    spec.replicas = 8;
    let (report, points) = hydrodynamic_experiment(&spec).unwrap();
    assert!(points.is_empty());
    assert!(report.notices[0].contains("unsupported"));

    spec.exploratory = true;
    let (report, points) = hydrodynamic_experiment(&spec).unwrap();
    assert_eq!(points.len(), 1);
    assert!(points[0].ode.is_none() && points[0].pde[0].is_none());
    assert!(!report.rows.is_empty() && report.rows.iter().all(|r| r.pass.is_none()));
    assert!(report.notices.iter().any(|n| n.contains("exploratory")));
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = small_spec();
    spec.replicas = 1;
    assert!(hydrodynamic_experiment(&spec).is_err());
    let mut spec = small_spec();
    spec.times = vec![0.05, 0.01];
    assert!(hydrodynamic_experiment(&spec).is_err());
    let mut spec = small_spec();
    spec.ns.clear();
    assert!(hydrodynamic_experiment(&spec).is_err());
}

#[test]
fn tiny_hydrostatic_uses_the_exact_chain() {
    let spec = HydrostaticSpec::new(5, vec![0.0, 2.0]);
    let (report, points) = hydrostatic_experiment(&spec).unwrap();
    assert_eq!(points.len(), 2);
    assert!(points.iter().all(|p| p.burn_in == 0.0 && !p.inconclusive));
    assert_eq!(report.rows.iter().filter(|r| r.norm == "closed-form-gap").count(), 2);
}

#[test]
fn correlation_spot_check_is_consistent() {
    let t = correlation_scan(&[1.0], &[32, 64], Some((1.0, 5, 400, 7))).unwrap();
    assert!((t.fits[0].1 + 1.0).abs() < 0.05);
    let spot = t.spot.unwrap();
    assert!(spot.max_z.is_finite() && spot.max_z < 4.5, "{spot:?}");
}

#[test]
fn martingale_has_zero_mean_at_time_zero_plus() {
    let m = Model::new(ModelParams::nearest_neighbor(16, 0.2, 0.8, 1.0, 1.0).unwrap()).unwrap();
    let measure = InitialMeasure::BernoulliProduct(preset("linear", 0.2, 0.8).unwrap());
    let s = martingale_samples(&m, |q| q, &measure, 1e-9, 16, 1).unwrap();
    assert_eq!(s.len(), 16);
    assert!(s.iter().all(|(mt, qv)| mt.abs() < 1e-6 && *qv < 1e-6));
}
