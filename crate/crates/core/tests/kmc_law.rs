use exh_core::kmc::{run_ensemble, EnsembleOptions, RngStream, SamplerMode, Simulator, SnapshotSchedule, StepOutcome};
use exh_core::linalg::expm;
use exh_core::model::{event_rates, generator_matrix, Event};
use exh_core::observables::DensityAccumulator;
use exh_core::pde::MeanGenerator;
use exh_core::{InitialMeasure, KernelChoice, LatticeState, Model, ModelParams, Profile};

/// Upper 0.999 quantile of χ² with k degrees of freedom (Wilson–Hilferty).
fn chi2_crit(k: usize) -> f64 {
    let k = k as f64;
    let z = 3.090_232;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

fn chi2(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * total as f64;
        if e < 1e-12 {
            assert_eq!(c, 0, "event with zero probability was observed");
            continue;
        }
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    (stat, cells - 1)
}

fn transient_law(model: &Model, start: &LatticeState, t_macro: f64) -> Vec<f64> {
    let q = generator_matrix(model).unwrap();
    let p = expm(&q.scaled(t_macro * model.params.time_scale())).unwrap();
    p.row(start.index()).to_vec()
}

fn check_transient(model: &Model, mode: SamplerMode, start: Vec<u8>, t: f64, replicas: u64, seed: u64) {
    let st = LatticeState::from_occupancy(start.clone()).unwrap();
    let law = transient_law(model, &st, t);
    let mut counts = vec![0u64; law.len()];
    let schedule = SnapshotSchedule::new(vec![t]).unwrap();
    let opts = EnsembleOptions { mode, master_seed: seed, max_events: 1 << 40 };
    run_ensemble(model, &InitialMeasure::ExactConfiguration(start), &schedule, 0..replicas, opts, &mut |_, _, s: &LatticeState| {
        counts[s.index()] += 1;
        Ok(())
    })
    .unwrap();
    let (stat, df) = chi2(&counts, &law);
    assert!(stat < chi2_crit(df), "{mode:?}: χ² = {stat} with {df} dof");
}

#[test]
fn nn_exact_table_transient_law() {
    let m = Model::new(ModelParams::nearest_neighbor(5, 0.2, 0.7, 1.4, 0.5).unwrap()).unwrap();
    check_transient(&m, SamplerMode::ExactTable, vec![1, 0, 1, 0], 0.02, 20_000, 11);
}

#[test]
fn nn_thinning_transient_law() {
    let m = Model::new(ModelParams::nearest_neighbor(5, 0.2, 0.7, 1.4, 0.5).unwrap()).unwrap();
    check_transient(&m, SamplerMode::Thinning, vec![1, 0, 1, 0], 0.02, 20_000, 12);
}

#[test]
fn long_jump_thinning_transient_law() {
    let p = ModelParams::new(5, 0.3, 0.9, 2.0, 0.0, KernelChoice::LongJump { gamma: 2.5 }).unwrap();
    let m = Model::new(p).unwrap();
    check_transient(&m, SamplerMode::Thinning, vec![0, 0, 1, 1], 0.01, 20_000, 13);
}

#[test]
fn long_jump_lazy_reservoir_transient_law() {
    let p = ModelParams::new(5, 0.3, 0.9, 2.0, -3.0, KernelChoice::LongJump { gamma: 3.0 }).unwrap();
    let m = Model::new(p).unwrap();
    assert_eq!(SamplerMode::auto(&m), SamplerMode::LazyReservoir);
    check_transient(&m, SamplerMode::LazyReservoir, vec![1, 1, 0, 0], 0.05, 20_000, 14);
    check_transient(&m, SamplerMode::Thinning, vec![1, 1, 0, 0], 0.05, 20_000, 15);
}

#[test]
fn fractional_regime_lazy_law() {
    let p = ModelParams::new(6, 0.1, 0.6, 1.0, -1.0, KernelChoice::LongJump { gamma: 1.5 }).unwrap();
    let m = Model::new(p).unwrap();
    check_transient(&m, SamplerMode::LazyReservoir, vec![1, 0, 1, 0, 1], 0.03, 20_000, 16);
}

#[test]
fn holding_time_is_exponential() {
    // Kolmogorov–Smirnov against Exp(total rate) for the first applied event
    let m = Model::new(ModelParams::nearest_neighbor(6, 0.2, 0.7, 1.0, 0.0).unwrap()).unwrap();
    let start = LatticeState::from_occupancy(vec![1, 0, 0, 1, 1]).unwrap();
    let total: f64 = event_rates(&start, &m).iter().map(|(_, r)| r).sum();
    for mode in [SamplerMode::ExactTable, SamplerMode::Thinning] {
        let samples = 4000;
        let mut times: Vec<f64> = (0..samples)
            .map(|r| {
                let mut sim = Simulator::new(&m, mode, start.clone(), RngStream::new(99, r)).unwrap();
                loop {
                    if let StepOutcome::Applied(_) = sim.step().unwrap() {
                        return sim.state().micro_time;
                    }
                }
            })
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = 1.0 - (-total * t).exp();
                (f - i as f64 / samples as f64).abs().max(((i + 1) as f64 / samples as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 0.999 critical value ≈ 1.95/√n
        assert!(d < 1.95 / (samples as f64).sqrt(), "{mode:?}: D = {d}");
    }
}

#[test]
fn first_event_frequencies_match_rates() {
    let m = Model::new(ModelParams::nearest_neighbor(4, 0.25, 0.8, 2.0, 0.0).unwrap()).unwrap();
    let start = LatticeState::from_occupancy(vec![1, 0, 1]).unwrap();
    let rates = event_rates(&start, &m);
    let total: f64 = rates.iter().map(|(_, r)| r).sum();
    let probs: Vec<f64> = rates.iter().map(|(_, r)| r / total).collect();
    for mode in [SamplerMode::ExactTable, SamplerMode::Thinning] {
        let mut counts = vec![0u64; rates.len()];
        for r in 0..20_000 {
            let mut sim = Simulator::new(&m, mode, start.clone(), RngStream::new(7, r)).unwrap();
            let e = loop {
                if let StepOutcome::Applied(e) = sim.step().unwrap() {
                    break e;
                }
            };
            let norm = |e: Event| match e {
                Event::Exchange { x, y } => Event::Exchange { x: x.min(y), y: x.max(y) },
                f => f,
            };
            let k = rates.iter().position(|(ev, _)| norm(*ev) == norm(e)).expect("unknown event");
            counts[k] += 1;
        }
        let (stat, df) = chi2(&counts, &probs);
        assert!(stat < chi2_crit(df), "{mode:?}: χ² = {stat}");
    }
}

#[test]
fn mean_profile_follows_the_discrete_equation() {
    // the macroscopic clock is Θ(N) = N² micro units
    let n = 20;
    let m = Model::new(ModelParams::nearest_neighbor(n, 0.1, 0.9, 1.0, 0.0).unwrap()).unwrap();
    let g = Profile::Step { left: 0.8, right: 0.2, at: 0.5 };
    let t = 0.02;
    let ode = MeanGenerator::new(&m).evolve(&g.on_lattice(n).unwrap(), &[t]).unwrap();
    let mut acc = DensityAccumulator::new(n);
    let opts = EnsembleOptions { mode: SamplerMode::ExactTable, master_seed: 5, max_events: 1 << 40 };
    run_ensemble(&m, &InitialMeasure::BernoulliProduct(g), &SnapshotSchedule::new(vec![t]).unwrap(), 0..8000, opts, &mut |_, _, s: &LatticeState| acc.add(s))
        .unwrap();
    let est = acc.estimate().unwrap();
    for x in 0..n - 1 {
        let z = (est.mean[x] - ode[0][x]) / est.stderr[x];
        assert!(z.abs() < 4.5, "site {}: z = {z}", x + 1);
    }
}
