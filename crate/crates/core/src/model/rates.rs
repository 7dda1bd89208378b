use alloc::vec::Vec;

use super::{Event, LatticeState, Model};
use crate::kernel::KernelChoice;

/// Micro rate of the flip at x in the current configuration.
pub fn flip_rate(state: &LatticeState, model: &Model, x: usize) -> f64 {
    let (create, annihilate) = model.flip_rates_at(x);
    if state.get(x) == 0 {
        create
    } else {
        annihilate
    }
}

/// All state-changing events with their (microscopic, unscaled) rates.
pub fn event_rates(state: &LatticeState, model: &Model) -> Vec<(Event, f64)> {
    let n = model.params.n;
    let mut out = Vec::new();
    let max_gap = match model.params.kernel {
        KernelChoice::NearestNeighbor => 1,
        KernelChoice::LongJump { .. } => n - 2,
    };
    for x in 1..n {
        for y in x + 1..=(x + max_gap).min(n - 1) {
            if state.get(x) != state.get(y) {
                out.push((Event::Exchange { x, y }, model.kernel.prob((y - x) as i64)));
            }
        }
    }
    for x in 1..n {
        let r = flip_rate(state, model, x);
        if r > 0.0 {
            out.push((Event::Flip { x }, r));
        }
    }
    out
}

pub fn apply(state: &mut LatticeState, event: Event) {
    match event {
        Event::Exchange { x, y } => state.swap(x, y),
        Event::Flip { x } => state.flip(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use proptest::prelude::*;

    fn nn(n: usize, a: f64, b: f64, k: f64, th: f64) -> Model {
        Model::new(ModelParams::nearest_neighbor(n, a, b, k, th).unwrap()).unwrap()
    }

    #[test]
    fn absorbing_empty_state() {
        let m = nn(5, 0.0, 0.0, 1.0, 0.0);
        let total: f64 = event_rates(&LatticeState::empty(5), &m).iter().map(|e| e.1).sum();
        assert_eq!(total, 0.0);
    }

    #[test]
    fn two_site_flip_rate() {
        let (a, b, k, th) = (0.3, 0.6, 1.7, 0.4);
        let m = nn(2, a, b, k, th);
        let ev = event_rates(&LatticeState::empty(2), &m);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].0, Event::Flip { x: 1 });
        let expect = k * 2f64.powf(-th) * (a + b) / 2.0;
        assert!((ev[0].1 - expect).abs() < 1e-15);
    }

    #[test]
    fn four_site_enumeration() {
        let m = nn(4, 0.3, 0.6, 1.0, 0.0);
        let s = LatticeState::from_occupancy(alloc::vec![0, 1, 0]).unwrap();
        let ev = event_rates(&s, &m);
        assert!(ev.contains(&(Event::Exchange { x: 1, y: 2 }, 0.5)));
        assert!(ev.contains(&(Event::Exchange { x: 2, y: 3 }, 0.5)));
        let flips: Vec<_> = ev.iter().filter(|e| matches!(e.0, Event::Flip { .. })).collect();
        assert_eq!(flips.len(), 2);
        assert!((flips[0].1 - 0.5 * 0.3).abs() < 1e-15);
        assert!((flips[1].1 - 0.5 * 0.6).abs() < 1e-15);
    }

    fn k3() -> &'static crate::JumpKernel {
        static K: std::sync::OnceLock<crate::JumpKernel> = std::sync::OnceLock::new();
        K.get_or_init(|| crate::JumpKernel::long_jump(3.0).unwrap())
    }

    proptest! {
        #[test]
        fn events_preserve_exclusion_and_count(bits in proptest::collection::vec(0u8..2, 1..9),
                                                a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let n = bits.len() + 1;
            let p = ModelParams::new(n, a, b, 1.0, 0.0, KernelChoice::LongJump { gamma: 3.0 }).unwrap();
            let m = Model::with_kernel(p, k3().clone());
            let s = LatticeState::from_occupancy(bits).unwrap();
            for (e, r) in event_rates(&s, &m) {
                prop_assert!(r > 0.0);
                let mut t = s.clone();
                apply(&mut t, e);
                prop_assert!(t.occupancy().iter().all(|&v| v <= 1));
                prop_assert_ne!(t.index(), s.index());
                let diff = t.particles() as i64 - s.particles() as i64;
                match e {
                    Event::Exchange { .. } => prop_assert_eq!(diff, 0),
                    Event::Flip { .. } => prop_assert_eq!(diff.abs(), 1),
                }
            }
        }
    }
}
