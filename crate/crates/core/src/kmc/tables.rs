use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::model::{Event, LatticeState, Model};
use crate::{Error, Result};

const ABSENT: u32 = u32::MAX;

/// Exact event table for the nearest-neighbor model: the set of
/// discrepant bonds (uniform rate 1/2 each) plus the two boundary flips.
#[derive(Debug, Clone)]
pub(crate) struct NnTable {
    bonds: Vec<u32>,
    pos: Vec<u32>,
    create: [f64; 2],
    annihilate: [f64; 2],
    flip_sites: [usize; 2],
    flip_slots: usize,
}

impl NnTable {
    pub(crate) fn new(model: &Model, state: &LatticeState) -> Self {
        let n = model.params.n;
        let last = n - 1;
        let flip_slots = if last == 1 { 1 } else { 2 };
        let (c1, a1) = model.flip_rates_at(1);
        let (c2, a2) = model.flip_rates_at(last);
        let mut t = NnTable {
            bonds: Vec::new(),
            pos: vec![ABSENT; n.saturating_sub(2) + 1],
            create: [c1, c2],
            annihilate: [a1, a2],
            flip_sites: [1, last],
            flip_slots,
        };
        for b in 1..n.saturating_sub(1) {
            t.refresh_bond(state, b);
        }
        t
    }

    fn refresh_bond(&mut self, state: &LatticeState, b: usize) {
        let n = state.n();
        if b == 0 || b + 1 >= n {
            return;
        }
        let disc = state.get(b) != state.get(b + 1);
        let p = self.pos[b];
        if disc && p == ABSENT {
            self.pos[b] = self.bonds.len() as u32;
            self.bonds.push(b as u32);
        } else if !disc && p != ABSENT {
            let last = self.bonds.pop().unwrap();
            if last as usize != b {
                self.bonds[p as usize] = last;
                self.pos[last as usize] = p;
            }
            self.pos[b] = ABSENT;
        }
    }

    fn flip_rate(&self, state: &LatticeState, slot: usize) -> f64 {
        if state.get(self.flip_sites[slot]) == 0 {
            self.create[slot]
        } else {
            self.annihilate[slot]
        }
    }

    pub(crate) fn total(&self, state: &LatticeState) -> f64 {
        let mut t = 0.5 * self.bonds.len() as f64;
        for s in 0..self.flip_slots {
            t += self.flip_rate(state, s);
        }
        t
    }

    pub(crate) fn sample<R: Rng>(&self, state: &LatticeState, total: f64, rng: &mut R) -> Event {
        let u = rng.random::<f64>() * total;
        let bulk = 0.5 * self.bonds.len() as f64;
        if u < bulk {
            let k = ((u / 0.5) as usize).min(self.bonds.len() - 1);
            let x = self.bonds[k] as usize;
            return Event::Exchange { x, y: x + 1 };
        }
        let mut acc = bulk;
        for s in 0..self.flip_slots {
            acc += self.flip_rate(state, s);
            if u < acc {
                return Event::Flip { x: self.flip_sites[s] };
            }
        }
        // rounding at the top end
        let s = (0..self.flip_slots).rev().find(|&s| self.flip_rate(state, s) > 0.0).unwrap_or(0);
        Event::Flip { x: self.flip_sites[s] }
    }

    pub(crate) fn after(&mut self, state: &LatticeState, event: Event) {
        let touched = match event {
            Event::Exchange { x, y } => [x, y],
            Event::Flip { x } => [x, x],
        };
        for s in touched {
            self.refresh_bond(state, s - 1);
            self.refresh_bond(state, s);
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Attempt {
    Bulk { d: usize },
    Boundary { x: usize, left: bool },
}

/// State-independent envelope: every pair at rate p(y−x) and every
/// boundary flip at its larger possible rate.
#[derive(Debug, Clone)]
pub(crate) struct ThinTable {
    entries: Vec<Attempt>,
    alias: WeightedAliasIndex<f64>,
    pub(crate) total: f64,
    create_total: f64,
    annihilate_total: f64,
}

impl ThinTable {
    pub(crate) fn new(model: &Model, include_boundary: bool) -> Result<Option<Self>> {
        let n = model.params.n;
        let (a, b) = (model.params.alpha, model.params.beta);
        let s = model.params.boundary_strength();
        let mut entries = Vec::new();
        let mut weights = Vec::new();
        let max_d = model.kernel.range().unwrap_or(n).min(n.saturating_sub(2));
        for d in 1..=max_d {
            let w = (n - 1 - d) as f64 * model.kernel.prob(d as i64);
            if w > 0.0 {
                entries.push(Attempt::Bulk { d });
                weights.push(w);
            }
        }
        let (mut create_total, mut annihilate_total) = (0.0, 0.0);
        for x in 1..n {
            let (c, an) = model.flip_rates_at(x);
            create_total += c;
            annihilate_total += an;
            if !include_boundary {
                continue;
            }
            for (left, wgt, r) in [(true, model.left_weight[x - 1], a), (false, model.right_weight[x - 1], b)] {
                let w = s * wgt * r.max(1.0 - r);
                if w > 0.0 {
                    entries.push(Attempt::Boundary { x, left });
                    weights.push(w);
                }
            }
        }
        if weights.is_empty() {
            return Ok(None);
        }
        let total = weights.iter().sum();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::Numerical(alloc::format!("alias table: {e}")))?;
        Ok(Some(ThinTable { entries, alias, total, create_total, annihilate_total }))
    }

    /// True when the actual total rate is zero although the envelope is not.
    pub(crate) fn absorbed(&self, particles: usize, sites: usize) -> bool {
        (particles == 0 && self.create_total == 0.0) || (particles == sites && self.annihilate_total == 0.0)
    }

    /// One attempt; returns the accepted event, if any.
    pub(crate) fn attempt<R: Rng>(&self, model: &Model, state: &LatticeState, rng: &mut R) -> Option<Event> {
        let n = model.params.n;
        match self.entries[self.alias.sample(rng)] {
            Attempt::Bulk { d } => {
                let x = rng.random_range(1..=n - 1 - d);
                let y = x + d;
                (state.get(x) != state.get(y)).then_some(Event::Exchange { x, y })
            }
            Attempt::Boundary { x, left } => {
                let r = if left { model.params.alpha } else { model.params.beta };
                let actual = if state.get(x) == 0 { r } else { 1.0 - r };
                let env = r.max(1.0 - r);
                (rng.random::<f64>() * env < actual).then_some(Event::Flip { x })
            }
        }
    }

    pub(crate) fn sample_bulk<R: Rng>(&self, n: usize, rng: &mut R) -> (usize, usize) {
        match self.entries[self.alias.sample(rng)] {
            Attempt::Bulk { d } => {
                let x = rng.random_range(1..=n - 1 - d);
                (x, x + d)
            }
            Attempt::Boundary { .. } => unreachable!("bulk-only table"),
        }
    }
}

/// Reservoir clocks resolved lazily: each site carries an independent
/// Poisson clock of rate R_x at which its occupation is resampled from
/// Bernoulli(ρ∞(x)); the site is brought up to date only when touched.
#[derive(Debug, Clone)]
pub(crate) struct LazyReservoirs {
    rate: Vec<f64>,
    target: Vec<f64>,
    last: Vec<f64>,
}

impl LazyReservoirs {
    pub(crate) fn new(model: &Model, t0: f64) -> Self {
        let s = model.params.boundary_strength();
        let (a, b) = (model.params.alpha, model.params.beta);
        let m = model.sites();
        let mut rate = Vec::with_capacity(m);
        let mut target = Vec::with_capacity(m);
        for i in 0..m {
            let (l, r) = (model.left_weight[i], model.right_weight[i]);
            rate.push(s * (l + r));
            target.push(if l + r > 0.0 { (a * l + b * r) / (l + r) } else { 0.0 });
        }
        LazyReservoirs { rate, target, last: vec![t0; m] }
    }

    pub(crate) fn sync<R: Rng>(&mut self, state: &mut LatticeState, x: usize, now: f64, rng: &mut R) {
        let i = x - 1;
        let dt = now - self.last[i];
        if dt > 0.0 && self.rate[i] > 0.0 {
            let p = -libm::expm1(-self.rate[i] * dt);
            if rng.random::<f64>() < p {
                let v = rng.random::<f64>() < self.target[i];
                state.set(x, v);
            }
        }
        self.last[i] = now;
    }
}
