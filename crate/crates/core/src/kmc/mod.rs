//! Event-driven kinetic Monte Carlo for the exclusion process.

mod tables;

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::kernel::KernelChoice;
use crate::model::{apply, Event, InitialMeasure, LatticeState, Model};
use crate::{Error, Result};
use tables::{LazyReservoirs, NnTable, ThinTable};

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMode {
    /// Exact rate table (nearest-neighbor only).
    ExactTable,
    /// Alias-sampled envelope with rejection.
    Thinning,
    /// Bulk thinning with reservoir clocks resolved on demand. Exact in law
    /// at snapshot times; path observers are not supported.
    LazyReservoir,
}

impl SamplerMode {
    /// ExactTable for nearest-neighbor; for long jumps, lazy reservoirs when
    /// the reservoir clocks dominate the bulk by more than a factor 10.
    pub fn auto(model: &Model) -> Self {
        match model.params.kernel {
            KernelChoice::NearestNeighbor => SamplerMode::ExactTable,
            KernelChoice::LongJump { .. } => {
                let n = model.params.n;
                let bulk: f64 = (1..n.saturating_sub(1)).map(|d| (n - 1 - d) as f64 * model.kernel.prob(d as i64)).sum();
                let res: f64 = model.params.boundary_strength()
                    * model.left_weight.iter().zip(&model.right_weight).map(|(l, r)| l + r).sum::<f64>();
                if res > 10.0 * bulk {
                    SamplerMode::LazyReservoir
                } else {
                    SamplerMode::Thinning
                }
            }
        }
    }
}

/// Independent random stream for one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub replica_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, replica_id: u64) -> Self {
        RngStream { master_seed, replica_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.replica_id);
        r
    }
}

/// Ascending macroscopic snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSchedule {
    times: Vec<f64>,
}

impl SnapshotSchedule {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidParams("snapshot schedule is empty".into()));
        }
        if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParams("snapshot times must be finite and non-negative".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("snapshot times must be strictly increasing".into()));
        }
        Ok(SnapshotSchedule { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Draws an initial configuration.
pub fn init_state<R: Rng>(measure: &InitialMeasure, n: usize, rng: &mut R) -> Result<LatticeState> {
    match measure {
        InitialMeasure::BernoulliProduct(g) => {
            let probs = g.on_lattice(n)?;
            let occ = probs.iter().map(|&p| (rng.random::<f64>() < p) as u8).collect();
            LatticeState::from_occupancy(occ)
        }
        InitialMeasure::ExactConfiguration(occ) => {
            if occ.len() != n - 1 {
                return Err(Error::ShapeMismatch { expected: n - 1, got: occ.len() });
            }
            LatticeState::from_occupancy(occ.clone())
        }
        InitialMeasure::StationarySample(dist) => {
            if dist.len() != 1usize << (n - 1) {
                return Err(Error::ShapeMismatch { expected: 1usize << (n - 1), got: dist.len() });
            }
            let u = rng.random::<f64>() * dist.iter().sum::<f64>();
            let mut acc = 0.0;
            let mut pick = dist.len() - 1;
            for (i, &w) in dist.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            Ok(LatticeState::from_index(n, pick))
        }
    }
}

/// Receives the path between snapshots. `hold` is called with the state
/// and the macroscopic time it is held for; `on_event` after each change.
pub trait PathObserver {
    fn hold(&mut self, _state: &LatticeState, _dt: f64) {}
    fn on_event(&mut self, _state: &LatticeState, _event: Event) {}
    fn needs_path(&self) -> bool {
        true
    }
}

/// Observer that ignores the path.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoPath;

impl PathObserver for NoPath {
    fn needs_path(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied(Event),
    Rejected,
}

#[derive(Debug, Clone)]
enum Engine {
    Exact(NnTable),
    Thin(Option<ThinTable>),
    Lazy(Option<ThinTable>, LazyReservoirs),
}

/// One replica: state, random stream and sampler bookkeeping.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m Model,
    state: LatticeState,
    rng: ChaCha8Rng,
    engine: Engine,
    pending: Option<f64>,
    particles: usize,
    attempts: u64,
    events: u64,
    max_events: u64,
    replica: u64,
}

impl<'m> Simulator<'m> {
    pub fn new(model: &'m Model, mode: SamplerMode, state: LatticeState, stream: RngStream) -> Result<Self> {
        if state.n() != model.params.n {
            return Err(Error::ShapeMismatch { expected: model.params.n - 1, got: state.n() - 1 });
        }
        let engine = match mode {
            SamplerMode::ExactTable => match model.params.kernel {
                KernelChoice::NearestNeighbor => Engine::Exact(NnTable::new(model, &state)),
                KernelChoice::LongJump { .. } => {
                    return Err(Error::Unsupported("exact table sampler is for the nearest-neighbor model".into()))
                }
            },
            SamplerMode::Thinning => Engine::Thin(ThinTable::new(model, true)?),
            SamplerMode::LazyReservoir => {
                Engine::Lazy(ThinTable::new(model, false)?, LazyReservoirs::new(model, state.micro_time))
            }
        };
        let particles = state.particles();
        Ok(Simulator {
            model,
            state,
            rng: stream.rng(),
            engine,
            pending: None,
            particles,
            attempts: 0,
            events: 0,
            max_events: DEFAULT_MAX_EVENTS,
            replica: stream.replica_id,
        })
    }

    /// Caps the number of clock rings (accepted or rejected).
    pub fn with_max_events(mut self, cap: u64) -> Self {
        self.max_events = cap;
        self
    }

    pub fn state(&self) -> &LatticeState {
        &self.state
    }

    pub fn macro_time(&self) -> f64 {
        self.state.micro_time / self.model.params.time_scale()
    }

    /// Clock rings so far.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    /// State changes so far.
    pub fn events(&self) -> u64 {
        self.events
    }

    /// Rate of the clock driving attempts; `None` when no attempt can change the state.
    fn attempt_rate(&self) -> Option<f64> {
        match &self.engine {
            Engine::Exact(t) => {
                let r = t.total(&self.state);
                (r > 0.0).then_some(r)
            }
            Engine::Thin(Some(t)) => (!t.absorbed(self.particles, self.model.sites())).then_some(t.total),
            Engine::Lazy(Some(t), _) => Some(t.total),
            Engine::Thin(None) | Engine::Lazy(None, _) => None,
        }
    }

    fn attempt(&mut self, now: f64) -> Option<Event> {
        let ev = match &mut self.engine {
            Engine::Exact(t) => {
                let total = t.total(&self.state);
                Some(t.sample(&self.state, total, &mut self.rng))
            }
            Engine::Thin(Some(t)) => t.attempt(self.model, &self.state, &mut self.rng),
            Engine::Lazy(Some(t), res) => {
                let (x, y) = t.sample_bulk(self.model.params.n, &mut self.rng);
                res.sync(&mut self.state, x, now, &mut self.rng);
                res.sync(&mut self.state, y, now, &mut self.rng);
                (self.state.get(x) != self.state.get(y)).then_some(Event::Exchange { x, y })
            }
            Engine::Thin(None) | Engine::Lazy(None, _) => None,
        };
        if let Some(e) = ev {
            apply(&mut self.state, e);
            self.events += 1;
            if let Event::Flip { x } = e {
                if self.state.get(x) == 1 {
                    self.particles += 1;
                } else {
                    self.particles -= 1;
                }
            }
            if let Engine::Exact(t) = &mut self.engine {
                t.after(&self.state, e);
            }
        }
        ev
    }

    fn check_cap(&self) -> Result<()> {
        if self.attempts > self.max_events {
            return Err(Error::EventCapExceeded {
                replica: self.replica,
                cap: self.max_events,
                micro_time: self.state.micro_time,
            });
        }
        Ok(())
    }

    /// One clock ring: advances the micro time and applies (or rejects) an attempt.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let rate = self.attempt_rate().ok_or(Error::Absorbed)?;
        let dt: f64 = self.rng.sample::<f64, _>(Exp1) / rate;
        self.pending = None;
        self.state.micro_time += dt;
        self.attempts += 1;
        self.check_cap()?;
        let now = self.state.micro_time;
        Ok(match self.attempt(now) {
            Some(e) => StepOutcome::Applied(e),
            None => StepOutcome::Rejected,
        })
    }

    /// Runs to macroscopic time `t`; the state is the one at the last event ≤ t.
    pub fn advance_to<O: PathObserver + ?Sized>(&mut self, t: f64, observer: &mut O) -> Result<()> {
        let scale = self.model.params.time_scale();
        let target = t * scale;
        if target < self.state.micro_time {
            return Err(Error::InvalidParams(format!(
                "cannot go back from t = {} to t = {t}",
                self.macro_time()
            )));
        }
        let lazy = matches!(self.engine, Engine::Lazy(..));
        if lazy && observer.needs_path() {
            return Err(Error::Unsupported("lazy reservoir sampling does not expose the path".into()));
        }
        loop {
            let now = self.state.micro_time;
            let Some(rate) = self.attempt_rate() else {
                observer.hold(&self.state, (target - now) / scale);
                self.state.micro_time = target;
                break;
            };
            let next = match self.pending {
                Some(p) => p,
                None => {
                    let p = now + self.rng.sample::<f64, _>(Exp1) / rate;
                    self.pending = Some(p);
                    p
                }
            };
            if next > target {
                observer.hold(&self.state, (target - now) / scale);
                self.state.micro_time = target;
                break;
            }
            observer.hold(&self.state, (next - now) / scale);
            self.state.micro_time = next;
            self.pending = None;
            self.attempts += 1;
            self.check_cap()?;
            if let Some(e) = self.attempt(next) {
                observer.on_event(&self.state, e);
            }
        }
        if let Engine::Lazy(_, res) = &mut self.engine {
            for x in 1..self.model.params.n {
                res.sync(&mut self.state, x, target, &mut self.rng);
            }
            self.particles = self.state.particles();
        }
        Ok(())
    }
}

/// Consumer of snapshots produced by [`run_ensemble`].
pub trait SnapshotSink {
    fn observe(&mut self, snapshot: usize, replica: u64, state: &LatticeState) -> Result<()>;
}

impl<F: FnMut(usize, u64, &LatticeState) -> Result<()>> SnapshotSink for F {
    fn observe(&mut self, snapshot: usize, replica: u64, state: &LatticeState) -> Result<()> {
        self(snapshot, replica, state)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnsembleOptions {
    pub mode: SamplerMode,
    pub master_seed: u64,
    pub max_events: u64,
}

/// Runs replicas `replicas` independently; every snapshot of every replica
/// is passed to `sink` once, in (replica, snapshot) order.
pub fn run_ensemble<S: SnapshotSink + ?Sized>(
    model: &Model,
    measure: &InitialMeasure,
    schedule: &SnapshotSchedule,
    replicas: Range<u64>,
    opts: EnsembleOptions,
    sink: &mut S,
) -> Result<()> {
    if replicas.is_empty() {
        return Err(Error::InvalidParams("at least one replica is required".into()));
    }
    for r in replicas {
        let stream = RngStream::new(opts.master_seed, r);
        let mut rng = stream.rng();
        // the initial draw uses a separate stream word so that the dynamics
        // stream is the same for every initial measure
        rng.set_word_pos(1u128 << 60);
        let state = init_state(measure, model.params.n, &mut rng)?;
        let mut sim = Simulator::new(model, opts.mode, state, stream)?.with_max_events(opts.max_events);
        for (k, &t) in schedule.times().iter().enumerate() {
            sim.advance_to(t, &mut NoPath)?;
            sink.observe(k, r, sim.state())?;
        }
    }
    Ok(())
}
