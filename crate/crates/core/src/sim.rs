//! Slot-by-slot network simulation.
//!
//! Each slot: advance every sensor's harvest chain, sample shadowing, hand
//! the optimizer a [`SlotContext`], apply the chosen allocation, and update
//! batteries with overflow clamping. A single seeded rng stream with a fixed
//! consumption order (sensors in index order, chain step then shadowing)
//! makes runs bit-reproducible; runs that differ only in allocation method
//! see identical harvest and shadowing draws, so method comparisons are
//! paired.

use crate::channel::{
    lambda_coeff, sample_shadowing, Activity, ActivityProfile, ParamError, SensorParams,
    ShadowSample,
};
use crate::harvest::{average_rate, step, steady_state, ChainError, HarvestChain};
use crate::optimizer::{
    allocate, energy_slack, rate_bounds, Allocation, Method, OptimizerError, SensorSlot,
    SlotContext,
};
use crate::scalar::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Stream ids carving the seed into independent substreams.
const PARAM_STREAM: u64 = 0;
const TRAJECTORY_STREAM: u64 = 1;


#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("slot {slot}: allocation failed: {source}")]
    Alloc {
        slot: usize,
        #[source]
        source: OptimizerError,
    },
    /// The allocator produced rates that drain a battery below its minimum;
    /// indicates a model or optimizer bug, not a runtime condition.
    #[error("slot {slot}, sensor {sensor}: end-of-slot energy {energy:e} J below minimum {e_min:e} J")]
    EnergyViolation {
        slot: usize,
        sensor: usize,
        energy: f64,
        e_min: f64,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// How per-sensor harvest chains are produced at scenario build time.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainTemplate<T> {
    /// Every sensor uses this chain.
    Shared(HarvestChain<T>),
    /// Two-state chains with per-sensor transition probabilities drawn
    /// uniformly from the given ranges (low-to-high, high-to-low).
    TwoStateRanges {
        rate_low: T,
        rate_high: T,
        p_up: (T, T),
        p_down: (T, T),
    },
}

impl<T: Real> ChainTemplate<T> {
    /// Built-in per-activity defaults. The transition-probability ranges are
    /// the reference experiment's; the recharge rates are this crate's
    /// documented defaults (the activities are ordered so that more movement
    /// harvests more) and can be overridden in scenario config.
    pub fn default_for(activity: Activity) -> Self {
        let (lo, hi) = match activity {
            Activity::Relaxing => (0.5e-3, 1.5e-3),
            Activity::Walking => (1.0e-3, 3.0e-3),
            Activity::Running => (2.0e-3, 6.0e-3),
        };
        ChainTemplate::TwoStateRanges {
            rate_low: T::of(lo),
            rate_high: T::of(hi),
            p_up: (T::of(0.6), T::of(0.8)),
            p_down: (T::of(0.2), T::of(0.4)),
        }
    }

    /// Representative chain (midpoint probabilities for ranged templates).
    fn representative(&self) -> Result<HarvestChain<T>, ChainError> {
        match self {
            ChainTemplate::Shared(chain) => Ok(chain.clone()),
            ChainTemplate::TwoStateRanges {
                rate_low,
                rate_high,
                p_up,
                p_down,
            } => {
                let half = T::of(0.5);
                HarvestChain::two_state(
                    (p_up.0 + p_up.1) * half,
                    (p_down.0 + p_down.1) * half,
                    *rate_low,
                    *rate_high,
                )
            }
        }
    }
}

/// A fully materialized experiment: per-sensor parameters and chains plus
/// run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub sensors: Vec<SensorParams<T>>,
    /// Activity, shadowing spread and representative chain.
    pub activity: ActivityProfile<T>,
    /// Realized harvest chain per sensor.
    pub chains: Vec<HarvestChain<T>>,
    /// Number of slots T.
    pub slots: usize,
    /// Slot length (s).
    pub tau: T,
    pub method: Method,
    pub seed: u64,
}

impl<T: Real> Scenario<T> {
    /// Builder preloaded with the reference experiment defaults for the
    /// activity: 10 sensors, 50 slots of 5 s, batteries 0.01..0.11 J
    /// starting at 0.1 J, ψ = 2e-8 J/b, θ = 6e-8 W, ζ = 8e-8 J/b/m^mp,
    /// distances U(0.3, 0.7) m, path loss exponents U(1.4, 4.4).
    pub fn builder(activity: Activity) -> ScenarioBuilder<T> {
        ScenarioBuilder::new(activity)
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    /// Long-term average harvest rate per sensor (W); drives the baseline.
    pub fn average_rates(&self) -> Vec<T> {
        self.chains
            .iter()
            .map(|c| average_rate(c).expect("chain irreducibility checked at build"))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioBuilder<T> {
    activity: Activity,
    n_sensors: usize,
    slots: usize,
    tau: T,
    seed: u64,
    method: Method,
    e_min: T,
    e_max: T,
    e_ini: T,
    psi: T,
    theta: T,
    zeta: T,
    d_range: (T, T),
    mp_range: (T, T),
    d_list: Option<Vec<T>>,
    mp_list: Option<Vec<T>>,
    sigma_db: Option<T>,
    chain: ChainTemplate<T>,
}

impl<T: Real> ScenarioBuilder<T> {
    pub fn new(activity: Activity) -> Self {
        Self {
            activity,
            n_sensors: 10,
            slots: 50,
            tau: T::of(5.0),
            seed: 1,
            method: Method::Optimal,
            e_min: T::of(0.01),
            e_max: T::of(0.11),
            e_ini: T::of(0.1),
            psi: T::of(2e-8),
            theta: T::of(6e-8),
            zeta: T::of(8e-8),
            d_range: (T::of(0.3), T::of(0.7)),
            mp_range: (T::of(1.4), T::of(4.4)),
            d_list: None,
            mp_list: None,
            sigma_db: None,
            chain: ChainTemplate::default_for(activity),
        }
    }

    pub fn n_sensors(mut self, n: usize) -> Self {
        self.n_sensors = n;
        self
    }

    pub fn slots(mut self, t: usize) -> Self {
        self.slots = t;
        self
    }

    pub fn tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn battery(mut self, e_min: T, e_max: T, e_ini: T) -> Self {
        self.e_min = e_min;
        self.e_max = e_max;
        self.e_ini = e_ini;
        self
    }

    pub fn costs(mut self, psi: T, theta: T, zeta: T) -> Self {
        self.psi = psi;
        self.theta = theta;
        self.zeta = zeta;
        self
    }

    pub fn d_range(mut self, lo: T, hi: T) -> Self {
        self.d_range = (lo, hi);
        self
    }

    pub fn mp_range(mut self, lo: T, hi: T) -> Self {
        self.mp_range = (lo, hi);
        self
    }

    /// Explicit per-sensor distances instead of uniform draws.
    pub fn distances(mut self, d: Vec<T>) -> Self {
        self.d_list = Some(d);
        self
    }

    /// Explicit per-sensor path loss exponents instead of uniform draws.
    pub fn path_loss_exponents(mut self, mp: Vec<T>) -> Self {
        self.mp_list = Some(mp);
        self
    }

    /// Overrides the activity's default shadowing spread.
    pub fn sigma_db(mut self, sigma: T) -> Self {
        self.sigma_db = Some(sigma);
        self
    }

    pub fn chain(mut self, chain: ChainTemplate<T>) -> Self {
        self.chain = chain;
        self
    }

    /// Draws per-sensor parameters (stream 0 of the seed; the trajectory
    /// uses stream 1) and validates everything.
    pub fn build(&self) -> Result<Scenario<T>, BuildError> {
        if self.n_sensors == 0 {
            return Err(BuildError::Invalid("n_sensors must be >= 1".into()));
        }
        if self.slots == 0 {
            return Err(BuildError::Invalid("slots must be >= 1".into()));
        }
        if !(self.tau.is_finite() && self.tau > T::zero()) {
            return Err(BuildError::Invalid(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        for (name, (lo, hi)) in [("d_range", self.d_range), ("mp_range", self.mp_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(BuildError::Invalid(format!("{name} is not a valid range")));
            }
        }
        for (name, list) in [("distances", &self.d_list), ("path loss exponents", &self.mp_list)] {
            if let Some(list) = list {
                if list.len() != self.n_sensors {
                    return Err(BuildError::Invalid(format!(
                        "{} sensors but {} {name}",
                        self.n_sensors,
                        list.len()
                    )));
                }
            }
        }
        if let ChainTemplate::TwoStateRanges { p_up, p_down, .. } = &self.chain {
            for (name, (lo, hi)) in [("p_up", *p_up), ("p_down", *p_down)] {
                if !(lo > T::zero() && hi < T::one() && lo <= hi) {
                    return Err(BuildError::Invalid(format!(
                        "{name} range must lie strictly inside (0, 1)"
                    )));
                }
            }
        }

        let sigma = self
            .sigma_db
            .unwrap_or_else(|| self.activity.default_sigma_db());
        let profile = ActivityProfile::new(self.activity, sigma, self.chain.representative()?)?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(PARAM_STREAM);

        let mut sensors = Vec::with_capacity(self.n_sensors);
        let mut chains = Vec::with_capacity(self.n_sensors);
        for i in 0..self.n_sensors {
            let d = match &self.d_list {
                Some(list) => list[i],
                None => draw_in(&mut rng, self.d_range),
            };
            let mp = match &self.mp_list {
                Some(list) => list[i],
                None => draw_in(&mut rng, self.mp_range),
            };
            sensors.push(SensorParams::new(
                self.psi, self.theta, self.zeta, d, mp, self.e_min, self.e_max, self.e_ini,
            )?);
            chains.push(match &self.chain {
                ChainTemplate::Shared(chain) => chain.clone(),
                ChainTemplate::TwoStateRanges {
                    rate_low,
                    rate_high,
                    p_up,
                    p_down,
                } => {
                    let up = draw_in(&mut rng, *p_up);
                    let down = draw_in(&mut rng, *p_down);
                    HarvestChain::two_state(up, down, *rate_low, *rate_high)?
                }
            });
        }

        Ok(Scenario {
            sensors,
            activity: profile,
            chains,
            slots: self.slots,
            tau: self.tau,
            method: self.method,
            seed: self.seed,
        })
    }
}

fn draw_in<T: Real, R: Rng + ?Sized>(rng: &mut R, (lo, hi): (T, T)) -> T {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Per-sensor trace entry for one slot. `energy_after` is computed exactly
/// as `((energy_before + tau*phi) - tau*power) - overflow`; consumers can
/// re-evaluate that expression and compare bitwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSensorRecord<T> {
    pub energy_before: T,
    /// Recharge rate sampled for this slot (W).
    pub phi: T,
    pub shadow_factor: T,
    pub rate: T,
    pub power: T,
    /// Harvested energy discarded at the battery cap (J).
    pub overflow: T,
    pub energy_after: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord<T> {
    /// 1-based slot index.
    pub slot: usize,
    pub sensors: Vec<SlotSensorRecord<T>>,
    pub network_ee: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub mean_ee: T,
    pub min_ee: T,
    pub max_ee: T,
    pub total_overflow: T,
    /// Slot-sensor pairs where a depleted sensor had to sleep.
    pub depletion_events: usize,
}

impl<T: Real> Summary<T> {
    fn from_records(records: &[SlotRecord<T>], depletion_events: usize) -> Self {
        let mut mean = T::zero();
        let mut min = T::infinity();
        let mut max = T::neg_infinity();
        let mut overflow = T::zero();
        for r in records {
            mean = mean + r.network_ee;
            min = min.min(r.network_ee);
            max = max.max(r.network_ee);
            for s in &r.sensors {
                overflow = overflow + s.overflow;
            }
        }
        Summary {
            mean_ee: mean / T::of(records.len() as f64),
            min_ee: min,
            max_ee: max,
            total_overflow: overflow,
            depletion_events,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    pub records: Vec<SlotRecord<T>>,
    pub summary: Summary<T>,
}

/// Counterfactual per-slot EE of one method evaluated on the driver's
/// contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodTrace<T> {
    pub method: Method,
    pub per_slot_ee: Vec<T>,
}

/// A trajectory driven by `scenario.method` with additional methods scored
/// on each slot's context (batteries follow the driver).
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<T> {
    pub driver: SimResult<T>,
    pub observers: Vec<MethodTrace<T>>,
}

/// Applies an allocation to one slot: per sensor, inflow `tau*phi` and
/// consumption `tau*power` move the battery; anything above `e_max` is
/// discarded as overflow `F`, so `energy_after = pre-clamp energy - F`
/// lands back at the cap.
pub fn run_slot<T: Real>(
    slot: usize,
    ctx: &SlotContext<T>,
    shadows: &[ShadowSample<T>],
    alloc: &Allocation<T>,
) -> Result<SlotRecord<T>, SimError> {
    let mut sensors = Vec::with_capacity(ctx.sensors.len());
    for (i, s) in ctx.sensors.iter().enumerate() {
        let rate = alloc.rates[i];
        let pw = alloc.powers[i];
        let pre_clamp = (s.energy + ctx.tau * s.recharge) - ctx.tau * pw;
        if pre_clamp < s.e_min - energy_slack(s.e_max) {
            return Err(SimError::EnergyViolation {
                slot,
                sensor: i,
                energy: pre_clamp.to_f64().unwrap_or(f64::NAN),
                e_min: s.e_min.to_f64().unwrap_or(f64::NAN),
            });
        }
        let overflow = if pre_clamp > s.e_max {
            pre_clamp - s.e_max
        } else {
            T::zero()
        };
        let energy_after = pre_clamp - overflow;
        sensors.push(SlotSensorRecord {
            energy_before: s.energy,
            phi: s.recharge,
            shadow_factor: shadows[i].factor,
            rate,
            power: pw,
            overflow,
            energy_after,
        });
    }
    Ok(SlotRecord {
        slot,
        sensors,
        network_ee: alloc.ee,
    })
}

/// Runs the scenario's trajectory, scoring `observers` on every slot context
/// alongside the driving method.
pub fn run_comparison<T: Real>(
    sc: &Scenario<T>,
    observers: &[Method],
) -> Result<Comparison<T>, SimError> {
    let n = sc.n_sensors();
    let g_avg = sc.average_rates();

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(TRAJECTORY_STREAM);

    // Initial chain states are drawn from each chain's stationary
    // distribution so the harvest process starts in its long-run regime.
    let mut state: Vec<usize> = sc
        .chains
        .iter()
        .map(|chain| {
            let pi = steady_state(chain).expect("chain irreducibility checked at build");
            let u: T = rng.random_range(T::zero()..T::one());
            let mut acc = T::zero();
            for (idx, &p) in pi.probabilities().iter().enumerate() {
                acc = acc + p;
                if u < acc {
                    return idx;
                }
            }
            chain.len() - 1
        })
        .collect();

    let mut energy: Vec<T> = sc.sensors.iter().map(|p| p.e_ini).collect();
    let mut records = Vec::with_capacity(sc.slots);
    let mut traces: Vec<Vec<T>> = vec![Vec::with_capacity(sc.slots); observers.len()];
    let mut depletion_events = 0usize;

    for t in 1..=sc.slots {
        let mut shadows = Vec::with_capacity(n);
        let mut slots = Vec::with_capacity(n);
        for i in 0..n {
            state[i] = step(&sc.chains[i], state[i], &mut rng);
            let shadow = sample_shadowing(&sc.activity, &mut rng);
            shadows.push(shadow);
            slots.push(SensorSlot {
                energy: energy[i],
                recharge: sc.chains[i].rates()[state[i]],
                lambda: lambda_coeff(&sc.sensors[i], shadow),
                theta: sc.sensors[i].theta,
                e_min: sc.sensors[i].e_min,
                e_max: sc.sensors[i].e_max,
                overflow_assumed: T::zero(),
            });
        }
        let ctx = SlotContext {
            tau: sc.tau,
            sensors: slots,
        };
        depletion_events += rate_bounds(&ctx)
            .active
            .iter()
            .filter(|&&a| !a)
            .count();

        let alloc =
            allocate(sc.method, &ctx, &g_avg).map_err(|source| SimError::Alloc { slot: t, source })?;
        for (trace, &method) in traces.iter_mut().zip(observers) {
            let ee = if method == sc.method {
                alloc.ee
            } else {
                allocate(method, &ctx, &g_avg)
                    .map_err(|source| SimError::Alloc { slot: t, source })?
                    .ee
            };
            trace.push(ee);
        }

        let record = run_slot(t, &ctx, &shadows, &alloc)?;
        for (i, s) in record.sensors.iter().enumerate() {
            energy[i] = s.energy_after;
        }
        records.push(record);
    }

    let summary = Summary::from_records(&records, depletion_events);
    Ok(Comparison {
        driver: SimResult { records, summary },
        observers: observers
            .iter()
            .zip(traces)
            .map(|(&method, per_slot_ee)| MethodTrace {
                method,
                per_slot_ee,
            })
            .collect(),
    })
}

/// Runs the scenario with its own method only.
pub fn run_scenario<T: Real>(sc: &Scenario<T>) -> Result<SimResult<T>, SimError> {
    run_comparison(sc, &[]).map(|c| c.driver)
}

/// Flat CSV trace: one row per sensor per slot, network EE repeated per row.
/// Floats use the shortest round-trip decimal form.
pub const CSV_HEADER: &str = "slot,sensor,energy_before_J,phi_W,shadow_factor,rate_bps,power_W,overflow_J,energy_after_J,network_ee_bpJ,method,seed";

pub fn to_csv<T: Real>(sc: &Scenario<T>, result: &SimResult<T>) -> String {
    let mut out = String::with_capacity(64 * result.records.len() * sc.n_sensors() + 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for record in &result.records {
        for (i, s) in record.sensors.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                record.slot,
                i,
                s.energy_before,
                s.phi,
                s.shadow_factor,
                s.rate,
                s.power,
                s.overflow,
                s.energy_after,
                record.network_ee,
                sc.method,
                sc.seed
            ));
        }
    }
    out
}
