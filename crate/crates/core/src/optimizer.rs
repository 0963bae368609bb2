//! Per-slot energy-efficiency maximization.
//!
//! The slot problem maximizes `Σ rᵢ / Σ (λᵢ rᵢ + θᵢ)` over per-sensor rates
//! boxed by battery constraints: keeping the end-of-slot energy above
//! `e_min` caps the rate from above, staying below capacity `e_max` forces a
//! minimum rate. The linear-fractional objective is solved exactly by a
//! Charnes-Cooper transformation (`z = r·α`, denominator normalized to 1)
//! into an LP over `(z, α)`, and approximately by a prefix sweep over
//! sensors ordered by their per-bit cost λ. An exhaustive corner scan and a
//! steady-rate scheme complete the allocator set.

use crate::channel::power;
use crate::lp::{solve_simplex, LpError, LpProblem, LpSolution};
use crate::scalar::Real;
use thiserror::Error;

/// Exhaustive corner enumeration is exponential in the active-sensor count.
pub const EXHAUSTIVE_CAP: usize = 16;

/// Post-solve floor on the Charnes-Cooper normalization variable.
const ALPHA_MIN: f64 = 1e-15;

/// Relative tolerance for snapping LP-recovered rates onto their bounds.
const SNAP_REL_TOL: f64 = 1e-6;

/// Slack on the battery box: transmitting at exactly `r_max` legitimately
/// lands the battery a few ulps below `e_min`.
pub(crate) fn energy_slack<T: Real>(e_max: T) -> T {
    T::of(1e-12).max(T::epsilon() * e_max.abs() * T::of(4.0))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    /// Every sensor is depleted; no rate allocation exists.
    #[error("no active sensors in this slot")]
    NoActiveSensors,
    /// The slot LP is infeasible, which signals inconsistent battery bounds.
    #[error("slot LP infeasible: battery bounds are inconsistent")]
    InfeasibleSlot,
    /// The recovered normalization variable is numerically zero.
    #[error("Charnes-Cooper normalization variable degenerate: alpha = {alpha:e}")]
    DegenerateAlpha { alpha: f64 },
    /// Too many active sensors for the exhaustive corner scan.
    #[error("{active} active sensors exceed the exhaustive cap of {cap}")]
    TooLarge { active: usize, cap: usize },
    /// The normalized LP is bounded by construction; this is a solver bug.
    #[error("slot LP reported unbounded")]
    UnexpectedUnbounded,
    #[error("invalid slot context: {0}")]
    InvalidContext(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Allocation strategy tag; the names appear verbatim in CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Optimal,
    Sweep,
    Exhaustive,
    Baseline,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Optimal,
        Method::Sweep,
        Method::Exhaustive,
        Method::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Sweep => "sweep",
            Method::Exhaustive => "exhaustive",
            Method::Baseline => "baseline",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(Method::Optimal),
            "sweep" => Ok(Method::Sweep),
            "exhaustive" => Ok(Method::Exhaustive),
            "baseline" => Ok(Method::Baseline),
            other => Err(format!(
                "unknown method '{other}' (expected optimal, sweep, exhaustive or baseline)"
            )),
        }
    }
}

/// One sensor's state as the optimizer sees it for a single slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSlot<T> {
    /// Battery energy at the start of the slot (J).
    pub energy: T,
    /// Recharge rate sampled for this slot (W).
    pub recharge: T,
    /// Per-bit energy cost for this slot, shadowing included (J/bit).
    pub lambda: T,
    /// Transmit-electronics power (W).
    pub theta: T,
    /// Minimum energy level (J).
    pub e_min: T,
    /// Battery capacity (J).
    pub e_max: T,
    /// Overflow assumed when computing bounds (J). Zero in the per-slot
    /// pipeline: actual overflow is only known after rates are chosen.
    pub overflow_assumed: T,
}

/// Everything the allocators need for one time slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotContext<T> {
    /// Slot length (s).
    pub tau: T,
    pub sensors: Vec<SensorSlot<T>>,
}

impl<T: Real> SlotContext<T> {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !(self.tau.is_finite() && self.tau > T::zero()) {
            return Err(OptimizerError::InvalidContext(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.sensors.is_empty() {
            return Err(OptimizerError::InvalidContext("no sensors".into()));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            if !(s.lambda.is_finite() && s.lambda > T::zero()) {
                return Err(OptimizerError::InvalidContext(format!(
                    "sensor {i}: lambda must be positive, got {}",
                    s.lambda
                )));
            }
            let slack = energy_slack(s.e_max);
            if !(s.energy >= s.e_min - slack && s.energy <= s.e_max + slack) {
                return Err(OptimizerError::InvalidContext(format!(
                    "sensor {i}: energy {} outside [{}, {}]",
                    s.energy, s.e_min, s.e_max
                )));
            }
            if s.overflow_assumed < T::zero()
                || s.recharge < T::zero()
                || s.theta < T::zero()
            {
                return Err(OptimizerError::InvalidContext(format!(
                    "sensor {i}: negative recharge, theta or assumed overflow"
                )));
            }
        }
        Ok(())
    }
}

/// Per-sensor feasible rate interval for one slot.
///
/// A sensor whose raw upper bound is negative cannot even power its
/// electronics without dropping below `e_min`; it is flagged inactive (it
/// sleeps: rate 0, power 0) and its bounds are reported as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBounds<T> {
    pub r_min: Vec<T>,
    pub r_max: Vec<T>,
    pub active: Vec<bool>,
}

impl<T: Real> RateBounds<T> {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Closed-form rate bounds from the battery constraints.
///
/// With headroom `H = e + τφ − τθ − F`: `r_max = (H − e_min) / (τλ)` keeps
/// the battery above `e_min`; `r_min = (H − e_max) / (τλ)` keeps it from
/// exceeding capacity. The raw lower bound is clamped to the non-negativity
/// constraint.
pub fn rate_bounds<T: Real>(ctx: &SlotContext<T>) -> RateBounds<T> {
    let n = ctx.sensors.len();
    let mut r_min = Vec::with_capacity(n);
    let mut r_max = Vec::with_capacity(n);
    let mut active = Vec::with_capacity(n);
    for s in &ctx.sensors {
        let denom = ctx.tau * s.lambda;
        let headroom = s.energy + ctx.tau * s.recharge - ctx.tau * s.theta - s.overflow_assumed;
        let raw_max = (headroom - s.e_min) / denom;
        let raw_min = (headroom - s.e_max) / denom;
        if raw_max < T::zero() {
            r_min.push(T::zero());
            r_max.push(T::zero());
            active.push(false);
        } else {
            r_min.push(raw_min.max(T::zero()));
            r_max.push(raw_max);
            active.push(true);
        }
    }
    RateBounds {
        r_min,
        r_max,
        active,
    }
}

/// A rate vector with its implied power vector and energy efficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    /// Source rates (bit/s); zero for inactive sensors.
    pub rates: Vec<T>,
    /// Consumed powers (W); zero for inactive (sleeping) sensors.
    pub powers: Vec<T>,
    /// Network energy efficiency `Σ rates / Σ powers` (bit/J).
    pub ee: T,
    pub method: Method,
}

impl<T: Real> Allocation<T> {
    /// Builds the allocation implied by `rates`: powers via the slot power
    /// model for active sensors, zero for sleeping ones, and the network EE.
    ///
    /// Every allocator funnels through this so that equal rate vectors
    /// produce bit-identical EE values.
    pub fn from_rates(
        ctx: &SlotContext<T>,
        bounds: &RateBounds<T>,
        rates: Vec<T>,
        method: Method,
    ) -> Self {
        let powers: Vec<T> = ctx
            .sensors
            .iter()
            .zip(rates.iter().zip(&bounds.active))
            .map(|(s, (&r, &active))| {
                if active {
                    power(s.lambda, r, s.theta)
                } else {
                    T::zero()
                }
            })
            .collect();
        let total_rate: T = rates.iter().copied().sum();
        let total_power: T = powers.iter().copied().sum();
        let ee = if total_power > T::zero() {
            total_rate / total_power
        } else {
            T::zero()
        };
        Self {
            rates,
            powers,
            ee,
            method,
        }
    }
}

/// Coefficients of the Charnes-Cooper LP over the active sensors.
///
/// Variables are `(z_1 … z_k, α)`; for each active sensor:
/// `a z + b α <= 0` is the upper rate bound, `-a z + c α <= 0` the lower,
/// and `Σ λ z + f α = 1` normalizes the fractional objective's denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct CcCoefficients<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    /// λ of each active sensor: the denominator's rate coefficients.
    pub e_vec: Vec<T>,
    /// Σθ over active sensors: the denominator's constant term.
    pub f_sum: T,
    /// Maps the LP's variable slots back to original sensor indexes.
    pub sensor_index: Vec<usize>,
}

/// Assembles the slot LP. The strict positivity of `z` and `α` in the
/// transformed problem is relaxed to non-negativity; `α > 0` is asserted
/// after solving.
pub fn build_cc_lp<T: Real>(
    ctx: &SlotContext<T>,
) -> Result<(LpProblem<T>, CcCoefficients<T>), OptimizerError> {
    ctx.validate()?;
    let bounds = rate_bounds(ctx);
    let actives: Vec<usize> = (0..ctx.sensors.len())
        .filter(|&i| bounds.active[i])
        .collect();
    if actives.is_empty() {
        return Err(OptimizerError::NoActiveSensors);
    }

    let k = actives.len();
    let mut coeffs = CcCoefficients {
        a: Vec::with_capacity(k),
        b: Vec::with_capacity(k),
        c: Vec::with_capacity(k),
        e_vec: Vec::with_capacity(k),
        f_sum: T::zero(),
        sensor_index: actives.clone(),
    };
    for &i in &actives {
        let s = &ctx.sensors[i];
        let inflow = ctx.tau * s.recharge;
        coeffs.a.push(ctx.tau * s.lambda);
        coeffs
            .b
            .push(s.e_min + s.overflow_assumed + ctx.tau * s.theta - s.energy - inflow);
        coeffs
            .c
            .push(s.energy + inflow - ctx.tau * s.theta - s.overflow_assumed - s.e_max);
        coeffs.e_vec.push(s.lambda);
        coeffs.f_sum = coeffs.f_sum + s.theta;
    }

    // Variables: z for each active sensor, then alpha.
    let mut objective = vec![T::one(); k + 1];
    objective[k] = T::zero();
    let mut lp = LpProblem::new(objective);
    for slot in 0..k {
        let mut upper = vec![T::zero(); k + 1];
        upper[slot] = coeffs.a[slot];
        upper[k] = coeffs.b[slot];
        lp.push_ineq(upper, T::zero());

        let mut lower = vec![T::zero(); k + 1];
        lower[slot] = -coeffs.a[slot];
        lower[k] = coeffs.c[slot];
        lp.push_ineq(lower, T::zero());
    }
    let mut norm = vec![T::zero(); k + 1];
    norm[..k].copy_from_slice(&coeffs.e_vec);
    norm[k] = coeffs.f_sum;
    lp.push_eq(norm, T::one());

    Ok((lp, coeffs))
}

/// Snaps a recovered rate onto its interval: values within a small relative
/// tolerance of a bound land exactly on it, so LP output and corner scans
/// produce bit-identical rate vectors.
fn snap<T: Real>(r: T, lo: T, hi: T) -> T {
    let tol = T::of(SNAP_REL_TOL) * hi.abs().max(T::one());
    if (r - hi).abs() <= tol {
        hi
    } else if (r - lo).abs() <= tol {
        lo
    } else {
        r.max(lo).min(hi)
    }
}

/// Exact per-slot optimum via the Charnes-Cooper LP.
///
/// Recovers `r = z/α`, snaps onto the rate box, and returns the allocation;
/// its EE equals the LP objective to within LP accuracy because the
/// normalization row pins the denominator to one.
pub fn solve_optimal<T: Real>(ctx: &SlotContext<T>) -> Result<Allocation<T>, OptimizerError> {
    let (lp, coeffs) = build_cc_lp(ctx)?;
    if log::log_enabled!(log::Level::Debug) {
        log::debug!("slot LP:\n{lp}");
    }
    let bounds = rate_bounds(ctx);
    let solution = solve_simplex(&lp)?;
    let (x, lp_value) = match &solution {
        LpSolution::Optimal { x, objective_value } => (x, *objective_value),
        LpSolution::Infeasible => return Err(OptimizerError::InfeasibleSlot),
        LpSolution::Unbounded => return Err(OptimizerError::UnexpectedUnbounded),
    };

    let k = coeffs.sensor_index.len();
    let alpha = x[k];
    if alpha < T::of(ALPHA_MIN) {
        return Err(OptimizerError::DegenerateAlpha {
            alpha: alpha.to_f64().unwrap_or(0.0),
        });
    }

    let mut rates = vec![T::zero(); ctx.sensors.len()];
    for (slot, &i) in coeffs.sensor_index.iter().enumerate() {
        let recovered = x[slot] / alpha;
        debug_assert!(
            recovered >= bounds.r_min[i] - T::of(SNAP_REL_TOL) * bounds.r_max[i].max(T::one())
                && recovered
                    <= bounds.r_max[i] + T::of(SNAP_REL_TOL) * bounds.r_max[i].max(T::one()),
            "recovered rate {recovered} outside bounds [{}, {}]",
            bounds.r_min[i],
            bounds.r_max[i]
        );
        rates[i] = snap(recovered, bounds.r_min[i], bounds.r_max[i]);
    }
    let allocation = Allocation::from_rates(ctx, &bounds, rates, Method::Optimal);
    debug_assert!(
        (allocation.ee - lp_value).abs() <= T::of(1e-9) * lp_value.abs().max(T::one()),
        "allocation EE {} deviates from LP objective {}",
        allocation.ee,
        lp_value
    );
    Ok(allocation)
}

/// Sums total rate and power for the corner assignment selected by `at_max`,
/// in sensor-index order (the same arithmetic as [`Allocation::from_rates`]).
fn corner_sums<T: Real>(
    ctx: &SlotContext<T>,
    bounds: &RateBounds<T>,
    mut at_max: impl FnMut(usize) -> bool,
) -> (T, T) {
    let mut total_rate = T::zero();
    let mut total_power = T::zero();
    for (i, s) in ctx.sensors.iter().enumerate() {
        if !bounds.active[i] {
            continue;
        }
        let r = if at_max(i) {
            bounds.r_max[i]
        } else {
            bounds.r_min[i]
        };
        total_rate = total_rate + r;
        total_power = total_power + power(s.lambda, r, s.theta);
    }
    (total_rate, total_power)
}

fn corner_rates<T: Real>(
    ctx: &SlotContext<T>,
    bounds: &RateBounds<T>,
    mut at_max: impl FnMut(usize) -> bool,
) -> Vec<T> {
    (0..ctx.sensors.len())
        .map(|i| {
            if !bounds.active[i] {
                T::zero()
            } else if at_max(i) {
                bounds.r_max[i]
            } else {
                bounds.r_min[i]
            }
        })
        .collect()
}

/// Sweep result together with the number of candidate allocations scored.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome<T> {
    pub allocation: Allocation<T>,
    /// Exactly `active sensors + 1`: one candidate per prefix length.
    pub candidates_evaluated: usize,
}

/// Low-complexity heuristic: sort active sensors by λ ascending (cheapest
/// bits first) and score the N+1 prefix assignments — candidate `k` puts the
/// `k` cheapest sensors at `r_max` and the rest at `r_min`. Ties keep the
/// smaller `k`; equal λ values keep sensor-index order.
pub fn suboptimal_sweep_detailed<T: Real>(
    ctx: &SlotContext<T>,
) -> Result<SweepOutcome<T>, OptimizerError> {
    ctx.validate()?;
    let bounds = rate_bounds(ctx);
    let mut order: Vec<usize> = (0..ctx.sensors.len())
        .filter(|&i| bounds.active[i])
        .collect();
    if order.is_empty() {
        return Err(OptimizerError::NoActiveSensors);
    }
    order.sort_by(|&a, &b| {
        ctx.sensors[a]
            .lambda
            .partial_cmp(&ctx.sensors[b].lambda)
            .unwrap()
            .then(a.cmp(&b))
    });
    // rank[i] = position of sensor i in the λ ordering.
    let mut rank = vec![usize::MAX; ctx.sensors.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }

    let n_active = order.len();
    let mut best: Option<(usize, T)> = None;
    let mut candidates_evaluated = 0;
    for k in 0..=n_active {
        let (total_rate, total_power) = corner_sums(ctx, &bounds, |i| rank[i] < k);
        let ee = if total_power > T::zero() {
            total_rate / total_power
        } else {
            T::zero()
        };
        candidates_evaluated += 1;
        let better = match best {
            None => true,
            Some((_, best_ee)) => ee > best_ee,
        };
        if better {
            best = Some((k, ee));
        }
    }
    let (best_k, _) = best.expect("at least one candidate");
    let rates = corner_rates(ctx, &bounds, |i| rank[i] < best_k);
    let allocation = Allocation::from_rates(ctx, &bounds, rates, Method::Sweep);
    Ok(SweepOutcome {
        allocation,
        candidates_evaluated,
    })
}

/// [`suboptimal_sweep_detailed`] without the instrumentation.
pub fn suboptimal_sweep<T: Real>(ctx: &SlotContext<T>) -> Result<Allocation<T>, OptimizerError> {
    Ok(suboptimal_sweep_detailed(ctx)?.allocation)
}

/// Scores every `{r_min, r_max}` corner assignment (2^N for N active
/// sensors) and returns the best; ties keep the lexicographically smallest
/// rate vector. Oracle for the claim that optima sit on box corners.
pub fn exhaustive_extremes<T: Real>(ctx: &SlotContext<T>) -> Result<Allocation<T>, OptimizerError> {
    ctx.validate()?;
    let bounds = rate_bounds(ctx);
    let actives: Vec<usize> = (0..ctx.sensors.len())
        .filter(|&i| bounds.active[i])
        .collect();
    if actives.is_empty() {
        return Err(OptimizerError::NoActiveSensors);
    }
    if actives.len() > EXHAUSTIVE_CAP {
        return Err(OptimizerError::TooLarge {
            active: actives.len(),
            cap: EXHAUSTIVE_CAP,
        });
    }
    // bit_of[i] = position of sensor i in the mask.
    let mut bit_of = vec![usize::MAX; ctx.sensors.len()];
    for (bit, &i) in actives.iter().enumerate() {
        bit_of[i] = bit;
    }

    let mut best_mask = 0u32;
    let mut best_ee: Option<T> = None;
    for mask in 0..(1u32 << actives.len()) {
        let (total_rate, total_power) =
            corner_sums(ctx, &bounds, |i| mask >> bit_of[i] & 1 == 1);
        let ee = if total_power > T::zero() {
            total_rate / total_power
        } else {
            T::zero()
        };
        let better = match best_ee {
            None => true,
            Some(b) => {
                ee > b
                    || (ee == b
                        && lex_less_mask(ctx, &bounds, &bit_of, mask, best_mask))
            }
        };
        if better {
            best_mask = mask;
            best_ee = Some(ee);
        }
    }
    let rates = corner_rates(ctx, &bounds, |i| best_mask >> bit_of[i] & 1 == 1);
    Ok(Allocation::from_rates(
        ctx,
        &bounds,
        rates,
        Method::Exhaustive,
    ))
}

/// Compares two corner assignments by the rate vectors they induce.
fn lex_less_mask<T: Real>(
    ctx: &SlotContext<T>,
    bounds: &RateBounds<T>,
    bit_of: &[usize],
    a: u32,
    b: u32,
) -> bool {
    for i in 0..ctx.sensors.len() {
        if !bounds.active[i] {
            continue;
        }
        let ra = if a >> bit_of[i] & 1 == 1 {
            bounds.r_max[i]
        } else {
            bounds.r_min[i]
        };
        let rb = if b >> bit_of[i] & 1 == 1 {
            bounds.r_max[i]
        } else {
            bounds.r_min[i]
        };
        if ra < rb {
            return true;
        }
        if ra > rb {
            return false;
        }
    }
    false
}

/// Constant-rate comparison scheme: each sensor transmits at the rate whose
/// expected consumption matches its long-term average harvest,
/// `r = (g_avg − θ) / λ`, clamped into the slot's feasible interval.
/// An approximation of steady-rate allocation, not a reproduction of any
/// particular scheme.
pub fn steady_rate_baseline<T: Real>(ctx: &SlotContext<T>, g_avg: &[T]) -> Allocation<T> {
    debug_assert_eq!(g_avg.len(), ctx.sensors.len());
    let bounds = rate_bounds(ctx);
    let rates: Vec<T> = ctx
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if !bounds.active[i] {
                return T::zero();
            }
            let target = (g_avg[i] - s.theta) / s.lambda;
            target.max(bounds.r_min[i]).min(bounds.r_max[i])
        })
        .collect();
    Allocation::from_rates(ctx, &bounds, rates, Method::Baseline)
}

/// Network energy efficiency `Σ r / Σ (λᵢ rᵢ + θᵢ)` in bit/J.
pub fn energy_efficiency<T: Real>(rates: &[T], lambdas: &[T], thetas: &[T]) -> T {
    debug_assert!(rates.len() == lambdas.len() && rates.len() == thetas.len());
    let total_rate: T = rates.iter().copied().sum();
    let total_power: T = rates
        .iter()
        .zip(lambdas.iter().zip(thetas))
        .map(|(&r, (&l, &t))| power(l, r, t))
        .sum();
    total_rate / total_power
}

/// Runs the allocator selected by `method`; `g_avg` (per-sensor long-term
/// harvest rates, W) feeds only the baseline.
pub fn allocate<T: Real>(
    method: Method,
    ctx: &SlotContext<T>,
    g_avg: &[T],
) -> Result<Allocation<T>, OptimizerError> {
    match method {
        Method::Optimal => solve_optimal(ctx),
        Method::Sweep => suboptimal_sweep(ctx),
        Method::Exhaustive => exhaustive_extremes(ctx),
        Method::Baseline => Ok(steady_rate_baseline(ctx, g_avg)),
    }
}
