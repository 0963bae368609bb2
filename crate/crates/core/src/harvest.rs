//! Discrete-time Markov-chain model of each sensor's energy-harvesting
//! process.
//!
//! A chain is a set of recharge states with a row-stochastic transition
//! matrix; state `m` recharges the battery at a constant rate `rates[m]`
//! watts for the duration of a slot. The long-term behavior is captured by
//! the stationary distribution, computed exactly from the balance equations.

use crate::linalg::solve_dense;
use crate::scalar::Real;
use rand::Rng;
use thiserror::Error;

/// Tolerance for "each transition row sums to one".
const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    /// States, transition matrix and rate vector must agree in dimension,
    /// with at least one state.
    #[error("chain dimensions inconsistent: {0}")]
    Dimension(String),
    /// A transition entry is outside [0, 1] or a row does not sum to 1.
    #[error("transition matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    /// A recharge rate is negative or non-finite.
    #[error("invalid recharge rate at state {0}")]
    InvalidRate(usize),
    /// The chain has more than one closed communicating class, so the
    /// stationary vector is not unique.
    #[error("chain is reducible: state {unreachable} is not reachable from state {from}")]
    ReducibleChain { from: usize, unreachable: usize },
}

/// A sensor's energy-harvesting chain.
///
/// States are kept sorted by recharge rate (non-decreasing); the constructor
/// canonicalizes the input ordering, permuting the transition matrix
/// consistently, so observable quantities are invariant under relabeling.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestChain<T> {
    states: Vec<String>,
    transition: Vec<Vec<T>>,
    rates: Vec<T>,
}

impl<T: Real> HarvestChain<T> {
    /// Builds a chain from state labels, a row-stochastic transition matrix
    /// (row `i` holds the probabilities of moving from state `i`) and the
    /// per-state recharge rates in watts.
    pub fn new(
        states: Vec<String>,
        transition: Vec<Vec<T>>,
        rates: Vec<T>,
    ) -> Result<Self, ChainError> {
        let n = states.len();
        if n == 0 {
            return Err(ChainError::Dimension("no states".into()));
        }
        if transition.len() != n || rates.len() != n {
            return Err(ChainError::Dimension(format!(
                "{} states but {}x? transition rows and {} rates",
                n,
                transition.len(),
                rates.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(ChainError::Dimension(format!(
                    "transition row {} has length {}, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            let mut sum = T::zero();
            for &p in row {
                if !(p >= T::zero() && p <= T::one()) {
                    return Err(ChainError::NotStochastic(format!(
                        "entry {p} in row {i} outside [0, 1]"
                    )));
                }
                sum = sum + p;
            }
            if (sum - T::one()).abs() > T::of(ROW_SUM_TOL).max(T::epsilon() * T::of(8.0)) {
                return Err(ChainError::NotStochastic(format!(
                    "row {i} sums to {sum}"
                )));
            }
        }
        for (i, &g) in rates.iter().enumerate() {
            if !(g.is_finite() && g >= T::zero()) {
                return Err(ChainError::InvalidRate(i));
            }
        }

        // Canonical state order: non-decreasing recharge rate (stable).
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| rates[a].partial_cmp(&rates[b]).unwrap());
        let states = order.iter().map(|&i| states[i].clone()).collect();
        let rates = order.iter().map(|&i| rates[i]).collect();
        let transition = order
            .iter()
            .map(|&i| order.iter().map(|&j| transition[i][j]).collect())
            .collect();

        let chain = Self {
            states,
            transition,
            rates,
        };
        chain.check_irreducible()?;
        Ok(chain)
    }

    /// Two-state convenience constructor: `p_up` is the probability of
    /// moving from the low-rate to the high-rate state, `p_down` the reverse.
    pub fn two_state(p_up: T, p_down: T, rate_low: T, rate_high: T) -> Result<Self, ChainError> {
        Self::new(
            vec!["low".into(), "high".into()],
            vec![
                vec![T::one() - p_up, p_up],
                vec![p_down, T::one() - p_down],
            ],
            vec![rate_low, rate_high],
        )
    }

    /// Single absorbing state recharging at a constant `rate`.
    pub fn constant(rate: T) -> Result<Self, ChainError> {
        Self::new(vec!["const".into()], vec![vec![T::one()]], vec![rate])
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn transition(&self) -> &[Vec<T>] {
        &self.transition
    }

    /// Recharge rates in watts, non-decreasing.
    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    /// Every state must reach every other state through positive-probability
    /// edges; otherwise the stationary vector is not unique.
    fn check_irreducible(&self) -> Result<(), ChainError> {
        let n = self.len();
        for from in 0..n {
            let mut seen = vec![false; n];
            let mut stack = vec![from];
            seen[from] = true;
            while let Some(s) = stack.pop() {
                for (next, &p) in self.transition[s].iter().enumerate() {
                    if p > T::zero() && !seen[next] {
                        seen[next] = true;
                        stack.push(next);
                    }
                }
            }
            if let Some(unreachable) = seen.iter().position(|&v| !v) {
                return Err(ChainError::ReducibleChain { from, unreachable });
            }
        }
        Ok(())
    }
}

/// Stationary distribution of a [`HarvestChain`].
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState<T> {
    pi: Vec<T>,
}

impl<T: Real> SteadyState<T> {
    pub fn probabilities(&self) -> &[T] {
        &self.pi
    }
}

/// Solves the balance equations `piᵀ P = piᵀ`, `Σ pi = 1`.
///
/// The system `(Pᵀ - I) pi = 0` has rank `n - 1` for an irreducible chain;
/// the last row is replaced by the normalization equation and the square
/// system solved by Gaussian elimination with partial pivoting.
pub fn steady_state<T: Real>(chain: &HarvestChain<T>) -> Result<SteadyState<T>, ChainError> {
    chain.check_irreducible()?;
    let n = chain.len();
    let p = chain.transition();

    let mut a = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j][i]; // Pᵀ
        }
        a[i][i] = a[i][i] - T::one();
    }
    for j in 0..n {
        a[n - 1][j] = T::one();
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();

    let mut pi = solve_dense(a, b).ok_or(ChainError::ReducibleChain {
        from: 0,
        unreachable: 0,
    })?;
    // Roundoff can leave tiny negative entries on near-degenerate chains.
    for v in pi.iter_mut() {
        if *v < T::zero() {
            debug_assert!(*v > -T::of(1e-10));
            *v = T::zero();
        }
    }
    Ok(SteadyState { pi })
}

/// Long-term average recharging rate `piᵀ g` in watts.
pub fn average_rate<T: Real>(chain: &HarvestChain<T>) -> Result<T, ChainError> {
    let ss = steady_state(chain)?;
    Ok(ss
        .probabilities()
        .iter()
        .zip(chain.rates())
        .map(|(&p, &g)| p * g)
        .sum())
}

/// Draws the next state from row `current` of the transition matrix using a
/// single uniform variate from `rng`.
pub fn step<T: Real, R: Rng + ?Sized>(
    chain: &HarvestChain<T>,
    current: usize,
    rng: &mut R,
) -> usize {
    let row = &chain.transition()[current];
    let u: T = rng.random_range(T::zero()..T::one());
    let mut acc = T::zero();
    for (next, &p) in row.iter().enumerate() {
        acc = acc + p;
        if u < acc {
            return next;
        }
    }
    // Row sums to 1 within tolerance; u landed in the residual sliver.
    row.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state_chain(p_up: f64, p_down: f64) -> HarvestChain<f64> {
        HarvestChain::two_state(p_up, p_down, 1e-3, 3e-3).unwrap()
    }

    #[test]
    fn steady_state_two_state_hand_solved() {
        // pi_1 * 0.7 = pi_2 * 0.3 and pi_1 + pi_2 = 1 give pi = (0.3, 0.7).
        let chain = two_state_chain(0.7, 0.3);
        let pi = steady_state(&chain).unwrap();
        assert!((pi.probabilities()[0] - 0.3).abs() < 1e-12);
        assert!((pi.probabilities()[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn steady_state_single_state() {
        let chain = HarvestChain::constant(5e-3).unwrap();
        let pi = steady_state(&chain).unwrap();
        assert_eq!(pi.probabilities(), &[1.0]);
    }

    #[test]
    fn steady_state_symmetric() {
        let chain = two_state_chain(0.5, 0.5);
        let pi = steady_state(&chain).unwrap();
        assert!((pi.probabilities()[0] - 0.5).abs() < 1e-12);
        assert!((pi.probabilities()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn steady_state_satisfies_balance_and_normalization() {
        let chain = HarvestChain::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.2, 0.5, 0.3],
                vec![0.4, 0.1, 0.5],
                vec![0.25, 0.25, 0.5],
            ],
            vec![0.0, 1e-3, 2e-3],
        )
        .unwrap();
        let pi = steady_state(&chain).unwrap();
        let p = pi.probabilities();
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for j in 0..3 {
            let image: f64 = (0..3).map(|i| p[i] * chain.transition()[i][j]).sum();
            assert!((image - p[j]).abs() < 1e-10, "component {j}");
        }
    }

    #[test]
    fn average_rate_hand_dot_product() {
        // pi = (0.3, 0.7), g = (1 mW, 3 mW) -> 2.4 mW.
        let chain = two_state_chain(0.7, 0.3);
        let avg = average_rate(&chain).unwrap();
        assert!((avg - 2.4e-3).abs() < 1e-15);
    }

    #[test]
    fn average_rate_single_state() {
        let chain = HarvestChain::constant(5e-3).unwrap();
        assert_eq!(average_rate(&chain).unwrap(), 5e-3);
    }

    #[test]
    fn average_rate_constant_rates() {
        let chain = HarvestChain::<f64>::two_state(0.5, 0.5, 2e-3, 2e-3).unwrap();
        assert!((average_rate(&chain).unwrap() - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn average_rate_within_rate_range() {
        let chain = two_state_chain(0.64, 0.27);
        let avg = average_rate(&chain).unwrap();
        assert!(avg >= 1e-3 && avg <= 3e-3);
    }

    #[test]
    fn reducible_chain_rejected() {
        let err = HarvestChain::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1e-3, 2e-3],
        )
        .unwrap_err();
        assert!(matches!(err, ChainError::ReducibleChain { .. }));
    }

    #[test]
    fn non_stochastic_rejected() {
        let err = HarvestChain::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.6], vec![0.3, 0.7]],
            vec![1e-3, 2e-3],
        )
        .unwrap_err();
        assert!(matches!(err, ChainError::NotStochastic(_)));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = HarvestChain::new(
            vec!["a".into()],
            vec![vec![1.0, 0.0]],
            vec![1e-3],
        )
        .unwrap_err();
        assert!(matches!(err, ChainError::Dimension(_)));
    }

    #[test]
    fn constructor_canonicalizes_state_order() {
        // Same chain presented with states swapped; rates end up sorted and
        // the transition matrix is permuted to match.
        let chain = HarvestChain::new(
            vec!["high".into(), "low".into()],
            vec![vec![0.7, 0.3], vec![0.7, 0.3]],
            vec![3e-3, 1e-3],
        )
        .unwrap();
        assert_eq!(chain.rates(), &[1e-3, 3e-3]);
        assert_eq!(chain.states()[0], "low");
        // Row for "low" is the old row 1: stays (0.3 -> low, 0.7 -> high).
        assert_eq!(chain.transition()[0], vec![0.3, 0.7]);
    }

    #[test]
    fn step_deterministic_rows() {
        let chain = HarvestChain::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1e-3, 2e-3],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(step(&chain, 0, &mut rng), 1);
            assert_eq!(step(&chain, 1, &mut rng), 0);
        }
    }

    #[test]
    fn step_law_of_large_numbers() {
        // Row (0.7, 0.3) from state 0: frequency of state 1 ~ 0.3.
        let chain = two_state_chain(0.3, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let ones = (0..n).filter(|_| step(&chain, 0, &mut rng) == 1).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.005, "freq = {freq}");
    }

    #[test]
    fn occupancy_converges_to_steady_state() {
        let chain = two_state_chain(0.7, 0.3);
        let pi = steady_state(&chain).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0u64; 2];
        let mut state = 0;
        let n = 1_000_000;
        for _ in 0..n {
            state = step(&chain, state, &mut rng);
            counts[state] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let occupancy = c as f64 / n as f64;
            assert!(
                (occupancy - pi.probabilities()[i]).abs() < 0.01,
                "state {i}: occupancy {occupancy} vs pi {}",
                pi.probabilities()[i]
            );
        }
    }

    #[test]
    fn f32_instantiation_works() {
        let chain = HarvestChain::<f32>::two_state(0.7, 0.3, 1e-3, 3e-3).unwrap();
        let pi = steady_state(&chain).unwrap();
        assert!((pi.probabilities()[0] - 0.3).abs() < 1e-5);
    }
}
