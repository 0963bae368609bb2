//! Two-phase tableau simplex with Bland's rule.
//!
//! Phase 1 drives artificial variables (one per equality row and per
//! inequality row whose slack basis is infeasible) to zero; phase 2
//! maximizes the real objective. Bland's pivoting rule (lowest-index
//! entering column, ratio ties broken by lowest basic index) guarantees
//! termination, with a saturating `2^(n+m)` iteration cap as a backstop.

use super::{LpError, LpProblem, LpSolution};
use crate::scalar::Real;

struct Tableau<T> {
    /// Constraint rows over `cols` columns.
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    /// Basic column per row.
    basis: Vec<usize>,
    cols: usize,
    iterations: u64,
    cap: u64,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<T: Real> Tableau<T> {
    /// Runs Bland's rule to optimality of the maximization objective whose
    /// reduced-cost row is `z` (entry `z[j] = c_B B⁻¹ A_j - c_j`) with
    /// current objective value `*value`.
    fn run(&mut self, z: &mut [T], value: &mut T, banned_from: usize) -> Result<PhaseOutcome, LpError> {
        let tol = T::lp_tol();
        loop {
            // Entering column: lowest index that improves the objective.
            let entering = (0..banned_from.min(self.cols)).find(|&j| z[j] < -tol);
            let Some(entering) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            // Ratio test; ties broken toward the lowest basic index.
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][entering];
                if a > tol {
                    let ratio = self.rhs[r] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio
                                || (ratio == lratio && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((leave_row, _)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };

            self.pivot(leave_row, entering, z, value);
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LpError::Cycling { cap: self.cap });
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize, z: &mut [T], value: &mut T) {
        let pivot = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v = *v / pivot;
        }
        self.rhs[row] = self.rhs[row] / pivot;
        self.rows[row][col] = T::one(); // exact

        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor == T::zero() {
                continue;
            }
            for j in 0..self.cols {
                let delta = factor * self.rows[row][j];
                self.rows[r][j] = self.rows[r][j] - delta;
            }
            self.rows[r][col] = T::zero(); // exact
            self.rhs[r] = self.rhs[r] - factor * self.rhs[row];
            if self.rhs[r] < T::zero() {
                // Feasibility is maintained by the ratio test; tiny negatives
                // are roundoff.
                self.rhs[r] = T::zero();
            }
        }

        let zfactor = z[col];
        if zfactor != T::zero() {
            for j in 0..self.cols {
                let delta = zfactor * self.rows[row][j];
                z[j] = z[j] - delta;
            }
            z[col] = T::zero();
            *value = *value - zfactor * self.rhs[row];
        }
        self.basis[row] = col;
    }

    /// Reduced costs `z_j = c_B B⁻¹ A_j - c_j` and objective `c_B B⁻¹ b`
    /// for an arbitrary cost vector over the current basis.
    fn price(&self, cost: &[T]) -> (Vec<T>, T) {
        let mut z: Vec<T> = cost.iter().map(|&c| -c).collect();
        let mut value = T::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == T::zero() {
                continue;
            }
            for j in 0..self.cols {
                let delta = cb * self.rows[r][j];
                z[j] = z[j] + delta;
            }
            value = value + cb * self.rhs[r];
        }
        (z, value)
    }
}

/// Solves the problem to proven optimality, infeasibility or unboundedness.
///
/// Deterministic: identical inputs produce identical pivot sequences and
/// bit-identical output.
pub fn solve_simplex<T: Real>(p: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    p.validate()?;

    let n = p.num_vars();
    let m1 = p.ineq_coeffs.len();
    let m2 = p.eq_coeffs.len();
    let m = m1 + m2;
    let tol = T::lp_tol();

    // Columns: structural | slack (one per inequality) | artificial.
    let slack_base = n;
    let art_base = n + m1;

    // Artificials are needed for equality rows and flipped inequality rows.
    let needs_art: Vec<bool> = p
        .ineq_rhs
        .iter()
        .map(|&b| b < T::zero())
        .chain(p.eq_rhs.iter().map(|_| true))
        .collect();
    let n_art = needs_art.iter().filter(|&&v| v).count();
    let cols = n + m1 + n_art;

    let shift = (n + m).min(62) as u32;
    let cap = 1u64 << shift;

    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        cols,
        iterations: 0,
        cap,
    };

    let mut art_cursor = art_base;
    let all_rows = p
        .ineq_coeffs
        .iter()
        .zip(&p.ineq_rhs)
        .map(|(row, &b)| (row, b, true))
        .chain(
            p.eq_coeffs
                .iter()
                .zip(&p.eq_rhs)
                .map(|(row, &b)| (row, b, false)),
        );
    for (i, (coeffs, rhs, is_ineq)) in all_rows.enumerate() {
        let flip = rhs < T::zero();
        let sign = if flip { -T::one() } else { T::one() };
        let mut row = vec![T::zero(); cols];
        for (j, &a) in coeffs.iter().enumerate() {
            row[j] = sign * a;
        }
        if is_ineq {
            row[slack_base + i] = sign;
        }
        if needs_art[i] {
            row[art_cursor] = T::one();
            t.basis.push(art_cursor);
            art_cursor += 1;
        } else {
            t.basis.push(slack_base + i);
        }
        t.rows.push(row);
        t.rhs.push(sign * rhs);
    }

    // Phase 1: maximize -(sum of artificials).
    if n_art > 0 {
        let mut cost1 = vec![T::zero(); cols];
        for c in cost1.iter_mut().skip(art_base) {
            *c = -T::one();
        }
        let (mut z, mut value) = t.price(&cost1);
        match t.run(&mut z, &mut value, cols)? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => unreachable!("phase-1 objective is bounded above by 0"),
        }
        if value < -tol {
            return Ok(LpSolution::Infeasible);
        }

        // Drive leftover artificials out of the basis (they sit at zero), or
        // drop the row when it is entirely redundant.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_base {
                let pivot_col = (0..art_base).find(|&j| t.rows[r][j].abs() > tol);
                if let Some(col) = pivot_col {
                    let (mut z0, mut v0) = (vec![T::zero(); cols], T::zero());
                    t.pivot(r, col, &mut z0, &mut v0);
                } else {
                    t.rows.remove(r);
                    t.rhs.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }

        // Artificial columns are dead from here on.
        t.cols = art_base;
        for row in t.rows.iter_mut() {
            row.truncate(art_base);
        }
    }

    // Phase 2: maximize the real objective.
    let mut cost2 = vec![T::zero(); t.cols];
    cost2[..n].copy_from_slice(&p.objective);
    let (mut z, mut value) = t.price(&cost2);
    match t.run(&mut z, &mut value, t.cols)? {
        PhaseOutcome::Unbounded => Ok(LpSolution::Unbounded),
        PhaseOutcome::Optimal => {
            let mut x = vec![T::zero(); n];
            for (r, &b) in t.basis.iter().enumerate() {
                if b < n {
                    x[b] = t.rhs[r].max(T::zero());
                }
            }
            let objective_value = p.objective_value(&x);
            Ok(LpSolution::Optimal { x, objective_value })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpStatus;

    fn assert_optimal(p: &LpProblem<f64>, want_x: &[f64], want_obj: f64) {
        let sol = solve_simplex(p).unwrap();
        let (x, obj) = sol.optimal().expect("expected optimal");
        assert!((obj - want_obj).abs() < 1e-9, "objective {obj} vs {want_obj}");
        for (i, (&got, &want)) in x.iter().zip(want_x).enumerate() {
            assert!((got - want).abs() < 1e-9, "x[{i}] = {got}, want {want}");
        }
    }

    #[test]
    fn single_variable_upper_bound() {
        let mut p = LpProblem::new(vec![1.0]);
        p.push_ineq(vec![1.0], 1.0);
        assert_optimal(&p, &[1.0], 1.0);
    }

    #[test]
    fn binding_equality() {
        let mut p = LpProblem::<f64>::new(vec![1.0, 1.0]);
        p.push_eq(vec![1.0, 1.0], 1.0);
        let sol = solve_simplex(&p).unwrap();
        let (_, obj) = sol.optimal().unwrap();
        assert!((obj - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        // x1 >= 2 and x1 <= 1.
        let mut p = LpProblem::new(vec![1.0]);
        p.push_ineq(vec![-1.0], -2.0);
        p.push_ineq(vec![1.0], 1.0);
        assert_eq!(solve_simplex(&p).unwrap().status(), LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LpProblem::new(vec![1.0, 0.0]);
        p.push_ineq(vec![0.0, 1.0], 1.0);
        assert_eq!(solve_simplex(&p).unwrap().status(), LpStatus::Unbounded);
    }

    #[test]
    fn classic_two_variable() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18: optimum (2, 6), 36.
        let mut p = LpProblem::new(vec![3.0, 5.0]);
        p.push_ineq(vec![1.0, 0.0], 4.0);
        p.push_ineq(vec![0.0, 2.0], 12.0);
        p.push_ineq(vec![3.0, 2.0], 18.0);
        assert_optimal(&p, &[2.0, 6.0], 36.0);
    }

    #[test]
    fn equality_with_negative_rhs() {
        // -x1 - x2 = -2 with max x1: x1 = 2.
        let mut p = LpProblem::new(vec![1.0, 0.0]);
        p.push_eq(vec![-1.0, -1.0], -2.0);
        assert_optimal(&p, &[2.0, 0.0], 2.0);
    }

    #[test]
    fn duplicate_redundant_constraint() {
        let mut p = LpProblem::new(vec![1.0]);
        p.push_ineq(vec![1.0], 1.0);
        p.push_ineq(vec![1.0], 1.0);
        assert_optimal(&p, &[1.0], 1.0);
    }

    #[test]
    fn degenerate_vertex() {
        // Three constraints meet at (1, 1); optimum still found.
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.push_ineq(vec![1.0, 0.0], 1.0);
        p.push_ineq(vec![0.0, 1.0], 1.0);
        p.push_ineq(vec![1.0, 1.0], 2.0);
        assert_optimal(&p, &[1.0, 1.0], 2.0);
    }

    #[test]
    fn malformed_rejected() {
        let mut p = LpProblem::new(vec![1.0, 2.0]);
        p.push_ineq(vec![1.0], 1.0);
        assert!(matches!(
            solve_simplex(&p),
            Err(LpError::MalformedProblem(_))
        ));

        let p = LpProblem::new(vec![f64::NAN]);
        assert!(matches!(
            solve_simplex(&p),
            Err(LpError::MalformedProblem(_))
        ));
    }

    #[test]
    fn objective_matches_solution_point() {
        let mut p = LpProblem::<f64>::new(vec![2.0, -1.0, 0.5]);
        p.push_ineq(vec![1.0, 1.0, 1.0], 10.0);
        p.push_ineq(vec![1.0, -1.0, 0.0], 3.0);
        p.push_eq(vec![0.0, 1.0, 1.0], 2.0);
        let sol = solve_simplex(&p).unwrap();
        let (x, obj) = sol.optimal().unwrap();
        assert!((obj - p.objective_value(x)).abs() <= 1e-9 * obj.abs().max(1.0));
        assert!(p.is_feasible(x, 1e-8));
    }
}
