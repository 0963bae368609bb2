//! Brute-force LP oracle: enumerates every basic solution (each choice of n
//! active constraints from the inequality rows, equality rows and
//! non-negativity bounds), keeps the feasible ones, and reports the best
//! vertex. Unboundedness is detected by enumerating the vertices of the
//! normalized recession cone. Exponential, capped, and deliberately
//! independent of the simplex implementation.

use super::{LpError, LpProblem, LpSolution};
use crate::linalg::solve_dense;
use crate::scalar::Real;

/// Hard cap on variable count; the active-set enumeration is exponential.
pub const ORACLE_VAR_CAP: usize = 8;

/// One candidate active constraint: a hyperplane `coeffs · x = rhs`.
struct Plane<T> {
    coeffs: Vec<T>,
    rhs: T,
}

/// All feasible basic points of the system, deduplicated only by feasibility
/// (duplicates are harmless for a max scan).
fn feasible_vertices<T: Real>(p: &LpProblem<T>, tol: T) -> Vec<Vec<T>> {
    let n = p.num_vars();
    let mut planes: Vec<Plane<T>> = Vec::new();
    for (row, &rhs) in p.eq_coeffs.iter().zip(&p.eq_rhs) {
        planes.push(Plane {
            coeffs: row.clone(),
            rhs,
        });
    }
    for (row, &rhs) in p.ineq_coeffs.iter().zip(&p.ineq_rhs) {
        planes.push(Plane {
            coeffs: row.clone(),
            rhs,
        });
    }
    for j in 0..n {
        let mut coeffs = vec![T::zero(); n];
        coeffs[j] = T::one();
        planes.push(Plane {
            coeffs,
            rhs: T::zero(),
        });
    }

    let mut found = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    if planes.len() < n {
        return found;
    }
    loop {
        let a: Vec<Vec<T>> = subset.iter().map(|&i| planes[i].coeffs.clone()).collect();
        let b: Vec<T> = subset.iter().map(|&i| planes[i].rhs).collect();
        if let Some(x) = solve_dense(a, b) {
            if p.is_feasible(&x, tol) {
                found.push(x);
            }
        }

        // Next n-combination of plane indices, lexicographic.
        let mut i = n;
        loop {
            if i == 0 {
                return found;
            }
            i -= 1;
            if subset[i] != i + planes.len() - n {
                subset[i] += 1;
                for k in (i + 1)..n {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn lex_less<T: Real>(a: &[T], b: &[T]) -> bool {
    for (&x, &y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Exhaustive reference solver; agrees with [`super::solve_simplex`] on
/// status and, when optimal, on the objective value.
pub fn vertex_oracle<T: Real>(p: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    p.validate()?;
    let n = p.num_vars();
    if n > ORACLE_VAR_CAP {
        return Err(LpError::TooLarge {
            vars: n,
            cap: ORACLE_VAR_CAP,
        });
    }
    // Looser than the pivot tolerance: vertex coordinates come from
    // independent Gaussian solves.
    let tol = T::lp_tol() * T::of(10.0);

    let vertices = feasible_vertices(p, tol);
    if vertices.is_empty() {
        // With x >= 0 the feasible region is pointed: nonempty iff it has a
        // vertex.
        return Ok(LpSolution::Infeasible);
    }

    // Recession directions: d >= 0, A d <= 0, G d = 0, normalized Σd = 1.
    // Any such vertex direction with positive objective proves
    // unboundedness.
    let mut cone = LpProblem::new(p.objective.clone());
    for row in &p.ineq_coeffs {
        cone.push_ineq(row.clone(), T::zero());
    }
    for row in &p.eq_coeffs {
        cone.push_eq(row.clone(), T::zero());
    }
    cone.push_eq(vec![T::one(); n], T::one());
    for d in feasible_vertices(&cone, tol) {
        if p.objective_value(&d) > tol {
            return Ok(LpSolution::Unbounded);
        }
    }

    let mut best: Option<(Vec<T>, T)> = None;
    for x in vertices {
        let value = p.objective_value(&x);
        let take = match &best {
            None => true,
            Some((bx, bv)) => value > *bv || (value == *bv && lex_less(&x, bx)),
        };
        if take {
            best = Some((x, value));
        }
    }
    let (x, objective_value) = best.expect("nonempty vertex list");
    Ok(LpSolution::Optimal { x, objective_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_simplex, LpStatus};

    #[test]
    fn matches_simplex_on_spec_examples() {
        // max x1 s.t. x1 <= 1.
        let mut p1 = LpProblem::<f64>::new(vec![1.0]);
        p1.push_ineq(vec![1.0], 1.0);
        // max x1 + x2 s.t. x1 + x2 = 1.
        let mut p2 = LpProblem::new(vec![1.0, 1.0]);
        p2.push_eq(vec![1.0, 1.0], 1.0);
        // Infeasible: x1 >= 2, x1 <= 1.
        let mut p3 = LpProblem::new(vec![1.0]);
        p3.push_ineq(vec![-1.0], -2.0);
        p3.push_ineq(vec![1.0], 1.0);

        for p in [&p1, &p2, &p3] {
            let simplex = solve_simplex(p).unwrap();
            let oracle = vertex_oracle(p).unwrap();
            assert_eq!(simplex.status(), oracle.status());
            if let (Some((_, a)), Some((_, b))) = (simplex.optimal(), oracle.optimal()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn unbounded_ray_found() {
        let mut p = LpProblem::new(vec![1.0, 0.0]);
        p.push_ineq(vec![0.0, 1.0], 1.0);
        assert_eq!(vertex_oracle(&p).unwrap().status(), LpStatus::Unbounded);
    }

    #[test]
    fn redundant_duplicate_keeps_optimum() {
        let mut p = LpProblem::new(vec![1.0]);
        p.push_ineq(vec![1.0], 1.0);
        let base = vertex_oracle(&p).unwrap().optimal().unwrap().1;
        p.push_ineq(vec![1.0], 1.0);
        let dup = vertex_oracle(&p).unwrap().optimal().unwrap().1;
        assert_eq!(base, dup);
    }

    #[test]
    fn cap_enforced() {
        let p = LpProblem::<f64>::new(vec![1.0; 9]);
        assert!(matches!(
            vertex_oracle(&p),
            Err(LpError::TooLarge { vars: 9, cap: 8 })
        ));
    }
}
