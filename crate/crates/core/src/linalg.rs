//! Small dense solves shared by the steady-state computation and the LP
//! vertex oracle. Not used by the simplex solver, which keeps the oracle an
//! independent check of it.

use crate::scalar::Real;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major, square. Returns `None` when the matrix is singular to
/// working precision (pivot below `tol` times the largest initial entry).
pub(crate) fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    if n == 0 {
        return Some(Vec::new());
    }

    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(T::one(), |m, &v| m.max(v.abs()));
    let tol = T::epsilon() * T::of(64.0) * scale;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot_row][col].abs() <= tol {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        let pivot = a[col][col];
        for row in (col + 1)..n {
            let factor = a[row][col] / pivot;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let delta = factor * a[col][k];
                a[row][k] = a[row][k] - delta;
            }
            b[row] = b[row] - factor * b[col];
        }
    }

    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
