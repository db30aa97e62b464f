//! Linear solvers for the two numeric backends: fraction-free exact
//! elimination over the rationals, and conjugate gradients for large
//! symmetric positive definite float systems.

use crate::error::{Error, Result};
use crate::ratio::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Solves `A X = B` exactly, `A` being `n x n` and `B` being `n x m`.
///
/// Rows are first scaled to integers, then eliminated with the fraction-free
/// Gauss-Jordan scheme (Montante / Bareiss): every intermediate value is a
/// minor of the scaled system, so the divisions are exact and no gcd work
/// happens inside the elimination loop. After the sweep the matrix is
/// `det * I` and each solution entry is a single rational division.
pub fn solve_exact(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = b[0].len();
    let width = n + m;
    assert!(a.iter().all(|r| r.len() == n), "A must be square");
    assert_eq!(b.len(), n, "B must have as many rows as A");

    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut scale = BigInt::one();
        for x in a[i].iter().chain(b[i].iter()) {
            scale = scale.lcm(x.denom());
        }
        let mut row: Vec<BigInt> = Vec::with_capacity(width);
        for x in a[i].iter().chain(b[i].iter()) {
            row.push(x.numer() * (&scale / x.denom()));
        }
        rows.push(row);
    }

    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot_row = (k..n)
            .find(|&r| !rows[r][k].is_zero())
            .ok_or(Error::SingularSystem)?;
        rows.swap(k, pivot_row);
        let pivot = rows[k][k].clone();
        for i in 0..n {
            if i == k {
                continue;
            }
            let factor = std::mem::replace(&mut rows[i][k], BigInt::zero());
            if factor.is_zero() {
                for j in (k + 1)..width {
                    if !rows[i][j].is_zero() {
                        rows[i][j] = &(&pivot * &rows[i][j]) / &prev;
                    }
                }
            } else {
                for j in (k + 1)..width {
                    let t = &(&pivot * &rows[i][j]) - &(&factor * &rows[k][j]);
                    rows[i][j] = &t / &prev;
                }
            }
            if i < k {
                rows[i][i] = pivot.clone();
            }
        }
        prev = pivot;
    }

    let det = prev;
    let mut x = vec![vec![Rat::zero(); m]; n];
    for i in 0..n {
        for j in 0..m {
            x[i][j] = BigRational::new(rows[i][n + j].clone(), det.clone());
        }
    }
    Ok(x)
}

/// Convenience wrapper for a single right-hand side.
pub fn solve_exact_vec(a: &[Vec<Rat>], b: &[Rat]) -> Result<Vec<Rat>> {
    let cols: Vec<Vec<Rat>> = b.iter().map(|x| vec![x.clone()]).collect();
    let x = solve_exact(a, &cols)?;
    Ok(x.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Sparse float matrix in row-major adjacency form.
#[derive(Clone, Debug)]
pub struct SparseMat {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMat {
    pub fn zeros(n: usize) -> Self {
        SparseMat {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i].push((j, v));
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in row {
                acc += v * x[j];
            }
            out[i] = acc;
        }
    }
}

/// Conjugate gradient for symmetric positive definite operators.
///
/// `apply` writes `A x` into its second argument. Returns the solution and
/// the final residual norm; errors if the residual never reaches `tol`.
pub fn cg_solve(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let b_norm = rs.sqrt().max(1e-300);
    if rs.sqrt() <= tol * b_norm {
        return Ok((x, rs.sqrt()));
    }
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let denom: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if denom <= 0.0 {
            return Err(Error::SingularSystem);
        }
        let alpha = rs / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        if rs_new.sqrt() <= tol * b_norm {
            return Ok((x, rs_new.sqrt()));
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Unsupported(format!(
        "conjugate gradient did not converge within {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{rat, rint};

    #[test]
    fn solves_small_system_exactly() {
        let a = vec![
            vec![rint(2), rint(1)],
            vec![rint(1), rint(3)],
        ];
        let b = vec![vec![rint(5)], vec![rint(10)]];
        let x = solve_exact(&a, &b).unwrap();
        assert_eq!(x[0][0], rint(1));
        assert_eq!(x[1][0], rint(3));
    }

    #[test]
    fn handles_rational_entries_and_row_swaps() {
        let a = vec![
            vec![rint(0), rat(1, 2), rint(1)],
            vec![rat(1, 3), rint(0), rint(2)],
            vec![rint(1), rint(1), rint(1)],
        ];
        let b = vec![vec![rint(4)], vec![rat(19, 3)], vec![rint(6)]];
        let x = solve_exact(&a, &b).unwrap();
        assert_eq!(x[0][0], rint(1));
        assert_eq!(x[1][0], rint(2));
        assert_eq!(x[2][0], rint(3));
    }

    #[test]
    fn rejects_singular() {
        let a = vec![vec![rint(1), rint(2)], vec![rint(2), rint(4)]];
        let b = vec![vec![rint(1)], vec![rint(2)]];
        assert!(matches!(solve_exact(&a, &b), Err(Error::SingularSystem)));
    }

    #[test]
    fn cg_matches_direct_solution() {
        let mut m = SparseMat::zeros(3);
        m.push(0, 0, 4.0);
        m.push(0, 1, 1.0);
        m.push(1, 0, 1.0);
        m.push(1, 1, 3.0);
        m.push(1, 2, 1.0);
        m.push(2, 1, 1.0);
        m.push(2, 2, 5.0);
        let b = vec![1.0, 2.0, 3.0];
        let (x, _) = cg_solve(&mut |v, out| m.matvec(v, out), &b, 1e-12, 100).unwrap();
        let mut check = vec![0.0; 3];
        m.matvec(&x, &mut check);
        for i in 0..3 {
            assert!((check[i] - b[i]).abs() < 1e-9);
        }
    }
}
