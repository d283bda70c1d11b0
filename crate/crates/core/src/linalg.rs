//! Dense symmetric-indefinite `P A Pᵀ = L D Lᵀ` factorization with
//! Bunch-Kaufman partial pivoting (`D` has 1×1 and 2×2 blocks).

use ndarray::{Array1, Array2};

use crate::error::Inertia;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
enum Pivot<T> {
    One(T),
    /// `[[a, b], [b, c]]`
    Two(T, T, T),
}

#[derive(Debug, Clone)]
pub struct Ldlt<T> {
    /// Unit lower triangular factor (diagonal not stored).
    l: Array2<T>,
    /// Pivot blocks, each tagged with its leading row.
    pivots: Vec<(usize, Pivot<T>)>,
    /// Row `i` of the permuted matrix is row `perm[i]` of the input.
    perm: Vec<usize>,
    zero_tol: T,
}

fn swap_sym<T: Scalar>(a: &mut Array2<T>, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.nrows();
    for c in 0..n {
        a.swap([i, c], [j, c]);
    }
    for r in 0..n {
        a.swap([r, i], [r, j]);
    }
}

impl<T: Scalar> Ldlt<T> {
    /// Factors a symmetric matrix; only its lower triangle is read.
    pub fn factor(mat: &Array2<T>) -> Self {
        let n = mat.nrows();
        assert_eq!(n, mat.ncols(), "LDLᵀ of a non-square matrix");
        let mut a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i >= j {
                mat[[i, j]]
            } else {
                mat[[j, i]]
            }
        });
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let zero_tol = T::epsilon() * T::lit(n.max(1) as f64) * scale;
        let alpha = (T::one() + T::lit(17.0).sqrt()) / T::lit(8.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();

        let mut k = 0;
        while k < n {
            let (mut lambda, mut r) = (T::zero(), k);
            for i in k + 1..n {
                if a[[i, k]].abs() > lambda {
                    lambda = a[[i, k]].abs();
                    r = i;
                }
            }
            let akk = a[[k, k]].abs();
            if akk.max(lambda) == T::zero() {
                pivots.push((k, Pivot::One(T::zero())));
                k += 1;
                continue;
            }
            let two_by_two = if akk >= alpha * lambda {
                false
            } else {
                let mut sigma = T::zero();
                for j in k..n {
                    if j != r {
                        sigma = sigma.max(a[[j, r]].abs());
                    }
                }
                if akk * sigma >= alpha * lambda * lambda {
                    false
                } else if a[[r, r]].abs() >= alpha * sigma {
                    swap_sym(&mut a, k, r);
                    perm.swap(k, r);
                    false
                } else {
                    swap_sym(&mut a, k + 1, r);
                    perm.swap(k + 1, r);
                    true
                }
            };

            if !two_by_two {
                let d = a[[k, k]];
                let l: Vec<T> = (k + 1..n).map(|i| a[[i, k]] / d).collect();
                for (ii, i) in (k + 1..n).enumerate() {
                    for (jj, j) in (k + 1..n).enumerate() {
                        a[[i, j]] = a[[i, j]] - l[ii] * l[jj] * d;
                    }
                    a[[i, k]] = l[ii];
                    a[[k, i]] = T::zero();
                }
                pivots.push((k, Pivot::One(d)));
                k += 1;
            } else {
                let (p, q, c) = (a[[k, k]], a[[k + 1, k]], a[[k + 1, k + 1]]);
                let det = p * c - q * q;
                let rows: Vec<(T, T)> = (k + 2..n)
                    .map(|i| {
                        let (u, v) = (a[[i, k]], a[[i, k + 1]]);
                        ((u * c - v * q) / det, (v * p - u * q) / det)
                    })
                    .collect();
                for (ii, i) in (k + 2..n).enumerate() {
                    let (li1, li2) = rows[ii];
                    for j in k + 2..n {
                        let upd = li1 * a[[j, k]] + li2 * a[[j, k + 1]];
                        a[[i, j]] = a[[i, j]] - upd;
                    }
                }
                for (ii, i) in (k + 2..n).enumerate() {
                    a[[i, k]] = rows[ii].0;
                    a[[i, k + 1]] = rows[ii].1;
                    a[[k, i]] = T::zero();
                    a[[k + 1, i]] = T::zero();
                }
                pivots.push((k, Pivot::Two(p, q, c)));
                k += 2;
            }
        }
        // keep only the strictly lower part as L
        for i in 0..n {
            for j in i..n {
                a[[i, j]] = T::zero();
            }
        }
        for &(k, piv) in &pivots {
            if let Pivot::Two(..) = piv {
                a[[k + 1, k]] = T::zero();
            }
        }
        Self {
            l: a,
            pivots,
            perm,
            zero_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Eigenvalue sign counts of `D` (and hence of the input, by Sylvester).
    pub fn inertia(&self) -> Inertia {
        let mut out = Inertia::default();
        let mut classify = |v: T| {
            if v > self.zero_tol {
                out.positive += 1;
            } else if v < -self.zero_tol {
                out.negative += 1;
            } else {
                out.zero += 1;
            }
        };
        for &(_, piv) in &self.pivots {
            match piv {
                Pivot::One(d) => classify(d),
                Pivot::Two(a, b, c) => {
                    let mid = (a + c) * T::lit(0.5);
                    let rad = (((a - c) * T::lit(0.5)).powi(2) + b * b).sqrt();
                    classify(mid + rad);
                    classify(mid - rad);
                }
            }
        }
        out
    }

    pub fn solve(&self, rhs: &Array1<T>) -> Array1<T> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "LDLᵀ solve: rhs length");
        let mut w: Array1<T> = self.perm.iter().map(|&p| rhs[p]).collect();
        // L u = P b
        for j in 0..n {
            let wj = w[j];
            if wj != T::zero() {
                for i in j + 1..n {
                    w[i] = w[i] - self.l[[i, j]] * wj;
                }
            }
        }
        // D v = u
        for &(k, piv) in &self.pivots {
            match piv {
                Pivot::One(d) => w[k] = w[k] / d,
                Pivot::Two(a, b, c) => {
                    let det = a * c - b * b;
                    let (u, v) = (w[k], w[k + 1]);
                    w[k] = (c * u - b * v) / det;
                    w[k + 1] = (a * v - b * u) / det;
                }
            }
        }
        // Lᵀ x' = v
        for j in (0..n).rev() {
            let mut s = w[j];
            for i in j + 1..n {
                s = s - self.l[[i, j]] * w[i];
            }
            w[j] = s;
        }
        let mut x = Array1::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &Array2<f64>, x: &Array1<f64>, b: &Array1<f64>) -> f64 {
        (a.dot(x) - b).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn saddle_point_2x2() {
        let a: Array2<f64> = array![[1.0, 1.0], [1.0, -0.1]];
        let f = Ldlt::factor(&a);
        let x = f.solve(&array![0.0, 1.0]);
        assert!((x[0] - 1.0 / 1.1).abs() < 1e-15);
        assert!((x[1] + 1.0 / 1.1).abs() < 1e-15);
        assert_eq!(
            f.inertia(),
            Inertia {
                positive: 1,
                negative: 1,
                zero: 0
            }
        );
    }

    #[test]
    fn zero_diagonal_needs_two_by_two() {
        let a = array![[0.0, 2.0, 0.0], [2.0, 0.0, 1.0], [0.0, 1.0, 3.0]];
        let f = Ldlt::factor(&a);
        let b = array![1.0, -1.0, 2.0];
        assert!(residual(&a, &f.solve(&b), &b) < 1e-14);
        let inertia = f.inertia();
        assert_eq!(inertia.zero, 0);
        assert_eq!(inertia.positive + inertia.negative, 3);
    }

    #[test]
    fn singular_matrix_reports_zero() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert_eq!(Ldlt::factor(&a).inertia().zero, 1);
        assert_eq!(Ldlt::factor(&Array2::<f64>::zeros((3, 3))).inertia().zero, 3);
    }

    #[test]
    fn random_symmetric_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..12 {
            for _ in 0..20 {
                let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
                let a = &m + &m.t();
                let b: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let f = Ldlt::factor(&a);
                let x = f.solve(&b);
                assert!(residual(&a, &x, &b) < 1e-8 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
                let i = f.inertia();
                assert_eq!(i.positive + i.negative + i.zero, n);
                let shifted = &a + &(Array2::<f64>::eye(n) * 100.0);
                assert_eq!(Ldlt::factor(&shifted).inertia().positive, n);
            }
        }
    }

    #[test]
    fn inertia_of_diagonal_congruence() {
        // S D Sᵀ with known D signs
        let s = array![[1.0, 0.0, 0.0, 0.0], [2.0, 1.0, 0.0, 0.0], [-1.0, 0.5, 1.0, 0.0], [0.3, 0.0, 4.0, 1.0]];
        let d = Array2::from_diag(&array![2.0, -1.0, -3.0, 0.5]);
        let a = s.dot(&d).dot(&s.t());
        assert_eq!(
            Ldlt::factor(&a).inertia(),
            Inertia {
                positive: 2,
                negative: 2,
                zero: 0
            }
        );
    }
}
