//! Dense LU factorization with partial pivoting, used to recompute basic
//! solutions from scratch after long pivot sequences.

use crate::scalar::Scalar;

pub(crate) struct Lu<T> {
    n: usize,
    a: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factorizes a row-major `n × n` matrix. Returns `None` when singular.
    pub(crate) fn factor(n: usize, mut a: Vec<T>) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs())).max(T::one());
        let tiny = scale * T::epsilon() * T::lit(16.0);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|r| (r, a[r * n + k].abs()))
                .fold((k, -T::one()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best <= tiny {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / pivot;
                if f == T::zero() {
                    continue;
                }
                a[r * n + k] = f;
                for c in k + 1..n {
                    let v = a[k * n + c];
                    a[r * n + c] -= f * v;
                }
            }
        }
        Some(Self { n, a, perm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.a[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.a[r * n + c] * x[c];
            }
            x[r] = s / self.a[r * n + r];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub(crate) fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ w = y, then x = Pᵀ w.
        let mut y = b.to_vec();
        for r in 0..n {
            let mut s = y[r];
            for c in 0..r {
                s -= self.a[c * n + r] * y[c];
            }
            y[r] = s / self.a[r * n + r];
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for c in r + 1..n {
                s -= self.a[c * n + r] * y[c];
            }
            y[r] = s;
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
        (0..n).map(|r| (0..n).map(|c| a[r * n + c] * x[c]).sum()).collect()
    }

    #[test]
    fn solves_both_orientations() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 4.0];
        let lu = Lu::factor(3, a.clone()).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]);
        let back = matvec(3, &a, &x);
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-12);
        }
        let at: Vec<f64> = (0..9).map(|k| a[(k % 3) * 3 + k / 3]).collect();
        let y = lu.solve_transpose(&[1.0, -1.0, 0.5]);
        let back = matvec(3, &at, &y);
        for (u, v) in back.iter().zip([1.0, -1.0, 0.5]) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_rejected() {
        assert!(Lu::factor(2, vec![1.0, 2.0, 2.0, 4.0]).is_none());
    }
}
