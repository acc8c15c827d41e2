//! Small dense symmetric matrices for test-scale oracles (Q, B^Q, sigma').

use crate::scalar::Scalar;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<F> {
    dim: usize,
    data: Vec<F>,
}

impl<F: Scalar> DenseMatrix<F> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![F::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul_vec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| crate::scalar::dot(&self.data[i * self.dim..(i + 1) * self.dim], x))
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == F::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `x^T G x`.
    pub fn quad_form(&self, x: &[F]) -> F {
        crate::scalar::dot(x, &self.mul_vec(x))
    }

    pub fn diagonal(&self) -> Vec<F> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Principal submatrix on the given index set.
    pub fn principal(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self[(idx[a], idx[b])])
    }

    /// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns `(values, vectors)` with eigenvector `k` stored in column `k` of `vectors`.
    /// Values are sorted ascending.
    pub fn symmetric_eigen(&self) -> (Vec<F>, Self) {
        let n = self.dim;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let eps = F::epsilon();
        for _sweep in 0..100 {
            let mut off = F::zero();
            let mut total = F::zero();
            for i in 0..n {
                for j in 0..n {
                    let x = a[(i, j)] * a[(i, j)];
                    total += x;
                    if i != j {
                        off += x;
                    }
                }
            }
            if off <= eps * eps * total || off == F::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    if apq.abs() <= eps * (app.abs() * aqq.abs()).sqrt() {
                        // negligible at working precision
                        a[(p, q)] = F::zero();
                        a[(q, p)] = F::zero();
                        continue;
                    }
                    let theta = (aqq - app) / (F::two() * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                    let c = F::one() / (t * t + F::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let vectors = Self::from_fn(n, |r, k| v[(r, order[k])]);
        (values, vectors)
    }

    pub fn symmetric_eigenvalues(&self) -> Vec<F> {
        self.symmetric_eigen().0
    }
}

impl<F> std::ops::Index<(usize, usize)> for DenseMatrix<F> {
    type Output = F;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.dim + j]
    }
}

impl<F> std::ops::IndexMut<(usize, usize)> for DenseMatrix<F> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.dim + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_on_known_spectrum() {
        let m = DenseMatrix::from_fn(2, |_, _| 1.0f64);
        let ev = m.symmetric_eigenvalues();
        assert!((ev[0] - 0.0).abs() < 1e-14);
        assert!((ev[1] - 2.0).abs() < 1e-14);

        // tridiagonal (2, -1): eigenvalues 2 - 2 cos(k pi / (n + 1))
        let n = 7;
        let t = DenseMatrix::from_fn(n, |i, j| {
            if i == j {
                2.0f64
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let ev = t.symmetric_eigenvalues();
        for (k, &lam) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-12, "{lam} vs {exact}");
        }
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let m = DenseMatrix::from_fn(4, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let (vals, vecs) = m.symmetric_eigen();
        for k in 0..4 {
            let col: Vec<f64> = (0..4).map(|r| vecs[(r, k)]).collect();
            let mv = m.mul_vec(&col);
            for r in 0..4 {
                assert!((mv[r] - vals[k] * col[r]).abs() < 1e-12);
            }
        }
    }
}
