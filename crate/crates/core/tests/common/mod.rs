#![allow(dead_code)]

use hydra_core::generator::{gen_lasso_certified, CertifiedInstance, GeneratorSpec};
use hydra_core::{KnownOptimum, LossKind, Partition, Problem, SeparableReg, SparseMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Block-angular LASSO instance with `n >= d` rows, so `A^T A` is (generically) nonsingular.
pub fn certified_spec(c: usize, s: usize, support: usize, seed: u64) -> GeneratorSpec {
    let d = c * s;
    GeneratorSpec {
        c,
        local_rows: s + s / 4 + 1,
        global_rows: (s / 2).max(1),
        s,
        nnz_local: s.min(8),
        nnz_global: d.min(16),
        lambda: 1.0,
        support,
        seed,
    }
}

pub fn certified(c: usize, s: usize, support: usize, seed: u64) -> CertifiedInstance {
    gen_lasso_certified(&certified_spec(c, s, support, seed)).expect("certified instance")
}

pub fn lasso_problem(inst: &CertifiedInstance) -> Problem<f64> {
    Problem::new(
        inst.a.clone(),
        inst.y.clone(),
        LossKind::SquareLoss,
        SeparableReg::l1(inst.lambda, inst.dim()).unwrap(),
    )
    .unwrap()
    .with_optimum(KnownOptimum {
        x: Some(inst.x_star.clone()),
        value: inst.optimal_value,
    })
    .unwrap()
}

/// Random sparse `n x d` matrix with roughly `density` fill and no empty column.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, d: usize, density: f64) -> SparseMatrix<f64> {
    let mut trip = Vec::new();
    for j in 0..d {
        let mut rows: Vec<usize> = (0..n).filter(|_| rng.random_bool(density)).collect();
        if rows.is_empty() {
            rows.push(rng.random_range(0..n));
        }
        for r in rows {
            let mut v: f64 = rng.random_range(-1.0..1.0);
            if v == 0.0 {
                v = 0.5;
            }
            trip.push((r, j, v));
        }
    }
    SparseMatrix::from_triplets(n, d, trip).unwrap()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, kind: LossKind) -> Vec<f64> {
    (0..n)
        .map(|_| match kind {
            LossKind::SquareLoss => rng.random_range(-2.0..2.0),
            _ => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect()
}

pub fn to_dense(a: &SparseMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.n_rows(), a.n_cols());
    for j in 0..a.n_cols() {
        for (r, v) in a.col(j).iter() {
            m[(r, j)] = v;
        }
    }
    m
}

/// `Q = D^{-1/2} A^T A D^{-1/2}` computed with nalgebra.
pub fn q_oracle(a: &SparseMatrix<f64>) -> DMatrix<f64> {
    let dense = to_dense(a);
    let m = dense.transpose() * &dense;
    let d = m.nrows();
    DMatrix::from_fn(d, d, |i, j| m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt())
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    *sym_eigenvalues(m).last().unwrap()
}

/// `B^{-1/2}` for symmetric positive definite `B`.
pub fn inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Block diagonal of `q` under partition `p`.
pub fn block_diag(q: &DMatrix<f64>, p: &Partition) -> DMatrix<f64> {
    let d = q.nrows();
    DMatrix::from_fn(d, d, |i, j| {
        if p.block_of(i) == p.block_of(j) {
            q[(i, j)]
        } else {
            0.0
        }
    })
}

/// `sigma' = lambda_max(B^{-1/2} Q B^{-1/2})`, or `None` when `B^Q` is near singular.
pub fn sigma_prime_oracle(q: &DMatrix<f64>, p: &Partition) -> Option<f64> {
    let b = block_diag(q, p);
    if sym_eigenvalues(&b)[0] < 1e-6 {
        return None;
    }
    let w = inv_sqrt(&b);
    Some(lambda_max(&(&w * q * &w)))
}

/// Every `k`-subset of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every outcome of tau-distributed sampling over partition `p`, as sets of global coordinates.
pub fn all_samplings(p: &Partition, tau: usize) -> Vec<Vec<usize>> {
    let local = subsets(p.block_size(), tau);
    let mut outcomes: Vec<Vec<usize>> = vec![Vec::new()];
    for l in 0..p.nodes() {
        let block = p.block(l);
        let mut next = Vec::with_capacity(outcomes.len() * local.len());
        for o in &outcomes {
            for sub in &local {
                let mut v = o.clone();
                v.extend(sub.iter().map(|&q| block[q]));
                next.push(v);
            }
        }
        outcomes = next;
    }
    outcomes
}

/// Objective `1/2 ||Ax - y||^2 + R(x)` evaluated densely.
pub fn dense_objective(a: &DMatrix<f64>, y: &[f64], x: &[f64], reg: &SeparableReg<f64>) -> f64 {
    let xv = nalgebra::DVector::from_column_slice(x);
    let r = a * xv - nalgebra::DVector::from_column_slice(y);
    0.5 * r.norm_squared() + reg.value(x)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Minimizer of a convex function on `[lo, hi]`: grid scan, then golden-section search
/// on the bracket around the best grid point.
pub fn golden_min(phi: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const GRID: usize = 2000;
    let step = (hi - lo) / GRID as f64;
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for k in 0..=GRID {
        let v = phi(lo + k as f64 * step);
        if v < best_v {
            best_v = v;
            best = k;
        }
    }
    let mut a = lo + best.saturating_sub(1) as f64 * step;
    let mut b = (lo + (best + 1) as f64 * step).min(hi);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..200 {
        if b - a <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = phi(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = phi(x2);
        }
    }
    // endpoints matter for box constraints
    let mid = 0.5 * (a + b);
    [lo, hi, mid]
        .into_iter()
        .min_by(|p, q| phi(*p).partial_cmp(&phi(*q)).unwrap())
        .unwrap()
}

/// Ridge solution of `min 1/2 ||Ax - y||^2 + lambda/2 ||x||^2` and its objective value.
pub fn ridge_optimum(a: &SparseMatrix<f64>, y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let dense = to_dense(a);
    let d = dense.ncols();
    let lhs = dense.transpose() * &dense + DMatrix::identity(d, d) * lambda;
    let rhs = dense.transpose() * nalgebra::DVector::from_column_slice(y);
    let x = lhs
        .cholesky()
        .expect("ridge system is positive definite")
        .solve(&rhs);
    let x: Vec<f64> = x.iter().copied().collect();
    let reg = SeparableReg::l2(lambda, d).unwrap();
    let value = dense_objective(&dense, y, &x, &reg);
    (x, value)
}

/// `phi(t) - phi(t0)` for `phi(t) = f' t + (curv/2) t^2 + R(x + t)`, written in factored
/// form so it stays accurate when `t` and `t0` are close.
pub fn step_model_diff(
    term: hydra_core::CoordReg<f64>,
    fprime: f64,
    curv: f64,
    x: f64,
    t: f64,
    t0: f64,
) -> f64 {
    use hydra_core::CoordReg;
    let smooth = (t - t0) * (fprime + 0.5 * curv * (t + t0));
    let reg = match term {
        CoordReg::Zero => 0.0,
        CoordReg::L1(l) => l * ((x + t).abs() - (x + t0).abs()),
        CoordReg::L2(l) => 0.5 * l * (t - t0) * (2.0 * x + t + t0),
        CoordReg::Box { lo, hi } => {
            if x + t >= lo && x + t <= hi {
                0.0
            } else {
                f64::INFINITY
            }
        }
    };
    smooth + reg
}

/// Oracle minimizer of the one-dimensional step model on `[lo, hi]`: a coarse search on
/// the model itself, then a refinement on the factored difference around the coarse point.
pub fn step_oracle(
    term: hydra_core::CoordReg<f64>,
    fprime: f64,
    curv: f64,
    x: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let phi = |t: f64| hydra_core::regularizer::step_objective(term, fprime, curv, x, t);
    let t0 = golden_min(phi, lo, hi);
    let w = 1e-4 * (1.0 + t0.abs());
    let (a, b) = ((t0 - w).max(lo), (t0 + w).min(hi));
    golden_min(|t| step_model_diff(term, fprime, curv, x, t, t0), a, b)
}
