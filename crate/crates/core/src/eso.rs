//! Stepsize theory: the data quantities `omega`, `omega'`, `sigma`, `sigma'`,
//! the safe stepsize `beta*`, the expected-quadratic identity for distributed
//! sampling, and the strongly convex iteration bound.
//!
//! All spectral quantities are defined through the normalized matrix
//! `Q = D^{-1/2} M D^{-1/2}`, which has unit diagonal and does not depend on the
//! global factor of `M` (1 or 1/4), so it is computed from `A` and its column norms.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::matrix::{Partition, SparseMatrix};
use crate::sampling::stream_rng;
use crate::scalar::{dot, Scalar};

/// Default upper limit on `d` for the dense oracles.
pub const DENSE_ORACLE_LIMIT: usize = 500;

/// Relative threshold under which a diagonal block of `Q` is treated as singular.
const SINGULAR_BLOCK_RTOL: f64 = 1e-10;

/// `omega = max_r nnz(A_r:)`.
pub fn omega<F: Scalar>(a: &SparseMatrix<F>) -> usize {
    a.nnz_per_row().into_iter().max().unwrap_or(0)
}

/// `omega' = max_r |{l : A_l has a nonzero in row r}|`.
pub fn omega_prime<F: Scalar>(a: &SparseMatrix<F>, p: &Partition) -> usize {
    a.blocks_per_row(p).into_iter().max().unwrap_or(0)
}

fn inv_sqrt_col_norms<F: Scalar>(a: &SparseMatrix<F>) -> Result<Vec<F>> {
    (0..a.n_cols())
        .map(|j| {
            let n2 = a.col_sq_norm(j);
            if n2 > F::zero() {
                Ok(F::one() / n2.sqrt())
            } else {
                Err(Error::ZeroColumn { col: j })
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            seed: 0,
        }
    }
}

/// Outcome of [`sigma`]: a Rayleigh-quotient lower estimate of `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate<F> {
    pub value: F,
    pub iterations: usize,
}

/// Largest eigenvalue of `Q` by power iteration on `v -> D^{-1/2} A^T A D^{-1/2} v`.
///
/// Stops when `|lambda_{t+1} - lambda_t| <= tol * lambda_{t+1}`. The returned value is a
/// Rayleigh quotient, hence never above the true `sigma`; it is clamped below at 1,
/// which is also a lower bound because `Q` has unit diagonal.
pub fn sigma<F: Scalar>(a: &SparseMatrix<F>, opts: &PowerIterOptions) -> Result<SigmaEstimate<F>> {
    let scale = inv_sqrt_col_norms(a)?;
    let d = a.n_cols();
    if d == 0 {
        return Err(Error::InvalidArgument("matrix has no columns".into()));
    }
    let tol = F::of(opts.tol);
    let mut rng = stream_rng(opts.seed, u64::MAX, 0);
    let mut v: Vec<F> = (0..d)
        .map(|_| F::of(StandardNormal.sample(&mut rng)))
        .collect();
    normalize(&mut v);

    let apply_q = |v: &[F]| -> Vec<F> {
        let scaled: Vec<F> = v.iter().zip(&scale).map(|(&x, &s)| x * s).collect();
        let av = a.mul_vec(&scaled);
        (0..d).map(|j| a.col(j).dot(&av) * scale[j]).collect()
    };

    let mut lambda = F::zero();
    for it in 1..=opts.max_iter {
        let mut w = apply_q(&v);
        let next = dot(&v, &w);
        if !normalize(&mut w) {
            // Q v = 0 cannot happen for a unit-diagonal PSD Q unless v is in its kernel;
            // restart from a basis vector, whose Rayleigh quotient is exactly 1
            w = vec![F::zero(); d];
            w[it % d] = F::one();
        }
        v = w;
        if it > 1 && (next - lambda).abs() <= tol * next {
            return Ok(SigmaEstimate {
                value: next.max(F::one()),
                iterations: it,
            });
        }
        lambda = next;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        estimate: lambda.as_f64(),
    })
}

fn normalize<F: Scalar>(v: &mut [F]) -> bool {
    let n = dot(v, v).sqrt();
    if n > F::zero() && n.is_finite() {
        for x in v.iter_mut() {
            *x /= n;
        }
        true
    } else {
        false
    }
}

/// Dense `Q` with `Q_ij = A_i^T A_j / (||A_i|| ||A_j||)`.
pub fn q_matrix<F: Scalar>(a: &SparseMatrix<F>, limit: usize) -> Result<DenseMatrix<F>> {
    let d = a.n_cols();
    if d > limit {
        return Err(Error::SizeLimit { d, limit });
    }
    let scale = inv_sqrt_col_norms(a)?;
    let mut q = DenseMatrix::zeros(d);
    for i in 0..d {
        q[(i, i)] = F::one();
        for j in (i + 1)..d {
            let v = a.col_dot_col(i, j) * scale[i] * scale[j];
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    Ok(q)
}

/// `sigma` from a dense eigen-decomposition of `Q` (test-scale oracle).
pub fn sigma_dense<F: Scalar>(a: &SparseMatrix<F>, limit: usize) -> Result<F> {
    let q = q_matrix(a, limit)?;
    Ok(*q.symmetric_eigenvalues().last().expect("d >= 1"))
}

/// `sigma' = max { x^T Q x : x^T B^Q x <= 1 }`, the largest eigenvalue of
/// `(B^Q)^{-1/2} Q (B^Q)^{-1/2}` where `B^Q` is the block diagonal of `Q`.
pub fn sigma_prime_exact<F: Scalar>(a: &SparseMatrix<F>, p: &Partition, limit: usize) -> Result<F> {
    if p.dim() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            what: "partition size vs matrix columns",
            expected: a.n_cols(),
            got: p.dim(),
        });
    }
    let q = q_matrix(a, limit)?;
    let d = q.dim();
    let mut w = DenseMatrix::zeros(d);
    for (l, block) in p.blocks().iter().enumerate() {
        let (vals, vecs) = q.principal(block).symmetric_eigen();
        let max = vals.last().copied().unwrap_or(F::one());
        let min = vals[0];
        if !(min > F::of(SINGULAR_BLOCK_RTOL) * max) {
            return Err(Error::SingularBlock {
                block: l,
                min_eigenvalue: min.as_f64(),
            });
        }
        let s = block.len();
        for a_ in 0..s {
            for b_ in 0..s {
                let mut acc = F::zero();
                for k in 0..s {
                    acc += vecs[(a_, k)] * vecs[(b_, k)] / vals[k].sqrt();
                }
                w[(block[a_], block[b_])] = acc;
            }
        }
    }
    let c = w.mul(&q).mul(&w);
    let sym = DenseMatrix::from_fn(d, |i, j| F::half() * (c[(i, j)] + c[(j, i)]));
    Ok(*sym.symmetric_eigenvalues().last().expect("d >= 1"))
}

/// `max(1, s - 1)`.
pub fn s1(s: usize) -> usize {
    s.saturating_sub(1).max(1)
}

/// The two parts of `beta* = beta1* + beta2*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaStar<F> {
    pub beta1: F,
    pub beta2: F,
    pub beta: F,
}

/// `beta1* = 1 + (tau-1)(sigma-1)/s1`,
/// `beta2* = (tau/s - (tau-1)/s1) (sigma'-1)/sigma' sigma`.
pub fn beta_star<F: Scalar>(tau: usize, s: usize, sigma: F, sigma_prime: F) -> BetaStar<F> {
    assert!(tau >= 1 && tau <= s, "need 1 <= tau <= s");
    let t = F::of_usize(tau);
    let s1 = F::of_usize(s1(s));
    let beta1 = F::one() + (t - F::one()) * (sigma - F::one()) / s1;
    let beta2 = partition_prefactor::<F>(tau, s) * (sigma_prime - F::one()) / sigma_prime * sigma;
    BetaStar {
        beta1,
        beta2,
        beta: beta1 + beta2,
    }
}

/// `tau/s - (tau-1)/s1`: the coefficient of the cross-block term. It decreases in
/// `tau` and vanishes at `tau = s`.
pub fn partition_prefactor<F: Scalar>(tau: usize, s: usize) -> F {
    F::of_usize(tau) / F::of_usize(s) - F::of_usize(tau - 1) / F::of_usize(s1(s))
}

/// `2 beta1*`, a safe stepsize for `tau >= 2` that needs no knowledge of `sigma'`.
pub fn beta_safe_doubling<F: Scalar>(tau: usize, s: usize, sigma: F) -> Result<F> {
    if tau < 2 {
        return Err(Error::InvalidArgument(format!(
            "doubling bound needs tau >= 2, got {tau}"
        )));
    }
    Ok(F::two() * beta_star(tau, s, sigma, F::one()).beta1)
}

/// Closed form of `E[(x^S)^T G x^S]` under tau-distributed sampling:
/// `(tau/s) [a1 x^T D^G x + a2 x^T G x + a3 x^T (G - B^G) x]`.
pub fn eso_expectation_formula<F: Scalar>(
    g: &DenseMatrix<F>,
    x: &[F],
    tau: usize,
    p: &Partition,
) -> F {
    let s = p.block_size();
    let d = g.dim();
    assert_eq!(x.len(), d);
    assert_eq!(p.dim(), d);
    let a2 = F::of_usize(tau - 1) / F::of_usize(s1(s));
    let a1 = F::one() - a2;
    let a3 = partition_prefactor::<F>(tau, s);
    let mut diag = F::zero();
    let mut full = F::zero();
    let mut off_block = F::zero();
    for i in 0..d {
        diag += g[(i, i)] * x[i] * x[i];
        for j in 0..d {
            let v = g[(i, j)] * x[i] * x[j];
            full += v;
            if p.block_of(i) != p.block_of(j) {
                off_block += v;
            }
        }
    }
    F::of_usize(tau) / F::of_usize(s) * (a1 * diag + a2 * full + a3 * off_block)
}

/// `d beta* / (c tau)`: the leading factor of the iteration bound when `mu_R = 0`.
/// Equals `s + sigma (sigma'-1)/sigma'` at `tau = 1` and `sigma` at `tau = s`.
pub fn leading_factor_gamma<F: Scalar>(
    tau: usize,
    s: usize,
    c: usize,
    sigma: F,
    sigma_prime: F,
) -> F {
    let beta = beta_star(tau, s, sigma, sigma_prime).beta;
    F::of_usize(c * s) * beta / F::of_usize(c * tau)
}

/// Strong convexity data and accuracy targets for the iteration bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceInputs<F> {
    pub mu_f: F,
    pub mu_r: F,
    pub epsilon: F,
    pub rho: F,
    /// `L(x0) - L*`
    pub initial_gap: F,
}

/// Smallest `T >= (d/(c tau)) ((beta + mu_R)/(mu_f + mu_R)) log(gap / (eps rho))`.
pub fn theorem1_iterations<F: Scalar>(
    d: usize,
    c: usize,
    tau: usize,
    beta: F,
    inputs: &ConvergenceInputs<F>,
) -> Result<u64> {
    let ConvergenceInputs {
        mu_f,
        mu_r,
        epsilon,
        rho,
        initial_gap,
    } = *inputs;
    if !(mu_f >= F::zero() && mu_r >= F::zero()) {
        return Err(Error::InvalidArgument(
            "strong convexity moduli must be >= 0".into(),
        ));
    }
    if !(mu_f + mu_r > F::zero()) {
        return Err(Error::InvalidArgument(
            "mu_f + mu_R must be positive".into(),
        ));
    }
    if !(epsilon > F::zero() && epsilon < initial_gap) {
        return Err(Error::InvalidArgument(
            "need 0 < epsilon < L(x0) - L*".into(),
        ));
    }
    if !(rho > F::zero() && rho < F::one()) {
        return Err(Error::InvalidArgument("rho must lie in (0, 1)".into()));
    }
    if !(beta >= F::one() && beta.is_finite()) {
        return Err(Error::InvalidArgument("beta must be >= 1".into()));
    }
    if c == 0 || tau == 0 {
        return Err(Error::InvalidArgument("c and tau must be positive".into()));
    }
    let t = F::of_usize(d) / F::of_usize(c * tau)
        * ((beta + mu_r) / (mu_f + mu_r))
        * (initial_gap / (epsilon * rho)).ln();
    let t = t.ceil().max(F::zero());
    t.to_u64()
        .ok_or_else(|| Error::InvalidArgument(format!("iteration bound {t} not representable")))
}

/// `mu_f = lambda_min(Q)` for the square loss, by dense eigen-decomposition (tiny instances).
pub fn square_loss_strong_convexity<F: Scalar>(a: &SparseMatrix<F>, limit: usize) -> Result<F> {
    let q = q_matrix(a, limit)?;
    Ok(q.symmetric_eigenvalues()[0].max(F::zero()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    ExactPowerIteration,
    UpperBoundOmega,
}

impl fmt::Display for SigmaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaSource::ExactPowerIteration => "exact_power_iteration",
            SigmaSource::UpperBoundOmega => "upper_bound_omega",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaPrimeSource {
    ExactSmallInstance,
    UpperBoundOmegaPrime,
    SkippedDoubling,
}

impl fmt::Display for SigmaPrimeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaPrimeSource::ExactSmallInstance => "exact_small_instance",
            SigmaPrimeSource::UpperBoundOmegaPrime => "upper_bound_omega_prime",
            SigmaPrimeSource::SkippedDoubling => "skipped_doubling",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// Power iteration; the estimate is inflated by `1 + 10 tol` (and capped at `omega`)
    /// before it enters `beta`. Falls back to `omega` if the iteration does not converge.
    PowerIteration(PowerIterOptions),
    OmegaBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaPrimeMode {
    /// Dense oracle up to `limit` coordinates; falls back to `omega'` when `B^Q` is
    /// singular or the instance is too large.
    Exact {
        limit: usize,
    },
    OmegaPrimeBound,
    /// `beta = 2 beta1*`; requires `tau >= 2`.
    SkipDoubling,
}

/// Everything needed to choose `beta`, with the provenance of each value.
#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeInfo<F> {
    pub omega: usize,
    pub omega_prime: usize,
    pub sigma: F,
    pub sigma_source: SigmaSource,
    /// `None` when the doubling bound made `sigma'` unnecessary.
    pub sigma_prime: Option<F>,
    pub sigma_prime_source: SigmaPrimeSource,
    pub beta1: F,
    pub beta2: F,
    pub beta: F,
    pub s: usize,
    pub s1: usize,
    pub tau: usize,
    pub c: usize,
    /// Diagnostics from fallbacks (non-convergence, singular blocks).
    pub notes: Vec<String>,
}

impl<F: Scalar> StepsizeInfo<F> {
    /// Assembles the record from already known `sigma` / `sigma'` values.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        omega: usize,
        omega_prime: usize,
        sigma: F,
        sigma_source: SigmaSource,
        sigma_prime: Option<F>,
        sigma_prime_source: SigmaPrimeSource,
        tau: usize,
        partition: &Partition,
    ) -> Result<Self> {
        let s = partition.block_size();
        let c = partition.nodes();
        if tau == 0 || tau > s {
            return Err(Error::InvalidArgument(format!(
                "tau = {tau} must lie in [1, s = {s}]"
            )));
        }
        let (beta1, beta2, beta) = match (sigma_prime_source, sigma_prime) {
            (SigmaPrimeSource::SkippedDoubling, _) => {
                let b = beta_safe_doubling(tau, s, sigma)?;
                (b / F::two(), b / F::two(), b)
            }
            (_, Some(sp)) => {
                let b = beta_star(tau, s, sigma, sp);
                (b.beta1, b.beta2, b.beta)
            }
            (_, None) => {
                return Err(Error::InvalidArgument(
                    "sigma' required unless the doubling bound is used".into(),
                ))
            }
        };
        Ok(Self {
            omega,
            omega_prime,
            sigma,
            sigma_source,
            sigma_prime,
            sigma_prime_source,
            beta1,
            beta2,
            beta,
            s,
            s1: s1(s),
            tau,
            c,
            notes: Vec::new(),
        })
    }

    pub fn compute(
        a: &SparseMatrix<F>,
        partition: &Partition,
        tau: usize,
        sigma_mode: SigmaMode,
        sigma_prime_mode: SigmaPrimeMode,
    ) -> Result<Self> {
        let om = omega(a);
        let omp = omega_prime(a, partition);
        let mut notes = Vec::new();
        let (sig, sig_src) = match sigma_mode {
            SigmaMode::OmegaBound => (F::of_usize(om), SigmaSource::UpperBoundOmega),
            SigmaMode::PowerIteration(opts) => match sigma(a, &opts) {
                Ok(est) => {
                    let inflated = (est.value * (F::one() + F::of(10.0 * opts.tol)))
                        .min(F::of_usize(om))
                        .max(F::one());
                    (inflated, SigmaSource::ExactPowerIteration)
                }
                Err(e @ Error::NonConvergence { .. }) => {
                    notes.push(format!("{e}; using omega"));
                    (F::of_usize(om), SigmaSource::UpperBoundOmega)
                }
                Err(e) => return Err(e),
            },
        };
        let (sp, sp_src) = match sigma_prime_mode {
            SigmaPrimeMode::OmegaPrimeBound => (
                Some(F::of_usize(omp)),
                SigmaPrimeSource::UpperBoundOmegaPrime,
            ),
            SigmaPrimeMode::SkipDoubling => (None, SigmaPrimeSource::SkippedDoubling),
            SigmaPrimeMode::Exact { limit } => match sigma_prime_exact(a, partition, limit) {
                Ok(v) => (
                    Some(v.max(F::one()).min(F::of_usize(omp))),
                    SigmaPrimeSource::ExactSmallInstance,
                ),
                Err(e @ (Error::SingularBlock { .. } | Error::SizeLimit { .. })) => {
                    notes.push(format!("{e}; using omega'"));
                    (
                        Some(F::of_usize(omp)),
                        SigmaPrimeSource::UpperBoundOmegaPrime,
                    )
                }
                Err(e) => return Err(e),
            },
        };
        let mut info = Self::from_parts(om, omp, sig, sig_src, sp, sp_src, tau, partition)?;
        info.notes = notes;
        Ok(info)
    }

    /// Flat `key=value` lines.
    pub fn to_report(&self) -> String {
        let sp = self.sigma_prime.map_or_else(String::new, |v| v.to_string());
        let mut out = String::new();
        for (k, v) in self.fields(&sp) {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str("note=");
            out.push_str(n);
            out.push('\n');
        }
        out
    }

    /// Header plus one data row.
    pub fn to_csv(&self) -> String {
        let sp = self.sigma_prime.map_or_else(String::new, |v| v.to_string());
        let fields = self.fields(&sp);
        let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        let row: Vec<String> = fields.into_iter().map(|(_, v)| v).collect();
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    fn fields(&self, sp: &str) -> Vec<(&'static str, String)> {
        vec![
            ("omega", self.omega.to_string()),
            ("omega_prime", self.omega_prime.to_string()),
            ("sigma", self.sigma.to_string()),
            ("sigma_source", self.sigma_source.to_string()),
            ("sigma_prime", sp.to_string()),
            ("sigma_prime_source", self.sigma_prime_source.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("beta", self.beta.to_string()),
            ("s", self.s.to_string()),
            ("s1", self.s1.to_string()),
            ("tau", self.tau.to_string()),
            ("c", self.c.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> SparseMatrix<f64> {
        SparseMatrix::from_dense_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap()
    }

    #[test]
    fn omegas() {
        let a = example();
        assert_eq!(omega(&a), 2);
        assert_eq!(omega(&SparseMatrix::<f64>::identity(4)), 1);
        let dense = SparseMatrix::from_dense_rows(&[vec![1.0; 5], vec![2.0; 5]]).unwrap();
        assert_eq!(omega(&dense), 5);

        assert_eq!(a.groups_per_row(&[0, 0, 1]).into_iter().max(), Some(2));
        assert_eq!(omega_prime(&a, &Partition::contiguous(3, 1).unwrap()), 1);
        assert_eq!(
            omega_prime(&a, &Partition::contiguous(3, 3).unwrap()),
            omega(&a)
        );
    }

    #[test]
    fn sigma_simple_cases() {
        let id = SparseMatrix::<f64>::identity(5);
        let est = sigma(&id, &PowerIterOptions::default()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);

        let twin = SparseMatrix::<f64>::from_dense_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        // second row is empty; the matrix is still 2 x 2 with identical columns
        let twin = twin.unwrap();
        let est = sigma(&twin, &PowerIterOptions::default()).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9);
        assert!((sigma_dense(&twin, 10).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_prime_special_partitions() {
        let a = SparseMatrix::<f64>::from_dense_rows(&[
            vec![1.0, 0.5, 0.0, 0.2],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.3, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let one = Partition::contiguous(4, 1).unwrap();
        assert!((sigma_prime_exact(&a, &one, 100).unwrap() - 1.0).abs() < 1e-12);
        let singles = Partition::contiguous(4, 4).unwrap();
        let sp = sigma_prime_exact(&a, &singles, 100).unwrap();
        assert!((sp - sigma_dense(&a, 100).unwrap()).abs() < 1e-12);
        let big = SparseMatrix::<f64>::identity(8);
        assert!(matches!(
            sigma_prime_exact(&big, &Partition::contiguous(8, 2).unwrap(), 4),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn singular_block_detected() {
        let twin =
            SparseMatrix::from_dense_rows(&[vec![1.0, 1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]])
                .unwrap();
        let p = Partition::contiguous(4, 2).unwrap();
        assert!(matches!(
            sigma_prime_exact(&twin, &p, 10),
            Err(Error::SingularBlock { block: 0, .. })
        ));
        let info = StepsizeInfo::compute(
            &twin,
            &p,
            2,
            SigmaMode::OmegaBound,
            SigmaPrimeMode::Exact { limit: 10 },
        )
        .unwrap();
        assert_eq!(
            info.sigma_prime_source,
            SigmaPrimeSource::UpperBoundOmegaPrime
        );
        assert_eq!(info.notes.len(), 1);
    }

    #[test]
    fn beta_table_rows() {
        // tau = 1
        let b = beta_star(1, 10, 3.0f64, 2.0);
        assert!((b.beta - (1.0 + 0.3 * 0.5)).abs() < 1e-15);
        // c = 1 => sigma' = 1, s = d
        let b = beta_star(4, 50, 7.0f64, 1.0);
        assert!((b.beta - (1.0 + 3.0 * 6.0 / 49.0)).abs() < 1e-14);
        assert_eq!(b.beta2, 0.0);
        // tau = s
        let b = beta_star(6, 6, 4.5f64, 3.0);
        assert!((b.beta - 4.5).abs() < 1e-14);
    }

    #[test]
    fn doubling_bound() {
        assert_eq!(beta_safe_doubling(2, 5, 1.0f64).unwrap(), 2.0);
        assert!(beta_safe_doubling(1, 5, 1.0f64).is_err());
    }

    #[test]
    fn expectation_formula_edge_cases() {
        let p = Partition::contiguous(4, 2).unwrap();
        let g = DenseMatrix::from_fn(4, |i, j| (1 + i + 2 * j) as f64 / 3.0);
        let x = [0.5, -1.0, 2.0, 0.25];
        let full = g.quad_form(&x);
        assert!((eso_expectation_formula(&g, &x, 2, &p) - full).abs() < 1e-12);

        let s = 2.0;
        let diag: f64 = (0..4).map(|i| g[(i, i)] * x[i] * x[i]).sum();
        let mut off = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if p.block_of(i) != p.block_of(j) {
                    off += g[(i, j)] * x[i] * x[j];
                }
            }
        }
        let expect = (diag + off / s) / s;
        assert!((eso_expectation_formula(&g, &x, 1, &p) - expect).abs() < 1e-12);
    }

    #[test]
    fn iteration_bound() {
        let inputs = ConvergenceInputs {
            mu_f: 0.0,
            mu_r: 1.0,
            epsilon: 1.0,
            rho: 0.5,
            initial_gap: std::f64::consts::E / 2.0,
        };
        assert_eq!(theorem1_iterations(100, 4, 5, 2.0, &inputs).unwrap(), 15);
        let bad = ConvergenceInputs {
            mu_r: 0.0,
            ..inputs
        };
        assert!(theorem1_iterations(100, 4, 5, 2.0, &bad).is_err());
    }

    #[test]
    fn gamma_endpoints() {
        let (s, c, sig, sp) = (8, 3, 5.0f64, 2.5);
        let g1 = leading_factor_gamma(1, s, c, sig, sp);
        let gs = leading_factor_gamma(s, s, c, sig, sp);
        assert!((g1 - (8.0 + sig * (sp - 1.0) / sp)).abs() < 1e-12);
        assert!((gs - sig).abs() < 1e-12);
    }

    #[test]
    fn report_formats() {
        let a = example();
        let p = Partition::contiguous(3, 3).unwrap();
        let info = StepsizeInfo::compute(
            &a,
            &p,
            1,
            SigmaMode::PowerIteration(PowerIterOptions::default()),
            SigmaPrimeMode::OmegaPrimeBound,
        )
        .unwrap();
        let report = info.to_report();
        assert!(report.contains("omega=2\n"));
        assert!(report.contains("sigma_source=exact_power_iteration\n"));
        let csv = info.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(
            csv.lines().next().unwrap().split(',').count(),
            csv.lines().nth(1).unwrap().split(',').count()
        );
    }
}
