//! Synthetic instances: block-angular sparse matrices and LASSO problems whose optimum is
//! known exactly.
//!
//! The LASSO construction fixes the optimal residual `g*` first and then rescales each
//! column of `A` so that the L1 optimality conditions hold at a chosen sparse `x*`:
//! `A_i^T g* = -lambda sign(x*_i)` on the support and `|A_i^T g*| = nu_i lambda` with
//! `nu_i` in `[0.1, 0.9]` elsewhere. Finally `y = A x* - g*`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::sampling::stream_rng;

const CERTIFICATE_TOL: f64 = 1e-8;
const OBJECTIVE_REL_TOL: f64 = 1e-12;
const MAX_ATTEMPTS: usize = 10;
// Column redraws until |A_i^T g*| is not tiny relative to ||A_i||.
const MAX_COLUMN_REDRAWS: usize = 200;
const MIN_ALIGNMENT: f64 = 0.1;

// Stream tags keep the generator's draws apart from the sampling streams.
const TAG_MATRIX: u64 = u64::MAX;
const TAG_LASSO: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    /// Number of diagonal blocks (nodes).
    pub c: usize,
    /// Rows of each local block `A_l^loc`.
    pub local_rows: usize,
    /// Rows of the coupling band `[A_1^glob ... A_c^glob]`.
    pub global_rows: usize,
    /// Columns per block.
    pub s: usize,
    pub nnz_local: usize,
    pub nnz_global: usize,
    pub lambda: f64,
    /// Number of nonzeros in `x*`.
    pub support: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn dim(&self) -> usize {
        self.c * self.s
    }

    pub fn n_rows(&self) -> usize {
        self.c * self.local_rows + self.global_rows
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.s == 0 || self.local_rows == 0 || self.nnz_local == 0 {
            return Err(Error::InvalidArgument(
                "c, s, local_rows and nnz_local must be >= 1".into(),
            ));
        }
        if self.global_rows > 0 && self.nnz_global == 0 {
            return Err(Error::InvalidArgument("nnz_global must be >= 1".into()));
        }
        if self.nnz_local > self.s {
            return Err(Error::Generator(format!(
                "local row density {} exceeds row width {}",
                self.nnz_local, self.s
            )));
        }
        if self.global_rows > 0 && self.nnz_global > self.dim() {
            return Err(Error::Generator(format!(
                "global row density {} exceeds row width {}",
                self.nnz_global,
                self.dim()
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {} must be positive",
                self.lambda
            )));
        }
        if self.support > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "support {} exceeds d = {}",
                self.support,
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Picks `k` of `candidates`, preferring columns nobody has used yet.
fn pick_columns(
    rng: &mut ChaCha8Rng,
    candidates: &mut [usize],
    covered: &[bool],
    k: usize,
) -> Vec<usize> {
    candidates.shuffle(rng);
    candidates.sort_by_key(|&j| covered[j]);
    let mut picked = candidates[..k].to_vec();
    picked.sort_unstable();
    picked
}

fn nonzero_uniform(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.random_range(-1.0..1.0);
        if v != 0.0 {
            return v;
        }
    }
}

fn block_angular_with(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<SparseMatrix<f64>> {
    spec.validate()?;
    let d = spec.dim();
    let mut covered = vec![false; d];
    let mut triplets = Vec::new();
    let mut row = 0;
    for l in 0..spec.c {
        let mut cands: Vec<usize> = (l * spec.s..(l + 1) * spec.s).collect();
        for _ in 0..spec.local_rows {
            for j in pick_columns(rng, &mut cands, &covered, spec.nnz_local) {
                covered[j] = true;
                triplets.push((row, j, nonzero_uniform(rng)));
            }
            row += 1;
        }
    }
    let mut cands: Vec<usize> = (0..d).collect();
    for _ in 0..spec.global_rows {
        for j in pick_columns(rng, &mut cands, &covered, spec.nnz_global) {
            covered[j] = true;
            triplets.push((row, j, nonzero_uniform(rng)));
        }
        row += 1;
    }
    if let Some(j) = covered.iter().position(|&c| !c) {
        return Err(Error::Generator(format!(
            "column {j} is empty; increase row counts or densities"
        )));
    }
    SparseMatrix::from_triplets(spec.n_rows(), d, triplets)
}

/// Block-angular matrix: `c` diagonal blocks of `local_rows x s` on top of a dense-ish
/// band of `global_rows` coupling all columns. Every row has exactly the requested number
/// of nonzeros, drawn uniformly from `[-1, 1]`.
pub fn gen_block_angular(spec: &GeneratorSpec) -> Result<SparseMatrix<f64>> {
    block_angular_with(spec, &mut stream_rng(spec.seed, TAG_MATRIX, 0))
}

/// LASSO instance `min 1/2 ||Ax - y||^2 + lambda ||x||_1` with a certified optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedInstance {
    pub a: SparseMatrix<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub x_star: Vec<f64>,
    /// `A x* - y`.
    pub g_star: Vec<f64>,
    pub optimal_value: f64,
    pub seed: u64,
    /// Sub-seed attempt that produced the instance.
    pub attempt: usize,
}

/// Residuals of the optimality certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    /// `max_i (|A_i^T g*| - lambda)^+`.
    pub max_dual_violation: f64,
    /// `max_{i in supp} |A_i^T g* + lambda sign(x*_i)|`.
    pub max_support_error: f64,
    /// Relative error of the stored optimal value against a recomputation.
    pub objective_rel_error: f64,
}

impl CertificateReport {
    pub fn passes(&self) -> bool {
        self.max_dual_violation <= CERTIFICATE_TOL
            && self.max_support_error <= CERTIFICATE_TOL
            && self.objective_rel_error <= OBJECTIVE_REL_TOL
    }
}

/// Rechecks the L1 optimality conditions at `x*` using `g = A x* - y` recomputed from
/// the data.
pub fn check_certificate(
    a: &SparseMatrix<f64>,
    y: &[f64],
    lambda: f64,
    x_star: &[f64],
    optimal_value: f64,
) -> Result<CertificateReport> {
    if y.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            what: "labels vs matrix rows",
            expected: a.n_rows(),
            got: y.len(),
        });
    }
    if x_star.len() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            what: "x* vs matrix columns",
            expected: a.n_cols(),
            got: x_star.len(),
        });
    }
    let mut g = a.mul_vec(x_star);
    for (gi, yi) in g.iter_mut().zip(y) {
        *gi -= yi;
    }
    let mut report = CertificateReport {
        max_dual_violation: 0.0,
        max_support_error: 0.0,
        objective_rel_error: 0.0,
    };
    for (i, &xi) in x_star.iter().enumerate() {
        let ag = a.col(i).dot(&g);
        report.max_dual_violation = report.max_dual_violation.max(ag.abs() - lambda);
        if xi != 0.0 {
            let err = (ag + lambda * xi.signum()).abs();
            report.max_support_error = report.max_support_error.max(err);
        }
    }
    let value = 0.5 * g.iter().map(|v| v * v).sum::<f64>()
        + lambda * x_star.iter().map(|v| v.abs()).sum::<f64>();
    report.objective_rel_error = (value - optimal_value).abs() / value.abs().max(f64::MIN_POSITIVE);
    Ok(report)
}

impl CertifiedInstance {
    pub fn certificate(&self) -> Result<CertificateReport> {
        check_certificate(
            &self.a,
            &self.y,
            self.lambda,
            &self.x_star,
            self.optimal_value,
        )
    }

    pub fn dim(&self) -> usize {
        self.a.n_cols()
    }
}

fn lasso_attempt(spec: &GeneratorSpec, attempt: usize) -> Result<CertifiedInstance> {
    let mut rng = stream_rng(spec.seed, TAG_LASSO, attempt as u64);
    let mut a = block_angular_with(spec, &mut rng)?;
    let n = a.n_rows();
    let d = a.n_cols();
    let g_star: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    let mut coords: Vec<usize> = (0..d).collect();
    coords.shuffle(&mut rng);
    let mut x_star = vec![0.0f64; d];
    for &i in &coords[..spec.support] {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        x_star[i] = sign * rng.random_range(0.5..1.5);
    }

    for i in 0..d {
        let mut ag = a.col(i).dot(&g_star);
        let mut redraws = 0;
        while ag.abs() < MIN_ALIGNMENT * a.col_sq_norm(i).sqrt() && redraws < MAX_COLUMN_REDRAWS {
            redraw_column(&mut a, i, &mut rng);
            ag = a.col(i).dot(&g_star);
            redraws += 1;
        }
        if ag == 0.0 {
            return Err(Error::Generator(format!("column {i} is orthogonal to g*")));
        }
        let target = if x_star[i] != 0.0 {
            -spec.lambda * x_star[i].signum()
        } else {
            rng.random_range(0.1..=0.9) * spec.lambda * ag.signum()
        };
        a.scale_column(i, target / ag);
    }

    let mut y = a.mul_vec(&x_star);
    for (yi, gi) in y.iter_mut().zip(&g_star) {
        *yi -= gi;
    }
    // the stored residual is the one the data actually produce
    let mut g = a.mul_vec(&x_star);
    for (gi, yi) in g.iter_mut().zip(&y) {
        *gi -= yi;
    }
    let optimal_value = 0.5 * g.iter().map(|v| v * v).sum::<f64>()
        + spec.lambda * x_star.iter().map(|v| v.abs()).sum::<f64>();
    Ok(CertifiedInstance {
        a,
        y,
        lambda: spec.lambda,
        x_star,
        g_star: g,
        optimal_value,
        seed: spec.seed,
        attempt,
    })
}

fn redraw_column(a: &mut SparseMatrix<f64>, j: usize, rng: &mut ChaCha8Rng) {
    let len = a.col_nnz(j);
    let fresh: Vec<f64> = (0..len).map(|_| nonzero_uniform(rng)).collect();
    a.set_column_values(j, &fresh);
}

/// Generates a certified LASSO instance, retrying with fresh sub-seeds when the
/// numerical certificate check fails.
pub fn gen_lasso_certified(spec: &GeneratorSpec) -> Result<CertifiedInstance> {
    spec.validate()?;
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        match lasso_attempt(spec, attempt) {
            Ok(inst) => {
                let report = inst.certificate()?;
                if report.passes() {
                    return Ok(inst);
                }
                last = format!("{report:?}");
            }
            Err(Error::Generator(msg)) => last = msg,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Certificate {
        attempts: MAX_ATTEMPTS,
        detail: last,
    })
}
