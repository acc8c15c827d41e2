//! Smooth losses `f(x) = sum_j l(x, A_j:, y_j)` expressed through a maintained residual.
//!
//! The residual is `g = A x - y` for the square loss and `g = -D^y A x` for the
//! logistic and squared hinge losses. Every partial derivative and the loss value
//! are functions of `g` and one column of `A`, which is what lets a node that only
//! owns a column block evaluate its own partial derivatives.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{Column, SparseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `1/2 (y_j - A_j: x)^2`
    SquareLoss,
    /// `log(1 + exp(-y_j A_j: x))`
    LogisticLoss,
    /// `1/2 max(0, 1 - y_j A_j: x)^2`
    SquareHingeLoss,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [
        LossKind::SquareLoss,
        LossKind::LogisticLoss,
        LossKind::SquareHingeLoss,
    ];

    /// Factor `kappa` in `M = kappa A^T A`.
    pub fn curvature_factor<F: Scalar>(self) -> F {
        match self {
            LossKind::LogisticLoss => F::of(0.25),
            LossKind::SquareLoss | LossKind::SquareHingeLoss => F::one(),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            LossKind::SquareLoss => "sl",
            LossKind::LogisticLoss => "ll",
            LossKind::SquareHingeLoss => "hl",
        }
    }

    fn uses_labels_in_residual(self) -> bool {
        !matches!(self, LossKind::SquareLoss)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sl" | "square" | "squared" | "square-loss" => Ok(LossKind::SquareLoss),
            "ll" | "logistic" | "logistic-loss" => Ok(LossKind::LogisticLoss),
            "hl" | "hinge" | "square-hinge" | "squared-hinge" => Ok(LossKind::SquareHingeLoss),
            other => Err(Error::InvalidArgument(format!("unknown loss '{other}'"))),
        }
    }
}

/// Diagonal of `M`: `||A_:i||^2` for SL/HL and `||A_:i||^2 / 4` for LL.
pub fn m_diag<F: Scalar>(a: &SparseMatrix<F>, kind: LossKind) -> Result<Vec<F>> {
    let kappa: F = kind.curvature_factor();
    (0..a.n_cols())
        .map(|j| {
            let m = kappa * a.col_sq_norm(j);
            if m > F::zero() {
                Ok(m)
            } else {
                Err(Error::ZeroColumn { col: j })
            }
        })
        .collect()
}

/// Residual vector together with the loss it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<F> {
    values: Vec<F>,
    kind: LossKind,
}

impl<F: Scalar> Residual<F> {
    pub fn from_values(values: Vec<F>, kind: LossKind) -> Self {
        Self { values, kind }
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `g += delta`.
    pub fn apply(&mut self, delta: &[F]) {
        assert_eq!(delta.len(), self.values.len());
        for (g, &d) in self.values.iter_mut().zip(delta) {
            *g += d;
        }
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }
}

fn check_labels<F: Scalar>(y: &[F], kind: LossKind) -> Result<()> {
    if let Some(j) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "label",
            index: j,
        });
    }
    if kind.uses_labels_in_residual() {
        if let Some(j) = y.iter().position(|v| *v == F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "label {j} is zero; {kind} needs nonzero labels"
            )));
        }
    }
    Ok(())
}

/// Builds the residual of `x` from scratch.
pub fn init_residual<F: Scalar>(
    a: &SparseMatrix<F>,
    x: &[F],
    y: &[F],
    kind: LossKind,
) -> Result<Residual<F>> {
    if x.len() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            what: "x length vs matrix columns",
            expected: a.n_cols(),
            got: x.len(),
        });
    }
    if y.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            what: "label length vs matrix rows",
            expected: a.n_rows(),
            got: y.len(),
        });
    }
    check_labels(y, kind)?;
    let mut ax = a.mul_vec(x);
    match kind {
        LossKind::SquareLoss => {
            for (g, &yj) in ax.iter_mut().zip(y) {
                *g -= yj;
            }
        }
        LossKind::LogisticLoss | LossKind::SquareHingeLoss => {
            for (g, &yj) in ax.iter_mut().zip(y) {
                *g = -(yj * *g);
            }
        }
    }
    Ok(Residual { values: ax, kind })
}

/// Logistic function `e^t / (1 + e^t)` without overflow.
#[inline]
pub fn sigmoid<F: Scalar>(t: F) -> F {
    if t >= F::zero() {
        F::one() / (F::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (F::one() + e)
    }
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub fn softplus<F: Scalar>(t: F) -> F {
    let cut = F::of(30.0);
    if t > cut {
        t + (-t).exp().ln_1p()
    } else if t < -cut {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

/// `f'_i(x)` from column `i` of `A` and the residual.
///
/// Signs follow the direct formulas in `x`:
/// SL: `A_:i^T g`; LL: `-sum_j y_j A_ji sigmoid(g_j)`;
/// HL: `-sum_{j : g_j > -1} y_j A_ji (1 + g_j)`.
#[inline]
pub fn partial_derivative_col<F: Scalar>(
    col: Column<'_, F>,
    g: &[F],
    y: &[F],
    kind: LossKind,
) -> F {
    match kind {
        LossKind::SquareLoss => col.dot(g),
        LossKind::LogisticLoss => {
            let mut acc = F::zero();
            for (&r, &a) in col.rows.iter().zip(col.values) {
                acc += y[r] * a * sigmoid(g[r]);
            }
            -acc
        }
        LossKind::SquareHingeLoss => {
            let mut acc = F::zero();
            for (&r, &a) in col.rows.iter().zip(col.values) {
                let gr = g[r];
                // strict: rows exactly on the hinge contribute nothing
                if gr > -F::one() {
                    acc += y[r] * a * (F::one() + gr);
                }
            }
            -acc
        }
    }
}

pub fn partial_derivative<F: Scalar>(i: usize, g: &Residual<F>, a: &SparseMatrix<F>, y: &[F]) -> F {
    partial_derivative_col(a.col(i), &g.values, y, g.kind)
}

/// Full gradient `f'(x)` from the residual.
pub fn gradient<F: Scalar>(g: &Residual<F>, a: &SparseMatrix<F>, y: &[F]) -> Vec<F> {
    (0..a.n_cols())
        .map(|i| partial_derivative(i, g, a, y))
        .collect()
}

/// `out += h * A_:i` (SL) or `out += -h * D^y A_:i` (LL/HL).
#[inline]
pub fn accumulate_delta<F: Scalar>(
    col: Column<'_, F>,
    h: F,
    y: &[F],
    kind: LossKind,
    out: &mut [F],
) {
    match kind {
        LossKind::SquareLoss => col.axpy(h, out),
        LossKind::LogisticLoss | LossKind::SquareHingeLoss => {
            for (&r, &a) in col.rows.iter().zip(col.values) {
                out[r] -= h * y[r] * a;
            }
        }
    }
}

/// Residual change `delta g` caused by the coordinate updates `(i, h_i)`.
pub fn delta_g<F: Scalar>(
    updates: &[(usize, F)],
    a: &SparseMatrix<F>,
    y: &[F],
    kind: LossKind,
) -> Vec<F> {
    let mut out = vec![F::zero(); a.n_rows()];
    for &(i, h) in updates {
        accumulate_delta(a.col(i), h, y, kind, &mut out);
    }
    out
}

/// `f(x)` from its residual: `1/2 ||g||^2`, `sum log(1 + e^g_j)` or `1/2 sum max(0, 1 + g_j)^2`.
pub fn loss_value<F: Scalar>(g: &Residual<F>) -> F {
    loss_value_of(&g.values, g.kind)
}

pub fn loss_value_of<F: Scalar>(g: &[F], kind: LossKind) -> F {
    match kind {
        LossKind::SquareLoss => g.iter().map(|&v| v * v).sum::<F>() * F::half(),
        LossKind::LogisticLoss => g.iter().map(|&v| softplus(v)).sum(),
        LossKind::SquareHingeLoss => {
            g.iter()
                .map(|&v| {
                    let m = (F::one() + v).max(F::zero());
                    m * m
                })
                .sum::<F>()
                * F::half()
        }
    }
}
