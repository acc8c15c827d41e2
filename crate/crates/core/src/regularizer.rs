//! Separable regularizers and the exact one-dimensional step
//! `h = argmin_t f' t + (M_ii beta / 2) t^2 + R_i(x_i + t)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One coordinate's regularizer `R_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordReg<F> {
    Zero,
    /// `lambda |t|`
    L1(F),
    /// `lambda / 2 t^2`
    L2(F),
    /// Indicator of `[lo, hi]`.
    Box {
        lo: F,
        hi: F,
    },
}

impl<F: Scalar> CoordReg<F> {
    fn validate(&self, i: usize) -> Result<()> {
        let ok = match *self {
            CoordReg::Zero => true,
            CoordReg::L1(l) => l.is_finite() && l >= F::zero(),
            CoordReg::L2(l) => l.is_finite() && l > F::zero(),
            CoordReg::Box { lo, hi } => !lo.is_nan() && !hi.is_nan() && lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid regularizer parameters at coordinate {i}: {self:?}"
            )))
        }
    }

    /// `R_i(t)`, `+inf` outside a box.
    pub fn value(&self, t: F) -> F {
        match *self {
            CoordReg::Zero => F::zero(),
            CoordReg::L1(l) => l * t.abs(),
            CoordReg::L2(l) => F::half() * l * t * t,
            CoordReg::Box { lo, hi } => {
                if t >= lo && t <= hi {
                    F::zero()
                } else {
                    F::infinity()
                }
            }
        }
    }

    /// Closed-form minimizer of `fprime t + (curv / 2) t^2 + R_i(x + t)` with `curv = M_ii beta`.
    #[inline]
    pub fn step(&self, fprime: F, curv: F, x: F) -> F {
        match *self {
            CoordReg::Zero => -fprime / curv,
            CoordReg::L1(l) => {
                // the point of [(-l - f')/curv, (l - f')/curv] closest to -x
                let lo = (-l - fprime) / curv;
                let hi = (l - fprime) / curv;
                (-x).max(lo).min(hi)
            }
            CoordReg::L2(l) => -(fprime + l * x) / (curv + l),
            CoordReg::Box { lo, hi } => {
                let target = (x - fprime / curv).max(lo).min(hi);
                let mut h = target - x;
                if !(x >= lo && x <= hi) {
                    return h;
                }
                // x + (target - x) can round past the bound; nudge h toward zero
                let nudge = F::epsilon() * (x.abs() + h.abs());
                for _ in 0..4 {
                    if x + h >= lo && x + h <= hi {
                        return h;
                    }
                    h -= h.signum() * nudge;
                }
                if x + h >= lo && x + h <= hi {
                    h
                } else {
                    F::zero()
                }
            }
        }
    }
}

/// `R(x) = sum_i R_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SeparableReg<F> {
    /// The same `R_i` on every coordinate.
    Uniform {
        term: CoordReg<F>,
        dim: usize,
    },
    PerCoordinate(Vec<CoordReg<F>>),
}

impl<F: Scalar> SeparableReg<F> {
    pub fn uniform(term: CoordReg<F>, dim: usize) -> Result<Self> {
        term.validate(0)?;
        Ok(SeparableReg::Uniform { term, dim })
    }

    pub fn zero(dim: usize) -> Self {
        SeparableReg::Uniform {
            term: CoordReg::Zero,
            dim,
        }
    }

    pub fn l1(lambda: F, dim: usize) -> Result<Self> {
        Self::uniform(CoordReg::L1(lambda), dim)
    }

    pub fn l2(lambda: F, dim: usize) -> Result<Self> {
        Self::uniform(CoordReg::L2(lambda), dim)
    }

    pub fn per_coordinate(terms: Vec<CoordReg<F>>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            t.validate(i)?;
        }
        Ok(SeparableReg::PerCoordinate(terms))
    }

    pub fn dim(&self) -> usize {
        match self {
            SeparableReg::Uniform { dim, .. } => *dim,
            SeparableReg::PerCoordinate(v) => v.len(),
        }
    }

    #[inline]
    pub fn term(&self, i: usize) -> CoordReg<F> {
        match self {
            SeparableReg::Uniform { term, .. } => *term,
            SeparableReg::PerCoordinate(v) => v[i],
        }
    }

    /// `R(x)`; `+inf` iff some box constraint is violated.
    pub fn value(&self, x: &[F]) -> F {
        x.iter()
            .enumerate()
            .map(|(i, &t)| self.term(i).value(t))
            .sum()
    }

    /// `sum_{i in coords} R_i(x_i)` for a node that owns `coords` and stores their values in `x_local`.
    pub fn value_on(&self, coords: &[usize], x_local: &[F]) -> F {
        coords
            .iter()
            .zip(x_local)
            .map(|(&i, &t)| self.term(i).value(t))
            .sum()
    }

    /// Closed-form coordinate step for coordinate `i`.
    pub fn prox_step(&self, i: usize, fprime: F, m_ii: F, beta: F, x_i: F) -> Result<F> {
        if !fprime.is_finite() {
            return Err(Error::NonFinite {
                what: "partial derivative",
                index: i,
            });
        }
        if !x_i.is_finite() {
            return Err(Error::NonFinite {
                what: "iterate",
                index: i,
            });
        }
        let curv = m_ii * beta;
        if !(curv.is_finite() && curv > F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "M_ii * beta must be positive and finite at coordinate {i}"
            )));
        }
        let h = self.term(i).step(fprime, curv, x_i);
        if h.is_finite() {
            Ok(h)
        } else {
            Err(Error::NonFinite {
                what: "update",
                index: i,
            })
        }
    }

    /// Strong convexity modulus of `R` with respect to `||x||_M^2 = sum M_ii x_i^2`:
    /// `min_i lambda_i / M_ii` when every term is L2, zero otherwise.
    pub fn strong_convexity(&self, m_diag: &[F]) -> F {
        let mut mu = F::infinity();
        for (i, &m) in m_diag.iter().enumerate() {
            match self.term(i) {
                CoordReg::L2(l) => mu = mu.min(l / m),
                _ => return F::zero(),
            }
        }
        if mu.is_finite() {
            mu
        } else {
            F::zero()
        }
    }
}

/// Value of the coordinate step model `fprime t + (curv / 2) t^2 + R_i(x + t)`.
pub fn step_objective<F: Scalar>(term: CoordReg<F>, fprime: F, curv: F, x: F, t: F) -> F {
    fprime * t + F::half() * curv * t * t + term.value(x + t)
}
