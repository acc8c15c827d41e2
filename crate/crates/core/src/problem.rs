use crate::error::{Error, Result};
use crate::loss::{init_residual, loss_value, m_diag, LossKind, Residual};
use crate::matrix::SparseMatrix;
use crate::regularizer::SeparableReg;
use crate::scalar::Scalar;

/// Known minimizer and minimum of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum<F> {
    pub x: Option<Vec<F>>,
    pub value: F,
}

/// `min_x f(x) + R(x)` with `f` built from `A`, labels `y` and a loss.
#[derive(Debug, Clone)]
pub struct Problem<F> {
    a: SparseMatrix<F>,
    y: Vec<F>,
    loss: LossKind,
    reg: SeparableReg<F>,
    m_diag: Vec<F>,
    optimum: Option<KnownOptimum<F>>,
}

impl<F: Scalar> Problem<F> {
    /// Validates dimensions and labels and rejects zero columns, whose curvature
    /// `M_ii` would be zero.
    pub fn new(
        a: SparseMatrix<F>,
        y: Vec<F>,
        loss: LossKind,
        reg: SeparableReg<F>,
    ) -> Result<Self> {
        if reg.dim() != a.n_cols() {
            return Err(Error::DimensionMismatch {
                what: "regularizer length vs matrix columns",
                expected: a.n_cols(),
                got: reg.dim(),
            });
        }
        // checks y length and labels
        init_residual(&a, &vec![F::zero(); a.n_cols()], &y, loss)?;
        let m_diag = m_diag(&a, loss)?;
        Ok(Self {
            a,
            y,
            loss,
            reg,
            m_diag,
            optimum: None,
        })
    }

    pub fn with_optimum(mut self, optimum: KnownOptimum<F>) -> Result<Self> {
        if let Some(x) = &optimum.x {
            if x.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    what: "optimum length",
                    expected: self.dim(),
                    got: x.len(),
                });
            }
        }
        self.optimum = Some(optimum);
        Ok(self)
    }

    pub fn matrix(&self) -> &SparseMatrix<F> {
        &self.a
    }

    pub fn labels(&self) -> &[F] {
        &self.y
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn regularizer(&self) -> &SeparableReg<F> {
        &self.reg
    }

    pub fn m_diag(&self) -> &[F] {
        &self.m_diag
    }

    pub fn optimum(&self) -> Option<&KnownOptimum<F>> {
        self.optimum.as_ref()
    }

    pub fn optimal_value(&self) -> Option<F> {
        self.optimum.as_ref().map(|o| o.value)
    }

    pub fn dim(&self) -> usize {
        self.a.n_cols()
    }

    pub fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    pub fn residual(&self, x: &[F]) -> Result<Residual<F>> {
        init_residual(&self.a, x, &self.y, self.loss)
    }

    /// `L(x) = f(x) + R(x)` recomputed from scratch.
    pub fn objective(&self, x: &[F]) -> Result<F> {
        let g = self.residual(x)?;
        Ok(loss_value(&g) + self.reg.value(x))
    }
}
