//! Distributed randomized coordinate descent for `min_x f(x) + R(x)`, where
//! `f(x) = sum_j loss(e_j^T A x, y_j)` and `R` is separable.
//!
//! The coordinates are partitioned across `c` simulated nodes. At each iteration every
//! node samples `tau` of its own coordinates, updates them in closed form with stepsize
//! parameter `beta`, and the nodes exchange changes of a residual vector `g` by
//! reduce-all or over an asynchronous ring. [`eso`] computes the quantities that make a
//! `beta` safe (`sigma`, `sigma'`, `omega`, `omega'`, `beta*`), and [`generator`] builds
//! LASSO instances with exactly known optima.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and `*32`
//! aliases below name the common instantiations.

pub mod dense;
pub mod engine;
pub mod error;
pub mod eso;
pub mod generator;
pub mod loss;
pub mod matrix;
pub mod problem;
pub mod regularizer;
pub mod sampling;
pub mod scalar;

pub use engine::{
    run, run_from, AslIndexing, BetaSource, Cluster, CostModel, Execution, Protocol, RunConfig,
    RunTrace,
};
pub use error::{Error, Result};
pub use eso::StepsizeInfo;
pub use generator::{gen_block_angular, gen_lasso_certified, CertifiedInstance, GeneratorSpec};
pub use loss::LossKind;
pub use matrix::{Partition, SparseMatrix};
pub use problem::{KnownOptimum, Problem};
pub use regularizer::{CoordReg, SeparableReg};
pub use sampling::SamplingPlan;
pub use scalar::Scalar;

pub type SparseMatrix64 = SparseMatrix<f64>;
pub type SparseMatrix32 = SparseMatrix<f32>;
pub type Problem64 = Problem<f64>;
pub type Problem32 = Problem<f32>;
pub type SeparableReg64 = SeparableReg<f64>;
pub type SeparableReg32 = SeparableReg<f32>;
pub type RunConfig64 = RunConfig<f64>;
pub type RunConfig32 = RunConfig<f32>;
pub type RunTrace64 = RunTrace<f64>;
pub type RunTrace32 = RunTrace<f32>;
pub type StepsizeInfo64 = StepsizeInfo<f64>;
pub type StepsizeInfo32 = StepsizeInfo<f32>;
pub type Cluster64<'p> = Cluster<'p, f64>;
pub type Cluster32<'p> = Cluster<'p, f32>;
