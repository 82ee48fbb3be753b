//! Stochastic finite elements: polynomial chaos, the Galerkin block system and
//! grid-search calibration of the stiffness field.

mod calibrate;
mod galerkin;
pub mod pce;

pub use galerkin::{
    expand_stiffness, sample_chaos, sample_tip, solve_galerkin, solve_galerkin_with, GalerkinSolver,
    PcSolution, StiffnessExpansion, DENSE_LIMIT,
};
pub use calibrate::{
    calibrate, linspace, CalibrationGrid, GridPoint, GridScore, SfemCalibration, SfemConfig, SfemModel,
    MIN_CALIBRATION_SAMPLES,
};
pub use pce::{hermite_triple, triple_products, PceBasis, TripleProducts};
