//! Matrix-inequality stability conditions for the sampled-data model.
//!
//! Conditions are built as [`SymmetricExpr`] values (sums of congruence terms
//! in the matrix variables) and compiled into [`AffineBlock`]s, sparse in the
//! scalar decision vector. [`LmiProblem::residuals`] re-checks any candidate
//! point by dense eigendecomposition.

mod conditions;
mod expr;
mod problem;
mod vars;

pub use conditions::{
    assemble_conditions, assemble_pi_blocks, condition_exprs, h_functions, AnalysisQuery, ConditionExpr,
    Formulation, HValues, PiBlocks, ZCoupling, MAX_ORDER,
};
pub use expr::{CongruenceTerm, SymmetricExpr};
pub use problem::{
    AffineBlock, BlockLabel, BlockResidual, ConstraintBlock, LmiProblem, ResidualReport, Sense, Triplet,
};
pub use vars::{DecisionVariables, Structure, VarBlock, VarName, VariableLayout};
