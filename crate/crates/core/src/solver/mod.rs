//! Fixed-point construction of mixed-type solutions.

pub mod assemble;
pub mod driver;
pub mod linear;
pub mod picard;
pub mod radial;
pub mod reduction;
pub mod residual;
pub mod shooting;

pub use assemble::{extract_beta, CollocationReport, MixedSolution};
pub use driver::{reduced_value, solve_alpha, solve_mixed, AlphaChoice, MixedContext, MixedOutcome, SolveReport, Solved, SolverOptions};
pub use linear::{L1Solver, L2Solution, L2Solver};
pub use picard::{IterationState, PicardOptions};
pub use radial::{solve_lambda_one, LambdaOneSolution, RadialOptions};
pub use reduction::{delta_leading_coefficient, AlphaOptions, AlphaSolve};
pub use residual::{MixedProblem, ScaleGrids};
pub use shooting::{cross_check, ode_residual, radial_shoot, CrossCheck, ShootOptions, ShootingState, SolutionType, TrajectoryPoint};
