//! Numerical audits of over-parameterized neural-network loss landscapes.
//!
//! The crate provides the building blocks for a small verification lab:
//! dense linear algebra with rank certification, activation functions with
//! exact Taylor data at the origin, bias-free feedforward networks, an
//! analytic repair sequence for activations with vanishing derivatives,
//! Monte Carlo full-rank certification of hidden representations, explicit
//! strictly-decreasing descent paths to the infimum of the training loss,
//! and grid-based plateau analysis of low-dimensional loss surfaces.
//!
//! All randomness flows through a counter-based generator, so every result
//! is reproducible from a single seed regardless of thread count.

pub mod activations;
pub mod approximation;
pub mod descent;
pub mod error;
pub mod landscape;
pub mod linalg;
pub mod network;
pub mod rank_certify;
pub mod rng;

pub use activations::{Activation, Derivative, NonzeroDerivatives};
pub use approximation::{
    linspace, loss_compact_convergence, uniform_ball_weights, uniform_distance, ApproxSequence,
    ConvergenceReport, ConvergenceRow,
};
pub use descent::{
    build_decreasing_path, global_descent, perturb_to_full_rank, solve_last_layer, DescentConfig,
    DescentOutcome, DescentTrace, LastLayerSolve, PerturbOutcome,
};
pub use error::{Error, Result};
pub use landscape::{
    flat_minimum_instance, grid_scan_2d, uv_demo, verify_flat_minimum, weakly_global_verdict,
    FlatMinimumEvidence, FlatMinimumInstance, PlateauComponent, PlateauReport, ScanReport,
    SyntheticSurface,
};
pub use linalg::{
    default_rank_tol, least_squares_right_solve, scaled_vandermonde, LeastSquares, Matrix,
};
pub use network::{
    check_data_distinct, feedforward, hidden_output, loss_eval, random_weights, Dataset, Loss,
    NetSpec, Weights,
};
pub use rank_certify::{
    activation_collision_rate, certify_full_rank_measure, det_zero_frequency,
    vandermonde_nonsingularity, RankCertificate, RankVerdict, VandermondeCheck,
};
pub use rng::CounterRng;
