//! Kernel mean embeddings and their quantum counterpart, simulated end to end.
//!
//! The crate has two evaluation routes for the same quantities:
//!
//! * [`kernel`] evaluates kernels, empirical mean-embedding inner products
//!   `K(X, Y)`, embedding norms and the biased MMD estimator exactly. It is the
//!   oracle for everything else.
//! * [`fock`], [`swap`] and [`pipeline`] build the quantum mean embedding of a
//!   sample as a normalized superposition of coherent states in a truncated
//!   Fock space, estimate overlaps with a simulated swap test, recover the
//!   normalization through a reference state and recombine everything into
//!   `K(X, Y)` and MMD estimates.
//!
//! [`cost`] counts the abstract resources each route spends so that the
//! quadratic-versus-linear scaling can be asserted on exact counters.

// `!(a > b)` is used deliberately so NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod dist;
pub mod error;
pub mod fock;
pub mod io;
pub mod json;
pub mod kernel;
pub mod pipeline;
pub mod rng;
pub mod sample;
pub mod swap;

pub use cost::{compare_paths, fit_power_law, scaling_fit, CostLedger, PowerLawFit, ScalingReport};
pub use dist::Distribution;
pub use error::{Error, Result};
pub use fock::{coherent_feature, inner, min_truncation_dim, qme_state, superpose, PureState, TruncationPolicy};
pub use kernel::{
    embedding_norm, eval_kernel, mean_inner, mmd_biased_sq, EmbeddingNorm, KernelFamily, KernelSpec, MmdValue,
};
pub use pipeline::{
    estimate_k, estimate_mmd_sq, estimate_norm_via_reference, Estimator, KxyEstimate, MmdQuantumEstimate, NormEstimate,
    QmePipelineConfig, ReferenceRule,
};
pub use sample::Sample;
pub use swap::{recover_inner_positive, run_swap_shots, swap_probabilities, ShotEstimate};
