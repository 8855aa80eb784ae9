//! In-domain control of 1-D two-conservation-law port-Hamiltonian systems.
//!
//! The crate covers the full desk-scale workflow for wavelike plants
//! (vibrating strings and their relatives):
//!
//! 1. [`model`] — continuous plant description with boundary-port algebra
//!    and admissibility checks on the boundary matrices.
//! 2. [`discretize`] — structure-preserving mixed-finite-element
//!    discretization into a finite-dimensional port-Hamiltonian system.
//! 3. [`shaping`] — controller synthesis by interconnection: exact energy
//!    shaping under full actuation, SVD-optimal shaping under patch
//!    actuation, and a Frobenius-optimal damping fit.
//! 4. [`closed_loop`] — assembly of the interconnected plant/controller
//!    system and of the equivalent state-feedback form.
//! 5. [`integrate`] — implicit-midpoint time integration with energy,
//!    endpoint and Casimir bookkeeping.
//! 6. [`spectrum`] — pole maps, stability margins and the refined-grid
//!    spillover study.

pub mod closed_loop;
pub mod discretize;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod shaping;
pub mod spectrum;

pub use closed_loop::{
    assemble_dynamic, assemble_reduced, closed_loop_hamiltonian, state_feedback, ClosedLoop,
    ReducedClosedLoop,
};
pub use discretize::{build_ji, discretize, DiscretePlant};
pub use error::{PhsError, Result};
pub use integrate::{
    gaussian_profile, midpoint_step, reconstruct_deformation, settle_time, simulate,
    CasimirObserver, InitialProfile, LinearPhsSystem, MidpointStepper, SettleTime, SimConfig,
    StrainConvention, Trajectory,
};
pub use model::{
    build_boundary_port_map, validate_boundary_matrix, BoundaryPortMap, BoundaryReport,
    ContinuousPlant, PlantDocument, Profile,
};
pub use shaping::{
    build_patch_map, casimir_init, casimir_value, choose_bc_qc_under, fit_damping, residual_f,
    solve_fully_actuated, solve_under_actuated, Controller, ControllerDocument,
    FullyActuatedSolution, PatchMap, ShapingProblem, SvdParts, UnderActuatedSolution,
};
pub use spectrum::{poles, spillover_assembly, stability_margin, PoleMeta, PoleSet};
