//! Flow computation for the suspension and for its effective model.
//!
//! * [`reflections`] solves the rigid-ball strain problem by fixed-point sweeps.
//! * [`convolution`] applies the Oseen tensor and its divergence kernel on a
//!   cell-centred grid through zero-padded FFTs.
//! * [`grid`] turns nodal values into evaluable fields.
//! * [`einstein`] iterates the effective viscosity model to a fixed point.
//! * [`suspension`] assembles the particle-resolved fields built from the above.
//! * [`norms`] and [`viscosity`] reduce fields and stresslet states to numbers.

pub mod convolution;
pub mod einstein;
pub mod forcing;
pub mod grid;
pub mod norms;
pub mod reflections;
pub mod suspension;
pub mod viscosity;

pub use convolution::{Grid, StokesConvolver};
pub use einstein::{solve_einstein, EinsteinModel, EinsteinSolution};
pub use forcing::Forcing;
pub use grid::GridField;
pub use norms::{field_norm, NormKind, NormSampler};
pub use reflections::{
    exterior_energy, reflections_solve, ReflectionOptions, StressletState, SweepScheme,
};
pub use suspension::{
    assemble_phi_app, phi_r3, solve_phi_n, suspension_velocity, work_functional, PhiN,
};
pub use viscosity::{effective_viscosity_estimate, ViscosityEstimate};
