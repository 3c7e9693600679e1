//! Desk-scale nonlinear time integration of the flattened two-layer system:
//! state representation, nonlinear forcing families, semi-implicit steppers,
//! energy/dissipation functionals, and the trajectory driver.

pub mod energy;
pub mod nonlinear;
pub mod remainder;
pub mod state;
pub mod stepper;
pub mod trajectory;

pub use energy::{energy_functionals, physical_energy, surrogate_energy, EnergyReport, TimeDerivs};
pub use nonlinear::{nonlinear_terms, NonlinearForcing};
pub use remainder::taylor_remainder;
pub use state::FlattenedState;
pub use stepper::{Scheme, Stepper};
pub use trajectory::{
    initial_state_from_modes, run_trajectory, InitialData, ModeSpec, SimConfig, TimeRow,
    TrajectoryOutput,
};
