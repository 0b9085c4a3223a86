//! Manufactured solutions, error norms and the verification experiments.

pub mod acceptance;
pub mod checks;
pub mod exact;
pub mod norms;
pub mod residual;
pub mod study;

pub use checks::{admissible_fields, hygiene, kernel, kkt_fd_check, operator_check, FdRow, Hygiene, OperatorCheck};
pub use exact::{octet, stokes_bubble, ExactFields, OCTETS};
pub use norms::{error_norms, ErrorRow, XError};
pub use residual::{weak_residuals, WeakResiduals};
pub use study::{convergence_study, robustness_experiment, rt_interpolation_study, solve_manufactured, ConvergenceReport, MeshSpec, RobustnessReport};
