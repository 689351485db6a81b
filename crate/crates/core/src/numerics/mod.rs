//! Finite differences, Newton minimization, and regularity probes.

pub mod audit;
pub mod fd;
pub mod optimize;

pub use audit::{
    bvm_audit, bvm_audit_with, convexity_probe, third_derivative_bound_probe, AuditReport, AuditSettings,
    AuditVerdicts, ThirdBound,
};
pub use fd::{central_gradient, central_hessian};
pub use optimize::{find_minimizer, FitResult, NewtonSettings};
