use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {residual:e})")]
    NonHermitian { residual: f64 },
    #[error("matrix is not symmetric (asymmetry {residual:e})")]
    NotSymmetric { residual: f64 },
    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("matrix is singular")]
    Singular,
    #[error("not a symplectic element (worst block residual {residual:e})")]
    NotSymplectic { residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parameter out of domain: {0}")]
    OutOfDomain(String),
    #[error("closed forms disagree (relative gap {gap:e})")]
    FormMismatch { gap: f64 },
    #[error("representation weight k = {0} must be an even integer")]
    OddWeight(f64),
    #[error("operator variable sets differ: {0}")]
    VariableMismatch(String),
    #[error("commutator left a second-order residue on {0}")]
    SecondOrderResidue(String),
    #[error("Fock cutoff too small: tail mass {tail:e} exceeds {limit:e}")]
    CutoffTooSmall { tail: f64, limit: f64 },
    #[error("argument lies on the branch cut: {0}")]
    BranchViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
