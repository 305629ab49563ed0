//! Finite-scale IP_r sets, multiplicative thickness and syndeticity, the
//! cover decomposition of a coloring and product families, each with a
//! checkable certificate.
//!
//! All operations work inside an [`Ambient`]: a finite set of ground
//! elements whose products and sums are tabulated, with undefined entries
//! where a result leaves it.

mod ambient;
mod cover;
mod ipr;
mod prod;
mod shifts;

pub use ambient::{primitive_root, Ambient, ElementSet, MAX_AMBIENT};
pub use cover::{
    cover_decomposition, verify_cover, CoverCertificate, CoverDecomposition, MAX_COVER_COLORS,
};
pub use ipr::{find_ipr_witness, fs_set, is_ipr_star, IPrWitness};
pub use prod::{lemma_prod_construct, verify_prod, ProdFamily};
pub use shifts::{is_syndetic, is_thick, SyndeticWitness, ThickFamilySpec, ThickTestFamily};

pub(crate) use cover::classes;

use thiserror::Error;

use crate::error::OutOfGround;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("value outside the ambient")]
    OutOfGround,
    #[error("thick test family must be nonempty with nonempty sets")]
    EmptyFamily,
    #[error("{0} has no color")]
    NotCovered(Rational),
    #[error("cover decomposition supports at most {MAX_COVER_COLORS} colors, got {0}")]
    TooManyColors(usize),
    #[error("no admissible color group fits the shifts available at {0}")]
    CoverFailure(Rational),
    #[error("union of colors {ys:?} (group {l}) is not thick for the test family")]
    ThicknessUncertified { l: usize, ys: Vec<usize> },
    #[error("set {0} is not thick for the test family")]
    NotThick(usize),
    #[error("no IP_r witness at column {column} for label {label} ({candidates} candidates)")]
    ConstructionFailure {
        column: usize,
        label: usize,
        candidates: usize,
    },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("internal verification failed: {0}")]
    VerificationFailed(String),
}

impl From<OutOfGround> for StructureError {
    fn from(_: OutOfGround) -> Self {
        StructureError::OutOfGround
    }
}
