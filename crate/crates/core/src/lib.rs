//! Verification engine for the subquotient category of finite Z-modules:
//! hom-set enumeration, degrees and Galois coverings, presheaves with
//! transfers in a finite level model, Hecke operators, and the norm-relation
//! identities they satisfy — checked abstractly in the universal
//! distribution algebra and concretely with exact cyclotomic arithmetic.

pub mod arith;
pub mod cd;
pub mod cyclo;
pub mod euler;
pub mod fcat;
pub mod finmod;
pub mod hecke;
pub mod intmat;
pub mod lattice;
pub mod report;
pub mod sheaf;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("infinite module")]
    InfiniteModule,
    #[error("module too large: {0}")]
    TooLarge(String),
    #[error("mismatched endpoints: {0}")]
    Mismatch(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Enumeration limits. The defaults fit every verification sweep shipped
/// with the crate; raise them to explore larger modules.
#[derive(Clone, Debug)]
pub struct Bounds {
    /// largest module order handled by element/submodule enumeration
    pub max_order: u64,
    /// largest hom-set enumerated explicitly
    pub max_hom: u64,
    /// gate for automorphism-group enumeration (Aut-ratio cross-checks)
    pub max_aut_enum: u64,
    /// cap on sparse section vector size
    pub max_section_entries: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_order: 10_000,
            max_hom: 2_000_000,
            max_aut_enum: 100_000,
            max_section_entries: 1_000_000,
        }
    }
}
