//! Integration of branched rough paths against polynomial one-forms.
//!
//! The crate is organised bottom-up:
//!
//! * [`forest`]: canonical labelled forests, the admissible-cut coproduct and
//!   the Grossman–Larson product.
//! * [`character`]: the truncated character group over forests.
//! * [`rough_path`]: time-sampled branched rough paths, lifts, p-variation
//!   and the inhomogeneous `d_p` metric.
//! * [`one_form`]: polynomial one-forms, the tree-indexed derivatives `f_τ`
//!   and the lifted one-form `β`.
//! * [`effect`]: fibre elements, parallel translation, effect compositions
//!   and the rough integral together with its local approximant.
//! * [`pi`]: free generators of the Grossman–Larson algebra, words and the
//!   companion Π-rough path.

pub mod character;
pub mod effect;
pub mod error;
pub mod fixtures;
pub mod forest;
pub mod linalg;
pub mod one_form;
pub mod pi;
pub mod rough_path;
pub mod scalar;
pub mod stats;
pub mod verify;

pub use character::Character;
pub use effect::{EffectPath, IntegralEstimate, IntegrationOptions, OneFormRep};
pub use error::{Error, Result};
pub use forest::{Forest, ForestBasis, ForestLinComb, RawTree, Tree};
pub use one_form::{Polynomial, PolynomialOneForm};
pub use pi::{GeneratorSet, PiRoughPath, Word};
pub use rough_path::{BranchedRoughPath, ControlFn};
pub use scalar::Scalar;

/// Largest truncation level supported anywhere in the crate.
pub const MAX_DEGREE: usize = 3;
