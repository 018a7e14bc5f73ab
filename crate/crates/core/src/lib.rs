//! Secret-key rate analysis for BB84 when Eve has partial prior knowledge of
//! the random bits that choose Alice's bit value and the measurement basis.
//!
//! The crate is organised bottom-up:
//!
//! * [`flaw`] – binary entropy, the δ penalties and both phase-error upper bounds
//!   (the additive `e_bit + δ` bound and the tight multiplicative bound).
//! * [`channel`] – weak-coherent-source fiber model with infinite decoy states.
//! * [`keyrate`] – single-photon / weak-coherent rates and the biased-basis variant.
//! * [`oracle`] – exact two-qubit density matrices for Pauli-mixture attacks; used
//!   to certify the analytic bounds by brute force.
//! * [`ingest`] – beam-splitter power measurements to a basis-choice flaw estimate.
//! * [`search`] – sweeps, threshold searches and the γ degradation table.
//! * [`report`] – deterministic CSV emission.

pub mod channel;
pub mod error;
pub mod flaw;
pub mod ingest;
pub mod keyrate;
pub mod oracle;
pub mod report;
pub mod search;

pub use channel::{ChannelParams, LinkObservables, SourceSpec};
pub use error::{Error, Result};
pub use flaw::{binary_entropy, BoundMethod, DeltaSet, RandomnessFlaw};
pub use keyrate::{KeyRateReport, SourceKind};
