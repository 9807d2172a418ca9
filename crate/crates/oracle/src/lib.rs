//! Brute-force ground truth for token masks.

pub mod check;
pub mod earley;
pub mod glushkov;
pub mod instance;
pub mod mask;
pub mod synth;

pub use earley::{prefix_membership, Earley};
pub use glushkov::{PState, PositionLexer};
pub use mask::{oracle_mask, Oracle, OracleConfig, OracleKey, OracleMask};
pub use instance::{full_vocabulary, random_instance, Instance, InstanceSize};
pub use check::{check_equivalence, CheckReport, MaskDiff};
pub use synth::{sample_corpus, synthetic_vocabulary};
