//! Social-context face identity engine.
//!
//! - [`facekit`]: skin gating, canonical face preprocessing, tag binding.
//! - [`recognizer`]: per-person classifiers, evidence accumulation, open-set
//!   decisions, friendship-prior biasing.
//! - [`socialstore`]: social graph and episodic interaction memory.
//! - [`dialogue`]: the scripted encounter state machine.
//! - [`harness`]: synthetic corpora and the tuning experiments.

pub mod dialogue;
pub mod facekit;
pub mod harness;
pub mod recognizer;
pub mod socialstore;
