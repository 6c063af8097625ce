//! Desk-scale laboratory for paired-sequence interaction classification.
//!
//! The centrepiece is a concurrent LSTM unit ("Co-LSTSM"): two per-person
//! sub-memory units whose cells are fused by gated summation into a
//! co-memory cell behind a common output gate. Around it sit the reference
//! baselines (vanilla RNN, one joint LSTM, two late-fused LSTMs, and a
//! pooled linear classifier), hand-derived backpropagation through time in
//! exact and truncated modes with a finite-difference oracle, a synthetic
//! paired-stream dataset generator whose labels depend only on the relation
//! between the two streams, an SGD-with-momentum trainer, evaluation
//! utilities including observation-ratio prediction curves, and versioned
//! text checkpoints. Everything is deterministic from a single seed.

pub mod bptt;
pub mod cells;
pub mod cli;
pub mod error;
pub mod evaluator;
pub mod model;
pub mod numkernel;
pub mod persist;
pub mod synthdata;
pub mod trainer;

mod jsonio;

pub use error::{Error, Result};
