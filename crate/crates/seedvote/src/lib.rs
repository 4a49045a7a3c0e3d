//! seedvote is a seed-and-vote read mapper for short and long reads.
//!
//! Mapping runs as a batch pipeline: reads are parsed and packed into
//! fixed-capacity batches ([`seqio`]), minimizer seeds are extracted and
//! looked up in a two-array reference index to produce diagonal-adjusted
//! anchors ([`seedquery`], [`index`]), anchors are sorted and clustered by
//! a single-pass voting stage ([`vote`]), and the surviving segment pairs
//! are reported as PAF records ([`pafout`]). [`pipeline`] wires the stages
//! together across a worker pool, and [`mapeval`] scores mappings against
//! ground truth.
//!
//! The `seedvote` binary exposes three subcommands: `index`, `map`, and
//! `eval`. See [`cli`] for the parameter presets per sequencing technology.

pub mod cli;
pub mod index;
pub mod mapeval;
pub mod pafout;
pub mod pipeline;
pub mod seedquery;
pub mod seqio;
pub mod vote;

pub use index::SeedIndex;
pub use seedquery::{Anchor, MinimizerSeed, Strand};
pub use seqio::{EncodedReference, ReadBatch};
pub use vote::{SegmentPair, VoteParams};
