//! Explicit t-write binary write-once-memory (WOM) codes.
//!
//! A basic block stores `m` data words of `n` bits plus `t - 1` side blocks
//! holding the affine hash index chosen for each rewrite round. Round 1
//! writes fixed-weight subsets; every later round searches the truncated
//! affine hash family over GF(2^n) for a map under which each data word can
//! be raised (only 0 -> 1 flips) to a preimage of the new message.
//!
//! Module map:
//! - [`gf2n`]: GF(2^n) arithmetic with canonical moduli.
//! - [`bitwords`]: short bit vectors, dominance, combinadic ranking.
//! - [`capacity`]: entropy, the capacity region and parameter derivation.
//! - [`hashfam`]: the hash family and its exhaustive audits.
//! - [`block_codec`]: round encoders/decoders for one basic block.
//! - [`wom_device`]: the strict write-once memory and its image format.
//! - [`full_codec`]: concatenation of blocks, bitstream packing, sessions.
//! - [`selftest`]: the acceptance checks, runnable from tests and the CLI.

pub mod bitwords;
pub mod block_codec;
pub mod capacity;
mod error;
pub mod full_codec;
pub mod gf2n;
pub mod hashfam;
pub mod selftest;
pub mod wom_device;

pub use bitwords::BitWord;
pub use block_codec::{BlockState, RoundMessage, RoundPayload};
pub use capacity::{RatePoint, WeightVector, WomParams};
pub use error::{Error, Result};
pub use full_codec::{FullParams, Session};
pub use gf2n::{FieldElement, FieldSpec};
pub use hashfam::HashIndex;
pub use wom_device::Device;
