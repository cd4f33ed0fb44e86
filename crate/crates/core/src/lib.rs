//! Higher-order boxworld theory.
//!
//! Labeled probability tensors with the reduce-and-replace calculus, boxes and
//! nonsignaling boxes, local instruments, bipartite process tensors with the
//! full validator ladder (validity / NSP / NSWSE / causal order), the explicit
//! causal-inequality-violating constructions, and an exact-rational LP stack
//! (fixed-instrument process LP, instrument LP, seesaw, symmetric scan).
//!
//! The crate is `no_std` + `alloc`; everything is pure and deterministic, with
//! randomness injected through seeded RNGs. IO, JSON formats, and the CLI live
//! in the companion `boxworld-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod boxes;
pub mod constructions;
pub mod inequalities;
pub mod lp;
pub mod num;
pub mod operations;
pub mod optimizer;
pub mod process;
pub mod report;
pub mod subspace;
pub mod tensor;

pub use num::{Rat, Scalar};
pub use tensor::{AxisSpec, LabeledTensor, Role, RrExpr};
