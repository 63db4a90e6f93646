//! Core library for `sparsec`: compile time-bounded discrete computations
//! (Turing machines or fixed-point bit programs) into bounded-fan-in Boolean
//! DAGs, lower them to linear-threshold circuits and ReLU networks with
//! certified output precision, and verify the companion constructions
//! (sparse Fourier composition, smooth lifts, autoregressive trace learning,
//! depth-efficiency demo).

pub mod arlearn;
pub mod bits;
pub mod circuit;
pub mod corpus;
pub mod fourier;
pub mod gadgets;
pub mod lift;
pub mod ltf;
pub mod neuralize;
pub mod pipeline;
pub mod precision;
pub mod stats;
pub mod tm;
pub mod unroll;

pub use circuit::{Circuit, CircuitBuilder, Gate, GateKind, NodeId, SparsityCertificate};
pub use tm::{RunTrace, TuringMachine};
