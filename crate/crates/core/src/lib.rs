//! Secure and Byzantine-robust federated aggregation over Lagrange-coded
//! secret shares.

pub mod adversary;
pub mod beaver;
pub mod circuit;
pub mod commit;
pub mod crypto;
pub mod field;
pub mod group;
pub mod harness;
pub mod lcc;
pub mod poly;
pub mod protocol;
pub mod quantize;
pub mod reed_solomon;
pub mod rng;
pub mod robust;
pub mod snip;

pub use field::{Fe, Field, FieldError, FieldParams};
