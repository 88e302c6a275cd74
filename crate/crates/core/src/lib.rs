//! Secrecy capacities of erasure line networks with public state feedback.
//!
//! * [`gf`]: GF(2^w) arithmetic, rank, Vandermonde MDS generators.
//! * [`capacity`]: closed-form single-hop key and message capacities, scheme rates.
//! * [`lp`]: capacity linear programs for line networks, a simplex solver, LP/MPS export.
//! * [`sim`]: Monte-Carlo execution of the key-generation, message and relaying schemes.
//! * [`audit`]: exact rank-based secrecy checks over simulator logs.
//! * [`cli`]: the `linesec` command-line front end.

pub mod audit;
pub mod capacity;
pub mod cli;
mod combin;
pub mod gf;
pub mod lp;
pub mod sim;

pub use combin::{binomial, Combinations};
