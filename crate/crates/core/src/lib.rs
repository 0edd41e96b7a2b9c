//! Spectral and transport analysis of a tight-binding chain with balanced
//! gain and loss at mirror-symmetric sites.
//!
//! ```
//! use ptchain::spectral::{solve_spectrum, SolverOptions};
//! use ptchain::transport::transport_coefficient;
//! use ptchain::exceptional::{find_exceptional_points, DEFAULT_ETA_RANGE, DEFAULT_GRID};
//! use ptchain::ChainConfig;
//!
//! # fn main() -> ptchain::Result<()> {
//! let cfg = ChainConfig::unit(10, 1, 0.5)?; // N, k, η with t = 1
//! let spec = solve_spectrum(&cfg, &SolverOptions::default())?;
//! for p in &spec.pairs {
//!     let xi = transport_coefficient(&p.vector, &cfg)?;
//!     println!("E = {:.6}  tag = {}  ξ = {:?}", p.energy, p.tag.as_str(), xi.value());
//! }
//!
//! let eps = find_exceptional_points(&cfg, DEFAULT_ETA_RANGE, DEFAULT_GRID)?;
//! assert_eq!(eps.points.len(), 1);
//! # Ok(())
//! # }
//! ```

pub mod classify;
pub mod exceptional;
pub mod error;
pub mod matching;
pub mod model;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use model::{build_hamiltonian, is_pt_symmetric, pt_exchange, ChainConfig, ComplexMatrix};

/// Library version, embedded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
