//! Multigrid with coarsening by three for the staggered (MAC) Stokes
//! discretization, together with its local Fourier analysis.

pub mod error;
pub mod lfa;
pub mod linalg;
pub mod mac;
pub mod multigrid;
pub mod params;
pub mod reference;
pub mod smoothers;
pub mod stencil;

pub use error::{Error, Result};
pub use params::{RelaxParams, Restriction, Scheme, TransferPair};
