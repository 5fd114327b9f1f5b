//! Quantum-noise observables of a pulse-pumped fiber optical parametric
//! amplifier (FOPA).
//!
//! The library computes the photon-number gain `g`, the noise figure `NF`,
//! the normalized intensity noises `R_s`/`R_i` of the individual twin beams,
//! the normalized intensity-difference noise `R_t`, and the optimal detection
//! ratio `r_opt`, for three analytic regimes of the amplifier:
//!
//! * [`singlemode`] — single-frequency-mode closed forms,
//! * [`factorable`] — a spectrally factorable (rank-1) joint spectral
//!   function, where everything collapses onto one scalar overlap `F`,
//! * [`broadband`] — the broadband non-factorable joint spectral function,
//!   evaluated as truncated power series in the gain coefficient `G'`.
//!
//! An independent grid-based Green-function engine ([`engine`]) evaluates the
//! same observables for *any* joint spectral kernel by matrix quadrature and
//! serves as the cross-validation oracle for the analytic paths.

pub mod broadband;
pub mod criteria;
pub mod engine;
pub mod error;
pub mod factorable;
pub mod metrics;
pub mod minimize;
pub mod singlemode;
pub mod spectral;

pub use error::{FopaError, Result};
pub use metrics::{HTerms, NoiseReport};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
