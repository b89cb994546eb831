//! Joint user power allocation and relay beamforming for two-way relay
//! networks, in full-duplex (FD) and time-fraction half-duplex (TF) modes.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds scenario configuration and seeded channel draws.
//! * [`physics`] evaluates SINR, rates, powers and feasibility in closed form.
//! * [`surrogates`] provides the concave minorants and convex majorants that
//!   drive each path-following step.
//! * [`conic`] is a small conic modelling layer with its own interior-point
//!   SOCP solver.
//! * [`sca`] implements the four path-following drivers and the frozen-τ
//!   half-duplex baseline.
//! * [`oracle`] and [`harness`] contain brute-force checks and the Monte
//!   Carlo experiment runner.
//!
//! ```
//! use twr_core::model::{generate_channels, Mode, NetworkConfig};
//! use twr_core::sca::run_fd_maximin;
//!
//! let cfg = NetworkConfig::experiment(1, 1, 2, -130.0);
//! let ch = generate_channels(&cfg, Mode::Fd, 7);
//! let run = run_fd_maximin(&ch, &cfg);
//! assert!(run.objective() > 0.0);
//! ```

pub mod conic;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod physics;
pub mod sca;
pub mod surrogates;

pub use error::{Error, Result};
pub use model::{ChannelSet, Mode, NetworkConfig, PairingMap};
pub use physics::{BeamformerSet, PowerAllocation};
pub use sca::{FdIterate, RunRecord, RunStatus, TfIterate};

pub use num_complex::Complex64;

/// Complex column vector used for every channel.
pub type CVector = nalgebra::DVector<Complex64>;
/// Complex matrix used for relay beamformers.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
