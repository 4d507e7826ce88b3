//! Transmit beamforming for a secondary MIMO link under a primary-user
//! interference cap.
//!
//! The secondary transmitter must deliver `d` streams with per-stream SNR
//! targets while the power leaked onto the primary receiver stays below `ξ`.
//! [`solve_zfb`] returns the minimum-power zero-forcing design and
//! [`solve_nfb`] the minimum-power design that may leak up to `ξ`;
//! [`xi_min`] decides whether any design can meet the cap at all.
//!
//! ```
//! use cogbeam::{build_derived, sample_channels, solve_nfb, xi_min, ScenarioConfig};
//!
//! let config = ScenarioConfig::new(5, 5, 2, 2, 2, 1.0, 0.1, vec![4.0, 4.0], 7)?;
//! let channels = sample_channels(&config, 0)?;
//! let derived = build_derived(&channels, &config)?;
//! assert!(xi_min(&derived, &config.snr(), config.xi())?.feasible);
//! let solution = solve_nfb(&derived, &config.snr(), config.xi())?;
//! assert!(solution.interference <= 0.1 * (1.0 + 1e-6));
//! # Ok::<(), cogbeam::Error>(())
//! ```

pub mod certificates;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod linalg;
pub mod model;
pub mod nfb;
pub mod solution;
pub mod zfb;

pub use certificates::{
    feasible_baseline_power, oracle_min_power, receive_snr, sdp_dual_single_stream, KktReport, ReceiveSnr,
};
pub use error::{Error, Result};
pub use feasibility::{access_probability, xi_min, FeasibilityReport};
pub use linalg::{CMatrix, CVector};
pub use model::{build_derived, sample_channels, ChannelSet, DerivedModel, ScenarioConfig, SnrMatrix};
pub use nfb::{lagrangian_dual, lower_bound_power, power_and_interference_at, solve_nfb, v_of_y};
pub use solution::{BeamformingSolution, Mode};
pub use zfb::{solve_zfb, zfb_q_family, QFamily, ZfbDecomposition};
