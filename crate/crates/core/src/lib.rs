//! Adversarial channel perturbation and detection for interference-graph
//! MISO networks.
//!
//! The crate is split by role:
//!
//! * [`netmodel`] places transceiver pairs, draws channels, builds the
//!   vertex/edge feature model and scores SINR and weighted sum rate (QoC).
//! * [`control`] produces power-bounded precoders (MRT and WMMSE).
//! * [`attack`] perturbs the channel tensor the central controller sees.
//! * [`statfit`] pools channel singular values, fits a distribution zoo by
//!   minimum Kolmogorov-Smirnov distance and raises detection alarms.
//! * [`campaign`] wires everything into seeded, reproducible sweeps.

pub mod attack;
pub mod campaign;
pub mod control;
pub mod netmodel;
pub mod seed;
pub mod statfit;

pub use num_complex::Complex64;

pub use attack::{AttackConfig, AttackError, AttackKind, AttackReport};
pub use campaign::{Campaign, CampaignError, EigenStudyOutput, QocRow};
pub use control::{ControllerKind, ControllerSpec, PrecoderSet, WmmseOutcome};
pub use netmodel::{
    ChannelTensor, GraphModel, NetError, NetworkTopology, PathLossBase, Point, SimConfig,
};
pub use statfit::{
    DetectionLevel, DetectionVerdict, EigenSample, FamilyId, FitResult, StatError, SvdMode,
};
