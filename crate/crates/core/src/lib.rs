//! Ambiguity-aware MIMO radar: transmit beamforming under zero-forcing
//! constraints drawn from an ambiguity graph, gating and data association,
//! waveform design, and the power/association trade-off.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`). The type
//! aliases at the crate root pick `f64`; the `*F32` variants pick `f32`.

pub mod assoc;
pub mod error;
pub mod gating;
pub mod graph;
pub mod linalg;
pub mod real;
pub mod rng;
pub mod scene;
pub mod sdp;
pub mod tradeoff;
pub mod beamform;
pub mod waveform;

pub use error::{Error, Result};
pub use graph::{AmbiguityGraph, GraphKind};
pub use real::Real;

pub type Scene = scene::Scene<f64>;
pub type SceneF32 = scene::Scene<f32>;
pub type Target = scene::Target<f64>;
pub type TargetF32 = scene::Target<f32>;
pub type RectGate = gating::RectGate<f64>;
pub type ConfusionTable = gating::ConfusionTable<f64>;
pub type BeamformResult = beamform::BeamformResult<f64>;
pub type BeamformResultF32 = beamform::BeamformResult<f32>;
pub type BeamformOptions = beamform::BeamformOptions<f64>;
pub type TradeoffPoint = tradeoff::TradeoffPoint<f64>;
pub type PolyphaseWaveformSet = waveform::PolyphaseWaveformSet<f64>;
pub type Detection = assoc::Detection<f64>;
