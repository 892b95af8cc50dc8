//! Diagnostic evaluation toolkit for video inpainting.
//!
//! The crate covers the full benchmark pipeline: corpus management
//! ([`corpus`]), procedural attribute-controlled occlusion masks
//! ([`maskgen`]), camera-motion annotation ([`videoattr`]), dataset slice
//! construction ([`slicer`]), pluggable deep feature extraction
//! ([`features`]), the five-metric quality suite ([`metrics`]), the
//! evaluation harness ([`harness`]), and result aggregation ([`report`]).

pub mod corpus;
pub mod features;
pub mod maskgen;
pub mod videoattr;
pub mod rng;
pub mod slicer;
pub mod synth;
