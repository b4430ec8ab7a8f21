//! Evaluation toolkit for unseen-script scene text detection.
//!
//! The pipeline: quadrilateral annotations and detections are parsed
//! ([`annotation`]), filtered by [`nms`], turned into rotated crops
//! ([`geometry`]), labeled by nearest class embedding ([`classifier`]) and
//! scored ([`metrics`]). [`crossscript`] summarizes how detectors trained on
//! one script transfer to others. [`commands`] wires it all into the CLI.

pub mod annotation;
pub mod classifier;
pub mod commands;
pub mod config;
pub mod crossscript;
pub mod geometry;
pub mod metrics;
pub mod nms;
