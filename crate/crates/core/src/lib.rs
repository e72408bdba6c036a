//! Energy-aware localization pipeline for video capsule endoscopy.
//!
//! The crate covers the whole offline replay chain: raw Bayer image
//! handling ([`cfa`]), a four-organ left-to-right hidden Markov model in
//! probability, log and fixed-point domains ([`markov`]), float, fixed-point
//! and sliding-window Viterbi decoding ([`decoder`]), per-frame observation
//! sources ([`classifier`]), a per-event energy model ([`power`]), the capsule
//! controller ([`capsule`]) and batch experiments ([`lab`]).
//!
//! The model and decoder types are generic over the metric scalar. Float
//! metrics go through [`scalar::Real`] (`f32`/`f64`), fixed-point metrics are
//! raw `i64` words interpreted through a [`QFormat`]. The aliases below fix
//! the scalar for the common cases.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capsule;
pub mod cfa;
pub mod classifier;
pub mod decoder;
pub mod error;
pub mod lab;
pub mod markov;
pub mod power;
pub mod scalar;

pub use error::{Error, Result};
pub use markov::{Organ, QFormat, QuantHmm};

/// Probability-domain HMM with `f64` entries.
pub type HmmF64 = markov::HmmParams<f64>;
/// Log-domain HMM with `f64` metrics.
pub type LogHmmF64 = markov::LogHmm<f64>;
/// Log-domain HMM with `f32` metrics.
pub type LogHmmF32 = markov::LogHmm<f32>;
/// Observation carrying `f64` log-likelihood scores.
pub type ObservationF64 = decoder::Observation<f64>;
/// Observation carrying fixed-point scores (raw words of a [`QFormat`]).
pub type ObservationFixed = decoder::Observation<i64>;
/// Decoded path with an `f64` metric.
pub type PathF64 = decoder::DecodedPath<f64>;
/// Decoded path with a fixed-point metric.
pub type PathFixed = decoder::DecodedPath<i64>;
/// Streaming decoder running on the deployment arithmetic.
pub type FixedWindowDecoder = decoder::WindowedDecoder<QFormat>;
/// Streaming decoder running on `f64`.
pub type FloatWindowDecoder = decoder::WindowedDecoder<scalar::FloatArith<f64>>;
