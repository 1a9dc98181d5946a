//! Acoustic gait triage toolkit.
//!
//! Pipeline: load 16 kHz audio, gate out silence, compute a dB mel
//! spectrogram, collapse it to a per-frame energy signal, extract three
//! peak-structure features (average peak prominence, RMS residual,
//! average peak distance), and score each window with a small
//! tree/nearest-neighbour ensemble picked by stratified cross-validation.
//! The score drives a dataset filter that keeps windows with clear gait
//! structure and drops buried or cluttered ones.
//!
//! A deterministic synthetic scene generator ([`synth`]) stands in for
//! recorded audio so every stage is testable end to end.

pub mod audio_io;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod features;
pub mod peaks;
pub mod rng;
pub mod spectro;
pub mod synth;
pub mod triage;

pub use audio_io::{load_wav, AudioClip, GateConfig, GateSegment, CANONICAL_SAMPLE_RATE};
pub use classifier::{
    evaluate, load_model, predict, save_model, train, GaitLabel, LabeledExample, Metrics,
    TrainConfig, TriageModel,
};
pub use dataset::FeatureRow;
pub use error::{Error, Result};
pub use features::{extract_features, GaitFeatures};
pub use spectro::{energy_signal, melspectrogram_db, EnergySignal, MelSpectrogram, SpectroParams};
pub use synth::{synth_dataset, synth_scene, SceneSpec};
pub use triage::{triage_dataset, ClassLabel, ManifestEntry, TriageParams, TriageReport};
