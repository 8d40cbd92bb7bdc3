//! Synthetic anomaly corpora for self-supervised anomaly segmentation.
//!
//! The crate generates polygon and rectangular anomaly masks, fills them by
//! interpolating towards a donor image, corrupts held-out volumes inside random
//! spheres, slices volumes into 2.5D stacks, fuses per-axis predictions and
//! scores predictions with pixel- and sample-level average precision.
//!
//! All voxel computations are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for the common cases.

pub mod blend;
pub mod corrupt;
pub mod error;
pub mod forge;
pub mod io;
pub mod metrics;
pub mod planes;
pub mod region;
pub mod rng;
pub mod scalar;
pub mod volume;

pub use blend::{interpolate_patch, make_training_sample, AnomalyKind, AnomalyRecipe, BlendMode, BlendSpec, TrainingSample};
pub use corrupt::{apply as apply_corruption, make_test_set, CorruptionKind, CorruptionParams, TestCase};
pub use error::{Error, Result};
pub use io::{read_volume, split_manifest, write_corpus, write_volume, Manifest, VolumeFormat};
pub use metrics::{average_precision, pixel_ap, sample_ap, ApResult, Reducer, ScoredSet};
pub use planes::{extract_stack, fuse_predictions, iterate_stacks, SliceStack, ViewAxis};
pub use forge::{generate_mask, rasterize, sample_polygon, smooth_curve, ClosedCurve, Modality, PolygonSpec, Smoothing};
pub use region::{sample_sphere, sphere_indicator, SphereRegion};
pub use rng::RngStream;
pub use scalar::Scalar;
pub use volume::{normalize, AnomalyMask, Volume};

pub type Volume32 = Volume<f32>;
pub type Volume64 = Volume<f64>;
pub type Mask32 = AnomalyMask<f32>;
pub type Mask64 = AnomalyMask<f64>;
pub type Curve32 = ClosedCurve<f32>;
pub type Curve64 = ClosedCurve<f64>;
