//! Assembly records on disk, normalization, categories, splits and the
//! synthetic assembly generator.

mod classify;
mod format;
mod normalize;
mod split;
mod synth;

pub use classify::{classify_trajectory, lateral_clearance, motion_totals, ClassifyThresholds, TrajectoryCategory};
pub use format::{list_records, AssemblyRecord, PartPoses, TrajectoryFile, MAX_PARTS, MIN_PARTS};
pub use normalize::{denormalize, normalization_for, normalize, Normalization};
pub use split::{split, Split, SplitSpec};
pub use synth::{attach_ground_truth, suite_kind, synth_generate, synth_geometry, synth_suite, SynthKind, SynthParams};
