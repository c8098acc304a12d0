//! Synthetic subjects, the emulated camera rig, and paired dataset
//! generation.

mod build;
mod rig;
mod synth;

pub use build::{
    build_dataset, camera_id, entry_geometry, ground_truth_geometry, pose_id, subject_cameras,
    subject_id, subject_model, subject_pose, subject_split, validate_dataset, DatasetConfig,
    DatasetManifest, DatasetReport, EntryGeometry, ManifestEntry, Split, MANIFEST_FILE,
};
pub use rig::{camera_rig, rig_directions, RIG_ELEVATION_DEG};
pub use synth::{
    a_pose, joint, perturbed_a_pose, synth_subject, SyntheticSubject, JOINT_NAMES, PARENTS,
};
