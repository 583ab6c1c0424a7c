//! Preset-driven sweeps that regenerate the figure datasets, plus the
//! eigenvalue-profile and closed-form cross-checks.

mod presets;
mod profile;
mod spec;
mod sweep;
mod validate;

pub use presets::{preset_names, preset_source, Experiment, PresetFile, ProfileFile, ProfileSpec};
pub use profile::{eigen_profile, has_plateau, write_profile_csv, ProfilePoint};
pub use spec::{
    arithmetic_grid, FixedFile, FixedParams, GridFile, Metric, SnrConfig, SweepFile, SweepSpec,
    SweptVariable, DEFAULT_MAX_POINTS,
};
pub use sweep::{run_sweep, write_records_csv, EstimatorRegime, SweepPoint, SweepRecord};
pub use validate::{
    validate_closed_form, ClosedFormCheck, ClosedFormReport, CLOSED_FORM_TOLERANCE,
    MAX_VALIDATION_EPSILON,
};
