//! End-to-end verification runs driven by an [`ExperimentConfig`].
//!
//! Every run returns a [`Report`] whose records store squared quantities;
//! cases are evaluated on the rayon pool and merged in case order.

mod config;
mod fit;
mod geometry;
mod plot;
mod projector;
mod report;
mod residual;
mod sampling;
mod weyl;

pub use config::{
    EigenSpec, ExperimentConfig, FitSpec, GeometrySpec, GridSpec, IntervalSpec, KChoice,
    ProjectorSpec, ResidualSpec, SamplingSpec, SequenceKind, Tolerances, WeylSpec,
};
pub use fit::{fit_exponent, fit_power_law, FitOutcome, PowerLawFit};
pub use geometry::{correction_instance, validate_geometry, GeometryArtifacts};
pub use plot::render_svg;
pub use projector::{dense_projector_min_eigenvalue, interval_for, verify_projector};
pub use report::{
    CaseRecord, CensusSummary, ChainRecord, FitDiagnostics, KInfo, Report, Summary, Verdict,
    NORM_CONVENTION, RATIO_RANGE_SLACK,
};
pub use residual::verify_residual_form;
pub use sampling::{census_summary, resolve_k, sampling_ratio, unit_scale, verify_thm1};
pub use weyl::verify_weyl;
