//! Equidistributed sequences, the sampling mask `W_{δ,Z}`, and the
//! geometric constructions attached to dominant sites.

mod mask;
mod proof;
mod sequence;

pub use mask::{rasterize_mask, Mask};
pub use proof::{
    annulus_radius, ceil_sqrt, check_annulus_containment, check_observation_box, geometric_q,
    near_neighbor, observation_box_side, AxisBox, ProofGeometry, Variant,
};
pub use sequence::{
    make_periodic_sequence, make_perturbed_sequence, validate_sequence, EquidistributedSequence,
    IndexWindow, SequenceDoc, Validation, CONTAINMENT_TOL, PERTURB_MARGIN,
};
