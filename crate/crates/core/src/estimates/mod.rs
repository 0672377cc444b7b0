//! Cutoff construction, theorem constants, pointwise gradient-estimate
//! verification on parabolic windows, and growth scans.

pub mod constants;
pub mod cutoff;
pub mod scan;
pub mod verify;

pub use constants::{theorem_constants, EstimateConstants};
pub use cutoff::{build_cutoff, CutoffFunction};
pub use scan::{liouville_scan, GrowthVerdict, ScanMode, ScanReport, GROWTH_THRESHOLD};
pub use verify::{
    gradient_estimate_verify_npc, gradient_estimate_verify_pos, summary_csv, EstimateReport, Theorem, Verdict, Window,
};
