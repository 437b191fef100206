//! Default tolerances and tuning constants, collected in one place.

use serde::{Deserialize, Serialize};

/// Default RNG seed; the `SCAFFOLD_SEED` environment variable overrides it.
pub const DEFAULT_SEED: u64 = 0x5CAF_F01D;

/// Reads `SCAFFOLD_SEED`, falling back to [`DEFAULT_SEED`].
pub fn seed_from_env() -> u64 {
    std::env::var("SCAFFOLD_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack allowed when checking that points lie inside a bounding box.
    pub containment: f64,
    /// Quaternion norm deviation accepted as unit.
    pub unit_quaternion: f64,
    /// Triangles with smaller area are treated as degenerate (m^2).
    pub degenerate_area: f64,
    /// Minimum separation between consecutive slices produced by insertion (m).
    pub min_slice_separation: f64,
    /// Relative eigenvalue gap below which principal axes are ambiguous.
    pub eigen_degeneracy: f64,
    /// Margin by which a hole must stay inside its external contour (m).
    pub hole_margin: f64,
    /// Depth below the first touch accepted as part of a finger contact patch (m).
    pub contact_depth: f64,
    /// Samples per spline segment used for containment checks.
    pub check_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            containment: 1e-9,
            unit_quaternion: 1e-9,
            degenerate_area: 1e-12,
            min_slice_separation: 1e-6,
            eigen_degeneracy: 1e-6,
            hole_margin: 1e-9,
            contact_depth: 1e-5,
            check_samples: 16,
        }
    }
}

pub const TOLERANCES: Tolerances = Tolerances {
    containment: 1e-9,
    unit_quaternion: 1e-9,
    degenerate_area: 1e-12,
    min_slice_separation: 1e-6,
    eigen_degeneracy: 1e-6,
    hole_margin: 1e-9,
    contact_depth: 1e-5,
    check_samples: 16,
};

/// Cardinal spline tension giving Catmull-Rom tangents.
pub const DEFAULT_TENSION: f64 = 0.5;
/// Surface samples per mesh for Hausdorff metrics.
pub const DEFAULT_HAUSDORFF_SAMPLES: usize = 50_000;
/// Friction cone edges per contact.
pub const DEFAULT_CONE_EDGES: usize = 8;
/// Contact points per touching finger patch.
pub const DEFAULT_PATCH_POINTS: usize = 4;
/// Sampled wrench-space directions for the support estimate.
pub const DEFAULT_DIRECTION_SAMPLES: usize = 1024;
/// Default HTTP port of the session service.
pub const DEFAULT_PORT: u16 = 7420;
