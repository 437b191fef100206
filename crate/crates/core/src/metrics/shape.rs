use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::mass::{mass_properties, MassProperties};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::meshing::{sample_surface, TriMesh};

/// Matrix norm used for the inertia tensor error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorNorm {
    #[default]
    Frobenius,
    Spectral,
}

pub fn tensor_norm(m: &Mat3, norm: TensorNorm) -> f64 {
    match norm {
        TensorNorm::Frobenius => m.norm(),
        TensorNorm::Spectral => {
            let sym = (m + m.transpose()) * 0.5;
            SymmetricEigen::new(sym).eigenvalues.abs().max()
        }
    }
}

/// Directed and symmetric Hausdorff distances between two point sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffDistances {
    pub hd: f64,
    pub mean_hd: f64,
    /// Largest distance from a point of the first set to the second set.
    pub max_ab: f64,
    pub max_ba: f64,
    /// Mean distance from the points of the first set to the second set.
    pub mean_ab: f64,
    pub mean_ba: f64,
}

fn directed(from: &[Vec3], to: &[Vec3]) -> (f64, f64) {
    let pts: Vec<[f64; 3]> = to.iter().map(|p| [p.x, p.y, p.z]).collect();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&pts)
        .expect("non-empty finite point set builds a tree");
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for p in from {
        let d = tree
            .query(&[p.x, p.y, p.z])
            .nearest_one::<SquaredEuclidean<f64>>()
            .execute()
            .distance
            .sqrt();
        max = max.max(d);
        sum += d;
    }
    (max, sum / from.len() as f64)
}

/// Hausdorff distance (largest of the two directed worst cases) and mean
/// Hausdorff distance (largest of the two directed averages).
pub fn hausdorff(a: &[Vec3], b: &[Vec3]) -> Result<HausdorffDistances> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("Hausdorff distance needs two non-empty point sets"));
    }
    if a.iter().chain(b).any(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(Error::InvalidArgument("non-finite point in Hausdorff input".into()));
    }
    let (max_ab, mean_ab) = directed(a, b);
    let (max_ba, mean_ba) = directed(b, a);
    Ok(HausdorffDistances {
        hd: max_ab.max(max_ba),
        mean_hd: mean_ab.max(mean_ba),
        max_ab,
        max_ba,
        mean_ab,
        mean_ba,
    })
}

/// Modeling efficiency `(1 - r_mu_h) / duration`, in 1/s.
pub fn efficiency(r_mu_h: f64, duration: f64) -> Result<f64> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("duration {duration} must be positive")));
    }
    Ok((1.0 - r_mu_h) / duration)
}

/// Every shape error between an ideal mesh and a subject mesh. Signed errors
/// are `ideal - subject`; relative errors are normalized by the ideal mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeErrorReport {
    pub com_e: f64,
    pub s_e: f64,
    pub v_e: f64,
    pub it_e: f64,
    pub it_e_spectral: f64,
    pub hd: f64,
    pub mean_hd: f64,
    pub r_com_e: f64,
    pub r_s_e: f64,
    pub r_v_e: f64,
    pub r_it_e: f64,
    pub r_mu_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    pub it_norm: TensorNorm,
    pub diag_bb: f64,
    pub lambda_max: f64,
    pub sample_count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
}

/// Smallest sample count accepted for Hausdorff metrics.
pub const MIN_SHAPE_SAMPLES: usize = 1000;

/// Compares two closed meshes. Both surfaces are sampled with the same seed,
/// so identical meshes give exactly zero distance.
pub fn shape_errors(
    ideal: &TriMesh,
    subject: &TriMesh,
    sample_count: usize,
    seed: u64,
    duration: Option<f64>,
) -> Result<ShapeErrorReport> {
    if sample_count < MIN_SHAPE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SHAPE_SAMPLES} surface samples, got {sample_count}"
        )));
    }
    let a = mass_properties(ideal)?;
    let b = mass_properties(subject)?;
    let sa = sample_surface(ideal, sample_count, seed)?;
    let sb = sample_surface(subject, sample_count, seed)?;
    let h = hausdorff(&sa.points, &sb.points)?;
    report_from_parts(&a, &b, &h, sample_count, seed, duration)
}

/// Assembles a report from precomputed properties and distances.
pub fn report_from_parts(
    ideal: &MassProperties,
    subject: &MassProperties,
    h: &HausdorffDistances,
    sample_count: usize,
    seed: u64,
    duration: Option<f64>,
) -> Result<ShapeErrorReport> {
    if !(ideal.diag_bb > 0.0) {
        return Err(Error::InvalidArgument("ideal mesh has a zero bounding-box diagonal".into()));
    }
    let com_e = (ideal.com - subject.com).norm();
    let s_e = ideal.surface_area - subject.surface_area;
    let v_e = ideal.volume - subject.volume;
    let diff = ideal.inertia - subject.inertia;
    let it_e = tensor_norm(&diff, TensorNorm::Frobenius);
    let r_mu_h = h.mean_hd / ideal.diag_bb;
    let efficiency = duration.map(|d| efficiency(r_mu_h, d)).transpose()?;
    Ok(ShapeErrorReport {
        com_e,
        s_e,
        v_e,
        it_e,
        it_e_spectral: tensor_norm(&diff, TensorNorm::Spectral),
        hd: h.hd,
        mean_hd: h.mean_hd,
        r_com_e: com_e / ideal.diag_bb,
        r_s_e: s_e.abs() / ideal.surface_area,
        r_v_e: v_e.abs() / ideal.volume,
        r_it_e: it_e / ideal.lambda_max,
        r_mu_h,
        duration,
        efficiency,
        it_norm: TensorNorm::Frobenius,
        diag_bb: ideal.diag_bb,
        lambda_max: ideal.lambda_max,
        sample_count,
        seed,
        ideal_id: None,
        subject_id: None,
    })
}
