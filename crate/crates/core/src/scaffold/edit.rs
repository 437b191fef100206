//! Pure editing operations. Each returns a new scaffold that satisfies every
//! invariant, or an error with the input left untouched.

use nalgebra::{Rotation2, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{check_slice, interpolate_slices, resample_ring, templates, HandleKind, Scaffold};
use crate::error::{Error, Result};
use crate::geometry::{polygon_area_centroid, Pose, SlicePlane, Vec2, Vec3};

/// Similarity applied to one slice: a world-space translation of its center,
/// a rotation of its contours about the plane normal (radians) and a uniform
/// scale of its contours about the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceTransform {
    pub translation: Vec3,
    pub rotation: f64,
    pub scale: f64,
}

impl Default for SliceTransform {
    fn default() -> Self {
        Self {
            translation: Vec3::zeros(),
            rotation: 0.0,
            scale: 1.0,
        }
    }
}

/// Handle patterns, placed about the slice center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum Pattern {
    /// `sides` handles on a circle of `radius`, the first on +X.
    RegularPolygon { sides: usize, radius: f64 },
    /// Axis-aligned rectangle keeping the ring's handle count (at least 4).
    Rectangle { width: f64, height: f64 },
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
    }
}

fn finish(s: Scaffold) -> Result<Scaffold> {
    s.validate()?;
    Ok(s)
}

fn missing_hole(slice: usize) -> Error {
    Error::InvalidOperation(format!("slice {slice} has no hole"))
}

/// Reverses slice order; every slice keeps its geometry.
pub fn reverse_sweep(scaffold: &Scaffold) -> Scaffold {
    let mut out = scaffold.clone();
    out.slices.reverse();
    out
}

pub fn transform_slice(scaffold: &Scaffold, index: usize, delta: &SliceTransform) -> Result<Scaffold> {
    scaffold.slice(index)?;
    positive("scale", delta.scale)?;
    if !delta.rotation.is_finite() || delta.translation.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite slice transform".into()));
    }
    let mut out = scaffold.clone();
    let s = &mut out.slices[index];
    s.plane.pose.position += delta.translation;
    if delta.rotation != 0.0 || delta.scale != 1.0 {
        let m = Rotation2::new(delta.rotation).into_inner() * delta.scale;
        for p in s.external.iter_mut().chain(s.hole.iter_mut().flatten()) {
            *p = m * *p;
        }
    }
    finish(out)
}

/// Similarity transform of the whole scaffold about the centroid of its
/// slice centers: scale by `scale`, rotate by `delta.orientation`, then
/// translate by `delta.position`.
pub fn transform_scaffold(scaffold: &Scaffold, delta: &Pose, scale: f64) -> Result<Scaffold> {
    positive("scale", scale)?;
    let mut out = scaffold.clone();
    if *delta == Pose::identity() && scale == 1.0 {
        return Ok(out);
    }
    let c = axis_centroid(scaffold);
    let r = delta.orientation;
    for s in &mut out.slices {
        let o = s.plane.origin();
        s.plane.pose = Pose::new(
            c + delta.position + r * ((o - c) * scale),
            r * s.plane.pose.orientation,
        );
        if scale != 1.0 {
            for p in s.external.iter_mut().chain(s.hole.iter_mut().flatten()) {
                *p *= scale;
            }
        }
    }
    finish(out)
}

fn axis_centroid(s: &Scaffold) -> Vec3 {
    s.slices.iter().map(|s| s.center()).sum::<Vec3>() / s.slices.len() as f64
}

/// Moves slice centers towards or away from their centroid by `factor`,
/// leaving contours unscaled.
pub fn set_slice_spacing_scale(scaffold: &Scaffold, factor: f64) -> Result<Scaffold> {
    positive("spacing factor", factor)?;
    let mut out = scaffold.clone();
    if factor == 1.0 {
        return Ok(out);
    }
    let c = axis_centroid(scaffold);
    for s in &mut out.slices {
        s.plane.pose.position = c + (s.plane.origin() - c) * factor;
    }
    finish(out)
}

/// Inserts a slice at fractional slice parameter `at`, which must fall
/// strictly between two existing slices. The new slice lands at index
/// `floor(at) + 1`.
pub fn insert_slice(scaffold: &Scaffold, at: f64) -> Result<Scaffold> {
    let n = scaffold.slices.len();
    let i = at.floor();
    if !(at > 0.0 && at < (n - 1) as f64) || at == i {
        return Err(Error::InvalidArgument(format!(
            "insertion parameter {at} is not strictly between slices of a {n}-slice scaffold"
        )));
    }
    let i = i as usize;
    let s = interpolate_slices(&scaffold.slices[i], &scaffold.slices[i + 1], at - i as f64, scaffold.tension);
    let mut out = scaffold.clone();
    out.slices.insert(i + 1, s);
    finish(out)
}

pub fn delete_slice(scaffold: &Scaffold, index: usize) -> Result<Scaffold> {
    scaffold.slice(index)?;
    if scaffold.slices.len() <= 2 {
        return Err(Error::InvalidOperation("a scaffold must keep at least 2 slices".into()));
    }
    let mut out = scaffold.clone();
    out.slices.remove(index);
    finish(out)
}

/// Drags one handle within its slice plane.
pub fn move_handle(
    scaffold: &Scaffold,
    slice: usize,
    kind: HandleKind,
    handle: usize,
    position: Vec2,
) -> Result<Scaffold> {
    scaffold.slice(slice)?;
    let mut out = scaffold.clone();
    let s = &mut out.slices[slice];
    let ring = s.ring_mut(kind).ok_or_else(|| missing_hole(slice))?;
    let len = ring.len();
    *ring.get_mut(handle).ok_or(Error::index("handle", handle, len))? = position;
    check_slice(s, scaffold.tension, slice)?;
    finish(out)
}

/// Replaces a handle ring with a pattern centered on the slice center.
pub fn apply_pattern(scaffold: &Scaffold, slice: usize, kind: HandleKind, pattern: &Pattern) -> Result<Scaffold> {
    let current = scaffold.slice(slice)?.ring(kind).ok_or_else(|| missing_hole(slice))?;
    let ring = match *pattern {
        Pattern::RegularPolygon { sides, radius } => {
            if sides < 3 {
                return Err(Error::InvalidArgument(format!("polygon needs 3 sides, got {sides}")));
            }
            positive("radius", radius)?;
            templates::ellipse(sides, radius, radius)
        }
        Pattern::Rectangle { width, height } => {
            positive("width", width)?;
            positive("height", height)?;
            templates::rectangle(current.len().max(4), 0.5 * width, 0.5 * height)
        }
    };
    let mut out = scaffold.clone();
    *out.slices[slice].ring_mut(kind).unwrap() = ring;
    check_slice(&out.slices[slice], scaffold.tension, slice)?;
    finish(out)
}

/// Pastes the handle arrangement of one slice onto another, in plane
/// coordinates. Copying a hole onto a slice without one creates it there.
pub fn copy_handles(scaffold: &Scaffold, from: usize, to: usize, kind: HandleKind) -> Result<Scaffold> {
    let ring = scaffold
        .slice(from)?
        .ring(kind)
        .ok_or_else(|| missing_hole(from))?
        .clone();
    scaffold.slice(to)?;
    let mut out = scaffold.clone();
    let t = &mut out.slices[to];
    match kind {
        HandleKind::External => t.external = ring,
        HandleKind::Hole => t.hole = Some(ring),
    }
    check_slice(t, scaffold.tension, to)?;
    finish(out)
}

/// Adds a hole ring to each listed slice: the external ring resampled to
/// `n_handles` and scaled by `fraction` about its area centroid.
pub fn add_hole(scaffold: &Scaffold, slices: &[usize], n_handles: usize, fraction: f64) -> Result<Scaffold> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("hole fraction {fraction} outside (0, 1)")));
    }
    if n_handles < 3 {
        return Err(Error::InvalidArgument(format!("a hole needs 3 handles, got {n_handles}")));
    }
    let mut out = scaffold.clone();
    for &i in slices {
        scaffold.slice(i)?;
        let s = &mut out.slices[i];
        if s.hole.is_some() {
            return Err(Error::InvalidOperation(format!("slice {i} already has a hole")));
        }
        let c = polygon_area_centroid(&s.external);
        let ring = resample_ring(&s.external, n_handles, scaffold.tension);
        s.hole = Some(ring.iter().map(|p| c + (p - c) * fraction).collect());
        s.hole_scale = 1.0;
        check_slice(s, scaffold.tension, i)?;
    }
    finish(out)
}

/// Multiplies the hole scale of one slice by `factor`.
pub fn scale_hole(scaffold: &Scaffold, slice: usize, factor: f64) -> Result<Scaffold> {
    positive("hole scale factor", factor)?;
    if scaffold.slice(slice)?.hole.is_none() {
        return Err(missing_hole(slice));
    }
    let mut out = scaffold.clone();
    out.slices[slice].hole_scale *= factor;
    check_slice(&out.slices[slice], scaffold.tension, slice)?;
    finish(out)
}

/// Places slice centers on a polyline drawn in `plane`, one point per slice.
/// Each center keeps its height above the plane. Normals are re-aimed along
/// the local axis tangent, the average of the adjacent segment directions,
/// keeping the side of the previous normal.
pub fn set_sweep_axis_2d(scaffold: &Scaffold, plane: &SlicePlane, polyline: &[Vec2]) -> Result<Scaffold> {
    let n = scaffold.slices.len();
    if polyline.len() != n {
        return Err(Error::InvalidArgument(format!(
            "polyline has {} points for {n} slices",
            polyline.len()
        )));
    }
    if polyline.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidArgument("non-finite polyline point".into()));
    }
    let centers: Vec<Vec3> = scaffold
        .slices
        .iter()
        .zip(polyline)
        .map(|(s, q)| {
            let (_, h) = plane.to_plane(&s.center());
            plane.pose.transform_point(&Vec3::new(q.x, q.y, h))
        })
        .collect();
    let dir = |a: usize, b: usize| (centers[b] - centers[a]).try_normalize(1e-15);
    let mut out = scaffold.clone();
    for (i, s) in out.slices.iter_mut().enumerate() {
        let prev = (i > 0).then(|| dir(i - 1, i)).flatten();
        let next = (i + 1 < n).then(|| dir(i, i + 1)).flatten();
        let tangent = match (prev, next) {
            (Some(a), Some(b)) => (a + b).try_normalize(1e-15),
            (a, b) => a.or(b),
        };
        let old_n = s.normal();
        let orientation = match tangent {
            Some(t) => {
                let t = if t.dot(&old_n) < 0.0 { -t } else { t };
                match UnitQuaternion::rotation_between(&old_n, &t) {
                    Some(r) if r.angle() > 0.0 => r * s.plane.pose.orientation,
                    _ => s.plane.pose.orientation,
                }
            }
            None => s.plane.pose.orientation,
        };
        s.plane.pose = Pose::new(centers[i], orientation);
    }
    finish(out)
}
