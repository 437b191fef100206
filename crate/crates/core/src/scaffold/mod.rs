//! Point-cloud scaffolds: ordered planar slices swept along an axis.

mod edit;
mod insert;
mod shrink;

pub use edit::{
    add_hole, apply_pattern, copy_handles, delete_slice, insert_slice, move_handle,
    reverse_sweep, scale_hole, set_slice_spacing_scale, set_sweep_axis_2d, transform_scaffold,
    transform_slice, Pattern, SliceTransform,
};
pub use insert::{insert_scaffold_obb, insert_scaffold_pov, permute_sweep_axis, Primitive};
pub use shrink::{assign_slabs, shrink_wrap, ShrinkWrap};

use serde::{Deserialize, Serialize};

use crate::config::TOLERANCES;
use crate::error::{Error, Result};
use crate::geometry::{
    lerp2, lerp3, polygon_area_centroid, signed_distance_to_polygon, ClosedSpline, SlicePlane,
    Vec2, Vec3,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<[u8; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            colors: None,
            name: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec3> {
        (!self.points.is_empty())
            .then(|| self.points.iter().sum::<Vec3>() / self.points.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleKind {
    External,
    Hole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Handle {
    pub position: Vec2,
    pub kind: HandleKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub plane: SlicePlane,
    pub external: Vec<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole: Option<Vec<Vec2>>,
    #[serde(default = "one")]
    pub hole_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Slice {
    pub fn new(plane: SlicePlane, external: Vec<Vec2>) -> Self {
        Self {
            plane,
            external,
            hole: None,
            hole_scale: 1.0,
        }
    }

    pub fn center(&self) -> Vec3 {
        self.plane.origin()
    }

    pub fn normal(&self) -> Vec3 {
        self.plane.normal()
    }

    pub fn ring(&self, kind: HandleKind) -> Option<&Vec<Vec2>> {
        match kind {
            HandleKind::External => Some(&self.external),
            HandleKind::Hole => self.hole.as_ref(),
        }
    }

    pub(crate) fn ring_mut(&mut self, kind: HandleKind) -> Option<&mut Vec<Vec2>> {
        match kind {
            HandleKind::External => Some(&mut self.external),
            HandleKind::Hole => self.hole.as_mut(),
        }
    }

    pub fn handles(&self) -> impl Iterator<Item = Handle> + '_ {
        let ext = self.external.iter().map(|p| Handle {
            position: *p,
            kind: HandleKind::External,
        });
        let hole = self.hole.iter().flatten().map(|p| Handle {
            position: *p,
            kind: HandleKind::Hole,
        });
        ext.chain(hole)
    }

    /// Hole handles with `hole_scale` applied about their centroid.
    pub fn effective_hole(&self) -> Option<Vec<Vec2>> {
        let hole = self.hole.as_ref()?;
        if self.hole_scale == 1.0 {
            return Some(hole.clone());
        }
        let c = polygon_area_centroid(hole);
        Some(hole.iter().map(|p| c + (p - c) * self.hole_scale).collect())
    }

    pub fn external_spline(&self, tension: f64) -> ClosedSpline {
        ClosedSpline {
            control_points: self.external.clone(),
            tension,
        }
    }

    pub fn hole_spline(&self, tension: f64) -> Option<ClosedSpline> {
        self.effective_hole().map(|control_points| ClosedSpline {
            control_points,
            tension,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ScaffoldOrigin {
    Obb {
        primitive: Primitive,
        n_handles: usize,
        axis_index: usize,
    },
    Pov {
        primitive: Primitive,
        n_handles: usize,
        view_direction: Vec3,
    },
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaffold {
    pub name: String,
    pub slices: Vec<Slice>,
    pub tension: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_cloud: Option<String>,
    pub origin: ScaffoldOrigin,
}

impl Scaffold {
    pub fn new(name: impl Into<String>, slices: Vec<Slice>, tension: f64) -> Result<Self> {
        let s = Self {
            name: name.into(),
            slices,
            tension,
            source_cloud: None,
            origin: ScaffoldOrigin::Manual,
        };
        s.validate()?;
        Ok(s)
    }

    /// Slice centers in order.
    pub fn sweep_axis(&self) -> Vec<Vec3> {
        self.slices.iter().map(Slice::center).collect()
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub(crate) fn slice(&self, index: usize) -> Result<&Slice> {
        self.slices
            .get(index)
            .ok_or(Error::index("slice", index, self.slices.len()))
    }

    /// Checks every scaffold and slice invariant.
    pub fn validate(&self) -> Result<()> {
        if self.slices.len() < 2 {
            return Err(Error::InvalidOperation(format!(
                "a scaffold needs at least 2 slices, has {}",
                self.slices.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.tension) {
            return Err(Error::InvalidSpline(format!("tension {} outside [0, 1]", self.tension)));
        }
        for (i, s) in self.slices.iter().enumerate() {
            check_slice(s, self.tension, i)?;
        }
        for (i, w) in self.slices.windows(2).enumerate() {
            if planes_coincide(&w[0].plane, &w[1].plane) {
                return Err(Error::InvalidOperation(format!(
                    "slices {i} and {} lie on the same plane",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Maximal runs of consecutive slices carrying holes, as inclusive ranges
    /// of length at least 2. An isolated hole yields no run.
    pub fn hole_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start: Option<usize> = None;
        for (i, s) in self.slices.iter().enumerate() {
            match (s.hole.is_some(), start) {
                (true, None) => start = Some(i),
                (false, Some(a)) => {
                    if i - 1 > a {
                        runs.push((a, i - 1));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(a) = start {
            if self.slices.len() - 1 > a {
                runs.push((a, self.slices.len() - 1));
            }
        }
        runs
    }

    /// Cumulative arc length of the sweep axis at each slice.
    pub fn arc_lengths(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for w in self.slices.windows(2) {
            acc += (w[1].center() - w[0].center()).norm();
            out.push(acc);
        }
        out
    }
}

fn planes_coincide(a: &SlicePlane, b: &SlicePlane) -> bool {
    let na = a.normal();
    let nb = b.normal();
    let parallel = na.cross(&nb).norm() < 1e-12;
    let offset = na.dot(&(b.origin() - a.origin())).abs();
    parallel && offset < 1e-12
}

/// Validates handle counts, finiteness and hole containment of one slice.
pub(crate) fn check_slice(s: &Slice, tension: f64, index: usize) -> Result<()> {
    if s.external.len() < 3 {
        return Err(Error::InvalidSpline(format!(
            "slice {index}: external ring has {} handles, need 3",
            s.external.len()
        )));
    }
    if let Some(h) = &s.hole {
        if h.len() < 3 {
            return Err(Error::InvalidSpline(format!(
                "slice {index}: hole ring has {} handles, need 3",
                h.len()
            )));
        }
    }
    if !(s.hole_scale > 0.0 && s.hole_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "slice {index}: hole scale must be positive"
        )));
    }
    if s.handles().any(|h| !h.position.x.is_finite() || !h.position.y.is_finite()) {
        return Err(Error::InvalidArgument(format!("slice {index}: non-finite handle")));
    }
    if !hole_inside(s, tension) {
        return Err(Error::ContainmentViolation { slice: index });
    }
    Ok(())
}

/// True when the slice has no hole or the sampled hole contour lies strictly
/// inside the sampled external contour.
pub fn hole_inside(s: &Slice, tension: f64) -> bool {
    let Some(hole) = s.hole_spline(tension) else {
        return true;
    };
    let k = TOLERANCES.check_samples;
    let outer = s.external_spline(tension).sample(k);
    let inner = hole.sample(k);
    rings_nested(&outer, &inner)
}

pub(crate) fn rings_nested(outer: &[Vec2], inner: &[Vec2]) -> bool {
    inner
        .iter()
        .all(|p| signed_distance_to_polygon(p, outer) > TOLERANCES.hole_margin)
        && outer
            .iter()
            .all(|p| signed_distance_to_polygon(p, inner) < 0.0)
}

/// Resamples a closed ring to `count` handles at uniform spline parameter.
pub fn resample_ring(ring: &[Vec2], count: usize, tension: f64) -> Vec<Vec2> {
    if ring.len() == count {
        return ring.to_vec();
    }
    ClosedSpline {
        control_points: ring.to_vec(),
        tension,
    }
    .sample_count(count)
}

/// Slice at fraction `f` between `a` and `b`. Rings with different handle
/// counts are resampled to the larger count; a hole is kept only when both
/// ends have one.
pub fn interpolate_slices(a: &Slice, b: &Slice, f: f64, tension: f64) -> Slice {
    let origin = lerp3(&a.center(), &b.center(), f);
    let qa = a.plane.pose.orientation;
    let qb = b.plane.pose.orientation;
    let orientation = if qa == qb {
        qa
    } else {
        qa.try_slerp(&qb, f, 1e-12).unwrap_or(if f < 0.5 { qa } else { qb })
    };
    let lerp_rings = |ra: &[Vec2], rb: &[Vec2]| {
        let n = ra.len().max(rb.len());
        let ra = resample_ring(ra, n, tension);
        let rb = resample_ring(rb, n, tension);
        ra.iter().zip(&rb).map(|(p, q)| lerp2(p, q, f)).collect::<Vec<_>>()
    };
    let external = lerp_rings(&a.external, &b.external);
    let (hole, hole_scale) = match (&a.hole, &b.hole) {
        (Some(ha), Some(hb)) => (
            Some(lerp_rings(ha, hb)),
            a.hole_scale + (b.hole_scale - a.hole_scale) * f,
        ),
        _ => (None, 1.0),
    };
    Slice {
        plane: SlicePlane::new(crate::geometry::Pose::new(origin, orientation)),
        external,
        hole,
        hole_scale,
    }
}

/// Resamples a scaffold to `target_slices` stations evenly spaced along the
/// sweep arc length, each ring with `target_handles` handles. Hole scales are
/// baked into the hole rings.
pub fn resample_scaffold(scaffold: &Scaffold, target_slices: usize, target_handles: usize) -> Result<Scaffold> {
    if target_slices < 2 || target_handles < 3 {
        return Err(Error::InvalidArgument(format!(
            "resampling needs at least 2 slices and 3 handles (got {target_slices}, {target_handles})"
        )));
    }
    if scaffold.slices.len() < 2 {
        return Err(Error::InvalidOperation("scaffold has fewer than 2 slices".into()));
    }
    let t = scaffold.tension;
    let arc = scaffold.arc_lengths();
    let total = *arc.last().unwrap();
    let n = scaffold.slices.len();
    let mut slices = Vec::with_capacity(target_slices);
    for j in 0..target_slices {
        let frac = j as f64 / (target_slices - 1) as f64;
        // parameter along slice indices
        let param = if total > 0.0 {
            let s = frac * total;
            let i = arc.partition_point(|&a| a <= s).clamp(1, n - 1) - 1;
            let seg = arc[i + 1] - arc[i];
            i as f64 + if seg > 0.0 { ((s - arc[i]) / seg).clamp(0.0, 1.0) } else { 0.0 }
        } else {
            frac * (n - 1) as f64
        };
        let i = (param.floor() as usize).min(n - 2);
        let f = param - i as f64;
        let base = |s: &Slice| {
            let mut s = s.clone();
            s.hole = s.effective_hole();
            s.hole_scale = 1.0;
            s
        };
        let a = base(&scaffold.slices[i]);
        let b = base(&scaffold.slices[i + 1]);
        let mut s = if f <= 0.0 {
            a
        } else if f >= 1.0 {
            b
        } else {
            interpolate_slices(&a, &b, f, t)
        };
        s.external = resample_ring(&s.external, target_handles, t);
        s.hole = s.hole.map(|h| resample_ring(&h, target_handles, t));
        slices.push(s);
    }
    Ok(Scaffold {
        name: scaffold.name.clone(),
        slices,
        tension: t,
        source_cloud: scaffold.source_cloud.clone(),
        origin: ScaffoldOrigin::Manual,
    })
}

/// A multi-part object: one scaffold per part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartAssembly {
    pub name: String,
    pub parts: Vec<Scaffold>,
}

impl PartAssembly {
    pub fn new(name: impl Into<String>, parts: Vec<Scaffold>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyInput("assembly has no parts"));
        }
        Ok(Self {
            name: name.into(),
            parts,
        })
    }

    pub fn single(part: Scaffold) -> Self {
        Self {
            name: part.name.clone(),
            parts: vec![part],
        }
    }
}

/// Closed ring templates used by insertion and patterns.
pub mod templates {
    use super::Vec2;
    use std::f64::consts::TAU;

    /// `n` handles on an axis-aligned ellipse, the first on +X.
    pub fn ellipse(n: usize, a: f64, b: f64) -> Vec<Vec2> {
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                Vec2::new(a * t.cos(), b * t.sin())
            })
            .collect()
    }

    /// `n` counter-clockwise handles on an axis-aligned rectangle with the
    /// given half sizes. With `n >= 4` the corners are always handles and the
    /// rest are spread over the edges in proportion to their length.
    pub fn rectangle(n: usize, hu: f64, hv: f64) -> Vec<Vec2> {
        let corners = [
            Vec2::new(hu, hv),
            Vec2::new(-hu, hv),
            Vec2::new(-hu, -hv),
            Vec2::new(hu, -hv),
        ];
        if n < 4 {
            let perim = 4.0 * (hu + hv);
            return (0..n)
                .map(|k| point_on_perimeter(&corners, perim * k as f64 / n as f64))
                .collect();
        }
        let lens = [2.0 * hu, 2.0 * hv, 2.0 * hu, 2.0 * hv];
        let total: f64 = lens.iter().sum();
        let extra = n - 4;
        let mut counts = [0usize; 4];
        let mut rema: Vec<(f64, usize)> = Vec::new();
        for e in 0..4 {
            let share = extra as f64 * lens[e] / total;
            counts[e] = share.floor() as usize;
            rema.push((share - share.floor(), e));
        }
        let assigned: usize = counts.iter().sum();
        rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, e) in rema.iter().take(extra - assigned) {
            counts[e] += 1;
        }
        let mut out = Vec::with_capacity(n);
        for e in 0..4 {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            out.push(a);
            for j in 1..=counts[e] {
                let t = j as f64 / (counts[e] + 1) as f64;
                out.push(a + (b - a) * t);
            }
        }
        out
    }

    fn point_on_perimeter(corners: &[Vec2; 4], mut s: f64) -> Vec2 {
        for e in 0..4 {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            let len = (b - a).norm();
            if s <= len || e == 3 {
                return a + (b - a) * (s / len).min(1.0);
            }
            s -= len;
        }
        corners[0]
    }
}
