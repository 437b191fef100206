//! Structural meshing of swept contours. Consecutive rings are joined
//! index-to-index by quad strips; ends are closed with centroid fans, or
//! annuli where a hole run reaches the end of the scaffold.

use super::{MeshLabel, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::{
    point_in_polygon, polygon_area_centroid, polygon_is_simple, polygon_signed_area, SlicePlane,
    Vec2, Vec3,
};
use crate::scaffold::{check_slice, interpolate_slices, rings_nested, PartAssembly, Scaffold};

/// Sampled contours of one slice, counter-clockwise in plane coordinates.
struct Rings {
    plane: SlicePlane,
    outer: Vec<Vec2>,
    hole: Option<Vec<Vec2>>,
}

impl Rings {
    fn world(&self, ring: &[Vec2]) -> Vec<Vec3> {
        ring.iter().map(|p| self.plane.to_world(p)).collect()
    }
}

/// Common ring resolution: the largest handle count times the sampling rate.
fn ring_resolution(s: &Scaffold, samples_per_segment: usize) -> usize {
    let handles = s
        .slices
        .iter()
        .flat_map(|sl| std::iter::once(sl.external.len()).chain(sl.hole.as_ref().map(Vec::len)))
        .max()
        .unwrap_or(3);
    handles * samples_per_segment
}

/// Reverses a ring in place but keeps sample 0 first, so index
/// correspondence with neighbouring rings survives.
fn make_ccw(mut ring: Vec<Vec2>) -> Vec<Vec2> {
    if polygon_signed_area(&ring) < 0.0 {
        ring[1..].reverse();
    }
    ring
}

fn sample_rings(s: &Scaffold, samples_per_segment: usize) -> Result<(usize, Vec<Rings>)> {
    if samples_per_segment == 0 {
        return Err(Error::InvalidArgument("samples_per_segment must be at least 1".into()));
    }
    if s.slices.len() < 2 {
        return Err(Error::InvalidOperation("a scaffold needs at least 2 slices".into()));
    }
    let m = ring_resolution(s, samples_per_segment);
    let mut out = Vec::with_capacity(s.slices.len());
    for (i, sl) in s.slices.iter().enumerate() {
        check_slice(sl, s.tension, i)?;
        let outer = sl.external_spline(s.tension).sample_count(m);
        if !polygon_is_simple(&outer) {
            return Err(Error::MeshingFailure {
                slice: i,
                reason: "external contour intersects itself".into(),
            });
        }
        if polygon_signed_area(&outer).abs() < 1e-300 {
            return Err(Error::MeshingFailure {
                slice: i,
                reason: "external contour has no area".into(),
            });
        }
        let hole = match sl.hole_spline(s.tension) {
            Some(h) => {
                let h = h.sample_count(m);
                if !polygon_is_simple(&h) {
                    return Err(Error::MeshingFailure {
                        slice: i,
                        reason: "hole contour intersects itself".into(),
                    });
                }
                Some(make_ccw(h))
            }
            None => None,
        };
        out.push(Rings {
            plane: sl.plane,
            outer: make_ccw(outer),
            hole,
        });
    }
    Ok((m, out))
}

#[derive(Default)]
struct Builder {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl Builder {
    fn ring(&mut self, pts: &[Vec3]) -> u32 {
        let off = self.vertices.len() as u32;
        self.vertices.extend_from_slice(pts);
        off
    }

    /// Vertex blocks for a sequence of rings; a ring identical to its
    /// predecessor reuses its block so the zero-length segment disappears.
    fn rings(&mut self, rings: &[Vec<Vec3>]) -> Vec<u32> {
        let mut blocks: Vec<u32> = Vec::with_capacity(rings.len());
        for (i, r) in rings.iter().enumerate() {
            let same = i > 0 && r.iter().zip(&rings[i - 1]).all(|(p, q)| (p - q).norm() <= 1e-12);
            let b = if same { blocks[i - 1] } else { self.ring(r) };
            blocks.push(b);
        }
        blocks
    }

    fn tube(&mut self, blocks: &[u32], m: u32) -> usize {
        let start = self.triangles.len();
        for w in blocks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                continue;
            }
            for k in 0..m {
                let k1 = (k + 1) % m;
                self.triangles.push([a + k, a + k1, b + k1]);
                self.triangles.push([a + k, b + k1, b + k]);
            }
        }
        start
    }

    /// Closes a ring. `start` caps face backwards relative to the tube that
    /// leaves the ring; end caps face forwards.
    fn cap(&mut self, block: u32, ring2: &[Vec2], plane: &SlicePlane, start: bool) {
        let tris: Vec<[u32; 3]> = match fan_center(ring2) {
            Some(c) => {
                let ci = self.ring(&[plane.to_world(&c)]);
                let m = ring2.len() as u32;
                (0..m).map(|k| [ci, block + k, block + (k + 1) % m]).collect()
            }
            None => ear_clip(ring2)
                .into_iter()
                .map(|t| t.map(|i| block + i as u32))
                .collect(),
        };
        self.triangles.extend(tris.into_iter().map(|mut t| {
            if start {
                t.swap(1, 2);
            }
            t
        }));
    }

    fn annulus(&mut self, outer: u32, hole: u32, m: u32, start: bool) {
        for k in 0..m {
            let k1 = (k + 1) % m;
            let (h0, h1, o0, o1) = (hole + k, hole + k1, outer + k, outer + k1);
            if start {
                self.triangles.push([h0, o1, o0]);
                self.triangles.push([h0, h1, o1]);
            } else {
                self.triangles.push([h0, o0, o1]);
                self.triangles.push([h0, o1, h1]);
            }
        }
    }

    fn flip_from(&mut self, from: usize) {
        for t in &mut self.triangles[from..] {
            t.swap(1, 2);
        }
    }

    fn finish(self, label: MeshLabel) -> TriMesh {
        let mut mesh = TriMesh {
            vertices: self.vertices,
            triangles: self.triangles,
            label,
        };
        if mesh.signed_volume() < 0.0 {
            mesh.flip();
        }
        mesh
    }
}

/// Area centroid when every fan triangle to it is positively oriented.
fn fan_center(ring: &[Vec2]) -> Option<Vec2> {
    let c = polygon_area_centroid(ring);
    let n = ring.len();
    let ok = (0..n).all(|k| {
        let a = ring[k] - c;
        let b = ring[(k + 1) % n] - c;
        a.x * b.y - a.y * b.x > 0.0
    });
    ok.then_some(c)
}

/// Ear clipping of a simple counter-clockwise ring; triangles keep the ring's
/// orientation.
fn ear_clip(ring: &[Vec2]) -> Vec<[usize; 3]> {
    let cross = |a: &Vec2, b: &Vec2, c: &Vec2| (b - a).perp(&(c - a));
    let mut idx: Vec<usize> = (0..ring.len()).collect();
    let mut out = Vec::with_capacity(ring.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&i| {
            let (p, c, q) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            let (a, b, d) = (&ring[p], &ring[c], &ring[q]);
            if cross(a, b, d) <= 0.0 {
                return false;
            }
            let tri = [*a, *b, *d];
            idx.iter()
                .filter(|&&j| j != p && j != c && j != q)
                .all(|&j| !point_in_polygon(&ring[j], &tri) && !on_corner(&ring[j], &tri))
        });
        // a simple ring always has an ear; fall back to the most convex
        // corner if rounding hides it
        let i = ear.unwrap_or_else(|| {
            (0..n)
                .max_by(|&i, &j| {
                    let f = |i: usize| cross(&ring[idx[(i + n - 1) % n]], &ring[idx[i]], &ring[idx[(i + 1) % n]]);
                    f(i).total_cmp(&f(j))
                })
                .unwrap()
        });
        out.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    out.push([idx[0], idx[1], idx[2]]);
    out
}

fn on_corner(p: &Vec2, tri: &[Vec2; 3]) -> bool {
    tri.iter().any(|c| c == p)
}

/// Checks that the hole stays inside the external contour at the run's
/// slices and at intermediate stations of every segment.
fn check_run_containment(s: &Scaffold, rings: &[Rings], a: usize, b: usize) -> Result<()> {
    for (i, r) in rings.iter().enumerate().take(b + 1).skip(a) {
        if !rings_nested(&r.outer, r.hole.as_ref().unwrap()) {
            return Err(Error::ContainmentViolation { slice: i });
        }
    }
    for i in a..b {
        let (r0, r1) = (&rings[i], &rings[i + 1]);
        let o0 = r0.world(&r0.outer);
        let o1 = r1.world(&r1.outer);
        let h0 = r0.world(r0.hole.as_ref().unwrap());
        let h1 = r1.world(r1.hole.as_ref().unwrap());
        for t in [0.25, 0.5, 0.75] {
            let plane = interpolate_slices(&s.slices[i], &s.slices[i + 1], t, s.tension).plane;
            let at = |p: &[Vec3], q: &[Vec3]| -> Vec<Vec2> {
                p.iter()
                    .zip(q)
                    .map(|(x, y)| plane.to_plane(&(x + (y - x) * t)).0)
                    .collect()
            };
            if !rings_nested(&at(&o0, &o1), &at(&h0, &h1)) {
                return Err(Error::ContainmentViolation { slice: i });
            }
        }
    }
    Ok(())
}

/// Outer swept surface over all slices, closed at both ends.
pub fn skin_mesh(scaffold: &Scaffold, samples_per_segment: usize) -> Result<TriMesh> {
    let (m, rings) = sample_rings(scaffold, samples_per_segment)?;
    let mut b = Builder::default();
    let world: Vec<Vec<Vec3>> = rings.iter().map(|r| r.world(&r.outer)).collect();
    let blocks = b.rings(&world);
    b.tube(&blocks, m as u32);
    let last = rings.len() - 1;
    b.cap(blocks[0], &rings[0].outer, &rings[0].plane, true);
    b.cap(blocks[last], &rings[last].outer, &rings[last].plane, false);
    Ok(b.finish(MeshLabel::Skin))
}

/// Closed hole solid of one run: tube plus caps where `cap_start`/`cap_end`.
fn hole_solid(b: &mut Builder, rings: &[Rings], a: usize, end: usize, m: u32, caps: (bool, bool)) -> (usize, Vec<u32>) {
    let world: Vec<Vec<Vec3>> = rings[a..=end]
        .iter()
        .map(|r| r.world(r.hole.as_ref().unwrap()))
        .collect();
    let blocks = b.rings(&world);
    let from = b.tube(&blocks, m);
    if caps.0 {
        b.cap(blocks[0], rings[a].hole.as_ref().unwrap(), &rings[a].plane, true);
    }
    if caps.1 {
        let r = &rings[end];
        b.cap(*blocks.last().unwrap(), r.hole.as_ref().unwrap(), &r.plane, false);
    }
    (from, blocks)
}

/// Negative volume of every maximal hole run, one closed tube per run.
/// Isolated holes contribute nothing.
pub fn hole_mesh(scaffold: &Scaffold, samples_per_segment: usize) -> Result<TriMesh> {
    let (m, rings) = sample_rings(scaffold, samples_per_segment)?;
    let mut out = TriMesh::empty(MeshLabel::Hole);
    for (a, end) in scaffold.hole_runs() {
        check_run_containment(scaffold, &rings, a, end)?;
        let mut b = Builder::default();
        hole_solid(&mut b, &rings, a, end, m as u32, (true, true));
        out.append(&b.finish(MeshLabel::Hole));
    }
    Ok(out)
}

/// Outer surface minus the hole runs, built from the sweep structure: the
/// skin, each hole tube turned inside out, and annuli where a run reaches an
/// end of the scaffold. Runs ending at an interior slice are closed there.
pub fn difference_mesh(scaffold: &Scaffold, samples_per_segment: usize) -> Result<TriMesh> {
    let (m, rings) = sample_rings(scaffold, samples_per_segment)?;
    let runs = scaffold.hole_runs();
    for &(a, end) in &runs {
        check_run_containment(scaffold, &rings, a, end)?;
    }
    let last = rings.len() - 1;
    let mut b = Builder::default();
    let world: Vec<Vec<Vec3>> = rings.iter().map(|r| r.world(&r.outer)).collect();
    let outer = b.rings(&world);
    b.tube(&outer, m as u32);
    if !runs.iter().any(|r| r.0 == 0) {
        b.cap(outer[0], &rings[0].outer, &rings[0].plane, true);
    }
    if !runs.iter().any(|r| r.1 == last) {
        b.cap(outer[last], &rings[last].outer, &rings[last].plane, false);
    }
    for &(a, end) in &runs {
        let (from, blocks) = hole_solid(&mut b, &rings, a, end, m as u32, (a != 0, end != last));
        b.flip_from(from);
        if a == 0 {
            b.annulus(outer[0], blocks[0], m as u32, true);
        }
        if end == last {
            b.annulus(outer[last], *blocks.last().unwrap(), m as u32, false);
        }
    }
    Ok(b.finish(MeshLabel::Difference))
}

/// Union of the parts' difference meshes as a mesh soup.
pub fn final_mesh(assembly: &PartAssembly, samples_per_segment: usize) -> Result<TriMesh> {
    if assembly.parts.is_empty() {
        return Err(Error::EmptyInput("assembly has no parts"));
    }
    let mut out = TriMesh::empty(MeshLabel::Final);
    for part in &assembly.parts {
        let mesh = difference_mesh(part, samples_per_segment).map_err(|e| Error::Part {
            part: part.name.clone(),
            source: Box::new(e),
        })?;
        out.append(&mesh);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::scaffold::test_util::stacked_circles;
    use crate::scaffold::{add_hole, templates, Slice};
    use std::f64::consts::PI;

    fn tube(ro: f64, rh: f64, len: f64, handles: usize) -> Scaffold {
        let s = stacked_circles(&[ro, ro], handles, len);
        let n = s.slices.len();
        add_hole(&s, &(0..n).collect::<Vec<_>>(), handles, rh / ro).unwrap()
    }

    #[test]
    fn cylinder_skin_is_closed_and_converges() {
        let s = stacked_circles(&[1.0, 1.0], 16, 2.0);
        let mut prev = f64::INFINITY;
        for sps in [1, 4, 16, 32] {
            let m = skin_mesh(&s, sps).unwrap();
            assert!(m.is_watertight());
            assert_eq!(m.euler_characteristic(), 2);
            assert!(m.signed_volume() > 0.0);
            let exact = 2.0 * PI + 2.0 * 2.0 * PI;
            let err = (m.surface_area() - exact).abs() / exact;
            assert!(err <= prev + 1e-12);
            prev = err;
        }
        assert!(prev < 0.01, "{prev}");
    }

    #[test]
    fn repeated_slice_is_skipped() {
        let mut s = stacked_circles(&[1.0, 1.0, 1.0], 8, 1.0);
        s.slices[2] = s.slices[1].clone();
        let m = skin_mesh(&s, 4).unwrap();
        assert!(m.is_watertight());
        assert!(m.min_triangle_area() > 1e-12);
        assert_eq!(m.triangles.len(), 2 * 32 + 2 * 32);
    }

    #[test]
    fn tube_difference_is_torus_like() {
        let s = tube(1.0, 0.5, 2.0, 16);
        let m = difference_mesh(&s, 16).unwrap();
        assert!(m.is_watertight());
        assert_eq!(m.euler_characteristic(), 0);
        let exact = PI * (1.0 - 0.25) * 2.0;
        assert!((m.signed_volume() - exact).abs() / exact < 0.01);
        let h = hole_mesh(&s, 16).unwrap();
        assert!(h.is_watertight());
        assert_eq!(h.euler_characteristic(), 2);
        assert!((h.signed_volume() - PI * 0.25 * 2.0).abs() / (PI * 0.5) < 0.01);
    }

    #[test]
    fn partial_cavity_is_sphere_like() {
        let s = stacked_circles(&[1.0, 1.0, 1.0, 1.0], 12, 0.5);
        let s = add_hole(&s, &[1, 2, 3], 12, 0.6).unwrap();
        let m = difference_mesh(&s, 8).unwrap();
        assert!(m.is_watertight());
        assert_eq!(m.euler_characteristic(), 2);
        let skin = skin_mesh(&s, 8).unwrap();
        let hole = hole_mesh(&s, 8).unwrap();
        assert!((m.signed_volume() - (skin.signed_volume() - hole.signed_volume())).abs() < 1e-9);
    }

    #[test]
    fn interior_cavity_and_two_runs() {
        let s = stacked_circles(&[1.0; 7], 8, 0.5);
        let s = add_hole(&s, &[1, 2, 4, 5], 8, 0.5).unwrap();
        let h = hole_mesh(&s, 4).unwrap();
        assert_eq!(h.connected_components().len(), 2);
        let d = difference_mesh(&s, 4).unwrap();
        assert!(d.is_watertight());
        assert_eq!(d.euler_characteristic(), 6);
    }

    #[test]
    fn isolated_hole_gives_empty_hole_mesh() {
        let s = add_hole(&stacked_circles(&[1.0; 3], 8, 1.0), &[1], 8, 0.5).unwrap();
        assert!(hole_mesh(&s, 4).unwrap().is_empty());
        assert_eq!(difference_mesh(&s, 4).unwrap().triangles, skin_mesh(&s, 4).unwrap().triangles);
    }

    #[test]
    fn no_holes_difference_equals_skin() {
        let s = stacked_circles(&[1.0, 0.7, 1.2], 8, 1.0);
        let a = skin_mesh(&s, 6).unwrap();
        let b = difference_mesh(&s, 6).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.triangles, b.triangles);
    }

    #[test]
    fn box_prism_volume() {
        let mut s = stacked_circles(&[1.0, 1.0], 4, 1.5);
        s.tension = 0.0;
        for sl in &mut s.slices {
            sl.external = templates::rectangle(4, 0.5, 0.25);
        }
        let m = skin_mesh(&s, 16).unwrap();
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn reversed_sweep_still_outward() {
        let s = crate::scaffold::reverse_sweep(&tube(1.0, 0.4, 1.0, 8));
        let m = difference_mesh(&s, 4).unwrap();
        assert!(m.is_watertight() && m.signed_volume() > 0.0);
    }

    #[test]
    fn non_convex_cap_uses_ear_clipping() {
        // C-shaped contour whose centroid falls in the opening
        let arc = |r: f64, k: usize| {
            let t = (40.0 + 280.0 * k as f64 / 11.0).to_radians();
            Vec2::new(r * t.cos(), r * t.sin())
        };
        let ring: Vec<Vec2> = (0..12).map(|k| arc(1.0, k)).chain((0..12).rev().map(|k| arc(0.5, k))).collect();
        let mut s = stacked_circles(&[1.0, 1.0], 24, 1.0);
        for sl in &mut s.slices {
            sl.external = ring.clone();
        }
        s.tension = 0.0;
        let m = skin_mesh(&s, 1).unwrap();
        assert!(m.is_watertight());
        let area = polygon_signed_area(&ring);
        assert!((m.signed_volume() - area).abs() < 1e-12);
        assert!(fan_center(&ring).is_none());
    }

    #[test]
    fn self_intersecting_contour_fails() {
        let mut s = stacked_circles(&[1.0, 1.0], 4, 1.0);
        s.slices[1].external = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        match skin_mesh(&s, 4).unwrap_err() {
            Error::MeshingFailure { slice, .. } => assert_eq!(slice, 1),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn hole_crossing_between_slices() {
        // the second outer ring is rotated half a turn, so index-wise
        // interpolation collapses it to a point midway while the hole does not
        let mut s = stacked_circles(&[1.0, 1.0], 16, 1.0);
        s.slices[1].external = s.slices[1].external.iter().map(|p| -p).collect();
        for sl in &mut s.slices {
            sl.hole = Some(templates::ellipse(16, 0.5, 0.5));
        }
        s.validate().unwrap();
        assert_eq!(difference_mesh(&s, 4).unwrap_err().kind(), "ContainmentViolation");
    }

    #[test]
    fn assembly_components_and_errors() {
        let cup = tube(1.0, 0.8, 1.0, 8);
        let mut handle = stacked_circles(&[0.1, 0.1], 8, 0.5);
        for sl in &mut handle.slices {
            sl.plane.pose = Pose::from_translation(sl.center() + Vec3::new(2.0, 0.0, 0.0));
        }
        handle.name = "handle".into();
        let single = final_mesh(&PartAssembly::single(cup.clone()), 4).unwrap();
        assert_eq!(single.triangles, difference_mesh(&cup, 4).unwrap().triangles);
        assert_eq!(single.label, MeshLabel::Final);
        let both = final_mesh(&PartAssembly::new("mug", vec![cup, handle.clone()]).unwrap(), 4).unwrap();
        assert_eq!(both.connected_components().len(), 2);
        let empty = PartAssembly {
            name: "x".into(),
            parts: vec![],
        };
        assert_eq!(final_mesh(&empty, 4).unwrap_err().kind(), "EmptyInput");
        handle.slices[0].external.truncate(2);
        let bad = PartAssembly::new("mug", vec![handle]).unwrap();
        match final_mesh(&bad, 4).unwrap_err() {
            Error::Part { part, .. } => assert_eq!(part, "handle"),
            e => panic!("{e}"),
        }
        let _ = Slice::new;
    }

    #[test]
    fn deterministic() {
        let s = tube(1.0, 0.5, 1.0, 8);
        assert_eq!(difference_mesh(&s, 8).unwrap(), difference_mesh(&s, 8).unwrap());
    }
}
