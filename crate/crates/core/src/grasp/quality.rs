use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::gripper::{close_gripper, Contact, GripperModel};
use crate::error::{Error, Result};
use crate::geometry::{any_perpendicular, Pose, Vec3};
use crate::meshing::TriMesh;
use crate::metrics::mass_properties;

pub type Wrench = SVector<f64, 6>;

/// Grasp wrench space summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspQuality {
    /// Volume of the wrench hull; zero unless the wrenches span six dimensions.
    pub gws_volume: f64,
    /// Radius of the largest origin-centered ball in the hull, estimated from
    /// sampled support directions refined by facet descent.
    pub epsilon: f64,
    /// Same radius from the full hull's facets, when the hull could be built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_exact: Option<f64>,
    pub force_closure: bool,
    /// Torque normalizer: largest contact distance from the center of mass (m).
    pub torque_scale: f64,
    pub wrench_rank: usize,
    pub contact_count: usize,
    pub cone_edges: usize,
    pub direction_samples: usize,
}

impl GraspQuality {
    fn empty(cone_edges: usize, direction_samples: usize) -> Self {
        GraspQuality {
            gws_volume: 0.0,
            epsilon: 0.0,
            epsilon_exact: None,
            force_closure: false,
            torque_scale: 0.0,
            wrench_rank: 0,
            contact_count: 0,
            cone_edges,
            direction_samples,
        }
    }
}

/// Primitive wrenches of linearized friction cones, torques divided by the
/// largest contact-to-COM distance. Returns the wrenches and that distance.
pub fn contact_wrenches(contacts: &[Contact], com: &Vec3, mu: f64, cone_edges: usize) -> (Vec<Wrench>, f64) {
    let scale = contacts
        .iter()
        .map(|c| (c.point - com).norm())
        .fold(0.0, f64::max);
    let inv = if scale > 0.0 { 1.0 / scale } else { 1.0 };
    let mut out = Vec::with_capacity(contacts.len() * cone_edges);
    for c in contacts {
        let n = c.normal.normalize();
        let t1 = any_perpendicular(&n);
        let t2 = n.cross(&t1);
        let r = c.point - com;
        for j in 0..cone_edges {
            let a = std::f64::consts::TAU * j as f64 / cone_edges as f64;
            let f = (n + (t1 * a.cos() + t2 * a.sin()) * mu).normalize();
            let tau = r.cross(&f) * inv;
            out.push(Wrench::from_column_slice(&[f.x, f.y, f.z, tau.x, tau.y, tau.z]));
        }
    }
    (out, scale)
}

fn rank(ws: &[Wrench]) -> usize {
    if ws.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(6, ws.len(), |r, c| ws[c][r]);
    let sv = m.svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > top * 1e-9).count()
}

/// Largest margin `s` such that the origin is a convex combination of `ws`
/// with every weight at least `s`; `None` when the origin is outside.
pub fn interior_margin(ws: &[Wrench]) -> Option<f64> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let s = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let lambda: Vec<_> = ws.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    for &l in &lambda {
        lp.add_constraint([(l, 1.0), (s, -1.0)], ComparisonOp::Ge, 0.0);
    }
    let all: Vec<_> = lambda.iter().map(|&l| (l, 1.0)).collect();
    lp.add_constraint(all.as_slice(), ComparisonOp::Eq, 1.0);
    for k in 0..6 {
        let row: Vec<_> = lambda.iter().zip(ws).map(|(&l, w)| (l, w[k])).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let sol = lp.solve().ok()?.into_solution().ok()?;
    Some(sol.var_value(s))
}

/// Origin strictly inside the hull of `ws`.
pub fn is_force_closure(ws: &[Wrench]) -> bool {
    rank(ws) == 6 && interior_margin(ws).is_some_and(|m| m > 1e-9)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Low-discrepancy unit directions in six dimensions: Halton points pushed
/// through Box-Muller and normalized.
pub fn halton_directions(count: usize) -> Vec<Wrench> {
    const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    (1..=count as u64)
        .map(|i| {
            let h: Vec<f64> = PRIMES.iter().map(|&p| radical_inverse(i, p)).collect();
            let mut g = Wrench::zeros();
            for k in 0..3 {
                let r = (-2.0 * h[2 * k].ln()).sqrt();
                let a = std::f64::consts::TAU * h[2 * k + 1];
                g[2 * k] = r * a.cos();
                g[2 * k + 1] = r * a.sin();
            }
            g.normalize()
        })
        .collect()
}

fn support(ws: &[Wrench], u: &Wrench) -> f64 {
    ws.iter().map(|w| w.dot(u)).fold(f64::NEG_INFINITY, f64::max)
}

/// Supporting halfspace `a . w <= 1` found by pushing `u` as far as the
/// polar body allows; `1 / |a|` is that facet's distance from the origin.
fn polar_vertex(ws: &[Wrench], u: &Wrench) -> Option<Wrench> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let a: Vec<_> = (0..6)
        .map(|k| lp.add_var(u[k], (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for w in ws {
        let row: Vec<_> = a.iter().zip(w.iter()).map(|(&v, &c)| (v, c)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, 1.0);
    }
    let sol = lp.solve().ok()?.into_solution().ok()?;
    let v = Wrench::from_iterator(a.iter().map(|&x| sol.var_value(x)));
    (v.norm() > 0.0).then_some(v)
}

/// Starting directions refined by facet descent.
const DESCENT_STARTS: usize = 16;

/// Inscribed-ball radius of the hull of `ws` about the origin. Samples the
/// support function over `directions`, then from the lowest-support samples
/// walks to the facet hit along each direction and re-aims at that facet's
/// foot point until the distance stops shrinking. Every value produced is the
/// distance of a supporting hyperplane, so the result never undercuts the
/// true radius and equals it once the nearest facet is reached.
pub fn sampled_epsilon(ws: &[Wrench], directions: &[Wrench]) -> f64 {
    let mut ranked: Vec<(f64, &Wrench)> = directions.iter().map(|u| (support(ws, u), u)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = ranked.first().map_or(0.0, |r| r.0);
    for &(_, u) in ranked.iter().take(DESCENT_STARTS) {
        let mut dir = *u;
        let mut last = f64::INFINITY;
        for _ in 0..32 {
            let Some(a) = polar_vertex(ws, &dir) else { break };
            let d = 1.0 / a.norm();
            if d >= last * (1.0 - 1e-12) {
                break;
            }
            last = d;
            best = best.min(d);
            dir = a / a.norm();
        }
    }
    best.max(0.0)
}

/// Hull volume and facet-exact epsilon via Qhull. `None` when the hull
/// cannot be built (fewer than six dimensions spanned).
pub fn hull_measures(ws: &[Wrench]) -> Option<(f64, f64)> {
    let qh = qhull::Qh::builder()
        .capture_stderr(true)
        .qhull_args(["Qt"])
        .ok()?
        .build_from_iter(ws.iter().map(|w| w.iter().copied().collect::<Vec<_>>()))
        .ok()?;
    let center = ws.iter().sum::<Wrench>() / ws.len() as f64;
    let mut volume = 0.0;
    let mut eps = f64::INFINITY;
    for f in qh.facets() {
        let normal = Wrench::from_column_slice(f.normal()?);
        // hyperplane normal . x + offset = 0 with outward normal
        eps = eps.min(-f.offset() / normal.norm());
        let vs: Vec<Wrench> = f
            .vertices()?
            .iter()
            .map(|v| Wrench::from_column_slice(v.point().unwrap()))
            .collect();
        if vs.len() != 6 {
            return None;
        }
        let m = nalgebra::Matrix6::from_fn(|r, c| vs[c][r] - center[r]);
        volume += m.determinant().abs() / 720.0;
    }
    Some((volume, eps.max(0.0)))
}

/// Wrench-space quality of a set of contacts.
pub fn grasp_quality(
    contacts: &[Contact],
    com: &Vec3,
    mu: f64,
    cone_edges: usize,
    direction_samples: usize,
) -> Result<GraspQuality> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("friction coefficient {mu} must be positive")));
    }
    if cone_edges < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 cone edges, got {cone_edges}")));
    }
    if direction_samples < 64 {
        return Err(Error::InvalidArgument(format!(
            "need at least 64 direction samples, got {direction_samples}"
        )));
    }
    if contacts.is_empty() {
        return Ok(GraspQuality::empty(cone_edges, direction_samples));
    }
    let (ws, torque_scale) = contact_wrenches(contacts, com, mu, cone_edges);
    let wrench_rank = rank(&ws);
    let force_closure = is_force_closure(&ws);
    let hull = if wrench_rank == 6 { hull_measures(&ws) } else { None };
    let epsilon = if force_closure {
        sampled_epsilon(&ws, &halton_directions(direction_samples))
    } else {
        0.0
    };
    Ok(GraspQuality {
        gws_volume: hull.map_or(0.0, |h| h.0),
        epsilon,
        epsilon_exact: hull.map(|h| if force_closure { h.1 } else { 0.0 }),
        force_closure,
        torque_scale,
        wrench_rank,
        contact_count: contacts.len(),
        cone_edges,
        direction_samples,
    })
}

/// Closes `gripper` at `pose` on `mesh` and scores the contacts about the
/// mesh's center of mass.
pub fn evaluate_grasp(
    gripper: &GripperModel,
    pose: &Pose,
    mesh: &TriMesh,
    cone_edges: usize,
    direction_samples: usize,
) -> Result<(Vec<Contact>, GraspQuality)> {
    let contacts = close_gripper(gripper, pose, mesh)?;
    let com = mass_properties(mesh)?.com;
    let q = grasp_quality(&contacts, &com, gripper.friction, cone_edges, direction_samples)?;
    Ok((contacts, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Four contacts at the corners of a square patch on each of the x = 0
    /// and x = 1 faces of the unit cube.
    fn cube_patches(half: f64) -> Vec<Contact> {
        let mut c = Vec::new();
        for (x, n) in [(0.0, Vec3::x()), (1.0, -Vec3::x())] {
            for (dy, dz) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                c.push(Contact::new(Vec3::new(x, 0.5 + dy * half, 0.5 + dz * half), n));
            }
        }
        c
    }

    /// Brute force over every 5-subset: the origin is strictly interior iff
    /// the wrenches span six dimensions and no hyperplane through the origin
    /// and five of them leaves all wrenches on one closed side.
    fn brute_force_closure(ws: &[Wrench]) -> bool {
        if rank(ws) < 6 {
            return false;
        }
        let n = ws.len();
        let mut idx = [0usize, 1, 2, 3, 4];
        loop {
            let m = nalgebra::Matrix5x6::from_fn(|r, c| ws[idx[r]][c]);
            // generalized cross product of the five rows
            let normal = Wrench::from_fn(|k, _| {
                let minor = nalgebra::Matrix5::from_fn(|r, c| m[(r, if c < k { c } else { c + 1 })]);
                if k % 2 == 0 { minor.determinant() } else { -minor.determinant() }
            });
            if normal.norm() > 1e-9 {
                let normal = normal.normalize();
                let sides: Vec<f64> = ws.iter().map(|w| w.dot(&normal)).collect();
                let tol = 1e-9;
                if sides.iter().all(|&s| s >= -tol) || sides.iter().all(|&s| s <= tol) {
                    return false;
                }
            }
            // next combination
            let mut i = 4;
            loop {
                if idx[i] < n - 5 + i {
                    idx[i] += 1;
                    for j in i + 1..5 {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    return true;
                }
                i -= 1;
            }
        }
    }

    /// Exact inscribed radius by enumerating every 6-subset hyperplane that
    /// supports the whole set.
    fn brute_force_epsilon(ws: &[Wrench]) -> f64 {
        let n = ws.len();
        let mut best = f64::INFINITY;
        let mut idx = [0usize, 1, 2, 3, 4, 5];
        loop {
            let m = nalgebra::Matrix6::from_fn(|r, c| ws[idx[r]][c]);
            if let Some(inv) = m.try_inverse() {
                let a = inv * Wrench::repeat(1.0);
                if ws.iter().all(|w| w.dot(&a) <= 1.0 + 1e-9) {
                    best = best.min(1.0 / a.norm());
                }
            }
            let mut i = 5;
            loop {
                if idx[i] < n - 6 + i {
                    idx[i] += 1;
                    for j in i + 1..6 {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    return best;
                }
                i -= 1;
            }
        }
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> Wrench {
        loop {
            let w = Wrench::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if w.norm() > 0.1 && w.norm() <= 1.0 {
                return w.normalize();
            }
        }
    }

    #[test]
    fn single_contact_has_no_closure() {
        let c = [Contact::new(Vec3::new(0.0, 0.5, 0.5), Vec3::x())];
        let q = grasp_quality(&c, &Vec3::repeat(0.5), 0.5, 8, 256).unwrap();
        assert!(!q.force_closure);
        assert_eq!(q.epsilon, 0.0);
        assert_eq!(q.gws_volume, 0.0);
    }

    #[test]
    fn antipodal_cube_patches_close() {
        let contacts = cube_patches(0.25);
        let (ws, _) = contact_wrenches(&contacts, &Vec3::repeat(0.5), 0.5, 4);
        assert!(brute_force_closure(&ws));
        let q = grasp_quality(&contacts, &Vec3::repeat(0.5), 0.5, 4, 1024).unwrap();
        assert!(q.force_closure);
        assert!(q.epsilon > 0.0 && q.gws_volume > 0.0);
        let exact = q.epsilon_exact.unwrap();
        assert!(q.epsilon >= exact - 1e-9);
        assert!((q.epsilon - exact) / exact < 0.02, "{} vs {exact}", q.epsilon);
    }

    #[test]
    fn antipodal_points_alone_cannot_resist_twist() {
        let contacts = [
            Contact::new(Vec3::new(0.0, 0.5, 0.5), Vec3::x()),
            Contact::new(Vec3::new(1.0, 0.5, 0.5), -Vec3::x()),
        ];
        let (ws, _) = contact_wrenches(&contacts, &Vec3::repeat(0.5), 0.5, 8);
        assert!(!brute_force_closure(&ws));
        assert!(!grasp_quality(&contacts, &Vec3::repeat(0.5), 0.5, 8, 256).unwrap().force_closure);
    }

    #[test]
    fn one_sided_patch_has_no_closure() {
        let contacts: Vec<_> = cube_patches(0.25).into_iter().take(4).collect();
        let (ws, _) = contact_wrenches(&contacts, &Vec3::repeat(0.5), 0.5, 4);
        assert!(!brute_force_closure(&ws));
        assert!(!grasp_quality(&contacts, &Vec3::repeat(0.5), 0.5, 4, 256).unwrap().force_closure);
    }

    #[test]
    fn epsilon_matches_small_instance_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dirs = halton_directions(4096);
        let mut checked = 0;
        while checked < 5 {
            // a dozen random unit wrenches plus their rough negatives
            let mut ws: Vec<Wrench> = (0..6).map(|_| random_unit(&mut rng)).collect();
            let neg: Vec<Wrench> = ws.iter().map(|w| -w * 0.7 + random_unit(&mut rng) * 0.2).collect();
            ws.extend(neg);
            if !is_force_closure(&ws) {
                continue;
            }
            let exact = brute_force_epsilon(&ws);
            let sampled = sampled_epsilon(&ws, &dirs);
            let (_, hull_eps) = hull_measures(&ws).unwrap();
            assert!((hull_eps - exact).abs() < 1e-9 * exact.max(1.0), "{hull_eps} vs {exact}");
            assert!(sampled >= exact - 1e-9);
            assert!((sampled - exact) / exact < 0.02, "{sampled} vs {exact}");
            checked += 1;
        }
    }

    #[test]
    fn simplex_volume() {
        // the standard simplex scaled by 2 has volume 2^6 / 6!
        let mut ws = vec![Wrench::zeros()];
        for k in 0..6 {
            let mut w = Wrench::zeros();
            w[k] = 2.0;
            ws.push(w);
        }
        let (v, _) = hull_measures(&ws).unwrap();
        assert!((v - 64.0 / 720.0).abs() < 1e-12);
    }

    #[test]
    fn closure_survives_rigid_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let com = Vec3::repeat(0.5);
        let base = cube_patches(0.25);
        for _ in 0..20 {
            let axis = Vec3::new(rng.random(), rng.random(), rng.random()) - Vec3::repeat(0.5);
            let pose = Pose::from_axis_angle(
                Vec3::new(rng.random(), rng.random(), rng.random()) * 4.0,
                axis,
                rng.random_range(0.0..6.0),
            );
            let moved: Vec<_> = base.iter().map(|c| c.transformed(&pose)).collect();
            let q = grasp_quality(&moved, &pose.transform_point(&com), 0.5, 4, 64).unwrap();
            assert!(q.force_closure);
        }
    }

    #[test]
    fn argument_checks() {
        let c = cube_patches(0.25);
        let com = Vec3::repeat(0.5);
        assert!(grasp_quality(&c, &com, 0.0, 8, 256).is_err());
        assert!(grasp_quality(&c, &com, 0.5, 3, 256).is_err());
        assert!(grasp_quality(&c, &com, 0.5, 8, 10).is_err());
        let q = grasp_quality(&[], &com, 0.5, 8, 256).unwrap();
        assert!(!q.force_closure && q.epsilon == 0.0 && q.gws_volume == 0.0);
    }

    #[test]
    fn halton_directions_are_unit_and_spread() {
        let d = halton_directions(2048);
        assert!(d.iter().all(|u| (u.norm() - 1.0).abs() < 1e-12));
        let mean = d.iter().sum::<Wrench>() / d.len() as f64;
        assert!(mean.norm() < 0.05);
    }
}
