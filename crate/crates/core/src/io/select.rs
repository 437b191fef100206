use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, polygon_is_simple, polygon_signed_area, Pose, Vec2, Vec3};
use crate::scaffold::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Projection {
    /// Vertical field of view in radians; `aspect` is width over height.
    Perspective { fov_y: f64, aspect: f64 },
    /// Half the visible height in meters.
    Orthographic { half_height: f64, aspect: f64 },
}

/// Viewing camera. It looks down its local -Z axis with +Y up, so screen
/// coordinates are normalized device coordinates in [-1, 1]^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub pose: Pose,
    pub projection: Projection,
}

impl Camera {
    /// Normalized device coordinates of `p`, or `None` behind a perspective
    /// camera.
    pub fn project(&self, p: &Vec3) -> Option<Vec2> {
        let q = self.pose.inverse_transform_point(p);
        match self.projection {
            Projection::Perspective { fov_y, aspect } => {
                if q.z >= 0.0 {
                    return None;
                }
                let f = 1.0 / (fov_y / 2.0).tan();
                Some(Vec2::new(f * q.x / (-q.z * aspect), f * q.y / -q.z))
            }
            Projection::Orthographic { half_height, aspect } => {
                Some(Vec2::new(q.x / (half_height * aspect), q.y / half_height))
            }
        }
    }

    /// Unit viewing direction in world coordinates.
    pub fn forward(&self) -> Vec3 {
        -self.pose.z_axis()
    }
}

fn split(cloud: &PointCloud, keep: &[bool]) -> (PointCloud, PointCloud) {
    let mut a = PointCloud::default();
    let mut b = PointCloud::default();
    let colors = cloud.colors.as_ref();
    if colors.is_some() {
        a.colors = Some(Vec::new());
        b.colors = Some(Vec::new());
    }
    for (i, p) in cloud.points.iter().enumerate() {
        let dst = if keep[i] { &mut a } else { &mut b };
        dst.points.push(*p);
        if let (Some(c), Some(d)) = (colors, dst.colors.as_mut()) {
            d.push(c[i]);
        }
    }
    a.name = cloud.name.as_ref().map(|n| format!("{n}-selected"));
    b.name = cloud.name.clone();
    (a, b)
}

/// Splits `cloud` into the points whose projection falls inside the screen
/// polygon and the rest, preserving order. A polygon of zero area selects
/// nothing.
pub fn select_points(cloud: &PointCloud, polygon: &[Vec2], camera: &Camera) -> Result<(PointCloud, PointCloud)> {
    if polygon.len() < 3 || polygon.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidArgument(
            "selection polygon needs at least 3 finite vertices".into(),
        ));
    }
    let keep: Vec<bool> = if polygon_signed_area(polygon) == 0.0 {
        vec![false; cloud.len()]
    } else {
        if !polygon_is_simple(polygon) {
            return Err(Error::InvalidArgument("selection polygon crosses itself".into()));
        }
        cloud
            .points
            .iter()
            .map(|p| camera.project(p).is_some_and(|s| point_in_polygon(&s, polygon)))
            .collect()
    };
    Ok(split(cloud, &keep))
}

/// Gives every point the same color.
pub fn paint_cloud(cloud: &PointCloud, color: [u8; 3]) -> PointCloud {
    PointCloud {
        colors: Some(vec![color; cloud.len()]),
        ..cloud.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ortho() -> Camera {
        Camera {
            pose: Pose::from_translation(Vec3::new(0.0, 0.0, 10.0)),
            projection: Projection::Orthographic {
                half_height: 2.0,
                aspect: 1.0,
            },
        }
    }

    fn symmetric_cloud(n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts = Vec::new();
        for _ in 0..n / 2 {
            let p = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            pts.push(p);
            pts.push(-p);
        }
        PointCloud::new(pts)
    }

    fn square(h: f64) -> Vec<Vec2> {
        vec![Vec2::new(-h, -h), Vec2::new(h, -h), Vec2::new(h, h), Vec2::new(-h, h)]
    }

    #[test]
    fn whole_viewport_selects_everything() {
        let c = symmetric_cloud(1000);
        let (sel, rest) = select_points(&c, &square(1.0), &ortho()).unwrap();
        assert_eq!((sel.len(), rest.len()), (1000, 0));
        assert_eq!(sel.points, c.points);
    }

    #[test]
    fn zero_area_selects_nothing() {
        let c = symmetric_cloud(100);
        let flat = [Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.5), Vec2::new(1.0, 1.0)];
        let (sel, rest) = select_points(&c, &flat, &ortho()).unwrap();
        assert_eq!((sel.len(), rest.len()), (0, 100));
    }

    #[test]
    fn half_plane_split() {
        let c = symmetric_cloud(2000);
        let right = [Vec2::new(0.0, -1.0), Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        let (sel, rest) = select_points(&c, &right, &ortho()).unwrap();
        assert_eq!(sel.len() + rest.len(), c.len());
        let frac = sel.len() as f64 / c.len() as f64;
        assert!((frac - 0.5).abs() <= 0.01, "{frac}");
        assert!(sel.points.iter().all(|p| p.x >= 0.0));
    }

    #[test]
    fn perspective_ignores_points_behind() {
        let cam = Camera {
            pose: Pose::identity(),
            projection: Projection::Perspective {
                fov_y: 1.0,
                aspect: 1.5,
            },
        };
        assert_eq!(cam.forward(), -Vec3::z());
        let c = PointCloud::new(vec![Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 1.0)]);
        let (sel, rest) = select_points(&c, &square(1.0), &cam).unwrap();
        assert_eq!(sel.points, vec![Vec3::new(0.0, 0.0, -1.0)]);
        assert_eq!(rest.len(), 1);
        let edge = Vec3::new(0.0, (0.5f64).tan() * 2.0, -2.0);
        assert!((cam.project(&edge).unwrap().y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_keeps_colors_and_rejects_bad_polygons() {
        let c = paint_cloud(&symmetric_cloud(10), [9, 8, 7]);
        let (sel, rest) = select_points(&c, &square(0.1), &ortho()).unwrap();
        assert_eq!(sel.colors.as_ref().unwrap().len(), sel.len());
        assert_eq!(rest.colors.as_ref().unwrap().len(), rest.len());
        assert!(select_points(&c, &square(1.0)[..2], &ortho()).is_err());
        let bow = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 2.0)];
        assert!(select_points(&c, &bow, &ortho()).is_err());
    }
}
