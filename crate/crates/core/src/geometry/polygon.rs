use super::Vec2;

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn polygon_signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

/// Area centroid of a simple polygon. Falls back to the vertex mean when the
/// area vanishes.
pub fn polygon_area_centroid(ring: &[Vec2]) -> Vec2 {
    let n = ring.len();
    if n == 0 {
        return Vec2::zeros();
    }
    // shift to the first vertex to limit cancellation
    let o = ring[0];
    let mut a2 = 0.0;
    let mut c = Vec2::zeros();
    for i in 0..n {
        let p = ring[i] - o;
        let q = ring[(i + 1) % n] - o;
        let cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        c += (p + q) * cross;
    }
    if a2.abs() < 1e-300 {
        return ring.iter().sum::<Vec2>() / n as f64;
    }
    o + c / (3.0 * a2)
}

/// Even-odd point in polygon test.
pub fn point_in_polygon(p: &Vec2, ring: &[Vec2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn segment_distance_2d(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - p).norm()
}

/// Positive inside, negative outside.
pub fn signed_distance_to_polygon(p: &Vec2, ring: &[Vec2]) -> f64 {
    let n = ring.len();
    let d = (0..n)
        .map(|i| segment_distance_2d(p, &ring[i], &ring[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if point_in_polygon(p, ring) {
        d
    } else {
        -d
    }
}

/// Distance from `origin` along the unit direction `dir` to the farthest
/// crossing of the polygon boundary, or `None` when the ray misses.
pub fn ray_polygon_distance(origin: &Vec2, dir: &Vec2, ring: &[Vec2]) -> Option<f64> {
    let n = ring.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        let a = ring[i] - origin;
        let b = ring[(i + 1) % n] - origin;
        let e = b - a;
        let denom = dir.x * e.y - dir.y * e.x;
        if denom.abs() < 1e-300 {
            continue;
        }
        // origin + t*dir = a + s*e
        let t = (a.x * e.y - a.y * e.x) / denom;
        let s = (a.x * dir.y - a.y * dir.x) / denom;
        if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
            best = Some(best.map_or(t, |v| v.max(t)));
        }
    }
    best
}

fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// True when no two non-adjacent edges of the closed ring properly cross.
pub fn polygon_is_simple(ring: &[Vec2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let c = ring[j];
            let d = ring[(j + 1) % n];
            if segments_cross(&a, &b, &c, &d) {
                return false;
            }
        }
    }
    true
}
