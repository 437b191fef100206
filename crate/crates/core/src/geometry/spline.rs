use serde::{Deserialize, Serialize};

use super::Vec2;
use crate::config::DEFAULT_TENSION;
use crate::error::{Error, Result};

/// Closed interpolating cardinal spline in plane coordinates.
///
/// Knots are uniform: parameter `i` lands on control point `i`, and the curve
/// is periodic with period `n`. Tangents are `tension * (p[i+1] - p[i-1])`, so
/// a tension of 0.5 gives Catmull-Rom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSpline {
    pub control_points: Vec<Vec2>,
    pub tension: f64,
}

impl ClosedSpline {
    pub fn new(control_points: Vec<Vec2>, tension: f64) -> Result<Self> {
        let s = Self {
            control_points,
            tension,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn catmull_rom(control_points: Vec<Vec2>) -> Result<Self> {
        Self::new(control_points, DEFAULT_TENSION)
    }

    pub fn validate(&self) -> Result<()> {
        if self.control_points.len() < 3 {
            return Err(Error::InvalidSpline(format!(
                "need at least 3 control points, got {}",
                self.control_points.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.tension) {
            return Err(Error::InvalidSpline(format!(
                "tension {} outside [0, 1]",
                self.tension
            )));
        }
        if self
            .control_points
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::InvalidSpline("non-finite control point".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_points.is_empty()
    }

    /// Evaluates the curve at `t`, taken modulo the number of control points.
    pub fn eval(&self, t: f64) -> Vec2 {
        let n = self.control_points.len();
        let t = t.rem_euclid(n as f64);
        let mut i = t.floor() as usize;
        let mut u = t - i as f64;
        if i >= n {
            // rem_euclid can round up to n
            i = 0;
            u = 0.0;
        }
        let p = |k: isize| self.control_points[(k.rem_euclid(n as isize)) as usize];
        let (p0, p1, p2, p3) = (p(i as isize - 1), p(i as isize), p(i as isize + 1), p(i as isize + 2));
        let [w0, w1, w2, w3] = cardinal_weights(self.tension, u);
        p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
    }

    /// `samples_per_segment` points per control-point interval, starting at
    /// control point 0.
    pub fn sample(&self, samples_per_segment: usize) -> Vec<Vec2> {
        let n = self.control_points.len();
        let k = samples_per_segment.max(1);
        (0..n)
            .flat_map(|i| (0..k).map(move |j| i as f64 + j as f64 / k as f64))
            .map(|t| self.eval(t))
            .collect()
    }

    /// `count` points at uniform parameter spacing over the whole curve.
    pub fn sample_count(&self, count: usize) -> Vec<Vec2> {
        let n = self.control_points.len() as f64;
        (0..count)
            .map(|k| self.eval(k as f64 * n / count as f64))
            .collect()
    }
}

/// Blending weights of the cardinal basis at local parameter `u` in `[0, 1)`.
pub(crate) fn cardinal_weights(tension: f64, u: f64) -> [f64; 4] {
    let s = tension;
    let u2 = u * u;
    let u3 = u2 * u;
    [
        -s * u + 2.0 * s * u2 - s * u3,
        1.0 + (s - 3.0) * u2 + (2.0 - s) * u3,
        s * u + (3.0 - 2.0 * s) * u2 + (s - 2.0) * u3,
        -s * u2 + s * u3,
    ]
}

pub fn sample_closed_spline(spline: &ClosedSpline, samples_per_segment: usize) -> Result<Vec<Vec2>> {
    spline.validate()?;
    if samples_per_segment == 0 {
        return Err(Error::InvalidArgument(
            "samples_per_segment must be at least 1".into(),
        ));
    }
    Ok(spline.sample(samples_per_segment))
}
