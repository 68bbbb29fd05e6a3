//! The reduced Heisenberg group `T x R x R`, its cosets modulo the center, and
//! the uniform grids every other module discretizes onto.
//!
//! A point `(theta, y, x)` stands for `z M_y T_x` with `z = exp(2 pi i theta)`;
//! the product is `(theta1 + theta2 - x1 y2, y1 + y2, x1 + x2)` with the
//! central coordinate reduced mod 1.

use crate::error::{LabError, Result};
use crate::phase::frac;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Relative slack when deciding whether a coordinate sits on its grid.
const ON_GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisenbergPoint {
    theta: f64,
    pub y: f64,
    pub x: f64,
}

impl HeisenbergPoint {
    pub fn new(theta: f64, y: f64, x: f64) -> Self {
        Self {
            theta: frac(theta),
            y,
            x,
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn central(theta: f64) -> Self {
        Self::new(theta, 0.0, 0.0)
    }

    /// Central coordinate in `[0, 1)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_central(&self) -> bool {
        self.y == 0.0 && self.x == 0.0
    }

    pub fn triple(&self) -> [f64; 3] {
        [self.theta, self.y, self.x]
    }
}

impl Serialize for HeisenbergPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.triple().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HeisenbergPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [t, y, x] = <[f64; 3]>::deserialize(d)?;
        Ok(Self::new(t, y, x))
    }
}

pub fn group_mul(a: &HeisenbergPoint, b: &HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint::new(a.theta + b.theta - a.x * b.y, a.y + b.y, a.x + b.x)
}

pub fn group_inv(a: &HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint::new(-a.theta - a.x * a.y, -a.y, -a.x)
}

impl std::ops::Mul for HeisenbergPoint {
    type Output = HeisenbergPoint;
    fn mul(self, rhs: Self) -> Self {
        group_mul(&self, &rhs)
    }
}

/// Distance between two central coordinates on the circle.
pub fn theta_distance(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// Discretization shared by signals (`N` samples of period `L`) and fields
/// (`M` central fibers on an `Ny x Nx` grid with spacings `1/L` and `L/N`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n: usize,
    pub period: f64,
    pub theta_samples: usize,
    pub ny: usize,
    pub nx: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            n: 256,
            period: 16.0,
            theta_samples: 8,
            ny: 64,
            nx: 64,
        }
    }
}

impl GridParams {
    pub fn new(n: usize, period: f64, theta_samples: usize, ny: usize, nx: usize) -> Result<Self> {
        let g = Self {
            n,
            period,
            theta_samples,
            ny,
            nx,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let even = |v: usize, name: &str| {
            if v == 0 || !v.is_multiple_of(2) {
                Err(LabError::InvalidGrid(format!(
                    "{name} must be a positive even integer, got {v}"
                )))
            } else {
                Ok(())
            }
        };
        even(self.n, "N")?;
        even(self.theta_samples, "M")?;
        even(self.ny, "Ny")?;
        even(self.nx, "Nx")?;
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(LabError::InvalidGrid(format!(
                "L must be positive, got {}",
                self.period
            )));
        }
        Ok(())
    }

    /// Signal and field x spacing `L/N`.
    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Field y spacing (and modulation grid) `1/L`.
    pub fn dy(&self) -> f64 {
        1.0 / self.period
    }

    pub fn dtheta(&self) -> f64 {
        1.0 / self.theta_samples as f64
    }

    /// Signal sample `t_i = -L/2 + i dx`.
    pub fn t(&self, i: usize) -> f64 {
        -0.5 * self.period + i as f64 * self.dx()
    }

    /// Field y coordinate of row `b`.
    pub fn field_y(&self, b: usize) -> f64 {
        (b as f64 - (self.ny / 2) as f64) * self.dy()
    }

    /// Field x coordinate of column `a`.
    pub fn field_x(&self, a: usize) -> f64 {
        (a as f64 - (self.nx / 2) as f64) * self.dx()
    }

    /// Fiber indices `-M/2 ..= M/2 - 1`.
    pub fn fiber_range(&self) -> std::ops::RangeInclusive<i64> {
        let h = (self.theta_samples / 2) as i64;
        -h..=h - 1
    }

    pub fn has_fiber(&self, k: i64) -> bool {
        self.fiber_range().contains(&k)
    }

    /// `x / dx` as an integer, or an error when `x` is off the grid.
    pub fn x_steps(&self, x: f64) -> Result<i64> {
        on_grid(x, self.dx()).ok_or(LabError::XOffGrid(x))
    }

    /// `y L` as an integer, or an error when `y` is off the grid.
    pub fn y_steps(&self, y: f64) -> Result<i64> {
        on_grid(y, self.dy()).ok_or(LabError::YOffGrid(y))
    }

    pub fn is_on_grid(&self, h: &HeisenbergPoint) -> bool {
        self.x_steps(h.x).is_ok() && self.y_steps(h.y).is_ok()
    }

    /// `(x, y)` step multiples, in units of `dx` and `dy`, for which field
    /// translations stay phase-consistent across the periodic wrap: `N/Ny`
    /// in x and `N/Nx` in y. `None` when `Ny` or `Nx` does not divide `N`.
    pub fn torus_steps(&self) -> Option<(i64, i64)> {
        if self.n.is_multiple_of(self.ny) && self.n.is_multiple_of(self.nx) {
            Some(((self.n / self.ny) as i64, (self.n / self.nx) as i64))
        } else {
            None
        }
    }
}

fn on_grid(v: f64, step: f64) -> Option<i64> {
    let q = v / step;
    let r = q.round();
    if !q.is_finite() || (q - r).abs() > ON_GRID_TOL * r.abs().max(1.0) {
        None
    } else {
        Some(r as i64)
    }
}

/// Snap `x` to `dx Z`, `y` to `dy Z` and `theta` to `(1/M) Z`, rounding half away
/// from zero. Returns the snapped point and the largest coordinate displacement.
pub fn quantize(a: &HeisenbergPoint, g: &GridParams) -> (HeisenbergPoint, f64) {
    let snap = |v: f64, step: f64| (v / step).round() * step;
    let x = snap(a.x, g.dx());
    let y = snap(a.y, g.dy());
    let mut theta = snap(a.theta, g.dtheta());
    if theta >= 1.0 {
        theta = 0.0;
    }
    let disp = (x - a.x)
        .abs()
        .max((y - a.y).abs())
        .max(theta_distance(theta, a.theta));
    (HeisenbergPoint::new(theta, y, x), disp)
}

/// True iff the `(y, x)` parts are pairwise distinct. With a grid, points are
/// compared by their quantized grid indices.
pub fn distinct_cosets(points: &[HeisenbergPoint], grid: Option<&GridParams>) -> Result<bool> {
    if points.is_empty() {
        return Err(LabError::EmptySystem);
    }
    match grid {
        Some(g) => {
            let mut keys: Vec<(i64, i64)> = points
                .iter()
                .map(|p| {
                    let (q, _) = quantize(p, g);
                    ((q.y / g.dy()).round() as i64, (q.x / g.dx()).round() as i64)
                })
                .collect();
            keys.sort_unstable();
            Ok(keys.windows(2).all(|w| w[0] != w[1]))
        }
        None => {
            for (i, p) in points.iter().enumerate() {
                for q in &points[i + 1..] {
                    if p.y == q.y && p.x == q.x {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}
