//! Fields on the reduced Heisenberg group, stored as central Fourier fibers.
//!
//! `F(theta, y, x) = sum_m fibers[m](y, x) exp(2 pi i m theta)` for
//! `m in -M/2 .. M/2`, on a periodic `Ny x Nx` grid with `y_b = (b - Ny/2) dy`
//! and `x_a = (a - Nx/2) dx`. The theta circle carries total mass 1.
//!
//! Left and right translations act fiberwise by index shifts and pointwise
//! phases:
//!
//! ```text
//! (L_h F)_m(y, x) = e(-m theta_h + m x_h (y - y_h)) F_m(y - y_h, x - x_h)
//! (R_h F)_m(y, x) = e(m theta_h - m x y_h)          F_m(y + y_h, x + x_h)
//! ```
//!
//! with `e(t) = exp(2 pi i t)`. Both are exactly unitary. The phase in
//! `y - y_h` is taken at the (wrapped) source row, so shifts that are
//! multiples of [`GridParams::torus_steps`] compose exactly across the wrap;
//! other shifts are exact as long as the field has decayed at the boundary.

use crate::error::{LabError, Result};
use crate::group::{GridParams, HeisenbergPoint};
use crate::par;
use crate::phase::{cis_turns, frac};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergField {
    grid: GridParams,
    data: Vec<Complex64>,
}

impl HeisenbergField {
    pub fn zeros(grid: GridParams) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            data: vec![ZERO; grid.theta_samples * grid.ny * grid.nx],
            grid,
        })
    }

    /// Builds every fiber from `f(m, y, x)`.
    pub fn from_fiber_fn(
        grid: GridParams,
        f: impl Fn(i64, f64, f64) -> Complex64 + Sync,
    ) -> Result<Self> {
        let mut out = Self::zeros(grid)?;
        let (ny, nx) = (grid.ny, grid.nx);
        let h = (grid.theta_samples / 2) as i64;
        par::for_each_chunk(&mut out.data, nx, |c, row| {
            let m = (c / ny) as i64 - h;
            let y = grid.field_y(c % ny);
            for (a, v) in row.iter_mut().enumerate() {
                *v = f(m, y, grid.field_x(a));
            }
        });
        Ok(out)
    }

    /// Raw k-major `(m, y, x)` storage.
    pub fn from_raw(grid: GridParams, data: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        let want = grid.theta_samples * grid.ny * grid.nx;
        if data.len() != want {
            return Err(LabError::LengthMismatch {
                expected: want,
                got: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.data
    }

    fn fiber_len(&self) -> usize {
        self.grid.ny * self.grid.nx
    }

    fn slot(&self, m: i64) -> Result<usize> {
        if !self.grid.has_fiber(m) {
            return Err(LabError::FiberOutOfRange(m));
        }
        Ok((m + (self.grid.theta_samples / 2) as i64) as usize)
    }

    /// Fiber `m` as a row-major `Ny x Nx` slice.
    pub fn fiber(&self, m: i64) -> Result<&[Complex64]> {
        let s = self.slot(m)?;
        let len = self.fiber_len();
        Ok(&self.data[s * len..(s + 1) * len])
    }

    pub fn fiber_mut(&mut self, m: i64) -> Result<&mut [Complex64]> {
        let s = self.slot(m)?;
        let len = self.fiber_len();
        Ok(&mut self.data[s * len..(s + 1) * len])
    }

    fn cell(&self) -> f64 {
        self.grid.dy() * self.grid.dx()
    }

    /// `dy dx sum |F_m|^2`.
    pub fn fiber_norm_sq(&self, m: i64) -> Result<f64> {
        Ok(self.cell() * self.fiber(m)?.iter().map(|v| v.norm_sqr()).sum::<f64>())
    }

    /// `|F|^2 = sum_m dy dx sum |F_m|^2`, fiber-major.
    pub fn norm_sq(&self) -> f64 {
        self.grid
            .fiber_range()
            .map(|m| self.fiber_norm_sq(m).expect("in range"))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == ZERO)
    }

    /// Fiber indices holding at least one nonzero sample.
    pub fn nonzero_fibers(&self) -> Vec<i64> {
        self.grid
            .fiber_range()
            .filter(|&m| self.fiber(m).expect("in range").iter().any(|v| *v != ZERO))
            .collect()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `self += c other`.
    pub fn axpy(&mut self, c: Complex64, other: &Self) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Samples `F(theta, y, x)` on the `Ny x Nx` grid.
    pub fn sample_theta(&self, theta: f64) -> Vec<Complex64> {
        let len = self.fiber_len();
        let mut out = vec![ZERO; len];
        for m in self.grid.fiber_range() {
            let c = cis_turns(m as f64 * theta);
            for (o, v) in out.iter_mut().zip(self.fiber(m).expect("in range")) {
                *o += c * v;
            }
        }
        out
    }

    /// `|F|^2` by the `M`-point rule in theta over sampled values.
    pub fn theta_quadrature_norm_sq(&self) -> f64 {
        let mm = self.grid.theta_samples;
        let per = par::map_range(mm, |s| {
            self.sample_theta(s as f64 / mm as f64)
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
        });
        self.cell() * per.iter().sum::<f64>() / mm as f64
    }

    fn shifts(&self, h: &HeisenbergPoint) -> Result<(i64, i64)> {
        Ok((self.grid.y_steps(h.y)?, self.grid.x_steps(h.x)?))
    }

    /// Shared kernel of `L_h` and `R_h`: `out_m(b, a) = phase(m, b, a) F_m(b + db, a + da)`.
    fn shifted(
        &self,
        db: i64,
        da: i64,
        phase: impl Fn(i64, usize, usize) -> Complex64 + Sync,
    ) -> Self {
        let g = self.grid;
        let (ny, nx) = (g.ny as i64, g.nx as i64);
        let h = (g.theta_samples / 2) as i64;
        let len = self.fiber_len();
        let mut out = vec![ZERO; self.data.len()];
        par::for_each_chunk(&mut out, g.nx, |c, row| {
            let slot = c / g.ny;
            let b = c % g.ny;
            let m = slot as i64 - h;
            let src_b = (b as i64 + db).rem_euclid(ny) as usize;
            let src = &self.data[slot * len + src_b * g.nx..slot * len + (src_b + 1) * g.nx];
            for (a, o) in row.iter_mut().enumerate() {
                let src_a = (a as i64 + da).rem_euclid(nx) as usize;
                *o = phase(m, src_b, a) * src[src_a];
            }
        });
        Self { grid: g, data: out }
    }

    /// `L_h F(g) = F(h^{-1} g)`.
    pub fn left_translate(&self, h: &HeisenbergPoint) -> Result<Self> {
        let (sy, sx) = self.shifts(h)?;
        let g = self.grid;
        let n = g.n as i64;
        let half_ny = (g.ny / 2) as i64;
        let th = h.theta();
        Ok(self.shifted(-sy, -sx, |m, src_b, _a| {
            // m x_h (y_src) = m sx (src_b - Ny/2) / N
            let r = (m * sx * (src_b as i64 - half_ny)).rem_euclid(n);
            cis_turns(frac(-(m as f64) * th) + r as f64 / n as f64)
        }))
    }

    /// `R_h F(g) = F(g h)`.
    pub fn right_translate(&self, h: &HeisenbergPoint) -> Result<Self> {
        let (sy, sx) = self.shifts(h)?;
        let g = self.grid;
        let n = g.n as i64;
        let half_nx = (g.nx / 2) as i64;
        let th = h.theta();
        Ok(self.shifted(sy, sx, |m, _src_b, a| {
            // m x y_h = m (a - Nx/2) sy / N
            let r = (-m * (a as i64 - half_nx) * sy).rem_euclid(n);
            cis_turns(frac(m as f64 * th) + r as f64 / n as f64)
        }))
    }

    /// `(PF, F - PF)`: the theta average and its complement.
    pub fn center_project(&self) -> (Self, Self) {
        let len = self.fiber_len();
        let zero_slot = self.grid.theta_samples / 2;
        let mut pf = vec![ZERO; self.data.len()];
        let mut kf = self.data.clone();
        pf[zero_slot * len..(zero_slot + 1) * len]
            .copy_from_slice(&self.data[zero_slot * len..(zero_slot + 1) * len]);
        kf[zero_slot * len..(zero_slot + 1) * len].fill(ZERO);
        (
            Self {
                grid: self.grid,
                data: pf,
            },
            Self {
                grid: self.grid,
                data: kf,
            },
        )
    }
}

/// One Gaussian bump per listed fiber with random amplitude, center
/// (`|y0|, |x0| < 0.3`) and width (`0.4..0.6`), drawn from `ChaCha8(seed)`.
pub fn gaussian_bumps(g: GridParams, fibers: &[i64], seed: u64) -> Result<HeisenbergField> {
    use rand::{Rng, SeedableRng};
    for &m in fibers {
        if !g.has_fiber(m) {
            return Err(LabError::FiberOutOfRange(m));
        }
    }
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(i64, Complex64, f64, f64, f64)> = fibers
        .iter()
        .map(|&m| {
            let c = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            (
                m,
                c,
                r.random_range(-0.3..0.3),
                r.random_range(-0.3..0.3),
                r.random_range(0.4..0.6),
            )
        })
        .collect();
    HeisenbergField::from_fiber_fn(g, move |m, y, x| {
        bumps
            .iter()
            .filter(|b| b.0 == m)
            .map(|&(_, c, y0, x0, s)| {
                let r2 = (y - y0).powi(2) + (x - x0).powi(2);
                c * (-std::f64::consts::PI * r2 / (s * s)).exp()
            })
            .sum()
    })
}

/// A finite combination `sum_j coeffs[j] X_{points[j]}` of translations.
#[derive(Debug, Clone, PartialEq)]
pub struct ComboSpec {
    points: Vec<HeisenbergPoint>,
    coeffs: Vec<Complex64>,
}

impl ComboSpec {
    pub fn new(points: Vec<HeisenbergPoint>, coeffs: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::EmptySystem);
        }
        if points.len() != coeffs.len() {
            return Err(LabError::LengthMismatch {
                expected: points.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().all(|c| *c == ZERO) {
            return Err(LabError::InvalidParameter(
                "all coefficients are zero".into(),
            ));
        }
        Ok(Self { points, coeffs })
    }

    /// Like [`ComboSpec::new`] but allows the all-zero combination.
    pub fn new_allow_zero(points: Vec<HeisenbergPoint>, coeffs: Vec<Complex64>) -> Result<Self> {
        if points.len() != coeffs.len() {
            return Err(LabError::LengthMismatch {
                expected: points.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { points, coeffs })
    }

    pub fn points(&self) -> &[HeisenbergPoint] {
        &self.points
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self {
            points: self.points.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            points: self.points.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `sum |c_j|`, the series bound for `exp(sum c_j R_{h_j})`.
    pub fn l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

/// `sum_j c_j L_{h_j} F`.
pub fn translate_combination(f: &HeisenbergField, spec: &ComboSpec) -> Result<HeisenbergField> {
    let mut acc = HeisenbergField::zeros(f.grid)?;
    for (h, c) in spec.points.iter().zip(&spec.coeffs) {
        acc.axpy(*c, &f.left_translate(h)?)?;
    }
    Ok(acc)
}

/// `|sum_j c_j L_{h_j} F|`.
pub fn translate_combo_residual(f: &HeisenbergField, spec: &ComboSpec) -> Result<f64> {
    Ok(translate_combination(f, spec)?.norm())
}

/// `sum_j c_j R_{h_j} F`.
pub fn right_combination(f: &HeisenbergField, spec: &ComboSpec) -> Result<HeisenbergField> {
    let mut acc = HeisenbergField::zeros(f.grid)?;
    for (h, c) in spec.points.iter().zip(&spec.coeffs) {
        acc.axpy(*c, &f.right_translate(h)?)?;
    }
    Ok(acc)
}

/// Default relative truncation for [`exp_right_apply`].
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

const MAX_SERIES_TERMS: usize = 4096;

/// `exp(sum_j c_j R_{h_j}) F` summed as a power series until a term drops
/// below `tol |F|`.
pub fn exp_right_apply(spec: &ComboSpec, f: &HeisenbergField, tol: f64) -> Result<HeisenbergField> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "series tolerance must be positive, got {tol}"
        )));
    }
    for h in &spec.points {
        f.grid.y_steps(h.y)?;
        f.grid.x_steps(h.x)?;
    }
    let stop = tol * f.norm();
    let mut sum = f.clone();
    let mut term = f.clone();
    for m in 1..MAX_SERIES_TERMS {
        if term.norm() <= stop {
            break;
        }
        term = right_combination(&term, spec)?.scaled(Complex64::new(1.0 / m as f64, 0.0));
        sum.axpy(Complex64::new(1.0, 0.0), &term)?;
    }
    Ok(sum)
}

/// Axis-aligned box `[lo, hi)` in each of theta, y and x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub theta: (f64, f64),
    pub y: (f64, f64),
    pub x: (f64, f64),
}

impl Region {
    /// Fiber `m` coefficient of the theta indicator: `int_lo^hi e^{-2 pi i m theta} dtheta`.
    fn theta_coefficient(&self, m: i64) -> Complex64 {
        let (lo, hi) = self.theta;
        if m == 0 {
            return Complex64::new(hi - lo, 0.0);
        }
        let two_pi_im = Complex64::new(0.0, std::f64::consts::TAU * m as f64);
        (cis_turns(-(m as f64) * lo) - cis_turns(-(m as f64) * hi)) / two_pi_im
    }

    fn contains_yx(&self, y: f64, x: f64) -> bool {
        y >= self.y.0 && y < self.y.1 && x >= self.x.0 && x < self.x.1
    }
}

/// Fiber-truncated indicator `1_K` of a box region.
pub fn region_indicator(region: &Region, g: GridParams) -> Result<HeisenbergField> {
    let (t0, t1) = region.theta;
    if !(0.0 <= t0 && t0 <= t1 && t1 <= 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "theta range [{t0}, {t1}) must lie in [0, 1]"
        )));
    }
    let f = HeisenbergField::from_fiber_fn(g, |m, y, x| {
        if region.contains_yx(y, x) {
            region.theta_coefficient(m)
        } else {
            ZERO
        }
    })?;
    if f.is_zero() {
        return Err(LabError::InvalidParameter("empty region".into()));
    }
    Ok(f)
}

/// `F = sum_{l=1..n} L_{z^l} 1_K` for `z = (1/n, 0, 0)` of order `n`, and the
/// witness `L_e F - L_z F = 0`.
///
/// The root-of-unity sum `sum_l e(-m l / n) = n [n | m]` is applied in closed
/// form, so fibers with `n` not dividing `m` are exactly zero.
pub fn rosenblatt_example(
    n: usize,
    region: &Region,
    g: GridParams,
) -> Result<(HeisenbergField, ComboSpec)> {
    g.validate()?;
    if n < 2 {
        return Err(LabError::InvalidParameter(format!(
            "center order must be at least 2, got {n}"
        )));
    }
    if !g.theta_samples.is_multiple_of(n) {
        return Err(LabError::CenterOrder {
            n,
            m: g.theta_samples,
        });
    }
    let base = region_indicator(region, g)?;
    let mut f = HeisenbergField::zeros(g)?;
    for m in g.fiber_range() {
        if m.rem_euclid(n as i64) == 0 {
            let src = base.fiber(m)?;
            for (o, v) in f.fiber_mut(m)?.iter_mut().zip(src) {
                *o = v * n as f64;
            }
        }
    }
    let witness = ComboSpec::new(
        vec![
            HeisenbergPoint::identity(),
            HeisenbergPoint::central(1.0 / n as f64),
        ],
        vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
    )?;
    Ok((f, witness))
}
