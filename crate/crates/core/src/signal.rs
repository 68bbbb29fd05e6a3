//! Periodic sampled signals standing in for `L^2(R)`.
//!
//! Samples live at `t_i = -L/2 + i dx`, `dx = L/N`. Translations are integer
//! index shifts and modulations are multiplications by exact roots of unity,
//! so both are exactly unitary and the commutation relation
//! `T_x M_y = exp(-2 pi i x y) M_y T_x` holds to roundoff.

use crate::error::{LabError, Result};
use crate::group::GridParams;
use crate::phase::cis_ratio;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    values: Vec<Complex64>,
    period: f64,
}

impl SampledSignal {
    pub fn new(values: Vec<Complex64>, period: f64) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(LabError::InvalidGrid(format!(
                "signal length must be positive and even, got {}",
                values.len()
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(LabError::InvalidGrid(format!("bad period {period}")));
        }
        Ok(Self { values, period })
    }

    pub fn zeros(g: &GridParams) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); g.n],
            period: g.period,
        }
    }

    pub fn from_fn(g: &GridParams, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..g.n).map(|i| f(g.t(i))).collect();
        Self {
            values,
            period: g.period,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dx(&self) -> f64 {
        self.period / self.values.len() as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        -0.5 * self.period + i as f64 * self.dx()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dx() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            period: self.period,
        }
    }

    /// Unit-norm copy; errors on the zero signal.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(LabError::ZeroSignal);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len() && self.period == other.period
    }

    pub fn check_grid(&self, g: &GridParams) -> Result<()> {
        if self.values.len() != g.n || self.period != g.period {
            return Err(LabError::GridMismatch(format!(
                "signal (N={}, L={}) vs grid (N={}, L={})",
                self.values.len(),
                self.period,
                g.n,
                g.period
            )));
        }
        Ok(())
    }

    fn grid(&self) -> GridParams {
        GridParams {
            n: self.values.len(),
            period: self.period,
            ..GridParams::default()
        }
    }

    /// Circular shift by `s` samples: `out[i] = in[i - s]`.
    pub fn translate_steps(&self, s: i64) -> Self {
        let n = self.values.len();
        let s = s.rem_euclid(n as i64) as usize;
        let mut values = Vec::with_capacity(n);
        values.extend_from_slice(&self.values[n - s..]);
        values.extend_from_slice(&self.values[..n - s]);
        Self {
            values,
            period: self.period,
        }
    }

    /// Multiply by `exp(2 pi i t_i b / L)`.
    pub fn modulate_steps(&self, b: i64) -> Self {
        let n = self.values.len() as i64;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * cis_ratio((i as i64 - n / 2) * b, n))
            .collect();
        Self {
            values,
            period: self.period,
        }
    }

    /// `T_x`, for `x` a multiple of `dx`.
    pub fn translate(&self, x: f64) -> Result<Self> {
        let s = self.grid().x_steps(x)?;
        Ok(self.translate_steps(s))
    }

    /// `M_y`, for `y` a multiple of `1/L`.
    pub fn modulate(&self, y: f64) -> Result<Self> {
        let b = self.grid().y_steps(y)?;
        Ok(self.modulate_steps(b))
    }

    /// `self += c * other` on matching grids.
    pub fn axpy(&mut self, c: Complex64, other: &Self) -> Result<()> {
        if !self.same_grid(other) {
            return Err(LabError::GridMismatch("axpy".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }
}

/// `<psi, phi> = dx sum psi_i conj(phi_i)`, linear in the first argument.
pub fn inner(psi: &SampledSignal, phi: &SampledSignal) -> Result<Complex64> {
    if !psi.same_grid(phi) {
        return Err(LabError::GridMismatch(format!(
            "inner: N {} vs {}, L {} vs {}",
            psi.len(),
            phi.len(),
            psi.period,
            phi.period
        )));
    }
    let s: Complex64 = psi
        .values
        .iter()
        .zip(&phi.values)
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(s * psi.dx())
}

/// `|T_x M_y phi - exp(-2 pi i x y) M_y T_x phi| / |phi|`.
pub fn ccr_residual(phi: &SampledSignal, x: f64, y: f64) -> Result<f64> {
    let g = phi.grid();
    let a = g.x_steps(x)?;
    let b = g.y_steps(y)?;
    let nrm = phi.norm();
    if nrm == 0.0 {
        return Err(LabError::ZeroSignal);
    }
    let lhs = phi.modulate_steps(b).translate_steps(a);
    // x y = a b / N exactly on these grids
    let c = cis_ratio(-(a * b), phi.len() as i64);
    let rhs = phi.translate_steps(a).modulate_steps(b);
    let diff: f64 = lhs
        .values
        .iter()
        .zip(&rhs.values)
        .map(|(l, r)| (l - c * r).norm_sqr())
        .sum::<f64>()
        * phi.dx();
    Ok(diff.sqrt() / nrm)
}

/// Test-vector factory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    /// `exp(-pi ((t - center)/width)^2)`.
    Gaussian { center: f64, width: f64 },
    /// `1` on `[a, b)`.
    Indicator { a: f64, b: f64 },
    /// One-sided Gaussian tail `exp(-pi (t - a)^2 / 4)` on `t >= a`, zero before.
    HalfLine { a: f64 },
    /// I.i.d. complex normal samples from `ChaCha8Rng::seed_from_u64(seed)`.
    Random { seed: u64 },
}

pub fn make_signal(kind: SignalKind, g: &GridParams) -> Result<SampledSignal> {
    g.validate()?;
    let lo = -0.5 * g.period;
    let hi = 0.5 * g.period;
    let inside = |v: f64, name: &str| {
        if v.is_finite() && v >= lo && v <= hi {
            Ok(())
        } else {
            Err(LabError::InvalidParameter(format!(
                "{name} = {v} outside [{lo}, {hi}]"
            )))
        }
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    match kind {
        SignalKind::Gaussian { center, width } => {
            inside(center, "center")?;
            if !(width.is_finite() && width > 0.0) {
                return Err(LabError::InvalidParameter(format!(
                    "gaussian width must be positive, got {width}"
                )));
            }
            Ok(SampledSignal::from_fn(g, |t| {
                let u = (t - center) / width;
                Complex64::new((-std::f64::consts::PI * u * u).exp(), 0.0)
            }))
        }
        SignalKind::Indicator { a, b } => {
            inside(a, "a")?;
            inside(b, "b")?;
            if a > b {
                return Err(LabError::InvalidParameter(format!(
                    "indicator interval [{a}, {b}) is reversed"
                )));
            }
            Ok(SampledSignal::from_fn(g, |t| {
                if t >= a && t < b {
                    one
                } else {
                    zero
                }
            }))
        }
        SignalKind::HalfLine { a } => {
            inside(a, "a")?;
            if a >= hi {
                return Err(LabError::InvalidParameter(
                    "half-line start leaves no samples".into(),
                ));
            }
            Ok(SampledSignal::from_fn(g, |t| {
                if t >= a {
                    let u = t - a;
                    Complex64::new((-std::f64::consts::PI * u * u / 4.0).exp(), 0.0)
                } else {
                    zero
                }
            }))
        }
        SignalKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..g.n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect();
            SampledSignal::new(values, g.period)
        }
    }
}
