//! The oscillatory integral
//!
//! ```text
//! F(y, x) = int_{1/3}^{2/3} exp(i (x arccos t + y arccos(1 - t))) dt
//! ```
//!
//! which satisfies `2F(y,x) = F(y,x+1) + F(y,x-1) + F(y+1,x) + F(y-1,x)`, read
//! as a five-point translate relation on `H/Z`.

use crate::error::{LabError, Result};
use crate::field::ComboSpec;
use crate::group::HeisenbergPoint;
use crate::par;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default number of Gauss-Legendre nodes.
pub const DEFAULT_NODES: usize = 64;

/// Integration interval of the integral.
pub const INTERVAL: (f64, f64) = (1.0 / 3.0, 2.0 / 3.0);

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Legendre `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl QuadratureRule {
    /// `n`-point Gauss-Legendre rule on `[a, b]`, with nodes mirrored exactly
    /// about the midpoint.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidParameter(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "bad interval [{a}, {b}]"
            )));
        }
        let mut xi = vec![0.0; n];
        let mut wi = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            xi[i] = -x;
            xi[n - 1 - i] = x;
            wi[i] = w;
            wi[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            xi[n / 2] = 0.0;
        }
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        Ok(Self {
            nodes: xi.iter().map(|x| c + h * x).collect(),
            weights: wi.iter().map(|w| h * w).collect(),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_NODES, INTERVAL.0, INTERVAL.1).expect("valid rule")
    }
}

/// Precomputed phases `(w_j, arccos t_j, arccos(1 - t_j))` for repeated evaluation.
#[derive(Debug, Clone)]
pub struct EdgarFunction {
    terms: Vec<(f64, f64, f64)>,
}

impl EdgarFunction {
    pub fn new(rule: &QuadratureRule) -> Self {
        Self {
            terms: rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(t, w)| (*w, t.acos(), (1.0 - t).acos()))
                .collect(),
        }
    }

    pub fn eval(&self, y: f64, x: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(w, alpha, beta) in &self.terms {
            let (s, c) = (x * alpha + y * beta).sin_cos();
            acc += Complex64::new(w * c, w * s);
        }
        acc
    }

    /// `|sum_j c_j F(y - y_j, x - x_j)|`, i.e. `sum c_j L_{h_j} F` at `(y, x)`.
    pub fn combo_residual(&self, spec: &ComboSpec, y: f64, x: f64) -> f64 {
        spec.points()
            .iter()
            .zip(spec.coeffs())
            .map(|(h, c)| c * self.eval(y - h.y, x - h.x))
            .sum::<Complex64>()
            .norm()
    }
}

pub fn edgar_eval(y: f64, x: f64, rule: &QuadratureRule) -> Complex64 {
    EdgarFunction::new(rule).eval(y, x)
}

/// `|2F(y,x) - F(y,x+1) - F(y,x-1) - F(y+1,x) - F(y-1,x)|`.
pub fn difference_residual(y: f64, x: f64, rule: &QuadratureRule) -> f64 {
    let f = EdgarFunction::new(rule);
    (f.eval(y, x) * 2.0
        - f.eval(y, x + 1.0)
        - f.eval(y, x - 1.0)
        - f.eval(y + 1.0, x)
        - f.eval(y - 1.0, x))
    .norm()
}

/// Points `(0,0), (0,±1), (±1,0)` in `(y, x)` with coefficients `(2, -1, -1, -1, -1)`.
pub fn dependence_witness() -> ComboSpec {
    let pts = [(0.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 0.0), (-1.0, 0.0)];
    let coeffs = [2.0, -1.0, -1.0, -1.0, -1.0];
    ComboSpec::new(
        pts.iter()
            .map(|&(y, x)| HeisenbergPoint::new(0.0, y, x))
            .collect(),
        coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
    )
    .expect("fixed witness is valid")
}

/// Largest `|y|, |x|` at which a rule of this size is trusted (about 1e-14
/// agreement with a 4x finer rule for at least 32 nodes).
pub fn radius_cap(rule: &QuadratureRule) -> f64 {
    3.0 * rule.len() as f64
}

fn check_lp_args(p: f64, r: f64, h: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "p must be >= 1, got {p}"
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "R must be positive, got {r}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(LabError::InvalidParameter(format!(
            "step must be positive, got {h}"
        )));
    }
    Ok(())
}

/// Row-major `|F|` on the midpoint lattice `((i + 1/2) h, (j + 1/2) h)`,
/// `-m <= i, j < m`.
///
/// Each row is `sum_j (w_j e^{i y beta_j}) e^{i x alpha_j}`, a vector-matrix
/// product against a table of `e^{i x alpha_j}`. Rows with `y < 0` are the
/// reversed rows at `-y`, since `|F(-y, -x)| = |F(y, x)|`.
fn abs_grid(f: &EdgarFunction, m: usize, h: f64) -> Vec<Vec<f64>> {
    let coord = |i: usize| (i as f64 - m as f64 + 0.5) * h;
    let cols = 2 * m;
    let nodes = f.terms.len();
    let mut tab_re = vec![0.0; nodes * cols];
    let mut tab_im = vec![0.0; nodes * cols];
    for (j, &(_, alpha, _)) in f.terms.iter().enumerate() {
        for ix in 0..cols {
            let (s, c) = (coord(ix) * alpha).sin_cos();
            tab_re[j * cols + ix] = c;
            tab_im[j * cols + ix] = s;
        }
    }
    let upper = par::map_range(m, |r| {
        let y = coord(m + r);
        let mut re = vec![0.0; cols];
        let mut im = vec![0.0; cols];
        for (j, &(w, _, beta)) in f.terms.iter().enumerate() {
            let (s, c) = (y * beta).sin_cos();
            let (ar, ai) = (w * c, w * s);
            let br = &tab_re[j * cols..(j + 1) * cols];
            let bi = &tab_im[j * cols..(j + 1) * cols];
            for x in 0..cols {
                re[x] += ar * br[x] - ai * bi[x];
                im[x] += ar * bi[x] + ai * br[x];
            }
        }
        re.iter()
            .zip(&im)
            .map(|(a, b)| a.hypot(*b))
            .collect::<Vec<f64>>()
    });
    let mut out: Vec<Vec<f64>> = upper
        .iter()
        .rev()
        .map(|row| row.iter().rev().copied().collect())
        .collect();
    out.extend(upper);
    out
}

/// Midpoint sum of `|F|^p` over `[-R, R]^2` with step `h`. The lattice is
/// `(i + 1/2) h`, so sums for radii that are multiples of `h` are nested.
pub fn lp_partial(p: f64, r: f64, h: f64, rule: &QuadratureRule) -> Result<f64> {
    Ok(lp_sweep(&[p], &[r], h, rule)?.series[0].partial[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSeries {
    pub p: f64,
    pub partial: Vec<f64>,
    /// `partial[i + 1] - partial[i]`.
    pub increments: Vec<f64>,
    /// `increments[i + 1] / increments[i]`.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSweepReport {
    pub step: f64,
    pub nodes: usize,
    pub radius_cap: f64,
    pub capped: bool,
    pub radii: Vec<f64>,
    pub series: Vec<LpSeries>,
}

/// `lp_partial` for every `p` and (ascending) radius, from one grid evaluation.
/// Radii beyond [`radius_cap`] are clamped and `capped` is set.
pub fn lp_sweep(
    p_values: &[f64],
    radii: &[f64],
    h: f64,
    rule: &QuadratureRule,
) -> Result<LpSweepReport> {
    if p_values.is_empty() || radii.is_empty() {
        return Err(LabError::InvalidParameter("empty p or radius list".into()));
    }
    for &p in p_values {
        for &r in radii {
            check_lp_args(p, r, h)?;
        }
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(LabError::InvalidParameter("radii must be ascending".into()));
    }
    let cap = radius_cap(rule);
    let capped = radii.iter().any(|&r| r > cap);
    let radii: Vec<f64> = radii.iter().map(|&r| r.min(cap)).collect();
    // half-widths in lattice cells
    let cells: Vec<usize> = radii
        .iter()
        .map(|&r| (r / h + 1e-9).floor() as usize)
        .collect();
    let m = *cells.last().expect("nonempty");
    let f = EdgarFunction::new(rule);
    let grid = abs_grid(&f, m, h);
    let area = h * h;
    let series = p_values
        .iter()
        .map(|&p| {
            // ring sums between consecutive radii, accumulated in a fixed order
            let mut partial = Vec::with_capacity(cells.len());
            let mut total = 0.0;
            let mut inner = 0usize;
            for &c in &cells {
                let mut ring = 0.0;
                for (iy, row) in grid.iter().enumerate() {
                    let ry = ring_index(iy, m);
                    if ry >= c {
                        continue;
                    }
                    for (ix, v) in row.iter().enumerate() {
                        let rx = ring_index(ix, m);
                        if rx >= c {
                            continue;
                        }
                        if ry.max(rx) >= inner {
                            ring += v.powf(p);
                        }
                    }
                }
                total += ring * area;
                partial.push(total);
                inner = c;
            }
            let increments: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
            let ratios = increments.windows(2).map(|w| w[1] / w[0]).collect();
            LpSeries {
                p,
                partial,
                increments,
                ratios,
            }
        })
        .collect();
    Ok(LpSweepReport {
        step: h,
        nodes: rule.len(),
        radius_cap: cap,
        capped,
        radii,
        series,
    })
}

/// Cell `i` of `0..2m` lies in the square of half-width `c` cells iff the
/// returned index is `< c`.
fn ring_index(i: usize, m: usize) -> usize {
    if i >= m {
        i - m
    } else {
        m - 1 - i
    }
}

/// CSV `y,x,re,im,abs` on `{-R + i step}^2`, rows by y then x.
pub fn edgar_grid_csv(radius: f64, step: f64, rule: &QuadratureRule) -> Result<String> {
    check_lp_args(1.0, radius, step)?;
    let count = (2.0 * radius / step + 1e-9).floor() as usize + 1;
    let f = EdgarFunction::new(rule);
    let coord = |i: usize| -radius + i as f64 * step;
    let rows = par::map_range(count, |iy| {
        let y = coord(iy);
        let mut s = String::new();
        for ix in 0..count {
            let x = coord(ix);
            let v = f.eval(y, x);
            s.push_str(&format!("{y},{x},{},{},{}\n", v.re, v.im, v.norm()));
        }
        s
    });
    let mut out = String::from("y,x,re,im,abs\n");
    for r in rows {
        out.push_str(&r);
    }
    Ok(out)
}
