//! The representations `pi_k(z, y, x) = z^k M_{ky} T_x` on sampled signals,
//! finite Gabor systems and their numerical independence certificates.

use crate::error::{LabError, Result};
use crate::group::{distinct_cosets, GridParams, HeisenbergPoint};
use crate::par;
use crate::phase::cis_turns;
use crate::signal::SampledSignal;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default relative threshold for the independence verdict.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Lowest relative eigenvalue a Gram matrix assembled in double precision
/// can resolve; the "dependent" cut never drops below it.
pub const DEPENDENT_FLOOR: f64 = 1e-13;

fn signal_grid(phi: &SampledSignal) -> GridParams {
    GridParams {
        n: phi.len(),
        period: phi.period(),
        ..GridParams::default()
    }
}

/// `pi_k(h) phi`. `h.y` and `h.x` must be on the signal grids; `theta` is free.
pub fn apply_pi(k: i64, h: &HeisenbergPoint, phi: &SampledSignal) -> Result<SampledSignal> {
    if k == 0 {
        return Err(LabError::ZeroK);
    }
    let g = signal_grid(phi);
    let a = g.x_steps(h.x)?;
    let b = g.y_steps(h.y)?;
    Ok(apply_pi_steps(k, h.theta(), a, b, phi))
}

/// `pi_k` for a shift of `a` samples and a modulation of `b / L`.
pub(crate) fn apply_pi_steps(
    k: i64,
    theta: f64,
    a: i64,
    b: i64,
    phi: &SampledSignal,
) -> SampledSignal {
    let n = phi.len() as i64;
    let src = phi.values();
    let central = crate::phase::frac(k as f64 * theta);
    let kb = k * b;
    let values = (0..n)
        .map(|i| {
            let j = (i - a).rem_euclid(n) as usize;
            let r = ((i - n / 2) * kb).rem_euclid(n);
            src[j] * cis_turns(central + r as f64 / n as f64)
        })
        .collect();
    SampledSignal::new(values, phi.period()).expect("same grid as input")
}

/// `{pi_k(h) phi : h in points}`.
#[derive(Debug, Clone)]
pub struct GaborSystem {
    k: i64,
    phi: SampledSignal,
    points: Vec<HeisenbergPoint>,
    degenerate: bool,
}

impl GaborSystem {
    /// Points must already sit on the grid. Repeated cosets are accepted and
    /// flagged through [`GaborSystem::is_degenerate`].
    pub fn new(k: i64, phi: SampledSignal, points: Vec<HeisenbergPoint>) -> Result<Self> {
        if k == 0 {
            return Err(LabError::ZeroK);
        }
        if phi.is_zero() {
            return Err(LabError::ZeroSignal);
        }
        let g = signal_grid(&phi);
        for p in &points {
            g.x_steps(p.x)?;
            g.y_steps(p.y)?;
        }
        let degenerate = !distinct_cosets(&points, Some(&g))?;
        Ok(Self {
            k,
            phi,
            points,
            degenerate,
        })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn phi(&self) -> &SampledSignal {
        &self.phi
    }

    pub fn points(&self) -> &[HeisenbergPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn vectors(&self) -> Vec<SampledSignal> {
        par::map_range(self.points.len(), |j| {
            apply_pi(self.k, &self.points[j], &self.phi).expect("validated on construction")
        })
    }

    /// `sum_j coeffs[j] pi_k(h_j) phi`.
    pub fn combination(&self, coeffs: &[Complex64]) -> Result<SampledSignal> {
        if coeffs.len() != self.points.len() {
            return Err(LabError::LengthMismatch {
                expected: self.points.len(),
                got: coeffs.len(),
            });
        }
        let mut acc = SampledSignal::new(
            vec![Complex64::new(0.0, 0.0); self.phi.len()],
            self.phi.period(),
        )?;
        for (c, v) in coeffs.iter().zip(self.vectors()) {
            acc.axpy(*c, &v)?;
        }
        Ok(acc)
    }
}

/// `G[i][j] = <pi_k(h_i) phi, pi_k(h_j) phi>`.
pub fn gram(system: &GaborSystem) -> DMatrix<Complex64> {
    let vecs = system.vectors();
    let n = vecs.len();
    let rows = par::map_range(n, |i| {
        (0..n)
            .map(|j| crate::signal::inner(&vecs[i], &vecs[j]).expect("same grid"))
            .collect::<Vec<_>>()
    });
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// `|sum_j coeffs[j] pi_k(h_j) phi|`.
pub fn combo_residual(system: &GaborSystem, coeffs: &[Complex64]) -> Result<f64> {
    Ok(system.combination(coeffs)?.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Independent,
    Dependent,
    Borderline,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Independent => "independent",
            Verdict::Dependent => "dependent",
            Verdict::Borderline => "borderline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub verdict: Verdict,
    pub epsilon: f64,
    #[serde(
        skip_serializing_if = "Option::is_none",
        default,
        with = "crate::io::opt_complex_vec"
    )]
    pub null_coeffs: Option<Vec<Complex64>>,
}

/// Singular-value summary of a Hermitian PSD Gram matrix.
///
/// `independent` when `sigma_min > epsilon sigma_max`, `dependent` when
/// `sigma_min <= max(epsilon^2, DEPENDENT_FLOOR) sigma_max`, `borderline`
/// otherwise. Outside the independent case the report carries the
/// coefficients `c` minimizing `|sum c_j v_j|`; these are the conjugated
/// bottom eigenvector, since `|sum c_j v_j|^2 = conj(c)^H G conj(c)`.
pub fn independence_report(g: &DMatrix<Complex64>, epsilon: f64) -> Result<IndependenceReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = g.nrows();
    if n == 0 || g.ncols() != n {
        return Err(LabError::InvalidGram(format!(
            "expected a nonempty square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let scale = g.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((g[(i, j)] - g[(j, i)].conj()).norm());
        }
    }
    if asym > 1e-10 * scale || g.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LabError::InvalidGram(format!(
            "not Hermitian (asymmetry {asym:e})"
        )));
    }

    let eig = SymmetricEigen::new(g.clone());
    let sv: Vec<f64> = eig.eigenvalues.iter().map(|l| l.abs()).collect();
    let (imin, sigma_min) =
        sv.iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, s)| if s < acc.1 { (i, s) } else { acc },
            );
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);

    let verdict = if sigma_min > epsilon * sigma_max {
        Verdict::Independent
    } else if sigma_min <= (epsilon * epsilon).max(DEPENDENT_FLOOR) * sigma_max {
        Verdict::Dependent
    } else {
        Verdict::Borderline
    };

    let null_coeffs = match verdict {
        Verdict::Independent => None,
        _ => {
            let v: Vec<Complex64> = eig
                .eigenvectors
                .column(imin)
                .iter()
                .map(|c| c.conj())
                .collect();
            Some(normalize_phase(v))
        }
    };

    Ok(IndependenceReport {
        sigma_min,
        sigma_max,
        verdict,
        epsilon,
        null_coeffs,
    })
}

/// Unit 2-norm, largest entry (first on ties) real and positive.
fn normalize_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return v;
    }
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let rot = v[best].conj() / v[best].norm();
    for c in v.iter_mut() {
        *c = *c * rot / nrm;
    }
    v[best].im = 0.0;
    v
}

/// Gram, report and system in one call.
pub fn certify(system: &GaborSystem, epsilon: f64) -> Result<IndependenceReport> {
    independence_report(&gram(system), epsilon)
}
