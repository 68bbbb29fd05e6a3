//! Matrix-coefficient fields, `pi_k(F)` as an integral operator, and the
//! transfer between translate relations on fields and Gabor relations.
//!
//! Conventions. Fields are `F = sum_m F_m(y, x) e(m theta)` with
//! `e(t) = exp(2 pi i t)`, so `pi_k(F)` only sees the fiber `G = F_{-k}`:
//!
//! ```text
//! (pi_k(F) phi)(t) = int K(t, x') phi(x') dx',   K(t, x') = G^(-k t, t - x'),
//! G^(eta, x) = int G(y, x) e(-y eta) dy.
//! ```
//!
//! On the grid the y transform is a direct sum at `eta = -k t_i`. The sum is
//! `L`-periodic in `eta`, so rows with `eta` outside `[-L/2, L/2)` are set to
//! zero (they would be aliases), and `t_i - x_j` is taken circularly in the
//! signal index with the field treated as zero outside its x box.

use crate::error::{LabError, Result};
use crate::field::{translate_combination, ComboSpec, HeisenbergField};
use crate::group::{GridParams, HeisenbergPoint};
use crate::par;
use crate::phase::{cis_ratio, cis_turns, frac};
use crate::repr::{combo_residual, GaborSystem};
use crate::signal::SampledSignal;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default relative slack for the continuum-limit transfer bounds.
pub const DEFAULT_TRANSFER_TOL: f64 = 1e-3;

/// Absolute slack (times the natural scale) for bounds that are `0 <= 0`
/// up to roundoff.
const ROUNDOFF_FLOOR: f64 = 1e-12;

const POWER_ITERS: usize = 500;

fn check_k(k: i64) -> Result<()> {
    if k == 0 {
        Err(LabError::ZeroK)
    } else {
        Ok(())
    }
}

/// Fiber index read by `pi_k`.
fn fiber_for(k: i64, g: &GridParams) -> Result<i64> {
    check_k(k)?;
    if !g.has_fiber(-k) {
        return Err(LabError::FiberOutOfRange(-k));
    }
    Ok(-k)
}

/// `k` values whose fiber `-k` is stored: `-M/2 + 1 ..= M/2`, without 0.
pub fn k_range(g: &GridParams) -> Vec<i64> {
    let h = (g.theta_samples / 2) as i64;
    (-h + 1..=h).filter(|&k| k != 0).collect()
}

/// `F(h) = <psi, pi_k(h) phi>` on the field grid. Only fiber `-k` is nonzero;
/// each x column is one length-`N` FFT of `psi_i conj(phi_{i - s})`.
pub fn matrix_coefficient_field(
    psi: &SampledSignal,
    phi: &SampledSignal,
    k: i64,
    g: &GridParams,
) -> Result<HeisenbergField> {
    let m = fiber_for(k, g)?;
    psi.check_grid(g)?;
    phi.check_grid(g)?;
    let n = g.n;
    let (ny, nx) = (g.ny, g.nx);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let (ps, ph) = (psi.values(), phi.values());
    let dx = g.dx();
    let cols = par::map_range(nx, |a| {
        let s = a as i64 - (nx / 2) as i64;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| ps[i] * ph[(i as i64 - s).rem_euclid(n as i64) as usize].conj())
            .collect();
        fft.process(&mut buf);
        (0..ny)
            .map(|b| {
                let q = k * (b as i64 - (ny / 2) as i64);
                let sign = if q.rem_euclid(2) == 0 { dx } else { -dx };
                buf[q.rem_euclid(n as i64) as usize] * sign
            })
            .collect::<Vec<_>>()
    });
    let mut f = HeisenbergField::zeros(*g)?;
    let fib = f.fiber_mut(m)?;
    for (a, col) in cols.iter().enumerate() {
        for (b, v) in col.iter().enumerate() {
            fib[b * nx + a] = *v;
        }
    }
    Ok(f)
}

/// Discretized integral operator: `(K phi)_i = dx sum_j K[i][j] phi_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    n: usize,
    dx: f64,
    period: f64,
    k: i64,
    data: Vec<Complex64>,
}

impl KernelOperator {
    /// Row-major `n x n` kernel on a signal grid of period `period`.
    pub fn from_rows(k: i64, period: f64, n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(LabError::LengthMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if n == 0 || !(period.is_finite() && period > 0.0) {
            return Err(LabError::InvalidGrid(format!("n = {n}, period = {period}")));
        }
        Ok(Self {
            n,
            dx: period / n as f64,
            period,
            k,
            data,
        })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == ZERO)
    }

    fn check_signal(&self, phi: &SampledSignal) -> Result<()> {
        if phi.len() != self.n || phi.period() != self.period {
            return Err(LabError::GridMismatch(format!(
                "kernel N = {}, L = {}; signal N = {}, L = {}",
                self.n,
                self.period,
                phi.len(),
                phi.period()
            )));
        }
        Ok(())
    }

    /// `(K^* psi)_j = dx sum_i conj(K[i][j]) psi_i`.
    fn apply_adjoint(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![ZERO; n];
        for (i, p) in psi.iter().enumerate() {
            if *p == ZERO {
                continue;
            }
            for (o, kv) in out.iter_mut().zip(&self.data[i * n..(i + 1) * n]) {
                *o += kv.conj() * p;
            }
        }
        out.iter_mut().for_each(|v| *v *= self.dx);
        out
    }

    fn apply_raw(&self, phi: &[Complex64]) -> Vec<Complex64> {
        par::map_range(self.n, |i| {
            self.row(i)
                .iter()
                .zip(phi)
                .map(|(a, b)| a * b)
                .sum::<Complex64>()
                * self.dx
        })
    }
}

/// `K[i][j] = G^(-k t_i, t_i - x_j)` for `G = F_{-k}`, band-limited in `eta`.
pub fn kernel_of(f: &HeisenbergField, k: i64) -> Result<KernelOperator> {
    let g = *f.grid();
    let m = fiber_for(k, &g)?;
    let fib = f.fiber(m)?;
    let (n, ny, nx) = (g.n as i64, g.ny, g.nx);
    let dy = g.dy();
    let rows = par::map_range(g.n, |i| {
        let ii = i as i64 - n / 2;
        // eta N / L = -k (i - N/2) must lie in [-N/2, N/2)
        let eta = -k * ii;
        if eta < -n / 2 || eta >= n / 2 {
            return vec![ZERO; g.n];
        }
        let phases: Vec<Complex64> = (0..ny)
            .map(|b| cis_ratio(k * (b as i64 - (ny / 2) as i64) * ii, n))
            .collect();
        // G^ at eta_i for every x column
        let mut ghat = vec![ZERO; nx];
        for (b, ph) in phases.iter().enumerate() {
            for (o, v) in ghat.iter_mut().zip(&fib[b * nx..(b + 1) * nx]) {
                *o += v * ph;
            }
        }
        ghat.iter_mut().for_each(|v| *v *= dy);
        (0..n)
            .map(|j| {
                let d = (ii - (j - n / 2) + n / 2).rem_euclid(n) - n / 2;
                let a = d + (nx / 2) as i64;
                if a >= 0 && (a as usize) < nx {
                    ghat[a as usize]
                } else {
                    ZERO
                }
            })
            .collect::<Vec<_>>()
    });
    KernelOperator::from_rows(k, g.period, g.n, rows.concat())
}

pub fn apply_kernel(kernel: &KernelOperator, phi: &SampledSignal) -> Result<SampledSignal> {
    kernel.check_signal(phi)?;
    SampledSignal::new(kernel.apply_raw(phi.values()), kernel.period)
}

/// `dx sqrt(sum |K|^2)`.
pub fn hs_norm(kernel: &KernelOperator) -> f64 {
    let rows = par::map_range(kernel.n, |i| {
        kernel.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>()
    });
    kernel.dx * rows.iter().sum::<f64>().sqrt()
}

/// `sqrt(|k|^-1 dy dx sum |F_{-k}|^2)`.
pub fn hs_norm_via_fiber(f: &HeisenbergField, k: i64) -> Result<f64> {
    let m = fiber_for(k, f.grid())?;
    Ok((f.fiber_norm_sq(m)? / k.unsigned_abs() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberTerm {
    pub k: i64,
    pub hs_norm: f64,
    pub hs_norm_via_fiber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlancherelReport {
    pub kmax: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub fibers: Vec<FiberTerm>,
}

/// `|F|^2` against `sum_{0 < |k| <= kmax} |k| |pi_k(F)|_HS^2` for `F` in `ker P`.
pub fn plancherel_check(f: &HeisenbergField, kmax: i64) -> Result<PlancherelReport> {
    let g = f.grid();
    let half = (g.theta_samples / 2) as i64;
    if kmax < 1 || kmax > half {
        return Err(LabError::InvalidParameter(format!(
            "kmax must lie in 1..={half}, got {kmax}"
        )));
    }
    let lhs = f.norm_sq();
    if f.fiber_norm_sq(0)?.sqrt() > 1e-12 * lhs.sqrt().max(1.0) {
        return Err(LabError::NotInKernel(f.fiber_norm_sq(0)?.sqrt()));
    }
    let ks: Vec<i64> = k_range(g).into_iter().filter(|k| k.abs() <= kmax).collect();
    let mut fibers = Vec::with_capacity(ks.len());
    for &k in &ks {
        fibers.push(FiberTerm {
            k,
            hs_norm: hs_norm(&kernel_of(f, k)?),
            hs_norm_via_fiber: hs_norm_via_fiber(f, k)?,
        });
    }
    let rhs: f64 = fibers
        .iter()
        .map(|t| t.k.abs() as f64 * t.hs_norm * t.hs_norm)
        .sum();
    let rel_err = if lhs == 0.0 {
        if rhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (lhs - rhs).abs() / lhs
    };
    Ok(PlancherelReport {
        kmax,
        lhs,
        rhs,
        rel_err,
        fibers,
    })
}

/// `pi_k(h)` acting on the left index of a kernel.
pub fn left_act(kernel: &KernelOperator, h: &HeisenbergPoint) -> Result<KernelOperator> {
    let g = GridParams {
        n: kernel.n,
        period: kernel.period,
        ..GridParams::default()
    };
    let a = g.x_steps(h.x)?;
    let b = g.y_steps(h.y)?;
    let n = kernel.n as i64;
    let k = kernel.k;
    let central = frac(k as f64 * h.theta());
    let rows = par::map_range(kernel.n, |i| {
        let src = (i as i64 - a).rem_euclid(n) as usize;
        let r = ((i as i64 - n / 2) * k * b).rem_euclid(n);
        let c = cis_turns(central + r as f64 / n as f64);
        kernel.row(src).iter().map(|v| v * c).collect::<Vec<_>>()
    });
    KernelOperator::from_rows(k, kernel.period, kernel.n, rows.concat())
}

/// `|K(L_h F) - pi_k(h) K(F)|_HS / |K(F)|_HS`.
pub fn intertwine_residual(f: &HeisenbergField, h: &HeisenbergPoint, k: i64) -> Result<f64> {
    let base = kernel_of(f, k)?;
    let nrm = hs_norm(&base);
    if nrm == 0.0 {
        return Err(LabError::DegenerateField);
    }
    let moved = kernel_of(&f.left_translate(h)?, k)?;
    let acted = left_act(&base, h)?;
    let diff: Vec<Complex64> = moved
        .data
        .iter()
        .zip(&acted.data)
        .map(|(a, b)| a - b)
        .collect();
    let d = KernelOperator::from_rows(k, base.period, base.n, diff)?;
    Ok(hs_norm(&d) / nrm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoyalReport {
    pub k: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        lhs.abs()
    } else {
        (lhs - rhs).abs() / rhs.abs()
    }
}

/// `dy dx sum_{(y, x)} |<g, M_{ky} T_x f>|^2` against `|k|^-1 |f|^2 |g|^2`.
pub fn moyal_check(
    f: &SampledSignal,
    g_sig: &SampledSignal,
    k: i64,
    grid: &GridParams,
) -> Result<MoyalReport> {
    let field = matrix_coefficient_field(g_sig, f, k, grid)?;
    let lhs = field.norm_sq();
    let rhs = f.norm_sq() * g_sig.norm_sq() / k.unsigned_abs() as f64;
    Ok(MoyalReport {
        k,
        lhs,
        rhs,
        rel_err: rel(lhs, rhs),
    })
}

/// Finite-model identity over all of `Z_N x Z_N` with unit weights:
/// `sum_{a, b} |<g, M_b T_a f>|^2 = N |f|^2 |g|^2`. Reported with `k = 1`.
pub fn moyal_finite(f: &SampledSignal, g_sig: &SampledSignal) -> Result<MoyalReport> {
    if !f.same_grid(g_sig) {
        return Err(LabError::GridMismatch("moyal_finite".into()));
    }
    let n = f.len();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let (fv, gv) = (f.values(), g_sig.values());
    let per_shift = par::map_range(n, |a| {
        let mut buf: Vec<Complex64> = (0..n).map(|i| gv[i] * fv[(i + n - a) % n].conj()).collect();
        fft.process(&mut buf);
        buf.iter().map(|v| v.norm_sqr()).sum::<f64>()
    });
    let lhs: f64 = per_shift.iter().sum();
    let unit = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let rhs = n as f64 * unit(fv) * unit(gv);
    Ok(MoyalReport {
        k: 1,
        lhs,
        rhs,
        rel_err: rel(lhs, rhs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardReport {
    pub k: i64,
    pub phi_norm: f64,
    pub r_gabor: f64,
    pub r_translate: f64,
    pub bound: f64,
    pub tol: f64,
    pub satisfied: bool,
}

/// Builds `F = <phi, pi_k(.) phi>` and checks
/// `|sum c_j L_{h_j} F| <= |k|^-1/2 |sum c_j pi_k(h_j) phi| |phi|`.
pub fn transfer_forward(
    system: &GaborSystem,
    coeffs: &[Complex64],
    g: &GridParams,
    tol: f64,
) -> Result<ForwardReport> {
    let k = system.k();
    let phi = system.phi();
    let f = matrix_coefficient_field(phi, phi, k, g)?;
    let r_gabor = combo_residual(system, coeffs)?;
    let spec = ComboSpec::new_allow_zero(system.points().to_vec(), coeffs.to_vec())?;
    let r_translate = translate_combination(&f, &spec)?.norm();
    let phi_norm = phi.norm();
    let bound = r_gabor * phi_norm / (k.unsigned_abs() as f64).sqrt();
    let satisfied = r_translate <= bound * (1.0 + tol) + ROUNDOFF_FLOOR * phi_norm * phi_norm;
    Ok(ForwardReport {
        k,
        phi_norm,
        r_gabor,
        r_translate,
        bound,
        tol,
        satisfied,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardReport {
    pub k_star: i64,
    pub sigma_max: f64,
    pub psi_norm: f64,
    pub r_translate: f64,
    pub r_gabor: f64,
    pub bound: f64,
    pub tol: f64,
    pub satisfied: bool,
}

/// Result of [`transfer_backward`] with the chosen vectors.
#[derive(Debug, Clone)]
pub struct BackwardTransfer {
    pub report: BackwardReport,
    pub phi: SampledSignal,
    pub psi: SampledSignal,
}

/// Largest singular value and a unit right-singular vector, by power
/// iteration on `K^* K` from a fixed start.
pub fn top_singular(kernel: &KernelOperator) -> (f64, Vec<Complex64>) {
    let n = kernel.n;
    let norm = |v: &[Complex64]| (kernel.dx * v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            Complex64::new(1.0 + 0.5 * (7.0 * t).sin(), 0.25 * (13.0 * t).cos())
        })
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|c| *c /= s);
    let mut sigma2 = 0.0;
    for _ in 0..POWER_ITERS {
        let w = kernel.apply_adjoint(&kernel.apply_raw(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return (0.0, v);
        }
        let next: Vec<Complex64> = w.iter().map(|c| c / nw).collect();
        let done = (nw - sigma2).abs() <= 1e-15 * nw;
        sigma2 = nw;
        v = next;
        if done {
            break;
        }
    }
    (norm(&kernel.apply_raw(&v)), v)
}

/// Chooses `k*` with the largest fiber HS norm (ties: smaller `|k|`, then
/// positive), `phi` its top right-singular vector, `psi = pi_{k*}(F) phi`, and
/// checks `|sum c_j pi_{k*}(h_j) psi| <= |k*|^-1/2 |sum c_j L_{h_j} F|`.
pub fn transfer_backward(
    f: &HeisenbergField,
    spec: &ComboSpec,
    tol: f64,
) -> Result<BackwardTransfer> {
    let (_, kf) = f.center_project();
    let g = *f.grid();
    let mut best: Option<(i64, f64)> = None;
    let mut ks = k_range(&g);
    ks.sort_by_key(|&k| (k.abs(), -k));
    for k in ks {
        let v = hs_norm_via_fiber(&kf, k)?;
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    let (k_star, _) = best.ok_or(LabError::AllFibersZero)?;
    let kernel = kernel_of(&kf, k_star)?;
    let (sigma_max, v) = top_singular(&kernel);
    let phi = SampledSignal::new(v, g.period)?;
    let psi = apply_kernel(&kernel, &phi)?;
    let r_translate = translate_combination(f, spec)?.norm();
    let system = GaborSystem::new(k_star, psi.clone(), spec.points().to_vec())?;
    let r_gabor = combo_residual(&system, spec.coeffs())?;
    let bound = r_translate / (k_star.unsigned_abs() as f64).sqrt();
    let satisfied = r_gabor <= bound * (1.0 + tol) + ROUNDOFF_FLOOR * f.norm();
    Ok(BackwardTransfer {
        report: BackwardReport {
            k_star,
            sigma_max,
            psi_norm: psi.norm(),
            r_translate,
            r_gabor,
            bound,
            tol,
            satisfied,
        },
        phi,
        psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::apply_pi;
    use crate::signal::{inner, make_signal, SignalKind};
    use proptest::prelude::*;

    fn grid() -> GridParams {
        GridParams::default()
    }

    fn gauss(c: f64) -> SampledSignal {
        make_signal(
            SignalKind::Gaussian {
                center: c,
                width: 1.0,
            },
            &grid(),
        )
        .unwrap()
    }

    fn fiber_field(g: GridParams, k: i64, s: f64) -> HeisenbergField {
        HeisenbergField::from_fiber_fn(g, move |m, y, x| {
            if m == -k {
                Complex64::new(1.0, 0.3 * y)
                    * (-std::f64::consts::PI * (y * y + (x - 0.1) * (x - 0.1)) / (s * s)).exp()
            } else {
                ZERO
            }
        })
        .unwrap()
    }

    #[test]
    fn matrix_coefficient_matches_direct_inner_products() {
        let g = grid();
        let psi = make_signal(SignalKind::Random { seed: 3 }, &g).unwrap();
        let phi = gauss(0.3);
        for k in [1i64, -2, 3, 4] {
            let f = matrix_coefficient_field(&psi, &phi, k, &g).unwrap();
            assert_eq!(f.nonzero_fibers(), vec![-k]);
            let fib = f.fiber(-k).unwrap();
            for &(b, a) in &[(32usize, 32usize), (0, 5), (40, 63), (17, 29)] {
                let h = HeisenbergPoint::new(0.0, g.field_y(b), g.field_x(a));
                let want = inner(&psi, &apply_pi(k, &h, &phi).unwrap()).unwrap();
                assert!((fib[b * g.nx + a] - want).norm() < 1e-13, "k {k} ({b},{a})");
            }
        }
        let f = matrix_coefficient_field(&phi, &phi, 1, &g).unwrap();
        let at_e = f.fiber(-1).unwrap()[32 * 64 + 32];
        assert!((at_e - Complex64::new(phi.norm_sq(), 0.0)).norm() < 1e-14);
        assert_eq!(
            matrix_coefficient_field(&phi, &phi, 0, &g).unwrap_err(),
            LabError::ZeroK
        );
        assert!(matrix_coefficient_field(&phi, &phi, -4, &g).is_err());
    }

    #[test]
    fn moyal_identities() {
        let g = grid();
        let f = gauss(0.2);
        let h = gauss(-0.1);
        for k in [1i64, 2, 3, 4] {
            let r = moyal_check(&f, &h, k, &g).unwrap();
            assert!(r.rel_err < 1e-3, "k = {k}: {r:?}");
        }
        let a = make_signal(SignalKind::Random { seed: 1 }, &g).unwrap();
        let b = make_signal(SignalKind::Random { seed: 2 }, &g).unwrap();
        assert!(moyal_finite(&a, &b).unwrap().rel_err < 1e-10);
    }

    #[test]
    fn kernel_trivial_cases() {
        let g = grid();
        let f = fiber_field(g, 1, 0.5);
        assert!(kernel_of(&f, 2).unwrap().is_zero());
        let flat = HeisenbergField::from_fiber_fn(g, |m, y, _| {
            if m == 0 {
                Complex64::new((-y * y).exp(), 0.0)
            } else {
                ZERO
            }
        })
        .unwrap();
        for k in k_range(&g) {
            assert!(kernel_of(&flat, k).unwrap().is_zero());
        }
        assert!(kernel_of(&f, 0).is_err());
        assert!(kernel_of(&f, 5).is_err());
    }

    #[test]
    fn kernel_hs_matches_fiber() {
        let g = grid();
        for k in [1i64, -1, 2, -2] {
            let f = fiber_field(g, k, 0.5);
            let a = hs_norm(&kernel_of(&f, k).unwrap());
            let b = hs_norm_via_fiber(&f, k).unwrap();
            assert!((a - b).abs() <= 1e-6 * b, "k {k}: {a} vs {b}");

            let phi = gauss(0.0);
            let mc = matrix_coefficient_field(&phi, &phi, k, &g).unwrap();
            let a = hs_norm(&kernel_of(&mc, k).unwrap());
            let b = hs_norm_via_fiber(&mc, k).unwrap();
            assert!((a - b).abs() <= 1e-6 * b, "mc k {k}: {a} vs {b}");
        }
        let f = fiber_field(g, 2, 0.5);
        let s = Complex64::new(-2.0, 1.5);
        let a = hs_norm_via_fiber(&f.scaled(s), 2).unwrap();
        assert!((a - s.norm() * hs_norm_via_fiber(&f, 2).unwrap()).abs() < 1e-14 * a);
        assert_eq!(hs_norm_via_fiber(&f, 1).unwrap(), 0.0);
    }

    #[test]
    fn apply_kernel_matches_double_sum() {
        // pi_k(F) phi(t_i) = dy dx sum_{b, a} G(y_b, x_a) e(k y_b t_i) phi(t_i - x_a)
        let g = grid();
        let k = 1;
        let f = fiber_field(g, k, 0.5);
        let phi = make_signal(SignalKind::Random { seed: 9 }, &g).unwrap();
        let out = apply_kernel(&kernel_of(&f, k).unwrap(), &phi).unwrap();
        let fib = f.fiber(-k).unwrap();
        let n = g.n as i64;
        for &i in &[1usize, 64, 128, 200] {
            let mut want = ZERO;
            for b in 0..g.ny {
                for a in 0..g.nx {
                    let s = a as i64 - (g.nx / 2) as i64;
                    let ph = cis_ratio(k * (b as i64 - (g.ny / 2) as i64) * (i as i64 - n / 2), n);
                    want += fib[b * g.nx + a]
                        * ph
                        * phi.values()[(i as i64 - s).rem_euclid(n) as usize];
                }
            }
            want *= g.dy() * g.dx();
            assert!((out.values()[i] - want).norm() < 1e-12, "{i}");
        }
        let hs = hs_norm(&kernel_of(&f, k).unwrap());
        assert!(out.norm() <= hs * phi.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn apply_kernel_delta_and_zero() {
        let g = grid();
        let n = g.n;
        let mut d = vec![ZERO; n * n];
        for i in 0..n {
            d[i * n + i] = Complex64::new(1.0 / g.dx(), 0.0);
        }
        let id = KernelOperator::from_rows(1, g.period, n, d).unwrap();
        let phi = make_signal(SignalKind::Random { seed: 4 }, &g).unwrap();
        let out = apply_kernel(&id, &phi).unwrap();
        for (a, b) in out.values().iter().zip(phi.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let z = KernelOperator::from_rows(1, g.period, n, vec![ZERO; n * n]).unwrap();
        assert!(apply_kernel(&z, &phi).unwrap().is_zero());
        let short = SampledSignal::new(vec![ZERO; 8], g.period).unwrap();
        assert!(apply_kernel(&z, &short).is_err());
    }

    #[test]
    fn plancherel_examples() {
        let g = grid();
        for k in [1i64, 2, 3, -1, -3] {
            let r = plancherel_check(&fiber_field(g, k, 0.5), 4).unwrap();
            assert!(r.rel_err < 1e-3, "{k}: {r:?}");
        }
        let flat = HeisenbergField::from_fiber_fn(g, |m, y, x| {
            if m == 0 {
                Complex64::new((-(y * y + x * x)).exp(), 0.0)
            } else {
                ZERO
            }
        })
        .unwrap();
        assert!(matches!(
            plancherel_check(&flat, 4),
            Err(LabError::NotInKernel(_))
        ));
        let z = HeisenbergField::zeros(g).unwrap();
        let r = plancherel_check(&z, 4).unwrap();
        assert_eq!((r.lhs, r.rhs, r.rel_err), (0.0, 0.0, 0.0));
        assert!(plancherel_check(&z, 5).is_err());
    }

    #[test]
    fn intertwining_examples() {
        let g = grid();
        let f = fiber_field(g, 1, 0.5);
        assert_eq!(
            intertwine_residual(&f, &HeisenbergPoint::identity(), 1).unwrap(),
            0.0
        );
        assert!(intertwine_residual(&f, &HeisenbergPoint::central(0.37), 1).unwrap() <= 1e-12);
        assert_eq!(
            intertwine_residual(&f, &HeisenbergPoint::identity(), 2).unwrap_err(),
            LabError::DegenerateField
        );
        for k in [1i64, -2, 3] {
            let f = fiber_field(g, k, 0.5);
            let h = HeisenbergPoint::new(0.4, 5.0 * g.dy(), -7.0 * g.dx());
            let r = intertwine_residual(&f, &h, k).unwrap();
            assert!(r <= 1e-8, "{k}: {r}");
        }
    }

    #[test]
    fn forward_examples() {
        let g = grid();
        let phi = gauss(0.0);
        let one = GaborSystem::new(1, phi.clone(), vec![HeisenbergPoint::identity()]).unwrap();
        let r = transfer_forward(&one, &[Complex64::new(1.0, 0.0)], &g, 1e-3).unwrap();
        assert!((r.r_translate - phi.norm_sq()).abs() <= 1e-3 * phi.norm_sq());
        assert!(r.satisfied);

        let p = HeisenbergPoint::new(0.0, 2.0 * g.dy(), 3.0 * g.dx());
        let dup = GaborSystem::new(
            2,
            phi.clone(),
            vec![p, HeisenbergPoint::new(0.25, p.y, p.x)],
        )
        .unwrap();
        // pi_2(theta) = e(2 theta): e(0.5) = -1, so c = (1, 1) cancels
        let r = transfer_forward(
            &dup,
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            &g,
            1e-3,
        )
        .unwrap();
        assert!(r.r_gabor <= 1e-12);
        assert!(r.r_translate <= 1e-10);
        assert!(r.satisfied);
    }

    #[test]
    fn backward_examples() {
        let g = grid();
        let phi0 = gauss(0.1);
        for k in [1i64, -2, 3] {
            let f = matrix_coefficient_field(&phi0, &phi0, k, &g).unwrap();
            let spec = ComboSpec::new(
                vec![HeisenbergPoint::identity()],
                vec![Complex64::new(1.0, 0.0)],
            )
            .unwrap();
            let t = transfer_backward(&f, &spec, 1e-3).unwrap();
            assert_eq!(t.report.k_star, k);
            assert!(t.report.psi_norm > 0.0);
            assert!((t.report.r_gabor - t.report.psi_norm).abs() <= 1e-12 * t.report.psi_norm);
            assert!(t.report.satisfied, "{:?}", t.report);
            assert!((t.phi.norm() - 1.0).abs() < 1e-12);
        }
        let z = HeisenbergField::zeros(g).unwrap();
        let spec = ComboSpec::new(
            vec![HeisenbergPoint::identity()],
            vec![Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(
            transfer_backward(&z, &spec, 1e-3).unwrap_err(),
            LabError::AllFibersZero
        );
    }

    #[test]
    fn top_singular_of_rank_one() {
        // K = u v^* / dx gives sigma = |u| |v| / dx
        let g = grid();
        let u = gauss(0.5);
        let v = make_signal(SignalKind::Random { seed: 8 }, &g).unwrap();
        let n = g.n;
        let mut d = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                d.push(u.values()[i] * v.values()[j].conj() / g.dx());
            }
        }
        let k = KernelOperator::from_rows(1, g.period, n, d).unwrap();
        let (s, _) = top_singular(&k);
        assert!((s - u.norm() * v.norm() / g.dx()).abs() < 1e-10 * s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn intertwining_composes(
            (t1, b1, a1) in (0.0..1.0f64, -6i64..=6, -6i64..=6),
            (t2, b2, a2) in (0.0..1.0f64, -6i64..=6, -6i64..=6),
            k in prop::sample::select(vec![1i64, -1, 2, -3]),
        ) {
            let g = grid();
            let f = fiber_field(g, k, 0.5);
            let p = HeisenbergPoint::new(t1, b1 as f64 * g.dy(), a1 as f64 * g.dx());
            let q = HeisenbergPoint::new(t2, b2 as f64 * g.dy(), a2 as f64 * g.dx());
            let rq = intertwine_residual(&f, &q, k).unwrap();
            let rp = intertwine_residual(&f.left_translate(&q).unwrap(), &p, k).unwrap();
            let rpq = intertwine_residual(&f, &crate::group::group_mul(&p, &q), k).unwrap();
            prop_assert!(rq <= 1e-8 && rp <= 1e-8);
            prop_assert!(rpq <= rp + rq + 1e-12);
        }
    }
}
