//! One runner per subcommand. Each returns a JSON result and whether its bound held.

use crate::config::{Command, ExperimentConfig};
use heislab_core::counterexample::{
    difference_residual, edgar_eval, edgar_grid_csv, lp_sweep, QuadratureRule, INTERVAL,
};
use heislab_core::field::{
    exp_right_apply, gaussian_bumps, rosenblatt_example, translate_combination, DEFAULT_SERIES_TOL,
};
use heislab_core::repr::certify;
use heislab_core::signal::{ccr_residual, make_signal};
use heislab_core::transfer::{
    k_range, moyal_check, moyal_finite, plancherel_check, transfer_backward, transfer_forward,
    DEFAULT_TRANSFER_TOL,
};
use heislab_core::{
    io, ComboSpec, GaborSystem, GridParams, HeisenbergField, HeisenbergPoint, LabError,
    SampledSignal, SignalKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const CCR_THRESHOLD: f64 = 1e-12;
pub const UNITARITY_THRESHOLD: f64 = 1e-12;
pub const MOYAL_FINITE_THRESHOLD: f64 = 1e-12;
pub const EDGAR_THRESHOLD: f64 = 1e-12;
pub const COMMUTATOR_THRESHOLD: f64 = 1e-8;
pub const INVERSE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Lab(#[from] LabError),
}

impl CliError {
    /// `1` for IO failures, `2` for everything caused by the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(LabError::Io(_)) => 1,
            _ => 2,
        }
    }
}

pub type CmdResult = Result<Outcome, CliError>;

pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

fn value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Points checked (or, with `quantize`, snapped in `y` and `x`) against the grid.
pub fn resolve_points(
    cfg: &ExperimentConfig,
) -> Result<(Vec<HeisenbergPoint>, Vec<f64>), CliError> {
    let g = &cfg.grid;
    let mut pts = Vec::with_capacity(cfg.points.len());
    let mut disp = Vec::with_capacity(cfg.points.len());
    for (j, h) in cfg.points.iter().enumerate() {
        if g.is_on_grid(h) {
            pts.push(HeisenbergPoint::new(
                h.theta(),
                g.y_steps(h.y)? as f64 * g.dy(),
                g.x_steps(h.x)? as f64 * g.dx(),
            ));
            disp.push(0.0);
        } else if cfg.quantize {
            let y = (h.y / g.dy()).round() * g.dy();
            let x = (h.x / g.dx()).round() * g.dx();
            disp.push((y - h.y).abs().max((x - h.x).abs()));
            pts.push(HeisenbergPoint::new(h.theta(), y, x));
        } else {
            return Err(cfg_err(format!(
                "point {j} ({}, {}, {}) is off the grid (dy = {}, dx = {}); pass --quantize to snap it",
                h.theta(),
                h.y,
                h.x,
                g.dy(),
                g.dx()
            )));
        }
    }
    Ok((pts, disp))
}

fn spec(cfg: &ExperimentConfig, pts: &[HeisenbergPoint]) -> Result<ComboSpec, CliError> {
    if cfg.coeffs.len() != pts.len() {
        return Err(cfg_err(format!(
            "{} coefficients for {} points",
            cfg.coeffs.len(),
            pts.len()
        )));
    }
    Ok(ComboSpec::new(pts.to_vec(), cfg.coeffs.clone())?)
}

/// Unreadable or malformed inputs are bad input, not write failures.
fn input_err(p: &std::path::Path, e: LabError) -> CliError {
    cfg_err(format!("{}: {e}", p.display()))
}

fn load_signal(cfg: &ExperimentConfig) -> Result<SampledSignal, CliError> {
    match &cfg.signal_file {
        Some(p) => {
            let s = io::load_signal(p).map_err(|e| input_err(p, e))?;
            s.check_grid(&cfg.grid)?;
            Ok(s)
        }
        None => Ok(make_signal(cfg.signal, &cfg.grid)?),
    }
}

fn load_field(cfg: &ExperimentConfig) -> Result<HeisenbergField, CliError> {
    match &cfg.field {
        Some(p) => {
            let f = io::load_field(p).map_err(|e| input_err(p, e))?;
            if *f.grid() != cfg.grid {
                return Err(cfg_err(format!(
                    "field {} has grid {:?}, config has {:?}",
                    p.display(),
                    f.grid(),
                    cfg.grid
                )));
            }
            Ok(f)
        }
        None => Ok(gaussian_bumps(cfg.grid, &cfg.field_fibers, cfg.seed)?),
    }
}

fn quantization(disp: &[f64]) -> Value {
    json!({ "max_displacement": disp.iter().cloned().fold(0.0, f64::max), "displacements": disp })
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> CmdResult {
    let (pts, disp) = resolve_points(cfg)?;
    let mut out = match cmd {
        Command::CcrCheck => ccr_check(cfg),
        Command::Independence => independence(cfg, &pts),
        Command::TranslateTest => translate_test(cfg, &pts),
        Command::TransferForward => forward(cfg, &pts),
        Command::TransferBackward => backward(cfg, &pts),
        Command::Plancherel => plancherel(cfg),
        Command::Moyal => moyal(cfg),
        Command::Edgar => edgar(cfg),
        Command::Rosenblatt => rosenblatt(cfg),
        Command::ExpCommutant => exp_commutant(cfg, &pts),
    }?;
    if let Value::Object(m) = &mut out.result {
        m.insert("quantization".into(), quantization(&disp));
    }
    Ok(out)
}

fn ccr_check(cfg: &ExperimentConfig) -> CmdResult {
    let g = &cfg.grid;
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half_n = (g.n / 2) as i64;
    let mut residuals = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let phi = make_signal(SignalKind::Random { seed: r.random() }, g)?;
        let x = r.random_range(-half_n..half_n) as f64 * g.dx();
        let y = r.random_range(-half_n..half_n) as f64 * g.dy();
        residuals.push(ccr_residual(&phi, x, y)?);
    }
    let worst = max_of(&residuals);
    Ok(Outcome {
        passed: worst <= CCR_THRESHOLD,
        result: json!({
            "cases": cfg.samples,
            "max_residual": worst,
            "threshold": CCR_THRESHOLD,
        }),
    })
}

fn independence(cfg: &ExperimentConfig, pts: &[HeisenbergPoint]) -> CmdResult {
    let sys = GaborSystem::new(cfg.k, load_signal(cfg)?, pts.to_vec())?;
    let rep = certify(&sys, cfg.epsilon)?;
    Ok(Outcome {
        passed: true,
        result: value(&rep),
    })
}

fn translate_test(cfg: &ExperimentConfig, pts: &[HeisenbergPoint]) -> CmdResult {
    let f = load_field(cfg)?;
    let s = spec(cfg, pts)?;
    let combo = translate_combination(&f, &s)?;
    let nf = f.norm();
    if nf == 0.0 {
        return Err(LabError::DegenerateField.into());
    }
    let mut unitarity = 0.0f64;
    for h in pts {
        let l = (f.left_translate(h)?.norm() - nf).abs() / nf;
        let r = (f.right_translate(h)?.norm() - nf).abs() / nf;
        unitarity = unitarity.max(l).max(r);
    }
    if let Some(p) = &cfg.field_out {
        io::save_field(p, &combo)?;
    }
    Ok(Outcome {
        passed: unitarity <= UNITARITY_THRESHOLD,
        result: json!({
            "field_norm": nf,
            "residual": combo.norm(),
            "relative_residual": combo.norm() / nf,
            "unitarity_defect": unitarity,
            "threshold": UNITARITY_THRESHOLD,
            "nonzero_fibers": f.nonzero_fibers(),
        }),
    })
}

fn forward(cfg: &ExperimentConfig, pts: &[HeisenbergPoint]) -> CmdResult {
    spec(cfg, pts)?;
    let sys = GaborSystem::new(cfg.k, load_signal(cfg)?, pts.to_vec())?;
    let rep = transfer_forward(
        &sys,
        &cfg.coeffs,
        &cfg.grid,
        cfg.tol.unwrap_or(DEFAULT_TRANSFER_TOL),
    )?;
    Ok(Outcome {
        passed: rep.satisfied,
        result: value(&rep),
    })
}

fn backward(cfg: &ExperimentConfig, pts: &[HeisenbergPoint]) -> CmdResult {
    let f = load_field(cfg)?;
    let t = transfer_backward(
        &f,
        &spec(cfg, pts)?,
        cfg.tol.unwrap_or(DEFAULT_TRANSFER_TOL),
    )?;
    if let Some(p) = &cfg.signal_out {
        io::save_signal(p, &t.psi)?;
    }
    Ok(Outcome {
        passed: t.report.satisfied,
        result: value(&t.report),
    })
}

fn kmax(cfg: &ExperimentConfig) -> i64 {
    cfg.kmax.unwrap_or((cfg.grid.theta_samples / 2) as i64)
}

fn plancherel(cfg: &ExperimentConfig) -> CmdResult {
    let (center, kernel_part) = load_field(cfg)?.center_project();
    let tol = cfg.tol.unwrap_or(DEFAULT_TRANSFER_TOL);
    let rep = plancherel_check(&kernel_part, kmax(cfg))?;
    let mut v = value(&rep);
    v["removed_center_norm"] = json!(center.norm());
    v["tol"] = json!(tol);
    Ok(Outcome {
        passed: rep.rel_err <= tol,
        result: v,
    })
}

fn moyal(cfg: &ExperimentConfig) -> CmdResult {
    let f = load_signal(cfg)?;
    let g_sig = match cfg.signal_b {
        Some(kind) => make_signal(kind, &cfg.grid)?,
        None => f.clone(),
    };
    let tol = cfg.tol.unwrap_or(DEFAULT_TRANSFER_TOL);
    let km = kmax(cfg);
    let valid = k_range(&cfg.grid);
    if km < 1 || !valid.contains(&km) {
        return Err(cfg_err(format!(
            "kmax must be in 1..={}",
            cfg.grid.theta_samples / 2
        )));
    }
    let mut sampled = Vec::new();
    let mut worst = 0.0f64;
    for k in 1..=km {
        let rep = moyal_check(&f, &g_sig, k, &cfg.grid)?;
        worst = worst.max(rep.rel_err);
        sampled.push(value(&rep));
    }
    let fin = moyal_finite(&f, &g_sig)?;
    Ok(Outcome {
        passed: worst <= tol && fin.rel_err <= MOYAL_FINITE_THRESHOLD,
        result: json!({
            "sampled": sampled,
            "max_rel_err": worst,
            "tol": tol,
            "finite": value(&fin),
            "finite_threshold": MOYAL_FINITE_THRESHOLD,
        }),
    })
}

fn edgar(cfg: &ExperimentConfig) -> CmdResult {
    let rule = QuadratureRule::gauss_legendre(cfg.nodes, INTERVAL.0, INTERVAL.1)?;
    let f0 = edgar_eval(0.0, 0.0, &rule);
    let mut result = json!({
        "nodes": cfg.nodes,
        "origin": [f0.re, f0.im],
    });
    let mut passed = true;
    if cfg.check_difference {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        let span = cfg.radius.max(1.0);
        let residuals: Vec<f64> = (0..cfg.samples)
            .map(|_| {
                difference_residual(
                    r.random_range(-span..span),
                    r.random_range(-span..span),
                    &rule,
                )
            })
            .collect();
        let worst = max_of(&residuals);
        passed = worst <= EDGAR_THRESHOLD;
        result["difference"] = json!({
            "samples": cfg.samples,
            "span": span,
            "max_residual": worst,
            "threshold": EDGAR_THRESHOLD,
        });
    }
    if !cfg.radii.is_empty() && !cfg.p_values.is_empty() {
        result["lp_sweep"] = value(&lp_sweep(&cfg.p_values, &cfg.radii, cfg.step, &rule)?);
    }
    if let Some(p) = &cfg.csv_out {
        io::save_bytes(p, edgar_grid_csv(cfg.radius, cfg.step, &rule)?.as_bytes())?;
        result["csv"] = json!({ "radius": cfg.radius, "step": cfg.step });
    }
    Ok(Outcome { result, passed })
}

fn rosenblatt(cfg: &ExperimentConfig) -> CmdResult {
    let (f, witness) = rosenblatt_example(cfg.n, &cfg.region, cfg.grid)?;
    let residual = translate_combination(&f, &witness)?.norm();
    if let Some(p) = &cfg.field_out {
        io::save_field(p, &f)?;
    }
    let triples: Vec<[f64; 3]> = witness.points().iter().map(|p| p.triple()).collect();
    let coeffs: Vec<[f64; 2]> = witness.coeffs().iter().map(|c| [c.re, c.im]).collect();
    Ok(Outcome {
        passed: residual == 0.0 && !f.is_zero(),
        result: json!({
            "n": cfg.n,
            "field_norm": f.norm(),
            "nonzero_fibers": f.nonzero_fibers(),
            "residual": residual,
            "witness": { "points": triples, "coeffs": coeffs },
        }),
    })
}

fn lattice_point(r: &mut ChaCha8Rng, g: &GridParams, tx: i64, ty: i64) -> HeisenbergPoint {
    HeisenbergPoint::new(
        r.random_range(0.0..1.0),
        (r.random_range(-4..=4) * ty) as f64 * g.dy(),
        (r.random_range(-4..=4) * tx) as f64 * g.dx(),
    )
}

fn exp_commutant(cfg: &ExperimentConfig, pts: &[HeisenbergPoint]) -> CmdResult {
    let g = &cfg.grid;
    let (tx, ty) = g
        .torus_steps()
        .ok_or_else(|| cfg_err("exp-commutant needs Ny and Nx to divide N"))?;
    let f = load_field(cfg)?;
    let nf = f.norm();
    if nf == 0.0 {
        return Err(LabError::DegenerateField.into());
    }
    let s = spec(cfg, pts)?;
    let tol = cfg.tol.unwrap_or(DEFAULT_SERIES_TOL);
    let af = exp_right_apply(&s, &f, tol)?;
    let back = exp_right_apply(&s.negated(), &af, tol)?;
    let inverse = back.sub(&f)?.norm() / nf;
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut commutator = 0.0f64;
    for _ in 0..cfg.samples {
        let h = lattice_point(&mut r, g, tx, ty);
        let alf = exp_right_apply(&s, &f.left_translate(&h)?, tol)?;
        let laf = af.left_translate(&h)?;
        commutator = commutator.max(alf.sub(&laf)?.norm() / nf);
    }
    if let Some(p) = &cfg.field_out {
        io::save_field(p, &af)?;
    }
    Ok(Outcome {
        passed: commutator <= COMMUTATOR_THRESHOLD && inverse <= INVERSE_THRESHOLD,
        result: json!({
            "series_tol": tol,
            "left_samples": cfg.samples,
            "commutator": commutator,
            "commutator_threshold": COMMUTATOR_THRESHOLD,
            "inverse_defect": inverse,
            "inverse_threshold": INVERSE_THRESHOLD,
            "exp_norm_ratio": af.norm() / nf,
            "coeff_l1": s.l1(),
        }),
    })
}
