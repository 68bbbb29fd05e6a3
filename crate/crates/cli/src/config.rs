//! Flat `key = value` experiment configs.
//!
//! Blank lines and `#` comments are ignored. Keys:
//!
//! | key | value |
//! |---|---|
//! | `command` | one of the subcommand names |
//! | `grid` | `N,L,M,Ny,Nx` |
//! | `k` | nonzero integer |
//! | `points` | `theta,y,x; theta,y,x; ...` |
//! | `coeffs` | `re:im; re:im; ...` (a bare `re` is real) |
//! | `signal`, `signal_b` | `gaussian:center,width`, `indicator:a,b`, `half_line:a`, `random:seed` |
//! | `signal_file` | signal file used instead of `signal` |
//! | `field` | HBF1 field file; otherwise `field_fibers` bumps are generated |
//! | `field_fibers` | comma list of fiber indices |
//! | `region` | `t0,t1; y0,y1; x0,x1` for `rosenblatt` |
//! | `seed`, `epsilon`, `kmax`, `n`, `tol`, `samples` | scalars |
//! | `nodes` | Gauss-Legendre nodes for `edgar` |
//! | `radius`, `step` | CSV grid half-width and spacing, also the `L^p` step |
//! | `p_values`, `radii` | comma lists for the `L^p` sweep |
//! | `check_difference`, `quantize` | `true` / `false` |
//! | `out`, `field_out`, `signal_out`, `csv_out` | output paths |

use heislab_core::{Complex64, GridParams, HeisenbergPoint, Region, SignalKind};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    CcrCheck,
    Independence,
    TranslateTest,
    TransferForward,
    TransferBackward,
    Plancherel,
    Moyal,
    Edgar,
    Rosenblatt,
    ExpCommutant,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CcrCheck => "ccr-check",
            Command::Independence => "independence",
            Command::TranslateTest => "translate-test",
            Command::TransferForward => "transfer-forward",
            Command::TransferBackward => "transfer-backward",
            Command::Plancherel => "plancherel",
            Command::Moyal => "moyal",
            Command::Edgar => "edgar",
            Command::Rosenblatt => "rosenblatt",
            Command::ExpCommutant => "exp-commutant",
        }
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, false).map_err(|_| format!("unknown command {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub grid: GridParams,
    pub k: i64,
    pub points: Vec<HeisenbergPoint>,
    pub coeffs: Vec<Complex64>,
    pub signal: SignalKind,
    pub signal_b: Option<SignalKind>,
    pub signal_file: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub field_fibers: Vec<i64>,
    pub region: Region,
    pub seed: u64,
    pub epsilon: f64,
    pub kmax: Option<i64>,
    pub n: usize,
    pub tol: Option<f64>,
    pub samples: usize,
    pub nodes: usize,
    pub radius: f64,
    pub step: f64,
    pub p_values: Vec<f64>,
    pub radii: Vec<f64>,
    pub check_difference: bool,
    pub quantize: bool,
    pub out: Option<PathBuf>,
    pub field_out: Option<PathBuf>,
    pub signal_out: Option<PathBuf>,
    pub csv_out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            grid: GridParams::default(),
            k: 1,
            points: vec![HeisenbergPoint::identity()],
            coeffs: vec![Complex64::new(1.0, 0.0)],
            signal: SignalKind::Gaussian {
                center: 0.0,
                width: 1.0,
            },
            signal_b: None,
            signal_file: None,
            field: None,
            field_fibers: vec![1, -1, 2],
            region: Region {
                theta: (0.1, 0.35),
                y: (-0.5, 0.75),
                x: (-1.0, 0.25),
            },
            seed: 0,
            epsilon: heislab_core::repr::DEFAULT_EPSILON,
            kmax: None,
            n: 2,
            tol: None,
            samples: 100,
            nodes: heislab_core::counterexample::DEFAULT_NODES,
            radius: 2.0,
            step: 0.25,
            p_values: vec![5.0, 2.0],
            radii: vec![10.0, 20.0, 40.0, 80.0],
            check_difference: false,
            quantize: false,
            out: None,
            field_out: None,
            signal_out: None,
            csv_out: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("{key}: cannot parse {v:?}"))
}

fn list<T: std::str::FromStr>(key: &str, v: &str, sep: char) -> Result<Vec<T>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(sep).map(|p| num(key, p)).collect()
}

fn fmt_list<T: std::fmt::Debug>(v: &[T], sep: &str) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(sep)
}

pub fn parse_grid(v: &str) -> Result<GridParams, String> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 5 {
        return Err(format!("grid: expected N,L,M,Ny,Nx, got {v:?}"));
    }
    let g = GridParams {
        n: num("grid N", parts[0])?,
        period: num("grid L", parts[1])?,
        theta_samples: num("grid M", parts[2])?,
        ny: num("grid Ny", parts[3])?,
        nx: num("grid Nx", parts[4])?,
    };
    g.validate().map_err(|e| format!("grid: {e}"))?;
    Ok(g)
}

fn fmt_grid(g: &GridParams) -> String {
    format!(
        "{},{:?},{},{},{}",
        g.n, g.period, g.theta_samples, g.ny, g.nx
    )
}

fn parse_points(v: &str) -> Result<Vec<HeisenbergPoint>, String> {
    v.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let c: Vec<f64> = list("points", p, ',')?;
            match c.as_slice() {
                [t, y, x] => Ok(HeisenbergPoint::new(*t, *y, *x)),
                _ => Err(format!("points: expected theta,y,x, got {p:?}")),
            }
        })
        .collect()
}

fn fmt_points(v: &[HeisenbergPoint]) -> String {
    v.iter()
        .map(|p| format!("{:?},{:?},{:?}", p.theta(), p.y, p.x))
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_coeffs(v: &str) -> Result<Vec<Complex64>, String> {
    v.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| match p.split_once(':') {
            Some((re, im)) => Ok(Complex64::new(num("coeffs", re)?, num("coeffs", im)?)),
            None => Ok(Complex64::new(num("coeffs", p)?, 0.0)),
        })
        .collect()
}

fn fmt_coeffs(v: &[Complex64]) -> String {
    v.iter()
        .map(|c| format!("{:?}:{:?}", c.re, c.im))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn parse_signal(v: &str) -> Result<SignalKind, String> {
    let (kind, args) = v
        .split_once(':')
        .ok_or_else(|| format!("signal: expected kind:args, got {v:?}"))?;
    let a: Vec<&str> = args.split(',').collect();
    let bad = || format!("signal: bad arguments for {kind:?}: {args:?}");
    match (kind.trim(), a.as_slice()) {
        ("gaussian", [c, w]) => Ok(SignalKind::Gaussian {
            center: num("signal", c)?,
            width: num("signal", w)?,
        }),
        ("indicator", [lo, hi]) => Ok(SignalKind::Indicator {
            a: num("signal", lo)?,
            b: num("signal", hi)?,
        }),
        ("half_line", [lo]) => Ok(SignalKind::HalfLine {
            a: num("signal", lo)?,
        }),
        ("random", [s]) => Ok(SignalKind::Random {
            seed: num("signal", s)?,
        }),
        ("gaussian" | "indicator" | "half_line" | "random", _) => Err(bad()),
        _ => Err(format!("signal: unknown kind {kind:?}")),
    }
}

fn fmt_signal(s: &SignalKind) -> String {
    match s {
        SignalKind::Gaussian { center, width } => format!("gaussian:{center:?},{width:?}"),
        SignalKind::Indicator { a, b } => format!("indicator:{a:?},{b:?}"),
        SignalKind::HalfLine { a } => format!("half_line:{a:?}"),
        SignalKind::Random { seed } => format!("random:{seed}"),
    }
}

fn parse_region(v: &str) -> Result<Region, String> {
    let parts: Vec<Vec<f64>> = v
        .split(';')
        .map(|p| list("region", p, ','))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [t, y, x] if t.len() == 2 && y.len() == 2 && x.len() == 2 => Ok(Region {
            theta: (t[0], t[1]),
            y: (y[0], y[1]),
            x: (x[0], x[1]),
        }),
        _ => Err(format!("region: expected t0,t1; y0,y1; x0,x1, got {v:?}")),
    }
}

fn fmt_region(r: &Region) -> String {
    format!(
        "{:?},{:?}; {:?},{:?}; {:?},{:?}",
        r.theta.0, r.theta.1, r.y.0, r.y.1, r.x.0, r.x.1
    )
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {v:?}")),
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match key {
            "command" => self.command = Some(Command::parse(v)?),
            "grid" => self.grid = parse_grid(v)?,
            "k" => self.k = num(key, v)?,
            "points" => self.points = parse_points(v)?,
            "coeffs" => self.coeffs = parse_coeffs(v)?,
            "signal" => self.signal = parse_signal(v)?,
            "signal_b" => self.signal_b = Some(parse_signal(v)?),
            "signal_file" => self.signal_file = path(),
            "field" => self.field = path(),
            "field_fibers" => self.field_fibers = list(key, v, ',')?,
            "region" => self.region = parse_region(v)?,
            "seed" => self.seed = num(key, v)?,
            "epsilon" => self.epsilon = num(key, v)?,
            "kmax" => self.kmax = Some(num(key, v)?),
            "n" => self.n = num(key, v)?,
            "tol" => self.tol = Some(num(key, v)?),
            "samples" => self.samples = num(key, v)?,
            "nodes" => self.nodes = num(key, v)?,
            "radius" => self.radius = num(key, v)?,
            "step" => self.step = num(key, v)?,
            "p_values" => self.p_values = list(key, v, ',')?,
            "radii" => self.radii = list(key, v, ',')?,
            "check_difference" => self.check_difference = parse_bool(key, v)?,
            "quantize" => self.quantize = parse_bool(key, v)?,
            "out" => self.out = path(),
            "field_out" => self.field_out = path(),
            "signal_out" => self.signal_out = path(),
            "csv_out" => self.csv_out = path(),
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            c.set(k.trim(), v)
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(c)
    }

    /// Every setting as canonical strings; `None` options are omitted.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        let p = |p: &PathBuf| p.display().to_string();
        if let Some(c) = self.command {
            put("command", c.name().into());
        }
        put("grid", fmt_grid(&self.grid));
        put("k", self.k.to_string());
        put("points", fmt_points(&self.points));
        put("coeffs", fmt_coeffs(&self.coeffs));
        put("signal", fmt_signal(&self.signal));
        if let Some(s) = &self.signal_b {
            put("signal_b", fmt_signal(s));
        }
        if let Some(f) = &self.signal_file {
            put("signal_file", p(f));
        }
        if let Some(f) = &self.field {
            put("field", p(f));
        }
        put("field_fibers", fmt_list(&self.field_fibers, ","));
        put("region", fmt_region(&self.region));
        put("seed", self.seed.to_string());
        put("epsilon", format!("{:?}", self.epsilon));
        if let Some(k) = self.kmax {
            put("kmax", k.to_string());
        }
        put("n", self.n.to_string());
        if let Some(t) = self.tol {
            put("tol", format!("{t:?}"));
        }
        put("samples", self.samples.to_string());
        put("nodes", self.nodes.to_string());
        put("radius", format!("{:?}", self.radius));
        put("step", format!("{:?}", self.step));
        put("p_values", fmt_list(&self.p_values, ","));
        put("radii", fmt_list(&self.radii, ","));
        put("check_difference", self.check_difference.to_string());
        put("quantize", self.quantize.to_string());
        for (k, v) in [
            ("out", &self.out),
            ("field_out", &self.field_out),
            ("signal_out", &self.signal_out),
            ("csv_out", &self.csv_out),
        ] {
            if let Some(f) = v {
                put(k, p(f));
            }
        }
        m
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
