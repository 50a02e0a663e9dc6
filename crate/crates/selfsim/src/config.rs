//! Run configuration as flat `key = value` text.
//!
//! ```text
//! # comment
//! epsilon = 0.01
//! n_points = 4096
//! times = 0, 0.01, 0.1, 1
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::{DataForm, PicardConfig};

/// Largest grid for which the dense factorization fits in memory.
pub const MAX_POINTS: usize = 8192;
/// Largest accepted `|ε|`; beyond [`crate::gprofile::EPS_CAP`] runs carry a warning.
pub const EPS_HARD_CAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub n_points: usize,
    pub half_width: f64,
    pub pad_factor: usize,
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub taper_fraction: f64,
    pub form: DataForm,
    pub output_dir: PathBuf,
    /// Times at which `Z(·,t)` is plotted.
    pub times: Vec<f64>,
    /// Values of `ε` for a sweep.
    pub epsilons: Vec<f64>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 0.01,
            n_points: 4096,
            half_width: 200.0,
            pad_factor: 2,
            delta: 0.0,
            tol: 1e-10,
            max_iter: 50,
            relaxation: 1.0,
            taper_fraction: 0.05,
            form: DataForm::Corrected,
            output_dir: PathBuf::from("selfsim-out"),
            times: vec![0.0, 0.01, 0.1, 1.0],
            epsilons: vec![0.005, 0.01, 0.02],
            seed: 0,
        }
    }
}

pub const KEYS: [&str; 14] = [
    "epsilon",
    "n_points",
    "half_width",
    "pad_factor",
    "delta",
    "tol",
    "max_iter",
    "relaxation",
    "taper_fraction",
    "form",
    "output_dir",
    "times",
    "epsilons",
    "seed",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn parse_form(v: &str) -> Result<DataForm> {
    match v.trim() {
        "corrected" => Ok(DataForm::Corrected),
        "as_printed" => Ok(DataForm::AsPrinted),
        other => Err(Error::Config(format!("form: expected corrected or as_printed, got {other:?}"))),
    }
}

pub fn form_name(f: DataForm) -> &'static str {
    match f {
        DataForm::Corrected => "corrected",
        DataForm::AsPrinted => "as_printed",
    }
}

impl SolverConfig {
    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "epsilon" => self.epsilon = num(key, value)?,
            "n_points" => self.n_points = num(key, value)?,
            "half_width" => self.half_width = num(key, value)?,
            "pad_factor" => self.pad_factor = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "relaxation" => self.relaxation = num(key, value)?,
            "taper_fraction" => self.taper_fraction = num(key, value)?,
            "form" => self.form = parse_form(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "times" => self.times = list(key, value)?,
            "epsilons" => self.epsilons = list(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parse on top of the defaults; later lines win.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_kv_str(&text)
    }

    /// The inverse of [`from_kv_str`](Self::from_kv_str).
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(s, "half_width = {}", self.half_width);
        let _ = writeln!(s, "pad_factor = {}", self.pad_factor);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "tol = {}", self.tol);
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "relaxation = {}", self.relaxation);
        let _ = writeln!(s, "taper_fraction = {}", self.taper_fraction);
        let _ = writeln!(s, "form = {}", form_name(self.form));
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "times = {}", join(&self.times));
        let _ = writeln!(s, "epsilons = {}", join(&self.epsilons));
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !self.epsilon.is_finite() || self.epsilon.abs() > EPS_HARD_CAP {
            return bad(format!("epsilon must satisfy |epsilon| <= {EPS_HARD_CAP}"));
        }
        if self.n_points < 16 || self.n_points % 2 != 0 || self.n_points > MAX_POINTS {
            return bad(format!("n_points must be even and in [16, {MAX_POINTS}]"));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return bad("half_width must be positive".into());
        }
        if !(2..=8).contains(&self.pad_factor) {
            return bad("pad_factor must be in [2, 8]".into());
        }
        if !(self.delta.is_finite() && (0.0..=1.0).contains(&self.delta)) {
            return bad("delta must be in [0, 1]".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol must be positive".into());
        }
        if !(1..=1000).contains(&self.max_iter) {
            return bad("max_iter must be in [1, 1000]".into());
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad("relaxation must be in (0, 1]".into());
        }
        if !(0.0..=0.25).contains(&self.taper_fraction) {
            return bad("taper_fraction must be in [0, 0.25]".into());
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("times must be finite and >= 0".into());
        }
        if self.epsilons.iter().any(|e| !e.is_finite() || e.abs() > EPS_HARD_CAP) {
            return bad(format!("epsilons must satisfy |epsilon| <= {EPS_HARD_CAP}"));
        }
        Ok(())
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            relaxation: self.relaxation,
            form: self.form,
            taper_fraction: self.taper_fraction,
            ..PicardConfig::default()
        }
    }

    /// The same run on the grid with twice the points (or half, at the cap).
    pub fn refinement_partner(&self) -> SolverConfig {
        let mut c = self.clone();
        c.n_points = if self.n_points * 2 <= MAX_POINTS {
            self.n_points * 2
        } else {
            self.n_points / 2
        };
        c
    }
}
