//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::initial::InitialCondition;
use crate::lagrangian::{DEFAULT_DET_MIN, DEFAULT_G_MAX};

/// Time-step policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// CFL-limited, capped at `dt_max`.
    Auto { dt_max: f64 },
}

/// Slab `a_3 in [z0, z1]` for the set-separation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabSpec {
    pub z0: f64,
    pub z1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub box_length: f64,
    pub omega_rate: f64,
    pub nu: f64,
    pub dt: TimeStep,
    pub t_end: f64,
    pub initial_condition: InitialCondition,
    pub amplitude: f64,
    pub g_max: f64,
    pub rossby_gate: f64,
    pub det_min: f64,
    /// Evolve `v` and evaluate the identities even when `nu = 0`.
    pub identities: bool,
    /// Side of the label lattice; 0 disables it.
    pub lattice: usize,
    pub pairs: usize,
    pub pair_gap_min: f64,
    pub pair_gap_max: f64,
    pub slabs: Vec<SlabSpec>,
    /// Columns and levels per side sampling each slab.
    pub slab_tracers: usize,
    /// Track a lattice that is never re-seeded at resets.
    pub persistent_lattice: usize,
    pub out_dir: PathBuf,
    pub diagnostics_file: String,
    pub checkpoint_file: String,
    /// Steps between checkpoints; 0 writes only the final one.
    pub checkpoint_every: u64,
    /// Steps between diagnostics rows.
    pub cadence: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 32,
            box_length: std::f64::consts::TAU,
            omega_rate: 0.0,
            nu: 0.0,
            dt: TimeStep::Auto { dt_max: 1e-3 },
            t_end: 0.0,
            initial_condition: InitialCondition::TaylorGreen,
            amplitude: 1.0,
            g_max: DEFAULT_G_MAX,
            rossby_gate: crate::diagnostics::DEFAULT_ROSSBY_GATE,
            det_min: DEFAULT_DET_MIN,
            identities: true,
            lattice: 8,
            pairs: 100,
            pair_gap_min: 0.1,
            pair_gap_max: 1.0,
            slabs: Vec::new(),
            slab_tracers: 4,
            persistent_lattice: 0,
            out_dir: PathBuf::from("."),
            diagnostics_file: "diagnostics.csv".into(),
            checkpoint_file: "checkpoint.bin".into(),
            checkpoint_every: 0,
            cadence: 10,
            seed: 0,
        }
    }
}

const REQUIRED: [&str; 5] = ["n", "omega", "nu", "t_end", "ic"];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("malformed number `{v}`")))
}

fn real(key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(key, v)?;
    if !x.is_finite() {
        return Err(Error::config(key, format!("`{v}` is not finite")));
    }
    Ok(x)
}

fn nonneg(key: &str, v: &str) -> Result<f64> {
    let x = real(key, v)?;
    if x < 0.0 {
        return Err(Error::config(key, "must be nonnegative"));
    }
    Ok(x)
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x = real(key, v)?;
    if !(x > 0.0) {
        return Err(Error::config(key, "must be positive"));
    }
    Ok(x)
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn slab_list(key: &str, v: &str) -> Result<Vec<SlabSpec>> {
    if v == "none" || v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| Error::config(key, format!("expected z0:z1, got `{s}`")))?;
            let (z0, z1) = (real(key, a.trim())?, real(key, b.trim())?);
            if !(z1 > z0) {
                return Err(Error::config(key, format!("empty slab `{s}`")));
            }
            Ok(SlabSpec { z0, z1 })
        })
        .collect()
}

/// Parse `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("line {}: expected key=value", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if kv.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::config(k, "given twice"));
        }
    }

    let mut c = RunConfig::default();
    for (k, v) in &kv {
        let (k, v) = (k.as_str(), v.as_str());
        match k {
            "n" => {
                let n: usize = num(k, v)?;
                if n % 2 != 0 {
                    return Err(Error::config(k, "n must be even"));
                }
                if n < 8 {
                    return Err(Error::config(k, "n must be at least 8"));
                }
                c.n = n;
            }
            "box_length" => c.box_length = positive(k, v)?,
            "omega" => c.omega_rate = nonneg(k, v)?,
            "nu" => c.nu = nonneg(k, v)?,
            "dt" => {
                c.dt = match v {
                    "auto" => match c.dt {
                        TimeStep::Auto { .. } => c.dt,
                        TimeStep::Fixed(_) => TimeStep::Auto { dt_max: 1e-3 },
                    },
                    _ => TimeStep::Fixed(positive(k, v)?),
                }
            }
            "dt_max" => {}
            "t_end" => c.t_end = nonneg(k, v)?,
            "ic" => c.initial_condition = v.parse()?,
            "amplitude" => c.amplitude = nonneg(k, v)?,
            "g_max" => c.g_max = nonneg(k, v)?,
            "rossby_gate" => c.rossby_gate = nonneg(k, v)?,
            "det_min" => c.det_min = positive(k, v)?,
            "identities" => c.identities = boolean(k, v)?,
            "lattice" => c.lattice = num(k, v)?,
            "pairs" => c.pairs = num(k, v)?,
            "pair_gap_min" => c.pair_gap_min = positive(k, v)?,
            "pair_gap_max" => c.pair_gap_max = positive(k, v)?,
            "slabs" => c.slabs = slab_list(k, v)?,
            "slab_tracers" => c.slab_tracers = num(k, v)?,
            "persistent_lattice" => c.persistent_lattice = num(k, v)?,
            "out_dir" => c.out_dir = PathBuf::from(v),
            "diagnostics_file" => c.diagnostics_file = v.to_string(),
            "checkpoint_file" => c.checkpoint_file = v.to_string(),
            "checkpoint_every" => c.checkpoint_every = num(k, v)?,
            "cadence" => {
                c.cadence = num(k, v)?;
                if c.cadence == 0 {
                    return Err(Error::config(k, "must be at least 1"));
                }
            }
            "seed" => c.seed = num(k, v)?,
            _ => return Err(Error::config(k, "unknown key")),
        }
    }
    if let Some(v) = kv.get("dt_max") {
        let dt_max = positive("dt_max", v)?;
        match c.dt {
            TimeStep::Auto { .. } => c.dt = TimeStep::Auto { dt_max },
            TimeStep::Fixed(_) => return Err(Error::config("dt_max", "only meaningful with dt=auto")),
        }
    }
    for key in REQUIRED {
        if !kv.contains_key(key) {
            return Err(Error::config(key, "missing required key"));
        }
    }
    if c.pair_gap_max < c.pair_gap_min {
        return Err(Error::config("pair_gap_max", "smaller than pair_gap_min"));
    }
    if c.pair_gap_max >= c.box_length {
        return Err(Error::config("pair_gap_max", "must be below the box length"));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = parse_config("n=32\nomega=8.0\nnu=0.0\nt_end=0.5\nic=taylor_green").unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.omega_rate, 8.0);
        assert_eq!(c.g_max, 0.25);
        assert_eq!(c.rossby_gate, 0.25);
        assert_eq!(c.initial_condition, InitialCondition::TaylorGreen);
    }

    #[test]
    fn odd_n_names_key() {
        let err = parse_config("n=13").unwrap_err().to_string();
        assert!(err.contains("n must be even"), "{err}");
    }

    #[test]
    fn rejects_bad_input() {
        let base = "n=16\nomega=1\nnu=0\nt_end=1\nic=zero\n";
        for (extra, key) in [
            ("bogus=1", "bogus"),
            ("nu=-1", "nu"),
            ("seed=x", "seed"),
            ("slabs=1:0", "slabs"),
        ] {
            let text = format!("{}{extra}", base.replace(&format!("{key}="), "#"));
            let err = parse_config(&text).unwrap_err().to_string();
            assert!(err.contains(key), "{extra}: {err}");
        }
        let err = parse_config("n=16\nomega=1\nnu=0\nic=zero").unwrap_err().to_string();
        assert!(err.contains("t_end"), "{err}");
    }

    #[test]
    fn optional_keys() {
        let c = parse_config(
            "n=16 # grid\nomega=2\nnu=0.01\nt_end=1\nic=random\ndt=auto\ndt_max=0.002\nslabs=0.5:1.0, 2:2.5\nidentities=false",
        )
        .unwrap();
        assert_eq!(c.dt, TimeStep::Auto { dt_max: 0.002 });
        assert_eq!(c.slabs.len(), 2);
        assert!(!c.identities);
    }
}
