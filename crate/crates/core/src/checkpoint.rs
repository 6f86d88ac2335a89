//! Binary checkpoints.
//!
//! Layout, little-endian: magic `ELROTv1\0`; `u32` version, `u32` n;
//! `f64` box_length, t, t0, omega_rate, nu; the arrays `u, l, v, zeta0`,
//! component-major and x-fastest; `u64` tracer count and `(a, X)` pairs.
//! An optional trailer `ELRUNST\0` carries the driver state needed for an
//! exact restart.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ELROTv1\0";
pub const TRAILER_MAGIC: &[u8; 8] = b"ELRUNST\0";
pub const VERSION: u32 = 1;

pub type Tracer = ([f64; 3], [f64; 3]);

/// Driver state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub step: u64,
    pub window: u64,
    pub scalars: Vec<f64>,
    /// Tracers that are never re-seeded.
    pub persistent: Vec<Tracer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub n: u32,
    pub box_length: f64,
    pub t: f64,
    pub t0: f64,
    pub omega_rate: f64,
    pub nu: f64,
    pub u: [Vec<f64>; 3],
    pub ell: [Vec<f64>; 3],
    pub v: [Vec<f64>; 3],
    pub zeta0: [Vec<f64>; 3],
    pub tracers: Vec<Tracer>,
    pub run_state: Option<RunState>,
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_tracers(out: &mut Vec<u8>, tr: &[Tracer]) {
    out.extend_from_slice(&(tr.len() as u64).to_le_bytes());
    for (a, x) in tr {
        put_f64s(out, a);
        put_f64s(out, x);
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let len = (self.n as usize).pow(3);
        let mut out = Vec::with_capacity(48 + 12 * len * 8 + 48 * self.tracers.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        put_f64s(&mut out, &[self.box_length, self.t, self.t0, self.omega_rate, self.nu]);
        for f in [&self.u, &self.ell, &self.v, &self.zeta0] {
            for c in f {
                debug_assert_eq!(c.len(), len);
                put_f64s(&mut out, c);
            }
        }
        put_tracers(&mut out, &self.tracers);
        if let Some(rs) = &self.run_state {
            out.extend_from_slice(TRAILER_MAGIC);
            out.extend_from_slice(&rs.step.to_le_bytes());
            out.extend_from_slice(&rs.window.to_le_bytes());
            out.extend_from_slice(&(rs.scalars.len() as u64).to_le_bytes());
            put_f64s(&mut out, &rs.scalars);
            put_tracers(&mut out, &rs.persistent);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8, "magic")?;
        if magic != MAGIC {
            return Err(Error::Checkpoint {
                message: "bad magic".into(),
                offset: 0,
            });
        }
        let version = r.u32("header")?;
        if version != VERSION {
            return Err(Error::CheckpointVersion {
                found: version,
                expected: VERSION,
            });
        }
        let n = r.u32("header")?;
        if n < 2 || n % 2 != 0 || n > 4096 {
            return Err(Error::Checkpoint {
                message: format!("invalid grid size {n} in header"),
                offset: 12,
            });
        }
        let box_length = r.f64("header")?;
        let t = r.f64("header")?;
        let t0 = r.f64("header")?;
        let omega_rate = r.f64("header")?;
        let nu = r.f64("header")?;
        let len = (n as usize).pow(3);
        let mut field = |name: &str| -> Result<[Vec<f64>; 3]> {
            let a = r.f64s(len, &format!("{name}_1"))?;
            let b = r.f64s(len, &format!("{name}_2"))?;
            let c = r.f64s(len, &format!("{name}_3"))?;
            Ok([a, b, c])
        };
        let u = field("u")?;
        let ell = field("ell")?;
        let v = field("v")?;
        let zeta0 = field("zeta0")?;
        let tracers = r.tracers("tracers")?;
        let run_state = if r.pos == bytes.len() {
            None
        } else {
            let m = r.take(8, "run state")?;
            if m != TRAILER_MAGIC {
                return Err(Error::Checkpoint {
                    message: "unrecognized trailing data".into(),
                    offset: (r.pos - 8) as u64,
                });
            }
            let step = r.u64("run state")?;
            let window = r.u64("run state")?;
            let k = r.u64("run state")? as usize;
            let scalars = r.f64s(k, "run state")?;
            let persistent = r.tracers("persistent tracers")?;
            Some(RunState {
                step,
                window,
                scalars,
                persistent,
            })
        };
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint {
                message: "trailing bytes after run state".into(),
                offset: r.pos as u64,
            });
        }
        Ok(Self {
            n,
            box_length,
            t,
            t0,
            omega_rate,
            nu,
            u,
            ell,
            v,
            zeta0,
            tracers,
            run_state,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize, section: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|e| *e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Checkpoint {
                message: format!("truncated in section `{section}`"),
                offset: self.pos as u64,
            }),
        }
    }

    fn u32(&mut self, section: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, section)?.try_into().unwrap()))
    }

    fn u64(&mut self, section: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, section)?.try_into().unwrap()))
    }

    fn f64(&mut self, section: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, section)?.try_into().unwrap()))
    }

    fn f64s(&mut self, k: usize, section: &str) -> Result<Vec<f64>> {
        let bytes = self.take(k.checked_mul(8).unwrap_or(usize::MAX), section)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn tracers(&mut self, section: &str) -> Result<Vec<Tracer>> {
        let count = self.u64(section)? as usize;
        let flat = self.f64s(count.checked_mul(6).unwrap_or(usize::MAX), section)?;
        Ok(flat
            .chunks_exact(6)
            .map(|c| ([c[0], c[1], c[2]], [c[3], c[4], c[5]]))
            .collect())
    }
}

/// Write atomically through a temporary file in the same directory.
pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&ck.to_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let len = 8;
        let f = |s: f64| std::array::from_fn(|c| (0..len).map(|i| s * (i as f64 + c as f64).sin()).collect());
        Checkpoint {
            n: 2,
            box_length: 1.5,
            t: 0.25,
            t0: 0.125,
            omega_rate: 3.0,
            nu: 0.0,
            u: f(1.0),
            ell: f(2.0),
            v: f(-1.0),
            zeta0: f(0.5),
            tracers: vec![([0.1, 0.2, 0.3], [0.4, 0.5, 0.6])],
            run_state: None,
        }
    }

    #[test]
    fn round_trip() {
        let mut ck = sample();
        assert_eq!(Checkpoint::from_bytes(&ck.to_bytes()).unwrap(), ck);
        ck.run_state = Some(RunState {
            step: 7,
            window: 2,
            scalars: vec![1.0, f64::NAN.copysign(1.0), -0.0],
            persistent: vec![([1.0; 3], [2.0; 3])],
        });
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back.to_bytes(), ck.to_bytes());
    }

    #[test]
    fn truncation_names_section() {
        let bytes = sample().to_bytes();
        let err = Checkpoint::from_bytes(&bytes[..60 + 8 * 8 * 3]).unwrap_err().to_string();
        assert!(err.contains("ell_1"), "{err}");
        let err = Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err().to_string();
        assert!(err.contains("tracers"), "{err}");
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = sample().to_bytes();
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(Error::CheckpointVersion { found: 2, expected: 1 })
        ));
        bytes[0] = b'X';
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }
}
