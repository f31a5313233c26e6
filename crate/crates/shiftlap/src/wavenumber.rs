//! Heterogeneous wavenumber fields k(x) = k_max * mu(x), where mu is a
//! normalized velocity-like profile with values in [0, 1].
//!
//! Three profiles are supported: constant (mu = 1), the three-layer wedge,
//! and rasters loaded from file and evaluated by bilinear interpolation.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::fs;
use std::path::Path;

/// Normalized spatial profile mu: [0,1]^2 -> [0,1].
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityProfile<T: Real> {
    Constant,
    Wedge,
    Raster(Raster<T>),
}

/// Raster of normalized samples, row-major with y ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T: Real> {
    pub nx: usize,
    pub ny: usize,
    values: Vec<T>,
}

impl<T: Real> VelocityProfile<T> {
    /// Evaluate mu at normalized coordinates; inputs are clamped to [0,1].
    pub fn mu(&self, x: T, y: T) -> T {
        let x = clamp01(x);
        let y = clamp01(y);
        match self {
            VelocityProfile::Constant => T::one(),
            VelocityProfile::Wedge => wedge_mu(x, y),
            VelocityProfile::Raster(r) => r.bilinear(x, y),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            VelocityProfile::Constant => "constant",
            VelocityProfile::Wedge => "wedge",
            VelocityProfile::Raster(_) => "raster",
        }
    }
}

#[inline]
fn clamp01<T: Real>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else if x > T::one() {
        T::one()
    } else {
        x
    }
}

/// Three-layer velocity wedge: horizontal bands slanted by 0.1*x, with
/// normalized velocities 0.55 / 0.75 / 1.0 from bottom to top.
pub fn wedge_profile<T: Real>() -> VelocityProfile<T> {
    VelocityProfile::Wedge
}

fn wedge_mu<T: Real>(x: T, y: T) -> T {
    let slant = T::of(0.1) * x;
    if y < T::of(0.35) + slant {
        T::of(0.55)
    } else if y < T::of(0.65) + slant {
        T::of(0.75)
    } else {
        T::one()
    }
}

impl<T: Real> Raster<T> {
    /// Build from raw samples (row-major, y ascending) and min-max normalize
    /// to [0, 1]. A constant raster normalizes to mu = 1 everywhere.
    pub fn from_samples(nx: usize, ny: usize, raw: Vec<T>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::config(format!(
                "raster must be at least 2x2, got {nx}x{ny}"
            )));
        }
        if raw.len() != nx * ny {
            return Err(Error::config(format!(
                "raster holds {} samples but {nx}x{ny}={} were declared",
                raw.len(),
                nx * ny
            )));
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &v in &raw {
            if !v.is_finite() {
                return Err(Error::config("raster contains a non-finite sample"));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = hi - lo;
        let values = if span == T::zero() {
            vec![T::one(); raw.len()]
        } else {
            raw.into_iter().map(|v| (v - lo) / span).collect()
        };
        Ok(Raster { nx, ny, values })
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> T {
        self.values[iy * self.nx + ix]
    }

    /// Bilinear interpolation on normalized coordinates in [0,1]^2.
    pub fn bilinear(&self, x: T, y: T) -> T {
        let fx = x * T::of((self.nx - 1) as f64);
        let fy = y * T::of((self.ny - 1) as f64);
        let ix = (fx.floor().to_usize().unwrap_or(0)).min(self.nx - 2);
        let iy = (fy.floor().to_usize().unwrap_or(0)).min(self.ny - 2);
        let tx = fx - T::of(ix as f64);
        let ty = fy - T::of(iy as f64);
        let v00 = self.value(ix, iy);
        let v10 = self.value(ix + 1, iy);
        let v01 = self.value(ix, iy + 1);
        let v11 = self.value(ix + 1, iy + 1);
        let one = T::one();
        (one - ty) * ((one - tx) * v00 + tx * v10) + ty * ((one - tx) * v01 + tx * v11)
    }
}

/// Parse a velocity raster from a file. Two formats are accepted:
///
/// * `VPROF <nx> <ny>` header followed by nx*ny whitespace-separated reals,
///   row-major with y ascending;
/// * plain CSV, one row per line (y ascending), nx comma-separated values.
///
/// Samples are min-max normalized to [0, 1] on load.
pub fn load_velocity_raster<T: Real>(path: impl AsRef<Path>) -> Result<VelocityProfile<T>> {
    let text = fs::read_to_string(path)?;
    parse_velocity_raster(&text)
}

pub fn parse_velocity_raster<T: Real>(text: &str) -> Result<VelocityProfile<T>> {
    let mut lines = text.lines();
    let first = loop {
        match lines.next() {
            Some(l) if l.trim().is_empty() => continue,
            Some(l) => break l,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "empty raster file".into(),
                })
            }
        }
    };
    if let Some(rest) = first.trim().strip_prefix("VPROF") {
        let mut hdr = rest.split_whitespace();
        let nx: usize = parse_tok(hdr.next(), 1, "nx")?;
        let ny: usize = parse_tok(hdr.next(), 1, "ny")?;
        let mut raw = Vec::with_capacity(nx * ny);
        for (off, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: off + 2,
                    msg: format!("bad number {tok:?}"),
                })?;
                raw.push(T::of(v));
            }
        }
        if raw.len() != nx * ny {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected {} samples, found {}", nx * ny, raw.len()),
            });
        }
        Ok(VelocityProfile::Raster(Raster::from_samples(nx, ny, raw)?))
    } else {
        // CSV: infer nx from the first row
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (off, line) in std::iter::once(first).chain(lines).enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split(',') {
                let tok = tok.trim();
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: off + 1,
                    msg: format!("bad number {tok:?}"),
                })?;
                row.push(T::of(v));
            }
            if let Some(r0) = rows.first() {
                if row.len() != r0.len() {
                    return Err(Error::Parse {
                        line: off + 1,
                        msg: format!("row holds {} values, expected {}", row.len(), r0.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.len() < 2 {
            return Err(Error::Parse {
                line: 1,
                msg: "raster needs at least two rows".into(),
            });
        }
        let nx = rows[0].len();
        let ny = rows.len();
        let raw: Vec<T> = rows.into_iter().flatten().collect();
        Ok(VelocityProfile::Raster(Raster::from_samples(nx, ny, raw)?))
    }
}

fn parse_tok<V: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<V> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing or malformed {what} in header"),
    })
}

/// Wavenumber field k(x) = k_max * mu(x / s).
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberField<T: Real> {
    pub k_max: T,
    pub profile: VelocityProfile<T>,
}

impl<T: Real> WavenumberField<T> {
    pub fn new(profile: VelocityProfile<T>, k_max: T) -> Result<Self> {
        if !(k_max >= T::zero()) || !k_max.is_finite() {
            return Err(Error::config("k_max must be finite and nonnegative"));
        }
        Ok(WavenumberField { k_max, profile })
    }

    pub fn constant(k: T) -> Result<Self> {
        Self::new(VelocityProfile::Constant, k)
    }

    /// Evaluate k at physical coordinates on the domain (0, s)^2.
    #[inline]
    pub fn eval(&self, x: T, y: T, domain_size: T) -> T {
        self.k_max * self.profile.mu(x / domain_size, y / domain_size)
    }
}
