//! Magnetic field profiles and the effective potential seen by the electron.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};

/// Default softening length in pm.
pub const DEFAULT_RHO0_PM: f64 = 1.0e-5;

/// Sign of the `sigma . B` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Spin {
    /// `-sigma.B`: carries the zero-energy ground level.
    Down,
    /// `+sigma.B`.
    Up,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Down => -1.0,
            Spin::Up => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Spin::Down => -1,
            Spin::Up => 1,
        }
    }

    pub fn from_i8(s: i8) -> Result<Self> {
        match s {
            -1 => Ok(Spin::Down),
            1 => Ok(Spin::Up),
            other => invalid(format!("spin must be +1 or -1, got {other}")),
        }
    }
}

/// Quantum-scale field `B = B0 (rho + rho0)^n` along z, with `rho` in pm and
/// `B0` in G pm^-n (so `B0` is the field at 1 pm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawField {
    pub b0: f64,
    pub n: f64,
    #[serde(default = "default_rho0")]
    pub rho0: f64,
}

fn default_rho0() -> f64 {
    DEFAULT_RHO0_PM
}

impl PowerLawField {
    pub fn new(b0: f64, n: f64) -> Result<Self> {
        Self::with_softening(b0, n, DEFAULT_RHO0_PM)
    }

    pub fn with_softening(b0: f64, n: f64, rho0: f64) -> Result<Self> {
        let field = Self { b0, n, rho0 };
        field.validate()?;
        Ok(field)
    }

    /// Profile that skips the `n > -1` restriction; only meant for inspecting
    /// the effective potential of repulsive (`n <= -1`) profiles.
    pub fn unrestricted(b0: f64, n: f64, rho0: f64) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return invalid(format!("B0 must be positive, got {b0}"));
        }
        if !(rho0 >= 0.0) {
            return invalid(format!("rho0 must be non-negative, got {rho0}"));
        }
        if (n + 2.0).abs() < 1e-12 {
            return invalid("n = -2 makes the vector potential singular");
        }
        Ok(Self { b0, n, rho0 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > -1.0) || !self.n.is_finite() {
            return Err(Error::UnsupportedExponent(self.n));
        }
        if !(self.b0 > 0.0 && self.b0.is_finite()) {
            return invalid(format!("B0 must be positive, got {}", self.b0));
        }
        if !(self.rho0 >= 0.0 && self.rho0.is_finite()) {
            return invalid(format!("rho0 must be non-negative, got {}", self.rho0));
        }
        Ok(())
    }

    /// Field magnitude in G at `rho` pm.
    pub fn field_at(&self, rho: f64) -> f64 {
        self.b0 * (rho + self.rho0).powf(self.n)
    }

    /// Dimensionless view of this profile for a given set of constants.
    pub fn scaled(&self, consts: &PhysicalConstants) -> ScaledField {
        ScaledField {
            b1: self.b0 / consts.b_crit,
            n: self.n,
            lambda: consts.lambda_e_pm,
            rho0: self.rho0,
        }
    }
}

/// Power-law field expressed in the solver's variables: `x = rho / lambda_e`,
/// `b(x) = B(rho) / B_crit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledField {
    /// `B0 / B_crit` (field at 1 pm in critical units).
    pub b1: f64,
    pub n: f64,
    /// `lambda_e` in pm.
    pub lambda: f64,
    /// Softening in pm.
    pub rho0: f64,
}

impl ScaledField {
    #[inline]
    pub fn b(&self, x: f64) -> f64 {
        if self.n == 0.0 {
            self.b1
        } else {
            self.b1 * (self.lambda * x + self.rho0).powf(self.n)
        }
    }

    /// Dimensionless vector potential `a(x) = (1/x) * integral_0^x b(x') x' dx'`.
    ///
    /// Reduces to `b x / (n+2)` without softening; with softening it keeps
    /// `a' + a/x = b` exactly.
    pub fn vector_potential(&self, x: f64) -> f64 {
        let n = self.n;
        if n == 0.0 || self.rho0 == 0.0 || n <= -1.0 {
            return self.b(x) * x / (n + 2.0);
        }
        let rho = self.lambda * x;
        let r0 = self.rho0;
        let u = rho / r0;
        // integral_0^rho (rho' + rho0)^n rho' drho'
        let integral = if u < 1e-3 {
            r0.powf(n) * rho * rho * (0.5 + u * n / 3.0 + u * u * n * (n - 1.0) / 8.0)
        } else {
            let s = rho + r0;
            s.powf(n + 2.0) / (n + 2.0) - r0 * s.powf(n + 1.0) / (n + 1.0) + r0.powf(n + 2.0) / ((n + 1.0) * (n + 2.0))
        };
        self.b1 * integral / (x * self.lambda * self.lambda)
    }

    /// Potential of the radial equation for `R` (no centrifugal term):
    /// `a^2 + b (-2m a / (b x) + s)`, i.e. `(b x / (n+2))^2 + b (-2m/(n+2) + s)`
    /// for the unsoftened power law. The spin term is dropped when `zeeman`
    /// is false.
    #[inline]
    pub fn radial_potential(&self, x: f64, m: i32, spin: Spin, zeeman: bool) -> f64 {
        let a = self.vector_potential(x);
        let mut v = a * a - 2.0 * f64::from(m) * a / x;
        if zeeman {
            v += spin.sign() * self.b(x);
        }
        v
    }

    /// Effective potential for `u = R sqrt(x)`: adds `(m^2 - 1/4) / x^2`.
    #[inline]
    pub fn effective_potential(&self, x: f64, m: i32, spin: Spin, zeeman: bool) -> f64 {
        let mm = f64::from(m) * f64::from(m);
        (mm - 0.25) / (x * x) + self.radial_potential(x, m, spin, zeeman)
    }

    /// Local decay rate of the asymptotic envelope, `a(x)`.
    #[inline]
    pub fn decay_rate(&self, x: f64) -> f64 {
        self.vector_potential(x)
    }
}

/// Effective potential (dimensionless, on the same scale as the eigenvalue) at
/// `rho` pm, including the Zeeman term.
pub fn effective_potential(
    field: &PowerLawField,
    consts: &PhysicalConstants,
    m: i32,
    spin: Spin,
    rho: f64,
) -> Result<f64> {
    if !(rho > 0.0) {
        return invalid(format!("effective potential is singular at rho = {rho}"));
    }
    let x = rho / consts.lambda_e_pm;
    Ok(field.scaled(consts).effective_potential(x, m, spin, true))
}

/// One segment of a stellar field profile: `B = b0 (r / 1 km)^n` for
/// `r < r_upper_km` (unbounded when `r_upper_km` is `None`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSegment {
    pub r_upper_km: Option<f64>,
    pub n: f64,
    pub b0: f64,
}

/// Radial stellar field built from power-law segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseField {
    pub segments: Vec<FieldSegment>,
}

impl PiecewiseField {
    pub fn new(segments: Vec<FieldSegment>) -> Result<Self> {
        let field = Self { segments };
        field.validate()?;
        Ok(field)
    }

    /// Constant field everywhere (zero field allowed).
    pub fn uniform(b0: f64) -> Self {
        Self {
            segments: vec![FieldSegment {
                r_upper_km: None,
                n: 0.0,
                b0,
            }],
        }
    }

    /// Field-free star.
    pub fn none() -> Self {
        Self::uniform(0.0)
    }

    /// Constant core to 850 km, `r^-0.37` to 900 km, `r^-0.99` outside, all
    /// with the same normalization (discontinuous at both breaks).
    pub fn white_dwarf_profile(b0: f64) -> Self {
        Self {
            segments: vec![
                FieldSegment {
                    r_upper_km: Some(850.0),
                    n: 0.0,
                    b0,
                },
                FieldSegment {
                    r_upper_km: Some(900.0),
                    n: -0.37,
                    b0,
                },
                FieldSegment {
                    r_upper_km: None,
                    n: -0.99,
                    b0,
                },
            ],
        }
    }

    /// Same segment exponents, but each outer normalization rescaled so the
    /// field is continuous at every break.
    pub fn continuous(&self) -> Self {
        let mut segments = self.segments.clone();
        for i in 1..segments.len() {
            let r = segments[i - 1]
                .r_upper_km
                .expect("validated: only the last segment is unbounded");
            let inner = segments[i - 1].b0 * r.powf(segments[i - 1].n);
            segments[i].b0 = inner / r.powf(segments[i].n);
        }
        Self { segments }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return invalid("field profile needs at least one segment");
        }
        let last = self.segments.len() - 1;
        let mut prev = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.b0 >= 0.0 && seg.b0.is_finite() && seg.n.is_finite()) {
                return invalid(format!("segment {i} has invalid b0/n"));
            }
            match seg.r_upper_km {
                Some(r) if i == last => return invalid(format!("last segment must be unbounded, got r_upper = {r}")),
                None if i != last => return invalid(format!("only the last segment may be unbounded (segment {i})")),
                Some(r) if !(r > prev) => {
                    return invalid(format!("segment breaks must increase strictly (segment {i})"))
                }
                Some(r) => prev = r,
                None => {}
            }
        }
        Ok(())
    }

    /// Index of the segment containing `r_km`.
    pub fn segment_index(&self, r_km: f64) -> usize {
        self.segments
            .iter()
            .position(|s| s.r_upper_km.is_none_or(|u| r_km < u))
            .unwrap_or(self.segments.len() - 1)
    }

    /// Break radii in km, in increasing order.
    pub fn breaks_km(&self) -> Vec<f64> {
        self.segments.iter().filter_map(|s| s.r_upper_km).collect()
    }

    fn eval(seg: &FieldSegment, r_km: f64) -> f64 {
        if seg.n == 0.0 {
            seg.b0
        } else {
            seg.b0 * r_km.powf(seg.n)
        }
    }

    /// Field magnitude in G at `r_km`.
    pub fn field_at(&self, r_km: f64) -> f64 {
        Self::eval(&self.segments[self.segment_index(r_km)], r_km)
    }

    /// `d(B^2 / 8 pi) / dr` in erg cm^-4 from the analytic derivative of the
    /// active segment (breaks contribute nothing here).
    pub fn magnetic_pressure_gradient(&self, r_km: f64) -> f64 {
        let seg = &self.segments[self.segment_index(r_km)];
        if seg.n == 0.0 || seg.b0 == 0.0 {
            return 0.0;
        }
        let b = Self::eval(seg, r_km);
        2.0 * seg.n * b * b / (8.0 * std::f64::consts::PI) / (r_km * crate::constants::KM)
    }

    pub fn is_field_free(&self) -> bool {
        self.segments.iter().all(|s| s.b0 == 0.0)
    }
}
