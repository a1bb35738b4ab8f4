//! Physical constants and the dimensionless unit system.
//!
//! Spectral work is done in units where lengths are measured in electron
//! reduced Compton wavelengths (`x = rho / lambda_e`), fields in units of the
//! critical field (`b = B / B_crit`) and energies in `m_e c^2`. Physical units
//! (pm, G, cgs) only appear at I/O boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Critical field implied by the uniform-field eigenvalue `2 b (nu + 1/2) = 22.2094`
/// at `B = 1e15 G`.
pub const B_CRIT_TABLE: f64 = 1.0e15 / 22.2094;

/// Schwinger critical field `m_e^2 c^3 / (e hbar)` in G (CODATA 2018).
pub const B_CRIT_SCHWINGER: f64 = 4.414_005_8e13;

/// Speed of light in cm s^-1.
pub const C_LIGHT: f64 = 2.997_924_58e10;

/// One kilometre in cm.
pub const KM: f64 = 1.0e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    /// Electron reduced Compton wavelength `hbar / (m_e c)` in pm.
    pub lambda_e_pm: f64,
    /// Critical field in G.
    pub b_crit: f64,
    /// Electron rest energy in erg.
    pub me_c2: f64,
    /// Reduced Planck constant in erg s.
    pub hbar: f64,
    /// Proton mass in g.
    pub m_p: f64,
    /// Newton's constant in cgs.
    pub g_newton: f64,
    /// Solar mass in g.
    pub m_sun: f64,
    /// Pressure unit used for normalized EoS output, erg cm^-3.
    pub pressure_unit: f64,
    /// Density unit used for normalized EoS output, g cm^-3.
    pub density_unit: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            lambda_e_pm: 0.386_159_267_96,
            b_crit: B_CRIT_TABLE,
            me_c2: 8.187_105_777_6e-7,
            hbar: 1.054_571_817e-27,
            m_p: 1.672_621_923_69e-24,
            g_newton: 6.674_30e-8,
            m_sun: 1.988_47e33,
            pressure_unit: 2.668e27,
            density_unit: 2.0e9,
        }
    }
}

impl PhysicalConstants {
    /// Defaults with the CODATA Schwinger field instead of the table-derived one.
    pub fn schwinger() -> Self {
        Self {
            b_crit: B_CRIT_SCHWINGER,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda_e_pm", self.lambda_e_pm),
            ("b_crit", self.b_crit),
            ("me_c2", self.me_c2),
            ("hbar", self.hbar),
            ("m_p", self.m_p),
            ("g_newton", self.g_newton),
            ("m_sun", self.m_sun),
            ("pressure_unit", self.pressure_unit),
            ("density_unit", self.density_unit),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("constant {name} must be positive, got {v}"));
            }
        }
        if (self.lambda_e_pm / 0.386 - 1.0).abs() > 0.01 {
            return invalid(format!(
                "lambda_e_pm = {} is not within 1% of 0.386 pm",
                self.lambda_e_pm
            ));
        }
        Ok(())
    }

    /// Reduced Compton wavelength in cm.
    pub fn lambda_e_cm(&self) -> f64 {
        self.lambda_e_pm * 1.0e-10
    }

    /// `B / B_crit`.
    pub fn dimensionless_field(&self, b_gauss: f64) -> Result<f64> {
        if !(b_gauss >= 0.0) || !b_gauss.is_finite() {
            return invalid(format!("field must be non-negative, got {b_gauss}"));
        }
        Ok(b_gauss / self.b_crit)
    }

    /// Electron speed-of-light combination `hbar c` checked against `lambda_e m_e c^2`.
    pub fn hbar_c(&self) -> f64 {
        self.lambda_e_cm() * self.me_c2
    }
}

/// Dimensionless energy `sqrt(1 + x_z^2 + alpha)` in units of `m_e c^2`.
pub fn energy_from_alpha(alpha: f64, x_z: f64) -> Result<f64> {
    let arg = 1.0 + x_z * x_z + alpha;
    if !(arg >= 0.0) {
        return invalid(format!(
            "nonphysical state: 1 + x_z^2 + alpha = {arg} < 0 (alpha = {alpha})"
        ));
    }
    Ok(arg.sqrt())
}
