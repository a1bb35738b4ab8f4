//! Cold degenerate electron gas: Landau-quantized and field-free.
//!
//! Level weights generalize the uniform-field degeneracy: each level carries
//! `beta(nu) = (alpha(nu+1) - alpha(nu-1)) / 2`, with the virtual level
//! `alpha(-1) = 2 alpha(0) - alpha(1)`. For a uniform field this gives
//! `2b` per spin state, i.e. `g_0 = 1`, `g_nu = 2` after merging the spins.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::dispersion::{predict_alpha, DispersionFit};
use crate::error::{invalid, Error, Result};
use crate::field::{PowerLawField, Spin};
use crate::interp::Pchip;
use crate::spectrum::{solve_eigenvalue, QuantumState, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumSource {
    Analytic,
    Solver,
    DispersionFit,
    /// Field-free closed form.
    FieldFree,
}

/// Spin-resolved level ladder (`m = 0`, `x_z = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpectrum {
    pub alpha_minus: Vec<f64>,
    pub alpha_plus: Vec<f64>,
    pub source: SpectrumSource,
}

impl LevelSpectrum {
    pub fn new(alpha_minus: Vec<f64>, alpha_plus: Vec<f64>, source: SpectrumSource) -> Result<Self> {
        for (name, v) in [("alpha_minus", &alpha_minus), ("alpha_plus", &alpha_plus)] {
            if v.len() < 2 {
                return invalid(format!("{name} needs at least two levels"));
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) {
                return invalid(format!("{name} must be strictly increasing"));
            }
        }
        if alpha_minus[0].abs() > 1e-3 * alpha_minus[1] {
            return invalid(format!("spin-down ground level must sit at 0, got {}", alpha_minus[0]));
        }
        Ok(Self {
            alpha_minus,
            alpha_plus,
            source,
        })
    }

    /// Uniform field `b`, covering every level with `alpha <= alpha_max`
    /// plus one more per spin.
    pub fn uniform(b: f64, alpha_max: f64) -> Result<Self> {
        if !(b > 0.0) {
            return invalid(format!("uniform spectrum needs b > 0, got {b}"));
        }
        let top = (alpha_max.max(0.0) / (2.0 * b)).floor() as usize + 2;
        let minus = (0..=top).map(|nu| 2.0 * b * nu as f64).collect();
        let plus = (0..=top).map(|nu| 2.0 * b * (nu + 1) as f64).collect();
        Self::new(minus, plus, SpectrumSource::Analytic)
    }

    /// Numerical ladder for a power-law field (analytic when `n = 0`).
    pub fn from_solver(
        field: &PowerLawField,
        alpha_max: f64,
        cfg: &SolverConfig,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        field.validate()?;
        if field.n == 0.0 {
            return Self::uniform(consts.dimensionless_field(field.b0)?, alpha_max);
        }
        let ladder = |spin: Spin| -> Result<Vec<f64>> {
            let mut out: Vec<f64> = Vec::new();
            let batch = 8u32;
            let mut next = 0u32;
            // solve until two levels lie above alpha_max
            while out.len() < 2 || out[out.len() - 2] <= alpha_max {
                if next > cfg.max_level {
                    return Err(Error::SpectrumTooShort {
                        spin: spin.as_i8(),
                        needed_alpha: alpha_max,
                    });
                }
                let levels: Vec<u32> = (next..(next + batch).min(cfg.max_level + 1)).collect();
                let solved: Result<Vec<f64>> = levels
                    .par_iter()
                    .map(|&nu| {
                        solve_eigenvalue(field, &QuantumState::new(0, spin, nu), cfg, consts)
                            .map(|r| r.alpha)
                            .map_err(|e| Error::Level {
                                level: nu,
                                spin: spin.as_i8(),
                                source: Box::new(e),
                            })
                    })
                    .collect();
                out.extend(solved?);
                next += batch;
            }
            let keep = out.iter().position(|a| *a > alpha_max).map_or(out.len(), |i| i + 2);
            out.truncate(keep.min(out.len()));
            Ok(out)
        };
        let (minus, plus) = rayon::join(|| ladder(Spin::Down), || ladder(Spin::Up));
        Self::new(minus?, plus?, SpectrumSource::Solver)
    }

    /// Ladder predicted by a fitted dispersion relation.
    pub fn from_fit(fit: &DispersionFit, b0: f64, alpha_max: f64, max_level: u32) -> Result<Self> {
        if !fit.valid {
            return invalid(format!(
                "dispersion fit for n = {} is not valid for spin-resolved prediction",
                fit.n
            ));
        }
        let ladder = |spin: Spin| -> Result<Vec<f64>> {
            let mut v = Vec::new();
            for nu in 0..=max_level {
                v.push(predict_alpha(fit, nu, b0, Some(spin)));
                if v.len() >= 2 && v[v.len() - 2] > alpha_max {
                    return Ok(v);
                }
            }
            Err(Error::SpectrumTooShort {
                spin: spin.as_i8(),
                needed_alpha: alpha_max,
            })
        };
        Self::new(ladder(Spin::Down)?, ladder(Spin::Up)?, SpectrumSource::DispersionFit)
    }

    fn ladder(&self, spin: Spin) -> &[f64] {
        match spin {
            Spin::Down => &self.alpha_minus,
            Spin::Up => &self.alpha_plus,
        }
    }

    /// Level weight `beta(nu)` for one spin.
    pub fn weight(&self, spin: Spin, nu: usize) -> f64 {
        let a = self.ladder(spin);
        let below = if nu == 0 { 2.0 * a[0] - a[1] } else { a[nu - 1] };
        0.5 * (a[nu + 1] - below)
    }

    /// Highest occupied level per spin (`None` when the spin has none).
    pub fn max_level(&self, epsilon_f: f64) -> Result<(Option<u32>, Option<u32>)> {
        if !(epsilon_f >= 1.0) {
            return invalid(format!("epsilon_F must be at least 1, got {epsilon_f}"));
        }
        let limit = epsilon_f * epsilon_f - 1.0;
        let top = |spin: Spin| -> Result<Option<u32>> {
            let a = self.ladder(spin);
            // the weight of the last occupied level needs the next one
            if a[a.len() - 2] <= limit {
                return Err(Error::SpectrumTooShort {
                    spin: spin.as_i8(),
                    needed_alpha: limit,
                });
            }
            Ok(a.iter().rposition(|v| *v <= limit).map(|i| i as u32))
        };
        Ok((top(Spin::Down)?, top(Spin::Up)?))
    }

    /// Threshold Fermi energies `sqrt(1 + alpha)` of every stored level.
    pub fn thresholds(&self) -> Vec<f64> {
        self.alpha_minus
            .iter()
            .chain(&self.alpha_plus)
            .map(|a| (1.0 + a).sqrt())
            .collect()
    }

    /// Largest `epsilon_F` the ladder can serve.
    pub fn epsilon_f_limit(&self) -> f64 {
        let cap = |a: &[f64]| a[a.len() - 2];
        (1.0 + cap(&self.alpha_minus).min(cap(&self.alpha_plus))).sqrt()
    }
}

pub fn f1(z: f64) -> f64 {
    let r = (1.0 + z * z).sqrt();
    0.5 * (z * r + z.asinh())
}

pub fn f2(z: f64) -> f64 {
    if z < 1e-2 {
        // z sqrt(1+z^2) - asinh z = 2z^3/3 - z^5/5 + 3z^7/28
        let z2 = z * z;
        return 0.5 * z * z2 * (2.0 / 3.0 - z2 / 5.0 + 3.0 * z2 * z2 / 28.0);
    }
    let r = (1.0 + z * z).sqrt();
    0.5 * (z * r - z.asinh())
}

/// Thermodynamic state of the electron gas at one Fermi energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EosPoint {
    pub epsilon_f: f64,
    /// cm^-3
    pub n_e: f64,
    /// g cm^-3
    pub rho_mass: f64,
    /// erg cm^-3, rest mass included.
    pub energy_density: f64,
    /// erg cm^-3
    pub pressure: f64,
}

/// `(2 pi)^2 lambda_e^3` in cm^3.
fn phase_volume(consts: &PhysicalConstants) -> f64 {
    let l = consts.lambda_e_cm();
    4.0 * PI * PI * l * l * l
}

/// Per-spin sums of `beta x_F`, `beta (1+alpha) f1`, `beta (1+alpha) f2`.
fn level_sums(spec: &LevelSpectrum, epsilon_f: f64) -> Result<(f64, f64, f64)> {
    let (top_m, top_p) = spec.max_level(epsilon_f)?;
    let e2 = epsilon_f * epsilon_f;
    let mut sums = (0.0, 0.0, 0.0);
    for (spin, top) in [(Spin::Down, top_m), (Spin::Up, top_p)] {
        let Some(top) = top else { continue };
        let a = spec.ladder(spin);
        for nu in 0..=top as usize {
            let beta = spec.weight(spin, nu);
            let one = 1.0 + a[nu];
            let xf = (e2 - one).max(0.0).sqrt();
            let z = xf / one.sqrt();
            sums.0 += beta * xf;
            sums.1 += beta * one * f1(z);
            sums.2 += beta * one * f2(z);
        }
    }
    Ok(sums)
}

pub fn number_density(spec: &LevelSpectrum, epsilon_f: f64, consts: &PhysicalConstants) -> Result<f64> {
    Ok(level_sums(spec, epsilon_f)?.0 / phase_volume(consts))
}

/// `(energy density, pressure)` in erg cm^-3.
pub fn energy_and_pressure(spec: &LevelSpectrum, epsilon_f: f64, consts: &PhysicalConstants) -> Result<(f64, f64)> {
    let (_, e, p) = level_sums(spec, epsilon_f)?;
    let k = consts.me_c2 / phase_volume(consts);
    Ok((k * e, k * p))
}

pub fn eos_point(spec: &LevelSpectrum, epsilon_f: f64, mu_e: f64, consts: &PhysicalConstants) -> Result<EosPoint> {
    let (n, e, p) = level_sums(spec, epsilon_f)?;
    let v = phase_volume(consts);
    let n_e = n / v;
    Ok(EosPoint {
        epsilon_f,
        n_e,
        rho_mass: n_e * consts.m_p * mu_e,
        energy_density: consts.me_c2 * e / v,
        pressure: consts.me_c2 * p / v,
    })
}

/// Field-free degenerate gas at dimensionless Fermi momentum `x_F`.
pub fn chandrasekhar_eos(x_f: f64, mu_e: f64, consts: &PhysicalConstants) -> Result<EosPoint> {
    if !(x_f >= 0.0) || !x_f.is_finite() {
        return invalid(format!("Fermi momentum must be non-negative, got {x_f}"));
    }
    let l = consts.lambda_e_cm();
    let l3 = l * l * l;
    let x = x_f;
    let r = (1.0 + x * x).sqrt();
    let (p_br, e_br) = if x < 1e-2 {
        let x2 = x * x;
        let x3 = x2 * x;
        (
            x3 * x2 * (8.0 / 15.0 - 4.0 * x2 / 21.0 + x2 * x2 / 9.0),
            x3 * (8.0 / 3.0 + 4.0 * x2 / 5.0 - x2 * x2 / 7.0),
        )
    } else {
        (
            x * r * (2.0 * x * x / 3.0 - 1.0) + x.asinh(),
            x * r * (1.0 + 2.0 * x * x) - x.asinh(),
        )
    };
    let k = consts.me_c2 / (8.0 * PI * PI * l3);
    let n_e = x * x * x / (3.0 * PI * PI * l3);
    Ok(EosPoint {
        epsilon_f: r,
        n_e,
        rho_mass: n_e * consts.m_p * mu_e,
        energy_density: k * e_br,
        pressure: k * p_br,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EosMetadata {
    pub n: f64,
    /// G pm^-n; 0 for the field-free table.
    pub b0: f64,
    pub epsilon_f_max: f64,
    pub mu_e: f64,
    pub source: SpectrumSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EosTable {
    pub metadata: EosMetadata,
    pub points: Vec<EosPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EosConfig {
    pub epsilon_f_max: f64,
    pub grid_size: usize,
    pub mu_e: f64,
}

impl Default for EosConfig {
    fn default() -> Self {
        Self {
            epsilon_f_max: 17.0,
            grid_size: 400,
            mu_e: 2.0,
        }
    }
}

impl EosConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_f_max > 1.0) {
            return invalid(format!("epsilon_F_max must exceed 1, got {}", self.epsilon_f_max));
        }
        if self.grid_size < 4 {
            return invalid("EoS grid needs at least 4 points");
        }
        if !(self.mu_e > 0.0) {
            return invalid(format!("mu_e must be positive, got {}", self.mu_e));
        }
        Ok(())
    }
}

/// Tabulate a level ladder over `epsilon_F in (1, epsilon_f_max]`: a uniform
/// grid plus every level threshold in range.
pub fn tabulate(
    spec: &LevelSpectrum,
    metadata: EosMetadata,
    grid_size: usize,
    consts: &PhysicalConstants,
) -> Result<EosTable> {
    let emax = metadata.epsilon_f_max;
    if emax > spec.epsilon_f_limit() {
        return Err(Error::SpectrumTooShort {
            spin: 0,
            needed_alpha: emax * emax - 1.0,
        });
    }
    let mut grid: Vec<f64> = (1..=grid_size)
        .map(|i| 1.0 + (emax - 1.0) * i as f64 / grid_size as f64)
        .collect();
    grid.extend(spec.thresholds().into_iter().filter(|e| *e > 1.0 && *e < emax));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);
    let points: Result<Vec<EosPoint>> = grid
        .par_iter()
        .map(|&e| eos_point(spec, e, metadata.mu_e, consts))
        .collect();
    Ok(EosTable {
        metadata,
        points: points?,
    })
}

/// Landau-quantized table for a power-law field.
pub fn build_eos_table(
    field: &PowerLawField,
    eos: &EosConfig,
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
) -> Result<EosTable> {
    eos.validate()?;
    let alpha_max = eos.epsilon_f_max * eos.epsilon_f_max - 1.0;
    let spec = LevelSpectrum::from_solver(field, alpha_max, cfg, consts)?;
    let meta = EosMetadata {
        n: field.n,
        b0: field.b0,
        epsilon_f_max: eos.epsilon_f_max,
        mu_e: eos.mu_e,
        source: spec.source,
    };
    tabulate(&spec, meta, eos.grid_size, consts)
}

/// Field-free table on a uniform Fermi-energy grid, `b0 = 0` in the metadata.
pub fn chandrasekhar_table(eos: &EosConfig, consts: &PhysicalConstants) -> Result<EosTable> {
    eos.validate()?;
    let emax = eos.epsilon_f_max;
    let points = (1..=eos.grid_size)
        .map(|i| {
            let e: f64 = 1.0 + (emax - 1.0) * i as f64 / eos.grid_size as f64;
            chandrasekhar_eos((e * e - 1.0).sqrt(), eos.mu_e, consts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EosTable {
        metadata: EosMetadata {
            n: 0.0,
            b0: 0.0,
            epsilon_f_max: emax,
            mu_e: eos.mu_e,
            source: SpectrumSource::FieldFree,
        },
        points,
    })
}

impl EosTable {
    pub fn to_csv(&self, consts: &PhysicalConstants) -> String {
        let mut out = String::from("epsilon_F,n_e_cm3,rho_g_cm3,eps_erg_cm3,P_erg_cm3,P_norm,rho_norm\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.10},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                p.epsilon_f,
                p.n_e,
                p.rho_mass,
                p.energy_density,
                p.pressure,
                p.pressure / consts.pressure_unit,
                p.rho_mass / consts.density_unit
            ));
        }
        out
    }

    /// Monotone interpolant `P(rho)` over the table.
    pub fn interpolant(&self) -> Result<TabulatedEos> {
        let mut lr = Vec::with_capacity(self.points.len());
        let mut lp = Vec::with_capacity(self.points.len());
        for p in &self.points {
            if p.rho_mass > 0.0 && p.pressure > 0.0 {
                let (r, q) = (p.rho_mass.ln(), p.pressure.ln());
                if lr.last().is_none_or(|last: &f64| r > *last + 1e-12) {
                    lr.push(r);
                    lp.push(q);
                }
            }
        }
        TabulatedEos::new(lr, lp)
    }
}

/// Cubic monotone interpolation of `ln P` against `ln rho`, both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedEos {
    p_of_rho: Pchip,
    rho_of_p: Pchip,
}

impl TabulatedEos {
    pub fn new(ln_rho: Vec<f64>, ln_p: Vec<f64>) -> Result<Self> {
        if ln_p.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("tabulated pressure must increase with density");
        }
        Ok(Self {
            p_of_rho: Pchip::new(ln_rho.clone(), ln_p.clone())?,
            rho_of_p: Pchip::new(ln_p, ln_rho)?,
        })
    }

    pub fn rho_range(&self) -> (f64, f64) {
        let (a, b) = self.p_of_rho.domain();
        (a.exp(), b.exp())
    }

    pub fn pressure_range(&self) -> (f64, f64) {
        let (a, b) = self.rho_of_p.domain();
        (a.exp(), b.exp())
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        let (lo, hi) = self.rho_range();
        if !(rho >= lo * (1.0 - 1e-12) && rho <= hi * (1.0 + 1e-12)) {
            return Err(Error::DensityOutOfRange {
                density: rho,
                min: lo,
                max: hi,
            });
        }
        Ok(self.p_of_rho.eval(rho.ln()).exp())
    }

    pub fn density(&self, pressure: f64) -> Result<f64> {
        let (lo, hi) = self.pressure_range();
        if !(pressure >= lo * (1.0 - 1e-12) && pressure <= hi * (1.0 + 1e-12)) {
            return Err(Error::PressureOutOfRange {
                pressure,
                min: lo,
                max: hi,
            });
        }
        Ok(self.rho_of_p.eval(pressure.ln()).exp())
    }
}

/// Field-free EoS evaluated in closed form, inverted by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChandrasekharEos {
    pub mu_e: f64,
    pub consts: PhysicalConstants,
}

impl ChandrasekharEos {
    pub fn new(mu_e: f64, consts: PhysicalConstants) -> Self {
        Self { mu_e, consts }
    }

    fn point(&self, x: f64) -> EosPoint {
        chandrasekhar_eos(x, self.mu_e, &self.consts).expect("x is non-negative")
    }

    fn solve_x(&self, target: f64, quantity: impl Fn(&EosPoint) -> f64) -> f64 {
        // quantity is increasing in x; bracket in ln x
        let (mut lo, mut hi) = (-30.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if quantity(&self.point(mid.exp())) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    pub fn density(&self, pressure: f64) -> Result<f64> {
        if !(pressure > 0.0) {
            return invalid(format!("pressure must be positive, got {pressure}"));
        }
        Ok(self.point(self.solve_x(pressure, |p| p.pressure)).rho_mass)
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return invalid(format!("density must be positive, got {rho}"));
        }
        let l = self.consts.lambda_e_cm();
        let n_e = rho / (self.consts.m_p * self.mu_e);
        let x = (3.0 * PI * PI * l * l * l * n_e).cbrt();
        Ok(self.point(x).pressure)
    }
}
