//! Newtonian magnetostatic white dwarf structure.
//!
//! ```text
//! dP_e/dr = -G M (rho_e + rho_B) / r^2 - d(B^2 / 8 pi)/dr
//! dM/dr   = 4 pi r^2 (rho_e + rho_B),      rho_B = B^2 / (8 pi c^2)
//! ```
//!
//! Radii are integrated in km, pressure relative to the central value and
//! mass in solar masses.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, C_LIGHT, KM};
use crate::eos::{tabulate, ChandrasekharEos, EosMetadata, LevelSpectrum, TabulatedEos};
use crate::error::{invalid, Error, Result};
use crate::field::{PiecewiseField, PowerLawField};
use crate::ode::{self, Flow, Options};
use crate::spectrum::SolverConfig;

/// Equation of state used in one radial region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EosSpec {
    Chandrasekhar,
    /// Landau-quantized gas in a uniform field `b0` (G).
    LandauUniform {
        b0: f64,
        epsilon_f_max: f64,
    },
    /// Landau-quantized gas with the power-law spectrum (`b0` in G pm^-n).
    LandauPowerLaw {
        n: f64,
        b0: f64,
        epsilon_f_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EosRegion {
    /// Outer edge in km; `None` for the outermost region.
    pub r_upper_km: Option<f64>,
    pub eos: EosSpec,
}

/// How the electron pressure is continued across a field break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakTreatment {
    /// Only the in-segment field gradient acts; `P_e` is continuous.
    Smooth,
    /// `P_e + B^2/8 pi` is continuous, so `P_e` jumps at each break.
    TotalPressure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StellarConfig {
    pub mu_e: f64,
    pub field: PiecewiseField,
    pub eos_regions: Vec<EosRegion>,
    pub include_lorentz: bool,
    /// When false every region uses the Chandrasekhar EoS.
    pub include_lq: bool,
    pub include_rho_b: bool,
    pub break_treatment: BreakTreatment,
    /// Largest integration step, km.
    pub step_km: f64,
    pub rtol: f64,
    /// Surface where `P_e` falls below this fraction of the central value.
    pub surface_pressure_floor: f64,
    /// Surface where the outward magnetic-pressure force reaches this
    /// fraction of gravity; `None` disables the criterion.
    pub magnetic_support_limit: Option<f64>,
    pub max_radius_km: f64,
    /// Uniform Fermi-energy points of each Landau table.
    pub table_grid_size: usize,
    /// Central electron mass densities, g cm^-3.
    pub rho_c_grid: Vec<f64>,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl Default for StellarConfig {
    fn default() -> Self {
        Self::magnetized(2.0e15)
    }
}

impl StellarConfig {
    /// The B-WD profile: constant core field to 850 km with a Landau-quantized
    /// EoS (`epsilon_F,max = 18`), Chandrasekhar EoS outside.
    pub fn magnetized(b0: f64) -> Self {
        Self {
            mu_e: 2.0,
            field: PiecewiseField::white_dwarf_profile(b0),
            eos_regions: vec![
                EosRegion {
                    r_upper_km: Some(850.0),
                    eos: EosSpec::LandauUniform {
                        b0,
                        epsilon_f_max: 18.0,
                    },
                },
                EosRegion {
                    r_upper_km: None,
                    eos: EosSpec::Chandrasekhar,
                },
            ],
            include_lorentz: true,
            include_lq: true,
            include_rho_b: true,
            break_treatment: BreakTreatment::Smooth,
            step_km: 5.0,
            rtol: 1e-8,
            surface_pressure_floor: 1e-10,
            magnetic_support_limit: Some(0.5),
            max_radius_km: 1.0e6,
            table_grid_size: 2000,
            rho_c_grid: log_grid(1e8, 1.1e10, 17),
        }
    }

    /// Same field profile, Chandrasekhar EoS everywhere.
    pub fn lorentz_only(b0: f64) -> Self {
        Self {
            include_lq: false,
            rho_c_grid: log_grid(1e8, 1e11, 25),
            ..Self::magnetized(b0)
        }
    }

    /// Field-free Chandrasekhar star.
    pub fn nonmagnetic() -> Self {
        Self {
            field: PiecewiseField::none(),
            eos_regions: vec![EosRegion {
                r_upper_km: None,
                eos: EosSpec::Chandrasekhar,
            }],
            include_lorentz: false,
            include_lq: false,
            rho_c_grid: log_grid(1e6, 1e12, 31),
            ..Self::magnetized(0.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        if !(self.mu_e > 0.0) {
            return invalid(format!("mu_e must be positive, got {}", self.mu_e));
        }
        if !(self.step_km > 0.0) || !(self.rtol > 0.0) {
            return invalid("step_km and rtol must be positive");
        }
        if !(self.surface_pressure_floor > 0.0 && self.surface_pressure_floor < 1.0) {
            return invalid("surface_pressure_floor must lie in (0, 1)");
        }
        if let Some(f) = self.magnetic_support_limit {
            if !(f > 0.0) {
                return invalid("magnetic_support_limit must be positive");
            }
        }
        if !(self.max_radius_km > 1.0) {
            return invalid("max_radius_km must exceed 1 km");
        }
        if self.eos_regions.is_empty() || self.eos_regions.last().unwrap().r_upper_km.is_some() {
            return invalid("EoS regions must end with an unbounded region");
        }
        let mut prev = 0.0;
        for (i, reg) in self.eos_regions.iter().enumerate() {
            if let Some(r) = reg.r_upper_km {
                if !(r > prev) {
                    return invalid(format!("EoS region breaks must increase (region {i})"));
                }
                prev = r;
                if i == self.eos_regions.len() - 1 {
                    return invalid("last EoS region must be unbounded");
                }
            } else if i != self.eos_regions.len() - 1 {
                return invalid("only the last EoS region may be unbounded");
            }
        }
        if self.rho_c_grid.iter().any(|r| !(*r > 0.0)) {
            return invalid("central densities must be positive");
        }
        Ok(())
    }
}

/// A resolved equation of state.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionEos {
    Chandrasekhar(ChandrasekharEos),
    Table(TabulatedEos),
}

impl RegionEos {
    pub fn density(&self, pressure: f64) -> Result<f64> {
        match self {
            RegionEos::Chandrasekhar(e) => e.density(pressure),
            RegionEos::Table(t) => t.density(pressure),
        }
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        match self {
            RegionEos::Chandrasekhar(e) => e.pressure(rho),
            RegionEos::Table(t) => t.pressure(rho),
        }
    }
}

/// Why the integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceReason {
    PressureFloor,
    MagneticSupport,
    MaxRadius,
}

/// Config with every EoS table built.
#[derive(Debug, Clone)]
pub struct StellarModel {
    pub config: StellarConfig,
    pub consts: PhysicalConstants,
    regions: Vec<(Option<f64>, RegionEos)>,
}

impl StellarModel {
    pub fn new(config: StellarConfig, solver: &SolverConfig, consts: &PhysicalConstants) -> Result<Self> {
        config.validate()?;
        consts.validate()?;
        let chandra = RegionEos::Chandrasekhar(ChandrasekharEos::new(config.mu_e, *consts));
        let regions = config
            .eos_regions
            .par_iter()
            .map(|reg| {
                let eos = match (config.include_lq, reg.eos) {
                    (false, _) | (_, EosSpec::Chandrasekhar) => chandra.clone(),
                    (true, EosSpec::LandauUniform { b0, epsilon_f_max }) => {
                        let b = consts.dimensionless_field(b0)?;
                        let spec = LevelSpectrum::uniform(b, epsilon_f_max * epsilon_f_max)?;
                        RegionEos::Table(landau_table(&spec, 0.0, b0, epsilon_f_max, &config, consts)?)
                    }
                    (true, EosSpec::LandauPowerLaw { n, b0, epsilon_f_max }) => {
                        let field = PowerLawField::new(b0, n)?;
                        let spec = LevelSpectrum::from_solver(&field, epsilon_f_max * epsilon_f_max, solver, consts)?;
                        RegionEos::Table(landau_table(&spec, n, b0, epsilon_f_max, &config, consts)?)
                    }
                };
                Ok((reg.r_upper_km, eos))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            consts: *consts,
            regions,
        })
    }

    pub fn region_index(&self, r_km: f64) -> usize {
        self.regions
            .iter()
            .position(|(u, _)| u.is_none_or(|u| r_km < u))
            .unwrap_or(self.regions.len() - 1)
    }

    pub fn eos_at(&self, r_km: f64) -> &RegionEos {
        &self.regions[self.region_index(r_km)].1
    }

    /// Largest central density the central EoS can represent.
    pub fn max_central_density(&self) -> f64 {
        match &self.regions[0].1 {
            RegionEos::Chandrasekhar(_) => f64::INFINITY,
            RegionEos::Table(t) => t.rho_range().1,
        }
    }

    fn segment_field(&self, seg: usize, r_km: f64) -> f64 {
        let s = &self.config.field.segments[seg];
        if s.n == 0.0 {
            s.b0
        } else {
            s.b0 * r_km.powf(s.n)
        }
    }

    fn rho_b(&self, b: f64) -> f64 {
        if self.config.include_rho_b {
            b * b / (8.0 * PI * C_LIGHT * C_LIGHT)
        } else {
            0.0
        }
    }

    /// Gravity and Lorentz terms of `dP_e/dr` (erg cm^-4) and `dM/dr`
    /// (g cm^-1), evaluated with the EoS of region `reg` and field segment
    /// `seg`.
    fn terms(&self, r_km: f64, pressure: f64, mass_g: f64, reg: usize, seg: usize) -> Result<(f64, f64, f64)> {
        if !(pressure > 0.0) {
            return Err(Error::EosRange {
                radius_km: r_km,
                reason: format!("non-positive pressure {pressure}"),
            });
        }
        let rho = self.regions[reg].1.density(pressure).map_err(|e| Error::EosRange {
            radius_km: r_km,
            reason: e.to_string(),
        })?;
        let s = &self.config.field.segments[seg];
        let b = self.segment_field(seg, r_km);
        let rho_tot = rho + self.rho_b(b);
        let r = r_km * KM;
        let gravity = self.consts.g_newton * mass_g * rho_tot / (r * r);
        let lorentz = if self.config.include_lorentz && s.n != 0.0 {
            2.0 * s.n * b * b / (8.0 * PI) / r
        } else {
            0.0
        };
        Ok((gravity, lorentz, 4.0 * PI * r * r * rho_tot))
    }

    /// `(dP_e/dr, dM/dr)` in cgs at `r_km`.
    pub fn hydrostatic_rhs(&self, r_km: f64, pressure: f64, mass_g: f64) -> Result<(f64, f64)> {
        if !(r_km > 0.0) {
            return invalid(format!("radius must be positive, got {r_km}"));
        }
        let (g, l, m) = self.terms(
            r_km,
            pressure,
            mass_g,
            self.region_index(r_km),
            self.config.field.segment_index(r_km),
        )?;
        Ok((-g - l, m))
    }

    fn supported(&self, gravity: f64, lorentz: f64) -> bool {
        self.config
            .magnetic_support_limit
            .is_some_and(|f| -lorentz >= f * gravity && lorentz < 0.0)
    }

    /// Integrate one star outward from the centre.
    pub fn integrate_star(&self, rho_c: f64) -> Result<StarModel> {
        if !(rho_c > 0.0) {
            return invalid(format!("central density must be positive, got {rho_c}"));
        }
        let cfg = &self.config;
        let m_sun = self.consts.m_sun;
        let p_c = self.regions[0].1.pressure(rho_c).map_err(|e| Error::EosRange {
            radius_km: 0.0,
            reason: e.to_string(),
        })?;
        let floor = cfg.surface_pressure_floor;

        // integration pieces between field and EoS breaks
        let mut edges: Vec<f64> = cfg
            .field
            .breaks_km()
            .into_iter()
            .chain(self.regions.iter().filter_map(|(u, _)| *u))
            .filter(|r| *r < cfg.max_radius_km)
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges.push(cfg.max_radius_km);

        let r_seed = 1e-4;
        let b_c = cfg.field.field_at(r_seed);
        let rho_tot_c = rho_c + self.rho_b(b_c);
        let seed_mass = 4.0 / 3.0 * PI * (r_seed * KM).powi(3) * rho_tot_c;
        let mut r = r_seed;
        let mut y = [1.0, seed_mass / m_sun];
        let mut profile = Profile::default();
        let record = |prof: &mut Profile, r_km: f64, y: &[f64; 2], reg: usize, seg: usize| -> Result<()> {
            let p = y[0] * p_c;
            let rho = self.regions[reg].1.density(p).map_err(|e| Error::EosRange {
                radius_km: r_km,
                reason: e.to_string(),
            })?;
            prof.r_km.push(r_km);
            prof.mass_g.push(y[1] * m_sun);
            prof.pressure.push(p);
            prof.density.push(rho);
            prof.field.push(self.segment_field(seg, r_km));
            Ok(())
        };
        record(&mut profile, r, &y, 0, 0)?;

        let opts = Options {
            rtol: cfg.rtol,
            atol: 1e-14,
            h_init: 0.0,
            h_max: cfg.step_km,
            h_min: 1e-10,
            max_steps: 10_000_000,
        };
        let mut reason = SurfaceReason::MaxRadius;
        'pieces: for &edge in &edges {
            if r >= edge {
                continue;
            }
            let mid = 0.5 * (r + edge);
            let reg = self.region_index(mid);
            let seg = cfg.field.segment_index(mid);
            let failure: RefCell<Option<Error>> = RefCell::new(None);
            let rhs = |t: f64, s: &[f64; 2]| -> Option<[f64; 2]> {
                if !(s[0] > 0.0) {
                    return None;
                }
                match self.terms(t, s[0] * p_c, s[1] * m_sun, reg, seg) {
                    Ok((g, l, m)) => Some([(-g - l) * KM / p_c, m * KM / m_sun]),
                    Err(e) => {
                        *failure.borrow_mut() = Some(e);
                        None
                    }
                }
            };
            let at_surface = |t: f64, s: &[f64; 2]| -> Option<SurfaceReason> {
                if s[0] <= floor {
                    return Some(SurfaceReason::PressureFloor);
                }
                match self.terms(t, s[0] * p_c, s[1] * m_sun, reg, seg) {
                    Ok((g, l, _)) if self.supported(g, l) => Some(SurfaceReason::MagneticSupport),
                    Ok(_) => None,
                    Err(_) => Some(SurfaceReason::PressureFloor),
                }
            };
            let mut stop: Option<(f64, [f64; 2], SurfaceReason)> = None;
            let mut record_err: Option<Error> = None;
            let outcome = ode::integrate(rhs, r, y, edge, &opts, |step| {
                if let Some(why) = at_surface(step.t1, &step.y1) {
                    // locate the crossing on the dense output
                    let (mut a, mut b) = (step.t0, step.t1);
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        if at_surface(m, &step.interpolate(m)).is_some() {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    let ys = step.interpolate(b);
                    let why = at_surface(b, &ys).unwrap_or(why);
                    stop = Some((b, ys, why));
                    return Flow::Stop;
                }
                if let Err(e) = record(&mut profile, step.t1, &step.y1, reg, seg) {
                    record_err = Some(e);
                    return Flow::Stop;
                }
                Flow::Continue
            });
            if let Some(e) = record_err {
                return Err(e);
            }
            let outcome = match outcome {
                Ok(o) => o,
                Err(e) => return Err(failure.into_inner().unwrap_or(e)),
            };
            if let Some((rs, ys, why)) = stop {
                r = rs;
                y = ys;
                reason = why;
                if ys[0] > 0.0 {
                    record(&mut profile, rs, &ys, reg, seg).ok();
                }
                break 'pieces;
            }
            r = outcome.t;
            y = outcome.y;
            if edge >= cfg.max_radius_km {
                break;
            }

            // crossing a break
            if cfg.break_treatment == BreakTreatment::TotalPressure && cfg.include_lorentz {
                let b_in = self.segment_field(seg, edge);
                let b_out = cfg.field.field_at(edge);
                y[0] += (b_in * b_in - b_out * b_out) / (8.0 * PI) / p_c;
            }
            if y[0] <= floor {
                reason = SurfaceReason::PressureFloor;
                break;
            }
            let next_reg = self.region_index(edge);
            let next_seg = cfg.field.segment_index(edge);
            let (g, l, _) = self.terms(edge, y[0] * p_c, y[1] * m_sun, next_reg, next_seg)?;
            if self.supported(g, l) {
                reason = SurfaceReason::MagneticSupport;
                break;
            }
        }

        Ok(StarModel {
            rho_c,
            central_pressure: p_c,
            radius_km: r,
            mass_g: y[1] * m_sun,
            mass_solar: y[1],
            surface: reason,
            profile,
        })
    }

    /// One star per central density in the configured grid, in parallel.
    pub fn mass_radius_curve(&self) -> Result<Vec<CurvePoint>> {
        if self.config.rho_c_grid.is_empty() {
            return invalid("rho_c_grid is empty");
        }
        Ok(self
            .config
            .rho_c_grid
            .par_iter()
            .map(|&rho_c| match self.integrate_star(rho_c) {
                Ok(s) => CurvePoint {
                    rho_c,
                    mass_solar: Some(s.mass_solar),
                    radius_km: Some(s.radius_km),
                    surface: Some(s.surface),
                    error: None,
                },
                Err(e) => CurvePoint {
                    rho_c,
                    mass_solar: None,
                    radius_km: None,
                    surface: None,
                    error: Some(e.to_string()),
                },
            })
            .collect())
    }
}

fn landau_table(
    spec: &LevelSpectrum,
    n: f64,
    b0: f64,
    epsilon_f_max: f64,
    config: &StellarConfig,
    consts: &PhysicalConstants,
) -> Result<TabulatedEos> {
    let meta = EosMetadata {
        n,
        b0,
        epsilon_f_max,
        mu_e: config.mu_e,
        source: spec.source,
    };
    let mut table = tabulate(spec, meta, config.table_grid_size, consts)?;
    // low-density extension: log-spaced Fermi energies just above 1
    let first = table.points[0].epsilon_f;
    let mut low: Vec<_> = (0..40)
        .map(|i| 1.0 + ((first - 1.0).ln() + (1e-9f64.ln() - (first - 1.0).ln()) * (i + 1) as f64 / 40.0).exp())
        .map(|e| crate::eos::eos_point(spec, e, config.mu_e, consts))
        .collect::<Result<Vec<_>>>()?;
    low.reverse();
    low.extend(table.points);
    table.points = low;
    table.interpolant()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub r_km: Vec<f64>,
    pub mass_g: Vec<f64>,
    /// Electron pressure, erg cm^-3.
    pub pressure: Vec<f64>,
    /// Electron mass density, g cm^-3.
    pub density: Vec<f64>,
    /// Field, G.
    pub field: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarModel {
    pub rho_c: f64,
    pub central_pressure: f64,
    pub radius_km: f64,
    pub mass_g: f64,
    pub mass_solar: f64,
    pub surface: SurfaceReason,
    pub profile: Profile,
}

impl StarModel {
    pub fn to_csv(&self) -> String {
        let p = &self.profile;
        let mut out = String::from("r_km,M_g,P_cgs,rho_cgs,B_G\n");
        for i in 0..p.r_km.len() {
            out.push_str(&format!(
                "{:.6},{:.8e},{:.8e},{:.8e},{:.6e}\n",
                p.r_km[i], p.mass_g[i], p.pressure[i], p.density[i], p.field[i]
            ));
        }
        out
    }

    /// Trapezoidal `4 pi r^2 (rho_e + rho_B)` over the recorded profile,
    /// plus the central seed.
    pub fn quadrature_mass(&self, include_rho_b: bool) -> f64 {
        let p = &self.profile;
        let dens = |i: usize| {
            let rb = if include_rho_b {
                p.field[i] * p.field[i] / (8.0 * PI * C_LIGHT * C_LIGHT)
            } else {
                0.0
            };
            let r = p.r_km[i] * KM;
            4.0 * PI * r * r * (p.density[i] + rb)
        };
        let mut m = p.mass_g[0];
        for i in 1..p.r_km.len() {
            m += 0.5 * (dens(i - 1) + dens(i)) * (p.r_km[i] - p.r_km[i - 1]) * KM;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rho_c: f64,
    pub mass_solar: Option<f64>,
    pub radius_km: Option<f64>,
    pub surface: Option<SurfaceReason>,
    pub error: Option<String>,
}

pub fn curve_to_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("rho_c,M_solar,R_km\n");
    for p in curve {
        match (p.mass_solar, p.radius_km) {
            (Some(m), Some(r)) => out.push_str(&format!("{:.6e},{:.6},{:.4}\n", p.rho_c, m, r)),
            _ => out.push_str(&format!("{:.6e},NaN,NaN\n", p.rho_c)),
        }
    }
    out
}

/// Stars of a mass–density curve grouped by whether they end inside a field
/// break.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchAnalysis {
    pub break_km: f64,
    /// Runs of consecutive stars (curve indices) with `R < break_km`.
    pub branches: Vec<Vec<usize>>,
    /// Stars whose surface lies at or beyond the break.
    pub truncated: Vec<usize>,
    /// Mass gap between the first two branches, solar masses.
    pub mass_gap: Option<f64>,
    /// Relative change of `dM/d ln rho_c` where the stars first reach the break.
    pub slope_jump: Option<f64>,
}

impl BranchAnalysis {
    /// Two runs of stars inside the break separated by a mass gap of at
    /// least `min_gap` solar masses.
    pub fn has_two_branches(&self, min_gap: f64) -> bool {
        self.branches.len() >= 2 && self.mass_gap.is_some_and(|g| g >= min_gap)
    }
}

pub fn analyze_branches(curve: &[CurvePoint], break_km: f64) -> BranchAnalysis {
    let ok: Vec<(usize, f64, f64, f64)> = curve
        .iter()
        .enumerate()
        .filter_map(|(i, p)| Some((i, p.rho_c.ln(), p.mass_solar?, p.radius_km?)))
        .collect();
    let tol = 1e-3 * break_km;
    let inside = |p: &(usize, f64, f64, f64)| p.3 < break_km - tol;
    let mut branches: Vec<Vec<usize>> = Vec::new();
    let mut truncated = Vec::new();
    let mut prev_inside = false;
    for p in &ok {
        if inside(p) {
            if !prev_inside {
                branches.push(Vec::new());
            }
            branches.last_mut().unwrap().push(p.0);
        } else {
            truncated.push(p.0);
        }
        prev_inside = inside(p);
    }
    let mass = |i: usize| curve[i].mass_solar.unwrap();
    let mass_gap = (branches.len() >= 2).then(|| {
        let lo = branches[0].iter().map(|&i| mass(i)).fold(f64::MIN, f64::max);
        let hi = branches[1].iter().map(|&i| mass(i)).fold(f64::MAX, f64::min);
        hi - lo
    });
    let slope = |a: &(usize, f64, f64, f64), b: &(usize, f64, f64, f64)| (b.2 - a.2) / (b.1 - a.1);
    let slope_jump = ok
        .windows(2)
        .position(|w| inside(&w[0]) && !inside(&w[1]))
        .and_then(|t| {
            if t == 0 || t + 2 >= ok.len() || !inside(&ok[t - 1]) || inside(&ok[t + 2]) {
                return None;
            }
            Some((slope(&ok[t + 1], &ok[t + 2]) / slope(&ok[t - 1], &ok[t]) - 1.0).abs())
        });
    BranchAnalysis {
        break_km,
        branches,
        truncated,
        mass_gap,
        slope_jump,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(cfg: StellarConfig) -> StellarModel {
        StellarModel::new(cfg, &SolverConfig::default(), &PhysicalConstants::default()).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let m = model(StellarConfig::magnetized(2e15));
        let p = m.eos_at(10.0).pressure(1e9).unwrap();
        // constant core: no Lorentz term, and no gravity at the centre
        let (dp, dm) = m.hydrostatic_rhs(1e-6, p, 0.0).unwrap();
        assert_eq!(dp, 0.0);
        assert!(dm > 0.0);
        let (dp_in, _) = m.hydrostatic_rhs(100.0, p, 1e32).unwrap();
        assert!(dp_in < 0.0);
        // outer segments push outward
        let mut cfg = StellarConfig::magnetized(2e15);
        cfg.include_lq = false;
        let m = model(cfg);
        let (g_only, _) = {
            let mut c = m.config.clone();
            c.include_lorentz = false;
            model(c).hydrostatic_rhs(870.0, 1e20, 1e32).unwrap()
        };
        let (with_l, _) = m.hydrostatic_rhs(870.0, 1e20, 1e32).unwrap();
        assert!(with_l > g_only);
        assert!(m.hydrostatic_rhs(0.0, 1e20, 0.0).is_err());
        assert!(matches!(
            m.hydrostatic_rhs(10.0, -1.0, 1e30),
            Err(Error::EosRange { .. })
        ));
    }

    #[test]
    fn nonmagnetic_star_is_consistent() {
        let m = model(StellarConfig::nonmagnetic());
        let s = m.integrate_star(1e8).unwrap();
        assert_eq!(s.surface, SurfaceReason::PressureFloor);
        assert!(s.mass_solar > 1.0 && s.mass_solar < 1.44);
        let q = s.quadrature_mass(false);
        assert!((q / s.mass_g - 1.0).abs() < 1e-3, "{q} vs {}", s.mass_g);
        assert!(s.profile.mass_g.windows(2).all(|w| w[1] >= w[0]));
        assert!(s.profile.pressure.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn inert_lorentz_machinery_for_constant_field() {
        let mut a = StellarConfig::nonmagnetic();
        a.field = PiecewiseField::uniform(1e12);
        a.include_lorentz = true;
        let mut b = a.clone();
        b.include_lorentz = false;
        let sa = model(a).integrate_star(3e8).unwrap();
        let sb = model(b).integrate_star(3e8).unwrap();
        assert_eq!(sa.mass_g, sb.mass_g);
        assert_eq!(sa.radius_km, sb.radius_km);
    }

    #[test]
    fn curve_records_failures() {
        let mut cfg = StellarConfig::magnetized(2e15);
        cfg.rho_c_grid = vec![1e9, 1e13];
        let m = model(cfg);
        let c = m.mass_radius_curve().unwrap();
        assert!(c[0].mass_solar.is_some());
        assert!(c[1].error.is_some());
        assert_eq!(curve_to_csv(&c).lines().count(), 3);
    }

    #[test]
    fn config_validation() {
        let mut c = StellarConfig::magnetized(2e15);
        c.mu_e = 0.0;
        assert!(c.validate().is_err());
        let mut c = StellarConfig::magnetized(2e15);
        c.eos_regions[1].r_upper_km = Some(900.0);
        assert!(c.validate().is_err());
        let json = serde_json::to_string(&StellarConfig::magnetized(2e15)).unwrap();
        assert!(json.contains("landau-uniform"));
        let back: StellarConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, StellarConfig::magnetized(2e15));
        assert!(serde_json::from_str::<StellarConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn branch_analysis_on_synthetic_curve() {
        let pts = |v: &[(f64, f64, f64)]| -> Vec<CurvePoint> {
            v.iter()
                .map(|&(rho_c, m, r)| CurvePoint {
                    rho_c,
                    mass_solar: Some(m),
                    radius_km: Some(r),
                    surface: None,
                    error: None,
                })
                .collect()
        };
        let c = pts(&[
            (1e8, 0.3, 600.0),
            (2e8, 0.4, 800.0),
            (1e9, 0.7, 850.0),
            (1e10, 0.9, 700.0),
            (1e11, 1.0, 500.0),
        ]);
        let a = analyze_branches(&c, 850.0);
        assert_eq!(a.branches, vec![vec![0, 1], vec![3, 4]]);
        assert_eq!(a.truncated, vec![2]);
        assert!((a.mass_gap.unwrap() - 0.5).abs() < 1e-12);
        assert!(a.has_two_branches(0.1));
        assert!(!a.has_two_branches(0.6));
        let single = analyze_branches(&c[..2], 850.0);
        assert!(!single.has_two_branches(0.0));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn profile_invariants(log_rho in 7.0f64..10.5, magnetized in proptest::bool::ANY) {
            let cfg = if magnetized { StellarConfig::magnetized(2e15) } else { StellarConfig::lorentz_only(2e15) };
            let m = model(cfg);
            let rho_c = 10f64.powf(log_rho.min(if magnetized { 10.0 } else { 10.5 }));
            let s = m.integrate_star(rho_c).unwrap();
            let p = &s.profile;
            proptest::prop_assert!(p.mass_g.windows(2).all(|w| w[1] >= w[0]));
            let breaks = m.config.field.breaks_km();
            for i in 1..p.r_km.len() {
                let crosses = breaks.iter().any(|b| p.r_km[i - 1] <= *b && p.r_km[i] >= *b);
                proptest::prop_assert!(crosses || p.pressure[i] <= p.pressure[i - 1]);
            }
            let q = s.quadrature_mass(true);
            proptest::prop_assert!((q / s.mass_g - 1.0).abs() < 1e-3);
        }
    }
}
