use std::path::PathBuf;

use clap::{Args, ValueEnum};
use landau_core::dispersion::{fit_exponent, fits_to_csv, FitPlan};
use landau_core::eos::{build_eos_table, chandrasekhar_table, EosConfig};
use landau_core::field::effective_potential;
use landau_core::qspeed::{speed_sweep, sweep_to_csv, SpinorConvention};
use landau_core::spectrum::{solve_levels, QuantumState};
use landau_core::stellar::{analyze_branches, curve_to_csv, BreakTreatment, StellarConfig, StellarModel};
use landau_core::{PhysicalConstants, PowerLawField, SolverConfig, Spin};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::Artifact;

/// Settings shared by every command after merging file and flags.
pub struct Ctx {
    pub run: RunConfig,
    pub consts: PhysicalConstants,
    pub solver: SolverConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Field exponent n in B = B0 (rho + rho0)^n, n > -1
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<f64>,
    /// Field normalization B0 in G pm^-n (the field at rho = 1 pm)
    #[arg(long)]
    pub b0: Option<f64>,
    /// Softening length rho0 in pm
    #[arg(long)]
    pub rho0: Option<f64>,
}

impl Ctx {
    pub fn field(&self, a: &FieldArgs) -> Result<PowerLawField, CliError> {
        let f = &self.run.field;
        let n =
            a.n.or(f.n)
                .ok_or_else(|| CliError::Usage("field exponent --n is required".into()))?;
        let b0 =
            a.b0.or(f.b0)
                .ok_or_else(|| CliError::Usage("field normalization --b0 is required".into()))?;
        let rho0 = a.rho0.or(f.rho0).unwrap_or(landau_core::field::DEFAULT_RHO0_PM);
        Ok(PowerLawField::with_softening(b0, n, rho0)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Angular quantum number m
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub m: i32,
    /// Spin projection, -1 or +1
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub spin: i8,
    /// Number of levels, nu = 0 .. levels-1
    #[arg(long, default_value_t = 4)]
    pub levels: u32,
    /// Longitudinal momentum p_z / (m_e c)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x_z: f64,
    /// Drop the Zeeman term (spin-independent spectrum)
    #[arg(long)]
    pub no_zeeman: bool,
    /// Also write the normalized radial functions R(rho), pm^-1
    #[arg(long)]
    pub wavefunctions: bool,
}

#[derive(Serialize)]
struct LevelRow {
    nu: u32,
    m: i32,
    spin: i8,
    x_z: f64,
    zeeman: bool,
    alpha: f64,
    energy_mc2: f64,
    nodes: u32,
    residual: f64,
    converged: bool,
}

pub fn spectrum(a: &SpectrumArgs, ctx: &Ctx) -> Result<Vec<Artifact>, CliError> {
    let field = ctx.field(&a.field)?;
    if a.levels == 0 {
        return Err(CliError::Usage("--levels must be at least 1".into()));
    }
    let spin = Spin::from_i8(a.spin)?;
    let base = if a.no_zeeman {
        QuantumState::without_zeeman(a.m, 0)
    } else {
        QuantumState::new(a.m, spin, 0)
    };
    let state = QuantumState { x_z: a.x_z, ..base };
    let levels: Vec<u32> = (0..a.levels).collect();
    let results = solve_levels(&field, &state, &levels, &ctx.solver, &ctx.consts)?;
    let rows: Vec<LevelRow> = results
        .iter()
        .map(|r| LevelRow {
            nu: r.state.nu,
            m: r.state.m,
            spin: if a.no_zeeman { 0 } else { r.state.spin.as_i8() },
            x_z: r.state.x_z,
            zeeman: r.state.include_zeeman,
            alpha: r.alpha,
            energy_mc2: (1.0 + r.state.x_z * r.state.x_z + r.alpha).sqrt(),
            nodes: r.nodes,
            residual: r.residual,
            converged: r.converged,
        })
        .collect();
    let mut csv = String::from("nu,m,spin,x_z,zeeman,alpha,energy_mc2,nodes,residual,converged\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{:.10},{:.10},{},{:.3e},{}\n",
            r.nu, r.m, r.spin, r.x_z, r.zeeman, r.alpha, r.energy_mc2, r.nodes, r.residual, r.converged
        ));
    }
    let mut out = vec![Artifact::new("spectrum", csv, &rows)?];
    if a.wavefunctions {
        let upper = results.iter().map(|r| r.grid[r.grid.len() - 1]).fold(0.0, f64::max);
        let points = 2001;
        let grid: Vec<f64> = (0..points).map(|i| upper * i as f64 / (points - 1) as f64).collect();
        let columns: Vec<Vec<f64>> = results
            .iter()
            .map(|r| grid.iter().map(|&x| r.sample(x).0).collect())
            .collect();
        let mut csv = String::from("rho_pm");
        for r in &results {
            csv.push_str(&format!(",R_{}", r.state.nu));
        }
        csv.push('\n');
        for (i, x) in grid.iter().enumerate() {
            csv.push_str(&format!("{x:.8e}"));
            for c in &columns {
                csv.push_str(&format!(",{:.8e}", c[i]));
            }
            csv.push('\n');
        }
        #[derive(Serialize)]
        struct Wave<'a> {
            rho_pm: &'a [f64],
            r: &'a [Vec<f64>],
        }
        out.push(Artifact::new(
            "wavefunctions",
            csv,
            &Wave {
                rho_pm: &grid,
                r: &columns,
            },
        )?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Angular quantum number m
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub m: i32,
    /// Spin projection, -1 or +1
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub spin: i8,
    /// Smallest radius, pm
    #[arg(long, default_value_t = 0.01)]
    pub rho_min: f64,
    /// Largest radius, pm
    #[arg(long, default_value_t = 10.0)]
    pub rho_max: f64,
    /// Number of log-spaced sample radii
    #[arg(long, default_value_t = 400)]
    pub points: usize,
}

pub fn potential(a: &PotentialArgs, ctx: &Ctx) -> Result<Vec<Artifact>, CliError> {
    let field = ctx.field(&a.field)?;
    let spin = Spin::from_i8(a.spin)?;
    if !(a.rho_min > 0.0 && a.rho_max > a.rho_min) || a.points < 2 {
        return Err(CliError::Usage(
            "need 0 < --rho-min < --rho-max and --points >= 2".into(),
        ));
    }
    #[derive(Serialize)]
    struct Row {
        rho_pm: f64,
        b_gauss: f64,
        v_eff: f64,
    }
    let mut rows = Vec::with_capacity(a.points);
    for i in 0..a.points {
        let t = i as f64 / (a.points - 1) as f64;
        let rho = (a.rho_min.ln() + t * (a.rho_max / a.rho_min).ln()).exp();
        rows.push(Row {
            rho_pm: rho,
            b_gauss: field.field_at(rho),
            v_eff: effective_potential(&field, &ctx.consts, a.m, spin, rho)?,
        });
    }
    let mut csv = String::from("rho_pm,B_G,V_eff\n");
    for r in &rows {
        csv.push_str(&format!("{:.8e},{:.8e},{:.10e}\n", r.rho_pm, r.b_gauss, r.v_eff));
    }
    Ok(vec![Artifact::new("potential", csv, &rows)?])
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Field exponents to fit, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub n: Vec<f64>,
    /// Highest level nu sampled (levels 1..=max)
    #[arg(long)]
    pub max_level: Option<u32>,
    /// Field normalizations sampled, G pm^-n, comma separated
    #[arg(long, value_delimiter = ',')]
    pub fields: Vec<f64>,
}

pub fn fit(a: &FitArgs, ctx: &Ctx) -> Result<Vec<Artifact>, CliError> {
    let mut plan: FitPlan = ctx.run.fit.clone();
    if let Some(m) = a.max_level {
        plan.levels = (1..=m).collect();
    }
    if !a.fields.is_empty() {
        plan.fields = a.fields.clone();
    }
    let ns = if a.n.is_empty() {
        vec![0.0, -0.3, -0.5, -0.7, -0.9]
    } else {
        a.n.clone()
    };
    let fits = ns
        .iter()
        .map(|&n| fit_exponent(n, &plan, &ctx.solver, &ctx.consts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vec![Artifact::new("fits", fits_to_csv(&fits), &fits)?])
}

#[derive(Debug, Clone, Args)]
pub struct EosArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Largest Fermi energy, units of m_e c^2
    #[arg(long)]
    pub epsilon_f_max: Option<f64>,
    /// Uniform Fermi-energy grid points
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Mean molecular weight per electron
    #[arg(long)]
    pub mu_e: Option<f64>,
    /// Field-free closed form instead of a Landau-quantized table
    #[arg(long)]
    pub chandrasekhar: bool,
}

pub fn eos(a: &EosArgs, ctx: &Ctx) -> Result<Vec<Artifact>, CliError> {
    let mut cfg: EosConfig = ctx.run.eos;
    if let Some(v) = a.epsilon_f_max {
        cfg.epsilon_f_max = v;
    }
    if let Some(v) = a.grid_size {
        cfg.grid_size = v;
    }
    if let Some(v) = a.mu_e {
        cfg.mu_e = v;
    }
    let table = if a.chandrasekhar {
        if a.field.n.is_some() || a.field.b0.is_some() {
            return Err(CliError::Usage("--chandrasekhar takes no field parameters".into()));
        }
        chandrasekhar_table(&cfg, &ctx.consts)?
    } else {
        build_eos_table(&ctx.field(&a.field)?, &cfg, &ctx.solver, &ctx.consts)?
    };
    Ok(vec![Artifact::new("eos", table.to_csv(&ctx.consts), &table)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Constant core field to 850 km, LQ EoS inside 850 km
    Magnetized,
    /// Same field, Chandrasekhar EoS everywhere
    LorentzOnly,
    /// No field
    Nonmagnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BreakArg {
    Smooth,
    TotalPressure,
}

#[derive(Debug, Clone, Args)]
pub struct StellarArgs {
    /// Preset replacing the configuration's stellar block
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Core field of the preset profiles, G
    #[arg(long)]
    pub b_center: Option<f64>,
    /// Continuation of the electron pressure across field breaks
    #[arg(long, value_enum)]
    pub break_treatment: Option<BreakArg>,
    /// Surface where outward magnetic force reaches this fraction of gravity
    #[arg(long)]
    pub support_limit: Option<f64>,
    /// Disable the magnetic support surface criterion
    #[arg(long)]
    pub no_support_limit: bool,
    /// Leave the field's mass density B^2/(8 pi c^2) out
    #[arg(long)]
    pub no_rho_b: bool,
    /// Largest integration step, km
    #[arg(long)]
    pub step_km: Option<f64>,
}

impl StellarArgs {
    fn config(&self, ctx: &Ctx) -> StellarConfig {
        let b = self.b_center.unwrap_or(2.0e15);
        let mut cfg = match (self.profile, &ctx.run.stellar) {
            (Some(Profile::Magnetized), _) => StellarConfig::magnetized(b),
            (Some(Profile::LorentzOnly), _) => StellarConfig::lorentz_only(b),
            (Some(Profile::Nonmagnetic), _) => StellarConfig::nonmagnetic(),
            (None, Some(s)) if self.b_center.is_none() => s.clone(),
            (None, _) => StellarConfig::magnetized(b),
        };
        if let Some(t) = self.break_treatment {
            cfg.break_treatment = match t {
                BreakArg::Smooth => BreakTreatment::Smooth,
                BreakArg::TotalPressure => BreakTreatment::TotalPressure,
            };
        }
        if let Some(f) = self.support_limit {
            cfg.magnetic_support_limit = Some(f);
        }
        if self.no_support_limit {
            cfg.magnetic_support_limit = None;
        }
        if self.no_rho_b {
            cfg.include_rho_b = false;
        }
        if let Some(h) = self.step_km {
            cfg.step_km = h;
        }
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct StarArgs {
    #[command(flatten)]
    pub stellar: StellarArgs,
    /// Central electron mass density, g cm^-3
    #[arg(long)]
    pub rho_c: f64,
}

pub fn star(a: &StarArgs, ctx: &Ctx) -> Result<Vec<Artifact>, CliError> {
    let model = StellarModel::new(a.stellar.config(ctx), &ctx.solver, &ctx.consts)?;
    let s = model.integrate_star(a.rho_c)?;
    Ok(vec![Artifact::new("star_profile", s.to_csv(), &s)?])
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub stellar: StellarArgs,
    /// Lowest central density, g cm^-3
    #[arg(long)]
    pub rho_c_min: Option<f64>,
    /// Highest central density, g cm^-3
    #[arg(long)]
    pub rho_c_max: Option<f64>,
    /// Number of log-spaced central densities
    #[arg(long)]
    pub points: Option<usize>,
    /// Radius of the field break used for branch detection, km
    #[arg(long, default_value_t = 850.0)]
    pub break_km: f64,
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn mr_curve(a: &CurveArgs, ctx: &Ctx) -> Result<Vec<Artifact>, CliError> {
    let mut cfg = a.stellar.config(ctx);
    if a.rho_c_min.is_some() || a.rho_c_max.is_some() || a.points.is_some() {
        let lo = a.rho_c_min.unwrap_or(cfg.rho_c_grid[0]);
        let hi = a.rho_c_max.unwrap_or(*cfg.rho_c_grid.last().unwrap_or(&lo));
        let n = a.points.unwrap_or(cfg.rho_c_grid.len());
        if !(lo > 0.0 && hi >= lo) || n == 0 {
            return Err(CliError::Usage(
                "need 0 < --rho-c-min <= --rho-c-max and --points >= 1".into(),
            ));
        }
        cfg.rho_c_grid = log_grid(lo, hi, n);
    }
    let model = StellarModel::new(cfg, &ctx.solver, &ctx.consts)?;
    let curve = model.mass_radius_curve()?;
    let branches = analyze_branches(&curve, a.break_km);
    let opt = |v: Option<f64>| v.map_or("NaN".to_string(), |v| format!("{v:.6}"));
    let branch_csv = format!(
        "break_km,branches,truncated,mass_gap,slope_jump\n{},{},{},{},{}\n",
        branches.break_km,
        branches.branches.len(),
        branches.truncated.len(),
        opt(branches.mass_gap),
        opt(branches.slope_jump)
    );
    Ok(vec![
        Artifact::new("mr_curve", curve_to_csv(&curve), &curve)?,
        Artifact::new("branches", branch_csv, &branches)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Dirac,
    EqualComponents,
}

impl From<ConventionArg> for SpinorConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Dirac => SpinorConvention::Dirac,
            ConventionArg::EqualComponents => SpinorConvention::EqualComponents,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct QspeedArgs {
    /// Field exponents, comma separated (each > -1)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub n: Vec<f64>,
    /// Field normalization B0, G pm^-n
    #[arg(long)]
    pub b0: Option<f64>,
    /// Treatment of the lower spinor components
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
}

pub fn qspeed(a: &QspeedArgs, ctx: &Ctx) -> Result<Vec<Artifact>, CliError> {
    let block = &ctx.run.qspeed;
    let ns = if a.n.is_empty() {
        block.exponents.clone()
    } else {
        a.n.clone()
    };
    let b0 = a.b0.unwrap_or(block.b0);
    let convention = a.convention.map_or(block.convention, SpinorConvention::from);
    let rows = speed_sweep(&ns, b0, convention, &ctx.solver, &ctx.consts)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vec![Artifact::new("qspeed", sweep_to_csv(&rows), &rows)?])
}
