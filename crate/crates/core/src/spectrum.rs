//! Landau-level eigenvalues and radial wavefunctions.
//!
//! The radial equation in the dimensionless radius `x = rho / lambda_e` reads
//!
//! ```text
//! alpha R = -(R'' + R'/x - m^2 R / x^2) + V(x) R
//! V(x)    = (b(x) x / (n+2))^2 + b(x) (-2m/(n+2) +/- 1)
//! ```
//!
//! It is integrated in `t = ln x`, where it becomes `R_tt = (m^2 + x^2 (V - alpha)) R`
//! and the `1/x` terms at the origin disappear. Eigenvalues are bracketed by
//! counting nodes of the outward solution on a truncated domain (Sturm
//! counting), then refined by matching the outward solution against an
//! inward solution started on the decaying envelope, at the outer classical
//! turning point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};
use crate::field::{PowerLawField, ScaledField, Spin};
use crate::ode::{self, Flow, Options};

/// Identifies one eigenstate of the radial problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    pub m: i32,
    pub spin: Spin,
    pub nu: u32,
    pub x_z: f64,
    pub include_zeeman: bool,
}

impl QuantumState {
    pub fn new(m: i32, spin: Spin, nu: u32) -> Self {
        Self {
            m,
            spin,
            nu,
            x_z: 0.0,
            include_zeeman: true,
        }
    }

    /// Spin-independent level used for the no-Zeeman spectra.
    pub fn without_zeeman(m: i32, nu: u32) -> Self {
        Self {
            m,
            spin: Spin::Down,
            nu,
            x_z: 0.0,
            include_zeeman: false,
        }
    }

    pub fn with_nu(self, nu: u32) -> Self {
        Self { nu, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Inner start of the outward integration, pm.
    pub rho_start: f64,
    /// Relative eigenvalue tolerance (absolute below |alpha| = 1).
    pub alpha_tol: f64,
    pub max_bisections: usize,
    /// Local relative error target of the Runge–Kutta integrator.
    pub rk_tolerance: f64,
    /// Outer boundary as a multiple of the outer classical turning point.
    pub outer_radius_rule: f64,
    /// Minimum WKB attenuation exponent between turning point and boundary.
    pub decay_exponent: f64,
    /// Largest step in `ln x`.
    pub max_step: f64,
    pub max_level: u32,
    /// Points of the uniform radial grid used for the returned wavefunction.
    pub grid_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho_start: 1e-10,
            alpha_tol: 1e-6,
            max_bisections: 200,
            rk_tolerance: 1e-10,
            outer_radius_rule: 3.0,
            decay_exponent: 20.0,
            max_step: 0.1,
            max_level: 200,
            grid_points: 4001,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho_start", self.rho_start),
            ("alpha_tol", self.alpha_tol),
            ("rk_tolerance", self.rk_tolerance),
            ("outer_radius_rule", self.outer_radius_rule),
            ("decay_exponent", self.decay_exponent),
            ("max_step", self.max_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("solver setting {name} must be positive, got {v}"));
            }
        }
        if self.outer_radius_rule < 1.0 {
            return invalid("outer_radius_rule must be at least 1");
        }
        if self.max_bisections == 0 || self.grid_points < 16 {
            return invalid("max_bisections must be positive and grid_points >= 16");
        }
        Ok(())
    }
}

/// A solved eigenstate. `r` is normalized so that `sum R^2 rho drho = 1`
/// (trapezoidal rule on `grid`, rho in pm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub state: QuantumState,
    pub alpha: f64,
    pub nodes: u32,
    /// Uniform radial grid in pm, starting at 0.
    pub grid: Vec<f64>,
    pub r: Vec<f64>,
    /// `dR/drho` on the grid, pm^-1 per pm.
    pub slope: Vec<f64>,
    /// Normalized Wronskian mismatch at the matching point.
    pub residual: f64,
    pub converged: bool,
    pub match_radius: f64,
    pub outer_radius: f64,
    pub iterations: usize,
}

impl EigenResult {
    /// `|R|` at the outer boundary relative to the peak.
    pub fn boundary_amplitude(&self) -> f64 {
        let peak = self.r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.r.last().map_or(0.0, |v| v.abs()) / peak
    }

    /// Value and slope at `rho` (pm) by cubic Hermite interpolation; zero
    /// beyond the grid.
    pub fn sample(&self, rho: f64) -> (f64, f64) {
        let n = self.grid.len();
        if rho <= self.grid[0] {
            return (self.r[0], self.slope[0]);
        }
        if rho >= self.grid[n - 1] {
            return (0.0, 0.0);
        }
        let h = self.grid[1] - self.grid[0];
        let i = (((rho - self.grid[0]) / h) as usize).min(n - 2);
        let y = ode::hermite(
            self.grid[i],
            self.grid[i + 1],
            &[self.r[i]],
            &[self.r[i + 1]],
            &[self.slope[i]],
            &[self.slope[i + 1]],
            rho,
        );
        // derivative: linear blend of slopes is accurate enough for resampling
        let s = (rho - self.grid[i]) / h;
        (y[0], self.slope[i] * (1.0 - s) + self.slope[i + 1] * s)
    }
}

/// Closed-form uniform-field eigenvalue.
///
/// With the spin term: `2b (nu + |m|/2 - m/2 + 1/2 + s/2)`, `s = +1` for
/// `Spin::Up`. Without it the `s/2` term is dropped.
pub fn alpha_uniform_analytic(state: &QuantumState, b: f64) -> Result<f64> {
    if !(b >= 0.0) {
        return invalid(format!("dimensionless field must be non-negative, got {b}"));
    }
    let m = f64::from(state.m);
    let mut level = f64::from(state.nu) + 0.5 * m.abs() - 0.5 * m + 0.5;
    if state.include_zeeman {
        level += 0.5 * state.spin.sign();
    }
    Ok(2.0 * b * level)
}

#[derive(Debug, Clone, Copy)]
struct Problem {
    field: ScaledField,
    m: i32,
    spin: Spin,
    zeeman: bool,
    x_start: f64,
}

type Sample = (f64, [f64; 2], [f64; 2]);

struct Shot {
    nodes: u32,
    end: [f64; 2],
    samples: Vec<Sample>,
}

const RESCALE_ABOVE: f64 = 1e150;

impl Problem {
    fn q(&self, x: f64, alpha: f64) -> f64 {
        let mm = f64::from(self.m * self.m);
        mm + x * x * (self.field.radial_potential(x, self.m, self.spin, self.zeeman) - alpha)
    }

    fn veff(&self, x: f64) -> f64 {
        self.field.effective_potential(x, self.m, self.spin, self.zeeman)
    }

    fn rhs(&self, alpha: f64) -> impl Fn(f64, &[f64; 2]) -> Option<[f64; 2]> + '_ {
        move |t, y| {
            let x = t.exp();
            Some([y[1], self.q(x, alpha) * y[0]])
        }
    }

    /// Largest `x` with `V_eff(x) = alpha`, if the classically allowed region
    /// is non-empty.
    fn outer_turning_point(&self, alpha: f64) -> Option<f64> {
        let g = |x: f64| self.veff(x) - alpha;
        let mut hi = 1.0;
        let mut guard = 0;
        while !(g(hi) > 0.0 && g(1.1 * hi) > g(hi)) {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return None;
            }
        }
        let floor = self.x_start * 10.0;
        let mut lo = hi;
        while g(lo) > 0.0 {
            lo *= 0.95;
            if lo < floor {
                return None;
            }
        }
        let (mut a, mut b) = (lo, lo / 0.95);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if g(mid) > 0.0 {
                b = mid;
            } else {
                a = mid;
            }
            if (b - a) <= 1e-13 * b {
                break;
            }
        }
        Some(0.5 * (a + b))
    }

    /// Truncation radius for a trial eigenvalue.
    fn boundary(&self, alpha: f64, cfg: &SolverConfig, decay: f64) -> f64 {
        let tp = self.outer_turning_point(alpha).unwrap_or_else(|| {
            // no allowed region: use the scale where the envelope decays by e
            let mut x = 1.0;
            while self.field.decay_rate(x) * x < 1.0 && x < 1e12 {
                x *= 2.0;
            }
            x
        });
        // march outward until the WKB attenuation reaches `decay`
        let mut x = tp;
        let mut action = 0.0;
        let kappa = |x: f64| (self.veff(x) - alpha).max(0.0).sqrt();
        let mut k_prev = kappa(x);
        while action < decay {
            let dx = 0.01 * x;
            let k = kappa(x + dx);
            action += 0.5 * (k + k_prev) * dx;
            k_prev = k;
            x += dx;
            if x > 1e15 {
                break;
            }
        }
        x.max(cfg.outer_radius_rule * tp)
    }

    fn options(&self, cfg: &SolverConfig) -> Options {
        Options {
            rtol: cfg.rk_tolerance,
            atol: cfg.rk_tolerance * 1e-3,
            h_init: 0.0,
            h_max: cfg.max_step,
            h_min: 1e-12,
            max_steps: 2_000_000,
        }
    }

    fn shoot(&self, alpha: f64, t0: f64, y0: [f64; 2], t1: f64, cfg: &SolverConfig, record: bool) -> Result<Shot> {
        let mut nodes = 0u32;
        let mut samples: Vec<Sample> = Vec::new();
        let f = self.rhs(alpha);
        if record {
            let f0 = f(t0, &y0).expect("rhs is total");
            samples.push((t0, y0, f0));
        }
        let out = ode::integrate(f, t0, y0, t1, &self.options(cfg), |s| {
            if s.y0[0] != 0.0 && s.y0[0].signum() != s.y1[0].signum() && s.y1[0] != 0.0 {
                nodes += 1;
            }
            if record {
                samples.push((s.t1, s.y1, s.f1));
            }
            let big = s.y1[0].abs().max(s.y1[1].abs());
            if big > RESCALE_ABOVE {
                let k = 1.0 / big;
                if record {
                    for smp in samples.iter_mut() {
                        for i in 0..2 {
                            smp.1[i] *= k;
                            smp.2[i] *= k;
                        }
                    }
                }
                Flow::Rescale(k)
            } else {
                Flow::Continue
            }
        })?;
        Ok(Shot {
            nodes,
            end: out.y,
            samples,
        })
    }

    fn start_state(&self) -> (f64, [f64; 2]) {
        let am = self.m.unsigned_abs() as i32;
        let x0 = self.x_start;
        let r0 = x0.powi(am);
        (x0.ln(), [r0, f64::from(am) * r0])
    }

    fn shoot_out(&self, alpha: f64, x_end: f64, cfg: &SolverConfig, record: bool) -> Result<Shot> {
        let (t0, y0) = self.start_state();
        self.shoot(alpha, t0, y0, x_end.ln(), cfg, record)
    }

    fn shoot_in(&self, alpha: f64, x_outer: f64, x_end: f64, cfg: &SolverConfig, record: bool) -> Result<Shot> {
        // decaying WKB envelope of u = R sqrt(x): u'/u = -kappa
        let kappa = (self.veff(x_outer) - alpha).max(0.0).sqrt();
        let y0 = [1.0, -(kappa * x_outer) - 0.5];
        let mut shot = self.shoot(alpha, x_outer.ln(), y0, x_end.ln(), cfg, record)?;
        shot.samples.reverse();
        Ok(shot)
    }

    /// Node count of the outward solution, integrated at a looser tolerance
    /// (node positions need far less accuracy than the matching step).
    fn count(&self, alpha: f64, x_outer: f64, cfg: &SolverConfig) -> Result<u32> {
        let loose = SolverConfig {
            rk_tolerance: cfg.rk_tolerance.max(1e-8),
            ..*cfg
        };
        Ok(self.shoot_out(alpha, x_outer, &loose, false)?.nodes)
    }

    /// Normalized Wronskian of outward and inward solutions at `x_m`.
    fn defect(&self, alpha: f64, x_m: f64, x_outer: f64, cfg: &SolverConfig) -> Result<f64> {
        let o = self.shoot_out(alpha, x_m, cfg, false)?.end;
        let i = self.shoot_in(alpha, x_outer, x_m, cfg, false)?.end;
        let w = o[0] * i[1] - o[1] * i[0];
        let norm = (o[0].hypot(o[1])) * (i[0].hypot(i[1]));
        Ok(w / norm)
    }
}

/// Solve one eigenstate of the power-law field.
pub fn solve_eigenvalue(
    field: &PowerLawField,
    state: &QuantumState,
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
) -> Result<EigenResult> {
    field.validate()?;
    cfg.validate()?;
    if state.nu > cfg.max_level {
        return invalid(format!(
            "level {} exceeds the configured maximum {}",
            state.nu, cfg.max_level
        ));
    }
    let problem = Problem {
        field: field.scaled(consts),
        m: state.m,
        spin: state.spin,
        zeeman: state.include_zeeman,
        x_start: cfg.rho_start / consts.lambda_e_pm,
    };
    let mut decay = cfg.decay_exponent;
    let mut last_err = None;
    for _ in 0..4 {
        match solve_with_decay(&problem, state, cfg, consts, decay) {
            Ok(res) if res.boundary_amplitude() < 1e-6 => return Ok(res),
            Ok(res) => {
                last_err = Some(Error::Numerical(format!(
                    "wavefunction not decayed at the outer boundary (|R|/max = {:.3e})",
                    res.boundary_amplitude()
                )));
            }
            Err(e) => return Err(e),
        }
        decay *= 1.5;
    }
    Err(last_err.expect("loop ran at least once"))
}

fn solve_with_decay(
    p: &Problem,
    state: &QuantumState,
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
    decay: f64,
) -> Result<EigenResult> {
    let nu = state.nu;
    let scale = p.field.b1.max(1.0);

    // upper bracket: more than nu nodes on its own domain
    let mut hi = 2.0 * scale * (f64::from(nu) + 1.0) + 1.0;
    let mut x_outer;
    let mut iterations = 0usize;
    loop {
        x_outer = p.boundary(hi, cfg, decay);
        if p.count(hi, x_outer, cfg)? > nu {
            break;
        }
        hi *= 2.0;
        iterations += 1;
        if iterations > 200 || !hi.is_finite() {
            return Err(Error::Bracketing {
                level: nu,
                reason: format!("no upper bound found up to alpha = {hi:e}"),
            });
        }
    }
    let mut lo = -1.0;
    while p.count(lo, x_outer, cfg)? > nu {
        lo = 2.0 * lo - 1.0;
        iterations += 1;
        if iterations > 400 {
            return Err(Error::Bracketing {
                level: nu,
                reason: "no lower bound found".into(),
            });
        }
    }

    // Sturm bisection on the node count: coarse isolation first
    let tol = |a: f64, b: f64| cfg.alpha_tol * a.abs().max(b.abs()).max(1.0);
    let coarse = |a: f64, b: f64| tol(a, b).max(1e-5 * a.abs().max(b.abs()).max(1.0));
    let mut bis = 0usize;
    let mut bisect = |lo: &mut f64, hi: &mut f64, x_outer: f64, width: &dyn Fn(f64, f64) -> f64| -> Result<()> {
        while *hi - *lo > width(*lo, *hi) {
            if bis >= cfg.max_bisections {
                return Err(Error::NoConvergence {
                    level: nu,
                    iterations: bis,
                    lo: *lo,
                    hi: *hi,
                });
            }
            let mid = 0.5 * (*lo + *hi);
            if p.count(mid, x_outer, cfg)? > nu {
                *hi = mid;
            } else {
                *lo = mid;
            }
            bis += 1;
        }
        Ok(())
    };
    bisect(&mut lo, &mut hi, x_outer, &coarse)?;
    let mut alpha = 0.5 * (lo + hi);

    // shrink the domain to the located eigenvalue and refine by matching
    let x_count = x_outer;
    x_outer = x_outer.min(p.boundary(alpha, cfg, decay).max(x_outer * 0.5));
    let x_m = p
        .outer_turning_point(alpha)
        .unwrap_or(x_outer / cfg.outer_radius_rule)
        .min(x_outer / 1.5);
    let defect = |z: f64| p.defect(z, x_m, x_outer, cfg);
    let mut refined = false;
    let pad = 0.5 * (hi - lo);
    let (a, b) = (lo - pad, hi + pad);
    let (fa, fb) = (defect(a)?, defect(b)?);
    if fa.signum() != fb.signum() {
        alpha = illinois(defect, a, b, fa, fb, 1e-3 * tol(a, b), 100)?;
        refined = true;
    }
    if !refined {
        bisect(&mut lo, &mut hi, x_count, &tol)?;
        alpha = 0.5 * (lo + hi);
        let mut half = 4.0 * (hi - lo).max(tol(lo, hi));
        for _ in 0..6 {
            let (a, b) = (alpha - half, alpha + half);
            let (fa, fb) = (defect(a)?, defect(b)?);
            if fa.signum() != fb.signum() {
                alpha = illinois(defect, a, b, fa, fb, 1e-3 * tol(a, b), 100)?;
                break;
            }
            half *= 4.0;
        }
    }
    let residual = defect(alpha)?.abs();

    // assemble the matched wavefunction
    let out = p.shoot_out(alpha, x_m, cfg, true)?;
    let inn = p.shoot_in(alpha, x_outer, x_m, cfg, true)?;
    let o = out.end;
    let i = inn.samples[0].1;
    let denom = i[0] * i[0] + i[1] * i[1];
    let c = (o[0] * i[0] + o[1] * i[1]) / denom;
    let mut samples = out.samples;
    samples.extend(
        inn.samples
            .iter()
            .skip(1)
            .map(|(t, y, f)| (*t, [y[0] * c, y[1] * c], [f[0] * c, f[1] * c])),
    );
    let nodes = samples
        .windows(2)
        .filter(|w| w[0].1[0] != 0.0 && w[1].1[0] != 0.0 && w[0].1[0].signum() != w[1].1[0].signum())
        .count() as u32;

    let lambda = consts.lambda_e_pm;
    let rho_max = x_outer * lambda;
    let n_pts = cfg.grid_points;
    let h = rho_max / (n_pts - 1) as f64;
    let am = state.m.unsigned_abs() as i32;
    let (r_start, rt_start) = (samples[0].1[0], samples[0].1[1]);
    let mut grid = Vec::with_capacity(n_pts);
    let mut r = Vec::with_capacity(n_pts);
    let mut slope = Vec::with_capacity(n_pts);
    let mut k = 0usize;
    for j in 0..n_pts {
        let rho = h * j as f64;
        let x = rho / lambda;
        let (val, der) = if x <= p.x_start {
            if am == 0 {
                (r_start, 0.0)
            } else {
                let ratio = (x / p.x_start).powi(am);
                (
                    r_start * ratio,
                    if x > 0.0 { rt_start * ratio / (x * lambda) } else { 0.0 },
                )
            }
        } else {
            let t = x.ln();
            while k + 2 < samples.len() && samples[k + 1].0 < t {
                k += 1;
            }
            let (a, b) = (&samples[k], &samples[k + 1]);
            let y = ode::hermite(a.0, b.0, &a.1, &b.1, &a.2, &b.2, t.min(b.0));
            (y[0], y[1] / (x * lambda))
        };
        grid.push(rho);
        r.push(val);
        slope.push(der);
    }
    let norm = trapezoid(&grid, |j| r[j] * r[j] * grid[j]).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Numerical(format!(
            "level {nu}: wavefunction could not be normalized"
        )));
    }
    // fix the sign so R is positive near the origin
    let sign = if r[0] < 0.0 || (r[0] == 0.0 && r.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0)) {
        -1.0
    } else {
        1.0
    };
    let s = sign / norm;
    r.iter_mut().for_each(|v| *v *= s);
    slope.iter_mut().for_each(|v| *v *= s);

    if nodes != nu {
        return Err(Error::Numerical(format!(
            "level {nu}: matched wavefunction has {nodes} nodes"
        )));
    }

    Ok(EigenResult {
        state: *state,
        alpha,
        nodes,
        grid,
        r,
        slope,
        residual,
        converged: true,
        match_radius: x_m * lambda,
        outer_radius: rho_max,
        iterations: iterations + bis,
    })
}

fn trapezoid(grid: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..grid.len() {
        acc += 0.5 * (f(j - 1) + f(j)) * (grid[j] - grid[j - 1]);
    }
    acc
}

/// Bracketed regula falsi with the Illinois modification.
fn illinois(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa.signum() == fb.signum() {
        return Err(Error::NotBracketed { lo: a, hi: b });
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() < tol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < tol {
            break;
        }
    }
    Ok((a * fb - b * fa) / (fb - fa))
}

/// Solve several levels of the same state family in parallel.
pub fn solve_levels(
    field: &PowerLawField,
    template: &QuantumState,
    levels: &[u32],
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
) -> Result<Vec<EigenResult>> {
    levels
        .par_iter()
        .map(|&nu| {
            solve_eigenvalue(field, &template.with_nu(nu), cfg, consts).map_err(|e| Error::Level {
                level: nu,
                spin: template.spin.as_i8(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Weighted radial inner product `sum R_a R_b rho^w drho` on the common domain.
pub fn wavefunction_overlap(a: &EigenResult, b: &EigenResult, weight_power: i32) -> Result<f64> {
    if a.grid.len() < 2 || b.grid.len() < 2 {
        return invalid("wavefunction grid is empty");
    }
    let upper = a.grid[a.grid.len() - 1].min(b.grid[b.grid.len() - 1]);
    let lower = a.grid[0].max(b.grid[0]);
    if !(upper > lower) {
        return invalid("wavefunction domains are disjoint");
    }
    let same_grid = a.grid.len() == b.grid.len()
        && a.grid
            .iter()
            .zip(&b.grid)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * y.abs().max(1e-300));
    let w = |rho: f64| if weight_power == 0 { 1.0 } else { rho.powi(weight_power) };
    if same_grid {
        return Ok(trapezoid(&a.grid, |j| a.r[j] * b.r[j] * w(a.grid[j])));
    }
    // resample both on a fine uniform grid over the common domain
    let n = a.grid.len().max(b.grid.len()) * 2;
    let h = (upper - lower) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|j| lower + h * j as f64).collect();
    Ok(trapezoid(&grid, |j| {
        let rho = grid[j];
        a.sample(rho).0 * b.sample(rho).0 * w(rho)
    }))
}

/// One entry of the merged spin-resolved spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub alpha: f64,
    pub spin: Spin,
    pub nu: u32,
    /// Another spin state sits at the same eigenvalue (uniform field).
    pub degenerate: bool,
}

/// The `count` lowest excited levels of the combined spectrum (spin-down
/// `nu >= 1` and spin-up `nu >= 0`, `m = 0`), sorted, with degenerate pairs
/// merged. Also returns the spin-down ground eigenvalue.
pub fn merged_levels(
    field: &PowerLawField,
    count: u32,
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
) -> Result<(f64, Vec<LevelEntry>)> {
    let down: Vec<u32> = (0..=count).collect();
    let up: Vec<u32> = (0..count).collect();
    let (d, u) = rayon::join(
        || solve_levels(field, &QuantumState::new(0, Spin::Down, 0), &down, cfg, consts),
        || solve_levels(field, &QuantumState::new(0, Spin::Up, 0), &up, cfg, consts),
    );
    let (d, u) = (d?, u?);
    let ground = d[0].alpha;
    let mut all: Vec<LevelEntry> = d[1..]
        .iter()
        .chain(u.iter())
        .map(|res| LevelEntry {
            alpha: res.alpha,
            spin: res.state.spin,
            nu: res.state.nu,
            degenerate: false,
        })
        .collect();
    all.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let merge_tol = (100.0 * cfg.alpha_tol).max(1e-6);
    let mut merged: Vec<LevelEntry> = Vec::with_capacity(all.len());
    for e in all {
        match merged.last_mut() {
            Some(prev) if (e.alpha - prev.alpha).abs() <= merge_tol * e.alpha.abs().max(1.0) => {
                prev.degenerate = true;
                if e.spin == Spin::Down {
                    prev.spin = Spin::Down;
                    prev.nu = e.nu;
                }
            }
            _ => merged.push(e),
        }
    }
    merged.truncate(count as usize);
    Ok((ground, merged))
}

/// Field normalization producing a `k`-level system at a given Fermi energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSystem {
    pub n: f64,
    pub epsilon_f: f64,
    pub k: u32,
    /// `B0` in G pm^-n.
    pub b0: f64,
    pub ground_alpha: f64,
    pub levels: Vec<LevelEntry>,
}

/// Find `B0` such that the `k`-th excited level of the merged spectrum sits
/// exactly at `alpha = epsilon_F^2 - 1` (bisection in `ln B0`).
pub fn find_field_for_levels(
    n: f64,
    epsilon_f: f64,
    k: u32,
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
) -> Result<LevelSystem> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if !(epsilon_f > 1.0) {
        return invalid(format!("epsilon_F must exceed 1, got {epsilon_f}"));
    }
    let target = epsilon_f * epsilon_f - 1.0;
    let kth = |b0: f64| -> Result<(f64, f64, Vec<LevelEntry>)> {
        let field = PowerLawField::new(b0, n)?;
        let (g, lv) = merged_levels(&field, k + 1, cfg, consts)?;
        Ok((lv[k as usize - 1].alpha, g, lv))
    };
    // without softening alpha scales exactly as B0^(2/(n+2))
    let b_ref = 1.0e15;
    let (a_ref, _, _) = kth(b_ref)?;
    let guess = b_ref * (target / a_ref).powf((n + 2.0) / 2.0);
    let (mut lo, mut hi) = (guess * 0.97, guess * 1.03);
    let mut expand = 0;
    while kth(lo)?.0 > target {
        lo *= 0.8;
        expand += 1;
        if expand > 40 {
            return Err(Error::NotBracketed { lo, hi });
        }
    }
    while kth(hi)?.0 < target {
        hi *= 1.25;
        expand += 1;
        if expand > 80 {
            return Err(Error::NotBracketed { lo, hi });
        }
    }
    for _ in 0..100 {
        if hi / lo - 1.0 < 1e-7 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if kth(mid)?.0 > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let b0 = (lo * hi).sqrt();
    let (_, ground, mut levels) = kth(b0)?;
    levels.truncate(k as usize + 1);
    Ok(LevelSystem {
        n,
        epsilon_f,
        k,
        b0,
        ground_alpha: ground,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn analytic_examples() {
        let b = 22.2094;
        let s = QuantumState::new(0, Spin::Down, 0);
        assert_eq!(alpha_uniform_analytic(&s, 7.0).unwrap(), 0.0);
        let s = QuantumState::without_zeeman(0, 0);
        assert!((alpha_uniform_analytic(&s, b).unwrap() - 22.2094).abs() < 1e-12);
        let s = QuantumState::without_zeeman(0, 1);
        assert!((alpha_uniform_analytic(&s, b).unwrap() - 66.6282).abs() < 1e-9);
        let up = QuantumState::new(0, Spin::Up, 0);
        assert!((alpha_uniform_analytic(&up, b).unwrap() - 44.4188).abs() < 1e-9);
        // m > 0 coincides with m = 0, m < 0 is raised
        let p = QuantumState::new(1, Spin::Down, 2);
        let z = QuantumState::new(0, Spin::Down, 2);
        let neg = QuantumState::new(-1, Spin::Down, 2);
        assert_eq!(
            alpha_uniform_analytic(&p, b).unwrap(),
            alpha_uniform_analytic(&z, b).unwrap()
        );
        assert!(alpha_uniform_analytic(&neg, b).unwrap() > alpha_uniform_analytic(&z, b).unwrap());
        assert!(alpha_uniform_analytic(&z, -1.0).is_err());
    }

    #[test]
    fn uniform_ground_no_zeeman() {
        let f = PowerLawField::new(1e15, 0.0).unwrap();
        let res = solve_eigenvalue(&f, &QuantumState::without_zeeman(0, 0), &SolverConfig::default(), &k()).unwrap();
        assert!((res.alpha / 22.2094 - 1.0).abs() < 1e-5, "{}", res.alpha);
        assert_eq!(res.nodes, 0);
        assert!(res.converged);
        assert!(res.boundary_amplitude() < 1e-6);
        let norm = wavefunction_overlap(&res, &res, 1).unwrap();
        assert!((norm - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_levels_with_m_and_spin() {
        let f = PowerLawField::new(5e14, 0.0).unwrap();
        let b = k().dimensionless_field(5e14).unwrap();
        let cfg = SolverConfig::default();
        for state in [
            QuantumState::new(0, Spin::Up, 0),
            QuantumState::new(0, Spin::Down, 3),
            QuantumState::new(1, Spin::Down, 1),
            QuantumState::new(-1, Spin::Up, 1),
            QuantumState::new(2, Spin::Up, 0),
        ] {
            let res = solve_eigenvalue(&f, &state, &cfg, &k()).unwrap();
            let exact = alpha_uniform_analytic(&state, b).unwrap();
            assert!(
                (res.alpha - exact).abs() <= 1e-5 * exact.max(1.0),
                "{state:?}: {} vs {exact}",
                res.alpha
            );
            assert_eq!(res.nodes, state.nu);
        }
    }

    #[test]
    fn ground_level_near_zero_for_power_laws() {
        let cfg = SolverConfig::default();
        for n in [0.0, -0.3, -0.5, -0.7] {
            let f = PowerLawField::new(1e15, n).unwrap();
            let res = solve_eigenvalue(&f, &QuantumState::new(0, Spin::Down, 0), &cfg, &k()).unwrap();
            assert!(res.alpha.abs() < 0.05, "n={n}: {}", res.alpha);
        }
    }

    #[test]
    fn orthogonality_of_distinct_levels() {
        let f = PowerLawField::new(1e15, -0.3).unwrap();
        let cfg = SolverConfig::default();
        let lv = solve_levels(&f, &QuantumState::new(0, Spin::Down, 0), &[0, 1, 2], &cfg, &k()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let o = wavefunction_overlap(&lv[i], &lv[j], 1).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((o - want).abs() < 1e-4, "<{i}|{j}> = {o}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = PowerLawField {
            b0: 1e15,
            n: -1.0,
            rho0: 1e-5,
        };
        let err =
            solve_eigenvalue(&f, &QuantumState::new(0, Spin::Down, 0), &SolverConfig::default(), &k()).unwrap_err();
        assert_eq!(err, Error::UnsupportedExponent(-1.0));
        let f = PowerLawField::new(1e15, 0.0).unwrap();
        let cfg = SolverConfig {
            max_level: 3,
            ..Default::default()
        };
        assert!(solve_eigenvalue(&f, &QuantumState::new(0, Spin::Down, 4), &cfg, &k()).is_err());
    }

    #[test]
    fn bisection_cap_reports_bracket() {
        let f = PowerLawField::new(1e15, 0.0).unwrap();
        let cfg = SolverConfig {
            max_bisections: 3,
            ..Default::default()
        };
        match solve_eigenvalue(&f, &QuantumState::new(0, Spin::Down, 2), &cfg, &k()) {
            Err(Error::NoConvergence { lo, hi, .. }) => assert!(lo < hi),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn illinois_finds_root() {
        let r = illinois(|x| Ok(x * x - 2.0), 0.0, 2.0, -2.0, 2.0, 1e-14, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(illinois(Ok, 1.0, 2.0, 1.0, 2.0, 1e-9, 10).is_err());
    }

    #[test]
    fn uniform_one_level_field() {
        let cfg = SolverConfig::default();
        let sys = find_field_for_levels(0.0, 20.0, 1, &cfg, &k()).unwrap();
        let exact = 399.0 / 2.0 * k().b_crit;
        assert!((sys.b0 / exact - 1.0).abs() < 1e-5, "{} vs {exact}", sys.b0);
        assert!(sys.levels[0].degenerate);
        assert!(sys.ground_alpha.abs() < 1e-3);
    }
}
