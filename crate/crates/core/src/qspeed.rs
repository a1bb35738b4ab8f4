//! Mandelstam–Tamm quantum speed of the spin-up `nu = 0 -> 1` transition
//! (`m = 0`, `p_z = 0`).
//!
//! ```text
//! T_min = pi hbar / (E1 - E0)
//! v     = rho_disp / T_min
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{energy_from_alpha, PhysicalConstants, C_LIGHT};
use crate::error::{invalid, Result};
use crate::field::{PowerLawField, ScaledField, Spin};
use crate::spectrum::{solve_eigenvalue, EigenResult, QuantumState, SolverConfig};

/// How the lower spinor components enter the displacement integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinorConvention {
    /// Lower component `(dR/dx - a R) / (epsilon + 1)`.
    #[default]
    Dirac,
    /// Components `(R, -R)`; spinor factors cancel.
    EqualComponents,
}

/// Relative tolerance on `int R^2 rho drho = 1`.
const NORM_TOLERANCE: f64 = 1e-3;
const QUADRATURE_POINTS: usize = 8001;

/// Minimum time, s, for evolution to an orthogonal state; energies in erg.
pub fn mt_min_time(e0: f64, e1: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(e0.is_finite() && e1.is_finite()) {
        return invalid("energies must be finite");
    }
    if !(e1 > e0) {
        return invalid(format!("need E1 > E0, got E0 = {e0:e}, E1 = {e1:e}"));
    }
    Ok(PI * consts.hbar / (e1 - e0))
}

fn check_state(psi: &EigenResult) -> Result<()> {
    let s = &psi.state;
    if s.m != 0 || s.x_z != 0.0 || s.spin != Spin::Up {
        return invalid("transition states must be spin-up with m = 0 and x_z = 0");
    }
    let norm = crate::spectrum::wavefunction_overlap(psi, psi, 1)?;
    if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
        return invalid(format!("state nu = {} is not normalized (norm {norm})", s.nu));
    }
    Ok(())
}

/// Radial displacement, pm, between two normalized spin-up states.
pub fn radial_displacement(
    psi0: &EigenResult,
    psi1: &EigenResult,
    field: &PowerLawField,
    convention: SpinorConvention,
    consts: &PhysicalConstants,
) -> Result<f64> {
    check_state(psi0)?;
    check_state(psi1)?;
    if psi0.state.nu == psi1.state.nu {
        return invalid("displacement needs two distinct levels");
    }
    let lambda = consts.lambda_e_pm;
    let scaled = field.scaled(consts);
    let upper = psi0.grid[psi0.grid.len() - 1].max(psi1.grid[psi1.grid.len() - 1]);
    let h = upper / (QUADRATURE_POINTS - 1) as f64;
    let eps0 = energy_from_alpha(psi0.alpha, 0.0)?;
    let eps1 = energy_from_alpha(psi1.alpha, 0.0)?;

    // integrands in x = rho / lambda_e: (norm0, norm1, cross)
    let lower = |psi: &EigenResult, s: &ScaledField, x: f64, rho: f64| {
        let (r, dr) = psi.sample(rho);
        let a = if x > 0.0 { s.vector_potential(x) } else { 0.0 };
        (r, lambda * dr - a * r)
    };
    let mut acc = [0.0f64; 3];
    for j in 0..QUADRATURE_POINTS {
        let rho = h * j as f64;
        let x = rho / lambda;
        let w = if j == 0 || j == QUADRATURE_POINTS - 1 { 0.5 } else { 1.0 };
        let (r0, g0) = lower(psi0, &scaled, x, rho);
        let (r1, g1) = lower(psi1, &scaled, x, rho);
        let (n0, n1, c) = match convention {
            SpinorConvention::Dirac => (
                r0 * r0 + g0 * g0 / ((eps0 + 1.0) * (eps0 + 1.0)),
                r1 * r1 + g1 * g1 / ((eps1 + 1.0) * (eps1 + 1.0)),
                r0 * r1 + g0 * g1 / ((eps0 + 1.0) * (eps1 + 1.0)),
            ),
            SpinorConvention::EqualComponents => (r0 * r0, r1 * r1, r0 * r1),
        };
        acc[0] += w * n0 * x;
        acc[1] += w * n1 * x;
        acc[2] += w * c * x * x;
    }
    Ok(2.0 * acc[2].abs() / (acc[0] * acc[1]).sqrt() * lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSpeed {
    pub n: f64,
    pub b0: f64,
    pub alpha0_plus: f64,
    pub alpha1_plus: f64,
    pub t_min_s: f64,
    pub rho_disp_pm: f64,
    pub v_over_c: f64,
}

/// Solve both spin-up levels and return `rho_disp / T_min` over `c`.
pub fn quantum_speed(
    field: &PowerLawField,
    convention: SpinorConvention,
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
) -> Result<QuantumSpeed> {
    field.validate()?;
    if !(field.n > -1.0) {
        return invalid(format!("quantum speed needs n > -1, got {}", field.n));
    }
    let state = QuantumState::new(0, Spin::Up, 0);
    let (p0, p1) = rayon::join(
        || solve_eigenvalue(field, &state, cfg, consts),
        || solve_eigenvalue(field, &state.with_nu(1), cfg, consts),
    );
    let (p0, p1) = (p0?, p1?);
    let e0 = energy_from_alpha(p0.alpha, 0.0)? * consts.me_c2;
    let e1 = energy_from_alpha(p1.alpha, 0.0)? * consts.me_c2;
    let t_min = mt_min_time(e0, e1, consts)?;
    let rho_disp = radial_displacement(&p0, &p1, field, convention, consts)?;
    Ok(QuantumSpeed {
        n: field.n,
        b0: field.b0,
        alpha0_plus: p0.alpha,
        alpha1_plus: p1.alpha,
        t_min_s: t_min,
        rho_disp_pm: rho_disp,
        v_over_c: rho_disp * 1e-10 / t_min / C_LIGHT,
    })
}

/// Quantum speed for each exponent at fixed `b0`, in parallel.
pub fn speed_sweep(
    exponents: &[f64],
    b0: f64,
    convention: SpinorConvention,
    cfg: &SolverConfig,
    consts: &PhysicalConstants,
) -> Vec<Result<QuantumSpeed>> {
    exponents
        .par_iter()
        .map(|&n| quantum_speed(&PowerLawField::new(b0, n)?, convention, cfg, consts))
        .collect()
}

pub fn sweep_to_csv(rows: &[QuantumSpeed]) -> String {
    let mut out = String::from("n,B0,alpha0_plus,alpha1_plus,T_min_s,rho_disp_pm,v_over_c\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:e},{:.10e},{:.10e},{:.10e},{:.10e},{:.8}\n",
            r.n, r.b0, r.alpha0_plus, r.alpha1_plus, r.t_min_s, r.rho_disp_pm, r.v_over_c
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn min_time_examples() {
        let k = k();
        let t = mt_min_time(0.0, k.me_c2, &k).unwrap();
        assert!((t - PI * k.hbar / k.me_c2).abs() < 1e-30);
        assert!((t / 4.05e-21 - 1.0).abs() < 2e-3);
        let t2 = mt_min_time(1.0, 1.0 + 2.0 * k.me_c2, &k).unwrap();
        assert!((t / t2 - 2.0).abs() < 1e-9);
        assert!(mt_min_time(1.0, 1.0, &k).is_err());
        assert!(mt_min_time(2.0, 1.0, &k).is_err());
    }

    #[test]
    fn displacement_preconditions() {
        let k = k();
        let cfg = SolverConfig::default();
        let f = PowerLawField::new(1e16, 0.0).unwrap();
        let s = QuantumState::new(0, Spin::Up, 0);
        let p0 = solve_eigenvalue(&f, &s, &cfg, &k).unwrap();
        let p1 = solve_eigenvalue(&f, &s.with_nu(1), &cfg, &k).unwrap();
        assert!(radial_displacement(&p0, &p0, &f, SpinorConvention::Dirac, &k).is_err());
        let mut scaled = p1.clone();
        scaled.r.iter_mut().for_each(|v| *v *= 2.0);
        assert!(radial_displacement(&p0, &scaled, &f, SpinorConvention::Dirac, &k).is_err());
        // global sign flips leave the displacement unchanged
        let mut flipped = p1.clone();
        flipped.r.iter_mut().for_each(|v| *v = -*v);
        flipped.slope.iter_mut().for_each(|v| *v = -*v);
        for c in [SpinorConvention::Dirac, SpinorConvention::EqualComponents] {
            let a = radial_displacement(&p0, &p1, &f, c, &k).unwrap();
            let b = radial_displacement(&p0, &flipped, &f, c, &k).unwrap();
            assert_eq!(a, b);
        }
        let down = solve_eigenvalue(&f, &QuantumState::new(0, Spin::Down, 1), &cfg, &k).unwrap();
        assert!(radial_displacement(&p0, &down, &f, SpinorConvention::Dirac, &k).is_err());
    }

    #[test]
    fn uniform_speed_is_field_independent() {
        let k = k();
        let cfg = SolverConfig::default();
        let v = |b0: f64| {
            quantum_speed(&PowerLawField::new(b0, 0.0).unwrap(), SpinorConvention::Dirac, &cfg, &k)
                .unwrap()
                .v_over_c
        };
        let (a, b) = (v(1e16), v(2e16));
        assert!((a - 0.2407).abs() < 5e-3, "{a}");
        assert!((a / b - 1.0).abs() < 1e-2);
        assert!(quantum_speed(
            &PowerLawField::unrestricted(1e15, -1.0, 1e-3).unwrap(),
            SpinorConvention::Dirac,
            &cfg,
            &k
        )
        .is_err());
    }

    #[test]
    fn csv_columns() {
        let row = QuantumSpeed {
            n: 0.5,
            b0: 1e16,
            alpha0_plus: 1.0,
            alpha1_plus: 2.0,
            t_min_s: 1e-21,
            rho_disp_pm: 0.1,
            v_over_c: 0.25,
        };
        let csv = sweep_to_csv(&[row]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 7);
    }
}
