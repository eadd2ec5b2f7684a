//! Self-consistent mean field for the Ising impurity.
//!
//! Decoupling `J^z S_I^z S_0^z` gives a free spin in the renormalized
//! field `B_I + J^z <S_0^z>` and a bath orbital in `B_0 + J^z <S_I^z>`;
//! the pair is iterated to a fixed point with damping. This reproduces
//! the exact solution to first order in `J^z` and serves as its accuracy
//! benchmark.

use crate::bath::BathGreens;
use crate::ising_exact::{bound_states, ln_z_shift_exact, IsingParams, Spin};
use crate::numerics::{fermi, quad};

/// Converged mean-field state.
#[derive(Clone, Debug)]
pub struct MfState {
    pub m_imp: f64,
    pub m_bath: f64,
    pub b_imp_eff: f64,
    pub b_bath_eff: f64,
    pub iterations: usize,
    /// Fixed-point mismatch max(|dm_imp|, |dm_bath|) at exit.
    pub residual: f64,
    /// Set when multi-seed probing found distinct fixed points; the
    /// returned one minimizes the mean-field free energy.
    pub multiple_fixed_points: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum MfError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("tolerance must be at least 1e-12, got {0}")]
    ToleranceTooTight(f64),
    #[error("no convergence after {iterations} iterations; residual trajectory {trajectory:?}")]
    NoConvergence {
        iterations: usize,
        trajectory: Vec<f64>,
    },
    #[error(transparent)]
    Ising(#[from] crate::ising_exact::IsingError),
}

/// Local occupancy `<n_{0 sigma}>` of the bath orbital in an effective
/// boundary field: Fermi-weighted spectral density of the shifted
/// Green's function plus any bound-state weight.
pub fn bath_occupancy(bg: &BathGreens, b_bath_eff: f64, t: f64, spin: Spin) -> Result<f64, MfError> {
    if !(t > 0.0) {
        return Err(MfError::NonPositiveTemperature(t));
    }
    let eps = spin.value() * b_bath_eff;
    let support = bg.spec().support_halfwidth();
    let breaks = [-support, 0.0, support];
    let mut f = |w: f64| {
        let g = bg.g(w);
        let shifted = g / (1.0 - eps * g);
        -shifted.im / std::f64::consts::PI * fermi(w, t)
    };
    let mut n = quad::integrate_with_breaks(&breaks, &mut f);
    for pole in bound_states(bg, eps) {
        n += pole.local_weight * fermi(pole.position, t);
    }
    Ok(n.clamp(0.0, 1.0))
}

fn free_spin(b: f64, t: f64) -> f64 {
    -0.5 * (b / (2.0 * t)).tanh()
}

/// One sweep of the coupled equations from a given impurity moment.
fn step(
    bg: &BathGreens,
    p: &IsingParams,
    m_imp: f64,
) -> Result<(f64, f64, f64, f64), MfError> {
    let b_bath_eff = p.b_bath + p.jz * m_imp;
    let n_up = bath_occupancy(bg, b_bath_eff, p.temperature, Spin::Up)?;
    let n_dn = bath_occupancy(bg, b_bath_eff, p.temperature, Spin::Down)?;
    let m_bath = 0.5 * (n_up - n_dn);
    let b_imp_eff = p.b_imp + p.jz * m_bath;
    let m_imp_next = free_spin(b_imp_eff, p.temperature);
    Ok((m_imp_next, m_bath, b_imp_eff, b_bath_eff))
}

fn iterate_from(
    bg: &BathGreens,
    p: &IsingParams,
    seed: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MfState, MfError> {
    let mut m_imp = seed;
    let mut m_bath = f64::NAN; // no bath moment until the first evaluation
    let mut alpha = 0.5;
    let mut trajectory = Vec::new();
    let mut prev_delta = 0.0f64;
    for it in 0..max_iter {
        let (m_new, m_bath_new, b_imp_eff, b_bath_eff) = step(bg, p, m_imp)?;
        let delta_imp = m_new - m_imp;
        let delta_bath = if m_bath.is_nan() {
            0.0
        } else {
            m_bath_new - m_bath
        };
        let residual = delta_imp.abs().max(delta_bath.abs());
        trajectory.push(residual);
        if residual <= tol {
            return Ok(MfState {
                m_imp: m_new,
                m_bath: m_bath_new,
                b_imp_eff,
                b_bath_eff,
                iterations: it + 1,
                residual,
                multiple_fixed_points: false,
            });
        }
        // halve the mixing when the update direction alternates
        if prev_delta * delta_imp < 0.0 {
            alpha *= 0.5;
        }
        prev_delta = delta_imp;
        m_imp += alpha * delta_imp;
        m_bath = m_bath_new;
    }
    Err(MfError::NoConvergence {
        iterations: max_iter,
        trajectory,
    })
}

/// Mean-field free energy relative to the free bath, used to pick among
/// multiple fixed points.
fn free_energy(bg: &BathGreens, p: &IsingParams, state: &MfState) -> Result<f64, MfError> {
    let t = p.temperature;
    let f_imp = -t * (2.0 * (state.b_imp_eff / (2.0 * t)).cosh()).ln();
    let mut f_bath = 0.0;
    for spin in Spin::BOTH {
        f_bath -= t * ln_z_shift_exact(bg, spin.value() * state.b_bath_eff, t)?;
    }
    Ok(f_imp + f_bath - p.jz * state.m_imp * state.m_bath)
}

/// Damped fixed-point solve, seeded from the decoupled solution, with
/// polarized-seed probing for fixed-point multiplicity.
pub fn solve_self_consistent(
    p: &IsingParams,
    tol: f64,
    max_iter: usize,
) -> Result<MfState, MfError> {
    if !(p.temperature > 0.0) {
        return Err(MfError::NonPositiveTemperature(p.temperature));
    }
    if tol < 1e-12 {
        return Err(MfError::ToleranceTooTight(tol));
    }
    let bg = BathGreens::for_spec(&p.dos);
    let seed = free_spin(p.b_imp, p.temperature);
    let mut best = iterate_from(&bg, p, seed, tol, max_iter)?;
    // probe for other fixed points from polarized seeds
    let mut multiple = false;
    for probe_seed in [0.45, -0.45] {
        if let Ok(candidate) = iterate_from(&bg, p, probe_seed, tol, max_iter) {
            if (candidate.m_imp - best.m_imp).abs() > 100.0 * tol {
                multiple = true;
                if free_energy(&bg, p, &candidate)? < free_energy(&bg, p, &best)? {
                    best = candidate;
                }
            }
        }
    }
    best.multiple_fixed_points = multiple;
    Ok(best)
}
