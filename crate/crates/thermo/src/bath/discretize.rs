//! Logarithmic discretization of a bath DoS.
//!
//! The spectrum is divided on the grid `+-W L^-n`; the continuous weight
//! in each interval is replaced by a single pole at the interval's
//! rho-weighted mean position, carrying the interval's total weight.
//! Interval moments are evaluated in closed form for the analytic
//! families (the power-law divergence of the TBG family is integrated
//! analytically so no divergent weight is lost) and by refined quadrature
//! for tabulated input.

use statrs::function::erf::erf;

use crate::bath::dos::{DosFamily, DosSpec};
use crate::bath::BathError;
use crate::numerics::quad;

/// One representative pole of a discretized bath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pole {
    pub position: f64,
    pub weight: f64,
}

/// Result of [`discretize_log`].
#[derive(Clone, Debug)]
pub struct Discretization {
    /// Poles sorted by position, ascending.
    pub poles: Vec<Pole>,
    pub lambda: f64,
    /// Weight below the innermost discretization point (never turned into
    /// poles) plus any weight of dropped intervals.
    pub leakage: f64,
    /// Intervals dropped for carrying no usable weight (index, side).
    pub dropped: Vec<(usize, i8)>,
    pub dos_ref: String,
}

impl Discretization {
    pub fn total_weight(&self) -> f64 {
        self.poles.iter().map(|p| p.weight).sum()
    }
}

/// A finite bath given by the pole representation of its local Green's
/// function, `G(z) = sum_p w_p / (z - e_p)`, weights normalized to 1.
/// This is the form the exact Ising solver consumes for finite chains and
/// for oracle-grade discretizations.
#[derive(Clone, Debug)]
pub struct DiscreteBath {
    /// Pole positions, strictly ascending.
    pub poles: Vec<f64>,
    /// Spectral weights at the local orbital, summing to 1.
    pub weights: Vec<f64>,
}

impl DiscreteBath {
    pub fn new(mut pairs: Vec<(f64, f64)>) -> DiscreteBath {
        pairs.retain(|&(_, w)| w > 0.0);
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        DiscreteBath {
            poles: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn from_discretization(disc: &Discretization) -> DiscreteBath {
        DiscreteBath::new(disc.poles.iter().map(|p| (p.position, p.weight)).collect())
    }

    /// Pole form of a Wilson chain's end-of-chain Green's function.
    pub fn from_chain(chain: &crate::bath::WilsonChain) -> DiscreteBath {
        let (poles, weights) = chain.rebuild_poles();
        DiscreteBath::new(poles.into_iter().zip(weights).collect())
    }

    /// `G(w)` on the real axis away from the poles.
    pub fn g_real(&self, w: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.weights)
            .map(|(&e, &wt)| wt / (w - e))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }
}

/// Interval moments `(int rho, int w rho)` over `[a, b]`, `0 <= a < b`.
fn interval_moments(spec: &DosSpec, a: f64, b: f64) -> (f64, f64) {
    let d = spec.halfwidth;
    let rho0 = spec.rho0();
    // clip to the hard band where applicable
    let (a, b) = match spec.family {
        DosFamily::Gaussian | DosFamily::Tabulated { .. } => (a, b),
        _ => (a.min(d), b.min(d)),
    };
    if b <= a {
        return (0.0, 0.0);
    }
    match &spec.family {
        DosFamily::Flat | DosFamily::Graphene | DosFamily::TbgDiverging => {
            let r = spec.exponent().unwrap_or(0.0);
            let m0 = rho0 * d / (r + 1.0) * ((b / d).powf(r + 1.0) - (a / d).powf(r + 1.0));
            let m1 = rho0 * d * d / (r + 2.0) * ((b / d).powf(r + 2.0) - (a / d).powf(r + 2.0));
            (m0, m1)
        }
        DosFamily::Nanowire => {
            let (ua, ub) = (a / d, b / d);
            if ub < 0.3 {
                // series forms: the antiderivatives evaluate to near-constant
                // values for deep intervals and cancel catastrophically
                let mut m0 = 0.0;
                let mut m1 = 0.0;
                // sqrt(1-u^2) = sum_k c_k u^{2k}, c_k = -C(1/2,k)(-1)^k
                let mut c = 1.0;
                for k in 0..20 {
                    let kf = k as f64;
                    let p0 = 2.0 * kf + 1.0;
                    let p1 = 2.0 * kf + 2.0;
                    m0 += c * (ub.powf(p0) - ua.powf(p0)) / p0;
                    m1 += c * (ub.powf(p1) - ua.powf(p1)) / p1;
                    c *= (0.5 - kf) / (kf + 1.0) * -1.0;
                }
                (rho0 * d * m0, rho0 * d * d * m1)
            } else {
                let f0 =
                    |u: f64| 0.5 * (u * (1.0 - u * u).max(0.0).sqrt() + u.clamp(-1.0, 1.0).asin());
                let f1 = |u: f64| -(1.0 - u * u).max(0.0).powf(1.5) / 3.0;
                (
                    rho0 * d * (f0(ub) - f0(ua)),
                    rho0 * d * d * (f1(ub) - f1(ua)),
                )
            }
        }
        DosFamily::Gaussian => {
            let (ua, ub) = (a / d, b / d);
            let m0 = if ub < 1.0 {
                // int e^{-u^2} by series; the erf difference cancels for
                // deep intervals
                let mut acc = 0.0;
                let mut term = 1.0;
                for k in 0..24 {
                    let p = 2.0 * k as f64 + 1.0;
                    acc += term * (ub.powf(p) - ua.powf(p)) / p;
                    term *= -1.0 / (k as f64 + 1.0);
                }
                rho0 * d * acc
            } else {
                rho0 * d * 0.5 * std::f64::consts::PI.sqrt() * (erf(ub) - erf(ua))
            };
            // e^{-ua^2} - e^{-ub^2} = -e^{-ua^2} expm1(ua^2 - ub^2), stable
            let m1 = rho0 * d * d * 0.5 * (-(-ua * ua).exp() * ((ua - ub) * (ua + ub)).exp_m1());
            (m0, m1)
        }
        DosFamily::Tabulated { .. } => {
            let m0 = quad::integrate_refined(a, b, 1e-14, &mut |x| spec.eval(x));
            let m1 = quad::integrate_refined(a, b, 1e-14, &mut |x| x * spec.eval(x));
            (m0, m1)
        }
    }
}

/// Discretize `spec` on the grid `+-W L^-n`, `n = 0..n_max`, one pole per
/// interval. Requires `lambda > 1` and `n_max >= 20`.
pub fn discretize_log(
    spec: &DosSpec,
    lambda: f64,
    n_max: usize,
) -> Result<Discretization, BathError> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(BathError::DiscretizePre(format!(
            "lambda must exceed 1, got {lambda}"
        )));
    }
    if n_max < 20 {
        return Err(BathError::DiscretizePre(format!(
            "n_max must be at least 20, got {n_max}"
        )));
    }
    let w_top = spec.support_halfwidth();
    let mut poles = Vec::with_capacity(2 * n_max);
    let mut dropped = Vec::new();
    let mut captured = 0.0;
    for n in 0..n_max {
        let b = w_top * lambda.powi(-(n as i32));
        let a = b / lambda;
        for side in [1i8, -1i8] {
            let (m0, m1) = if side > 0 {
                interval_moments(spec, a, b)
            } else {
                // mirrored interval [-b, -a]
                let (m0, m1) = mirrored_moments(spec, a, b);
                (m0, m1)
            };
            if !(m0 > 0.0) || !m0.is_finite() {
                dropped.push((n, side));
                continue;
            }
            let position = m1 / m0;
            poles.push(Pole {
                position,
                weight: m0,
            });
            captured += m0;
        }
    }
    poles.sort_by(|p, q| p.position.partial_cmp(&q.position).unwrap());
    Ok(Discretization {
        poles,
        lambda,
        leakage: 1.0 - captured,
        dropped,
        dos_ref: spec.identifier(),
    })
}

fn mirrored_moments(spec: &DosSpec, a: f64, b: f64) -> (f64, f64) {
    if spec.is_ph_symmetric() {
        let (m0, m1) = interval_moments(spec, a, b);
        (m0, -m1)
    } else {
        // asymmetric table: integrate the negative side directly
        let m0 = quad::integrate_refined(-b, -a, 1e-14, &mut |x| spec.eval(x));
        let m1 = quad::integrate_refined(-b, -a, 1e-14, &mut |x| x * spec.eval(x));
        if m0 > 0.0 {
            (m0, m1 / m0 * m0)
        } else {
            (m0, m1)
        }
    }
}
