//! Narrow-band limit: the bath collapses to a single site (`J >> D`),
//! leaving an exactly solvable 8-state model of impurity plus local
//! orbital with isotropic exchange and a common field.
//!
//! All quantities derive from the eight analytic levels; sums are
//! assembled in max-shifted (log-sum-exp) form so the deep-`T/J` regime
//! stays finite. The printed closed forms in the source text drop a
//! common Boltzmann prefactor; the forms here are fixed against the dense
//! 8x8 thermal oracle.

use crate::numerics::log_sum_exp;

#[derive(Clone, Copy, Debug)]
pub struct NblParams {
    /// Isotropic exchange between impurity and the single bath site.
    pub j: f64,
    /// Common field on both spins.
    pub b: f64,
    pub temperature: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum NblError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
}

/// One analytic level: energy, impurity-spin expectation, total
/// magnetization (impurity plus site) expectation.
#[derive(Clone, Copy, Debug)]
pub struct Level {
    pub energy: f64,
    pub m_imp: f64,
    pub m_total: f64,
}

/// The eight exact levels.
///
/// Charge sectors with zero or two electrons carry no exchange; the
/// singly occupied sector holds the polarized pair and the
/// singlet/triplet doublet mixed by the spin flips.
pub fn levels(j: f64, b: f64) -> [Level; 8] {
    [
        // zero electrons, impurity up/down
        Level { energy: 0.5 * b, m_imp: 0.5, m_total: 0.5 },
        Level { energy: -0.5 * b, m_imp: -0.5, m_total: -0.5 },
        // two electrons (spin singlet site), impurity up/down
        Level { energy: 0.5 * b, m_imp: 0.5, m_total: 0.5 },
        Level { energy: -0.5 * b, m_imp: -0.5, m_total: -0.5 },
        // one electron, aligned pair
        Level { energy: 0.25 * j + b, m_imp: 0.5, m_total: 1.0 },
        Level { energy: 0.25 * j - b, m_imp: -0.5, m_total: -1.0 },
        // one electron, antialigned: triplet-0 and singlet
        Level { energy: 0.25 * j, m_imp: 0.0, m_total: 0.0 },
        Level { energy: -0.75 * j, m_imp: 0.0, m_total: 0.0 },
    ]
}

fn check(p: &NblParams) -> Result<(), NblError> {
    if !(p.temperature > 0.0) {
        return Err(NblError::NonPositiveTemperature(p.temperature));
    }
    Ok(())
}

/// `ln Z`; always finite, unlike `Z` itself at `T << J`.
pub fn nbl_ln_partition(p: &NblParams) -> Result<f64, NblError> {
    check(p)?;
    let t = p.temperature;
    Ok(log_sum_exp(
        levels(p.j, p.b).iter().map(|l| -l.energy / t),
    ))
}

/// Partition function `Z = 4 cosh(B/2T) + e^{-J/4T}[1 + 2 cosh(B/T)] +
/// e^{3J/4T}`; overflows to `inf` once `3J/4T` exceeds ~709.
pub fn nbl_partition(p: &NblParams) -> Result<f64, NblError> {
    nbl_ln_partition(p).map(f64::exp)
}

/// Thermal averages `(m_imp, m_total, energy)` via max-shifted sums.
fn averages(p: &NblParams) -> (f64, f64, f64) {
    let t = p.temperature;
    let ls = levels(p.j, p.b);
    let shift = ls
        .iter()
        .map(|l| -l.energy / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let (mut m, mut mt, mut e) = (0.0, 0.0, 0.0);
    for l in ls {
        let w = (-l.energy / t - shift).exp();
        z += w;
        m += l.m_imp * w;
        mt += l.m_total * w;
        e += l.energy * w;
    }
    (m / z, mt / z, e / z)
}

/// Impurity magnetization; steps from 0 to -1/2 at `B = J` as `T -> 0`.
pub fn nbl_magnetization(p: &NblParams) -> Result<f64, NblError> {
    check(p)?;
    Ok(averages(p).0)
}

/// Negativity between impurity and the bath site, from the partial
/// transpose of the thermal state. Only the coherence between the
/// antialigned pair can generate a negative eigenvalue; round-off below
/// zero is clamped.
pub fn nbl_negativity(p: &NblParams) -> Result<f64, NblError> {
    check(p)?;
    let (j, b, t) = (p.j, p.b, p.temperature);
    let lnz = nbl_ln_partition(p)?;
    // Boltzmann factors of the four singly-occupied levels, relative to Z
    let pc = (-(0.25 * j - b) / t - lnz).exp();
    let pd = (-(0.25 * j + b) / t - lnz).exp();
    let q = 0.5 * ((-0.25 * j / t - lnz).exp() - (0.75 * j / t - lnz).exp());
    let neg = (0.25 * (pc - pd).powi(2) + q * q).sqrt() - 0.5 * (pc + pd);
    Ok(neg.max(0.0))
}

/// Entropy and the Maxwell-relation residual.
///
/// `S = ln Z + <E>/T` analytically. The residual compares
/// `dm/dT` against `-(1/2) dS/dB`: the model's single field acts on both
/// spins, and the factor 1/2 apportions the entropy response equally
/// between them. It is reported for diagnostics, not asserted to vanish.
pub fn nbl_entropy_and_maxwell(p: &NblParams) -> Result<(f64, f64), NblError> {
    check(p)?;
    let t = p.temperature;
    let lnz = nbl_ln_partition(p)?;
    let (m, mt, e) = averages(p);
    let entropy = lnz + e / t;
    // fluctuation forms: dm/dT = (<E m> - <E><m>)/T^2,
    // dS/dB = -d<M_tot>/dT|... via d S/dB = (<E><M> - <E M>)/T^2
    let ls = levels(p.j, p.b);
    let shift = ls
        .iter()
        .map(|l| -l.energy / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let (mut em, mut emt) = (0.0, 0.0);
    for l in ls {
        let w = (-l.energy / t - shift).exp();
        z += w;
        em += l.energy * l.m_imp * w;
        emt += l.energy * l.m_total * w;
    }
    let em = em / z;
    let emt = emt / z;
    let dm_dt = (em - e * m) / (t * t);
    let ds_db = (e * mt - emt) / (t * t);
    let residual = (dm_dt + 0.5 * ds_db).abs();
    Ok((entropy, residual))
}

/// Analytic `d<S_I^z>/dT` from the fluctuation identity.
pub fn nbl_dm_dt(p: &NblParams) -> Result<f64, NblError> {
    check(p)?;
    let t = p.temperature;
    let (m, _, e) = averages(p);
    let ls = levels(p.j, p.b);
    let shift = ls
        .iter()
        .map(|l| -l.energy / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut em = 0.0;
    for l in ls {
        let w = (-l.energy / t - shift).exp();
        z += w;
        em += l.energy * l.m_imp * w;
    }
    Ok((em / z - e * m) / (t * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use ndarray_linalg::Eigh;

    /// Dense 8x8 thermal oracle in the product basis
    /// `|S_I^z> x |n_up, n_dn>`.
    struct Oracle {
        evals: Vec<f64>,
        evecs: Array2<f64>,
        sz_imp: Array2<f64>,
    }

    impl Oracle {
        fn new(j: f64, b: f64) -> Oracle {
            // site basis: 0 |0>, 1 |up>, 2 |dn>, 3 |updn>
            let s0z = [0.0, 0.5, -0.5, 0.0];
            let mut h = Array2::<f64>::zeros((8, 8));
            let mut sz_imp = Array2::<f64>::zeros((8, 8));
            let szi = [0.5, -0.5];
            for is in 0..2 {
                for mu in 0..4 {
                    let k = is * 4 + mu;
                    h[[k, k]] = j * szi[is] * s0z[mu] + b * (szi[is] + s0z[mu]);
                    sz_imp[[k, k]] = szi[is];
                }
            }
            // spin flips: (J/2)(S_I^+ S_0^- + h.c.) couples |dn,up_e> and
            // |up,dn_e>
            let a = 2; // |up_imp, dn_e>
            let c = 4 + 1; // |dn_imp, up_e>
            h[[a, c]] = 0.5 * j;
            h[[c, a]] = 0.5 * j;
            let (evals, evecs) = h.eigh(ndarray_linalg::UPLO::Lower).unwrap();
            Oracle {
                evals: evals.to_vec(),
                evecs,
                sz_imp,
            }
        }

        fn weights(&self, t: f64) -> Vec<f64> {
            let e0 = self.evals.iter().cloned().fold(f64::INFINITY, f64::min);
            self.evals.iter().map(|e| (-(e - e0) / t).exp()).collect()
        }

        fn ln_z(&self, t: f64) -> f64 {
            let e0 = self.evals.iter().cloned().fold(f64::INFINITY, f64::min);
            let z: f64 = self.weights(t).iter().sum();
            z.ln() - e0 / t
        }

        fn magnetization(&self, t: f64) -> f64 {
            let w = self.weights(t);
            let z: f64 = w.iter().sum();
            let mut m = 0.0;
            for k in 0..8 {
                let mut diag = 0.0;
                for i in 0..8 {
                    diag += self.evecs[[i, k]] * self.sz_imp[[i, i]] * self.evecs[[i, k]];
                }
                m += diag * w[k];
            }
            m / z
        }

        fn negativity(&self, t: f64) -> f64 {
            let w = self.weights(t);
            let z: f64 = w.iter().sum();
            let mut rho = Array2::<f64>::zeros((8, 8));
            for k in 0..8 {
                for i in 0..8 {
                    for jx in 0..8 {
                        rho[[i, jx]] += self.evecs[[i, k]] * self.evecs[[jx, k]] * w[k] / z;
                    }
                }
            }
            // partial transpose on the impurity: swap the impurity index
            // between row and column
            let mut pt = Array2::<f64>::zeros((8, 8));
            for ia in 0..2 {
                for ib in 0..2 {
                    for ma in 0..4 {
                        for mb in 0..4 {
                            pt[[ib * 4 + ma, ia * 4 + mb]] = rho[[ia * 4 + ma, ib * 4 + mb]];
                        }
                    }
                }
            }
            let (vals, _) = pt.eigh(ndarray_linalg::UPLO::Lower).unwrap();
            0.5 * (vals.iter().map(|v| v.abs()).sum::<f64>() - 1.0)
        }
    }

    #[test]
    fn partition_limits() {
        // T -> inf: all eight states equally weighted
        let p = NblParams { j: 1.0, b: 0.5, temperature: 5e4 };
        assert!((nbl_partition(&p).unwrap() - 8.0).abs() < 1e-3);
        // T -> 0 at B = 0: singlet dominates, ln Z -> 3J/4T
        let p = NblParams { j: 1.0, b: 0.0, temperature: 1e-3 };
        let lnz = nbl_ln_partition(&p).unwrap();
        assert!((lnz * 1e-3 - 0.75).abs() < 1e-8);
    }

    #[test]
    fn closed_forms_match_oracle() {
        for (j, b, t, tol_m, tol_n) in [
            (1.0, 0.5, 0.25, 1e-12, 1e-10),
            (1.0, 0.5, 0.1, 1e-12, 1e-10),
            (1.0, 0.5, 0.2, 1e-12, 1e-10),
            (2.0, 0.3, 0.7, 1e-12, 1e-10),
            (1.0, 1.5, 0.05, 1e-12, 1e-10),
        ] {
            let oracle = Oracle::new(j, b);
            let p = NblParams { j, b, temperature: t };
            assert!(
                (nbl_ln_partition(&p).unwrap() - oracle.ln_z(t)).abs() < 1e-12,
                "lnZ at j={j} b={b} t={t}"
            );
            assert!(
                (nbl_magnetization(&p).unwrap() - oracle.magnetization(t)).abs() < tol_m,
                "m at j={j} b={b} t={t}"
            );
            assert!(
                (nbl_negativity(&p).unwrap() - oracle.negativity(t)).abs() < tol_n,
                "N at j={j} b={b} t={t}: {} vs {}",
                nbl_negativity(&p).unwrap(),
                oracle.negativity(t)
            );
        }
    }

    #[test]
    fn oracle_agreement_over_grid() {
        // 20x20 grid in (B/J, T/J)
        let j = 1.0;
        for ib in 0..20 {
            for it in 0..20 {
                let b = j * (0.1 + 1.9 * ib as f64 / 19.0);
                let t = j * 10f64.powf(-2.0 + 3.0 * it as f64 / 19.0);
                let p = NblParams { j, b, temperature: t };
                let oracle = Oracle::new(j, b);
                assert!(
                    (nbl_magnetization(&p).unwrap() - oracle.magnetization(t)).abs() < 1e-10,
                    "m at b={b} t={t}"
                );
                assert!(
                    (nbl_negativity(&p).unwrap() - oracle.negativity(t)).abs() < 1e-10,
                    "N at b={b} t={t}"
                );
            }
        }
    }

    #[test]
    fn magnetization_step_and_symmetry() {
        let j = 1.0;
        let p0 = NblParams { j, b: 0.0, temperature: 0.3 };
        assert_eq!(nbl_magnetization(&p0).unwrap(), 0.0);
        // T -> 0: m = 0 below the crossing, -1/2 above
        let low = NblParams { j, b: 0.8 * j, temperature: 1e-3 };
        let high = NblParams { j, b: 1.2 * j, temperature: 1e-3 };
        assert!(nbl_magnetization(&low).unwrap().abs() < 1e-10);
        assert!((nbl_magnetization(&high).unwrap() + 0.5).abs() < 1e-10);
    }

    #[test]
    fn negativity_limits() {
        let j = 1.0;
        // T -> 0, B = 0: maximal entanglement 1/2
        let p = NblParams { j, b: 0.0, temperature: 1e-4 };
        assert!((nbl_negativity(&p).unwrap() - 0.5).abs() < 1e-10);
        // T -> 0, B = 1.5 J: product state, zero
        let p = NblParams { j, b: 1.5, temperature: 1e-4 };
        assert!(nbl_negativity(&p).unwrap() < 1e-10);
    }

    #[test]
    fn negativity_nonincreasing_in_t_below_crossing() {
        let j = 1.0;
        for b in [0.0, 0.4, 0.9] {
            let mut last = f64::INFINITY;
            for k in 0..30 {
                let t = 1e-3 * (4e3f64).powf(k as f64 / 29.0);
                let n = nbl_negativity(&NblParams { j, b, temperature: t }).unwrap();
                assert!(n <= last + 1e-12, "b={b} t={t}");
                last = n;
            }
        }
    }

    #[test]
    fn entropy_limits_and_maxwell() {
        let p = NblParams { j: 1.0, b: 0.5, temperature: 5e4 };
        let (s, _) = nbl_entropy_and_maxwell(&p).unwrap();
        assert!((s - (8.0f64).ln()).abs() < 1e-6);

        // B = 0: both sides of the Maxwell relation vanish by symmetry
        let p = NblParams { j: 1.0, b: 0.0, temperature: 0.2 };
        let (_, residual) = nbl_entropy_and_maxwell(&p).unwrap();
        assert!(residual < 1e-12);
        assert!(nbl_dm_dt(&p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn analytic_dm_dt_matches_finite_differences() {
        let (j, b, t) = (1.0, 0.3, 0.2);
        let analytic = nbl_dm_dt(&NblParams { j, b, temperature: t }).unwrap();
        let dt = 1e-5;
        let hi = nbl_magnetization(&NblParams { j, b, temperature: t + dt }).unwrap();
        let lo = nbl_magnetization(&NblParams { j, b, temperature: t - dt }).unwrap();
        let fd = (hi - lo) / (2.0 * dt);
        assert!((analytic - fd).abs() < 1e-6, "{analytic} vs {fd}");
    }

    #[test]
    fn log_space_evaluation_deep_in_the_singlet_regime() {
        // T/J = 1e-4: naive Z overflows; everything must stay finite
        let p = NblParams { j: 1.0, b: 0.5, temperature: 1e-4 };
        let m = nbl_magnetization(&p).unwrap();
        let n = nbl_negativity(&p).unwrap();
        assert!(m.is_finite() && n.is_finite());
        assert!(m.abs() < 1e-8); // singlet ground state
        assert!((n - 0.5).abs() < 1e-8);
    }
}
