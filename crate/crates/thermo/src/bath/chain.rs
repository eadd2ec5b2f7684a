//! Wilson-chain construction: Lanczos tridiagonalization of the
//! discretized bath, seeded by the local orbital.
//!
//! On exponentially spaced poles the recursion loses orthogonality in
//! plain doubles beyond roughly 25 sites, so the default mode runs in
//! double-double with full reorthogonalization. The `Double` mode is kept
//! for quick work and fails loudly instead of returning garbage.

use ndarray::Array2;
use ndarray_linalg::Eigh;

use crate::bath::discretize::Discretization;
use crate::bath::BathError;
use crate::numerics::ddouble::Dd;

/// Tridiagonal representation of a discretized bath: on-site energies
/// vanish for particle-hole-symmetric input; hoppings decay like
/// `Lambda^{-n/2}` down the chain.
#[derive(Clone, Debug)]
pub struct WilsonChain {
    pub lambda: f64,
    /// `t_n`, coupling site n to site n+1.
    pub hoppings: Vec<f64>,
    /// On-site energies (zero for symmetric baths, kept for generality).
    pub onsite: Vec<f64>,
    pub dos_ref: String,
}

impl WilsonChain {
    pub fn n_sites(&self) -> usize {
        self.onsite.len()
    }

    /// Dense single-particle matrix of the chain (for small-chain checks).
    pub fn single_particle_matrix(&self) -> Array2<f64> {
        let n = self.n_sites();
        let mut h = Array2::zeros((n, n));
        for i in 0..n {
            h[[i, i]] = self.onsite[i];
            if i + 1 < n {
                h[[i, i + 1]] = self.hoppings[i];
                h[[i + 1, i]] = self.hoppings[i];
            }
        }
        h
    }

    /// Eigen-decomposition of the chain into a pole set: returns
    /// `(positions, weights)` where weights are the squared site-0
    /// amplitudes. For a faithful chain this reproduces the discretization
    /// it was built from.
    pub fn rebuild_poles(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.single_particle_matrix();
        let (vals, vecs) = h.eigh(ndarray_linalg::UPLO::Lower).expect("tridiagonal eigh");
        let weights: Vec<f64> = (0..vals.len()).map(|k| vecs[[0, k]] * vecs[[0, k]]).collect();
        (vals.to_vec(), weights)
    }
}

/// Arithmetic backing for the recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChainPrecision {
    /// Plain f64 with full reorthogonalization; errors out when the
    /// hoppings sink below the double-precision noise floor.
    Double,
    /// Double-double; the default.
    #[default]
    Wide,
}

trait Scalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + PartialOrd
{
    const EPS: f64;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn zero() -> Self;
}

impl Scalar for f64 {
    const EPS: f64 = 2.2e-16;
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn zero() -> f64 {
        0.0
    }
}

impl Scalar for Dd {
    const EPS: f64 = 5e-32;
    fn from_f64(x: f64) -> Dd {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn sqrt(self) -> Dd {
        Dd::sqrt(self)
    }
    fn zero() -> Dd {
        Dd::ZERO
    }
}

/// Map the discretized bath onto a tight-binding chain of `n_sites`
/// sites. The seed vector carries amplitude `sqrt(weight)` on each pole,
/// so the chain end reproduces the discretized DoS exactly.
pub fn wilson_chain(
    disc: &Discretization,
    n_sites: usize,
    precision: ChainPrecision,
) -> Result<WilsonChain, BathError> {
    let n_poles = disc.poles.len();
    if n_sites == 0 || n_sites > n_poles {
        return Err(BathError::ChainTooLong {
            requested: n_sites,
            poles: n_poles,
        });
    }
    let (onsite, hoppings) = match precision {
        ChainPrecision::Double => lanczos::<f64>(disc, n_sites)?,
        ChainPrecision::Wide => lanczos::<Dd>(disc, n_sites)?,
    };
    Ok(WilsonChain {
        lambda: disc.lambda,
        hoppings,
        onsite,
        dos_ref: disc.dos_ref.clone(),
    })
}

fn lanczos<S: Scalar>(
    disc: &Discretization,
    n_sites: usize,
) -> Result<(Vec<f64>, Vec<f64>), BathError> {
    let n = disc.poles.len();
    let energies: Vec<S> = disc.poles.iter().map(|p| S::from_f64(p.position)).collect();
    let scale = disc
        .poles
        .iter()
        .map(|p| p.position.abs())
        .fold(0.0f64, f64::max);
    let total: f64 = disc.total_weight();
    let mut v: Vec<S> = disc
        .poles
        .iter()
        .map(|p| S::from_f64((p.weight / total).max(0.0)).sqrt())
        .collect();
    let mut basis: Vec<Vec<S>> = vec![v.clone()];
    let mut prev: Option<Vec<S>> = None;
    let mut beta = S::zero();
    let mut onsite = Vec::with_capacity(n_sites);
    let mut hoppings = Vec::with_capacity(n_sites.saturating_sub(1));
    let floor = scale * S::EPS * 1e3;

    for site in 0..n_sites {
        // r = H v - alpha v - beta v_prev
        let mut r: Vec<S> = (0..n).map(|i| energies[i] * v[i]).collect();
        let alpha = dot(&r, &v);
        onsite.push(alpha.to_f64());
        for i in 0..n {
            r[i] = r[i] - alpha * v[i];
        }
        if let Some(p) = &prev {
            for i in 0..n {
                r[i] = r[i] - beta * p[i];
            }
        }
        // full reorthogonalization, twice
        for _ in 0..2 {
            for u in &basis {
                let c = dot(&r, u);
                for i in 0..n {
                    r[i] = r[i] - c * u[i];
                }
            }
        }
        if site + 1 == n_sites {
            break;
        }
        let norm2 = dot(&r, &r);
        let b = norm2.sqrt();
        if b.to_f64() <= floor {
            return Err(BathError::ChainPrecisionLoss {
                site,
                mode: match S::EPS {
                    e if e > 1e-20 => "Double",
                    _ => "Wide",
                },
            });
        }
        hoppings.push(b.to_f64());
        let inv = S::from_f64(1.0) / b;
        let next: Vec<S> = r.iter().map(|&x| x * inv).collect();
        prev = Some(std::mem::replace(&mut v, next.clone()));
        basis.push(next);
        beta = b;
    }
    Ok((onsite, hoppings))
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for i in 0..a.len() {
        acc = acc + a[i] * b[i];
    }
    acc
}

/// Closed-form Wilson hoppings for a flat band of halfwidth `d`,
/// in the limit of infinitely many discretization intervals.
pub fn flat_band_hopping(n: usize, lambda: f64, d: f64) -> f64 {
    let nf = n as i32;
    d * (1.0 + 1.0 / lambda) * (1.0 - lambda.powi(-nf - 1))
        / (2.0 * ((1.0 - lambda.powi(-2 * nf - 1)) * (1.0 - lambda.powi(-2 * nf - 3))).sqrt())
        * lambda.powf(-0.5 * n as f64)
}
