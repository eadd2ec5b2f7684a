//! Bath densities of states.
//!
//! Every built-in family is particle-hole symmetric and normalized to unit
//! weight; the prefactor `rho0` is fixed by that normalization. The
//! halfwidth `D` sets the energy unit (D = 1 internally throughout the
//! toolkit).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use crate::bath::BathError;
use crate::numerics::quad;

/// Density-of-states family. Hard-bandwidth families vanish identically
/// outside `|w| > D`; the Gaussian has soft tails with characteristic
/// width `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DosFamily {
    /// Constant inside the band (metallic).
    Flat,
    /// Semi-elliptical, from a semi-infinite tight-binding chain with
    /// hopping `t = D/2` (metallic).
    Nanowire,
    /// Gaussian with characteristic width `D` (metallic, soft band).
    Gaussian,
    /// Linear pseudogap `rho ~ |w/D|` with hard cutoff (semi-metal).
    ///
    /// This is the low-energy form of the hexagonal-lattice result; only
    /// the exponent matters for the universality class, so the full
    /// band structure is deliberately replaced by the pure power law.
    /// Outputs carry an approximation flag for this substitution.
    Graphene,
    /// Power-law diverging `rho ~ |w/D|^{-1/4}` with hard cutoff
    /// (magic-angle twisted bilayer graphene).
    TbgDiverging,
    /// Tabulated `(w, rho)` samples, linearly interpolated and rescaled
    /// to unit weight on load.
    Tabulated { table: Vec<(f64, f64)> },
}

/// A declarative bath description: family plus halfwidth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DosSpec {
    pub family: DosFamily,
    /// Band halfwidth `D` (energy unit).
    pub halfwidth: f64,
}

impl DosSpec {
    pub fn new(family: DosFamily, halfwidth: f64) -> Result<DosSpec, BathError> {
        if !(halfwidth > 0.0) || !halfwidth.is_finite() {
            return Err(BathError::InvalidSpec(format!(
                "halfwidth must be positive and finite, got {halfwidth}"
            )));
        }
        let spec = DosSpec { family, halfwidth };
        if let DosFamily::Tabulated { .. } = spec.family {
            return spec.normalized_table();
        }
        Ok(spec)
    }

    pub fn flat(d: f64) -> DosSpec {
        DosSpec::new(DosFamily::Flat, d).expect("valid halfwidth")
    }

    pub fn nanowire(d: f64) -> DosSpec {
        DosSpec::new(DosFamily::Nanowire, d).expect("valid halfwidth")
    }

    pub fn gaussian(d: f64) -> DosSpec {
        DosSpec::new(DosFamily::Gaussian, d).expect("valid halfwidth")
    }

    pub fn graphene(d: f64) -> DosSpec {
        DosSpec::new(DosFamily::Graphene, d).expect("valid halfwidth")
    }

    pub fn tbg(d: f64) -> DosSpec {
        DosSpec::new(DosFamily::TbgDiverging, d).expect("valid halfwidth")
    }

    /// Load a tabulated DoS from whitespace-delimited two-column text;
    /// `#` starts a comment. The table is rescaled to unit total weight.
    pub fn tabulated_from_path(path: &Path, halfwidth: f64) -> Result<DosSpec, BathError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BathError::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
        Self::tabulated_from_str(&text, halfwidth)
    }

    pub fn tabulated_from_str(text: &str, halfwidth: f64) -> Result<DosSpec, BathError> {
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64, BathError> {
                tok.ok_or_else(|| {
                    BathError::InvalidSpec(format!("line {}: expected two columns", lineno + 1))
                })?
                .parse::<f64>()
                .map_err(|e| BathError::InvalidSpec(format!("line {}: {e}", lineno + 1)))
            };
            let w = parse(it.next())?;
            let rho = parse(it.next())?;
            rows.push((w, rho));
        }
        if rows.len() < 2 {
            return Err(BathError::InvalidSpec(
                "tabulated DoS needs at least two rows".into(),
            ));
        }
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        DosSpec::new(DosFamily::Tabulated { table: rows }, halfwidth)
    }

    fn normalized_table(mut self) -> Result<DosSpec, BathError> {
        let DosFamily::Tabulated { table } = &mut self.family else {
            unreachable!()
        };
        let mut integral = 0.0;
        for pair in table.windows(2) {
            let (w0, r0) = pair[0];
            let (w1, r1) = pair[1];
            if w1 <= w0 {
                return Err(BathError::InvalidSpec(
                    "tabulated frequencies must be strictly increasing".into(),
                ));
            }
            if r0 < 0.0 || r1 < 0.0 || !r0.is_finite() || !r1.is_finite() {
                return Err(BathError::InvalidSpec(
                    "tabulated DoS values must be finite and non-negative".into(),
                ));
            }
            integral += 0.5 * (r0 + r1) * (w1 - w0);
        }
        if !(integral > 0.0) || !integral.is_finite() {
            return Err(BathError::InvalidSpec(format!(
                "tabulated DoS is unnormalizable (integral {integral})"
            )));
        }
        for row in table.iter_mut() {
            row.1 /= integral;
        }
        Ok(self)
    }

    /// Normalization prefactor `rho0 = rho(0)` (band center value) for the
    /// analytic families; for Tabulated this is the interpolated value at 0.
    pub fn rho0(&self) -> f64 {
        let d = self.halfwidth;
        match &self.family {
            DosFamily::Flat => 1.0 / (2.0 * d),
            DosFamily::Nanowire => 2.0 / (std::f64::consts::PI * d),
            DosFamily::Gaussian => 1.0 / (d * std::f64::consts::PI.sqrt()),
            DosFamily::Graphene => 1.0 / d,
            DosFamily::TbgDiverging => 3.0 / (8.0 * d),
            DosFamily::Tabulated { .. } => self.eval(0.0),
        }
    }

    /// Power-law exponent, for the power-law families only.
    pub fn exponent(&self) -> Option<f64> {
        match self.family {
            DosFamily::Graphene => Some(1.0),
            DosFamily::TbgDiverging => Some(-0.25),
            _ => None,
        }
    }

    /// Largest `|w|` carrying spectral weight (numerically): `D` for hard
    /// bands, a padded multiple of `D` for the Gaussian, the table range
    /// otherwise.
    pub fn support_halfwidth(&self) -> f64 {
        match &self.family {
            DosFamily::Gaussian => 8.0 * self.halfwidth,
            DosFamily::Tabulated { table } => table
                .iter()
                .map(|(w, _)| w.abs())
                .fold(0.0f64, f64::max),
            _ => self.halfwidth,
        }
    }

    /// All built-in families are particle-hole symmetric by construction;
    /// a table is checked numerically.
    pub fn is_ph_symmetric(&self) -> bool {
        match &self.family {
            DosFamily::Tabulated { .. } => {
                let w = self.support_halfwidth();
                (0..64).all(|i| {
                    let x = w * (i as f64 + 0.5) / 64.0;
                    (self.eval(x) - self.eval(-x)).abs() <= 1e-10 * self.rho0().max(1.0)
                })
            }
            _ => true,
        }
    }

    /// DoS value at the upper band edge, approached from inside. Nonzero
    /// edge weight makes the real part of the Green's function diverge
    /// logarithmically there.
    pub fn edge_value(&self) -> f64 {
        let d = self.halfwidth;
        match &self.family {
            DosFamily::Gaussian => 0.0,
            _ => self.eval(d * (1.0 - 1e-12)),
        }
    }

    /// Evaluate `rho(w)`.
    ///
    /// Returns 0 outside the band for hard-bandwidth families. For
    /// `TbgDiverging` the divergence at `w = 0` is integrable; evaluating
    /// exactly at 0 yields `+inf`.
    pub fn eval(&self, w: f64) -> f64 {
        let d = self.halfwidth;
        let u = w / d;
        match &self.family {
            DosFamily::Flat => {
                if u.abs() <= 1.0 {
                    self.rho0()
                } else {
                    0.0
                }
            }
            DosFamily::Nanowire => {
                if u.abs() <= 1.0 {
                    self.rho0() * (1.0 - u * u).sqrt()
                } else {
                    0.0
                }
            }
            DosFamily::Gaussian => self.rho0() * (-u * u).exp(),
            DosFamily::Graphene => {
                if u.abs() <= 1.0 {
                    self.rho0() * u.abs()
                } else {
                    0.0
                }
            }
            DosFamily::TbgDiverging => {
                if u == 0.0 {
                    f64::INFINITY
                } else if u.abs() <= 1.0 {
                    self.rho0() * u.abs().powf(-0.25)
                } else {
                    0.0
                }
            }
            DosFamily::Tabulated { table } => {
                if w < table[0].0 || w > table[table.len() - 1].0 {
                    return 0.0;
                }
                let i = match table
                    .binary_search_by(|(x, _)| x.partial_cmp(&w).unwrap())
                {
                    Ok(i) => return table[i].1,
                    Err(i) => i,
                };
                let (w0, r0) = table[i - 1];
                let (w1, r1) = table[i];
                r0 + (r1 - r0) * (w - w0) / (w1 - w0)
            }
        }
    }

    /// Numerical check of `int rho = 1`, returned as the actual integral.
    pub fn normalization_integral(&self) -> f64 {
        let w = self.support_halfwidth();
        quad::integrate_with_breaks(&[-w, 0.0, w], &mut |x| self.eval(x))
    }

    /// Stable identifier used in run provenance and chain records.
    pub fn identifier(&self) -> String {
        match &self.family {
            DosFamily::Flat => format!("flat(D={})", self.halfwidth),
            DosFamily::Nanowire => format!("nanowire(D={})", self.halfwidth),
            DosFamily::Gaussian => format!("gaussian(D={})", self.halfwidth),
            DosFamily::Graphene => format!("graphene(D={})", self.halfwidth),
            DosFamily::TbgDiverging => format!("tbg(D={})", self.halfwidth),
            DosFamily::Tabulated { table } => {
                format!("tabulated(D={},rows={})", self.halfwidth, table.len())
            }
        }
    }
}

impl fmt::Display for DosSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.identifier())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_band_center() {
        let spec = DosSpec::flat(1.0);
        assert_eq!(spec.eval(0.5), 0.5);
        assert_eq!(spec.eval(1.5), 0.0);
    }

    #[test]
    fn nanowire_band_center() {
        // rho0 = 1/(pi t) with D = 2t
        let spec = DosSpec::nanowire(1.0);
        assert!((spec.eval(0.0) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn graphene_vanishes_at_zero() {
        let spec = DosSpec::graphene(1.0);
        assert_eq!(spec.eval(0.0), 0.0);
        assert!(spec.eval(0.5) > 0.0);
    }

    #[test]
    fn all_families_normalized() {
        for spec in [
            DosSpec::flat(1.0),
            DosSpec::nanowire(1.0),
            DosSpec::gaussian(1.0),
            DosSpec::graphene(1.0),
            DosSpec::tbg(1.0),
            DosSpec::flat(2.5),
            DosSpec::gaussian(0.3),
        ] {
            let integral = spec.normalization_integral();
            assert!(
                (integral - 1.0).abs() < 1e-8,
                "{spec}: integral = {integral}"
            );
        }
    }

    #[test]
    fn ph_symmetry_of_builtins() {
        for spec in [
            DosSpec::flat(1.0),
            DosSpec::nanowire(1.0),
            DosSpec::gaussian(1.0),
            DosSpec::graphene(1.0),
            DosSpec::tbg(1.0),
        ] {
            for w in [0.1, 0.33, 0.92] {
                assert_eq!(spec.eval(w), spec.eval(-w), "{spec} at {w}");
            }
        }
    }

    #[test]
    fn tabulated_renormalizes_and_interpolates() {
        let text = "# test table\n-1.0 2.0\n0.0 2.0\n1.0 2.0\n";
        let spec = DosSpec::tabulated_from_str(text, 1.0).unwrap();
        assert!((spec.normalization_integral() - 1.0).abs() < 1e-12);
        assert!((spec.eval(0.25) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tabulated_rejects_garbage() {
        assert!(DosSpec::tabulated_from_str("0.0 0.0\n1.0 0.0\n", 1.0).is_err());
        assert!(DosSpec::tabulated_from_str("0.0 1.0\n0.0 1.0\n", 1.0).is_err());
        assert!(DosSpec::tabulated_from_str("0.0 -1.0\n1.0 1.0\n", 1.0).is_err());
    }
}
