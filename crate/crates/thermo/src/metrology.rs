//! Thermometric post-processing: Fisher information, QFI/QSNR, peak
//! extraction, Kondo-temperature estimators, full-bath negativity and
//! scaling-collapse tables.
//!
//! Probe states in scope are diagonal in the energy basis, so the QFI
//! reduces to the classical Fisher information of the two-outcome spin
//! distribution, fixed entirely by the magnetization and its temperature
//! derivative.

use sha2::{Digest, Sha256};

use crate::bath::{DosFamily, DosSpec};
use crate::curve::ThermoCurve;
use crate::numerics::interp::parabolic_peak;

#[derive(Debug, thiserror::Error)]
pub enum MetrologyError {
    #[error("probabilities must be positive and normalized: {0}")]
    BadDistribution(String),
    #[error("zero probability with nonzero derivative: Fisher information diverges")]
    DivergentFisher,
    #[error("probe saturated (|m| within 1e-12 of 1/2): no thermal information")]
    Saturated,
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("curve maximum sits on the boundary")]
    BoundaryMaximum,
    #[error("perturbative estimate needs rho0 J < 1, got {0}")]
    CouplingTooLarge(f64),
    #[error("{0} crossover not bracketed by the curve")]
    CrossoverNotBracketed(&'static str),
    #[error("curves share no overlap in T/T_K")]
    EmptyOverlap,
    #[error(transparent)]
    Curve(#[from] crate::curve::CurveError),
}

/// One temperature-sensitivity record.
#[derive(Clone, Copy, Debug)]
pub struct SensitivityPoint {
    pub t: f64,
    pub b: f64,
    pub m: f64,
    pub dm_dt: f64,
    pub qfi: f64,
    pub qsnr: f64,
}

/// Classical Fisher information of a discrete outcome distribution.
pub fn fisher_information(p: &[f64], dp: &[f64]) -> Result<f64, MetrologyError> {
    if p.len() != dp.len() || p.is_empty() {
        return Err(MetrologyError::BadDistribution(
            "probability and derivative lengths differ".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(MetrologyError::BadDistribution(format!(
            "sum(p) = {total}"
        )));
    }
    let dsum: f64 = dp.iter().sum();
    if dsum.abs() > 1e-8 {
        return Err(MetrologyError::BadDistribution(format!(
            "sum(dp) = {dsum} must vanish"
        )));
    }
    let mut fi = 0.0;
    for (&pk, &dk) in p.iter().zip(dp) {
        if pk <= 0.0 {
            if dk.abs() > 0.0 {
                return Err(MetrologyError::DivergentFisher);
            }
            continue;
        }
        fi += dk * dk / pk;
    }
    Ok(fi)
}

/// QFI of the two-level probe: `(dm/dT)^2 / (1/4 - m^2)`.
pub fn qfi_two_level(m: f64, dm_dt: f64) -> Result<f64, MetrologyError> {
    if m.abs() >= 0.5 - 1e-12 {
        return Err(MetrologyError::Saturated);
    }
    Ok(dm_dt * dm_dt / (0.25 - m * m))
}

/// Signal-to-noise ratio `Q = T sqrt(H)`.
pub fn qsnr(t: f64, qfi: f64) -> f64 {
    assert!(qfi >= 0.0, "negative QFI {qfi}");
    t * qfi.sqrt()
}

/// Free-spin reference `Q = (B/2T) sech(B/2T)`.
pub fn free_spin_qsnr(b: f64, t: f64) -> f64 {
    let x = b / (2.0 * t);
    x.abs() / x.cosh()
}

/// Free-spin magnetization `-1/2 tanh(B/2T)`.
pub fn free_spin_magnetization(b: f64, t: f64) -> f64 {
    -0.5 * (b / (2.0 * t)).tanh()
}

/// Reduced peak of the free-spin law: `B/T` at the maximum and the value
/// there, from maximizing `x/2 sech(x/2)`.
pub const FREE_SPIN_PEAK_X: f64 = 2.399_357_261_847;
pub const FREE_SPIN_PEAK_Q: f64 = 0.662_743_419_349;

/// Smoothing policy for [`temperature_derivative`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// Apply local quadratic smoothing when point-to-point noise exceeds
    /// 1e-4; recorded in provenance.
    #[default]
    Auto,
    /// Never smooth (analytic-model curves).
    Never,
}

/// Fill `dm_dT` by centered differences on the log-T grid (one-sided
/// three-point stencils at the ends, which are lower accuracy).
///
/// With `Smoothing::Auto`, a window-5 local quadratic fit replaces the
/// raw samples when the second differences betray noise above 1e-4.
pub fn temperature_derivative(
    curve: &ThermoCurve,
    smoothing: Smoothing,
) -> Result<ThermoCurve, MetrologyError> {
    let n = curve.points.len();
    if n < 5 {
        return Err(MetrologyError::TooFewPoints { need: 5, got: n });
    }
    curve.validate()?;
    let x: Vec<f64> = curve.points.iter().map(|p| p.t.ln()).collect();
    let mut m: Vec<f64> = curve.points.iter().map(|p| p.m).collect();
    let mut smoothed = false;
    if smoothing == Smoothing::Auto {
        let mut noise = 0.0f64;
        for i in 1..n - 1 {
            noise = noise.max((m[i + 1] - 2.0 * m[i] + m[i - 1]).abs());
        }
        if noise > 1e-4 {
            m = local_quadratic_smooth(&x, &m);
            smoothed = true;
        }
    }
    let mut out = curve.clone();
    out.provenance.smoothed = smoothed;
    if smoothed {
        out.provenance
            .notes
            .push("derivative smoothing: window 5, order 2".into());
    }
    for i in 0..n {
        let d_dx = if i == 0 {
            one_sided(&x[0..3], &m[0..3], x[0])
        } else if i == n - 1 {
            one_sided(&x[n - 3..n], &m[n - 3..n], x[n - 1])
        } else {
            centered(x[i - 1], x[i], x[i + 1], m[i - 1], m[i], m[i + 1])
        };
        out.points[i].dm_dt = Some(d_dx / curve.points[i].t);
    }
    Ok(out)
}

fn centered(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let hm = x1 - x0;
    let hp = x2 - x1;
    (hm * hm * f2 - hp * hp * f0 + (hp * hp - hm * hm) * f1) / (hm * hp * (hm + hp))
}

fn one_sided(xs: &[f64], fs: &[f64], at: f64) -> f64 {
    // derivative of the quadratic through three points
    let (x0, x1, x2) = (xs[0], xs[1], xs[2]);
    let (f0, f1, f2) = (fs[0], fs[1], fs[2]);
    let d0 = (f1 - f0) / (x1 - x0);
    let d1 = (f2 - f1) / (x2 - x1);
    let c2 = (d1 - d0) / (x2 - x0);
    d0 + c2 * (2.0 * at - x0 - x1)
}

fn local_quadratic_smooth(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(2).min(n.saturating_sub(5));
        let hi = (lo + 5).min(n);
        let xs = &x[lo..hi];
        let ys = &y[lo..hi];
        out[i] = quadratic_fit_eval(xs, ys, x[i]);
    }
    out
}

fn quadratic_fit_eval(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    // least-squares quadratic in centered coordinates
    let c = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut s = [0.0f64; 5];
    let mut b = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let u = x - c;
        let mut up = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += up;
            if k < 3 {
                b[k] += y * up;
            }
            up *= u;
        }
    }
    // solve the 3x3 normal equations by Cramer's rule
    let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    let mut coef = [0.0f64; 3];
    for k in 0..3 {
        let mut ak = a;
        for r in 0..3 {
            ak[r][k] = b[r];
        }
        coef[k] = det(&ak) / d;
    }
    let u = at - c;
    coef[0] + coef[1] * u + coef[2] * u * u
}

/// Fill `qfi` and `qsnr` from `m` and `dm_dT`; points with a saturated
/// probe are left empty.
pub fn fill_sensitivity(curve: &mut ThermoCurve) {
    for p in curve.points.iter_mut() {
        if let Some(dm) = p.dm_dt {
            if let Ok(h) = qfi_two_level(p.m, dm) {
                p.qfi = Some(h);
                p.qsnr = Some(qsnr(p.t, h));
            }
        }
    }
}

/// Location and height of the QSNR maximum.
#[derive(Clone, Copy, Debug)]
pub struct PeakSummary {
    pub t_max: f64,
    pub q_max: f64,
    /// Parabolic interpolation in (ln T, Q) around the best sample.
    pub interpolation_order: usize,
}

/// Peak of the curve's QSNR by parabolic refinement in `(ln T, Q)`.
/// A maximum on the curve boundary is an error carrying its own flag.
pub fn peak_summary(curve: &ThermoCurve) -> Result<PeakSummary, MetrologyError> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter_map(|p| p.qsnr.map(|q| (p.t.ln(), q)))
        .collect();
    if pts.len() < 3 {
        return Err(MetrologyError::TooFewPoints {
            need: 3,
            got: pts.len(),
        });
    }
    let mut best = 0;
    for (i, &(_, q)) in pts.iter().enumerate() {
        if q > pts[best].1 {
            best = i;
        }
    }
    if best == 0 || best + 1 == pts.len() {
        return Err(MetrologyError::BoundaryMaximum);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (xp, yp) = parabolic_peak(&xs, &ys, best);
    Ok(PeakSummary {
        t_max: xp.exp(),
        q_max: yp,
        interpolation_order: 2,
    })
}

/// Kondo-temperature estimation method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TkMethod {
    /// `T` where the impurity entropy crosses (ln 2)/2.
    EntropyHalfLn2,
    /// Smallest `B` polarizing the impurity to -1/4 at `T -> 0`,
    /// divided by a fixed calibration constant.
    MagnetizationQuarter,
    /// `D e^{-1/(rho0 J)}` (metallic) — order of magnitude only.
    Perturbative,
    /// `D (rho0 J)^4` for the power-law diverging family.
    TbgPower,
}

#[derive(Clone, Debug)]
pub struct TkEstimate {
    pub value: f64,
    pub method: TkMethod,
    pub inputs_hash: String,
    /// Prefactor conventions make this an order-of-magnitude number.
    pub order_of_magnitude: bool,
    /// Set for baths with no Kondo effect (pseudogap at half filling).
    pub no_kondo: bool,
}

fn hash_inputs(parts: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Perturbative Kondo scale for coupling `j` in a bath of family
/// `dos`: exponentially small for metals, power-law enhanced for the
/// diverging family, zero (no Kondo effect) for the graphene pseudogap.
pub fn tk_perturbative(dos: &DosSpec, j: f64) -> Result<TkEstimate, MetrologyError> {
    let rho0 = dos.rho0();
    let d = dos.halfwidth;
    let hash = hash_inputs(&[rho0, j, d]);
    match dos.family {
        DosFamily::Graphene => Ok(TkEstimate {
            value: 0.0,
            method: TkMethod::Perturbative,
            inputs_hash: hash,
            order_of_magnitude: true,
            no_kondo: true,
        }),
        DosFamily::TbgDiverging => Ok(TkEstimate {
            value: d * (rho0 * j).powi(4),
            method: TkMethod::TbgPower,
            inputs_hash: hash,
            order_of_magnitude: true,
            no_kondo: false,
        }),
        _ => {
            if rho0 * j >= 1.0 {
                return Err(MetrologyError::CouplingTooLarge(rho0 * j));
            }
            Ok(TkEstimate {
                value: d * (-1.0 / (rho0 * j)).exp(),
                method: TkMethod::Perturbative,
                inputs_hash: hash,
                order_of_magnitude: true,
                no_kondo: false,
            })
        }
    }
}

/// Calibration constant for [`TkMethod::MagnetizationQuarter`]: the ratio
/// `B(m = -1/4 at T -> 0) / T_K(entropy)`, fixed once for the flat band
/// at `J = 0.3 D` with the desk-scale solver preset.
pub const MAGNETIZATION_QUARTER_CALIBRATION: f64 = 9.26;

/// Operational `T_K` from a zero-field entropy curve: log-T interpolation
/// of the `S_imp = (ln 2)/2` crossing.
pub fn tk_operational_entropy(curve: &ThermoCurve) -> Result<TkEstimate, MetrologyError> {
    let target = 0.5 * std::f64::consts::LN_2;
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter_map(|p| p.s_imp.map(|s| (p.t, s)))
        .collect();
    if pts.len() < 2 {
        return Err(MetrologyError::TooFewPoints {
            need: 2,
            got: pts.len(),
        });
    }
    for pair in pts.windows(2) {
        let (t1, s1) = pair[0];
        let (t2, s2) = pair[1];
        if (s1 - target) * (s2 - target) <= 0.0 && s1 != s2 {
            let f = (target - s1) / (s2 - s1);
            let tk = (t1.ln() + f * (t2.ln() - t1.ln())).exp();
            return Ok(TkEstimate {
                value: tk,
                method: TkMethod::EntropyHalfLn2,
                inputs_hash: curve.provenance.params_hash.clone(),
                order_of_magnitude: false,
                no_kondo: false,
            });
        }
    }
    Err(MetrologyError::CrossoverNotBracketed("entropy ln2/2"))
}

/// Operational `T_K` from low-temperature magnetization versus field:
/// the interpolated `B` where `m(T -> 0) = -1/4`, divided by the frozen
/// calibration constant.
pub fn tk_operational_magnetization(
    fields: &[f64],
    m_low_t: &[f64],
) -> Result<TkEstimate, MetrologyError> {
    if fields.len() != m_low_t.len() || fields.len() < 2 {
        return Err(MetrologyError::TooFewPoints {
            need: 2,
            got: fields.len().min(m_low_t.len()),
        });
    }
    for i in 0..fields.len() - 1 {
        let (m1, m2) = (m_low_t[i], m_low_t[i + 1]);
        if (m1 + 0.25) * (m2 + 0.25) <= 0.0 && m1 != m2 {
            let f = (-0.25 - m1) / (m2 - m1);
            let b_star = (fields[i].ln() + f * (fields[i + 1].ln() - fields[i].ln())).exp();
            return Ok(TkEstimate {
                value: b_star / MAGNETIZATION_QUARTER_CALIBRATION,
                method: TkMethod::MagnetizationQuarter,
                inputs_hash: hash_inputs(fields),
                order_of_magnitude: false,
                no_kondo: false,
            });
        }
    }
    Err(MetrologyError::CrossoverNotBracketed("magnetization -1/4"))
}

/// Full-bath negativity from the magnetization, valid deep in the Kondo
/// regime `T << T_K` (the caller asserts the regime).
pub fn negativity_full_bath(m: f64) -> f64 {
    assert!(m.abs() <= 0.5 + 1e-12, "unphysical magnetization {m}");
    0.5 * (1.0 - 4.0 * m * m).max(0.0).sqrt()
}

/// Rescaled collapse table: rows `(T/T_K, Q T_K/B, curve_id)` per curve
/// and the pairwise sup-norm deviation over the shared `T/T_K` range.
#[derive(Clone, Debug)]
pub struct CollapseTable {
    pub rows: Vec<(f64, f64, String)>,
    pub max_deviation: f64,
    /// Curves outside the `B <= 0.1 T_K` regime, by id.
    pub regime_warnings: Vec<String>,
    pub overlap: (f64, f64),
}

/// Build the collapse table for `(curve, T_K, B, id)` inputs.
pub fn collapse_dataset(
    inputs: &[(&ThermoCurve, f64, f64, String)],
) -> Result<CollapseTable, MetrologyError> {
    if inputs.is_empty() {
        return Err(MetrologyError::TooFewPoints { need: 1, got: 0 });
    }
    let mut rows = Vec::new();
    let mut per_curve: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut warnings = Vec::new();
    for (curve, tk, b, id) in inputs {
        if *b > 0.1 * tk {
            warnings.push(id.clone());
        }
        let mut pts = Vec::new();
        for p in &curve.points {
            if let Some(q) = p.qsnr {
                let row = (p.t / tk, q * tk / b);
                rows.push((row.0, row.1, id.clone()));
                pts.push(row);
            }
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        per_curve.push(pts);
    }
    // overlap in T/T_K
    let lo = per_curve
        .iter()
        .map(|c| c.first().map(|p| p.0).unwrap_or(f64::INFINITY))
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = per_curve
        .iter()
        .map(|c| c.last().map(|p| p.0).unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(MetrologyError::EmptyOverlap);
    }
    let max_deviation = pairwise_deviation(&per_curve, lo, hi);
    Ok(CollapseTable {
        rows,
        max_deviation,
        regime_warnings: warnings,
        overlap: (lo, hi),
    })
}

/// Sup-norm deviation between curves on `[lo, hi]`, relative to the
/// overall curve scale there.
pub fn pairwise_deviation(per_curve: &[Vec<(f64, f64)>], lo: f64, hi: f64) -> f64 {
    let n_grid = 200;
    let mut scale = 0.0f64;
    let mut dev = 0.0f64;
    for k in 0..=n_grid {
        let x = (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / n_grid as f64).exp();
        let mut vals = Vec::new();
        for c in per_curve {
            if let Some(v) = log_interp(c, x) {
                vals.push(v);
                scale = scale.max(v.abs());
            }
        }
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                dev = dev.max((vals[i] - vals[j]).abs());
            }
        }
    }
    if scale > 0.0 {
        dev / scale
    } else {
        0.0
    }
}

fn log_interp(pts: &[(f64, f64)], x: f64) -> Option<f64> {
    if pts.len() < 2 || x < pts[0].0 || x > pts[pts.len() - 1].0 {
        return None;
    }
    let i = pts.partition_point(|p| p.0 < x).clamp(1, pts.len() - 1);
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    let f = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
    Some(y0 + f * (y1 - y0))
}
