//! Local retarded bath Green's functions `G00(w)` and the hybridization
//! view `Delta(w) = w - 1/G00(w)`.
//!
//! The density of states fixes the imaginary part exactly,
//! `Im G = -pi rho(w)`; the real part is the principal-value Hilbert
//! transform of `rho`. Flat and nanowire bands have closed forms; the
//! remaining families go through a subtracted PV quadrature, cached on a
//! dense grid. Hard band edges with nonzero edge weight make `Re G`
//! diverge logarithmically there, so the log term is split off
//! analytically and only the smooth remainder is splined.

use num_complex::Complex64;

use crate::bath::dos::{DosFamily, DosSpec};
use crate::bath::BathError;
use crate::numerics::interp::CubicSpline;
use crate::numerics::quad;

/// Retarded `G00` sampled on a frequency grid.
#[derive(Clone, Debug)]
pub struct LocalGreensFunction {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Nominal broadening; the values themselves are the eta -> 0 limit.
    pub eta: f64,
    /// Set when the grid looks too coarse to resolve the DoS structure.
    pub coarse_warning: bool,
}

impl LocalGreensFunction {
    /// `-(1/pi) int Im G`, integrating the cubic interpolant of the
    /// sampled imaginary part; equals the captured spectral weight.
    pub fn spectral_weight(&self) -> f64 {
        let ys: Vec<f64> = self
            .values
            .iter()
            .map(|v| if v.im.is_finite() { -v.im } else { 0.0 })
            .collect();
        let spline = CubicSpline::new(self.grid.clone(), ys);
        spline.integrate() / std::f64::consts::PI
    }
}

/// Pointwise evaluator behind [`LocalGreensFunction`]: closed form where
/// one exists, splined PV transform otherwise.
#[derive(Clone, Debug)]
pub struct BathGreens {
    spec: DosSpec,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    ClosedFlat,
    ClosedNanowire,
    /// Idealized infinitely wide flat band at fixed `rho0`:
    /// `G = -i pi rho0` identically.
    WideFlat { rho0: f64 },
    /// `Re G = spline(w) + edge_weight * ln|(w+D)/(w-D)|` inside the
    /// cached range; direct quadrature outside it.
    Splined {
        rest: CubicSpline,
        edge_weight: f64,
        range: f64,
    },
}

impl BathGreens {
    pub fn for_spec(spec: &DosSpec) -> BathGreens {
        let kind = match spec.family {
            DosFamily::Flat => Kind::ClosedFlat,
            DosFamily::Nanowire => Kind::ClosedNanowire,
            _ => Self::build_spline(spec),
        };
        BathGreens {
            spec: spec.clone(),
            kind,
        }
    }

    /// The `D -> infinity` limit of a flat band taken at fixed `rho0`:
    /// the real part of `G` vanishes and `Delta(w) = w - i/(pi rho0)`
    /// with unit slope. Not normalizable, so it carries no `DosSpec`
    /// family of its own; it backs the wide-band shortcut.
    pub fn wide_flat(rho0: f64) -> BathGreens {
        assert!(rho0 > 0.0);
        BathGreens {
            spec: DosSpec::flat(1.0 / (2.0 * rho0)),
            kind: Kind::WideFlat { rho0 },
        }
    }

    /// Force the generic PV route even for closed-form families. Used to
    /// cross-check the Hilbert transform against the closed forms.
    pub fn for_spec_generic(spec: &DosSpec) -> BathGreens {
        BathGreens {
            spec: spec.clone(),
            kind: Self::build_spline(spec),
        }
    }

    fn build_spline(spec: &DosSpec) -> Kind {
        let edge_weight = spec.edge_value();
        let grid = default_frequency_grid(spec);
        let ys: Vec<f64> = grid
            .iter()
            .map(|&w| re_g_direct(spec, w) - edge_log(spec, edge_weight, w))
            .collect();
        Kind::Splined {
            rest: CubicSpline::new(grid.clone(), ys),
            edge_weight,
            range: grid.last().copied().unwrap_or(0.0),
        }
    }

    pub fn spec(&self) -> &DosSpec {
        &self.spec
    }

    /// Retarded `G00(w)` in the eta -> 0 limit.
    pub fn g(&self, w: f64) -> Complex64 {
        Complex64::new(self.re_g(w), -std::f64::consts::PI * self.rho(w))
    }

    pub fn rho(&self, w: f64) -> f64 {
        match &self.kind {
            Kind::WideFlat { rho0 } => *rho0,
            _ => self.spec.eval(w),
        }
    }

    pub fn re_g(&self, w: f64) -> f64 {
        let d = self.spec.halfwidth;
        match &self.kind {
            Kind::WideFlat { .. } => 0.0,
            Kind::ClosedFlat => {
                let rho0 = self.spec.rho0();
                if w.abs() == d {
                    // band edge: the log diverges; nudge inward
                    return self.re_g(w * (1.0 - 1e-15));
                }
                rho0 * ((w + d) / (w - d)).abs().ln()
            }
            Kind::ClosedNanowire => {
                let t = 0.5 * d;
                let x = w / (2.0 * t);
                if x.abs() <= 1.0 {
                    x / t
                } else {
                    (x - x.signum() * (x * x - 1.0).sqrt()) / t
                }
            }
            Kind::Splined {
                rest,
                edge_weight,
                range,
            } => {
                if w.abs() <= *range {
                    rest.eval(w) + edge_log(&self.spec, *edge_weight, w)
                } else {
                    re_g_direct(&self.spec, w)
                }
            }
        }
    }

    /// `dG/dw`; analytic for the closed forms, finite differences on the
    /// smooth remainder otherwise.
    pub fn dg(&self, w: f64) -> Complex64 {
        let d = self.spec.halfwidth;
        match &self.kind {
            Kind::WideFlat { .. } => Complex64::new(0.0, 0.0),
            Kind::ClosedFlat => {
                let rho0 = self.spec.rho0();
                // d/dw ln|(w+d)/(w-d)| = 1/(w+d) - 1/(w-d); Im' = 0 off the edges
                Complex64::new(rho0 * (1.0 / (w + d) - 1.0 / (w - d)), 0.0)
            }
            Kind::ClosedNanowire => {
                let t = 0.5 * d;
                let x = w / (2.0 * t);
                if x.abs() < 1.0 {
                    Complex64::new(1.0, x / (1.0 - x * x).sqrt()) / (2.0 * t * t)
                } else {
                    let s = x.signum();
                    Complex64::new(1.0 - s * x / (x * x - 1.0).sqrt(), 0.0) / (2.0 * t * t)
                }
            }
            Kind::Splined {
                rest,
                edge_weight,
                range,
            } => {
                let re = if w.abs() <= *range {
                    rest.deriv(w) + edge_weight * (1.0 / (w + d) - 1.0 / (w - d))
                } else {
                    let h = 1e-6 * d.max(w.abs());
                    (re_g_direct(&self.spec, w + h) - re_g_direct(&self.spec, w - h)) / (2.0 * h)
                };
                let h = 1e-7 * d;
                let im = -std::f64::consts::PI * (self.rho(w + h) - self.rho(w - h)) / (2.0 * h);
                Complex64::new(re, im)
            }
        }
    }
}

fn edge_log(spec: &DosSpec, edge_weight: f64, w: f64) -> f64 {
    if edge_weight == 0.0 {
        return 0.0;
    }
    let d = spec.halfwidth;
    if w.abs() == d {
        return 0.0; // the caller never lands exactly on the edge in practice
    }
    edge_weight * ((w + d) / (w - d)).abs().ln()
}

/// Principal-value Hilbert transform `Re G(w) = PV int rho(x)/(w-x) dx`,
/// with the log singularity at `x = w` subtracted analytically.
pub fn re_g_direct(spec: &DosSpec, w: f64) -> f64 {
    let big = spec.support_halfwidth();
    let d = spec.halfwidth;
    if w.abs() > big {
        // no singularity inside the support
        let mut breaks = vec![-big, 0.0, big];
        if d < big {
            breaks.extend_from_slice(&[-d, d]);
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        return quad::integrate_with_breaks(&breaks, &mut |x| spec.eval(x) / (w - x));
    }
    let rho_w = spec.eval(w);
    let mut breaks = vec![-big, 0.0, w, big];
    if d < big {
        breaks.extend_from_slice(&[-d, d]);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    let smooth = quad::integrate_with_breaks(&breaks, &mut |x| {
        if x == w {
            return 0.0;
        }
        (spec.eval(x) - rho_w) / (w - x)
    });
    smooth + rho_w * ((big + w) / (big - w)).ln()
}

/// Default log-linear hybrid grid: dense toward 0 and both band edges,
/// linear tails out to `5 D` (or the support edge if larger), about 4000
/// points in total.
pub fn default_frequency_grid(spec: &DosSpec) -> Vec<f64> {
    let d = spec.halfwidth;
    let outer = (5.0 * d).max(spec.support_halfwidth() * 1.2);
    let mut half: Vec<f64> = Vec::with_capacity(2100);
    // log sweep 1e-9 D .. 0.55 D
    let n_log = 700;
    for i in 0..n_log {
        let f = i as f64 / (n_log - 1) as f64;
        half.push(d * 1e-9 * (0.55e9_f64).powf(f));
    }
    // approach the band edge geometrically from below and above
    let n_edge = 500;
    for i in 0..n_edge {
        let f = i as f64 / (n_edge - 1) as f64;
        let dist = d * 0.45 * (1e-9_f64 / 0.45).powf(f);
        half.push(d - dist);
        if d + dist < outer {
            half.push(d + dist);
        }
    }
    // linear tail
    let n_lin = 280;
    for i in 1..=n_lin {
        half.push(d * 1.1 + (outer - d * 1.1) * i as f64 / n_lin as f64);
    }
    half.sort_by(|a, b| a.partial_cmp(b).unwrap());
    half.dedup();
    let mut grid: Vec<f64> = half.iter().rev().map(|&x| -x).collect();
    grid.extend(half);
    grid
}

/// Sample the retarded Green's function for `spec` on `grid`.
///
/// The grid must span at least `[-5D, 5D]`. `eta > 0` is recorded as the
/// nominal regulator; values are computed in the analytic eta -> 0 limit.
pub fn greens_from_dos(
    spec: &DosSpec,
    grid: &[f64],
    eta: f64,
) -> Result<LocalGreensFunction, BathError> {
    if !(eta > 0.0) {
        return Err(BathError::InvalidSpec(format!(
            "broadening eta must be positive, got {eta}"
        )));
    }
    let d = spec.halfwidth;
    if grid.len() < 2 || grid[0] > -5.0 * d || grid[grid.len() - 1] < 5.0 * d {
        return Err(BathError::GridTooNarrow {
            lo: grid.first().copied().unwrap_or(f64::NAN),
            hi: grid.last().copied().unwrap_or(f64::NAN),
            need: 5.0 * d,
        });
    }
    if grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(BathError::InvalidSpec(
            "frequency grid must be strictly increasing".into(),
        ));
    }
    let eval = BathGreens::for_spec(spec);
    let values: Vec<Complex64> = grid.iter().map(|&w| eval.g(w)).collect();
    // coarse-grid heuristic: a well-resolved grid changes rho only
    // gradually between neighbours inside the band
    let rho0 = spec.rho0();
    let mut coarse = false;
    for i in 1..grid.len() {
        let r0 = -values[i - 1].im / std::f64::consts::PI;
        let r1 = -values[i].im / std::f64::consts::PI;
        if !r0.is_finite() || !r1.is_finite() {
            coarse = true; // the grid landed on a divergence
            break;
        }
        // only judge resolution where there is substantial weight; the
        // vanishing tails always show large relative steps
        if r0.min(r1) > 0.05 * rho0 {
            let jump = (r1 - r0).abs();
            if jump > 0.125 * (r0 + r1) && grid[i] - grid[i - 1] > 1e-6 * d {
                coarse = true;
                break;
            }
        }
    }
    Ok(LocalGreensFunction {
        grid: grid.to_vec(),
        values,
        eta,
        coarse_warning: coarse,
    })
}

/// Hybridization `Delta = w - 1/G` and its frequency derivative on the
/// grid of `g`, by centered finite differences (one-sided at the ends).
pub fn hybridization(
    g: &LocalGreensFunction,
) -> Result<(Vec<Complex64>, Vec<Complex64>), BathError> {
    let n = g.grid.len();
    let mut delta = Vec::with_capacity(n);
    for i in 0..n {
        let gv = g.values[i];
        if gv.norm() < 1e-12 {
            return Err(BathError::SingularInversion { w: g.grid[i] });
        }
        delta.push(Complex64::new(g.grid[i], 0.0) - 1.0 / gv);
    }
    let mut ddelta = Vec::with_capacity(n);
    for i in 0..n {
        let (i0, i1) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        ddelta.push((delta[i1] - delta[i0]) / (g.grid[i1] - g.grid[i0]));
    }
    Ok((delta, ddelta))
}

/// Analytic-route hybridization derivative: `1 - dDelta/dw = d(1/G)/dw
/// = -G'/G^2`, evaluated pointwise from the evaluator.
pub fn one_minus_ddelta(bg: &BathGreens, w: f64) -> Complex64 {
    let g = bg.g(w);
    -bg.dg(w) / (g * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::dos::DosSpec;

    #[test]
    fn flat_band_center_value() {
        let bg = BathGreens::for_spec(&DosSpec::flat(1.0));
        let g0 = bg.g(0.0);
        assert!(g0.re.abs() < 1e-14);
        assert!((g0.im + std::f64::consts::PI * 0.5).abs() < 1e-14);
    }

    #[test]
    fn nanowire_closed_form_anchors() {
        // t G(0) = -i and t G(2t) = 1 with D = 2t
        let d = 1.0;
        let t = 0.5 * d;
        let bg = BathGreens::for_spec(&DosSpec::nanowire(d));
        let g0 = bg.g(0.0) * t;
        assert!((g0 - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        let ge = bg.g(2.0 * t) * t;
        assert!((ge - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hilbert_transform_matches_nanowire_closed_form() {
        let d = 1.0;
        let spec = DosSpec::nanowire(d);
        let closed = BathGreens::for_spec(&spec);
        let generic = BathGreens::for_spec_generic(&spec);
        for i in 0..45 {
            let w = -0.9 * d + 1.8 * d * i as f64 / 44.0;
            let a = closed.g(w);
            let b = generic.g(w);
            assert!(
                (a - b).norm() < 1e-6,
                "w={w}: closed {a} vs generic {b}"
            );
        }
    }

    #[test]
    fn hilbert_transform_matches_flat_closed_form() {
        let spec = DosSpec::flat(1.0);
        let closed = BathGreens::for_spec(&spec);
        let generic = BathGreens::for_spec_generic(&spec);
        for &w in &[-0.95, -0.4, 0.01, 0.3, 0.77, 1.5, 3.0] {
            assert!(
                (closed.g(w) - generic.g(w)).norm() < 1e-6,
                "w={w}"
            );
        }
    }

    #[test]
    fn sampled_greens_normalization_and_sign() {
        for spec in [
            DosSpec::flat(1.0),
            DosSpec::nanowire(1.0),
            DosSpec::gaussian(1.0),
            DosSpec::graphene(1.0),
            DosSpec::tbg(1.0),
        ] {
            let grid = default_frequency_grid(&spec);
            let g = greens_from_dos(&spec, &grid, 1e-6).unwrap();
            assert!(g.values.iter().all(|v| v.im <= 0.0), "{spec}");
            let weight = g.spectral_weight();
            assert!(
                (weight - 1.0).abs() < 1e-6,
                "{spec}: spectral weight {weight}"
            );
            assert!(!g.coarse_warning, "{spec} flagged coarse on default grid");
        }
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let spec = DosSpec::tbg(1.0);
        let grid: Vec<f64> = (0..201).map(|i| -6.0 + 12.0 * i as f64 / 200.0).collect();
        let g = greens_from_dos(&spec, &grid, 1e-6).unwrap();
        assert!(g.coarse_warning);
    }

    #[test]
    fn narrow_grid_rejected() {
        let spec = DosSpec::flat(1.0);
        let grid: Vec<f64> = (0..100).map(|i| -2.0 + 4.0 * i as f64 / 99.0).collect();
        assert!(matches!(
            greens_from_dos(&spec, &grid, 1e-6),
            Err(BathError::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn wide_flat_band_hybridization() {
        // Delta(w) = w - i/(pi rho0), dDelta/dw = 1 for the idealized
        // infinitely wide flat band
        let rho0 = 0.37;
        let bg = BathGreens::wide_flat(rho0);
        for &w in &[0.0, 0.5, -1.3] {
            let g = bg.g(w);
            let delta = Complex64::new(w, 0.0) - 1.0 / g;
            let expect = Complex64::new(w, -1.0 / (std::f64::consts::PI * rho0));
            assert!((delta - expect).norm() < 1e-14);
            assert!(one_minus_ddelta(&bg, w).norm() < 1e-14);
        }
    }

    #[test]
    fn finite_flat_band_approaches_wide_limit() {
        // as D grows with the DoS kept normalized, Delta approaches the
        // wide-band form on the scale of its dominant imaginary part
        let mut last = f64::INFINITY;
        for d in [1e2, 1e4, 1e6] {
            let spec = DosSpec::flat(d);
            let bg = BathGreens::for_spec(&spec);
            let rho0 = spec.rho0();
            let w = 0.5;
            let delta = Complex64::new(w, 0.0) - 1.0 / bg.g(w);
            let expect = Complex64::new(w, -1.0 / (std::f64::consts::PI * rho0));
            let rel = (delta - expect).norm() * std::f64::consts::PI * rho0;
            assert!(rel < last, "deviation not shrinking at D={d}");
            last = rel;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn hybridization_round_trip() {
        let spec = DosSpec::nanowire(1.0);
        let grid = default_frequency_grid(&spec);
        let g = greens_from_dos(&spec, &grid, 1e-6).unwrap();
        let (delta, _) = hybridization(&g).unwrap();
        for (i, &w) in g.grid.iter().enumerate() {
            let back = 1.0 / (Complex64::new(w, 0.0) - delta[i]);
            assert!(
                (back - g.values[i]).norm() <= 1e-10 * (1.0 + g.values[i].norm()),
                "w={w}"
            );
        }
    }
}
