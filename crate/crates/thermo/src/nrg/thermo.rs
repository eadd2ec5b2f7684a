//! Shell thermodynamics: observables from `Z_N` at the effective
//! temperature of each iteration.

use super::{NrgError, NrgRun, ShellSpectrum};
use crate::curve::{ThermoCurve, ThermoPoint};
use crate::numerics::interp::CubicSpline;

/// `(Z-normalized m, total entropy)` of one shell at inverse rescaled
/// temperature `x = scale / T`.
fn shell_average(shell: &ShellSpectrum, x: f64) -> (f64, f64) {
    let mut z = 0.0;
    let mut m = 0.0;
    let mut e = 0.0;
    for sec in &shell.sectors {
        for (i, &ev) in sec.evals.iter().enumerate() {
            let w = (-ev * x).exp();
            z += w;
            m += sec.sz_diag[i] * w;
            e += ev * w;
        }
    }
    let s = z.ln() + x * e / z;
    (m / z, s)
}

/// Relative magnetization jump between adjacent shells evaluated at the
/// same temperature; the threshold triggers the convergence warning.
const SHELL_MATCH_WARN: f64 = 0.05;

/// Per-shell thermodynamic curve: `T_N = scale_N / beta_bar` (plus an
/// interleaved second point per shell when enabled). With a reference
/// run, the impurity entropy is the difference of total entropies.
pub fn thermodynamics(
    run: &NrgRun,
    reference: Option<&NrgRun>,
    params_hash: &str,
) -> Result<ThermoCurve, NrgError> {
    if let Some(r) = reference {
        if r.shells.len() != run.shells.len() {
            return Err(NrgError::BadParams(
                "reference run length differs from impurity run".into(),
            ));
        }
    }
    let bb = run.params.beta_bar;
    let lambda = run.params.chain.lambda;
    let betas: Vec<f64> = if run.params.interleave {
        vec![bb, bb * lambda.powf(0.25)]
    } else {
        vec![bb]
    };
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (n, shell) in run.shells.iter().enumerate().skip(1) {
        for &beta in &betas {
            let t = shell.scale / beta;
            let (m, s_tot) = shell_average(shell, beta);
            let s_imp = reference.map(|r| s_tot - shell_average(&r.shells[n], beta).1);
            points.push(ThermoPoint {
                t,
                m,
                s_imp,
                ..Default::default()
            });
        }
        // continuity against the next shell at a shared temperature
        if n + 1 < run.shells.len() {
            let next = &run.shells[n + 1];
            let t_mid = next.scale / bb * (shell.scale / next.scale).sqrt();
            let (m_here, _) = shell_average(shell, shell.scale / t_mid);
            let (m_next, _) = shell_average(next, next.scale / t_mid);
            if (m_here - m_next).abs() > SHELL_MATCH_WARN * m_here.abs().max(0.02) {
                warnings.push(format!(
                    "shell {n}->{}: magnetization jump {:.2e} vs {:.2e}; consider larger n_keep",
                    n + 1,
                    m_here,
                    m_next
                ));
            }
        }
    }
    let mut curve =
        ThermoCurve::new(points, params_hash.to_string()).map_err(|e| {
            NrgError::BadParams(format!("thermodynamics produced an invalid curve: {e}"))
        })?;
    curve.provenance.notes = warnings;
    Ok(curve)
}

/// Exact finite-chain thermodynamics from the final shell's complete
/// spectrum; valid only for untruncated runs, where the last shell holds
/// the full Hamiltonian. Temperatures may be arbitrary.
pub fn exact_thermo(run: &NrgRun, ts: &[f64]) -> Result<Vec<(f64, f64, f64)>, NrgError> {
    if run.truncated {
        return Err(NrgError::BadParams(
            "exact_thermo requires an untruncated run".into(),
        ));
    }
    let shell = run.shells.last().expect("at least one shell");
    let out = ts
        .iter()
        .map(|&t| {
            let (m, s) = shell_average(shell, shell.scale / t);
            (t, m, s)
        })
        .collect();
    Ok(out)
}

/// Magnetization at requested temperatures by cubic interpolation of the
/// shell curve in `ln T`. Returns `(T, m, interpolation error estimate)`
/// per point; temperatures outside the reached shell range are an error.
pub fn magnetization_curve(
    run: &NrgRun,
    t_list: &[f64],
    params_hash: &str,
) -> Result<Vec<(f64, f64, f64)>, NrgError> {
    let base = thermodynamics(run, None, params_hash)?;
    let mut xs: Vec<f64> = base.points.iter().map(|p| p.t.ln()).collect();
    let mut ms: Vec<f64> = base.points.iter().map(|p| p.m).collect();
    xs.reverse();
    ms.reverse();
    let spline = CubicSpline::new(xs.clone(), ms.clone());
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let x = t.ln();
        if x < lo || x > hi {
            return Err(NrgError::TemperatureRange {
                t,
                lo: lo.exp(),
                hi: hi.exp(),
            });
        }
        let m = spline.eval(x);
        // error estimate: distance to the linear interpolant
        let i = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
        let f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        let linear = ms[i - 1] + f * (ms[i] - ms[i - 1]);
        out.push((t, m, (m - linear).abs()));
    }
    Ok(out)
}
