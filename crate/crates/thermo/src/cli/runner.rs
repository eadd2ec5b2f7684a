//! Model execution: one `(model, B)` point in, one curve out.

use crate::bath::{discretize_log, wilson_chain, ChainPrecision, DosSpec, WilsonChain};
use crate::cli::config::{Model, RunConfig};
use crate::cli::CliError;
use crate::curve::{ThermoCurve, ThermoPoint};
use crate::ising_exact::{self, IsingParams};
use crate::meanfield;
use crate::metrology::{self, Smoothing};
use crate::nbl::{self, NblParams};
use crate::nrg::{self, NrgParams};

/// Chain hoppings decay like `Lambda^{-n/2}`; pick the length so the
/// deepest shell temperature undercuts the target by two decades.
fn required_shells(lambda: f64, beta_bar: f64, target_t: f64) -> usize {
    let mut n = 1usize;
    let mut scale = 1.0;
    while scale / beta_bar > 0.01 * target_t && n < 120 {
        scale /= lambda.sqrt();
        n += 1;
    }
    n
}

pub fn build_chain(
    dos: &DosSpec,
    lambda: f64,
    n_sites: usize,
) -> Result<WilsonChain, CliError> {
    let n_disc = (n_sites / 2 + 8).max(24);
    let disc = discretize_log(dos, lambda, n_disc)?;
    let chain = wilson_chain(&disc, n_sites.min(disc.poles.len()), ChainPrecision::Wide)?;
    Ok(chain)
}

fn smoothing_of(config: &RunConfig) -> Smoothing {
    match config.solver.smoothing.as_deref() {
        Some("auto") => Smoothing::Auto,
        _ => Smoothing::Never,
    }
}

/// Execute one sweep point. Returns the finished curve (derivative and
/// sensitivity columns filled) plus any solver warnings.
pub fn run_point(config: &RunConfig, b: f64) -> Result<(ThermoCurve, Vec<String>), CliError> {
    let base = config
        .output_dir
        .parent()
        .unwrap_or(std::path::Path::new("."));
    let dos = config.dos.build(base)?;
    let hash = config.point_key(b);
    let mut warnings = Vec::new();

    let mut curve = match config.model {
        Model::FreeSpin => {
            let points = config
                .temperature_grid()
                .into_iter()
                .map(|t| ThermoPoint {
                    t,
                    m: metrology::free_spin_magnetization(b, t),
                    ..Default::default()
                })
                .collect();
            ThermoCurve::new(points, hash)?
        }
        Model::Ising => {
            let jz = config.coupling().unwrap_or(0.0);
            let mut points = Vec::new();
            for t in config.temperature_grid() {
                let p = IsingParams::symmetric_field(jz, b, t, dos.clone());
                let m = ising_exact::magnetization(&p)?;
                points.push(ThermoPoint {
                    t,
                    m: m.value,
                    ..Default::default()
                });
            }
            ThermoCurve::new(points, hash)?
        }
        Model::MeanField => {
            let jz = config.coupling().unwrap_or(0.0);
            let tol = config.solver.tolerance.unwrap_or(1e-10);
            let mut points = Vec::new();
            for t in config.temperature_grid() {
                let p = IsingParams::symmetric_field(jz, b, t, dos.clone());
                let state = meanfield::solve_self_consistent(&p, tol, 500)?;
                if state.multiple_fixed_points {
                    warnings.push(format!("T={t:e}: multiple mean-field fixed points"));
                }
                points.push(ThermoPoint {
                    t,
                    m: state.m_imp,
                    ..Default::default()
                });
            }
            ThermoCurve::new(points, hash)?
        }
        Model::Nbl => {
            let j = config.coupling().unwrap_or(0.0);
            let mut points = Vec::new();
            for t in config.temperature_grid() {
                let p = NblParams {
                    j,
                    b,
                    temperature: t,
                };
                let (entropy, _) = nbl::nbl_entropy_and_maxwell(&p)?;
                points.push(ThermoPoint {
                    t,
                    m: nbl::nbl_magnetization(&p)?,
                    s_imp: Some(entropy),
                    dm_dt: Some(nbl::nbl_dm_dt(&p)?),
                    neg_local: Some(nbl::nbl_negativity(&p)?),
                    ..Default::default()
                });
            }
            ThermoCurve::new(points, hash)?
        }
        Model::Nrg => {
            let j = config.coupling().unwrap_or(0.0);
            let lambda = config.solver.lambda.unwrap_or(2.5);
            let paper = config.solver.preset.as_deref() == Some("paper");
            let lambda = if paper { 2.0 } else { lambda };
            // deepest scale needed: the floor of the requested grid, or
            // two decades under min(B, T_K) when that is lower
            let tk_guess = metrology::tk_perturbative(&dos, j)
                .map(|e| e.value)
                .unwrap_or(0.0);
            let mut target = config.temperature.min;
            let phys = [b, tk_guess]
                .iter()
                .copied()
                .filter(|v| *v > 0.0)
                .fold(f64::INFINITY, f64::min);
            if phys.is_finite() {
                target = target.min(phys);
            }
            let beta_bar = config.solver.beta_bar.unwrap_or(0.7);
            let shells = config
                .solver
                .n_chain
                .unwrap_or_else(|| required_shells(lambda, beta_bar, target));
            let chain = build_chain(&dos, lambda, shells + 1)?;
            let mut params = NrgParams::new(j, b, chain);
            params.beta_bar = beta_bar;
            params.n_keep = config
                .solver
                .n_keep
                .unwrap_or(if paper { 3000 } else { 600 });
            params.track_rdm = config.solver.track_rdm;
            if let Some(i) = config.solver.interleave {
                params.interleave = i;
            }
            let run = nrg::solve(&params)?;
            let reference = nrg::solve_reference(&params)?;
            let mut curve = nrg::thermodynamics(&run, Some(&reference), &hash)?;
            warnings.extend(curve.provenance.notes.drain(..));
            if params.track_rdm {
                for p in curve.points.iter_mut() {
                    if let Ok(neg) = nrg::rdm_negativity_local(&run, p.t) {
                        p.neg_local = Some(neg);
                    }
                }
            }
            // clip to the requested window
            curve
                .points
                .retain(|p| p.t >= config.temperature.min && p.t <= config.temperature.max);
            if curve.points.len() < 5 {
                return Err(CliError::Config(format!(
                    "temperature window [{:e}, {:e}] keeps fewer than 5 shell points",
                    config.temperature.min, config.temperature.max
                )));
            }
            curve
        }
    };

    // derivative and sensitivity pipeline
    let analytic = matches!(config.model, Model::FreeSpin | Model::Nbl);
    if analytic {
        // NBL carries analytic derivatives already; the free spin gets the
        // standard stencil without smoothing
        if matches!(config.model, Model::FreeSpin) {
            curve = metrology::temperature_derivative(&curve, Smoothing::Never)?;
        }
    } else {
        curve = metrology::temperature_derivative(&curve, smoothing_of(config))?;
    }
    metrology::fill_sensitivity(&mut curve);
    if dos == DosSpec::graphene(dos.halfwidth) {
        warnings.push("graphene family: linear pseudogap stands in for the lattice DoS".into());
    }
    Ok((curve, warnings))
}
