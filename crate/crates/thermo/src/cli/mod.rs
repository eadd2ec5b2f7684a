//! Batch front end: sweep configs, run cache, figure-data emission.
//!
//! Sweep points are independent and dispatched to a bounded worker pool;
//! every artifact write is atomic, and identical configurations produce
//! byte-identical CSV output (the cache stores exactly those bytes).

pub mod cache;
pub mod config;
pub mod runner;

use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

use crate::bath::{default_frequency_grid, greens_from_dos};
use crate::curve::ThermoCurve;
use crate::metrology::{self, TkEstimate};
use config::{CachePolicy, CurveRecord, Manifest, Model, PointFailure, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Bath(#[from] crate::bath::BathError),
    #[error(transparent)]
    Ising(#[from] crate::ising_exact::IsingError),
    #[error(transparent)]
    MeanField(#[from] crate::meanfield::MfError),
    #[error(transparent)]
    Nbl(#[from] crate::nbl::NblError),
    #[error(transparent)]
    Nrg(#[from] crate::nrg::NrgError),
    #[error(transparent)]
    Metrology(#[from] crate::metrology::MetrologyError),
    #[error(transparent)]
    Curve(#[from] crate::curve::CurveError),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub struct SweepOutcome {
    pub manifest: Manifest,
    pub manifest_path: std::path::PathBuf,
}

/// Run every `(model, B)` point of the config, honoring the cache, and
/// write one curve CSV per point plus a JSON manifest. Per-point solver
/// failures are recorded and the sweep continues.
pub fn cmd_sweep(config_path: &Path) -> Result<SweepOutcome, CliError> {
    let config = RunConfig::from_path(config_path)?;
    let hash = config.canonical_hash();
    let out_dir = config.output_dir.clone();
    std::fs::create_dir_all(out_dir.join("curves"))
        .map_err(|e| CliError::Io(format!("create {}: {e}", out_dir.display())))?;

    if let Some(threads) = config.solver.threads.filter(|&t| t > 0) {
        // a bounded pool for this process; ignore failure if one exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    struct PointOutcome {
        b: f64,
        result: Result<(String, Vec<String>, bool), String>,
    }

    let outcomes: Vec<PointOutcome> = config
        .couplings
        .fields
        .par_iter()
        .map(|&b| {
            let key = config.point_key(b);
            if let Some(csv) = cache::lookup(&config, &key) {
                return PointOutcome {
                    b,
                    result: Ok((csv, Vec::new(), true)),
                };
            }
            match runner::run_point(&config, b) {
                Ok((curve, warnings)) => {
                    let csv = curve.to_csv();
                    PointOutcome {
                        b,
                        result: Ok((csv, warnings, false)),
                    }
                }
                Err(e) => PointOutcome {
                    b,
                    result: Err(e.to_string()),
                },
            }
        })
        .collect();

    let mut curves = Vec::new();
    let mut failures = Vec::new();
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        let started = std::time::Instant::now();
        match outcome.result {
            Ok((csv, warnings, cache_hit)) => {
                let key = config.point_key(outcome.b);
                let rel = format!("curves/{key}.csv");
                cache::atomic_write(&out_dir.join(&rel), &csv)?;
                if !cache_hit && config.cache != CachePolicy::Off {
                    cache::store(&config, &key, &csv)?;
                }
                curves.push(CurveRecord {
                    b: outcome.b,
                    path: rel,
                    wall_ms: started.elapsed().as_millis(),
                    cache_hit,
                    warnings,
                });
                let _ = idx;
            }
            Err(error) => failures.push(PointFailure {
                b: outcome.b,
                error,
            }),
        }
    }

    let base = config_path.parent().unwrap_or(Path::new("."));
    let dos = config.dos.build(base)?;
    let mut approximations = Vec::new();
    if matches!(dos.family, crate::bath::DosFamily::Graphene) {
        approximations
            .push("graphene: linear pseudogap replaces the lattice DoS".to_string());
    }
    let manifest = Manifest {
        schema: 1,
        config_hash: hash,
        toolkit_version: config::TOOLKIT_VERSION.to_string(),
        model: config.model,
        dos: dos.identifier(),
        approximations,
        coupling: config.coupling(),
        curves,
        failures,
    };
    let manifest_path = out_dir.join("manifest.json");
    let payload = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(format!("manifest: {e}")))?;
    cache::atomic_write(&manifest_path, &payload)?;
    Ok(SweepOutcome {
        manifest,
        manifest_path,
    })
}

fn load_manifest(path: &Path) -> Result<(Manifest, Vec<(f64, ThermoCurve)>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut curves = Vec::new();
    for record in &manifest.curves {
        let csv = std::fs::read_to_string(base.join(&record.path))
            .map_err(|e| CliError::Io(format!("{}: {e}", record.path)))?;
        curves.push((record.b, ThermoCurve::from_csv(&csv)?));
    }
    Ok((manifest, curves))
}

/// Kondo-scale source for the collapse command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TkChoice {
    Perturbative,
    Entropy,
    MagnetizationQuarter,
}

impl std::str::FromStr for TkChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<TkChoice, String> {
        match s {
            "perturbative" => Ok(TkChoice::Perturbative),
            "entropy" => Ok(TkChoice::Entropy),
            "magq" => Ok(TkChoice::MagnetizationQuarter),
            other => Err(format!(
                "unknown tk method '{other}' (perturbative|entropy|magq)"
            )),
        }
    }
}

fn estimate_tk(
    choice: TkChoice,
    manifest: &Manifest,
    curves: &[(f64, ThermoCurve)],
    base: &Path,
) -> Result<TkEstimate, CliError> {
    match choice {
        TkChoice::Perturbative => {
            let dos = dos_from_identifier(&manifest.dos, base)?;
            let j = manifest
                .coupling
                .ok_or_else(|| CliError::Config("manifest lacks a coupling".into()))?;
            Ok(metrology::tk_perturbative(&dos, j)?)
        }
        TkChoice::Entropy => {
            let zero = curves
                .iter()
                .find(|(b, _)| *b == 0.0)
                .ok_or_else(|| CliError::Config("entropy method needs a B = 0 curve".into()))?;
            Ok(metrology::tk_operational_entropy(&zero.1)?)
        }
        TkChoice::MagnetizationQuarter => {
            let mut fields = Vec::new();
            let mut m_low = Vec::new();
            for (b, curve) in curves {
                if *b > 0.0 {
                    if let Some(p) = curve.points.last() {
                        fields.push(*b);
                        m_low.push(p.m);
                    }
                }
            }
            Ok(metrology::tk_operational_magnetization(&fields, &m_low)?)
        }
    }
}

fn dos_from_identifier(id: &str, _base: &Path) -> Result<crate::bath::DosSpec, CliError> {
    let (family, rest) = id
        .split_once("(D=")
        .ok_or_else(|| CliError::Config(format!("unparseable dos id '{id}'")))?;
    let d: f64 = rest
        .trim_end_matches(')')
        .split(',')
        .next()
        .unwrap_or("1")
        .parse()
        .map_err(|e| CliError::Config(format!("dos id '{id}': {e}")))?;
    Ok(match family {
        "flat" => crate::bath::DosSpec::flat(d),
        "nanowire" => crate::bath::DosSpec::nanowire(d),
        "gaussian" => crate::bath::DosSpec::gaussian(d),
        "graphene" => crate::bath::DosSpec::graphene(d),
        "tbg" => crate::bath::DosSpec::tbg(d),
        other => {
            return Err(CliError::Config(format!(
                "collapse on tabulated/unknown family '{other}' needs perturbative-free methods"
            )))
        }
    })
}

pub struct CollapseOutcome {
    pub csv: String,
    pub max_deviation: f64,
    pub tk_values: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

/// Rescale curves from one or more manifests to `(T/T_K, Q T_K/B)` and
/// compute the pairwise deviation statistic.
pub fn cmd_collapse(
    manifest_paths: &[std::path::PathBuf],
    choice: TkChoice,
    allow_mixed: bool,
) -> Result<CollapseOutcome, CliError> {
    if manifest_paths.is_empty() {
        return Err(CliError::Config("no manifests given".into()));
    }
    let mut all = Vec::new();
    let mut family_ids = Vec::new();
    let mut tk_values = Vec::new();
    let mut warnings = Vec::new();
    for path in manifest_paths {
        let (manifest, curves) = load_manifest(path)?;
        family_ids.push(
            manifest
                .dos
                .split('(')
                .next()
                .unwrap_or("unknown")
                .to_string(),
        );
        let base = path.parent().unwrap_or(Path::new("."));
        let tk = estimate_tk(choice, &manifest, &curves, base)?;
        tk_values.push((manifest.dos.clone(), tk.value));
        for (b, curve) in curves {
            if b <= 0.0 {
                continue;
            }
            let id = format!(
                "{}:J={}:B={b:e}",
                family_ids.last().unwrap(),
                manifest.coupling.unwrap_or(0.0)
            );
            all.push((curve, tk.value, b, id));
        }
    }
    if !allow_mixed {
        let first = &family_ids[0];
        if family_ids.iter().any(|f| f != first) {
            return Err(CliError::Config(format!(
                "manifests mix DoS families {family_ids:?}; pass --allow-mixed to proceed"
            )));
        }
    }
    let refs: Vec<(&ThermoCurve, f64, f64, String)> = all
        .iter()
        .map(|(c, tk, b, id)| (c, *tk, *b, id.clone()))
        .collect();
    let table = metrology::collapse_dataset(&refs)?;
    for id in &table.regime_warnings {
        warnings.push(format!("{id}: outside the B <= 0.1 T_K regime"));
    }
    let mut csv = String::from("# schema=1\nt_over_tk,q_rescaled,curve_id\n");
    for (x, q, id) in &table.rows {
        csv.push_str(&format!("{x},{q},{id}\n"));
    }
    Ok(CollapseOutcome {
        csv,
        max_deviation: table.max_deviation,
        tk_values,
        warnings,
    })
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub manifest: String,
    pub model: Model,
    pub curves: Vec<CurveReport>,
    pub tk_entropy: Option<f64>,
    pub checks: Vec<Check>,
    pub missing: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct CurveReport {
    pub b: f64,
    pub t_max: Option<f64>,
    pub q_max: Option<f64>,
    pub boundary_peak: bool,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Summarize a manifest: peaks, Kondo-scale estimates and quick
/// acceptance-style booleans. Missing artifacts are listed and the rest
/// of the report still comes out.
pub fn cmd_report(manifest_path: &Path) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut curve_reports = Vec::new();
    let mut missing = Vec::new();
    let mut curves = Vec::new();
    for record in &manifest.curves {
        match std::fs::read_to_string(base.join(&record.path)) {
            Ok(csv) => curves.push((record.b, ThermoCurve::from_csv(&csv)?)),
            Err(_) => missing.push(record.path.clone()),
        }
    }
    for (b, curve) in &curves {
        match metrology::peak_summary(curve) {
            Ok(peak) => curve_reports.push(CurveReport {
                b: *b,
                t_max: Some(peak.t_max),
                q_max: Some(peak.q_max),
                boundary_peak: false,
            }),
            Err(metrology::MetrologyError::BoundaryMaximum) => curve_reports.push(CurveReport {
                b: *b,
                t_max: None,
                q_max: None,
                boundary_peak: true,
            }),
            Err(_) => curve_reports.push(CurveReport {
                b: *b,
                t_max: None,
                q_max: None,
                boundary_peak: false,
            }),
        }
    }

    let tk_entropy = curves
        .iter()
        .find(|(b, _)| *b == 0.0)
        .and_then(|(_, c)| metrology::tk_operational_entropy(c).ok())
        .map(|e| e.value);

    let mut checks = Vec::new();
    match manifest.model {
        Model::FreeSpin | Model::Ising | Model::MeanField => {
            // every interior peak must sit at the free-spin point
            let mut ok = true;
            let mut detail = String::new();
            for r in &curve_reports {
                if let (Some(t_max), Some(q_max)) = (r.t_max, r.q_max) {
                    let dq = (q_max - metrology::FREE_SPIN_PEAK_Q).abs();
                    let dx = (r.b / t_max - metrology::FREE_SPIN_PEAK_X).abs();
                    if dq > 1e-3 * 2.0 || dx > 0.05 {
                        ok = false;
                        detail = format!("B={:e}: Q_max={q_max:.4}, B/T_max={:.3}", r.b, r.b / t_max);
                    }
                }
            }
            checks.push(Check {
                name: "free-spin peak values".into(),
                pass: ok,
                detail,
            });
        }
        Model::Nbl => {
            // negativity step at B = J within 2 percent, read from the
            // lowest-temperature samples across the field sweep
            let j = manifest.coupling.unwrap_or(f64::NAN);
            let mut fields = Vec::new();
            let mut negs = Vec::new();
            for (b, curve) in &curves {
                if let Some(p) = curve.points.last() {
                    if let Some(n) = p.neg_local {
                        fields.push(*b);
                        negs.push(n);
                    }
                }
            }
            let mut step = None;
            for i in 0..fields.len().saturating_sub(1) {
                if (negs[i] - 0.25) * (negs[i + 1] - 0.25) <= 0.0 && negs[i] != negs[i + 1] {
                    let f = (0.25 - negs[i]) / (negs[i + 1] - negs[i]);
                    step = Some(fields[i] + f * (fields[i + 1] - fields[i]));
                    break;
                }
            }
            let pass = step.map(|b| ((b - j) / j).abs() < 0.02).unwrap_or(false);
            checks.push(Check {
                name: "negativity step at B = J".into(),
                pass,
                detail: format!("step at {step:?}, J = {j}"),
            });
        }
        Model::Nrg => {
            if let Some(tk) = tk_entropy {
                checks.push(Check {
                    name: "entropy crossover bracketed".into(),
                    pass: tk > 0.0,
                    detail: format!("T_K = {tk:e}"),
                });
            }
        }
    }
    Ok(Report {
        manifest: manifest_path.display().to_string(),
        model: manifest.model,
        curves: curve_reports,
        tk_entropy,
        checks,
        missing,
    })
}

/// Emit the density of states and local Green's function on the default
/// grid as CSV.
pub fn cmd_dos_grid(dos: &crate::bath::DosSpec) -> Result<String, CliError> {
    let grid = default_frequency_grid(dos);
    let g = greens_from_dos(dos, &grid, 1e-6)?;
    let mut out = String::from("# schema=1\n");
    out.push_str(&format!("# dos={}\n", dos.identifier()));
    if g.coarse_warning {
        out.push_str("# warning=coarse_grid\n");
    }
    out.push_str("w,rho,re_g,im_g\n");
    for (i, &w) in g.grid.iter().enumerate() {
        out.push_str(&format!(
            "{w},{},{},{}\n",
            -g.values[i].im / std::f64::consts::PI,
            g.values[i].re,
            g.values[i].im
        ));
    }
    Ok(out)
}
