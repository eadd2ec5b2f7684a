//! Per-temperature result records shared by every solver.

use serde::{Deserialize, Serialize};

/// One `(T, observables)` record. Optional fields stay empty when the
/// producing solver does not compute them.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ThermoPoint {
    pub t: f64,
    /// Impurity magnetization `<S_I^z>`.
    pub m: f64,
    /// Impurity entropy (total minus free-chain reference).
    pub s_imp: Option<f64>,
    pub dm_dt: Option<f64>,
    pub qfi: Option<f64>,
    pub qsnr: Option<f64>,
    /// Negativity between the impurity and the local bath orbital.
    pub neg_local: Option<f64>,
}

/// A magnetization/sensitivity curve at fixed couplings and field.
/// Temperatures are strictly decreasing down the sequence.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ThermoCurve {
    pub points: Vec<ThermoPoint>,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Provenance {
    /// Canonical hash of the producing parameters.
    pub params_hash: String,
    /// Whether derivative smoothing was applied downstream.
    pub smoothed: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("curve temperatures must be strictly decreasing (violated at index {0})")]
    NonMonotone(usize),
    #[error("magnetization out of [-1/2, 1/2] at index {0}")]
    UnphysicalMagnetization(usize),
    #[error("negative QFI at index {0}")]
    NegativeQfi(usize),
    #[error("csv parse error on line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

impl ThermoCurve {
    pub fn new(points: Vec<ThermoPoint>, params_hash: String) -> Result<ThermoCurve, CurveError> {
        let curve = ThermoCurve {
            points,
            provenance: Provenance {
                params_hash,
                smoothed: false,
                notes: Vec::new(),
            },
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        for (i, pair) in self.points.windows(2).enumerate() {
            if pair[1].t >= pair[0].t {
                return Err(CurveError::NonMonotone(i + 1));
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.m.abs() > 0.5 + 1e-12 {
                return Err(CurveError::UnphysicalMagnetization(i));
            }
            if let Some(q) = p.qfi {
                if q < 0.0 {
                    return Err(CurveError::NegativeQfi(i));
                }
            }
        }
        Ok(())
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn magnetizations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.m).collect()
    }

    /// Serialize as CSV with the fixed column schema. Floats are printed
    /// with Rust's shortest round-trip formatting, so identical data gives
    /// byte-identical output.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema=1\n");
        out.push_str("T,m_imp,s_imp,dm_dT,qfi,qsnr,neg_local\n");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.t,
                p.m,
                fmt(p.s_imp),
                fmt(p.dm_dt),
                fmt(p.qfi),
                fmt(p.qsnr),
                fmt(p.neg_local)
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ThermoCurve, CurveError> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.starts_with('T') || line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 7 {
                return Err(CurveError::Csv {
                    line: lineno + 1,
                    msg: format!("expected 7 columns, got {}", cells.len()),
                });
            }
            let req = |i: usize| -> Result<f64, CurveError> {
                cells[i].parse().map_err(|e| CurveError::Csv {
                    line: lineno + 1,
                    msg: format!("column {i}: {e}"),
                })
            };
            let opt = |i: usize| -> Result<Option<f64>, CurveError> {
                if cells[i].is_empty() {
                    Ok(None)
                } else {
                    req(i).map(Some)
                }
            };
            points.push(ThermoPoint {
                t: req(0)?,
                m: req(1)?,
                s_imp: opt(2)?,
                dm_dt: opt(3)?,
                qfi: opt(4)?,
                qsnr: opt(5)?,
                neg_local: opt(6)?,
            });
        }
        Ok(ThermoCurve {
            points,
            provenance: Provenance::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let points = vec![
            ThermoPoint {
                t: 1.0,
                m: -0.25,
                s_imp: Some(0.693),
                dm_dt: None,
                qfi: Some(0.01),
                qsnr: Some(0.1),
                neg_local: None,
            },
            ThermoPoint {
                t: 0.1,
                m: -0.4,
                ..Default::default()
            },
        ];
        let curve = ThermoCurve::new(points, "h".into()).unwrap();
        let csv = curve.to_csv();
        assert!(csv.starts_with("# schema=1\nT,m_imp,s_imp,dm_dT,qfi,qsnr,neg_local\n"));
        let back = ThermoCurve::from_csv(&csv).unwrap();
        assert_eq!(back.points.len(), 2);
        assert_eq!(back.points[0].t, 1.0);
        assert_eq!(back.points[0].s_imp, Some(0.693));
        assert_eq!(back.points[1].dm_dt, None);
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn validation_rejects_increasing_t() {
        let points = vec![
            ThermoPoint {
                t: 0.1,
                m: 0.0,
                ..Default::default()
            },
            ThermoPoint {
                t: 1.0,
                m: 0.0,
                ..Default::default()
            },
        ];
        assert!(ThermoCurve::new(points, "h".into()).is_err());
    }
}
