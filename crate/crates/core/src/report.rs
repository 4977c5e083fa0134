//! Run reports: everything a benchmark produced, serializable to JSON and
//! reloadable without loss (finite doubles round-trip exactly through the
//! shortest-representation formatter).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presets::BenchmarkSpec;
use crate::topopt::UpdateRecord;
use crate::training::{LossValue, OptimizerKind};

/// Scalar solution check at a fixed reference-domain point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub xi: [f64; 2],
    pub field: usize,
    /// Raw field value in run units.
    pub raw: f64,
    /// Value converted to the published units.
    pub rescaled: f64,
    pub reference: f64,
    /// `|rescaled - reference| / |reference|`.
    pub relative_gap: f64,
}

/// Probe trajectory sample recorded during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub epoch: usize,
    pub rescaled: f64,
    pub relative_gap: f64,
}

/// Per-field relative L2 errors against a reference field file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub per_field: [f64; 5],
    pub average: f64,
}

/// Thickness-optimization outcome summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoptReport {
    pub compliance: Vec<f64>,
    pub h_inf: Vec<f64>,
    pub accepted: Vec<bool>,
    pub updates: Vec<UpdateRecord>,
    pub volume_target: f64,
    pub final_volume: f64,
    pub final_volume_residual: f64,
    pub feasible: bool,
    pub outer_iters_run: usize,
    pub inner_epochs_run: usize,
    /// Final thickness sampled on the eval grid: rows `(xi1, xi2, t)`.
    pub thickness: Vec<[f64; 3]>,
}

/// Patch-test outcome (prescribed linear displacement, no training).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    /// Largest equilibrium residual magnitude over the grid.
    pub max_residual: f64,
    /// Largest deviation of the membrane resultants from `t C : e`.
    pub max_resultant_dev: f64,
}

/// Complete record of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    /// Resolved benchmark description, echoed for reproducibility.
    pub config: BenchmarkSpec,
    pub optimizer: OptimizerKind,
    pub threads: usize,
    pub epochs_completed: usize,
    pub loss_history: Vec<f64>,
    pub last_loss: Option<LossValue>,
    pub line_search_failures: usize,
    pub loss_evals: usize,
    pub wall_seconds: f64,
    /// Set when a reference field file was supplied.
    pub errors: Option<ErrorReport>,
    pub probe: Option<ProbeReport>,
    pub probe_history: Vec<ProbeSample>,
    pub topopt: Option<TopoptReport>,
    pub patch: Option<PatchReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        // Report contains only finite floats, strings, and integers; this
        // cannot fail.
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn from_json(text: &str) -> Result<Report> {
        serde_json::from_str(text)
            .map_err(|e| Error::SchemaMismatch { detail: format!("report parse: {e}") })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Report> {
        Report::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;
    use crate::training::WeakLoss;

    fn sample_report() -> Report {
        Report {
            config: preset("hyperb_parab_clamped").unwrap(),
            optimizer: OptimizerKind::Adam { lr: 1.0 / 3.0 },
            threads: 1,
            epochs_completed: 3,
            loss_history: vec![0.1 + 0.2, -1.0 / 3.0, 1e-300, f64::MIN_POSITIVE],
            last_loss: Some(LossValue::Weak(WeakLoss {
                membrane: 0.625,
                bending: f64::EPSILON,
                shear: 1.0 / 7.0,
                external: -2.0 / 3.0,
                total: 0.1 + 0.2 + 0.3,
            })),
            line_search_failures: 1,
            loss_evals: 42,
            wall_seconds: std::f64::consts::PI,
            errors: Some(ErrorReport {
                per_field: [0.1, 1.0 / 3.0, 5e-324, 0.0, 1e308],
                average: 0.123456789012345678,
            }),
            probe: Some(ProbeReport {
                xi: [0.0, 2.0 * std::f64::consts::PI / 9.0],
                field: 2,
                raw: -0.18144,
                rescaled: -0.3024,
                reference: -0.3024,
                relative_gap: 0.0,
            }),
            probe_history: vec![ProbeSample { epoch: 1, rescaled: -0.25, relative_gap: 0.17 }],
            topopt: Some(TopoptReport {
                compliance: vec![1.0 / 3.0, 0.25],
                h_inf: vec![0.5, 1e-5],
                accepted: vec![true, true],
                updates: vec![UpdateRecord {
                    mu: 100.0,
                    h_inf: 0.5,
                    h_vol: -0.25,
                    lambda_vol_before: 0.0,
                    lambda_vol_after: -50.0,
                }],
                volume_target: 0.08,
                final_volume: 0.08 + 1e-17,
                final_volume_residual: 1e-17,
                feasible: true,
                outer_iters_run: 2,
                inner_epochs_run: 80,
                thickness: vec![[0.0, 0.0, 0.2], [0.5, -0.5, 0.02 + 1e-16]],
            }),
            patch: Some(PatchReport { max_residual: 3e-16, max_resultant_dev: 1e-17 }),
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let r = sample_report();
        let d = Report::from_json(&r.to_json()).unwrap();
        // Compare field by field with exact equality; doubles must survive
        // the text format unchanged.
        assert_eq!(d.loss_history, r.loss_history);
        assert_eq!(d.errors, r.errors);
        assert_eq!(d.probe, r.probe);
        assert_eq!(d.probe_history, r.probe_history);
        assert_eq!(d.topopt, r.topopt);
        assert_eq!(d.wall_seconds.to_bits(), r.wall_seconds.to_bits());
        assert_eq!(d.epochs_completed, r.epochs_completed);
        assert_eq!(d.config.id, r.config.id);
        assert_eq!(d.config.plan.n_collocation, r.config.plan.n_collocation);
        match (d.last_loss, r.last_loss) {
            (Some(LossValue::Weak(a)), Some(LossValue::Weak(b))) => {
                assert_eq!(a.total.to_bits(), b.total.to_bits());
                assert_eq!(a.bending.to_bits(), b.bending.to_bits());
            }
            _ => panic!("loss variant changed in round trip"),
        }
        // A second round trip is a fixed point.
        let d2 = Report::from_json(&d.to_json()).unwrap();
        assert_eq!(d2.to_json(), d.to_json());
    }

    #[test]
    fn file_round_trip_and_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let r = sample_report();
        r.save(&path).unwrap();
        let d = Report::load(&path).unwrap();
        assert_eq!(d.to_json(), r.to_json());

        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(Report::load(&path), Err(Error::SchemaMismatch { .. })));
    }
}
