//! Flat-key run configuration: a preset name plus optional overrides, parsed
//! from TOML-style `key = value` files. Every validation failure names the
//! offending key.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::autodiff::Activation;
use crate::error::{Error, Result};
use crate::presets::{preset, BenchmarkSpec};
use crate::sampling::Sampler;
use crate::training::{LossKind, OptimizerKind};

/// Raw file contents. All keys are flat; unknown keys are rejected with the
/// key name in the error.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: String,

    // Solver overrides.
    loss: Option<String>,
    epochs: Option<usize>,
    optimizer: Option<String>,
    adam_lr: Option<f64>,
    lambda_bc: Option<f64>,
    n_collocation: Option<usize>,
    n_boundary: Option<usize>,
    sampler: Option<String>,
    seed: Option<u64>,
    hidden_layers: Option<usize>,
    width: Option<usize>,
    activation: Option<String>,
    resample_every_epoch: Option<bool>,

    // Evaluation and output.
    eval_grid: Option<usize>,
    fields_out: Option<PathBuf>,
    report_out: Option<PathBuf>,
    reference: Option<PathBuf>,

    // Thickness-optimization overrides (valid only for presets that carry
    // optimization settings).
    v0_fraction: Option<f64>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    mu_init: Option<f64>,
    outer_iters: Option<usize>,
    inner_epochs: Option<usize>,
    constraint_tol: Option<f64>,
    warm_start_epochs: Option<usize>,
    psi_hidden_layers: Option<usize>,
    psi_width: Option<usize>,
    volume_only: Option<bool>,
    freeze_thickness: Option<bool>,
}

/// A fully validated run: the benchmark description plus runner knobs that
/// live outside the physics.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub spec: BenchmarkSpec,
    pub optimizer: OptimizerKind,
    /// Redraw collocation points every epoch instead of fixing one batch.
    pub resample_every_epoch: bool,
    pub volume_only: bool,
    pub freeze_thickness: bool,
    pub fields_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

fn bad(key: &'static str, detail: impl Into<String>) -> Error {
    Error::Config { key: key.into(), detail: detail.into() }
}

fn resolve(raw: RawConfig) -> Result<ResolvedRun> {
    let mut spec = preset(&raw.preset)?;

    if let Some(l) = &raw.loss {
        spec.loss = match l.as_str() {
            "weak" => LossKind::Weak,
            "strong" => LossKind::Strong,
            other => return Err(bad("loss", format!("'{other}' is not 'weak' or 'strong'"))),
        };
    }
    if let Some(e) = raw.epochs {
        spec.epochs = e;
    }
    if let Some(l) = raw.lambda_bc {
        if !(l >= 0.0) {
            return Err(bad("lambda_bc", format!("{l} must be >= 0")));
        }
        spec.lambda_bc = l;
    }
    if let Some(n) = raw.n_collocation {
        if n == 0 {
            return Err(bad("n_collocation", "must be >= 1"));
        }
        spec.plan.n_collocation = n;
    }
    if let Some(n) = raw.n_boundary {
        spec.plan.n_boundary_neumann = n;
    }
    if let Some(s) = &raw.sampler {
        spec.plan.sampler = match s.as_str() {
            "sobol" => Sampler::Sobol,
            "uniform" => Sampler::UniformRandom { seed: raw.seed.unwrap_or(spec.seed) },
            other => return Err(bad("sampler", format!("'{other}' is not 'sobol' or 'uniform'"))),
        };
    }
    if let Some(s) = raw.seed {
        spec.seed = s;
        if let Sampler::UniformRandom { seed } = &mut spec.plan.sampler {
            *seed = s;
        }
    }
    match (raw.hidden_layers, raw.width) {
        (None, None) => {}
        (Some(h), Some(w)) => {
            if h == 0 || w == 0 {
                return Err(bad("hidden_layers", "hidden_layers and width must be >= 1"));
            }
            let mut widths = vec![2];
            widths.extend(std::iter::repeat(w).take(h));
            widths.push(5);
            spec.widths = widths;
        }
        _ => {
            return Err(bad(
                "hidden_layers",
                "hidden_layers and width must be set together",
            ))
        }
    }
    if let Some(a) = &raw.activation {
        spec.activation = match a.as_str() {
            "gelu" => Activation::Gelu,
            "tanh" => Activation::Tanh,
            other => return Err(bad("activation", format!("'{other}' is not 'gelu' or 'tanh'"))),
        };
    }
    if let Some(g) = raw.eval_grid {
        if g < 2 {
            return Err(bad("eval_grid", "needs at least two points per axis"));
        }
        spec.eval_grid = g;
    }

    let optimizer = match raw.optimizer.as_deref() {
        None => {
            if raw.adam_lr.is_some() {
                return Err(bad("adam_lr", "set optimizer = \"adam\" to use a learning rate"));
            }
            OptimizerKind::Lbfgs
        }
        Some("lbfgs") => {
            if raw.adam_lr.is_some() {
                return Err(bad("adam_lr", "meaningless with optimizer = \"lbfgs\""));
            }
            OptimizerKind::Lbfgs
        }
        Some("adam") => {
            let lr = raw.adam_lr.unwrap_or(1e-3);
            if !(lr > 0.0) {
                return Err(bad("adam_lr", format!("{lr} must be > 0")));
            }
            OptimizerKind::Adam { lr }
        }
        Some(other) => {
            return Err(bad("optimizer", format!("'{other}' is not 'lbfgs' or 'adam'")))
        }
    };

    let topopt_keys: [(&'static str, bool); 12] = [
        ("v0_fraction", raw.v0_fraction.is_some()),
        ("t_min", raw.t_min.is_some()),
        ("t_max", raw.t_max.is_some()),
        ("mu_init", raw.mu_init.is_some()),
        ("outer_iters", raw.outer_iters.is_some()),
        ("inner_epochs", raw.inner_epochs.is_some()),
        ("constraint_tol", raw.constraint_tol.is_some()),
        ("warm_start_epochs", raw.warm_start_epochs.is_some()),
        ("psi_hidden_layers", raw.psi_hidden_layers.is_some()),
        ("psi_width", raw.psi_width.is_some()),
        ("volume_only", raw.volume_only.is_some()),
        ("freeze_thickness", raw.freeze_thickness.is_some()),
    ];
    match &mut spec.topopt {
        None => {
            if let Some((key, _)) = topopt_keys.iter().find(|(_, set)| *set) {
                return Err(Error::Config {
                    key: (*key).into(),
                    detail: format!(
                        "preset '{}' has no thickness-optimization settings",
                        spec.id
                    ),
                });
            }
        }
        Some(ts) => {
            if let Some(v) = raw.v0_fraction {
                if !(v > 0.0) {
                    return Err(bad("v0_fraction", format!("{v} must be > 0")));
                }
                ts.v0_fraction = v;
            }
            if let Some(t) = raw.t_min {
                ts.t_min = t;
            }
            if let Some(t) = raw.t_max {
                ts.t_max = t;
            }
            if !(ts.t_min > 0.0 && ts.t_min < ts.t_max) {
                return Err(bad(
                    "t_min",
                    format!("bounds 0 < t_min < t_max violated: [{}, {}]", ts.t_min, ts.t_max),
                ));
            }
            if let Some(m) = raw.mu_init {
                if !(m > 0.0) {
                    return Err(bad("mu_init", format!("{m} must be > 0")));
                }
                ts.mu_init = m;
            }
            if let Some(n) = raw.outer_iters {
                if n == 0 {
                    return Err(bad("outer_iters", "must be >= 1"));
                }
                ts.outer_iters = n;
            }
            if let Some(n) = raw.inner_epochs {
                if n == 0 {
                    return Err(bad("inner_epochs", "must be >= 1"));
                }
                ts.inner_epochs = n;
            }
            if let Some(t) = raw.constraint_tol {
                if !(t > 0.0) {
                    return Err(bad("constraint_tol", format!("{t} must be > 0")));
                }
                ts.constraint_tol = t;
            }
            if let Some(n) = raw.warm_start_epochs {
                ts.warm_start_epochs = n;
            }
            match (raw.psi_hidden_layers, raw.psi_width) {
                (None, None) => {}
                (Some(h), Some(w)) => {
                    if h == 0 || w == 0 {
                        return Err(bad(
                            "psi_hidden_layers",
                            "psi_hidden_layers and psi_width must be >= 1",
                        ));
                    }
                    let mut widths = vec![2];
                    widths.extend(std::iter::repeat(w).take(h));
                    widths.push(1);
                    ts.psi_widths = widths;
                }
                _ => {
                    return Err(bad(
                        "psi_hidden_layers",
                        "psi_hidden_layers and psi_width must be set together",
                    ))
                }
            }
        }
    }

    Ok(ResolvedRun {
        spec,
        optimizer,
        resample_every_epoch: raw.resample_every_epoch.unwrap_or(false),
        volume_only: raw.volume_only.unwrap_or(false),
        freeze_thickness: raw.freeze_thickness.unwrap_or(false),
        fields_out: raw.fields_out,
        report_out: raw.report_out,
        reference: raw.reference,
    })
}

/// Parse configuration text (TOML `key = value` lines).
pub fn parse_config(text: &str) -> Result<ResolvedRun> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::Config { key: "(file)".into(), detail: e.message().to_string() })?;
    resolve(raw)
}

/// Load and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ResolvedRun> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Worker thread count from `SHELLFIELD_THREADS` (default 1). This build
/// evaluates losses serially, so any requested count above 1 is clamped; the
/// variable exists so scripts keep working if parallel evaluation lands.
pub fn thread_count() -> usize {
    std::env::var("SHELLFIELD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TrialKind;

    #[test]
    fn minimal_config_resolves_to_the_preset() {
        let run = parse_config("preset = \"hyperb_parab_clamped\"").unwrap();
        assert_eq!(run.spec.id, "hyperb_parab_clamped");
        assert_eq!(run.spec.plan.n_collocation, 2_048);
        assert!(matches!(run.optimizer, OptimizerKind::Lbfgs));
        assert!(!run.resample_every_epoch);
        assert!(run.fields_out.is_none());
    }

    #[test]
    fn overrides_apply_and_are_validated() {
        let run = parse_config(
            "preset = \"hyperb_parab_clamped\"\n\
             loss = \"strong\"\n\
             epochs = 7\n\
             n_collocation = 64\n\
             n_boundary = 16\n\
             hidden_layers = 2\n\
             width = 8\n\
             activation = \"tanh\"\n\
             optimizer = \"adam\"\n\
             adam_lr = 0.01\n\
             sampler = \"uniform\"\n\
             seed = 3\n\
             eval_grid = 9\n",
        )
        .unwrap();
        assert_eq!(run.spec.loss, LossKind::Strong);
        assert_eq!(run.spec.epochs, 7);
        assert_eq!(run.spec.plan.n_collocation, 64);
        assert_eq!(run.spec.widths, vec![2, 8, 8, 5]);
        assert_eq!(run.spec.activation, Activation::Tanh);
        assert_eq!(run.optimizer, OptimizerKind::Adam { lr: 0.01 });
        assert_eq!(run.spec.plan.sampler, Sampler::UniformRandom { seed: 3 });
        assert_eq!(run.spec.eval_grid, 9);
        // The trial is preset-owned, untouched by overrides.
        assert!(matches!(run.spec.trial, TrialKind::FullyClampedSquare));
    }

    #[test]
    fn errors_name_the_offending_key() {
        let err = parse_config("preset = \"hyperb_parab_clamped\"\nloss = \"wek\"").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "loss"), "{err}");

        let err = parse_config("preset = \"hyperb_parab_clamped\"\nadam_lr = 0.1").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "adam_lr"), "{err}");

        let err = parse_config("preset = \"hyperb_parab_clamped\"\nwidth = 8").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "hidden_layers"), "{err}");

        let err =
            parse_config("preset = \"hyperb_parab_clamped\"\nv0_fraction = 0.5").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "v0_fraction"), "{err}");

        // Unknown keys are rejected by the parser and the message names them.
        let err = parse_config("preset = \"hyperb_parab_clamped\"\nnn_width = 8").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nn_width"), "{msg}");

        let err = parse_config("epochs = 3").unwrap_err();
        assert!(err.to_string().contains("preset"), "{err}");
    }

    #[test]
    fn topopt_overrides_require_a_topopt_preset_and_stay_consistent() {
        let run = parse_config(
            "preset = \"topopt_plate\"\n\
             v0_fraction = 0.6\n\
             t_min = 0.01\n\
             outer_iters = 3\n\
             psi_hidden_layers = 1\n\
             psi_width = 4\n\
             volume_only = true\n",
        )
        .unwrap();
        let ts = run.spec.topopt.unwrap();
        assert_eq!(ts.v0_fraction, 0.6);
        assert_eq!(ts.t_min, 0.01);
        assert_eq!(ts.outer_iters, 3);
        assert_eq!(ts.psi_widths, vec![2, 4, 1]);
        assert!(run.volume_only);

        let err = parse_config("preset = \"topopt_plate\"\nt_min = 0.5").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "t_min"), "{err}");
    }
}
