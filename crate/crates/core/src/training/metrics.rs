//! Evaluation grids and the relative L2 error metric used to compare runs
//! against reference fields.

use crate::error::{Error, Result};
use crate::geometry::{RefDomain, DISC_SHRINK};
use crate::training::pipeline::{field_jets, FieldNet};

/// Tensor-product evaluation grid over the reference domain (n points per
/// axis, endpoints included); disc domains keep the points inside the
/// shrunken unit circle.
pub fn eval_grid(domain: &RefDomain, n: usize) -> Vec<[f64; 2]> {
    assert!(n >= 2, "grid needs at least two points per axis");
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut out = Vec::new();
    match domain {
        RefDomain::Rect { x, y } => {
            for j in 0..n {
                for i in 0..n {
                    out.push([lin(x[0], x[1], i), lin(y[0], y[1], j)]);
                }
            }
        }
        RefDomain::UnitDisc => {
            for j in 0..n {
                for i in 0..n {
                    let p = [lin(-1.0, 1.0, i), lin(-1.0, 1.0, j)];
                    if p[0] * p[0] + p[1] * p[1] <= DISC_SHRINK * DISC_SHRINK {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Constrained field values (global displacements + raw rotations) at the
/// given points.
pub fn eval_fields(net: &FieldNet, params: &[f64], pts: &[[f64; 2]]) -> Vec<[f64; 5]> {
    pts.iter()
        .map(|&xi| {
            let j = field_jets::<f64>(net, params, xi);
            [j[0].v, j[1].v, j[2].v, j[3].v, j[4].v]
        })
        .collect()
}

/// Relative L2 error per field, `||ref - pred||_2 / ||ref||_2` over the grid,
/// plus the five-field average.
pub fn l2_error(pred: &[[f64; 5]], reference: &[[f64; 5]]) -> Result<([f64; 5], f64)> {
    if pred.len() != reference.len() {
        return Err(Error::SchemaMismatch {
            detail: format!(
                "prediction grid has {} points, reference has {}",
                pred.len(),
                reference.len()
            ),
        });
    }
    let mut per = [0.0; 5];
    for field in 0..5 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (p, r) in pred.iter().zip(reference) {
            num += (r[field] - p[field]) * (r[field] - p[field]);
            den += r[field] * r[field];
        }
        if den == 0.0 {
            return Err(Error::ZeroNormReference { field });
        }
        per[field] = (num / den).sqrt();
    }
    let avg = per.iter().sum::<f64>() / 5.0;
    Ok((per, avg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_fields_have_zero_error_and_zero_prediction_has_unit_error() {
        let reference = vec![[1.0, -2.0, 0.5, 0.3, 0.1], [0.2, 1.0, -0.4, 0.9, -1.1]];
        let (per, avg) = l2_error(&reference, &reference).unwrap();
        assert_eq!(per, [0.0; 5]);
        assert_eq!(avg, 0.0);

        let zeros = vec![[0.0; 5]; 2];
        let (per, avg) = l2_error(&zeros, &reference).unwrap();
        for p in per {
            assert!((p - 1.0).abs() < 1e-15);
        }
        assert!((avg - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_norm_reference_is_rejected() {
        let reference = vec![[1.0, 0.0, 0.5, 0.3, 0.1]];
        let pred = vec![[0.9, 0.1, 0.4, 0.2, 0.0]];
        let err = l2_error(&pred, &reference).unwrap_err();
        assert!(matches!(err, Error::ZeroNormReference { field: 1 }));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = vec![[0.0; 5]; 3];
        let b = vec![[0.0; 5]; 4];
        assert!(matches!(l2_error(&a, &b), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn grids_cover_domains() {
        let rect = RefDomain::Rect { x: [-0.5, 0.5], y: [-1.0, 1.0] };
        let g = eval_grid(&rect, 5);
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], [-0.5, -1.0]);
        assert_eq!(g[24], [0.5, 1.0]);

        let disc = eval_grid(&RefDomain::UnitDisc, 21);
        assert!(disc.len() < 21 * 21);
        for p in &disc {
            assert!(p[0] * p[0] + p[1] * p[1] <= 1.0);
        }
        // Center row survives the radial filter.
        assert!(disc.iter().any(|p| p == &[0.0, 0.0]));
    }
}
