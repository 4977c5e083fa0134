//! Field table export and ingestion: comma-separated text with a fixed
//! column schema, plus interpolation of reference tables onto evaluation
//! points (tensor-grid bilinear on rectangles, Delaunay barycentric on the
//! disc). Numbers are written with the shortest representation that parses
//! back to the identical double, so export -> ingest is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use delaunator::{triangulate, Point};

use crate::error::{Error, Result};
use crate::geometry::RefDomain;

/// Column order of exported tables.
pub const COLUMNS: [&str; 10] =
    ["xi1", "xi2", "x", "y", "z", "u1", "u2", "u3", "theta1", "theta2"];

/// Solution fields sampled at reference-domain points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldTable {
    pub points: Vec<[f64; 2]>,
    /// Midsurface positions (chart images of `points`).
    pub xyz: Vec<[f64; 3]>,
    /// Global displacements and frame rotations.
    pub fields: Vec<[f64; 5]>,
}

impl FieldTable {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn to_csv(t: &FieldTable) -> String {
    let mut s = String::new();
    s.push_str(&COLUMNS.join(","));
    s.push('\n');
    for i in 0..t.len() {
        let p = t.points[i];
        let x = t.xyz[i];
        let f = t.fields[i];
        // `{}` on f64 is locale-independent and round-trips exactly.
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            p[0], p[1], x[0], x[1], x[2], f[0], f[1], f[2], f[3], f[4]
        );
    }
    s
}

pub fn from_csv(text: &str) -> Result<FieldTable> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::SchemaMismatch {
        detail: "empty field table".into(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    // Column order is free and extra columns are ignored; every schema
    // column must be present.
    let mut index = [usize::MAX; 10];
    let mut missing = Vec::new();
    for (k, want) in COLUMNS.iter().enumerate() {
        match names.iter().position(|n| n.eq_ignore_ascii_case(want)) {
            Some(i) => index[k] = i,
            None => missing.push(*want),
        }
    }
    if !missing.is_empty() {
        return Err(Error::SchemaMismatch {
            detail: format!("missing columns: {}", missing.join(", ")),
        });
    }

    let mut t = FieldTable::default();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let mut row = [0.0f64; 10];
        for k in 0..10 {
            let cell = cells.get(index[k]).ok_or_else(|| Error::SchemaMismatch {
                detail: format!("line {}: missing cell for '{}'", lineno + 2, COLUMNS[k]),
            })?;
            row[k] = cell.parse().map_err(|_| Error::SchemaMismatch {
                detail: format!("line {}: '{}' is not a number", lineno + 2, cell),
            })?;
        }
        t.points.push([row[0], row[1]]);
        t.xyz.push([row[2], row[3], row[4]]);
        t.fields.push([row[5], row[6], row[7], row[8], row[9]]);
    }
    Ok(t)
}

pub fn export(path: &Path, t: &FieldTable) -> Result<()> {
    std::fs::write(path, to_csv(t))?;
    Ok(())
}

pub fn ingest(path: &Path) -> Result<FieldTable> {
    from_csv(&std::fs::read_to_string(path)?)
}

/// Sorted distinct axis coordinates with a span-relative merge tolerance.
fn axis_values(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let span = (v.last().unwrap() - v.first().unwrap()).abs().max(1e-30);
    let tol = 1e-9 * span;
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if out.last().map_or(true, |&l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

/// Index of the cell containing `x` (clamped to the axis range).
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    let mut k = axis.partition_point(|&a| a <= x);
    k = k.clamp(1, n - 1) - 1;
    let w = (x - axis[k]) / (axis[k + 1] - axis[k]);
    (k, w)
}

/// Bilinear interpolation on a tensor-product grid. The reference points must
/// form a complete grid (any row order); targets outside the grid are clamped
/// to its hull.
fn interpolate_grid(t: &FieldTable, targets: &[[f64; 2]]) -> Result<Vec<[f64; 5]>> {
    let xs = axis_values(t.points.iter().map(|p| p[0]).collect());
    let ys = axis_values(t.points.iter().map(|p| p[1]).collect());
    let (nx, ny) = (xs.len(), ys.len());
    if nx < 2 || ny < 2 || nx * ny != t.len() {
        return Err(Error::SchemaMismatch {
            detail: format!(
                "reference points do not form a tensor grid ({} points, {}x{} axes)",
                t.len(),
                nx,
                ny
            ),
        });
    }
    let mut cell = vec![usize::MAX; nx * ny];
    for (row, p) in t.points.iter().enumerate() {
        let i = locate(&xs, p[0]);
        let j = locate(&ys, p[1]);
        let i = if i.1 > 0.5 { i.0 + 1 } else { i.0 };
        let j = if j.1 > 0.5 { j.0 + 1 } else { j.0 };
        cell[j * nx + i] = row;
    }
    if cell.iter().any(|&r| r == usize::MAX) {
        return Err(Error::SchemaMismatch {
            detail: "reference points do not form a tensor grid (missing nodes)".into(),
        });
    }

    let mut out = Vec::with_capacity(targets.len());
    for &p in targets {
        let (i, wx) = locate(&xs, p[0]);
        let (j, wy) = locate(&ys, p[1]);
        let f = |jj: usize, ii: usize| t.fields[cell[jj * nx + ii]];
        let (f00, f10, f01, f11) = (f(j, i), f(j, i + 1), f(j + 1, i), f(j + 1, i + 1));
        let mut v = [0.0; 5];
        for k in 0..5 {
            let lo = f00[k] + wx * (f10[k] - f00[k]);
            let hi = f01[k] + wx * (f11[k] - f01[k]);
            v[k] = lo + wy * (hi - lo);
        }
        out.push(v);
    }
    Ok(out)
}

fn bary(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> Option<[f64; 3]> {
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if det == 0.0 {
        return None;
    }
    let w1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let w2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    Some([1.0 - w1 - w2, w1, w2])
}

/// Piecewise-linear interpolation over a Delaunay triangulation of the
/// reference points. Targets outside the hull take the linear value along the
/// nearest hull edge.
fn interpolate_delaunay(t: &FieldTable, targets: &[[f64; 2]]) -> Result<Vec<[f64; 5]>> {
    if t.len() < 3 {
        return Err(Error::SchemaMismatch {
            detail: format!("need at least 3 reference points, got {}", t.len()),
        });
    }
    let pts: Vec<Point> = t.points.iter().map(|p| Point { x: p[0], y: p[1] }).collect();
    let tri = triangulate(&pts);
    let ntri = tri.triangles.len() / 3;
    if ntri == 0 {
        return Err(Error::SchemaMismatch {
            detail: "reference points are collinear, cannot triangulate".into(),
        });
    }

    // Coarse uniform bins over triangle bounding boxes keep the containment
    // search near O(1) per target.
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &t.points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let g = ((ntri as f64).sqrt().ceil() as usize).clamp(1, 256);
    let ext = |d: usize| (hi[d] - lo[d]).max(1e-30);
    let bin_of = |x: f64, d: usize| {
        (((x - lo[d]) / ext(d) * g as f64) as isize).clamp(0, g as isize - 1) as usize
    };
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); g * g];
    let corner = |k: usize, v: usize| t.points[tri.triangles[3 * k + v]];
    for k in 0..ntri {
        let (a, b, c) = (corner(k, 0), corner(k, 1), corner(k, 2));
        let (bx0, bx1) = (
            bin_of(a[0].min(b[0]).min(c[0]), 0),
            bin_of(a[0].max(b[0]).max(c[0]), 0),
        );
        let (by0, by1) = (
            bin_of(a[1].min(b[1]).min(c[1]), 1),
            bin_of(a[1].max(b[1]).max(c[1]), 1),
        );
        for by in by0..=by1 {
            for bx in bx0..=bx1 {
                bins[by * g + bx].push(k as u32);
            }
        }
    }

    let value = |k: usize, w: [f64; 3]| {
        let (ia, ib, ic) =
            (tri.triangles[3 * k], tri.triangles[3 * k + 1], tri.triangles[3 * k + 2]);
        let mut v = [0.0; 5];
        for f in 0..5 {
            v[f] = w[0] * t.fields[ia][f] + w[1] * t.fields[ib][f] + w[2] * t.fields[ic][f];
        }
        v
    };

    let mut out = Vec::with_capacity(targets.len());
    'next: for &p in targets {
        let candidates = &bins[bin_of(p[1], 1) * g + bin_of(p[0], 0)];
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &k in candidates {
            let k = k as usize;
            if let Some(w) = bary(corner(k, 0), corner(k, 1), corner(k, 2), p) {
                let worst = w[0].min(w[1]).min(w[2]);
                if worst >= -1e-12 {
                    out.push(value(k, w));
                    continue 'next;
                }
                if best.map_or(true, |(bw, _, _)| worst > bw) {
                    best = Some((worst, k, w));
                }
            }
        }
        // Outside the hull (or an empty bin): linear value along the nearest
        // hull edge.
        let hull = &tri.hull;
        let mut nearest = (f64::INFINITY, [0.0; 5]);
        for e in 0..hull.len() {
            let (ia, ib) = (hull[e], hull[(e + 1) % hull.len()]);
            let (a, b) = (t.points[ia], t.points[ib]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let s = if len2 == 0.0 {
                0.0
            } else {
                (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            };
            let q = [a[0] + s * d[0], a[1] + s * d[1]];
            let dist2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if dist2 < nearest.0 {
                let mut v = [0.0; 5];
                for f in 0..5 {
                    v[f] = (1.0 - s) * t.fields[ia][f] + s * t.fields[ib][f];
                }
                nearest = (dist2, v);
            }
        }
        // Prefer a barely-missed triangle over a distant hull edge.
        if let Some((worst, k, w)) = best {
            if worst > -1e-6 {
                out.push(value(k, w));
                continue;
            }
        }
        out.push(nearest.1);
    }
    Ok(out)
}

/// Interpolate a reference table onto `targets`: bilinear on rectangular
/// domains (the table must be a tensor grid), Delaunay barycentric on the
/// disc.
pub fn interpolate(t: &FieldTable, domain: &RefDomain, targets: &[[f64; 2]]) -> Result<Vec<[f64; 5]>> {
    if t.is_empty() {
        return Err(Error::SchemaMismatch { detail: "empty reference table".into() });
    }
    match domain {
        RefDomain::Rect { .. } => interpolate_grid(t, targets),
        RefDomain::UnitDisc => interpolate_delaunay(t, targets),
    }
}

/// Structure-driven variant: bilinear when the reference forms a tensor
/// grid, Delaunay barycentric for anything else (disc grids, scattered
/// points).
pub fn interpolate_auto(t: &FieldTable, targets: &[[f64; 2]]) -> Result<Vec<[f64; 5]>> {
    if t.is_empty() {
        return Err(Error::SchemaMismatch { detail: "empty reference table".into() });
    }
    interpolate_grid(t, targets).or_else(|_| interpolate_delaunay(t, targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::metrics::eval_grid;

    fn smooth(p: [f64; 2]) -> [f64; 5] {
        let (x, y) = (p[0], p[1]);
        let s = (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).cos();
        [s, x * x + y * y, (2.0 * x - y).cos(), x * y, 1.0 + x - 0.5 * y * y]
    }

    fn table_on(points: Vec<[f64; 2]>) -> FieldTable {
        let xyz = points.iter().map(|&p| [p[0], p[1], 0.0]).collect();
        let fields = points.iter().map(|&p| smooth(p)).collect();
        FieldTable { points, xyz, fields }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let t = FieldTable {
            points: vec![[0.1, -0.2], [1.0 / 3.0, 2.0f64.sqrt()]],
            xyz: vec![[0.1, -0.2, 1e-300], [5e-324, -1.0 / 7.0, 6.02e23]],
            fields: vec![
                [0.1 + 0.2, -0.0, f64::EPSILON, 1.0, -3.5],
                [9.999999999999999e22, 1e22, 123456789.123456789, -2e-8, 0.375],
            ],
        };
        let back = from_csv(&to_csv(&t)).unwrap();
        assert_eq!(back.len(), 2);
        for i in 0..2 {
            for d in 0..2 {
                assert_eq!(back.points[i][d].to_bits(), t.points[i][d].to_bits());
            }
            for d in 0..3 {
                assert_eq!(back.xyz[i][d].to_bits(), t.xyz[i][d].to_bits());
            }
            for d in 0..5 {
                assert_eq!(back.fields[i][d].to_bits(), t.fields[i][d].to_bits());
            }
        }
    }

    #[test]
    fn grid_export_shape_and_zero_fields() {
        let dom = RefDomain::Rect { x: [0.0, 1.0], y: [0.0, 1.0] };
        let pts = eval_grid(&dom, 3);
        let t = FieldTable {
            xyz: pts.iter().map(|&p| [p[0], p[1], 0.0]).collect(),
            fields: vec![[0.0; 5]; pts.len()],
            points: pts,
        };
        let text = to_csv(&t);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "xi1,xi2,x,y,z,u1,u2,u3,theta1,theta2");
        assert_eq!(lines.count(), 9);
        let back = from_csv(&text).unwrap();
        assert!(back.fields.iter().all(|f| f.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn missing_columns_are_listed() {
        let text = "xi1,xi2,x,y,z,u1,u2,u3,theta1\n0,0,0,0,0,1,2,3,4\n";
        let err = from_csv(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("theta2"), "{msg}");
        assert!(!msg.contains("theta1,"), "{msg}");

        let err = from_csv("u1,u2\n1,2\n").unwrap_err();
        let msg = err.to_string();
        for c in ["xi1", "xi2", "x", "y", "z", "u3", "theta1", "theta2"] {
            assert!(msg.contains(c), "{msg} lacks {c}");
        }
    }

    #[test]
    fn column_order_is_free_and_extras_are_ignored() {
        let text = "z,extra,xi2,xi1,y,x,u3,u2,u1,theta2,theta1\n\
                    5,99,2,1,4,3,8,7,6,10,9\n";
        let t = from_csv(text).unwrap();
        assert_eq!(t.points[0], [1.0, 2.0]);
        assert_eq!(t.xyz[0], [3.0, 4.0, 5.0]);
        assert_eq!(t.fields[0], [6.0, 7.0, 8.0, 9.0, 10.0]);
    }

    #[test]
    fn ingesting_an_export_reproduces_the_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fields.csv");
        let dom = RefDomain::Rect { x: [-0.5, 0.5], y: [-0.5, 0.5] };
        let t = table_on(eval_grid(&dom, 5));
        export(&path, &t).unwrap();
        let back = ingest(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn grid_interpolation_reproduces_nodes_and_converges_quadratically() {
        let dom = RefDomain::Rect { x: [-0.5, 0.5], y: [-0.5, 0.5] };
        let coarse = table_on(eval_grid(&dom, 11));
        // Node values come back exactly.
        let at_nodes = interpolate(&coarse, &dom, &coarse.points).unwrap();
        for (a, b) in at_nodes.iter().zip(&coarse.fields) {
            for k in 0..5 {
                assert!((a[k] - b[k]).abs() < 1e-14);
            }
        }

        // Halving h divides the max interpolation error by about four.
        let fine = table_on(eval_grid(&dom, 21));
        let targets: Vec<[f64; 2]> = (0..100)
            .map(|i| {
                let a = (i as f64 + 0.5) / 100.0;
                [0.47 * (7.3 * a).sin(), 0.47 * (11.9 * a + 1.0).cos()]
            })
            .collect();
        let max_err = |t: &FieldTable| {
            interpolate(t, &dom, &targets)
                .unwrap()
                .iter()
                .zip(&targets)
                .map(|(v, &p)| {
                    let e = smooth(p);
                    (0..5).map(|k| (v[k] - e[k]).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let (e_coarse, e_fine) = (max_err(&coarse), max_err(&fine));
        let ratio = e_coarse / e_fine;
        assert!(ratio > 3.0, "expected O(h^2): coarse {e_coarse} fine {e_fine} ratio {ratio}");
    }

    #[test]
    fn scattered_rect_reference_is_rejected() {
        let t = table_on(vec![[0.0, 0.0], [0.3, 0.1], [0.7, 0.9], [0.2, 0.8]]);
        let dom = RefDomain::Rect { x: [0.0, 1.0], y: [0.0, 1.0] };
        let err = interpolate(&t, &dom, &[[0.5, 0.5]]).unwrap_err();
        assert!(err.to_string().contains("tensor grid"), "{err}");
    }

    #[test]
    fn disc_interpolation_converges_quadratically() {
        let dom = RefDomain::UnitDisc;
        let coarse = table_on(eval_grid(&dom, 41));
        let fine = table_on(eval_grid(&dom, 81));
        let targets: Vec<[f64; 2]> = (0..60)
            .map(|i| {
                let a = (i as f64 + 0.5) / 60.0;
                let r = 0.85 * a.sqrt();
                let th = 17.0 * a;
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        let rms_err = |t: &FieldTable| {
            let v = interpolate(t, &dom, &targets).unwrap();
            let mut s = 0.0;
            for (v, &p) in v.iter().zip(&targets) {
                let e = smooth(p);
                for k in 0..5 {
                    s += (v[k] - e[k]).powi(2);
                }
            }
            (s / (5.0 * targets.len() as f64)).sqrt()
        };
        let (e_coarse, e_fine) = (rms_err(&coarse), rms_err(&fine));
        let ratio = e_coarse / e_fine;
        assert!(ratio > 2.5, "expected O(h^2): coarse {e_coarse} fine {e_fine} ratio {ratio}");

        // Rim targets resolve through the hull-edge fallback, which clamps
        // rather than extrapolates: accuracy degrades to O(h) there.
        let rim = [[0.999999, 0.0], [0.0, -0.999999]];
        let h = 2.0 / 40.0;
        let v = interpolate(&coarse, &dom, &rim).unwrap();
        for (v, &p) in v.iter().zip(&rim) {
            let e = smooth(p);
            for k in 0..5 {
                assert!(
                    (v[k] - e[k]).abs() < 4.0 * h,
                    "rim value off: {} vs {}",
                    v[k],
                    e[k]
                );
            }
        }
    }
}
