//! First-order shell geometry on a chart: tangent basis, fundamental forms,
//! Christoffel symbols, and the local transforms for displacements and
//! rotations.
//!
//! Everything is produced by jet evaluation of the chart; the same generic
//! builder instantiated with second-order jets also yields the first and
//! second derivatives of all geometric quantities needed by the strong form.

mod chart;

pub use chart::{Chart, RefDomain, Side, DISC_SHRINK};

use crate::autodiff::{Scalar, J2};
use crate::error::{Error, Result};

/// Threshold below which the tangent basis is treated as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Tolerance for the V-frame special case `a3 ~ e_y`.
const VFRAME_EPS_SQ: f64 = 1e-30;

#[inline]
fn dot3<S: Scalar>(a: [S; 3], b: [S; 3]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross3<S: Scalar>(a: [S; 3], b: [S; 3]) -> [S; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn scale3<S: Scalar>(a: [S; 3], s: S) -> [S; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Complete pointwise surface geometry, generic over the scalar type.
#[derive(Debug, Clone)]
pub struct SurfaceGeometryG<S> {
    pub a1: [S; 3],
    pub a2: [S; 3],
    /// Unit normal `(a1 x a2) / |a1 x a2|`.
    pub a3: [S; 3],
    /// Covariant metric `a_{alpha beta}`.
    pub a_cov: [[S; 2]; 2],
    /// Contravariant metric `a^{alpha beta}`.
    pub a_con: [[S; 2]; 2],
    /// Area element `|a1 x a2|`.
    pub sqrt_a: S,
    /// Second fundamental form `b_{alpha beta}`.
    pub b_cov: [[S; 2]; 2],
    /// Mixed curvature `b^alpha_beta` (first index raised).
    pub b_mix: [[S; 2]; 2],
    /// Third fundamental form `c_{alpha beta} = b^rho_alpha b_{rho beta}`.
    pub c_cov: [[S; 2]; 2],
    /// Christoffel symbols `gamma[rho][alpha][beta] = Gamma^rho_{alpha beta}`.
    pub gamma: [[[S; 2]; 2]; 2],
    /// Displacement transform; rows `a1, a2, a3`, so `u_i = tu[i] . u_hat`.
    pub tu: [[S; 3]; 3],
    /// Rotation transform; rows `a1, a2`.
    pub ttheta: [[S; 3]; 2],
    /// V-frame tangent vectors.
    pub v1: [S; 3],
    pub v2: [S; 3],
    /// V-frame lift, columns `(V2, V1)`: `theta_hat = tv . beta`.
    pub tv: [[S; 2]; 3],
    /// Rotation component map `theta_alpha = rot_m[alpha][b] beta_b`
    /// (composition `ttheta . tv`), used by the V-frame rotation basis.
    pub rot_m: [[S; 2]; 2],
}

pub type SurfaceGeometry = SurfaceGeometryG<f64>;

/// Orthonormal surface frame built from the global y-axis.
///
/// `V1 = (e_y x a3)/|e_y x a3|`, `V2 = V1 x a3`; when `a3` is (numerically)
/// `e_y` itself the frame degenerates and the published special case
/// `V1 = (0,0,1)` applies.
pub fn v_frame_s<S: Scalar>(a3: [S; 3]) -> ([S; 3], [S; 3]) {
    let c = [a3[2], S::lit(0.0), -a3[0]]; // e_y x a3
    let n2 = c[0] * c[0] + c[2] * c[2];
    let v1 = if n2.value() < VFRAME_EPS_SQ {
        [S::lit(0.0), S::lit(0.0), S::lit(1.0)]
    } else {
        let inv = S::lit(1.0) / n2.sqrt();
        scale3(c, inv)
    };
    let v2 = cross3(v1, a3);
    (v1, v2)
}

/// Plain-number V-frame.
pub fn v_frame(a3: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    v_frame_s(a3)
}

/// Assemble the full geometry at `xi` in any scalar type.
///
/// Callers are responsible for domain membership and degeneracy checks
/// (see [`build_geometry`]); this function is pure algebra on chart jets.
pub fn build_geometry_s<S: Scalar>(chart: &Chart, xi: [S; 2]) -> SurfaceGeometryG<S> {
    let p = chart.eval(J2::seed(xi[0], xi[1]));
    let a1 = [p[0].dx, p[1].dx, p[2].dx];
    let a2 = [p[0].dy, p[1].dy, p[2].dy];
    // Second chart derivatives a_{alpha,beta}.
    let dda = |al: usize, be: usize| -> [S; 3] {
        [p[0].d2(al, be), p[1].d2(al, be), p[2].d2(al, be)]
    };
    let cr = cross3(a1, a2);
    let sqrt_a = dot3(cr, cr).sqrt();
    let a3 = scale3(cr, S::lit(1.0) / sqrt_a);

    let a_cov = [
        [dot3(a1, a1), dot3(a1, a2)],
        [dot3(a2, a1), dot3(a2, a2)],
    ];
    let det = a_cov[0][0] * a_cov[1][1] - a_cov[0][1] * a_cov[1][0];
    let inv_det = S::lit(1.0) / det;
    let a_con = [
        [a_cov[1][1] * inv_det, -(a_cov[0][1] * inv_det)],
        [-(a_cov[1][0] * inv_det), a_cov[0][0] * inv_det],
    ];

    // Contravariant basis a^rho = a^{rho sigma} a_sigma.
    let base = [a1, a2];
    let mut acon_vec = [[S::lit(0.0); 3]; 2];
    for rho in 0..2 {
        for k in 0..3 {
            acon_vec[rho][k] = a_con[rho][0] * base[0][k] + a_con[rho][1] * base[1][k];
        }
    }

    let mut b_cov = [[S::lit(0.0); 2]; 2];
    let mut gamma = [[[S::lit(0.0); 2]; 2]; 2];
    for al in 0..2 {
        for be in 0..2 {
            let d = dda(al, be);
            b_cov[al][be] = dot3(d, a3);
            for rho in 0..2 {
                gamma[rho][al][be] = dot3(d, acon_vec[rho]);
            }
        }
    }

    let mut b_mix = [[S::lit(0.0); 2]; 2];
    for al in 0..2 {
        for be in 0..2 {
            b_mix[al][be] = a_con[al][0] * b_cov[0][be] + a_con[al][1] * b_cov[1][be];
        }
    }
    let mut c_cov = [[S::lit(0.0); 2]; 2];
    for al in 0..2 {
        for be in 0..2 {
            c_cov[al][be] = b_mix[0][al] * b_cov[0][be] + b_mix[1][al] * b_cov[1][be];
        }
    }

    let (v1, v2) = v_frame_s(a3);
    let tv = [
        [v2[0], v1[0]],
        [v2[1], v1[1]],
        [v2[2], v1[2]],
    ];
    let tu = [a1, a2, a3];
    let ttheta = [a1, a2];
    let mut rot_m = [[S::lit(0.0); 2]; 2];
    for al in 0..2 {
        for b in 0..2 {
            rot_m[al][b] = ttheta[al][0] * tv[0][b]
                + ttheta[al][1] * tv[1][b]
                + ttheta[al][2] * tv[2][b];
        }
    }

    SurfaceGeometryG {
        a1,
        a2,
        a3,
        a_cov,
        a_con,
        sqrt_a,
        b_cov,
        b_mix,
        c_cov,
        gamma,
        tu,
        ttheta,
        v1,
        v2,
        tv,
        rot_m,
    }
}

/// Plain geometry at one point with domain and degeneracy checks.
pub fn build_geometry(chart: &Chart, xi: [f64; 2]) -> Result<SurfaceGeometry> {
    if !chart.domain().contains(xi) {
        return Err(Error::DomainViolation { xi1: xi[0], xi2: xi[1] });
    }
    let g = build_geometry_s::<f64>(chart, xi);
    if !(g.sqrt_a > DEGENERACY_EPS) {
        return Err(Error::DegenerateBasis { xi1: xi[0], xi2: xi[1], norm: g.sqrt_a });
    }
    Ok(g)
}

/// First derivatives of geometry quantities entering the strong form, plus
/// second derivatives of the displacement transform rows.
#[derive(Debug, Clone)]
pub struct StrongGeomDerivs {
    /// `d_a_con[al][be][s] = d a^{al be} / d xi^s`
    pub d_a_con: [[[f64; 2]; 2]; 2],
    pub d_b_cov: [[[f64; 2]; 2]; 2],
    pub d_b_mix: [[[f64; 2]; 2]; 2],
    pub d_c_cov: [[[f64; 2]; 2]; 2],
    /// `d_gamma[rho][al][be][s]`
    pub d_gamma: [[[[f64; 2]; 2]; 2]; 2],
    /// `d2_tu[i][k][al][be] = d^2 tu[i][k] / d xi^al d xi^be`
    pub d2_tu: [[[[f64; 2]; 2]; 3]; 3],
    /// `d2_rot_m[al][b][s][t]`
    pub d2_rot_m: [[[[f64; 2]; 2]; 2]; 2],
}

/// Geometry at a collocation point: plain values, first derivatives of the
/// transforms (needed by every loss), and optionally the deeper derivatives
/// needed by the strong form.
#[derive(Debug, Clone)]
pub struct GeomPoint {
    pub xi: [f64; 2],
    pub g: SurfaceGeometry,
    /// `dtu[i][k][s] = d tu[i][k] / d xi^s`
    pub dtu: [[[f64; 2]; 3]; 3],
    /// `d_rot_m[al][b][s]`
    pub d_rot_m: [[[f64; 2]; 2]; 2],
    pub strong: Option<StrongGeomDerivs>,
}

fn val_of(j: &SurfaceGeometryG<J2<f64>>) -> SurfaceGeometry {
    let v = |s: J2<f64>| s.v;
    let v3 = |a: [J2<f64>; 3]| [a[0].v, a[1].v, a[2].v];
    let m22 = |m: [[J2<f64>; 2]; 2]| [[m[0][0].v, m[0][1].v], [m[1][0].v, m[1][1].v]];
    SurfaceGeometry {
        a1: v3(j.a1),
        a2: v3(j.a2),
        a3: v3(j.a3),
        a_cov: m22(j.a_cov),
        a_con: m22(j.a_con),
        sqrt_a: v(j.sqrt_a),
        b_cov: m22(j.b_cov),
        b_mix: m22(j.b_mix),
        c_cov: m22(j.c_cov),
        gamma: [m22(j.gamma[0]), m22(j.gamma[1])],
        tu: [v3(j.tu[0]), v3(j.tu[1]), v3(j.tu[2])],
        ttheta: [v3(j.ttheta[0]), v3(j.ttheta[1])],
        v1: v3(j.v1),
        v2: v3(j.v2),
        tv: [
            [j.tv[0][0].v, j.tv[0][1].v],
            [j.tv[1][0].v, j.tv[1][1].v],
            [j.tv[2][0].v, j.tv[2][1].v],
        ],
        rot_m: m22(j.rot_m),
    }
}

/// Build the geometry record at one point, with strong-form derivatives when
/// requested.
///
/// Instantiating the geometry builder with `J2<f64>` as the scalar type makes
/// every geometric quantity carry its own first and second derivatives in the
/// reference coordinates; third chart derivatives enter automatically through
/// the jet-of-jet composition.
pub fn geom_point(chart: &Chart, xi: [f64; 2], strong: bool) -> Result<GeomPoint> {
    if !chart.domain().contains(xi) {
        return Err(Error::DomainViolation { xi1: xi[0], xi2: xi[1] });
    }
    let jg = build_geometry_s::<J2<f64>>(chart, J2::seed(xi[0], xi[1]));
    let g = val_of(&jg);
    if !(g.sqrt_a > DEGENERACY_EPS) {
        return Err(Error::DegenerateBasis { xi1: xi[0], xi2: xi[1], norm: g.sqrt_a });
    }

    let mut dtu = [[[0.0; 2]; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for s in 0..2 {
                dtu[i][k][s] = jg.tu[i][k].d1(s);
            }
        }
    }
    let mut d_rot_m = [[[0.0; 2]; 2]; 2];
    for al in 0..2 {
        for b in 0..2 {
            for s in 0..2 {
                d_rot_m[al][b][s] = jg.rot_m[al][b].d1(s);
            }
        }
    }

    let strong = if strong {
        let mut d = StrongGeomDerivs {
            d_a_con: [[[0.0; 2]; 2]; 2],
            d_b_cov: [[[0.0; 2]; 2]; 2],
            d_b_mix: [[[0.0; 2]; 2]; 2],
            d_c_cov: [[[0.0; 2]; 2]; 2],
            d_gamma: [[[[0.0; 2]; 2]; 2]; 2],
            d2_tu: [[[[0.0; 2]; 2]; 3]; 3],
            d2_rot_m: [[[[0.0; 2]; 2]; 2]; 2],
        };
        for al in 0..2 {
            for be in 0..2 {
                for s in 0..2 {
                    d.d_a_con[al][be][s] = jg.a_con[al][be].d1(s);
                    d.d_b_cov[al][be][s] = jg.b_cov[al][be].d1(s);
                    d.d_b_mix[al][be][s] = jg.b_mix[al][be].d1(s);
                    d.d_c_cov[al][be][s] = jg.c_cov[al][be].d1(s);
                    for rho in 0..2 {
                        d.d_gamma[rho][al][be][s] = jg.gamma[rho][al][be].d1(s);
                    }
                }
                for i in 0..3 {
                    for k in 0..3 {
                        d.d2_tu[i][k][al][be] = jg.tu[i][k].d2(al, be);
                    }
                }
                for s in 0..2 {
                    for t in 0..2 {
                        d.d2_rot_m[al][be][s][t] = jg.rot_m[al][be].d2(s, t);
                    }
                }
            }
        }
        Some(d)
    } else {
        None
    };

    Ok(GeomPoint { xi, g, dtu, d_rot_m, strong })
}

/// Geometry records for a whole point set, in input order (duplicates yield
/// duplicate records).
pub fn precompute_geometry(
    chart: &Chart,
    pts: &[[f64; 2]],
    strong: bool,
) -> Result<Vec<GeomPoint>> {
    pts.iter().map(|&xi| geom_point(chart, xi, strong)).collect()
}

/// Outward in-plane unit conormal of a rectangle edge, covariant components.
///
/// The reference outward normal acts as a covector; normalizing under the
/// metric gives `nu_al` with `nu_al nu_be a^{al be} = 1`, which is the unit
/// conormal orthogonal to the edge tangent.
pub fn boundary_normal(g: &SurfaceGeometry, side: Side) -> [f64; 2] {
    let n = side.ref_normal();
    let q = n[0] * n[0] * g.a_con[0][0]
        + 2.0 * n[0] * n[1] * g.a_con[0][1]
        + n[1] * n[1] * g.a_con[1][1];
    let s = q.sqrt();
    [n[0] / s, n[1] / s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plate_geometry_is_euclidean() {
        let g = build_geometry(&Chart::plate(), [0.2, -0.3]).unwrap();
        assert_eq!(g.a3, [0.0, 0.0, 1.0]);
        assert_eq!(g.sqrt_a, 1.0);
        for al in 0..2 {
            for be in 0..2 {
                let id = if al == be { 1.0 } else { 0.0 };
                assert_eq!(g.a_cov[al][be], id);
                assert_eq!(g.b_cov[al][be], 0.0);
                for rho in 0..2 {
                    assert_eq!(g.gamma[rho][al][be], 0.0);
                }
            }
        }
    }

    #[test]
    fn cylinder_center_matches_published_values() {
        let g = build_geometry(&Chart::scordelis_lo(), [0.0, 0.0]).unwrap();
        assert!((g.b_cov[0][0]).abs() < 1e-14);
        assert!((g.b_cov[0][1]).abs() < 1e-14);
        assert!((g.b_cov[1][1] - (-0.5)).abs() < 1e-14);
        assert!((g.b_mix[1][1] - (-2.0)).abs() < 1e-13);
        assert!((g.sqrt_a - 0.5).abs() < 1e-14);
    }

    #[test]
    fn hemisphere_center_curvature_is_minus_identity() {
        let g = build_geometry(&Chart::hemisphere(), [0.0, 0.0]).unwrap();
        for al in 0..2 {
            for be in 0..2 {
                let want = if al == be { -1.0 } else { 0.0 };
                assert!((g.b_cov[al][be] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn paraboloid_center_curvature() {
        let g = build_geometry(&Chart::hyperbolic_paraboloid(), [0.0, 0.0]).unwrap();
        assert!((g.b_cov[0][0] - 2.0).abs() < 1e-14);
        assert!((g.b_cov[1][1] + 2.0).abs() < 1e-14);
        assert!((g.b_cov[0][1]).abs() < 1e-14);
    }

    #[test]
    fn vframe_special_case_and_regular_case() {
        let (v1, v2) = v_frame([0.0, 0.0, 1.0]);
        assert_eq!(v1, [1.0, 0.0, 0.0]);
        assert_eq!(v2, [0.0, -1.0, 0.0]);
        // a3 = e_y triggers the special case.
        let (v1, v2) = v_frame([0.0, 1.0, 0.0]);
        assert_eq!(v1, [0.0, 0.0, 1.0]);
        assert_eq!(v2, [-1.0, 0.0, 0.0]);
        // Near-parallel still well conditioned.
        let a3n = {
            let a = [1e-8, 1.0, 0.0];
            let n = (a[0] * a[0] + a[1] * a[1]).sqrt();
            [a[0] / n, a[1] / n, a[2] / n]
        };
        let (v1, v2) = v_frame(a3n);
        for v in [v1, v2] {
            let n: f64 = v.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-10);
            let d: f64 = v.iter().zip(a3n.iter()).map(|(x, y)| x * y).sum();
            assert!(d.abs() < 1e-10);
        }
    }

    #[test]
    fn domain_violation_is_an_error() {
        let err = build_geometry(&Chart::hemisphere(), [0.8, 0.8]).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }));
    }

    #[test]
    fn strong_derivatives_match_finite_differences() {
        let chart = Chart::hyperbolic_paraboloid();
        let xi = [0.17, -0.29];
        let gp = geom_point(&chart, xi, true).unwrap();
        let d = gp.strong.as_ref().unwrap();
        let h = 1e-6;
        for s in 0..2 {
            let mut xp = xi;
            xp[s] += h;
            let mut xm = xi;
            xm[s] -= h;
            let gpp = build_geometry(&chart, xp).unwrap();
            let gpm = build_geometry(&chart, xm).unwrap();
            for al in 0..2 {
                for be in 0..2 {
                    let fd = (gpp.b_cov[al][be] - gpm.b_cov[al][be]) / (2.0 * h);
                    assert!((d.d_b_cov[al][be][s] - fd).abs() < 1e-7);
                    let fd = (gpp.a_con[al][be] - gpm.a_con[al][be]) / (2.0 * h);
                    assert!((d.d_a_con[al][be][s] - fd).abs() < 1e-6);
                    for rho in 0..2 {
                        let fd = (gpp.gamma[rho][al][be] - gpm.gamma[rho][al][be]) / (2.0 * h);
                        assert!((d.d_gamma[rho][al][be][s] - fd).abs() < 1e-6);
                    }
                }
            }
            for i in 0..3 {
                for k in 0..3 {
                    let fd = (gpp.tu[i][k] - gpm.tu[i][k]) / (2.0 * h);
                    assert!((gp.dtu[i][k][s] - fd).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn boundary_normal_is_unit_under_metric() {
        let chart = Chart::hyperbolic_paraboloid();
        for side in Side::ALL {
            let xi = match side {
                Side::X0 => [-0.5, 0.21],
                Side::X1 => [0.5, -0.4],
                Side::Y0 => [0.33, -0.5],
                Side::Y1 => [-0.1, 0.5],
            };
            let g = build_geometry(&chart, xi).unwrap();
            let nu = boundary_normal(&g, side);
            let mut q = 0.0;
            for al in 0..2 {
                for be in 0..2 {
                    q += nu[al] * nu[be] * g.a_con[al][be];
                }
            }
            assert!((q - 1.0).abs() < 1e-13);
        }
    }
}

