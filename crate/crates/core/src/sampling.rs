//! Collocation point generation: Sobol low-discrepancy sequences, mapping to
//! the reference domain (including the low-distortion square-to-disc map),
//! and boundary sampling with attached conormals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{boundary_normal, build_geometry, Chart, RefDomain, Side, DISC_SHRINK};

/// Interior point source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sampler {
    Sobol,
    UniformRandom { seed: u64 },
}

/// A boundary collocation point with its covariant unit conormal.
#[derive(Debug, Clone)]
pub struct BoundarySample {
    pub xi: [f64; 2],
    pub nu: [f64; 2],
    pub side: Side,
}

/// All collocation data for one training run.
#[derive(Debug, Clone, Default)]
pub struct PointSet {
    pub interior: Vec<[f64; 2]>,
    pub boundary_neumann: Vec<BoundarySample>,
    pub boundary_dirichlet: Vec<BoundarySample>,
}

/// How many points to draw and where.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n_collocation: usize,
    /// Per free edge.
    pub n_boundary_neumann: usize,
    /// Per constrained edge (zero when the trial function lifts Dirichlet data).
    pub n_boundary_dirichlet: usize,
    pub sampler: Sampler,
    pub neumann_sides: Vec<Side>,
    pub dirichlet_sides: Vec<Side>,
}

/// Direction integers for the first two standard Sobol dimensions
/// (dimension 1: van der Corput; dimension 2: primitive polynomial x+1,
/// initial direction number m_1 = 1).
struct SobolDirections {
    v: [Vec<u32>; 2],
}

const SOBOL_BITS: usize = 32;

impl SobolDirections {
    fn new() -> Self {
        let mut v0 = Vec::with_capacity(SOBOL_BITS);
        for k in 0..SOBOL_BITS {
            v0.push(1u32 << (31 - k));
        }
        // m_k = m_{k-1} xor 2 m_{k-1}, starting from m_1 = 1.
        let mut m = Vec::with_capacity(SOBOL_BITS);
        m.push(1u64);
        for k in 1..SOBOL_BITS {
            let prev = m[k - 1];
            m.push(prev ^ (prev << 1));
        }
        let mut v1 = Vec::with_capacity(SOBOL_BITS);
        for (k, &mk) in m.iter().enumerate() {
            v1.push((mk << (31 - k)) as u32);
        }
        SobolDirections { v: [v0, v1] }
    }
}

/// Gray-code Sobol points in the open square, the all-zeros element skipped.
/// `start` offsets into the sequence (in points) for resampling rounds.
fn sobol_raw(n: usize, start: u64) -> Vec<[f64; 2]> {
    let dirs = SobolDirections::new();
    let mut x = [0u32; 2];
    // Advance the Gray-code state to index `start` (state after point i has
    // consumed indices 1..=i).
    for i in 1..=start {
        let c = i.trailing_zeros() as usize;
        x[0] ^= dirs.v[0][c];
        x[1] ^= dirs.v[1][c];
    }
    let scale = 1.0 / (1u64 << 32) as f64;
    let mut out = Vec::with_capacity(n);
    for i in (start + 1)..=(start + n as u64) {
        let c = i.trailing_zeros() as usize;
        x[0] ^= dirs.v[0][c];
        x[1] ^= dirs.v[1][c];
        out.push([x[0] as f64 * scale, x[1] as f64 * scale]);
    }
    out
}

/// Standard 2-D Sobol sequence, origin skipped.
pub fn sobol(n: usize) -> Vec<[f64; 2]> {
    sobol_raw(n, 0)
}

/// 1-D van der Corput (Sobol dimension 1) sequence, origin skipped. All
/// values are dyadic rationals strictly inside (0, 1).
pub fn sobol_1d(n: usize, start: u64) -> Vec<f64> {
    sobol_raw(n, start).into_iter().map(|p| p[0]).collect()
}

/// Low-distortion concentric square-to-disc map on [0,1]^2. Equal-area, so
/// uniform square samples stay uniform on the disc.
pub fn concentric_square_to_disc(p: [f64; 2]) -> [f64; 2] {
    let a = 2.0 * p[0] - 1.0;
    let b = 2.0 * p[1] - 1.0;
    if a == 0.0 && b == 0.0 {
        return [0.0, 0.0];
    }
    let (r, phi) = if a.abs() > b.abs() {
        (a, std::f64::consts::FRAC_PI_4 * (b / a))
    } else {
        (b, std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_4 * (a / b))
    };
    [r * phi.cos(), r * phi.sin()]
}

/// Map unit-square points onto the reference domain. Pure coordinate
/// transform; the interior disc shrink is applied by the point-set builder.
pub fn map_to_domain(points: &[[f64; 2]], domain: &RefDomain) -> Vec<[f64; 2]> {
    match domain {
        RefDomain::Rect { x, y } => points
            .iter()
            .map(|p| [x[0] + p[0] * (x[1] - x[0]), y[0] + p[1] * (y[1] - y[0])])
            .collect(),
        RefDomain::UnitDisc => points.iter().map(|p| concentric_square_to_disc(*p)).collect(),
    }
}

fn interior_points(domain: &RefDomain, n: usize, sampler: Sampler, round: u64) -> Vec<[f64; 2]> {
    let square: Vec<[f64; 2]> = match sampler {
        Sampler::Sobol => sobol_raw(n, round * n as u64),
        Sampler::UniformRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
        }
    };
    let mut pts = map_to_domain(&square, domain);
    if domain.is_disc() {
        for p in &mut pts {
            p[0] *= DISC_SHRINK;
            p[1] *= DISC_SHRINK;
        }
    }
    pts
}

/// Sobol points along one rectangle edge, corners excluded (dyadic interior
/// values), each with the metric-unit outward conormal.
pub fn sample_boundary(chart: &Chart, side: Side, n: usize, round: u64) -> Result<Vec<BoundarySample>> {
    let (x, y) = match chart.domain() {
        RefDomain::Rect { x, y } => (x, y),
        RefDomain::UnitDisc => {
            return Err(Error::Unsupported {
                detail: "boundary sampling on the disc domain (disc Dirichlet data is lifted by the trial function; no free disc edges exist)".into(),
            })
        }
    };
    let ts = sobol_1d(n, round * n as u64);
    let mut out = Vec::with_capacity(n);
    for t in ts {
        let xi = match side {
            Side::X0 => [x[0], y[0] + t * (y[1] - y[0])],
            Side::X1 => [x[1], y[0] + t * (y[1] - y[0])],
            Side::Y0 => [x[0] + t * (x[1] - x[0]), y[0]],
            Side::Y1 => [x[0] + t * (x[1] - x[0]), y[1]],
        };
        let g = build_geometry(chart, xi)?;
        out.push(BoundarySample { xi, nu: boundary_normal(&g, side), side });
    }
    Ok(out)
}

/// Assemble the full collocation set for a run. `round` advances the
/// sequences for optional per-epoch resampling; round 0 is the default set.
pub fn build_point_set(chart: &Chart, plan: &SamplingPlan, round: u64) -> Result<PointSet> {
    let domain = chart.domain();
    let interior = interior_points(&domain, plan.n_collocation, plan.sampler, round);
    let mut boundary_neumann = Vec::new();
    for &side in &plan.neumann_sides {
        boundary_neumann.extend(sample_boundary(chart, side, plan.n_boundary_neumann, round)?);
    }
    let mut boundary_dirichlet = Vec::new();
    if plan.n_boundary_dirichlet > 0 {
        for &side in &plan.dirichlet_sides {
            boundary_dirichlet.extend(sample_boundary(chart, side, plan.n_boundary_dirichlet, round)?);
        }
    }
    Ok(PointSet { interior, boundary_neumann, boundary_dirichlet })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_three_sobol_points_match_direction_number_arithmetic() {
        let pts = sobol(3);
        assert_eq!(pts[0], [0.5, 0.5]);
        assert_eq!(pts[1], [0.75, 0.25]);
        assert_eq!(pts[2], [0.25, 0.75]);
    }

    #[test]
    fn sobol_points_are_distinct_and_deterministic() {
        let pts = sobol(1024);
        let again = sobol(1024);
        assert_eq!(pts, again);
        let mut seen: Vec<[u64; 2]> = pts
            .iter()
            .map(|p| [p[0].to_bits(), p[1].to_bits()])
            .collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 1024);
    }

    #[test]
    fn sobol_offset_continues_the_sequence() {
        let all = sobol(32);
        let tail = sobol_raw(16, 16);
        assert_eq!(&all[16..], &tail[..]);
    }

    /// Coarse star-discrepancy estimate over anchored boxes.
    fn star_discrepancy(points: &[[f64; 2]], grid: usize) -> f64 {
        let n = points.len() as f64;
        let mut worst: f64 = 0.0;
        for i in 1..=grid {
            let x = i as f64 / grid as f64;
            for j in 1..=grid {
                let y = j as f64 / grid as f64;
                let count = points.iter().filter(|p| p[0] < x && p[1] < y).count() as f64;
                worst = worst.max((count / n - x * y).abs());
            }
        }
        worst
    }

    #[test]
    fn sobol_beats_uniform_random_discrepancy() {
        let d_sobol = star_discrepancy(&sobol(1024), 64);
        let mut d_rand: Vec<f64> = (0..20u64)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pts: Vec<[f64; 2]> =
                    (0..1024).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
                star_discrepancy(&pts, 64)
            })
            .collect();
        d_rand.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = d_rand[10];
        assert!(
            d_sobol < median,
            "sobol {d_sobol} not below random median {median}"
        );
    }

    #[test]
    fn concentric_map_hits_pinned_values() {
        assert_eq!(concentric_square_to_disc([0.5, 0.5]), [0.0, 0.0]);
        let p = concentric_square_to_disc([1.0, 0.5]);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        // Every mapped point stays in the closed disc.
        for q in sobol(512) {
            let m = concentric_square_to_disc(q);
            assert!(m[0] * m[0] + m[1] * m[1] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn rect_map_centers_and_bounds() {
        let dom = RefDomain::Rect { x: [-0.5, 0.5], y: [-0.5, 0.5] };
        let m = map_to_domain(&[[0.5, 0.5]], &dom);
        assert_eq!(m[0], [0.0, 0.0]);
        let dom2 = RefDomain::Rect {
            x: [-0.5, 0.5],
            y: [-2.0 * std::f64::consts::PI / 9.0, 2.0 * std::f64::consts::PI / 9.0],
        };
        for p in map_to_domain(&sobol(256), &dom2) {
            assert!(dom2.contains(p));
        }
    }

    #[test]
    fn disc_interior_points_respect_the_shrink_rule() {
        let plan = SamplingPlan {
            n_collocation: 2048,
            n_boundary_neumann: 0,
            n_boundary_dirichlet: 0,
            sampler: Sampler::Sobol,
            neumann_sides: vec![],
            dirichlet_sides: vec![],
        };
        let ps = build_point_set(&Chart::hemisphere(), &plan, 0).unwrap();
        assert_eq!(ps.interior.len(), 2048);
        for p in &ps.interior {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(r <= DISC_SHRINK + 1e-15, "radius {r}");
        }
        // Uniform sampler obeys the same rule.
        let plan_u = SamplingPlan { sampler: Sampler::UniformRandom { seed: 9 }, ..plan };
        for p in build_point_set(&Chart::hemisphere(), &plan_u, 0).unwrap().interior {
            assert!((p[0] * p[0] + p[1] * p[1]).sqrt() <= DISC_SHRINK + 1e-15);
        }
    }

    #[test]
    fn boundary_samples_sit_on_the_edge_with_metric_unit_normals() {
        let chart = Chart::scordelis_lo();
        let samples = sample_boundary(&chart, Side::Y1, 64, 0).unwrap();
        assert_eq!(samples.len(), 64);
        let dom = chart.domain();
        let RefDomain::Rect { x, y } = dom else { panic!() };
        for s in &samples {
            assert_eq!(s.xi[1], y[1]);
            assert!(s.xi[0] > x[0] && s.xi[0] < x[1], "corner not excluded: {:?}", s.xi);
            let g = build_geometry(&chart, s.xi).unwrap();
            let mut norm2 = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    norm2 += g.a_con[a][b] * s.nu[a] * s.nu[b];
                }
            }
            assert!((norm2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_coordinate_is_exact_for_vertical_edges() {
        let chart = Chart::hyperbolic_paraboloid();
        for s in sample_boundary(&chart, Side::X0, 8, 0).unwrap() {
            assert_eq!(s.xi[0], -0.5);
        }
    }

    #[test]
    fn disc_boundary_sampling_is_rejected() {
        let err = sample_boundary(&Chart::hemisphere(), Side::X0, 4, 0).unwrap_err();
        assert!(matches!(err, Error::Unsupported { .. }));
    }

    #[test]
    fn point_set_is_bitwise_deterministic() {
        let plan = SamplingPlan {
            n_collocation: 512,
            n_boundary_neumann: 32,
            n_boundary_dirichlet: 0,
            sampler: Sampler::Sobol,
            neumann_sides: vec![Side::X1, Side::Y0, Side::Y1],
            dirichlet_sides: vec![Side::X0],
        };
        let chart = Chart::hyperbolic_paraboloid();
        let a = build_point_set(&chart, &plan, 0).unwrap();
        let b = build_point_set(&chart, &plan, 0).unwrap();
        assert_eq!(a.interior, b.interior);
        assert_eq!(a.boundary_neumann.len(), 3 * 32);
        for (x, y) in a.boundary_neumann.iter().zip(&b.boundary_neumann) {
            assert_eq!(x.xi, y.xi);
            assert_eq!(x.nu, y.nu);
        }
        // A later round yields different interior points.
        let c = build_point_set(&chart, &plan, 1).unwrap();
        assert_ne!(a.interior, c.interior);
    }
}
