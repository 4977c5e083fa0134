//! Midsurface charts: smooth maps from a planar reference domain into R^3.

use serde::{Deserialize, Serialize};

use crate::autodiff::{C2Map, Scalar, J1, J2};

/// Planar reference domain of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RefDomain {
    /// `[x0, x1] x [y0, y1]`.
    Rect { x: [f64; 2], y: [f64; 2] },
    /// Open unit disc; usable interior is shrunk to `|xi| <= 1 - 1e-6`.
    UnitDisc,
}

/// Interior shrink applied to disc samples so the hemisphere chart stays
/// differentiable (the rim is a chart singularity).
pub const DISC_SHRINK: f64 = 1.0 - 1e-6;

impl RefDomain {
    pub fn contains(&self, xi: [f64; 2]) -> bool {
        match self {
            RefDomain::Rect { x, y } => {
                xi[0] >= x[0] && xi[0] <= x[1] && xi[1] >= y[0] && xi[1] <= y[1]
            }
            RefDomain::UnitDisc => xi[0] * xi[0] + xi[1] * xi[1] <= DISC_SHRINK * DISC_SHRINK,
        }
    }

    /// Reference-domain area `|omega|` used as the Monte Carlo quadrature weight.
    pub fn area(&self) -> f64 {
        match self {
            RefDomain::Rect { x, y } => (x[1] - x[0]) * (y[1] - y[0]),
            RefDomain::UnitDisc => std::f64::consts::PI,
        }
    }

    pub fn is_disc(&self) -> bool {
        matches!(self, RefDomain::UnitDisc)
    }
}

/// One straight edge of a rectangular reference domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `xi1 = x0`
    X0,
    /// `xi1 = x1`
    X1,
    /// `xi2 = y0`
    Y0,
    /// `xi2 = y1`
    Y1,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::X0, Side::X1, Side::Y0, Side::Y1];

    /// Outward normal of the reference rectangle (as a covector).
    pub fn ref_normal(self) -> [f64; 2] {
        match self {
            Side::X0 => [-1.0, 0.0],
            Side::X1 => [1.0, 0.0],
            Side::Y0 => [0.0, -1.0],
            Side::Y1 => [0.0, 1.0],
        }
    }
}

/// Built-in chart families. All are smooth on their domains; closed-form
/// chart derivatives exist only in the test oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    /// `(x, y, 0)` on `[-half, half]^2`.
    FlatPlate { half: f64 },
    /// `(x, y, 0)` on the unit disc.
    FlatDisc,
    /// `(x, y, cx x^2 - cy y^2)` on `[-half, half]^2`.
    HyperbolicParaboloid { half: f64, cx: f64, cy: f64 },
    /// `(x, r sin y, r cos y)` on `[-half_len, half_len] x [-half_angle, half_angle]`.
    CylinderPanel { radius: f64, half_len: f64, half_angle: f64 },
    /// `R (x, y, sqrt(1 - x^2 - y^2))` on the unit disc.
    Hemisphere { radius: f64 },
}

impl Chart {
    pub fn plate() -> Self {
        Chart::FlatPlate { half: 0.5 }
    }

    pub fn disc_plate() -> Self {
        Chart::FlatDisc
    }

    pub fn hyperbolic_paraboloid() -> Self {
        Chart::HyperbolicParaboloid { half: 0.5, cx: 1.0, cy: 1.0 }
    }

    /// Scordelis-Lo style cylindrical panel with 40 degree half-opening.
    pub fn scordelis_lo() -> Self {
        Chart::CylinderPanel {
            radius: 0.5,
            half_len: 0.5,
            half_angle: 2.0 * std::f64::consts::PI / 9.0,
        }
    }

    pub fn hemisphere() -> Self {
        Chart::Hemisphere { radius: 1.0 }
    }

    pub fn domain(&self) -> RefDomain {
        match *self {
            Chart::FlatPlate { half } | Chart::HyperbolicParaboloid { half, .. } => {
                RefDomain::Rect { x: [-half, half], y: [-half, half] }
            }
            Chart::CylinderPanel { half_len, half_angle, .. } => {
                RefDomain::Rect { x: [-half_len, half_len], y: [-half_angle, half_angle] }
            }
            Chart::FlatDisc | Chart::Hemisphere { .. } => RefDomain::UnitDisc,
        }
    }

    /// Evaluate the chart on any scalar type (plain numbers or jets).
    pub fn eval<S: Scalar>(&self, xi: [S; 2]) -> [S; 3] {
        let [x, y] = xi;
        match *self {
            Chart::FlatPlate { .. } | Chart::FlatDisc => [x, y, S::lit(0.0)],
            Chart::HyperbolicParaboloid { cx, cy, .. } => {
                [x, y, S::lit(cx) * x * x - S::lit(cy) * y * y]
            }
            Chart::CylinderPanel { radius, .. } => {
                let r = S::lit(radius);
                [x, r * y.sin(), r * y.cos()]
            }
            Chart::Hemisphere { radius } => {
                let r = S::lit(radius);
                let w = (S::lit(1.0) - x * x - y * y).sqrt();
                [r * x, r * y, r * w]
            }
        }
    }
}

impl C2Map for Chart {
    fn out_dim(&self) -> usize {
        3
    }
    fn eval_j1(&self, xi: [f64; 2]) -> Vec<J1<f64>> {
        let [x, y] = J1::seed(xi[0], xi[1]);
        self.eval([x, y]).to_vec()
    }
    fn eval_j2(&self, xi: [f64; 2]) -> Vec<J2<f64>> {
        let [x, y] = J2::seed(xi[0], xi[1]);
        self.eval([x, y]).to_vec()
    }
}
