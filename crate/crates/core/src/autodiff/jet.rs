//! Forward-mode jets over a generic scalar type.
//!
//! `J1` carries a value and first partials with respect to the two reference
//! coordinates; `J2` additionally carries the symmetric second partials
//! (the mixed partial is stored once, so Schwarz symmetry holds by
//! construction). Instantiating the coefficient type with tape variables
//! makes every jet coefficient differentiable with respect to network
//! parameters, which is how losses built from input derivatives are trained.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{ActScalar, Scalar};

/// Hidden-layer activation choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Activation {
    Gelu,
    Tanh,
}

/// Order-1 jet: value and first partials.
#[derive(Debug, Clone, Copy)]
pub struct J1<S> {
    pub v: S,
    pub dx: S,
    pub dy: S,
}

/// Order-2 jet: value, first partials, symmetric second partials.
#[derive(Debug, Clone, Copy)]
pub struct J2<S> {
    pub v: S,
    pub dx: S,
    pub dy: S,
    pub dxx: S,
    pub dxy: S,
    pub dyy: S,
}

impl<S: Scalar> J1<S> {
    pub fn constant(v: S) -> Self {
        let z = S::lit(0.0);
        J1 { v, dx: z, dy: z }
    }

    /// First partial with respect to coordinate `beta` (0 or 1).
    #[inline]
    pub fn d(&self, beta: usize) -> S {
        match beta {
            0 => self.dx,
            _ => self.dy,
        }
    }

    fn recip(self) -> Self {
        let r = S::lit(1.0) / self.v;
        let r2 = -(r * r);
        J1 {
            v: r,
            dx: self.dx * r2,
            dy: self.dy * r2,
        }
    }
}

impl<S: Scalar> J2<S> {
    pub fn constant(v: S) -> Self {
        let z = S::lit(0.0);
        J2 {
            v,
            dx: z,
            dy: z,
            dxx: z,
            dxy: z,
            dyy: z,
        }
    }

    /// Seed the two coordinates as independent jet variables.
    pub fn seed(x: S, y: S) -> [Self; 2] {
        let z = S::lit(0.0);
        let o = S::lit(1.0);
        [
            J2 { v: x, dx: o, dy: z, dxx: z, dxy: z, dyy: z },
            J2 { v: y, dx: z, dy: o, dxx: z, dxy: z, dyy: z },
        ]
    }

    /// Drop second-order coefficients.
    pub fn first(self) -> J1<S> {
        J1 { v: self.v, dx: self.dx, dy: self.dy }
    }

    /// Reinterpret as a first-order jet whose coefficients are first-order
    /// jets: `{v,dx,dy}` each carrying its own partials. This is the exact
    /// isomorphism used to push strain algebra one derivative deeper.
    pub fn nest(self) -> J1<J1<S>> {
        J1 {
            v: J1 { v: self.v, dx: self.dx, dy: self.dy },
            dx: J1 { v: self.dx, dx: self.dxx, dy: self.dxy },
            dy: J1 { v: self.dy, dx: self.dxy, dy: self.dyy },
        }
    }

    #[inline]
    pub fn d1(&self, beta: usize) -> S {
        match beta {
            0 => self.dx,
            _ => self.dy,
        }
    }

    #[inline]
    pub fn d2(&self, alpha: usize, beta: usize) -> S {
        match (alpha, beta) {
            (0, 0) => self.dxx,
            (1, 1) => self.dyy,
            _ => self.dxy,
        }
    }

    fn recip(self) -> Self {
        let one = S::lit(1.0);
        let r = one / self.v;
        let r2 = r * r;
        let r3 = r2 * r;
        let two = S::lit(2.0);
        J2 {
            v: r,
            dx: -(self.dx * r2),
            dy: -(self.dy * r2),
            dxx: two * self.dx * self.dx * r3 - self.dxx * r2,
            dxy: two * self.dx * self.dy * r3 - self.dxy * r2,
            dyy: two * self.dy * self.dy * r3 - self.dyy * r2,
        }
    }
}

impl<S: Scalar> J1<S> {
    /// Seed the two coordinates as independent jet variables.
    pub fn seed(x: S, y: S) -> [Self; 2] {
        let z = S::lit(0.0);
        let o = S::lit(1.0);
        [J1 { v: x, dx: o, dy: z }, J1 { v: y, dx: z, dy: o }]
    }
}

impl<S: Scalar> Add for J1<S> {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        J1 { v: self.v + r.v, dx: self.dx + r.dx, dy: self.dy + r.dy }
    }
}

impl<S: Scalar> Sub for J1<S> {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        J1 { v: self.v - r.v, dx: self.dx - r.dx, dy: self.dy - r.dy }
    }
}

impl<S: Scalar> Neg for J1<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        J1 { v: -self.v, dx: -self.dx, dy: -self.dy }
    }
}

impl<S: Scalar> Mul for J1<S> {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        J1 {
            v: self.v * r.v,
            dx: self.dx * r.v + self.v * r.dx,
            dy: self.dy * r.v + self.v * r.dy,
        }
    }
}

impl<S: Scalar> Div for J1<S> {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        self * r.recip()
    }
}

impl<S: Scalar> Add for J2<S> {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        J2 {
            v: self.v + r.v,
            dx: self.dx + r.dx,
            dy: self.dy + r.dy,
            dxx: self.dxx + r.dxx,
            dxy: self.dxy + r.dxy,
            dyy: self.dyy + r.dyy,
        }
    }
}

impl<S: Scalar> Sub for J2<S> {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        J2 {
            v: self.v - r.v,
            dx: self.dx - r.dx,
            dy: self.dy - r.dy,
            dxx: self.dxx - r.dxx,
            dxy: self.dxy - r.dxy,
            dyy: self.dyy - r.dyy,
        }
    }
}

impl<S: Scalar> Neg for J2<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        J2 {
            v: -self.v,
            dx: -self.dx,
            dy: -self.dy,
            dxx: -self.dxx,
            dxy: -self.dxy,
            dyy: -self.dyy,
        }
    }
}

impl<S: Scalar> Mul for J2<S> {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        let pxx = self.dx * r.dx;
        let pyy = self.dy * r.dy;
        J2 {
            v: self.v * r.v,
            dx: self.dx * r.v + self.v * r.dx,
            dy: self.dy * r.v + self.v * r.dy,
            dxx: self.dxx * r.v + pxx + pxx + self.v * r.dxx,
            dxy: self.dxy * r.v + self.dx * r.dy + self.dy * r.dx + self.v * r.dxy,
            dyy: self.dyy * r.v + pyy + pyy + self.v * r.dyy,
        }
    }
}

impl<S: Scalar> Div for J2<S> {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        self * r.recip()
    }
}

impl<S: Scalar> Scalar for J1<S> {
    #[inline]
    fn lit(x: f64) -> Self {
        J1::constant(S::lit(x))
    }
    #[inline]
    fn value(self) -> f64 {
        self.v.value()
    }

    fn sin(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        J1 { v: s, dx: self.dx * c, dy: self.dy * c }
    }

    fn cos(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        J1 { v: c, dx: -(self.dx * s), dy: -(self.dy * s) }
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let i = S::lit(0.5) / s;
        J1 { v: s, dx: self.dx * i, dy: self.dy * i }
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        J1 { v: e, dx: self.dx * e, dy: self.dy * e }
    }
}

impl<S: Scalar> Scalar for J2<S> {
    #[inline]
    fn lit(x: f64) -> Self {
        J2::constant(S::lit(x))
    }
    #[inline]
    fn value(self) -> f64 {
        self.v.value()
    }

    fn sin(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        J2 {
            v: s,
            dx: self.dx * c,
            dy: self.dy * c,
            dxx: self.dxx * c - self.dx * self.dx * s,
            dxy: self.dxy * c - self.dx * self.dy * s,
            dyy: self.dyy * c - self.dy * self.dy * s,
        }
    }

    fn cos(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        J2 {
            v: c,
            dx: -(self.dx * s),
            dy: -(self.dy * s),
            dxx: -(self.dxx * s) - self.dx * self.dx * c,
            dxy: -(self.dxy * s) - self.dx * self.dy * c,
            dyy: -(self.dyy * s) - self.dy * self.dy * c,
        }
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let i = S::lit(0.5) / s;
        // f'' = g''/(2f) - g'^2/(4 f^3); 1/(4 f^3) = i*i/f.
        let j = i * i / s;
        J2 {
            v: s,
            dx: self.dx * i,
            dy: self.dy * i,
            dxx: self.dxx * i - self.dx * self.dx * j,
            dxy: self.dxy * i - self.dx * self.dy * j,
            dyy: self.dyy * i - self.dy * self.dy * j,
        }
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        J2 {
            v: e,
            dx: self.dx * e,
            dy: self.dy * e,
            dxx: (self.dxx + self.dx * self.dx) * e,
            dxy: (self.dxy + self.dx * self.dy) * e,
            dyy: (self.dyy + self.dy * self.dy) * e,
        }
    }
}

/// Jet types a network can be evaluated on: seeding, lifting of parameters
/// and precomputed coefficient jets, fused affine combination, activations.
pub trait InputJet<S: ActScalar>: Copy {
    fn seed_point(xi: [f64; 2]) -> [Self; 2];
    fn lift(s: S) -> Self;
    /// Lift a precomputed plain-number jet (trial-function factors), keeping
    /// only the coefficients this jet order carries.
    fn lift_jet(j: J2<f64>) -> Self;
    /// `bias + sum_i w_i * xs_i`, fused per jet coefficient.
    fn matvec_entry(w: &[S], xs: &[Self], bias: S) -> Self;
    fn activate(self, act: Activation) -> Self;
    fn sigmoid(self) -> Self;
    fn mul_jet(self, r: Self) -> Self;
    fn value(self) -> f64;
}

impl<S: ActScalar> InputJet<S> for J1<S> {
    fn seed_point(xi: [f64; 2]) -> [Self; 2] {
        J1::seed(S::lit(xi[0]), S::lit(xi[1]))
    }

    fn lift(s: S) -> Self {
        J1::constant(s)
    }

    fn lift_jet(j: J2<f64>) -> Self {
        J1 { v: S::lit(j.v), dx: S::lit(j.dx), dy: S::lit(j.dy) }
    }

    fn matvec_entry(w: &[S], xs: &[Self], bias: S) -> Self {
        let z = S::lit(0.0);
        J1 {
            v: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.v)), bias),
            dx: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.dx)), z),
            dy: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.dy)), z),
        }
    }

    fn activate(self, act: Activation) -> Self {
        let (g, g1) = match act {
            Activation::Gelu => {
                let (g, g1, _) = self.v.gelu_d012();
                (g, g1)
            }
            Activation::Tanh => {
                let (g, g1, _) = self.v.tanh_d012();
                (g, g1)
            }
        };
        J1 { v: g, dx: self.dx * g1, dy: self.dy * g1 }
    }

    fn sigmoid(self) -> Self {
        let (s, s1, _) = self.v.sigmoid_d012();
        J1 { v: s, dx: self.dx * s1, dy: self.dy * s1 }
    }

    fn mul_jet(self, r: Self) -> Self {
        self * r
    }

    fn value(self) -> f64 {
        self.v.value()
    }
}

impl<S: ActScalar> InputJet<S> for J2<S> {
    fn seed_point(xi: [f64; 2]) -> [Self; 2] {
        J2::seed(S::lit(xi[0]), S::lit(xi[1]))
    }

    fn lift(s: S) -> Self {
        J2::constant(s)
    }

    fn lift_jet(j: J2<f64>) -> Self {
        J2 {
            v: S::lit(j.v),
            dx: S::lit(j.dx),
            dy: S::lit(j.dy),
            dxx: S::lit(j.dxx),
            dxy: S::lit(j.dxy),
            dyy: S::lit(j.dyy),
        }
    }

    fn matvec_entry(w: &[S], xs: &[Self], bias: S) -> Self {
        let z = S::lit(0.0);
        J2 {
            v: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.v)), bias),
            dx: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.dx)), z),
            dy: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.dy)), z),
            dxx: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.dxx)), z),
            dxy: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.dxy)), z),
            dyy: S::dot(w.iter().zip(xs).map(|(wi, x)| (*wi, x.dyy)), z),
        }
    }

    fn activate(self, act: Activation) -> Self {
        let (g, g1, g2) = match act {
            Activation::Gelu => self.v.gelu_d012(),
            Activation::Tanh => self.v.tanh_d012(),
        };
        J2 {
            v: g,
            dx: self.dx * g1,
            dy: self.dy * g1,
            dxx: g2 * self.dx * self.dx + g1 * self.dxx,
            dxy: g2 * self.dx * self.dy + g1 * self.dxy,
            dyy: g2 * self.dy * self.dy + g1 * self.dyy,
        }
    }

    fn sigmoid(self) -> Self {
        let (s, s1, s2) = self.v.sigmoid_d012();
        J2 {
            v: s,
            dx: self.dx * s1,
            dy: self.dy * s1,
            dxx: s2 * self.dx * self.dx + s1 * self.dxx,
            dxy: s2 * self.dx * self.dy + s1 * self.dxy,
            dyy: s2 * self.dy * self.dy + s1 * self.dyy,
        }
    }

    fn mul_jet(self, r: Self) -> Self {
        self * r
    }

    fn value(self) -> f64 {
        self.v.value()
    }
}
