use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar second-order jet: value plus first and second derivative along one
/// direction. Evaluating a closed-form expression on jets yields its exact
/// directional derivatives, which is how the benchmark problems verify that
/// their source terms really are the Laplacian of the stated solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub val: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet2 {
    pub fn constant(val: f64) -> Self {
        Self { val, d: 0.0, dd: 0.0 }
    }

    /// Seed for the differentiation variable: derivative one, curvature zero.
    pub fn variable(val: f64) -> Self {
        Self { val, d: 1.0, dd: 0.0 }
    }

    /// Chain rule through a scalar function with known derivatives at `val`.
    fn lift(self, f: f64, df: f64, ddf: f64) -> Self {
        Self {
            val: f,
            d: df * self.d,
            dd: ddf * self.d * self.d + df * self.dd,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.lift(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.lift(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.val.exp();
        self.lift(e, e, e)
    }

    pub fn ln(self) -> Self {
        let v = self.val;
        self.lift(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        self.lift(r, 0.5 / r, -0.25 / (r * r * r))
    }

    pub fn powi(self, n: i32) -> Self {
        let v = self.val;
        self.lift(
            v.powi(n),
            n as f64 * v.powi(n - 1),
            (n as f64) * (n as f64 - 1.0) * v.powi(n - 2),
        )
    }

    /// Polar angle atan2(y, x) with both arguments carrying derivatives.
    pub fn atan2(y: Jet2, x: Jet2) -> Self {
        let num = x.val * y.d - y.val * x.d;
        let den = x.val * x.val + y.val * y.val;
        let dnum = x.val * y.dd - y.val * x.dd;
        let dden = 2.0 * (x.val * x.d + y.val * y.d);
        Self {
            val: y.val.atan2(x.val),
            d: num / den,
            dd: (dnum * den - num * dden) / (den * den),
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 { val: self.val + o.val, d: self.d + o.d, dd: self.dd + o.dd }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 { val: self.val - o.val, d: self.d - o.d, dd: self.dd - o.dd }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            val: self.val * o.val,
            d: self.d * o.val + self.val * o.d,
            dd: self.dd * o.val + 2.0 * self.d * o.d + self.val * o.dd,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        let inv = Jet2 {
            val: 1.0 / o.val,
            d: -o.d / (o.val * o.val),
            dd: (2.0 * o.d * o.d - o.val * o.dd) / (o.val * o.val * o.val),
        };
        self * inv
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 { val: -self.val, d: -self.d, dd: -self.dd }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        Jet2 { val: self.val * c, d: self.d * c, dd: self.dd * c }
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, c: f64) -> Jet2 {
        Jet2 { val: self.val + c, ..self }
    }
}
