//! Forward-mode automatic differentiation scalars.
//!
//! `Dual<T>` nests: `Dual<f64>` carries one derivative, `Dual<Dual<f64>>`
//! carries mixed second derivatives, and deeper nestings arise when
//! differentiating through compositions (e.g. pullback metrics need the
//! parametrization differentiated inside a metric derivative).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Field of scalars the closed-form metrics and parametrizations are
/// written over. Implemented by `f64` and by `Dual<T>` for any `T: Scalar`.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Innermost primal value (strips all dual parts).
    fn val(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn val(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Dual number a + b*eps with eps^2 = 0, over an arbitrary scalar base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, im: T) -> Self {
        Dual { re, im }
    }
    /// Constant: zero derivative part.
    pub fn constant(re: T) -> Self {
        Dual {
            re,
            im: T::zero(),
        }
    }
    /// Seeded variable: unit derivative part.
    pub fn variable(re: T) -> Self {
        Dual { re, im: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.im + o.im)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.im - o.im)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.im + self.im * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        Dual::new(
            self.re * inv,
            (self.im * o.re - self.re * o.im) * inv * inv,
        )
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.im)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    fn val(self) -> f64 {
        self.re.val()
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.im * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.im * self.re.sin()))
    }
    fn sinh(self) -> Self {
        Dual::new(self.re.sinh(), self.im * self.re.cosh())
    }
    fn cosh(self) -> Self {
        Dual::new(self.re.cosh(), self.im * self.re.sinh())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::new(t, self.im * (T::one() - t * t))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.im * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.im / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.im / (s.scale(2.0)))
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        Dual::new(
            self.re.powi(n),
            self.im * self.re.powi(n - 1).scale(n as f64),
        )
    }
}

/// Second-order nesting used for metric Hessians.
pub type Dual2 = Dual<Dual<f64>>;

/// Seed `p` with a first-order perturbation in coordinate `dir`.
pub fn seed1(p: &[f64], dir: usize) -> Vec<Dual<f64>> {
    p.iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == dir {
                Dual::variable(x)
            } else {
                Dual::constant(x)
            }
        })
        .collect()
}

/// Seed `p` for a mixed second derivative: outer dual in `a`, inner in `b`.
pub fn seed2(p: &[f64], a: usize, b: usize) -> Vec<Dual2> {
    p.iter()
        .enumerate()
        .map(|(i, &x)| {
            let inner = if i == b {
                Dual::variable(x)
            } else {
                Dual::constant(x)
            };
            if i == a {
                Dual::new(inner, Dual::<f64>::one())
            } else {
                Dual::constant(inner)
            }
        })
        .collect()
}
