use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// First-order dual number `re + eps·ε` with `ε² = 0`.
///
/// The components are themselves [`Scalar`]s, so `Dual<Dual<f64>>` carries
/// second derivatives and `Dual<Dual<Dual<f64>>>` third derivatives. The real
/// part is always computed with exactly the operations the plain `f64` path
/// uses, so evaluation at zero tangent reproduces plain values bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    #[inline]
    pub fn constant(re: T) -> Self {
        Self {
            re,
            eps: T::from_f64(0.0),
        }
    }

    /// Independent variable with unit tangent.
    #[inline]
    pub fn variable(re: T) -> Self {
        Self {
            re,
            eps: T::from_f64(1.0),
        }
    }

    #[inline]
    fn chain(self, value: T, deriv: T) -> Self {
        Self {
            re: value,
            eps: self.eps * deriv,
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.re * rhs.re, self.eps * rhs.re + self.re * rhs.eps)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.re / rhs.re;
        Self::new(q, (self.eps - q * rhs.eps) / rhs.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Self::constant(T::from_f64(v))
    }

    #[inline]
    fn re(&self) -> f64 {
        self.re.re()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn ln(self) -> Self {
        let d = T::from_f64(1.0) / self.re;
        self.chain(self.re.ln(), d)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, T::from_f64(1.0) - t * t)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::from_f64(0.5) / s)
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::from_f64(1.0),
            1 => self,
            _ => {
                let d = self.re.powi(n - 1).scale(n as f64);
                self.chain(self.re.powi(n), d)
            }
        }
    }

    fn powf(self, p: f64) -> Self {
        let d = self.re.powf(p - 1.0).scale(p);
        self.chain(self.re.powf(p), d)
    }
}
