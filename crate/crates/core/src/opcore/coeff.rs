//! Exact Gaussian-rational coefficients.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

/// A complex number `re + i·im` with rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Coeff {
    pub re: Rational,
    pub im: Rational,
}

impl Coeff {
    pub fn new(re: Rational, im: Rational) -> Self {
        Coeff { re, im }
    }

    pub fn int(n: i128) -> Self {
        Coeff::new(Rational::from_integer(n), Rational::zero())
    }

    pub fn ratio(num: i128, den: i128) -> Self {
        Coeff::new(Rational::new(num, den), Rational::zero())
    }

    pub fn real(r: Rational) -> Self {
        Coeff::new(r, Rational::zero())
    }

    pub fn i() -> Self {
        Coeff::new(Rational::zero(), Rational::one())
    }

    pub fn zero() -> Self {
        Coeff::default()
    }

    pub fn one() -> Self {
        Coeff::int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Coeff::new(self.re, -self.im)
    }

    /// Multiplies by `i^p`.
    pub fn times_i_pow(&self, p: u8) -> Self {
        match p % 4 {
            0 => self.clone(),
            1 => Coeff::new(-self.im, self.re),
            2 => Coeff::new(-self.re, -self.im),
            _ => Coeff::new(self.im, -self.re),
        }
    }

    pub fn scale(&self, r: Rational) -> Self {
        Coeff::new(self.re * r, self.im * r)
    }

    pub fn inv(&self) -> Option<Self> {
        let norm = self.re * self.re + self.im * self.im;
        if norm.is_zero() {
            return None;
        }
        Some(Coeff::new(self.re / norm, -self.im / norm))
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// True when the leading nonzero part is negative; used by the printer
    /// to pull a sign out in front of a term.
    pub(crate) fn leading_negative(&self) -> bool {
        if !self.re.is_zero() {
            self.re.is_negative()
        } else {
            self.im.is_negative()
        }
    }
}

impl Add for Coeff {
    type Output = Coeff;
    fn add(self, o: Coeff) -> Coeff {
        Coeff::new(self.re + o.re, self.im + o.im)
    }
}

impl AddAssign for Coeff {
    fn add_assign(&mut self, o: Coeff) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl Sub for Coeff {
    type Output = Coeff;
    fn sub(self, o: Coeff) -> Coeff {
        Coeff::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Coeff {
    type Output = Coeff;
    fn mul(self, o: Coeff) -> Coeff {
        Coeff::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl<'a> Mul<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn mul(self, o: &Coeff) -> Coeff {
        Coeff::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Div for Coeff {
    type Output = Option<Coeff>;
    fn div(self, o: Coeff) -> Option<Coeff> {
        o.inv().map(|inv| self * inv)
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff::new(-self.re, -self.im)
    }
}

fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// DSL form: `3/4`, `-i`, `1/2*i`, `(1/2 - 3/4*i)`.
impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => fmt_rational(&self.re, f),
            (true, false) => fmt_imag(&self.im, f),
            (false, false) => {
                write!(f, "(")?;
                fmt_rational(&self.re, f)?;
                if self.im.is_negative() {
                    write!(f, " - ")?;
                    fmt_imag(&-self.im, f)?;
                } else {
                    write!(f, " + ")?;
                    fmt_imag(&self.im, f)?;
                }
                write!(f, ")")
            }
        }
    }
}

fn fmt_imag(im: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if im.is_one() {
        write!(f, "i")
    } else if (-*im).is_one() {
        write!(f, "-i")
    } else {
        fmt_rational(im, f)?;
        write!(f, "*i")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_powers_cycle() {
        let c = Coeff::ratio(3, 4);
        assert_eq!(c.times_i_pow(1), Coeff::new(Rational::zero(), Rational::new(3, 4)));
        assert_eq!(c.times_i_pow(2), -c.clone());
        assert_eq!(c.times_i_pow(4), c);
        assert_eq!(Coeff::i() * Coeff::i(), Coeff::int(-1));
    }

    #[test]
    fn inverse_and_division() {
        let a = Coeff::new(Rational::from_integer(1), Rational::from_integer(2));
        let inv = a.inv().unwrap();
        assert_eq!(a.clone() * inv, Coeff::one());
        assert!(Coeff::zero().inv().is_none());
        assert_eq!((a.clone() / a).unwrap(), Coeff::one());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Coeff::ratio(3, 4).to_string(), "3/4");
        assert_eq!((-Coeff::i()).to_string(), "-i");
        assert_eq!(Coeff::i().scale(Rational::new(1, 2)).to_string(), "1/2*i");
        let z = Coeff::new(Rational::new(1, 2), Rational::new(-3, 4));
        assert_eq!(z.to_string(), "(1/2 - 3/4*i)");
    }
}
