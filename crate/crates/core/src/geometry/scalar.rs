//! Closed-form scalar fields on ℝ³ with exact symbolic derivatives.
//!
//! A field is a finite sum of parts `c · (x−x₀)^β / |x−x₀|^{2n+1}` (or a
//! plain monomial when no radial factor is present). Differentiating a part
//! gives at most four parts of the same shape, so derivatives of `1/r` to any
//! order stay exact.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::opcore::MultiIndex;

pub type Point = [f64; 3];

/// Key of a part: center bits, monomial exponents, radial power `n` of
/// `r^{-(2n+1)}` (`None` for a polynomial part).
type PartKey = ([u64; 3], MultiIndex, Option<u32>);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScalarField {
    parts: BTreeMap<PartKey, f64>,
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::default()
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::monomial(c, [0; 3])
    }

    pub fn monomial(c: f64, pow: MultiIndex) -> Self {
        let mut f = ScalarField::zero();
        f.add_part([0.0; 3], pow, None, c);
        f
    }

    /// `c / |x − center|`
    pub fn inverse_r(c: f64, center: Point) -> Self {
        let mut f = ScalarField::zero();
        f.add_part(center, [0; 3], Some(0), c);
        f
    }

    /// `c · (x − center)^pow / |x − center|^{2n+1}`
    pub fn radial(c: f64, center: Point, pow: MultiIndex, n: u32) -> Self {
        let mut f = ScalarField::zero();
        f.add_part(center, pow, Some(n), c);
        f
    }

    fn add_part(&mut self, center: Point, pow: MultiIndex, rpow: Option<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let key = (center.map(f64::to_bits), pow, rpow);
        let v = self.parts.entry(key).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.parts.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// Centers of the radial parts.
    pub fn singular_centers(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for (c, _, r) in self.parts.keys() {
            let p = c.map(f64::from_bits);
            if r.is_some() && !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Highest total degree of the polynomial parts.
    pub fn polynomial_degree(&self) -> Option<u32> {
        self.parts
            .keys()
            .filter(|(_, _, r)| r.is_none())
            .map(|(_, p, _)| p.iter().map(|&e| e as u32).sum())
            .max()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = ScalarField::zero();
        for (&(c, p, r), &v) in &self.parts {
            out.add_part(c.map(f64::from_bits), p, r, v * s);
        }
        out
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        let mut out = self.clone();
        for (&(c, p, r), &v) in &other.parts {
            out.add_part(c.map(f64::from_bits), p, r, v);
        }
        out
    }

    pub fn partial(&self, axis: usize) -> Self {
        let mut out = ScalarField::zero();
        for (&(cb, pow, rpow), &v) in &self.parts {
            let center = cb.map(f64::from_bits);
            if pow[axis] > 0 {
                let mut p = pow;
                p[axis] -= 1;
                out.add_part(center, p, rpow, v * pow[axis] as f64);
            }
            if let Some(n) = rpow {
                // ∂ r^{-(2n+1)} = −(2n+1) xᵢ r^{-(2n+3)}
                let mut p = pow;
                p[axis] += 1;
                out.add_part(center, p, Some(n + 1), -v * (2 * n + 1) as f64);
            }
        }
        out
    }

    pub fn derivative(&self, alpha: &MultiIndex) -> Self {
        let mut f = self.clone();
        for (axis, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                f = f.partial(axis);
            }
        }
        f
    }

    pub fn laplacian(&self) -> Self {
        (0..3).fold(ScalarField::zero(), |acc, k| acc.add(&self.partial(k).partial(k)))
    }

    /// Value at `x` together with the sum of absolute part values, the scale
    /// against which roundoff in cancellations is judged.
    pub fn eval_with_scale(&self, x: &Point) -> (f64, f64) {
        let mut v = 0.0;
        let mut s = 0.0;
        for (&(cb, pow, rpow), &c) in &self.parts {
            let center = cb.map(f64::from_bits);
            let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
            let mut t = c;
            for k in 0..3 {
                t *= d[k].powi(pow[k] as i32);
            }
            if let Some(n) = rpow {
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                t /= r.powi(2 * n as i32 + 1);
            }
            v += t;
            s += t.abs();
        }
        (v, s)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.eval_with_scale(x).0
    }

    /// Polynomial in `x1, x2, x3`: sums of products of numbers and
    /// coordinates with optional integer powers, e.g. `0.01*x3 - 2e-3*x1^2*x2`.
    pub fn parse_polynomial(text: &str) -> Result<ScalarField, PolyParseError> {
        PolyParser { s: text.as_bytes(), pos: 0 }.parse()
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(cb, pow, rpow), &c)) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            let center = cb.map(f64::from_bits);
            let shifted = center != [0.0; 3];
            for k in 0..3 {
                if pow[k] > 0 {
                    if shifted {
                        write!(f, "*(x{}-{})", k + 1, center[k])?;
                    } else {
                        write!(f, "*x{}", k + 1)?;
                    }
                    if pow[k] > 1 {
                        write!(f, "^{}", pow[k])?;
                    }
                }
            }
            if let Some(n) = rpow {
                write!(f, "/r^{}", 2 * n + 1)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("polynomial `{text}` at byte {pos}: {msg}")]
pub struct PolyParseError {
    pub text: String,
    pub pos: usize,
    pub msg: String,
}

struct PolyParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl PolyParser<'_> {
    fn err(&self, msg: impl Into<String>) -> PolyParseError {
        PolyParseError { text: String::from_utf8_lossy(self.s).into_owned(), pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<ScalarField, PolyParseError> {
        let mut out = ScalarField::zero();
        let mut sign = 1.0;
        if let Some(b @ (b'+' | b'-')) = self.peek() {
            sign = if b == b'-' { -1.0 } else { 1.0 };
            self.pos += 1;
        }
        loop {
            let (c, pow) = self.term()?;
            out.add_part([0.0; 3], pow, None, sign * c);
            match self.peek() {
                None => return Ok(out),
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                Some(_) => return Err(self.err("expected `+`, `-` or end of input")),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<(f64, MultiIndex), PolyParseError> {
        let mut c = 1.0;
        let mut pow = [0u8; 3];
        loop {
            match self.peek() {
                Some(b'x') => {
                    self.pos += 1;
                    let axis = match self.s.get(self.pos) {
                        Some(d @ b'1'..=b'3') => (d - b'1') as usize,
                        _ => return Err(self.err("coordinates are x1, x2, x3")),
                    };
                    self.pos += 1;
                    let mut e = 1u8;
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.skip_ws();
                        let start = self.pos;
                        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                        e = std::str::from_utf8(&self.s[start..self.pos])
                            .unwrap()
                            .parse()
                            .map_err(|_| self.err("expected a non-negative integer exponent"))?;
                    }
                    pow[axis] = pow[axis].saturating_add(e);
                }
                Some(b'0'..=b'9' | b'.') => {
                    let start = self.pos;
                    while self.pos < self.s.len() {
                        let b = self.s[self.pos];
                        let exp_sign = matches!(b, b'+' | b'-')
                            && matches!(self.s[self.pos - 1], b'e' | b'E');
                        if b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E') || exp_sign {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                    c *= text.parse::<f64>().map_err(|_| self.err(format!("bad number `{text}`")))?;
                }
                _ => return Err(self.err("expected a number or a coordinate")),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok((c, pow));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Finite-difference oracle on a smooth point.
    fn fd(f: &ScalarField, x: Point, axis: usize) -> f64 {
        let h = 1e-5;
        let (mut a, mut b) = (x, x);
        a[axis] += h;
        b[axis] -= h;
        (f.eval(&a) - f.eval(&b)) / (2.0 * h)
    }

    #[test]
    fn inverse_r_derivatives_match_closed_forms() {
        let f = ScalarField::inverse_r(1.0, [0.5, -0.2, 0.1]);
        let x = [1.3, 0.4, -0.7];
        let d: [f64; 3] = [x[0] - 0.5, x[1] + 0.2, x[2] - 0.1];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        for i in 0..3 {
            assert!((f.partial(i).eval(&x) + d[i] / r.powi(3)).abs() < 1e-14);
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let want = 3.0 * d[i] * d[j] / r.powi(5) - delta / r.powi(3);
                assert!((f.partial(i).partial(j).eval(&x) - want).abs() < 1e-13);
            }
        }
        let (lap, scale) = f.laplacian().eval_with_scale(&x);
        assert!(lap.abs() <= 1e-14 * scale);
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let f = ScalarField::radial(0.7, [0.1, 0.2, 0.3], [1, 0, 2], 2)
            .add(&ScalarField::parse_polynomial("x1^3 - 3*x1*x2^2 + 0.5").unwrap());
        let x = [1.1, -0.9, 0.8];
        for alpha in [[1, 0, 0], [0, 1, 1], [2, 0, 1]] {
            let d = f.derivative(&alpha);
            let mut lower = alpha;
            let axis = lower.iter().position(|&k| k > 0).unwrap();
            lower[axis] -= 1;
            let want = fd(&f.derivative(&lower), x, axis);
            assert!((d.eval(&x) - want).abs() < 1e-6 * (1.0 + want.abs()), "{alpha:?}");
        }
    }

    #[test]
    fn polynomial_parsing() {
        let f = ScalarField::parse_polynomial("0.01*x3 - 2e-3*x1^2*x2 + 4").unwrap();
        assert_eq!(f.polynomial_degree(), Some(3));
        assert!((f.eval(&[1.0, 2.0, 3.0]) - (0.03 - 4e-3 + 4.0)).abs() < 1e-15);
        assert_eq!(ScalarField::parse_polynomial("-x1*x1").unwrap(), ScalarField::monomial(-1.0, [2, 0, 0]));
        assert!(ScalarField::parse_polynomial("x4").is_err());
        assert!(ScalarField::parse_polynomial("2 x1").is_err());
        assert!(ScalarField::parse_polynomial("").is_err());
    }

    #[test]
    fn harmonic_polynomial_laplacian_is_exactly_zero() {
        let f = ScalarField::parse_polynomial("x1*x2*x3 + x1^2 - x3^2").unwrap();
        assert!(f.laplacian().is_zero());
        assert_eq!(ScalarField::parse_polynomial("x1^2").unwrap().laplacian(), ScalarField::constant(2.0));
    }
}
