use std::fmt;

use crate::error::{Error, Result};
use crate::field::{Half, KElement, Prime, ValExp};
use crate::geometry::Radius;

/// Dense univariate polynomial over `K`; index `k` holds the coefficient of `z^k`.
///
/// Trailing zeros are always stripped, so the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    p: Prime,
    coeffs: Vec<KElement>,
}

impl Poly {
    pub fn new(p: Prime, mut coeffs: Vec<KElement>) -> Self {
        while coeffs.last().is_some_and(KElement::is_zero) {
            coeffs.pop();
        }
        Poly { p, coeffs }
    }

    pub fn zero(p: Prime) -> Self {
        Poly { p, coeffs: Vec::new() }
    }

    pub fn one(p: Prime) -> Self {
        Poly::constant(KElement::one(p))
    }

    pub fn constant(c: KElement) -> Self {
        Poly::new(c.prime(), vec![c])
    }

    /// The identity polynomial `z`.
    pub fn identity(p: Prime) -> Self {
        Poly::new(p, vec![KElement::zero(p), KElement::one(p)])
    }

    /// `(z - a)^m`.
    pub fn shifted_power(a: &KElement, m: u32) -> Self {
        let p = a.prime();
        let linear = Poly::new(p, vec![-a, KElement::one(p)]);
        (0..m).fold(Poly::one(p), |acc, _| acc.mul(&linear))
    }

    pub fn from_ints(p: Prime, coeffs: &[i64]) -> Self {
        Poly::new(p, coeffs.iter().map(|&c| KElement::from_int(p, c)).collect())
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn coeffs(&self) -> &[KElement] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<KElement> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> KElement {
        self.coeffs.get(k).cloned().unwrap_or_else(|| KElement::zero(self.p))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&KElement> {
        self.coeffs.last()
    }

    /// Index of the lowest nonzero coefficient (order of vanishing at 0).
    pub fn order_at_zero(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Poly::new(self.p, coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        Poly::new(self.p, coeffs)
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.p, self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, c: &KElement) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.p);
        }
        Poly::new(self.p, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.p);
        }
        let mut out = vec![KElement::zero(self.p); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in other.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    out[i + j] += &(x * y);
                }
            }
        }
        Poly::new(self.p, out)
    }

    /// Euclidean division over the field `K`.
    pub fn div_rem(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        let d = divisor.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = divisor.coeffs[d].inv()?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= d {
            return Ok((Poly::zero(self.p), self.clone()));
        }
        let mut quot = vec![KElement::zero(self.p); rem.len() - d];
        for k in (d..rem.len()).rev() {
            if rem[k].is_zero() {
                continue;
            }
            let q = &rem[k] * &lead_inv;
            for (j, c) in divisor.coeffs.iter().enumerate() {
                if !c.is_zero() {
                    rem[k - d + j] -= &(&q * c);
                }
            }
            quot[k - d] = q;
        }
        rem.truncate(d);
        Ok((Poly::new(self.p, quot), Poly::new(self.p, rem)))
    }

    /// Quotient of an exact division; errors if the divisor is zero.
    pub fn exact_div(&self, divisor: &Poly) -> Result<Poly> {
        let (q, r) = self.div_rem(divisor)?;
        debug_assert!(r.is_zero(), "inexact polynomial division");
        Ok(q)
    }

    /// Scales to leading coefficient 1; the zero polynomial is returned as is.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some(l) if !l.is_one() => self.scale(&l.inv().expect("nonzero leading coefficient")),
            _ => self.clone(),
        }
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.monic(), other.monic());
        while !b.is_zero() {
            if b.is_constant() {
                return Poly::one(self.p);
            }
            let (_, r) = a.div_rem(&b).expect("nonzero divisor");
            a = b;
            b = r.monic();
        }
        a
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * &KElement::from_int(self.p, k as i64))
            .collect();
        Poly::new(self.p, coeffs)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &KElement) -> KElement {
        self.coeffs
            .iter()
            .rev()
            .fold(KElement::zero(self.p), |acc, c| &(&acc * x) + c)
    }

    /// Coefficients `g_k` with `P(z) = Σ g_k (z - a)^k`, returned as a
    /// polynomial in the shifted variable `w = z - a`.
    pub fn taylor_recenter(&self, a: &KElement) -> Poly {
        if a.is_zero() {
            return self.clone();
        }
        // Horner in the ring K[w]: acc <- acc·(w + a) + c_k.
        let mut acc: Vec<KElement> = Vec::with_capacity(self.coeffs.len());
        for c in self.coeffs.iter().rev() {
            acc.push(KElement::zero(self.p));
            for j in (1..acc.len()).rev() {
                let shifted = &acc[j - 1] + &(&acc[j] * a);
                acc[j] = shifted;
            }
            acc[0] = &(&acc[0] * a) + c;
        }
        Poly::new(self.p, acc)
    }

    /// Exponent of `max_{k >= from_k} |c_k|·r^k`, i.e. the minimum of
    /// `v(c_k) + k·e_r`; `+∞` when every such coefficient vanishes.
    pub fn gauss_norm_exp(&self, r: Radius, from_k: usize) -> ValExp {
        let e = r.exp();
        self.coeffs
            .iter()
            .enumerate()
            .skip(from_k)
            .map(|(k, c)| c.valuation() + e * k as i64)
            .min()
            .unwrap_or(ValExp::Infinite)
    }

    /// `P(z)` with `z` replaced by `z / c`, i.e. coefficient `k` divided by `c^k`.
    pub fn rescale_argument(&self, c: &KElement) -> Result<Poly> {
        let inv = c.inv()?;
        let mut power = KElement::one(self.p);
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for x in &self.coeffs {
            coeffs.push(x * &power);
            power = &power * &inv;
        }
        Ok(Poly::new(self.p, coeffs))
    }

    /// Minimal valuation over all coefficients (`+∞` for zero).
    pub fn min_valuation(&self) -> ValExp {
        self.gauss_norm_exp(Radius::new(Half::ZERO), 0)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})·z")?,
                _ => write!(f, "({c})·z^{k}")?,
            }
        }
        Ok(())
    }
}
