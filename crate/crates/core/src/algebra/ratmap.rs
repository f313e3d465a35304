use std::fmt;

use crate::error::{Error, Result};
use crate::field::{KElement, Prime};

use super::Poly;

/// Result of evaluating a rational map at a point of `K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evaluation {
    Value(KElement),
    Pole,
}

impl Evaluation {
    pub fn value(self) -> Option<KElement> {
        match self {
            Evaluation::Value(v) => Some(v),
            Evaluation::Pole => None,
        }
    }
}

/// A reduced fraction `num / den` over `K`: the two polynomials are coprime
/// and `den` is monic.
///
/// Sums and products use the Henrici gcd splitting, so only the gcds that can
/// actually be nontrivial are computed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
}

impl RationalMap {
    /// Reduces `num / den` to lowest terms with a monic denominator.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(RationalMap::from_poly(num));
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.exact_div(&g)?, den.exact_div(&g)?)
        };
        Ok(RationalMap::normalized(num, den))
    }

    /// Builds from parts already known to be coprime; only rescales `den`
    /// to be monic.
    fn normalized(num: Poly, den: Poly) -> Self {
        let lead = den.leading().expect("nonzero denominator").clone();
        if lead.is_one() {
            return RationalMap { num, den };
        }
        let inv = lead.inv().expect("nonzero leading coefficient");
        RationalMap {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn from_poly(num: Poly) -> Self {
        let p = num.prime();
        RationalMap { num, den: Poly::one(p) }
    }

    pub fn constant(c: KElement) -> Self {
        RationalMap::from_poly(Poly::constant(c))
    }

    pub fn identity(p: Prime) -> Self {
        RationalMap::from_poly(Poly::identity(p))
    }

    pub fn prime(&self) -> Prime {
        self.num.prime()
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// `max(deg num, deg den)`.
    pub fn degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }

    pub fn add(&self, other: &RationalMap) -> RationalMap {
        let g = self.den.gcd(&other.den);
        if g.is_one() {
            let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
            return RationalMap::normalized(num, self.den.mul(&other.den));
        }
        let b1 = self.den.exact_div(&g).expect("gcd divides");
        let d1 = other.den.exact_div(&g).expect("gcd divides");
        let t = self.num.mul(&d1).add(&other.num.mul(&b1));
        if t.is_zero() {
            return RationalMap::from_poly(Poly::zero(self.prime()));
        }
        let g2 = t.gcd(&g);
        let num = t.exact_div(&g2).expect("gcd divides");
        let den = b1.mul(&other.den.exact_div(&g2).expect("gcd divides"));
        RationalMap::normalized(num, den)
    }

    pub fn neg(&self) -> RationalMap {
        RationalMap {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &RationalMap) -> RationalMap {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalMap) -> RationalMap {
        if self.is_zero() || other.is_zero() {
            return RationalMap::from_poly(Poly::zero(self.prime()));
        }
        let g1 = self.num.gcd(&other.den);
        let g2 = other.num.gcd(&self.den);
        let num = self.num.exact_div(&g1).expect("gcd divides").mul(&other.num.exact_div(&g2).expect("gcd divides"));
        let den = self.den.exact_div(&g2).expect("gcd divides").mul(&other.den.exact_div(&g1).expect("gcd divides"));
        RationalMap::normalized(num, den)
    }

    pub fn scale(&self, c: &KElement) -> RationalMap {
        if c.is_zero() {
            return RationalMap::from_poly(Poly::zero(self.prime()));
        }
        RationalMap {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Quotient-rule derivative, reduced.
    pub fn derivative(&self) -> RationalMap {
        let num = self
            .num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()));
        RationalMap::new(num, self.den.mul(&self.den)).expect("nonzero denominator")
    }

    pub fn eval(&self, x: &KElement) -> Evaluation {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Evaluation::Pole;
        }
        Evaluation::Value(self.num.eval(x).checked_div(&d).expect("nonzero"))
    }

    /// `f'(x)` evaluated pointwise, without forming the derivative map.
    pub fn eval_derivative(&self, x: &KElement) -> Evaluation {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Evaluation::Pole;
        }
        let top = &(&self.num.derivative().eval(x) * &d) - &(&self.num.eval(x) * &self.den.derivative().eval(x));
        Evaluation::Value(top.checked_div(&(&d * &d)).expect("nonzero"))
    }
}

impl fmt::Display for RationalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "[{}] / [{}]", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    fn ints(num: &[i64], den: &[i64]) -> RationalMap {
        let p = p3();
        RationalMap::new(Poly::from_ints(p, num), Poly::from_ints(p, den)).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(ints(&[-1, 0, 1], &[-1, 1]), ints(&[1, 1], &[1]));
        assert_eq!(ints(&[0, 3], &[3]), ints(&[0, 1], &[1]));
        let f = ints(&[0, -2, 1], &[1]);
        assert_eq!(f.num(), &Poly::from_ints(p3(), &[0, -2, 1]));
        assert!(f.is_polynomial());
        assert_eq!(
            RationalMap::new(Poly::one(p3()), Poly::zero(p3())),
            Err(Error::ZeroDenominator)
        );
    }

    #[test]
    fn reduced_denominator_is_monic() {
        let f = ints(&[1], &[1, -1]);
        assert!(f.den().leading().unwrap().is_one());
        assert_eq!(f.num(), &Poly::from_ints(p3(), &[-1]));
    }

    #[test]
    fn combine_examples() {
        let p = p3();
        let z = RationalMap::identity(p);
        let one = RationalMap::constant(KElement::one(p));
        assert_eq!(z.add(&one), ints(&[1, 1], &[1]));
        assert_eq!(ints(&[0, 3], &[1]).mul(&ints(&[1], &[1, -1])), ints(&[0, 3], &[1, -1]));
        assert_eq!(ints(&[1], &[1, -1]).add(&ints(&[1], &[1, 1])), ints(&[2], &[1, 0, -1]));
    }

    #[test]
    fn add_cancels_common_factors() {
        // 1/(z(z-1)) + 1/z = z/(z(z-1)) = 1/(z-1)
        let sum = ints(&[1], &[0, -1, 1]).add(&ints(&[1], &[0, 1]));
        assert_eq!(sum, ints(&[1], &[-1, 1]));
        let zero = ints(&[1], &[0, 1]).sub(&ints(&[1], &[0, 1]));
        assert!(zero.is_zero());
    }

    #[test]
    fn derivative_examples() {
        let p = p3();
        let alpha = KElement::ratio(p, 5, 7);
        let f = RationalMap::identity(p).scale(&alpha);
        assert_eq!(f.derivative(), RationalMap::constant(alpha));

        let beta = KElement::ratio(p, 2, 5);
        let zz3 = Poly::from_ints(p, &[0, -3, 1]).scale(&beta).add(&Poly::identity(p));
        let d = RationalMap::from_poly(zz3).derivative();
        let at3 = d.eval(&KElement::from_int(p, 3)).value().unwrap();
        assert_eq!(at3, &(&KElement::from_int(p, 3) * &beta) + &KElement::one(p));

        assert_eq!(ints(&[1], &[1, -1]).derivative(), ints(&[1], &[1, -2, 1]));
    }

    #[test]
    fn eval_examples() {
        let p = p3();
        assert_eq!(ints(&[0, 3], &[1]).eval(&KElement::from_int(p, 9)), Evaluation::Value(KElement::from_int(p, 27)));
        assert_eq!(ints(&[6, 1], &[3]).eval(&KElement::from_int(p, 3)), Evaluation::Value(KElement::from_int(p, 3)));
        assert_eq!(ints(&[1], &[0, 1]).eval(&KElement::zero(p)), Evaluation::Pole);
    }

    #[test]
    fn pointwise_derivative_matches_symbolic() {
        let p = p3();
        let f = ints(&[1, 2, 0, 1], &[4, 0, 1]);
        let d = f.derivative();
        for x in [0, 1, 5, -7] {
            let x = KElement::from_int(p, x);
            assert_eq!(f.eval_derivative(&x), d.eval(&x));
        }
    }
}
