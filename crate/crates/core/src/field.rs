//! Exact arithmetic in the quadratic ramified extension `K = Q(√p)`.
//!
//! Every constant the gluing construction needs (centers, radii `p^(-e)` with
//! `e ∈ ½ℤ`, the scaling constants `c_i`) lives in `K`, so nothing here ever
//! rounds. Elements are pairs `(a, b)` of reduced rationals standing for
//! `a + b·√p`; the valuation extends `v_p` with `v(√p) = ½`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A rational prime selecting the completion `Q_p ⊂ C_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if p < 2 || p > u64::from(u32::MAX) {
            return Err(Error::NotPrime(p));
        }
        let mut d = 2u64;
        while d * d <= p {
            if p % d == 0 {
                return Err(Error::NotPrime(p));
            }
            d += 1;
        }
        Ok(Prime(p as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn to_bigint(self) -> BigInt {
        BigInt::from(self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An exact element of `½ℤ`, stored as twice its value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Half(i64);

impl Half {
    pub const ZERO: Half = Half(0);

    pub const fn from_int(k: i64) -> Self {
        Half(2 * k)
    }

    pub const fn from_halves(h: i64) -> Self {
        Half(h)
    }

    pub const fn halves(self) -> i64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn floor(self) -> i64 {
        self.0.div_euclid(2)
    }

    pub fn ceil(self) -> i64 {
        -(-self.0).div_euclid(2)
    }

    /// Midpoint `(self + other) / 2`, if it is again a half-integer.
    pub fn midpoint(self, other: Half) -> Option<Half> {
        let sum = self.0 + other.0;
        (sum % 2 == 0).then_some(Half(sum / 2))
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.0), BigInt::from(2))
    }

    pub fn from_rational(q: &BigRational) -> Result<Self> {
        let doubled = q * BigInt::from(2);
        if !doubled.is_integer() {
            return Err(Error::NotHalfInteger(q.to_string()));
        }
        let h: i64 = doubled
            .to_integer()
            .try_into()
            .map_err(|_| Error::NotHalfInteger(q.to_string()))?;
        Ok(Half(h))
    }

    /// `"num/den"` with `den ∈ {1, 2}`, the on-disk format.
    pub fn to_fraction_string(self) -> String {
        if self.is_integer() {
            format!("{}/1", self.0 / 2)
        } else {
            format!("{}/2", self.0)
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let q = parse_rational(s)?;
        Half::from_rational(&q)
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Add for Half {
    type Output = Half;
    fn add(self, rhs: Half) -> Half {
        Half(self.0 + rhs.0)
    }
}

impl Sub for Half {
    type Output = Half;
    fn sub(self, rhs: Half) -> Half {
        Half(self.0 - rhs.0)
    }
}

impl Neg for Half {
    type Output = Half;
    fn neg(self) -> Half {
        Half(-self.0)
    }
}

impl Mul<i64> for Half {
    type Output = Half;
    fn mul(self, rhs: i64) -> Half {
        Half(self.0 * rhs)
    }
}

/// A valuation exponent: a half-integer, or `+∞` for the valuation of zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValExp {
    Finite(Half),
    Infinite,
}

impl ValExp {
    pub fn int(k: i64) -> Self {
        ValExp::Finite(Half::from_int(k))
    }

    pub fn finite(self) -> Option<Half> {
        match self {
            ValExp::Finite(h) => Some(h),
            ValExp::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ValExp::Infinite)
    }

    pub fn to_fraction_string(self) -> String {
        match self {
            ValExp::Finite(h) => h.to_fraction_string(),
            ValExp::Infinite => "inf".to_string(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "inf" {
            Ok(ValExp::Infinite)
        } else {
            Half::parse(s).map(ValExp::Finite)
        }
    }
}

impl From<Half> for ValExp {
    fn from(h: Half) -> Self {
        ValExp::Finite(h)
    }
}

impl PartialOrd for ValExp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ValExp {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ValExp::Finite(a), ValExp::Finite(b)) => a.cmp(b),
            (ValExp::Finite(_), ValExp::Infinite) => Ordering::Less,
            (ValExp::Infinite, ValExp::Finite(_)) => Ordering::Greater,
            (ValExp::Infinite, ValExp::Infinite) => Ordering::Equal,
        }
    }
}

impl Add for ValExp {
    type Output = ValExp;
    fn add(self, rhs: ValExp) -> ValExp {
        match (self, rhs) {
            (ValExp::Finite(a), ValExp::Finite(b)) => ValExp::Finite(a + b),
            _ => ValExp::Infinite,
        }
    }
}

impl Add<Half> for ValExp {
    type Output = ValExp;
    fn add(self, rhs: Half) -> ValExp {
        self + ValExp::Finite(rhs)
    }
}

impl Sub<Half> for ValExp {
    type Output = ValExp;
    fn sub(self, rhs: Half) -> ValExp {
        self + ValExp::Finite(-rhs)
    }
}

impl fmt::Display for ValExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValExp::Finite(h) => write!(f, "{h}"),
            ValExp::Infinite => write!(f, "inf"),
        }
    }
}

/// p-adic valuation of a nonzero integer.
pub(crate) fn vp_int(n: &BigInt, p: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// p-adic valuation of a rational; `None` for zero.
pub(crate) fn vp_rational(q: &BigRational, p: &BigInt) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    Some(vp_int(q.numer(), p) - vp_int(q.denom(), p))
}

fn pow_p(p: &BigInt, k: i64) -> BigRational {
    let mag = num_traits::pow(p.clone(), k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(mag)
    } else {
        BigRational::new(BigInt::one(), mag)
    }
}

/// Rational `t` with `v_p(q - t) >= prec`, of height about `p^(prec - v(q))`.
fn truncate_rational(q: &BigRational, p: &BigInt, prec: i64) -> BigRational {
    let Some(v) = vp_rational(q, p) else {
        return BigRational::zero();
    };
    if v >= prec {
        return BigRational::zero();
    }
    let unit = q / pow_p(p, v);
    let modulus = num_traits::pow(p.clone(), (prec - v) as usize);
    let inv = unit.denom().extended_gcd(&modulus).x;
    let digits = (unit.numer() * inv).mod_floor(&modulus);
    BigRational::from_integer(digits) * pow_p(p, v)
}

/// Parses `"n"` or `"n/d"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::parse(s, "expected an exact rational \"num/den\"");
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::parse(s, "zero denominator"));
    }
    Ok(BigRational::new(n, d))
}

pub fn rational_to_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// An exact element `a + b·√p` of `Q(√p)`.
///
/// Arithmetic between elements over different primes panics; every value in a
/// computation is expected to come from one [`Prime`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KElement {
    p: Prime,
    a: BigRational,
    b: BigRational,
}

impl KElement {
    pub fn new(p: Prime, a: BigRational, b: BigRational) -> Self {
        KElement { p, a, b }
    }

    pub fn zero(p: Prime) -> Self {
        KElement::new(p, BigRational::zero(), BigRational::zero())
    }

    pub fn one(p: Prime) -> Self {
        KElement::from_int(p, 1)
    }

    pub fn from_int(p: Prime, n: i64) -> Self {
        KElement::from_rational(p, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_rational(p: Prime, a: BigRational) -> Self {
        KElement::new(p, a, BigRational::zero())
    }

    /// `n/d` as an element of `Q ⊂ K`.
    pub fn ratio(p: Prime, n: i64, d: i64) -> Self {
        KElement::from_rational(p, BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// The uniformizer `√p`.
    pub fn sqrt_p(p: Prime) -> Self {
        KElement::new(p, BigRational::zero(), BigRational::one())
    }

    /// The canonical element `(√p)^(2e)` of valuation exactly `e`.
    pub fn uniformizer_power(p: Prime, e: Half) -> Self {
        let k = e.floor();
        let scale = pow_p(&p.to_bigint(), k);
        if e.is_integer() {
            KElement::from_rational(p, scale)
        } else {
            KElement::new(p, BigRational::zero(), scale)
        }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    /// True when the element lies in `Q`.
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// `v(a + b√p) = min(v_p(a), v_p(b) + ½)`; the two candidates never tie.
    pub fn valuation(&self) -> ValExp {
        let p = self.p.to_bigint();
        let va = vp_rational(&self.a, &p).map(|v| Half::from_int(v));
        let vb = vp_rational(&self.b, &p).map(|v| Half::from_halves(2 * v + 1));
        match (va, vb) {
            (None, None) => ValExp::Infinite,
            (Some(x), None) | (None, Some(x)) => ValExp::Finite(x),
            (Some(x), Some(y)) => ValExp::Finite(x.min(y)),
        }
    }

    /// `a² - p·b²`, the field norm down to `Q`.
    pub fn norm(&self) -> BigRational {
        let p = BigRational::from_integer(self.p.to_bigint());
        &self.a * &self.a - p * &self.b * &self.b
    }

    pub fn conjugate(&self) -> Self {
        KElement::new(self.p, self.a.clone(), -self.b.clone())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm();
        Ok(KElement::new(self.p, &self.a / &n, -(&self.b / &n)))
    }

    pub fn checked_div(&self, rhs: &KElement) -> Result<Self> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = KElement::one(self.p);
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// An element `t` with `v(self - t) >= prec` whose coordinates are
    /// integers times a power of `p`. Used to keep iterated points at bounded
    /// height; the caller accounts for the error ball.
    pub fn truncated(&self, prec: Half) -> Self {
        let p = self.p.to_bigint();
        let a = truncate_rational(&self.a, &p, prec.ceil());
        let b = truncate_rational(&self.b, &p, (prec - Half::from_halves(1)).ceil());
        KElement::new(self.p, a, b)
    }

    fn check_prime(&self, other: &KElement) {
        assert!(
            self.p == other.p,
            "{}",
            Error::PrimeMismatch(self.p.get(), other.p.get())
        );
    }
}

impl fmt::Display for KElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let root = format!("√{}", self.p);
        match (self.a.is_zero(), self.b.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", self.a),
            (true, false) if self.b.is_one() => write!(f, "{root}"),
            (true, false) => write!(f, "{}·{root}", self.b),
            (false, false) => {
                let sign = if self.b.is_negative() { '-' } else { '+' };
                let mag = self.b.abs();
                if mag.is_one() {
                    write!(f, "{} {sign} {root}", self.a)
                } else {
                    write!(f, "{} {sign} {mag}·{root}", self.a)
                }
            }
        }
    }
}

impl<'a> Add<&'a KElement> for &'a KElement {
    type Output = KElement;
    fn add(self, rhs: &KElement) -> KElement {
        self.check_prime(rhs);
        KElement::new(self.p, &self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl<'a> Sub<&'a KElement> for &'a KElement {
    type Output = KElement;
    fn sub(self, rhs: &KElement) -> KElement {
        self.check_prime(rhs);
        KElement::new(self.p, &self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl<'a> Mul<&'a KElement> for &'a KElement {
    type Output = KElement;
    fn mul(self, rhs: &KElement) -> KElement {
        self.check_prime(rhs);
        let p = BigRational::from_integer(self.p.to_bigint());
        let a = &self.a * &rhs.a + p * (&self.b * &rhs.b);
        let b = &self.a * &rhs.b + &self.b * &rhs.a;
        KElement::new(self.p, a, b)
    }
}

impl Neg for &KElement {
    type Output = KElement;
    fn neg(self) -> KElement {
        KElement::new(self.p, -self.a.clone(), -self.b.clone())
    }
}

impl Neg for KElement {
    type Output = KElement;
    fn neg(self) -> KElement {
        KElement::new(self.p, -self.a, -self.b)
    }
}

macro_rules! forward_owned_binop {
    ($imp:ident, $method:ident, $assign:ident, $assign_method:ident) => {
        impl $imp<KElement> for KElement {
            type Output = KElement;
            fn $method(self, rhs: KElement) -> KElement {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $imp<&'a KElement> for KElement {
            type Output = KElement;
            fn $method(self, rhs: &KElement) -> KElement {
                (&self).$method(rhs)
            }
        }
        impl<'a> $imp<KElement> for &'a KElement {
            type Output = KElement;
            fn $method(self, rhs: KElement) -> KElement {
                self.$method(&rhs)
            }
        }
        impl<'a> $assign<&'a KElement> for KElement {
            fn $assign_method(&mut self, rhs: &KElement) {
                *self = (&*self).$method(rhs);
            }
        }
    };
}

forward_owned_binop!(Add, add, AddAssign, add_assign);
forward_owned_binop!(Sub, sub, SubAssign, sub_assign);
forward_owned_binop!(Mul, mul, MulAssign, mul_assign);
