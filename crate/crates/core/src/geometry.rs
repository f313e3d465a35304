//! Balls and disks of `C_p` with centers in `K`, and the exact images of
//! balls under rational maps.
//!
//! All statements here are about `C_p`, not only about `K`-points: images and
//! sup-norms come from Gauss norms and root counts come from Newton polygons.
//! [`sample_points`] only produces `K`-rational witnesses for containment.

use std::cmp::Ordering;
use std::fmt;

use crate::algebra::{count_roots_in_ball, Poly, RationalMap};
use crate::error::{Error, Result};
use crate::field::{Half, KElement, Prime, ValExp};

/// A radius `p^(-e)` in the value group of `K`, stored by its exponent.
///
/// Ordered as radii: a larger exponent is a *smaller* radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Radius(Half);

impl Radius {
    pub const ONE: Radius = Radius(Half::ZERO);

    pub const fn new(exp: Half) -> Self {
        Radius(exp)
    }

    pub const fn from_exp_int(e: i64) -> Self {
        Radius(Half::from_int(e))
    }

    pub fn from_valexp(v: ValExp) -> Result<Self> {
        v.finite().map(Radius).ok_or(Error::InfiniteRadius)
    }

    pub fn exp(self) -> Half {
        self.0
    }

    /// `√(self·other)`, if its exponent stays in `½ℤ`.
    pub fn geometric_mean(self, other: Radius) -> Result<Radius> {
        self.0
            .midpoint(other.0)
            .map(Radius)
            .ok_or_else(|| Error::NotHalfInteger(format!("({} + {})/2", self.0, other.0)))
    }

    /// `self` scaled by `p^k`, i.e. exponent decreased by `k`.
    pub fn times_p_pow(self, k: Half) -> Radius {
        Radius(self.0 - k)
    }

    pub fn display_with(self, p: Prime) -> String {
        format!("{p}^({})", -self.0)
    }
}

impl PartialOrd for Radius {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Radius {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p^({})", -self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BallKind {
    /// `B_r(a) = {|x - a| <= r}`
    Closed,
    /// `D_r(a) = {|x - a| < r}`
    Open,
}

/// A closed ball or open disk with center in `K` and radius in `p^(½ℤ)`.
///
/// Equality is equality of the underlying subsets of `C_p`: two balls of the
/// same kind and radius are equal whenever either center lies in the other.
#[derive(Clone, Debug)]
pub struct Ball {
    center: KElement,
    radius: Radius,
    kind: BallKind,
}

impl Ball {
    pub fn new(center: KElement, radius: Radius, kind: BallKind) -> Self {
        Ball { center, radius, kind }
    }

    pub fn closed(center: KElement, radius: Radius) -> Self {
        Ball::new(center, radius, BallKind::Closed)
    }

    pub fn open(center: KElement, radius: Radius) -> Self {
        Ball::new(center, radius, BallKind::Open)
    }

    pub fn center(&self) -> &KElement {
        &self.center
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn kind(&self) -> BallKind {
        self.kind
    }

    pub fn prime(&self) -> Prime {
        self.center.prime()
    }

    /// The same center and radius with the other kind.
    pub fn with_kind(&self, kind: BallKind) -> Ball {
        Ball::new(self.center.clone(), self.radius, kind)
    }

    pub fn contains(&self, x: &KElement) -> bool {
        let d = distance_exp(x, &self.center);
        let e = ValExp::Finite(self.radius.exp());
        match self.kind {
            BallKind::Closed => d >= e,
            BallKind::Open => d > e,
        }
    }

    /// `other ⊆ self` as subsets of `C_p`.
    pub fn contains_ball(&self, other: &Ball) -> bool {
        if !self.contains(&other.center) {
            return false;
        }
        match (self.kind, other.kind) {
            (BallKind::Open, BallKind::Closed) => other.radius < self.radius,
            _ => other.radius <= self.radius,
        }
    }

    /// Ultrametric balls are nested or disjoint, so it suffices to test centers.
    pub fn is_disjoint(&self, other: &Ball) -> bool {
        !self.contains(&other.center) && !other.contains(&self.center)
    }

    /// `self ⊊ other`.
    pub fn is_proper_subset_of(&self, other: &Ball) -> bool {
        other.contains_ball(self) && self != other
    }
}

impl PartialEq for Ball {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.radius == other.radius && self.contains(&other.center)
    }
}

impl Eq for Ball {}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.kind {
            BallKind::Closed => 'B',
            BallKind::Open => 'D',
        };
        write!(
            f,
            "{letter}_{{{}}}({})",
            self.radius.display_with(self.prime()),
            self.center
        )
    }
}

/// `v(a - b)`; `+∞` iff `a = b`.
pub fn distance_exp(a: &KElement, b: &KElement) -> ValExp {
    (a - b).valuation()
}

/// `δ_i = min_{j≠i} |a_i - a_j|` for each center.
pub fn pairwise_deltas(centers: &[KElement]) -> Result<Vec<Radius>> {
    if centers.len() < 2 {
        return Err(Error::TooFewCenters);
    }
    let mut deltas = Vec::with_capacity(centers.len());
    for (i, a) in centers.iter().enumerate() {
        // nearest neighbour = largest valuation
        let mut best: Option<ValExp> = None;
        for (j, b) in centers.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = distance_exp(a, b);
            if d.is_infinite() {
                return Err(Error::DuplicateCenters(i.min(j), i.max(j)));
            }
            best = best.max(Some(d));
        }
        deltas.push(Radius::from_valexp(best.expect("at least two centers"))?);
    }
    Ok(deltas)
}

/// True iff the (reduced) denominator has no zero in the ball.
pub fn pole_free_on_ball(f: &RationalMap, ball: &Ball) -> bool {
    count_roots_in_ball(f.den(), ball).expect("denominator is nonzero") == 0
}

fn require_pole_free(f: &RationalMap, ball: &Ball) -> Result<()> {
    if pole_free_on_ball(f, ball) {
        Ok(())
    } else {
        Err(Error::PoleInBall(ball.to_string()))
    }
}

/// Exponent of `sup_{z ∈ ball} |f(z)|` over `C_p`.
///
/// With no poles in the ball `|Q|` is constant there, so the sup is the Gauss
/// norm of the recentered numerator divided by `|Q(center)|`.
pub fn sup_norm_exp_on_ball(f: &RationalMap, ball: &Ball) -> Result<ValExp> {
    require_pole_free(f, ball)?;
    let a = ball.center();
    let top = f.num().taylor_recenter(a).gauss_norm_exp(ball.radius(), 0);
    let bottom = f.den().eval(a).valuation();
    Ok(match (top, bottom) {
        (ValExp::Infinite, _) => ValExp::Infinite,
        (t, ValExp::Finite(b)) => t - b,
        (_, ValExp::Infinite) => unreachable!("denominator vanishes at the center"),
    })
}

/// `g(z) = P(z)·Q(a) - P(a)·Q(z)`, so that `f(z) - f(a) = g(z) / (Q(z)·Q(a))`.
fn difference_numerator(f: &RationalMap, a: &KElement) -> Poly {
    let pa = f.num().eval(a);
    let qa = f.den().eval(a);
    f.num().scale(&qa).sub(&f.den().scale(&pa))
}

/// Exact image of a ball under a map without poles in it: a ball of the same
/// kind centered at `f(center)`.
pub fn image_of_ball(f: &RationalMap, ball: &Ball) -> Result<Ball> {
    require_pole_free(f, ball)?;
    let a = ball.center();
    let qa = f.den().eval(a);
    let fa = f.eval(a).value().expect("no pole at the center");
    let g = difference_numerator(f, a).taylor_recenter(a);
    let e = match (g.gauss_norm_exp(ball.radius(), 1), qa.valuation()) {
        (ValExp::Finite(e), ValExp::Finite(vq)) => e - vq * 2,
        _ => return Err(Error::ConstantOnBall(ball.to_string())),
    };
    Ok(Ball::new(fa, Radius::new(e), ball.kind()))
}

/// Weierstrass degree of `f - b` on the ball: the number of solutions of
/// `f(z) = b` in the ball, with multiplicity.
pub fn wdeg(f: &RationalMap, b: &KElement, ball: &Ball) -> Result<usize> {
    let image = image_of_ball(f, ball)?;
    if !image.contains(b) {
        return Err(Error::OutsideImage(b.to_string()));
    }
    let shifted = f.num().sub(&f.den().scale(b));
    count_roots_in_ball(&shifted, ball)
}

/// Deterministic `K`-points of the ball: the center, then `center + u·π_j`
/// for digits `u = 1..p-1` and shells `j` moving inward one power of `p` at a
/// time, where `π_j` is the canonical element of valuation `j`.
pub fn sample_points(ball: &Ball, budget: usize) -> Vec<KElement> {
    let p = ball.prime();
    let e = ball.radius().exp();
    let start = match ball.kind() {
        BallKind::Closed => e,
        BallKind::Open => Half::from_int(e.floor() + 1),
    };
    let mut out = Vec::with_capacity(budget);
    if budget == 0 {
        return out;
    }
    out.push(ball.center().clone());
    let mut shell = start;
    'outer: loop {
        let step = KElement::uniformizer_power(p, shell);
        for u in 1..p.get() {
            if out.len() >= budget {
                break 'outer;
            }
            out.push(ball.center() + &(&step * &KElement::from_int(p, i64::from(u))));
        }
        shell = shell + Half::from_int(1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    fn k(n: i64) -> KElement {
        KElement::from_int(p3(), n)
    }

    fn rad(e: i64) -> Radius {
        Radius::from_exp_int(e)
    }

    fn map(num: &[i64], den: &[i64]) -> RationalMap {
        RationalMap::new(Poly::from_ints(p3(), num), Poly::from_ints(p3(), den)).unwrap()
    }

    #[test]
    fn radius_order_is_by_size() {
        assert!(rad(1) < rad(0));
        assert_eq!(rad(3).min(rad(1)), rad(3));
        assert_eq!(rad(2).geometric_mean(rad(1)).unwrap().exp(), Half::from_halves(3));
        assert!(Radius::new(Half::from_halves(1)).geometric_mean(rad(0)).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_exp(&k(0), &k(3)), ValExp::int(1));
        assert_eq!(distance_exp(&k(0), &k(6)), ValExp::int(1));
        assert_eq!(distance_exp(&k(5), &k(5)), ValExp::Infinite);
    }

    #[test]
    fn delta_examples() {
        let d = pairwise_deltas(&[k(0), k(3), k(6)]).unwrap();
        assert_eq!(d, vec![rad(1); 3]);
        assert_eq!(pairwise_deltas(&[k(0), k(3)]).unwrap(), vec![rad(1); 2]);
        assert_eq!(pairwise_deltas(&[k(0), k(1)]).unwrap(), vec![rad(0); 2]);
        assert_eq!(pairwise_deltas(&[k(0), k(9), k(1)]).unwrap(), vec![rad(2), rad(2), rad(0)]);
        assert_eq!(pairwise_deltas(&[k(0)]), Err(Error::TooFewCenters));
        assert_eq!(pairwise_deltas(&[k(0), k(2), k(0)]), Err(Error::DuplicateCenters(0, 2)));
    }

    #[test]
    fn pole_free_examples() {
        let p = p3();
        let c = KElement::uniformizer_power(p, Half::from_halves(3));
        // 1 / (1 - (z/c)^7)
        let den = Poly::one(p).sub(&Poly::shifted_power(&KElement::zero(p), 7).rescale_argument(&c).unwrap());
        let h = RationalMap::new(Poly::one(p), den).unwrap();
        assert!(pole_free_on_ball(&h, &Ball::closed(k(0), rad(2))));
        assert!(!pole_free_on_ball(&h, &Ball::closed(k(0), rad(1))));
        assert!(!pole_free_on_ball(&map(&[1], &[0, 1]), &Ball::closed(k(0), rad(0))));
        assert!(pole_free_on_ball(&map(&[1, 2, 3], &[1]), &Ball::closed(k(0), rad(-5))));
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm_exp_on_ball(&map(&[0, 3], &[1]), &Ball::closed(k(0), rad(2))).unwrap(), ValExp::int(3));
        assert_eq!(
            sup_norm_exp_on_ball(&map(&[5], &[1]), &Ball::closed(k(0), rad(2))).unwrap(),
            k(5).valuation()
        );
        assert_eq!(
            sup_norm_exp_on_ball(&map(&[0, 1], &[-1, 1]), &Ball::closed(k(0), rad(1))).unwrap(),
            ValExp::int(1)
        );
        assert!(matches!(
            sup_norm_exp_on_ball(&map(&[1], &[0, 1]), &Ball::closed(k(0), rad(1))),
            Err(Error::PoleInBall(_))
        ));
    }

    #[test]
    fn image_examples() {
        assert_eq!(
            image_of_ball(&map(&[0, 3], &[1]), &Ball::closed(k(0), rad(2))).unwrap(),
            Ball::closed(k(0), rad(3))
        );
        assert_eq!(
            image_of_ball(&map(&[6, 1], &[3]), &Ball::closed(k(3), rad(2))).unwrap(),
            Ball::closed(k(3), rad(1))
        );
        let b = Ball::open(k(7), rad(4));
        assert_eq!(image_of_ball(&RationalMap::identity(p3()), &b).unwrap(), b);
        assert!(matches!(
            image_of_ball(&map(&[4], &[1]), &b),
            Err(Error::ConstantOnBall(_))
        ));
    }

    #[test]
    fn image_of_rational_map_matches_hand_computation() {
        // z/(z-1) on B_{1/3}(0): f(z) = -z(1 + z + ...), image B_{1/3}(0).
        let img = image_of_ball(&map(&[0, 1], &[-1, 1]), &Ball::closed(k(0), rad(1))).unwrap();
        assert_eq!(img, Ball::closed(k(0), rad(1)));
    }

    #[test]
    fn wdeg_examples() {
        assert_eq!(wdeg(&map(&[0, 3], &[1]), &k(0), &Ball::closed(k(0), rad(2))).unwrap(), 1);
        assert_eq!(wdeg(&map(&[0, 0, 1], &[1]), &k(0), &Ball::closed(k(0), rad(0))).unwrap(), 2);
        assert_eq!(wdeg(&map(&[0, -3, 1], &[1]), &k(0), &Ball::closed(k(0), rad(1))).unwrap(), 2);
        assert!(matches!(
            wdeg(&map(&[0, 3], &[1]), &k(1), &Ball::closed(k(0), rad(2))),
            Err(Error::OutsideImage(_))
        ));
    }

    #[test]
    fn sample_examples() {
        assert_eq!(sample_points(&Ball::closed(k(0), rad(2)), 3), vec![k(0), k(9), k(18)]);
        assert_eq!(sample_points(&Ball::closed(k(0), rad(0)), 4), vec![k(0), k(1), k(2), k(3)]);
        assert_eq!(sample_points(&Ball::open(k(5), rad(1)), 1), vec![k(5)]);
        let half = Ball::closed(k(0), Radius::new(Half::from_halves(3)));
        let pts = sample_points(&half, 6);
        assert!(pts.iter().all(|x| half.contains(x)));
        assert_eq!(pts[1].valuation(), ValExp::Finite(Half::from_halves(3)));
        let open = Ball::open(k(1), rad(1));
        assert!(sample_points(&open, 10).iter().all(|x| open.contains(x)));
    }

    #[test]
    fn containment_and_disjointness() {
        let big = Ball::closed(k(0), rad(1));
        let small = Ball::closed(k(3), rad(2));
        assert!(big.contains_ball(&small));
        assert!(!small.contains_ball(&big));
        assert!(small.is_proper_subset_of(&big));
        assert!(Ball::closed(k(0), rad(2)).is_disjoint(&Ball::closed(k(3), rad(2))));
        assert!(!Ball::open(k(0), rad(1)).is_disjoint(&Ball::closed(k(3), rad(1))));
        assert!(Ball::open(k(0), rad(1)).is_disjoint(&Ball::open(k(3), rad(1))));
        assert!(!Ball::open(k(0), rad(1)).contains_ball(&Ball::closed(k(0), rad(1))));
        assert!(Ball::closed(k(0), rad(1)).contains_ball(&Ball::open(k(0), rad(1))));
        assert_eq!(Ball::closed(k(0), rad(1)), Ball::closed(k(6), rad(1)));
        assert_ne!(Ball::closed(k(0), rad(1)), Ball::open(k(0), rad(1)));
    }
}
