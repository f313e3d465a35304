//! The two reference problems over `p = 3`.
//!
//! `example1(α, β)`: `αz` on `B_{1/9}(0)` and `βz(z-3) + z` on `B_{1/9}(3)`,
//! whose fixed points `0` and `3` have multipliers `α` and `3β + 1`.
//!
//! `example2()`: `3z`, `(z+6)/3` and `z` on the balls of radius `1/9` around
//! `0`, `3` and `6`, glued with `ε = 1/27`.

use crate::algebra::{Poly, RationalMap};
use crate::dynamics::{BallCounts, FixedPointCensus, FixedPointKind, Witness};
use crate::error::Result;
use crate::field::{Half, KElement, Prime};
use crate::geometry::{Ball, Radius};
use crate::gluing::{LocalModel, PlanOptions};
use crate::problem::{OrbitRequest, Problem};

fn p3() -> Prime {
    Prime::new(3).expect("3 is prime")
}

fn counts_for(kind: FixedPointKind) -> BallCounts {
    let mut c = BallCounts::default();
    match kind {
        FixedPointKind::Attracting => c.attracting = 1,
        FixedPointKind::Repelling => c.repelling = 1,
        FixedPointKind::Indifferent => c.indifferent = 1,
    }
    c
}

pub fn example1(alpha: &KElement, beta: &KElement) -> Result<Problem> {
    let p = p3();
    let r = Radius::from_exp_int(2);
    let zero = KElement::zero(p);
    let three = KElement::from_int(p, 3);

    let f1 = RationalMap::identity(p).scale(alpha);
    // βz(z - 3) + z = βz^2 + (1 - 3β)z
    let lin = &KElement::one(p) - &(&three * beta);
    let f2 = RationalMap::from_poly(Poly::new(p, vec![zero.clone(), lin, beta.clone()]));

    let models = vec![
        LocalModel::new(f1, Ball::closed(zero.clone(), r), None).map_err(|e| e.at_model(0))?,
        LocalModel::new(f2, Ball::closed(three.clone(), r), None).map_err(|e| e.at_model(1))?,
    ];
    let k1 = FixedPointKind::of_multiplier(alpha);
    let k2 = FixedPointKind::of_multiplier(&(&(&three * beta) + &KElement::one(p)));
    let census = FixedPointCensus {
        counts: vec![counts_for(k1), counts_for(k2)],
        witnesses: vec![
            Witness { ball: 0, disk: Ball::open(zero, r), kind: k1 },
            Witness { ball: 1, disk: Ball::open(three, r), kind: k2 },
        ],
    };
    Ok(Problem {
        prime: p,
        epsilon: Radius::from_exp_int(3),
        models,
        options: PlanOptions::default(),
        census: Some(census),
        orbits: Vec::new(),
    })
}

/// `F'(0) = α + (1 - 3β) / (1 - (-3/c₂)^{M₂})` for the glued map of
/// [`example1`], as a closed form in the plan constants of the second ball.
pub fn example1_derivative_at_zero(alpha: &KElement, beta: &KElement, c2: &KElement, m2: u32) -> Result<KElement> {
    let p = alpha.prime();
    let one = KElement::one(p);
    let top = &one - &(&KElement::from_int(p, 3) * beta);
    let ratio = KElement::from_int(p, -3).checked_div(c2)?;
    let bottom = &one - &ratio.pow(m2);
    Ok(alpha + &top.checked_div(&bottom)?)
}

pub fn example2() -> Problem {
    let p = p3();
    let r = Radius::from_exp_int(2);
    let k = |n| KElement::from_int(p, n);
    let maps = [
        RationalMap::from_poly(Poly::from_ints(p, &[0, 3])),
        RationalMap::new(Poly::from_ints(p, &[6, 1]), Poly::from_ints(p, &[3])).expect("nonzero denominator"),
        RationalMap::identity(p),
    ];
    let models = maps
        .into_iter()
        .zip([0, 3, 6])
        .map(|(f, a)| LocalModel::new(f, Ball::closed(k(a), r), None).expect("valid model"))
        .collect();
    let census = FixedPointCensus {
        counts: vec![
            counts_for(FixedPointKind::Attracting),
            counts_for(FixedPointKind::Repelling),
            BallCounts::default(),
        ],
        witnesses: vec![
            Witness { ball: 0, disk: Ball::open(k(0), r), kind: FixedPointKind::Attracting },
            Witness { ball: 1, disk: Ball::open(k(3), r), kind: FixedPointKind::Repelling },
        ],
    };
    Problem {
        prime: p,
        epsilon: Radius::from_exp_int(3),
        models,
        options: PlanOptions::default(),
        census: Some(census),
        orbits: vec![OrbitRequest {
            start: k(9),
            steps: 10,
            precision: Some(Half::from_int(40)),
        }],
    }
}
