//! Polynomials and rational functions over `K`, Newton polygons and root
//! counting in balls.

mod newton;
mod poly;
mod ratmap;

pub use newton::{NewtonPolygon, NewtonSegment};
pub use poly::Poly;
pub use ratmap::{Evaluation, RationalMap};

use crate::error::Result;
use crate::geometry::{Ball, BallKind};
use num_rational::Ratio;

/// Number of roots of `poly` (over `C_p`, with multiplicity) inside `ball`.
pub fn count_roots_in_ball(poly: &Poly, ball: &Ball) -> Result<usize> {
    let shifted = poly.taylor_recenter(ball.center());
    let np = NewtonPolygon::of(&shifted)?;
    let e = ball.radius().exp();
    let bound = Ratio::new(e.halves(), 2);
    let kind = ball.kind();
    Ok(np.count_roots(|v| match (v, kind) {
        (None, _) => true,
        (Some(v), BallKind::Closed) => v >= bound,
        (Some(v), BallKind::Open) => v > bound,
    }))
}
