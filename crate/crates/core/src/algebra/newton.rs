use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::field::ValExp;

use super::Poly;

/// One edge of a Newton polygon. The edge contributes `length` roots (with
/// multiplicity, over `C_p`) of valuation exactly `-slope`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonSegment {
    pub slope: Ratio<i64>,
    pub length: usize,
}

impl NewtonSegment {
    pub fn root_valuation(&self) -> Ratio<i64> {
        -self.slope
    }
}

/// Lower convex hull of the points `(k, v(c_k))`.
///
/// `ord0` is the multiplicity of the root `z = 0`; the remaining roots are
/// described by the segments, whose slopes are strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub ord0: usize,
    pub segments: Vec<NewtonSegment>,
}

impl NewtonPolygon {
    pub fn of(poly: &Poly) -> Result<Self> {
        let ord0 = poly
            .order_at_zero()
            .ok_or(Error::ZeroPolynomial("Newton polygon"))?;
        // Vertices in units of half-valuations so the hull stays integral.
        let points: Vec<(i64, i64)> = poly
            .coeffs()
            .iter()
            .enumerate()
            .skip(ord0)
            .filter_map(|(k, c)| match c.valuation() {
                ValExp::Finite(v) => Some((k as i64, v.halves())),
                ValExp::Infinite => None,
            })
            .collect();

        let mut hull: Vec<(i64, i64)> = Vec::with_capacity(points.len());
        for &pt in &points {
            while hull.len() >= 2 {
                let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (a.0 - o.0) * (pt.1 - o.1) - (a.1 - o.1) * (pt.0 - o.0);
                if cross <= 0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(pt);
        }

        let segments = hull
            .windows(2)
            .map(|w| {
                let (dk, dv) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                NewtonSegment {
                    slope: Ratio::new(dv, 2 * dk),
                    length: dk as usize,
                }
            })
            .collect();
        Ok(NewtonPolygon { ord0, segments })
    }

    /// Total number of roots described, which equals the degree.
    pub fn total(&self) -> usize {
        self.ord0 + self.segments.iter().map(|s| s.length).sum::<usize>()
    }

    /// Number of roots whose valuation satisfies `keep`; the root `0`
    /// (valuation `+∞`) is passed as `None`.
    pub fn count_roots(&self, keep: impl Fn(Option<Ratio<i64>>) -> bool) -> usize {
        let zeros = if keep(None) { self.ord0 } else { 0 };
        zeros
            + self
                .segments
                .iter()
                .filter(|s| keep(Some(s.root_valuation())))
                .map(|s| s.length)
                .sum::<usize>()
    }
}
