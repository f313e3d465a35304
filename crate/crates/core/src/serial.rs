//! JSON representations. Every number is an exact string: rationals as
//! `"num/den"`, exponents as `"n/1"` or `"n/2"`, infinite valuations as
//! `"inf"`.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::{Poly, RationalMap};
use crate::error::{Error, Result};
use crate::field::{parse_rational, rational_to_string, Half, KElement, Prime, ValExp};
use crate::geometry::{Ball, BallKind, Radius};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KElementRepr {
    /// Shorthand for an element of `Q`.
    Rational(String),
    Full {
        a: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<String>,
    },
}

impl KElementRepr {
    pub fn from_element(x: &KElement) -> Self {
        KElementRepr::Full {
            a: rational_to_string(x.rational_part()),
            b: Some(rational_to_string(x.sqrt_part())),
        }
    }

    pub fn to_element(&self, p: Prime, path: &str) -> Result<KElement> {
        let rat = |s: &str, sub: &str| {
            parse_rational(s).map_err(|_| Error::parse(format!("{path}{sub}"), format!("bad rational {s:?}")))
        };
        Ok(match self {
            KElementRepr::Rational(s) => KElement::from_rational(p, rat(s, "")?),
            KElementRepr::Full { a, b } => {
                let b = match b {
                    Some(b) => rat(b, ".b")?,
                    None => BigRational::zero(),
                };
                KElement::new(p, rat(a, ".a")?, b)
            }
        })
    }
}

pub fn half_to_string(h: Half) -> String {
    h.to_fraction_string()
}

pub fn parse_half(s: &str, path: &str) -> Result<Half> {
    Half::parse(s).map_err(|_| Error::parse(path, format!("{s:?} is not a half-integer exponent")))
}

pub fn parse_valexp(s: &str, path: &str) -> Result<ValExp> {
    ValExp::parse(s).map_err(|_| Error::parse(path, format!("{s:?} is not a valuation exponent")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallRepr {
    pub center: KElementRepr,
    pub radius_exp: String,
    pub kind: String,
}

impl BallRepr {
    pub fn from_ball(b: &Ball) -> Self {
        BallRepr {
            center: KElementRepr::from_element(b.center()),
            radius_exp: half_to_string(b.radius().exp()),
            kind: match b.kind() {
                BallKind::Closed => "closed",
                BallKind::Open => "open",
            }
            .into(),
        }
    }

    pub fn to_ball(&self, p: Prime, path: &str) -> Result<Ball> {
        let center = self.center.to_element(p, &format!("{path}.center"))?;
        let e = parse_half(&self.radius_exp, &format!("{path}.radius_exp"))?;
        let kind = match self.kind.as_str() {
            "closed" => BallKind::Closed,
            "open" => BallKind::Open,
            other => {
                return Err(Error::parse(
                    format!("{path}.kind"),
                    format!("expected \"open\" or \"closed\", found {other:?}"),
                ))
            }
        };
        Ok(Ball::new(center, Radius::new(e), kind))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapRepr {
    pub num: Vec<KElementRepr>,
    #[serde(default = "MapRepr::one")]
    pub den: Vec<KElementRepr>,
}

impl MapRepr {
    fn one() -> Vec<KElementRepr> {
        vec![KElementRepr::Rational("1".into())]
    }

    pub fn from_map(f: &RationalMap) -> Self {
        let coeffs = |p: &Poly| p.coeffs().iter().map(KElementRepr::from_element).collect();
        MapRepr {
            num: coeffs(f.num()),
            den: coeffs(f.den()),
        }
    }

    pub fn to_map(&self, p: Prime, path: &str) -> Result<RationalMap> {
        let poly = |cs: &[KElementRepr], part: &str| -> Result<Poly> {
            let coeffs = cs
                .iter()
                .enumerate()
                .map(|(k, c)| c.to_element(p, &format!("{path}.{part}[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Poly::new(p, coeffs))
        };
        RationalMap::new(poly(&self.num, "num")?, poly(&self.den, "den")?)
            .map_err(|e| Error::parse(format!("{path}.den"), e.to_string()))
    }
}
