//! Fixed points of glued maps: multipliers, disk classification, census of
//! inherited fixed points, Newton refinement and orbits.

use rayon::prelude::*;

use crate::algebra::{Evaluation, RationalMap};
use crate::error::{Error, Result};
use crate::field::{Half, KElement, ValExp};
use crate::geometry::{
    distance_exp, image_of_ball, pole_free_on_ball, wdeg, Ball, BallKind, Radius,
};
use crate::gluing::{build_f, check_indifferent_at, plan_gluing, IndifferentCheck, GluingPlan, LocalModel, PlanOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FixedPointKind {
    Attracting,
    Repelling,
    Indifferent,
}

impl FixedPointKind {
    /// Kind of a fixed point with multiplier `lambda`, by `|λ|` against 1.
    pub fn of_multiplier(lambda: &KElement) -> Self {
        match lambda.valuation() {
            ValExp::Infinite => FixedPointKind::Attracting,
            ValExp::Finite(v) if v > Half::ZERO => FixedPointKind::Attracting,
            ValExp::Finite(v) if v < Half::ZERO => FixedPointKind::Repelling,
            ValExp::Finite(_) => FixedPointKind::Indifferent,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FixedPointKind::Attracting => "attracting",
            FixedPointKind::Repelling => "repelling",
            FixedPointKind::Indifferent => "indifferent",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "attracting" => Some(FixedPointKind::Attracting),
            "repelling" => Some(FixedPointKind::Repelling),
            "indifferent" => Some(FixedPointKind::Indifferent),
            _ => None,
        }
    }
}

/// `f'(x)` at a fixed point `x`.
pub fn multiplier(f: &RationalMap, x: &KElement) -> Result<KElement> {
    match f.eval(x) {
        Evaluation::Value(y) if &y == x => {}
        _ => return Err(Error::NotFixed(x.to_string())),
    }
    Ok(f.eval_derivative(x).value().expect("fixed point is not a pole"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiskBehavior {
    /// A unique fixed point in the disk, attracting.
    Attracting,
    /// A unique fixed point in the disk, repelling.
    Repelling,
    /// The map is a bijection of the disk onto itself; any fixed point is
    /// indifferent.
    IndifferentBijective,
    Inconclusive,
}

impl DiskBehavior {
    pub fn kind(self) -> Option<FixedPointKind> {
        match self {
            DiskBehavior::Attracting => Some(FixedPointKind::Attracting),
            DiskBehavior::Repelling => Some(FixedPointKind::Repelling),
            DiskBehavior::IndifferentBijective => Some(FixedPointKind::Indifferent),
            DiskBehavior::Inconclusive => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DiskBehavior::Attracting => "attracting",
            DiskBehavior::Repelling => "repelling",
            DiskBehavior::IndifferentBijective => "indifferent-bijective",
            DiskBehavior::Inconclusive => "inconclusive",
        }
    }
}

/// Classification of an open disk together with the data it rests on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub behavior: DiskBehavior,
    pub image: Option<Ball>,
    pub wdeg: Option<usize>,
    pub derivative_at_center: KElement,
    /// A fixed point is known to exist in the disk. Always true for the
    /// attracting and repelling cases; for bijective disks it needs
    /// `|F'(a) - 1| = 1` at the center `a`.
    pub existence_certified: bool,
}

/// Compares `F(U)` with `U` for an open disk `U` and reads off the fixed
/// point behavior.
pub fn classify_disk(f: &RationalMap, disk: &Ball) -> Result<Classification> {
    if !pole_free_on_ball(f, disk) {
        return Err(Error::PoleInBall(disk.to_string()));
    }
    let a = disk.center();
    let derivative_at_center = f.eval_derivative(a).value().expect("pole-free");
    let mut out = Classification {
        behavior: DiskBehavior::Inconclusive,
        image: None,
        wdeg: None,
        derivative_at_center,
        existence_certified: false,
    };
    let image = match image_of_ball(f, disk) {
        Ok(b) => b,
        Err(Error::ConstantOnBall(_)) => return Ok(out),
        Err(e) => return Err(e),
    };
    out.image = Some(image.clone());
    if image.is_disjoint(disk) {
        return Ok(out);
    }
    if image.is_proper_subset_of(disk) {
        out.behavior = DiskBehavior::Attracting;
        out.existence_certified = true;
        return Ok(out);
    }
    // Nested balls that are not disjoint: image == disk or image ⊋ disk.
    let d = wdeg(f, a, disk)?;
    out.wdeg = Some(d);
    if image == *disk {
        if d >= 2 {
            out.behavior = DiskBehavior::Attracting;
            out.existence_certified = true;
        } else {
            out.behavior = DiskBehavior::IndifferentBijective;
            let gap = &out.derivative_at_center - &KElement::one(a.prime());
            out.existence_certified = gap.valuation() == ValExp::Finite(Half::ZERO);
        }
    } else if d == 1 {
        out.behavior = DiskBehavior::Repelling;
        out.existence_certified = true;
    }
    Ok(out)
}

/// Expected fixed point counts for one ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BallCounts {
    pub attracting: usize,
    pub repelling: usize,
    pub indifferent: usize,
}

impl std::fmt::Display for BallCounts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} attracting, {} repelling, {} indifferent",
            self.attracting, self.repelling, self.indifferent
        )
    }
}

impl BallCounts {
    fn bump(&mut self, kind: FixedPointKind) {
        match kind {
            FixedPointKind::Attracting => self.attracting += 1,
            FixedPointKind::Repelling => self.repelling += 1,
            FixedPointKind::Indifferent => self.indifferent += 1,
        }
    }
}

/// An open disk inside ball `ball` expected to isolate one fixed point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub ball: usize,
    pub disk: Ball,
    pub kind: FixedPointKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixedPointCensus {
    pub counts: Vec<BallCounts>,
    pub witnesses: Vec<Witness>,
}

/// Checks that witnesses are open, lie in their balls, are pairwise disjoint
/// and behave as expected under the local model itself.
pub fn validate_census(census: &FixedPointCensus, models: &[LocalModel]) -> Result<()> {
    if census.counts.len() != models.len() {
        return Err(Error::OverrideLength {
            expected: models.len(),
            found: census.counts.len(),
        });
    }
    let bad = |index, reason: String| Error::BadWitness { index, reason };
    for (index, w) in census.witnesses.iter().enumerate() {
        let model = models
            .get(w.ball)
            .ok_or_else(|| bad(index, format!("ball index {} out of range", w.ball)))?;
        if w.disk.kind() != BallKind::Open {
            return Err(bad(index, "witness disks must be open".into()));
        }
        if !model.domain().contains_ball(&w.disk) {
            return Err(bad(index, format!("{} is not inside {}", w.disk, model.domain())));
        }
        for (j, other) in census.witnesses.iter().enumerate().take(index) {
            if !w.disk.is_disjoint(&other.disk) {
                return Err(bad(index, format!("meets witness {j}")));
            }
        }
        let local = classify_disk(model.map(), &w.disk).map_err(|e| bad(index, e.to_string()))?;
        if local.behavior.kind() != Some(w.kind) {
            return Err(bad(
                index,
                format!("local model is {} on {}, expected {}", local.behavior.name(), w.disk, w.kind.name()),
            ));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessReport {
    pub witness: Witness,
    pub classification: Classification,
    /// Hypotheses for inheriting an indifferent point, when the local model
    /// fixes the witness center.
    pub indifferent_check: Option<IndifferentCheck>,
    pub counted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusReport {
    pub expected: Vec<BallCounts>,
    pub observed: Vec<BallCounts>,
    pub witnesses: Vec<WitnessReport>,
    pub mismatches: Vec<String>,
}

impl CensusReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Classifies every witness disk under the glued map and compares the
/// per-ball tallies with the expected counts.
pub fn verify_census(
    f: &RationalMap,
    census: &FixedPointCensus,
    models: &[LocalModel],
) -> Result<CensusReport> {
    validate_census(census, models)?;
    let witnesses: Vec<WitnessReport> = census
        .witnesses
        .par_iter()
        .map(|w| -> Result<WitnessReport> {
            let classification = classify_disk(f, &w.disk)?;
            let center = w.disk.center();
            let indifferent_check = if models[w.ball].map().eval(center).value().as_ref() == Some(center) {
                Some(check_indifferent_at(models, w.ball, center)?)
            } else {
                None
            };
            let counted = classification.behavior.kind() == Some(w.kind)
                && (w.kind != FixedPointKind::Indifferent
                    || (classification.existence_certified && indifferent_check.as_ref().is_some_and(IndifferentCheck::holds)));
            Ok(WitnessReport {
                witness: w.clone(),
                classification,
                indifferent_check,
                counted,
            })
        })
        .collect::<Result<_>>()?;

    let mut observed = vec![BallCounts::default(); models.len()];
    let mut mismatches = Vec::new();
    for (i, r) in witnesses.iter().enumerate() {
        if r.counted {
            observed[r.witness.ball].bump(r.witness.kind);
        } else if r.classification.behavior.kind() != Some(r.witness.kind) {
            mismatches.push(format!(
                "witness {i} ({}): expected {}, found {}",
                r.witness.disk,
                r.witness.kind.name(),
                r.classification.behavior.name()
            ));
        } else {
            let reason = if !r.classification.existence_certified {
                "existence of a fixed point is not certified (|F'(a) - 1| < 1)"
            } else {
                "inheritance hypotheses for indifferent points fail"
            };
            mismatches.push(format!("witness {i} ({}): indifferent, but {reason}", r.witness.disk));
        }
    }
    for (i, (e, o)) in census.counts.iter().zip(&observed).enumerate() {
        if e != o {
            mismatches.push(format!("ball {i}: expected {e}, observed {o}"));
        }
    }
    Ok(CensusReport {
        expected: census.counts.clone(),
        observed,
        witnesses,
        mismatches,
    })
}

/// Largest `ε` (as a radius, strictly below every witness bound) for which
/// the witnesses carry over to the glued map: `ε < t'` for attracting and
/// repelling witnesses with local image radius `t'`, and `ε < min{δ_i, r'}`
/// for indifferent ones. `None` when there are no witnesses.
pub fn census_epsilon(census: &FixedPointCensus, models: &[LocalModel], deltas: &[Radius]) -> Result<Option<Radius>> {
    let mut bound: Option<Radius> = None;
    for w in &census.witnesses {
        let model = models.get(w.ball).ok_or(Error::IndexOutOfRange(w.ball))?;
        let b = match w.kind {
            FixedPointKind::Indifferent => {
                let delta = *deltas.get(w.ball).ok_or(Error::IndexOutOfRange(w.ball))?;
                w.disk.radius().min(delta)
            }
            _ => image_of_ball(model.map(), &w.disk)?.radius(),
        };
        bound = Some(bound.map_or(b, |x| x.min(b)));
    }
    Ok(bound.map(|b| b.times_p_pow(Half::from_int(-1))))
}

/// Plans and builds `F` with `ε` small enough for the census, and `M_i > 1`
/// on balls holding indifferent witnesses. Returns the plan actually used.
pub fn glue_for_census(
    models: &[LocalModel],
    census: &FixedPointCensus,
    epsilon: Radius,
    opts: &PlanOptions,
) -> Result<(GluingPlan, RationalMap)> {
    let first = plan_gluing(models, epsilon, opts)?;
    let deltas: Vec<Radius> = first.entries.iter().map(|e| e.delta).collect();
    let eps = match census_epsilon(census, models, &deltas)? {
        Some(b) => b.min(epsilon),
        None => epsilon,
    };
    let mut plan = if eps == epsilon { first } else { plan_gluing(models, eps, opts)? };
    for w in &census.witnesses {
        if w.kind == FixedPointKind::Indifferent && plan.entries[w.ball].m == 1 {
            plan.entries[w.ball].m = 2;
        }
    }
    let f = build_f(models, &plan)?;
    Ok((plan, f))
}

fn g_and_derivative(f: &RationalMap, z: &KElement) -> Option<(KElement, KElement)> {
    let fz = f.eval(z).value()?;
    let dz = f.eval_derivative(z).value()?;
    Some((&fz - z, &dz - &KElement::one(z.prime())))
}

/// When Newton's condition `v(G(z)) > 2·v(G'(z))` holds for `G = F - z`,
/// the true fixed point `x` near `z` satisfies `v(z - x) = v(G(z)) - v(G'(z))`.
/// Returns that exponent (`+∞` if `z` is already fixed).
pub fn fixed_point_precision(f: &RationalMap, z: &KElement) -> Option<ValExp> {
    let (g, dg) = g_and_derivative(f, z)?;
    let ValExp::Finite(vd) = dg.valuation() else {
        return None;
    };
    match g.valuation() {
        ValExp::Infinite => Some(ValExp::Infinite),
        ValExp::Finite(vg) if vg > vd * 2 => Some(ValExp::Finite(vg - vd)),
        _ => None,
    }
}

const MAX_NEWTON_STEPS: usize = 64;

/// Newton iteration for a fixed point of `F` from `start` until
/// `v(F(z) - z) >= target`.
///
/// For a finite target, iterates are truncated at a working precision a few
/// powers of `p` beyond what the target needs, which keeps heights bounded;
/// the stopping test is always exact.
pub fn hensel_fixed_point(f: &RationalMap, start: &KElement, target: ValExp) -> Result<KElement> {
    let fail = || Error::HenselCondition(start.to_string());
    let (g, dg) = g_and_derivative(f, start).ok_or_else(fail)?;
    if g.is_zero() {
        return Ok(start.clone());
    }
    let (ValExp::Finite(vg), ValExp::Finite(vd)) = (g.valuation(), dg.valuation()) else {
        return Err(fail());
    };
    if vg <= vd * 2 {
        return Err(fail());
    }
    let working = target.finite().map(|t| {
        let slack = Half::from_int(2 * vd.ceil().abs() + 2);
        t + slack
    });

    let mut z = start.clone();
    let (mut g, mut dg) = (g, dg);
    for _ in 0..MAX_NEWTON_STEPS {
        if g.valuation() >= target {
            return Ok(z);
        }
        let step = g.checked_div(&dg).map_err(|_| fail())?;
        z = &z - &step;
        if let Some(w) = working {
            z = z.truncated(w);
        }
        (g, dg) = g_and_derivative(f, &z).ok_or_else(fail)?;
        if g.is_zero() {
            return Ok(z);
        }
        if dg.is_zero() {
            return Err(fail());
        }
    }
    Err(Error::NoConvergence(MAX_NEWTON_STEPS))
}

/// Distance from an orbit point to the reference point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    Exact(ValExp),
    /// The distance exponent is at least this value; the error balls are too
    /// large to say more.
    AtLeast(ValExp),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitStep {
    pub index: usize,
    /// Representative of the iterate.
    pub point: KElement,
    /// The true iterate lies within `p^(-precision)` of `point`.
    pub precision: ValExp,
    pub distance: Option<Distance>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitEnd {
    Completed,
    /// The iterate with this index is a pole of `F`.
    Pole(usize),
    /// The error ball around this iterate contains a pole, so the next
    /// iterate cannot be located.
    PrecisionLost(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbit {
    pub steps: Vec<OrbitStep>,
    pub end: OrbitEnd,
}

/// A point known up to `v(true - point) >= precision`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approximate {
    pub point: KElement,
    pub precision: ValExp,
}

impl Approximate {
    pub fn exact(point: KElement) -> Self {
        Approximate {
            point,
            precision: ValExp::Infinite,
        }
    }
}

fn distance_to(point: &KElement, precision: ValExp, reference: &Approximate) -> Distance {
    let known = precision.min(reference.precision);
    let d = distance_exp(point, &reference.point);
    if d < known {
        Distance::Exact(d)
    } else {
        Distance::AtLeast(known)
    }
}

/// Iterates `F` pointwise from `z0` for `steps` steps.
///
/// With `working_precision = None` every iterate is exact. Otherwise each
/// iterate is truncated to that precision and the error is carried along as
/// a ball: the next error ball is the exact image of the current one, so
/// every reported precision is certified.
pub fn orbit(
    f: &RationalMap,
    z0: &KElement,
    steps: usize,
    reference: Option<&Approximate>,
    working_precision: Option<Half>,
) -> Orbit {
    let mut out = Vec::with_capacity(steps + 1);
    let mut z = z0.clone();
    let mut precision = ValExp::Infinite;
    let record = |index, z: &KElement, precision| OrbitStep {
        index,
        point: z.clone(),
        precision,
        distance: reference.map(|r| distance_to(z, precision, r)),
    };
    out.push(record(0, &z, precision));
    for index in 1..=steps {
        let next = match precision {
            ValExp::Infinite => match f.eval(&z) {
                Evaluation::Value(v) => (v, ValExp::Infinite),
                Evaluation::Pole => return Orbit { steps: out, end: OrbitEnd::Pole(index - 1) },
            },
            ValExp::Finite(e) => {
                let ball = Ball::closed(z.clone(), Radius::new(e));
                match image_of_ball(f, &ball) {
                    Ok(img) => (img.center().clone(), ValExp::Finite(img.radius().exp())),
                    Err(Error::ConstantOnBall(_)) => {
                        let v = f.eval(&z).value().expect("pole-free");
                        (v, ValExp::Infinite)
                    }
                    Err(_) if f.eval(&z) == Evaluation::Pole => {
                        return Orbit { steps: out, end: OrbitEnd::Pole(index - 1) }
                    }
                    Err(_) => return Orbit { steps: out, end: OrbitEnd::PrecisionLost(index - 1) },
                }
            }
        };
        let (mut point, mut prec) = next;
        if let Some(w) = working_precision {
            let truncated = point.truncated(w);
            if truncated != point {
                point = truncated;
                prec = prec.min(ValExp::Finite(w));
            }
        }
        z = point;
        precision = prec;
        out.push(record(index, &z, precision));
    }
    Orbit {
        steps: out,
        end: OrbitEnd::Completed,
    }
}
