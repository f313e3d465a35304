//! The ε-approximation construction.
//!
//! Given local models `f_i` on pairwise disjoint closed balls `B_{r_i}(a_i)`,
//! the glued map is `F = Σ f_i·h_i` with kernels
//! `h_i(z) = 1 / (1 - ((z - a_i)/c_i)^{M_i})`. Each kernel is within
//! `(r_i/δ_i)^{M_i/2}` of 1 on its own ball and within the same bound of 0
//! outside `D_{δ_i}(a_i)`, which is what makes `F` agree with `f_i` to better
//! than `ε` on `B_{r_i}(a_i)` while keeping the same image ball.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::algebra::{Poly, RationalMap};
use crate::error::{Error, Result};
use crate::field::{KElement, ValExp};
use crate::geometry::{
    image_of_ball, pairwise_deltas, pole_free_on_ball, sample_points, sup_norm_exp_on_ball, Ball,
    BallKind, Radius,
};

/// A local model `f` on a closed ball together with its (verified) image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalModel {
    f: RationalMap,
    domain: Ball,
    image: Ball,
}

impl LocalModel {
    /// Validates that `f` has no pole on `domain` and, if an image is
    /// declared, that it is exactly `f(domain)`.
    ///
    /// Errors carry model index 0; use [`Error::at_model`] to relabel.
    pub fn new(f: RationalMap, domain: Ball, declared_image: Option<Ball>) -> Result<Self> {
        if domain.kind() != BallKind::Closed {
            return Err(Error::NotClosed(0));
        }
        if !pole_free_on_ball(&f, &domain) {
            return Err(Error::ModelPole { model: 0, ball: 0 });
        }
        let computed = match image_of_ball(&f, &domain) {
            Ok(b) => b,
            Err(Error::ConstantOnBall(_)) => return Err(Error::ModelConstant { model: 0, ball: 0 }),
            Err(e) => return Err(e),
        };
        if let Some(declared) = declared_image {
            if declared != computed {
                return Err(Error::ImageMismatch {
                    model: 0,
                    declared: declared.to_string(),
                    computed: computed.to_string(),
                });
            }
            return Ok(LocalModel { f, domain, image: declared });
        }
        Ok(LocalModel { f, domain, image: computed })
    }

    pub fn map(&self) -> &RationalMap {
        &self.f
    }

    pub fn domain(&self) -> &Ball {
        &self.domain
    }

    pub fn image(&self) -> &Ball {
        &self.image
    }

    pub fn center(&self) -> &KElement {
        self.domain.center()
    }
}

impl Error {
    /// Relabels the model index carried by model-validation errors.
    pub fn at_model(self, i: usize) -> Error {
        match self {
            Error::NotClosed(_) => Error::NotClosed(i),
            Error::ModelPole { .. } => Error::ModelPole { model: i, ball: i },
            Error::ModelConstant { .. } => Error::ModelConstant { model: i, ball: i },
            Error::ImageMismatch { declared, computed, .. } => Error::ImageMismatch {
                model: i,
                declared,
                computed,
            },
            other => other,
        }
    }
}

/// Caller-supplied replacements for the planner's default choices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlanOptions {
    pub delta_override: Option<Vec<Radius>>,
    pub m_override: Option<Vec<u32>>,
    pub c_override: Option<Vec<KElement>>,
}

/// Per-ball constants of the construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanEntry {
    pub radius: Radius,
    pub delta: Radius,
    pub s: Radius,
    pub c: KElement,
    pub m: u32,
}

impl PlanEntry {
    /// Exponent of `(r/δ)^{m/2}`, i.e. `m·(e_r - e_δ)/2`.
    pub fn kernel_bound_exp(&self, m: u32) -> Ratio<i64> {
        let gap = (self.radius.exp() - self.delta.exp()).halves();
        Ratio::new(i64::from(m) * gap, 4)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingPlan {
    pub entries: Vec<PlanEntry>,
    pub tau: Radius,
    pub epsilon: Radius,
}

impl GluingPlan {
    /// The strict kernel bound `(r_i/δ_i)^{M/2} < τ` for a given `M`.
    pub fn bound_holds(&self, i: usize, m: u32) -> bool {
        let tau = Ratio::new(self.tau.exp().halves(), 2);
        self.entries[i].kernel_bound_exp(m) > tau
    }
}

/// Smallest `M >= 1` with `M·gap/2 > e_τ`, all exponents in halves.
fn minimal_m(gap_halves: i64, tau_halves: i64) -> u32 {
    debug_assert!(gap_halves > 0);
    // M·gap_halves/4 > tau_halves/2  <=>  M > 2·tau_halves / gap_halves
    let m = (2 * tau_halves).div_euclid(gap_halves) + 1;
    m.max(1) as u32
}

fn check_len<T>(v: &Option<Vec<T>>, n: usize) -> Result<()> {
    match v {
        Some(v) if v.len() != n => Err(Error::OverrideLength {
            expected: n,
            found: v.len(),
        }),
        _ => Ok(()),
    }
}

/// Checks disjointness and the requirement that every `f_i` maps every ball
/// `B_{r_j}(a_j)` into the closed unit ball without poles.
pub fn check_hypotheses(models: &[LocalModel]) -> Result<()> {
    if models.is_empty() {
        return Err(Error::TooFewCenters);
    }
    for (i, a) in models.iter().enumerate() {
        for (j, b) in models.iter().enumerate().skip(i + 1) {
            if !a.domain.is_disjoint(&b.domain) {
                return Err(Error::Overlapping(i, j));
            }
        }
    }
    let unit = Ball::closed(KElement::zero(models[0].center().prime()), Radius::ONE);
    for (i, m) in models.iter().enumerate() {
        for (j, other) in models.iter().enumerate() {
            if !pole_free_on_ball(&m.f, &other.domain) {
                return Err(Error::ModelPole { model: i, ball: j });
            }
            let img = image_of_ball(&m.f, &other.domain)
                .map_err(|_| Error::ModelConstant { model: i, ball: j })?;
            if !unit.contains_ball(&img) {
                return Err(Error::NotInUnitBall {
                    model: i,
                    ball: j,
                    image: img.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Computes `δ_i`, `s_i`, `c_i`, `M_i` and `τ` for the given models and `ε`.
pub fn plan_gluing(models: &[LocalModel], epsilon: Radius, opts: &PlanOptions) -> Result<GluingPlan> {
    check_hypotheses(models)?;
    let n = models.len();
    check_len(&opts.delta_override, n)?;
    check_len(&opts.m_override, n)?;
    check_len(&opts.c_override, n)?;

    let deltas = match (&opts.delta_override, n) {
        (Some(d), 1) => d.clone(),
        (None, 1) => return Err(Error::MissingDeltaOverride),
        (over, _) => {
            let centers: Vec<KElement> = models.iter().map(|m| m.center().clone()).collect();
            let computed = pairwise_deltas(&centers)?;
            match over {
                Some(d) => {
                    for (i, (given, actual)) in d.iter().zip(&computed).enumerate() {
                        if given > actual {
                            return Err(Error::RadiusNotBelowDelta {
                                index: i,
                                detail: format!("delta override {given} exceeds the separation {actual}"),
                            });
                        }
                    }
                    d.clone()
                }
                None => computed,
            }
        }
    };

    let tau = models
        .iter()
        .map(|m| m.image.radius())
        .chain(std::iter::once(epsilon))
        .min()
        .expect("nonempty");

    let mut entries = Vec::with_capacity(n);
    for (i, (model, &delta)) in models.iter().zip(&deltas).enumerate() {
        let radius = model.domain.radius();
        if radius >= delta {
            return Err(Error::RadiusNotBelowDelta {
                index: i,
                detail: format!("r = {radius}, delta = {delta}"),
            });
        }
        let s = radius.geometric_mean(delta)?;
        let c = match &opts.c_override {
            Some(cs) => {
                let c = cs[i].clone();
                if c.valuation() != ValExp::Finite(s.exp()) {
                    return Err(Error::BadCOverride {
                        index: i,
                        detail: format!("|c| has exponent {}, expected {}", c.valuation(), s.exp()),
                    });
                }
                c
            }
            None => KElement::uniformizer_power(model.center().prime(), s.exp()),
        };
        let gap = (radius.exp() - delta.exp()).halves();
        let minimal = minimal_m(gap, tau.exp().halves());
        let m = match &opts.m_override {
            Some(ms) if ms[i] < minimal => {
                return Err(Error::MOverrideTooSmall {
                    index: i,
                    given: ms[i],
                    minimal,
                })
            }
            Some(ms) => ms[i],
            None => minimal,
        };
        entries.push(PlanEntry { radius, delta, s, c, m });
    }
    Ok(GluingPlan { entries, tau, epsilon })
}

/// The gluing kernel `1 / (1 - ((z - a)/c)^M)`, reduced with monic
/// denominator `(z - a)^M - c^M`.
pub fn build_h(a: &KElement, c: &KElement, m: u32) -> Result<RationalMap> {
    if c.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if m == 0 {
        return Err(Error::MOverrideTooSmall { index: 0, given: 0, minimal: 1 });
    }
    let cm = c.pow(m);
    let den = Poly::shifted_power(a, m).sub(&Poly::constant(cm.clone()));
    RationalMap::new(Poly::constant(-cm), den)
}

/// `F = Σ f_i·h_i`.
pub fn build_f(models: &[LocalModel], plan: &GluingPlan) -> Result<RationalMap> {
    if models.len() != plan.entries.len() {
        return Err(Error::OverrideLength {
            expected: models.len(),
            found: plan.entries.len(),
        });
    }
    let p = models
        .first()
        .ok_or(Error::TooFewCenters)?
        .center()
        .prime();
    let mut total = RationalMap::from_poly(Poly::zero(p));
    for (model, entry) in models.iter().zip(&plan.entries) {
        let h = build_h(model.center(), &entry.c, entry.m)?;
        total = total.add(&model.f.mul(&h));
    }
    Ok(total)
}

/// A sampled point with `v(F(z) - f_i(z))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleWitness {
    pub point: KElement,
    pub diff_exp: ValExp,
    pub in_image: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallCertificate {
    pub pole_free_ok: bool,
    pub image: Option<Ball>,
    pub expected_image: Ball,
    pub image_ok: bool,
    /// Exponent of `sup |F - f_i|` over the ball, if it could be computed.
    pub eps_bound_exp: Option<ValExp>,
    pub eps_ok: bool,
    pub samples_ok: bool,
    pub witnesses: Vec<SampleWitness>,
}

impl BallCertificate {
    pub fn passed(&self) -> bool {
        self.pole_free_ok && self.image_ok && self.eps_ok && self.samples_ok
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub epsilon: Radius,
    pub degree: usize,
    pub balls: Vec<BallCertificate>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        !self.balls.is_empty() && self.balls.iter().all(BallCertificate::passed)
    }
}

fn certify_ball(f: &RationalMap, model: &LocalModel, epsilon: Radius, samples: usize) -> BallCertificate {
    let ball = &model.domain;
    let eps = ValExp::Finite(epsilon.exp());
    let mut cert = BallCertificate {
        pole_free_ok: pole_free_on_ball(f, ball),
        image: None,
        expected_image: model.image.clone(),
        image_ok: false,
        eps_bound_exp: None,
        eps_ok: false,
        samples_ok: false,
        witnesses: Vec::new(),
    };
    if !cert.pole_free_ok {
        return cert;
    }
    cert.image = image_of_ball(f, ball).ok();
    cert.image_ok = cert.image.as_ref() == Some(&model.image);

    let diff = f.sub(&model.f);
    let bound = sup_norm_exp_on_ball(&diff, ball).ok();
    cert.eps_ok = bound.is_some_and(|b| b > eps);
    cert.eps_bound_exp = bound;

    cert.witnesses = sample_points(ball, samples)
        .into_par_iter()
        .map(|z| {
            let fz = f.eval(&z).value().expect("pole-free ball");
            let gz = model.f.eval(&z).value().expect("pole-free ball");
            SampleWitness {
                diff_exp: (&fz - &gz).valuation(),
                in_image: model.image.contains(&fz),
                point: z,
            }
        })
        .collect();
    cert.samples_ok = cert
        .witnesses
        .iter()
        .all(|w| w.in_image && w.diff_exp > eps && bound.is_some_and(|b| w.diff_exp >= b));
    cert
}

/// Verifies, for every ball: no poles of `F`, `F(B_i) = f_i(B_i)` exactly,
/// `sup |F - f_i| < ε` exactly, and `samples` pointwise spot checks.
pub fn certify_gluing(
    f: &RationalMap,
    models: &[LocalModel],
    plan: &GluingPlan,
    samples: usize,
) -> Certificate {
    let balls = models
        .par_iter()
        .map(|m| certify_ball(f, m, plan.epsilon, samples))
        .collect();
    Certificate {
        epsilon: plan.epsilon,
        degree: f.degree(),
        balls,
    }
}

/// Builds `F_{ε'}` and certifies it against the larger `ε`.
pub fn check_monotonicity(
    models: &[LocalModel],
    eps: Radius,
    eps_prime: Radius,
    opts: &PlanOptions,
    samples: usize,
) -> Result<bool> {
    if eps_prime >= eps {
        return Err(Error::EpsilonNotSmaller {
            eps: eps.to_string(),
            eps_prime: eps_prime.to_string(),
        });
    }
    let mut plan = plan_gluing(models, eps_prime, opts)?;
    let f = build_f(models, &plan)?;
    plan.epsilon = eps;
    Ok(certify_gluing(&f, models, &plan, samples).passed())
}

/// Outcome of transferring a sub-disk image from `f_i` to `F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transfer {
    Holds(Ball),
    Violated { expected: Ball, found: Ball },
    /// The image radius does not exceed `ε`, so no transfer is claimed.
    Inapplicable,
}

/// For `sub ⊆ B_{r_i}(a_i)` with `f_i(sub)` of radius `> ε`, checks that
/// `F(sub) = f_i(sub)`.
pub fn check_subdisk_transfer(
    f: &RationalMap,
    model: &LocalModel,
    sub: &Ball,
    eps: Radius,
) -> Result<Transfer> {
    if !model.domain.contains_ball(sub) {
        return Err(Error::SubdiskOutside(0));
    }
    let expected = image_of_ball(&model.f, sub)?;
    if expected.radius() <= eps {
        return Ok(Transfer::Inapplicable);
    }
    let found = image_of_ball(f, sub)?;
    Ok(if found == expected {
        Transfer::Holds(found)
    } else {
        Transfer::Violated { expected, found }
    })
}

/// The three hypotheses under which an indifferent fixed point survives
/// gluing, evaluated exactly at a fixed point `x` of `f_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndifferentCheck {
    pub indifferent: bool,
    pub unit_gap: bool,
    pub cross_terms_small: bool,
}

impl IndifferentCheck {
    pub fn holds(&self) -> bool {
        self.indifferent && self.unit_gap && self.cross_terms_small
    }
}

/// Evaluates the indifferent-inheritance hypotheses for model `i` at its
/// ball center `a_i`.
pub fn check_indifferent_hypotheses(models: &[LocalModel], i: usize) -> Result<IndifferentCheck> {
    let a = models.get(i).ok_or(Error::IndexOutOfRange(i))?.center().clone();
    check_indifferent_at(models, i, &a)
}

/// Same as [`check_indifferent_hypotheses`] at an arbitrary fixed point `x` of `f_i`:
/// `|f_i'(x)| = 1`, `|f_i'(x) - 1| = 1`, and `|f_j'(x)| < 1/min{t_k}` for `j ≠ i`.
pub fn check_indifferent_at(models: &[LocalModel], i: usize, x: &KElement) -> Result<IndifferentCheck> {
    let model = models.get(i).ok_or(Error::IndexOutOfRange(i))?;
    let fx = model.f.eval(x).value();
    if fx.as_ref() != Some(x) {
        return Err(Error::NotFixed(x.to_string()));
    }
    let zero = ValExp::Finite(crate::field::Half::ZERO);
    let lambda = model.f.eval_derivative(x).value().expect("not a pole");
    let indifferent = lambda.valuation() == zero;
    let unit_gap = (&lambda - &KElement::one(x.prime())).valuation() == zero;

    let min_t = models.iter().map(|m| m.image.radius()).min().expect("nonempty");
    // |f_j'(x)| < 1/min t  <=>  v(f_j'(x)) > -e_{min t}
    let threshold = ValExp::Finite(-min_t.exp());
    let cross_terms_small = models.iter().enumerate().filter(|(j, _)| *j != i).all(|(_, m)| {
        match m.f.eval_derivative(x) {
            crate::algebra::Evaluation::Value(d) => d.valuation() > threshold,
            crate::algebra::Evaluation::Pole => false,
        }
    });
    Ok(IndifferentCheck {
        indifferent,
        unit_gap,
        cross_terms_small,
    })
}
