//! Problem files, the glue/verify pipeline and result files.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    census_epsilon, fixed_point_precision, glue_for_census, hensel_fixed_point, orbit, verify_census, Approximate,
    BallCounts, CensusReport, Distance, FixedPointCensus, FixedPointKind, Orbit, OrbitEnd, Witness,
};
use crate::error::{Error, Result};
use crate::field::{Half, KElement, Prime, ValExp};
use crate::geometry::{Ball, Radius};
use crate::gluing::{build_f, certify_gluing, plan_gluing, Certificate, GluingPlan, LocalModel, PlanEntry, PlanOptions};
use crate::serial::{half_to_string, parse_half, BallRepr, KElementRepr, MapRepr};

use crate::algebra::RationalMap;

/// Working precision (exponent) for orbit iterates when none is requested.
pub const DEFAULT_ORBIT_PRECISION: i64 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRepr {
    pub map: MapRepr,
    pub ball: BallRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<BallRepr>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsRepr {
    #[serde(default)]
    pub attracting: usize,
    #[serde(default)]
    pub repelling: usize,
    #[serde(default)]
    pub indifferent: usize,
}

impl From<BallCounts> for CountsRepr {
    fn from(c: BallCounts) -> Self {
        CountsRepr {
            attracting: c.attracting,
            repelling: c.repelling,
            indifferent: c.indifferent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessRepr {
    pub ball: usize,
    pub disk: BallRepr,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusRepr {
    pub counts: Vec<CountsRepr>,
    #[serde(default)]
    pub witnesses: Vec<WitnessRepr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitRequestRepr {
    pub start: KElementRepr,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_exp: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemRepr {
    pub prime: u64,
    pub epsilon_exp: String,
    pub models: Vec<ModelRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_override: Option<Vec<String>>,
    #[serde(rename = "M_override", default, skip_serializing_if = "Option::is_none")]
    pub m_override: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_override: Option<Vec<KElementRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<CensusRepr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orbits: Vec<OrbitRequestRepr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitRequest {
    pub start: KElement,
    pub steps: usize,
    pub precision: Option<Half>,
}

/// A validated gluing problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub prime: Prime,
    pub epsilon: Radius,
    pub models: Vec<LocalModel>,
    pub options: PlanOptions,
    pub census: Option<FixedPointCensus>,
    pub orbits: Vec<OrbitRequest>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ProblemRepr = serde_json::from_str(text).map_err(json_error)?;
        Problem::from_repr(&repr)
    }

    /// Structural problems are parse errors; a model that fails its own
    /// hypotheses (pole, wrong declared image, open domain) is reported as
    /// such.
    pub fn from_repr(repr: &ProblemRepr) -> Result<Self> {
        let prime = Prime::new(repr.prime).map_err(|e| Error::parse("prime", e.to_string()))?;
        let epsilon = Radius::new(parse_half(&repr.epsilon_exp, "epsilon_exp")?);
        if repr.models.is_empty() {
            return Err(Error::parse("models", "at least one model is required"));
        }

        let mut models = Vec::with_capacity(repr.models.len());
        for (i, m) in repr.models.iter().enumerate() {
            let path = format!("models[{i}]");
            let f = m.map.to_map(prime, &format!("{path}.map"))?;
            let ball = m.ball.to_ball(prime, &format!("{path}.ball"))?;
            if !ball.center().is_rational() {
                return Err(Error::parse(format!("{path}.ball.center"), "ball centers must be rational"));
            }
            if !ball.radius().exp().is_integer() {
                return Err(Error::parse(
                    format!("{path}.ball.radius_exp"),
                    "ball radius exponents must be integers",
                ));
            }
            let image = m
                .image
                .as_ref()
                .map(|b| b.to_ball(prime, &format!("{path}.image")))
                .transpose()?;
            models.push(LocalModel::new(f, ball, image).map_err(|e| e.at_model(i))?);
        }

        let delta_override = repr
            .delta_override
            .as_ref()
            .map(|ds| {
                ds.iter()
                    .enumerate()
                    .map(|(i, d)| parse_half(d, &format!("delta_override[{i}]")).map(Radius::new))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let c_override = repr
            .c_override
            .as_ref()
            .map(|cs| {
                cs.iter()
                    .enumerate()
                    .map(|(i, c)| c.to_element(prime, &format!("c_override[{i}]")))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let options = PlanOptions {
            delta_override,
            m_override: repr.m_override.clone(),
            c_override,
        };

        let census = repr
            .census
            .as_ref()
            .map(|c| -> Result<FixedPointCensus> {
                let counts = c
                    .counts
                    .iter()
                    .map(|k| BallCounts {
                        attracting: k.attracting,
                        repelling: k.repelling,
                        indifferent: k.indifferent,
                    })
                    .collect();
                let witnesses = c
                    .witnesses
                    .iter()
                    .enumerate()
                    .map(|(i, w)| -> Result<Witness> {
                        let path = format!("census.witnesses[{i}]");
                        let kind = FixedPointKind::parse(&w.kind).ok_or_else(|| {
                            Error::parse(format!("{path}.kind"), format!("unknown kind {:?}", w.kind))
                        })?;
                        Ok(Witness {
                            ball: w.ball,
                            disk: w.disk.to_ball(prime, &format!("{path}.disk"))?,
                            kind,
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(FixedPointCensus { counts, witnesses })
            })
            .transpose()?;

        let orbits = repr
            .orbits
            .iter()
            .enumerate()
            .map(|(i, o)| -> Result<OrbitRequest> {
                let path = format!("orbits[{i}]");
                Ok(OrbitRequest {
                    start: o.start.to_element(prime, &format!("{path}.start"))?,
                    steps: o.steps,
                    precision: o
                        .precision_exp
                        .as_ref()
                        .map(|s| parse_half(s, &format!("{path}.precision_exp")))
                        .transpose()?,
                })
            })
            .collect::<Result<_>>()?;

        Ok(Problem {
            prime,
            epsilon,
            models,
            options,
            census,
            orbits,
        })
    }

    pub fn to_repr(&self) -> ProblemRepr {
        ProblemRepr {
            prime: u64::from(self.prime.get()),
            epsilon_exp: half_to_string(self.epsilon.exp()),
            models: self
                .models
                .iter()
                .map(|m| ModelRepr {
                    map: MapRepr::from_map(m.map()),
                    ball: BallRepr::from_ball(m.domain()),
                    image: Some(BallRepr::from_ball(m.image())),
                })
                .collect(),
            delta_override: self
                .options
                .delta_override
                .as_ref()
                .map(|ds| ds.iter().map(|d| half_to_string(d.exp())).collect()),
            m_override: self.options.m_override.clone(),
            c_override: self
                .options
                .c_override
                .as_ref()
                .map(|cs| cs.iter().map(KElementRepr::from_element).collect()),
            census: self.census.as_ref().map(|c| CensusRepr {
                counts: c.counts.iter().map(|&k| k.into()).collect(),
                witnesses: c
                    .witnesses
                    .iter()
                    .map(|w| WitnessRepr {
                        ball: w.ball,
                        disk: BallRepr::from_ball(&w.disk),
                        kind: w.kind.name().into(),
                    })
                    .collect(),
            }),
            orbits: self
                .orbits
                .iter()
                .map(|o| OrbitRequestRepr {
                    start: KElementRepr::from_element(&o.start),
                    steps: o.steps,
                    precision_exp: o.precision.map(half_to_string),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_repr()).expect("serializable")
    }
}

/// Plan and glued map for a problem.
///
/// With a census the requested `ε` is tried first; only if the census fails
/// there is the map rebuilt with the `ε` derived from the witness disks.
pub fn glue(problem: &Problem) -> Result<(GluingPlan, RationalMap, Option<CensusReport>)> {
    let plan = plan_gluing(&problem.models, problem.epsilon, &problem.options)?;
    let f = build_f(&problem.models, &plan)?;
    let Some(census) = &problem.census else {
        return Ok((plan, f, None));
    };
    let report = verify_census(&f, census, &problem.models)?;
    if report.passed() {
        return Ok((plan, f, Some(report)));
    }
    let deltas: Vec<Radius> = plan.entries.iter().map(|e| e.delta).collect();
    let needed = census_epsilon(census, &problem.models, &deltas)?;
    if needed.map_or(true, |n| n >= problem.epsilon) && !needs_m_bump(census, &plan) {
        return Ok((plan, f, Some(report)));
    }
    let (plan, f) = glue_for_census(&problem.models, census, problem.epsilon, &problem.options)?;
    let report = verify_census(&f, census, &problem.models)?;
    Ok((plan, f, Some(report)))
}

fn needs_m_bump(census: &FixedPointCensus, plan: &GluingPlan) -> bool {
    census
        .witnesses
        .iter()
        .any(|w| w.kind == FixedPointKind::Indifferent && plan.entries[w.ball].m == 1)
}

/// Orbit together with the fixed point it was measured against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitStudy {
    pub request: OrbitRequest,
    pub reference: Option<Approximate>,
    pub orbit: Orbit,
}

/// Newton-refines a fixed point near `start`, trying the centers of the
/// witness disks and model balls containing `start`, then `start` itself.
pub fn locate_fixed_point(
    f: &RationalMap,
    problem: &Problem,
    start: &KElement,
    target: Half,
) -> Option<Approximate> {
    let mut candidates: Vec<KElement> = Vec::new();
    if let Some(c) = &problem.census {
        candidates.extend(c.witnesses.iter().filter(|w| w.disk.contains(start)).map(|w| w.disk.center().clone()));
    }
    candidates.extend(
        problem
            .models
            .iter()
            .filter(|m| m.domain().contains(start))
            .map(|m| m.center().clone()),
    );
    candidates.push(start.clone());
    candidates.into_iter().find_map(|c| {
        let z = hensel_fixed_point(f, &c, ValExp::Finite(target)).ok()?;
        let precision = fixed_point_precision(f, &z)?;
        Some(Approximate { point: z, precision })
    })
}

pub fn study_orbit(f: &RationalMap, problem: &Problem, request: &OrbitRequest) -> OrbitStudy {
    let w = request.precision.unwrap_or(Half::from_int(DEFAULT_ORBIT_PRECISION));
    let reference = locate_fixed_point(f, problem, &request.start, w);
    let orbit = orbit(f, &request.start, request.steps, reference.as_ref(), Some(w));
    OrbitStudy {
        request: request.clone(),
        reference,
        orbit,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub plan: GluingPlan,
    pub f: RationalMap,
    pub certificate: Certificate,
    pub census: Option<CensusReport>,
    pub orbits: Vec<OrbitStudy>,
}

impl Solution {
    pub fn passed(&self) -> bool {
        self.certificate.passed() && self.census.as_ref().map_or(true, CensusReport::passed)
    }
}

pub fn solve(problem: &Problem, samples: usize) -> Result<Solution> {
    let (plan, f, census) = glue(problem)?;
    let certificate = certify_gluing(&f, &problem.models, &plan, samples);
    let orbits = problem.orbits.iter().map(|o| study_orbit(&f, problem, o)).collect();
    Ok(Solution {
        plan,
        f,
        certificate,
        census,
        orbits,
    })
}

// ---- result files ----

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntryRepr {
    pub radius_exp: String,
    pub delta_exp: String,
    pub s_exp: String,
    pub c: KElementRepr,
    #[serde(rename = "M")]
    pub m: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRepr {
    pub epsilon_exp: String,
    pub tau_exp: String,
    pub entries: Vec<PlanEntryRepr>,
}

impl PlanRepr {
    pub fn from_plan(plan: &GluingPlan) -> Self {
        PlanRepr {
            epsilon_exp: half_to_string(plan.epsilon.exp()),
            tau_exp: half_to_string(plan.tau.exp()),
            entries: plan
                .entries
                .iter()
                .map(|e| PlanEntryRepr {
                    radius_exp: half_to_string(e.radius.exp()),
                    delta_exp: half_to_string(e.delta.exp()),
                    s_exp: half_to_string(e.s.exp()),
                    c: KElementRepr::from_element(&e.c),
                    m: e.m,
                })
                .collect(),
        }
    }

    pub fn to_plan(&self, p: Prime) -> Result<GluingPlan> {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| -> Result<PlanEntry> {
                let path = format!("plan.entries[{i}]");
                let r = |s: &str, f: &str| parse_half(s, &format!("{path}.{f}")).map(Radius::new);
                Ok(PlanEntry {
                    radius: r(&e.radius_exp, "radius_exp")?,
                    delta: r(&e.delta_exp, "delta_exp")?,
                    s: r(&e.s_exp, "s_exp")?,
                    c: e.c.to_element(p, &format!("{path}.c"))?,
                    m: e.m,
                })
            })
            .collect::<Result<_>>()?;
        Ok(GluingPlan {
            entries,
            tau: Radius::new(parse_half(&self.tau_exp, "plan.tau_exp")?),
            epsilon: Radius::new(parse_half(&self.epsilon_exp, "plan.epsilon_exp")?),
        })
    }
}

#[derive(Serialize)]
struct SampleRepr {
    point: KElementRepr,
    diff_exp: String,
    in_image: bool,
}

#[derive(Serialize)]
struct BallCertificateRepr {
    passed: bool,
    pole_free_ok: bool,
    image: Option<BallRepr>,
    expected_image: BallRepr,
    image_ok: bool,
    eps_bound_exp: Option<String>,
    eps_ok: bool,
    samples_ok: bool,
    samples: Vec<SampleRepr>,
}

#[derive(Serialize)]
struct CertificateRepr {
    passed: bool,
    epsilon_exp: String,
    degree: usize,
    balls: Vec<BallCertificateRepr>,
}

fn certificate_repr(c: &Certificate) -> CertificateRepr {
    CertificateRepr {
        passed: c.passed(),
        epsilon_exp: half_to_string(c.epsilon.exp()),
        degree: c.degree,
        balls: c
            .balls
            .iter()
            .map(|b| BallCertificateRepr {
                passed: b.passed(),
                pole_free_ok: b.pole_free_ok,
                image: b.image.as_ref().map(BallRepr::from_ball),
                expected_image: BallRepr::from_ball(&b.expected_image),
                image_ok: b.image_ok,
                eps_bound_exp: b.eps_bound_exp.map(ValExp::to_fraction_string),
                eps_ok: b.eps_ok,
                samples_ok: b.samples_ok,
                samples: b
                    .witnesses
                    .iter()
                    .map(|w| SampleRepr {
                        point: KElementRepr::from_element(&w.point),
                        diff_exp: w.diff_exp.to_fraction_string(),
                        in_image: w.in_image,
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct IndifferentCheckRepr {
    indifferent: bool,
    unit_gap: bool,
    cross_terms_small: bool,
}

#[derive(Serialize)]
struct WitnessReportRepr {
    ball: usize,
    disk: BallRepr,
    expected: &'static str,
    behavior: &'static str,
    image: Option<BallRepr>,
    wdeg: Option<usize>,
    derivative_at_center: KElementRepr,
    existence_certified: bool,
    indifferent_check: Option<IndifferentCheckRepr>,
    counted: bool,
}

#[derive(Serialize)]
struct CensusReportRepr {
    passed: bool,
    expected: Vec<CountsRepr>,
    observed: Vec<CountsRepr>,
    witnesses: Vec<WitnessReportRepr>,
    mismatches: Vec<String>,
}

fn census_repr(r: &CensusReport) -> CensusReportRepr {
    CensusReportRepr {
        passed: r.passed(),
        expected: r.expected.iter().map(|&c| c.into()).collect(),
        observed: r.observed.iter().map(|&c| c.into()).collect(),
        witnesses: r
            .witnesses
            .iter()
            .map(|w| WitnessReportRepr {
                ball: w.witness.ball,
                disk: BallRepr::from_ball(&w.witness.disk),
                expected: w.witness.kind.name(),
                behavior: w.classification.behavior.name(),
                image: w.classification.image.as_ref().map(BallRepr::from_ball),
                wdeg: w.classification.wdeg,
                derivative_at_center: KElementRepr::from_element(&w.classification.derivative_at_center),
                existence_certified: w.classification.existence_certified,
                indifferent_check: w.indifferent_check.as_ref().map(|c| IndifferentCheckRepr {
                    indifferent: c.indifferent,
                    unit_gap: c.unit_gap,
                    cross_terms_small: c.cross_terms_small,
                }),
                counted: w.counted,
            })
            .collect(),
        mismatches: r.mismatches.clone(),
    }
}

#[derive(Serialize)]
struct ApproximateRepr {
    point: KElementRepr,
    precision_exp: String,
}

#[derive(Serialize)]
struct OrbitStepRepr {
    index: usize,
    point: KElementRepr,
    precision_exp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance_exp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance_is_exact: Option<bool>,
}

#[derive(Serialize)]
struct OrbitRepr {
    start: KElementRepr,
    steps_requested: usize,
    reference: Option<ApproximateRepr>,
    steps: Vec<OrbitStepRepr>,
    end: String,
}

pub fn end_label(end: OrbitEnd) -> String {
    match end {
        OrbitEnd::Completed => "completed".into(),
        OrbitEnd::Pole(i) => format!("pole at step {i}"),
        OrbitEnd::PrecisionLost(i) => format!("precision lost after step {i}"),
    }
}

fn orbit_repr(s: &OrbitStudy) -> OrbitRepr {
    OrbitRepr {
        start: KElementRepr::from_element(&s.request.start),
        steps_requested: s.request.steps,
        reference: s.reference.as_ref().map(|r| ApproximateRepr {
            point: KElementRepr::from_element(&r.point),
            precision_exp: r.precision.to_fraction_string(),
        }),
        steps: s
            .orbit
            .steps
            .iter()
            .map(|st| {
                let (d, exact) = match st.distance {
                    Some(Distance::Exact(d)) => (Some(d.to_fraction_string()), Some(true)),
                    Some(Distance::AtLeast(d)) => (Some(d.to_fraction_string()), Some(false)),
                    None => (None, None),
                };
                OrbitStepRepr {
                    index: st.index,
                    point: KElementRepr::from_element(&st.point),
                    precision_exp: st.precision.to_fraction_string(),
                    distance_exp: d,
                    distance_is_exact: exact,
                }
            })
            .collect(),
        end: end_label(s.orbit.end),
    }
}

#[derive(Serialize)]
struct ResultOut {
    prime: u64,
    problem: ProblemRepr,
    plan: PlanRepr,
    #[serde(rename = "F")]
    f: MapRepr,
    certificate: CertificateRepr,
    #[serde(skip_serializing_if = "Option::is_none")]
    census: Option<CensusReportRepr>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    orbits: Vec<OrbitRepr>,
}

/// The result document written by `glue`.
pub fn result_json(problem: &Problem, solution: &Solution) -> String {
    let out = ResultOut {
        prime: u64::from(problem.prime.get()),
        problem: problem.to_repr(),
        plan: PlanRepr::from_plan(&solution.plan),
        f: MapRepr::from_map(&solution.f),
        certificate: certificate_repr(&solution.certificate),
        census: solution.census.as_ref().map(census_repr),
        orbits: solution.orbits.iter().map(orbit_repr).collect(),
    };
    serde_json::to_string_pretty(&out).expect("serializable")
}

/// The parts of a result document needed to re-check it.
#[derive(Deserialize)]
struct ResultIn {
    prime: u64,
    problem: ProblemRepr,
    plan: PlanRepr,
    #[serde(rename = "F")]
    f: MapRepr,
}

/// A result file read back for independent checking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredResult {
    pub problem: Problem,
    pub plan: GluingPlan,
    pub f: RationalMap,
}

impl StoredResult {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: ResultIn = serde_json::from_str(text).map_err(json_error)?;
        let problem = Problem::from_repr(&r.problem)?;
        if r.prime != u64::from(problem.prime.get()) {
            return Err(Error::parse("prime", "differs from problem.prime"));
        }
        let plan = r.plan.to_plan(problem.prime)?;
        let f = r.f.to_map(problem.prime, "F")?;
        Ok(StoredResult { problem, plan, f })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub plan_matches: bool,
    pub certificate: Certificate,
    pub census: Option<CensusReport>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.plan_matches && self.certificate.passed() && self.census.as_ref().map_or(true, CensusReport::passed)
    }
}

/// Recomputes the plan from the stored problem and certifies the stored `F`
/// from scratch against the stored plan's `ε`.
pub fn verify(stored: &StoredResult, samples: usize) -> Result<Verification> {
    let (plan, _, _) = glue(&stored.problem)?;
    let certificate = certify_gluing(&stored.f, &stored.problem.models, &stored.plan, samples);
    let census = stored
        .problem
        .census
        .as_ref()
        .map(|c| verify_census(&stored.f, c, &stored.problem.models))
        .transpose()?;
    Ok(Verification {
        plan_matches: plan == stored.plan,
        certificate,
        census,
    })
}

/// The model ball containing `x`, if any.
pub fn ball_of(problem: &Problem, x: &KElement) -> Option<(usize, Ball)> {
    problem
        .models
        .iter()
        .enumerate()
        .find(|(_, m)| m.domain().contains(x))
        .map(|(i, m)| (i, m.domain().clone()))
}
