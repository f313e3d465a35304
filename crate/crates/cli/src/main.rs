use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use nagluing::dynamics::Distance;
use nagluing::error::Error;
use nagluing::examples::{example1, example1_derivative_at_zero, example2};
use nagluing::field::{parse_rational, Half, KElement, Prime, ValExp};
use nagluing::geometry::Ball;
use nagluing::gluing::Certificate;
use nagluing::problem::{
    ball_of, end_label, result_json, solve, study_orbit, verify, OrbitRequest, OrbitStudy, Problem, Solution,
    StoredResult, DEFAULT_ORBIT_PRECISION,
};
use nagluing::serial::KElementRepr;

#[derive(Parser)]
#[command(name = "naglue", version, about = "Glue local rational maps on disjoint p-adic balls into one global map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan, build and certify the glued map for a problem file.
    Glue {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Re-certify a result file from scratch.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Iterate the glued map of a result file from a starting point.
    Orbit {
        #[arg(long)]
        input: PathBuf,
        /// A rational "n/d" or a JSON element {"a": "..", "b": ".."}.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Iterates are kept to within p^(-precision).
        #[arg(long, default_value_t = DEFAULT_ORBIT_PRECISION)]
        precision: i64,
    },
    /// Run one of the two built-in reference problems.
    Example {
        #[arg(long, value_enum)]
        name: ExampleName,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        /// Also write the result document here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    Ex1,
    Ex2,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn val(p: Prime, v: ValExp) -> String {
    match v {
        ValExp::Finite(h) => format!("{p}^({})", -h),
        ValExp::Infinite => "0".into(),
    }
}

fn ball(b: &Ball) -> String {
    b.to_string()
}

fn print_certificate(p: Prime, cert: &Certificate) {
    println!(
        "certificate: {} (epsilon {}, degree {})",
        if cert.passed() { "PASS" } else { "FAIL" },
        cert.epsilon.display_with(p),
        cert.degree
    );
    for (i, b) in cert.balls.iter().enumerate() {
        let image = b.image.as_ref().map_or("-".to_string(), ball);
        let bound = b.eps_bound_exp.map_or("-".to_string(), |v| val(p, v));
        println!(
            "  ball {i}: image {image} (expected {}) {}; sup|F - f| = {bound} {}; samples {}{}",
            ball(&b.expected_image),
            ok(b.image_ok),
            ok(b.eps_ok),
            b.witnesses.len(),
            if b.samples_ok { "" } else { " FAIL" },
        );
        if !b.pole_free_ok {
            println!("  ball {i}: F has a pole in the ball");
        }
    }
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "FAIL"
    }
}

fn print_solution(problem: &Problem, sol: &Solution) {
    let p = problem.prime;
    println!("plan: tau {}, epsilon {}", sol.plan.tau.display_with(p), sol.plan.epsilon.display_with(p));
    for (i, e) in sol.plan.entries.iter().enumerate() {
        println!(
            "  ball {i}: delta {}, s {}, c {}, M {}",
            e.delta.display_with(p),
            e.s.display_with(p),
            e.c,
            e.m
        );
    }
    print_certificate(p, &sol.certificate);
    if let Some(report) = &sol.census {
        println!("census: {}", if report.passed() { "PASS" } else { "FAIL" });
        for w in &report.witnesses {
            println!(
                "  ball {} witness {}: expected {}, found {}{}",
                w.witness.ball,
                w.witness.disk,
                w.witness.kind.name(),
                w.classification.behavior.name(),
                if w.counted { "" } else { " (not counted)" }
            );
        }
        for m in &report.mismatches {
            println!("  mismatch: {m}");
        }
    }
    for study in &sol.orbits {
        print_orbit(p, study);
    }
}

fn print_orbit(p: Prime, study: &OrbitStudy) {
    match &study.reference {
        Some(r) => println!("orbit from {} (fixed point {} known to {})", study.request.start, r.point, val(p, r.precision)),
        None => println!("orbit from {} (no fixed point located)", study.request.start),
    }
    println!("  {:>4}  {:>14}  {:>14}  point", "k", "|z_k - z*|", "error");
    for s in &study.orbit.steps {
        let d = match s.distance {
            Some(Distance::Exact(d)) => val(p, d),
            Some(Distance::AtLeast(d)) => format!("<= {}", val(p, d)),
            None => "-".into(),
        };
        let err = match s.precision {
            ValExp::Infinite => "exact".to_string(),
            v => val(p, v),
        };
        println!("  {:>4}  {:>14}  {:>14}  {}", s.index, d, err, s.point);
    }
    println!("  end: {}", end_label(study.orbit.end));
}

fn parse_element(p: Prime, s: &str) -> anyhow::Result<KElement> {
    let s = s.trim();
    if s.starts_with('{') {
        let repr: KElementRepr = serde_json::from_str(s).context("bad element")?;
        return Ok(repr.to_element(p, "start")?);
    }
    Ok(KElement::from_rational(p, parse_rational(s)?))
}

enum Outcome {
    Pass,
    Fail,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Glue { input, output, samples } => {
            let problem = Problem::from_json(&read(&input)?)?;
            let sol = solve(&problem, samples)?;
            write(&output, &result_json(&problem, &sol))?;
            print_solution(&problem, &sol);
            Ok(if sol.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Verify { input, samples } => {
            let stored = StoredResult::from_json(&read(&input)?)?;
            let v = verify(&stored, samples)?;
            let p = stored.problem.prime;
            println!("plan recomputed: {}", if v.plan_matches { "matches" } else { "DIFFERS" });
            print_certificate(p, &v.certificate);
            if let Some(c) = &v.census {
                println!("census: {}", if c.passed() { "PASS" } else { "FAIL" });
                for m in &c.mismatches {
                    println!("  mismatch: {m}");
                }
            }
            Ok(if v.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Orbit {
            input,
            start,
            steps,
            precision,
        } => {
            let stored = StoredResult::from_json(&read(&input)?)?;
            let p = stored.problem.prime;
            let start = parse_element(p, &start)?;
            if ball_of(&stored.problem, &start).is_none() {
                eprintln!("warning: {start} lies outside every model ball");
            }
            let request = OrbitRequest {
                start,
                steps,
                precision: Some(Half::from_int(precision)),
            };
            print_orbit(p, &study_orbit(&stored.f, &stored.problem, &request));
            Ok(Outcome::Pass)
        }
        Command::Example {
            name,
            alpha,
            beta,
            samples,
            output,
        } => {
            let p = Prime::new(3)?;
            let (problem, params) = match name {
                ExampleName::Ex2 => (example2(), None),
                ExampleName::Ex1 => {
                    let (Some(a), Some(b)) = (alpha, beta) else {
                        bail!("ex1 needs --alpha and --beta");
                    };
                    let alpha = parse_element(p, &a)?;
                    let beta = parse_element(p, &b)?;
                    (example1(&alpha, &beta)?, Some((alpha, beta)))
                }
            };
            let sol = solve(&problem, samples)?;
            if let Some(out) = output {
                write(&out, &result_json(&problem, &sol))?;
            }
            print_solution(&problem, &sol);
            let mut passed = sol.passed();
            if let Some((alpha, beta)) = params {
                let e = &sol.plan.entries[1];
                let closed = example1_derivative_at_zero(&alpha, &beta, &e.c, e.m)?;
                let actual = sol
                    .f
                    .eval_derivative(&KElement::zero(p))
                    .value()
                    .context("F has a pole at 0")?;
                let same = closed == actual;
                println!("F'(0) = {actual}");
                println!("closed form alpha + (1 - 3 beta)/(1 - (-3/c2)^M2) = {closed}: {}", if same { "equal" } else { "DIFFERENT" });
                passed &= same;
            }
            Ok(if passed { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let hypothesis = e.downcast_ref::<Error>().is_some_and(Error::is_hypothesis);
            ExitCode::from(if hypothesis { 3 } else { 2 })
        }
    }
}
