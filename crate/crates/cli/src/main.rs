use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use treeharm::decomposition::{computed_dim, expected_dim, is_degenerate, peel_decompose};
use treeharm::forms::{assemble_q, invariance_check, signature_report, span_fh_rigidity, standard_generators, truncated_form_solver};
use treeharm::synthesis::{random_target, synthesize, synthesize_special};
use treeharm::{parse_rational, EigenFunction, Error, Gaussian, Rational, Scalar, TreeBall, TreeShape};

/// Exact verification of spherical eigenfunction representations on trees.
#[derive(Parser, Debug)]
#[command(name = "treeharm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Tree shape: `h<d>` or `sh<r>,<s>`.
    #[arg(long)]
    shape: String,
    /// Eigenvalue, e.g. `1/2`, `-1/3`, `1/2+i/3`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Truncation depth or block cutoff.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add decimal renderings (display only, not authoritative).
    #[arg(long)]
    approx: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sphere sizes and block dimensions.
    Info {
        #[command(flatten)]
        common: Common,
    },
    /// Inertia of the invariant form on a block truncation.
    Signature {
        #[command(flatten)]
        common: Common,
        /// Also write the exact Gram matrix as CSV.
        #[arg(long)]
        gram_csv: Option<PathBuf>,
    },
    /// Run one exact verification suite.
    Verify {
        suite: Suite,
        #[command(flatten)]
        common: Common,
        /// Random elements or targets to sample.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Express an eigenfunction as a combination of translates of the radial one.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// Target eigenfunction JSON; a seeded random target when absent.
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Solve for all invariant symmetric forms on a truncation.
    SolveForm {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Invariance,
    Rigidity,
    Synthesis,
    Decomposition,
}

/// A finished run: its report and whether every check passed.
struct Outcome {
    report: Value,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(outcome) => {
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Input problems are usage errors (2); anything else is a failed check (1).
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::InvalidShape(_) | Error::ExcludedAlpha { .. } | Error::InvalidAddress { .. })
        | Some(Error::BudgetExceeded { .. } | Error::Unsupported(_) | Error::MissingValues(_)) => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn run(command: Command) -> anyhow::Result<Outcome> {
    let (common, outcome) = match command {
        Command::Info { common } => {
            let o = cmd_info(&common)?;
            (common, o)
        }
        Command::Signature { common, gram_csv } => {
            let o = cmd_signature(&common, gram_csv)?;
            (common, o)
        }
        Command::Verify { suite, common, samples } => {
            let o = cmd_verify(&common, suite, samples)?;
            (common, o)
        }
        Command::Synthesize { common, target } => {
            let o = cmd_synthesize(&common, target)?;
            (common, o)
        }
        Command::SolveForm { common, samples } => {
            let o = cmd_solve_form(&common, samples)?;
            (common, o)
        }
    };
    let mut report = outcome.report;
    if let Value::Object(map) = &mut report {
        map.insert("passed".into(), json!(outcome.passed));
    }
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(Outcome { report, passed: outcome.passed })
}

fn shape(common: &Common) -> anyhow::Result<TreeShape> {
    Ok(common.shape.parse::<TreeShape>()?)
}

fn rational_alpha(common: &Common) -> anyhow::Result<Rational> {
    let text = common.alpha.as_deref().ok_or_else(|| Error::Parse("--alpha is required".into()))?;
    Ok(parse_rational(text).map_err(|_| Error::Parse(format!("--alpha `{text}` must be a rational p/q here")))?)
}

fn approx_alpha(common: &Common, alpha: &impl Scalar) -> Option<Value> {
    common.approx.then(|| json!({ "alpha": alpha.approx(), "note": "decimal rendering, not authoritative" }))
}

const INFO_BUDGET: u128 = 2_000_000;

fn cmd_info(common: &Common) -> anyhow::Result<Outcome> {
    let shape = shape(common)?;
    let alpha = common.alpha.as_deref().map(parse_rational).transpose()?;
    if shape.ball_size(common.depth) > INFO_BUDGET {
        return Err(Error::BudgetExceeded { depth: common.depth, vertices: shape.ball_size(common.depth), budget: INFO_BUDGET as usize }.into());
    }
    let degenerate = alpha.as_ref().is_some_and(|a| is_degenerate(shape, a));
    let spheres: Vec<Value> = (0..=common.depth)
        .map(|n| json!({ "n": n, "sphere": shape.sphere_size(n) as u64, "ball": shape.ball_size(n) as u64 }))
        .collect();
    let mut passed = true;
    let mut blocks = Vec::new();
    for n in 0..=common.depth {
        let expected = expected_dim(shape, n, degenerate) as u64;
        let mut entry = json!({ "n": n, "dim": expected });
        if let Some(a) = &alpha {
            if shape.ball_size(shape.seed_depth(n)) <= 4096 {
                let computed = computed_dim(shape, a, n)? as u64;
                passed &= computed == expected;
                entry["computed"] = json!(computed);
            }
        }
        blocks.push(entry);
    }
    let mut report = json!({
        "command": "info",
        "shape": shape.to_string(),
        "lattice": shape.lattice(),
        "depth": common.depth,
        "spheres": spheres,
        "blocks": blocks,
        "degenerate": degenerate,
    });
    if let Some(a) = &alpha {
        report["alpha"] = a.to_json();
        if let Some(x) = approx_alpha(common, a) {
            report["approx"] = x;
        }
    }
    Ok(Outcome { report, passed })
}

fn cmd_signature(common: &Common, gram_csv: Option<PathBuf>) -> anyhow::Result<Outcome> {
    let shape = shape(common)?;
    let alpha = rational_alpha(common)?;
    let (report, gram) = signature_report(shape, alpha.clone(), common.depth)?;
    if let Some(path) = gram_csv {
        fs::write(&path, gram.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let passed = report.pivot_independent && report.signature.n_minus == report.predicted_negative;
    let mut out = serde_json::to_value(&report)?;
    out["command"] = json!("signature");
    if let Some(x) = approx_alpha(common, &alpha) {
        out["approx"] = x;
    }
    Ok(Outcome { report: out, passed })
}

fn cmd_verify(common: &Common, suite: Suite, samples: Option<usize>) -> anyhow::Result<Outcome> {
    let shape = shape(common)?;
    let (mut report, passed) = match suite {
        Suite::Invariance => {
            let alpha = rational_alpha(common)?;
            let form = assemble_q(shape, alpha)?;
            let gens = standard_generators(shape, common.depth, samples.unwrap_or(50), common.seed)?;
            let r = invariance_check(&form, &gens, common.depth)?;
            let per_generator: Vec<Value> = r
                .generators
                .iter()
                .map(|g| json!({ "generator": g.generator, "displacement": g.displacement, "pairs": g.pairs_checked, "violations": g.violations.len() }))
                .collect();
            let first_violation = r.generators.iter().flat_map(|g| g.violations.first()).next();
            let report = json!({
                "generators": per_generator,
                "pairs_checked": r.pairs_checked(),
                "first_violation": first_violation.map(|v| json!({ "i": v.i, "j": v.j, "difference": v.difference })),
            });
            (report, r.passed())
        }
        Suite::Rigidity => {
            let text = common.alpha.as_deref().ok_or_else(|| Error::Parse("--alpha is required".into()))?;
            let alpha = Gaussian::parse(text)?;
            let diagonal = span_fh_rigidity(shape, alpha.clone(), false)?;
            let full = span_fh_rigidity(shape, alpha.clone(), true)?;
            let passed = diagonal.matches_expectation(&alpha);
            (json!({ "diagonal": diagonal, "unconstrained": full, "real_alpha": alpha.is_real() }), passed)
        }
        Suite::Synthesis => verify_synthesis(common, shape, samples.unwrap_or(20))?,
        Suite::Decomposition => verify_decomposition(common, shape, samples.unwrap_or(5))?,
    };
    report["command"] = json!("verify");
    report["suite"] = json!(format!("{suite:?}").to_lowercase());
    report["shape"] = json!(shape.to_string());
    report["depth"] = json!(common.depth);
    report["seed"] = json!(common.seed);
    if let Some(a) = &common.alpha {
        report["alpha"] = json!(a);
    }
    Ok(Outcome { report, passed })
}

fn target_block(shape: TreeShape) -> usize {
    if shape.is_transitive() {
        2
    } else {
        3
    }
}

fn verify_synthesis(common: &Common, shape: TreeShape, samples: usize) -> anyhow::Result<(Value, bool)> {
    let alpha = rational_alpha(common)?;
    let mut runs = Vec::new();
    let mut passed = true;
    let mut assertions = 0;
    for k in 0..samples as u64 {
        let target = random_target(shape, alpha.clone(), target_block(shape), common.seed.wrapping_add(k))?;
        let combo = synthesize(&target, common.depth)?;
        let exact = combo.evaluate(combo.target_depth)?.agrees_on(&target, combo.target_depth)?;
        let ok = exact && combo.groups_balanced() && combo.len() <= combo.term_bound();
        passed &= ok;
        assertions += combo.residual_assertions;
        runs.push(json!({ "seed": common.seed.wrapping_add(k), "terms": combo.len(), "checked_depth": combo.target_depth, "passed": ok }));
    }
    let mut report = json!({ "runs": runs, "residual_assertions": assertions });
    if is_degenerate(shape, &alpha) {
        let rejected = matches!(synthesize_special(&inadmissible_target(shape, alpha)?, common.depth), Err(Error::Inadmissible(_)));
        passed &= rejected;
        report["inadmissible_rejected"] = json!(rejected);
    }
    Ok((report, passed))
}

/// Values `1, −1` on two grandchildren of `o` below different children.
fn inadmissible_target(shape: TreeShape, alpha: Rational) -> anyhow::Result<EigenFunction<Rational>> {
    let ball = TreeBall::shared(shape, 2)?;
    let mut seed = vec![Rational::zero(); ball.len()];
    let s2 = ball.sphere_range(2);
    seed[s2.start] = Rational::one();
    seed[s2.end - 1] = -Rational::one();
    Ok(EigenFunction::from_seed(shape, alpha, 2, seed)?)
}

fn verify_decomposition(common: &Common, shape: TreeShape, samples: usize) -> anyhow::Result<(Value, bool)> {
    let alpha = rational_alpha(common)?;
    let degenerate = is_degenerate(shape, &alpha);
    let mut passed = true;
    let mut dims = Vec::new();
    for n in 0..=common.depth {
        let expected = expected_dim(shape, n, degenerate) as u64;
        let computed = computed_dim(shape, &alpha, n)? as u64;
        passed &= expected == computed;
        dims.push(json!({ "n": n, "expected": expected, "computed": computed }));
    }
    let mut reconstructions = Vec::new();
    for k in 0..samples as u64 {
        let target = random_target(shape, alpha.clone(), common.depth.min(target_block(shape)), common.seed.wrapping_add(k))?;
        let dec = peel_decompose(&target)?;
        let ok = dec.reconstruct()? == target;
        passed &= ok;
        reconstructions.push(json!({ "seed": common.seed.wrapping_add(k), "blocks": dec.support(), "passed": ok }));
    }
    Ok((json!({ "dimensions": dims, "reconstructions": reconstructions }), passed))
}

fn cmd_synthesize(common: &Common, target: Option<PathBuf>) -> anyhow::Result<Outcome> {
    let shape = shape(common)?;
    let h: EigenFunction<Rational> = match target {
        Some(path) => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let h = EigenFunction::from_json(&value)?;
            if h.shape() != shape {
                return Err(anyhow!(Error::Parse(format!("target lives on {}, not {shape}", h.shape()))));
            }
            h
        }
        None => random_target(shape, rational_alpha(common)?, target_block(shape), common.seed)?,
    };
    let combo = synthesize(&h, common.depth)?;
    let exact = combo.evaluate(combo.target_depth)?.agrees_on(&h, combo.target_depth)?;
    let mut report = combo.to_json();
    report["command"] = json!("synthesize");
    report["exact_agreement"] = json!(exact);
    if let Some(x) = approx_alpha(common, h.alpha()) {
        report["approx"] = x;
    }
    Ok(Outcome { report, passed: exact && combo.groups_balanced() })
}

fn cmd_solve_form(common: &Common, samples: usize) -> anyhow::Result<Outcome> {
    let shape = shape(common)?;
    let alpha = rational_alpha(common)?;
    let r = truncated_form_solver(shape, alpha, common.depth, samples, common.seed)?;
    let passed = r.unique_and_matches();
    let mut report = serde_json::to_value(&r)?;
    report["command"] = json!("solve-form");
    Ok(Outcome { report, passed })
}
