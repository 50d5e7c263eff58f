//! The three commands behind the binary: solve (gradient-based search on
//! graph problems), verify (residual suites for the defining conditions),
//! and closure (exact convex-closure cross-checks).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use sfe_core::closure::convex_closure;
use sfe_core::error::Error as CoreError;
use sfe_core::graphs::{brute_force, cut_function, Graph, ProblemKind, BRUTE_FORCE_MAX_N};
use sfe_core::linalg::{DenseMatrix, DenseVector};
use sfe_core::neural::{self, NeuralConfig, Reparam};
use sfe_core::optim::{
    minimize_neural_filtered, minimize_scalar_filtered, neural_tape_objective, project_simplex,
    SolveConfig,
};
use sfe_core::oracle::SetFunctionOracle;
use sfe_core::rng;
use sfe_core::scalar::{self, ScalarExtensionKind};
use sfe_core::subset::Subset;
use sfe_core::verify as core_verify;

use crate::graph_io;
use crate::report::{aggregate_of, Report};

/// Command-level failures mapped to process exit codes: malformed input
/// exits 2, size-limit violations exit 3. Tolerance failures are not
/// errors; they surface as `passed: false` in the report (exit 1).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Malformed(String),
    #[error("{0}")]
    Limits(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Malformed(_) => 2,
            CliError::Limits(_) => 3,
        }
    }
}

fn core_error(context: &str, e: CoreError) -> CliError {
    match e {
        CoreError::GroundSetTooLarge { .. }
        | CoreError::TooManyEigenpairs { .. }
        | CoreError::SupportTooLarge { .. } => CliError::Limits(format!("{context}: {e}")),
        other => CliError::Malformed(format!("{context}: {other}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    MaxClique,
    MaxIndependentSet,
}

impl Problem {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "maxclique" => Ok(Problem::MaxClique),
            "mis" => Ok(Problem::MaxIndependentSet),
            other => Err(CliError::Malformed(format!(
                "unknown problem {other:?}; expected maxclique or mis"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::MaxClique => "maxclique",
            Problem::MaxIndependentSet => "mis",
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::MaxClique => ProblemKind::MaxClique,
            Problem::MaxIndependentSet => ProblemKind::MaxIndependentSet,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionChoice {
    Lovasz,
    Bounded(usize),
    NeuralLovasz,
}

impl ExtensionChoice {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text == "lovasz" {
            return Ok(ExtensionChoice::Lovasz);
        }
        if text == "neural-lovasz" {
            return Ok(ExtensionChoice::NeuralLovasz);
        }
        if let Some(k) = text.strip_prefix("bounded:") {
            let k: usize = k.parse().map_err(|_| {
                CliError::Malformed(format!("bad cardinality bound in {text:?}"))
            })?;
            if k == 0 {
                return Err(CliError::Malformed("cardinality bound must be >= 1".into()));
            }
            return Ok(ExtensionChoice::Bounded(k));
        }
        Err(CliError::Malformed(format!(
            "unknown extension {text:?}; expected lovasz, bounded:K, or neural-lovasz"
        )))
    }

    pub fn as_string(&self) -> String {
        match self {
            ExtensionChoice::Lovasz => "lovasz".into(),
            ExtensionChoice::Bounded(k) => format!("bounded:{k}"),
            ExtensionChoice::NeuralLovasz => "neural-lovasz".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveArgs {
    pub graphs: Vec<PathBuf>,
    pub problem: Problem,
    pub extension: ExtensionChoice,
    pub dim: usize,
    pub topk: usize,
    pub steps: usize,
    pub lr: f64,
    pub restarts: usize,
    pub seed: u64,
    pub with_oracle: bool,
}

fn set_ids(s: &Subset) -> Vec<usize> {
    s.iter().collect()
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Report, CliError> {
    if args.graphs.is_empty() {
        return Err(CliError::Malformed("at least one --graph is required".into()));
    }
    if args.steps == 0 || args.restarts == 0 || !args.lr.is_finite() || args.lr <= 0.0 {
        return Err(CliError::Malformed(
            "--steps and --restarts must be >= 1 and --lr > 0".into(),
        ));
    }
    if args.dim == 0 || args.topk == 0 {
        return Err(CliError::Malformed("--dim and --topk must be >= 1".into()));
    }

    let mut flags = BTreeMap::new();
    for (k, v) in [
        ("problem", args.problem.as_str().to_string()),
        ("extension", args.extension.as_string()),
        ("dim", args.dim.to_string()),
        ("topk", args.topk.to_string()),
        ("steps", args.steps.to_string()),
        ("lr", args.lr.to_string()),
        ("restarts", args.restarts.to_string()),
        ("with_oracle", args.with_oracle.to_string()),
        (
            "graphs",
            args.graphs
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
    ] {
        flags.insert(k.to_string(), v);
    }
    let mut report = Report::new("solve", flags, args.seed);

    let total_start = Instant::now();
    let instances: Vec<Result<(Value, u64), CliError>> = args
        .graphs
        .par_iter()
        .enumerate()
        .map(|(idx, path)| solve_instance(args, idx, path))
        .collect();

    let mut ratios = Vec::new();
    let mut sizes = Vec::new();
    for item in instances {
        let (value, ms) = item?;
        if let Some(r) = value.get("approximation_ratio").and_then(Value::as_f64) {
            ratios.push(r);
        }
        if let Some(s) = value.get("decoded_size").and_then(Value::as_u64) {
            sizes.push(s as f64);
        }
        report.stable.results.push(value);
        report.timing.per_instance_ms.push(ms);
    }
    report.stable.aggregate = Some(if args.with_oracle {
        aggregate_of("approximation_ratio", &ratios)
    } else {
        aggregate_of("decoded_size", &sizes)
    });
    report.timing.total_ms = total_start.elapsed().as_millis() as u64;
    Ok(report)
}

fn solve_instance(
    args: &SolveArgs,
    idx: usize,
    path: &std::path::Path,
) -> Result<(Value, u64), CliError> {
    let start = Instant::now();
    let graph = graph_io::load_graph(path)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    let n = graph.n();
    let problem = args.problem.kind();
    let objective = problem.objective(&graph, ProblemKind::default_exponent());
    let g = graph.clone();
    let keep = move |s: &Subset| problem.is_feasible(&g, s);
    let cfg = SolveConfig {
        steps: args.steps,
        learning_rate: args.lr,
        restarts: args.restarts,
        seed: args.seed.wrapping_add(idx as u64),
    };

    let (set, value, extension_value, restart_index) = match args.extension {
        ExtensionChoice::Lovasz => {
            let out =
                minimize_scalar_filtered(&objective, ScalarExtensionKind::Lovasz, n, &cfg, Some(&keep))
                    .map_err(|e| core_error(&path.display().to_string(), e))?;
            (out.set, out.value, out.extension_value, out.restart_index)
        }
        ExtensionChoice::Bounded(k) => {
            if k > n {
                return Err(CliError::Malformed(format!(
                    "{}: cardinality bound {k} exceeds n={n}",
                    path.display()
                )));
            }
            let out = minimize_scalar_filtered(
                &objective,
                ScalarExtensionKind::BoundedCardinality(k),
                n,
                &cfg,
                Some(&keep),
            )
            .map_err(|e| core_error(&path.display().to_string(), e))?;
            (out.set, out.value, out.extension_value, out.restart_index)
        }
        ExtensionChoice::NeuralLovasz => {
            let ncfg = NeuralConfig {
                k: args.topk.min(n),
                power_iters: 5,
                reparam: Reparam::Sigmoid,
                normalize_trace: true,
            };
            let out = minimize_neural_filtered(&objective, n, args.dim, &ncfg, &cfg, Some(&keep))
                .map_err(|e| core_error(&path.display().to_string(), e))?;
            (out.set, out.value, out.extension_value, out.restart_index)
        }
    };

    let mut instance = json!({
        "graph": path.display().to_string(),
        "n": n,
        "edge_count": graph.edge_count(),
        "decoded_set": set_ids(&set),
        "decoded_size": set.cardinality(),
        "objective_value": value,
        "extension_value": extension_value,
        "restart_index": restart_index,
        "feasible": problem.is_feasible(&graph, &set),
    });
    if args.with_oracle {
        if n > BRUTE_FORCE_MAX_N {
            return Err(CliError::Limits(format!(
                "{}: --with-oracle needs n <= {BRUTE_FORCE_MAX_N}, got {n}",
                path.display()
            )));
        }
        let (best, optimum) =
            brute_force(&graph, problem).map_err(|e| core_error("brute force", e))?;
        let ratio = if optimum == 0 {
            1.0
        } else {
            set.cardinality() as f64 / optimum as f64
        };
        let obj = instance.as_object_mut().unwrap();
        obj.insert("optimum_size".into(), json!(optimum));
        obj.insert("optimum_set".into(), json!(set_ids(&best)));
        obj.insert("approximation_ratio".into(), json!(ratio));
        obj.insert("exact".into(), json!(set.cardinality() == optimum));
    }
    Ok((instance, start.elapsed().as_millis() as u64))
}

#[derive(Clone, Debug)]
pub struct VerifyArgs {
    pub suite: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Random set function with f(∅)=0 as a dense table.
fn random_table_oracle(n: usize, stream: &mut rng::SplitRng) -> SetFunctionOracle {
    use rand::Rng;
    let table: Vec<f64> = std::iter::once(0.0)
        .chain((1..1usize << n).map(|_| stream.random_range(-1.0..1.0)))
        .collect();
    SetFunctionOracle::from_table(n, table)
}

fn random_psd(n: usize, stream: &mut rng::SplitRng) -> DenseMatrix {
    use rand::Rng;
    let b = DenseMatrix::from_fn(n, n, |_, _| stream.random_range(-1.0..1.0));
    DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| b.get(k, i) * b.get(k, j)).sum()
    })
}

fn sample_box(n: usize, stream: &mut rng::SplitRng) -> DenseVector {
    use rand::Rng;
    DenseVector::new((0..n).map(|_| stream.random::<f64>()).collect())
}

fn sample_simplex(n: usize, stream: &mut rng::SplitRng) -> DenseVector {
    project_simplex(&sample_box(n, stream))
}

/// Box point with well-separated coordinates away from the faces, so sort
/// routing is stable under finite-difference probes.
fn sample_tie_free(n: usize, stream: &mut rng::SplitRng) -> DenseVector {
    use rand::Rng;
    loop {
        let x: Vec<f64> = (0..n).map(|_| stream.random_range(0.05..0.95)).collect();
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            return DenseVector::new(x);
        }
    }
}

/// Factor whose lifted forward pass is locally smooth: separated
/// eigenvalues and separated eigenvector orderings, so finite differences
/// probe a single routing branch.
fn sample_tie_free_factor(
    n: usize,
    d: usize,
    ncfg: &NeuralConfig,
    stream: &mut rng::SplitRng,
) -> DenseMatrix {
    use rand::Rng;
    'resample: loop {
        let factor = DenseMatrix::from_fn(n, d, |_, _| stream.random_range(-1.0..1.0));
        let x = DenseMatrix::from_fn(n, n, |i, j| {
            (0..d).map(|c| factor.get(i, c) * factor.get(j, c)).sum()
        });
        let spectrum =
            match neural::top_k_eigen_converged(&x, (ncfg.k + 1).min(n), 1e-12, 5_000) {
                Ok(p) => p,
                Err(_) => continue 'resample,
            };
        if spectrum.len() <= ncfg.k {
            continue 'resample;
        }
        let top = spectrum[0].value;
        for w in spectrum.windows(2) {
            if w[0].value - w[1].value < 0.1 * top {
                continue 'resample;
            }
        }
        if spectrum[ncfg.k - 1].value < 0.1 * top {
            continue 'resample;
        }
        let pipeline = match neural::top_k_eigen(&x, ncfg) {
            Ok(p) => p,
            Err(_) => continue 'resample,
        };
        if pipeline.len() < ncfg.k {
            continue 'resample;
        }
        for pair in &pipeline {
            if pair
                .vector
                .iter()
                .find(|v| v.abs() > 1e-12)
                .is_none_or(|v| v.abs() < 1e-2)
            {
                continue 'resample;
            }
            let mapped: Vec<f64> = match ncfg.reparam {
                Reparam::None => pair.vector.iter().copied().collect(),
                Reparam::Sigmoid => pair
                    .vector
                    .iter()
                    .map(|&t| 1.0 / (1.0 + (-t).exp()))
                    .collect(),
            };
            let mut sorted = mapped;
            sorted.sort_by(f64::total_cmp);
            if !sorted.windows(2).all(|w| w[1] - w[0] > 1e-2) {
                continue 'resample;
            }
        }
        return factor;
    }
}

const FEASIBLE_TOL: f64 = 1e-10;

fn verify_lp_suite(n: usize, trials: usize, seed: u64) -> (Vec<Value>, bool) {
    let kinds: Vec<ScalarExtensionKind> = vec![
        ScalarExtensionKind::Lovasz,
        ScalarExtensionKind::Multilinear,
        ScalarExtensionKind::BoundedCardinality((n / 2).max(1)),
        ScalarExtensionKind::SimplexSingleton,
    ];
    let mut results = Vec::new();
    let mut all_passed = true;
    for (kidx, kind) in kinds.iter().enumerate() {
        let mut stream = rng::stream(seed, 10_000 + kidx as u64);
        let mut max_marginal = 0.0f64;
        let mut max_mass = 0.0f64;
        let mut min_weight = f64::INFINITY;
        for _ in 0..trials {
            let x = match kind.domain() {
                scalar::Domain::UnitBox => sample_box(n, &mut stream),
                scalar::Domain::Simplex => sample_simplex(n, &mut stream),
            };
            let d = scalar::support(*kind, &x).expect("in-domain sample");
            let rep = core_verify::check_lp_feasible(&d, &x, FEASIBLE_TOL);
            max_marginal = max_marginal.max(rep.marginal_residual);
            max_mass = max_mass.max(rep.mass_residual);
            min_weight = min_weight.min(rep.min_weight);
        }
        let passed = max_marginal <= FEASIBLE_TOL && max_mass <= FEASIBLE_TOL && min_weight >= -1e-12;
        all_passed &= passed;
        results.push(json!({
            "kind": kind.name(),
            "trials": trials,
            "max_marginal_residual": max_marginal,
            "max_mass_residual": max_mass,
            "min_weight": min_weight,
            "passed": passed,
        }));
    }

    // The singleton construction is reported, not failed: its marginals
    // differ from x by design on almost every input.
    let mut stream = rng::stream(seed, 10_000 + 99);
    let mut infeasible = 0usize;
    let mut max_mass = 0.0f64;
    for _ in 0..trials {
        let x = sample_box(n, &mut stream);
        let d = scalar::singleton_support(&x).expect("box sample");
        let rep = core_verify::check_lp_feasible(&d, &x, FEASIBLE_TOL);
        if rep.marginal_residual > 1e-9 {
            infeasible += 1;
        }
        max_mass = max_mass.max(rep.mass_residual);
    }
    let fraction = infeasible as f64 / trials.max(1) as f64;
    let passed = fraction >= 0.99 && max_mass <= FEASIBLE_TOL;
    all_passed &= passed;
    results.push(json!({
        "kind": "singleton",
        "trials": trials,
        "expected_infeasible": true,
        "infeasible_fraction": fraction,
        "max_mass_residual": max_mass,
        "passed": passed,
    }));
    (results, all_passed)
}

fn verify_sdp_suite(n: usize, trials: usize, seed: u64) -> (Vec<Value>, bool) {
    let n = n.min(8);
    let mut stream = rng::stream(seed, 20_000);
    let mut max_recon = 0.0f64;
    let mut max_mass = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let x = random_psd(n, &mut stream);
        let cfg = NeuralConfig {
            k: n,
            power_iters: 20_000,
            reparam: Reparam::None,
            normalize_trace: true,
        };
        let pairs = neural::top_k_eigen(&x, &cfg).expect("symmetric psd");
        let total: f64 = pairs.iter().map(|p| p.value).sum();
        let support =
            neural::neural_support(ScalarExtensionKind::Lovasz, &x, &cfg).expect("support");
        let xprime = x.scale(1.0 / total);
        let rep = core_verify::check_sdp_feasible(&support, &xprime, 1e-8).expect("check");
        max_recon = max_recon.max(rep.reconstruction_residual);
        max_mass = max_mass.max(rep.mass_residual);
        min_slack = min_slack.min(rep.psd_slack);
    }
    let passed = max_recon <= 1e-9 && max_mass <= 1e-10 && min_slack >= -1e-8;
    (
        vec![json!({
            "kind": "full-rank-lift",
            "n": n,
            "trials": trials,
            "max_reconstruction_residual": max_recon,
            "max_mass_residual": max_mass,
            "min_psd_slack": min_slack,
            "passed": passed,
        })],
        passed,
    )
}

fn verify_extension_suite(n: usize, trials: usize, seed: u64) -> (Vec<Value>, bool) {
    let n = n.min(12);
    let mut kinds: Vec<ScalarExtensionKind> = vec![
        ScalarExtensionKind::Lovasz,
        ScalarExtensionKind::BoundedCardinality(2.min(n)),
        ScalarExtensionKind::BoundedCardinality((n / 2).max(1)),
        ScalarExtensionKind::BoundedCardinality(n),
        ScalarExtensionKind::Singleton,
        ScalarExtensionKind::SimplexSingleton,
    ];
    if n <= 10 {
        kinds.push(ScalarExtensionKind::Multilinear);
    }
    let mut results = Vec::new();
    let mut all_passed = true;
    for (kidx, kind) in kinds.iter().enumerate() {
        let mut stream = rng::stream(seed, 30_000 + kidx as u64);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let f = random_table_oracle(n, &mut stream);
            worst = worst.max(
                core_verify::check_extension_property_scalar(*kind, &f, n).expect("check"),
            );
        }
        let passed = worst <= 1e-10;
        all_passed &= passed;
        results.push(json!({
            "kind": kind.name(),
            "trials": trials,
            "max_error": worst,
            "passed": passed,
        }));
    }
    let mut stream = rng::stream(seed, 30_000 + 98);
    let mut worst = 0.0f64;
    let cfg = NeuralConfig::verification(4.min(n));
    for _ in 0..trials.min(5) {
        let f = random_table_oracle(n, &mut stream);
        worst = worst.max(
            core_verify::check_extension_property_neural(ScalarExtensionKind::Lovasz, &f, n, &cfg)
                .expect("check"),
        );
    }
    let passed = worst <= 1e-10;
    all_passed &= passed;
    results.push(json!({
        "kind": "neural-lovasz",
        "trials": trials.min(5),
        "max_error": worst,
        "passed": passed,
    }));
    (results, all_passed)
}

fn verify_minima_suite(n: usize, trials: usize, seed: u64) -> (Vec<Value>, bool) {
    let n = n.min(10);
    let samples = 1000;
    let mut results = Vec::new();
    let mut all_passed = true;
    let kinds = [
        ScalarExtensionKind::Lovasz,
        ScalarExtensionKind::Multilinear,
        ScalarExtensionKind::SimplexSingleton,
        ScalarExtensionKind::BoundedCardinality((n / 2).max(1)),
    ];
    for (kidx, kind) in kinds.iter().enumerate() {
        let mut stream = rng::stream(seed, 40_000 + kidx as u64);
        let mut worst_slack = f64::NEG_INFINITY;
        let mut worst_corner = 0.0f64;
        let mut has_corner = false;
        for t in 0..trials {
            let f = random_table_oracle(n, &mut stream);
            let rep = core_verify::check_no_bad_minima(*kind, &f, n, samples, seed + t as u64)
                .expect("check");
            worst_slack = worst_slack.max(rep.discrete_min - rep.sampled_min);
            if let Some(gap) = rep.corner_gap {
                has_corner = true;
                worst_corner = worst_corner.max(gap);
            }
        }
        let passed = worst_slack <= 1e-10 && worst_corner <= 1e-10;
        all_passed &= passed;
        results.push(json!({
            "kind": kind.name(),
            "trials": trials,
            "samples_per_trial": samples,
            "max_min_violation": worst_slack,
            "max_corner_gap": if has_corner { json!(worst_corner) } else { Value::Null },
            "passed": passed,
        }));
    }
    // Singleton variant needs a unique negative singleton minimum.
    let mut stream = rng::stream(seed, 40_000 + 97);
    let mut worst_slack = f64::NEG_INFINITY;
    let mut worst_corner = 0.0f64;
    for t in 0..trials {
        use rand::Rng;
        let mut table: Vec<f64> = std::iter::once(0.0)
            .chain((1..1usize << n).map(|_| stream.random_range(-1.0..1.0)))
            .collect();
        let special = stream.random_range(0..n);
        table[1 << special] = -2.0 - stream.random::<f64>();
        let f = SetFunctionOracle::from_table(n, table);
        let rep = core_verify::check_no_bad_minima_singleton(&f, n, samples, seed + t as u64)
            .expect("check");
        worst_slack = worst_slack.max(rep.discrete_min - rep.sampled_min);
        worst_corner = worst_corner.max(rep.corner_gap.unwrap_or(0.0));
    }
    let passed = worst_slack <= 1e-10 && worst_corner <= 1e-10;
    all_passed &= passed;
    results.push(json!({
        "kind": "singleton",
        "trials": trials,
        "samples_per_trial": samples,
        "max_min_violation": worst_slack,
        "max_corner_gap": worst_corner,
        "passed": passed,
    }));
    (results, all_passed)
}

fn gradient_rel_error(analytic: &DenseVector, fd: &DenseVector) -> f64 {
    let denom = analytic.norm2().max(fd.norm2()).max(1e-8);
    analytic.sub(fd).norm2() / denom
}

fn verify_gradient_suite(n: usize, trials: usize, seed: u64) -> (Vec<Value>, bool) {
    let h = 1e-5;
    let mut results = Vec::new();
    let mut all_passed = true;

    // Chain-extension gradient.
    {
        let n = n.min(10);
        let mut stream = rng::stream(seed, 50_000);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let f = random_table_oracle(n, &mut stream);
            let x = sample_tie_free(n, &mut stream);
            let g = scalar::lovasz_gradient(&f, &x).expect("gradient");
            let mut fd = vec![0.0; n];
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (scalar::evaluate(ScalarExtensionKind::Lovasz, &f, &xp).unwrap()
                    - scalar::evaluate(ScalarExtensionKind::Lovasz, &f, &xm).unwrap())
                    / (2.0 * h);
            }
            worst = worst.max(gradient_rel_error(&g, &DenseVector::new(fd)));
        }
        let passed = worst <= 1e-4;
        all_passed &= passed;
        results.push(json!({
            "kind": "lovasz",
            "trials": trials,
            "max_relative_error": worst,
            "passed": passed,
        }));
    }

    // Product-extension gradient.
    {
        let n = n.min(8);
        let mut stream = rng::stream(seed, 50_001);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let f = random_table_oracle(n, &mut stream);
            let x = sample_tie_free(n, &mut stream);
            let g = scalar::multilinear_gradient(&f, &x).expect("gradient");
            let mut fd = vec![0.0; n];
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (scalar::evaluate(ScalarExtensionKind::Multilinear, &f, &xp).unwrap()
                    - scalar::evaluate(ScalarExtensionKind::Multilinear, &f, &xm).unwrap())
                    / (2.0 * h);
            }
            worst = worst.max(gradient_rel_error(&g, &DenseVector::new(fd)));
        }
        let passed = worst <= 1e-4;
        all_passed &= passed;
        results.push(json!({
            "kind": "multilinear",
            "trials": trials,
            "max_relative_error": worst,
            "passed": passed,
        }));
    }

    // Lifted-extension gradient through the tape at n=6, d=3, k=2.
    {
        let (tn, d) = (6, 3);
        let ncfg = NeuralConfig {
            k: 2,
            power_iters: 5,
            reparam: Reparam::Sigmoid,
            normalize_trace: true,
        };
        let mut stream = rng::stream(seed, 50_002);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let f = random_table_oracle(tn, &mut stream);
            let factor = sample_tie_free_factor(tn, d, &ncfg, &mut stream);
            let (_, grad) = neural_tape_objective(&f, &factor, &ncfg).expect("tape");
            let mut fd = DenseMatrix::zeros(tn, d);
            let probe = |m: &DenseMatrix| neural_tape_objective(&f, m, &ncfg).unwrap().0;
            for i in 0..tn {
                for j in 0..d {
                    let mut up = factor.clone();
                    let mut down = factor.clone();
                    up.set(i, j, factor.get(i, j) + h);
                    down.set(i, j, factor.get(i, j) - h);
                    fd.set(i, j, (probe(&up) - probe(&down)) / (2.0 * h));
                }
            }
            let gvec = DenseVector::new(
                (0..tn)
                    .flat_map(|i| (0..d).map(move |j| (i, j)))
                    .map(|(i, j)| grad.get(i, j))
                    .collect(),
            );
            let fdvec = DenseVector::new(
                (0..tn)
                    .flat_map(|i| (0..d).map(move |j| (i, j)))
                    .map(|(i, j)| fd.get(i, j))
                    .collect(),
            );
            worst = worst.max(gradient_rel_error(&gvec, &fdvec));
        }
        let passed = worst <= 1e-4;
        all_passed &= passed;
        results.push(json!({
            "kind": "neural-tape",
            "n": tn,
            "dim": d,
            "topk": 2,
            "trials": trials,
            "max_relative_error": worst,
            "passed": passed,
        }));
    }

    (results, all_passed)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Report, CliError> {
    let known = ["lp", "sdp", "extension", "minima", "gradient", "all"];
    if !known.contains(&args.suite.as_str()) {
        return Err(CliError::Malformed(format!(
            "unknown suite {:?}; expected one of {known:?}",
            args.suite
        )));
    }
    if args.n > 12 {
        return Err(CliError::Limits(format!(
            "verify suites are exhaustive; n must be <= 12, got {}",
            args.n
        )));
    }
    if args.trials == 0 {
        return Err(CliError::Malformed("--trials must be >= 1".into()));
    }
    let mut flags = BTreeMap::new();
    flags.insert("suite".into(), args.suite.clone());
    flags.insert("n".into(), args.n.to_string());
    flags.insert("trials".into(), args.trials.to_string());
    let mut report = Report::new("verify", flags, args.seed);
    let start = Instant::now();

    let run_all = args.suite == "all";
    let mut passed = true;
    let push = |name: &str, results: Vec<Value>, ok: bool, report: &mut Report| {
        report.stable.results.push(json!({
            "suite": name,
            "passed": ok,
            "checks": results,
        }));
    };
    if run_all || args.suite == "lp" {
        let t = Instant::now();
        let (r, ok) = verify_lp_suite(args.n, args.trials, args.seed);
        passed &= ok;
        push("lp", r, ok, &mut report);
        report.timing.per_instance_ms.push(t.elapsed().as_millis() as u64);
    }
    if run_all || args.suite == "sdp" {
        let t = Instant::now();
        let (r, ok) = verify_sdp_suite(args.n, args.trials.min(50), args.seed);
        passed &= ok;
        push("sdp", r, ok, &mut report);
        report.timing.per_instance_ms.push(t.elapsed().as_millis() as u64);
    }
    if run_all || args.suite == "extension" {
        let t = Instant::now();
        let (r, ok) = verify_extension_suite(args.n, args.trials.min(25), args.seed);
        passed &= ok;
        push("extension", r, ok, &mut report);
        report.timing.per_instance_ms.push(t.elapsed().as_millis() as u64);
    }
    if run_all || args.suite == "minima" {
        let t = Instant::now();
        let (r, ok) = verify_minima_suite(args.n, args.trials.min(10), args.seed);
        passed &= ok;
        push("minima", r, ok, &mut report);
        report.timing.per_instance_ms.push(t.elapsed().as_millis() as u64);
    }
    if run_all || args.suite == "gradient" {
        let t = Instant::now();
        let (r, ok) = verify_gradient_suite(args.n, args.trials.min(100), args.seed);
        passed &= ok;
        push("gradient", r, ok, &mut report);
        report.timing.per_instance_ms.push(t.elapsed().as_millis() as u64);
    }
    report.stable.passed = passed;
    report.timing.total_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ClosureArgs {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub family: String,
}

fn closure_family_oracle(
    family: &str,
    n: usize,
    stream: &mut rng::SplitRng,
) -> Result<SetFunctionOracle, CliError> {
    use rand::Rng;
    match family {
        "random" => Ok(random_table_oracle(n, stream)),
        "modular" => {
            let w: Vec<f64> = (0..n).map(|_| stream.random_range(-1.0..1.0)).collect();
            Ok(SetFunctionOracle::new(n, move |s| {
                s.iter().map(|i| w[i]).sum()
            }))
        }
        "cut" => {
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .filter(|_| stream.random::<f64>() < 0.5)
                .collect();
            let g = Graph::new(n, &edges).map_err(|e| core_error("cut family", e))?;
            Ok(cut_function(&g))
        }
        other => Err(CliError::Malformed(format!(
            "unknown family {other:?}; expected random, cut, or modular"
        ))),
    }
}

pub fn cmd_closure(args: &ClosureArgs) -> Result<Report, CliError> {
    if args.n > sfe_core::closure::CLOSURE_MAX_N {
        return Err(CliError::Limits(format!(
            "closure needs n <= {}, got {}",
            sfe_core::closure::CLOSURE_MAX_N,
            args.n
        )));
    }
    if args.trials == 0 || args.n == 0 {
        return Err(CliError::Malformed("--trials and --n must be >= 1".into()));
    }
    let mut flags = BTreeMap::new();
    flags.insert("n".into(), args.n.to_string());
    flags.insert("trials".into(), args.trials.to_string());
    flags.insert("family".into(), args.family.clone());
    let mut report = Report::new("closure", flags, args.seed);
    let start = Instant::now();
    let n = args.n;

    let mut all_passed = true;
    for trial in 0..args.trials {
        let t = Instant::now();
        let mut stream = rng::stream(args.seed, 60_000 + trial as u64);
        let f = closure_family_oracle(&args.family, n, &mut stream)?;
        let xb = sample_box(n, &mut stream);
        let xs = sample_simplex(n, &mut stream);
        let box_closure = convex_closure(&f, &xb).map_err(|e| core_error("closure", e))?;
        let simplex_closure = convex_closure(&f, &xs).map_err(|e| core_error("closure", e))?;

        let kinds: [(ScalarExtensionKind, &DenseVector, f64); 4] = [
            (ScalarExtensionKind::Lovasz, &xb, box_closure.value),
            (ScalarExtensionKind::Multilinear, &xb, box_closure.value),
            (
                ScalarExtensionKind::BoundedCardinality((n / 2).max(1)),
                &xs,
                simplex_closure.value,
            ),
            (ScalarExtensionKind::SimplexSingleton, &xs, simplex_closure.value),
        ];
        let mut extensions = serde_json::Map::new();
        let mut gaps = serde_json::Map::new();
        let mut trial_passed = true;
        for (kind, x, closure_value) in kinds {
            let value = scalar::evaluate(kind, &f, x).map_err(|e| core_error("evaluate", e))?;
            let gap = value - closure_value;
            // The extension is a feasible dual point, so it can never beat
            // the optimum.
            trial_passed &= gap >= -1e-8;
            if args.family == "modular" {
                trial_passed &= gap.abs() <= 1e-9;
            }
            if args.family == "cut" && kind == ScalarExtensionKind::Lovasz {
                trial_passed &= gap.abs() <= 1e-7;
            }
            extensions.insert(kind.name(), json!(value));
            gaps.insert(kind.name(), json!(gap));
        }
        // Witness and dual certificates at the box point.
        let witness_ok =
            core_verify::check_lp_feasible(&box_closure.witness, &xb, 1e-8).passed;
        let dual_obj = box_closure.dual_z.dot(&xb) + box_closure.dual_b;
        let duality_gap = (dual_obj - box_closure.value).abs();
        trial_passed &= witness_ok && duality_gap <= 1e-7;

        all_passed &= trial_passed;
        report.stable.results.push(json!({
            "trial": trial,
            "family": args.family,
            "closure_box": box_closure.value,
            "closure_simplex": simplex_closure.value,
            "extensions": Value::Object(extensions),
            "gaps": Value::Object(gaps),
            "witness_feasible": witness_ok,
            "duality_gap": duality_gap,
            "pivots": box_closure.pivots,
            "passed": trial_passed,
        }));
        report.timing.per_instance_ms.push(t.elapsed().as_millis() as u64);
    }
    report.stable.passed = all_passed;
    report.timing.total_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
