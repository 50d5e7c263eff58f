//! Projected (sub)gradient minimization of extensions over the unit box,
//! the simplex, or a PSD factor V with X = VVᵀ.
//!
//! Fixed step size with best-iterate tracking; restarts draw independent
//! seed streams and reduce by (decoded value, bitmask), so parallel and
//! serial runs agree bit for bit.

use rand::Rng;
use rayon::prelude::*;

use crate::autodiff::{Tape, TapeVar};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::neural::{self, NeuralConfig, Reparam};
use crate::oracle::SetFunctionOracle;
use crate::rng;
use crate::scalar::{self, Domain, ScalarExtensionKind, SortPermutation};
use crate::subset::Subset;

/// Step-count, learning-rate, restart, and seed bundle.
#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            steps: 300,
            learning_rate: 0.1,
            restarts: 10,
            seed: 0,
        }
    }
}

/// Result of a scalar-domain run.
#[derive(Clone, Debug)]
pub struct ScalarSolveOutcome {
    /// Best iterate by extension value.
    pub point: DenseVector,
    pub set: Subset,
    pub value: f64,
    pub extension_value: f64,
    /// Per-step extension values of the winning restart.
    pub telemetry: Vec<f64>,
    pub restart_index: usize,
}

/// Result of a factor-domain run.
#[derive(Clone, Debug)]
pub struct NeuralSolveOutcome {
    pub factor: DenseMatrix,
    pub set: Subset,
    pub value: f64,
    pub extension_value: f64,
    pub telemetry: Vec<f64>,
    pub restart_index: usize,
}

/// Component-wise clamp onto `[0,1]^n`.
pub fn project_box(x: &DenseVector) -> DenseVector {
    DenseVector::new(x.iter().map(|v| v.clamp(0.0, 1.0)).collect())
}

/// Euclidean projection onto the probability simplex by sort and
/// threshold: θ is the largest prefix average keeping the shifted entries
/// positive, and the output is max(x − θ, 0).
pub fn project_simplex(x: &DenseVector) -> DenseVector {
    let n = x.len();
    let mut sorted: Vec<f64> = x.as_slice().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
            rho = i + 1;
        }
    }
    debug_assert!(rho > 0 || n == 0);
    DenseVector::new(x.iter().map(|v| (v - theta).max(0.0)).collect())
}

fn sample_init(domain: Domain, n: usize, rng: &mut rng::SplitRng) -> DenseVector {
    let raw = DenseVector::new((0..n).map(|_| rng.random::<f64>()).collect());
    match domain {
        Domain::UnitBox => raw,
        Domain::Simplex => project_simplex(&raw),
    }
}

fn standard_normal(rng: &mut rng::SplitRng) -> f64 {
    // Box-Muller; the log argument is clamped away from zero.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Forward value and gradient of a scalar construction through the tape,
/// for the kinds without a hand-written gradient. The sort permutation is
/// fixed at forward time, yielding a valid subgradient away from ties.
pub fn scalar_tape_objective(
    f: &SetFunctionOracle,
    kind: ScalarExtensionKind,
    x: &DenseVector,
) -> Result<(f64, DenseVector)> {
    let n = x.len();
    let mut tape = Tape::new();
    let vars: Vec<TapeVar> = x.iter().map(|&v| tape.var(v)).collect();
    let sp = SortPermutation::descending(x);

    let mut terms: Vec<TapeVar> = Vec::new();
    match kind {
        ScalarExtensionKind::Singleton => {
            for rank in 0..n {
                let fval = f.eval(Subset::singleton(sp.index_at(rank), n))?;
                if fval == 0.0 {
                    continue;
                }
                let hi = vars[sp.index_at(rank)];
                let gap = if rank + 1 < n {
                    let lo = vars[sp.index_at(rank + 1)];
                    tape.sub(hi, lo)
                } else {
                    hi
                };
                terms.push(tape.scale(gap, fval));
            }
        }
        ScalarExtensionKind::SimplexSingleton => {
            for (i, &var) in vars.iter().enumerate() {
                let fval = f.eval(Subset::singleton(i, n))?;
                if fval != 0.0 {
                    terms.push(tape.scale(var, fval));
                }
            }
        }
        ScalarExtensionKind::BoundedCardinality(k) => {
            if k == 0 || k > n {
                return Err(Error::CardinalityBound { k, n });
            }
            let gaps: Vec<TapeVar> = (0..n)
                .map(|rank| {
                    let hi = vars[sp.index_at(rank)];
                    if rank + 1 < n {
                        let lo = vars[sp.index_at(rank + 1)];
                        tape.sub(hi, lo)
                    } else {
                        hi
                    }
                })
                .collect();
            for i in 0..n {
                let lo = i.saturating_sub(k - 1);
                let ranks: Vec<usize> = if i < k {
                    (0..=i).collect()
                } else {
                    (lo..=i).collect()
                };
                let set = Subset::from_indices(
                    &ranks.iter().map(|&r| sp.index_at(r)).collect::<Vec<_>>(),
                    n,
                );
                let fval = f.eval(set)?;
                if fval == 0.0 {
                    continue;
                }
                let summed: Vec<TapeVar> = (i..n).step_by(k).map(|j| gaps[j]).collect();
                let w = tape.sum(&summed);
                terms.push(tape.scale(w, fval));
            }
        }
        // Analytic gradients exist for these; the tape path is not used.
        ScalarExtensionKind::Lovasz | ScalarExtensionKind::Multilinear => {
            return Err(Error::DomainViolation {
                domain: "tape objective",
                detail: "chain and product constructions use analytic gradients".into(),
            });
        }
    }
    let out = tape.sum(&terms);
    let grad = tape.gradient(out, &vars);
    Ok((tape.value(out), DenseVector::new(grad)))
}

fn scalar_gradient(
    f: &SetFunctionOracle,
    kind: ScalarExtensionKind,
    x: &DenseVector,
) -> Result<DenseVector> {
    match kind {
        ScalarExtensionKind::Lovasz => scalar::lovasz_gradient(f, x),
        ScalarExtensionKind::Multilinear => scalar::multilinear_gradient(f, x),
        _ => Ok(scalar_tape_objective(f, kind, x)?.1),
    }
}

type Filter<'a> = Option<&'a (dyn Fn(&Subset) -> bool + Sync)>;

/// Best decoded candidate across visited iterates. Gradient descent on
/// these piecewise-linear objectives routinely converges onto a Boolean
/// corner whose support degenerates to a point mass (often on a set the
/// feasibility filter rejects), so decoding only the final iterate throws
/// away every intermediate ranking; tracking the best filtered decode over
/// the whole trajectory is what makes the returned set meaningful.
#[derive(Clone, Copy, Default)]
struct DecodedBest {
    hit: Option<(Subset, f64)>,
}

impl DecodedBest {
    fn offer(&mut self, candidate: Result<(Subset, f64)>) -> Result<()> {
        match candidate {
            Ok((s, v)) => {
                self.hit = Some(match self.hit {
                    None => (s, v),
                    Some((bs, bv)) => {
                        if v < bv || (v == bv && s.bits() < bs.bits()) {
                            (s, v)
                        } else {
                            (bs, bv)
                        }
                    }
                });
                Ok(())
            }
            Err(Error::EmptySupport) => Ok(()),
            Err(e) => Err(e),
        }
    }

    fn finish(self, filter: Filter<'_>, n: usize) -> Result<(Subset, f64)> {
        let keep = |s: &Subset| filter.is_none_or(|pred| pred(s));
        match self.hit {
            Some(hit) => Ok(hit),
            // No iterate offered a feasible support set; the empty set is
            // the canonical feasible fallback when the filter allows it.
            None if keep(&Subset::empty(n)) => Ok((Subset::empty(n), 0.0)),
            None => Err(Error::EmptySupport),
        }
    }
}

struct RestartResult<P> {
    point: P,
    set: Subset,
    value: f64,
    extension_value: f64,
    telemetry: Vec<f64>,
}

fn better_restart<P>(
    a: (usize, RestartResult<P>),
    b: (usize, RestartResult<P>),
) -> (usize, RestartResult<P>) {
    // (value, bitmask) order; earlier restart wins remaining ties.
    let ka = (a.1.value, a.1.set.bits());
    let kb = (b.1.value, b.1.set.bits());
    if kb.0 < ka.0 || (kb.0 == ka.0 && kb.1 < ka.1) {
        b
    } else {
        a
    }
}

/// Projected subgradient minimization of a scalar construction, returning
/// the decoded set of the best iterate of the best restart.
pub fn minimize_scalar(
    f: &SetFunctionOracle,
    kind: ScalarExtensionKind,
    n: usize,
    cfg: &SolveConfig,
) -> Result<ScalarSolveOutcome> {
    minimize_scalar_filtered(f, kind, n, cfg, None)
}

/// `minimize_scalar` with a feasibility filter applied at decode time; the
/// solver pipelines pass the problem predicate so only constraint-
/// satisfying sets are returned.
pub fn minimize_scalar_filtered(
    f: &SetFunctionOracle,
    kind: ScalarExtensionKind,
    n: usize,
    cfg: &SolveConfig,
    filter: Filter<'_>,
) -> Result<ScalarSolveOutcome> {
    assert!(cfg.steps >= 1 && cfg.restarts >= 1 && cfg.learning_rate > 0.0);
    let domain = kind.domain();
    let project = |x: &DenseVector| match domain {
        Domain::UnitBox => project_box(x),
        Domain::Simplex => project_simplex(x),
    };

    let keep = |s: &Subset| filter.is_none_or(|pred| pred(s));
    let run_restart = |r: usize| -> Result<RestartResult<DenseVector>> {
        let mut stream = rng::stream(cfg.seed, r as u64);
        let mut x = sample_init(domain, n, &mut stream);
        let mut best_x = x.clone();
        let mut best_v = scalar::evaluate(kind, f, &x)?;
        let mut decoded = DecodedBest::default();
        decoded.offer(scalar::decode_filtered(&scalar::support(kind, &x)?, f, keep))?;
        let mut telemetry = Vec::with_capacity(cfg.steps);
        for _ in 0..cfg.steps {
            let g = scalar_gradient(f, kind, &x)?;
            let stepped = DenseVector::new(
                x.iter()
                    .zip(g.iter())
                    .map(|(xi, gi)| xi - cfg.learning_rate * gi)
                    .collect(),
            );
            x = project(&stepped);
            let support = scalar::support(kind, &x)?;
            let v = scalar::evaluate_support(&support, f)?;
            telemetry.push(v);
            if v < best_v {
                best_v = v;
                best_x = x.clone();
            }
            decoded.offer(scalar::decode_filtered(&support, f, keep))?;
        }
        let (set, value) = decoded.finish(filter, n)?;
        Ok(RestartResult {
            point: best_x,
            set,
            value,
            extension_value: best_v,
            telemetry,
        })
    };

    let results: Vec<Result<RestartResult<DenseVector>>> =
        (0..cfg.restarts).into_par_iter().map(run_restart).collect();
    let mut best: Option<(usize, RestartResult<DenseVector>)> = None;
    for (idx, res) in results.into_iter().enumerate() {
        let res = res?;
        best = Some(match best {
            None => (idx, res),
            Some(cur) => better_restart(cur, (idx, res)),
        });
    }
    let (restart_index, chosen) = best.expect("at least one restart");
    Ok(ScalarSolveOutcome {
        point: chosen.point,
        set: chosen.set,
        value: chosen.value,
        extension_value: chosen.extension_value,
        telemetry: chosen.telemetry,
        restart_index,
    })
}

/// Forward value and gradient of the lifted chain extension as a function
/// of the factor V (X = VVᵀ), differentiated through the recorded power
/// iterations. Matches `neural::neural_lovasz` at the same configuration.
pub fn neural_tape_objective(
    f: &SetFunctionOracle,
    factor: &DenseMatrix,
    ncfg: &NeuralConfig,
) -> Result<(f64, DenseMatrix)> {
    let n = factor.rows();
    let d = factor.cols();
    let mut tape = Tape::new();
    let vars: Vec<Vec<TapeVar>> = (0..n)
        .map(|i| (0..d).map(|j| tape.var(factor.get(i, j))).collect())
        .collect();

    // X = V Vᵀ, symmetric by construction.
    let mut x: Vec<Vec<TapeVar>> = vec![Vec::with_capacity(n); n];
    for i in 0..n {
        for j in 0..n {
            let entry = if j < i {
                x[j][i]
            } else {
                tape.dot(&vars[i].clone(), &vars[j].clone())
            };
            x[i].push(entry);
        }
    }

    // Power iteration with deflation, fixed iteration count.
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i + 1) as f64).sin()).collect();
    let start_norm: f64 = start.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut lambdas: Vec<TapeVar> = Vec::new();
    let mut vectors: Vec<Vec<TapeVar>> = Vec::new();
    for _pair in 0..ncfg.k {
        let mut v: Vec<TapeVar> = start
            .iter()
            .map(|&s| tape.constant(s / start_norm))
            .collect();
        for _ in 0..ncfg.power_iters {
            let w: Vec<TapeVar> = (0..n).map(|i| tape.dot(&x[i].clone(), &v)).collect();
            let sq: Vec<TapeVar> = w.iter().map(|&wi| tape.mul(wi, wi)).collect();
            let norm_sq = tape.sum(&sq);
            let norm = tape.sqrt(norm_sq);
            v = w.iter().map(|&wi| tape.div(wi, norm)).collect();
        }
        // Sign convention as fixed routing, mirroring the eigensolver: the
        // first coordinate above 1e-12 in magnitude must be positive.
        let flip = v
            .iter()
            .map(|&vi| tape.value(vi))
            .find(|val| val.abs() > 1e-12)
            .is_some_and(|val| val < 0.0);
        if flip {
            v = v.iter().map(|&vi| tape.neg(vi)).collect();
        }
        let xv: Vec<TapeVar> = (0..n).map(|i| tape.dot(&x[i].clone(), &v)).collect();
        let lambda_raw = tape.dot(&xv, &v);
        let lambda = tape.ramp(lambda_raw);
        // Deflate X <- X - λ v vᵀ.
        for i in 0..n {
            for j in 0..n {
                let vij = tape.mul(v[i], v[j]);
                let lv = tape.mul(lambda, vij);
                x[i][j] = tape.sub(x[i][j], lv);
            }
        }
        lambdas.push(lambda);
        vectors.push(v);
    }

    // Pairs whose clamped eigenvalue is zero at forward time drop out of
    // the lift entirely (fixed routing).
    let kept: Vec<usize> = (0..lambdas.len())
        .filter(|&i| tape.value(lambdas[i]) > 0.0)
        .collect();
    if kept.is_empty() {
        let grad = DenseMatrix::zeros(n, d);
        return Ok((0.0, grad));
    }
    let total = {
        let vals: Vec<TapeVar> = kept.iter().map(|&i| lambdas[i]).collect();
        tape.sum(&vals)
    };

    let mut contributions: Vec<TapeVar> = Vec::new();
    for &pair in &kept {
        let weight = if ncfg.normalize_trace {
            tape.div(lambdas[pair], total)
        } else {
            lambdas[pair]
        };
        let y: Vec<TapeVar> = match ncfg.reparam {
            Reparam::None => vectors[pair].clone(),
            Reparam::Sigmoid => vectors[pair].iter().map(|&vi| tape.sigmoid(vi)).collect(),
        };
        // Sort by forward value (descending, index tie-break): fixed
        // routing for the chain construction.
        let values = DenseVector::new(y.iter().map(|&yi| tape.value(yi)).collect());
        let sp = SortPermutation::descending(&values);
        let gaps: Vec<TapeVar> = (0..n)
            .map(|rank| {
                let hi = y[sp.index_at(rank)];
                if rank + 1 < n {
                    let lo = y[sp.index_at(rank + 1)];
                    tape.sub(hi, lo)
                } else {
                    hi
                }
            })
            .collect();
        // Σ_j p_j (p_j + 2 Σ_{l>j} p_l) f(S_j), suffix sums reused.
        let mut suffix: Vec<TapeVar> = vec![tape.constant(0.0); n + 1];
        for j in (0..n).rev() {
            suffix[j] = tape.add(suffix[j + 1], gaps[j]);
        }
        let mut terms: Vec<TapeVar> = Vec::new();
        let mut bits = 0u64;
        for j in 0..n {
            bits |= 1u64 << sp.index_at(j);
            if tape.value(gaps[j]) == 0.0 {
                continue;
            }
            let fval = f.eval(Subset::from_bits(bits, n))?;
            if fval == 0.0 {
                continue;
            }
            let twice_suffix = tape.scale(suffix[j + 1], 2.0);
            let inner = tape.add(gaps[j], twice_suffix);
            let prod = tape.mul(gaps[j], inner);
            terms.push(tape.scale(prod, fval));
        }
        let pair_value = tape.sum(&terms);
        contributions.push(tape.mul(weight, pair_value));
    }
    let out = tape.sum(&contributions);
    let value = tape.value(out);
    let adjoint = tape.backward(out);
    let mut grad = DenseMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            grad.set(i, j, adjoint[vars[i][j].index()]);
        }
    }
    Ok((value, grad))
}

/// Gradient minimization over the factor V of the lifted chain extension.
pub fn minimize_neural(
    f: &SetFunctionOracle,
    n: usize,
    d: usize,
    ncfg: &NeuralConfig,
    cfg: &SolveConfig,
) -> Result<NeuralSolveOutcome> {
    minimize_neural_filtered(f, n, d, ncfg, cfg, None)
}

pub fn minimize_neural_filtered(
    f: &SetFunctionOracle,
    n: usize,
    d: usize,
    ncfg: &NeuralConfig,
    cfg: &SolveConfig,
    filter: Filter<'_>,
) -> Result<NeuralSolveOutcome> {
    assert!(d >= 1 && cfg.steps >= 1 && cfg.restarts >= 1 && cfg.learning_rate > 0.0);

    let gram = |v: &DenseMatrix| {
        DenseMatrix::from_fn(n, n, |i, j| {
            let mut acc = 0.0;
            for c in 0..d {
                acc += v.get(i, c) * v.get(j, c);
            }
            acc
        })
    };

    let keep = |s: &Subset| filter.is_none_or(|pred| pred(s));
    let run_restart = |r: usize| -> Result<RestartResult<DenseMatrix>> {
        let mut stream = rng::stream(cfg.seed, r as u64);
        let scale = 1.0 / (d as f64).sqrt();
        let mut v =
            DenseMatrix::from_fn(n, d, |_, _| standard_normal(&mut stream) * scale);
        let (mut best_v, mut best_obj) = (v.clone(), f64::INFINITY);
        let mut decoded = DecodedBest::default();
        let mut telemetry = Vec::with_capacity(cfg.steps);
        for step in 0..=cfg.steps {
            let (value, grad) = neural_tape_objective(f, &v, ncfg)?;
            if step > 0 {
                telemetry.push(value);
            }
            if value < best_obj {
                best_obj = value;
                best_v = v.clone();
            }
            decoded.offer(neural::neural_decode_filtered(
                f,
                ScalarExtensionKind::Lovasz,
                &gram(&v),
                ncfg,
                keep,
            ))?;
            if step == cfg.steps {
                break;
            }
            v = DenseMatrix::from_fn(n, d, |i, j| {
                v.get(i, j) - cfg.learning_rate * grad.get(i, j)
            });
        }
        let (set, value) = decoded.finish(filter, n)?;
        Ok(RestartResult {
            point: best_v,
            set,
            value,
            extension_value: best_obj,
            telemetry,
        })
    };

    let results: Vec<Result<RestartResult<DenseMatrix>>> =
        (0..cfg.restarts).into_par_iter().map(run_restart).collect();
    let mut best: Option<(usize, RestartResult<DenseMatrix>)> = None;
    for (idx, res) in results.into_iter().enumerate() {
        let res = res?;
        best = Some(match best {
            None => (idx, res),
            Some(cur) => better_restart(cur, (idx, res)),
        });
    }
    let (restart_index, chosen) = best.expect("at least one restart");
    Ok(NeuralSolveOutcome {
        factor: chosen.point,
        set: chosen.set,
        value: chosen.value,
        extension_value: chosen.extension_value,
        telemetry: chosen.telemetry,
        restart_index,
    })
}
