//! Extensions on PSD matrices, built by lifting scalar constructions
//! through an eigendecomposition.
//!
//! A PSD input X = Σ λ_i v_i v_iᵀ induces the pair distribution
//! p_X(S,T) = Σ_i λ_i p_{v_i}(S) p_{v_i}(T), where p_{v_i} is any scalar
//! construction applied to the (optionally sigmoid-mapped) eigenvector.
//! The extension value is Σ p_X(S,T) f(S∩T). Eigenpairs come from power
//! iteration with deflation, matching the differentiable pipeline in
//! [`crate::optim`].

use std::collections::HashMap;

use crate::dist::{PairDistribution, SupportedDistribution};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector, KahanSum};
use crate::oracle::SetFunctionOracle;
use crate::scalar::{self, ScalarExtensionKind, SortPermutation};
use crate::subset::{Subset, MAX_GROUND_SET};

pub const SYMMETRY_TOL: f64 = 1e-12;

/// Cap on materialized pair-support size.
pub const NEURAL_SUPPORT_CAP: usize = 1_000_000;

/// One eigenvalue/eigenvector pair, unit norm, sign-fixed so the first
/// coordinate above 1e-12 in magnitude is positive.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DenseVector,
}

/// Eigenvector map applied before the scalar construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reparam {
    /// Feed the raw eigenvector to the scalar construction, accepting
    /// entries outside `[0,1]`; the telescoping identities still hold.
    None,
    /// Map entries through the logistic function first.
    Sigmoid,
}

/// Configuration of the lifted extension.
#[derive(Clone, Copy, Debug)]
pub struct NeuralConfig {
    /// Number of eigenpairs extracted (largest eigenvalues first).
    pub k: usize,
    /// Power-iteration count per eigenpair.
    pub power_iters: usize,
    pub reparam: Reparam,
    /// Rescale kept eigenvalues to sum to one, making the pair
    /// distribution a probability distribution.
    pub normalize_trace: bool,
}

impl NeuralConfig {
    /// Defaults used for optimization runs.
    pub fn optimization(k: usize) -> Self {
        NeuralConfig {
            k,
            power_iters: 5,
            reparam: Reparam::Sigmoid,
            normalize_trace: true,
        }
    }

    /// Defaults for verification: the sigmoid would break exactness at
    /// Boolean matrices (sigmoid(1) != 1), so both knobs are off.
    pub fn verification(k: usize) -> Self {
        NeuralConfig {
            k,
            power_iters: 200,
            reparam: Reparam::None,
            normalize_trace: false,
        }
    }
}

impl Default for NeuralConfig {
    fn default() -> Self {
        Self::optimization(4)
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

pub(crate) fn reparam_vector(reparam: Reparam, v: &DenseVector) -> DenseVector {
    match reparam {
        Reparam::None => v.clone(),
        Reparam::Sigmoid => DenseVector::new(v.iter().map(|&t| sigmoid(t)).collect()),
    }
}

fn fix_sign(v: &mut DenseVector) {
    for i in 0..v.len() {
        if v[i].abs() > 1e-12 {
            if v[i] < 0.0 {
                for j in 0..v.len() {
                    v[j] = -v[j];
                }
            }
            return;
        }
    }
}

/// Deterministic start vector, strictly positive so Boolean rank-one
/// matrices converge in a single step.
fn start_vector(n: usize) -> DenseVector {
    DenseVector::new(
        (0..n)
            .map(|i| 1.0 + 0.5 * ((i + 1) as f64).sin())
            .collect(),
    )
}

struct Extraction {
    value: f64,
    vector: DenseVector,
    residuals: Vec<f64>,
}

/// Power iteration on `m`; runs up to `iters` steps, stopping early when
/// the eigen-residual drops below `early_tol`.
fn extract_dominant(m: &DenseMatrix, iters: usize, early_tol: f64) -> Extraction {
    let n = m.rows();
    let mut v = start_vector(n);
    let nrm = v.norm2();
    v = v.scale(1.0 / nrm);
    let mut residuals = Vec::new();
    let mut value = 0.0;
    for _ in 0..iters {
        let w = m.matvec(&v);
        let wn = w.norm2();
        if wn < 1e-300 {
            value = 0.0;
            residuals.push(0.0);
            break;
        }
        v = w.scale(1.0 / wn);
        let mv = m.matvec(&v);
        value = mv.dot(&v);
        let residual = mv.sub(&v.scale(value)).norm2();
        residuals.push(residual);
        if residual <= early_tol {
            break;
        }
    }
    fix_sign(&mut v);
    Extraction {
        value,
        vector: v,
        residuals,
    }
}

fn top_k_eigen_impl(
    x: &DenseMatrix,
    k: usize,
    iters: usize,
    early_tol: f64,
) -> Result<(Vec<EigenPair>, Vec<Vec<f64>>)> {
    x.require_symmetric(SYMMETRY_TOL)?;
    let n = x.rows();
    if n > MAX_GROUND_SET {
        return Err(Error::GroundSetTooLarge {
            n,
            max: MAX_GROUND_SET,
        });
    }
    if k > n {
        return Err(Error::TooManyEigenpairs { k, n });
    }
    let mut deflated = x.clone();
    let mut pairs = Vec::new();
    let mut traces = Vec::new();
    for _ in 0..k {
        let ext = extract_dominant(&deflated, iters, early_tol);
        // PSD by contract: a non-positive Rayleigh quotient means the
        // remaining spectrum is deflation noise, so the lift stops here.
        if ext.value <= 0.0 {
            break;
        }
        deflated = deflated.sub(&DenseMatrix::scaled_outer(&ext.vector, ext.value));
        traces.push(ext.residuals);
        pairs.push(EigenPair {
            value: ext.value,
            vector: ext.vector,
        });
    }
    Ok((pairs, traces))
}

/// Top-k eigenpairs by power iteration with deflation, descending
/// eigenvalue. Runs `cfg.power_iters` iterations per pair (with an early
/// stop once the residual reaches machine scale).
pub fn top_k_eigen(x: &DenseMatrix, cfg: &NeuralConfig) -> Result<Vec<EigenPair>> {
    let scale = x.frobenius_norm().max(1e-300);
    Ok(top_k_eigen_impl(x, cfg.k, cfg.power_iters, 1e-15 * scale)?.0)
}

/// Converged-mode extraction: iterate each pair until the eigen-residual
/// falls below `tol` relative to the input norm, up to `max_iters`.
pub fn top_k_eigen_converged(
    x: &DenseMatrix,
    k: usize,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<EigenPair>> {
    let scale = x.frobenius_norm().max(1e-300);
    Ok(top_k_eigen_impl(x, k, max_iters, tol * scale)?.0)
}

/// Per-pair residual sequences, for convergence diagnostics.
pub fn top_k_eigen_with_residuals(
    x: &DenseMatrix,
    cfg: &NeuralConfig,
) -> Result<(Vec<EigenPair>, Vec<Vec<f64>>)> {
    let scale = x.frobenius_norm().max(1e-300);
    top_k_eigen_impl(x, cfg.k, cfg.power_iters, 1e-15 * scale)
}

/// Scalar support of each kept eigenvector together with its (optionally
/// trace-normalized) eigenvalue weight.
pub fn lifted_supports(
    scalar_kind: ScalarExtensionKind,
    x: &DenseMatrix,
    cfg: &NeuralConfig,
) -> Result<Vec<(f64, SupportedDistribution)>> {
    let pairs = top_k_eigen(x, cfg)?;
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let total: f64 = pairs.iter().map(|p| p.value).sum();
    let mut out = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let weight = if cfg.normalize_trace {
            pair.value / total
        } else {
            pair.value
        };
        let y = reparam_vector(cfg.reparam, &pair.vector);
        let support = match cfg.reparam {
            // Raw eigenvectors live outside [0,1]^n; the formulas still
            // telescope, so skip domain validation.
            Reparam::None => scalar::support_unchecked(scalar_kind, &y)?,
            // Sigmoid output must actually satisfy the kind's domain.
            Reparam::Sigmoid => scalar::support(scalar_kind, &y).map_err(|e| match e {
                Error::DomainViolation { detail, .. } => Error::DomainViolation {
                    domain: "reparameterized eigenvector",
                    detail,
                },
                other => other,
            })?,
        };
        out.push((weight, support));
    }
    Ok(out)
}

/// Extension value by the double sum over scalar support pairs:
/// Σ_i λ_i Σ_{S,T} p_i(S) p_i(T) f(S∩T).
pub fn neural_evaluate_generic(
    f: &SetFunctionOracle,
    scalar_kind: ScalarExtensionKind,
    x: &DenseMatrix,
    cfg: &NeuralConfig,
) -> Result<f64> {
    let lifts = lifted_supports(scalar_kind, x, cfg)?;
    let mut acc = KahanSum::new();
    for (lambda, support) in &lifts {
        let mut inner = KahanSum::new();
        for &(s, ws) in support.entries() {
            for &(t, wt) in support.entries() {
                let w = ws * wt;
                if w == 0.0 {
                    continue;
                }
                let meet = s.intersect(&t)?;
                let v = f.eval(meet).map_err(|e| match e {
                    Error::InfeasibleSet { set, .. } => Error::InfeasibleSet {
                        set,
                        weight: lambda * w,
                    },
                    other => other,
                })?;
                inner.add(w * v);
            }
        }
        acc.add(lambda * inner.value());
    }
    Ok(acc.value())
}

/// Closed-form lifted chain extension. The chain is closed under
/// intersection (S_j ∩ S_l = S_min(j,l)), which collapses the double sum to
/// Σ_i λ_i Σ_j p_j (p_j + 2 Σ_{l>j} p_l) f(S_j) and needs only O(k·n)
/// distinct oracle queries.
pub fn neural_lovasz(
    f: &SetFunctionOracle,
    x: &DenseMatrix,
    cfg: &NeuralConfig,
) -> Result<f64> {
    let pairs = top_k_eigen(x, cfg)?;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let n = x.rows();
    let total: f64 = pairs.iter().map(|p| p.value).sum();
    let mut acc = KahanSum::new();
    for pair in &pairs {
        let lambda = if cfg.normalize_trace {
            pair.value / total
        } else {
            pair.value
        };
        let y = reparam_vector(cfg.reparam, &pair.vector);
        let sp = SortPermutation::descending(&y);
        let gaps: Vec<f64> = (0..n).map(|r| sp.gap(&y, r)).collect();
        // Suffix sums Σ_{l>j} p_l, innermost first.
        let mut suffix = vec![0.0; n + 1];
        for j in (0..n).rev() {
            suffix[j] = suffix[j + 1] + gaps[j];
        }
        let mut inner = KahanSum::new();
        let mut bits = 0u64;
        for j in 0..n {
            bits |= 1u64 << sp.index_at(j);
            let p = gaps[j];
            if p == 0.0 {
                continue;
            }
            let v = f.eval(Subset::from_bits(bits, n))?;
            inner.add(p * (p + 2.0 * suffix[j + 1]) * v);
        }
        acc.add(lambda * inner.value());
    }
    Ok(acc.value())
}

/// Materializes the pair distribution p_X(S,T) = Σ_i λ_i p_i(S) p_i(T).
pub fn neural_support(
    scalar_kind: ScalarExtensionKind,
    x: &DenseMatrix,
    cfg: &NeuralConfig,
) -> Result<PairDistribution> {
    neural_support_with_cap(scalar_kind, x, cfg, NEURAL_SUPPORT_CAP)
}

pub fn neural_support_with_cap(
    scalar_kind: ScalarExtensionKind,
    x: &DenseMatrix,
    cfg: &NeuralConfig,
    cap: usize,
) -> Result<PairDistribution> {
    let lifts = lifted_supports(scalar_kind, x, cfg)?;
    let mut weights: HashMap<(u64, u64), f64> = HashMap::new();
    let mut all_normalized = true;
    for (lambda, support) in &lifts {
        all_normalized &= support.normalized();
        for &(s, ws) in support.entries() {
            for &(t, wt) in support.entries() {
                let w = lambda * ws * wt;
                if w == 0.0 {
                    continue;
                }
                *weights.entry((s.bits(), t.bits())).or_insert(0.0) += w;
                if weights.len() > cap {
                    return Err(Error::SupportTooLarge {
                        size: weights.len(),
                        cap,
                    });
                }
            }
        }
    }
    let n = x.rows();
    let mut entries: Vec<(Subset, Subset, f64)> = weights
        .into_iter()
        .map(|((sb, tb), w)| (Subset::from_bits(sb, n), Subset::from_bits(tb, n), w))
        .collect();
    entries.sort_by_key(|&(s, t, _)| (s.bits(), t.bits()));
    Ok(PairDistribution::new(
        entries,
        cfg.normalize_trace && all_normalized && !lifts.is_empty(),
    ))
}

/// Best set across the union of the per-eigenvector scalar supports.
pub fn neural_decode(
    f: &SetFunctionOracle,
    scalar_kind: ScalarExtensionKind,
    x: &DenseMatrix,
    cfg: &NeuralConfig,
) -> Result<(Subset, f64)> {
    neural_decode_filtered(f, scalar_kind, x, cfg, |_| true)
}

pub fn neural_decode_filtered(
    f: &SetFunctionOracle,
    scalar_kind: ScalarExtensionKind,
    x: &DenseMatrix,
    cfg: &NeuralConfig,
    keep: impl Fn(&Subset) -> bool,
) -> Result<(Subset, f64)> {
    let lifts = lifted_supports(scalar_kind, x, cfg)?;
    // Union of supports: a set qualifies with its best weight across
    // eigenvectors, so decoding sees everything any eigenvector proposes.
    let mut merged: HashMap<u64, f64> = HashMap::new();
    for (_, support) in &lifts {
        for &(s, w) in support.entries() {
            let cur = merged.entry(s.bits()).or_insert(f64::NEG_INFINITY);
            *cur = cur.max(w);
        }
    }
    let n = x.rows();
    let mut entries: Vec<(Subset, f64)> = merged
        .into_iter()
        .map(|(bits, w)| (Subset::from_bits(bits, n), w))
        .collect();
    entries.sort_by_key(|&(s, _)| s.bits());
    let union = SupportedDistribution::new(entries, false, false);
    scalar::decode_filtered(&union, f, keep)
}
