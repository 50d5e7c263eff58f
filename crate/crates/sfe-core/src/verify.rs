//! Certification of the defining conditions: dual feasibility of scalar
//! supports, PSD feasibility of pair supports, extension identities,
//! no-bad-minima checks, and a cyclic Jacobi eigensolver used as ground
//! truth for the power method.
//!
//! Checks report residuals instead of throwing: infeasibility is
//! informative (the singleton construction fails marginals by design).

use rand::Rng;

use crate::dist::{PairDistribution, SupportedDistribution};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector, KahanSum};
use crate::neural::{self, NeuralConfig};
use crate::oracle::SetFunctionOracle;
use crate::rng;
use crate::scalar::{self, Domain, ScalarExtensionKind};
use crate::subset::{Subset, MAX_GROUND_SET};

pub const DEFAULT_SDP_SUPPORT_CAP: usize = 1_000_000;

/// Residuals of a support against the dual constraints at x.
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    /// ‖Σ y_S 1_S − x‖∞
    pub marginal_residual: f64,
    /// |Σ y_S − 1|
    pub mass_residual: f64,
    pub min_weight: f64,
    pub passed: bool,
    pub tol: f64,
}

/// Residuals of a pair support against the PSD dual constraints at X'.
#[derive(Clone, Debug)]
pub struct SdpFeasibilityReport {
    /// ‖M − X'‖_F for M = Σ y_{S,T} (1_S 1_Tᵀ + 1_T 1_Sᵀ)/2
    pub reconstruction_residual: f64,
    /// λ_min(M − X'); feasibility requires this to be nonnegative.
    pub psd_slack: f64,
    pub mass_residual: f64,
    pub passed: bool,
    pub tol: f64,
}

/// Measures a support against Σ y_S 1_S = x, Σ y_S = 1, y ≥ 0.
pub fn check_lp_feasible(
    d: &SupportedDistribution,
    x: &DenseVector,
    tol: f64,
) -> FeasibilityReport {
    let marginal_residual = d.marginals(x.len()).sub(x).norm_inf();
    let mass_residual = (d.total_mass() - 1.0).abs();
    let min_weight = if d.is_empty() { 0.0 } else { d.min_weight() };
    FeasibilityReport {
        marginal_residual,
        mass_residual,
        min_weight,
        passed: marginal_residual <= tol && mass_residual <= tol && min_weight >= -tol,
        tol,
    }
}

/// Assembles M = Σ y_{S,T} (1_S 1_Tᵀ + 1_T 1_Sᵀ)/2.
pub fn pair_support_matrix(p: &PairDistribution, n: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for &(s, t, w) in p.entries() {
        let half = w / 2.0;
        for i in s.iter() {
            for j in t.iter() {
                m.set(i, j, m.get(i, j) + half);
                m.set(j, i, m.get(j, i) + half);
            }
        }
    }
    m
}

pub fn check_sdp_feasible(
    p: &PairDistribution,
    xprime: &DenseMatrix,
    tol: f64,
) -> Result<SdpFeasibilityReport> {
    check_sdp_feasible_with_cap(p, xprime, tol, DEFAULT_SDP_SUPPORT_CAP)
}

pub fn check_sdp_feasible_with_cap(
    p: &PairDistribution,
    xprime: &DenseMatrix,
    tol: f64,
    cap: usize,
) -> Result<SdpFeasibilityReport> {
    if p.len() > cap {
        return Err(Error::SupportTooLarge { size: p.len(), cap });
    }
    xprime.require_symmetric(1e-9)?;
    let n = xprime.rows();
    let m = pair_support_matrix(p, n);
    let diff = m.sub(xprime);
    let reconstruction_residual = diff.frobenius_norm();
    let (evals, _) = jacobi_eigen(&diff)?;
    let psd_slack = if evals.is_empty() {
        0.0
    } else {
        evals[evals.len() - 1]
    };
    let mass_residual = (p.total_mass() - 1.0).abs();
    Ok(SdpFeasibilityReport {
        reconstruction_residual,
        psd_slack,
        mass_residual,
        passed: psd_slack >= -tol && mass_residual <= tol,
        tol,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps until the
/// off-diagonal Frobenius mass falls below 1e-12 of the input norm or 30
/// sweeps elapse. Returns eigenvalues in descending order with matching
/// eigenvector columns.
pub fn jacobi_eigen(a: &DenseMatrix) -> Result<(DenseVector, DenseMatrix)> {
    a.require_symmetric(1e-12)?;
    let n = a.rows();
    if n > MAX_GROUND_SET {
        return Err(Error::GroundSetTooLarge {
            n,
            max: MAX_GROUND_SET,
        });
    }
    if n == 0 {
        return Ok((DenseVector::zeros(0), DenseMatrix::zeros(0, 0)));
    }
    // Work on the symmetrized copy so rotations preserve symmetry exactly.
    let mut m = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let mut v = DenseMatrix::identity(n);
    let norm = m.frobenius_norm();
    let threshold = 1e-12 * norm;

    for _sweep in 0..30 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m.get(p, q) * m.get(p, q);
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // M <- Jᵀ M J with the rotation in the (p,q) plane.
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let evals = DenseVector::new(order.iter().map(|&i| m.get(i, i)).collect());
    let mut evecs = DenseMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        evecs.set_column(col, &v.column(i));
    }
    Ok((evals, evecs))
}

/// Exhaustive max |f̄(1_S) − f(S)| over the sets where the construction
/// claims the extension identity.
pub fn check_extension_property_scalar(
    kind: ScalarExtensionKind,
    f: &SetFunctionOracle,
    n: usize,
) -> Result<f64> {
    assert!(n <= 12, "exhaustive check is capped at n = 12");
    let mut worst = 0.0f64;
    for s in Subset::enumerate_all(n) {
        if !kind.extends_at(&s) {
            continue;
        }
        let value = scalar::evaluate(kind, f, &s.indicator())?;
        worst = worst.max((value - f.eval(s)?).abs());
    }
    Ok(worst)
}

/// Exhaustive max |f̄(1_S 1_Sᵀ) − f(S)| for the lifted extension.
pub fn check_extension_property_neural(
    scalar_kind: ScalarExtensionKind,
    f: &SetFunctionOracle,
    n: usize,
    cfg: &NeuralConfig,
) -> Result<f64> {
    assert!(n <= 12, "exhaustive check is capped at n = 12");
    let mut worst = 0.0f64;
    for s in Subset::enumerate_all(n) {
        if !scalar_kind.extends_at(&s) {
            continue;
        }
        let x = DenseMatrix::scaled_outer(&s.indicator(), 1.0);
        let value = neural::neural_evaluate_generic(f, scalar_kind, &x, cfg)?;
        worst = worst.max((value - f.eval(s)?).abs());
    }
    Ok(worst)
}

/// Outcome of sampling an extension against its discrete minima.
#[derive(Clone, Debug)]
pub struct MinimaReport {
    /// Minimum sampled extension value (domain corners included when the
    /// discrete minimizer embeds into the domain).
    pub sampled_min: f64,
    /// Minimum of f over the discrete family the construction can reach.
    pub discrete_min: f64,
    /// |f̄(embedded minimizer) − discrete_min| when that corner exists.
    pub corner_gap: Option<f64>,
}

/// Exhaustive argmin of f, tie-broken like decode.
pub fn global_discrete_min(f: &SetFunctionOracle, n: usize) -> Result<(Subset, f64)> {
    assert!(n <= 24);
    let mut best: Option<(Subset, f64)> = None;
    for s in Subset::enumerate_all(n) {
        if !f.is_feasible(s) {
            continue;
        }
        let v = f.eval(s)?;
        best = Some(match best {
            None => (s, v),
            Some((bs, bv)) => {
                if v < bv
                    || (v == bv
                        && (s.cardinality(), s.bits()) < (bs.cardinality(), bs.bits()))
                {
                    (s, v)
                } else {
                    (bs, bv)
                }
            }
        });
    }
    best.ok_or(Error::EmptySupport)
}

fn sample_domain_point(domain: Domain, n: usize, rng: &mut rng::SplitRng) -> DenseVector {
    match domain {
        Domain::UnitBox => DenseVector::new((0..n).map(|_| rng.random::<f64>()).collect()),
        Domain::Simplex => {
            let raw: Vec<f64> = (0..n)
                .map(|_| -(rng.random::<f64>().max(1e-300)).ln())
                .collect();
            let total: f64 = raw.iter().sum();
            DenseVector::new(raw.into_iter().map(|v| v / total).collect())
        }
    }
}

/// Samples the extension over its domain and compares with the discrete
/// minimum. For box-domain constructions the discrete family is all of
/// `2^[n]` and the minimizing corner is evaluated explicitly; on the simplex
/// only singleton corners embed, so the family shrinks accordingly.
pub fn check_no_bad_minima(
    kind: ScalarExtensionKind,
    f: &SetFunctionOracle,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<MinimaReport> {
    assert!(n <= 16);
    let mut rng = rng::stream(seed, 0);
    let mut sampled_min = f64::INFINITY;
    for _ in 0..samples {
        let x = sample_domain_point(kind.domain(), n, &mut rng);
        sampled_min = sampled_min.min(scalar::evaluate(kind, f, &x)?);
    }
    let (discrete_min, corner): (f64, Option<DenseVector>) = match kind {
        ScalarExtensionKind::Lovasz | ScalarExtensionKind::Multilinear => {
            let (argmin, value) = global_discrete_min(f, n)?;
            (value, Some(argmin.indicator()))
        }
        ScalarExtensionKind::SimplexSingleton => {
            let mut best = (f64::INFINITY, 0usize);
            for i in 0..n {
                let v = f.eval(Subset::singleton(i, n))?;
                if v < best.0 {
                    best = (v, i);
                }
            }
            (best.0, Some(Subset::singleton(best.1, n).indicator()))
        }
        // Boolean corners of larger sets do not lie on the simplex, so the
        // bound is checked without a witnessing corner.
        ScalarExtensionKind::BoundedCardinality(_) => (global_discrete_min(f, n)?.1, None),
        ScalarExtensionKind::Singleton => {
            return check_no_bad_minima_singleton(f, n, samples, seed)
        }
    };
    let corner_gap = match corner {
        Some(x) => {
            let at_corner = scalar::evaluate(kind, f, &x)?;
            sampled_min = sampled_min.min(at_corner);
            Some((at_corner - discrete_min).abs())
        }
        None => None,
    };
    Ok(MinimaReport {
        sampled_min,
        discrete_min,
        corner_gap,
    })
}

/// No-bad-minima variant for the singleton construction: when the best
/// singleton value is negative and unique, the sampled box minimum matches
/// the minimum over singletons, attained at the corresponding basis vector.
pub fn check_no_bad_minima_singleton(
    f: &SetFunctionOracle,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<MinimaReport> {
    let mut rng = rng::stream(seed, 0);
    let mut sampled_min = f64::INFINITY;
    for _ in 0..samples {
        let x = sample_domain_point(Domain::UnitBox, n, &mut rng);
        sampled_min = sampled_min.min(scalar::evaluate(ScalarExtensionKind::Singleton, f, &x)?);
    }
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..n {
        let v = f.eval(Subset::singleton(i, n))?;
        if v < best.0 {
            best = (v, i);
        }
    }
    let corner = Subset::singleton(best.1, n).indicator();
    let at_corner = scalar::evaluate(ScalarExtensionKind::Singleton, f, &corner)?;
    sampled_min = sampled_min.min(at_corner);
    Ok(MinimaReport {
        sampled_min,
        discrete_min: best.0,
        corner_gap: Some((at_corner - best.0).abs()),
    })
}

/// A feasible point of the polyhedron {(z,b) : 1_Sᵀz + b ≤ f(S) ∀S},
/// produced by shrinking a random nonnegative z until every constraint
/// holds.
pub fn sample_lp_feasible_pair(
    f: &SetFunctionOracle,
    n: usize,
    rng: &mut rng::SplitRng,
) -> Result<(DenseVector, f64)> {
    assert!(n <= 12);
    let z0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut min_f = f64::INFINITY;
    for s in Subset::enumerate_all(n) {
        min_f = min_f.min(f.eval(s)?);
    }
    let b = min_f.min(0.0) - rng.random::<f64>() * 0.5;
    // Largest t in [0,1] with t·(1_Sᵀz0) + b ≤ f(S) for every S.
    let mut t = 1.0f64;
    for s in Subset::enumerate_all(n) {
        let zsum: f64 = s.iter().map(|i| z0[i]).sum();
        if zsum > 0.0 {
            t = t.min((f.eval(s)? - b) / zsum);
        }
    }
    let z = DenseVector::new(z0.into_iter().map(|v| v * t.max(0.0)).collect());
    Ok((z, b))
}

/// Containment of the linear program in the semidefinite one: a feasible
/// (z, b) turned into (diag(z), b) must satisfy every pairwise constraint
/// ½Tr((1_S1_Tᵀ + 1_T1_Sᵀ) diag(z)) + b ≤ f(S∩T), with objective values
/// agreeing between Tr(XᵀZ) at X = √x √xᵀ and zᵀx.
#[derive(Clone, Debug)]
pub struct ContainmentReport {
    pub max_constraint_violation: f64,
    pub objective_gap: f64,
}

pub fn check_lp_to_sdp_containment(
    f: &SetFunctionOracle,
    z: &DenseVector,
    b: f64,
    x: &DenseVector,
) -> Result<ContainmentReport> {
    let n = z.len();
    assert!(n <= 12);
    assert_eq!(x.len(), n);
    // Subset sums of z by bitmask, so the pair loop is a table lookup.
    let mut zsum = vec![0.0f64; 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        zsum[mask] = zsum[mask & (mask - 1)] + z[low];
    }
    let mut fvals = vec![0.0f64; 1 << n];
    for s in Subset::enumerate_all(n) {
        fvals[s.bits() as usize] = f.eval(s)?;
    }
    let mut worst = f64::NEG_INFINITY;
    for sb in 0u64..(1 << n) {
        for tb in 0u64..(1 << n) {
            let meet = (sb & tb) as usize;
            let lhs = zsum[meet] + b;
            worst = worst.max(lhs - fvals[meet]);
        }
    }
    // Objective agreement through the explicit lifted matrix.
    let sqrt_x = DenseVector::new(x.iter().map(|v| v.sqrt()).collect());
    let lifted = DenseMatrix::scaled_outer(&sqrt_x, 1.0);
    let mut trace = KahanSum::new();
    for i in 0..n {
        trace.add(lifted.get(i, i) * z[i]);
    }
    let objective_gap = (trace.value() - z.dot(x)).abs();
    Ok(ContainmentReport {
        max_constraint_violation: worst,
        objective_gap,
    })
}
