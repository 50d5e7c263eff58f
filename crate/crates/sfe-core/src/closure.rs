//! Exact convex closure by linear programming.
//!
//! The closure value at x solves
//!   min Σ_S y_S f(S)   s.t.   Σ_S y_S 1_S = x,  Σ_S y_S = 1,  y ≥ 0
//! over all 2^n columns. A dense revised simplex with an explicit basis
//! inverse handles the n+1 rows; Bland's rule keeps degenerate vertices
//! (Boolean x) from cycling. The row duals at optimality recover a point
//! (z, b) of the polyhedron {1_Sᵀz + b ≤ f(S)} with zᵀx + b equal to the
//! optimum.

#![allow(clippy::needless_range_loop)]

use crate::dist::SupportedDistribution;
use crate::error::{Error, Result};
use crate::linalg::{DenseVector, KahanSum};
use crate::oracle::SetFunctionOracle;
use crate::subset::Subset;

pub const CLOSURE_MAX_N: usize = 12;

const ENTER_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const REFRESH_INTERVAL: usize = 50;
const MAX_PIVOTS: usize = 100_000;

/// Optimal closure data: value, an optimal basic feasible support, and the
/// row duals.
#[derive(Clone, Debug)]
pub struct ClosureSolution {
    pub value: f64,
    pub witness: SupportedDistribution,
    pub dual_z: DenseVector,
    pub dual_b: f64,
    pub pivots: usize,
}

/// Dense revised simplex state over the 2^n set columns plus one
/// artificial column per row.
struct SimplexTableau {
    n: usize,
    rows: usize,
    n_real: usize,
    rhs: Vec<f64>,
    costs: Vec<f64>,
    /// Basis variable per row; indices >= n_real are artificials.
    basis: Vec<usize>,
    /// Row-major basis inverse.
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    pivots: usize,
}

impl SimplexTableau {
    fn new(n: usize, x: &DenseVector, costs: Vec<f64>) -> Self {
        let rows = n + 1;
        let mut rhs: Vec<f64> = x.as_slice().to_vec();
        rhs.push(1.0);
        let binv = (0..rows)
            .map(|i| {
                let mut row = vec![0.0; rows];
                row[i] = 1.0;
                row
            })
            .collect();
        SimplexTableau {
            n,
            rows,
            n_real: 1 << n,
            rhs: rhs.clone(),
            costs,
            basis: (0..rows).map(|i| (1 << n) + i).collect(),
            binv,
            xb: rhs,
            pivots: 0,
        }
    }

    /// Structural column j: indicator rows of the j-th subset plus the
    /// mass row; artificial columns are identity.
    fn column(&self, j: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.rows];
        if j < self.n_real {
            for i in 0..self.n {
                if (j >> i) & 1 == 1 {
                    col[i] = 1.0;
                }
            }
            col[self.n] = 1.0;
        } else {
            col[j - self.n_real] = 1.0;
        }
        col
    }

    fn cost_of(&self, j: usize, phase_one: bool) -> f64 {
        if phase_one {
            if j < self.n_real {
                0.0
            } else {
                1.0
            }
        } else {
            // Artificials are banned from entering in phase two; a residual
            // basic artificial sits at zero with zero cost.
            if j < self.n_real {
                self.costs[j]
            } else {
                0.0
            }
        }
    }

    /// Row duals π = c_Bᵀ B⁻¹ for the active phase.
    fn duals(&self, phase_one: bool) -> Vec<f64> {
        let mut pi = vec![0.0; self.rows];
        for r in 0..self.rows {
            let mut acc = KahanSum::new();
            for i in 0..self.rows {
                let c = self.cost_of(self.basis[i], phase_one);
                if c != 0.0 {
                    acc.add(c * self.binv[i][r]);
                }
            }
            pi[r] = acc.value();
        }
        pi
    }

    fn reduced_cost(&self, j: usize, pi: &[f64], phase_one: bool) -> f64 {
        let mut dot = if j < self.n_real { pi[self.n] } else { 0.0 };
        if j < self.n_real {
            for i in 0..self.n {
                if (j >> i) & 1 == 1 {
                    dot += pi[i];
                }
            }
        } else {
            dot = pi[j - self.n_real];
        }
        self.cost_of(j, phase_one) - dot
    }

    /// Bland entering rule: the lowest-index structural column with
    /// negative reduced cost.
    fn entering(&self, phase_one: bool) -> Option<usize> {
        let pi = self.duals(phase_one);
        (0..self.n_real).find(|&j| {
            !self.basis.contains(&j) && self.reduced_cost(j, &pi, phase_one) < -ENTER_TOL
        })
    }

    /// Bland leaving rule: minimum ratio, ties to the smallest basis
    /// variable index.
    fn leaving(&self, direction: &[f64]) -> Option<usize> {
        let mut best: Option<(f64, usize, usize)> = None; // (ratio, var, row)
        for r in 0..self.rows {
            if direction[r] > PIVOT_TOL {
                let ratio = self.xb[r].max(0.0) / direction[r];
                let key = (ratio, self.basis[r], r);
                best = Some(match best {
                    None => key,
                    Some(cur) => {
                        if ratio < cur.0 - 1e-12
                            || ((ratio - cur.0).abs() <= 1e-12 && self.basis[r] < cur.1)
                        {
                            key
                        } else {
                            cur
                        }
                    }
                });
            }
        }
        best.map(|(_, _, r)| r)
    }

    fn pivot(&mut self, entering: usize, row: usize, direction: &[f64]) {
        let pivot_val = direction[row];
        for c in 0..self.rows {
            self.binv[row][c] /= pivot_val;
        }
        let ratio = self.xb[row] / pivot_val;
        for r in 0..self.rows {
            if r != row && direction[r] != 0.0 {
                let factor = direction[r];
                for c in 0..self.rows {
                    self.binv[r][c] -= factor * self.binv[row][c];
                }
                self.xb[r] -= factor * ratio;
            }
        }
        self.xb[row] = ratio;
        self.basis[row] = entering;
        self.pivots += 1;
        if self.pivots.is_multiple_of(REFRESH_INTERVAL) {
            self.refactorize().expect("basis became singular mid-solve");
        }
    }

    /// Rebuilds the basis inverse and basic values from scratch by
    /// Gauss-Jordan with partial pivoting.
    fn refactorize(&mut self) -> Result<()> {
        let m = self.rows;
        let mut aug: Vec<Vec<f64>> = (0..m)
            .map(|r| {
                let mut row = vec![0.0; 2 * m];
                row[m + r] = 1.0;
                row
            })
            .collect();
        for (c, &var) in self.basis.iter().enumerate() {
            let col = self.column(var);
            for r in 0..m {
                aug[r][c] = col[r];
            }
        }
        for c in 0..m {
            let (pivot_row, pivot_abs) = (c..m)
                .map(|r| (r, aug[r][c].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if pivot_abs < 1e-12 {
                return Err(Error::SingularBasis);
            }
            aug.swap(c, pivot_row);
            let pv = aug[c][c];
            for v in aug[c].iter_mut() {
                *v /= pv;
            }
            for r in 0..m {
                if r != c && aug[r][c] != 0.0 {
                    let factor = aug[r][c];
                    let pivot_row = aug[c].clone();
                    for (v, pvv) in aug[r].iter_mut().zip(&pivot_row) {
                        *v -= factor * pvv;
                    }
                }
            }
        }
        for r in 0..m {
            self.binv[r].copy_from_slice(&aug[r][m..]);
        }
        for r in 0..m {
            let mut acc = KahanSum::new();
            for c in 0..m {
                acc.add(self.binv[r][c] * self.rhs[c]);
            }
            self.xb[r] = acc.value();
        }
        Ok(())
    }

    fn run_phase(&mut self, phase_one: bool) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::PivotLimit {
                    max_pivots: MAX_PIVOTS,
                });
            }
            let Some(entering) = self.entering(phase_one) else {
                return Ok(());
            };
            let a = self.column(entering);
            let mut direction = vec![0.0; self.rows];
            for r in 0..self.rows {
                let mut acc = KahanSum::new();
                for c in 0..self.rows {
                    acc.add(self.binv[r][c] * a[c]);
                }
                direction[r] = acc.value();
            }
            let Some(row) = self.leaving(&direction) else {
                // The feasible region is a slice of the unit simplex, so a
                // missing leaving row can only be numerical.
                return Err(Error::SingularBasis);
            };
            self.pivot(entering, row, &direction);
        }
    }

    fn phase_one_objective(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (r, &var) in self.basis.iter().enumerate() {
            if var >= self.n_real {
                acc.add(self.xb[r].max(0.0));
            }
        }
        acc.value()
    }

    /// Pivots zero-valued artificials out of the basis after phase one, so
    /// phase-two pivots can never grow them again. The constraint matrix
    /// has full row rank (singleton columns plus the empty-set column), so
    /// a replacement real column always exists.
    fn drive_out_artificials(&mut self) -> Result<()> {
        for row in 0..self.rows {
            if self.basis[row] < self.n_real {
                continue;
            }
            let mut replaced = false;
            for j in 0..self.n_real {
                if self.basis.contains(&j) {
                    continue;
                }
                let a = self.column(j);
                let mut direction = vec![0.0; self.rows];
                for r in 0..self.rows {
                    let mut acc = KahanSum::new();
                    for c in 0..self.rows {
                        acc.add(self.binv[r][c] * a[c]);
                    }
                    direction[r] = acc.value();
                }
                if direction[row].abs() > 1e-9 {
                    // The artificial sits at zero, so this is a degenerate
                    // basis swap that leaves xb unchanged.
                    self.xb[row] = 0.0;
                    self.pivot(j, row, &direction);
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                return Err(Error::SingularBasis);
            }
        }
        Ok(())
    }
}

/// Solves the closure program at x, returning the optimal value, an
/// optimal support of at most n+1 sets, and the row duals (z, b).
pub fn convex_closure(f: &SetFunctionOracle, x: &DenseVector) -> Result<ClosureSolution> {
    let n = x.len();
    if n > CLOSURE_MAX_N {
        return Err(Error::GroundSetTooLarge {
            n,
            max: CLOSURE_MAX_N,
        });
    }
    for (i, &v) in x.iter().enumerate() {
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::DomainViolation {
                domain: "[0,1]^n",
                detail: format!("coordinate {i} = {v}"),
            });
        }
    }
    let x = DenseVector::new(x.iter().map(|v| v.clamp(0.0, 1.0)).collect());

    // All 2^n costs up front; infeasible sets leave the closure undefined.
    let mut costs = Vec::with_capacity(1 << n);
    for s in Subset::enumerate_all(n) {
        costs.push(f.eval(s)?);
    }

    let mut tab = SimplexTableau::new(n, &x, costs);
    tab.run_phase(true)?;
    if tab.phase_one_objective() > 1e-7 {
        return Err(Error::DomainViolation {
            domain: "dual LP",
            detail: format!(
                "no representation of x found (artificial mass {})",
                tab.phase_one_objective()
            ),
        });
    }
    tab.drive_out_artificials()?;
    tab.run_phase(false)?;
    tab.refactorize()?;

    let mut value = KahanSum::new();
    let mut entries: Vec<(Subset, f64)> = Vec::new();
    for (r, &var) in tab.basis.iter().enumerate() {
        if var < tab.n_real && tab.xb[r] > 0.0 {
            let s = Subset::from_bits(var as u64, n);
            value.add(tab.xb[r] * tab.costs[var]);
            entries.push((s, tab.xb[r]));
        }
    }
    entries.sort_by_key(|&(s, _)| s.bits());
    let pi = tab.duals(false);
    Ok(ClosureSolution {
        value: value.value(),
        witness: SupportedDistribution::new(entries, true, true),
        dual_z: DenseVector::new(pi[..n].to_vec()),
        dual_b: pi[n],
        pivots: tab.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{cut_function, Graph};
    use crate::scalar::{self, ScalarExtensionKind};
    use crate::verify::check_lp_feasible;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn vec_of(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec())
    }

    fn random_graph(n: usize, p: f64, rng: &mut StdRng) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        Graph::new(n, &edges).unwrap()
    }

    fn random_table_oracle(n: usize, rng: &mut StdRng) -> SetFunctionOracle {
        let table: Vec<f64> = std::iter::once(0.0)
            .chain((1..1usize << n).map(|_| rng.random_range(-1.0..1.0)))
            .collect();
        SetFunctionOracle::from_table(n, table)
    }

    #[test]
    fn modular_closure_is_linear() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..20 {
            let n = 7;
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let wc = w.clone();
            let f = SetFunctionOracle::new(n, move |s| s.iter().map(|i| wc[i]).sum());
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let sol = convex_closure(&f, &vec_of(&x)).unwrap();
            let expect: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(
                (sol.value - expect).abs() <= 1e-9,
                "{} vs {expect}",
                sol.value
            );
        }
    }

    #[test]
    fn closure_at_corner_is_at_most_f() {
        let mut rng = StdRng::seed_from_u64(2);
        let n = 6;
        let f = random_table_oracle(n, &mut rng);
        for s in Subset::enumerate_all(n) {
            let sol = convex_closure(&f, &s.indicator()).unwrap();
            assert!(sol.value <= f.eval(s).unwrap() + 1e-9);
        }
    }

    #[test]
    fn cut_closure_matches_chain_extension() {
        // Submodular cut: the chain extension attains the closure.
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10 {
            let n = 7;
            let g = random_graph(n, 0.5, &mut rng);
            let f = cut_function(&g);
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let x = vec_of(&x);
            let sol = convex_closure(&f, &x).unwrap();
            let lov = scalar::evaluate(ScalarExtensionKind::Lovasz, &f, &x).unwrap();
            assert!(
                (sol.value - lov).abs() <= 1e-7,
                "closure {} vs chain {lov}",
                sol.value
            );
        }
    }

    #[test]
    fn closure_lower_bounds_feasible_extensions() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..20 {
            let n = 6;
            let f = random_table_oracle(n, &mut rng);
            let xb: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = xs.iter().sum();
            for v in &mut xs {
                *v /= total;
            }
            for (kind, x) in [
                (ScalarExtensionKind::Lovasz, xb.clone()),
                (ScalarExtensionKind::Multilinear, xb.clone()),
                (ScalarExtensionKind::BoundedCardinality(3), xs.clone()),
                (ScalarExtensionKind::SimplexSingleton, xs.clone()),
            ] {
                let x = vec_of(&x);
                let sol = convex_closure(&f, &x).unwrap();
                let ext = scalar::evaluate(kind, &f, &x).unwrap();
                assert!(
                    sol.value <= ext + 1e-8,
                    "{kind:?}: closure {} above extension {ext}",
                    sol.value
                );
            }
        }
    }

    #[test]
    fn witness_and_duals_certify_optimality() {
        let mut rng = StdRng::seed_from_u64(5);
        for trial in 0..20 {
            let n = 6;
            let f = random_table_oracle(n, &mut rng);
            // Mix interior and degenerate Boolean points.
            let x = if trial % 3 == 0 {
                let bits = rng.random_range(0..(1u64 << n));
                Subset::from_bits(bits, n).indicator()
            } else {
                vec_of(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>())
            };
            let sol = convex_closure(&f, &x).unwrap();

            // Witness: feasible, small support, objective matches value.
            assert!(sol.witness.len() <= n + 2);
            let report = check_lp_feasible(&sol.witness, &x, 1e-8);
            assert!(report.passed, "witness infeasible: {report:?}");
            let recomputed = scalar::evaluate_support(&sol.witness, &f).unwrap();
            assert!((recomputed - sol.value).abs() <= 1e-8);

            // Duals: feasible for the polyhedron, objective matches.
            for s in Subset::enumerate_all(n) {
                let zsum: f64 = s.iter().map(|i| sol.dual_z[i]).sum();
                assert!(
                    zsum + sol.dual_b <= f.eval(s).unwrap() + 1e-7,
                    "dual constraint violated at {s:?}"
                );
            }
            let dual_obj = sol.dual_z.dot(&x) + sol.dual_b;
            assert!((dual_obj - sol.value).abs() <= 1e-7);
        }
    }

    #[test]
    fn rejects_oversized_and_infeasible_inputs() {
        let f = SetFunctionOracle::new(13, |_| 0.0);
        assert!(convex_closure(&f, &DenseVector::zeros(13)).is_err());

        use crate::oracle::SetValue;
        let f = SetFunctionOracle::with_infeasible(3, |s| {
            if s.cardinality() == 3 {
                SetValue::Infeasible
            } else {
                SetValue::Finite(0.0)
            }
        });
        assert!(convex_closure(&f, &vec_of(&[0.5, 0.5, 0.5])).is_err());
    }
}
