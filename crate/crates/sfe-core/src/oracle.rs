//! Memoizing, call-counting wrapper around black-box set functions.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::subset::Subset;

/// Value of a set function at one set. Infeasible sets carry no number;
/// arithmetic never sees a float infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SetValue {
    Finite(f64),
    Infeasible,
}

type Evaluator = Box<dyn Fn(Subset) -> SetValue + Send + Sync>;

/// A black-box set function f : `2^[n]` -> R ∪ {∞} with memoization.
///
/// f(∅) = 0 is enforced by the wrapper regardless of the underlying
/// evaluator. Each distinct set is evaluated at most once; `eval_count`
/// reports how many distinct sets have been queried. The cache is locked
/// per query, so concurrent callers observe consistent values and results
/// do not depend on thread count.
pub struct SetFunctionOracle {
    n: usize,
    evaluator: Evaluator,
    cache: Mutex<HashMap<u64, SetValue>>,
}

impl SetFunctionOracle {
    /// Wraps a finite-valued function.
    pub fn new(n: usize, f: impl Fn(Subset) -> f64 + Send + Sync + 'static) -> Self {
        Self::with_infeasible(n, move |s| SetValue::Finite(f(s)))
    }

    /// Wraps a function that may declare sets infeasible.
    pub fn with_infeasible(
        n: usize,
        f: impl Fn(Subset) -> SetValue + Send + Sync + 'static,
    ) -> Self {
        SetFunctionOracle {
            n,
            evaluator: Box::new(f),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Builds an oracle from a dense table indexed by bitmask.
    pub fn from_table(n: usize, table: Vec<f64>) -> Self {
        assert_eq!(table.len(), 1usize << n);
        Self::new(n, move |s| table[s.bits() as usize])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Raw value with the f(∅)=0 convention applied; no error mapping.
    pub fn eval_raw(&self, s: Subset) -> SetValue {
        assert_eq!(s.n(), self.n, "subset ground set does not match oracle");
        let mut cache = self.cache.lock().unwrap();
        if let Some(&v) = cache.get(&s.bits()) {
            return v;
        }
        let v = if s.is_empty() {
            SetValue::Finite(0.0)
        } else {
            (self.evaluator)(s)
        };
        cache.insert(s.bits(), v);
        v
    }

    /// Cached value of f(s); errors on infeasible sets and on evaluators
    /// that return non-finite floats for sets they declared feasible.
    pub fn eval(&self, s: Subset) -> Result<f64> {
        match self.eval_raw(s) {
            SetValue::Finite(v) if v.is_finite() => Ok(v),
            SetValue::Finite(v) => Err(Error::NonFiniteValue { set: s, value: v }),
            SetValue::Infeasible => Err(Error::InfeasibleSet {
                set: s,
                weight: f64::NAN,
            }),
        }
    }

    pub fn is_feasible(&self, s: Subset) -> bool {
        matches!(self.eval_raw(s), SetValue::Finite(_))
    }

    /// Number of distinct sets queried so far.
    pub fn eval_count(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}
