//! Reverse-mode differentiation on a scalar tape.
//!
//! Nodes are appended in forward order with their local partials, so the
//! node vector is already a topological order; the backward pass walks it
//! once in reverse, accumulating adjoints. Discrete routing decisions
//! (sort permutations, ramp gates) are fixed at forward time and their
//! partials treat the routing as constant.

#[derive(Clone, Copy, Debug)]
pub struct TapeVar(usize);

impl TapeVar {
    /// Index of this variable's node on the tape.
    pub fn index(&self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy)]
struct Node {
    value: f64,
    parents: [(usize, f64); 2],
    arity: u8,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: TapeVar) -> f64 {
        self.nodes[v.0].value
    }

    fn push(&mut self, value: f64, parents: [(usize, f64); 2], arity: u8) -> TapeVar {
        debug_assert!(value.is_finite() || arity > 0);
        self.nodes.push(Node {
            value,
            parents,
            arity,
        });
        TapeVar(self.nodes.len() - 1)
    }

    /// Leaf input variable.
    pub fn var(&mut self, value: f64) -> TapeVar {
        self.push(value, [(0, 0.0); 2], 0)
    }

    /// Leaf constant (no gradient consumers care, but it keeps indices
    /// uniform).
    pub fn constant(&mut self, value: f64) -> TapeVar {
        self.push(value, [(0, 0.0); 2], 0)
    }

    pub fn add(&mut self, a: TapeVar, b: TapeVar) -> TapeVar {
        let value = self.value(a) + self.value(b);
        self.push(value, [(a.0, 1.0), (b.0, 1.0)], 2)
    }

    pub fn sub(&mut self, a: TapeVar, b: TapeVar) -> TapeVar {
        let value = self.value(a) - self.value(b);
        self.push(value, [(a.0, 1.0), (b.0, -1.0)], 2)
    }

    pub fn mul(&mut self, a: TapeVar, b: TapeVar) -> TapeVar {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va * vb, [(a.0, vb), (b.0, va)], 2)
    }

    pub fn div(&mut self, a: TapeVar, b: TapeVar) -> TapeVar {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va / vb, [(a.0, 1.0 / vb), (b.0, -va / (vb * vb))], 2)
    }

    pub fn neg(&mut self, a: TapeVar) -> TapeVar {
        let value = -self.value(a);
        self.push(value, [(a.0, -1.0), (0, 0.0)], 1)
    }

    pub fn scale(&mut self, a: TapeVar, c: f64) -> TapeVar {
        let value = c * self.value(a);
        self.push(value, [(a.0, c), (0, 0.0)], 1)
    }

    pub fn add_const(&mut self, a: TapeVar, c: f64) -> TapeVar {
        let value = self.value(a) + c;
        self.push(value, [(a.0, 1.0), (0, 0.0)], 1)
    }

    pub fn sqrt(&mut self, a: TapeVar) -> TapeVar {
        let value = self.value(a).sqrt();
        self.push(value, [(a.0, 0.5 / value), (0, 0.0)], 1)
    }

    pub fn sigmoid(&mut self, a: TapeVar) -> TapeVar {
        let s = 1.0 / (1.0 + (-self.value(a)).exp());
        self.push(s, [(a.0, s * (1.0 - s)), (0, 0.0)], 1)
    }

    /// max(a, 0) with the gate fixed at forward time; the tie at exactly
    /// zero routes to the flat branch.
    pub fn ramp(&mut self, a: TapeVar) -> TapeVar {
        let va = self.value(a);
        if va > 0.0 {
            self.push(va, [(a.0, 1.0), (0, 0.0)], 1)
        } else {
            self.push(0.0, [(a.0, 0.0), (0, 0.0)], 1)
        }
    }

    pub fn sum(&mut self, vars: &[TapeVar]) -> TapeVar {
        match vars.len() {
            0 => self.constant(0.0),
            1 => vars[0],
            _ => {
                let mut acc = self.add(vars[0], vars[1]);
                for v in &vars[2..] {
                    acc = self.add(acc, *v);
                }
                acc
            }
        }
    }

    pub fn dot(&mut self, a: &[TapeVar], b: &[TapeVar]) -> TapeVar {
        assert_eq!(a.len(), b.len());
        let products: Vec<TapeVar> = a.iter().zip(b).map(|(x, y)| self.mul(*x, *y)).collect();
        self.sum(&products)
    }

    /// Adjoints of every node with respect to `output`, by one reverse
    /// sweep.
    pub fn backward(&self, output: TapeVar) -> Vec<f64> {
        let mut adjoint = vec![0.0; self.nodes.len()];
        adjoint[output.0] = 1.0;
        for idx in (0..=output.0).rev() {
            let grad = adjoint[idx];
            if grad == 0.0 {
                continue;
            }
            let node = &self.nodes[idx];
            for p in 0..node.arity as usize {
                let (parent, partial) = node.parents[p];
                adjoint[parent] += grad * partial;
            }
        }
        adjoint
    }

    pub fn gradient(&self, output: TapeVar, inputs: &[TapeVar]) -> Vec<f64> {
        let adjoint = self.backward(output);
        inputs.iter().map(|v| adjoint[v.0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_gradient() {
        // g(x, y) = x^2 y + y + 2 at (3, 4): dg/dx = 2xy = 24, dg/dy = x^2 + 1 = 10.
        let mut t = Tape::new();
        let x = t.var(3.0);
        let y = t.var(4.0);
        let xx = t.mul(x, x);
        let xxy = t.mul(xx, y);
        let s = t.add(xxy, y);
        let out = t.add_const(s, 2.0);
        assert_eq!(t.value(out), 42.0);
        let g = t.gradient(out, &[x, y]);
        assert_eq!(g, vec![24.0, 10.0]);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // h(x) = x*x + x: h'(2) = 2x + 1 = 5; x feeds three nodes.
        let mut t = Tape::new();
        let x = t.var(2.0);
        let sq = t.mul(x, x);
        let out = t.add(sq, x);
        assert_eq!(t.gradient(out, &[x]), vec![5.0]);
    }

    #[test]
    fn elementary_partials_match_finite_differences() {
        let h = 1e-6;
        let check = |build: &dyn Fn(&mut Tape, TapeVar) -> TapeVar, at: f64| {
            let mut t = Tape::new();
            let x = t.var(at);
            let y = build(&mut t, x);
            let g = t.gradient(y, &[x])[0];

            let eval = |v: f64| {
                let mut t = Tape::new();
                let x = t.var(v);
                let y = build(&mut t, x);
                t.value(y)
            };
            let fd = (eval(at + h) - eval(at - h)) / (2.0 * h);
            assert!((g - fd).abs() < 1e-5, "grad {g} vs fd {fd}");
        };
        check(&|t, x| t.sigmoid(x), 0.3);
        check(&|t, x| t.sqrt(x), 2.0);
        check(
            &|t, x| {
                let c = t.constant(3.0);
                t.div(c, x)
            },
            1.7,
        );
        check(&|t, x| t.ramp(x), 0.5);
        check(&|t, x| t.neg(x), 0.9);
    }

    #[test]
    fn ramp_gates_negative_inputs() {
        let mut t = Tape::new();
        let x = t.var(-1.5);
        let y = t.ramp(x);
        assert_eq!(t.value(y), 0.0);
        assert_eq!(t.gradient(y, &[x]), vec![0.0]);
    }

    #[test]
    fn dot_and_sum_helpers() {
        let mut t = Tape::new();
        let a: Vec<TapeVar> = [1.0, 2.0, 3.0].iter().map(|&v| t.var(v)).collect();
        let b: Vec<TapeVar> = [4.0, 5.0, 6.0].iter().map(|&v| t.var(v)).collect();
        let d = t.dot(&a, &b);
        assert_eq!(t.value(d), 32.0);
        let g = t.gradient(d, &a);
        assert_eq!(g, vec![4.0, 5.0, 6.0]);
    }
}
