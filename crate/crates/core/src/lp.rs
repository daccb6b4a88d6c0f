//! Thin wrapper over `minilp` with an active-set polish step.
//!
//! `minilp` works to an internal tolerance of about `1e-8`. After it
//! returns, the constraints tight at its answer are solved as an exact
//! linear system so that vertex solutions come back accurate to rounding.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::linalg::{dot, gram_schmidt, solve_square};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// Linear program over free variables: maximize `c·x` subject to rows.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    nvars: usize,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

impl LinearProgram {
    pub fn new(nvars: usize) -> Self {
        LinearProgram {
            nvars,
            objective: vec![0.0; nvars],
            rows: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, c: &[f64]) -> &mut Self {
        self.objective = c.to_vec();
        self
    }

    pub fn add(&mut self, a: Vec<f64>, cmp: Cmp, b: f64) -> &mut Self {
        debug_assert_eq!(a.len(), self.nvars);
        self.rows.push((a, cmp, b));
        self
    }

    pub fn maximize(&self) -> LpOutcome {
        self.solve(OptimizationDirection::Maximize)
    }

    pub fn minimize(&self) -> LpOutcome {
        self.solve(OptimizationDirection::Minimize)
    }

    fn solve(&self, dir: OptimizationDirection) -> LpOutcome {
        let mut pb = Problem::new(dir);
        let vars: Vec<_> = self
            .objective
            .iter()
            .map(|c| pb.add_var(*c, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        for (a, cmp, b) in &self.rows {
            let expr: Vec<_> = vars
                .iter()
                .zip(a)
                .filter(|(_, c)| **c != 0.0)
                .map(|(v, c)| (*v, *c))
                .collect();
            let op = match cmp {
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Le => ComparisonOp::Le,
                Cmp::Eq => ComparisonOp::Eq,
            };
            pb.add_constraint(expr.as_slice(), op, *b);
        }
        match pb.solve() {
            Err(minilp::Error::Infeasible) => LpOutcome::Infeasible,
            Err(minilp::Error::Unbounded) => LpOutcome::Unbounded,
            Ok(sol) => {
                let x: Vec<f64> = vars.iter().map(|v| sol[*v]).collect();
                if x.iter().any(|c| !c.is_finite()) || !sol.objective().is_finite() {
                    return LpOutcome::Unbounded;
                }
                let x = self.polish(x);
                LpOutcome::Optimal {
                    value: dot(&self.objective, &x),
                    x,
                }
            }
        }
    }

    fn violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(a, cmp, b)| {
                let r = dot(a, x) - b;
                match cmp {
                    Cmp::Ge => (-r).max(0.0),
                    Cmp::Le => r.max(0.0),
                    Cmp::Eq => r.abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    /// Re-solves the tight rows at `x` exactly when they pin down a vertex.
    fn polish(&self, x: Vec<f64>) -> Vec<f64> {
        let mut tight: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, (a, cmp, b))| {
                let scale = 1.0 + b.abs();
                let r = (dot(a, &x) - b).abs() / scale;
                (*cmp == Cmp::Eq || r < 1e-6).then_some((if *cmp == Cmp::Eq { -1.0 } else { r }, i))
            })
            .collect();
        tight.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        let mut chosen: Vec<usize> = Vec::new();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for (_, i) in tight {
            if chosen.len() == self.nvars {
                break;
            }
            let mut cand = basis.clone();
            cand.push(self.rows[i].0.clone());
            if gram_schmidt(&cand, 1e-9).len() == cand.len() {
                basis = cand;
                chosen.push(i);
            }
        }
        if chosen.len() < self.nvars {
            return x;
        }
        let a: Vec<Vec<f64>> = chosen.iter().map(|i| self.rows[*i].0.clone()).collect();
        let b: Vec<f64> = chosen.iter().map(|i| self.rows[*i].2).collect();
        match solve_square(&a, &b) {
            Some(y) => {
                let before = self.violation(&x);
                let after = self.violation(&y);
                let obj_ok = (dot(&self.objective, &y) - dot(&self.objective, &x)).abs()
                    <= 1e-6 * (1.0 + dot(&self.objective, &x).abs());
                if obj_ok && after <= before.max(1e-12) {
                    y
                } else {
                    x
                }
            }
            None => x,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_support() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(&[1.0, 1.0]);
        lp.add(vec![1.0, 0.0], Cmp::Ge, 0.0)
            .add(vec![0.0, 1.0], Cmp::Ge, 0.0)
            .add(vec![-1.0, 0.0], Cmp::Ge, -1.0)
            .add(vec![0.0, -1.0], Cmp::Ge, -1.0);
        match lp.maximize() {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, 2.0);
                assert_eq!(x, vec![1.0, 1.0]);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(&[1.0]).add(vec![1.0], Cmp::Ge, 0.0);
        assert_eq!(lp.maximize(), LpOutcome::Unbounded);
        lp.add(vec![1.0], Cmp::Le, -1.0);
        assert_eq!(lp.maximize(), LpOutcome::Infeasible);
    }

    #[test]
    fn polish_recovers_irrational_vertex() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut lp = LinearProgram::new(2);
        lp.set_objective(&[1.0, 0.3]);
        lp.add(vec![-s, -s], Cmp::Ge, -s)
            .add(vec![1.0, 0.0], Cmp::Ge, 0.0)
            .add(vec![0.0, 1.0], Cmp::Ge, 0.0);
        match lp.maximize() {
            LpOutcome::Optimal { value, .. } => assert!((value - 1.0).abs() < 1e-14),
            o => panic!("{o:?}"),
        }
    }
}
