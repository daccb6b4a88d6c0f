use serde::Serialize;

use super::ConvexFn;
use crate::error::{Error, Result};
use crate::geometry::{hausdorff, Halfspace, Polytope};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

/// `V_B(f) = {(x, t) : x ∈ D, f(x) ≤ t ≤ B}`.
pub fn epigraph_polytope(f: &ConvexFn, domain: &Polytope, b: f64) -> Result<Polytope> {
    let d = domain.dim();
    if f.dim() != d {
        return Err(Error::Argument("function and domain dimensions differ".into()));
    }
    let mut hs: Vec<Halfspace> = domain
        .halfspaces()
        .iter()
        .map(|h| {
            let mut n = h.normal.clone();
            n.push(0.0);
            Halfspace {
                normal: n,
                offset: h.offset,
            }
        })
        .collect();
    for (g, c) in f.slopes.iter().zip(&f.intercepts) {
        let mut n: Vec<f64> = g.iter().map(|v| -v).collect();
        n.push(1.0);
        hs.push(Halfspace { normal: n, offset: *c });
    }
    let mut top = vec![0.0; d];
    top.push(-1.0);
    hs.push(Halfspace {
        normal: top,
        offset: -b,
    });
    Polytope::new(d + 1, hs)
}

/// `sup_D (f − g)`: one LP per piece of `f` with `t ≥` every piece of `g`.
fn one_sided_gap(f: &ConvexFn, g: &ConvexFn, domain: &Polytope) -> Result<f64> {
    let d = domain.dim();
    let mut best = f64::NEG_INFINITY;
    for (a, c) in f.slopes.iter().zip(&f.intercepts) {
        let mut lp = LinearProgram::new(d + 1);
        let mut obj = a.clone();
        obj.push(-1.0);
        lp.set_objective(&obj);
        for h in domain.halfspaces() {
            let mut n = h.normal.clone();
            n.push(0.0);
            lp.add(n, Cmp::Ge, h.offset);
        }
        for (bs, e) in g.slopes.iter().zip(&g.intercepts) {
            let mut n: Vec<f64> = bs.iter().map(|v| -v).collect();
            n.push(1.0);
            lp.add(n, Cmp::Ge, *e);
        }
        match lp.maximize() {
            LpOutcome::Optimal { value, .. } => best = best.max(value + c),
            _ => return Err(Error::Domain("sup-norm LP failed on a bounded domain".into())),
        }
    }
    Ok(best)
}

/// Exact `sup_D |f − g|` for max-of-affine functions.
pub fn sup_norm_gap(f: &ConvexFn, g: &ConvexFn, domain: &Polytope) -> Result<f64> {
    Ok(one_sided_gap(f, g, domain)?.max(one_sided_gap(g, f, domain)?).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpigraphCheck {
    pub lhs: f64,
    pub hausdorff: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖f − g‖_∞ ≤ l_H(V_B(f), V_B(g)) √(1 + Σ Γ_i²)`.
pub fn epigraph_hausdorff_bound(
    f: &ConvexFn,
    g: &ConvexFn,
    domain: &Polytope,
    b: f64,
    gamma: &[f64],
) -> Result<EpigraphCheck> {
    for h in [f, g] {
        for s in &h.slopes {
            if s.iter().zip(gamma).any(|(v, gm)| v.abs() > gm * (1.0 + 1e-12) + 1e-15) {
                return Err(Error::Certificate(format!("slope {s:?} exceeds Γ = {gamma:?}")));
            }
        }
    }
    let lhs = sup_norm_gap(f, g, domain)?;
    let lh = hausdorff(&epigraph_polytope(f, domain, b)?, &epigraph_polytope(g, domain, b)?)?;
    let rhs = lh * (1.0 + gamma.iter().map(|v| v * v).sum::<f64>()).sqrt();
    Ok(EpigraphCheck {
        lhs,
        hausdorff: lh,
        rhs,
        holds: lhs <= rhs + 1e-7,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::unit_cube;

    fn constant(c: f64, d: usize) -> ConvexFn {
        ConvexFn::new(vec![vec![0.0; d]], vec![c], 1.0).unwrap()
    }

    #[test]
    fn vertical_shift_is_tight() {
        let d = unit_cube(2);
        let r = epigraph_hausdorff_bound(&constant(0.0, 2), &constant(0.3, 2), &d, 1.0, &[0.0, 0.0]).unwrap();
        assert!((r.lhs - 0.3).abs() < 1e-12);
        assert!((r.rhs - 0.3).abs() < 1e-9);
        assert!(r.holds);
    }

    #[test]
    fn identical_functions() {
        let d = unit_cube(1);
        let f = ConvexFn::new(vec![vec![0.5], vec![-0.5]], vec![0.0, 0.2], 1.0).unwrap();
        let r = epigraph_hausdorff_bound(&f, &f, &d, 1.0, &[1.0]).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-9);
    }

    #[test]
    fn tilted_line_against_zero() {
        // V(0) = [0,1]×[0,1]; V(g) has vertices (0,−1/2),(1,1/2),(1,1),(0,1).
        // (0,−1/2) is 1/2 from V(0); (1,0) is 1/(2√2) from V(g).
        let d = unit_cube(1);
        let g = ConvexFn::new(vec![vec![1.0]], vec![-0.5], 1.0).unwrap();
        let r = epigraph_hausdorff_bound(&constant(0.0, 1), &g, &d, 1.0, &[1.0]).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12);
        assert!((r.hausdorff - 0.5).abs() < 1e-9);
        assert!((r.rhs - 0.5 * 2f64.sqrt()).abs() < 1e-9);
        assert!(r.holds);
    }

    #[test]
    fn steep_slope_rejected() {
        let d = unit_cube(1);
        let g = ConvexFn::new(vec![vec![3.0]], vec![-0.5], 1.0).unwrap();
        assert!(epigraph_hausdorff_bound(&constant(0.0, 1), &g, &d, 1.0, &[1.0]).is_err());
    }
}
