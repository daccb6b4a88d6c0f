//! Standard test domains.

use super::{Halfspace, Polytope};
use crate::error::{Error, Result};

fn hs(normal: Vec<f64>, offset: f64) -> Halfspace {
    Halfspace { normal, offset }
}

pub fn box_polytope(bounds: &[(f64, f64)]) -> Result<Polytope> {
    let d = bounds.len();
    let mut out = Vec::with_capacity(2 * d);
    for (i, (a, b)) in bounds.iter().enumerate() {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        out.push(hs(e.clone(), *a));
        e[i] = -1.0;
        out.push(hs(e, -b));
    }
    Polytope::new(d, out)
}

pub fn unit_cube(d: usize) -> Polytope {
    box_polytope(&vec![(0.0, 1.0); d]).expect("unit cube")
}

pub fn unit_square() -> Polytope {
    unit_cube(2)
}

/// `{x ≥ 0, Σx ≤ 1}` in dimension `d`.
pub fn standard_simplex(d: usize) -> Polytope {
    let mut out: Vec<Halfspace> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            hs(e, 0.0)
        })
        .collect();
    out.push(hs(vec![-1.0; d], -1.0));
    Polytope::new(d, out).expect("standard simplex")
}

/// Triangle with vertices (0,0), (1,0), (0,1).
pub fn unit_triangle() -> Polytope {
    standard_simplex(2)
}

/// Convex polygon from its vertices in counter-clockwise order.
pub fn polygon(vertices: &[[f64; 2]]) -> Result<Polytope> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Argument("polygon needs at least 3 vertices".into()));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let normal = vec![-(b[1] - a[1]), b[0] - a[0]];
        let offset = normal[0] * a[0] + normal[1] * a[1];
        out.push(hs(normal, offset));
    }
    Polytope::new(2, out)
}

pub fn regular_polygon(n: usize, circumradius: f64, center: [f64; 2]) -> Result<Polytope> {
    let verts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let t = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [center[0] + circumradius * t.cos(), center[1] + circumradius * t.sin()]
        })
        .collect();
    polygon(&verts)
}

/// Regular pentagon of circumradius 1/2 centred at (1/2, 1/2).
pub fn pentagon() -> Polytope {
    regular_polygon(5, 0.5, [0.5, 0.5]).expect("pentagon")
}

/// Regular hexagon with unit side.
pub fn unit_hexagon() -> Polytope {
    regular_polygon(6, 1.0, [0.0, 0.0]).expect("hexagon")
}

/// Equilateral triangle with unit edge.
pub fn equilateral_triangle() -> Polytope {
    polygon(&[[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]).expect("triangle")
}

/// Pyramid over the unit square with apex above its centre; the apex
/// lies on four facets, so the polytope is not simple.
pub fn square_pyramid() -> Polytope {
    Polytope::new(
        3,
        vec![
            hs(vec![0.0, 0.0, 1.0], 0.0),
            hs(vec![0.0, 2.0, -1.0], 0.0),
            hs(vec![0.0, -2.0, -1.0], -2.0),
            hs(vec![2.0, 0.0, -1.0], 0.0),
            hs(vec![-2.0, 0.0, -1.0], -2.0),
        ],
    )
    .expect("pyramid")
}
