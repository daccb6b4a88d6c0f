use serde::Serialize;

use crate::error::Result;
use crate::linalg::factorial;
use crate::partition::Partition;
use crate::schedule::{build_schedule, DeltaSchedule};

/// `Γ(m/2 + 1)`.
fn gamma_half(m: usize) -> f64 {
    let mut x = m as f64 / 2.0 + 1.0;
    let mut acc = 1.0;
    while x > 1.0 + 1e-12 {
        x -= 1.0;
        acc *= x;
    }
    if (x - 0.5).abs() < 1e-12 {
        acc * std::f64::consts::PI.sqrt()
    } else {
        acc
    }
}

/// `C_d = (2d)^{d−k} Γ((d−k)/2 + 1) / π^{(d−k)/2}`.
pub fn c_dk(d: usize, k: usize) -> f64 {
    let m = d - k;
    (2.0 * d as f64).powi(m as i32) * gamma_half(m) / std::f64::consts::PI.powf(m as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceCount {
    pub j_tuple: Vec<usize>,
    pub k: usize,
    pub volume: f64,
    pub l_k1: f64,
    /// Log-count bound with the computed `B_u`.
    pub log_count: f64,
    /// Same with `B_u` replaced by `2u^{d/(2(p+1)²)}`.
    pub log_count_closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoreticalCount {
    pub eps: f64,
    pub p: f64,
    pub u: f64,
    /// The covering constant `c_d` is taken to be 1.
    pub c_d_normalized: bool,
    /// `B_u` per `k = 1..d`.
    pub b_u: Vec<f64>,
    pub b_u_closed_form: f64,
    pub faces: Vec<FaceCount>,
    pub total: f64,
    pub total_closed_form: f64,
}

fn schedules(part: &Partition, eps: f64, p: f64) -> Result<Vec<DeltaSchedule>> {
    (1..=part.dim).map(|k| build_schedule(eps, p, part.u, k)).collect()
}

/// Sum over faces of `(d!)^{d/2} 2^{kd/2} (1 + (8/u)^{d−k} C_d vol L_{k,1}^{d−k})^{d/2} B_u^k ε^{−d/2}`.
pub fn theoretical_count(part: &Partition, eps: f64, p: f64) -> Result<TheoreticalCount> {
    let d = part.dim;
    let df = d as f64;
    let u = part.u;
    let scheds = schedules(part, eps, p)?;
    let b_u: Vec<f64> = scheds.iter().map(|s| s.b_u(d)).collect();
    let b_u_closed_form = 2.0 * u.powf(df / (2.0 * (p + 1.0) * (p + 1.0)));
    let faces: Vec<FaceCount> = part
        .faces
        .iter()
        .map(|fi| {
            let k = fi.face.k;
            let l = part.l_k1[k];
            let inner = 1.0 + (8.0 / u).powi((d - k) as i32) * c_dk(d, k) * fi.volume * l.powi((d - k) as i32);
            let head = factorial(d).powf(df / 2.0)
                * 2f64.powf((k * d) as f64 / 2.0)
                * inner.powf(df / 2.0)
                * eps.powf(-df / 2.0);
            let bu = if k == 0 { 1.0 } else { b_u[k - 1].powi(k as i32) };
            FaceCount {
                j_tuple: fi.face.j_tuple.clone(),
                k,
                volume: fi.volume,
                l_k1: l,
                log_count: head * bu,
                log_count_closed_form: head * b_u_closed_form.powi(k as i32),
            }
        })
        .collect();
    let total = faces.iter().map(|f| f.log_count).sum();
    let total_closed_form = faces.iter().map(|f| f.log_count_closed_form).sum();
    Ok(TheoreticalCount {
        eps,
        p,
        u,
        c_d_normalized: true,
        b_u,
        b_u_closed_form,
        faces,
        total,
        total_closed_form,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeCertificate {
    /// `B ε (Σ_k (2L_{k,1})^{d−k} S_k^D A_u^k)^{1/p}`.
    pub formula: f64,
    /// The same bound summed index by index over the band weights.
    pub per_index: f64,
    /// Size of the constructed family.
    pub actual: f64,
    pub holds: bool,
    /// `S_k^D` per `k = 0..d`.
    pub s_k: Vec<f64>,
    /// `A_u` per `k = 1..d`.
    pub a_u: Vec<f64>,
}

pub fn size_certificate(part: &Partition, eps: f64, p: f64, actual: f64) -> Result<SizeCertificate> {
    let d = part.dim;
    let scheds = schedules(part, eps, p)?;
    let mut s_k = vec![0.0; d + 1];
    for fi in &part.faces {
        let l3 = fi.constants.as_ref().map(|c| c.l_3).unwrap_or(1.0);
        s_k[fi.face.k] += fi.volume * l3.powi(fi.face.k as i32);
    }
    let a_u: Vec<f64> = scheds.iter().map(|s| s.a_u()).collect();
    let mut sum = 0.0;
    for k in 0..=d {
        let ak = if k == 0 { 1.0 } else { a_u[k - 1].powi(k as i32) };
        sum += (2.0 * part.l_k1[k]).powi((d - k) as i32) * s_k[k] * ak;
    }
    let formula = part.b * eps * sum.powf(1.0 / p);
    let mut direct = 0.0;
    for fi in &part.faces {
        let k = fi.face.k;
        let l3 = fi.constants.as_ref().map(|c| c.l_3).unwrap_or(1.0);
        let weights = if k == 0 {
            eps.powf(p)
        } else {
            let s = &scheds[k - 1];
            let one: f64 = (0..=s.a_count).map(|i| s.a_weights[i].powf(p) * s.delta[i + 1]).sum();
            one.powi(k as i32)
        };
        direct += (2.0 * part.l_k1[k]).powi((d - k) as i32) * fi.volume * l3.powi(k as i32) * weights;
    }
    let per_index = part.b * direct.powf(1.0 / p);
    Ok(SizeCertificate {
        formula,
        per_index,
        actual,
        holds: actual <= formula * (1.0 + 1e-6),
        s_k,
        a_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{pentagon, unit_square};
    use crate::partition::build_partition;

    #[test]
    fn c_d_values() {
        assert!((c_dk(2, 1) - 2.0).abs() < 1e-14);
        assert_eq!(c_dk(3, 3), 1.0);
        // (4)^2 Γ(2)/π
        assert!((c_dk(2, 0) - 16.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((gamma_half(3) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_count_is_homogeneous_in_eps() {
        let part = build_partition(&unit_square(), 0.125, 2.0, 1.0, 0.25).unwrap();
        let a = theoretical_count(&part, 0.0625, 2.0).unwrap();
        let b = theoretical_count(&part, 0.125, 2.0).unwrap();
        assert!((a.total_closed_form / b.total_closed_form - 2.0).abs() < 1e-12);
    }

    #[test]
    fn size_formula_two_ways() {
        for poly in [unit_square(), pentagon()] {
            for eps in [0.25, 0.0625] {
                let part = build_partition(&poly, eps, 2.0, 1.0, 0.25).unwrap();
                let c = size_certificate(&part, eps, 2.0, 0.0).unwrap();
                assert!(
                    (c.formula - c.per_index).abs() <= 1e-9 * c.formula,
                    "{} {}",
                    c.formula,
                    c.per_index
                );
            }
        }
    }
}
