//! Explicit divergence-free eigenbases on the torus, rectangle and cylinder.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{within_cutoff, GeometryDescriptor, GeometryKind, ModeKey, SpectralMode, Variant};

/// Value and Jacobian of a vector mode at one point; `grad[i][j]` is the
/// derivative of component `i` along axis `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: [f64; 3],
    pub grad: [[f64; 3]; 3],
}

/// All modes with eigenvalue at most `cutoff`, sorted in serialization order.
pub fn enumerate_modes(g: &GeometryDescriptor, cutoff: f64) -> Result<Vec<SpectralMode>> {
    if !g.kind.is_flat() {
        return Err(Error::UnsupportedGeometry { op: "enumerate_modes", kind: g.kind });
    }
    let mut modes = Vec::new();
    if cutoff > 0.0 {
        let mut push = |key: ModeKey| -> Result<()> {
            if g.admits(&key) {
                let m = g.mode(key)?;
                if within_cutoff(m.eigenvalue, cutoff) {
                    modes.push(m);
                }
            }
            Ok(())
        };
        match g.kind {
            GeometryKind::Torus2 => {
                let r = cutoff.sqrt().floor() as i32 + 1;
                for k1 in 0..=r {
                    for k2 in -r..=r {
                        push(ModeKey::torus2(k1, k2, true))?;
                        push(ModeKey::torus2(k1, k2, false))?;
                    }
                }
            }
            GeometryKind::Torus3 => {
                let r = cutoff.sqrt().floor() as i32 + 1;
                for k1 in 0..=r {
                    for k2 in -r..=r {
                        for k3 in -r..=r {
                            for v in [Variant::Cos(1), Variant::Cos(2), Variant::Sin(1), Variant::Sin(2)] {
                                push(ModeKey::new(&[k1, k2, k3], v))?;
                            }
                        }
                    }
                }
            }
            GeometryKind::Rectangle | GeometryKind::Cylinder => {
                let x_scale = if g.kind == GeometryKind::Cylinder { 2.0 } else { 1.0 };
                let r1 = (cutoff.sqrt() * g.a / (PI * x_scale)).floor() as i32 + 1;
                let r2 = (cutoff.sqrt() * g.b / PI).floor() as i32 + 1;
                for k1 in 0..=r1 {
                    for k2 in 1..=r2 {
                        if g.kind == GeometryKind::Rectangle {
                            push(ModeKey::rect(k1, k2))?;
                        } else {
                            push(ModeKey::varsigma(k1, k2))?;
                            push(ModeKey::kappa(k1, k2))?;
                        }
                    }
                }
            }
            GeometryKind::Sphere | GeometryKind::Hemisphere => unreachable!(),
        }
    }
    modes.sort_by(SpectralMode::canonical_cmp);
    Ok(modes)
}

/// Orthonormal polarization vectors for a torus wavevector. In 2D the single
/// vector is `(-k2, k1)/|k|`; in 3D the first is Gram-Schmidt of the coordinate
/// axis along which `|k_i|` is smallest and the second is `k/|k| x w1`.
pub fn polarization(k: &[i32], pol: u8) -> [f64; 3] {
    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let norm = kf.iter().map(|x| x * x).sum::<f64>().sqrt();
    if k.len() == 2 {
        return [-kf[1] / norm, kf[0] / norm, 0.0];
    }
    let khat = [kf[0] / norm, kf[1] / norm, kf[2] / norm];
    let mut axis = 0;
    for i in 1..3 {
        if k[i].abs() < k[axis].abs() {
            axis = i;
        }
    }
    let mut w1 = [0.0; 3];
    w1[axis] = 1.0;
    let dot = khat[axis];
    for i in 0..3 {
        w1[i] -= dot * khat[i];
    }
    let n1 = (w1[0] * w1[0] + w1[1] * w1[1] + w1[2] * w1[2]).sqrt();
    for x in &mut w1 {
        *x /= n1;
    }
    if pol == 1 {
        return w1;
    }
    [khat[1] * w1[2] - khat[2] * w1[1], khat[2] * w1[0] - khat[0] * w1[2], khat[0] * w1[1] - khat[1] * w1[0]]
}

/// Evaluates a normalized mode and its Jacobian without domain checks.
pub fn sample_mode(g: &GeometryDescriptor, mode: &SpectralMode, x: &[f64]) -> FieldSample {
    let k = mode.key.indices();
    let n = mode.normalization;
    let mut value = [0.0; 3];
    let mut grad = [[0.0; 3]; 3];
    match g.kind {
        GeometryKind::Torus2 | GeometryKind::Torus3 => {
            let d = k.len();
            let w = polarization(k, mode.key.variant.polarization());
            let phase: f64 = (0..d).map(|i| k[i] as f64 * x[i]).sum();
            let (s, c) = phase.sin_cos();
            let (f, df) = match mode.key.variant {
                Variant::Cos(_) => (c, -s),
                _ => (s, c),
            };
            for i in 0..d {
                value[i] = n * w[i] * f;
                for j in 0..d {
                    grad[i][j] = n * w[i] * k[j] as f64 * df;
                }
            }
        }
        GeometryKind::Rectangle | GeometryKind::Cylinder => {
            let xs = if g.kind == GeometryKind::Cylinder { 2.0 } else { 1.0 };
            let al = xs * k[0] as f64 * PI / g.a;
            let be = k[1] as f64 * PI / g.b;
            let (sx, cx) = (al * x[0]).sin_cos();
            let (sy, cy) = (be * x[1]).sin_cos();
            if mode.key.variant == Variant::Kappa {
                value[0] = -n * be * cx * cy;
                value[1] = -n * al * sx * sy;
                grad[0][0] = n * be * al * sx * cy;
                grad[0][1] = n * be * be * cx * sy;
                grad[1][0] = -n * al * al * cx * sy;
                grad[1][1] = -n * al * be * sx * cy;
            } else {
                value[0] = -n * be * sx * cy;
                value[1] = n * al * cx * sy;
                grad[0][0] = -n * be * al * cx * cy;
                grad[0][1] = n * be * be * sx * sy;
                grad[1][0] = -n * al * al * sx * sy;
                grad[1][1] = n * al * be * cx * cy;
            }
        }
        GeometryKind::Sphere | GeometryKind::Hemisphere => unreachable!("flat sampler called on curved geometry"),
    }
    FieldSample { value, grad }
}

pub fn contains(g: &GeometryDescriptor, x: &[f64]) -> bool {
    if x.len() != g.dimension() || x.iter().any(|v| !v.is_finite()) {
        return false;
    }
    match g.kind {
        GeometryKind::Torus2 | GeometryKind::Torus3 => true,
        GeometryKind::Rectangle | GeometryKind::Cylinder => (0.0..=g.a).contains(&x[0]) && (0.0..=g.b).contains(&x[1]),
        _ => false,
    }
}

/// Pointwise value of a flat mode.
pub fn evaluate_mode(g: &GeometryDescriptor, key: ModeKey, x: &[f64]) -> Result<Vec<f64>> {
    if !g.kind.is_flat() {
        return Err(Error::UnsupportedGeometry { op: "evaluate_mode", kind: g.kind });
    }
    let mode = g.mode(key)?;
    if !contains(g, x) {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    Ok(sample_mode(g, &mode, x).value[..g.dimension()].to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfReport {
    /// The constant `c` in `sup |W| <= c lambda^theta`.
    pub bound_constant: f64,
    pub theta: f64,
    /// Largest analytic amplitude bound divided by the claimed bound.
    pub worst_ratio: f64,
    /// Largest sampled sup divided by the claimed bound.
    pub sampled_ratio: f64,
    /// Modes whose sampled sup exceeds their analytic amplitude bound.
    pub sampling_exceeds_amplitude: usize,
    pub modes_checked: usize,
}

/// Claimed uniform bound constant: `pi^{-d/2}` on tori, `2/sqrt(ab)` on the
/// rectangle and cylinder; the exponent of lambda is zero.
pub fn linf_bound_constant(g: &GeometryDescriptor) -> Result<f64> {
    match g.kind {
        GeometryKind::Torus2 => Ok(1.0 / PI),
        GeometryKind::Torus3 => Ok(PI.powf(-1.5)),
        GeometryKind::Rectangle | GeometryKind::Cylinder => Ok(2.0 / (g.a * g.b).sqrt()),
        _ => Err(Error::UnsupportedGeometry { op: "linf_bound_check", kind: g.kind }),
    }
}

fn amplitude_bound(g: &GeometryDescriptor, mode: &SpectralMode) -> f64 {
    let k = mode.key.indices();
    match g.kind {
        GeometryKind::Rectangle | GeometryKind::Cylinder => {
            let xs = if g.kind == GeometryKind::Cylinder { 2.0 } else { 1.0 };
            let al = xs * k[0] as f64 * PI / g.a;
            let be = k[1] as f64 * PI / g.b;
            mode.normalization * (al * al + be * be).sqrt()
        }
        _ => mode.normalization,
    }
}

/// Compares each mode's sup norm against the claimed bound using the analytic
/// amplitude and dense sampling (64 points per axis per unit of wavenumber).
pub fn linf_bound_check(g: &GeometryDescriptor, cutoff: f64) -> Result<LinfReport> {
    let c = linf_bound_constant(g)?;
    let modes = enumerate_modes(g, cutoff)?;
    let mut worst: f64 = 0.0;
    let mut sampled: f64 = 0.0;
    let mut exceed = 0;
    for mode in &modes {
        let amp = amplitude_bound(g, mode);
        let sup = sampled_sup(g, mode);
        worst = worst.max(amp / c);
        sampled = sampled.max(sup / c);
        if sup > amp * (1.0 + 1e-12) {
            exceed += 1;
        }
    }
    Ok(LinfReport {
        bound_constant: c,
        theta: 0.0,
        worst_ratio: worst,
        sampled_ratio: sampled,
        sampling_exceeds_amplitude: exceed,
        modes_checked: modes.len(),
    })
}

fn sampled_sup(g: &GeometryDescriptor, mode: &SpectralMode) -> f64 {
    let k = mode.key.indices();
    let d = g.dimension();
    let lens: Vec<f64> = match g.kind {
        GeometryKind::Rectangle | GeometryKind::Cylinder => vec![g.a, g.b],
        _ => vec![2.0 * PI; d],
    };
    let per_unit = if d == 3 { 8 } else { 64 };
    let counts: Vec<usize> = (0..d).map(|i| (per_unit * k[i].unsigned_abs().max(1) as usize).min(2048) + 1).collect();
    let total: usize = counts.iter().product();
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut r = flat;
        for i in 0..d {
            let j = r % counts[i];
            r /= counts[i];
            x[i] = lens[i] * j as f64 / (counts[i] - 1) as f64;
        }
        let v = sample_mode(g, mode, &x).value;
        best = best.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub xi: f64,
    /// `min_k lambda_k / k^xi` over the supplied sequence.
    pub rho_hat: f64,
    pub rho: f64,
    /// 1-based ranks with `lambda_k < rho k^xi`.
    pub violations: Vec<usize>,
    /// `min_k (lambda_k - rho k^xi)`; positive means the strict inequality holds.
    pub strict_margin: f64,
    pub checked: usize,
}

/// Checks `lambda_k >= rho k^xi` for an ascending sequence indexed from 1.
pub fn growth_check(eigenvalues: &[f64], xi: f64, rho: f64) -> GrowthReport {
    let mut rho_hat = f64::INFINITY;
    let mut margin = f64::INFINITY;
    let mut violations = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        let k = (i + 1) as f64;
        let kx = k.powf(xi);
        rho_hat = rho_hat.min(l / kx);
        let gap = l - rho * kx;
        margin = margin.min(gap);
        if gap < 0.0 {
            violations.push(i + 1);
        }
    }
    GrowthReport { xi, rho_hat, rho, violations, strict_margin: margin, checked: eigenvalues.len() }
}
