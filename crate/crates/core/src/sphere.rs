//! Real spherical harmonics, the hemisphere subfamily and the triple product
//! that drives sphere couplings.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_on, periodic_trapezoid, Rule};
use crate::spectra::{within_cutoff, GeometryDescriptor, GeometryKind, ModeKey, SpectralMode};

fn factorial_ratio(n: u32, m: u32) -> f64 {
    // (n - m)! / (n + m)!
    ((n - m + 1)..=(n + m)).fold(1.0, |acc, k| acc / k as f64)
}

/// `sqrt((2n+1)/(4 pi) * (n-m)!/(n+m)!)`.
pub fn harmonic_constant(n: u32, m: u32) -> f64 {
    ((2 * n + 1) as f64 / (4.0 * PI) * factorial_ratio(n, m)).sqrt()
}

/// Ferrers functions `P_m^m(x), ..., P_nmax^m(x)` without the Condon-Shortley
/// phase, by upward recurrence in degree.
fn legendre_column(m: u32, nmax: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity((nmax + 1 - m.min(nmax + 1)) as usize);
    if m > nmax {
        return out;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * s;
    }
    out.push(pmm);
    if nmax == m {
        return out;
    }
    out.push(x * (2 * m + 1) as f64 * pmm);
    for n in (m + 2)..=nmax {
        let p1 = out[out.len() - 1];
        let p2 = out[out.len() - 2];
        out.push(((2 * n - 1) as f64 * x * p1 - (n + m - 1) as f64 * p2) / (n - m) as f64);
    }
    out
}

/// Associated Legendre (Ferrers) function without the Condon-Shortley phase.
pub fn assoc_legendre(n: u32, m: u32, x: f64) -> Result<f64> {
    if m > n {
        return Err(Error::InvalidParameter(format!("order {m} exceeds degree {n}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} outside [-1, 1]")));
    }
    Ok(*legendre_column(m, n, x).last().expect("column contains degree n"))
}

/// Value and first/second derivatives of the normalized real harmonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSample {
    pub value: f64,
    pub d_theta: f64,
    pub d_phi: f64,
    pub d_theta2: f64,
    pub d_phi2: f64,
}

/// Real harmonic of degree `n`, signed order `m` (cosine for `m > 0`, sine for
/// `m < 0`), unit L2 norm on the sphere. Derivatives use the degree recurrence
/// and are valid away from the poles.
pub fn real_harmonic(n: u32, m: i32, theta: f64, phi: f64) -> HarmonicSample {
    let am = m.unsigned_abs();
    assert!(am <= n && n >= 1, "invalid harmonic ({n}, {m})");
    let x = theta.cos();
    let s = theta.sin();
    let col = legendre_column(am, n, x);
    let at = |deg: i64| -> f64 {
        if deg < am as i64 {
            0.0
        } else {
            col[(deg - am as i64) as usize]
        }
    };
    let nn = n as f64;
    let mm = am as f64;
    let p = at(n as i64);
    let pm1 = at(n as i64 - 1);
    let pm2 = at(n as i64 - 2);
    let x2m1 = x * x - 1.0;
    // derivatives in x from (x^2 - 1) P_n' = n x P_n - (n + m) P_{n-1}
    let dp = (nn * x * p - (nn + mm) * pm1) / x2m1;
    let dpm1 = if n >= 1 { ((nn - 1.0) * x * pm1 - (nn - 1.0 + mm) * pm2) / x2m1 } else { 0.0 };
    let d2p = (nn * p + nn * x * dp - (nn + mm) * dpm1 - 2.0 * x * dp) / x2m1;
    let p_theta = -s * dp;
    let p_theta2 = s * s * d2p - x * dp;

    let mut c = harmonic_constant(n, am);
    if m != 0 {
        c *= 2f64.sqrt();
    }
    let (trig, dtrig, d2trig) = match m.signum() {
        0 => (1.0, 0.0, 0.0),
        1 => {
            let (sn, cs) = (mm * phi).sin_cos();
            (cs, -mm * sn, -mm * mm * cs)
        }
        _ => {
            let (sn, cs) = (mm * phi).sin_cos();
            (sn, mm * cs, -mm * mm * sn)
        }
    };
    HarmonicSample {
        value: c * p * trig,
        d_theta: c * p_theta * trig,
        d_phi: c * p * dtrig,
        d_theta2: c * p_theta2 * trig,
        d_phi2: c * p * d2trig,
    }
}

/// `Delta_S Y + n(n+1) Y` computed from independent second derivatives.
pub fn laplace_beltrami_residual(n: u32, m: i32, theta: f64, phi: f64) -> f64 {
    let h = real_harmonic(n, m, theta, phi);
    let (s, c) = theta.sin_cos();
    h.d_theta2 + c / s * h.d_theta + h.d_phi2 / (s * s) + (n * (n + 1)) as f64 * h.value
}

/// All sphere or hemisphere modes with eigenvalue `n(n+1) <= cutoff`, in
/// serialization order.
pub fn sphere_modes(g: &GeometryDescriptor, cutoff: f64) -> Result<Vec<SpectralMode>> {
    if g.kind.is_flat() {
        return Err(Error::UnsupportedGeometry { op: "sphere_modes", kind: g.kind });
    }
    let mut out = Vec::new();
    let mut n = 1i32;
    while within_cutoff((n * (n + 1)) as f64, cutoff) {
        for m in -n..=n {
            let key = ModeKey::sphere(n, m);
            if g.admits(&key) {
                out.push(g.mode(key)?);
            }
        }
        n += 1;
    }
    out.sort_by(SpectralMode::canonical_cmp);
    Ok(out)
}

/// Hemisphere modes of degree at most `n_max`: `n + |m|` odd.
pub fn hemisphere_modes(n_max: u32) -> Vec<SpectralMode> {
    let g = GeometryDescriptor::hemisphere();
    let cutoff = (n_max * (n_max + 1)) as f64;
    sphere_modes(&g, cutoff).expect("hemisphere is a curved geometry")
}

/// Tensor grid in `(x = cos theta, phi)` with exact weights for the
/// polynomial-times-trigonometric integrands of degree up to `n_max` harmonics
/// taken three at a time.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub x: Rule,
    pub phi: Rule,
}

impl SphereGrid {
    pub fn for_degree(kind: GeometryKind, n_max: u32) -> Self {
        let nx = (3 * n_max + 2) as usize;
        let x = if kind == GeometryKind::Hemisphere { gauss_legendre_on(nx, 0.0, 1.0) } else { gauss_legendre(nx) };
        let phi = periodic_trapezoid((6 * n_max + 1) as usize, 2.0 * PI);
        Self { x, phi }
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates `(theta, phi, weight)`; the weight includes the area element.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.x.nodes.iter().zip(&self.x.weights).flat_map(move |(&x, &wx)| {
            let theta = x.clamp(-1.0, 1.0).acos();
            self.phi.nodes.iter().zip(&self.phi.weights).map(move |(&p, &wp)| (theta, p, wx * wp))
        })
    }
}

/// Scalar samples of one normalized harmonic on a grid: value, `d_theta`,
/// `d_phi / sin theta` so that `J(a, b) = a_theta b_phi' - a_phi' b_theta`.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi_over_sin: Vec<f64>,
}

impl HarmonicTable {
    pub fn build(grid: &SphereGrid, mode: &SpectralMode, hemisphere: bool) -> Self {
        let k = mode.key.indices();
        let (n, m) = (k[0] as u32, k[1]);
        let scale = if hemisphere { 2f64.sqrt() } else { 1.0 };
        let mut t = Self { value: Vec::new(), d_theta: Vec::new(), d_phi_over_sin: Vec::new() };
        for (theta, phi, _) in grid.points() {
            let h = real_harmonic(n, m, theta, phi);
            t.value.push(scale * h.value);
            t.d_theta.push(scale * h.d_theta);
            t.d_phi_over_sin.push(scale * h.d_phi / theta.sin());
        }
        t
    }

    /// Pointwise Jacobian `J(self, other)` with respect to the outward normal.
    pub fn jacobian(&self, other: &HarmonicTable) -> Vec<f64> {
        (0..self.value.len())
            .map(|i| self.d_theta[i] * other.d_phi_over_sin[i] - self.d_phi_over_sin[i] * other.d_theta[i])
            .collect()
    }
}

fn check_harmonic(n: u32, m: i32) -> Result<()> {
    if n == 0 || m.unsigned_abs() > n {
        return Err(Error::InvalidParameter(format!("no real harmonic with degree {n} and order {m}")));
    }
    Ok(())
}

/// `lambda_m * integral of Y_m J(Y_n, Y_l)` over the sphere, for normalized
/// real harmonics `Y_n = Y_n^i`, `Y_m = Y_m^j`, `Y_l = Y_l^k`.
pub fn sphere_triple_product(n: u32, i: i32, m: u32, j: i32, l: u32, k: i32) -> Result<f64> {
    check_harmonic(n, i)?;
    check_harmonic(m, j)?;
    check_harmonic(l, k)?;
    let nx = (n + m + l + 2) as usize;
    let nphi = (2 * (i.unsigned_abs() + j.unsigned_abs() + k.unsigned_abs()) + 1) as usize;
    let xr = gauss_legendre(nx);
    let pr = periodic_trapezoid(nphi.max(3), 2.0 * PI);
    let mut total = 0.0;
    for (&x, &wx) in xr.nodes.iter().zip(&xr.weights) {
        let theta = x.acos();
        let s = theta.sin();
        for (&p, &wp) in pr.nodes.iter().zip(&pr.weights) {
            let a = real_harmonic(n, i, theta, p);
            let b = real_harmonic(m, j, theta, p);
            let c = real_harmonic(l, k, theta, p);
            let jac = (a.d_theta * c.d_phi - a.d_phi * c.d_theta) / s;
            total += wx * wp * b.value * jac;
        }
    }
    Ok((m * (m + 1)) as f64 * total)
}

/// Largest deviation of the Gram matrix of real harmonics up to `n_max` from the
/// identity, on the sphere or (with the doubled normalization) the hemisphere.
pub fn gram_deviation(kind: GeometryKind, n_max: u32) -> f64 {
    let g = GeometryDescriptor::new(kind, 1.0, 1.0).expect("curved geometry");
    let modes = sphere_modes(&g, (n_max * (n_max + 1)) as f64).expect("curved geometry");
    let grid = SphereGrid::for_degree(kind, n_max);
    let weights: Vec<f64> = grid.points().map(|(_, _, w)| w).collect();
    let hemi = kind == GeometryKind::Hemisphere;
    let tables: Vec<HarmonicTable> = modes.iter().map(|m| HarmonicTable::build(&grid, m, hemi)).collect();
    let mut worst: f64 = 0.0;
    for (a, ta) in tables.iter().enumerate() {
        for (b, tb) in tables.iter().enumerate().skip(a) {
            let ip: f64 = weights.iter().zip(&ta.value).zip(&tb.value).map(|((w, x), y)| w * x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rodrigues(n: u32, m: u32, x: f64) -> f64 {
        // explicit polynomials (1-x^2)^{m/2} d^{n+m}/dx^{n+m} (x^2-1)^n / (2^n n!)
        let deg = 2 * n as usize;
        let mut coef = vec![0.0; deg + 1];
        let mut binom = 1.0;
        for k in 0..=n as usize {
            // (x^2 - 1)^n = sum_k C(n,k) x^{2k} (-1)^{n-k}
            let sign = if (n as usize - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            coef[2 * k] = sign * binom;
            binom = binom * (n as usize - k) as f64 / (k + 1) as f64;
        }
        for _ in 0..(n + m) {
            coef = (1..coef.len()).map(|p| p as f64 * coef[p]).collect();
            if coef.is_empty() {
                coef.push(0.0);
            }
        }
        let poly: f64 = coef.iter().enumerate().map(|(p, c)| c * x.powi(p as i32)).sum();
        let nfact: f64 = (1..=n).map(|k| k as f64).product();
        (1.0 - x * x).powf(m as f64 / 2.0) * poly / (2f64.powi(n as i32) * nfact)
    }

    #[test]
    fn recurrence_matches_rodrigues() {
        for n in 0..=5 {
            for m in 0..=n {
                for &x in &[-0.9, -0.3, 0.0, 0.41, 0.77] {
                    let got = assoc_legendre(n, m, x).unwrap();
                    let want = rodrigues(n, m, x);
                    assert!((got - want).abs() < 1e-12, "P_{n}^{m}({x}) = {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn laplace_beltrami_eigenfunctions() {
        for n in 1..=8 {
            for m in -(n as i32)..=(n as i32) {
                for &(t, p) in &[(0.3, 1.1), (1.2, 4.0), (2.7, 0.2)] {
                    let r = laplace_beltrami_residual(n, m, t, p);
                    assert!(r.abs() < 1e-9 * (n * n) as f64, "({n},{m}) at ({t},{p}): {r}");
                }
            }
        }
    }

    #[test]
    fn sphere_orthonormal_to_degree_eight() {
        assert!(gram_deviation(GeometryKind::Sphere, 8) < 1e-10);
    }

    #[test]
    fn hemisphere_orthonormal() {
        assert!(gram_deviation(GeometryKind::Hemisphere, 6) < 1e-8);
    }

    #[test]
    fn hemisphere_parity() {
        let modes = hemisphere_modes(6);
        assert!(!modes.is_empty());
        for m in &modes {
            let k = m.key.indices();
            assert_eq!((k[0] + k[1].abs()) % 2, 1);
        }
        // degree n contributes n of its 2n+1 orders
        assert_eq!(modes.len(), (1..=6).sum::<usize>());
    }

    #[test]
    fn triple_product_vanishes_for_even_degree_sum() {
        let v = sphere_triple_product(1, 0, 1, 1, 2, 1).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_orders() {
        assert!(sphere_triple_product(1, 2, 1, 0, 1, 0).is_err());
        assert!(assoc_legendre(2, 3, 0.1).is_err());
        assert!(assoc_legendre(2, 1, 1.5).is_err());
    }
}
