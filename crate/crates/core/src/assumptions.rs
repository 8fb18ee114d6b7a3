//! Measured versions of the structural constants behind the Gevrey-regularity
//! theorem: triad exponent excess `beta`, interaction cardinalities, the
//! exponent `zeta`, eigenvalue growth, and the elementary inequalities used in
//! the proofs.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coupling::TriadTable;
use crate::error::{Error, Result};
use crate::flat::{growth_check, GrowthReport};
use crate::spectra::{distinct_eigenvalues, group_eigenvalues, GeometryDescriptor, GeometryKind, ModeKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub n: String,
    pub m: String,
    pub l: String,
    pub excess: f64,
}

fn describe(k: &ModeKey) -> String {
    format!("{k}[{}]", k.variant)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriadInequality {
    /// `max(0, max over stored triads of lambda_l^a - lambda_n^a - lambda_m^a)`.
    pub beta_required: f64,
    /// Largest excesses, worst first (at most five).
    pub witnesses: Vec<Witness>,
}

/// Smallest `beta >= 0` with `lambda_l^alpha <= lambda_n^alpha + lambda_m^alpha + beta`
/// on every nonzero triad of the table.
pub fn verify_triad_inequality(table: &TriadTable, alpha: f64) -> Result<TriadInequality> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let pow: Vec<f64> = table.basis.iter().map(|m| m.eigenvalue.powf(alpha)).collect();
    let mut excess: Vec<(f64, usize)> = table
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (pow[e.l as usize] - pow[e.n as usize] - pow[e.m as usize], i))
        .collect();
    excess.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let beta_required = excess.first().map_or(0.0, |e| e.0.max(0.0));
    let witnesses = excess
        .iter()
        .take(5)
        .map(|&(x, i)| {
            let e = table.entries[i];
            Witness {
                n: describe(&table.basis[e.n as usize].key),
                m: describe(&table.basis[e.m as usize].key),
                l: describe(&table.basis[e.l as usize].key),
                excess: x,
            }
        })
        .collect();
    Ok(TriadInequality { beta_required, witnesses })
}

/// `D_r = 1` for `r <= 1` and `2^{r-1}` otherwise: the best constant in
/// `(a + b)^r <= D_r (a^r + b^r)`.
pub fn power_sum_constant(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else {
        2f64.powf(r - 1.0)
    }
}

/// Constant `C` with `lambda_l^s <= C (lambda_n^s + lambda_m^s)` implied by the
/// triad inequality with excess `beta`:
/// `(1 + beta / (2 lambda_1^alpha))^{s/alpha} D_{s/alpha}`.
pub fn lambda_s_constant(s: f64, alpha: f64, beta: f64, lambda1: f64) -> Result<f64> {
    if !(s > 0.0) || !(alpha > 0.0 && alpha < 1.0) || !(beta >= 0.0) || !(lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need s > 0, 0 < alpha < 1, beta >= 0, lambda1 > 0; got s={s}, alpha={alpha}, beta={beta}, lambda1={lambda1}"
        )));
    }
    let r = s / alpha;
    Ok((1.0 + beta / (2.0 * lambda1.powf(alpha))).powf(r) * power_sum_constant(r))
}

/// Signed slacks of the two-sided power inequality, relative to `(a + b)^s`:
/// for `s <= 1`, `2^{s-1}(a^s + b^s) <= (a + b)^s <= a^s + b^s`; for `s >= 1`,
/// `a^s + b^s <= (a + b)^s <= 2^{s-1}(a^s + b^s)`. Returns `(lower, upper)`;
/// both are nonnegative when the inequality holds.
pub fn power_inequality_margin(a: f64, b: f64, s: f64) -> Result<(f64, f64)> {
    if !(a >= 0.0 && b >= 0.0 && s > 0.0) || !(a.is_finite() && b.is_finite() && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("need a, b >= 0 and s > 0; got a={a}, b={b}, s={s}")));
    }
    let whole = (a + b).powf(s);
    if whole == 0.0 {
        return Ok((0.0, 0.0));
    }
    let sum = a.powf(s) + b.powf(s);
    let two = 2f64.powf(s - 1.0) * sum;
    let (lower, upper) = if s <= 1.0 { (whole - two, sum - whole) } else { (whole - sum, two - whole) };
    Ok((lower / whole, upper / whole))
}

/// Quadratic `p(x) = x^T H x / 2 + G x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn new(h: DMatrix<f64>, g: DVector<f64>, c: f64) -> Result<Self> {
        if !h.is_square() || h.nrows() != g.len() {
            return Err(Error::InvalidParameter("Hessian must be square and match the gradient".into()));
        }
        if (&h - h.transpose()).amax() > 1e-12 * h.amax().max(1.0) {
            return Err(Error::InvalidParameter("Hessian must be symmetric".into()));
        }
        Ok(Self { h, g, c })
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x) + self.c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleK {
    pub k: f64,
    pub x_bar: DVector<f64>,
}

/// Constant `K = |p(0)|^{1/2} + 4 |p(x_bar)|^{1/2}` with `H x_bar = -G`, for which
/// `|p(x + y)|^{1/2} <= |p(x)|^{1/2} + |p(y)|^{1/2} + K` whenever `H` is positive definite.
pub fn triangle_k(p: &Quadratic) -> Result<TriangleK> {
    let chol = p.h.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let x_bar = chol.solve(&(-&p.g));
    let zero = DVector::zeros(p.g.len());
    let k = p.eval(&zero).abs().sqrt() + 4.0 * p.eval(&x_bar).abs().sqrt();
    Ok(TriangleK { k, x_bar })
}

/// Slack `|p(x)|^{1/2} + |p(y)|^{1/2} + K - |p(x + y)|^{1/2}`.
pub fn triangle_slack(p: &Quadratic, k: f64, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    p.eval(x).abs().sqrt() + p.eval(y).abs().sqrt() + k - p.eval(&(x + y)).abs().sqrt()
}

/// Whether cardinalities count individual modes (repeated eigenvalues) or
/// distinct eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CardLevel {
    Modes,
    Groups,
}

/// Forward sets `F_{n,m}` (targets of an ordered pair `n < m`) and inverse sets
/// `F_{n,.}^l` (partners `k > n` reaching `l`), at mode or eigenvalue level.
#[derive(Debug, Clone, PartialEq)]
pub struct TriadSets {
    pub level: CardLevel,
    /// Eigenvalue of each unit (mode or group), indexed by unit.
    pub eigenvalues: Vec<f64>,
    pub forward: BTreeMap<(usize, usize), BTreeSet<usize>>,
    pub inverse: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

pub fn triad_sets(table: &TriadTable, level: CardLevel) -> TriadSets {
    let ev: Vec<f64> = table.basis.iter().map(|m| m.eigenvalue).collect();
    let (unit, eigenvalues): (Vec<usize>, Vec<f64>) = match level {
        CardLevel::Modes => ((0..ev.len()).collect(), ev.clone()),
        CardLevel::Groups => (group_eigenvalues(&ev), distinct_eigenvalues(&ev)),
    };
    let mut forward: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
    let mut inverse: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
    for e in &table.entries {
        let (a, b, l) = (unit[e.n as usize], unit[e.m as usize], unit[e.l as usize]);
        if a == b {
            continue;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        forward.entry((lo, hi)).or_default().insert(l);
        inverse.entry((lo, l)).or_default().insert(hi);
    }
    TriadSets { level, eigenvalues, forward, inverse }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cardinalities {
    pub level: CardLevel,
    pub max_forward: usize,
    pub max_inverse: usize,
    /// `(lambda_n, max card over forward and inverse sets anchored at n)`.
    pub per_unit: Vec<(f64, usize)>,
}

pub fn cardinalities(sets: &TriadSets) -> Cardinalities {
    let mut per = vec![0usize; sets.eigenvalues.len()];
    let mut max_forward = 0;
    let mut max_inverse = 0;
    for (&(n, _), s) in &sets.forward {
        per[n] = per[n].max(s.len());
        max_forward = max_forward.max(s.len());
    }
    for (&(n, _), s) in &sets.inverse {
        per[n] = per[n].max(s.len());
        max_inverse = max_inverse.max(s.len());
    }
    Cardinalities {
        level: sets.level,
        max_forward,
        max_inverse,
        per_unit: sets.eigenvalues.iter().copied().zip(per).collect(),
    }
}

/// Smallest `zeta >= 0` with `card_n <= c_f lambda_n^zeta` for every listed unit.
/// Infinite when a unit with `lambda_n <= 1` exceeds `c_f`.
pub fn fit_zeta(per_unit: &[(f64, usize)], c_f: f64) -> f64 {
    let mut zeta: f64 = 0.0;
    for &(lambda, card) in per_unit {
        let card = card as f64;
        if card <= c_f {
            continue;
        }
        if lambda <= 1.0 {
            return f64::INFINITY;
        }
        zeta = zeta.max((card / c_f).ln() / lambda.ln());
    }
    zeta
}

/// Constants claimed for each geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claims {
    pub alpha: f64,
    pub beta: f64,
    /// Uniform bounds on forward/inverse set sizes; `None` when the sets are
    /// only bounded through `c_f lambda_n^zeta`.
    pub card_forward: Option<usize>,
    pub card_inverse: Option<usize>,
    pub c_f: f64,
    pub zeta: f64,
    pub xi: f64,
    /// Growth constant the eigenvalues must clear; `None` means only `rho_hat > 0` is claimed.
    pub rho: Option<f64>,
    pub level: CardLevel,
}

/// Lower growth constant for the cylinder: `min(rho/4, rho_0)` with
/// `rho = min(2 pi/(ab), pi^2/b^2)` and `rho_0` the smallest of `lambda_k / k`
/// over the first three repeated eigenvalues.
pub fn cylinder_rho1(g: &GeometryDescriptor, repeated: &[f64]) -> f64 {
    let rho = (2.0 * PI / (g.a * g.b)).min(PI * PI / (g.b * g.b));
    let rho0 = repeated.iter().take(3).enumerate().map(|(i, l)| l / (i + 1) as f64).fold(f64::INFINITY, f64::min);
    (rho / 4.0).min(rho0)
}

pub fn claims_for(g: &GeometryDescriptor, repeated: &[f64]) -> Claims {
    let base = Claims {
        alpha: 0.5,
        beta: 0.0,
        card_forward: Some(4),
        card_inverse: Some(4),
        c_f: 4.0,
        zeta: 0.0,
        xi: 1.0,
        rho: None,
        level: CardLevel::Modes,
    };
    match g.kind {
        GeometryKind::Torus2 => base,
        GeometryKind::Torus3 => Claims { xi: 2.0 / 3.0, ..base },
        GeometryKind::Rectangle => Claims { rho: Some(2.0 * PI / (g.a * g.b)), ..base },
        GeometryKind::Cylinder => {
            Claims { card_inverse: Some(8), c_f: 8.0, rho: Some(cylinder_rho1(g, repeated)), ..base }
        }
        GeometryKind::Sphere | GeometryKind::Hemisphere => Claims {
            beta: 2.0,
            card_forward: None,
            card_inverse: None,
            c_f: 2.0,
            zeta: 0.5,
            xi: 2.0,
            rho: Some(1.0),
            level: CardLevel::Groups,
            ..base
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSummary {
    pub xi: f64,
    pub rho_hat: f64,
    pub rho_claimed: Option<f64>,
    pub violations: usize,
    pub strict_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SThreshold {
    /// `(d + 2(1/xi + 2 zeta - 1))/4`
    pub with_two_zeta: f64,
    /// `(d + 2(1/xi + zeta - 1))/4`
    pub with_zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub beta: bool,
    pub card_forward: bool,
    pub card_inverse: bool,
    pub zeta: bool,
    pub growth: bool,
}

impl Checks {
    pub fn all(&self) -> bool {
        self.beta && self.card_forward && self.card_inverse && self.zeta && self.growth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub geometry: String,
    pub a: f64,
    pub b: f64,
    pub cutoff: f64,
    pub alpha: f64,
    pub modes: usize,
    pub triads: usize,
    pub beta_required: f64,
    /// Cardinalities at the level the claims are stated for.
    pub card_max_forward: usize,
    pub card_max_inverse: usize,
    pub zeta_fit: f64,
    pub c_f: f64,
    pub card_modes: Cardinalities,
    pub card_groups: Cardinalities,
    pub growth: GrowthSummary,
    pub s_threshold: SThreshold,
    pub witnesses: Vec<Witness>,
    pub claims: Claims,
    pub checks: Checks,
    pub pass: bool,
}

/// Options for [`assess`]; `None` falls back to the geometry's claims.
#[derive(Debug, Clone, Copy, Default)]
pub struct AssessOptions {
    pub alpha: Option<f64>,
    pub c_f: Option<f64>,
    pub c_f_inverse: Option<f64>,
    pub tol: f64,
}

/// Measures every constant on a built table and compares with the claims.
pub fn assess(table: &TriadTable, cutoff: f64, opts: AssessOptions) -> Result<AssumptionReport> {
    let g = table.geometry;
    let repeated: Vec<f64> = table.basis.iter().map(|m| m.eigenvalue).collect();
    let mut claims = claims_for(&g, &repeated);
    if let Some(a) = opts.alpha {
        claims.alpha = a;
    }
    if let Some(c) = opts.c_f_inverse {
        claims.card_inverse = Some(c.round() as usize);
    }
    if let Some(c) = opts.c_f {
        match claims.card_forward {
            Some(_) => {
                claims.card_forward = Some(c.round() as usize);
                claims.c_f = c.max(claims.card_inverse.unwrap_or(0) as f64);
            }
            None => claims.c_f = c,
        }
    }
    let ineq = verify_triad_inequality(table, claims.alpha)?;
    let card_modes = cardinalities(&triad_sets(table, CardLevel::Modes));
    let card_groups = cardinalities(&triad_sets(table, CardLevel::Groups));
    let primary = if claims.level == CardLevel::Modes { &card_modes } else { &card_groups };
    let c_f = claims.c_f;
    let zeta_fit = fit_zeta(&primary.per_unit, c_f);

    let (seq, xi) = match claims.level {
        CardLevel::Modes => (repeated.clone(), claims.xi),
        CardLevel::Groups => (distinct_eigenvalues(&repeated), claims.xi),
    };
    let gr: GrowthReport = growth_check(&seq, xi, claims.rho.unwrap_or(0.0));
    let growth_ok = match claims.rho {
        Some(_) => gr.violations.is_empty(),
        None => gr.rho_hat > 0.0,
    };
    let d = g.dimension() as f64;
    let checks = Checks {
        beta: ineq.beta_required <= claims.beta + opts.tol,
        card_forward: claims.card_forward.is_none_or(|c| primary.max_forward <= c),
        card_inverse: claims.card_inverse.is_none_or(|c| primary.max_inverse <= c),
        zeta: zeta_fit <= claims.zeta + opts.tol,
        growth: growth_ok,
    };
    let pass = checks.all();
    Ok(AssumptionReport {
        geometry: g.kind.name().to_string(),
        a: g.a,
        b: g.b,
        cutoff,
        alpha: claims.alpha,
        modes: table.basis.len(),
        triads: table.entries.len(),
        beta_required: ineq.beta_required,
        card_max_forward: primary.max_forward,
        card_max_inverse: primary.max_inverse,
        zeta_fit,
        c_f,
        growth: GrowthSummary {
            xi,
            rho_hat: gr.rho_hat,
            rho_claimed: claims.rho,
            violations: gr.violations.len(),
            strict_margin: gr.strict_margin,
        },
        s_threshold: SThreshold {
            with_two_zeta: (d + 2.0 * (1.0 / xi + 2.0 * zeta_fit - 1.0)) / 4.0,
            with_zeta: (d + 2.0 * (1.0 / xi + zeta_fit - 1.0)) / 4.0,
        },
        card_modes,
        card_groups,
        witnesses: ineq.witnesses,
        claims,
        checks,
        pass,
    })
}
