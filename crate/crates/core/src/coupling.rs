//! Triad coupling coefficients `c(n, m, l) = b(W_n, W_m, W_l) + b(W_m, W_n, W_l)`
//! with `b(u, v, w) = (u . grad v, w)`, computed by exact quadrature, plus the
//! closed-form cylinder expansion and the per-geometry selection rules.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat::sample_mode;
use crate::quadrature::{closed_trapezoid, periodic_trapezoid, Rule};
use crate::spectra::{GeometryDescriptor, GeometryKind, ModeKey, SpectralMode, Variant};
use crate::sphere::{HarmonicTable, SphereGrid};

pub const DEFAULT_DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriadEntry {
    pub n: u32,
    pub m: u32,
    pub l: u32,
    pub coeff: f64,
}

/// Sparse coupling table over a fixed basis. Entries are stored once per
/// unordered input pair with `n <= m` (basis indices) and sorted by `(n, m, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriadTable {
    pub geometry: GeometryDescriptor,
    pub drop_tol: f64,
    pub basis: Vec<SpectralMode>,
    pub entries: Vec<TriadEntry>,
}

impl TriadTable {
    /// Table over all modes with eigenvalue at most `cutoff`.
    pub fn build(g: &GeometryDescriptor, cutoff: f64, drop_tol: f64) -> Result<Self> {
        let basis = crate::spectrum(g, cutoff)?;
        Self::from_basis(g, basis, drop_tol)
    }

    pub fn from_basis(g: &GeometryDescriptor, basis: Vec<SpectralMode>, drop_tol: f64) -> Result<Self> {
        let dense = project_pairs(g, &basis)?;
        let mut entries = Vec::new();
        for ((n, m), coeffs) in dense {
            for (l, c) in coeffs.into_iter().enumerate() {
                if c.abs() > drop_tol {
                    entries.push(TriadEntry { n: n as u32, m: m as u32, l: l as u32, coeff: c });
                }
            }
        }
        Ok(Self { geometry: *g, drop_tol, basis, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, key: &ModeKey) -> Option<usize> {
        self.basis.iter().position(|m| m.key == *key)
    }

    /// Symmetric lookup by mode keys; absent triads are zero.
    pub fn coefficient(&self, n: &ModeKey, m: &ModeKey, l: &ModeKey) -> f64 {
        let (Some(i), Some(j), Some(k)) = (self.index_of(n), self.index_of(m), self.index_of(l)) else {
            return 0.0;
        };
        let (a, b) = if i <= j { (i as u32, j as u32) } else { (j as u32, i as u32) };
        self.entries
            .binary_search_by(|e| (e.n, e.m, e.l).cmp(&(a, b, k as u32)))
            .map_or(0.0, |pos| self.entries[pos].coeff)
    }
}

/// Flat tensor grid: points, weights and space dimension.
struct FlatGrid {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    dim: usize,
}

fn tensor(rules: &[Rule]) -> (Vec<[f64; 3]>, Vec<f64>) {
    let mut points = vec![[0.0; 3]];
    let mut weights = vec![1.0];
    for (axis, r) in rules.iter().enumerate() {
        let mut np = Vec::with_capacity(points.len() * r.len());
        let mut nw = Vec::with_capacity(points.len() * r.len());
        for (p, w) in points.iter().zip(&weights) {
            for (x, v) in r.nodes.iter().zip(&r.weights) {
                let mut q = *p;
                q[axis] = *x;
                np.push(q);
                nw.push(w * v);
            }
        }
        points = np;
        weights = nw;
    }
    (points, weights)
}

/// Grid exact for products of three modes of the basis. Along each axis the
/// rule has `2D + 1` points where `D` bounds the summed frequency.
fn flat_grid(g: &GeometryDescriptor, basis: &[SpectralMode]) -> FlatGrid {
    let dim = g.dimension();
    let mut max_k = [0usize; 3];
    for m in basis {
        for (i, k) in m.key.indices().iter().enumerate() {
            max_k[i] = max_k[i].max(k.unsigned_abs() as usize);
        }
    }
    let rules: Vec<Rule> = (0..dim)
        .map(|axis| {
            let deg = 3 * max_k[axis].max(1);
            match (g.kind, axis) {
                (GeometryKind::Torus2 | GeometryKind::Torus3, _) => periodic_trapezoid(2 * deg + 1, 2.0 * PI),
                (GeometryKind::Cylinder, 0) => periodic_trapezoid(2 * deg + 1, g.a),
                (_, 0) => closed_trapezoid(2 * deg, g.a),
                _ => closed_trapezoid(2 * deg, g.b),
            }
        })
        .collect();
    let (points, weights) = tensor(&rules);
    FlatGrid { points, weights, dim }
}

type PairProjections = Vec<((usize, usize), Vec<f64>)>;

/// For every basis pair `n <= m`, the coefficients `c(n, m, l)` for all `l`.
fn project_pairs(g: &GeometryDescriptor, basis: &[SpectralMode]) -> Result<PairProjections> {
    if basis.iter().any(|m| !g.admits(&m.key)) {
        return Err(Error::InvalidParameter("basis contains modes foreign to the geometry".into()));
    }
    if g.kind.is_flat() {
        Ok(project_flat(g, basis))
    } else {
        Ok(project_sphere(g, basis))
    }
}

fn project_flat(g: &GeometryDescriptor, basis: &[SpectralMode]) -> PairProjections {
    let grid = flat_grid(g, basis);
    let d = grid.dim;
    let npts = grid.points.len();
    let samples: Vec<(Vec<f64>, Vec<f64>)> = basis
        .par_iter()
        .map(|mode| {
            let mut val = vec![0.0; d * npts];
            let mut grad = vec![0.0; d * d * npts];
            for (p, x) in grid.points.iter().enumerate() {
                let s = sample_mode(g, mode, x);
                for i in 0..d {
                    val[i * npts + p] = s.value[i];
                    for j in 0..d {
                        grad[(i * d + j) * npts + p] = s.grad[i][j];
                    }
                }
            }
            (val, grad)
        })
        .collect();
    let mut weighted = Array2::<f64>::zeros((basis.len(), d * npts));
    for (l, (val, _)) in samples.iter().enumerate() {
        for c in 0..d {
            for p in 0..npts {
                weighted[[l, c * npts + p]] = grid.weights[p] * val[c * npts + p];
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..basis.len()).flat_map(|n| (n..basis.len()).map(move |m| (n, m))).collect();
    pairs
        .into_par_iter()
        .map(|(n, m)| {
            let (un, gn) = &samples[n];
            let (um, gm) = &samples[m];
            let mut x = Array1::<f64>::zeros(d * npts);
            for c in 0..d {
                for p in 0..npts {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += un[k * npts + p] * gm[(c * d + k) * npts + p]
                            + um[k * npts + p] * gn[(c * d + k) * npts + p];
                    }
                    x[c * npts + p] = acc;
                }
            }
            ((n, m), weighted.dot(&x).to_vec())
        })
        .collect()
}

fn project_sphere(g: &GeometryDescriptor, basis: &[SpectralMode]) -> PairProjections {
    let n_max = basis.iter().map(|m| m.key.indices()[0] as u32).max().unwrap_or(1);
    let grid = SphereGrid::for_degree(g.kind, n_max);
    let hemi = g.kind == GeometryKind::Hemisphere;
    let weights: Vec<f64> = grid.points().map(|(_, _, w)| w).collect();
    let tables: Vec<HarmonicTable> = basis.par_iter().map(|m| HarmonicTable::build(&grid, m, hemi)).collect();
    let npts = weights.len();
    let mut weighted = Array2::<f64>::zeros((basis.len(), npts));
    for (l, t) in tables.iter().enumerate() {
        for p in 0..npts {
            weighted[[l, p]] = weights[p] * t.value[p];
        }
    }
    let lambdas: Vec<f64> = basis.iter().map(|m| m.eigenvalue).collect();
    let pairs: Vec<(usize, usize)> = (0..basis.len()).flat_map(|n| (n..basis.len()).map(move |m| (n, m))).collect();
    pairs
        .into_par_iter()
        .map(|(n, m)| {
            let dl = lambdas[n] - lambdas[m];
            if dl == 0.0 {
                return ((n, m), vec![0.0; basis.len()]);
            }
            // integral of Y_m J(Y_n, Y_l) equals integral of Y_l J(Y_m, Y_n)
            let jac = Array1::from(tables[m].jacobian(&tables[n]));
            let raw = weighted.dot(&jac);
            let coeffs =
                raw.iter().zip(&lambdas).map(|(v, ll)| dl / (lambdas[n] * lambdas[m] * ll).sqrt() * v).collect();
            ((n, m), coeffs)
        })
        .collect()
}

/// `c(n, m, l)` for a single triad by exact quadrature.
pub fn coupling_quadrature(g: &GeometryDescriptor, n: ModeKey, m: ModeKey, l: ModeKey) -> Result<f64> {
    let modes = [g.mode(n)?, g.mode(m)?, g.mode(l)?];
    let basis: Vec<SpectralMode> = if n == m { vec![modes[0], modes[2]] } else { modes.to_vec() };
    let dedup: Vec<SpectralMode> = {
        let mut v: Vec<SpectralMode> = Vec::new();
        for b in basis {
            if !v.iter().any(|x| x.key == b.key) {
                v.push(b);
            }
        }
        v
    };
    let pos = |k: &ModeKey| dedup.iter().position(|x| x.key == *k).expect("mode in local basis");
    let (i, j, k) = (pos(&n), pos(&m), pos(&l));
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    let proj = project_pairs(g, &dedup)?;
    Ok(proj.into_iter().find(|(p, _)| *p == (a, b)).map(|(_, c)| c[k]).expect("pair present"))
}

fn sgn(x: i32) -> f64 {
    match x.signum() {
        1 => 1.0,
        -1 => -1.0,
        _ => 0.0,
    }
}

/// Closed-form expansion of `B(Y_n, Y_m) + B(Y_m, Y_n)` on the cylinder in the
/// unnormalized basis `Y = grad_perp psi` with `psi = sin` (varsigma) or `cos`
/// (kappa) of `2 k1 pi x / a` times `sin(k2 pi y / b)`. Returns coefficients of
/// the Leray-projected result on each target `Y_t`.
pub fn cylinder_closed_form_y(g: &GeometryDescriptor, n: ModeKey, m: ModeKey) -> Result<Vec<(ModeKey, f64)>> {
    if g.kind != GeometryKind::Cylinder {
        return Err(Error::UnsupportedGeometry { op: "cylinder_closed_form", kind: g.kind });
    }
    let (mn, mm) = (g.mode(n)?, g.mode(m)?);
    let (n, m, mn, mm) = match (n.variant, m.variant) {
        (Variant::Kappa, Variant::Varsigma) => (m, n, mm, mn),
        _ => (n, m, mn, mm),
    };
    let (lam_n, lam_m) = (mn.eigenvalue, mm.eigenvalue);
    let [n1, n2] = [n.indices()[0], n.indices()[1]];
    let [m1, m2] = [m.indices()[0], m.indices()[1]];
    let w = (n1 * m2 - n2 * m1) as f64;
    let v = (n1 * m2 + n2 * m1) as f64;
    let (s1, s2) = (sgn(n1 - m1), sgn(n2 - m2));
    let k = PI * PI / (2.0 * g.a * g.b);
    // vorticity coefficients a_t of J(psi_n, psi_m) on the targets ++, +-, -+, --
    let (target, a): (Variant, [f64; 4]) = match (n.variant, m.variant) {
        (Variant::Varsigma, Variant::Varsigma) => (Variant::Varsigma, [w, v * s2, -v * s1, -w * s1 * s2]),
        (Variant::Varsigma, Variant::Kappa) => (Variant::Kappa, [w, v * s2, v, w * s2]),
        (Variant::Kappa, Variant::Kappa) => (Variant::Varsigma, [-w, -v * s2, -v * s1, -w * s1 * s2]),
        _ => unreachable!("cylinder modes are varsigma or kappa"),
    };
    let idx = [
        (n1 + m1, n2 + m2),
        (n1 + m1, (n2 - m2).abs()),
        ((n1 - m1).abs(), n2 + m2),
        ((n1 - m1).abs(), (n2 - m2).abs()),
    ];
    let mut acc: BTreeMap<ModeKey, f64> = BTreeMap::new();
    for (&(t1, t2), &at) in idx.iter().zip(&a) {
        let key = ModeKey::new(&[t1, t2], target);
        if at == 0.0 || !g.admits(&key) {
            continue;
        }
        let lam_t = g.mode(key)?.eigenvalue;
        // the field with vorticity J is grad_perp of the stream function that
        // solves Delta Psi = J, i.e. Psi = -sum a_t psi_t / lambda_t
        *acc.entry(key).or_insert(0.0) += -(lam_n - lam_m) / lam_t * k * at;
    }
    Ok(acc.into_iter().filter(|(_, c)| *c != 0.0).collect())
}

/// Closed-form `c(n, m, l)` on the cylinder in the normalized basis.
pub fn cylinder_closed_form(g: &GeometryDescriptor, n: ModeKey, m: ModeKey) -> Result<Vec<(ModeKey, f64)>> {
    let scale = g.mode(n)?.normalization * g.mode(m)?.normalization;
    cylinder_closed_form_y(g, n, m)?.into_iter().map(|(t, c)| Ok((t, scale * c / g.mode(t)?.normalization))).collect()
}

fn lex_normalize(k: &[i32]) -> Vec<i32> {
    match k.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => k.iter().map(|v| -v).collect(),
        _ => k.to_vec(),
    }
}

/// Structural selection rule: a triad outside it must have zero coupling.
pub fn selection_allows(g: &GeometryDescriptor, n: &ModeKey, m: &ModeKey, l: &ModeKey) -> bool {
    let (a, b, c) = (n.indices(), m.indices(), l.indices());
    match g.kind {
        GeometryKind::Torus2 | GeometryKind::Torus3 => {
            let plus: Vec<i32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            let minus: Vec<i32> = a.iter().zip(b).map(|(x, y)| y - x).collect();
            let same_kind = matches!(
                (n.variant, m.variant),
                (Variant::Cos(_), Variant::Cos(_)) | (Variant::Sin(_), Variant::Sin(_))
            );
            let kind_ok = match l.variant {
                Variant::Sin(_) => same_kind,
                Variant::Cos(_) => !same_kind,
                _ => false,
            };
            kind_ok && (lex_normalize(&plus) == c || lex_normalize(&minus) == c)
        }
        GeometryKind::Rectangle | GeometryKind::Cylinder => {
            let axis_ok = |i: usize| c[i] == a[i] + b[i] || c[i] == (a[i] - b[i]).abs();
            let variant_ok = g.kind == GeometryKind::Rectangle || {
                let mixed = n.variant != m.variant;
                (l.variant == Variant::Kappa) == mixed
            };
            axis_ok(0) && axis_ok(1) && variant_ok
        }
        GeometryKind::Sphere | GeometryKind::Hemisphere => {
            let (dn, dm, dl) = (a[0], b[0], c[0]);
            let (i, j, k) = (a[1].abs(), b[1].abs(), c[1].abs());
            (dn + dm + dl) % 2 == 1 && (dn - dm).abs() < dl && dl < dn + dm && (k == i + j || k == (i - j).abs())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub n: ModeKey,
    pub m: ModeKey,
    pub l: ModeKey,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub triads_checked: usize,
    /// Triads excluded by the selection rule whose quadrature value exceeds the tolerance.
    pub counterexamples: Vec<Counterexample>,
    /// Largest coefficient magnitude among excluded triads.
    pub max_excluded: f64,
}

/// Checks that every triad excluded by [`selection_allows`] has coupling at most `tol`.
pub fn selection_soundness(g: &GeometryDescriptor, cutoff: f64, tol: f64) -> Result<SoundnessReport> {
    let basis = crate::spectrum(g, cutoff)?;
    let proj = project_pairs(g, &basis)?;
    let mut report = SoundnessReport { triads_checked: 0, counterexamples: Vec::new(), max_excluded: 0.0 };
    for ((n, m), coeffs) in proj {
        for (l, c) in coeffs.into_iter().enumerate() {
            report.triads_checked += 1;
            if !selection_allows(g, &basis[n].key, &basis[m].key, &basis[l].key) {
                report.max_excluded = report.max_excluded.max(c.abs());
                if c.abs() > tol {
                    report.counterexamples.push(Counterexample {
                        n: basis[n].key,
                        m: basis[m].key,
                        l: basis[l].key,
                        coeff: c,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormComparison {
    pub rows: Vec<ClosedFormRow>,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRow {
    pub n: ModeKey,
    pub m: ModeKey,
    pub l: ModeKey,
    pub closed: f64,
    pub quad: f64,
}

/// Cylinder modes with both indices at most `max_index`.
pub fn cylinder_basis(g: &GeometryDescriptor, max_index: i32) -> Result<Vec<SpectralMode>> {
    let mut basis = Vec::new();
    for k1 in 0..=max_index {
        for k2 in 1..=max_index {
            for key in [ModeKey::varsigma(k1, k2), ModeKey::kappa(k1, k2)] {
                if g.admits(&key) {
                    basis.push(g.mode(key)?);
                }
            }
        }
    }
    basis.sort_by(SpectralMode::canonical_cmp);
    Ok(basis)
}

/// Compares the closed form with quadrature for every triad whose indices are
/// all at most `max_index`. Rows are kept when either value exceeds `report_tol`.
pub fn compare_cylinder_closed_form(
    g: &GeometryDescriptor,
    max_index: i32,
    report_tol: f64,
) -> Result<ClosedFormComparison> {
    let basis = cylinder_basis(g, max_index)?;
    let lookup: HashMap<ModeKey, usize> = basis.iter().enumerate().map(|(i, m)| (m.key, i)).collect();
    let proj = project_pairs(g, &basis)?;
    let mut rows = Vec::new();
    let mut max_abs_diff: f64 = 0.0;
    for ((n, m), quad) in proj {
        let mut closed = vec![0.0; basis.len()];
        for (t, c) in cylinder_closed_form(g, basis[n].key, basis[m].key)? {
            if let Some(&l) = lookup.get(&t) {
                closed[l] += c;
            }
        }
        for l in 0..basis.len() {
            let diff = (closed[l] - quad[l]).abs();
            max_abs_diff = max_abs_diff.max(diff);
            if closed[l].abs() > report_tol || quad[l].abs() > report_tol {
                rows.push(ClosedFormRow {
                    n: basis[n].key,
                    m: basis[m].key,
                    l: basis[l].key,
                    closed: closed[l],
                    quad: quad[l],
                });
            }
        }
    }
    Ok(ClosedFormComparison { rows, max_abs_diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl() -> GeometryDescriptor {
        GeometryDescriptor::cylinder(2.0 * PI, PI).unwrap()
    }

    #[test]
    fn cylinder_example_magnitude() {
        let g = cyl();
        let out = cylinder_closed_form_y(&g, ModeKey::varsigma(1, 1), ModeKey::varsigma(1, 2)).unwrap();
        let c = out.iter().find(|(k, _)| *k == ModeKey::varsigma(2, 3)).unwrap().1;
        assert!((c.abs() - 3.0 / 52.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_is_symmetric() {
        let g = cyl();
        let a = cylinder_closed_form(&g, ModeKey::varsigma(2, 1), ModeKey::kappa(1, 3)).unwrap();
        let b = cylinder_closed_form(&g, ModeKey::kappa(1, 3), ModeKey::varsigma(2, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_form_matches_quadrature_small() {
        let cmp = compare_cylinder_closed_form(&cyl(), 3, 1e-12).unwrap();
        assert!(cmp.max_abs_diff < 1e-10, "max diff {}", cmp.max_abs_diff);
        assert!(!cmp.rows.is_empty());
    }

    #[test]
    fn self_interaction_vanishes() {
        let g = GeometryDescriptor::rectangle(1.3, 0.7).unwrap();
        let t = TriadTable::build(&g, 200.0, DEFAULT_DROP_TOL).unwrap();
        assert!(t.entries.iter().all(|e| e.n != e.m));
    }

    #[test]
    fn torus_pair_hits_sum_and_difference() {
        let g = GeometryDescriptor::torus2();
        let t = TriadTable::build(&g, 5.0, DEFAULT_DROP_TOL).unwrap();
        let (n, m) = (ModeKey::torus2(1, 0, true), ModeKey::torus2(1, 1, true));
        assert!(t.coefficient(&n, &m, &ModeKey::torus2(2, 1, false)).abs() > 1e-3);
        assert!(t.coefficient(&n, &m, &ModeKey::torus2(0, 1, false)).abs() > 1e-3);
        assert_eq!(t.coefficient(&n, &m, &ModeKey::torus2(2, 1, true)), 0.0);
        // equal eigenvalues never couple in two dimensions
        assert_eq!(t.coefficient(&n, &ModeKey::torus2(0, 1, true), &ModeKey::torus2(1, 1, false)), 0.0);
    }

    #[test]
    fn rectangle_selection_is_sound() {
        let g = GeometryDescriptor::rectangle(1.0, 2.0).unwrap();
        let r = selection_soundness(&g, 120.0, 1e-10).unwrap();
        assert!(r.counterexamples.is_empty(), "{:?}", &r.counterexamples[..r.counterexamples.len().min(3)]);
    }

    #[test]
    fn single_triad_matches_table() {
        let g = cyl();
        let t = TriadTable::build(&g, 20.0, 0.0).unwrap();
        let (n, m, l) = (ModeKey::varsigma(1, 1), ModeKey::kappa(1, 2), ModeKey::kappa(2, 3));
        let q = coupling_quadrature(&g, n, m, l).unwrap();
        assert!((q - t.coefficient(&n, &m, &l)).abs() < 1e-13);
    }
}
