//! Geometry descriptors, mode keys, spectral fields and Gevrey weights.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for grouping eigenvalues and for cutoff comparisons.
pub const EIGEN_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Torus2,
    Torus3,
    Rectangle,
    Cylinder,
    Sphere,
    Hemisphere,
}

impl GeometryKind {
    pub fn dimension(self) -> usize {
        match self {
            GeometryKind::Torus3 => 3,
            _ => 2,
        }
    }

    pub fn is_flat(self) -> bool {
        !matches!(self, GeometryKind::Sphere | GeometryKind::Hemisphere)
    }

    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Torus2 => "torus2",
            GeometryKind::Torus3 => "torus3",
            GeometryKind::Rectangle => "rect",
            GeometryKind::Cylinder => "cyl",
            GeometryKind::Sphere => "sphere",
            GeometryKind::Hemisphere => "hemisphere",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus2" => Ok(GeometryKind::Torus2),
            "torus3" => Ok(GeometryKind::Torus3),
            "rect" | "rectangle" => Ok(GeometryKind::Rectangle),
            "cyl" | "cylinder" => Ok(GeometryKind::Cylinder),
            "sphere" => Ok(GeometryKind::Sphere),
            "hemisphere" => Ok(GeometryKind::Hemisphere),
            other => Err(Error::InvalidGeometry(format!("unknown geometry '{other}'"))),
        }
    }
}

/// A domain together with its side lengths. Tori use the fixed period 2*pi and
/// the unit sphere has no lengths, so `a`/`b` only matter for rectangles and cylinders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryDescriptor {
    pub kind: GeometryKind,
    pub a: f64,
    pub b: f64,
}

impl GeometryDescriptor {
    pub fn new(kind: GeometryKind, a: f64, b: f64) -> Result<Self> {
        match kind {
            GeometryKind::Rectangle | GeometryKind::Cylinder => {
                if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidGeometry(format!(
                        "side lengths must be positive and finite, got a={a}, b={b}"
                    )));
                }
                Ok(Self { kind, a, b })
            }
            GeometryKind::Torus2 | GeometryKind::Torus3 => Ok(Self { kind, a: 2.0 * PI, b: 2.0 * PI }),
            GeometryKind::Sphere | GeometryKind::Hemisphere => Ok(Self { kind, a: 1.0, b: 1.0 }),
        }
    }

    pub fn torus2() -> Self {
        Self { kind: GeometryKind::Torus2, a: 2.0 * PI, b: 2.0 * PI }
    }

    pub fn torus3() -> Self {
        Self { kind: GeometryKind::Torus3, a: 2.0 * PI, b: 2.0 * PI }
    }

    pub fn rectangle(a: f64, b: f64) -> Result<Self> {
        Self::new(GeometryKind::Rectangle, a, b)
    }

    pub fn cylinder(a: f64, b: f64) -> Result<Self> {
        Self::new(GeometryKind::Cylinder, a, b)
    }

    pub fn sphere() -> Self {
        Self { kind: GeometryKind::Sphere, a: 1.0, b: 1.0 }
    }

    pub fn hemisphere() -> Self {
        Self { kind: GeometryKind::Hemisphere, a: 1.0, b: 1.0 }
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        match self.kind {
            GeometryKind::Torus2 => 4.0 * PI * PI,
            GeometryKind::Torus3 => 8.0 * PI * PI * PI,
            GeometryKind::Rectangle | GeometryKind::Cylinder => self.a * self.b,
            GeometryKind::Sphere => 4.0 * PI,
            GeometryKind::Hemisphere => 2.0 * PI,
        }
    }

    pub fn admits(&self, key: &ModeKey) -> bool {
        let k = key.indices();
        match (self.kind, key.variant) {
            (GeometryKind::Torus2, Variant::Cos(1) | Variant::Sin(1)) => k.len() == 2 && lex_positive(k),
            (GeometryKind::Torus3, Variant::Cos(p) | Variant::Sin(p)) => {
                k.len() == 3 && (p == 1 || p == 2) && lex_positive(k)
            }
            (GeometryKind::Rectangle, Variant::Plain) => k.len() == 2 && k[0] >= 1 && k[1] >= 1,
            (GeometryKind::Cylinder, Variant::Varsigma) => k.len() == 2 && k[0] >= 1 && k[1] >= 1,
            (GeometryKind::Cylinder, Variant::Kappa) => k.len() == 2 && k[0] >= 0 && k[1] >= 1,
            (GeometryKind::Sphere, Variant::Plain) => k.len() == 2 && k[0] >= 1 && k[1].abs() <= k[0],
            (GeometryKind::Hemisphere, Variant::Plain) => {
                k.len() == 2 && k[0] >= 1 && k[1].abs() <= k[0] && (k[0] + k[1].abs()) % 2 == 1
            }
            _ => false,
        }
    }

    /// Builds the normalized mode for `key`, rejecting keys outside the index set.
    pub fn mode(&self, key: ModeKey) -> Result<SpectralMode> {
        if !self.admits(&key) {
            return Err(Error::InadmissibleMode { key: format!("{key}[{}]", key.variant), geometry: self.kind });
        }
        let k = key.indices();
        let (eigenvalue, normalization) = match self.kind {
            GeometryKind::Torus2 | GeometryKind::Torus3 => {
                let d = k.len() as i32;
                let lambda = k.iter().map(|&x| (x * x) as f64).sum::<f64>();
                (lambda, (2f64.powi(d - 1) * PI.powi(d)).powf(-0.5))
            }
            GeometryKind::Rectangle => {
                let lambda = PI * PI * (sq(k[0]) / (self.a * self.a) + sq(k[1]) / (self.b * self.b));
                (lambda, 2.0 / (self.a * self.b * lambda).sqrt())
            }
            GeometryKind::Cylinder => {
                let lambda = PI * PI * (4.0 * sq(k[0]) / (self.a * self.a) + sq(k[1]) / (self.b * self.b));
                let amp = if k[0] == 0 { 2f64.sqrt() } else { 2.0 };
                (lambda, amp / (self.a * self.b * lambda).sqrt())
            }
            GeometryKind::Sphere | GeometryKind::Hemisphere => {
                let n = k[0];
                let lambda = (n * (n + 1)) as f64;
                let mut c = crate::sphere::harmonic_constant(n as u32, k[1].unsigned_abs());
                if k[1] != 0 {
                    c *= 2f64.sqrt();
                }
                if self.kind == GeometryKind::Hemisphere {
                    c *= 2f64.sqrt();
                }
                (lambda, c / lambda.sqrt())
            }
        };
        Ok(SpectralMode { key, eigenvalue, normalization })
    }
}

fn sq(k: i32) -> f64 {
    (k as f64) * (k as f64)
}

fn lex_positive(k: &[i32]) -> bool {
    for &x in k {
        match x.cmp(&0) {
            Ordering::Greater => return true,
            Ordering::Less => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Trigonometric or polarization tag that distinguishes modes sharing an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Plain,
    Cos(u8),
    Sin(u8),
    Varsigma,
    Kappa,
}

impl Variant {
    pub fn label(self) -> String {
        match self {
            Variant::Plain => "-".to_string(),
            Variant::Cos(p) => format!("cos{p}"),
            Variant::Sin(p) => format!("sin{p}"),
            Variant::Varsigma => "varsigma".to_string(),
            Variant::Kappa => "kappa".to_string(),
        }
    }

    pub fn polarization(self) -> u8 {
        match self {
            Variant::Cos(p) | Variant::Sin(p) => p,
            _ => 0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown variant '{s}'"));
        match s {
            "-" | "" => Ok(Variant::Plain),
            "varsigma" => Ok(Variant::Varsigma),
            "kappa" => Ok(Variant::Kappa),
            _ => {
                let (head, pol) = s.split_at(s.len().saturating_sub(1));
                let p: u8 = pol.parse().map_err(|_| bad())?;
                match head {
                    "cos" => Ok(Variant::Cos(p)),
                    "sin" => Ok(Variant::Sin(p)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

/// Integer index tuple (up to three entries) plus variant tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeKey {
    index: [i32; 3],
    len: u8,
    pub variant: Variant,
}

impl ModeKey {
    pub fn new(indices: &[i32], variant: Variant) -> Self {
        assert!(!indices.is_empty() && indices.len() <= 3, "mode keys carry one to three indices");
        let mut index = [0; 3];
        index[..indices.len()].copy_from_slice(indices);
        Self { index, len: indices.len() as u8, variant }
    }

    pub fn torus2(k1: i32, k2: i32, cos: bool) -> Self {
        Self::new(&[k1, k2], if cos { Variant::Cos(1) } else { Variant::Sin(1) })
    }

    pub fn rect(k1: i32, k2: i32) -> Self {
        Self::new(&[k1, k2], Variant::Plain)
    }

    pub fn varsigma(k1: i32, k2: i32) -> Self {
        Self::new(&[k1, k2], Variant::Varsigma)
    }

    pub fn kappa(k1: i32, k2: i32) -> Self {
        Self::new(&[k1, k2], Variant::Kappa)
    }

    /// Real spherical harmonic of degree `n` and signed order `m`.
    pub fn sphere(n: i32, m: i32) -> Self {
        Self::new(&[n, m], Variant::Plain)
    }

    pub fn indices(&self) -> &[i32] {
        &self.index[..self.len as usize]
    }

    pub fn parse(key: &str, variant: &str) -> Result<Self> {
        let idx = key
            .split('/')
            .map(|p| p.trim().parse::<i32>().map_err(|_| Error::Parse(format!("bad mode key '{key}'"))))
            .collect::<Result<Vec<_>>>()?;
        if idx.is_empty() || idx.len() > 3 {
            return Err(Error::Parse(format!("bad mode key '{key}'")));
        }
        Ok(Self::new(&idx, variant.trim().parse()?))
    }
}

impl fmt::Display for ModeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join("/"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMode {
    pub key: ModeKey,
    pub eigenvalue: f64,
    pub normalization: f64,
}

impl SpectralMode {
    /// Serialization order: ascending eigenvalue, then index tuple, then variant.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.eigenvalue.total_cmp(&other.eigenvalue).then_with(|| self.key.cmp(&other.key))
    }
}

pub fn within_cutoff(eigenvalue: f64, cutoff: f64) -> bool {
    eigenvalue <= cutoff + EIGEN_REL_TOL * cutoff.abs()
}

pub fn same_eigenvalue(x: f64, y: f64) -> bool {
    (x - y).abs() <= EIGEN_REL_TOL * x.abs().max(y.abs())
}

/// Assigns each value of an ascending sequence a 0-based group id; values within
/// the relative tolerance of the group's first value share an id.
pub fn group_eigenvalues(sorted: &[f64]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut group = 0;
    let mut anchor = f64::NAN;
    for (i, &v) in sorted.iter().enumerate() {
        if i > 0 && !same_eigenvalue(anchor, v) {
            group += 1;
        }
        if i == 0 || !same_eigenvalue(anchor, v) {
            anchor = v;
        }
        out.push(group);
    }
    out
}

/// Distinct eigenvalues of an ascending sequence.
pub fn distinct_eigenvalues(sorted: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in sorted {
        if out.last().is_none_or(|&last| !same_eigenvalue(last, v)) {
            out.push(v);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    pub s: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl GevreyParams {
    pub fn new(s: f64, sigma: f64, alpha: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s must be >= 0, got {s}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self { s, sigma, alpha })
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }
}

/// Finite set of modal coefficients on one geometry. Missing modes are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    geometry: GeometryDescriptor,
    coeffs: BTreeMap<ModeKey, (SpectralMode, f64)>,
}

impl SpectralField {
    pub fn new(geometry: GeometryDescriptor) -> Self {
        Self { geometry, coeffs: BTreeMap::new() }
    }

    pub fn geometry(&self) -> &GeometryDescriptor {
        &self.geometry
    }

    /// Sets the coefficient of `key`, validating admissibility.
    pub fn set(&mut self, key: ModeKey, value: f64) -> Result<()> {
        let mode = self.geometry.mode(key)?;
        self.coeffs.insert(key, (mode, value));
        Ok(())
    }

    /// Sets a coefficient for a mode already built by this geometry.
    pub fn set_mode(&mut self, mode: SpectralMode, value: f64) {
        debug_assert!(self.geometry.admits(&mode.key));
        self.coeffs.insert(mode.key, (mode, value));
    }

    pub fn get(&self, key: &ModeKey) -> f64 {
        self.coeffs.get(key).map_or(0.0, |(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&SpectralMode, f64)> {
        self.coeffs.values().map(|(m, v)| (m, *v))
    }

    /// Entries in serialization order.
    pub fn sorted(&self) -> Vec<(SpectralMode, f64)> {
        let mut v: Vec<(SpectralMode, f64)> = self.coeffs.values().copied().collect();
        v.sort_by(|x, y| x.0.canonical_cmp(&y.0));
        v
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.iter().map(|(_, v)| v * v).sum::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map_coefficients(|_, v| v * factor)
    }

    pub fn map_coefficients(&self, f: impl Fn(&SpectralMode, f64) -> f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, (m, v))| (*k, (*m, f(m, *v)))).collect();
        Self { geometry: self.geometry, coeffs }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        if self.geometry.kind != other.geometry.kind {
            return Err(Error::GeometryMismatch(self.geometry.kind, other.geometry.kind));
        }
        let mut out = self.clone();
        for (k, (m, v)) in &other.coeffs {
            out.coeffs.entry(*k).or_insert((*m, 0.0)).1 += v;
        }
        Ok(out)
    }
}

/// `|A^s exp(sigma A^alpha) u|`, evaluated in log space so that large weights on
/// small coefficients do not overflow prematurely.
pub fn gevrey_norm(u: &SpectralField, p: &GevreyParams) -> Result<f64> {
    let mut logs = Vec::with_capacity(u.len());
    for (mode, c) in u.iter() {
        if c == 0.0 {
            continue;
        }
        let lambda = mode.eigenvalue;
        let exponent = p.sigma * lambda.powf(p.alpha);
        logs.push(2.0 * (p.s * lambda.ln() + exponent + c.abs().ln()));
    }
    let Some(max) = logs.iter().copied().reduce(f64::max) else {
        return Ok(0.0);
    };
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    let norm = (0.5 * (max + sum.ln())).exp();
    if !norm.is_finite() {
        let worst = u.iter().filter(|(_, c)| *c != 0.0).map(|(m, _)| m.eigenvalue).fold(0.0, f64::max);
        return Err(Error::WeightOverflow { eigenvalue: worst, exponent: p.sigma * worst.powf(p.alpha) });
    }
    Ok(norm)
}

/// Multiplies every coefficient by `f(lambda)`.
pub fn apply_spectral_multiplier(u: &SpectralField, f: impl Fn(f64) -> f64) -> SpectralField {
    u.map_coefficients(|m, v| f(m.eigenvalue) * v)
}

/// Writes `mode_key,variant,eigenvalue,coefficient` rows in serialization order.
pub fn write_field_csv<W: Write>(mut out: W, field: &SpectralField, header: Option<&str>) -> Result<()> {
    if let Some(h) = header {
        writeln!(out, "{h}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode_key", "variant", "eigenvalue", "coefficient"])?;
    for (mode, c) in field.sorted() {
        w.write_record([
            mode.key.to_string(),
            mode.key.variant.label(),
            format!("{:?}", mode.eigenvalue),
            format!("{c:?}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field CSV, skipping `#` lines. Eigenvalues are recomputed from the
/// geometry and checked against the file.
pub fn read_field_csv<R: Read>(input: R, geometry: GeometryDescriptor) -> Result<SpectralField> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    };
    let (ik, iv, ie, ic) = (col("mode_key")?, col("variant")?, col("eigenvalue")?, col("coefficient")?);
    let mut field = SpectralField::new(geometry);
    for rec in r.records() {
        let rec = rec?;
        let key = ModeKey::parse(&rec[ik], &rec[iv])?;
        let mode = geometry.mode(key)?;
        let listed: f64 = rec[ie].parse().map_err(|_| Error::Parse(format!("bad eigenvalue '{}'", &rec[ie])))?;
        if !same_eigenvalue(listed, mode.eigenvalue) && (listed - mode.eigenvalue).abs() > 1e-12 {
            return Err(Error::Parse(format!(
                "eigenvalue {listed} for mode {key} disagrees with computed {}",
                mode.eigenvalue
            )));
        }
        let c: f64 = rec[ic].parse().map_err(|_| Error::Parse(format!("bad coefficient '{}'", &rec[ic])))?;
        field.set_mode(mode, c);
    }
    Ok(field)
}
