//! Time integration of the truncated Galerkin system
//! `du/dt + nu A u + B(u) + h = 0` and Gevrey-smoothing diagnostics.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coupling::TriadTable;
use crate::error::{Error, Result};
use crate::spectra::{distinct_eigenvalues, gevrey_norm, group_eigenvalues, GevreyParams, SpectralField, SpectralMode};

/// Energy above which a run is declared to have blown up.
pub const BLOWUP_ENERGY: f64 = 1e12;

/// Groups whose largest coefficient is at or below this are left out of the radius fit.
pub const POPULATED_FLOOR: f64 = 1e-300;

/// Dense form of a triad table: coefficients indexed by basis position.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub basis: Vec<SpectralMode>,
    pub eigenvalues: Vec<f64>,
    triads: Vec<(u32, u32, u32, f64)>,
}

impl GalerkinSystem {
    pub fn new(table: &TriadTable) -> Self {
        let triads = table
            .entries
            .iter()
            .map(|e| {
                // diagonal pairs appear once in the ordered double sum, off-diagonal twice
                let w = if e.n == e.m { 0.5 } else { 1.0 };
                (e.n, e.m, e.l, w * e.coeff)
            })
            .collect();
        Self { basis: table.basis.clone(), eigenvalues: table.basis.iter().map(|m| m.eigenvalue).collect(), triads }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `N_l(u) = (1/2) sum_{n,m} c(n,m,l) u_n u_m`.
    pub fn nonlinear(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(n, m, l, c) in &self.triads {
            out[l as usize] += c * u[n as usize] * u[m as usize];
        }
    }

    /// Dense coefficient vector of a field; errors on modes outside the basis.
    pub fn to_dense(&self, field: &SpectralField) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.len()];
        for (mode, c) in field.iter() {
            let i = self
                .basis
                .iter()
                .position(|b| b.key == mode.key)
                .ok_or_else(|| Error::InvalidParameter(format!("mode {} lies outside the table", mode.key)))?;
            v[i] = c;
        }
        Ok(v)
    }

    pub fn to_field(&self, template: &SpectralField, u: &[f64]) -> SpectralField {
        let mut f = SpectralField::new(*template.geometry());
        for (mode, &c) in self.basis.iter().zip(u) {
            f.set_mode(*mode, c);
        }
        f
    }
}

/// `du_l/dt = -nu lambda_l u_l - (1/2) sum c(n,m,l) u_n u_m - h_l`.
pub fn rhs(u: &SpectralField, table: &TriadTable, nu: f64, h: &SpectralField) -> Result<SpectralField> {
    let sys = GalerkinSystem::new(table);
    let uv = sys.to_dense(u)?;
    let hv = sys.to_dense(h)?;
    let mut nl = vec![0.0; sys.len()];
    sys.nonlinear(&uv, &mut nl);
    let out: Vec<f64> = (0..sys.len()).map(|l| -nu * sys.eigenvalues[l] * uv[l] - nl[l] - hv[l]).collect();
    Ok(sys.to_field(u, &out))
}

/// Integrating-factor midpoint step: the linear part `-nu lambda` is integrated
/// exactly, the nonlinear term and forcing by the explicit midpoint rule.
pub struct Stepper<'a> {
    sys: &'a GalerkinSystem,
    forcing: Vec<f64>,
    full: Vec<f64>,
    half: Vec<f64>,
    scratch: Vec<f64>,
    mid: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a GalerkinSystem, nu: f64, forcing: Vec<f64>, dt: f64) -> Self {
        let full = sys.eigenvalues.iter().map(|l| (-nu * l * dt).exp()).collect();
        let half = sys.eigenvalues.iter().map(|l| (-nu * l * 0.5 * dt).exp()).collect();
        let n = sys.len();
        Self { sys, forcing, full, half, scratch: vec![0.0; n], mid: vec![0.0; n] }
    }

    fn force(&mut self, u: &[f64]) {
        self.sys.nonlinear(u, &mut self.scratch);
        for (s, h) in self.scratch.iter_mut().zip(&self.forcing) {
            *s = -*s - h;
        }
    }

    pub fn step(&mut self, u: &mut [f64], dt: f64) {
        self.force(u);
        for ((m, &x), (&e, &f)) in self.mid.iter_mut().zip(u.iter()).zip(self.half.iter().zip(&self.scratch)) {
            *m = e * (x + 0.5 * dt * f);
        }
        let mid = std::mem::take(&mut self.mid);
        self.force(&mid);
        self.mid = mid;
        for (((x, &e), &h), &f) in u.iter_mut().zip(&self.full).zip(&self.half).zip(&self.scratch) {
            *x = e * *x + dt * h * f;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub t: f64,
    pub energy: f64,
    /// `|A^s exp(phi(t) A^alpha) u(t)|` with `phi(t) = min(sigma, t)`.
    pub gevrey_norm: f64,
    pub fitted_radius: Option<f64>,
    pub n_active_modes: usize,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub nu: f64,
    pub forcing: SpectralField,
    pub u0: SpectralField,
    pub dt: f64,
    pub t_max: f64,
    pub gevrey: GevreyParams,
    pub monitor_stride: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if self.monitor_stride == 0 {
            return Err(Error::InvalidParameter("monitor stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    BlowUp { last_valid_t: f64 },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DecayRecord>,
    pub final_field: SpectralField,
    pub termination: Termination,
}

/// Least-squares slope of `-log(lambda^s max_group |u|)` against `lambda^{1/2}`
/// over populated eigenvalue groups. `None` with fewer than three groups.
pub fn fitted_radius(eigenvalues: &[f64], u: &[f64], s: f64) -> Option<f64> {
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let groups = group_eigenvalues(&sorted);
    let distinct = distinct_eigenvalues(&sorted);
    let mut maxima = vec![0.0f64; distinct.len()];
    for (pos, &i) in order.iter().enumerate() {
        maxima[groups[pos]] = maxima[groups[pos]].max(u[i].abs());
    }
    let pts: Vec<(f64, f64)> = distinct
        .iter()
        .zip(&maxima)
        .filter(|(_, &m)| m > POPULATED_FLOOR)
        .map(|(&l, &m)| (l.sqrt(), -(s * l.ln() + m.ln())))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn record(sys: &GalerkinSystem, template: &SpectralField, u: &[f64], t: f64, p: &GevreyParams) -> Result<DecayRecord> {
    let energy = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
    let field = sys.to_field(template, u);
    let g = gevrey_norm(&field, &p.with_sigma(p.sigma.min(t)))?;
    Ok(DecayRecord {
        t,
        energy,
        gevrey_norm: g,
        fitted_radius: fitted_radius(&sys.eigenvalues, u, p.s),
        n_active_modes: u.iter().filter(|x| x.abs() > POPULATED_FLOOR).count(),
    })
}

/// Runs to `t_max`, recording every `monitor_stride` steps and at the end.
/// Blow-up (energy above [`BLOWUP_ENERGY`] or non-finite) stops the run and is
/// reported in the output together with all records taken so far.
pub fn run(config: &SimConfig, table: &TriadTable) -> Result<RunOutput> {
    config.validate()?;
    let sys = GalerkinSystem::new(table);
    let mut u = sys.to_dense(&config.u0)?;
    let h = sys.to_dense(&config.forcing)?;
    let steps = (config.t_max / config.dt).round() as usize;
    let mut stepper = Stepper::new(&sys, config.nu, h, config.dt);
    let mut records = vec![record(&sys, &config.u0, &u, 0.0, &config.gevrey)?];
    let mut last_valid = u.clone();
    let mut termination = Termination::Completed;
    for k in 1..=steps {
        stepper.step(&mut u, config.dt);
        let t = k as f64 * config.dt;
        let energy = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
        if !energy.is_finite() || energy > BLOWUP_ENERGY {
            let last_t = (k - 1) as f64 * config.dt;
            if records.last().is_none_or(|r| r.t < last_t) {
                records.push(record(&sys, &config.u0, &last_valid, last_t, &config.gevrey)?);
            }
            termination = Termination::BlowUp { last_valid_t: last_t };
            break;
        }
        last_valid.copy_from_slice(&u);
        if k % config.monitor_stride == 0 || k == steps {
            records.push(record(&sys, &config.u0, &u, t, &config.gevrey)?);
        }
    }
    Ok(RunOutput { records, final_field: sys.to_field(&config.u0, &last_valid), termination })
}

/// Terminal state of an unrecorded run, for convergence studies.
pub fn integrate(sys: &GalerkinSystem, u0: &[f64], nu: f64, forcing: &[f64], dt: f64, t_max: f64) -> Vec<f64> {
    let steps = (t_max / dt).round() as usize;
    let mut stepper = Stepper::new(sys, nu, forcing.to_vec(), dt);
    let mut u = u0.to_vec();
    for _ in 0..steps {
        stepper.step(&mut u, dt);
    }
    u
}

/// Built-in initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Modes of the three lowest eigenvalues, coefficients `(-1)^rank exp(-sqrt(lambda))`.
    LowMode,
    /// Every mode, coefficient `exp(-sqrt(lambda))`.
    AnalyticDecay,
    /// Every mode, coefficient `N(0,1) exp(-sqrt(lambda))` from a seeded stream.
    RandomSeeded,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowmode" => Ok(Preset::LowMode),
            "analytic-decay" => Ok(Preset::AnalyticDecay),
            "random-seeded" => Ok(Preset::RandomSeeded),
            _ => Err(Error::Parse(format!("unknown preset '{s}'"))),
        }
    }
}

pub fn preset_field(
    preset: Preset,
    geometry: &crate::spectra::GeometryDescriptor,
    basis: &[SpectralMode],
    amplitude: f64,
    seed: u64,
) -> SpectralField {
    let mut f = SpectralField::new(*geometry);
    let ev: Vec<f64> = basis.iter().map(|m| m.eigenvalue).collect();
    let groups = group_eigenvalues(&ev);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (rank, mode) in basis.iter().enumerate() {
        let decay = (-mode.eigenvalue.sqrt()).exp();
        let c = match preset {
            Preset::LowMode => {
                if groups[rank] >= 3 {
                    continue;
                }
                if rank % 2 == 0 {
                    decay
                } else {
                    -decay
                }
            }
            Preset::AnalyticDecay => decay,
            Preset::RandomSeeded => {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * decay
            }
        };
        f.set_mode(*mode, amplitude * c);
    }
    f
}

/// Zero field on a geometry.
pub fn zero_field(geometry: &crate::spectra::GeometryDescriptor) -> SpectralField {
    SpectralField::new(*geometry)
}
