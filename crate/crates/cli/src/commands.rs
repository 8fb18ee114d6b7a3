use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use gevlab_core::assumptions::{assess, AssessOptions};
use gevlab_core::coupling::{cylinder_closed_form, TriadTable};
use gevlab_core::sim::{preset_field, run, Preset, SimConfig, Termination};
use gevlab_core::spectra::{group_eigenvalues, read_field_csv, write_field_csv, GevreyParams};
use gevlab_core::wigner::wigner3j;
use gevlab_core::{spectrum as list_modes, GeometryDescriptor, GeometryKind, ModeKey, SpectralField};
use serde_json::{json, Value};

use crate::cache::{load_or_build, TableConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, TOOL, VERSION};
use crate::{CouplingArgs, GeometryArgs, SimulateArgs, SpectrumArgs, TableArgs, VerifyArgs};

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn geometry(args: &GeometryArgs) -> CliResult<GeometryDescriptor> {
    let kind: GeometryKind = args.geometry.parse()?;
    let (a, b) = match kind {
        GeometryKind::Cylinder => (args.a.unwrap_or(2.0 * PI), args.b.unwrap_or(PI)),
        _ => (args.a.unwrap_or(PI), args.b.unwrap_or(PI)),
    };
    if !(args.cutoff >= 0.0 && args.cutoff.is_finite()) {
        return Err(CliError::Usage(format!("cutoff must be a finite number >= 0, got {}", args.cutoff)));
    }
    Ok(GeometryDescriptor::new(kind, a, b)?)
}

fn table_config(args: &TableArgs) -> CliResult<TableConfig> {
    if !(args.drop_tol >= 0.0) {
        return Err(CliError::Usage(format!("drop tolerance must be >= 0, got {}", args.drop_tol)));
    }
    Ok(TableConfig {
        geometry: geometry(&args.geometry)?,
        cutoff: args.geometry.cutoff,
        modes: args.modes,
        drop_tol: args.drop_tol,
    })
}

fn table_manifest(cmd: &str, tc: &TableConfig) -> RunManifest {
    RunManifest::new(cmd, &tc.geometry, Some(tc.cutoff)).param("modes", tc.modes).tolerance("drop_tol", tc.drop_tol)
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(path: Option<&Path>, header: &str) -> CliResult<csv::Writer<Box<dyn Write>>> {
    let mut out = sink(path)?;
    writeln!(out, "{header}")?;
    Ok(csv::Writer::from_writer(out))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Internal(e.to_string())
}

pub fn spectrum(args: &SpectrumArgs) -> CliResult<()> {
    let g = geometry(&args.geometry)?;
    let manifest = RunManifest::new("spectrum", &g, Some(args.geometry.cutoff)).output("spectrum", args.out.as_deref());
    let modes = list_modes(&g, args.geometry.cutoff)?;
    let eigs: Vec<f64> = modes.iter().map(|m| m.eigenvalue).collect();
    let groups = group_eigenvalues(&eigs);
    let mut w = csv_writer(args.out.as_deref(), &manifest.header())?;
    w.write_record(["rank", "mode_key", "variant", "eigenvalue", "multiplicity_group"]).map_err(csv_err)?;
    for (rank, (mode, group)) in modes.iter().zip(&groups).enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            mode.key.to_string(),
            mode.key.variant.label(),
            num(mode.eigenvalue),
            (group + 1).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let tc = table_config(&args.table)?;
    let manifest = table_manifest("verify-assumptions", &tc)
        .param("alpha", args.alpha)
        .param("c_f", args.c_f)
        .param("c_f_inverse", args.c_f_inverse)
        .tolerance("tol", args.tol)
        .output("report", args.out.as_deref());
    if let Some(a) = args.alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {a}")));
        }
    }
    let table = load_or_build(args.table.cache_dir.as_deref(), &tc)?;
    let report = assess(
        &table,
        tc.cutoff,
        AssessOptions { alpha: args.alpha, c_f: args.c_f, c_f_inverse: args.c_f_inverse, tol: args.tol },
    )?;
    let mut doc = serde_json::to_value(&report)?;
    if let Value::Object(map) = &mut doc {
        map.insert(
            "manifest".into(),
            json!({ "tool": TOOL, "version": VERSION, "hash": manifest.hash(), "config": manifest.to_value() }),
        );
    }
    let mut out = sink(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    out.flush()?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn initial_field(args: &SimulateArgs, g: &GeometryDescriptor, table: &TriadTable) -> CliResult<SpectralField> {
    match args.u0.parse::<Preset>() {
        Ok(p) => Ok(preset_field(p, g, &table.basis, args.amplitude, args.seed)),
        Err(_) => read_field(&args.u0, g),
    }
}

fn read_field(path: &str, g: &GeometryDescriptor) -> CliResult<SpectralField> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open field '{path}': {e}")))?;
    read_field_csv(file, *g).map_err(|e| CliError::Usage(format!("bad field file '{path}': {e}")))
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let tc = table_config(&args.table)?;
    let gevrey = GevreyParams::new(args.s, args.sigma, args.alpha)?;
    let manifest = table_manifest("simulate", &tc)
        .param("nu", args.nu)
        .param("dt", args.dt)
        .param("tmax", args.tmax)
        .param("s", args.s)
        .param("sigma", args.sigma)
        .param("alpha", args.alpha)
        .param("u0", &args.u0)
        .param("h", &args.h)
        .param("amplitude", args.amplitude)
        .param("seed", args.seed)
        .param("stride", args.stride)
        .output("records", args.out.as_deref())
        .output("final_field", args.final_field.as_deref());
    let table = load_or_build(args.table.cache_dir.as_deref(), &tc)?;
    let g = tc.geometry;
    let forcing = match args.h.as_str() {
        "zero" => SpectralField::new(g),
        path => read_field(path, &g)?,
    };
    let config = SimConfig {
        nu: args.nu,
        forcing,
        u0: initial_field(args, &g, &table)?,
        dt: args.dt,
        t_max: args.tmax,
        gevrey,
        monitor_stride: args.stride,
    };
    config.validate()?;
    let out = run(&config, &table)?;

    let header = manifest.header();
    let mut w = csv_writer(args.out.as_deref(), &header)?;
    w.write_record(["t", "energy", "gevrey_norm", "fitted_radius", "n_active_modes"]).map_err(csv_err)?;
    for r in &out.records {
        w.write_record([
            num(r.t),
            num(r.energy),
            num(r.gevrey_norm),
            r.fitted_radius.map(num).unwrap_or_default(),
            r.n_active_modes.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    if let Some(path) = &args.final_field {
        write_field_csv(BufWriter::new(File::create(path)?), &out.final_field, Some(&header))?;
    }
    match out.termination {
        Termination::Completed => Ok(()),
        Termination::BlowUp { last_valid_t } => Err(CliError::BlowUp(last_valid_t)),
    }
}

pub fn couplings(args: &CouplingArgs) -> CliResult<()> {
    let tc = table_config(&args.table)?;
    let manifest = table_manifest("couplings", &tc).output("couplings", args.out.as_deref());
    let table = load_or_build(args.table.cache_dir.as_deref(), &tc)?;
    let g = tc.geometry;
    let basis = &table.basis;

    // (n, m, l) -> (closed, quad), in basis order
    let mut rows: BTreeMap<(usize, usize, usize), (Option<f64>, f64)> = BTreeMap::new();
    for e in &table.entries {
        rows.insert((e.n as usize, e.m as usize, e.l as usize), (None, e.coeff));
    }
    if g.kind == GeometryKind::Cylinder {
        let index: BTreeMap<ModeKey, usize> = basis.iter().enumerate().map(|(i, m)| (m.key, i)).collect();
        for n in 0..basis.len() {
            for m in n..basis.len() {
                let mut closed = vec![0.0; basis.len()];
                for (t, c) in cylinder_closed_form(&g, basis[n].key, basis[m].key)? {
                    if let Some(&l) = index.get(&t) {
                        closed[l] += c;
                    }
                }
                for (l, c) in closed.into_iter().enumerate() {
                    let row = rows.get_mut(&(n, m, l));
                    match row {
                        Some(r) => r.0 = Some(c),
                        None if c.abs() > tc.drop_tol => {
                            rows.insert((n, m, l), (Some(c), 0.0));
                        }
                        None => {}
                    }
                }
            }
        }
    }

    let mut w = csv_writer(args.out.as_deref(), &manifest.header())?;
    w.write_record(["n_key", "n_var", "m_key", "m_var", "l_key", "l_var", "coeff_closed", "coeff_quad", "abs_diff"])
        .map_err(csv_err)?;
    for ((n, m, l), (closed, quad)) in rows {
        let key = |i: usize| (basis[i].key.to_string(), basis[i].key.variant.label());
        let ((nk, nv), (mk, mv), (lk, lv)) = (key(n), key(m), key(l));
        let (closed_s, diff_s) = match closed {
            Some(c) => (num(c), num((c - quad).abs())),
            None => (String::new(), String::new()),
        };
        w.write_record([nk, nv, mk, mv, lk, lv, closed_s, num(quad), diff_s]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_query(line: &str) -> CliResult<[i32; 6]> {
    let vals: Vec<i32> = line
        .split_whitespace()
        .map(|t| t.parse::<i32>().map_err(|_| CliError::Usage(format!("bad integer '{t}' in '{line}'"))))
        .collect::<CliResult<_>>()?;
    vals.try_into().map_err(|_| CliError::Usage(format!("expected six integers, got '{line}'")))
}

pub fn wigner() -> CliResult<()> {
    let stdin = io::stdin();
    let mut out = BufWriter::new(io::stdout().lock());
    for line in stdin.lock().lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let [j1, j2, j3, m1, m2, m3] = parse_query(trimmed)?;
        let v = wigner3j(j1, j2, j3, m1, m2, m3)?;
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}
