//! `gevlab`: spectra, triad couplings, assumption checks and Gevrey-monitored
//! Galerkin runs from the command line.

// negated float comparisons are how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cache;
mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gevlab_core::coupling::DEFAULT_DROP_TOL;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gevlab", version, about = "Spectral Galerkin lab for Gevrey-class Navier-Stokes solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List eigenmodes up to a cutoff.
    Spectrum(SpectrumArgs),
    /// Measure structural constants and compare with the claimed values.
    #[command(name = "verify-assumptions", alias = "verify")]
    Verify(VerifyArgs),
    /// Integrate the truncated system and record Gevrey diagnostics.
    Simulate(SimulateArgs),
    /// Dump coupling coefficients, with the closed form where one exists.
    Couplings(CouplingArgs),
    /// Evaluate Wigner 3j symbols for `j1 j2 j3 m1 m2 m3` lines on stdin.
    Wigner,
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// torus2, torus3, rect, cyl, sphere or hemisphere
    #[arg(long)]
    pub geometry: String,
    /// First side length (rect default pi, cyl default 2 pi).
    #[arg(long)]
    pub a: Option<f64>,
    /// Second side length (default pi).
    #[arg(long)]
    pub b: Option<f64>,
    /// Largest eigenvalue kept.
    #[arg(long)]
    pub cutoff: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Keep only the first N modes in serialization order.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Coefficients at or below this magnitude are dropped from the table.
    #[arg(long, default_value_t = DEFAULT_DROP_TOL)]
    pub drop_tol: f64,
    /// Directory for cached triad tables.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Forward interaction bound (and the constant in front of lambda^zeta).
    #[arg(long = "c-f")]
    pub c_f: Option<f64>,
    /// Inverse interaction bound, when it differs from the forward one.
    #[arg(long = "c-f-inverse")]
    pub c_f_inverse: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long)]
    pub nu: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub tmax: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Preset (lowmode, analytic-decay, random-seeded) or a field CSV path.
    #[arg(long)]
    pub u0: String,
    /// `zero` or a field CSV path.
    #[arg(long, default_value = "zero")]
    pub h: String,
    /// Scale applied to preset initial data.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Steps between records.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the final spectral field.
    #[arg(long)]
    pub final_field: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Couplings(a) => commands::couplings(&a),
        Command::Wigner => commands::wigner(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::VerifyFailed) {
                eprintln!("gevlab: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
