//! Spectral Galerkin lab for Navier-Stokes on tori, rectangles, cylinders and
//! (hemi)spheres: explicit eigenbases, triad coupling tables, measured
//! structural constants and Gevrey-norm monitored time integration.

// negated float comparisons are how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumptions;
pub mod coupling;
pub mod curl;
pub mod error;
pub mod flat;
pub mod quadrature;
pub mod sim;
pub mod spectra;
pub mod sphere;
pub mod wigner;

pub use error::{Error, Result};
pub use spectra::{GeometryDescriptor, GeometryKind, ModeKey, SpectralField, SpectralMode, Variant};

/// All modes of any geometry with eigenvalue at most `cutoff`, in serialization order.
pub fn spectrum(g: &GeometryDescriptor, cutoff: f64) -> Result<Vec<SpectralMode>> {
    if g.kind.is_flat() {
        flat::enumerate_modes(g, cutoff)
    } else {
        sphere::sphere_modes(g, cutoff)
    }
}
