use std::f64::consts::PI;
use std::sync::OnceLock;

use gevlab_core::assumptions::{
    lambda_s_constant, power_inequality_margin, triangle_k, triangle_slack, verify_triad_inequality, Quadratic,
};
use gevlab_core::coupling::{selection_allows, TriadTable, DEFAULT_DROP_TOL};
use gevlab_core::curl::{curl_equivalence_residual, Partials};
use gevlab_core::quadrature::gauss_legendre;
use gevlab_core::sim::GalerkinSystem;
use gevlab_core::spectra::{gevrey_norm, read_field_csv, write_field_csv, GevreyParams};
use gevlab_core::wigner::wigner3j;
use gevlab_core::{spectrum, GeometryDescriptor, ModeKey, SpectralField};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn torus_table() -> &'static TriadTable {
    static T: OnceLock<TriadTable> = OnceLock::new();
    T.get_or_init(|| TriadTable::build(&GeometryDescriptor::torus2(), 20.0, DEFAULT_DROP_TOL).unwrap())
}

fn rect_table() -> &'static TriadTable {
    static T: OnceLock<TriadTable> = OnceLock::new();
    T.get_or_init(|| {
        TriadTable::build(&GeometryDescriptor::rectangle(PI, 2.0).unwrap(), 30.0, DEFAULT_DROP_TOL).unwrap()
    })
}

fn sphere_tables() -> &'static (TriadTable, TriadTable) {
    static T: OnceLock<(TriadTable, TriadTable)> = OnceLock::new();
    T.get_or_init(|| {
        let s = TriadTable::build(&GeometryDescriptor::sphere(), 20.0, 0.0).unwrap();
        let h = TriadTable::build(&GeometryDescriptor::hemisphere(), 20.0, 0.0).unwrap();
        (s, h)
    })
}

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn energy_flux(table: &TriadTable, u: &[f64]) -> (f64, f64) {
    let sys = GalerkinSystem::new(table);
    let mut nl = vec![0.0; sys.len()];
    sys.nonlinear(u, &mut nl);
    let flux: f64 = u.iter().zip(&nl).map(|(a, b)| a * b).sum();
    let scale: f64 = u.iter().zip(&nl).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1e-300);
    (flux, scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wigner_column_symmetry(j1 in 0i32..8, j2 in 0i32..8, j3 in 0i32..8, m1 in -7i32..8, m2 in -7i32..8) {
        let m3 = -m1 - m2;
        let w = wigner3j(j1, j2, j3, m1, m2, m3).unwrap();
        let cyclic = wigner3j(j2, j3, j1, m2, m3, m1).unwrap();
        let swapped = wigner3j(j2, j1, j3, m2, m1, m3).unwrap();
        let flipped = wigner3j(j1, j2, j3, -m1, -m2, -m3).unwrap();
        let sign = if (j1 + j2 + j3) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((w - cyclic).abs() < 1e-13);
        prop_assert!((w - sign * swapped).abs() < 1e-13);
        prop_assert!((w - sign * flipped).abs() < 1e-13);
    }

    #[test]
    fn legendre_triple_integral_matches_wigner(a in 0usize..7, b in 0usize..7, c in 0usize..7) {
        let rule = gauss_legendre(12);
        let quad: f64 = rule.nodes.iter().zip(&rule.weights)
            .map(|(&x, &w)| w * legendre(a, x) * legendre(b, x) * legendre(c, x))
            .sum();
        let w = wigner3j(a as i32, b as i32, c as i32, 0, 0, 0).unwrap();
        prop_assert!((quad - 2.0 * w * w).abs() < 1e-13, "quad {} vs {}", quad, 2.0 * w * w);
    }

    #[test]
    fn power_inequality_two_sided(a in 0.0f64..1e3, b in 0.0f64..1e3, s in 0.01f64..5.0) {
        let (lo, up) = power_inequality_margin(a, b, s).unwrap();
        prop_assert!(lo >= -1e-12 && up >= -1e-12, "a={} b={} s={} -> {} {}", a, b, s, lo, up);
    }

    #[test]
    fn triangle_bound_for_positive_definite(
        entries in proptest::collection::vec(-1.0f64..1.0, 4),
        g in proptest::collection::vec(-3.0f64..3.0, 2),
        c in -2.0f64..2.0,
        x in proptest::collection::vec(-20.0f64..20.0, 2),
        y in proptest::collection::vec(-20.0f64..20.0, 2),
    ) {
        let m = DMatrix::from_row_slice(2, 2, &entries);
        let h = &m * m.transpose() + DMatrix::identity(2, 2) * 0.05;
        let p = Quadratic::new(h, DVector::from_vec(g), c).unwrap();
        let k = triangle_k(&p).unwrap().k;
        let slack = triangle_slack(&p, k, &DVector::from_vec(x), &DVector::from_vec(y));
        prop_assert!(slack >= -1e-9, "slack {}", slack);
    }

    #[test]
    fn lambda_s_bound_on_torus_triads(s in 0.1f64..3.0, idx in any::<proptest::sample::Index>()) {
        let t = torus_table();
        let beta = verify_triad_inequality(t, 0.5).unwrap().beta_required;
        let c = lambda_s_constant(s, 0.5, beta, t.basis[0].eigenvalue).unwrap();
        let e = t.entries[idx.index(t.entries.len())];
        let lam = |i: u32| t.basis[i as usize].eigenvalue;
        prop_assert!(lam(e.l).powf(s) <= c * (lam(e.n).powf(s) + lam(e.m).powf(s)) * (1.0 + 1e-12));
    }

    #[test]
    fn nonlinear_term_conserves_energy(u in proptest::collection::vec(-1.0f64..1.0, 64)) {
        for t in [torus_table(), rect_table(), &sphere_tables().0] {
            let v: Vec<f64> = u.iter().cycle().take(t.basis.len()).copied().collect();
            let (flux, scale) = energy_flux(t, &v);
            prop_assert!(flux.abs() <= 1e-12 * scale.max(1.0), "flux {} scale {}", flux, scale);
        }
    }

    #[test]
    fn curl_identity_at_random_chart_points(r in 0.0f64..0.7, th in 0.0f64..(2.0 * PI), c in proptest::collection::vec(-2.0f64..2.0, 4)) {
        let w = [r * th.cos(), r * th.sin()];
        let f = |p: [f64; 2]| c[0] * p[0] + c[1] * p[1] * p[1] + c[2] * p[0] * p[1] + c[3] * p[0].powi(3);
        let g = |p: [f64; 2]| [c[0] + c[2] * p[1] + 3.0 * c[3] * p[0] * p[0], 2.0 * c[1] * p[1] + c[2] * p[0]];
        let res = curl_equivalence_residual(&f, Partials::Analytic(&g), &[w]).unwrap();
        prop_assert!(res < 1e-12);
    }

    #[test]
    fn gevrey_norm_grows_with_sigma(coeffs in proptest::collection::vec(-1.0f64..1.0, 1..20), s1 in 0.0f64..1.0, ds in 0.0f64..1.0) {
        let g = GeometryDescriptor::torus2();
        let mut f = SpectralField::new(g);
        for (mode, c) in spectrum(&g, 20.0).unwrap().into_iter().zip(&coeffs) {
            f.set_mode(mode, *c);
        }
        let low = gevrey_norm(&f, &GevreyParams::new(0.5, s1, 0.5).unwrap()).unwrap();
        let high = gevrey_norm(&f, &GevreyParams::new(0.5, s1 + ds, 0.5).unwrap()).unwrap();
        prop_assert!(high >= low);
    }

    #[test]
    fn field_csv_round_trip(coeffs in proptest::collection::vec(-1e3f64..1e3, 1..30)) {
        let g = GeometryDescriptor::cylinder(2.0 * PI, PI).unwrap();
        let mut f = SpectralField::new(g);
        for (mode, c) in spectrum(&g, 30.0).unwrap().into_iter().zip(&coeffs) {
            f.set_mode(mode, *c);
        }
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f, Some("# header")).unwrap();
        let back = read_field_csv(buf.as_slice(), g).unwrap();
        prop_assert_eq!(back, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hemisphere_couplings_scale_by_sqrt2(idx in any::<proptest::sample::Index>()) {
        let (s, h) = sphere_tables();
        let e = h.entries[idx.index(h.entries.len())];
        let key = |i: u32| h.basis[i as usize].key;
        let full = s.coefficient(&key(e.n), &key(e.m), &key(e.l));
        prop_assert!((e.coeff - 2f64.sqrt() * full).abs() < 1e-10, "{} vs {}", e.coeff, full);
    }

    #[test]
    fn torus_selection_rule_is_sound(i in any::<proptest::sample::Index>(), j in any::<proptest::sample::Index>(), k in any::<proptest::sample::Index>()) {
        let t = torus_table();
        let pick = |x: &proptest::sample::Index| t.basis[x.index(t.basis.len())].key;
        let (n, m, l) = (pick(&i), pick(&j), pick(&k));
        if !selection_allows(&t.geometry, &n, &m, &l) {
            prop_assert_eq!(t.coefficient(&n, &m, &l), 0.0);
        }
    }
}

#[test]
fn table_build_is_deterministic() {
    let g = GeometryDescriptor::cylinder(2.0 * PI, PI).unwrap();
    let a = TriadTable::build(&g, 25.0, DEFAULT_DROP_TOL).unwrap();
    let b = TriadTable::build(&g, 25.0, DEFAULT_DROP_TOL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mode_key_text_round_trip() {
    for key in [ModeKey::torus2(3, -2, false), ModeKey::varsigma(0, 4), ModeKey::sphere(5, -3)] {
        let back = ModeKey::parse(&key.to_string(), &key.variant.label()).unwrap();
        assert_eq!(back, key);
    }
}
