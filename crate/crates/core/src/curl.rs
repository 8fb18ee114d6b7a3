//! Chart check that the intrinsic perpendicular gradient on the sphere is the
//! negative of the ambient curl of the normally extended function.

use crate::error::{Error, Result};

/// Chart point `(w1, w2)` with `w1^2 + w2^2 < 1/2`, mapped to
/// `(w1, w2, sqrt(1 - w1^2 - w2^2))` on the upper sphere.
pub type ChartPoint = [f64; 2];

/// How partial derivatives of the test function are obtained.
pub enum Partials<'a> {
    Analytic(&'a dyn Fn(ChartPoint) -> [f64; 2]),
    /// Central differences with the given step.
    FiniteDifference(f64),
}

fn in_chart(w: ChartPoint) -> bool {
    w.iter().all(|v| v.is_finite()) && w[0] * w[0] + w[1] * w[1] < 0.5
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `nabla_perp f` from the chart metric, as an ambient vector.
fn perp_gradient(f: &dyn Fn(ChartPoint) -> f64, partials: &Partials<'_>, w: ChartPoint) -> [f64; 3] {
    let [f1, f2] = match partials {
        Partials::Analytic(g) => g(w),
        Partials::FiniteDifference(h) => [
            (f([w[0] + h, w[1]]) - f([w[0] - h, w[1]])) / (2.0 * h),
            (f([w[0], w[1] + h]) - f([w[0], w[1] - h])) / (2.0 * h),
        ],
    };
    let phi0 = (1.0 - w[0] * w[0] - w[1] * w[1]).sqrt();
    // coordinate fields d/dw^i = e_i + (dPhi0/dw^i) e_3, scaled by 1/sqrt(gbar) = Phi0
    let dw1 = [1.0, 0.0, -w[0] / phi0];
    let dw2 = [0.0, 1.0, -w[1] / phi0];
    [0, 1, 2].map(|i| phi0 * (f1 * dw2[i] - f2 * dw1[i]))
}

/// `curl(f~ n~)` restricted to the sphere, with `f~(x) = f(x1/|x|, x2/|x|)`.
fn ambient_curl(f: &dyn Fn(ChartPoint) -> f64, partials: &Partials<'_>, w: ChartPoint) -> [f64; 3] {
    let x = [w[0], w[1], (1.0 - w[0] * w[0] - w[1] * w[1]).sqrt()];
    let grad = match partials {
        Partials::Analytic(g) => {
            let [f1, f2] = g(w);
            [0, 1, 2].map(|j| {
                let e1 = if j == 0 { 1.0 } else { 0.0 };
                let e2 = if j == 1 { 1.0 } else { 0.0 };
                f1 * (e1 - x[0] * x[j]) + f2 * (e2 - x[1] * x[j])
            })
        }
        Partials::FiniteDifference(h) => {
            let ext = |p: [f64; 3]| {
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                f([p[0] / r, p[1] / r])
            };
            [0, 1, 2].map(|j| {
                let mut hi = x;
                let mut lo = x;
                hi[j] += h;
                lo[j] -= h;
                (ext(hi) - ext(lo)) / (2.0 * h)
            })
        }
    };
    // curl(f~ x) = grad f~ x x since curl x = 0
    cross(grad, x)
}

/// Largest `|nabla_perp f + Curl f|` over the sample points.
pub fn curl_equivalence_residual(
    f: &dyn Fn(ChartPoint) -> f64,
    partials: Partials<'_>,
    points: &[ChartPoint],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &w in points {
        if !in_chart(w) {
            return Err(Error::OutsideDomain(w.to_vec()));
        }
        let a = perp_gradient(f, &partials, w);
        let b = ambient_curl(f, &partials, w);
        let r = ((a[0] + b[0]).powi(2) + (a[1] + b[1]).powi(2) + (a[2] + b[2]).powi(2)).sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}
