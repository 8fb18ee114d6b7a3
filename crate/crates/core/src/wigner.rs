//! Wigner 3j symbols for integer angular momenta.

use crate::error::{Error, Result};

/// Largest supported angular momentum; factorials up to `3 * MAX_J + 1` stay
/// well inside f64 precision for the Racah sum.
pub const MAX_J: i32 = 20;

fn factorial(n: i32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// True when the selection conditions hold: `m1 + m2 + m3 = 0`, `|m_i| <= j_i`,
/// the triangle inequality, and an even `j1 + j2 + j3` when all `m_i` vanish.
pub fn wigner_selection(j: [i32; 3], m: [i32; 3]) -> bool {
    if j.iter().any(|&x| x < 0) {
        return false;
    }
    if m[0] + m[1] + m[2] != 0 {
        return false;
    }
    if (0..3).any(|i| m[i].abs() > j[i]) {
        return false;
    }
    if j[2] < (j[0] - j[1]).abs() || j[2] > j[0] + j[1] {
        return false;
    }
    if m.iter().all(|&x| x == 0) && (j[0] + j[1] + j[2]) % 2 == 1 {
        return false;
    }
    true
}

/// `(j1 j2 j3; m1 m2 m3)` via the Racah single-sum formula. Returns exactly 0.0
/// when a selection condition fails.
pub fn wigner3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> Result<f64> {
    if [j1, j2, j3].iter().any(|&x| x > MAX_J) {
        return Err(Error::InvalidParameter(format!(
            "angular momentum above supported maximum {MAX_J}: ({j1}, {j2}, {j3})"
        )));
    }
    if !wigner_selection([j1, j2, j3], [m1, m2, m3]) {
        return Ok(0.0);
    }
    let delta = (factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3)
        / factorial(j1 + j2 + j3 + 1))
    .sqrt();
    let pre = (factorial(j1 + m1)
        * factorial(j1 - m1)
        * factorial(j2 + m2)
        * factorial(j2 - m2)
        * factorial(j3 + m3)
        * factorial(j3 - m3))
    .sqrt();
    let kmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let kmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(j1 + j2 - j3 - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j3 - j2 + m1 + k)
            * factorial(j3 - j1 - m2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / den;
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(phase * delta * pre * sum)
}
