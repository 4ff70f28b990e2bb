//! Dense polynomial root finding: simultaneous Aberth–Ehrlich iteration with
//! Gershgorin-style initialization and a residual-freeze stopping rule.
//!
//! Coefficients are monic and descending: `[1, c_1, ..., c_m]` represents
//! `z^m + c_1 z^{m-1} + ... + c_m`. Roots at the origin are stripped exactly
//! before iterating, degrees one and two use closed forms, and the remaining
//! polynomial is rescaled by its root-radius estimate so widely spread root
//! magnitudes (Wilkinson-style coefficient growth) stay conditioned.

use crate::{Error, Result, C64};

pub const MAX_ITERATIONS: usize = 400;

/// Horner evaluation together with the running magnitude sum
/// `sum_j |c_j| |z|^{m-j}` used for backward-error stopping.
pub fn eval_with_error_scale(coeffs: &[C64], z: C64) -> (C64, f64) {
    let az = z.norm();
    let mut v = C64::new(0.0, 0.0);
    let mut scale = 0.0f64;
    for &c in coeffs {
        v = v * z + c;
        scale = scale * az + c.norm();
    }
    (v, scale)
}

/// Coefficients of the derivative, still descending.
fn derivative(coeffs: &[C64]) -> Vec<C64> {
    let m = coeffs.len() - 1;
    (0..m).map(|i| coeffs[i] * (m - i) as f64).collect()
}

/// Residual `|p(z)|` in units of the evaluation rounding floor
/// `eps * sum |c_j||z|^{m-j}`. Converged roots sit at O(m).
pub fn backward_residual(coeffs: &[C64], z: C64) -> f64 {
    let (v, scale) = eval_with_error_scale(coeffs, z);
    v.norm() / (f64::EPSILON * scale + f64::MIN_POSITIVE)
}

/// All `m` roots of the monic polynomial, in no particular order.
pub fn find_roots_monic(coeffs: &[C64]) -> Result<Vec<C64>> {
    if coeffs.is_empty() || (coeffs[0] - C64::new(1.0, 0.0)).norm() > 1e-12 {
        return Err(Error::Numerical(
            "root finder expects a monic descending coefficient list".into(),
        ));
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numerical("polynomial coefficients are not finite".into()));
    }
    // Strip exact zeros at the origin.
    let mut work: Vec<C64> = coeffs.to_vec();
    let mut origin_roots = 0usize;
    while work.len() > 1 && work.last().unwrap().norm_sqr() == 0.0 {
        work.pop();
        origin_roots += 1;
    }
    let mut roots = closed_or_iterated(&work)?;
    roots.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(origin_roots));
    Ok(roots)
}

fn closed_or_iterated(coeffs: &[C64]) -> Result<Vec<C64>> {
    match coeffs.len() - 1 {
        0 => Ok(Vec::new()),
        1 => Ok(vec![-coeffs[1]]),
        2 => Ok(quadratic(coeffs[1], coeffs[2])),
        _ => aberth(coeffs),
    }
}

/// Roots of `z^2 + b z + c` with the cancellation-free split: the root with
/// the larger magnitude comes from the stable sign choice, the other from
/// the product `c`.
fn quadratic(b: C64, c: C64) -> Vec<C64> {
    let disc = b * b - c * 4.0;
    let mut s = disc.sqrt();
    // Pick the sqrt branch aligned with -b so that (-b - s)... use the
    // classic rule: make b and s not cancel in (b + s).
    if (b * s.conj()).re < 0.0 {
        s = -s;
    }
    let q = (b + s) * -0.5;
    if q.norm_sqr() == 0.0 {
        // b = 0 and disc = 0 means c = 0 too.
        return vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    }
    vec![q, c / q]
}

/// Root-radius scale `max_j |c_j|^{1/j}` in log space; 0 when all lower
/// coefficients vanish.
fn root_radius_scale(coeffs: &[C64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (j, c) in coeffs.iter().enumerate().skip(1) {
        let a = c.norm();
        if a > 0.0 {
            best = best.max(a.ln() / j as f64);
        }
    }
    if best.is_finite() {
        best.exp()
    } else {
        0.0
    }
}

fn aberth(coeffs: &[C64]) -> Result<Vec<C64>> {
    let m = coeffs.len() - 1;
    let rho = root_radius_scale(coeffs);
    if rho == 0.0 {
        // z^m with no lower terms; the caller stripped origin zeros already,
        // so this only happens for exactly-zero tails that survived rounding.
        return Ok(vec![C64::new(0.0, 0.0); m]);
    }
    // Scale z = rho * w so the scaled polynomial has root radius ~1.
    let mut scaled = Vec::with_capacity(m + 1);
    let log_rho = rho.ln();
    for (j, c) in coeffs.iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            scaled.push(C64::new(0.0, 0.0));
        } else {
            // c_j / rho^j in log-magnitude form to dodge overflow.
            let mag = (c.norm().ln() - j as f64 * log_rho).exp();
            scaled.push(c / c.norm() * mag);
        }
    }
    let dcoeffs = derivative(&scaled);

    // Initial guesses on a Gershgorin-style circle with an angular offset so
    // real-coefficient symmetry cannot stall the iteration.
    let radius = 1.0 + scaled.iter().skip(1).map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..m)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64 + 0.4;
            C64::from_polar(radius, th)
        })
        .collect();
    let mut frozen = vec![false; m];
    let stop_factor = 4.0 * m as f64 * f64::EPSILON;

    let mut iterations = 0usize;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut all_frozen = true;
        for k in 0..m {
            if frozen[k] {
                continue;
            }
            let (p, scale) = eval_with_error_scale(&scaled, z[k]);
            if p.norm() <= stop_factor * scale {
                frozen[k] = true;
                continue;
            }
            all_frozen = false;
            let (dp, _) = eval_with_error_scale(&dcoeffs, z[k]);
            let newton = if dp.norm_sqr() > 0.0 { p / dp } else { C64::new(1e-8, 1e-8) };
            let mut sum = C64::new(0.0, 0.0);
            for j in 0..m {
                if j != k {
                    let d = z[k] - z[j];
                    if d.norm_sqr() > 0.0 {
                        sum += d.inv();
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - newton * sum;
            let step = if denom.norm_sqr() > 0.0 { newton / denom } else { newton };
            z[k] -= step;
        }
        if all_frozen {
            break;
        }
    }

    let worst = z
        .iter()
        .map(|&w| {
            let (p, scale) = eval_with_error_scale(&scaled, w);
            p.norm() / (f64::EPSILON * scale + f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    // Residual units: multiples of the rounding floor. The freeze threshold
    // is 4m; allow some slack before declaring failure.
    if worst > 1e6 * (m as f64) {
        return Err(Error::RootNonConvergence { worst_residual: worst, iterations });
    }

    // Unscale and apply one guarded Newton polish on the original
    // coefficients (kept only when it reduces the residual).
    let dorig = derivative(coeffs);
    let polished: Vec<C64> = z
        .iter()
        .map(|&w| {
            let zk = w * rho;
            let (p, _) = eval_with_error_scale(coeffs, zk);
            let (dp, _) = eval_with_error_scale(&dorig, zk);
            if dp.norm_sqr() == 0.0 {
                return zk;
            }
            let cand = zk - p / dp;
            let (pc, _) = eval_with_error_scale(coeffs, cand);
            if pc.norm() < p.norm() {
                cand
            } else {
                zk
            }
        })
        .collect();
    Ok(polished)
}
