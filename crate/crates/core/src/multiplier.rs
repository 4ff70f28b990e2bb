//! The exact frequency-domain propagator: fundamental solutions `E_j(t, xi)`
//! of the characteristic ODE in time, their derivatives, and the spectral
//! (Vandermonde) decomposition into root modes.
//!
//! Conventions: modes evolve as `e^{i tau t}`, so the time ODE obtained by
//! substituting `tau -> -i d/dt` has the monic form
//! `u^(m) + sum_j i^j p_j(xi) u^(m-j) = 0`, whose companion matrix has
//! eigenvalues `i tau_k`. `E_j` is the solution with
//! `d^l/dt^l E_j(0) = delta_{lj}`; every propagator value is a matrix
//! exponential entry, with no root-separation assumption anywhere on that
//! path. The Vandermonde route expresses the same `E_j` as
//! `sum_k B_j^k e^{i tau_k t}` and is only valid away from coinciding roots;
//! keeping both routes independent is what makes the near-multiplicity
//! bound check meaningful.

use crate::linalg::{expm, fit_line, CMat};
use crate::roots::aberth;
use crate::{bracket, Error, Result, C64, I};

/// Normalized-discriminant floor below which Vandermonde coefficients are
/// flagged invalid (denominators lose too much to cancellation).
pub const VANDERMONDE_DISC_FLOOR: f64 = 1e-6;

/// Companion matrix of the time ODE for the monic tau-coefficient list
/// `[1, p_1(xi), ..., p_m(xi)]`. Eigenvalues are `i tau_k(xi)`.
pub fn companion_matrix(tau_coeffs: &[C64]) -> CMat {
    let m = tau_coeffs.len() - 1;
    assert!(m >= 1, "order-zero operator has no companion matrix");
    let mut c = CMat::zeros(m);
    for r in 0..m - 1 {
        c.set(r, r + 1, C64::new(1.0, 0.0));
    }
    for j in 1..=m {
        // q_j = i^j p_j multiplies u^(m-j); companion bottom row holds -q_j
        // under the state ordering (u, u', ..., u^(m-1)).
        let q = I.powu(j as u32) * tau_coeffs[j];
        c.set(m - 1, m - j, -q);
    }
    c
}

/// `exp(t C)`: the full propagator state matrix. Entry `(0, j)` is
/// `E_j(t)`; entry `(r, j)` is the r-th time derivative of `E_j` for
/// `r < m`.
pub fn propagator_at(tau_coeffs: &[C64], t: f64) -> Result<CMat> {
    let c = companion_matrix(tau_coeffs);
    let p = expm(&c.scale(C64::new(t, 0.0)));
    if !p.is_finite() {
        return Err(overflow_error(tau_coeffs, t));
    }
    Ok(p)
}

fn overflow_error(tau_coeffs: &[C64], t: f64) -> Error {
    // Identify the most unstable branch for the report.
    if let Ok(roots) = aberth::find_roots_monic(tau_coeffs) {
        if let Some((branch, tau)) = roots
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.im.partial_cmp(&b.1.im).unwrap())
        {
            return Error::PropagatorOverflow { branch, im_tau: tau.im, t };
        }
    }
    Error::PropagatorOverflow { branch: 0, im_tau: f64::NAN, t }
}

/// Time series of propagator rows `d^r/dt^r E_j(t)` for each requested
/// derivative order, evaluated by stepping `exp(dt C)` cumulatively through
/// the (ascending) time list rather than re-exponentiating from zero.
#[derive(Debug, Clone)]
pub struct PropagatorSeries {
    pub m: usize,
    pub times: Vec<f64>,
    pub derivatives: Vec<u32>,
    /// `values[(ti * derivatives.len() + ri) * m + j]`.
    pub values: Vec<C64>,
}

impl PropagatorSeries {
    pub fn row(&self, time_index: usize, deriv_index: usize) -> &[C64] {
        let base = (time_index * self.derivatives.len() + deriv_index) * self.m;
        &self.values[base..base + self.m]
    }
}

pub fn propagator_series(
    tau_coeffs: &[C64],
    times: &[f64],
    derivatives: &[u32],
) -> Result<PropagatorSeries> {
    let m = tau_coeffs.len() - 1;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().map_or(false, |&t| t < 0.0) {
        return Err(Error::Numerical("propagator times must be ascending and nonnegative".into()));
    }
    let c = companion_matrix(tau_coeffs);
    // Row vectors e_0^T C^r; exact unit rows for r < m by the companion
    // shift structure, genuine products beyond.
    let max_r = derivatives.iter().cloned().max().unwrap_or(0);
    let mut lead_rows: Vec<Vec<C64>> = Vec::with_capacity(max_r as usize + 1);
    let mut row = vec![C64::new(0.0, 0.0); m];
    row[0] = C64::new(1.0, 0.0);
    lead_rows.push(row.clone());
    for _ in 0..max_r {
        let mut next = vec![C64::new(0.0, 0.0); m];
        for (k, &rv) in row.iter().enumerate() {
            if rv.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..m {
                next[j] += rv * c.get(k, j);
            }
        }
        lead_rows.push(next.clone());
        row = next;
    }

    let mut values = Vec::with_capacity(times.len() * derivatives.len() * m);
    let mut state = CMat::identity(m);
    let mut prev_t = 0.0f64;
    for &t in times {
        let dt = t - prev_t;
        if dt > 0.0 {
            state = expm(&c.scale(C64::new(dt, 0.0))).matmul(&state);
        }
        prev_t = t;
        if !state.is_finite() {
            return Err(overflow_error(tau_coeffs, t));
        }
        for &r in derivatives {
            let lead = &lead_rows[r as usize];
            for j in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &lv) in lead.iter().enumerate() {
                    if lv.norm_sqr() != 0.0 {
                        acc += lv * state.get(k, j);
                    }
                }
                values.push(acc);
            }
        }
    }
    Ok(PropagatorSeries { m, times: times.to_vec(), derivatives: derivatives.to_vec(), values })
}

/// Spectral coefficients `B_j^k` with `E_j(t) = sum_k B_j^k e^{i tau_k t}`:
/// the inverse of the Vandermonde matrix in the ODE roots `i tau_k`.
#[derive(Debug, Clone)]
pub struct VandermondeCoeffs {
    pub m: usize,
    /// `b[k * m + j] = B_j^k`.
    pub b: Vec<C64>,
    /// False when the normalized discriminant sits below
    /// [`VANDERMONDE_DISC_FLOOR`]; the coefficients are still returned but
    /// cancellation makes them unreliable.
    pub valid: bool,
}

impl VandermondeCoeffs {
    pub fn coeff(&self, k: usize, j: usize) -> C64 {
        self.b[k * self.m + j]
    }

    /// Reconstruct `d^r/dt^r E_j(t)` from the modes.
    pub fn evaluate(&self, roots: &[C64], t: f64, r: u32, j: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &tau) in roots.iter().enumerate() {
            let lambda = I * tau;
            acc += self.coeff(k, j) * lambda.powu(r) * (lambda * t).exp();
        }
        acc
    }
}

/// Build the mode coefficients from the characteristic roots at one
/// frequency. `xi` is only used for the validity normalization.
pub fn vandermonde_at(tau_coeffs: &[C64], roots: &[C64], xi: &[f64]) -> VandermondeCoeffs {
    let m = roots.len();
    assert_eq!(tau_coeffs.len(), m + 1);
    let mut b = vec![C64::new(0.0, 0.0); m * m];
    for k in 0..m {
        // Coefficients of prod_{l != k} (x - i tau_l), descending.
        let mut num = vec![C64::new(1.0, 0.0)];
        for (l, &tau) in roots.iter().enumerate() {
            if l == k {
                continue;
            }
            let lam = I * tau;
            let mut next = vec![C64::new(0.0, 0.0); num.len() + 1];
            for (idx, &a) in num.iter().enumerate() {
                next[idx] += a;
                next[idx + 1] -= a * lam;
            }
            num = next;
        }
        let lam_k = I * roots[k];
        let mut denom = C64::new(1.0, 0.0);
        for (l, &tau) in roots.iter().enumerate() {
            if l != k {
                denom *= lam_k - I * tau;
            }
        }
        if denom.norm_sqr() == 0.0 {
            // Exactly coinciding roots: leave the row zero; `valid` below
            // will be false.
            continue;
        }
        // B_j^k = [x^j] num / denom; num is descending of degree m-1.
        for j in 0..m {
            b[k * m + j] = num[m - 1 - j] / denom;
        }
    }
    let valid = crate::roots::normalized_discriminant(tau_coeffs, xi) >= VANDERMONDE_DISC_FLOOR;
    VandermondeCoeffs { m, b, valid }
}

/// Empirical check that the partial mode sum over a coinciding (or nearly
/// coinciding) root group stays within its `<t>^{L-1} e^{-delta t}`
/// envelope. The group sum is computed as the full propagator minus the
/// *separated* outside modes, so no ill-conditioned coefficient is ever
/// evaluated inside the group.
#[derive(Debug, Clone)]
pub struct GroupBoundCheck {
    /// Largest observed envelope ratio `|partial| / (<t>^{L-1} e^{-dt})`.
    pub c_fit: f64,
    /// Log-log slope of `|partial| e^{delta t}` against `<t>`; compare with
    /// `L - 1`.
    pub growth_slope: f64,
    /// `growth_slope - (L - 1)`: positive values mean the envelope is
    /// exceeded asymptotically.
    pub envelope_slope: f64,
    pub delta: f64,
    pub pass: bool,
}

pub fn multiplicity_bound_check(
    tau_coeffs: &[C64],
    roots: &[C64],
    group: &[bool],
    l_coinciding: usize,
    times: &[f64],
) -> Result<GroupBoundCheck> {
    let m = roots.len();
    assert_eq!(group.len(), m);
    if times.len() < 3 {
        return Err(Error::DegenerateFit("need at least 3 times for the bound check".into()));
    }
    let delta = roots
        .iter()
        .zip(group)
        .filter(|(_, &g)| g)
        .map(|(tau, _)| tau.im)
        .fold(f64::INFINITY, f64::min);
    if !delta.is_finite() {
        return Err(Error::Numerical("bound check called with an empty group".into()));
    }
    // Outside-mode coefficients: same inverse-Vandermonde rows, but their
    // denominators only involve gaps to *other* roots, which include the
    // well-separated ones; near-coinciding in-group roots do make the
    // outside denominators small only if an outside root is itself close to
    // the group, which the caller's grouping already rules out.
    let vdm = vandermonde_at(tau_coeffs, roots, &[0.0]);
    let series = propagator_series(tau_coeffs, times, &[0])?;
    let mut lx = Vec::with_capacity(times.len());
    let mut ly = Vec::with_capacity(times.len());
    let mut c_fit = 0.0f64;
    for (ti, &t) in times.iter().enumerate() {
        let full = series.row(ti, 0);
        let mut worst = 0.0f64;
        for j in 0..m {
            let mut outside = C64::new(0.0, 0.0);
            for k in 0..m {
                if !group[k] {
                    let lam = I * roots[k];
                    outside += vdm.coeff(k, j) * (lam * t).exp();
                }
            }
            worst = worst.max((full[j] - outside).norm());
        }
        let envelope = bracket(t).powi(l_coinciding as i32 - 1) * (-delta * t).exp();
        c_fit = c_fit.max(worst / envelope);
        if worst > 0.0 {
            lx.push(bracket(t).ln());
            ly.push(worst.ln() + delta * t);
        }
    }
    if lx.len() < 3 {
        return Err(Error::DegenerateFit("partial mode sum vanished at almost all times".into()));
    }
    let (_, growth_slope, _, _) = fit_line(&lx, &ly)?;
    let envelope_slope = growth_slope - (l_coinciding as f64 - 1.0);
    let pass = c_fit.is_finite() && envelope_slope <= 0.1;
    Ok(GroupBoundCheck { c_fit, growth_slope, envelope_slope, delta, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{MultiIndex, OperatorSymbol, SparsePoly};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dissipative_wave() -> OperatorSymbol {
        let p1 = SparsePoly::constant(1, c(0.0, -1.0));
        let mut p2 = SparsePoly::zero(1);
        p2.add_term(MultiIndex(vec![2]), c(-1.0, 0.0));
        OperatorSymbol::new(1, 2, vec![p1, p2]).unwrap()
    }

    #[test]
    fn companion_eigenvalues_are_i_tau() {
        let sym = dissipative_wave();
        let coeffs = sym.tau_poly_at(&[0.3]);
        let comp = companion_matrix(&coeffs);
        let roots = crate::roots::aberth::find_roots_monic(&coeffs).unwrap();
        for &tau in &roots {
            // det(C - i tau I) must vanish.
            let mut shifted = comp.clone();
            for i in 0..comp.n {
                shifted.set(i, i, shifted.get(i, i) - I * tau);
            }
            assert!(shifted.det().norm() < 1e-12, "i*tau is not an eigenvalue");
        }
    }

    #[test]
    fn propagator_satisfies_initial_conditions() {
        let sym = dissipative_wave();
        let coeffs = sym.tau_poly_at(&[0.7]);
        let series = propagator_series(&coeffs, &[0.0, 0.5], &[0, 1]).unwrap();
        // At t = 0: d^r E_j = delta_{rj}.
        for r in 0..2usize {
            let row = series.row(0, r);
            for j in 0..2 {
                let expect = if r == j { 1.0 } else { 0.0 };
                assert!((row[j] - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn cumulative_stepping_matches_direct_exponentials() {
        let sym = dissipative_wave();
        for xi in [0.1, 0.45, 0.5, 0.55, 2.0] {
            let coeffs = sym.tau_poly_at(&[xi]);
            let times = [0.3, 1.0, 2.5, 7.0, 19.0];
            let series = propagator_series(&coeffs, &times, &[0, 1, 2]).unwrap();
            for (ti, &t) in times.iter().enumerate() {
                let direct = propagator_at(&coeffs, t).unwrap();
                for j in 0..2 {
                    let d = (series.row(ti, 0)[j] - direct.get(0, j)).norm();
                    assert!(d < 1e-11 * (1.0 + direct.get(0, j).norm()), "E_j mismatch {d}");
                    let d1 = (series.row(ti, 1)[j] - direct.get(1, j)).norm();
                    assert!(d1 < 1e-11 * (1.0 + direct.get(1, j).norm()));
                }
                // Second derivative from the ODE: u'' = -q_1 u' - q_2 u.
                let q1 = I * coeffs[1];
                let q2 = I.powu(2) * coeffs[2];
                for j in 0..2 {
                    let expect = -q1 * direct.get(1, j) - q2 * direct.get(0, j);
                    let d2 = (series.row(ti, 2)[j] - expect).norm();
                    assert!(d2 < 1e-10 * (1.0 + expect.norm()));
                }
            }
        }
    }

    #[test]
    fn vandermonde_reconstructs_the_propagator() {
        // Random stable product symbols of orders 2..4.
        let mut state = 99u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64)
        };
        for m in [2usize, 3, 4] {
            for _case in 0..5 {
                let speeds: Vec<f64> = (0..m).map(|k| -2.0 + 1.3 * k as f64 + rng()).collect();
                let damps: Vec<f64> = (0..m).map(|k| 0.1 + 0.4 * k as f64 + 0.2 * rng()).collect();
                let xi = 0.8 + rng();
                let roots: Vec<C64> =
                    speeds.iter().zip(&damps).map(|(&v, &d)| c(v * xi, d)).collect();
                // tau-polynomial with these roots.
                let mut coeffs = vec![c(1.0, 0.0)];
                for &r in &roots {
                    let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
                    for (i, &a) in coeffs.iter().enumerate() {
                        next[i] += a;
                        next[i + 1] -= a * r;
                    }
                    coeffs = next;
                }
                let vdm = vandermonde_at(&coeffs, &roots, &[xi]);
                assert!(vdm.valid);
                for &t in &[0.0, 0.7, 3.0, 11.0] {
                    let direct = propagator_at(&coeffs, t).unwrap();
                    for j in 0..m {
                        for r in 0..(m as u32).min(2) {
                            let spectral = vdm.evaluate(&roots, t, r, j);
                            let exact = direct.get(r as usize, j);
                            let err = (spectral - exact).norm() / (1.0 + exact.norm());
                            assert!(err < 1e-9, "m={m} t={t} r={r} j={j}: {err}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vandermonde_flags_near_coincidence() {
        let sym = dissipative_wave();
        let coeffs = sym.tau_poly_at(&[0.5]);
        let roots = crate::roots::aberth::find_roots_monic(&coeffs).unwrap();
        assert!(!vandermonde_at(&coeffs, &roots, &[0.5]).valid);
        let coeffs = sym.tau_poly_at(&[0.3]);
        let roots = crate::roots::aberth::find_roots_monic(&coeffs).unwrap();
        assert!(vandermonde_at(&coeffs, &roots, &[0.3]).valid);
    }

    #[test]
    fn triple_root_partial_sum_grows_like_t_squared() {
        // (tau - i)^3: all modes coincide, partial sum = full propagator,
        // and |E| e^{t} should grow like <t>^2.
        let coeffs = vec![c(1.0, 0.0), c(0.0, -3.0), c(-3.0, 0.0), c(0.0, 1.0)];
        let roots = vec![c(0.0, 1.0); 3];
        let times: Vec<f64> = (1..=24).map(|k| 1.5f64.powi(k).min(400.0)).collect();
        let check =
            multiplicity_bound_check(&coeffs, &roots, &[true, true, true], 3, &times).unwrap();
        assert!(check.pass, "triple root bound check failed: {check:?}");
        assert!(
            (check.growth_slope - 2.0).abs() < 0.15,
            "expected slope 2, got {}",
            check.growth_slope
        );
        assert!((check.delta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn double_root_with_separated_spectator_passes_bound() {
        // Roots: double at i, spectator at 2 + 3i. Group = the double pair.
        let roots = vec![c(0.0, 1.0), c(0.0, 1.0), c(2.0, 3.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for &r in &roots {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (i, &a) in coeffs.iter().enumerate() {
                next[i] += a;
                next[i + 1] -= a * r;
            }
            coeffs = next;
        }
        let times: Vec<f64> = (1..=20).map(|k| 1.4f64.powi(k).min(150.0)).collect();
        let check =
            multiplicity_bound_check(&coeffs, &roots, &[true, true, false], 2, &times).unwrap();
        assert!(check.pass, "{check:?}");
        assert!((check.growth_slope - 1.0).abs() < 0.2, "slope {}", check.growth_slope);
        assert!(check.c_fit.is_finite() && check.c_fit > 0.0);
    }

    #[test]
    fn overflow_reports_most_unstable_branch() {
        // tau^2 + i tau: roots 0 and -i, so modes 1 and e^{t}.
        let coeffs = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)];
        match propagator_at(&coeffs, 2000.0) {
            Err(Error::PropagatorOverflow { im_tau, t, .. }) => {
                assert!((im_tau + 1.0).abs() < 1e-9);
                assert_eq!(t, 2000.0);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn rejects_descending_times() {
        let coeffs = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)];
        assert!(propagator_series(&coeffs, &[2.0, 1.0], &[0]).is_err());
        assert!(propagator_series(&coeffs, &[-1.0, 1.0], &[0]).is_err());
    }
}
