//! Operator symbols: sparse polynomials in the frequency variable, the full
//! symbol `P(tau, xi) = tau^m + sum_{j=1..m} p_j(xi) tau^(m-j)`, and the
//! strict-hyperbolicity check of its principal part.
//!
//! Conventions: time modes are `e^{i tau t}`, so a root with `Im tau > 0`
//! decays. Lower-order coefficients may be complex; the degree-j homogeneous
//! part of each `p_j` (the principal part) must be real on real frequencies.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{bracket, Error, Result, C64};

/// Tolerance for "real" principal coefficients and root gaps in the
/// strict-hyperbolicity check.
pub const STRICT_HYP_TOL: f64 = 1e-9;

/// Frequency multi-index `alpha`; `|alpha|` is the total order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `xi^alpha` on real frequencies.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0.iter().zip(xi).map(|(&a, &x)| x.powi(a as i32)).product()
    }
}

/// Sparse polynomial in `n` real frequency variables with complex
/// coefficients. Terms are kept in a BTreeMap so iteration (and hence every
/// serialization) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoly {
    pub n: usize,
    pub terms: BTreeMap<MultiIndex, C64>,
}

impl SparsePoly {
    pub fn zero(n: usize) -> Self {
        SparsePoly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(MultiIndex::zeros(n), c);
        p
    }

    /// Add `c * xi^alpha`, merging with an existing term and dropping exact
    /// zeros.
    pub fn add_term(&mut self, alpha: MultiIndex, c: C64) {
        assert_eq!(alpha.dim(), self.n, "multi-index dimension mismatch");
        let entry = self.terms.entry(alpha).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if entry.norm_sqr() == 0.0 {
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.norm_sqr() == 0.0)
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.order()).max().unwrap_or(0)
    }

    /// Smallest total order among nonzero terms (None for the zero poly).
    pub fn min_order(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.order()).min()
    }

    pub fn eval(&self, xi: &[f64]) -> C64 {
        assert_eq!(xi.len(), self.n);
        self.terms.iter().map(|(a, &c)| c * a.monomial(xi)).sum()
    }

    /// The homogeneous part of total order `k`.
    pub fn homogeneous_part(&self, k: u32) -> SparsePoly {
        let mut out = Self::zero(self.n);
        for (a, &c) in &self.terms {
            if a.order() == k {
                out.add_term(a.clone(), c);
            }
        }
        out
    }

    /// Max imaginary part over coefficients, relative to the largest modulus.
    pub fn max_relative_im(&self) -> f64 {
        let scale = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max) / scale
    }

    pub fn add(&self, other: &SparsePoly) -> SparsePoly {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            out.add_term(a.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> SparsePoly {
        let mut out = Self::zero(self.n);
        for (a, &c) in &self.terms {
            out.add_term(a.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &SparsePoly) -> SparsePoly {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                let idx =
                    MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                out.add_term(idx, ca * cb);
            }
        }
        out
    }

    /// Drop terms with modulus below `tol` times the largest coefficient.
    /// Used to clean up symbolic determinant output.
    pub fn prune(&self, tol: f64) -> SparsePoly {
        let scale = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let mut out = Self::zero(self.n);
        for (a, &c) in &self.terms {
            if c.norm() > tol * scale {
                out.add_term(a.clone(), c);
            }
        }
        out
    }
}

/// Full symbol of an order-m operator, monic in tau:
/// `P(tau, xi) = tau^m + sum_j p_j(xi) tau^{m-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSymbol {
    pub n: usize,
    pub m: usize,
    /// `tau_coeffs[j-1] = p_j`, the coefficient multiplying `tau^{m-j}`.
    pub tau_coeffs: Vec<SparsePoly>,
    /// Degree-j homogeneous part of `p_j` (the principal symbol's
    /// coefficients), derived at construction.
    pub principal_coeffs: Vec<SparsePoly>,
}

impl OperatorSymbol {
    /// Build from the lower-order coefficient list `p_1..p_m`. Validates
    /// dimensions, `deg p_j <= j`, and that principal parts are real.
    pub fn new(n: usize, m: usize, tau_coeffs: Vec<SparsePoly>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSymbol("operator order m must be positive".into()));
        }
        if tau_coeffs.len() != m {
            return Err(Error::InvalidSymbol(format!(
                "expected {m} tau coefficients, got {}",
                tau_coeffs.len()
            )));
        }
        for (j, p) in tau_coeffs.iter().enumerate() {
            let j1 = j as u32 + 1;
            if p.n != n {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient p_{j1} lives in dimension {}, symbol in {n}",
                    p.n
                )));
            }
            if p.degree() > j1 {
                return Err(Error::InvalidSymbol(format!(
                    "deg p_{j1} = {} exceeds its tau gap {j1}",
                    p.degree()
                )));
            }
        }
        let principal_coeffs: Vec<SparsePoly> = tau_coeffs
            .iter()
            .enumerate()
            .map(|(j, p)| p.homogeneous_part(j as u32 + 1))
            .collect();
        for (j, pc) in principal_coeffs.iter().enumerate() {
            if pc.max_relative_im() > STRICT_HYP_TOL {
                return Err(Error::InvalidSymbol(format!(
                    "principal part of p_{} is not real on real frequencies",
                    j + 1
                )));
            }
        }
        Ok(OperatorSymbol { n, m, tau_coeffs, principal_coeffs })
    }

    /// `P(tau, xi)`, Horner in tau.
    pub fn eval(&self, tau: C64, xi: &[f64]) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for p in &self.tau_coeffs {
            acc = acc * tau + p.eval(xi);
        }
        acc
    }

    /// Monic coefficient vector of `tau -> P(tau, xi)`:
    /// `[1, p_1(xi), ..., p_m(xi)]`.
    pub fn tau_poly_at(&self, xi: &[f64]) -> Vec<C64> {
        let mut coeffs = Vec::with_capacity(self.m + 1);
        coeffs.push(C64::new(1.0, 0.0));
        coeffs.extend(self.tau_coeffs.iter().map(|p| p.eval(xi)));
        coeffs
    }

    /// Same for the principal symbol only.
    pub fn principal_poly_at(&self, xi: &[f64]) -> Vec<C64> {
        let mut coeffs = Vec::with_capacity(self.m + 1);
        coeffs.push(C64::new(1.0, 0.0));
        coeffs.extend(self.principal_coeffs.iter().map(|p| p.eval(xi)));
        coeffs
    }

    /// Largest total order of lower-order terms: `max over j of
    /// deg(p_j - principal_j) + (m - j)` in the combined (time + space)
    /// grading. Used by the principal-convergence diagnostic.
    pub fn lower_order(&self) -> u32 {
        let mut k = 0u32;
        for (j, (p, pc)) in self.tau_coeffs.iter().zip(&self.principal_coeffs).enumerate() {
            let mj = (self.m - (j + 1)) as u32;
            let mut low = p.clone();
            for (a, &c) in &pc.terms {
                low.add_term(a.clone(), -c);
            }
            for alpha in low.terms.keys() {
                k = k.max(alpha.order() + mj);
            }
        }
        k
    }

    /// Check strict hyperbolicity of the principal part: at `num_directions`
    /// unit frequencies the principal roots must be real and pairwise
    /// separated. Returns the worst gap found, with the offending direction
    /// when the check fails.
    pub fn check_strict_hyperbolicity(&self, num_directions: Option<usize>) -> HyperbolicityCheck {
        let dirs = unit_directions(self.n, num_directions.unwrap_or(default_directions(self.n)));
        let mut min_gap = f64::INFINITY;
        for omega in dirs {
            let coeffs = self.principal_poly_at(&omega);
            let roots = match crate::roots::aberth::find_roots_monic(&coeffs) {
                Ok(r) => r,
                Err(_) => {
                    return HyperbolicityCheck {
                        strictly_hyperbolic: false,
                        min_gap: 0.0,
                        offending_direction: Some(omega),
                    }
                }
            };
            for r in &roots {
                if r.im.abs() > STRICT_HYP_TOL * bracket(r.re) {
                    return HyperbolicityCheck {
                        strictly_hyperbolic: false,
                        min_gap: 0.0,
                        offending_direction: Some(omega),
                    };
                }
            }
            for i in 0..roots.len() {
                for j in i + 1..roots.len() {
                    let gap = (roots[i] - roots[j]).norm();
                    min_gap = min_gap.min(gap);
                    if gap <= STRICT_HYP_TOL {
                        return HyperbolicityCheck {
                            strictly_hyperbolic: false,
                            min_gap: gap,
                            offending_direction: Some(omega),
                        };
                    }
                }
            }
        }
        if self.m == 1 {
            min_gap = f64::INFINITY;
        }
        HyperbolicityCheck { strictly_hyperbolic: true, min_gap, offending_direction: None }
    }

    pub fn to_json_value(&self) -> OperatorJson {
        let mut terms = Vec::new();
        // tau^m leading term first, then descending tau powers, each with
        // its frequency terms in map order.
        terms.push(TermJson {
            tau_power: self.m as u32,
            xi_exponents: vec![0; self.n],
            coeff: [1.0, 0.0],
        });
        for (j, p) in self.tau_coeffs.iter().enumerate() {
            let tau_power = (self.m - (j + 1)) as u32;
            for (a, c) in &p.terms {
                terms.push(TermJson {
                    tau_power,
                    xi_exponents: a.0.clone(),
                    coeff: [c.re, c.im],
                });
            }
        }
        OperatorJson { n: self.n, m: self.m, terms }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value())
            .expect("operator json serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json_value(v: &OperatorJson) -> Result<Self> {
        if v.m == 0 {
            return Err(Error::InvalidSymbol("operator order m must be positive".into()));
        }
        let mut coeffs = vec![SparsePoly::zero(v.n); v.m];
        let mut leading_seen = false;
        for t in &v.terms {
            if t.xi_exponents.len() != v.n {
                return Err(Error::DimensionMismatch(format!(
                    "term has {} exponents, symbol dimension is {}",
                    t.xi_exponents.len(),
                    v.n
                )));
            }
            if t.tau_power as usize > v.m {
                return Err(Error::InvalidSymbol(format!(
                    "tau power {} exceeds operator order {}",
                    t.tau_power, v.m
                )));
            }
            let c = C64::new(t.coeff[0], t.coeff[1]);
            if t.tau_power as usize == v.m {
                if t.xi_exponents.iter().any(|&e| e != 0) || c != C64::new(1.0, 0.0) {
                    return Err(Error::InvalidSymbol(
                        "the leading tau^m coefficient must be exactly [1, 0] with zero frequency exponents"
                            .into(),
                    ));
                }
                if leading_seen {
                    return Err(Error::InvalidSymbol("duplicate leading tau^m term".into()));
                }
                leading_seen = true;
                continue;
            }
            let j = v.m - t.tau_power as usize; // index of p_j
            coeffs[j - 1].add_term(MultiIndex(t.xi_exponents.clone()), c);
        }
        if !leading_seen {
            return Err(Error::InvalidSymbol(
                "missing the monic leading tau^m term with coefficient [1, 0]".into(),
            ));
        }
        Self::new(v.n, v.m, coeffs)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: OperatorJson = serde_json::from_str(s)?;
        Self::from_json_value(&v)
    }

    /// Human-oriented one-line rendering, e.g. `tau^2 - i*tau - |xi|^2`-style
    /// term dumps for logs and reports.
    pub fn describe(&self) -> String {
        let mut s = format!("tau^{}", self.m);
        for (j, p) in self.tau_coeffs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let pow = self.m - (j + 1);
            for (a, c) in &p.terms {
                let mono: String = a
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        if e == 1 {
                            format!("*xi{}", i + 1)
                        } else {
                            format!("*xi{}^{}", i + 1, e)
                        }
                    })
                    .collect();
                let _ = write!(s, " + ({:+}{:+}i)", c.re, c.im);
                s.push_str(&mono);
                if pow == 1 {
                    s.push_str("*tau");
                } else if pow > 1 {
                    let _ = write!(s, "*tau^{pow}");
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityCheck {
    pub strictly_hyperbolic: bool,
    /// Worst pairwise principal-root gap over the sampled directions.
    pub min_gap: f64,
    pub offending_direction: Option<Vec<f64>>,
}

/// JSON schema of an operator symbol. `coeff` is `[re, im]`; the leading
/// `tau^m` term must be present with coefficient exactly `[1, 0]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub n: usize,
    pub m: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub tau_power: u32,
    pub xi_exponents: Vec<u32>,
    pub coeff: [f64; 2],
}

pub fn default_directions(n: usize) -> usize {
    match n {
        1 => 64,
        2 => 256,
        _ => 1024,
    }
}

/// Unit directions: alternating signs in 1-d, the uniform circle in 2-d, a
/// Fibonacci sphere in 3-d.
pub fn unit_directions(n: usize, k: usize) -> Vec<Vec<f64>> {
    let k = k.max(2);
    match n {
        1 => (0..k).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..k)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            (0..k)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let th = golden * i as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => panic!("dimension must be 1..=3"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// tau^2 - i tau - |xi|^2 in dimension n.
    pub fn dissipative_wave(n: usize) -> OperatorSymbol {
        let p1 = SparsePoly::constant(n, c(0.0, -1.0));
        let mut p2 = SparsePoly::zero(n);
        for axis in 0..n {
            let mut a = vec![0u32; n];
            a[axis] = 2;
            p2.add_term(MultiIndex(a), c(-1.0, 0.0));
        }
        OperatorSymbol::new(n, 2, vec![p1, p2]).unwrap()
    }

    #[test]
    fn eval_and_tau_poly_match_hand_values() {
        let sym = dissipative_wave(1);
        // P(tau, xi) with tau = i/2 at |xi| = 1/2 is the double-root point.
        let v = sym.eval(c(0.0, 0.5), &[0.5]);
        assert!(v.norm() < 1e-15, "double root should evaluate to 0, got {v}");
        let coeffs = sym.tau_poly_at(&[0.3]);
        assert_eq!(coeffs.len(), 3);
        assert!((coeffs[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((coeffs[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((coeffs[2] - c(-0.09, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn horner_matches_term_sum_on_random_inputs() {
        let sym = dissipative_wave(2);
        let mut state = 7u64;
        for _ in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let x = ((state >> 40) as f64 / 1e7 - 0.8) * 3.0;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let y = ((state >> 40) as f64 / 1e7 - 0.8) * 3.0;
            let tau = c(0.3 * x - 0.1, 0.2 + 0.05 * y);
            let xi = [x, y];
            let direct = tau * tau
                + sym.tau_coeffs[0].eval(&xi) * tau
                + sym.tau_coeffs[1].eval(&xi);
            let horner = sym.eval(tau, &xi);
            assert!((direct - horner).norm() < 1e-12 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn principal_parts_are_the_homogeneous_pieces() {
        let sym = dissipative_wave(2);
        // p_1 = -i is order 0, so its principal (order-1) part is zero.
        assert!(sym.principal_coeffs[0].is_zero());
        // p_2 = -|xi|^2 is already homogeneous of order 2.
        assert_eq!(sym.principal_coeffs[1], sym.tau_coeffs[1]);
    }

    #[test]
    fn strict_hyperbolicity_accepts_wave_and_rejects_elliptic() {
        let sym = dissipative_wave(2);
        let check = sym.check_strict_hyperbolicity(None);
        assert!(check.strictly_hyperbolic);
        assert!((check.min_gap - 2.0).abs() < 1e-9, "wave gap 2c, got {}", check.min_gap);

        // tau^2 + |xi|^2: principal roots +-i|xi| are not real.
        let mut p2 = SparsePoly::zero(1);
        p2.add_term(MultiIndex(vec![2]), c(1.0, 0.0));
        let ell = OperatorSymbol::new(1, 2, vec![SparsePoly::zero(1), p2]).unwrap();
        let check = ell.check_strict_hyperbolicity(None);
        assert!(!check.strictly_hyperbolic);
        assert!(check.offending_direction.is_some());
    }

    #[test]
    fn strict_hyperbolicity_rejects_repeated_speeds() {
        // (tau - xi)^2 = tau^2 - 2 xi tau + xi^2: double principal root.
        let mut p1 = SparsePoly::zero(1);
        p1.add_term(MultiIndex(vec![1]), c(-2.0, 0.0));
        let mut p2 = SparsePoly::zero(1);
        p2.add_term(MultiIndex(vec![2]), c(1.0, 0.0));
        let sym = OperatorSymbol::new(1, 2, vec![p1, p2]).unwrap();
        assert!(!sym.check_strict_hyperbolicity(None).strictly_hyperbolic);
    }

    #[test]
    fn construction_rejects_bad_degrees_and_complex_principal() {
        // deg p_1 = 2 > 1.
        let mut p1 = SparsePoly::zero(1);
        p1.add_term(MultiIndex(vec![2]), c(1.0, 0.0));
        assert!(matches!(
            OperatorSymbol::new(1, 2, vec![p1, SparsePoly::zero(1)]),
            Err(Error::InvalidSymbol(_))
        ));

        // Complex principal coefficient: p_2 = i xi^2.
        let mut p2 = SparsePoly::zero(1);
        p2.add_term(MultiIndex(vec![2]), c(0.0, 1.0));
        assert!(matches!(
            OperatorSymbol::new(1, 2, vec![SparsePoly::zero(1), p2]),
            Err(Error::InvalidSymbol(_))
        ));
    }

    #[test]
    fn json_round_trip_is_idempotent() {
        let sym = dissipative_wave(2);
        let s1 = sym.to_json_string();
        let back = OperatorSymbol::from_json_str(&s1).unwrap();
        assert_eq!(back, sym);
        let s2 = back.to_json_string();
        assert_eq!(s1, s2, "emit -> parse -> emit must be byte-stable");
    }

    #[test]
    fn json_rejects_nonmonic_leading_term() {
        let bad = r#"{"n":1,"m":2,"terms":[
            {"tau_power":2,"xi_exponents":[0],"coeff":[2.0,0.0]},
            {"tau_power":0,"xi_exponents":[2],"coeff":[-1.0,0.0]}]}"#;
        assert!(OperatorSymbol::from_json_str(bad).is_err());
        let missing = r#"{"n":1,"m":2,"terms":[
            {"tau_power":0,"xi_exponents":[2],"coeff":[-1.0,0.0]}]}"#;
        assert!(OperatorSymbol::from_json_str(missing).is_err());
    }

    #[test]
    fn unit_directions_have_unit_norm() {
        for n in 1..=3 {
            for d in unit_directions(n, 37) {
                let r: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sparse_poly_mul_and_min_order() {
        // (1 + xi)^2 = 1 + 2 xi + xi^2
        let mut p = SparsePoly::constant(1, c(1.0, 0.0));
        p.add_term(MultiIndex(vec![1]), c(1.0, 0.0));
        let sq = p.mul(&p);
        assert_eq!(sq.terms.len(), 3);
        assert!((sq.eval(&[2.0]) - c(9.0, 0.0)).norm() < 1e-14);
        assert_eq!(sq.min_order(), Some(0));
        assert_eq!(sq.degree(), 2);
    }
}
