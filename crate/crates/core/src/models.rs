//! Built-in operator families: the damped/mass wave family with its closed
//! forms, and Grad-style moment systems whose dispersion polynomials come
//! from a transport-plus-relaxation matrix pencil.

use serde::{Deserialize, Serialize};

use crate::linalg::CMat;
use crate::roots::aberth;
use crate::symbol::{MultiIndex, OperatorSymbol, SparsePoly};
use crate::{Error, Result, C64, I};

// ---------------------------------------------------------------------------
// Wave family: d_t^2 u - c^2 Lap u + delta d_t u + mu u = 0.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveFamily {
    pub n: usize,
    /// Damping coefficient of `d_t u`.
    pub delta: f64,
    /// Squared propagation speed.
    pub c2: f64,
    /// Mass term (negative means the operator is unstable at low
    /// frequencies).
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveFamilyCase {
    FreeWave,
    KleinGordon,
    DissipativeWave,
    DampedKleinGordon,
    NegativeMass,
    Unstable,
}

impl WaveFamily {
    pub fn new(n: usize, delta: f64, c2: f64, mu: f64) -> Result<Self> {
        if !(c2 > 0.0) {
            return Err(Error::InvalidSymbol(format!("speed squared must be positive, got {c2}")));
        }
        if n == 0 || n > 3 {
            return Err(Error::InvalidSymbol(format!("dimension must be 1..=3, got {n}")));
        }
        Ok(WaveFamily { n, delta, c2, mu })
    }

    /// `tau^2 - i delta tau - c^2 |xi|^2 - mu`, monic in tau.
    pub fn symbol(&self) -> OperatorSymbol {
        let p1 = SparsePoly::constant(self.n, C64::new(0.0, -self.delta));
        let mut p2 = SparsePoly::constant(self.n, C64::new(-self.mu, 0.0));
        for axis in 0..self.n {
            let mut a = vec![0u32; self.n];
            a[axis] = 2;
            p2.add_term(MultiIndex(a), C64::new(-self.c2, 0.0));
        }
        OperatorSymbol::new(self.n, 2, vec![p1, p2]).expect("wave family symbol is always valid")
    }

    /// The two roots `i delta/2 +- sqrt(c^2 r^2 + mu - delta^2/4)` as a
    /// function of the frequency radius.
    pub fn roots(&self, r: f64) -> (C64, C64) {
        let half = C64::new(0.0, self.delta / 2.0);
        let rad = C64::new(self.c2 * r * r + self.mu - self.delta * self.delta / 4.0, 0.0);
        let s = rad.sqrt();
        (half + s, half - s)
    }

    /// Structural label, used for golden-row selection and report text.
    /// Negative damping wins over everything (the operator grows), then the
    /// sign pattern of (delta, mu) decides.
    pub fn case(&self) -> WaveFamilyCase {
        if self.delta < 0.0 {
            return WaveFamilyCase::Unstable;
        }
        if self.mu < 0.0 {
            return WaveFamilyCase::NegativeMass;
        }
        match (self.delta > 0.0, self.mu > 0.0) {
            (false, false) => WaveFamilyCase::FreeWave,
            (false, true) => WaveFamilyCase::KleinGordon,
            (true, false) => WaveFamilyCase::DissipativeWave,
            (true, true) => WaveFamilyCase::DampedKleinGordon,
        }
    }
}

/// `sinh(x)/x` with a series switch near zero; the naive quotient loses
/// eight digits at x ~ 1e-8 and the confluent (equal-root) limit needs full
/// precision.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0
    } else {
        x.sinh() / x
    }
}

/// `sin(x)/x`, same treatment.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    } else {
        x.sin() / x
    }
}

/// Closed-form fundamental solutions `(E_0, E_1)` of the canonical
/// dissipative wave (`delta = c = 1`, `mu = 0`) at frequency radius `r`,
/// after Matsumura: hyperbolic functions below the crossover radius 1/2,
/// trigonometric above it, with the confluent point handled by the series
/// forms so the two pieces agree to machine precision.
pub fn matsumura_closed_form(t: f64, r: f64) -> (f64, f64) {
    let decay = (-t / 2.0).exp();
    let disc = 1.0 - 4.0 * r * r;
    if disc >= 0.0 {
        let b = disc.sqrt();
        let x = t * b / 2.0;
        let e1 = t * decay * sinhc(x);
        let e0 = decay * (x.cosh() + (t / 2.0) * sinhc(x));
        (e0, e1)
    } else {
        let b = (-disc).sqrt();
        let x = t * b / 2.0;
        let e1 = t * decay * sinc(x);
        let e0 = decay * (x.cos() + (t / 2.0) * sinc(x));
        (e0, e1)
    }
}

// ---------------------------------------------------------------------------
// Grad moment systems.
// ---------------------------------------------------------------------------

/// Hard cap on the number of moments for any numeric work.
pub const GRAD_MAX_MOMENTS: usize = 200;
/// Cap for the symbolic characteristic polynomial (matrix Faddeev-LeVerrier
/// over sparse polynomials grows quickly).
pub const GRAD_MAX_SYMBOLIC_MOMENTS: usize = 36;

/// Moment system indexed by multi-indices `|alpha| <= truncation`:
/// transport matrices with the raising/lowering pattern
/// `A_j[alpha - e_j, alpha] = alpha_j`, `A_j[alpha + e_j, alpha] = 1`, and
/// diagonal relaxation `B = diag(|alpha|)`.
#[derive(Debug, Clone)]
pub struct GradSystem {
    pub n: usize,
    pub truncation: u32,
    pub alphas: Vec<MultiIndex>,
    /// Number of moments (matrix size).
    pub m: usize,
    /// `n` real transport matrices, row-major `m x m`.
    pub a_mats: Vec<Vec<f64>>,
    /// Relaxation diagonal `|alpha|`.
    pub b_diag: Vec<f64>,
}

/// All multi-indices with `|alpha| <= limit` in `n` variables, graded
/// lexicographic (total order first, lex inside each grade).
pub fn multi_indices_up_to(n: usize, limit: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() == n - 1 {
            let used: u32 = prefix.iter().sum();
            prefix.push(total - used);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        let used: u32 = prefix.iter().sum();
        for v in (0..=(total - used)).rev() {
            prefix.push(v);
            rec(n, total, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=limit {
        let mut prefix = Vec::new();
        rec(n, total, &mut prefix, &mut out);
    }
    out
}

impl GradSystem {
    pub fn new(n: usize, truncation: u32) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(Error::InvalidSymbol(format!("dimension must be 1..=3, got {n}")));
        }
        let alphas = multi_indices_up_to(n, truncation);
        let m = alphas.len();
        if m > GRAD_MAX_MOMENTS {
            return Err(Error::SizeGuard(format!(
                "moment system has {m} moments, cap is {GRAD_MAX_MOMENTS}"
            )));
        }
        let mut lookup = std::collections::BTreeMap::new();
        for (i, a) in alphas.iter().enumerate() {
            lookup.insert(a.clone(), i);
        }
        let mut a_mats = vec![vec![0.0f64; m * m]; n];
        for (col, alpha) in alphas.iter().enumerate() {
            for j in 0..n {
                // Lowering: row alpha - e_j carries weight alpha_j.
                if alpha.0[j] > 0 {
                    let mut low = alpha.clone();
                    low.0[j] -= 1;
                    let row = lookup[&low];
                    a_mats[j][row * m + col] = alpha.0[j] as f64;
                }
                // Raising: row alpha + e_j carries weight 1 (dropped beyond
                // the truncation).
                let mut high = alpha.clone();
                high.0[j] += 1;
                if high.order() <= truncation {
                    let row = lookup[&high];
                    a_mats[j][row * m + col] = 1.0;
                }
            }
        }
        let b_diag = alphas.iter().map(|a| a.order() as f64).collect();
        Ok(GradSystem { n, truncation, alphas, m, a_mats, b_diag })
    }

    /// `T(xi) = sum_j A_j xi_j - i B`.
    pub fn transport_matrix(&self, xi: &[f64]) -> CMat {
        assert_eq!(xi.len(), self.n);
        let mut t = CMat::zeros(self.m);
        for (j, &x) in xi.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for r in 0..self.m {
                for col in 0..self.m {
                    let v = self.a_mats[j][r * self.m + col];
                    if v != 0.0 {
                        let cur = t.get(r, col);
                        t.set(r, col, cur + C64::new(v * x, 0.0));
                    }
                }
            }
        }
        for d in 0..self.m {
            let cur = t.get(d, d);
            t.set(d, d, cur - I * self.b_diag[d]);
        }
        t
    }

    /// Monic characteristic polynomial of `-T(xi)` (descending), i.e. the
    /// dispersion polynomial `det(tau I + T)` in tau, via Faddeev-LeVerrier.
    pub fn dispersion_poly(&self, xi: &[f64]) -> Vec<C64> {
        let a = self.transport_matrix(xi).scale(C64::new(-1.0, 0.0));
        faddeev_leverrier(&a)
    }

    /// Characteristic roots at one frequency.
    pub fn dispersion_roots(&self, xi: &[f64]) -> Result<Vec<C64>> {
        aberth::find_roots_monic(&self.dispersion_poly(xi))
    }

    /// Diagonal symmetrizer `sqrt(alpha!)`: conjugating every `A_j` by it
    /// is symmetric, which is what makes the transport part hyperbolic.
    pub fn symmetrizer_diag(&self) -> Vec<f64> {
        self.alphas
            .iter()
            .map(|a| a.0.iter().map(|&k| factorial(k)).product::<f64>().sqrt())
            .collect()
    }

    /// Exact symbolic dispersion polynomial as an operator symbol: matrix
    /// Faddeev-LeVerrier over sparse polynomials in xi.
    pub fn to_operator_symbol(&self) -> Result<OperatorSymbol> {
        if self.m > GRAD_MAX_SYMBOLIC_MOMENTS {
            return Err(Error::SizeGuard(format!(
                "symbolic dispersion polynomial capped at {GRAD_MAX_SYMBOLIC_MOMENTS} moments, system has {}",
                self.m
            )));
        }
        let m = self.m;
        let n = self.n;
        // Entries of -T(xi) as degree-one sparse polynomials.
        let mut a: Vec<SparsePoly> = vec![SparsePoly::zero(n); m * m];
        for j in 0..n {
            for r in 0..m {
                for col in 0..m {
                    let v = self.a_mats[j][r * m + col];
                    if v != 0.0 {
                        let mut e = vec![0u32; n];
                        e[j] = 1;
                        a[r * m + col].add_term(MultiIndex(e), C64::new(-v, 0.0));
                    }
                }
            }
        }
        for d in 0..m {
            a[d * m + d].add_term(MultiIndex::zeros(n), I * self.b_diag[d]);
        }
        // M_1 = I, c_1 = -tr(A M_1); M_{k+1} = A M_k + c_k I.
        let mut coeffs: Vec<SparsePoly> = Vec::with_capacity(m);
        let mut mk: Vec<SparsePoly> = (0..m * m)
            .map(|idx| {
                if idx % (m + 1) == 0 {
                    SparsePoly::constant(n, C64::new(1.0, 0.0))
                } else {
                    SparsePoly::zero(n)
                }
            })
            .collect();
        for k in 1..=m {
            // am = A * mk
            let mut am = vec![SparsePoly::zero(n); m * m];
            for i in 0..m {
                for kk in 0..m {
                    if a[i * m + kk].is_zero() {
                        continue;
                    }
                    for j in 0..m {
                        if mk[kk * m + j].is_zero() {
                            continue;
                        }
                        let prod = a[i * m + kk].mul(&mk[kk * m + j]);
                        am[i * m + j] = am[i * m + j].add(&prod);
                    }
                }
            }
            let mut tr = SparsePoly::zero(n);
            for i in 0..m {
                tr = tr.add(&am[i * m + i]);
            }
            let ck = tr.scale(C64::new(-1.0 / k as f64, 0.0));
            coeffs.push(ck.clone());
            if k < m {
                for i in 0..m {
                    am[i * m + i] = am[i * m + i].add(&ck);
                }
                mk = am;
            }
        }
        OperatorSymbol::new(n, m, coeffs)
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0f64, |acc, v| acc * v as f64)
}

/// Monic characteristic polynomial coefficients (descending) of a dense
/// complex matrix by the Faddeev-LeVerrier recurrence.
pub fn faddeev_leverrier(a: &CMat) -> Vec<C64> {
    let m = a.n;
    let mut coeffs = Vec::with_capacity(m + 1);
    coeffs.push(C64::new(1.0, 0.0));
    let mut mk = CMat::identity(m);
    for k in 1..=m {
        let am = a.matmul(&mk);
        let ck = -am.trace() / k as f64;
        coeffs.push(ck);
        if k < m {
            mk = am;
            for d in 0..m {
                let cur = mk.get(d, d);
                mk.set(d, d, cur + ck);
            }
        }
    }
    coeffs
}
