//! Small dense complex matrices and the few algorithms the pipeline needs:
//! LU determinants, matrix exponentials by scaling-and-squaring, symmetric
//! eigenvalues (Jacobi), minimum-cost assignment, and least-squares lines.
//!
//! Everything here is desk-scale (matrix orders in the hundreds at most), so
//! plain `Vec<C64>` storage and textbook algorithms are the right tool.

use crate::{Error, Result, C64};

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += a * row[j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMat {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x *= s;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `self^k` by repeated multiplication (used only for tiny k).
    pub fn pow(&self, k: usize) -> CMat {
        let mut out = CMat::identity(self.n);
        for _ in 0..k {
            out = out.matmul(self);
        }
        out
    }

    /// `ln |det|` via LU with partial pivoting, accumulated in log space so
    /// determinants far outside f64 range are still comparable. Rows are
    /// pre-scaled by powers of two (exact) so the elimination itself cannot
    /// overflow even when entries sit near the f64 ceiling. Returns `-inf`
    /// for singular input.
    pub fn log_abs_det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut log_det = 0.0f64;
        for i in 0..n {
            let row_max = a[i * n..(i + 1) * n].iter().map(|z| z.norm()).fold(0.0, f64::max);
            if row_max == 0.0 {
                return f64::NEG_INFINITY;
            }
            let e = row_max.log2().floor();
            let s = (-e).exp2();
            for z in &mut a[i * n..(i + 1) * n] {
                *z *= s;
            }
            log_det += e * std::f64::consts::LN_2;
        }
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].norm();
            for r in col + 1..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return f64::NEG_INFINITY;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
            }
            let p = a[col * n + col];
            log_det += p.norm().ln();
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        log_det
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> C64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].norm();
            for r in col + 1..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        det
    }
}

/// Truncation order of the local Taylor series inside `expm`. With the norm
/// scaled below 1, the series tail is ~1/19! ≈ 8e-18, i.e. below f64 eps.
const EXPM_TAYLOR_DEGREE: usize = 18;
const EXPM_THETA: f64 = 1.0;

/// Matrix exponential by scaling-and-squaring with a fixed-degree truncated
/// Taylor series (Horner form). Deliberately avoids any eigensolver so there
/// is a single root-finding code path in the crate.
pub fn expm(a: &CMat) -> CMat {
    let norm = a.norm_inf();
    if !norm.is_finite() {
        // Propagate NaN/inf rather than looping on log2.
        return a.clone();
    }
    let s = if norm > EXPM_THETA { (norm / EXPM_THETA).log2().ceil() as i32 } else { 0 };
    let b = a.scale(C64::new(0.5f64.powi(s), 0.0));
    let mut t = CMat::identity(a.n);
    for k in (1..=EXPM_TAYLOR_DEGREE).rev() {
        // t <- I + (b * t) / k
        t = b.matmul(&t).scale(C64::new(1.0 / k as f64, 0.0)).add(&CMat::identity(a.n));
    }
    for _ in 0..s {
        t = t.matmul(&t);
    }
    t
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
/// Sizes here are the spatial dimension (n <= 3), so convergence is instant.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    assert_eq!(m.len(), n * n);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j].abs();
            }
        }
        if off < 1e-14 * (1.0 + m.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // Stable symmetric Schur rotation: pick the smaller angle
                // that exactly zeroes the (p, q) entry.
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

/// Exact minimum-cost perfect matching (Hungarian algorithm with potentials,
/// O(n^3)). `cost` is row-major `n x n`; returns `assign[row] = col`.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row matched to col (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Greedy matching for large problems: sort all pairs by cost and take the
/// cheapest compatible ones. Always produces a permutation; optimal small-m
/// behavior is covered by `min_cost_assignment` instead.
pub fn greedy_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    let mut pairs: Vec<(usize, usize)> = (0..n * n).map(|k| (k / n, k % n)).collect();
    pairs.sort_by(|&(i1, j1), &(i2, j2)| {
        let a = cost[i1 * n + j1];
        let b = cost[i2 * n + j2];
        a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal).then((i1, j1).cmp(&(i2, j2)))
    });
    let mut assign = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    let mut placed = 0;
    for (i, j) in pairs {
        if assign[i] == usize::MAX && !col_used[j] {
            assign[i] = j;
            col_used[j] = true;
            placed += 1;
            if placed == n {
                break;
            }
        }
    }
    assign
}

/// Ordinary least squares line `y ~ a + b x`. Returns `(a, b, rms_residual,
/// stderr_b)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let k = x.len();
    if k < 2 || k != y.len() {
        return Err(Error::DegenerateFit(format!("need >= 2 points, got {k}")));
    }
    let n = k as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::DegenerateFit("x values are all equal".into()));
    }
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    let ss: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let rms = (ss / n).sqrt();
    let stderr_b = if k > 2 { (ss / (n - 2.0) / (sxx - sx * sx / n)).sqrt() } else { 0.0 };
    Ok((a, b, rms, stderr_b))
}

/// Least squares for `y ~ a + b x1 + c x2` (two regressors). Returns
/// `(a, b, c, rms_residual)`.
pub fn fit_plane(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let k = y.len();
    if k < 3 || x1.len() != k || x2.len() != k {
        return Err(Error::DegenerateFit(format!("need >= 3 points, got {k}")));
    }
    // Normal equations for the 3x3 system.
    let n = k as f64;
    let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sy, mut s1y, mut s2y) = (0.0, 0.0, 0.0);
    for i in 0..k {
        s1 += x1[i];
        s2 += x2[i];
        s11 += x1[i] * x1[i];
        s22 += x2[i] * x2[i];
        s12 += x1[i] * x2[i];
        sy += y[i];
        s1y += x1[i] * y[i];
        s2y += x2[i] * y[i];
    }
    let m = [n, s1, s2, s1, s11, s12, s2, s12, s22];
    let rhs = [sy, s1y, s2y];
    let sol = solve3(&m, &rhs)
        .ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    let (a, b, c) = (sol[0], sol[1], sol[2]);
    let ss: f64 =
        (0..k).map(|i| (y[i] - a - b * x1[i] - c * x2[i]).powi(2)).sum();
    Ok((a, b, c, (ss / n).sqrt()))
}

/// Solve a small dense real system in place (Gaussian elimination, partial
/// pivoting). Returns None when singular to working precision.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i * n + i]).collect())
}

fn solve3(m: &[f64; 9], rhs: &[f64; 3]) -> Option<[f64; 3]> {
    let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
        + m[2] * (m[3] * m[7] - m[4] * m[6]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let x = [
        rhs[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (rhs[1] * m[8] - m[5] * rhs[2])
            + m[2] * (rhs[1] * m[7] - m[4] * rhs[2]),
        m[0] * (rhs[1] * m[8] - m[5] * rhs[2]) - rhs[0] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * rhs[2] - rhs[1] * m[6]),
        m[0] * (m[4] * rhs[2] - rhs[1] * m[7]) - m[1] * (m[3] * rhs[2] - rhs[1] * m[6])
            + rhs[0] * (m[3] * m[7] - m[4] * m[6]),
    ];
    Some([x[0] * inv_det, x[1] * inv_det, x[2] * inv_det])
}

/// General polynomial least squares `y ~ sum_k c_k x^k` for the powers listed
/// in `degrees`. Returns the coefficients in the same order. Gaussian
/// elimination on the normal equations; degrees stay tiny (<= 7).
pub fn fit_polynomial(x: &[f64], y: &[f64], degrees: &[u32]) -> Result<Vec<f64>> {
    let k = degrees.len();
    if x.len() != y.len() || x.len() < k {
        return Err(Error::DegenerateFit(format!(
            "need >= {k} points for {k} coefficients, got {}",
            x.len()
        )));
    }
    let mut ata = vec![0.0; k * k];
    let mut atb = vec![0.0; k];
    for (&xi, &yi) in x.iter().zip(y) {
        let basis: Vec<f64> = degrees.iter().map(|&d| xi.powi(d as i32)).collect();
        for i in 0..k {
            atb[i] += basis[i] * yi;
            for j in 0..k {
                ata[i * k + j] += basis[i] * basis[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    let mut aug: Vec<f64> = vec![0.0; k * (k + 1)];
    for i in 0..k {
        for j in 0..k {
            aug[i * (k + 1) + j] = ata[i * k + j];
        }
        aug[i * (k + 1) + k] = atb[i];
    }
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if aug[r * (k + 1) + col].abs() > aug[piv * (k + 1) + col].abs() {
                piv = r;
            }
        }
        if aug[piv * (k + 1) + col].abs() < 1e-300 {
            return Err(Error::DegenerateFit("singular polynomial normal equations".into()));
        }
        if piv != col {
            for j in 0..=k {
                aug.swap(col * (k + 1) + j, piv * (k + 1) + j);
            }
        }
        let p = aug[col * (k + 1) + col];
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = aug[r * (k + 1) + col] / p;
            for j in col..=k {
                let v = aug[col * (k + 1) + j];
                aug[r * (k + 1) + j] -= f * v;
            }
        }
    }
    Ok((0..k).map(|i| aug[i * (k + 1) + k] / aug[i * (k + 1) + i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn det_of_known_matrices() {
        let mut a = CMat::zeros(2);
        a.set(0, 0, c(1.0, 0.0));
        a.set(0, 1, c(2.0, 0.0));
        a.set(1, 0, c(3.0, 0.0));
        a.set(1, 1, c(4.0, 0.0));
        let d = a.det();
        assert!((d - c(-2.0, 0.0)).norm() < 1e-14);

        // Singular matrix.
        let mut s = CMat::zeros(2);
        s.set(0, 0, c(1.0, 1.0));
        s.set(0, 1, c(2.0, 2.0));
        s.set(1, 0, c(2.0, 2.0));
        s.set(1, 1, c(4.0, 4.0));
        assert_eq!(s.det().norm(), 0.0);
    }

    #[test]
    fn log_abs_det_agrees_with_det_and_handles_large_scales() {
        let mut a = CMat::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, c((i * 3 + j) as f64 + 1.0, if i == j { 0.5 } else { 0.0 }));
            }
        }
        assert!((a.log_abs_det() - a.det().norm().ln()).abs() < 1e-10);

        // Diagonal with entries 1e200: det overflows f64 at n = 2 already,
        // but the log form stays exact.
        let mut big = CMat::zeros(4);
        for i in 0..4 {
            big.set(i, i, c(1e200, 0.0));
        }
        assert!((big.log_abs_det() - 4.0 * 1e200f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn expm_of_nilpotent_jordan_block() {
        // exp(t * [[0,1],[0,0]]) = [[1,t],[0,1]]
        let t = 3.7;
        let mut a = CMat::zeros(2);
        a.set(0, 1, c(t, 0.0));
        let e = expm(&a);
        assert!((e.get(0, 0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((e.get(0, 1) - c(t, 0.0)).norm() < 1e-13);
        assert!((e.get(1, 0)).norm() < 1e-14);
    }

    #[test]
    fn expm_of_diagonal_and_rotation() {
        let mut a = CMat::zeros(2);
        a.set(0, 0, c(-1.5, 0.0));
        a.set(1, 1, c(0.0, 2.0));
        let e = expm(&a);
        assert!((e.get(0, 0) - c((-1.5f64).exp(), 0.0)).norm() < 1e-13);
        assert!((e.get(1, 1) - C64::from_polar(1.0, 2.0)).norm() < 1e-13);

        // Real rotation generator over a long time, exercises squaring.
        let th = 20.0;
        let mut r = CMat::zeros(2);
        r.set(0, 1, c(-th, 0.0));
        r.set(1, 0, c(th, 0.0));
        let er = expm(&r);
        assert!((er.get(0, 0) - c(th.cos(), 0.0)).norm() < 1e-11);
        assert!((er.get(0, 1) - c(-th.sin(), 0.0)).norm() < 1e-11);
    }

    #[test]
    fn jacobi_eigenvalues_of_symmetric_2x2_and_3x3() {
        let mut ev = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);

        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let mut ev = symmetric_eigenvalues(&a, 3);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let trace: f64 = ev.iter().sum();
        assert!((trace - 9.0).abs() < 1e-10);
        // det(A) = 4*(6-1) - 1*(2-0) = 18
        let det: f64 = ev.iter().product();
        assert!((det - 18.0).abs() < 1e-9);
    }

    #[test]
    fn hungarian_matches_brute_force_on_small_random_costs() {
        // Deterministic pseudo-random costs; compare against permutation scan.
        let mut state = 0x12345678u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64)
        };
        for n in 2..=6 {
            for _case in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng()).collect();
                let assign = min_cost_assignment(&cost, n);
                let got: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
                let best = brute_force_best(&cost, n);
                assert!(
                    (got - best).abs() < 1e-12,
                    "n={n}: hungarian {got} vs brute force {best}"
                );
            }
        }
    }

    fn brute_force_best(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn greedy_assignment_is_a_permutation() {
        let n = 15;
        let cost: Vec<f64> = (0..n * n).map(|k| ((k * 7919) % 1009) as f64).collect();
        let assign = greedy_assignment(&cost, n);
        let mut seen = vec![false; n];
        for &j in &assign {
            assert!(j < n && !seen[j]);
            seen[j] = true;
        }
    }

    #[test]
    fn line_fit_recovers_slope_and_intercept() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 1.5 * v).collect();
        let (a, b, rms, _) = fit_line(&x, &y).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        assert!((b + 1.5).abs() < 1e-12);
        assert!(rms < 1e-12);
    }

    #[test]
    fn plane_fit_recovers_two_regressors() {
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let t = 1.0 + i as f64;
            x1.push(t.ln());
            x2.push(t);
            y.push(0.7 + 2.0 * t.ln() - 0.3 * t);
        }
        let (a, b, c, rms) = fit_plane(&x1, &x2, &y).unwrap();
        assert!((a - 0.7).abs() < 1e-9);
        assert!((b - 2.0).abs() < 1e-9);
        assert!((c + 0.3).abs() < 1e-11);
        assert!(rms < 1e-10);
    }
}
