//! Tensor-product frequency grids `[-R, R]^n` used for root fields, norm
//! quadrature and geometry scans.

use crate::{Error, Result};

/// Uniform tensor grid over `[-extent, extent]^n`.
///
/// Node indices are lexicographic: index `i` decomposes into per-axis digits
/// base `points_per_axis`, the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub n: usize,
    pub extent: f64,
    pub points_per_axis: usize,
    /// Optional radii singled out for shell diagnostics (e.g. the outer
    /// strong-stability shell). Empty means "use the default 0.8 * extent".
    pub shells: Vec<f64>,
}

/// Nodes with radius at least this fraction of the extent form the default
/// outer shell for strong-stability checks.
pub const DEFAULT_SHELL_FRACTION: f64 = 0.8;

const MAX_NODES: usize = 1 << 27;

impl FrequencyGrid {
    pub fn new(n: usize, extent: f64, points_per_axis: usize) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 1..=3, got {n}")));
        }
        if !(extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidGrid("need at least 2 points per axis".into()));
        }
        let nodes = points_per_axis.checked_pow(n as u32).filter(|&k| k <= MAX_NODES);
        if nodes.is_none() {
            return Err(Error::SizeGuard(format!(
                "{points_per_axis}^{n} nodes exceeds the {MAX_NODES} node guard"
            )));
        }
        Ok(FrequencyGrid { n, extent, points_per_axis, shells: Vec::new() })
    }

    pub fn with_shells(mut self, shells: Vec<f64>) -> Self {
        self.shells = shells;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    /// Axis spacing.
    pub fn step(&self) -> f64 {
        2.0 * self.extent / (self.points_per_axis - 1) as f64
    }

    pub fn digits_of(&self, index: usize) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        let mut rest = index;
        for axis in (0..self.n).rev() {
            d[axis] = rest % self.points_per_axis;
            rest /= self.points_per_axis;
        }
        d
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0usize, |acc, &d| acc * self.points_per_axis + d)
    }

    pub fn axis_value(&self, digit: usize) -> f64 {
        -self.extent + self.step() * digit as f64
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        self.digits_of(index).into_iter().map(|d| self.axis_value(d)).collect()
    }

    pub fn node_radius(&self, index: usize) -> f64 {
        self.node(index).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Neighbor along `axis` in direction `dir` (+1/-1), if inside the grid.
    pub fn neighbor(&self, index: usize, axis: usize, dir: isize) -> Option<usize> {
        let mut d = self.digits_of(index);
        let v = d[axis] as isize + dir;
        if v < 0 || v >= self.points_per_axis as isize {
            return None;
        }
        d[axis] = v as usize;
        Some(self.index_of(&d))
    }

    /// True when all axis digits are at least `depth` away from both ends,
    /// i.e. the node supports a centered stencil of that half-width.
    pub fn is_interior(&self, index: usize, depth: usize) -> bool {
        self.digits_of(index)
            .iter()
            .all(|&d| d >= depth && d + depth < self.points_per_axis)
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        !self.is_interior(index, 1)
    }

    /// Grid node closest to an arbitrary point (clamped to the box).
    pub fn nearest_node(&self, point: &[f64]) -> usize {
        assert_eq!(point.len(), self.n);
        let h = self.step();
        let digits: Vec<usize> = point
            .iter()
            .map(|&x| {
                let raw = ((x + self.extent) / h).round();
                raw.clamp(0.0, (self.points_per_axis - 1) as f64) as usize
            })
            .collect();
        self.index_of(&digits)
    }

    /// Smallest radius that counts as the outer shell.
    pub fn shell_radius(&self) -> f64 {
        self.shells
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .min(DEFAULT_SHELL_FRACTION * self.extent)
            .max(0.0)
    }

    /// Trapezoid quadrature weight of the node (product rule over axes).
    pub fn quad_weight(&self, index: usize) -> f64 {
        let h = self.step();
        self.digits_of(index)
            .iter()
            .map(|&d| if d == 0 || d + 1 == self.points_per_axis { 0.5 * h } else { h })
            .product()
    }

    /// Exact Euclidean distance (in frequency units) from every node to the
    /// masked set, by the separable lower-envelope-of-parabolas transform.
    /// Returns `+inf` everywhere if the mask is empty.
    pub fn distance_to_set(&self, mask: &[bool]) -> Vec<f64> {
        assert_eq!(mask.len(), self.num_nodes());
        let p = self.points_per_axis;
        let mut d2: Vec<f64> =
            mask.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
        // Work in index units; one pass per axis over all lines along it.
        let mut stride = 1usize;
        let mut strides = vec![0usize; self.n];
        for axis in (0..self.n).rev() {
            strides[axis] = stride;
            stride *= p;
        }
        let mut line = vec![0.0f64; p];
        for axis in 0..self.n {
            let s = strides[axis];
            for base in 0..self.num_nodes() {
                if (base / s) % p != 0 {
                    continue; // not the start of a line along this axis
                }
                for k in 0..p {
                    line[k] = d2[base + k * s];
                }
                let out = dt_one_dimensional(&line);
                for k in 0..p {
                    d2[base + k * s] = out[k];
                }
            }
        }
        let h = self.step();
        d2.into_iter().map(|v| v.sqrt() * h).collect()
    }
}

/// One-dimensional squared distance transform (lower envelope of parabolas
/// rooted at `(k, f[k])`), distances in index units.
fn dt_one_dimensional(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut v = vec![0usize; n]; // parabola apex positions
    let mut z = vec![0.0f64; n + 1]; // envelope breakpoints
    let mut k = 0usize;
    let mut started = false;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if !started {
        return vec![f64::INFINITY; n];
    }
    let mut out = vec![0.0f64; n];
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        out[q] = dq * dq + f[p];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips_and_node_values() {
        let g = FrequencyGrid::new(2, 2.0, 5).unwrap();
        assert_eq!(g.num_nodes(), 25);
        assert_eq!(g.step(), 1.0);
        for idx in 0..g.num_nodes() {
            assert_eq!(g.index_of(&g.digits_of(idx)), idx);
        }
        // Center node.
        let center = g.index_of(&[2, 2]);
        assert_eq!(g.node(center), vec![0.0, 0.0]);
        assert_eq!(g.node(0), vec![-2.0, -2.0]);
        assert_eq!(g.node(24), vec![2.0, 2.0]);
    }

    #[test]
    fn neighbors_and_interior() {
        let g = FrequencyGrid::new(1, 1.0, 4).unwrap();
        assert_eq!(g.neighbor(0, 0, -1), None);
        assert_eq!(g.neighbor(0, 0, 1), Some(1));
        assert!(!g.is_interior(0, 1));
        assert!(g.is_interior(1, 1));
        assert!(!g.is_interior(1, 2));
    }

    #[test]
    fn nearest_node_clamps_to_box() {
        let g = FrequencyGrid::new(1, 2.0, 2049).unwrap();
        let idx = g.nearest_node(&[0.5]);
        assert!((g.node(idx)[0] - 0.5).abs() < 1e-12);
        assert_eq!(g.nearest_node(&[99.0]), 2048);
    }

    #[test]
    fn quadrature_weights_sum_to_volume() {
        let g = FrequencyGrid::new(2, 1.5, 7).unwrap();
        let total: f64 = (0..g.num_nodes()).map(|i| g.quad_weight(i)).sum();
        assert!((total - 9.0).abs() < 1e-12, "got {total}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FrequencyGrid::new(0, 1.0, 4).is_err());
        assert!(FrequencyGrid::new(4, 1.0, 4).is_err());
        assert!(FrequencyGrid::new(1, -1.0, 4).is_err());
        assert!(FrequencyGrid::new(1, 1.0, 1).is_err());
        assert!(FrequencyGrid::new(3, 1.0, 1025).is_err());
    }
}
