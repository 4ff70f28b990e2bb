//! Characteristic roots over frequency grids: per-node solves, discriminant
//! fields, branch tracking by minimum-cost matching, and detection of
//! root-coincidence clusters.

pub mod aberth;

use std::collections::VecDeque;
use std::io;

use rayon::prelude::*;

use crate::grid::FrequencyGrid;
use crate::linalg::{fit_line, greedy_assignment, min_cost_assignment, CMat};
use crate::symbol::OperatorSymbol;
use crate::{bracket, Result, C64};

/// Largest order routed to the exact Hungarian matcher during branch
/// tracking; larger systems use the greedy matcher.
pub const EXACT_ASSIGNMENT_MAX_ORDER: usize = 12;

/// Roots of the full symbol `tau -> P(tau, xi)` at one frequency.
pub fn roots_at(sym: &OperatorSymbol, xi: &[f64]) -> Result<Vec<C64>> {
    aberth::find_roots_monic(&sym.tau_poly_at(xi))
}

/// `ln |disc p|` of a monic polynomial via the Sylvester resultant of `p`
/// and `p'`, evaluated as a log-magnitude determinant. The conventional sign
/// `(-1)^{m(m-1)/2}` does not matter in magnitude form. Degree 1 gives 0
/// (discriminant 1); degree 0 is rejected by the caller's construction.
pub fn log_abs_discriminant(coeffs: &[C64]) -> f64 {
    let m = coeffs.len() - 1;
    if m <= 1 {
        return 0.0;
    }
    let size = 2 * m - 1;
    let mut s = CMat::zeros(size);
    // m-1 rows of p shifted, then m rows of p' shifted.
    for r in 0..m - 1 {
        for (k, &c) in coeffs.iter().enumerate() {
            s.set(r, r + k, c);
        }
    }
    for r in 0..m {
        for k in 0..m {
            let dc = coeffs[k] * (m - k) as f64;
            s.set(m - 1 + r, r + k, dc);
        }
    }
    s.log_abs_det()
}

/// `|disc| / <|xi|>^{m(m-1)}` with the power handled in log space so high
/// orders cannot overflow. Saturates instead of returning inf.
pub fn normalized_discriminant(coeffs: &[C64], xi: &[f64]) -> f64 {
    let m = coeffs.len() - 1;
    let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let log_norm = (m * (m - 1)) as f64 * bracket(r).ln();
    let log_disc = log_abs_discriminant(coeffs);
    (log_disc - log_norm).clamp(-745.0, 700.0).exp()
}

/// The complex discriminant value, `(-1)^{m(m-1)/2} Res(p, p')` for a monic
/// `p`. Plain determinant arithmetic, so only sensible at moderate orders
/// and coefficient sizes; the zero-refinement path guards the order itself.
pub fn discriminant(coeffs: &[C64]) -> C64 {
    let m = coeffs.len() - 1;
    if m <= 1 {
        return C64::new(1.0, 0.0);
    }
    let size = 2 * m - 1;
    let mut s = CMat::zeros(size);
    for r in 0..m - 1 {
        for (k, &c) in coeffs.iter().enumerate() {
            s.set(r, r + k, c);
        }
    }
    for r in 0..m {
        for k in 0..m {
            s.set(m - 1 + r, r + k, coeffs[k] * (m - k) as f64);
        }
    }
    let sign = if (m * (m - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    s.det() * sign
}

/// Characteristic roots at every grid node, branch-consistent after
/// `track_branches` (which `compute` runs automatically).
#[derive(Debug, Clone)]
pub struct RootField {
    pub grid: FrequencyGrid,
    pub m: usize,
    /// Node-major, branch-minor: `roots[node * m + k]` is branch `k`.
    pub roots: Vec<C64>,
    /// Normalized discriminant magnitude per node.
    pub disc_norm: Vec<f64>,
    /// Worst backward residual per node, in multiples of the rounding floor.
    pub residual: Vec<f64>,
}

impl RootField {
    pub fn compute(sym: &OperatorSymbol, grid: &FrequencyGrid) -> Result<RootField> {
        let nodes = grid.num_nodes();
        let per_node: Vec<(Vec<C64>, f64, f64)> = (0..nodes)
            .into_par_iter()
            .map(|i| -> Result<(Vec<C64>, f64, f64)> {
                let xi = grid.node(i);
                let coeffs = sym.tau_poly_at(&xi);
                let roots = aberth::find_roots_monic(&coeffs)?;
                let res = roots
                    .iter()
                    .map(|&z| aberth::backward_residual(&coeffs, z))
                    .fold(0.0, f64::max);
                let disc = normalized_discriminant(&coeffs, &xi);
                Ok((roots, res, disc))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut roots = Vec::with_capacity(nodes * sym.m);
        let mut residual = Vec::with_capacity(nodes);
        let mut disc_norm = Vec::with_capacity(nodes);
        for (r, res, d) in per_node {
            roots.extend(r);
            residual.push(res);
            disc_norm.push(d);
        }
        let mut field =
            RootField { grid: grid.clone(), m: sym.m, roots, disc_norm, residual };
        field.track_branches();
        Ok(field)
    }

    pub fn node_roots(&self, index: usize) -> &[C64] {
        &self.roots[index * self.m..(index + 1) * self.m]
    }

    pub fn worst_residual(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, f64::max)
    }

    /// Reorder per-node roots so each branch index follows one continuous
    /// root surface: breadth-first from the largest-radius node (where
    /// strict hyperbolicity separates roots best), matching every node to
    /// its search parent by minimum total root displacement.
    fn track_branches(&mut self) {
        let m = self.m;
        if m <= 1 {
            return;
        }
        let nodes = self.grid.num_nodes();
        let seed = (0..nodes)
            .max_by(|&a, &b| {
                self.grid
                    .node_radius(a)
                    .partial_cmp(&self.grid.node_radius(b))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .expect("grid has nodes");
        {
            let slice = &mut self.roots[seed * m..(seed + 1) * m];
            slice.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        }
        let mut visited = vec![false; nodes];
        visited[seed] = true;
        let mut queue = VecDeque::new();
        queue.push_back(seed);
        let mut cost = vec![0.0f64; m * m];
        let mut buf = vec![C64::new(0.0, 0.0); m];
        while let Some(parent) = queue.pop_front() {
            for axis in 0..self.grid.n {
                for dir in [-1isize, 1] {
                    let Some(child) = self.grid.neighbor(parent, axis, dir) else {
                        continue;
                    };
                    if visited[child] {
                        continue;
                    }
                    visited[child] = true;
                    for i in 0..m {
                        let p = self.roots[parent * m + i];
                        for j in 0..m {
                            cost[i * m + j] = (p - self.roots[child * m + j]).norm();
                        }
                    }
                    let assign = if m <= EXACT_ASSIGNMENT_MAX_ORDER {
                        min_cost_assignment(&cost, m)
                    } else {
                        greedy_assignment(&cost, m)
                    };
                    for i in 0..m {
                        buf[i] = self.roots[child * m + assign[i]];
                    }
                    self.roots[child * m..(child + 1) * m].copy_from_slice(&buf);
                    queue.push_back(child);
                }
            }
        }
    }
}

/// A connected set of nodes where the normalized discriminant indicates
/// coinciding (or nearly coinciding) roots.
#[derive(Debug, Clone)]
pub struct MultiplicityCluster {
    pub nodes: Vec<usize>,
    /// Node with the smallest discriminant, taken as the cluster location.
    pub argmin_node: usize,
    pub center: Vec<f64>,
    pub min_disc: f64,
    /// Largest distance from `center` among member nodes.
    pub radius: f64,
    /// Number of branches that coincide at the cluster (single-linkage
    /// grouping of the roots at `argmin_node`).
    pub l_coinciding: usize,
    /// Mean of the coinciding root group.
    pub group_center: C64,
}

/// Default multiplier on the local discriminant slope when flagging
/// near-zero nodes.
pub const CLUSTER_SENSITIVITY: f64 = 2.0;

/// Two tracked branches count as coinciding when their gap is below this
/// fraction of the frequency bracket, measured at the refined cluster
/// center. Sits well above root-conditioning noise for multiplicities up to
/// six and well below any honest branch separation.
pub const COINCIDENCE_GAP_TOL: f64 = 5e-3;

/// Largest order for which the cluster center is refined off-grid by
/// Newton iteration on the complex discriminant (plain determinant
/// arithmetic; very high orders would overflow it).
const REFINE_MAX_ORDER: usize = 12;

/// Find root-coincidence clusters. A node is flagged when its normalized
/// discriminant either vanishes outright or is small enough that the local
/// per-step variation could bring it to zero within about `sensitivity`
/// grid steps. Flagged nodes are grouped into axis-adjacent connected
/// components; each component's center is then refined off the grid so the
/// coincidence count does not depend on how close a node happens to land to
/// the true root-collision point.
pub fn multiplicity_clusters(
    sym: &OperatorSymbol,
    field: &RootField,
    sensitivity: f64,
) -> Vec<MultiplicityCluster> {
    let grid = &field.grid;
    let nodes = grid.num_nodes();
    let d = &field.disc_norm;

    let flagged: Vec<bool> = (0..nodes)
        .map(|i| {
            if d[i] <= 1e-12 {
                return true;
            }
            let mut lip = 0.0f64;
            for axis in 0..grid.n {
                for dir in [-1isize, 1] {
                    if let Some(j) = grid.neighbor(i, axis, dir) {
                        let diff = (d[j] - d[i]).abs();
                        if diff.is_finite() {
                            lip = lip.max(diff);
                        }
                    }
                }
            }
            d[i] <= sensitivity * lip
        })
        .collect();

    let mut seen = vec![false; nodes];
    let mut clusters = Vec::new();
    for start in 0..nodes {
        if !flagged[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::new();
        queue.push_back(start);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            for axis in 0..grid.n {
                for dir in [-1isize, 1] {
                    if let Some(j) = grid.neighbor(i, axis, dir) {
                        if flagged[j] && !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        comp.sort_unstable();
        let argmin = comp
            .iter()
            .cloned()
            .min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)))
            .unwrap();
        let center = if field.m <= REFINE_MAX_ORDER {
            refine_discriminant_zero(sym, &grid.node(argmin), 2.0 * grid.step())
        } else {
            grid.node(argmin)
        };
        let min_disc = normalized_discriminant(&sym.tau_poly_at(&center), &center);
        let radius = comp
            .iter()
            .map(|&i| {
                let x = grid.node(i);
                x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        let (l, group_center) = coinciding_group_at(sym, &center);
        clusters.push(MultiplicityCluster {
            nodes: comp,
            argmin_node: argmin,
            center,
            min_disc,
            radius,
            l_coinciding: l,
            group_center,
        });
    }
    clusters
}

/// Damped Gauss-Newton on the complex discriminant as a map R^n -> R^2,
/// started from `start` and confined to a box of half-width `box_half`.
/// Finite-difference Jacobian; returns the best iterate found (which is the
/// start itself when the discriminant has no nearby zero).
pub fn refine_discriminant_zero(sym: &OperatorSymbol, start: &[f64], box_half: f64) -> Vec<f64> {
    let n = sym.n;
    let disc_at = |xi: &[f64]| -> C64 { discriminant(&sym.tau_poly_at(xi)) };
    let mut x = start.to_vec();
    let mut fx = disc_at(&x);
    let mut best = x.clone();
    let mut best_norm = fx.norm();
    if best_norm == 0.0 {
        return best;
    }
    let fd = (box_half * 1e-4).max(1e-9);
    for _iter in 0..40 {
        // Jacobian of (Re D, Im D), central differences.
        let mut jac = vec![0.0f64; 2 * n];
        for a in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[a] += fd;
            xm[a] -= fd;
            let dp = disc_at(&xp);
            let dm = disc_at(&xm);
            jac[a] = (dp.re - dm.re) / (2.0 * fd);
            jac[n + a] = (dp.im - dm.im) / (2.0 * fd);
        }
        // Ridge-regularized normal equations J^T J s = J^T f; the tiny ridge
        // turns the underdetermined n=3 case into the least-norm step.
        let mut ata = vec![0.0f64; n * n];
        let mut atb = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..n {
                ata[i * n + j] = jac[i] * jac[j] + jac[n + i] * jac[n + j];
            }
            atb[i] = jac[i] * fx.re + jac[n + i] * fx.im;
        }
        let ridge = 1e-12 * (0..n).map(|i| ata[i * n + i]).sum::<f64>().max(1e-300);
        for i in 0..n {
            ata[i * n + i] += ridge;
        }
        let Some(step) = crate::linalg::solve_dense(&mut ata, &mut atb, n) else {
            break;
        };
        // Backtracking line search, box-clamped.
        let mut lambda = 1.0f64;
        let mut advanced = false;
        for _bt in 0..20 {
            let cand: Vec<f64> = x
                .iter()
                .zip(&step)
                .zip(start)
                .map(|((&xi, &s), &s0)| {
                    (xi - lambda * s).clamp(s0 - box_half, s0 + box_half)
                })
                .collect();
            let fc = disc_at(&cand);
            if fc.norm() < fx.norm() {
                x = cand;
                fx = fc;
                advanced = true;
                break;
            }
            lambda *= 0.5;
        }
        if fx.norm() < best_norm {
            best_norm = fx.norm();
            best = x.clone();
        }
        if !advanced || best_norm == 0.0 {
            break;
        }
    }
    best
}

/// Single-linkage grouping of the characteristic roots at one frequency;
/// returns the largest group's size and mean (ties resolved toward the
/// lexicographically smallest mean).
pub fn coinciding_group_at(sym: &OperatorSymbol, xi: &[f64]) -> (usize, C64) {
    let m = sym.m;
    let roots = match roots_at(sym, xi) {
        Ok(r) => r,
        Err(_) => return (1, C64::new(0.0, 0.0)),
    };
    let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = bracket(r) * COINCIDENCE_GAP_TOL;
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..m {
        for j in i + 1..m {
            if (roots[i] - roots[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut best_size = 0usize;
    let mut best_center = roots.first().cloned().unwrap_or(C64::new(0.0, 0.0));
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for rep in 0..m {
        if find(&mut parent, rep) != rep {
            continue;
        }
        let members: Vec<usize> = (0..m).filter(|&i| find(&mut parent, i) == rep).collect();
        let center = members.iter().map(|&i| roots[i]).sum::<C64>() / members.len() as f64;
        let key = (center.re, center.im);
        if members.len() > best_size || (members.len() == best_size && key < best_key) {
            best_size = members.len();
            best_center = center;
            best_key = key;
        }
    }
    (best_size, best_center)
}

/// Estimate the codimension of a node set from how the count of nodes
/// within distance eps grows: the eps-neighborhood volume of a
/// codimension-c set scales like eps^c. Returns the raw log-log slope over
/// eps in {2, 4, 8} grid steps; callers clamp to [1, n].
pub fn codim_estimate(grid: &FrequencyGrid, set: &[usize]) -> Option<f64> {
    if set.is_empty() {
        return None;
    }
    let mut mask = vec![false; grid.num_nodes()];
    for &i in set {
        mask[i] = true;
    }
    let dist = grid.distance_to_set(&mask);
    let h = grid.step();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut prev = 0usize;
    for factor in [2.0, 4.0, 8.0] {
        let eps = factor * h;
        let count = dist.iter().filter(|&&v| v <= eps * 1.000001).count();
        if count <= prev {
            return None;
        }
        prev = count;
        lx.push(eps.ln());
        ly.push((count as f64).ln());
    }
    fit_line(&lx, &ly).ok().map(|(_, slope, _, _)| slope)
}

/// Stream the tracked root field as CSV: one row per node and branch.
pub fn write_roots_csv<W: io::Write>(field: &RootField, out: &mut W) -> io::Result<()> {
    let n = field.grid.n;
    write!(out, "index")?;
    for a in 1..=n {
        write!(out, ",xi{a}")?;
    }
    writeln!(out, ",branch,re_tau,im_tau,disc_norm,residual")?;
    for i in 0..field.grid.num_nodes() {
        let xi = field.grid.node(i);
        for k in 0..field.m {
            let z = field.roots[i * field.m + k];
            write!(out, "{i}")?;
            for x in &xi {
                write!(out, ",{x}")?;
            }
            writeln!(out, ",{k},{},{},{},{}", z.re, z.im, field.disc_norm[i], field.residual[i])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{MultiIndex, SparsePoly};
    use crate::Error;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// tau^2 - i tau - |xi|^2 in one dimension.
    fn dissipative_wave() -> OperatorSymbol {
        let p1 = SparsePoly::constant(1, c(0.0, -1.0));
        let mut p2 = SparsePoly::zero(1);
        p2.add_term(MultiIndex(vec![2]), c(-1.0, 0.0));
        OperatorSymbol::new(1, 2, vec![p1, p2]).unwrap()
    }

    fn from_roots(roots: &[C64]) -> Vec<C64> {
        let mut coeffs = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (i, &a) in coeffs.iter().enumerate() {
                next[i] += a;
                next[i + 1] -= a * r;
            }
            coeffs = next;
        }
        coeffs
    }

    #[test]
    fn sylvester_discriminant_matches_root_gap_product() {
        // Quadratic: disc = b^2 - 4c.
        let coeffs = vec![c(1.0, 0.0), c(0.0, -1.0), c(-0.09, 0.0)];
        let expect = (c(0.0, -1.0) * c(0.0, -1.0) - c(-0.09, 0.0) * 4.0).norm().ln();
        assert!((log_abs_discriminant(&coeffs) - expect).abs() < 1e-10);

        // Generic cubic and quintic: compare with prod_{i<j} |r_i - r_j|^2.
        for roots in [
            vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.5, 0.3)],
            vec![c(1.0, 0.1), c(-2.0, 0.4), c(0.3, -1.0), c(2.5, 0.0), c(0.0, 3.0)],
        ] {
            let coeffs = from_roots(&roots);
            let mut expect = 0.0;
            for i in 0..roots.len() {
                for j in i + 1..roots.len() {
                    expect += 2.0 * (roots[i] - roots[j]).norm().ln();
                }
            }
            let got = log_abs_discriminant(&coeffs);
            assert!((got - expect).abs() < 1e-8, "got {got}, expected {expect}");
        }
    }

    #[test]
    fn normalized_discriminant_vanishes_at_double_root() {
        let sym = dissipative_wave();
        // |4 xi^2 - 1| / (1 + xi^2): zero at 1/2, positive elsewhere.
        let at_half = normalized_discriminant(&sym.tau_poly_at(&[0.5]), &[0.5]);
        assert!(at_half < 1e-14);
        let at_zero = normalized_discriminant(&sym.tau_poly_at(&[0.0]), &[0.0]);
        assert!((at_zero - 1.0).abs() < 1e-12);
        // High-order saturation guard: huge coefficients must not overflow.
        let big = vec![c(1.0, 0.0), c(1e160, 0.0), c(1e160, 0.0), c(1.0, 0.0)];
        assert!(normalized_discriminant(&big, &[0.0]).is_finite());
    }

    #[test]
    fn tracked_branches_are_continuous_and_satisfy_vieta() {
        let sym = dissipative_wave();
        let grid = FrequencyGrid::new(1, 2.0, 257).unwrap();
        let field = RootField::compute(&sym, &grid).unwrap();
        assert!(field.worst_residual() < 1e3);
        // Sum of roots = -p_1 = i everywhere.
        for i in 0..grid.num_nodes() {
            let s: C64 = field.node_roots(i).iter().sum();
            assert!((s - c(0.0, 1.0)).norm() < 1e-9);
        }
        // Branch continuity: adjacent nodes stay close per branch. Near the
        // double root the branch speed is ~(xi - 1/2)^(-1/2), so the bound
        // reflects sqrt-scale steps, not smooth ones.
        let mut worst = 0.0f64;
        for i in 0..grid.num_nodes() - 1 {
            for k in 0..2 {
                let jump = (field.roots[i * 2 + k] - field.roots[(i + 1) * 2 + k]).norm();
                worst = worst.max(jump);
            }
        }
        assert!(worst < 0.5, "branch tracking jumped by {worst}");
        // Seed ordering: the largest-radius node is xi = +2 (last index wins
        // ties toward lower index; both corners have radius 2, so index 0,
        // xi = -2, is not the seed — the max_by tie-break keeps the first
        // maximum it sees scanning forward). Just check sortedness there.
        let seed = grid.num_nodes() - 1;
        let r = field.node_roots(seed);
        assert!(r[0].re <= r[1].re);
    }

    #[test]
    fn multiplicity_clusters_found_at_half_speed_points() {
        let sym = dissipative_wave();
        // 0.5 lands exactly on this grid.
        let grid = FrequencyGrid::new(1, 2.0, 2049).unwrap();
        let field = RootField::compute(&sym, &grid).unwrap();
        let clusters = multiplicity_clusters(&sym, &field, CLUSTER_SENSITIVITY);
        assert_eq!(clusters.len(), 2, "expected clusters at +-1/2");
        for cl in &clusters {
            assert!((cl.center[0].abs() - 0.5).abs() < 1e-6, "refined center {:?}", cl.center);
            assert_eq!(cl.l_coinciding, 2);
            assert!((cl.group_center - c(0.0, 0.5)).norm() < 1e-3);
            assert!(cl.min_disc < 1e-10);
            assert!(cl.radius < 0.1);
        }

        // Coincidence points that fall between grid nodes must still be
        // detected and refined back onto the true location.
        let grid2 = FrequencyGrid::new(1, 2.1, 257).unwrap();
        let field2 = RootField::compute(&sym, &grid2).unwrap();
        let clusters2 = multiplicity_clusters(&sym, &field2, CLUSTER_SENSITIVITY);
        assert_eq!(clusters2.len(), 2);
        for cl in &clusters2 {
            assert!((cl.center[0].abs() - 0.5).abs() < 1e-6, "refined center {:?}", cl.center);
            assert_eq!(cl.l_coinciding, 2);
            assert!((cl.group_center - c(0.0, 0.5)).norm() < 1e-3);
        }
    }

    #[test]
    fn no_clusters_for_separated_roots() {
        // tau^2 - i tau - xi^2 - 1/2 i xi ... keep it simple: distinct speeds
        // and distinct damping, roots never meet.
        let mut p1 = SparsePoly::constant(1, c(0.0, -1.5));
        p1.add_term(MultiIndex(vec![1]), c(-3.0, 0.0));
        let mut p2 = SparsePoly::zero(1);
        p2.add_term(MultiIndex(vec![2]), c(2.0, 0.0));
        p2.add_term(MultiIndex(vec![1]), c(0.0, 1.0));
        p2.add_term(MultiIndex(vec![0]), c(-0.5, 0.0));
        // (tau - 2 xi - i)(tau - xi - i/2) = tau^2 - (3 xi + 1.5 i) tau + ...
        let sym = OperatorSymbol::new(1, 2, vec![p1, p2]).unwrap();
        let grid = FrequencyGrid::new(1, 3.0, 513).unwrap();
        let field = RootField::compute(&sym, &grid).unwrap();
        assert!(multiplicity_clusters(&sym, &field, CLUSTER_SENSITIVITY).is_empty());
    }

    #[test]
    fn triple_root_symbol_yields_one_full_cluster() {
        // (tau - i)^3: the discriminant vanishes identically, every node is
        // flagged, and the grouping reports all three branches coinciding.
        let p1 = SparsePoly::constant(1, c(0.0, -3.0));
        let p2 = SparsePoly::constant(1, c(-3.0, 0.0));
        let p3 = SparsePoly::constant(1, c(0.0, 1.0));
        let sym = OperatorSymbol::new(1, 3, vec![p1, p2, p3]).unwrap();
        let grid = FrequencyGrid::new(1, 1.0, 65).unwrap();
        let field = RootField::compute(&sym, &grid).unwrap();
        let clusters = multiplicity_clusters(&sym, &field, CLUSTER_SENSITIVITY);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].l_coinciding, 3);
        assert!((clusters[0].group_center - c(0.0, 1.0)).norm() < 1e-3);
        assert_eq!(clusters[0].nodes.len(), grid.num_nodes());
    }

    #[test]
    fn codim_estimate_distinguishes_points_from_lines() {
        let g1 = FrequencyGrid::new(1, 2.0, 513).unwrap();
        let mid = g1.nearest_node(&[0.0]);
        let slope = codim_estimate(&g1, &[mid]).unwrap();
        assert!((slope - 1.0).abs() < 0.3, "point in 1-d: {slope}");

        let g2 = FrequencyGrid::new(2, 2.0, 129).unwrap();
        let center = g2.nearest_node(&[0.0, 0.0]);
        let slope = codim_estimate(&g2, &[center]).unwrap();
        assert!((slope - 2.0).abs() < 0.3, "point in 2-d: {slope}");

        // A full grid line has codimension 1.
        let line: Vec<usize> =
            (0..129).map(|k| g2.index_of(&[64, k])).collect();
        let slope = codim_estimate(&g2, &line).unwrap();
        assert!((slope - 1.0).abs() < 0.3, "line in 2-d: {slope}");
    }

    #[test]
    fn csv_export_is_deterministic_and_complete() {
        let sym = dissipative_wave();
        let grid = FrequencyGrid::new(1, 1.0, 33).unwrap();
        let field = RootField::compute(&sym, &grid).unwrap();
        let mut a = Vec::new();
        write_roots_csv(&field, &mut a).unwrap();
        let field2 = RootField::compute(&sym, &grid).unwrap();
        let mut b = Vec::new();
        write_roots_csv(&field2, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 33 * 2);
        assert!(lines[0].starts_with("index,xi1,branch"));
    }

    #[test]
    fn compute_propagates_solver_failures() {
        // NaN coefficient: p_2 contains NaN -> every node fails.
        let mut p2 = SparsePoly::zero(1);
        p2.add_term(MultiIndex(vec![2]), c(f64::NAN, 0.0));
        let sym = OperatorSymbol::new(1, 2, vec![SparsePoly::zero(1), p2]);
        // NaN never passes the realness check cleanly; build via a finite
        // symbol and poison the coefficient after construction instead.
        let mut sym = match sym {
            Ok(s) => s,
            Err(_) => {
                let mut p2 = SparsePoly::zero(1);
                p2.add_term(MultiIndex(vec![2]), c(-1.0, 0.0));
                OperatorSymbol::new(1, 2, vec![SparsePoly::zero(1), p2]).unwrap()
            }
        };
        let key = MultiIndex(vec![2]);
        if let Some(v) = sym.tau_coeffs[1].terms.get_mut(&key) {
            *v = c(f64::NAN, 0.0);
        }
        let grid = FrequencyGrid::new(1, 1.0, 9).unwrap();
        match RootField::compute(&sym, &grid) {
            Err(Error::Numerical(_)) => {}
            other => panic!("expected a numerical error, got {other:?}"),
        }
    }
}
