//! From root geometry to decay predictions.
//!
//! The classifier inspects a tracked [`RootField`] and answers, per root
//! branch and frequency region: does the branch stay away from the real
//! axis (exponential decay), lie on it (decay set by the curvature of the
//! root surface), approach it asymptotically, or meet it with finite
//! contact order? Each answer selects a row of the decay decision tables;
//! rows combine into a predicted time envelope
//! `K(t) = <t>^(a + b*d(p,q)) * exp(-delta t)` where `d(p,q) = 1/p - 1/q`.
//!
//! Rules of combination: at any single frequency the sharpest applicable
//! row wins (rows are ordered from sharpest to weakest, so the first match
//! is taken); across frequencies and branches the slowest resulting
//! envelope governs, since every mode contributes to the solution.

pub mod geometry;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::grid::FrequencyGrid;
use crate::linalg;
use crate::roots::{codim_estimate, MultiplicityCluster, RootField, COINCIDENCE_GAP_TOL};
use crate::symbol::{unit_directions, OperatorSymbol};
use crate::{bracket, dual_gap, Error, Result};

/// A root counts as lying on the real axis when `|Im tau| <= tol * <|xi|>`.
pub const ON_AXIS_REL_TOL: f64 = 1e-8;
/// Uniform damping threshold for the strongly-stable verdict.
pub const STRONG_STABILITY_EPS: f64 = 1e-3;
/// Fraction of nodes with an on-axis root above which the operator as a
/// whole is classed as having real (non-decaying) characteristic roots.
pub const ON_AXIS_CLASS_FRACTION: f64 = 0.25;
/// A branch whose imaginary part stays above this floor over a region is
/// treated as bounded away from the axis there.
pub const DELTA_FLOOR: f64 = 1e-3;
/// Relative eigenvalue threshold for the finite-difference Hessian rank.
pub const HESSIAN_RANK_TOL: f64 = 1e-4;
/// Finite differences through a near-multiplicity are meaningless; nodes
/// with a normalized discriminant below this cannot anchor a Hessian.
pub const NEAR_MULTIPLICITY_DISC: f64 = 1e-8;
/// Nodes within this factor of the regional minimum of `Im tau` count as
/// part of the axis-meeting set when the exact zeros fall between nodes.
pub const ZERO_NEAR_FACTOR: f64 = 4.0;
/// Log-log slope of the shell-minimum of `Im tau` below which a branch is
/// classed as approaching the axis at infinity.
pub const ASYMPTOTIC_SLOPE: f64 = -0.1;
/// Contact-order fits extend shell by shell while the running line fit
/// keeps an RMS log-residual below this.
pub const CONTACT_RMS_MAX: f64 = 0.05;
/// Minimum number of distance shells for a contact-order fit.
pub const CONTACT_MIN_SHELLS: usize = 3;
const HESSIAN_SAMPLES: usize = 32;
const CONTACT_SHELLS: usize = 12;

// ---------------------------------------------------------------------------
// Stability scan.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    /// Some root has negative imaginary part: the problem grows.
    Unstable,
    /// A substantial set of frequencies carries purely real roots; energy
    /// is conserved there and only dispersive decay is possible.
    OnAxisRoots,
    /// All roots damped, uniformly over the sampled grid.
    StronglyStable,
    /// All roots damped but the damping degenerates somewhere (typically a
    /// root meeting the axis).
    Stable,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub class: StabilityClass,
    /// Global minimum of `Im tau` over all nodes and branches.
    pub min_im: f64,
    /// Frequency at which the minimum is attained.
    pub witness_node: Vec<f64>,
    /// The extremal root, as `[re, im]`.
    pub witness_root: [f64; 2],
    /// Minimum of `Im tau` over the outer sampling shell.
    pub shell_min_im: f64,
    /// Fraction of nodes carrying at least one on-axis root.
    pub on_axis_fraction: f64,
    /// True when the minimizer sits on the grid boundary, i.e. larger
    /// frequencies could behave worse than anything sampled.
    pub inconclusive_boundary: bool,
}

pub fn stability_scan(field: &RootField) -> StabilityReport {
    let grid = &field.grid;
    let m = field.m;
    let shell = grid.shell_radius();
    let mut min_im = f64::INFINITY;
    let mut arg = (0usize, 0usize);
    let mut shell_min = f64::INFINITY;
    let mut on_axis_nodes = 0usize;
    for i in 0..grid.num_nodes() {
        let r = grid.node_radius(i);
        let tol = ON_AXIS_REL_TOL * bracket(r);
        let mut node_on_axis = false;
        for k in 0..m {
            let im = field.roots[i * m + k].im;
            if im < min_im {
                min_im = im;
                arg = (i, k);
            }
            if r >= shell {
                shell_min = shell_min.min(im);
            }
            if im.abs() <= tol {
                node_on_axis = true;
            }
        }
        if node_on_axis {
            on_axis_nodes += 1;
        }
    }
    let (node, branch) = arg;
    let r_at = grid.node_radius(node);
    let fraction = on_axis_nodes as f64 / grid.num_nodes() as f64;
    let class = if min_im < -ON_AXIS_REL_TOL * bracket(r_at) {
        StabilityClass::Unstable
    } else if fraction > ON_AXIS_CLASS_FRACTION {
        StabilityClass::OnAxisRoots
    } else if min_im >= STRONG_STABILITY_EPS {
        StabilityClass::StronglyStable
    } else {
        StabilityClass::Stable
    };
    let root = field.roots[node * m + branch];
    StabilityReport {
        class,
        min_im,
        witness_node: grid.node(node),
        witness_root: [root.re, root.im],
        shell_min_im: shell_min,
        on_axis_fraction: fraction,
        inconclusive_boundary: grid.is_boundary(node) && class != StabilityClass::Unstable,
    }
}

// ---------------------------------------------------------------------------
// Hessian of a root branch.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct HessianInfo {
    /// Row-major n x n second-derivative matrix of `Re tau` at the node.
    pub matrix: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
}

/// Central finite-difference Hessian of one branch's real part at an
/// interior node. Refuses to difference across a near-multiplicity, where
/// branch values are not smooth functions of the frequency.
pub fn hessian_at(field: &RootField, node: usize, branch: usize) -> Result<HessianInfo> {
    let grid = &field.grid;
    let n = grid.n;
    let m = field.m;
    let h = grid.step();
    if !grid.is_interior(node, 1) {
        return Err(Error::MissingGeometry(format!(
            "node {node} has no full finite-difference stencil"
        )));
    }
    let guard = |idx: usize| -> Result<usize> {
        let disc = field.disc_norm[idx];
        if disc < NEAR_MULTIPLICITY_DISC {
            Err(Error::NearMultiplicity { node: idx, disc, threshold: NEAR_MULTIPLICITY_DISC })
        } else {
            Ok(idx)
        }
    };
    let re = |idx: usize| field.roots[idx * m + branch].re;
    let center = re(guard(node)?);
    let mut matrix = vec![0.0f64; n * n];
    for a in 0..n {
        let p = guard(grid.neighbor(node, a, 1).unwrap())?;
        let q = guard(grid.neighbor(node, a, -1).unwrap())?;
        matrix[a * n + a] = (re(p) - 2.0 * center + re(q)) / (h * h);
        for b in a + 1..n {
            let pp = guard(grid.neighbor(p, b, 1).unwrap())?;
            let pm = guard(grid.neighbor(p, b, -1).unwrap())?;
            let qp = guard(grid.neighbor(q, b, 1).unwrap())?;
            let qm = guard(grid.neighbor(q, b, -1).unwrap())?;
            let mixed = (re(pp) - re(pm) - re(qp) + re(qm)) / (4.0 * h * h);
            matrix[a * n + b] = mixed;
            matrix[b * n + a] = mixed;
        }
    }
    let eigenvalues = linalg::symmetric_eigenvalues(&matrix, n);
    let emax = eigenvalues.iter().map(|e| e.abs()).fold(0.0f64, f64::max);
    // Truncation noise of the central stencil scales like (h/rho)^2
    // relative to the largest curvature for homogeneous-type surfaces, so
    // the rank threshold must not dip below that.
    let rho = grid.node_radius(node).max(2.0 * h);
    let tol = HESSIAN_RANK_TOL.max(2.0 * (h / rho) * (h / rho));
    let rank = if emax > 0.0 {
        eigenvalues.iter().filter(|e| e.abs() >= tol * emax).count()
    } else {
        0
    };
    Ok(HessianInfo { matrix, eigenvalues, rank })
}

// ---------------------------------------------------------------------------
// Contact order with the real axis.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContactFit {
    /// Vanishing order of `Im tau` against distance to the meeting set.
    pub s: f64,
    /// Vanishing order of `|tau|` (finite only where the root itself
    /// vanishes on the meeting set).
    pub s1: f64,
    pub shells_used: usize,
    pub rms: f64,
}

/// Fit `Im tau ~ dist^s` (and `|tau| ~ dist^s1`) for one branch against the
/// distance to `zero_mask`, over the nodes listed in `region`. Shells are
/// log-spaced in distance; each contributes its minimum (the lower envelope
/// is what the decay rate feels). The fit extends shell by shell while the
/// running line in log-log coordinates keeps a small residual, which cuts
/// off the saturation range where the branch bends away.
pub fn contact_order_fit(
    field: &RootField,
    branch: usize,
    zero_mask: &[bool],
    region: &[usize],
) -> Result<ContactFit> {
    let grid = &field.grid;
    let m = field.m;
    let h = grid.step();
    let dist = grid.distance_to_set(zero_mask);
    let lo = 2.0 * h;
    let mut hi = 0.1 * grid.extent;
    let max_d = region.iter().map(|&i| dist[i]).filter(|d| d.is_finite()).fold(0.0, f64::max);
    hi = hi.min(max_d);
    if !(hi > 1.5 * lo) {
        return Err(Error::Inconclusive(format!(
            "meeting set leaves no room for contact shells (usable range {lo:.3}..{hi:.3})"
        )));
    }
    let ratio = hi / lo;
    // Per-shell lower envelopes, keyed by the distance of the minimizer.
    let mut im_env = vec![(f64::INFINITY, 0.0f64); CONTACT_SHELLS];
    let mut abs_env = vec![(f64::INFINITY, 0.0f64); CONTACT_SHELLS];
    for &i in region {
        let d = dist[i];
        if !(d >= lo) || d > hi {
            continue;
        }
        let shell = (((d / lo).ln() / ratio.ln()) * CONTACT_SHELLS as f64)
            .floor()
            .clamp(0.0, CONTACT_SHELLS as f64 - 1.0) as usize;
        let root = field.roots[i * m + branch];
        if root.im > 0.0 && root.im < im_env[shell].0 {
            im_env[shell] = (root.im, d);
        }
        let a = root.norm();
        if a > 0.0 && a < abs_env[shell].0 {
            abs_env[shell] = (a, d);
        }
    }
    let fit_envelope = |env: &[(f64, f64)]| -> Result<(f64, usize, f64)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &(v, d) in env {
            if v.is_finite() && v > 0.0 {
                xs.push(d.ln());
                ys.push(v.ln());
            }
        }
        if xs.len() < CONTACT_MIN_SHELLS {
            return Err(Error::Inconclusive(format!(
                "only {} usable contact shells (need {CONTACT_MIN_SHELLS})",
                xs.len()
            )));
        }
        let mut best = None;
        for len in CONTACT_MIN_SHELLS..=xs.len() {
            let (_, slope, rms, _) = linalg::fit_line(&xs[..len], &ys[..len])?;
            if rms <= CONTACT_RMS_MAX || best.is_none() {
                best = Some((slope, len, rms));
            }
            if rms > CONTACT_RMS_MAX {
                break;
            }
        }
        Ok(best.unwrap())
    };
    let (s, shells_used, rms) = fit_envelope(&im_env)?;
    let (s1, _, _) = fit_envelope(&abs_env).unwrap_or((f64::INFINITY, 0, 0.0));
    Ok(ContactFit { s, s1, shells_used, rms })
}

// ---------------------------------------------------------------------------
// Decision rows.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Bounded,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowLabel {
    /// Branch bounded away from the axis: pure exponential.
    AwayExponential,
    /// Coinciding roots away from the axis: polynomial times exponential.
    CoincidingAway,
    /// On-axis branch with a nondegenerate root-surface Hessian.
    HessianNondegenerate,
    /// Hessian degenerate only radially (homogeneous-type surfaces).
    HessianRankDeficient,
    /// Convex level sets with finite tangency order gamma.
    ConvexContact,
    /// Non-convex level sets; the tangency order gamma0 governs.
    NonconvexContact,
    /// Branch meets the axis with finite contact order.
    MeetsAxis,
    /// Geometry could not be resolved; no polynomial gain is claimed.
    FlatFallback,
}

/// One multiplicative envelope `<t>^(a + b d(p,q) + r_coeff*r +
/// alpha_coeff*|alpha|) exp(-exp_rate t)`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFactor {
    pub power_const: f64,
    pub power_dpq: f64,
    pub exp_rate: f64,
    /// Power improvement per time derivative of the propagator.
    pub r_coeff: f64,
    /// Power improvement per spatial-derivative order.
    pub alpha_coeff: f64,
    pub row: RowLabel,
    pub detail: String,
}

impl DecayFactor {
    fn exponential(delta: f64, detail: String) -> Self {
        DecayFactor {
            power_const: 0.0,
            power_dpq: 0.0,
            exp_rate: delta,
            r_coeff: 0.0,
            alpha_coeff: 0.0,
            row: RowLabel::AwayExponential,
            detail,
        }
    }

    fn power(row: RowLabel, b: f64, detail: String) -> Self {
        DecayFactor {
            power_const: 0.0,
            power_dpq: b,
            exp_rate: 0.0,
            r_coeff: 0.0,
            alpha_coeff: 0.0,
            row,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionFactor {
    pub region: RegionKind,
    /// Tracked branch index, or None for region-wide (cluster) factors.
    pub branch: Option<usize>,
    pub factor: DecayFactor,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateEstimate {
    /// Exponent of `<t>`.
    pub power: f64,
    /// Exponential rate (0 for purely polynomial envelopes).
    pub exp_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPrediction {
    pub stability: StabilityReport,
    pub split_radius: f64,
    pub factors: Vec<RegionFactor>,
    /// False when the operator grows on the sampled data support and no
    /// decay statement makes sense.
    pub applicable: bool,
    pub support_restricted: bool,
    pub notes: Vec<String>,
}

impl DecayPrediction {
    /// Slowest envelope over all contributing factors for the given dual
    /// pair and derivative orders. This is the predicted overall rate.
    pub fn evaluate(&self, p: f64, q: f64, r: u32, alpha: u32) -> Result<RateEstimate> {
        if !self.applicable {
            return Err(Error::Inconclusive(
                "no decay prediction: operator grows on the sampled support".into(),
            ));
        }
        if !(1.0 <= p && p <= 2.0 && (q.is_infinite() || (2.0 <= q && q >= p))) {
            return Err(Error::Numerical(format!(
                "dual pair (p, q) = ({p}, {q}) outside 1 <= p <= 2 <= q"
            )));
        }
        let dpq = dual_gap(p, q);
        let mut slowest: Option<RateEstimate> = None;
        for rf in &self.factors {
            let f = &rf.factor;
            let power = f.power_const
                + f.power_dpq * dpq
                + f.r_coeff * r as f64
                + f.alpha_coeff * alpha as f64;
            let cand = RateEstimate { power, exp_rate: f.exp_rate };
            let slower = match &slowest {
                None => true,
                Some(cur) => {
                    if (cand.exp_rate - cur.exp_rate).abs() > 1e-12 {
                        cand.exp_rate < cur.exp_rate
                    } else {
                        cand.power > cur.power
                    }
                }
            };
            if slower {
                slowest = Some(cand);
            }
        }
        slowest.ok_or_else(|| Error::Inconclusive("no decay factors were produced".into()))
    }
}

// ---------------------------------------------------------------------------
// Per-branch region analysis.
// ---------------------------------------------------------------------------

struct BranchStats {
    min_im: f64,
    argmin: usize,
    on_axis: usize,
    negative: usize,
    len: usize,
}

fn branch_stats(field: &RootField, nodes: &[usize], branch: usize) -> BranchStats {
    let m = field.m;
    let mut st =
        BranchStats { min_im: f64::INFINITY, argmin: nodes[0], on_axis: 0, negative: 0, len: nodes.len() };
    for &i in nodes {
        let im = field.roots[i * m + branch].im;
        let tol = ON_AXIS_REL_TOL * bracket(field.grid.node_radius(i));
        if im < st.min_im {
            st.min_im = im;
            st.argmin = i;
        }
        if im.abs() <= tol {
            st.on_axis += 1;
        }
        if im < -tol {
            st.negative += 1;
        }
    }
    st
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TableBlock {
    LargeOnAxis,
    LargeAsymptotic,
    BoundedOnAxis,
}

/// Pick the sharpest applicable geometric row for an on-axis (or
/// asymptotically on-axis) branch, given the worst Hessian rank seen over
/// the sample nodes and, in the plane, the level-set shape.
fn geometric_factor(
    field: &RootField,
    nodes: &[usize],
    branch: usize,
    block: TableBlock,
    split_radius: f64,
    notes: &mut Vec<String>,
) -> DecayFactor {
    let n = field.grid.n;
    let nf = n as f64;
    // Hessian rank over a spread of interior sample nodes.
    let mut candidates: Vec<usize> = nodes
        .iter()
        .copied()
        .filter(|&i| {
            field.grid.is_interior(i, 1) && field.disc_norm[i] >= NEAR_MULTIPLICITY_DISC
        })
        .collect();
    if candidates.is_empty() {
        notes.push(format!("branch {branch}: no usable Hessian sample nodes"));
        return DecayFactor::power(RowLabel::FlatFallback, 0.0, "no Hessian samples".into());
    }
    let stride = (candidates.len() / HESSIAN_SAMPLES).max(1);
    candidates = candidates.into_iter().step_by(stride).take(HESSIAN_SAMPLES).collect();
    let mut worst_rank = n;
    let mut sampled = 0usize;
    for &i in &candidates {
        match hessian_at(field, i, branch) {
            Ok(info) => {
                worst_rank = worst_rank.min(info.rank);
                sampled += 1;
            }
            Err(_) => continue,
        }
    }
    if sampled == 0 {
        notes.push(format!("branch {branch}: all Hessian stencils hit near-multiplicities"));
        return DecayFactor::power(RowLabel::FlatFallback, 0.0, "no Hessian samples".into());
    }
    if worst_rank == n {
        return DecayFactor::power(
            RowLabel::HessianNondegenerate,
            -nf / 2.0,
            format!("full-rank Hessian on {sampled} samples"),
        );
    }
    let large_family = matches!(block, TableBlock::LargeOnAxis | TableBlock::LargeAsymptotic);
    if large_family && worst_rank + 1 == n {
        return DecayFactor::power(
            RowLabel::HessianRankDeficient,
            -(nf - 1.0) / 2.0,
            format!("Hessian rank {worst_rank} on {sampled} samples"),
        );
    }
    // Level-set shape decides. Planar only; elsewhere no gain is claimed.
    if n != 2 {
        notes.push(format!(
            "branch {branch}: degenerate Hessian (rank {worst_rank}) and no planar level-set analysis in {n}-d"
        ));
        return DecayFactor::power(RowLabel::FlatFallback, 0.0, "level-set shape unresolved".into());
    }
    let rho = match block {
        TableBlock::BoundedOnAxis => 0.5 * split_radius.min(0.7 * field.grid.extent),
        _ => 0.7 * field.grid.extent,
    };
    match level_set_shape(field, branch, rho) {
        Ok((convex, gamma, ratio)) => {
            if convex && block != TableBlock::LargeAsymptotic {
                DecayFactor::power(
                    RowLabel::ConvexContact,
                    -(nf - 1.0) / gamma,
                    format!("convex level set (ratio {ratio:.4}), tangency order {gamma}"),
                )
            } else {
                DecayFactor::power(
                    RowLabel::NonconvexContact,
                    -1.0 / gamma,
                    format!("level-set tangency order {gamma} (hull ratio {ratio:.4})"),
                )
            }
        }
        Err(e) => {
            notes.push(format!("branch {branch}: level-set analysis failed: {e}"));
            DecayFactor::power(RowLabel::FlatFallback, 0.0, "level-set shape unresolved".into())
        }
    }
}

/// Extract one closed level loop of `Re tau` for the branch near radius
/// `rho` and measure convexity and maximal tangency order.
fn level_set_shape(field: &RootField, branch: usize, rho: f64) -> Result<(bool, f64, f64)> {
    let grid = &field.grid;
    let m = field.m;
    let h = grid.step();
    let mut near = Vec::new();
    for i in 0..grid.num_nodes() {
        if (grid.node_radius(i) - rho).abs() <= h {
            near.push(field.roots[i * m + branch].re);
        }
    }
    if near.is_empty() {
        return Err(Error::MissingGeometry(format!("no nodes near radius {rho}")));
    }
    near.sort_by(f64::total_cmp);
    let level = near[near.len() / 2];
    if level.abs() <= 1e-9 * bracket(rho) {
        return Err(Error::MissingGeometry("level value is numerically zero".into()));
    }
    let values: Vec<f64> =
        (0..grid.num_nodes()).map(|i| field.roots[i * m + branch].re).collect();
    let loop_points = geometry::main_level_loop(grid, &values, level)?;
    let conv = geometry::convexity_check(&loop_points)?;
    let contact = geometry::tangency_order(&loop_points, h)?;
    Ok((conv.convex, contact.order as f64, conv.area_ratio))
}

/// Shell-minimum slope of `Im tau` against radius over the region; a clear
/// negative slope marks a branch approaching the axis at infinity.
fn asymptotic_slope(field: &RootField, nodes: &[usize], branch: usize) -> Option<f64> {
    let m = field.m;
    let (mut rmin, mut rmax) = (f64::INFINITY, 0.0f64);
    for &i in nodes {
        let r = field.grid.node_radius(i);
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    if !(rmax > rmin * 1.2 && rmin > 0.0) {
        return None;
    }
    const BINS: usize = 6;
    let mut env = vec![f64::INFINITY; BINS];
    for &i in nodes {
        let r = field.grid.node_radius(i);
        let b = ((((r / rmin).ln()) / ((rmax / rmin).ln())) * BINS as f64)
            .floor()
            .clamp(0.0, BINS as f64 - 1.0) as usize;
        env[b] = env[b].min(field.roots[i * m + branch].im);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (b, &v) in env.iter().enumerate() {
        if v.is_finite() && v > 0.0 {
            xs.push(rmin.ln() + (b as f64 + 0.5) / BINS as f64 * (rmax / rmin).ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 4 {
        return None;
    }
    linalg::fit_line(&xs, &ys).ok().map(|(_, slope, _, _)| slope)
}

/// The meets-axis row: locate the meeting set, estimate its codimension,
/// the coincidence count there, and the contact orders, then assemble the
/// envelope `<t>^(L-1) * <t>^(-(ell/s) d(p,q))` with derivative gains when
/// the meeting point is the origin / a vanishing root.
fn meets_axis_factor(
    field: &RootField,
    nodes: &[usize],
    branch: usize,
    stats: &BranchStats,
) -> Result<DecayFactor> {
    let grid = &field.grid;
    let m = field.m;
    let n = grid.n;
    let h = grid.step();
    // Meeting set: exact on-axis nodes, widened to near-minimal nodes when
    // the true zeros fall off-grid.
    let mut zero_nodes: Vec<usize> = Vec::new();
    for &i in nodes {
        let im = field.roots[i * m + branch].im;
        let tol = (ON_AXIS_REL_TOL * bracket(grid.node_radius(i)))
            .max(ZERO_NEAR_FACTOR * stats.min_im.max(0.0));
        if im.abs() <= tol {
            zero_nodes.push(i);
        }
    }
    if zero_nodes.is_empty() {
        zero_nodes.push(stats.argmin);
    }
    let ell = if zero_nodes.len() == 1 {
        n as f64
    } else {
        codim_estimate(grid, &zero_nodes)
            .map(|c| c.clamp(1.0, n as f64))
            .unwrap_or(n as f64)
    };
    let at_origin = zero_nodes.iter().all(|&i| grid.node_radius(i) <= 2.1 * h);
    // Properties of the meeting root(s) at the deepest node.
    let anchor = zero_nodes
        .iter()
        .copied()
        .min_by(|&a, &b| {
            field.roots[a * m + branch].im.total_cmp(&field.roots[b * m + branch].im)
        })
        .unwrap();
    let r_anchor = grid.node_radius(anchor);
    let meet_root = field.roots[anchor * m + branch];
    let re_tau_zero = meet_root.re.abs() <= 1e-6 * bracket(r_anchor);
    let coincidence = COINCIDENCE_GAP_TOL * bracket(r_anchor);
    let l_meet = field
        .node_roots(anchor)
        .iter()
        .filter(|z| (*z - meet_root).norm() <= coincidence)
        .count()
        .max(1);
    // Contact orders against distance to the meeting set.
    let mut mask = vec![false; grid.num_nodes()];
    for &i in &zero_nodes {
        mask[i] = true;
    }
    let fit = contact_order_fit(field, branch, &mask, nodes)?;
    let s = fit.s.max(0.05);
    let r_coeff = if re_tau_zero && fit.s1.is_finite() { -fit.s1 / s } else { 0.0 };
    let alpha_coeff = if at_origin { -1.0 / s } else { 0.0 };
    Ok(DecayFactor {
        power_const: (l_meet - 1) as f64,
        power_dpq: -ell / s,
        exp_rate: 0.0,
        r_coeff,
        alpha_coeff,
        row: RowLabel::MeetsAxis,
        detail: format!(
            "meets axis: s {:.3}, s1 {:.3}, codim {ell:.2}, coinciding {l_meet}, origin {at_origin}, re_zero {re_tau_zero} ({} shells, rms {:.3})",
            fit.s, fit.s1, fit.shells_used, fit.rms
        ),
    })
}

fn branch_region_factors(
    field: &RootField,
    nodes: &[usize],
    kind: RegionKind,
    branch: usize,
    split_radius: f64,
    notes: &mut Vec<String>,
) -> Result<Vec<DecayFactor>> {
    let stats = branch_stats(field, nodes, branch);
    if stats.negative > 0 {
        // Growth is handled by the applicability gate before this point;
        // reaching here means the support mask let an unstable node in.
        return Err(Error::Inconclusive(format!(
            "branch {branch} has {} growing modes inside the region",
            stats.negative
        )));
    }
    // On axis throughout: geometry decides the dispersive rate.
    if stats.on_axis * 100 >= stats.len * 99 {
        let block = match kind {
            RegionKind::Bounded => TableBlock::BoundedOnAxis,
            RegionKind::Large => TableBlock::LargeOnAxis,
        };
        return Ok(vec![geometric_factor(field, nodes, branch, block, split_radius, notes)]);
    }
    if kind == RegionKind::Large {
        if let Some(slope) = asymptotic_slope(field, nodes, branch) {
            if slope < ASYMPTOTIC_SLOPE && stats.on_axis == 0 {
                let mut f = geometric_factor(
                    field,
                    nodes,
                    branch,
                    TableBlock::LargeAsymptotic,
                    split_radius,
                    notes,
                );
                f.detail = format!("asymptotic to axis (slope {slope:.3}); {}", f.detail);
                return Ok(vec![f]);
            }
        }
    }
    if stats.min_im >= DELTA_FLOOR {
        return Ok(vec![DecayFactor::exponential(
            stats.min_im,
            format!("branch {branch} separated from the axis (min Im {:.4})", stats.min_im),
        )]);
    }
    Ok(vec![meets_axis_factor(field, nodes, branch, &stats)?])
}

/// Region-wide factors from coinciding-root clusters sitting away from the
/// axis: `<t>^(L-1) exp(-delta t)` with `delta` the damping of the
/// coinciding group. On-axis clusters contribute nothing here — the
/// on-axis rows already account for them — and are reported as notes.
fn cluster_factors(
    field: &RootField,
    clusters: &[MultiplicityCluster],
    region: &BTreeSet<usize>,
    notes: &mut Vec<String>,
) -> Vec<DecayFactor> {
    let m = field.m;
    let mut out = Vec::new();
    for cl in clusters {
        if cl.l_coinciding < 2 {
            continue;
        }
        if !cl.nodes.iter().any(|i| region.contains(i)) {
            continue;
        }
        let r = field.grid.node_radius(cl.argmin_node);
        let tol = COINCIDENCE_GAP_TOL * bracket(r);
        let delta = field
            .node_roots(cl.argmin_node)
            .iter()
            .filter(|z| (*z - cl.group_center).norm() <= 2.0 * tol)
            .map(|z| z.im)
            .fold(f64::INFINITY, f64::min);
        if !delta.is_finite() {
            continue;
        }
        if delta >= DELTA_FLOOR {
            out.push(DecayFactor {
                power_const: (cl.l_coinciding - 1) as f64,
                power_dpq: 0.0,
                exp_rate: delta,
                r_coeff: 0.0,
                alpha_coeff: 0.0,
                row: RowLabel::CoincidingAway,
                detail: format!(
                    "{} roots coincide near {:?} with damping {delta:.4}",
                    cl.l_coinciding, cl.center
                ),
            });
        } else {
            notes.push(format!(
                "cluster of {} coinciding roots near {:?} lies on the axis; covered by the on-axis rows",
                cl.l_coinciding, cl.center
            ));
        }
        let _ = m;
    }
    out
}

// ---------------------------------------------------------------------------
// Prediction driver.
// ---------------------------------------------------------------------------

/// Frequency radius separating the bounded region (where lower-order terms
/// and multiplicities matter) from the large region (where the principal
/// part dominates): safely beyond every detected cluster.
pub fn split_radius(clusters: &[MultiplicityCluster], grid: &FrequencyGrid) -> f64 {
    let mut reach = 0.0f64;
    for cl in clusters {
        let c = cl.center.iter().map(|x| x * x).sum::<f64>().sqrt();
        reach = reach.max(c + cl.radius);
    }
    (1.3 * reach).max(1.0).min(0.75 * grid.extent)
}

pub fn predict_decay(
    field: &RootField,
    clusters: &[MultiplicityCluster],
    support: Option<&[bool]>,
) -> Result<DecayPrediction> {
    let grid = &field.grid;
    let m = field.m;
    let stability = stability_scan(field);
    let split = split_radius(clusters, grid);
    let mut notes = Vec::new();

    let in_support = |i: usize| support.map_or(true, |s| s[i]);
    let mut bounded = Vec::new();
    let mut large = Vec::new();
    for i in 0..grid.num_nodes() {
        if !in_support(i) {
            continue;
        }
        if grid.node_radius(i) <= split {
            bounded.push(i);
        } else {
            large.push(i);
        }
    }
    if bounded.is_empty() && large.is_empty() {
        return Err(Error::Inconclusive("data support contains no grid nodes".into()));
    }

    // Applicability: growth anywhere on the (support-restricted) node set
    // rules out a decay prediction.
    let mut applicable = true;
    'outer: for &i in bounded.iter().chain(&large) {
        let tol = ON_AXIS_REL_TOL * bracket(grid.node_radius(i));
        for k in 0..m {
            if field.roots[i * m + k].im < -tol {
                applicable = false;
                notes.push(format!(
                    "growing mode at {:?}; no decay prediction",
                    grid.node(i)
                ));
                break 'outer;
            }
        }
    }

    let mut factors = Vec::new();
    if applicable {
        for (nodes, kind) in [(&bounded, RegionKind::Bounded), (&large, RegionKind::Large)] {
            if nodes.is_empty() {
                notes.push(format!("{kind:?} region is empty"));
                continue;
            }
            let region_set: BTreeSet<usize> = nodes.iter().copied().collect();
            for f in cluster_factors(field, clusters, &region_set, &mut notes) {
                factors.push(RegionFactor { region: kind, branch: None, factor: f });
            }
            for branch in 0..m {
                for f in branch_region_factors(field, nodes, kind, branch, split, &mut notes)? {
                    factors.push(RegionFactor { region: kind, branch: Some(branch), factor: f });
                }
            }
        }
    }

    Ok(DecayPrediction {
        stability,
        split_radius: split,
        factors,
        applicable,
        support_restricted: support.is_some(),
        notes,
    })
}

// ---------------------------------------------------------------------------
// Structure of the symbol at the origin.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct OriginStructure {
    /// True when `tau = 0` is a characteristic root at `xi = 0` and simple.
    pub simple_zero_root: bool,
    /// Lowest total degree appearing in the constant-in-tau coefficient,
    /// i.e. the vanishing order of `P(0, xi)` at the origin.
    pub vanishing_order: Option<u32>,
    /// Log-log slope of `max_dirs |P(0, eps w)|` against eps, a numerical
    /// cross-check of `vanishing_order`.
    pub radial_slope: f64,
}

pub fn origin_root_structure(sym: &OperatorSymbol) -> OriginStructure {
    let origin = vec![0.0f64; sym.n];
    let coeffs = sym.tau_poly_at(&origin);
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1.0);
    let zero_root = coeffs[sym.m].norm() <= 1e-12 * scale;
    let simple = zero_root && coeffs[sym.m - 1].norm() > 1e-9 * scale;
    let vanishing_order = sym.tau_coeffs[sym.m - 1].min_order();
    let dirs = unit_directions(sym.n, if sym.n == 1 { 2 } else { 32 });
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for e in [-4.0f64, -3.0, -2.0, -1.0] {
        let eps = 10f64.powf(e);
        let mut worst = 0.0f64;
        for w in &dirs {
            let xi: Vec<f64> = w.iter().map(|x| x * eps).collect();
            worst = worst.max(sym.tau_poly_at(&xi)[sym.m].norm());
        }
        if worst > 0.0 {
            xs.push(eps.ln());
            ys.push(worst.ln());
        }
    }
    let radial_slope = if xs.len() >= 2 {
        linalg::fit_line(&xs, &ys).map(|(_, b, _, _)| b).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    OriginStructure { simple_zero_root: simple, vanishing_order, radial_slope }
}

// ---------------------------------------------------------------------------
// Full report.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub center: Vec<f64>,
    pub l_coinciding: usize,
    pub min_disc: f64,
    pub radius: f64,
    pub group_center: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub stability: StabilityReport,
    pub clusters: Vec<ClusterSummary>,
    pub origin: OriginStructure,
    pub prediction: DecayPrediction,
    pub worst_root_residual: f64,
}

pub fn classify_field(
    sym: &OperatorSymbol,
    field: &RootField,
    support: Option<&[bool]>,
) -> Result<ClassificationReport> {
    let clusters = crate::roots::multiplicity_clusters(sym, field, crate::roots::CLUSTER_SENSITIVITY);
    let prediction = predict_decay(field, &clusters, support)?;
    Ok(ClassificationReport {
        stability: prediction.stability.clone(),
        clusters: clusters
            .iter()
            .map(|c| ClusterSummary {
                center: c.center.clone(),
                l_coinciding: c.l_coinciding,
                min_disc: c.min_disc,
                radius: c.radius,
                group_center: [c.group_center.re, c.group_center.im],
            })
            .collect(),
        origin: origin_root_structure(sym),
        prediction,
        worst_root_residual: field.worst_residual(),
    })
}
