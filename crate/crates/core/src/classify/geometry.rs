//! Planar level-set geometry: marching-squares contour extraction,
//! convexity via the hull-area ratio, and tangent-frame contact orders.
//!
//! Everything here works on a scalar field sampled over a 2-d frequency
//! grid; the classifier feeds it the real part of one tracked root branch.

use std::collections::BTreeMap;

use crate::grid::FrequencyGrid;
use crate::linalg;
use crate::{Error, Result};

/// A closed level curve passes the convexity test when the area of its
/// convex hull exceeds its own area by at most this factor.
pub const HULL_AREA_SLACK: f64 = 5e-3;
/// A scaled fit coefficient counts toward the contact order when it reaches
/// this fraction of the largest one.
pub const CONTACT_COEFF_FRACTION: f64 = 0.25;
/// Largest tangency order the polynomial fit can resolve.
pub const MAX_CONTACT_ORDER: u32 = 6;

#[derive(Debug, Clone)]
pub struct Contour {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Contour {
    pub fn perimeter(&self) -> f64 {
        let mut sum = 0.0;
        for w in self.points.windows(2) {
            sum += dist(w[0], w[1]);
        }
        if self.closed && self.points.len() > 1 {
            sum += dist(self.points[self.points.len() - 1], self.points[0]);
        }
        sum
    }

    /// Shoelace area (absolute value); meaningful for closed loops.
    pub fn area(&self) -> f64 {
        polygon_area(&self.points)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Edge identifier: (orientation, i, j) where orientation 0 is the
/// horizontal edge from node (i,j) to (i+1,j) and 1 the vertical edge from
/// (i,j) to (i,j+1). Node (i,j) means axis-0 digit i, axis-1 digit j.
type EdgeKey = (u8, usize, usize);

/// Extract the level set `{values = level}` from a 2-d grid by marching
/// squares. Values are node-major in the grid's index order. Ambiguous
/// saddle cells are resolved by the cell-center average. Returns contours
/// with closed loops marked.
pub fn marching_squares(grid: &FrequencyGrid, values: &[f64], level: f64) -> Vec<Contour> {
    assert_eq!(grid.n, 2, "contour extraction is planar only");
    assert_eq!(values.len(), grid.num_nodes());
    let p = grid.points_per_axis;
    let at = |i: usize, j: usize| values[grid.index_of(&[i, j])];
    let coord = |d: usize| grid.axis_value(d);

    // Interpolated crossing point on an edge.
    let edge_point = |key: EdgeKey| -> [f64; 2] {
        let (orient, i, j) = key;
        let (va, vb) = if orient == 0 { (at(i, j), at(i + 1, j)) } else { (at(i, j), at(i, j + 1)) };
        let denom = vb - va;
        let t = if denom.abs() < 1e-300 { 0.5 } else { ((level - va) / denom).clamp(0.0, 1.0) };
        let (x, y) = (coord(i), coord(j));
        let h = grid.step();
        if orient == 0 { [x + t * h, y] } else { [x, y + t * h] }
    };

    // Collect segments as pairs of edge keys.
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..p - 1 {
        for j in 0..p - 1 {
            let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let mut case = 0usize;
            for (k, &vk) in v.iter().enumerate() {
                if vk >= level {
                    case |= 1 << k;
                }
            }
            // Cell edges: e0 bottom, e1 right, e2 top, e3 left.
            let e0: EdgeKey = (0, i, j);
            let e1: EdgeKey = (1, i + 1, j);
            let e2: EdgeKey = (0, i, j + 1);
            let e3: EdgeKey = (1, i, j);
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((e3, e0)),
                2 | 13 => segments.push((e0, e1)),
                3 | 12 => segments.push((e3, e1)),
                4 | 11 => segments.push((e1, e2)),
                6 | 9 => segments.push((e0, e2)),
                7 | 8 => segments.push((e3, e2)),
                5 => {
                    // Corners 0 and 2 inside; the center average decides
                    // whether the inside region bridges diagonally.
                    if v.iter().sum::<f64>() / 4.0 >= level {
                        segments.push((e3, e2));
                        segments.push((e0, e1));
                    } else {
                        segments.push((e3, e0));
                        segments.push((e1, e2));
                    }
                }
                10 => {
                    if v.iter().sum::<f64>() / 4.0 >= level {
                        segments.push((e3, e0));
                        segments.push((e1, e2));
                    } else {
                        segments.push((e3, e2));
                        segments.push((e0, e1));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // Stitch segments into polylines by shared edge keys.
    let mut incident: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (s, seg) in segments.iter().enumerate() {
        incident.entry(seg.0).or_default().push(s);
        incident.entry(seg.1).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut contours = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a0, b0) = segments[start];
        let mut chain = vec![a0, b0];
        // Extend forward from the tail, then backward from the head.
        for dir in 0..2 {
            loop {
                let tip = if dir == 0 { *chain.last().unwrap() } else { chain[0] };
                let next = incident
                    .get(&tip)
                    .and_then(|list| list.iter().find(|&&s| !used[s]).copied());
                let Some(s) = next else { break };
                used[s] = true;
                let (a, b) = segments[s];
                let other = if a == tip { b } else { a };
                if dir == 0 {
                    chain.push(other);
                } else {
                    chain.insert(0, other);
                }
                if chain[0] == *chain.last().unwrap() {
                    break;
                }
            }
        }
        let closed = chain.len() > 3 && chain[0] == *chain.last().unwrap();
        if closed {
            chain.pop();
        }
        let points: Vec<[f64; 2]> = chain.iter().map(|&k| edge_point(k)).collect();
        contours.push(Contour { points, closed });
    }
    contours
}

/// Absolute shoelace area of a polygon given by its vertices in order.
pub fn polygon_area(points: &[[f64; 2]]) -> f64 {
    let mut twice = 0.0;
    for k in 0..points.len() {
        let a = points[k];
        let b = points[(k + 1) % points.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    twice.abs() / 2.0
}

/// Convex hull by monotone chain; returns hull vertices in order.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| a[0] == b[0] && a[1] == b[1]);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[derive(Debug, Clone, Copy)]
pub struct ConvexityCheck {
    pub convex: bool,
    /// hull area / polygon area (>= 1 up to extraction noise).
    pub area_ratio: f64,
}

pub fn convexity_check(loop_points: &[[f64; 2]]) -> Result<ConvexityCheck> {
    if loop_points.len() < 8 {
        return Err(Error::MissingGeometry(format!(
            "level loop has only {} points",
            loop_points.len()
        )));
    }
    let area = polygon_area(loop_points);
    if area <= 0.0 {
        return Err(Error::MissingGeometry("level loop has zero area".into()));
    }
    let hull = convex_hull(loop_points);
    let ratio = polygon_area(&hull) / area;
    Ok(ConvexityCheck { convex: ratio <= 1.0 + HULL_AREA_SLACK, area_ratio: ratio })
}

/// Resample a closed loop to (approximately) uniform arclength spacing.
pub fn resample_closed(points: &[[f64; 2]], target_step: f64) -> Vec<[f64; 2]> {
    let k = points.len();
    if k < 3 {
        return points.to_vec();
    }
    let mut cumulative = vec![0.0f64; k + 1];
    for i in 0..k {
        cumulative[i + 1] = cumulative[i] + dist(points[i], points[(i + 1) % k]);
    }
    let total = cumulative[k];
    if total <= 0.0 {
        return points.to_vec();
    }
    let count = ((total / target_step).round() as usize).max(16);
    let step = total / count as f64;
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    for s in 0..count {
        let target = s as f64 * step;
        while seg + 1 <= k && cumulative[seg + 1] < target {
            seg += 1;
        }
        let a = points[seg % k];
        let b = points[(seg + 1) % k];
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 { (target - cumulative[seg]) / len } else { 0.0 };
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct ContactEstimate {
    /// Largest tangency order found along the curve (2 for uniformly
    /// curved loops, higher where the curve flattens).
    pub order: u32,
    /// Median relative fit residual of the window that produced the order.
    pub residual: f64,
    /// Half-width of the selected fit window.
    pub window: f64,
}

/// Maximal order of tangency between the curve and its tangent lines, from
/// local polynomial fits in the tangent frame. At each base point the
/// curve's normal displacement is fitted against the (window-scaled)
/// tangential offset with degrees up to six; the contact order at the point
/// is the lowest degree whose scaled coefficient is a significant fraction
/// of the largest. Two window sizes are fitted and the one with the smaller
/// median relative residual wins, which rejects both grid noise (windows
/// too small) and global-shape contamination (windows too large).
pub fn tangency_order(loop_points: &[[f64; 2]], grid_step: f64) -> Result<ContactEstimate> {
    let perimeter = {
        let c = Contour { points: loop_points.to_vec(), closed: true };
        c.perimeter()
    };
    if loop_points.len() < 16 || perimeter <= 0.0 {
        return Err(Error::MissingGeometry("level loop too small for tangency fits".into()));
    }
    let resampled = resample_closed(loop_points, (grid_step / 2.0).min(perimeter / 64.0));
    let windows = [
        (8.0 * grid_step).max(perimeter / 128.0),
        (32.0 * grid_step).max(perimeter / 32.0),
    ];
    let mut best: Option<ContactEstimate> = None;
    for w in windows {
        if let Some(est) = tangency_order_window(&resampled, w) {
            let better = match &best {
                None => true,
                Some(b) => est.residual < b.residual,
            };
            if better {
                best = Some(est);
            }
        }
    }
    best.ok_or_else(|| Error::MissingGeometry("tangency fit failed on all windows".into()))
}

fn tangency_order_window(resampled: &[[f64; 2]], window: f64) -> Option<ContactEstimate> {
    let k = resampled.len();
    let step = {
        let c = Contour { points: resampled.to_vec(), closed: true };
        c.perimeter() / k as f64
    };
    let half = ((window / step).round() as usize).clamp(5, k / 2 - 1);
    let bases = 128.min(k);
    let mut max_order = 0u32;
    let mut residuals = Vec::new();
    for b in 0..bases {
        let center = b * k / bases;
        let prev = resampled[(center + k - 1) % k];
        let next = resampled[(center + 1) % k];
        let mut tx = next[0] - prev[0];
        let mut ty = next[1] - prev[1];
        let tn = (tx * tx + ty * ty).sqrt();
        if tn == 0.0 {
            continue;
        }
        tx /= tn;
        ty /= tn;
        let p0 = resampled[center];
        // Window points in the tangent frame, offsets scaled by the window.
        let mut xs = Vec::with_capacity(2 * half + 1);
        let mut ys = Vec::with_capacity(2 * half + 1);
        for d in -(half as isize)..=(half as isize) {
            let q = resampled[((center as isize + d).rem_euclid(k as isize)) as usize];
            let dx = q[0] - p0[0];
            let dy = q[1] - p0[1];
            let s = dx * tx + dy * ty;
            let n = -dx * ty + dy * tx;
            if s.abs() <= window {
                xs.push(s / window);
                ys.push(n);
            }
        }
        if xs.len() < 10 {
            continue;
        }
        let degrees: Vec<u32> = (0..=MAX_CONTACT_ORDER).collect();
        let Ok(coeffs) = linalg::fit_polynomial(&xs, &ys, &degrees) else {
            continue;
        };
        // Fit residual relative to the displacement scale.
        let scale = ys.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1e-14);
        let mut ss = 0.0;
        for (&x, &y) in xs.iter().zip(&ys) {
            let mut fitted = 0.0;
            for (j, &c) in coeffs.iter().enumerate() {
                fitted += c * x.powi(j as i32);
            }
            ss += (y - fitted) * (y - fitted);
        }
        let rel = (ss / xs.len() as f64).sqrt() / scale;
        residuals.push(rel);
        // The tangent line itself absorbs degrees 0 and 1; contact order is
        // the lowest remaining degree that carries real weight.
        let weights: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
        let wmax = weights.iter().skip(2).cloned().fold(0.0f64, f64::max);
        if wmax <= 1e-12 * scale.max(1.0) {
            continue;
        }
        let order = (2..=MAX_CONTACT_ORDER)
            .find(|&d| weights[d as usize] >= CONTACT_COEFF_FRACTION * wmax)
            .unwrap_or(MAX_CONTACT_ORDER);
        max_order = max_order.max(order);
    }
    if residuals.is_empty() || max_order < 2 {
        return None;
    }
    residuals.sort_by(f64::total_cmp);
    let median = residuals[residuals.len() / 2];
    Some(ContactEstimate { order: max_order, residual: median, window })
}

/// Longest closed contour of a field at one level, or an error naming what
/// was found instead.
pub fn main_level_loop(
    grid: &FrequencyGrid,
    values: &[f64],
    level: f64,
) -> Result<Vec<[f64; 2]>> {
    let contours = marching_squares(grid, values, level);
    contours
        .into_iter()
        .filter(|c| c.closed)
        .max_by(|a, b| a.perimeter().total_cmp(&b.perimeter()))
        .map(|c| c.points)
        .ok_or_else(|| {
            Error::MissingGeometry(format!("no closed level loop at level {level}"))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field<F: Fn(f64, f64) -> f64>(grid: &FrequencyGrid, f: F) -> Vec<f64> {
        (0..grid.num_nodes())
            .map(|i| {
                let p = grid.node(i);
                f(p[0], p[1])
            })
            .collect()
    }

    #[test]
    fn circle_contour_closes_with_the_right_area() {
        let grid = FrequencyGrid::new(2, 2.0, 129).unwrap();
        let values = sample_field(&grid, |x, y| (x * x + y * y).sqrt());
        let loop_points = main_level_loop(&grid, &values, 1.2).unwrap();
        let area = polygon_area(&loop_points);
        let expect = std::f64::consts::PI * 1.2 * 1.2;
        assert!((area - expect).abs() < 0.01 * expect, "area {area} vs {expect}");
        let check = convexity_check(&loop_points).unwrap();
        assert!(check.convex, "circle flagged non-convex, ratio {}", check.area_ratio);
    }

    #[test]
    fn astroid_like_level_set_is_flagged_nonconvex() {
        let grid = FrequencyGrid::new(2, 2.0, 129).unwrap();
        // |x|^(2/3) + |y|^(2/3) level sets are astroids (inward-curved).
        let values = sample_field(&grid, |x, y| {
            (x.abs().powf(2.0 / 3.0) + y.abs().powf(2.0 / 3.0)).powf(3.0 / 2.0)
        });
        let loop_points = main_level_loop(&grid, &values, 1.0).unwrap();
        let check = convexity_check(&loop_points).unwrap();
        assert!(!check.convex, "astroid passed convexity, ratio {}", check.area_ratio);
        assert!(check.area_ratio > 1.05);
    }

    #[test]
    fn circle_tangency_order_is_two() {
        let grid = FrequencyGrid::new(2, 2.0, 129).unwrap();
        let values = sample_field(&grid, |x, y| (x * x + y * y).sqrt());
        let loop_points = main_level_loop(&grid, &values, 1.2).unwrap();
        let est = tangency_order(&loop_points, grid.step()).unwrap();
        assert_eq!(est.order, 2, "residual {}", est.residual);
    }

    #[test]
    fn quartic_level_set_has_order_four_flat_points() {
        let grid = FrequencyGrid::new(2, 2.0, 257).unwrap();
        // Level set x^4 + y^4 = 1: convex, with fourth-order tangency where
        // it crosses the axes.
        let values = sample_field(&grid, |x, y| (x.powi(4) + y.powi(4)).powf(0.25));
        let loop_points = main_level_loop(&grid, &values, 1.0).unwrap();
        let check = convexity_check(&loop_points).unwrap();
        assert!(check.convex, "quartic level set should be convex: {}", check.area_ratio);
        let est = tangency_order(&loop_points, grid.step()).unwrap();
        assert_eq!(est.order, 4, "residual {} window {}", est.residual, est.window);
    }

    #[test]
    fn open_field_yields_no_closed_loop() {
        let grid = FrequencyGrid::new(2, 2.0, 65).unwrap();
        let values = sample_field(&grid, |x, _| x);
        assert!(main_level_loop(&grid, &values, 0.33).is_err());
    }

    #[test]
    fn hull_of_a_square_is_the_square() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!((polygon_area(&hull) - 1.0).abs() < 1e-12);
    }
}
