//! 1-D Clenshaw–Curtis rules, Smolyak sparse grids of depth 1 and 2, and
//! hyperbox element geometry (affine reference map, subdivision).
//!
//! Elements follow a half-open convention [a, b) per dimension; the global
//! domain's top faces are treated as closed by the point-location logic in
//! the driver so that every in-domain query resolves to exactly one element.

use crate::error::{Result, ScamrError};
use std::collections::BTreeMap;

/// Chebyshev–Gauss–Lobatto abscissae of depth `level` on [-1, 1], ascending.
///
/// m = 2^level + 1 points for level ≥ 1, a single midpoint for level 0.
/// The sine form keeps the nodes exactly antisymmetric with an exact 0 in
/// the middle, which makes consecutive levels nested bit-for-bit.
pub fn chebyshev_nodes_1d(level: u32) -> Vec<f64> {
    if level == 0 {
        return vec![0.0];
    }
    let m = (1usize << level) + 1;
    let n = (m - 1) as f64;
    (0..m)
        .map(|j| {
            let t = 2.0 * j as f64 - n;
            (std::f64::consts::PI * t / (2.0 * n)).sin()
        })
        .collect()
}

/// Clenshaw–Curtis weights on [-1, 1] for the nodes of `chebyshev_nodes_1d`,
/// exact for all polynomials of degree ≤ m−1. Lebesgue normalization: the
/// weights sum to 2.
pub fn clenshaw_curtis_weights_1d(level: u32) -> Vec<f64> {
    if level == 0 {
        return vec![2.0];
    }
    let n = 1usize << level;
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    for (j, wj) in w.iter_mut().enumerate() {
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        let theta = j as f64 * std::f64::consts::PI / nf;
        let mut sum = 0.0;
        for k in 1..=(n / 2) {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            sum += b * (2.0 * k as f64 * theta).cos() / ((4 * k * k - 1) as f64);
        }
        *wj = c / nf * (1.0 - sum);
    }
    // Computed for descending cos-ordered nodes; flip to match the ascending
    // node order (the weights are symmetric, this is for principle).
    w.reverse();
    w
}

/// A quadrature rule on [-1, 1]^n.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Quantize a reference coordinate for node identity during merging.
fn qcoord(x: f64) -> i64 {
    (x * 1e12).round() as i64
}

/// Smolyak terms for depth 1 and 2: (combination coefficient, active dims
/// with their 1-D levels). Inactive dims sit at the level-0 midpoint.
fn smolyak_terms(n: usize, level: u32) -> Result<Vec<(f64, Vec<(usize, u32)>)>> {
    let mut terms = Vec::new();
    match level {
        1 => {
            if n == 1 {
                terms.push((1.0, vec![(0, 1)]));
            } else {
                for d in 0..n {
                    terms.push((1.0, vec![(d, 1)]));
                }
                terms.push((-((n - 1) as f64), vec![]));
            }
        }
        2 => {
            if n == 1 {
                terms.push((1.0, vec![(0, 2)]));
            } else {
                // |k| = 2: one dim at level 2, or two dims at level 1.
                for d in 0..n {
                    terms.push((1.0, vec![(d, 2)]));
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        terms.push((1.0, vec![(i, 1), (j, 1)]));
                    }
                }
                // |k| = 1 with coefficient −C(n−1, 1).
                for d in 0..n {
                    terms.push((-((n - 1) as f64), vec![(d, 1)]));
                }
                // |k| = 0 with coefficient +C(n−1, 2).
                let c = ((n - 1) * (n - 2) / 2) as f64;
                if c != 0.0 {
                    terms.push((c, vec![]));
                }
            }
        }
        other => return Err(ScamrError::UnsupportedLevel(other)),
    }
    Ok(terms)
}

/// Sparse-key merge of the Smolyak combination. A node is identified by its
/// non-center coordinates only, which keeps high-dimensional grids cheap.
fn smolyak_merge(n: usize, level: u32) -> Result<BTreeMap<Vec<(usize, i64)>, f64>> {
    let mut merged: BTreeMap<Vec<(usize, i64)>, f64> = BTreeMap::new();
    for (coeff, active) in smolyak_terms(n, level)? {
        let inactive_mass = 2f64.powi((n - active.len()) as i32);
        let per_dim: Vec<(usize, Vec<f64>, Vec<f64>)> = active
            .iter()
            .map(|&(d, l)| (d, chebyshev_nodes_1d(l), clenshaw_curtis_weights_1d(l)))
            .collect();
        let mut stack: Vec<(Vec<(usize, i64)>, f64)> = vec![(Vec::new(), coeff * inactive_mass)];
        for (d, nodes, weights) in &per_dim {
            let mut next = Vec::with_capacity(stack.len() * nodes.len());
            for (key, w) in &stack {
                for (x, wx) in nodes.iter().zip(weights.iter()) {
                    let mut k = key.clone();
                    let q = qcoord(*x);
                    if q != 0 {
                        k.push((*d, q));
                    }
                    next.push((k, w * wx));
                }
            }
            stack = next;
        }
        for (mut key, w) in stack {
            key.sort_unstable();
            *merged.entry(key).or_insert(0.0) += w;
        }
    }
    Ok(merged)
}

/// Number of distinct nodes in the depth-`level` sparse grid without
/// materializing coordinates (cheap even for n in the hundreds).
pub fn sparse_grid_node_count(n: usize, level: u32) -> Result<usize> {
    Ok(smolyak_merge(n, level)?.len())
}

/// n-dimensional Clenshaw–Curtis sparse grid of depth 1 or 2 on [-1,1]^n,
/// with combination-formula weights; duplicate nodes merged with summed
/// weights. Node counts: 2n+1 at level 1, 2n²+2n+1 at level 2.
pub fn sparse_grid(n: usize, level: u32) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(ScamrError::InvalidConfig(
            "sparse grid needs dimension ≥ 1".to_string(),
        ));
    }
    // Recover exact 1-D node values from their quantized merge keys.
    let mut exact: BTreeMap<i64, f64> = BTreeMap::new();
    for l in 0..=level {
        for x in chebyshev_nodes_1d(l) {
            exact.insert(qcoord(x), x);
        }
    }
    let merged = smolyak_merge(n, level)?;
    let mut nodes = Vec::with_capacity(merged.len());
    let mut weights = Vec::with_capacity(merged.len());
    for (key, w) in merged {
        let mut node = vec![0.0; n];
        for (d, q) in key {
            node[d] = exact[&q];
        }
        nodes.push(node);
        weights.push(w);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// An axis-aligned hyperbox [a_i, b_i) carrying refinement lineage.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: u64,
    pub parent: Option<u64>,
    pub depth: u32,
    bounds: Vec<(f64, f64)>,
}

impl Element {
    pub fn new(id: u64, parent: Option<u64>, depth: u32, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(ScamrError::InvalidConfig("element needs ≥ 1 dimension".into()));
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(ScamrError::InvalidConfig(format!(
                    "degenerate element interval [{lo}, {hi}] in dimension {d}"
                )));
            }
        }
        Ok(Self {
            id,
            parent,
            depth,
            bounds,
        })
    }

    /// Root element over the given bounds with id 0.
    pub fn root(bounds: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(0, None, 0, bounds)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn hypervolume(&self) -> f64 {
        self.bounds.iter().map(|&(a, b)| b - a).product()
    }

    /// Whether the closed box [a, b] contains the point. The tolerance has an
    /// absolute floor of 1e-12 so cache-key quantization noise cannot evict
    /// boundary points.
    pub fn contains_closed(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point.iter().zip(self.bounds.iter()).all(|(&x, &(a, b))| {
                let tol = 1e-12f64.max(1e-12 * (b - a));
                x >= a - tol && x <= b + tol
            })
    }

    /// Map a point from original coordinates into [-1,1]^n:
    /// η_i = −1 + 2 (ξ_i − a_i) / (b_i − a_i). Points within the acceptance
    /// tolerance of a face are clamped onto it so downstream basis
    /// evaluations see clean reference coordinates.
    pub fn to_reference(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(ScamrError::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        let mut out = Vec::with_capacity(point.len());
        for (d, (&x, &(a, b))) in point.iter().zip(self.bounds.iter()).enumerate() {
            let w = b - a;
            let tol = 1e-12f64.max(1e-12 * w);
            if x < a - tol || x > b + tol {
                return Err(ScamrError::OutOfDomain {
                    dim: d,
                    value: x,
                    lo: a,
                    hi: b,
                });
            }
            out.push((-1.0 + 2.0 * (x - a) / w).clamp(-1.0, 1.0));
        }
        Ok(out)
    }

    /// The same map run in reverse: reference coordinates back to original.
    pub fn from_reference(&self, reference: &[f64]) -> Result<Vec<f64>> {
        if reference.len() != self.dim() {
            return Err(ScamrError::DimensionMismatch {
                expected: self.dim(),
                got: reference.len(),
            });
        }
        Ok(reference
            .iter()
            .zip(self.bounds.iter())
            .map(|(&eta, &(a, b))| a + 0.5 * (eta + 1.0) * (b - a))
            .collect())
    }

    /// The m = 2^level + 1 points sweeping dimension `dim` along the element
    /// centerline: coordinate `dim` runs over the mapped Chebyshev nodes,
    /// every other coordinate sits at its interval midpoint.
    pub fn centerline_points(&self, dim: usize, level: u32) -> Result<Vec<Vec<f64>>> {
        if dim >= self.dim() {
            return Err(ScamrError::InvalidConfig(format!(
                "centerline dimension {dim} out of range for {}-d element",
                self.dim()
            )));
        }
        let base = self.center();
        let (a, b) = self.bounds[dim];
        Ok(chebyshev_nodes_1d(level)
            .into_iter()
            .map(|eta| {
                let mut p = base.clone();
                p[dim] = a + 0.5 * (eta + 1.0) * (b - a);
                p
            })
            .collect())
    }

    /// Bisect the listed dimensions (1 or 2, distinct) at their midpoints.
    /// Children tile the parent exactly, carry its id, and depth + 1; ids are
    /// assigned from the monotone counter in creation order.
    pub fn subdivide(&self, dims: &[usize], next_id: &mut u64) -> Result<Vec<Element>> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(ScamrError::InvalidConfig(format!(
                "subdivide takes 1 or 2 dimensions, got {}",
                dims.len()
            )));
        }
        let mut split = dims.to_vec();
        split.sort_unstable();
        split.dedup();
        if split.len() != dims.len() {
            return Err(ScamrError::InvalidConfig(
                "subdivide dimensions must be distinct".to_string(),
            ));
        }
        for &d in &split {
            if d >= self.dim() {
                return Err(ScamrError::InvalidConfig(format!(
                    "subdivide dimension {d} out of range for {}-d element",
                    self.dim()
                )));
            }
        }
        let mut children = Vec::with_capacity(1 << split.len());
        for mask in 0..(1usize << split.len()) {
            let mut bounds = self.bounds.clone();
            for (bit, &d) in split.iter().enumerate() {
                let (a, b) = bounds[d];
                let mid = 0.5 * (a + b);
                bounds[d] = if mask >> bit & 1 == 0 { (a, mid) } else { (mid, b) };
            }
            let id = *next_id;
            *next_id += 1;
            children.push(Element::new(id, Some(self.id), self.depth + 1, bounds)?);
        }
        Ok(children)
    }

    /// Hypervolume of this element relative to `root`.
    pub fn hypervolume_fraction(&self, root: &Element) -> f64 {
        self.hypervolume() / root.hypervolume()
    }
}
