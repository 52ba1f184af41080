//! Generalized polynomial chaos core: total-degree multi-index sets, Legendre
//! bases, and the two coefficient solvers (discrete projection and least
//! squares).
//!
//! Everything here works on the reference cube [-1,1]^n. A [`GpcSurrogate`]
//! additionally carries the bounds of the element it covers in original
//! coordinates and maps queries through the affine element map before
//! evaluating the expansion.

use crate::error::{Result, ScamrError};
use crate::jsonfmt;
use nalgebra::{DMatrix, DVector};

/// Tolerance for accepting reference coordinates slightly outside [-1,1]
/// (affine maps introduce last-ulp noise).
const REF_DOMAIN_TOL: f64 = 1e-9;

/// Total-degree multi-index set for dimension `dim` and order `order`.
///
/// Indices are stored in graded lexicographic order: ascending total degree,
/// and within a degree descending lexicographic on the tuple, so that
/// `(n=2, p=2)` enumerates (0,0), (1,0), (0,1), (2,0), (1,1), (0,2). This
/// fixes the coefficient vector layout for serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    order: u32,
    indices: Vec<Vec<u32>>,
}

impl MultiIndexSet {
    /// Build the complete total-degree set with component sums ≤ `order`.
    pub fn total_degree(dim: usize, order: u32) -> Result<Self> {
        if dim == 0 {
            return Err(ScamrError::InvalidConfig(
                "multi-index set needs dimension ≥ 1".to_string(),
            ));
        }
        let mut indices = Vec::new();
        let mut scratch = vec![0u32; dim];
        for degree in 0..=order {
            emit_degree(degree, 0, &mut scratch, &mut indices);
        }
        debug_assert_eq!(indices.len() as u128, binomial(dim as u128 + order as u128, order as u128));
        Ok(Self { dim, order, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of basis terms, N+1 = (n+p)! / (n! p!).
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    /// Evaluate every basis function at `point` (reference coordinates).
    ///
    /// Entry i is the tensor product of 1-D Legendre polynomials with the
    /// degrees of multi-index i.
    pub fn basis_eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim {
            return Err(ScamrError::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        for (d, &x) in point.iter().enumerate() {
            if x.abs() > 1.0 + REF_DOMAIN_TOL {
                return Err(ScamrError::OutOfDomain {
                    dim: d,
                    value: x,
                    lo: -1.0,
                    hi: 1.0,
                });
            }
        }
        // Tabulate P_0..P_p once per dimension, then form products.
        let per_dim: Vec<Vec<f64>> = point
            .iter()
            .map(|&x| legendre_upto(self.order, x))
            .collect();
        Ok(self
            .indices
            .iter()
            .map(|idx| {
                idx.iter()
                    .enumerate()
                    .map(|(d, &k)| per_dim[d][k as usize])
                    .product()
            })
            .collect())
    }

    /// E[Φ_i²] under the uniform probability density on [-1,1]^n:
    /// ∏_d 1/(2 k_d + 1).
    pub fn basis_norms_sq(&self) -> Vec<f64> {
        self.indices
            .iter()
            .map(|idx| idx.iter().map(|&k| 1.0 / (2.0 * k as f64 + 1.0)).product())
            .collect()
    }
}

/// Emit all tuples of the given total degree in descending lex order.
fn emit_degree(remaining: u32, pos: usize, scratch: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(scratch.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        scratch[pos] = v;
        emit_degree(remaining - v, pos + 1, scratch, out);
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// P_degree(x) by the three-term recurrence; clamps x into [-1,1] within a
/// small tolerance (values just outside come from affine-map round-off).
pub fn legendre_eval(degree: u32, x: f64) -> f64 {
    debug_assert!(x.abs() <= 1.0 + REF_DOMAIN_TOL, "legendre_eval x = {x}");
    let x = x.clamp(-1.0, 1.0);
    match degree {
        0 => 1.0,
        1 => x,
        _ => {
            let mut p_prev = 1.0;
            let mut p = x;
            for k in 1..degree {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
                p_prev = p;
                p = next;
            }
            p
        }
    }
}

/// P_0(x)..P_max(x) in one recurrence pass.
fn legendre_upto(max: u32, x: f64) -> Vec<f64> {
    let x = x.clamp(-1.0, 1.0);
    let mut out = Vec::with_capacity(max as usize + 1);
    out.push(1.0);
    if max == 0 {
        return out;
    }
    out.push(x);
    for k in 1..max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k as usize] - kf * out[k as usize - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

fn check_finite(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(ScamrError::NonFiniteData { index: i, value: v });
        }
    }
    Ok(())
}

/// Discrete projection (quadrature) estimate of the gPC coefficients.
///
/// `weights` must be a quadrature rule on [-1,1]^n in Lebesgue normalization
/// (weights sum to 2^n); the uniform probability density 1/2^n and the
/// basis norms E[Φ_i²] = ∏ 1/(2k+1) are applied here.
pub fn fit_discrete_projection(
    basis: &MultiIndexSet,
    nodes: &[Vec<f64>],
    weights: &[f64],
    values: &[f64],
) -> Result<Vec<f64>> {
    if nodes.len() != weights.len() {
        return Err(ScamrError::LengthMismatch {
            left_name: "nodes",
            left: nodes.len(),
            right_name: "weights",
            right: weights.len(),
        });
    }
    if nodes.len() != values.len() {
        return Err(ScamrError::LengthMismatch {
            left_name: "nodes",
            left: nodes.len(),
            right_name: "values",
            right: values.len(),
        });
    }
    if nodes.is_empty() {
        return Err(ScamrError::InvalidConfig(
            "discrete projection needs at least one node".to_string(),
        ));
    }
    check_finite(values)?;

    let measure = 2f64.powi(basis.dim() as i32);
    let norms = basis.basis_norms_sq();
    let mut coeffs = vec![0.0; basis.len()];
    for (node, (&w, &u)) in nodes.iter().zip(weights.iter().zip(values.iter())) {
        let phi = basis.basis_eval(node)?;
        for (c, p) in coeffs.iter_mut().zip(phi.iter()) {
            *c += u * p * w;
        }
    }
    for (c, nrm) in coeffs.iter_mut().zip(norms.iter()) {
        *c /= nrm * measure;
    }
    Ok(coeffs)
}

/// Least-squares estimate of the gPC coefficients from M > N+1 points.
///
/// Solved by SVD with a rank tolerance of 1e-10 relative to the largest
/// singular value. A rank-deficient design is reported together with the
/// dependent basis columns (found by a modified Gram–Schmidt scan).
pub fn fit_least_squares(
    basis: &MultiIndexSet,
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<Vec<f64>> {
    let terms = basis.len();
    if points.len() != values.len() {
        return Err(ScamrError::LengthMismatch {
            left_name: "points",
            left: points.len(),
            right_name: "values",
            right: values.len(),
        });
    }
    if points.len() <= terms {
        return Err(ScamrError::InsufficientPoints {
            points: points.len(),
            terms,
        });
    }
    check_finite(values)?;

    let m = points.len();
    let mut design = DMatrix::<f64>::zeros(m, terms);
    for (r, point) in points.iter().enumerate() {
        let phi = basis.basis_eval(point)?;
        for (c, v) in phi.iter().enumerate() {
            design[(r, c)] = *v;
        }
    }

    const RANK_TOL: f64 = 1e-10;
    let svd = design.clone().svd(true, true);
    let sv_max = svd.singular_values.max();
    if !(sv_max > 0.0) {
        return Err(ScamrError::DegenerateDesign {
            columns: (0..terms).collect(),
            indices: basis.indices().to_vec(),
        });
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * sv_max)
        .count();
    if rank < terms {
        let columns = dependent_columns(&design, RANK_TOL);
        let indices = columns
            .iter()
            .map(|&c| basis.indices()[c].clone())
            .collect();
        return Err(ScamrError::DegenerateDesign { columns, indices });
    }

    let rhs = DVector::from_column_slice(values);
    let sol = svd
        .solve(&rhs, RANK_TOL * sv_max)
        .map_err(|e| ScamrError::InvalidConfig(format!("svd solve failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

/// Least squares over a column subset of the basis: coefficients of masked
/// columns are pinned to zero. Used by the global second-order check when
/// flat dimensions leave cross terms without any informative fit points.
pub fn fit_least_squares_subset(
    basis: &MultiIndexSet,
    keep: &[bool],
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<Vec<f64>> {
    if keep.len() != basis.len() {
        return Err(ScamrError::LengthMismatch {
            left_name: "keep",
            left: keep.len(),
            right_name: "basis terms",
            right: basis.len(),
        });
    }
    let kept: Vec<usize> = (0..basis.len()).filter(|&i| keep[i]).collect();
    if points.len() <= kept.len() {
        return Err(ScamrError::InsufficientPoints {
            points: points.len(),
            terms: kept.len(),
        });
    }
    check_finite(values)?;

    let m = points.len();
    let mut design = DMatrix::<f64>::zeros(m, kept.len());
    for (r, point) in points.iter().enumerate() {
        let phi = basis.basis_eval(point)?;
        for (c, &col) in kept.iter().enumerate() {
            design[(r, c)] = phi[col];
        }
    }
    const RANK_TOL: f64 = 1e-10;
    let svd = design.svd(true, true);
    let sv_max = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * sv_max)
        .count();
    if !(sv_max > 0.0) || rank < kept.len() {
        return Err(ScamrError::DegenerateDesign {
            columns: kept.clone(),
            indices: kept.iter().map(|&c| basis.indices()[c].clone()).collect(),
        });
    }
    let rhs = DVector::from_column_slice(values);
    let sol = svd
        .solve(&rhs, RANK_TOL * sv_max)
        .map_err(|e| ScamrError::InvalidConfig(format!("svd solve failed: {e}")))?;
    let mut coeffs = vec![0.0; basis.len()];
    for (c, &col) in kept.iter().enumerate() {
        coeffs[col] = sol[c];
    }
    Ok(coeffs)
}

/// Columns whose residual against the span of the preceding columns is
/// negligible; these are the offending terms of a rank-deficient design.
fn dependent_columns(design: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let (m, n) = design.shape();
    let mut basis_cols: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    let scale = design.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
    for c in 0..n {
        let mut v = DVector::from_fn(m, |r, _| design[(r, c)]);
        for q in &basis_cols {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        let norm = v.norm();
        if norm <= tol * scale * (m as f64).sqrt() {
            dependent.push(c);
        } else {
            basis_cols.push(v / norm);
        }
    }
    dependent
}

/// A truncated Legendre expansion on a hyperbox element.
#[derive(Debug, Clone, PartialEq)]
pub struct GpcSurrogate {
    basis: MultiIndexSet,
    coefficients: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl GpcSurrogate {
    pub fn new(
        basis: MultiIndexSet,
        coefficients: Vec<f64>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(ScamrError::LengthMismatch {
                left_name: "coefficients",
                left: coefficients.len(),
                right_name: "basis terms",
                right: basis.len(),
            });
        }
        if bounds.len() != basis.dim() {
            return Err(ScamrError::DimensionMismatch {
                expected: basis.dim(),
                got: bounds.len(),
            });
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) {
                return Err(ScamrError::InvalidConfig(format!(
                    "degenerate bounds [{lo}, {hi}] in dimension {d}"
                )));
            }
        }
        check_finite(&coefficients)?;
        Ok(Self {
            basis,
            coefficients,
            bounds,
        })
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn order(&self) -> u32 {
        self.basis.order()
    }

    /// Evaluate at a query point in original coordinates.
    pub fn eval(&self, query: &[f64]) -> Result<f64> {
        if query.len() != self.bounds.len() {
            return Err(ScamrError::DimensionMismatch {
                expected: self.bounds.len(),
                got: query.len(),
            });
        }
        let mut reference = Vec::with_capacity(query.len());
        for (d, (&x, &(lo, hi))) in query.iter().zip(self.bounds.iter()).enumerate() {
            let width = hi - lo;
            if x < lo - REF_DOMAIN_TOL * width || x > hi + REF_DOMAIN_TOL * width {
                return Err(ScamrError::OutOfDomain {
                    dim: d,
                    value: x,
                    lo,
                    hi,
                });
            }
            reference.push(-1.0 + 2.0 * (x - lo) / width);
        }
        let phi = self.basis.basis_eval(&reference)?;
        Ok(phi
            .iter()
            .zip(self.coefficients.iter())
            .map(|(p, c)| p * c)
            .sum())
    }

    /// Mean under the uniform density on the element: the constant-term
    /// coefficient, since every non-constant Legendre term has zero mean.
    pub fn mean(&self) -> f64 {
        self.coefficients[0]
    }

    /// JSON object {dim, order, bounds, coefficients} with doubles printed to
    /// 17 significant digits, coefficients in graded-lex order.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\"dim\":");
        s.push_str(&self.basis.dim().to_string());
        s.push_str(",\"order\":");
        s.push_str(&self.basis.order().to_string());
        s.push_str(",\"bounds\":[");
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push('[');
            s.push_str(&jsonfmt::f64_to_json(lo));
            s.push(',');
            s.push_str(&jsonfmt::f64_to_json(hi));
            s.push(']');
        }
        s.push_str("],\"coefficients\":[");
        for (i, &c) in self.coefficients.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&jsonfmt::f64_to_json(c));
        }
        s.push_str("]}");
        s
    }
}
