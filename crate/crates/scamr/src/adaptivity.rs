//! The adaptive criteria: 1-D abrupt variation, first-level non-interaction,
//! pairwise interaction on square corner points, and the element gPC residual
//! check. All model evaluations route through the shared [`EvaluationCache`].
//!
//! Subproblems live on a subset of the input dimensions; a
//! [`SubproblemFrame`] carries the embedding of sub-dimensional points into
//! full model inputs (the complement coordinates sit at the cut center).

use crate::cache::{EvaluationCache, Model};
use crate::error::{Result, ScamrError};
use crate::gpc::{fit_least_squares, GpcSurrogate, MultiIndexSet};
use crate::grids::{chebyshev_nodes_1d, sparse_grid, Element};

/// Depth of the centerline sweeps (m = 5 points).
pub const CENTERLINE_LEVEL: u32 = 2;

/// Embedding of a subproblem's coordinates into the full input space.
#[derive(Debug, Clone)]
pub struct SubproblemFrame {
    dims: Vec<usize>,
    template: Vec<f64>,
}

impl SubproblemFrame {
    /// Frame over dims `dims` (sorted ascending) with every other coordinate
    /// pinned at the matching entry of `template` (usually the cut center).
    pub fn new(mut dims: Vec<usize>, template: Vec<f64>) -> Self {
        dims.sort_unstable();
        dims.dedup();
        debug_assert!(dims.iter().all(|&d| d < template.len()));
        Self { dims, template }
    }

    /// Frame covering the whole input space.
    pub fn global(template: Vec<f64>) -> Self {
        let dims = (0..template.len()).collect();
        Self { dims, template }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn sub_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn full_dim(&self) -> usize {
        self.template.len()
    }

    pub fn template(&self) -> &[f64] {
        &self.template
    }

    /// Lift a sub-dimensional point to a full model input.
    pub fn embed(&self, sub: &[f64]) -> Vec<f64> {
        debug_assert_eq!(sub.len(), self.dims.len());
        let mut full = self.template.clone();
        for (&d, &x) in self.dims.iter().zip(sub.iter()) {
            full[d] = x;
        }
        full
    }

    /// Restrict a full point to the subproblem's dimensions.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.dims.iter().map(|&d| full[d]).collect()
    }

    /// Evaluate the model at an embedded sub-point through the cache.
    pub fn eval(&self, model: &dyn Model, cache: &EvaluationCache, sub: &[f64]) -> Result<f64> {
        cache.eval(model, &self.embed(sub))
    }
}

/// Outcome of one adaptive criterion check.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub satisfied: bool,
    /// The ∞-norm that was tested against the tolerance.
    pub error_magnitude: f64,
    /// Per-test-point error breakdown.
    pub detail: Vec<f64>,
}

impl CriterionOutcome {
    fn from_errors(detail: Vec<f64>, tolerance: f64, strict: bool) -> Self {
        let error_magnitude = detail.iter().fold(0.0f64, |a, &b| a.max(b));
        let satisfied = if strict {
            error_magnitude < tolerance
        } else {
            error_magnitude <= tolerance
        };
        Self {
            satisfied,
            error_magnitude,
            detail,
        }
    }
}

/// Critical dimensions of an element, descending by abrupt-variation error;
/// contains only dimensions that failed the check. Ties break toward the
/// lower dimension index.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalRanking {
    pub entries: Vec<(usize, f64)>,
}

impl CriticalRanking {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The top one or two dimensions to subdivide along.
    pub fn split_dims(&self) -> Vec<usize> {
        self.entries.iter().take(2).map(|&(d, _)| d).collect()
    }
}

/// Sweep points along sub-dimension `dim` of the element: the swept
/// coordinate runs over the mapped Chebyshev nodes, the other sub-coordinates
/// sit at `anchor`.
fn sweep_points(e: &Element, dim: usize, anchor: &[f64], level: u32) -> Vec<Vec<f64>> {
    let (a, b) = e.bounds()[dim];
    chebyshev_nodes_1d(level)
        .into_iter()
        .map(|eta| {
            let mut p = anchor.to_vec();
            p[dim] = a + 0.5 * (eta + 1.0) * (b - a);
            p
        })
        .collect()
}

fn sweep_values(
    frame: &SubproblemFrame,
    e: &Element,
    dim: usize,
    anchor: &[f64],
    model: &dyn Model,
    cache: &EvaluationCache,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if dim >= e.dim() {
        return Err(ScamrError::InvalidConfig(format!(
            "sweep dimension {dim} out of range for {}-d element",
            e.dim()
        )));
    }
    let points = sweep_points(e, dim, anchor, CENTERLINE_LEVEL);
    let mut values = Vec::with_capacity(points.len());
    for p in &points {
        values.push(frame.eval(model, cache, p)?);
    }
    Ok((points, values))
}

/// Abrupt-variation check along one dimension of an element, anchored at an
/// arbitrary point on the line (the element center in the refinement loop).
///
/// Fits a 1-D second-order expansion to the 5 sweep values by least squares
/// and tests the ∞-norm of (fit − exact) at those points against ε₁ (strict).
pub fn check_abrupt_variation_anchored(
    frame: &SubproblemFrame,
    e: &Element,
    dim: usize,
    anchor: &[f64],
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon1: f64,
) -> Result<CriterionOutcome> {
    let (points, values) = sweep_values(frame, e, dim, anchor, model, cache)?;
    let (a, b) = e.bounds()[dim];
    let basis = MultiIndexSet::total_degree(1, 2)?;
    let reference: Vec<Vec<f64>> = points
        .iter()
        .map(|p| vec![-1.0 + 2.0 * (p[dim] - a) / (b - a)])
        .collect();
    let coeffs = fit_least_squares(&basis, &reference, &values)?;
    let detail: Vec<f64> = reference
        .iter()
        .zip(values.iter())
        .map(|(r, &u)| {
            let phi = basis.basis_eval(r).expect("reference point in range");
            let fit: f64 = phi.iter().zip(coeffs.iter()).map(|(p, c)| p * c).sum();
            (fit - u).abs()
        })
        .collect();
    Ok(CriterionOutcome::from_errors(detail, epsilon1, true))
}

/// Abrupt-variation check along the element centerline.
pub fn check_abrupt_variation(
    frame: &SubproblemFrame,
    e: &Element,
    dim: usize,
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon1: f64,
) -> Result<CriterionOutcome> {
    check_abrupt_variation_anchored(frame, e, dim, &e.center(), model, cache, epsilon1)
}

/// First-level non-interaction check: the sweep along `dim` deviates from the
/// anchor value u_c by less than ε₁ in ∞-norm (strict). A satisfied outcome
/// marks the dimension as globally non-interacting and flat.
pub fn check_first_level_noninteraction_anchored(
    frame: &SubproblemFrame,
    e: &Element,
    dim: usize,
    anchor: &[f64],
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon1: f64,
) -> Result<CriterionOutcome> {
    let (_, values) = sweep_values(frame, e, dim, anchor, model, cache)?;
    let u_c = frame.eval(model, cache, anchor)?;
    let detail: Vec<f64> = values.iter().map(|&u| (u - u_c).abs()).collect();
    Ok(CriterionOutcome::from_errors(detail, epsilon1, true))
}

/// First-level non-interaction check along the element centerline.
pub fn check_first_level_noninteraction(
    frame: &SubproblemFrame,
    e: &Element,
    dim: usize,
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon1: f64,
) -> Result<CriterionOutcome> {
    check_first_level_noninteraction_anchored(frame, e, dim, &e.center(), model, cache, epsilon1)
}

/// Pairwise interaction check on the global domain.
///
/// The square test points are the four corner points of the (i₁, i₂) face
/// through the cut center; g_approx = g_{i1} + g_{i2} − g₀ uses the axis
/// projections already cached by the centerline sweeps. Satisfied iff
/// max |g_true − g_approx| ≤ ε₂ (non-strict, as written in the source).
pub fn check_pairwise_interaction(
    domain: &Element,
    i1: usize,
    i2: usize,
    cut: &[f64],
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon2: f64,
) -> Result<CriterionOutcome> {
    let n = domain.dim();
    if i1 >= n || i2 >= n || i1 == i2 {
        return Err(ScamrError::InvalidConfig(format!(
            "invalid pair ({i1}, {i2}) for {n}-d domain"
        )));
    }
    let g0 = cache.eval(model, cut)?;
    let (a1, b1) = domain.bounds()[i1];
    let (a2, b2) = domain.bounds()[i2];
    let mut detail = Vec::with_capacity(4);
    for &x1 in &[a1, b1] {
        for &x2 in &[a2, b2] {
            let mut corner = cut.to_vec();
            corner[i1] = x1;
            corner[i2] = x2;
            let g_true = cache.eval(model, &corner)?;

            let mut p1 = cut.to_vec();
            p1[i1] = x1;
            let g1 = cache.eval(model, &p1)?;
            let mut p2 = cut.to_vec();
            p2[i2] = x2;
            let g2 = cache.eval(model, &p2)?;

            detail.push((g_true - (g1 + g2 - g0)).abs());
        }
    }
    Ok(CriterionOutcome::from_errors(detail, epsilon2, false))
}

/// Element gPC residual check (the convergence criterion).
///
/// Fits an order-`order` expansion by least squares on ξ = {ξ_a, ξ_b}: the
/// element's sparse-grid nodes of depth `order` (level 2 for order 2, level 1
/// for order 1) plus every previously cached point inside the closed element
/// on this subproblem's cut slice. Returns the ∞-norm of the residual at the
/// fit points against ε₁ (strict) together with the fitted surrogate.
pub fn check_gpc_residual(
    frame: &SubproblemFrame,
    e: &Element,
    order: u32,
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon1: f64,
) -> Result<(CriterionOutcome, GpcSurrogate)> {
    let d = e.dim();
    let level = order.min(2).max(1);
    let rule = sparse_grid(d, level)?;
    for node in &rule.nodes {
        let sub = e.from_reference(node)?;
        frame.eval(model, cache, &sub)?;
    }

    let harvested = cache.harvest_in_box(frame.dims(), e.bounds(), frame.template());
    let basis = MultiIndexSet::total_degree(d, order)?;
    if harvested.len() <= basis.len() {
        return Err(ScamrError::InsufficientPoints {
            points: harvested.len(),
            terms: basis.len(),
        }
        .with_context(format!("gPC residual check on element {}", e.id)));
    }

    let mut reference = Vec::with_capacity(harvested.len());
    let mut values = Vec::with_capacity(harvested.len());
    for (sub, v) in &harvested {
        reference.push(e.to_reference(sub)?);
        values.push(*v);
    }
    let coeffs = fit_least_squares(&basis, &reference, &values)
        .map_err(|err| err.with_context(format!("gPC fit on element {}", e.id)))?;
    let detail: Vec<f64> = reference
        .iter()
        .zip(values.iter())
        .map(|(r, &u)| {
            let phi = basis.basis_eval(r).expect("harvested point in range");
            let fit: f64 = phi.iter().zip(coeffs.iter()).map(|(p, c)| p * c).sum();
            (fit - u).abs()
        })
        .collect();
    let outcome = CriterionOutcome::from_errors(detail, epsilon1, true);
    let surrogate = GpcSurrogate::new(basis, coeffs, e.bounds().to_vec())?;
    Ok((outcome, surrogate))
}

/// Run the abrupt-variation check on every dimension of the element's
/// subproblem; failing dimensions sorted by error descending, ties broken by
/// lower dimension index.
pub fn rank_critical_dimensions(
    frame: &SubproblemFrame,
    e: &Element,
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon1: f64,
) -> Result<CriticalRanking> {
    rank_critical_dimensions_anchored(frame, e, &e.center(), model, cache, epsilon1)
}

pub fn rank_critical_dimensions_anchored(
    frame: &SubproblemFrame,
    e: &Element,
    anchor: &[f64],
    model: &dyn Model,
    cache: &EvaluationCache,
    epsilon1: f64,
) -> Result<CriticalRanking> {
    let mut entries = Vec::new();
    for dim in 0..e.dim() {
        let outcome =
            check_abrupt_variation_anchored(frame, e, dim, anchor, model, cache, epsilon1)?;
        if !outcome.satisfied {
            entries.push((dim, outcome.error_magnitude));
        }
    }
    sort_by_error_desc(&mut entries);
    Ok(CriticalRanking { entries })
}

/// All per-dimension abrupt-variation errors (used to pick split directions
/// when the residual check fails but no dimension is critical).
pub fn abrupt_errors_anchored(
    frame: &SubproblemFrame,
    e: &Element,
    anchor: &[f64],
    model: &dyn Model,
    cache: &EvaluationCache,
) -> Result<Vec<f64>> {
    let mut errors = Vec::with_capacity(e.dim());
    for dim in 0..e.dim() {
        let outcome =
            check_abrupt_variation_anchored(frame, e, dim, anchor, model, cache, f64::INFINITY)?;
        errors.push(outcome.error_magnitude);
    }
    Ok(errors)
}

/// Sort (dim, error) descending by error, ties toward the lower index.
pub fn sort_by_error_desc(entries: &mut [(usize, f64)]) {
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
}
