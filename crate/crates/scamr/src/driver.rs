//! End-to-end orchestration: global smoothness checks, dimensionality
//! reduction, per-subproblem adaptive refinement with stopping criteria,
//! surrogate extraction, and mean estimation. Owns the evaluation cache and
//! cost accounting.
//!
//! Phases, in order:
//! 1. Global first-order fit on the depth-1 sparse grid by discrete
//!    projection; accepted outright if its residual passes.
//! 2. Per-dimension abrupt-variation and first-level non-interaction sweeps,
//!    pairwise interaction checks over the remaining dimensions, and assembly
//!    of the sub-dimensional decomposition.
//! 3. If no dimension is critical, a global second-order least-squares fit on
//!    the already-cached points (no new evaluations); accepted if it passes.
//! 4. Otherwise adaptive hyperbox refinement per subproblem.
//!
//! A degenerate-cut safeguard guards phase 1: when every depth-1 value is
//! bit-identical, the function is probed at the two joint domain corners
//! before the constant fit is believed. A mismatch re-anchors the cut center
//! a quarter of the way toward the live corner in the implicated dimensions
//! and restarts the global checks from phase 2 (a function whose
//! discontinuity surface passes through the default cut center is invisible
//! to every axis-aligned probe line).

use crate::adaptivity::{
    abrupt_errors_anchored, check_abrupt_variation_anchored,
    check_first_level_noninteraction_anchored, check_gpc_residual, check_pairwise_interaction,
    rank_critical_dimensions, sort_by_error_desc, CriterionOutcome, SubproblemFrame,
};
use crate::cache::{EvaluationCache, Model};
use crate::decomposition::{
    assemble_decomposition, build_interaction_graph, derive_groups, Decomposition,
    SubproblemEvaluator,
};
use crate::error::{Result, ScamrError};
use crate::gpc::{fit_discrete_projection, fit_least_squares, fit_least_squares_subset, GpcSurrogate, MultiIndexSet};
use crate::grids::{sparse_grid, Element};
use std::collections::{BTreeMap, BTreeSet};

/// Relative discrepancy threshold for the leave-one-out dimension isolation
/// of the degenerate-cut safeguard.
const RESCUE_LOO_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ScamrConfig {
    /// ε₁: tolerance of the abrupt-variation, first-level and gPC residual
    /// checks. Absolute, not relative to output scale.
    pub epsilon1: f64,
    /// ε₂: tolerance of the pairwise interaction check.
    pub epsilon2: f64,
    /// Maximum refinement sweeps per subproblem.
    pub max_iterations: u32,
    /// Stop refining a subproblem once the summed hypervolume fraction of its
    /// open elements drops below this.
    pub min_volume_fraction: f64,
    /// Seed for validation sampling only; the algorithm itself is
    /// deterministic.
    pub rng_seed: u64,
}

impl Default for ScamrConfig {
    fn default() -> Self {
        Self {
            epsilon1: 1e-3,
            epsilon2: 1e-3,
            max_iterations: 12,
            min_volume_fraction: 1e-6,
            rng_seed: 0,
        }
    }
}

impl ScamrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon1 > 0.0) || !(self.epsilon2 > 0.0) {
            return Err(ScamrError::InvalidConfig(format!(
                "tolerances must be strictly positive: eps1 = {}, eps2 = {}",
                self.epsilon1, self.epsilon2
            )));
        }
        if self.max_iterations == 0 {
            return Err(ScamrError::InvalidConfig(
                "max_iterations must be ≥ 1".to_string(),
            ));
        }
        if !(self.min_volume_fraction > 0.0 && self.min_volume_fraction < 1.0) {
            return Err(ScamrError::InvalidConfig(format!(
                "min_volume_fraction must lie in (0, 1), got {}",
                self.min_volume_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementStatus {
    Open,
    ConvergedP2,
    ConvergedP1,
    FallbackP1,
}

impl ElementStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ElementStatus::Open => "open",
            ElementStatus::ConvergedP2 => "converged-p2",
            ElementStatus::ConvergedP1 => "converged-p1",
            ElementStatus::FallbackP1 => "converged-p1-fallback",
        }
    }
}

#[derive(Debug)]
pub struct TreeNode {
    pub element: Element,
    /// Sorted dimensions this node was split along (empty for leaves).
    pub split_dims: Vec<usize>,
    /// Child node indices in mask order over `split_dims`.
    pub children: Vec<usize>,
    pub status: ElementStatus,
    pub surrogate: Option<GpcSurrogate>,
}

/// A subproblem's refinement tree. Node 0 is the root; leaves tile the
/// subproblem domain and each carries a local surrogate once refinement
/// finishes.
#[derive(Debug)]
pub struct ElementTree {
    pub nodes: Vec<TreeNode>,
}

impl ElementTree {
    fn new(root: Element) -> Self {
        Self {
            nodes: vec![TreeNode {
                element: root,
                split_dims: Vec::new(),
                children: Vec::new(),
                status: ElementStatus::Open,
                surrogate: None,
            }],
        }
    }

    pub fn leaf_indices(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].children.is_empty())
            .collect()
    }

    /// Leaf containing the point. Half-open intervals resolve a coordinate on
    /// a split plane to the upper child, so the domain's top faces are owned
    /// by the topmost elements and location is total and unambiguous.
    pub fn locate(&self, point: &[f64]) -> usize {
        let mut idx = 0;
        while !self.nodes[idx].children.is_empty() {
            let node = &self.nodes[idx];
            let mut mask = 0usize;
            for (bit, &d) in node.split_dims.iter().enumerate() {
                let (a, b) = node.element.bounds()[d];
                if point[d] >= 0.5 * (a + b) {
                    mask |= 1 << bit;
                }
            }
            idx = node.children[mask];
        }
        idx
    }

    fn subdivide_node(&mut self, idx: usize, dims: &[usize], next_id: &mut u64) -> Result<Vec<usize>> {
        let children = self.nodes[idx].element.subdivide(dims, next_id)?;
        let mut sorted = dims.to_vec();
        sorted.sort_unstable();
        let mut child_indices = Vec::with_capacity(children.len());
        for child in children {
            let node_idx = self.nodes.len();
            self.nodes.push(TreeNode {
                element: child,
                split_dims: Vec::new(),
                children: Vec::new(),
                status: ElementStatus::Open,
                surrogate: None,
            });
            child_indices.push(node_idx);
        }
        self.nodes[idx].split_dims = sorted;
        self.nodes[idx].children = child_indices.clone();
        self.nodes[idx].status = ElementStatus::Open;
        self.nodes[idx].surrogate = None;
        Ok(child_indices)
    }

    /// Hypervolume-weighted average of the leaf constant terms: the surrogate
    /// mean over this subproblem's domain.
    pub fn mean(&self) -> f64 {
        let root = &self.nodes[0].element;
        self.leaf_indices()
            .into_iter()
            .map(|i| {
                let node = &self.nodes[i];
                let weight = node.element.hypervolume_fraction(root);
                let local = node
                    .surrogate
                    .as_ref()
                    .expect("finished tree leaf carries a surrogate")
                    .mean();
                weight * local
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemRole {
    /// One of the S_i supports (enters the recombination with +1).
    Component,
    /// One of the T_j corrective sets (enters with −U_j).
    Corrective,
}

impl SubproblemRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubproblemRole::Component => "component",
            SubproblemRole::Corrective => "corrective",
        }
    }
}

#[derive(Debug)]
pub struct SubproblemSurrogate {
    pub dims: Vec<usize>,
    pub role: SubproblemRole,
    pub tree: ElementTree,
}

/// The composed SCAMR surrogate: the decomposition plus one element tree per
/// subproblem (components first, corrective sets after, matching the
/// decomposition's S and T order).
#[derive(Debug)]
pub struct ScamrSurrogate {
    pub config: ScamrConfig,
    pub domain: Element,
    pub decomposition: Decomposition,
    pub subproblems: Vec<SubproblemSurrogate>,
    pub total_evaluations: usize,
}

struct TreeEvaluator<'a> {
    index: BTreeMap<&'a [usize], &'a SubproblemSurrogate>,
}

impl SubproblemEvaluator for TreeEvaluator<'_> {
    fn eval(&self, dims: &[usize], query_sub: &[f64]) -> Result<f64> {
        let sub = self
            .index
            .get(dims)
            .ok_or_else(|| ScamrError::MissingSubproblem(dims.to_vec()))?;
        let leaf = sub.tree.locate(query_sub);
        let surrogate = sub.tree.nodes[leaf]
            .surrogate
            .as_ref()
            .ok_or_else(|| ScamrError::MissingSubproblem(dims.to_vec()))?;
        surrogate.eval(query_sub)
    }
}

impl ScamrSurrogate {
    fn evaluator(&self) -> TreeEvaluator<'_> {
        let mut index = BTreeMap::new();
        for sub in &self.subproblems {
            index.insert(sub.dims.as_slice(), sub);
        }
        TreeEvaluator { index }
    }

    /// Surrogate value at a query point inside the global domain: per
    /// subproblem, locate the leaf and evaluate its local expansion at the
    /// query restricted to the subproblem's dimensions, then recombine.
    pub fn extract_value(&self, query: &[f64]) -> Result<f64> {
        if query.len() != self.domain.dim() {
            return Err(ScamrError::DimensionMismatch {
                expected: self.domain.dim(),
                got: query.len(),
            });
        }
        for (d, (&x, &(lo, hi))) in query.iter().zip(self.domain.bounds().iter()).enumerate() {
            if x < lo - 1e-12 * (hi - lo) || x > hi + 1e-12 * (hi - lo) {
                return Err(ScamrError::OutOfDomain {
                    dim: d,
                    value: x,
                    lo,
                    hi,
                });
            }
        }
        crate::decomposition::combined_eval(&self.decomposition, &self.evaluator(), query)
    }

    /// Global mean: per subproblem the hypervolume-weighted average of leaf
    /// constant terms, composed through the linear recombination.
    pub fn estimate_mean(&self) -> f64 {
        let mut by_dims: BTreeMap<&[usize], f64> = BTreeMap::new();
        for sub in &self.subproblems {
            by_dims.insert(sub.dims.as_slice(), sub.tree.mean());
        }
        let d = &self.decomposition;
        let mut acc = 0.0;
        for si in &d.s {
            acc += by_dims[si.as_slice()];
        }
        for (tj, &uj) in d.t.iter().zip(d.u.iter()) {
            acc -= uj as f64 * by_dims[tj.as_slice()];
        }
        acc -= d.v as f64 * d.f0;
        acc
    }

    /// Total distinct model evaluations consumed building this surrogate.
    pub fn evaluation_count(&self) -> usize {
        self.total_evaluations
    }

    /// Serialized bundle (config, decomposition, element trees, evaluation
    /// count); deterministic byte-for-byte for identical runs.
    pub fn to_json(&self) -> String {
        crate::serialize::surrogate_bundle_json(self)
    }
}

/// One line of the run log.
#[derive(Debug, Clone)]
pub struct LogRecord {
    pub phase: &'static str,
    pub element: Option<u64>,
    pub criterion: &'static str,
    pub error_magnitude: f64,
    pub decision: String,
    pub cumulative_evaluations: usize,
}

impl std::fmt::Display for LogRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "phase={} element={} criterion={} error={:.6e} decision={} evals={}",
            self.phase,
            self.element.map_or("-".to_string(), |id| id.to_string()),
            self.criterion,
            self.error_magnitude,
            self.decision,
            self.cumulative_evaluations
        )
    }
}

pub type RunLog = Vec<LogRecord>;

/// Run the full pipeline and return the composed surrogate.
pub fn run_scamr(
    model: &dyn Model,
    domain: &Element,
    config: &ScamrConfig,
) -> Result<ScamrSurrogate> {
    let mut log = RunLog::new();
    run_scamr_with_log(model, domain, config, &mut log)
}

pub fn run_scamr_with_log(
    model: &dyn Model,
    domain: &Element,
    config: &ScamrConfig,
    log: &mut RunLog,
) -> Result<ScamrSurrogate> {
    config.validate()?;
    if model.dim() != domain.dim() {
        return Err(ScamrError::DimensionMismatch {
            expected: model.dim(),
            got: domain.dim(),
        });
    }
    let n = domain.dim();
    let cache = EvaluationCache::new();

    // Phase 1: first-order fit on the depth-1 sparse grid by discrete
    // projection, residual checked at the same nodes.
    let rule1 = sparse_grid(n, 1)?;
    let mut values1 = Vec::with_capacity(rule1.len());
    for node in &rule1.nodes {
        let p = domain.from_reference(node)?;
        values1.push(cache.eval(model, &p)?);
    }
    let basis1 = MultiIndexSet::total_degree(n, 1)?;
    let coeffs1 = fit_discrete_projection(&basis1, &rule1.nodes, &rule1.weights, &values1)?;
    let residual1 = max_residual(&basis1, &coeffs1, &rule1.nodes, &values1);
    log.push(LogRecord {
        phase: "global-1",
        element: None,
        criterion: "eq20",
        error_magnitude: residual1,
        decision: if residual1 < config.epsilon1 {
            "satisfied".into()
        } else {
            "refine".into()
        },
        cumulative_evaluations: cache.len(),
    });

    let mut cut = domain.center();
    let mut rescued = false;
    if residual1 < config.epsilon1 {
        // Exact value equality (so ±0 compare equal); an exactly constant
        // depth-1 restriction is the degenerate-cut signature.
        let all_equal = values1.windows(2).all(|w| w[0] == w[1]);
        if !all_equal {
            let surrogate = GpcSurrogate::new(basis1, coeffs1, domain.bounds().to_vec())?;
            return finish_global(model, domain, config, &cache, surrogate, ElementStatus::ConvergedP1, &cut);
        }
        // Every depth-1 value is identical: probe the joint corners before
        // believing the constant.
        match probe_degenerate_cut(model, &cache, domain, values1[0], config.epsilon1, log)? {
            None => {
                let surrogate = GpcSurrogate::new(basis1, coeffs1, domain.bounds().to_vec())?;
                return finish_global(model, domain, config, &cache, surrogate, ElementStatus::ConvergedP1, &cut);
            }
            Some(new_cut) => {
                cut = new_cut;
                rescued = true;
            }
        }
    }

    // Phase 2: per-dimension sweeps through the cut, then pairwise checks
    // over the non-flat dimensions.
    let frame = SubproblemFrame::global(cut.clone());
    let f0 = cache.eval(model, &cut)?;
    let mut criticals: Vec<(usize, f64)> = Vec::new();
    let mut flats: BTreeSet<usize> = BTreeSet::new();
    for d in 0..n {
        let out9 =
            check_abrupt_variation_anchored(&frame, domain, d, &cut, model, &cache, config.epsilon1)?;
        if !out9.satisfied {
            criticals.push((d, out9.error_magnitude));
        }
        log.push(LogRecord {
            phase: "global-check",
            element: None,
            criterion: "eq9",
            error_magnitude: out9.error_magnitude,
            decision: format!("dim={d} critical={}", !out9.satisfied),
            cumulative_evaluations: cache.len(),
        });
        let out10 = check_first_level_noninteraction_anchored(
            &frame,
            domain,
            d,
            &cut,
            model,
            &cache,
            config.epsilon1,
        )?;
        if out10.satisfied {
            flats.insert(d);
        }
        log.push(LogRecord {
            phase: "global-check",
            element: None,
            criterion: "eq10",
            error_magnitude: out10.error_magnitude,
            decision: format!("dim={d} flat={}", out10.satisfied),
            cumulative_evaluations: cache.len(),
        });
    }
    sort_by_error_desc(&mut criticals);

    let active: Vec<usize> = (0..n).filter(|d| !flats.contains(d)).collect();
    let mut pair_outcomes: BTreeMap<(usize, usize), CriterionOutcome> = BTreeMap::new();
    for (pos, &i) in active.iter().enumerate() {
        for &j in &active[pos + 1..] {
            let out = check_pairwise_interaction(domain, i, j, &cut, model, &cache, config.epsilon2)?;
            log.push(LogRecord {
                phase: "pairwise",
                element: None,
                criterion: "eq19",
                error_magnitude: out.error_magnitude,
                decision: format!("pair=({i},{j}) interacting={}", !out.satisfied),
                cumulative_evaluations: cache.len(),
            });
            pair_outcomes.insert((i, j), out);
        }
    }
    let graph = build_interaction_graph(&pair_outcomes, &flats, n)?;
    let groups = derive_groups(&graph);
    let decomposition = assemble_decomposition(&groups, f0, &cut)?;

    // Phase 3: global second-order fit on the cached points, only when no
    // dimension is critical. The depth-2 sparse values are already cached by
    // the sweeps and corner checks when every pair was checked; otherwise
    // cross terms of unchecked (flat) pairs carry no data and are pinned to
    // zero, matching the first-level finding that those dimensions do not
    // interact.
    if criticals.is_empty() {
        let basis2 = MultiIndexSet::total_degree(n, 2)?;
        let keep: Vec<bool> = basis2
            .indices()
            .iter()
            .map(|idx| {
                let active_dims: Vec<usize> = idx
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(d, _)| d)
                    .collect();
                active_dims.len() < 2
                    || active_dims.iter().all(|d| !flats.contains(d))
            })
            .collect();
        let kept_terms = keep.iter().filter(|&&k| k).count();
        let all_dims: Vec<usize> = (0..n).collect();
        let mut harvested = cache.harvest_in_box(&all_dims, domain.bounds(), &cut);
        let trivial = groups.len() == 1 && groups[0].len() == n;
        if harvested.len() <= kept_terms && trivial {
            // Globally coupled anyway: evaluate the full depth-2 grid.
            let rule2 = sparse_grid(n, 2)?;
            for node in &rule2.nodes {
                let p = domain.from_reference(node)?;
                cache.eval(model, &p)?;
            }
            harvested = cache.harvest_in_box(&all_dims, domain.bounds(), &cut);
        }
        if harvested.len() > kept_terms {
            let mut reference = Vec::with_capacity(harvested.len());
            let mut values = Vec::with_capacity(harvested.len());
            for (p, v) in &harvested {
                reference.push(domain.to_reference(p)?);
                values.push(*v);
            }
            match fit_least_squares_subset(&basis2, &keep, &reference, &values) {
                Ok(coeffs2) => {
                    let residual2 = max_residual(&basis2, &coeffs2, &reference, &values);
                    log.push(LogRecord {
                        phase: "global-2",
                        element: None,
                        criterion: "eq20",
                        error_magnitude: residual2,
                        decision: if residual2 < config.epsilon1 {
                            "satisfied".into()
                        } else {
                            "refine".into()
                        },
                        cumulative_evaluations: cache.len(),
                    });
                    if residual2 < config.epsilon1 {
                        let surrogate =
                            GpcSurrogate::new(basis2, coeffs2, domain.bounds().to_vec())?;
                        return finish_global(
                            model,
                            domain,
                            config,
                            &cache,
                            surrogate,
                            ElementStatus::ConvergedP2,
                            &cut,
                        );
                    }
                }
                Err(ScamrError::DegenerateDesign { .. }) => {
                    // Unfittable from the cached set; refinement handles it.
                    log.push(LogRecord {
                        phase: "global-2",
                        element: None,
                        criterion: "eq20",
                        error_magnitude: f64::INFINITY,
                        decision: "degenerate-design, refine".into(),
                        cumulative_evaluations: cache.len(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }

    // Phase 4: adaptive mesh refinement per subproblem (components, then
    // corrective sets).
    let _ = rescued;
    let mut subproblems = Vec::with_capacity(decomposition.s.len() + decomposition.t.len());
    for si in &decomposition.s {
        let tree = refine_subproblem(si, model, &cache, config, &cut, domain, log)?;
        subproblems.push(SubproblemSurrogate {
            dims: si.clone(),
            role: SubproblemRole::Component,
            tree,
        });
    }
    for tj in &decomposition.t {
        let tree = refine_subproblem(tj, model, &cache, config, &cut, domain, log)?;
        subproblems.push(SubproblemSurrogate {
            dims: tj.clone(),
            role: SubproblemRole::Corrective,
            tree,
        });
    }

    Ok(ScamrSurrogate {
        config: config.clone(),
        domain: domain.clone(),
        decomposition,
        subproblems,
        total_evaluations: cache.len(),
    })
}

/// Degenerate-cut safeguard. Probes the centers of the all-lower and
/// all-upper orthants (off every axis line and off the bisection lattice);
/// returns the re-anchored cut center when a probe disagrees with the
/// constant fit, None when the constant stands.
fn probe_degenerate_cut(
    model: &dyn Model,
    cache: &EvaluationCache,
    domain: &Element,
    constant: f64,
    epsilon1: f64,
    log: &mut RunLog,
) -> Result<Option<Vec<f64>>> {
    let center = domain.center();
    let quarter = |toward_upper: bool| -> Vec<f64> {
        domain
            .bounds()
            .iter()
            .zip(center.iter())
            .map(|(&(a, b), &c)| if toward_upper { 0.5 * (c + b) } else { 0.5 * (a + c) })
            .collect()
    };
    let p_lo = quarter(false);
    let p_hi = quarter(true);
    let d_lo = (cache.eval(model, &p_lo)? - constant).abs();
    let d_hi = (cache.eval(model, &p_hi)? - constant).abs();
    let disc = d_lo.max(d_hi);
    log.push(LogRecord {
        phase: "degenerate-probe",
        element: None,
        criterion: "orthant",
        error_magnitude: disc,
        decision: if disc < epsilon1 {
            "constant-confirmed".into()
        } else {
            "rescue".into()
        },
        cumulative_evaluations: cache.len(),
    });
    if disc < epsilon1 {
        return Ok(None);
    }
    let probe_point = if d_lo >= d_hi { &p_lo } else { &p_hi };
    let base = cache.eval(model, probe_point)?;
    let mut candidates = Vec::new();
    for d in 0..domain.dim() {
        let mut probe = probe_point.clone();
        probe[d] = center[d];
        let delta = (cache.eval(model, &probe)? - base).abs();
        if delta > RESCUE_LOO_THRESHOLD * disc {
            candidates.push(d);
        }
    }
    if candidates.is_empty() {
        candidates = (0..domain.dim()).collect();
    }
    let mut cut = center.clone();
    for &d in &candidates {
        cut[d] = probe_point[d];
    }
    log.push(LogRecord {
        phase: "degenerate-probe",
        element: None,
        criterion: "rescue",
        error_magnitude: disc,
        decision: format!("re-anchored dims {candidates:?}"),
        cumulative_evaluations: cache.len(),
    });
    Ok(Some(cut))
}

/// Wrap a globally accepted fit as a single-subproblem surrogate.
fn finish_global(
    model: &dyn Model,
    domain: &Element,
    config: &ScamrConfig,
    cache: &EvaluationCache,
    surrogate: GpcSurrogate,
    status: ElementStatus,
    cut: &[f64],
) -> Result<ScamrSurrogate> {
    let n = domain.dim();
    let f0 = cache.eval(model, cut)?;
    let all_dims: Vec<usize> = (0..n).collect();
    let decomposition = assemble_decomposition(&[all_dims.clone()], f0, cut)?;
    let mut tree = ElementTree::new(domain.clone());
    tree.nodes[0].status = status;
    tree.nodes[0].surrogate = Some(surrogate);
    Ok(ScamrSurrogate {
        config: config.clone(),
        domain: domain.clone(),
        decomposition,
        subproblems: vec![SubproblemSurrogate {
            dims: all_dims,
            role: SubproblemRole::Component,
            tree,
        }],
        total_evaluations: cache.len(),
    })
}

fn max_residual(
    basis: &MultiIndexSet,
    coeffs: &[f64],
    reference_points: &[Vec<f64>],
    values: &[f64],
) -> f64 {
    reference_points
        .iter()
        .zip(values.iter())
        .map(|(p, &u)| {
            let phi = basis.basis_eval(p).expect("fit point in range");
            let fit: f64 = phi.iter().zip(coeffs.iter()).map(|(a, b)| a * b).sum();
            (fit - u).abs()
        })
        .fold(0.0, f64::max)
}

/// Breadth-first adaptive refinement of one subproblem.
pub fn refine_subproblem(
    dims: &[usize],
    model: &dyn Model,
    cache: &EvaluationCache,
    config: &ScamrConfig,
    cut: &[f64],
    domain: &Element,
    log: &mut RunLog,
) -> Result<ElementTree> {
    let frame = SubproblemFrame::new(dims.to_vec(), cut.to_vec());
    let bounds: Vec<(f64, f64)> = frame.dims().iter().map(|&d| domain.bounds()[d]).collect();
    let root = Element::root(bounds)?;
    let mut tree = ElementTree::new(root);
    let mut next_id: u64 = 1;
    let mut open: Vec<usize> = vec![0];

    for iter in 1..=config.max_iterations {
        let mut next_open = Vec::new();
        for idx in open.drain(..) {
            let element = tree.nodes[idx].element.clone();
            let ranking =
                rank_critical_dimensions(&frame, &element, model, cache, config.epsilon1)?;
            if !ranking.is_empty() {
                let split = ranking.split_dims();
                log.push(LogRecord {
                    phase: "refine",
                    element: Some(element.id),
                    criterion: "eq9",
                    error_magnitude: ranking.entries[0].1,
                    decision: format!("dims={:?} split={split:?}", frame.dims()),
                    cumulative_evaluations: cache.len(),
                });
                next_open.extend(tree.subdivide_node(idx, &split, &mut next_id)?);
                continue;
            }
            let (outcome, surrogate) =
                check_gpc_residual(&frame, &element, 2, model, cache, config.epsilon1)?;
            if outcome.satisfied {
                log.push(LogRecord {
                    phase: "refine",
                    element: Some(element.id),
                    criterion: "eq20",
                    error_magnitude: outcome.error_magnitude,
                    decision: "converged-p2".into(),
                    cumulative_evaluations: cache.len(),
                });
                tree.nodes[idx].status = ElementStatus::ConvergedP2;
                tree.nodes[idx].surrogate = Some(surrogate);
            } else {
                // No critical dimension, but the element fit is not good
                // enough: split along the largest sub-tolerance sweep errors.
                let errors = abrupt_errors_anchored(&frame, &element, &element.center(), model, cache)?;
                let mut ranked: Vec<(usize, f64)> = errors.into_iter().enumerate().collect();
                sort_by_error_desc(&mut ranked);
                let split: Vec<usize> = ranked.iter().take(2).map(|&(d, _)| d).collect();
                log.push(LogRecord {
                    phase: "refine",
                    element: Some(element.id),
                    criterion: "eq20",
                    error_magnitude: outcome.error_magnitude,
                    decision: format!("dims={:?} split={split:?}", frame.dims()),
                    cumulative_evaluations: cache.len(),
                });
                next_open.extend(tree.subdivide_node(idx, &split, &mut next_id)?);
            }
        }
        open = next_open;
        if std::env::var("SCAMR_TRACE").is_ok() {
            eprintln!(
                "TRACE subproblem {:?} iter {} open {} nodes {}",
                frame.dims(), iter, open.len(), tree.nodes.len()
            );
        }
        if open.is_empty() {
            break;
        }
        let root = tree.nodes[0].element.clone();
        let open_volume: f64 = open
            .iter()
            .map(|&i| tree.nodes[i].element.hypervolume_fraction(&root))
            .sum();
        if iter >= config.max_iterations || open_volume < config.min_volume_fraction {
            for idx in open.drain(..) {
                let element = tree.nodes[idx].element.clone();
                let surrogate = first_order_fallback(&frame, &element, model, cache)?;
                log.push(LogRecord {
                    phase: "refine",
                    element: Some(element.id),
                    criterion: "stop",
                    error_magnitude: open_volume,
                    decision: "converged-p1-fallback".into(),
                    cumulative_evaluations: cache.len(),
                });
                tree.nodes[idx].status = ElementStatus::FallbackP1;
                tree.nodes[idx].surrogate = Some(surrogate);
            }
            break;
        }
    }
    Ok(tree)
}

/// First-order closure of a non-converged element: fit on every cached point
/// in the element; if the design is too thin or degenerate, evaluate the
/// element's depth-1 sparse grid first (2d+1 > d+1 points, full rank).
fn first_order_fallback(
    frame: &SubproblemFrame,
    element: &Element,
    model: &dyn Model,
    cache: &EvaluationCache,
) -> Result<GpcSurrogate> {
    let d = element.dim();
    let basis = MultiIndexSet::total_degree(d, 1)?;
    let fit = |cache: &EvaluationCache| -> Result<GpcSurrogate> {
        let harvested = cache.harvest_in_box(frame.dims(), element.bounds(), frame.template());
        if harvested.len() <= basis.len() {
            return Err(ScamrError::InsufficientPoints {
                points: harvested.len(),
                terms: basis.len(),
            });
        }
        let mut reference = Vec::with_capacity(harvested.len());
        let mut values = Vec::with_capacity(harvested.len());
        for (p, v) in &harvested {
            reference.push(element.to_reference(p)?);
            values.push(*v);
        }
        let coeffs = fit_least_squares(&basis, &reference, &values)?;
        GpcSurrogate::new(basis.clone(), coeffs, element.bounds().to_vec())
    };
    match fit(cache) {
        Ok(s) => Ok(s),
        Err(ScamrError::InsufficientPoints { .. }) | Err(ScamrError::DegenerateDesign { .. }) => {
            let rule = sparse_grid(d, 1)?;
            for node in &rule.nodes {
                let sub = element.from_reference(node)?;
                frame.eval(model, cache, &sub)?;
            }
            fit(cache)
        }
        Err(e) => Err(e.with_context(format!("first-order fallback on element {}", element.id))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::FnModel;
    use approx::assert_abs_diff_eq;

    fn unit_domain(n: usize) -> Element {
        Element::root(vec![(0.0, 1.0); n]).unwrap()
    }

    #[test]
    fn linear_model_accepts_in_phase_one() {
        for n in [2usize, 3, 10] {
            let model = FnModel::new(n, move |x: &[f64]| {
                1.0 + x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v).sum::<f64>()
            });
            let domain = unit_domain(n);
            let s = run_scamr(&model, &domain, &ScamrConfig::default()).unwrap();
            assert_eq!(s.evaluation_count(), 2 * n + 1, "n = {n}");
            assert_eq!(s.subproblems.len(), 1);
            assert_eq!(s.subproblems[0].tree.nodes[0].status, ElementStatus::ConvergedP1);
        }
    }

    #[test]
    fn f1_accepts_in_phase_three_with_13_evaluations() {
        let model = FnModel::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let domain = unit_domain(2);
        let config = ScamrConfig {
            epsilon1: 1e-6,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        assert_eq!(s.evaluation_count(), 13);
        assert_eq!(s.subproblems[0].tree.nodes[0].status, ElementStatus::ConvergedP2);
        assert_abs_diff_eq!(s.extract_value(&[0.5, 0.5]).unwrap(), 0.5, epsilon = 1e-10);
        // Exact mean of x₁²+x₂² over the unit square is 2/3.
        assert_abs_diff_eq!(s.estimate_mean(), 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn degree_two_n5_needs_exactly_61_evaluations() {
        let model = FnModel::new(5, |x: &[f64]| {
            let mut acc = 0.3;
            for (i, &v) in x.iter().enumerate() {
                acc += (i as f64 + 0.5) * v + 0.2 * v * v;
            }
            acc + 0.7 * x[0] * x[1] + 0.4 * x[2] * x[3] + 0.1 * x[3] * x[4]
        });
        let domain = unit_domain(5);
        let config = ScamrConfig {
            epsilon1: 1e-8,
            epsilon2: 1e-8,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        assert_eq!(s.evaluation_count(), 2 * 25 + 10 + 1);
        assert_eq!(s.subproblems[0].tree.nodes[0].status, ElementStatus::ConvergedP2);
    }

    #[test]
    fn quadratic_1d_mean_is_one_third() {
        let model = FnModel::new(1, |x: &[f64]| x[0] * x[0]);
        let domain = Element::root(vec![(-1.0, 1.0)]).unwrap();
        let config = ScamrConfig {
            epsilon1: 1e-8,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        assert_abs_diff_eq!(s.estimate_mean(), 1.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.extract_value(&[0.3]).unwrap(), 0.09, epsilon = 1e-10);
    }

    #[test]
    fn constant_model_is_exact() {
        let model = FnModel::new(3, |_: &[f64]| 4.25);
        let domain = unit_domain(3);
        let s = run_scamr(&model, &domain, &ScamrConfig::default()).unwrap();
        assert_abs_diff_eq!(s.estimate_mean(), 4.25, epsilon = 1e-12);
        assert_abs_diff_eq!(s.extract_value(&[0.1, 0.9, 0.4]).unwrap(), 4.25, epsilon = 1e-12);
    }

    #[test]
    fn additive_terms_decompose_into_singletons() {
        let model = FnModel::new(3, |x: &[f64]| {
            (4.0 * x[0]).sin() + x[1] * x[1] * x[1] + 2.0 * x[2]
        });
        let domain = unit_domain(3);
        let config = ScamrConfig {
            epsilon1: 1e-5,
            epsilon2: 1e-8,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        assert_eq!(s.decomposition.s, vec![vec![0], vec![1], vec![2]]);
        assert!(s.decomposition.t.is_empty());
        // Spot-check accuracy away from the cut.
        let q = [0.21f64, 0.83, 0.44];
        let truth = (4.0 * q[0]).sin() + q[1] * q[1] * q[1] + 2.0 * q[2];
        assert_abs_diff_eq!(s.extract_value(&q).unwrap(), truth, epsilon = 1e-3);
    }

    #[test]
    fn paper_structure_detected_for_mixed_function() {
        // f = x₁x₂x₃ + x₁x₄ + sin(x₅) + x₆ + x₇² + e^{x₈}: the interaction
        // graph's cliques are {1,2,3} and {1,4}, everything else singles.
        let model = FnModel::new(8, |x: &[f64]| {
            x[0] * x[1] * x[2] + x[0] * x[3] + x[4].sin() + x[5] + x[6] * x[6] + x[7].exp()
        });
        let domain = unit_domain(8);
        let config = ScamrConfig {
            epsilon1: 1e-6,
            epsilon2: 1e-6,
            max_iterations: 8,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        let expected_s: Vec<Vec<usize>> = vec![
            vec![0, 1, 2],
            vec![0, 3],
            vec![4],
            vec![5],
            vec![6],
            vec![7],
        ];
        assert_eq!(s.decomposition.s, expected_s);
        assert_eq!(s.decomposition.t, vec![vec![0]]);
        assert_eq!(s.decomposition.u, vec![1]);
        assert_eq!(s.decomposition.v, 4);
    }

    #[test]
    fn f10_run_closes_every_leaf() {
        let model = FnModel::new(2, |x: &[f64]| {
            if x[0] >= 0.5 || x[1] >= 0.5 {
                0.0
            } else {
                (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()
            }
        });
        let domain = unit_domain(2);
        let config = ScamrConfig {
            epsilon1: 1e-3,
            epsilon2: 1e-3,
            max_iterations: 6,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        for sub in &s.subproblems {
            for i in sub.tree.leaf_indices() {
                let node = &sub.tree.nodes[i];
                assert!(
                    matches!(node.status, ElementStatus::ConvergedP2 | ElementStatus::FallbackP1),
                    "leaf {} has status {:?}",
                    node.element.id,
                    node.status
                );
                assert!(node.surrogate.is_some());
            }
        }
    }

    #[test]
    fn leaf_fractions_tile_every_tree() {
        let model = FnModel::new(2, |x: &[f64]| {
            1.0 / ((0.3 - x[0] * x[0] - x[1] * x[1]).abs() + 0.1)
        });
        let domain = unit_domain(2);
        let config = ScamrConfig {
            epsilon1: 0.05,
            epsilon2: 1e-4,
            max_iterations: 7,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        for sub in &s.subproblems {
            let root = &sub.tree.nodes[0].element;
            let total: f64 = sub
                .tree
                .leaf_indices()
                .into_iter()
                .map(|i| sub.tree.nodes[i].element.hypervolume_fraction(root))
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn no_model_point_is_evaluated_twice() {
        use std::sync::Mutex;
        let seen = Mutex::new(std::collections::BTreeSet::new());
        struct Recorder<'a> {
            seen: &'a Mutex<std::collections::BTreeSet<Vec<i64>>>,
        }
        impl Model for Recorder<'_> {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, x: &[f64]) -> crate::error::Result<f64> {
                let key = crate::cache::quantize(x);
                let fresh = self.seen.lock().unwrap().insert(key);
                assert!(fresh, "model called twice at {x:?}");
                Ok(1.0 / ((0.3 - x[0] * x[0] - x[1] * x[1]).abs() + 0.1))
            }
        }
        let model = Recorder { seen: &seen };
        let domain = unit_domain(2);
        let config = ScamrConfig {
            epsilon1: 0.05,
            epsilon2: 1e-4,
            max_iterations: 6,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        assert_eq!(s.evaluation_count(), seen.lock().unwrap().len());
    }

    #[test]
    fn vmin_stop_produces_fallback_leaves() {
        // A rough model everywhere; a tight iteration budget forces the
        // stopping rule and first-order closures.
        let model = FnModel::new(2, |x: &[f64]| {
            (37.7 * x[0]).sin() + (53.1 * x[1]).sin()
        });
        let domain = unit_domain(2);
        let config = ScamrConfig {
            epsilon1: 1e-4,
            epsilon2: 1e-4,
            max_iterations: 2,
            min_volume_fraction: 0.5,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        let mut fallbacks = 0;
        for sub in &s.subproblems {
            for i in sub.tree.leaf_indices() {
                if s.subproblems[0].tree.nodes.len() > 1 {
                    if matches!(sub.tree.nodes[i].status, ElementStatus::FallbackP1) {
                        fallbacks += 1;
                    }
                }
                assert!(sub.tree.nodes[i].surrogate.is_some());
            }
        }
        assert!(fallbacks > 0, "expected first-order fallback leaves");
    }

    #[test]
    fn determinism_bit_identical_serialization() {
        let make = || {
            let model = FnModel::new(2, |x: &[f64]| {
                1.0 / ((0.3 - x[0] * x[0] - x[1] * x[1]).abs() + 0.1)
            });
            let domain = unit_domain(2);
            let config = ScamrConfig {
                epsilon1: 0.05,
                epsilon2: 1e-4,
                max_iterations: 5,
                ..Default::default()
            };
            run_scamr(&model, &domain, &config).unwrap().to_json()
        };
        assert_eq!(make(), make());
    }

    #[test]
    fn queries_never_touch_the_model() {
        let model = FnModel::new(2, |x: &[f64]| x[0] + x[1]);
        let domain = unit_domain(2);
        let s = run_scamr(&model, &domain, &ScamrConfig::default()).unwrap();
        let before = s.evaluation_count();
        let _ = s.extract_value(&[0.3, 0.3]).unwrap();
        let _ = s.estimate_mean();
        assert_eq!(s.evaluation_count(), before);
    }

    #[test]
    fn rejects_invalid_config() {
        let model = FnModel::new(1, |x: &[f64]| x[0]);
        let domain = unit_domain(1);
        let bad = ScamrConfig {
            epsilon1: -1.0,
            ..Default::default()
        };
        assert!(run_scamr(&model, &domain, &bad).is_err());
    }

    #[test]
    fn rescue_recovers_axis_invisible_product() {
        // f = x₁x₂ on [-1,1]²: every depth-1 node value is exactly zero, so
        // the plain flow would accept the zero surrogate. The corner probe
        // must re-anchor the cut and find the interaction.
        let model = FnModel::new(2, |x: &[f64]| x[0] * x[1]);
        let domain = Element::root(vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let config = ScamrConfig {
            epsilon1: 1e-6,
            epsilon2: 1e-6,
            max_iterations: 6,
            ..Default::default()
        };
        let s = run_scamr(&model, &domain, &config).unwrap();
        assert_eq!(s.decomposition.s, vec![vec![0, 1]]);
        assert_abs_diff_eq!(s.extract_value(&[0.5, -0.7]).unwrap(), -0.35, epsilon = 1e-6);
        assert_abs_diff_eq!(s.estimate_mean(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn extract_value_rejects_outside_domain() {
        let model = FnModel::new(2, |x: &[f64]| x[0] + x[1]);
        let domain = unit_domain(2);
        let s = run_scamr(&model, &domain, &ScamrConfig::default()).unwrap();
        assert!(s.extract_value(&[2.0, 0.5]).is_err());
    }
}

