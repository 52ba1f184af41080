//! Interaction graph over input dimensions, derivation of higher-order
//! interaction groups from pairwise results, and the sub-dimensional
//! representation with corrective sets: f ≈ Σ h_i − Σ U_j p_j − V f₀.

use crate::adaptivity::CriterionOutcome;
use crate::error::{Result, ScamrError};
use std::collections::{BTreeMap, BTreeSet};

/// Undirected graph over dimensions; an edge means the pair FAILED the
/// non-interaction criterion (i.e. the dimensions interact). Flat dimensions
/// (first-level check satisfied) never carry edges.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    flat_dims: BTreeSet<usize>,
}

impl InteractionGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn flat_dims(&self) -> &BTreeSet<usize> {
        &self.flat_dims
    }
}

/// Build the graph from pairwise outcomes over the non-flat dimensions.
/// Every unordered pair of non-flat dimensions must have an outcome.
pub fn build_interaction_graph(
    pair_outcomes: &BTreeMap<(usize, usize), CriterionOutcome>,
    flat_dims: &BTreeSet<usize>,
    n: usize,
) -> Result<InteractionGraph> {
    let active: Vec<usize> = (0..n).filter(|d| !flat_dims.contains(d)).collect();
    let mut edges = BTreeSet::new();
    for (pos, &i) in active.iter().enumerate() {
        for &j in &active[pos + 1..] {
            let outcome = pair_outcomes
                .get(&(i, j))
                .or_else(|| pair_outcomes.get(&(j, i)))
                .ok_or(ScamrError::MissingPairOutcome(i, j))?;
            if !outcome.satisfied {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    Ok(InteractionGraph {
        n,
        edges,
        flat_dims: flat_dims.clone(),
    })
}

/// Budget beyond which clique enumeration falls back to connected components.
const CLIQUE_LIMIT: usize = 64;
const CLIQUE_VERTEX_LIMIT: usize = 32;

/// Derive the interaction groups: maximal cliques of the edge graph when the
/// enumeration stays within budget, connected components otherwise. Isolated
/// non-flat dimensions and flat dimensions become singleton groups. Groups
/// are returned sorted lexicographically on their sorted contents.
pub fn derive_groups(graph: &InteractionGraph) -> Vec<Vec<usize>> {
    let mut vertices: BTreeSet<usize> = BTreeSet::new();
    for &(i, j) in &graph.edges {
        vertices.insert(i);
        vertices.insert(j);
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    if !vertices.is_empty() {
        let cliques = if vertices.len() <= CLIQUE_VERTEX_LIMIT {
            maximal_cliques(&vertices, &graph.edges, CLIQUE_LIMIT)
        } else {
            None
        };
        match cliques {
            Some(cl) => groups.extend(cl),
            None => groups.extend(connected_components(&vertices, &graph.edges)),
        }
    }

    for d in 0..graph.n {
        if !vertices.contains(&d) {
            groups.push(vec![d]);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups.dedup();
    groups
}

/// Bron–Kerbosch with pivoting; gives up (None) past `limit` cliques.
fn maximal_cliques(
    vertices: &BTreeSet<usize>,
    edges: &BTreeSet<(usize, usize)>,
    limit: usize,
) -> Option<Vec<Vec<usize>>> {
    let adj = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
    let mut out: Vec<Vec<usize>> = Vec::new();

    fn expand(
        r: &mut Vec<usize>,
        p: Vec<usize>,
        x: Vec<usize>,
        adj: &dyn Fn(usize, usize) -> bool,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> bool {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return out.len() <= limit;
        }
        let pivot = p.iter().chain(x.iter()).copied().next().unwrap();
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj(pivot, v)).collect();
        let mut p = p;
        let mut x = x;
        for v in candidates {
            let np: Vec<usize> = p.iter().copied().filter(|&u| adj(u, v)).collect();
            let nx: Vec<usize> = x.iter().copied().filter(|&u| adj(u, v)).collect();
            r.push(v);
            let ok = expand(r, np, nx, adj, out, limit);
            r.pop();
            if !ok {
                return false;
            }
            p.retain(|&u| u != v);
            x.push(v);
        }
        true
    }

    let p: Vec<usize> = vertices.iter().copied().collect();
    let mut r = Vec::new();
    if expand(&mut r, p, Vec::new(), &adj, &mut out, limit) {
        Some(out)
    } else {
        None
    }
}

fn connected_components(
    vertices: &BTreeSet<usize>,
    edges: &BTreeSet<(usize, usize)>,
) -> Vec<Vec<usize>> {
    let mut remaining: BTreeSet<usize> = vertices.clone();
    let mut components = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut stack = vec![start];
        let mut comp = BTreeSet::new();
        remaining.remove(&start);
        comp.insert(start);
        while let Some(v) = stack.pop() {
            let neighbors: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&u| edges.contains(&(u.min(v), u.max(v))))
                .collect();
            for u in neighbors {
                remaining.remove(&u);
                comp.insert(u);
                stack.push(u);
            }
        }
        components.push(comp.into_iter().collect());
    }
    components
}

/// The sub-dimensional representation: subproblem supports S, corrective
/// sets T with integer multiplicities U, and the constant factor V applied
/// to the cut-center value f₀.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub s: Vec<Vec<usize>>,
    pub t: Vec<Vec<usize>>,
    pub u: Vec<i64>,
    pub v: i64,
    pub f0: f64,
    pub cut_center: Vec<f64>,
}

impl Decomposition {
    pub fn n_s(&self) -> usize {
        self.s.len()
    }

    pub fn n_t(&self) -> usize {
        self.t.len()
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

/// Assemble the decomposition from the interaction groups.
///
/// T collects the distinct non-empty intersections of the supports (taken to
/// closure, so intersections of intersections are included). Each corrective
/// multiplicity comes from the top-down combination rule
/// c_W = 1 − Σ_{W' ⊋ W} c_{W'} over S ∪ T with U_j = −c_{T_j}; this equals
/// the subset-frequency count on simple overlap patterns and stays exact on
/// nested ones, and V = N_S − Σ U_j − 1 holds by construction.
pub fn assemble_decomposition(
    groups: &[Vec<usize>],
    f0: f64,
    cut_center: &[f64],
) -> Result<Decomposition> {
    let n = cut_center.len();
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for g in groups {
        if g.is_empty() {
            return Err(ScamrError::InvalidConfig("empty group in cover".into()));
        }
        for &d in g {
            if d >= n {
                return Err(ScamrError::InvalidConfig(format!(
                    "group dimension {d} out of range for n = {n}"
                )));
            }
            covered.insert(d);
        }
    }
    if covered.len() != n {
        return Err(ScamrError::InvalidConfig(format!(
            "groups cover {} of {} dimensions",
            covered.len(),
            n
        )));
    }

    let mut s: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.sort_unstable();
            g
        })
        .collect();
    s.sort();
    s.dedup();
    for i in 0..s.len() {
        for l in 0..s.len() {
            if i != l && is_subset(&s[i], &s[l]) {
                return Err(ScamrError::InvalidConfig(format!(
                    "support {:?} is nested inside {:?}; groups must be maximal",
                    s[i], s[l]
                )));
            }
        }
    }

    // Intersection closure of the supports.
    let s_set: BTreeSet<Vec<usize>> = s.iter().cloned().collect();
    let mut family: BTreeSet<Vec<usize>> = s_set.clone();
    loop {
        let members: Vec<Vec<usize>> = family.iter().cloned().collect();
        let mut grew = false;
        for i in 0..members.len() {
            for l in (i + 1)..members.len() {
                let inter: Vec<usize> = members[i]
                    .iter()
                    .copied()
                    .filter(|d| members[l].contains(d))
                    .collect();
                if !inter.is_empty() && family.insert(inter) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let t: Vec<Vec<usize>> = family
        .iter()
        .filter(|w| !s_set.contains(*w))
        .cloned()
        .collect();

    // Top-down combination coefficients over S ∪ T (largest sets first).
    let mut all: Vec<Vec<usize>> = family.iter().cloned().collect();
    all.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    let mut coeff: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
    for w in &all {
        let covering: i64 = coeff
            .iter()
            .filter(|(w2, _)| w2.len() > w.len() && is_subset(w, w2))
            .map(|(_, &c)| c)
            .sum();
        coeff.insert(w.clone(), 1 - covering);
    }
    let u: Vec<i64> = t.iter().map(|tj| -coeff[tj]).collect();

    let v = s.len() as i64 - u.iter().sum::<i64>() - 1;
    Ok(Decomposition {
        s,
        t,
        u,
        v,
        f0,
        cut_center: cut_center.to_vec(),
    })
}

/// Evaluator for one subproblem: given the support dims and the query
/// restricted to them, return the component value h(query_sub, c-elsewhere).
pub trait SubproblemEvaluator {
    fn eval(&self, dims: &[usize], query_sub: &[f64]) -> Result<f64>;
}

/// Exact sub-model evaluator: restrictions of a full function along cuts
/// through the center. Used as the recombination oracle before surrogates
/// exist.
pub struct ExactCutEvaluator<'a> {
    pub f: &'a dyn Fn(&[f64]) -> f64,
    pub cut_center: &'a [f64],
}

impl SubproblemEvaluator for ExactCutEvaluator<'_> {
    fn eval(&self, dims: &[usize], query_sub: &[f64]) -> Result<f64> {
        let mut full = self.cut_center.to_vec();
        for (&d, &x) in dims.iter().zip(query_sub.iter()) {
            full[d] = x;
        }
        Ok((self.f)(full.as_slice()))
    }
}

/// Recombined value at `query`: Σ h_i(query|S_i) − Σ U_j p_j(query|T_j) − V f₀.
pub fn combined_eval(
    d: &Decomposition,
    evaluator: &dyn SubproblemEvaluator,
    query: &[f64],
) -> Result<f64> {
    if query.len() != d.cut_center.len() {
        return Err(ScamrError::DimensionMismatch {
            expected: d.cut_center.len(),
            got: query.len(),
        });
    }
    let restrict = |dims: &[usize]| -> Vec<f64> { dims.iter().map(|&k| query[k]).collect() };
    let mut acc = 0.0;
    for si in &d.s {
        acc += evaluator.eval(si, &restrict(si))?;
    }
    for (tj, &uj) in d.t.iter().zip(d.u.iter()) {
        acc -= uj as f64 * evaluator.eval(tj, &restrict(tj))?;
    }
    acc -= d.v as f64 * d.f0;
    Ok(acc)
}
