//! Deterministic JSON writers for the surrogate bundle. Doubles are printed
//! with 17 significant digits; element trees serialize as arrays of
//! {id, parent, bounds, status, surrogate?} with ids in creation order.

use crate::driver::{ElementTree, ScamrSurrogate};
use crate::jsonfmt::{escape, f64_to_json};

fn bounds_json(bounds: &[(f64, f64)]) -> String {
    let mut s = String::from("[");
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push('[');
        s.push_str(&f64_to_json(lo));
        s.push(',');
        s.push_str(&f64_to_json(hi));
        s.push(']');
    }
    s.push(']');
    s
}

fn usize_array(values: &[usize]) -> String {
    let items: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("[{}]", items.join(","))
}

fn f64_array(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|&v| f64_to_json(v)).collect();
    format!("[{}]", items.join(","))
}

pub fn element_tree_json(tree: &ElementTree) -> String {
    let mut s = String::from("[");
    for (i, node) in tree.nodes.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str("{\"id\":");
        s.push_str(&node.element.id.to_string());
        s.push_str(",\"parent\":");
        match node.element.parent {
            Some(p) => s.push_str(&p.to_string()),
            None => s.push_str("null"),
        }
        s.push_str(",\"bounds\":");
        s.push_str(&bounds_json(node.element.bounds()));
        s.push_str(",\"status\":\"");
        s.push_str(node.status.as_str());
        s.push('"');
        if let Some(surrogate) = &node.surrogate {
            s.push_str(",\"surrogate\":");
            s.push_str(&surrogate.to_json());
        }
        s.push('}');
    }
    s.push(']');
    s
}

pub fn decomposition_json(d: &crate::decomposition::Decomposition) -> String {
    let sets = |groups: &[Vec<usize>]| {
        let items: Vec<String> = groups.iter().map(|g| usize_array(g)).collect();
        format!("[{}]", items.join(","))
    };
    let u_items: Vec<String> = d.u.iter().map(|v| v.to_string()).collect();
    format!(
        "{{\"S\":{},\"T\":{},\"U\":[{}],\"V\":{},\"cut_center\":{},\"f0\":{}}}",
        sets(&d.s),
        sets(&d.t),
        u_items.join(","),
        d.v,
        f64_array(&d.cut_center),
        f64_to_json(d.f0)
    )
}

/// One JSON document embedding the decomposition, all element trees, the
/// configuration, and the evaluation count.
pub fn surrogate_bundle_json(s: &ScamrSurrogate) -> String {
    let mut out = String::from("{\"config\":{");
    out.push_str(&format!(
        "\"epsilon1\":{},\"epsilon2\":{},\"max_iterations\":{},\"min_volume_fraction\":{},\"rng_seed\":{}",
        f64_to_json(s.config.epsilon1),
        f64_to_json(s.config.epsilon2),
        s.config.max_iterations,
        f64_to_json(s.config.min_volume_fraction),
        s.config.rng_seed
    ));
    out.push_str("},\"domain\":");
    out.push_str(&bounds_json(s.domain.bounds()));
    out.push_str(",\"decomposition\":");
    out.push_str(&decomposition_json(&s.decomposition));
    out.push_str(",\"subproblems\":[");
    for (i, sub) in s.subproblems.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("{\"dims\":");
        out.push_str(&usize_array(&sub.dims));
        out.push_str(",\"role\":\"");
        out.push_str(&escape(sub.role.as_str()));
        out.push_str("\",\"tree\":");
        out.push_str(&element_tree_json(&sub.tree));
        out.push('}');
    }
    out.push_str("],\"total_evaluations\":");
    out.push_str(&s.total_evaluations.to_string());
    out.push('}');
    out
}

#[cfg(test)]
mod tests {
    use crate::cache::FnModel;
    use crate::driver::{run_scamr, ScamrConfig};
    use crate::grids::Element;

    #[test]
    fn bundle_parses_as_json() {
        let model = FnModel::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let domain = Element::root(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let s = run_scamr(&model, &domain, &ScamrConfig::default()).unwrap();
        let json = s.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["total_evaluations"], 13);
        assert!(parsed["subproblems"].as_array().unwrap().len() >= 1);
        assert_eq!(parsed["subproblems"][0]["tree"][0]["status"], "converged-p2");
    }
}
