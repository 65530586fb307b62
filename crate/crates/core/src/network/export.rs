use std::fmt::Write;

use super::glued::EdgeKind;
use super::GluedNetwork;

/// Edge list with node time coordinates, one row per metric-graph edge.
pub fn edge_list_csv(g: &GluedNetwork) -> String {
    let mut s = String::from("source,target,weight,source_time,target_time,kind\n");
    for e in &g.edges {
        let kind = match e.kind {
            EdgeKind::Segment => "segment",
            EdgeKind::Branch => "branch",
            EdgeKind::Coalescence => "coalescence",
            EdgeKind::Glue => "glue",
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            e.from, e.to, e.weight, g.node_times[e.from], g.node_times[e.to], kind
        );
    }
    s
}

enum Task {
    Enter { node: usize, length: Option<f64>, hybrid_leaf: bool },
    Text(String),
}

/// Extended Newick text. Edges point forward in time; a coalescence node
/// has two parents and is written in full under its lineage parent, with
/// a `#H<k>` leaf under the merging lineage.
pub fn to_newick(g: &GluedNetwork) -> String {
    let n = g.node_count();
    let mut out_edges: Vec<Vec<(usize, f64, bool)>> = vec![Vec::new(); n];
    let mut hybrid = vec![None; n];
    let mut n_hybrid = 0;
    for e in &g.edges {
        let is_hybrid_edge = e.kind == EdgeKind::Coalescence;
        if is_hybrid_edge && hybrid[e.to].is_none() {
            n_hybrid += 1;
            hybrid[e.to] = Some(n_hybrid);
        }
        out_edges[e.from].push((e.to, e.weight, is_hybrid_edge));
    }
    let label = |v: usize| match hybrid[v] {
        Some(k) => format!("#H{k}"),
        None => format!("n{v}"),
    };
    let mut s = String::new();
    let mut stack = vec![Task::Text(";".into()), Task::Enter {
        node: g.root_node(),
        length: None,
        hybrid_leaf: false,
    }];
    while let Some(task) = stack.pop() {
        match task {
            Task::Text(t) => s.push_str(&t),
            Task::Enter { node, length, hybrid_leaf } => {
                let suffix = match length {
                    Some(l) => format!("{}:{}", label(node), l),
                    None => label(node),
                };
                let kids = &out_edges[node];
                if hybrid_leaf || kids.is_empty() {
                    s.push_str(&suffix);
                    continue;
                }
                s.push('(');
                stack.push(Task::Text(format!("){suffix}")));
                for (i, &(c, w, h)) in kids.iter().enumerate().rev() {
                    stack.push(Task::Enter {
                        node: c,
                        length: Some(w),
                        hybrid_leaf: h,
                    });
                    if i > 0 {
                        stack.push(Task::Text(",".into()));
                    }
                }
            }
        }
    }
    s
}
