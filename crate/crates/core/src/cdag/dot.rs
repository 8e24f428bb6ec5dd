use std::fmt::Write;

use super::{CDag, NodeRef};

/// Rendering options for [`to_dot`]. `Default` gives a left-to-right layout
/// with the source/sink/internal colour scheme and no edge labels.
#[derive(Clone, Debug)]
pub struct DotOptions {
    pub graph_name: String,
    pub rankdir: String,
    /// Label edges with their argument position.
    pub arg_labels: bool,
    pub source_color: String,
    pub sink_color: String,
    pub internal_color: String,
}

impl Default for DotOptions {
    fn default() -> Self {
        Self {
            graph_name: "cdag".into(),
            rankdir: "LR".into(),
            arg_labels: false,
            source_color: "#f7d6f2".into(),
            sink_color: "#e8dcc4".into(),
            internal_color: "#dbe4f7".into(),
        }
    }
}

fn id(n: NodeRef) -> String {
    format!("n_{}_{}", n.level, n.index)
}

pub fn to_dot(dag: &CDag, options: &DotOptions) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", options.graph_name);
    let _ = writeln!(s, "  rankdir={};", options.rankdir);
    let _ = writeln!(
        s,
        "  node [shape=box, style=filled, fontname=\"monospace\"];"
    );
    for &n in dag.nodes() {
        let (class, color) = if dag.is_sink(n) {
            ("sink", &options.sink_color)
        } else if n.is_source() {
            ("source", &options.source_color)
        } else {
            ("internal", &options.internal_color)
        };
        let _ = writeln!(
            s,
            "  {} [label=\"{}\", class=\"{}\", fillcolor=\"{}\"];",
            id(n),
            n,
            class,
            color
        );
    }
    for e in dag.edges() {
        if options.arg_labels {
            let _ = writeln!(
                s,
                "  {} -> {} [label=\"{}\"];",
                id(e.from),
                id(e.to),
                e.arg_pos
            );
        } else {
            let _ = writeln!(s, "  {} -> {};", id(e.from), id(e.to));
        }
    }
    s.push_str("}\n");
    s
}
