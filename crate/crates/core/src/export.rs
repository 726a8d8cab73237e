//! Graph serialization: GraphML and DOT renderings of activity graphs (and
//! community subgraphs), plus the community index CSV.
//!
//! Node attributes: `kind` (address|tx), `label`, `entity`, `category`,
//! `seed_id`. Edge attribute: `amount_satoshi`. DOT edges get a pen width
//! proportional to the log of the amount so large flows stand out in
//! Graphviz/Gephi renderings.

use crate::community::Community;
use crate::graph::{ActivityGraph, NodeKind};
use std::fmt::Write as _;

fn xml_escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            other => out.push(other),
        }
    }
    out
}

fn dot_escape(raw: &str) -> String {
    raw.replace('\\', "\\\\").replace('"', "\\\"")
}

fn kind_name(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Address => "address",
        NodeKind::Transaction => "tx",
    }
}

/// Renders the graph as a GraphML document.
pub fn graphml(graph: &ActivityGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for (id, name, ty) in [
        ("kind", "kind", "string"),
        ("label", "label", "string"),
        ("entity", "entity", "string"),
        ("category", "category", "string"),
        ("seed_id", "seed_id", "long"),
    ] {
        let _ = writeln!(
            out,
            "  <key id=\"{id}\" for=\"node\" attr.name=\"{name}\" attr.type=\"{ty}\"/>"
        );
    }
    out.push_str(
        "  <key id=\"amount_satoshi\" for=\"edge\" attr.name=\"amount_satoshi\" attr.type=\"long\"/>\n",
    );
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for (id, node) in graph.nodes() {
        let _ = writeln!(out, "    <node id=\"n{id}\">");
        let _ = writeln!(
            out,
            "      <data key=\"kind\">{}</data>",
            kind_name(node.kind)
        );
        let _ = writeln!(
            out,
            "      <data key=\"label\">{}</data>",
            xml_escape(&node.name)
        );
        if let Some(label) = &node.label {
            let _ = writeln!(
                out,
                "      <data key=\"entity\">{}</data>",
                xml_escape(&label.entity)
            );
            let _ = writeln!(
                out,
                "      <data key=\"category\">{}</data>",
                label.category
            );
        }
        if let Some(seed_id) = node.seed_id {
            let _ = writeln!(out, "      <data key=\"seed_id\">{seed_id}</data>");
        }
        out.push_str("    </node>\n");
    }
    for (from, to, amount) in graph.edges() {
        let _ = writeln!(out, "    <edge source=\"n{from}\" target=\"n{to}\">");
        let _ = writeln!(out, "      <data key=\"amount_satoshi\">{amount}</data>");
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Renders the graph as a Graphviz digraph. Addresses are ellipses,
/// transactions boxes; seed addresses are drawn filled.
pub fn dot(graph: &ActivityGraph, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(name));
    out.push_str("  rankdir=LR;\n");
    for (id, node) in graph.nodes() {
        let shape = match node.kind {
            NodeKind::Address => "ellipse",
            NodeKind::Transaction => "box",
        };
        let mut attrs = format!(
            "label=\"{}\", kind=\"{}\", shape={shape}",
            dot_escape(&node.name),
            kind_name(node.kind)
        );
        if let Some(label) = &node.label {
            let _ = write!(
                attrs,
                ", entity=\"{}\", category=\"{}\"",
                dot_escape(&label.entity),
                label.category
            );
        }
        if let Some(seed_id) = node.seed_id {
            let _ = write!(attrs, ", seed_id={seed_id}, style=filled");
        }
        let _ = writeln!(out, "  n{id} [{attrs}];");
    }
    for (from, to, amount) in graph.edges() {
        let penwidth = (1.0 + amount as f64).log10().max(0.2);
        let _ = writeln!(
            out,
            "  n{from} -> n{to} [amount_satoshi={amount}, penwidth={penwidth:.2}];"
        );
    }
    out.push_str("}\n");
    out
}

/// Writes the community index: one row per community with node counts.
pub fn write_community_index<W: std::io::Write>(
    communities: &[Community],
    writer: W,
) -> csv::Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record([
        "graph_id",
        "community_id",
        "n_nodes",
        "n_addresses",
        "n_transactions",
    ])?;
    for community in communities {
        csv_writer.write_record([
            community.graph_id.to_string(),
            community.community_id.to_string(),
            community.n_nodes().to_string(),
            community.n_addresses().to_string(),
            community.n_transactions().to_string(),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}
