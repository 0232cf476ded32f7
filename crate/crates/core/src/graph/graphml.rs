//! Topology Zoo GraphML ingestion.
//!
//! Node `id` attributes become labels. Undirected links expand to a pair of
//! directed edges sharing cost and capacity; link attributes such as
//! bandwidth labels are ignored so every edge gets the uniform default cost.

use roxmltree::{Document, Node};

use super::{Capacity, GraphError, Network};
use crate::error::ParseError;
use crate::rational::{int, Rational};

#[derive(Clone, Debug)]
pub struct GraphmlOptions {
    pub node_capacity: u64,
    pub edge_cost: Rational,
    pub edge_capacity: Capacity,
}

impl Default for GraphmlOptions {
    fn default() -> Self {
        Self { node_capacity: 0, edge_cost: int(1), edge_capacity: Capacity::Unbounded }
    }
}

pub fn load_graphml(bytes: &[u8], opts: &GraphmlOptions) -> Result<Network, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ParseError::Topology { line: 1, msg: format!("not utf-8: {e}") })?;
    let doc = Document::parse(text)?;
    let line_of = |n: Node| doc.text_pos_at(n.range().start).row;
    let err = |n: Node, msg: String| ParseError::Topology { line: line_of(n), msg };

    let graph = doc
        .descendants()
        .find(|n| n.has_tag_name("graph"))
        .ok_or_else(|| ParseError::Topology { line: 1, msg: "no <graph> element".into() })?;
    let directed_default = graph.attribute("edgedefault") == Some("directed");

    let mut net = Network::new();
    for n in graph.children().filter(|n| n.has_tag_name("node")) {
        let id = n.attribute("id").ok_or_else(|| err(n, "node without id".into()))?;
        net.add_node(id, opts.node_capacity).map_err(|e| err(n, e.to_string()))?;
    }
    for e in graph.children().filter(|n| n.has_tag_name("edge")) {
        let end = |attr: &str| {
            let label = e.attribute(attr).ok_or_else(|| err(e, format!("edge without {attr}")))?;
            net.node_by_label(label)
                .ok_or_else(|| err(e, GraphError::UnknownNode(label.to_string()).to_string()))
        };
        let (a, b) = (end("source")?, end("target")?);
        let directed = match e.attribute("directed") {
            Some(v) => v == "true",
            None => directed_default,
        };
        let res = if directed {
            net.add_edge(a, b, opts.edge_cost, opts.edge_capacity).map(|_| ())
        } else {
            net.add_link(a, b, opts.edge_cost, opts.edge_capacity).map(|_| ())
        };
        res.map_err(|ge| err(e, ge.to_string()))?;
    }
    Ok(net)
}
