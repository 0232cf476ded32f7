//! Multicast groups and the native JSON instance format.
//!
//! ```json
//! {
//!   "nodes": ["s", "a", "d"],
//!   "node_capacity": { "a": 1 },
//!   "edges": [ { "tail": "s", "head": "a", "cost": 1, "capacity": "inf" } ],
//!   "groups": [ { "id": 0, "source": "s", "destinations": ["d"], "rate": "1" } ]
//! }
//! ```
//!
//! Nodes missing from `node_capacity` get `default_node_capacity` (0 when
//! absent). Edge capacity may be a number, a `"p/q"` string, `"inf"`, or
//! omitted (unbounded). Numbers in cost/rate/capacity accept the same forms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::graph::{Capacity, Network, NodeId};
use crate::rational::{self, serde_text, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulticastGroup {
    pub id: u32,
    pub source: NodeId,
    pub destinations: BTreeSet<NodeId>,
    pub rate: Rational,
}

impl MulticastGroup {
    pub fn new(id: u32, source: NodeId, destinations: impl IntoIterator<Item = NodeId>, rate: Rational) -> Self {
        Self { id, source, destinations: destinations.into_iter().collect(), rate }
    }

    pub fn validate(&self, net: &Network) -> Result<(), String> {
        if !net.contains(self.source) {
            return Err(format!("source {} is not a node", self.source));
        }
        if self.destinations.is_empty() {
            return Err("no destinations".into());
        }
        if self.destinations.contains(&self.source) {
            return Err("source listed as destination".into());
        }
        if let Some(d) = self.destinations.iter().find(|d| !net.contains(**d)) {
            return Err(format!("destination {d} is not a node"));
        }
        if self.rate <= Rational::from_integer(0) {
            return Err("rate must be positive".into());
        }
        Ok(())
    }
}

/// δ: the largest destination set.
pub fn delta(groups: &[MulticastGroup]) -> usize {
    groups.iter().map(|g| g.destinations.len()).max().unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub network: Network,
    pub groups: Vec<MulticastGroup>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_node_capacity: Option<u64>,
    #[serde(default)]
    node_capacity: BTreeMap<String, u64>,
    edges: Vec<RawEdge>,
    #[serde(default)]
    groups: Vec<RawGroup>,
}

#[derive(Serialize, Deserialize)]
struct RawEdge {
    tail: String,
    head: String,
    #[serde(with = "serde_text")]
    cost: Rational,
    #[serde(default, with = "capacity_text")]
    capacity: Capacity,
}

#[derive(Serialize, Deserialize)]
struct RawGroup {
    id: u32,
    source: String,
    destinations: Vec<String>,
    #[serde(with = "serde_text", default = "one")]
    rate: Rational,
}

fn one() -> Rational {
    rational::int(1)
}

pub(crate) mod capacity_text {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    use crate::graph::Capacity;
    use crate::rational::{self, serde_text::RationalVisitor};

    pub fn serialize<S: Serializer>(c: &Capacity, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Capacity::Finite(r) => s.serialize_str(&rational::format(r)),
            Capacity::Unbounded => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Capacity, D::Error> {
        d.deserialize_any(CapVisitor)
    }

    struct CapVisitor;

    impl<'de> Visitor<'de> for CapVisitor {
        type Value = Capacity;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a positive rational, \"inf\", or null")
        }

        fn visit_unit<E: de::Error>(self) -> Result<Capacity, E> {
            Ok(Capacity::Unbounded)
        }

        fn visit_none<E: de::Error>(self) -> Result<Capacity, E> {
            Ok(Capacity::Unbounded)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Capacity, E> {
            RationalVisitor.visit_i64(v).map(Capacity::Finite)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Capacity, E> {
            RationalVisitor.visit_u64(v).map(Capacity::Finite)
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Capacity, E> {
            RationalVisitor.visit_f64(v).map(Capacity::Finite)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Capacity, E> {
            match v.trim() {
                "inf" | "Infinity" | "unbounded" => Ok(Capacity::Unbounded),
                other => RationalVisitor.visit_str(other).map(Capacity::Finite),
            }
        }
    }
}

impl Instance {
    pub fn new(network: Network, groups: Vec<MulticastGroup>) -> Self {
        Self { network, groups }
    }

    pub fn delta(&self) -> usize {
        delta(&self.groups)
    }

    pub fn validate(&self) -> Result<(), ParseError> {
        let mut ids = BTreeSet::new();
        for g in &self.groups {
            if !ids.insert(g.id) {
                return Err(ParseError::Instance(format!("duplicate group id {}", g.id)));
            }
            g.validate(&self.network)
                .map_err(|m| ParseError::Instance(format!("group {}: {m}", g.id)))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ParseError> {
        let raw: RawInstance = serde_json::from_str(text)?;
        let default_cap = raw.default_node_capacity.unwrap_or(0);
        let mut net = Network::new();
        for label in &raw.nodes {
            let cap = raw.node_capacity.get(label).copied().unwrap_or(default_cap);
            net.add_node(label.clone(), cap).map_err(|e| ParseError::Instance(e.to_string()))?;
        }
        if let Some(unknown) = raw.node_capacity.keys().find(|k| net.node_by_label(k).is_none()) {
            return Err(ParseError::Instance(format!("node_capacity names unknown node `{unknown}`")));
        }
        let lookup = |net: &Network, l: &str| {
            net.node_by_label(l).ok_or_else(|| ParseError::Instance(format!("unknown node `{l}`")))
        };
        for e in &raw.edges {
            let (t, h) = (lookup(&net, &e.tail)?, lookup(&net, &e.head)?);
            net.add_edge(t, h, e.cost, e.capacity).map_err(|e| ParseError::Instance(e.to_string()))?;
        }
        let mut groups = Vec::with_capacity(raw.groups.len());
        for g in &raw.groups {
            let source = lookup(&net, &g.source)?;
            let dests = g.destinations.iter().map(|d| lookup(&net, d)).collect::<Result<BTreeSet<_>, _>>()?;
            if dests.len() != g.destinations.len() {
                return Err(ParseError::Instance(format!("group {}: repeated destination", g.id)));
            }
            groups.push(MulticastGroup { id: g.id, source, destinations: dests, rate: g.rate });
        }
        let inst = Instance { network: net, groups };
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let net = &self.network;
        let raw = RawInstance {
            nodes: net.nodes().map(|u| net.label(u).to_string()).collect(),
            default_node_capacity: None,
            node_capacity: net.nodes().map(|u| (net.label(u).to_string(), net.node_capacity(u))).collect(),
            edges: net
                .edges()
                .map(|(_, e)| RawEdge {
                    tail: net.label(e.tail).to_string(),
                    head: net.label(e.head).to_string(),
                    cost: e.cost,
                    capacity: e.capacity,
                })
                .collect(),
            groups: self
                .groups
                .iter()
                .map(|g| RawGroup {
                    id: g.id,
                    source: net.label(g.source).to_string(),
                    destinations: g.destinations.iter().map(|d| net.label(*d).to_string()).collect(),
                    rate: g.rate,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serialization is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    const SAMPLE: &str = r#"{
        "nodes": ["s", "a", "d"],
        "default_node_capacity": 2,
        "node_capacity": {"a": 1},
        "edges": [
            {"tail": "s", "head": "a", "cost": 1, "capacity": "inf"},
            {"tail": "a", "head": "d", "cost": "3/2", "capacity": 2.5}
        ],
        "groups": [{"id": 7, "source": "s", "destinations": ["d"], "rate": "1/2"}]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let inst = Instance::from_json(SAMPLE).unwrap();
        let net = &inst.network;
        let a = net.node_by_label("a").unwrap();
        assert_eq!(net.node_capacity(a), 1);
        assert_eq!(net.node_capacity(net.node_by_label("s").unwrap()), 2);
        let ad = net.find_edge(a, net.node_by_label("d").unwrap()).unwrap();
        assert_eq!(net.edge(ad).cost, Rational::new(3, 2));
        assert_eq!(net.edge(ad).capacity, Capacity::Finite(Rational::new(5, 2)));
        assert_eq!(inst.groups[0].rate, Rational::new(1, 2));
        let again = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(again.groups, inst.groups);
        assert_eq!(again.to_json(), inst.to_json());
    }

    #[test]
    fn rejects_invalid_groups() {
        let bad = SAMPLE.replace(r#"["d"]"#, r#"["s"]"#);
        assert!(Instance::from_json(&bad).is_err());
        let bad = SAMPLE.replace(r#"["d"]"#, r#"[]"#);
        assert!(Instance::from_json(&bad).is_err());
        let bad = SAMPLE.replace(r#""rate": "1/2""#, r#""rate": 0"#);
        assert!(Instance::from_json(&bad).is_err());
        let bad = SAMPLE.replace(r#""head": "d""#, r#""head": "zz""#);
        assert!(Instance::from_json(&bad).is_err());
    }

    #[test]
    fn delta_is_max_destination_count() {
        let g = |id, n: u32| MulticastGroup::new(id, NodeId(0), (1..=n).map(NodeId), int(1));
        assert_eq!(delta(&[g(0, 2), g(1, 5), g(2, 3)]), 5);
        assert_eq!(delta(&[]), 0);
    }
}
