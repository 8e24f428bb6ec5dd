//! JSON interchange:
//!
//! ```json
//! { "num_tokens": 2,
//!   "nodes": [[0,1],[0,2],[1,1]],
//!   "edges": [{"from":[0,1],"to":[1,1],"arg_pos":1}, {"from":[0,2],"to":[1,1],"arg_pos":2}],
//!   "sinks": [[1,1]] }
//! ```

use serde::{Deserialize, Serialize};

use super::{CDag, Edge, NodeRef};
use crate::error::Result;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    num_tokens: usize,
    nodes: Vec<NodeRef>,
    edges: Vec<Edge>,
    sinks: Vec<NodeRef>,
}

impl Serialize for CDag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            num_tokens: self.num_tokens(),
            nodes: self.nodes().to_vec(),
            edges: self.edges().to_vec(),
            sinks: self.sinks().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CDag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        CDag::checked(w.num_tokens, w.nodes, w.edges, w.sinks).map_err(serde::de::Error::custom)
    }
}

pub fn to_json(dag: &CDag) -> String {
    serde_json::to_string_pretty(dag).expect("cDAG serialization cannot fail")
}

/// Parses and validates. Schema problems surface as [`crate::Error::Schema`];
/// invariant violations as [`crate::Error::Invalid`] / [`crate::Error::Malformed`].
pub fn from_json(text: &str) -> Result<CDag> {
    let w: Wire = serde_json::from_str(text)?;
    CDag::checked(w.num_tokens, w.nodes, w.edges, w.sinks)
}
