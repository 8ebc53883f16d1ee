//! Cell-based architecture strings.
//!
//! A cell is a densely connected DAG on `V` nodes: node 0 is the input
//! and every node `t > 0` receives one operation from each earlier node
//! `s < t`. The textual form groups edges by target node,
//!
//! ```text
//! |op~0|+|op~0|op~1|+|op~0|op~1|op~2|
//! ```
//!
//! so a `V = 4` cell always carries exactly six edges.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// The five cell operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    None,
    SkipConnect,
    NorConv1x1,
    NorConv3x3,
    AvgPool3x3,
}

impl OpKind {
    pub const ALL: [OpKind; 5] = [
        OpKind::None,
        OpKind::SkipConnect,
        OpKind::NorConv1x1,
        OpKind::NorConv3x3,
        OpKind::AvgPool3x3,
    ];

    pub fn token(self) -> &'static str {
        match self {
            OpKind::None => "none",
            OpKind::SkipConnect => "skip_connect",
            OpKind::NorConv1x1 => "nor_conv_1x1",
            OpKind::NorConv3x3 => "nor_conv_3x3",
            OpKind::AvgPool3x3 => "avg_pool_3x3",
        }
    }

    pub fn from_token(token: &str) -> Option<OpKind> {
        OpKind::ALL.into_iter().find(|op| op.token() == token)
    }
}

/// One cell edge: `target` receives `op` applied to `source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub target: usize,
    pub source: usize,
    pub op: OpKind,
}

/// A parsed cell: `num_nodes` nodes and the full `V(V-1)/2` edge list,
/// ordered by (target, source).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSpec {
    num_nodes: usize,
    edges: Vec<Edge>,
}

pub const DEFAULT_NUM_NODES: usize = 4;

impl CellSpec {
    /// Builds a cell from per-edge ops listed in (target, source) order:
    /// (1,0), (2,0), (2,1), (3,0), ...
    pub fn from_ops(num_nodes: usize, ops: &[OpKind]) -> Result<CellSpec> {
        if num_nodes < 2 {
            return Err(Error::ArchParse(format!(
                "cell needs at least 2 nodes, got {num_nodes}"
            )));
        }
        let expected = num_nodes * (num_nodes - 1) / 2;
        if ops.len() != expected {
            return Err(Error::ArchParse(format!(
                "expected {expected} ops for {num_nodes} nodes, got {}",
                ops.len()
            )));
        }
        let mut edges = Vec::with_capacity(expected);
        let mut it = ops.iter();
        for target in 1..num_nodes {
            for source in 0..target {
                edges.push(Edge {
                    target,
                    source,
                    op: *it.next().unwrap(),
                });
            }
        }
        Ok(CellSpec { num_nodes, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges feeding one target node, in source order.
    pub fn incoming(&self, target: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.target == target)
    }

    /// Serializes back to the textual wire format.
    pub fn to_arch_string(&self) -> String {
        let mut out = String::new();
        for target in 1..self.num_nodes {
            if target > 1 {
                out.push('+');
            }
            out.push('|');
            for edge in self.incoming(target) {
                out.push_str(edge.op.token());
                out.push('~');
                out.push_str(&edge.source.to_string());
                out.push('|');
            }
        }
        out
    }
}

impl fmt::Display for CellSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_arch_string())
    }
}

impl FromStr for CellSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<CellSpec> {
        parse_arch_string(s)
    }
}

/// Parses the textual cell format.
pub fn parse_arch_string(s: &str) -> Result<CellSpec> {
    if s.is_empty() {
        return Err(Error::ArchParse("empty architecture string".into()));
    }
    let groups: Vec<&str> = s.split('+').collect();
    let num_nodes = groups.len() + 1;
    let mut ops = Vec::new();
    for (gi, group) in groups.iter().enumerate() {
        let target = gi + 1;
        let inner = group
            .strip_prefix('|')
            .and_then(|g| g.strip_suffix('|'))
            .ok_or_else(|| {
                Error::ArchParse(format!(
                    "node {target} group {group:?} must be |-delimited"
                ))
            })?;
        let entries: Vec<&str> = inner.split('|').collect();
        if entries.len() != target || entries.iter().any(|e| e.is_empty()) {
            return Err(Error::ArchParse(format!(
                "node {target} expects {target} incoming edges, got {:?}",
                entries
            )));
        }
        for (pos, entry) in entries.iter().enumerate() {
            let (token, src) = entry.rsplit_once('~').ok_or_else(|| {
                Error::ArchParse(format!("edge {entry:?} is missing the ~source suffix"))
            })?;
            let op = OpKind::from_token(token)
                .ok_or_else(|| Error::ArchParse(format!("unknown op token {token:?}")))?;
            let source: usize = src
                .parse()
                .map_err(|_| Error::ArchParse(format!("bad source index {src:?}")))?;
            if source != pos {
                return Err(Error::ArchParse(format!(
                    "node {target}: edge {pos} references source {source}, expected {pos}"
                )));
            }
            ops.push(op);
        }
    }
    CellSpec::from_ops(num_nodes, &ops)
}

/// Serializes a cell to the wire format (inverse of [`parse_arch_string`]).
pub fn format_arch_string(cell: &CellSpec) -> String {
    cell.to_arch_string()
}

/// Draws a uniformly random 4-node cell; deterministic per seed.
pub fn random_arch(seed: u64) -> CellSpec {
    let mut rng = CounterRng::new(seed);
    let edges = DEFAULT_NUM_NODES * (DEFAULT_NUM_NODES - 1) / 2;
    let ops: Vec<OpKind> = (0..edges)
        .map(|_| OpKind::ALL[rng.next_below(OpKind::ALL.len() as u64) as usize])
        .collect();
    CellSpec::from_ops(DEFAULT_NUM_NODES, &ops).expect("edge count is correct by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const SAMPLE: &str =
        "|nor_conv_3x3~0|+|none~0|skip_connect~1|+|avg_pool_3x3~0|nor_conv_1x1~1|nor_conv_3x3~2|";

    #[test]
    fn parses_sample_cell() {
        let cell = parse_arch_string(SAMPLE).unwrap();
        assert_eq!(cell.num_nodes(), 4);
        let got: Vec<(usize, usize, OpKind)> = cell
            .edges()
            .iter()
            .map(|e| (e.target, e.source, e.op))
            .collect();
        assert_eq!(
            got,
            vec![
                (1, 0, OpKind::NorConv3x3),
                (2, 0, OpKind::None),
                (2, 1, OpKind::SkipConnect),
                (3, 0, OpKind::AvgPool3x3),
                (3, 1, OpKind::NorConv1x1),
                (3, 2, OpKind::NorConv3x3),
            ]
        );
    }

    #[test]
    fn parses_all_skip_cell() {
        let s = "|skip_connect~0|+|skip_connect~0|skip_connect~1|+|skip_connect~0|skip_connect~1|skip_connect~2|";
        let cell = parse_arch_string(s).unwrap();
        assert!(cell.edges().iter().all(|e| e.op == OpKind::SkipConnect));
        assert_eq!(cell.edges().len(), 6);
    }

    #[test]
    fn rejects_unknown_op() {
        let s = SAMPLE.replace("avg_pool_3x3", "foo");
        let err = parse_arch_string(&s).unwrap_err();
        assert!(err.to_string().contains("unknown op token"));
    }

    #[test]
    fn rejects_wrong_edge_count() {
        let s = "|none~0|+|none~0|+|none~0|none~1|none~2|";
        assert!(parse_arch_string(s).is_err());
    }

    #[test]
    fn rejects_malformed_separators() {
        for s in ["none~0", "|none~0+|none~0|none~1|", "||+|none~0|none~1|", ""] {
            assert!(parse_arch_string(s).is_err(), "should reject {s:?}");
        }
    }

    #[test]
    fn rejects_out_of_order_sources() {
        let s = "|none~1|+|none~0|none~1|+|none~0|none~1|none~2|";
        assert!(parse_arch_string(s).is_err());
    }

    #[test]
    fn round_trips_through_format() {
        let cell = parse_arch_string(SAMPLE).unwrap();
        assert_eq!(format_arch_string(&cell), SAMPLE);
        assert_eq!(parse_arch_string(&cell.to_arch_string()).unwrap(), cell);
    }

    #[test]
    fn random_arch_is_deterministic() {
        assert_eq!(random_arch(0), random_arch(0));
        assert_eq!(random_arch(123), random_arch(123));
        assert_ne!(random_arch(0), random_arch(1));
    }

    #[test]
    fn random_arch_round_trips() {
        for seed in 0..50 {
            let cell = random_arch(seed);
            assert_eq!(parse_arch_string(&cell.to_arch_string()).unwrap(), cell);
        }
    }

    // Coupon-collector bound: 10k uniform draws from the 5^6 = 15625 cell
    // space are expected to hit ~7.4k distinct cells; 3k is a safe floor.
    #[test]
    fn random_arch_covers_the_space() {
        let distinct: HashSet<String> = (0..10_000u64)
            .map(|seed| random_arch(seed).to_arch_string())
            .collect();
        assert!(
            distinct.len() > 3000,
            "only {} distinct cells",
            distinct.len()
        );
    }
}
