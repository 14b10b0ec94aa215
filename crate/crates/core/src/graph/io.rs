//! Plain-text graph, flow and label files.
//!
//! * graph file: one edge per line, `i j` with positive integer ids.
//! * flow file: one record per line, `i j value` meaning `f(i, j) = value`.
//! * label file: one 1-based edge index per line.
//!
//! `#` starts a comment; blank lines are skipped. Writers emit canonical
//! edge order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{EdgeFlow, FlowNetwork};
use crate::error::{Error, Result};

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(p) => &line[..p],
        None => line,
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse {
        line: 0,
        msg: e.to_string(),
    }
}

fn parse_id(tok: &str, line: usize) -> Result<i64> {
    tok.parse::<i64>().map_err(|_| Error::Parse {
        line,
        msg: format!("expected integer vertex id, got {tok:?}"),
    })
}

pub fn parse_graph<R: BufRead>(reader: R) -> Result<FlowNetwork> {
    let mut edges = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let toks: Vec<&str> = strip_comment(&line).split_whitespace().collect();
        match toks.len() {
            0 => continue,
            2 => edges.push((parse_id(toks[0], k + 1)?, parse_id(toks[1], k + 1)?)),
            _ => {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: "expected two vertex ids".into(),
                })
            }
        }
    }
    FlowNetwork::from_edge_list(&edges)
}

pub fn read_graph_file(path: impl AsRef<Path>) -> Result<FlowNetwork> {
    parse_graph(BufReader::new(File::open(path).map_err(io_err)?))
}

pub fn write_graph<W: Write>(net: &FlowNetwork, mut w: W) -> std::io::Result<()> {
    for &(i, j) in net.edges() {
        writeln!(w, "{} {}", net.vertex_id(i), net.vertex_id(j))?;
    }
    Ok(())
}

/// Flow measurements keyed by edge index, in reference orientation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowRecords(pub BTreeMap<usize, f64>);

impl FlowRecords {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, edge: usize) -> Option<f64> {
        self.0.get(&edge).copied()
    }

    /// The full flow vector, if every edge has a record.
    pub fn to_full(&self, m: usize) -> Option<EdgeFlow> {
        (0..m).map(|r| self.get(r)).collect::<Option<Vec<_>>>().map(EdgeFlow::new)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.keys().copied().collect()
    }
}

/// Reads `i j value` records. Records given against the reference
/// orientation are negated; repeated records for one edge must agree.
pub fn parse_flow_records<R: BufRead>(net: &FlowNetwork, reader: R) -> Result<FlowRecords> {
    let mut out = BTreeMap::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(io_err)?;
        let toks: Vec<&str> = strip_comment(&line).split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected `i j value`".into(),
            });
        }
        let a = parse_id(toks[0], lineno)?;
        let b = parse_id(toks[1], lineno)?;
        let value: f64 = toks[2].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("expected a number, got {:?}", toks[2]),
        })?;
        if !value.is_finite() {
            return Err(Error::NonFinite("flow file"));
        }
        let lookup = |v: i64| {
            if v <= 0 {
                None
            } else {
                net.vertex_index(v as u64)
            }
        };
        let (ia, ib) = match (lookup(a), lookup(b)) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::UnknownEdge(a.max(0) as u64, b.max(0) as u64)),
        };
        let (r, sign) = net
            .edge_between(ia, ib)
            .ok_or(Error::UnknownEdge(a as u64, b as u64))?;
        let v = sign * value;
        if let Some(&prev) = out.get(&r) {
            if prev != v {
                let (i, j) = net.edges()[r];
                return Err(Error::InconsistentFlow {
                    i: net.vertex_id(i),
                    j: net.vertex_id(j),
                    first: prev,
                    second: v,
                });
            }
        }
        out.insert(r, v);
    }
    Ok(FlowRecords(out))
}

pub fn read_flow_file(net: &FlowNetwork, path: impl AsRef<Path>) -> Result<FlowRecords> {
    parse_flow_records(net, BufReader::new(File::open(path).map_err(io_err)?))
}

pub fn write_flows<W: Write>(net: &FlowNetwork, f: &[f64], mut w: W) -> std::io::Result<()> {
    for (r, &(i, j)) in net.edges().iter().enumerate() {
        writeln!(w, "{} {} {}", net.vertex_id(i), net.vertex_id(j), f[r])?;
    }
    Ok(())
}

/// Reads 1-based edge indices, returning them 0-based in file order.
pub fn parse_labels<R: BufRead>(m: usize, reader: R) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let tok = strip_comment(&line).trim();
        if tok.is_empty() {
            continue;
        }
        let idx: usize = tok.parse().map_err(|_| Error::Parse {
            line: k + 1,
            msg: format!("expected an edge index, got {tok:?}"),
        })?;
        if idx == 0 || idx > m {
            return Err(Error::EdgeIndexOutOfRange { index: idx, m });
        }
        out.push(idx - 1);
    }
    Ok(out)
}

pub fn read_labels_file(m: usize, path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_labels(m, BufReader::new(File::open(path).map_err(io_err)?))
}

pub fn write_labels<W: Write>(indices: &[usize], mut w: W) -> std::io::Result<()> {
    for &r in indices {
        writeln!(w, "{}", r + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRAPH: &str = "# triangle\n1 2\n2 3  # trailing\n\n3 1\n";

    #[test]
    fn graph_with_comments() {
        let net = parse_graph(GRAPH.as_bytes()).unwrap();
        assert_eq!((net.n(), net.m()), (3, 3));
        let mut out = Vec::new();
        write_graph(&net, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 2\n1 3\n2 3\n");
    }

    #[test]
    fn flows_are_oriented() {
        let net = parse_graph(GRAPH.as_bytes()).unwrap();
        let rec = parse_flow_records(&net, "1 2 1.5\n3 1 2\n3 2 -1\n".as_bytes()).unwrap();
        assert_eq!(&*rec.to_full(3).unwrap(), &[1.5, -2.0, 1.0]);
    }

    #[test]
    fn consistent_duplicates_accepted_inconsistent_rejected() {
        let net = parse_graph(GRAPH.as_bytes()).unwrap();
        assert!(parse_flow_records(&net, "1 2 1\n2 1 -1\n".as_bytes()).is_ok());
        assert!(matches!(
            parse_flow_records(&net, "1 2 1\n2 1 1\n".as_bytes()),
            Err(Error::InconsistentFlow { .. })
        ));
    }

    #[test]
    fn unknown_edges_and_bad_lines() {
        let net = parse_graph("1 2\n2 3\n".as_bytes()).unwrap();
        assert!(matches!(
            parse_flow_records(&net, "1 3 1\n".as_bytes()),
            Err(Error::UnknownEdge(1, 3))
        ));
        assert!(matches!(
            parse_graph("1 2 3\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn labels_are_one_based() {
        assert_eq!(parse_labels(3, "3\n1\n".as_bytes()).unwrap(), vec![2, 0]);
        assert!(parse_labels(3, "4\n".as_bytes()).is_err());
        assert!(parse_labels(3, "0\n".as_bytes()).is_err());
    }
}
