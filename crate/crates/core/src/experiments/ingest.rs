//! Turning raw transition data into a graph and an edge flow.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::{EdgeFlow, FlowNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlayMode {
    /// Every distinct line is its own vertex.
    Song,
    /// Only the first tab-separated field names the vertex.
    Artist,
}

impl std::str::FromStr for PlayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "song" => Ok(PlayMode::Song),
            "artist" => Ok(PlayMode::Artist),
            other => Err(Error::InvalidParameter(format!("unknown play mode '{other}'"))),
        }
    }
}

/// A network built from observed transitions, with net flows and vertex names.
#[derive(Debug, Clone)]
pub struct IngestedFlows {
    pub net: FlowNetwork,
    pub flow: EdgeFlow,
    /// `(vertex id, name)` for every vertex that takes part in a transition.
    pub names: Vec<(u64, String)>,
}

/// `counts` is keyed by positions into `ids`/`names`, smaller position first.
fn assemble(ids: &[i64], names: &[String], counts: BTreeMap<(usize, usize), f64>) -> Result<IngestedFlows> {
    if counts.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let edge_list: Vec<(i64, i64)> = counts.keys().map(|&(i, j)| (ids[i], ids[j])).collect();
    let net = FlowNetwork::from_edge_list(&edge_list)?;
    let mut flow = EdgeFlow::zeros(net.m());
    for (&(i, j), &v) in &counts {
        let a = net.vertex_index(ids[i] as u64).expect("vertex was just inserted");
        let b = net.vertex_index(ids[j] as u64).expect("vertex was just inserted");
        let (r, sign) = net.edge_between(a, b).expect("edge was just inserted");
        flow[r] = sign * v;
    }
    let mut named: Vec<(u64, String)> = ids
        .iter()
        .zip(names)
        .filter(|(id, _)| net.vertex_index(**id as u64).is_some())
        .map(|(&id, name)| (id as u64, name.clone()))
        .collect();
    named.sort_by_key(|(id, _)| *id);
    Ok(IngestedFlows { net, flow, names: named })
}

/// One play per line, in listening order; a blank line ends a session.
/// Each play of `B` directly after a play of `A` adds one unit of flow
/// from `A` to `B`. Repeats of the same item are ignored.
pub fn ingest_play_sequence<R: BufRead>(reader: R, mode: PlayMode) -> Result<IngestedFlows> {
    let mut names = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut counts: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut prev: Option<usize> = None;
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { line: k + 1, msg: e.to_string() })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            prev = None;
            continue;
        }
        let key = match mode {
            PlayMode::Song => line.trim(),
            PlayMode::Artist => line.split('\t').next().unwrap_or("").trim(),
        };
        if key.is_empty() {
            return Err(Error::Parse { line: k + 1, msg: "empty item name".into() });
        }
        let v = match index.get(key) {
            Some(&v) => v,
            None => {
                index.insert(key.to_string(), names.len());
                names.push(key.to_string());
                names.len() - 1
            }
        };
        if let Some(u) = prev {
            if u != v {
                let (key, s) = if u < v { ((u, v), 1.0) } else { ((v, u), -1.0) };
                *counts.entry(key).or_insert(0.0) += s;
            }
        }
        prev = Some(v);
    }
    let ids: Vec<i64> = (1..=names.len() as i64).collect();
    assemble(&ids, &names, counts)
}

/// Link volumes in the usual transportation-network format: whitespace
/// separated `from to volume ...` rows; header, comment (`~`, `#`, `<`)
/// and non-numeric lines are skipped. Opposite directed links are netted.
/// Vertex names are the original node numbers.
pub fn ingest_tntp_flows<R: BufRead>(reader: R) -> Result<IngestedFlows> {
    let mut by_node: BTreeMap<i64, f64> = BTreeMap::new();
    let mut links = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { line: k + 1, msg: e.to_string() })?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('~') || t.starts_with('#') || t.starts_with('<') {
            continue;
        }
        let toks: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ';').filter(|s| !s.is_empty()).collect();
        if toks.len() < 3 {
            continue;
        }
        let (Ok(a), Ok(b), Ok(vol)) = (toks[0].parse::<i64>(), toks[1].parse::<i64>(), toks[2].parse::<f64>()) else {
            continue;
        };
        if a <= 0 || b <= 0 {
            return Err(Error::InvalidVertex(a.min(b)));
        }
        if !vol.is_finite() {
            return Err(Error::NonFinite("link volume"));
        }
        if a == b {
            continue;
        }
        by_node.insert(a, 0.0);
        by_node.insert(b, 0.0);
        links.push((a, b, vol));
    }
    let ids: Vec<i64> = by_node.keys().copied().collect();
    let pos: HashMap<i64, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let mut counts: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (a, b, vol) in links {
        let (u, v) = (pos[&a], pos[&b]);
        let (key, s) = if u < v { ((u, v), 1.0) } else { ((v, u), -1.0) };
        *counts.entry(key).or_insert(0.0) += s * vol;
    }
    let names: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
    assemble(&ids, &names, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plays_become_net_transitions() {
        let plays = "a\nb\na\nb\nc\n\nc\na\n";
        let got = ingest_play_sequence(plays.as_bytes(), PlayMode::Song).unwrap();
        let names: Vec<&str> = got.names.iter().map(|(_, n)| n.as_str()).collect();
        assert_eq!(names, vec!["a", "b", "c"]);
        // a->b twice, b->a once, b->c once, c->a once.
        let v = |id: u64| got.net.vertex_index(id).unwrap();
        let ab = got.net.edge_between(v(1), v(2)).unwrap().0;
        let bc = got.net.edge_between(v(2), v(3)).unwrap().0;
        let ac = got.net.edge_between(v(1), v(3)).unwrap().0;
        assert_eq!(got.flow[ab], 1.0);
        assert_eq!(got.flow[bc], 1.0);
        assert_eq!(got.flow[ac], -1.0);
    }

    #[test]
    fn artist_mode_merges_songs() {
        let plays = "x\tone\nx\ttwo\ny\tthree\nx\tone\n";
        let got = ingest_play_sequence(plays.as_bytes(), PlayMode::Artist).unwrap();
        assert_eq!(got.names, vec![(1, "x".to_string()), (2, "y".to_string())]);
        assert_eq!(got.net.m(), 1);
        assert_eq!(got.flow[0], 0.0);
        let songs = ingest_play_sequence(plays.as_bytes(), PlayMode::Song).unwrap();
        assert_eq!(songs.names.len(), 3);
    }

    #[test]
    fn no_transitions_is_an_error() {
        assert_eq!(ingest_play_sequence("a\na\n".as_bytes(), PlayMode::Song).unwrap_err(), Error::EmptyGraph);
    }

    #[test]
    fn tntp_links_are_netted() {
        let text = "<NUMBER OF ZONES> 3\n~ From To Volume Cost\n10 20 10.0 1.0 ;\n20 10 4.0 1.0 ;\n20 30 5 2 ;\n";
        let got = ingest_tntp_flows(text.as_bytes()).unwrap();
        assert_eq!(got.net.m(), 2);
        let v = |id: u64| got.net.vertex_index(id).unwrap();
        let (r, s) = got.net.edge_between(v(10), v(20)).unwrap();
        assert_eq!(s * got.flow[r], 6.0);
        let (r, s) = got.net.edge_between(v(20), v(30)).unwrap();
        assert_eq!(s * got.flow[r], 5.0);
    }
}
