//! Graph and label readers.
//!
//! Edge lists are whitespace-separated `u v` pairs, one per line, with `#`
//! comments. An optional `# n=<count>` header fixes the node count and keeps
//! ids as given (they must lie in `0..count`); otherwise the distinct ids
//! are remapped in increasing order to `0..n`. Edges are undirected,
//! normalized to `(min, max)` and deduplicated. Self-loops are rejected.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::sbm::{AdjacencyMatrix, Partition};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeListGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    /// Original id of every node.
    node_ids: Vec<i64>,
}

impl EdgeListGraph {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Normalized edges, sorted, `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_ids(&self) -> &[i64] {
        &self.node_ids
    }

    /// Internal index of an original node id.
    pub fn index_of(&self, id: i64) -> Option<usize> {
        // node_ids is increasing for every constructor
        self.node_ids.binary_search(&id).ok()
    }

    pub fn adjacency(&self) -> Result<AdjacencyMatrix> {
        AdjacencyMatrix::from_edges(self.num_nodes, &self.edges)
    }

    /// Edge-list text that parses back to the same graph.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n={}\n", self.num_nodes);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

fn parse_header(line: &str) -> Option<&str> {
    let rest = line.trim().strip_prefix('#')?.trim();
    rest.strip_prefix("n=")
        .or_else(|| rest.strip_prefix("n ="))
        .map(str::trim)
}

/// Parses edge-list text.
pub fn parse_edge_list(text: &str) -> Result<EdgeListGraph> {
    let mut declared: Option<usize> = None;
    let mut raw: Vec<(i64, i64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(count) = parse_header(line) {
            if declared.is_some() {
                return Err(Error::parse(lineno, "duplicate node-count header"));
            }
            let n = count
                .parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("invalid node count {count:?}")))?;
            declared = Some(n);
            continue;
        }
        let body = strip_comment(line);
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match tokens.len() {
            0 => continue,
            2 => {}
            k => {
                return Err(Error::parse(
                    lineno,
                    format!("expected two node ids, found {k} tokens"),
                ))
            }
        }
        let id = |t: &str| {
            t.parse::<i64>()
                .map_err(|_| Error::parse(lineno, format!("node id {t:?} is not an integer")))
        };
        let (u, v) = (id(tokens[0])?, id(tokens[1])?);
        if u == v {
            return Err(Error::parse(lineno, format!("self-loop on node {u}")));
        }
        if let Some(n) = declared {
            for w in [u, v] {
                if w < 0 || w as usize >= n {
                    return Err(Error::parse(lineno, format!("node {w} outside 0..{n}")));
                }
            }
        }
        raw.push((u.min(v), u.max(v)));
    }

    let node_ids: Vec<i64> = match declared {
        Some(n) => (0..n as i64).collect(),
        None => raw
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .collect::<BTreeSet<i64>>()
            .into_iter()
            .collect(),
    };
    let index: HashMap<i64, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let edges: BTreeSet<(usize, usize)> = raw.iter().map(|(u, v)| (index[u], index[v])).collect();
    Ok(EdgeListGraph {
        num_nodes: node_ids.len(),
        edges: edges.into_iter().collect(),
        node_ids,
    })
}

/// Ground-truth labels as `node label` lines; the label is any token.
/// Every node of `graph` must be labeled exactly once.
pub fn parse_labels(text: &str, graph: &EdgeListGraph) -> Result<Partition> {
    let mut assigned: Vec<Option<String>> = vec![None; graph.num_nodes()];
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let tokens: Vec<&str> = strip_comment(line).split_whitespace().collect();
        match tokens.len() {
            0 => continue,
            2 => {}
            k => {
                return Err(Error::parse(
                    lineno,
                    format!("expected `node label`, found {k} tokens"),
                ))
            }
        }
        let id = tokens[0].parse::<i64>().map_err(|_| {
            Error::parse(lineno, format!("node id {:?} is not an integer", tokens[0]))
        })?;
        let node = graph
            .index_of(id)
            .ok_or_else(|| Error::parse(lineno, format!("node {id} is not in the graph")))?;
        if assigned[node].replace(tokens[1].to_string()).is_some() {
            return Err(Error::parse(lineno, format!("node {id} labeled twice")));
        }
    }
    let missing: Vec<i64> = assigned
        .iter()
        .zip(graph.node_ids())
        .filter(|(l, _)| l.is_none())
        .map(|(_, id)| *id)
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidPartition(format!(
            "{} nodes have no label (first: {})",
            missing.len(),
            missing[0]
        )));
    }
    let labels: Vec<String> = assigned
        .into_iter()
        .map(|l| l.expect("checked above"))
        .collect();
    Partition::canonical_from(&labels)
}

#[derive(Debug)]
struct Token {
    text: String,
    line: usize,
}

fn gml_tokens(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let mut chars = line.chars().peekable();
        while let Some(&c) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c == '#' {
                break;
            } else if c == '[' || c == ']' {
                chars.next();
                tokens.push(Token {
                    text: c.to_string(),
                    line: lineno,
                });
            } else if c == '"' {
                chars.next();
                let mut s = String::from("\"");
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(Error::parse(lineno, "unterminated string")),
                    }
                }
                tokens.push(Token {
                    text: s,
                    line: lineno,
                });
            } else {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '[' || ch == ']' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                tokens.push(Token {
                    text: s,
                    line: lineno,
                });
            }
        }
    }
    Ok(tokens)
}

/// Field name to (value, line).
type GmlFields = BTreeMap<String, (String, usize)>;

/// Reads the `key value` pairs of a `[ ... ]` block starting after its
/// opening bracket; nested blocks are skipped. Returns the pairs and the
/// position after the closing bracket.
fn gml_block(tokens: &[Token], mut pos: usize) -> Result<(GmlFields, usize)> {
    let mut fields = BTreeMap::new();
    loop {
        let key = tokens
            .get(pos)
            .ok_or_else(|| Error::parse(tokens.last().map_or(0, |t| t.line), "unclosed block"))?;
        if key.text == "]" {
            return Ok((fields, pos + 1));
        }
        let value = tokens
            .get(pos + 1)
            .ok_or_else(|| Error::parse(key.line, format!("key {:?} has no value", key.text)))?;
        if value.text == "[" {
            let mut depth = 1;
            pos += 2;
            while depth > 0 {
                let t = tokens
                    .get(pos)
                    .ok_or_else(|| Error::parse(value.line, "unclosed block"))?;
                depth += match t.text.as_str() {
                    "[" => 1,
                    "]" => -1,
                    _ => 0,
                };
                pos += 1;
            }
        } else {
            fields.insert(key.text.clone(), (value.text.clone(), value.line));
            pos += 2;
        }
    }
}

/// Reads the `graph [ node [ id .. ] edge [ source .. target .. ] ]` subset
/// of GML. Nodes keep their numeric ids (remapped in increasing order);
/// directedness and attributes other than ids are ignored.
pub fn parse_gml(text: &str) -> Result<EdgeListGraph> {
    let tokens = gml_tokens(text)?;
    let mut ids = BTreeSet::new();
    let mut raw = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let t = &tokens[pos];
        let opens = tokens.get(pos + 1).is_some_and(|n| n.text == "[");
        match (t.text.as_str(), opens) {
            ("graph", true) => pos += 2,
            ("node", true) | ("edge", true) => {
                let (fields, next) = gml_block(&tokens, pos + 2)?;
                let int = |key: &str| -> Result<i64> {
                    let (v, line) = fields
                        .get(key)
                        .ok_or_else(|| Error::parse(t.line, format!("{} without {key}", t.text)))?;
                    v.parse::<i64>()
                        .map_err(|_| Error::parse(*line, format!("{key} {v:?} is not an integer")))
                };
                if t.text == "node" {
                    if !ids.insert(int("id")?) {
                        return Err(Error::parse(t.line, "duplicate node id"));
                    }
                } else {
                    let (u, v) = (int("source")?, int("target")?);
                    if u == v {
                        return Err(Error::parse(t.line, format!("self-loop on node {u}")));
                    }
                    raw.push((u.min(v), u.max(v), t.line));
                }
                pos = next;
            }
            _ => pos += 1,
        }
    }
    let node_ids: Vec<i64> = ids.into_iter().collect();
    let index: HashMap<i64, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let mut edges = BTreeSet::new();
    for (u, v, line) in raw {
        let lookup = |w: i64| {
            index
                .get(&w)
                .copied()
                .ok_or_else(|| Error::parse(line, format!("edge refers to unknown node {w}")))
        };
        edges.insert((lookup(u)?, lookup(v)?));
    }
    Ok(EdgeListGraph {
        num_nodes: node_ids.len(),
        edges: edges.into_iter().collect(),
        node_ids,
    })
}

/// Reads a graph file, as GML when the extension is `.gml` and as an edge
/// list otherwise.
pub fn read_graph(path: &Path) -> Result<EdgeListGraph> {
    let text = std::fs::read_to_string(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gml"))
    {
        parse_gml(&text)
    } else {
        parse_edge_list(&text)
    }
}

pub fn read_labels(path: &Path, graph: &EdgeListGraph) -> Result<Partition> {
    parse_labels(&std::fs::read_to_string(path)?, graph)
}
