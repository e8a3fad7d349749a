//! The TU graph-classification text format.
//!
//! A dataset `NAME` in a directory consists of
//!
//! * `NAME_A.txt`: one `u, v` edge per line, 1-based global node ids;
//! * `NAME_graph_indicator.txt`: line `i` holds the 1-based graph id of node `i`;
//! * `NAME_graph_labels.txt`: one integer label per graph;
//! * optionally `NAME_node_labels.txt` (one non-negative integer per node),
//!   `NAME_edge_labels.txt` (one per line of `NAME_A.txt`) and
//!   `NAME_node_attributes.txt` (comma-separated reals per node).
//!
//! Node labels become node types. Features are the node attributes when
//! present, otherwise a one-hot encoding of the node label, otherwise the
//! constant `[1.0]`. Edges listed in both directions are stored once.

use std::fmt::Write as _;
use std::path::Path;

use crate::graph::{Graph, GraphDatabase, Labeled, TypeId};
use crate::io::{read_to_string, write_string, IoError};

struct Lines {
    path: std::path::PathBuf,
    lines: Vec<(usize, String)>,
}

fn read_lines(path: &Path) -> Result<Lines, IoError> {
    let text = read_to_string(path)?;
    let mut lines: Vec<(usize, String)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .collect();
    while lines.last().is_some_and(|(_, l)| l.is_empty()) {
        lines.pop();
    }
    if let Some((n, _)) = lines.iter().find(|(_, l)| l.is_empty()) {
        return Err(IoError::parse(path, *n, "empty line"));
    }
    Ok(Lines {
        path: path.to_path_buf(),
        lines,
    })
}

fn read_optional(path: &Path) -> Result<Option<Lines>, IoError> {
    if path.exists() {
        read_lines(path).map(Some)
    } else {
        Ok(None)
    }
}

impl Lines {
    fn parse_each<T: std::str::FromStr>(&self, what: &str) -> Result<Vec<T>, IoError> {
        self.lines
            .iter()
            .map(|(n, l)| {
                l.parse()
                    .map_err(|_| IoError::parse(&self.path, *n, format!("expected {what}, found {l:?}")))
            })
            .collect()
    }

    fn expect_len(&self, len: usize, what: &str) -> Result<(), IoError> {
        if self.lines.len() != len {
            return Err(IoError::invalid(
                &self.path,
                format!("{} lines, expected one per {what} ({len})", self.lines.len()),
            ));
        }
        Ok(())
    }
}

fn file(dir: &Path, name: &str, suffix: &str) -> std::path::PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Loads dataset `name` from `dir`. Graph and node ids become 0-based and dense.
pub fn load_tu_dataset(dir: &Path, name: &str) -> Result<GraphDatabase, IoError> {
    let indicator_file = read_lines(&file(dir, name, "graph_indicator"))?;
    let labels_file = read_lines(&file(dir, name, "graph_labels"))?;
    let graph_labels: Vec<i64> = labels_file.parse_each("an integer graph label")?;
    let n_graphs = graph_labels.len();

    let mut graph_of = Vec::with_capacity(indicator_file.lines.len());
    for (n, l) in &indicator_file.lines {
        let g: usize = l
            .parse()
            .map_err(|_| IoError::parse(&indicator_file.path, *n, format!("expected a graph id, found {l:?}")))?;
        if g == 0 || g > n_graphs {
            return Err(IoError::parse(
                &indicator_file.path,
                *n,
                format!("graph id {g} does not exist ({n_graphs} graphs labelled)"),
            ));
        }
        graph_of.push(g - 1);
    }
    let n_nodes = graph_of.len();

    let node_types: Vec<TypeId> = match read_optional(&file(dir, name, "node_labels"))? {
        Some(f) => {
            f.expect_len(n_nodes, "node")?;
            f.parse_each("a non-negative integer node label")?
        }
        None => vec![0; n_nodes],
    };
    let has_node_labels = file(dir, name, "node_labels").exists();

    let features: Vec<Vec<f64>> = match read_optional(&file(dir, name, "node_attributes"))? {
        Some(f) => {
            f.expect_len(n_nodes, "node")?;
            let mut rows = Vec::with_capacity(n_nodes);
            for (n, l) in &f.lines {
                let row = l
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| IoError::parse(&f.path, *n, format!("expected reals, found {l:?}")))?;
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(IoError::parse(&f.path, *n, "non-finite attribute"));
                }
                if rows.first().is_some_and(|r: &Vec<f64>| r.len() != row.len()) {
                    return Err(IoError::parse(&f.path, *n, "attribute count differs from the first node"));
                }
                rows.push(row);
            }
            rows
        }
        None if has_node_labels => {
            let dim = node_types.iter().max().map_or(1, |&m| m as usize + 1);
            node_types
                .iter()
                .map(|&t| {
                    let mut row = vec![0.0; dim];
                    row[t as usize] = 1.0;
                    row
                })
                .collect()
        }
        None => vec![vec![1.0]; n_nodes],
    };
    let dim = features.first().map_or(1, Vec::len);

    let mut graphs: Vec<Graph> = (0..n_graphs).map(|_| Graph::new(dim)).collect();
    let mut local = Vec::with_capacity(n_nodes);
    for v in 0..n_nodes {
        let g = &mut graphs[graph_of[v]];
        let id = g
            .add_node(node_types[v], &features[v])
            .map_err(|e| IoError::parse(&indicator_file.path, v + 1, e.to_string()))?;
        local.push(id);
    }

    let edges_file = read_lines(&file(dir, name, "A"))?;
    let edge_types: Vec<TypeId> = match read_optional(&file(dir, name, "edge_labels"))? {
        Some(f) => {
            f.expect_len(edges_file.lines.len(), "edge line")?;
            f.parse_each("a non-negative integer edge label")?
        }
        None => vec![0; edges_file.lines.len()],
    };
    for (k, (n, l)) in edges_file.lines.iter().enumerate() {
        let bad = || IoError::parse(&edges_file.path, *n, format!("expected `u, v`, found {l:?}"));
        let (a, b) = l.split_once(',').ok_or_else(bad)?;
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        for x in [a, b] {
            if x == 0 || x > n_nodes {
                return Err(IoError::parse(
                    &edges_file.path,
                    *n,
                    format!("node {x} does not exist ({n_nodes} nodes)"),
                ));
            }
        }
        let (a, b) = (a - 1, b - 1);
        if graph_of[a] != graph_of[b] {
            return Err(IoError::parse(
                &edges_file.path,
                *n,
                format!("edge joins graphs {} and {}", graph_of[a] + 1, graph_of[b] + 1),
            ));
        }
        graphs[graph_of[a]]
            .add_edge(local[a], local[b], edge_types[k])
            .map_err(|e| IoError::parse(&edges_file.path, *n, e.to_string()))?;
    }

    Ok(GraphDatabase::new(graphs, graph_labels.into_iter().map(Some).collect()))
}

/// Writes `db` as dataset `name` in `dir`, which must exist.
///
/// Node types go to the node-label file and features to the attribute file,
/// so reloading gives back the same graphs. Edges are written in both
/// directions; edge labels only when some edge has a non-zero type. Graphs
/// without a dataset label are written with label 0.
pub fn save_tu_dataset(db: &GraphDatabase, dir: &Path, name: &str) -> Result<(), IoError> {
    let (mut a, mut indicator, mut labels, mut node_labels, mut attributes, mut edge_labels) =
        (String::new(), String::new(), String::new(), String::new(), String::new(), String::new());
    let mut offset = 0;
    let mut typed_edges = false;
    for (gid, g) in db.graphs.iter().enumerate() {
        writeln!(labels, "{}", db.dataset_labels[gid].unwrap_or(0)).unwrap();
        for v in g.nodes() {
            writeln!(indicator, "{}", gid + 1).unwrap();
            writeln!(node_labels, "{}", g.node_type(v)).unwrap();
            let row: Vec<String> = g.features(v).iter().map(f64::to_string).collect();
            writeln!(attributes, "{}", row.join(", ")).unwrap();
        }
        for e in g.edge_list() {
            typed_edges |= e.edge_type != 0;
            for (x, y) in [(e.u, e.v), (e.v, e.u)] {
                writeln!(a, "{}, {}", offset + x + 1, offset + y + 1).unwrap();
                writeln!(edge_labels, "{}", e.edge_type).unwrap();
            }
        }
        offset += g.node_count();
    }
    write_string(&file(dir, name, "A"), &a)?;
    write_string(&file(dir, name, "graph_indicator"), &indicator)?;
    write_string(&file(dir, name, "graph_labels"), &labels)?;
    write_string(&file(dir, name, "node_labels"), &node_labels)?;
    write_string(&file(dir, name, "node_attributes"), &attributes)?;
    if typed_edges {
        write_string(&file(dir, name, "edge_labels"), &edge_labels)?;
    }
    Ok(())
}
