//! Graph datasets and the TUDataset text-format loader.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Label};
use crate::linalg::RMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification { num_classes: usize },
    Regression,
}

impl Task {
    /// Width of the model output for this task.
    pub fn output_dim(&self) -> usize {
        match self {
            Task::Classification { num_classes } => *num_classes,
            Task::Regression => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    name: String,
    task: Task,
    graphs: Vec<Graph>,
}

impl Dataset {
    /// Checks that every graph is labelled consistently with `task` and that
    /// all graphs share one feature dimension.
    pub fn new(name: impl Into<String>, task: Task, graphs: Vec<Graph>) -> Result<Dataset> {
        if let Some(first) = graphs.first() {
            let f = first.feature_dim();
            if let Some(bad) = graphs.iter().position(|g| g.feature_dim() != f) {
                return Err(Error::Dataset(format!(
                    "graph {bad} has {} features, expected {f}",
                    graphs[bad].feature_dim()
                )));
            }
        }
        for (i, g) in graphs.iter().enumerate() {
            match (task, g.label()) {
                (Task::Classification { num_classes }, Some(Label::Class(c))) if c < num_classes => {}
                (Task::Regression, Some(Label::Target(t))) if t.is_finite() => {}
                (_, label) => {
                    return Err(Error::Dataset(format!(
                        "graph {i} label {label:?} does not fit task {task:?}"
                    )))
                }
            }
        }
        Ok(Dataset {
            name: name.into(),
            task,
            graphs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }

    pub fn max_degree(&self) -> usize {
        self.graphs.iter().map(Graph::max_degree).max().unwrap_or(0)
    }

    pub fn max_nodes(&self) -> usize {
        self.graphs.iter().map(Graph::n).max().unwrap_or(0)
    }

    /// Fraction of graphs carrying the most frequent class; `None` for regression.
    pub fn majority_fraction(&self) -> Option<f64> {
        let Task::Classification { num_classes } = self.task else {
            return None;
        };
        if self.graphs.is_empty() {
            return None;
        }
        let mut counts = vec![0usize; num_classes];
        for g in &self.graphs {
            if let Some(Label::Class(c)) = g.label() {
                counts[c] += 1;
            }
        }
        Some(*counts.iter().max().unwrap() as f64 / self.graphs.len() as f64)
    }

    /// Keep only the graphs accepted by `keep`, preserving order.
    pub fn filtered(&self, keep: impl Fn(&Graph) -> bool) -> Dataset {
        Dataset {
            name: self.name.clone(),
            task: self.task,
            graphs: self.graphs.iter().filter(|g| keep(g)).cloned().collect(),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            task: self.task,
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
        }
    }
}

/// Seeded shuffle, then the first `⌈fraction · len⌉` graphs train and the rest test.
pub fn split_dataset(d: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if d.len() < 2 {
        return Err(Error::InvalidArgument("splitting needs at least two graphs".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction {fraction} outside (0, 1)")));
    }
    // Guard against products like 0.7 * 10 = 7.000000000000001.
    let n_train = (fraction * d.len() as f64 - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= d.len() {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {} graphs leaves one side empty",
            d.len()
        )));
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((d.subset(&order[..n_train]), d.subset(&order[n_train..])))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_ints(path: &Path, text: &str) -> Result<Vec<Vec<i64>>> {
    let name = path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default();
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(lineno, line)| {
            line.split(',')
                .map(|tok| {
                    tok.trim().parse::<i64>().map_err(|_| {
                        Error::Dataset(format!(
                            "{name}:{}: `{}` is not an integer",
                            lineno + 1,
                            tok.trim()
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

fn single_column(path: &Path, rows: Vec<Vec<i64>>) -> Result<Vec<i64>> {
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| match r.as_slice() {
            [x] => Ok(*x),
            _ => Err(Error::Dataset(format!(
                "{}: line {} should hold one value",
                path.display(),
                i + 1
            ))),
        })
        .collect()
}

/// Load `<dir>/<name>_*.txt` in the TUDataset layout.
///
/// Node labels are one-hot encoded (columns in ascending label order, shared
/// across the dataset). Without a node-label file every node gets a single
/// constant feature. Graph labels are remapped to `0..num_classes` in
/// ascending order of their raw values. Edges are made undirected and
/// duplicates collapsed.
pub fn load_tudataset(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let a_path = file("A");
    let ind_path = file("graph_indicator");
    let lab_path = file("graph_labels");
    let node_lab_path = file("node_labels");

    let indicator = single_column(&ind_path, parse_ints(&ind_path, &read_file(&ind_path)?)?)?;
    let edges_raw = parse_ints(&a_path, &read_file(&a_path)?)?;
    let graph_labels = single_column(&lab_path, parse_ints(&lab_path, &read_file(&lab_path)?)?)?;
    let node_labels = if node_lab_path.exists() {
        let rows = parse_ints(&node_lab_path, &read_file(&node_lab_path)?)?;
        // Some datasets carry several label columns; the first is the node label.
        let first: Vec<i64> = rows
            .into_iter()
            .map(|r| {
                r.first()
                    .copied()
                    .ok_or_else(|| Error::Dataset("empty node label line".into()))
            })
            .collect::<Result<_>>()?;
        if first.len() != indicator.len() {
            return Err(Error::Dataset(format!(
                "{} node labels for {} nodes",
                first.len(),
                indicator.len()
            )));
        }
        Some(first)
    } else {
        None
    };

    let num_graphs = graph_labels.len();
    // Node ids are 1-based globally; map each to (graph, local index).
    let mut local = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; num_graphs];
    for (node, &gid) in indicator.iter().enumerate() {
        if gid < 1 || gid as usize > num_graphs {
            return Err(Error::Dataset(format!(
                "node {} belongs to graph {gid}, but only {num_graphs} graph labels exist",
                node + 1
            )));
        }
        let g = gid as usize - 1;
        local.push((g, sizes[g]));
        sizes[g] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Dataset(format!("graph {} has no nodes", empty + 1)));
    }

    let mut edge_sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); num_graphs];
    for (lineno, row) in edges_raw.iter().enumerate() {
        let &[a, b] = row.as_slice() else {
            return Err(Error::Dataset(format!(
                "{name}_A.txt:{}: expected a node pair",
                lineno + 1
            )));
        };
        let lookup = |x: i64| -> Result<(usize, usize)> {
            if x < 1 || x as usize > local.len() {
                return Err(Error::Dataset(format!(
                    "{name}_A.txt:{}: node {x} does not exist",
                    lineno + 1
                )));
            }
            Ok(local[x as usize - 1])
        };
        let (ga, la) = lookup(a)?;
        let (gb, lb) = lookup(b)?;
        if ga != gb {
            return Err(Error::Dataset(format!(
                "{name}_A.txt:{}: edge ({a}, {b}) joins graphs {} and {}",
                lineno + 1,
                ga + 1,
                gb + 1
            )));
        }
        edge_sets[ga].insert((la.min(lb), la.max(lb)));
    }

    let label_columns: BTreeMap<i64, usize> = match &node_labels {
        Some(labels) => labels
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(col, lab)| (lab, col))
            .collect(),
        None => BTreeMap::new(),
    };
    let f = label_columns.len().max(1);
    let mut features: Vec<RMatrix> = sizes.iter().map(|&s| RMatrix::zeros(s, f)).collect();
    for (node, &(g, li)) in local.iter().enumerate() {
        let col = match &node_labels {
            Some(labels) => label_columns[&labels[node]],
            None => 0,
        };
        features[g][(li, col)] = 1.0;
    }

    let classes: HashMap<i64, usize> = graph_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(c, raw)| (raw, c))
        .collect();
    let task = Task::Classification {
        num_classes: classes.len(),
    };

    let mut graphs = Vec::with_capacity(num_graphs);
    for (g, feats) in features.into_iter().enumerate() {
        let edges: Vec<(usize, usize)> = edge_sets[g].iter().copied().collect();
        let graph = Graph::build(&edges, sizes[g], feats)
            .map_err(|e| Error::Dataset(format!("graph {}: {e}", g + 1)))?
            .with_label(Label::Class(classes[&graph_labels[g]]));
        graphs.push(graph);
    }
    Dataset::new(name, task, graphs)
}
