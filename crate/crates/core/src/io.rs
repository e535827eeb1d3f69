//! JSON file formats. Vertices are 1-indexed on disk.
//!
//! ```json
//! {"n": 4, "edges": [[1, 2], [1, 3], [2, 3], [1, 4]]}
//! {"graph": {...}, "omega": [...], "coupling": {"scalar": 2.0}}
//! {"graph": {...}, "omega": [...], "coupling": {"edges": [[1, 2, 0.8], ...]}}
//! {"phases": [0.0, 1.57, -1.57]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{mean_zero_shift, CouplingSpec, KuramotoSystem, PhaseState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingFile {
    Scalar(f64),
    Edges(Vec<(usize, usize, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub graph: GraphFile,
    pub omega: Vec<f64>,
    /// Optional for commands that only need the graph and frequencies;
    /// treated as zero coupling when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitFile {
    pub phases: Vec<f64>,
}

fn to_zero_based(n: usize, i: usize, j: usize) -> Result<(usize, usize)> {
    if i == 0 || j == 0 || i > n || j > n {
        return Err(Error::InvalidGraph(format!(
            "edge [{i}, {j}] outside 1..={n}"
        )));
    }
    Ok((i - 1, j - 1))
}

impl GraphFile {
    pub fn to_graph(&self) -> Result<Graph> {
        let edges = self
            .edges
            .iter()
            .map(|&[i, j]| to_zero_based(self.n, i, j))
            .collect::<Result<Vec<_>>>()?;
        Graph::new(self.n, edges)
    }

    pub fn from_graph(g: &Graph) -> Self {
        Self {
            n: g.n(),
            edges: g.edges().map(|(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

impl SystemFile {
    pub fn to_system(&self) -> Result<KuramotoSystem> {
        let graph = self.graph.to_graph()?;
        let spec = match &self.coupling {
            None => CouplingSpec::Scalar(0.0),
            Some(CouplingFile::Scalar(k)) => CouplingSpec::Scalar(*k),
            Some(CouplingFile::Edges(list)) => CouplingSpec::PerEdge(
                list.iter()
                    .map(|&(i, j, k)| to_zero_based(graph.n(), i, j).map(|(a, b)| (a, b, k)))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        KuramotoSystem::new(graph, self.omega.clone(), &spec)
    }

    pub fn from_system(sys: &KuramotoSystem) -> Self {
        Self {
            graph: GraphFile::from_graph(sys.graph()),
            omega: sys.omega().to_vec(),
            coupling: Some(CouplingFile::Edges(
                sys.edge_couplings()
                    .into_iter()
                    .map(|((i, j), k)| (i + 1, j + 1, k))
                    .collect(),
            )),
        }
    }
}

impl InitFile {
    /// Initial state, shifted to zero mean.
    pub fn to_state(&self) -> PhaseState {
        mean_zero_shift(&self.phases)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
