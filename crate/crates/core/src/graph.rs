//! Joint/bone graphs, symmetric normalization and the three-way neighbour partition.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighbour class relative to the body's gravity center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Centripetal,
    Root,
    Centrifugal,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Centripetal, Partition::Root, Partition::Centrifugal];

    pub fn index(self) -> usize {
        match self {
            Partition::Centripetal => 0,
            Partition::Root => 1,
            Partition::Centrifugal => 2,
        }
    }
}

/// Undirected skeleton graph. Self-loops are implicit and never listed in `edges`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyFile", into = "TopologyFile")]
pub struct GraphTopology {
    joint_count: usize,
    root: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Clone, Serialize, Deserialize)]
struct TopologyFile {
    joint_count: usize,
    root: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<TopologyFile> for GraphTopology {
    type Error = Error;

    fn try_from(file: TopologyFile) -> Result<Self> {
        let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(file.joint_count, file.root, &edges)
    }
}

impl From<GraphTopology> for TopologyFile {
    fn from(t: GraphTopology) -> Self {
        TopologyFile {
            joint_count: t.joint_count,
            root: t.root,
            edges: t.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl GraphTopology {
    pub fn new(joint_count: usize, root: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if joint_count == 0 {
            return Err(Error::InvalidInput("topology needs at least one joint".into()));
        }
        if root >= joint_count {
            return Err(Error::InvalidInput(format!("root {root} out of range for N={joint_count}")));
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i >= joint_count || j >= joint_count {
                return Err(Error::InvalidInput(format!("edge ({i},{j}) out of range for N={joint_count}")));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("explicit self-loop on joint {i}")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self {
            joint_count,
            root,
            edges: set.into_iter().collect(),
        })
    }

    /// The 15-joint upper-body-weighted skeleton used by the synthetic datasets.
    ///
    /// 0 pelvis, 1 spine (root), 2 neck, 3 head, 4-6 left shoulder/elbow/wrist,
    /// 7-9 right shoulder/elbow/wrist, 10-11 left/right hand, 12-13 left/right hip, 14 nose.
    pub fn upper_body_15() -> Self {
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (2, 4),
            (4, 5),
            (5, 6),
            (2, 7),
            (7, 8),
            (8, 9),
            (6, 10),
            (9, 11),
            (0, 12),
            (0, 13),
            (3, 14),
        ];
        Self::new(15, 1, &edges).expect("static topology is valid")
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Bone adjacency `A` (no self-loops).
    pub fn adjacency(&self) -> Array2<f64> {
        let n = self.joint_count;
        let mut a = Array2::zeros((n, n));
        for &(i, j) in &self.edges {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
        a
    }

    /// `A + I`.
    pub fn adjacency_with_self_loops(&self) -> Array2<f64> {
        let mut a = self.adjacency();
        for i in 0..self.joint_count {
            a[[i, i]] = 1.0;
        }
        a
    }

    /// Hop distance from `center`; `None` for joints in other components.
    pub fn hop_distances(&self, center: usize) -> Vec<Option<usize>> {
        let n = self.joint_count;
        let mut neighbours = vec![Vec::new(); n];
        for &(i, j) in &self.edges {
            neighbours[i].push(j);
            neighbours[j].push(i);
        }
        let mut dist = vec![None; n];
        dist[center] = Some(0);
        let mut queue = VecDeque::from([center]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("visited");
            for &v in &neighbours[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: TopologyFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::try_from(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&TopologyFile::from(self.clone())).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `D` the degree matrix of `A + I`.
pub fn normalized_adjacency(topology: &GraphTopology) -> Array2<f64> {
    let a = topology.adjacency_with_self_loops();
    let inv_sqrt: Vec<f64> = a.rows().into_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
    let n = topology.joint_count();
    Array2::from_shape_fn((n, n), |(i, j)| inv_sqrt[i] * a[[i, j]] * inv_sqrt[j])
}

/// `A + I` split into centripetal / root / centrifugal subsets.
///
/// Entry `(i, j)` of a subset is 1 when joint `j` is a neighbour of `i` in that
/// class as seen from `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePartition {
    gravity_center: usize,
    subsets: [Array2<f64>; 3],
}

impl EdgePartition {
    pub fn gravity_center(&self) -> usize {
        self.gravity_center
    }

    pub fn subset(&self, p: Partition) -> &Array2<f64> {
        &self.subsets[p.index()]
    }

    pub fn subsets(&self) -> &[Array2<f64>; 3] {
        &self.subsets
    }

    /// Class of neighbour `j` as seen from `i`, or `None` when not adjacent.
    pub fn classify(&self, i: usize, j: usize) -> Option<Partition> {
        Partition::ALL
            .into_iter()
            .find(|p| self.subsets[p.index()][[i, j]] != 0.0)
    }
}

/// Classify every entry of `A + I` by hop distance to `gravity_center`.
///
/// Equal distances (including two joints both unreachable from the center)
/// fall into the centripetal subset.
pub fn partition_edges(topology: &GraphTopology, gravity_center: usize) -> Result<EdgePartition> {
    let n = topology.joint_count();
    if gravity_center >= n {
        return Err(Error::InvalidInput(format!(
            "gravity center {gravity_center} out of range for N={n}"
        )));
    }
    let dist = topology.hop_distances(gravity_center);
    let far = |d: Option<usize>| d.unwrap_or(usize::MAX);
    let mut subsets = [Array2::zeros((n, n)), Array2::zeros((n, n)), Array2::zeros((n, n))];
    for i in 0..n {
        subsets[Partition::Root.index()][[i, i]] = 1.0;
    }
    for &(a, b) in topology.edges() {
        for (i, j) in [(a, b), (b, a)] {
            let class = if far(dist[j]) > far(dist[i]) {
                Partition::Centrifugal
            } else {
                Partition::Centripetal
            };
            subsets[class.index()][[i, j]] = 1.0;
        }
    }
    Ok(EdgePartition {
        gravity_center,
        subsets,
    })
}
