//! Label hierarchy loading and partitioning.
//!
//! The hierarchy arrives as a flat node list (`id`, `name`, `parent_id`). A
//! synthetic root is placed above the top-level entries so that the tree
//! always has a single ancestor, names are lowercased, and levels are counted
//! from the root at level 1. Partitioning picks every node at a given level as
//! the parent of one subtree; each subtree becomes one label group.

use std::collections::HashMap;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl::{self, JsonlError};

pub const DEFAULT_ROOT_NAME: &str = "eurovoc";

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("taxonomy source is empty")]
    EmptySource,
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("node {child:?} refers to unknown parent {parent:?}")]
    DanglingParent { child: String, parent: String },
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("node {0:?} has an empty name")]
    EmptyName(String),
    #[error("level {level} is outside 1..={height}")]
    LevelOutOfRange { level: usize, height: usize },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// One line of the taxonomy file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    pub name: String,
    pub parent_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyNode {
    pub id: String,
    pub name: String,
    /// `None` only for the root.
    pub parent_id: Option<String>,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyTree {
    /// Root first, then source entries in file order.
    nodes: Vec<TaxonomyNode>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    synthetic_root: bool,
    height: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subtree {
    pub parent_id: String,
    /// Pre-order, parent first.
    pub member_ids: Vec<String>,
}

impl Subtree {
    pub fn node_count(&self) -> usize {
        self.member_ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionStats {
    pub parent_level: usize,
    pub subtree_count: usize,
    pub mean_nodes: Ratio<u64>,
    pub max_nodes: usize,
    pub min_nodes: usize,
}

impl PartitionStats {
    /// Mean node count rounded half away from zero, as shown in summary tables.
    pub fn mean_rounded(&self) -> u64 {
        self.mean_nodes.round().to_integer()
    }
}

/// Build a tree from node-list entries.
///
/// A synthetic root named `root_name` is inserted unless the source already
/// has exactly one top-level entry carrying that name.
pub fn load_taxonomy(entries: Vec<NodeEntry>, root_name: &str) -> Result<TaxonomyTree, TaxonomyError> {
    if entries.is_empty() {
        return Err(TaxonomyError::EmptySource);
    }
    let root_name = root_name.trim().to_lowercase();

    let mut index: HashMap<String, usize> = HashMap::with_capacity(entries.len() + 1);
    for (i, e) in entries.iter().enumerate() {
        if index.insert(e.id.clone(), i).is_some() {
            return Err(TaxonomyError::DuplicateId(e.id.clone()));
        }
    }
    for e in &entries {
        if let Some(parent) = &e.parent_id {
            if !index.contains_key(parent) {
                return Err(TaxonomyError::DanglingParent {
                    child: e.id.clone(),
                    parent: parent.clone(),
                });
            }
        }
    }

    let mut nodes = Vec::with_capacity(entries.len() + 1);
    for e in entries {
        let name = e.name.trim().to_lowercase();
        if name.is_empty() {
            return Err(TaxonomyError::EmptyName(e.id));
        }
        nodes.push(TaxonomyNode {
            id: e.id,
            name,
            parent_id: e.parent_id,
            level: 0,
        });
    }

    let top: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].parent_id.is_none()).collect();
    let synthetic_root = !(top.len() == 1 && nodes[top[0]].name == root_name);
    if synthetic_root {
        if index.contains_key(&root_name) {
            return Err(TaxonomyError::DuplicateId(root_name));
        }
        for &i in &top {
            nodes[i].parent_id = Some(root_name.clone());
        }
        nodes.insert(
            0,
            TaxonomyNode {
                id: root_name.clone(),
                name: root_name,
                parent_id: None,
                level: 0,
            },
        );
    } else {
        // Move the existing root to the front.
        let r = nodes.remove(top[0]);
        nodes.insert(0, r);
    }
    let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

    let mut children = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate().skip(1) {
        let p = index[n.parent_id.as_ref().expect("non-root has parent")];
        children[p].push(i);
    }
    // Children lists follow file order.

    let mut seen = 0usize;
    let mut height = 0usize;
    let mut stack = vec![(0usize, 1usize)];
    while let Some((i, level)) = stack.pop() {
        nodes[i].level = level;
        height = height.max(level);
        seen += 1;
        stack.extend(children[i].iter().map(|&c| (c, level + 1)));
    }
    if seen != nodes.len() {
        let start = nodes.iter().position(|n| n.level == 0).expect("unreached node");
        return Err(TaxonomyError::CycleDetected(cycle_path(&nodes, &index, start)));
    }

    Ok(TaxonomyTree {
        nodes,
        index,
        children,
        synthetic_root,
        height,
    })
}

fn cycle_path(nodes: &[TaxonomyNode], index: &HashMap<String, usize>, start: usize) -> Vec<String> {
    let mut order: Vec<usize> = Vec::new();
    let mut pos: HashMap<usize, usize> = HashMap::new();
    let mut cur = start;
    loop {
        if let Some(&at) = pos.get(&cur) {
            let mut path: Vec<String> = order[at..].iter().map(|&i| nodes[i].id.clone()).collect();
            path.push(nodes[cur].id.clone());
            return path;
        }
        pos.insert(cur, order.len());
        order.push(cur);
        match &nodes[cur].parent_id {
            Some(p) => cur = index[p],
            // Unreachable nodes always sit on or below a parent cycle.
            None => return order.iter().map(|&i| nodes[i].id.clone()).collect(),
        }
    }
}

impl TaxonomyTree {
    pub fn from_jsonl(path: &Path, root_name: &str) -> Result<Self, TaxonomyError> {
        load_taxonomy(jsonl::read_jsonl(path)?, root_name)
    }

    /// The canonical node list this tree was loaded from.
    pub fn to_entries(&self) -> Vec<NodeEntry> {
        let root_id = &self.nodes[0].id;
        let skip = usize::from(self.synthetic_root);
        self.nodes
            .iter()
            .skip(skip)
            .map(|n| NodeEntry {
                id: n.id.clone(),
                name: n.name.clone(),
                parent_id: n.parent_id.clone().filter(|p| !(self.synthetic_root && p == root_id)),
            })
            .collect()
    }

    pub fn root(&self) -> &TaxonomyNode {
        &self.nodes[0]
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&TaxonomyNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn children(&self, id: &str) -> impl Iterator<Item = &TaxonomyNode> + '_ {
        let kids = self.index.get(id).map(|&i| self.children[i].as_slice()).unwrap_or(&[]);
        kids.iter().map(move |&c| &self.nodes[c])
    }

    fn preorder_from(&self, start: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.children[i].iter().rev());
        }
        out
    }

    /// Every node in pre-order with source child ordering.
    pub fn preorder(&self) -> impl Iterator<Item = &TaxonomyNode> + '_ {
        self.preorder_from(0).into_iter().map(move |i| &self.nodes[i])
    }

    fn check_level(&self, level: usize) -> Result<(), TaxonomyError> {
        if level == 0 || level > self.height {
            return Err(TaxonomyError::LevelOutOfRange {
                level,
                height: self.height,
            });
        }
        Ok(())
    }

    /// One subtree per node at `level`, in pre-order of their parents.
    pub fn subtrees_at_level(&self, level: usize) -> Result<Vec<Subtree>, TaxonomyError> {
        self.check_level(level)?;
        Ok(self
            .preorder_from(0)
            .into_iter()
            .filter(|&i| self.nodes[i].level == level)
            .map(|i| Subtree {
                parent_id: self.nodes[i].id.clone(),
                member_ids: self.preorder_from(i).into_iter().map(|m| self.nodes[m].id.clone()).collect(),
            })
            .collect())
    }

    pub fn partition_stats(&self, level: usize) -> Result<PartitionStats, TaxonomyError> {
        let subtrees = self.subtrees_at_level(level)?;
        // A valid level always has at least one node on it.
        let counts: Vec<usize> = subtrees.iter().map(Subtree::node_count).collect();
        let total: usize = counts.iter().sum();
        Ok(PartitionStats {
            parent_level: level,
            subtree_count: counts.len(),
            mean_nodes: Ratio::new(total as u64, counts.len() as u64),
            max_nodes: counts.iter().copied().max().unwrap_or(0),
            min_nodes: counts.iter().copied().min().unwrap_or(0),
        })
    }

    /// Ids of every node whose name equals `name` case-insensitively, pre-order.
    pub fn find_concept(&self, name: &str) -> Vec<&str> {
        let wanted = name.trim().to_lowercase();
        self.preorder()
            .filter(|n| n.name == wanted)
            .map(|n| n.id.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, name: &str, parent: Option<&str>) -> NodeEntry {
        NodeEntry {
            id: id.into(),
            name: name.into(),
            parent_id: parent.map(Into::into),
        }
    }

    fn ab_tree() -> TaxonomyTree {
        load_taxonomy(
            vec![
                entry("A", "A", None),
                entry("a1", "a1", Some("A")),
                entry("a2", "a2", Some("A")),
                entry("B", "B", None),
            ],
            DEFAULT_ROOT_NAME,
        )
        .unwrap()
    }

    #[test]
    fn single_entry_gets_root() {
        let t = load_taxonomy(vec![entry("a", "X", None)], DEFAULT_ROOT_NAME).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.root().name, "eurovoc");
        assert_eq!(t.root().level, 1);
        let x = t.node("a").unwrap();
        assert_eq!(x.name, "x");
        assert_eq!(x.level, 2);
        assert_eq!(t.height(), 2);
    }

    #[test]
    fn chain_levels() {
        let t = load_taxonomy(
            vec![entry("a", "a", None), entry("b", "b", Some("a")), entry("c", "c", Some("b"))],
            DEFAULT_ROOT_NAME,
        )
        .unwrap();
        let levels: Vec<usize> = ["a", "b", "c"].iter().map(|id| t.node(id).unwrap().level).collect();
        assert_eq!(levels, vec![2, 3, 4]);
        assert_eq!(t.height(), 4);
    }

    #[test]
    fn existing_root_is_reused() {
        let t = load_taxonomy(
            vec![entry("r", "EuroVoc", None), entry("a", "a", Some("r"))],
            DEFAULT_ROOT_NAME,
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.root().id, "r");
        assert_eq!(t.to_entries()[0].parent_id, None);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(load_taxonomy(vec![], "r"), Err(TaxonomyError::EmptySource)));
        assert!(matches!(
            load_taxonomy(vec![entry("a", "a", None), entry("a", "b", None)], "r"),
            Err(TaxonomyError::DuplicateId(id)) if id == "a"
        ));
        assert!(matches!(
            load_taxonomy(vec![entry("a", "a", Some("zz"))], "r"),
            Err(TaxonomyError::DanglingParent { parent, .. }) if parent == "zz"
        ));
        assert!(matches!(
            load_taxonomy(vec![entry("a", "  ", None)], "r"),
            Err(TaxonomyError::EmptyName(_))
        ));
        let cyc = load_taxonomy(
            vec![
                entry("top", "top", None),
                entry("x", "x", Some("y")),
                entry("y", "y", Some("x")),
            ],
            "r",
        );
        match cyc {
            Err(TaxonomyError::CycleDetected(path)) => {
                assert_eq!(path.first(), path.last());
                assert!(path.contains(&"x".to_string()) && path.contains(&"y".to_string()));
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_root_id_collision() {
        assert!(matches!(
            load_taxonomy(vec![entry("eurovoc", "a", None), entry("b", "b", None)], "eurovoc"),
            Err(TaxonomyError::DuplicateId(_))
        ));
    }

    #[test]
    fn subtrees_of_synthetic_tree() {
        let t = ab_tree();
        let st = t.subtrees_at_level(2).unwrap();
        assert_eq!(st.len(), 2);
        assert_eq!(st[0].member_ids, vec!["A", "a1", "a2"]);
        assert_eq!(st[1].member_ids, vec!["B"]);

        let all = t.subtrees_at_level(1).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].node_count(), t.len());

        assert!(matches!(t.subtrees_at_level(0), Err(TaxonomyError::LevelOutOfRange { .. })));
        assert!(matches!(t.subtrees_at_level(4), Err(TaxonomyError::LevelOutOfRange { .. })));
    }

    #[test]
    fn stats_of_synthetic_tree() {
        let s = ab_tree().partition_stats(2).unwrap();
        assert_eq!(s.subtree_count, 2);
        assert_eq!(s.mean_nodes, Ratio::from_integer(2));
        assert_eq!((s.max_nodes, s.min_nodes), (3, 1));

        let two = load_taxonomy(vec![entry("a", "X", None)], DEFAULT_ROOT_NAME).unwrap();
        let s = two.partition_stats(2).unwrap();
        assert_eq!((s.subtree_count, s.max_nodes, s.min_nodes), (1, 1, 1));
        assert_eq!(s.mean_rounded(), 1);
    }

    #[test]
    fn find_concept_cases() {
        let t = load_taxonomy(
            vec![
                entry("g", "geo", None),
                entry("p1", "Paris", Some("g")),
                entry("o", "other", None),
                entry("p2", "paris", Some("o")),
            ],
            DEFAULT_ROOT_NAME,
        )
        .unwrap();
        assert_eq!(t.find_concept("PARIS"), vec!["p1", "p2"]);
        assert!(t.find_concept("london").is_empty());
    }

    #[test]
    fn entries_round_trip() {
        let t = ab_tree();
        let again = load_taxonomy(t.to_entries(), DEFAULT_ROOT_NAME).unwrap();
        assert_eq!(again, t);
    }
}
