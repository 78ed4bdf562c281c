use serde::{Deserialize, Serialize};

use super::parser::SqlNode;

/// Flattened parse tree: node 0 is the statement root, edges run
/// parent -> child in pre-order discovery order.
///
/// `tokens` is empty until the graph is tokenized against a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    #[serde(rename = "tokens", default)]
    pub node_tokens: Vec<u32>,
}

impl AstGraph {
    pub fn from_tree(root: &SqlNode) -> Self {
        let mut graph = AstGraph {
            nodes: Vec::with_capacity(root.node_count()),
            edges: Vec::with_capacity(root.node_count().saturating_sub(1)),
            node_tokens: Vec::new(),
        };
        graph.push_subtree(root);
        graph
    }

    fn push_subtree(&mut self, node: &SqlNode) -> usize {
        let index = self.nodes.len();
        self.nodes.push(node.label.clone());
        for child in &node.children {
            let child_index = self.push_subtree(child);
            self.edges.push((index, child_index));
        }
        index
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Checks the tree shape: edges in range, |E| = |V| - 1, one root,
    /// every other node with exactly one parent.
    pub fn is_tree(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 || self.edges.len() != n - 1 {
            return false;
        }
        let mut parents = vec![0usize; n];
        for &(p, c) in &self.edges {
            if p >= n || c >= n {
                return false;
            }
            parents[c] += 1;
        }
        parents[0] == 0 && parents.iter().skip(1).all(|&count| count == 1)
    }
}
