use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Node cap for brute-force adjustment-set enumeration.
pub const MAX_ENUMERATION_NODES: usize = 20;

/// Directed acyclic graph over labelled nodes. Node order is the declaration
/// order and is used for every ordered output.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Dag {
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Self> {
        let labels: Vec<String> = nodes.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidGraph(format!("duplicate node `{l}`")));
            }
        }
        let lookup = |s: &str| {
            labels.iter().position(|l| l == s).ok_or_else(|| Error::UnknownNode(s.to_string()))
        };
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (from, to) in edges {
            let e = (lookup(from.as_ref())?, lookup(to.as_ref())?);
            if e.0 == e.1 {
                return Err(Error::InvalidGraph(format!("self-loop on `{}`", labels[e.0])));
            }
            if idx_edges.contains(&e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {} -> {}",
                    labels[e.0], labels[e.1]
                )));
            }
            idx_edges.push(e);
        }
        Self::from_indices(labels, idx_edges)
    }

    fn from_indices(labels: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in &edges {
            parents[c].push(p);
            children[p].push(c);
        }
        // Kahn's algorithm, smallest ready index first
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(pos) = ready.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i) {
            let v = ready.swap_remove(pos);
            topo.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if topo.len() != n {
            return Err(Error::CyclicGraph);
        }
        Ok(Self { labels, edges, parents, children, topo })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parents(&self, idx: usize) -> &[usize] {
        &self.parents[idx]
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    /// Copy of the graph with every edge leaving `node` deleted.
    pub fn without_edges_out_of(&self, node: usize) -> Dag {
        let edges = self.edges.iter().copied().filter(|&(p, _)| p != node).collect();
        Self::from_indices(self.labels.clone(), edges).expect("edge deletion keeps a DAG acyclic")
    }

    /// Strict descendants of `node` as a mask.
    pub fn descendant_mask(&self, node: usize) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack: Vec<usize> = self.children[node].clone();
        while let Some(v) = stack.pop() {
            if !mask[v] {
                mask[v] = true;
                stack.extend(&self.children[v]);
            }
        }
        mask
    }

    /// `seeds` together with all their ancestors, as a mask.
    pub fn ancestor_mask(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if !mask[v] {
                mask[v] = true;
                stack.extend(&self.parents[v]);
            }
        }
        mask
    }

    /// Nodes d-connected to `source` given `given`, by the reachable-ball
    /// traversal over (node, direction) states.
    fn d_connected_from(&self, source: usize, given: &[bool]) -> Vec<bool> {
        let given_idx: Vec<usize> = (0..self.len()).filter(|&i| given[i]).collect();
        let has_given_descendant = self.ancestor_mask(&given_idx);

        // direction: true = arrived from a child (moving up), false = from a parent
        let mut visited = vec![[false; 2]; self.len()];
        let mut reachable = vec![false; self.len()];
        let mut queue = VecDeque::from([(source, true)]);
        while let Some((v, up)) = queue.pop_front() {
            if visited[v][up as usize] {
                continue;
            }
            visited[v][up as usize] = true;
            if !given[v] {
                reachable[v] = true;
            }
            if up {
                if !given[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !given[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if has_given_descendant[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        reachable
    }

    fn d_separated_idx(&self, a: usize, b: usize, given: &[usize]) -> bool {
        let mut mask = vec![false; self.len()];
        for &g in given {
            mask[g] = true;
        }
        !self.d_connected_from(a, &mask)[b]
    }
}

/// Strict descendants of `node`, in node order.
pub fn descendants(dag: &Dag, node: &str) -> Result<Vec<String>> {
    let idx = dag.index_of(node)?;
    let mask = dag.descendant_mask(idx);
    Ok((0..dag.len()).filter(|&i| mask[i]).map(|i| dag.labels[i].clone()).collect())
}

fn check_disjoint(dag: &Dag, a: usize, b: usize, s: &[usize]) -> Result<()> {
    if a == b {
        return Err(Error::OverlappingArguments(format!(
            "`{}` given as both endpoints",
            dag.labels[a]
        )));
    }
    if let Some(&x) = s.iter().find(|&&x| x == a || x == b) {
        return Err(Error::OverlappingArguments(format!(
            "`{}` is an endpoint and in the conditioning set",
            dag.labels[x]
        )));
    }
    Ok(())
}

/// Whether every path between `a` and `b` is blocked by `s`: a chain or fork
/// node on the path lies in `s`, or a collider on the path lies outside `s`
/// with no descendant in `s`.
pub fn d_separated<S: AsRef<str>>(dag: &Dag, a: &str, b: &str, s: &[S]) -> Result<bool> {
    let (ai, bi) = (dag.index_of(a)?, dag.index_of(b)?);
    let si = dag.indices_of(s)?;
    check_disjoint(dag, ai, bi, &si)?;
    Ok(dag.d_separated_idx(ai, bi, &si))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackdoorVerdict {
    /// No member of the set descends from the cause.
    pub no_descendants: bool,
    /// The set blocks every path into the cause.
    pub blocks_backdoor_paths: bool,
    /// Members of the set that descend from the cause.
    pub offending_descendants: Vec<String>,
}

impl BackdoorVerdict {
    pub fn admissible(&self) -> bool {
        self.no_descendants && self.blocks_backdoor_paths
    }
}

/// Checks both backdoor conditions for adjusting the effect of `cause` on
/// `effect` by `s`. Blocking is tested as d-separation in the graph with the
/// cause's outgoing edges removed, which keeps exactly the paths that enter
/// the cause.
pub fn backdoor_admissible<S: AsRef<str>>(
    dag: &Dag,
    cause: &str,
    effect: &str,
    s: &[S],
) -> Result<BackdoorVerdict> {
    let (ci, ei) = (dag.index_of(cause)?, dag.index_of(effect)?);
    let si = dag.indices_of(s)?;
    check_disjoint(dag, ci, ei, &si)?;
    Ok(verdict(dag, ci, ei, &si))
}

fn verdict(dag: &Dag, cause: usize, effect: usize, s: &[usize]) -> BackdoorVerdict {
    let desc = dag.descendant_mask(cause);
    let offending: Vec<String> =
        s.iter().filter(|&&x| desc[x]).map(|&x| dag.labels[x].clone()).collect();
    let pruned = dag.without_edges_out_of(cause);
    BackdoorVerdict {
        no_descendants: offending.is_empty(),
        blocks_backdoor_paths: pruned.d_separated_idx(cause, effect, s),
        offending_descendants: offending,
    }
}

/// All inclusion-minimal backdoor-admissible sets, by exhaustive enumeration
/// over non-descendants of the cause. Sets are listed in node order, sorted by
/// size and then lexicographically by node position.
pub fn minimal_backdoor_sets(dag: &Dag, cause: &str, effect: &str) -> Result<Vec<Vec<String>>> {
    if dag.len() > MAX_ENUMERATION_NODES {
        return Err(Error::GraphTooLarge(dag.len()));
    }
    let (ci, ei) = (dag.index_of(cause)?, dag.index_of(effect)?);
    check_disjoint(dag, ci, ei, &[])?;
    let desc = dag.descendant_mask(ci);
    let candidates: Vec<usize> =
        (0..dag.len()).filter(|&i| i != ci && i != ei && !desc[i]).collect();
    let pruned = dag.without_edges_out_of(ci);

    let mut masks: Vec<u32> = (0..1u32 << candidates.len()).collect();
    masks.sort_by_key(|m| m.count_ones());
    let mut minimal: Vec<u32> = Vec::new();
    for mask in masks {
        if minimal.iter().any(|&m| m & mask == m) {
            continue;
        }
        let set: Vec<usize> =
            (0..candidates.len()).filter(|b| mask >> b & 1 == 1).map(|b| candidates[b]).collect();
        if pruned.d_separated_idx(ci, ei, &set) {
            minimal.push(mask);
        }
    }
    let mut sets: Vec<Vec<usize>> = minimal
        .into_iter()
        .map(|mask| {
            (0..candidates.len()).filter(|b| mask >> b & 1 == 1).map(|b| candidates[b]).collect()
        })
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(sets
        .into_iter()
        .map(|s| s.into_iter().map(|i| dag.labels[i].clone()).collect())
        .collect())
}
