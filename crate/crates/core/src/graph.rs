//! Reciprocal graphs: mixed graphs with directed edges (cycles allowed) and
//! undirected edges, subject to the constraint that no directed edge joins
//! two vertices of the same path component.
//!
//! Vertices are indexed 1..=p. The module provides the graph-theoretic
//! machinery needed for Markov queries: path components, boundaries,
//! anterior closures, moralization, separation, and enumeration of the
//! conditional independencies implied by the global Markov property.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RgmError};

/// Vertex cap for the exponential enumeration operations
/// ([`ReciprocalGraph::implied_independencies`], [`ReciprocalGraph::markov_equivalent`]).
pub const ENUMERATION_CAP: usize = 8;

/// A set of vertex indices in `1..=p`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexSet {
    members: BTreeSet<usize>,
}

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self {
            members: iter.into_iter().collect(),
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.contains(&v)
    }

    pub fn insert(&mut self, v: usize) -> bool {
        self.members.insert(v)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        Self {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.members.is_disjoint(&other.members)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.members.is_subset(&other.members)
    }

    fn min_vertex(&self) -> Option<usize> {
        self.members.first().copied()
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSet::from_iter(iter)
    }
}

/// One conditional independence statement `Y_left ⊥ Y_right | Y_given`.
///
/// Canonical form: `min(left) < min(right)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Independence {
    pub left: VertexSet,
    pub right: VertexSet,
    pub given: VertexSet,
}

/// Serialized form of a graph: `{"p": .., "directed": [[i,j],..], "undirected": [[i,j],..]}`.
#[derive(Serialize, Deserialize)]
struct GraphJson {
    p: usize,
    directed: Vec<(usize, usize)>,
    undirected: Vec<(usize, usize)>,
}

/// A mixed graph on vertices `1..=p` with directed and undirected edge sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReciprocalGraph {
    p: usize,
    /// Ordered pairs `(i, j)` meaning `i → j`.
    directed: BTreeSet<(usize, usize)>,
    /// Unordered pairs stored as `(min, max)`.
    undirected: BTreeSet<(usize, usize)>,
}

impl ReciprocalGraph {
    /// Edgeless graph on `p` vertices.
    pub fn new(p: usize) -> Self {
        Self {
            p,
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        }
    }

    /// Builds a graph from edge lists, validating ranges, self-loops and
    /// directed/undirected collisions.
    pub fn with_edges<D, U>(p: usize, directed: D, undirected: U) -> Result<Self>
    where
        D: IntoIterator<Item = (usize, usize)>,
        U: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::new(p);
        for (i, j) in directed {
            g.add_directed(i, j)?;
        }
        for (i, j) in undirected {
            g.add_undirected(i, j)?;
        }
        Ok(g)
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v == 0 || v > self.p {
            return Err(RgmError::VertexOutOfRange {
                vertex: v,
                max: self.p,
            });
        }
        Ok(())
    }

    /// Adds the directed edge `from → to`.
    pub fn add_directed(&mut self, from: usize, to: usize) -> Result<()> {
        self.check_vertex(from)?;
        self.check_vertex(to)?;
        if from == to {
            return Err(RgmError::InvalidGraph(format!("self-loop at vertex {from}")));
        }
        let key = (from.min(to), from.max(to));
        if self.undirected.contains(&key) {
            return Err(RgmError::InvalidGraph(format!(
                "pair {{{from}, {to}}} is already undirected"
            )));
        }
        self.directed.insert((from, to));
        Ok(())
    }

    /// Adds the undirected edge `{a, b}`.
    pub fn add_undirected(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        if a == b {
            return Err(RgmError::InvalidGraph(format!("self-loop at vertex {a}")));
        }
        if self.directed.contains(&(a, b)) || self.directed.contains(&(b, a)) {
            return Err(RgmError::InvalidGraph(format!(
                "pair {{{a}, {b}}} is already directed"
            )));
        }
        self.undirected.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.p
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.directed.contains(&(from, to))
    }

    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&(a.min(b), a.max(b)))
    }

    /// Undirected neighbours of `v`.
    fn undirected_neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.undirected.iter().filter_map(move |&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
    }

    /// `bd(v)`: vertices with a directed edge into `v` or an undirected edge to `v`.
    fn vertex_boundary(&self, v: usize) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = self
            .directed
            .iter()
            .filter(|&&(_, to)| to == v)
            .map(|&(from, _)| from)
            .collect();
        out.extend(self.undirected_neighbours(v));
        out
    }

    /// Connected components of the undirected-edge subgraph.
    ///
    /// Every vertex lands in exactly one component; isolated vertices are
    /// singletons. Components are returned sorted by their smallest member.
    pub fn path_components(&self) -> Vec<VertexSet> {
        let mut comp = vec![0usize; self.p + 1];
        let mut next = 0usize;
        for start in 1..=self.p {
            if comp[start] != 0 {
                continue;
            }
            next += 1;
            let mut stack = vec![start];
            comp[start] = next;
            while let Some(v) = stack.pop() {
                for u in self.undirected_neighbours(v) {
                    if comp[u] == 0 {
                        comp[u] = next;
                        stack.push(u);
                    }
                }
            }
        }
        let mut out = vec![VertexSet::new(); next];
        for v in 1..=self.p {
            out[comp[v] - 1].insert(v);
        }
        out
    }

    /// True iff no directed edge joins two vertices of the same path component.
    pub fn is_reciprocal(&self) -> bool {
        let comps = self.path_components();
        let mut comp_of = vec![0usize; self.p + 1];
        for (c, set) in comps.iter().enumerate() {
            for v in set.iter() {
                comp_of[v] = c;
            }
        }
        self.directed
            .iter()
            .all(|&(i, j)| comp_of[i] != comp_of[j])
    }

    /// `bd(S) = ⋃_{v∈S} bd(v) \ S`.
    pub fn boundary(&self, s: &VertexSet) -> Result<VertexSet> {
        for v in s.iter() {
            self.check_vertex(v)?;
        }
        let mut out = BTreeSet::new();
        for v in s.iter() {
            out.extend(self.vertex_boundary(v));
        }
        Ok(VertexSet {
            members: out.into_iter().filter(|v| !s.contains(*v)).collect(),
        })
    }

    /// Smallest anterior superset of `s`: close under the boundary operation
    /// until `bd(W) = ∅`.
    pub fn anterior_set(&self, s: &VertexSet) -> Result<VertexSet> {
        let mut w = s.clone();
        loop {
            let bd = self.boundary(&w)?;
            if bd.is_empty() {
                return Ok(w);
            }
            w = w.union(&bd);
        }
    }

    /// Moral graph: for each path component `C`, join all pairs within
    /// `bd(C)`, then replace every directed edge by an undirected one.
    ///
    /// For a graph with no undirected edges the path components are
    /// singletons, so this marries `bd(v)` per vertex — which coincides with
    /// DAG moralization when the graph is acyclic, and extends it to directed
    /// cycles. Rejects graphs that violate the reciprocal constraint.
    pub fn moralize(&self) -> Result<ReciprocalGraph> {
        if !self.is_reciprocal() {
            return Err(RgmError::InvalidGraph(
                "moralize requires a reciprocal graph".into(),
            ));
        }
        let mut out = ReciprocalGraph::new(self.p);
        out.undirected = self.undirected.clone();
        for comp in self.path_components() {
            let bd = self.boundary(&comp)?;
            let bd: Vec<usize> = bd.iter().collect();
            for (idx, &a) in bd.iter().enumerate() {
                for &b in &bd[idx + 1..] {
                    out.undirected.insert((a.min(b), a.max(b)));
                }
            }
        }
        for &(i, j) in &self.directed {
            out.undirected.insert((i.min(j), i.max(j)));
        }
        Ok(out)
    }

    /// Whether `v3` separates `v1` from `v2` in an undirected graph: every
    /// path between `v1` and `v2` intersects `v3`.
    pub fn separates(&self, v1: &VertexSet, v2: &VertexSet, v3: &VertexSet) -> Result<bool> {
        if !self.directed.is_empty() {
            return Err(RgmError::InvalidGraph(
                "separation queries require an undirected graph".into(),
            ));
        }
        for set in [v1, v2, v3] {
            for v in set.iter() {
                self.check_vertex(v)?;
            }
        }
        if let Some(v) = v1
            .iter()
            .find(|&v| v2.contains(v) || v3.contains(v))
            .or_else(|| v2.iter().find(|&v| v3.contains(v)))
        {
            return Err(RgmError::OverlappingSets(v));
        }
        let mut adj = vec![Vec::new(); self.p + 1];
        for &(a, b) in &self.undirected {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.p + 1];
        let mut stack: Vec<usize> = v1.iter().collect();
        for v in v1.iter() {
            seen[v] = true;
        }
        while let Some(v) = stack.pop() {
            if v2.contains(v) {
                return Ok(false);
            }
            for &u in &adj[v] {
                if !seen[u] && !v3.contains(u) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        Ok(true)
    }

    /// Induced subgraph on `keep`, preserving vertex labels.
    fn induced(&self, keep: &VertexSet) -> ReciprocalGraph {
        ReciprocalGraph {
            p: self.p,
            directed: self
                .directed
                .iter()
                .filter(|(i, j)| keep.contains(*i) && keep.contains(*j))
                .copied()
                .collect(),
            undirected: self
                .undirected
                .iter()
                .filter(|(i, j)| keep.contains(*i) && keep.contains(*j))
                .copied()
                .collect(),
        }
    }

    /// Moral graph of the induced subgraph on `keep`, as an adjacency list.
    ///
    /// Reciprocity is not re-checked here; this is the inner loop of the
    /// global Markov query.
    fn induced_moral_adjacency(&self, keep: &VertexSet) -> Vec<BTreeSet<usize>> {
        let sub = self.induced(keep);
        let mut adj = vec![BTreeSet::new(); self.p + 1];
        let join = |a: usize, b: usize, adj: &mut Vec<BTreeSet<usize>>| {
            adj[a].insert(b);
            adj[b].insert(a);
        };
        for &(a, b) in &sub.undirected {
            join(a, b, &mut adj);
        }
        for &(i, j) in &sub.directed {
            join(i, j, &mut adj);
        }
        for comp in sub.path_components() {
            // skip components entirely outside `keep`
            if !comp.iter().any(|v| keep.contains(v)) {
                continue;
            }
            let inside: VertexSet = comp.iter().filter(|&v| keep.contains(v)).collect();
            let bd = sub.boundary(&inside).expect("vertices validated");
            let bd: Vec<usize> = bd.iter().collect();
            for (idx, &a) in bd.iter().enumerate() {
                for &b in &bd[idx + 1..] {
                    join(a, b, &mut adj);
                }
            }
        }
        adj
    }

    /// Global Markov query: does `given` separate `left` from `right` in the
    /// moral graph of the anterior closure of `left ∪ right ∪ given`?
    pub fn markov_separated(
        &self,
        left: &VertexSet,
        right: &VertexSet,
        given: &VertexSet,
    ) -> Result<bool> {
        if let Some(v) = left
            .iter()
            .find(|&v| right.contains(v) || given.contains(v))
            .or_else(|| right.iter().find(|&v| given.contains(v)))
        {
            return Err(RgmError::OverlappingSets(v));
        }
        let all = left.union(right).union(given);
        let anterior = self.anterior_set(&all)?;
        let adj = self.induced_moral_adjacency(&anterior);
        // BFS from `left` within the anterior set, avoiding `given`.
        let mut seen = vec![false; self.p + 1];
        let mut stack: Vec<usize> = left.iter().collect();
        for v in left.iter() {
            seen[v] = true;
        }
        while let Some(v) = stack.pop() {
            if right.contains(v) {
                return Ok(false);
            }
            for &u in &adj[v] {
                if !seen[u] && !given.contains(u) && anterior.contains(u) {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        Ok(true)
    }

    /// All conditional independencies implied by the global Markov property:
    /// triples of disjoint `V1`, `V2` (nonempty) and `V3` (possibly empty)
    /// with `min(V1) < min(V2)`.
    ///
    /// Enumeration is exponential (each vertex takes one of four roles), so
    /// the graph must have at most [`ENUMERATION_CAP`] vertices.
    pub fn implied_independencies(&self) -> Result<Vec<Independence>> {
        if self.p > ENUMERATION_CAP {
            return Err(RgmError::SizeCap {
                actual: self.p,
                cap: ENUMERATION_CAP,
            });
        }
        let mut out = Vec::new();
        let total = 4usize.pow(self.p as u32);
        for code in 0..total {
            let mut left = VertexSet::new();
            let mut right = VertexSet::new();
            let mut given = VertexSet::new();
            let mut c = code;
            for v in 1..=self.p {
                match c % 4 {
                    1 => {
                        left.insert(v);
                    }
                    2 => {
                        right.insert(v);
                    }
                    3 => {
                        given.insert(v);
                    }
                    _ => {}
                }
                c /= 4;
            }
            if left.is_empty() || right.is_empty() {
                continue;
            }
            if left.min_vertex() > right.min_vertex() {
                continue; // canonical order; the swapped triple is equivalent
            }
            if self.markov_separated(&left, &right, &given)? {
                out.push(Independence { left, right, given });
            }
        }
        out.sort();
        Ok(out)
    }

    /// Two graphs are Markov equivalent iff they imply the same set of
    /// conditional independencies.
    pub fn markov_equivalent(&self, other: &ReciprocalGraph) -> Result<bool> {
        if self.p != other.p {
            return Err(RgmError::DimensionMismatch(format!(
                "vertex counts differ: {} vs {}",
                self.p, other.p
            )));
        }
        Ok(self.implied_independencies()? == other.implied_independencies()?)
    }

    /// JSON document `{"p": .., "directed": [[i,j],..], "undirected": [[i,j],..]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphJson {
            p: self.p,
            directed: self.directed.iter().copied().collect(),
            undirected: self.undirected.iter().copied().collect(),
        })
        .expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(text)?;
        Self::with_edges(raw.p, raw.directed, raw.undirected)
    }

    /// DOT export: directed edges as arrows, undirected edges as plain lines.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        writeln!(out, "digraph {name} {{").unwrap();
        for v in 1..=self.p {
            writeln!(out, "  {v};").unwrap();
        }
        for &(i, j) in &self.directed {
            writeln!(out, "  {i} -> {j};").unwrap();
        }
        for &(a, b) in &self.undirected {
            writeln!(out, "  {a} -> {b} [dir=none];").unwrap();
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Figure-1(a)-style graph: feedback loop 1⇄2 anchored by 3→1 and 4→2.
    fn feedback_with_anchors() -> ReciprocalGraph {
        ReciprocalGraph::with_edges(4, [(1, 2), (2, 1), (3, 1), (4, 2)], []).unwrap()
    }

    /// Figure-1(b)-style DAG: 3→1, 1→2, 4→2.
    fn dag_with_anchors() -> ReciprocalGraph {
        ReciprocalGraph::with_edges(4, [(3, 1), (1, 2), (4, 2)], []).unwrap()
    }

    fn vs<const N: usize>(v: [usize; N]) -> VertexSet {
        VertexSet::from_iter(v)
    }

    #[test]
    fn path_components_no_undirected_edges() {
        let g = ReciprocalGraph::with_edges(4, [(1, 2)], []).unwrap();
        let comps = g.path_components();
        assert_eq!(comps.len(), 4);
        for (k, c) in comps.iter().enumerate() {
            assert_eq!(*c, vs([k + 1]));
        }
    }

    #[test]
    fn path_components_sem_path_diagram() {
        // Six vertices, X1–X2 undirected: one doubleton and four singletons.
        let g = ReciprocalGraph::with_edges(6, [], [(3, 4)]).unwrap();
        let comps = g.path_components();
        assert_eq!(comps.len(), 5);
        assert!(comps.contains(&vs([3, 4])));
    }

    #[test]
    fn path_components_match_brute_force_reachability() {
        // Fixed 8-vertex graph; oracle = transitive closure of the
        // undirected adjacency relation.
        let und = [(1, 2), (2, 5), (3, 4), (6, 7)];
        let g = ReciprocalGraph::with_edges(8, [], und).unwrap();

        let mut reach = [[false; 9]; 9];
        for v in 1..=8 {
            reach[v][v] = true;
        }
        for &(a, b) in &und {
            reach[a][b] = true;
            reach[b][a] = true;
        }
        for k in 1..=8 {
            for i in 1..=8 {
                for j in 1..=8 {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        let comps = g.path_components();
        for i in 1..=8usize {
            for j in 1..=8usize {
                let same = comps.iter().any(|c| c.contains(i) && c.contains(j));
                assert_eq!(same, reach[i][j], "vertices {i},{j}");
            }
        }
    }

    #[test]
    fn reciprocal_violations() {
        // Directed edge cannot coexist with an undirected edge on one pair.
        let mut g = ReciprocalGraph::new(2);
        g.add_undirected(1, 2).unwrap();
        assert!(g.add_directed(1, 2).is_err());

        // Directed edge within a path component via an undirected chain.
        let g = ReciprocalGraph::with_edges(3, [(1, 3)], [(1, 2), (2, 3)]).unwrap();
        assert!(!g.is_reciprocal());

        assert!(feedback_with_anchors().is_reciprocal());
    }

    #[test]
    fn boundary_examples() {
        let g = feedback_with_anchors();
        assert!(g.boundary(&vs([])).unwrap().is_empty());
        assert_eq!(g.boundary(&vs([1])).unwrap(), vs([2, 3]));
        assert!(g.boundary(&vs([1, 2, 3, 4])).unwrap().is_empty());
    }

    #[test]
    fn anterior_set_examples() {
        let g = ReciprocalGraph::new(5);
        assert_eq!(g.anterior_set(&vs([2, 4])).unwrap(), vs([2, 4]));

        let g = dag_with_anchors();
        assert_eq!(g.anterior_set(&vs([2])).unwrap(), vs([1, 2, 3, 4]));
        assert_eq!(
            g.anterior_set(&vs([1, 2, 3, 4])).unwrap(),
            vs([1, 2, 3, 4])
        );
    }

    #[test]
    fn anterior_set_monotone_and_idempotent() {
        let g = feedback_with_anchors();
        let small = g.anterior_set(&vs([1])).unwrap();
        let large = g.anterior_set(&vs([1, 4])).unwrap();
        assert!(small.is_subset(&large));
        assert_eq!(g.anterior_set(&small).unwrap(), small);
    }

    #[test]
    fn moralize_collider() {
        // 3→1←4: parents married.
        let g = ReciprocalGraph::with_edges(4, [(3, 1), (4, 1)], []).unwrap();
        let m = g.moralize().unwrap();
        assert_eq!(m.directed_edges().count(), 0);
        assert!(m.has_undirected(3, 4));
        assert!(m.has_undirected(1, 3));
        assert!(m.has_undirected(1, 4));
        assert_eq!(m.undirected_edges().count(), 3);
    }

    #[test]
    fn moralize_feedback_loop_marries_per_vertex_boundaries() {
        // For 1⇄2 with anchors 3→1, 4→2 the per-vertex boundaries are
        // bd(1)={2,3} and bd(2)={1,4}, so 2–3 and 1–4 get married; 3 and 4
        // do not. This is what yields the paper-style independencies
        // 3⊥4 and 3⊥4|{1,2} and nothing else.
        let m = feedback_with_anchors().moralize().unwrap();
        assert!(m.has_undirected(2, 3));
        assert!(m.has_undirected(1, 4));
        assert!(!m.has_undirected(3, 4));
        assert!(m.has_undirected(1, 2));
        assert!(m.has_undirected(1, 3));
        assert!(m.has_undirected(2, 4));
    }

    #[test]
    fn moralize_undirected_only_is_fixed_point() {
        let g = ReciprocalGraph::with_edges(4, [], [(1, 2), (3, 4)]).unwrap();
        let m = g.moralize().unwrap();
        assert_eq!(m, g);
        assert_eq!(m.moralize().unwrap(), m);
    }

    #[test]
    fn moralize_idempotent_on_output() {
        let m = feedback_with_anchors().moralize().unwrap();
        assert_eq!(m.moralize().unwrap(), m);
    }

    #[test]
    fn moralize_rejects_non_reciprocal() {
        let g = ReciprocalGraph::with_edges(3, [(1, 3)], [(1, 2), (2, 3)]).unwrap();
        assert!(g.moralize().is_err());
    }

    #[test]
    fn separates_examples() {
        let g = ReciprocalGraph::with_edges(4, [], [(1, 2)]).unwrap();
        assert!(g.separates(&vs([3]), &vs([4]), &vs([])).unwrap());

        // Square 3–1, 1–2, 2–4: {1,2} cuts 3 from 4.
        let sq = ReciprocalGraph::with_edges(4, [], [(1, 3), (1, 2), (2, 4)]).unwrap();
        assert!(sq.separates(&vs([3]), &vs([4]), &vs([1, 2])).unwrap());
        assert!(!sq.separates(&vs([3]), &vs([1]), &vs([2])).unwrap());

        // Complete graph: nothing separates.
        let mut k4 = ReciprocalGraph::new(4);
        for a in 1..=4usize {
            for b in (a + 1)..=4 {
                k4.add_undirected(a, b).unwrap();
            }
        }
        assert!(!k4.separates(&vs([1]), &vs([2]), &vs([3, 4])).unwrap());
    }

    #[test]
    fn separates_rejects_overlap_and_directed() {
        let g = ReciprocalGraph::with_edges(3, [], [(1, 2)]).unwrap();
        assert!(g.separates(&vs([1]), &vs([1]), &vs([])).is_err());
        let d = ReciprocalGraph::with_edges(3, [(1, 2)], []).unwrap();
        assert!(d.separates(&vs([1]), &vs([2]), &vs([])).is_err());
    }

    #[test]
    fn separates_symmetric() {
        let sq = ReciprocalGraph::with_edges(4, [], [(1, 3), (1, 2), (2, 4)]).unwrap();
        for (a, b, c) in [(vs([3]), vs([4]), vs([1, 2])), (vs([3]), vs([2]), vs([1]))] {
            assert_eq!(
                sq.separates(&a, &b, &c).unwrap(),
                sq.separates(&b, &a, &c).unwrap()
            );
        }
    }

    #[test]
    fn feedback_anchored_graph_has_exactly_two_independencies() {
        let list = feedback_with_anchors().implied_independencies().unwrap();
        let singleton: Vec<&Independence> = list
            .iter()
            .filter(|ind| ind.left.len() == 1 && ind.right.len() == 1)
            .collect();
        assert_eq!(singleton.len(), 2);
        assert!(singleton.iter().any(|ind| ind.left == vs([3])
            && ind.right == vs([4])
            && ind.given == vs([])));
        assert!(singleton.iter().any(|ind| ind.left == vs([3])
            && ind.right == vs([4])
            && ind.given == vs([1, 2])));
    }

    #[test]
    fn two_vertex_graphs_all_markov_equivalent() {
        let e = ReciprocalGraph::with_edges(2, [(1, 2), (2, 1)], []).unwrap();
        let f = ReciprocalGraph::with_edges(2, [(1, 2)], []).unwrap();
        let g = ReciprocalGraph::with_edges(2, [(2, 1)], []).unwrap();
        let h = ReciprocalGraph::with_edges(2, [], [(1, 2)]).unwrap();
        let graphs = [&e, &f, &g, &h];
        for gr in graphs {
            assert!(gr.implied_independencies().unwrap().is_empty());
        }
        for a in graphs {
            for b in graphs {
                assert!(a.markov_equivalent(b).unwrap());
            }
        }
    }

    #[test]
    fn anchored_variants_pairwise_distinct() {
        // Feedback, 1→2, 2→1 and undirected variants (all anchored by
        // 3→1, 4→2) imply four different independence sets.
        let a = feedback_with_anchors();
        let b = dag_with_anchors();
        let c = ReciprocalGraph::with_edges(4, [(3, 1), (2, 1), (4, 2)], []).unwrap();
        let d = ReciprocalGraph::with_edges(4, [(3, 1), (4, 2)], [(1, 2)]).unwrap();
        let graphs = [&a, &b, &c, &d];
        for (i, x) in graphs.iter().enumerate() {
            for y in &graphs[i + 1..] {
                assert!(!x.markov_equivalent(y).unwrap());
            }
        }
    }

    #[test]
    fn edgeless_graph_full_independence() {
        let g = ReciprocalGraph::new(3);
        let list = g.implied_independencies().unwrap();
        // Count all disjoint canonical triples by brute force: 3 vertices,
        // roles {none, L, R, G}, L and R nonempty, min(L) < min(R).
        let mut expected = 0;
        for code in 0..64 {
            let roles: Vec<usize> = (0..3).map(|k| (code >> (2 * k)) & 3).collect();
            let l: Vec<usize> = (0..3).filter(|&k| roles[k] == 1).collect();
            let r: Vec<usize> = (0..3).filter(|&k| roles[k] == 2).collect();
            if !l.is_empty() && !r.is_empty() && l[0] < r[0] {
                expected += 1;
            }
        }
        assert_eq!(list.len(), expected);
    }

    #[test]
    fn size_cap_enforced() {
        let g = ReciprocalGraph::new(9);
        assert!(matches!(
            g.implied_independencies(),
            Err(RgmError::SizeCap { .. })
        ));
    }

    #[test]
    fn markov_equivalent_identity() {
        let g = dag_with_anchors();
        assert!(g.markov_equivalent(&g).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let g = feedback_with_anchors();
        let back = ReciprocalGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn dot_contains_both_edge_styles() {
        let g = ReciprocalGraph::with_edges(3, [(1, 2)], [(2, 3)]).unwrap();
        let dot = g.to_dot("g");
        assert!(dot.contains("1 -> 2;"));
        assert!(dot.contains("2 -> 3 [dir=none];"));
    }

    /// Brute-force d-separation for DAGs: enumerate all simple paths between
    /// the sets and apply the blocking rules directly.
    mod dsep_oracle {
        use super::*;

        fn descendants(g: &ReciprocalGraph, v: usize) -> VertexSet {
            let mut out = VertexSet::from_iter([v]);
            let mut stack = vec![v];
            while let Some(u) = stack.pop() {
                for (from, to) in g.directed_edges() {
                    if from == u && !out.contains(to) {
                        out.insert(to);
                        stack.push(to);
                    }
                }
            }
            out
        }

        /// Is the path v[0], .., v[k] blocked by z?
        fn blocked(g: &ReciprocalGraph, path: &[usize], z: &VertexSet) -> bool {
            for w in 1..path.len() - 1 {
                let (prev, mid, next) = (path[w - 1], path[w], path[w + 1]);
                let collider = g.has_directed(prev, mid) && g.has_directed(next, mid);
                if collider {
                    // open iff mid or one of its descendants is conditioned on
                    let open = descendants(g, mid).iter().any(|d| z.contains(d));
                    if !open {
                        return true;
                    }
                } else if z.contains(mid) {
                    return true;
                }
            }
            false
        }

        fn adjacent(g: &ReciprocalGraph, a: usize, b: usize) -> bool {
            g.has_directed(a, b) || g.has_directed(b, a)
        }

        /// DFS over all simple paths; reports true if any path ending in a
        /// target vertex is unblocked. Paths may pass through source or
        /// target vertices.
        fn connects(
            g: &ReciprocalGraph,
            targets: &VertexSet,
            z: &VertexSet,
            path: &mut Vec<usize>,
        ) -> bool {
            let last = *path.last().unwrap();
            if path.len() >= 2 && targets.contains(last) && !blocked(g, path, z) {
                return true;
            }
            for next in 1..=g.vertex_count() {
                if path.contains(&next) || !adjacent(g, last, next) {
                    continue;
                }
                path.push(next);
                let hit = connects(g, targets, z, path);
                path.pop();
                if hit {
                    return true;
                }
            }
            false
        }

        pub fn d_separated(
            g: &ReciprocalGraph,
            v1: &VertexSet,
            v2: &VertexSet,
            z: &VertexSet,
        ) -> bool {
            for start in v1.iter() {
                let mut path = vec![start];
                if connects(g, v2, z, &mut path) {
                    return false;
                }
            }
            true
        }
    }

    #[test]
    fn dag_markov_queries_match_d_separation() {
        // Deterministic batch of DAGs on up to 6 vertices: edges (i, j)
        // with i < j included from a bitmask pattern.
        let mut checked = 0usize;
        for p in 3..=6usize {
            let pairs: Vec<(usize, usize)> = (1..=p)
                .flat_map(|i| ((i + 1)..=p).map(move |j| (i, j)))
                .collect();
            // a handful of structured patterns per size
            for pattern in [0x5u64, 0x9, 0x1e, 0x2b, 0x3d, 0x17, 0x3f] {
                let edges: Vec<(usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| pattern >> (k % 63) & 1 == 1)
                    .map(|(_, e)| *e)
                    .collect();
                let g = ReciprocalGraph::with_edges(p, edges, []).unwrap();
                // compare every disjoint singleton-pair query with any subset given
                for a in 1..=p {
                    for b in (a + 1)..=p {
                        let others: Vec<usize> =
                            (1..=p).filter(|&v| v != a && v != b).collect();
                        for zmask in 0..(1usize << others.len()) {
                            let z: VertexSet = others
                                .iter()
                                .enumerate()
                                .filter(|(k, _)| zmask >> k & 1 == 1)
                                .map(|(_, &v)| v)
                                .collect();
                            let lhs = g
                                .markov_separated(&vs([a]), &vs([b]), &z)
                                .unwrap();
                            let rhs = dsep_oracle::d_separated(&g, &vs([a]), &vs([b]), &z);
                            assert_eq!(lhs, rhs, "p={p} pattern={pattern:#x} {a}⊥{b}|{z:?}");
                            checked += 1;
                        }
                    }
                }
            }
        }
        assert!(checked > 500);
    }
}
