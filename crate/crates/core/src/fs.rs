//! Feature structures as rooted, acyclic graphs of typed nodes.
//!
//! A [`FeatureStructure`] may have several roots: clause graphs and goal
//! tuples are feature structures whose roots are the literal arguments, so
//! that structure sharing between arguments is ordinary node sharing.

use std::fmt;

use crate::error::PathError;
use crate::signature::{FeatId, Signature, TypeId, TOP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub ty: TypeId,
    /// Outgoing arcs, sorted by feature id.
    pub arcs: Vec<(FeatId, NodeId)>,
}

impl Node {
    pub fn new(ty: TypeId) -> Node {
        Node { ty, arcs: Vec::new() }
    }

    pub fn arc(&self, f: FeatId) -> Option<NodeId> {
        self.arcs
            .binary_search_by_key(&f, |&(g, _)| g)
            .ok()
            .map(|i| self.arcs[i].1)
    }
}

/// A sequence of feature names, e.g. `SYNSEM|LOC|CAT|HEAD`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<String>);

impl Path {
    pub fn empty() -> Path {
        Path(Vec::new())
    }

    /// Parse `A|B|C`; every component must be a feature of `sig`.
    pub fn parse(sig: &Signature, text: &str) -> Result<Path, PathError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Path::empty());
        }
        let mut out = Vec::new();
        for part in text.split('|') {
            let part = part.trim();
            if sig.feature_id(part).is_none() {
                return Err(PathError::UnknownFeature(part.to_string()));
            }
            out.push(part.to_string());
        }
        Ok(Path(out))
    }

    pub fn features(&self, sig: &Signature) -> Result<Vec<FeatId>, PathError> {
        self.0
            .iter()
            .map(|f| sig.feature_id(f).ok_or_else(|| PathError::UnknownFeature(f.clone())))
            .collect()
    }

    pub fn child(&self, f: &str) -> Path {
        let mut p = self.0.clone();
        p.push(f.to_string());
        Path(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "<root>")
        } else {
            write!(f, "{}", self.0.join("|"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureStructure {
    nodes: Vec<Node>,
    roots: Vec<NodeId>,
}

impl FeatureStructure {
    /// Build from raw parts. Arcs are sorted; ids must be in range.
    pub fn from_parts(mut nodes: Vec<Node>, roots: Vec<NodeId>) -> FeatureStructure {
        for n in &mut nodes {
            n.arcs.sort_by_key(|&(f, _)| f);
        }
        debug_assert!(roots.iter().all(|r| r.index() < nodes.len()));
        FeatureStructure { nodes, roots }
    }

    /// The single-node structure of type `top`, the unit of unification.
    pub fn top() -> FeatureStructure {
        Self::of_type(TOP)
    }

    pub fn of_type(ty: TypeId) -> FeatureStructure {
        FeatureStructure { nodes: vec![Node::new(ty)], roots: vec![NodeId(0)] }
    }

    /// `k` unrelated `top` roots.
    pub fn tops(k: usize) -> FeatureStructure {
        FeatureStructure {
            nodes: vec![Node::new(TOP); k],
            roots: (0..k as u32).map(NodeId).collect(),
        }
    }

    pub fn root(&self) -> NodeId {
        self.roots[0]
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn ty(&self, id: NodeId) -> TypeId {
        self.nodes[id.index()].ty
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc(&self, id: NodeId, f: FeatId) -> Option<NodeId> {
        self.nodes[id.index()].arc(f)
    }

    /// The same graph with a different root list.
    pub fn with_roots(&self, roots: Vec<NodeId>) -> FeatureStructure {
        FeatureStructure { nodes: self.nodes.clone(), roots }
    }

    /// Restrict to the part reachable from one root.
    pub fn project(&self, root: NodeId) -> FeatureStructure {
        self.with_roots(vec![root]).compact()
    }

    /// Drop unreachable nodes and renumber in traversal order.
    pub fn compact(&self) -> FeatureStructure {
        let order = self.preorder();
        let mut map = vec![u32::MAX; self.nodes.len()];
        for (i, n) in order.iter().enumerate() {
            map[n.index()] = i as u32;
        }
        let nodes = order
            .iter()
            .map(|n| {
                let node = &self.nodes[n.index()];
                Node {
                    ty: node.ty,
                    arcs: node.arcs.iter().map(|&(f, t)| (f, NodeId(map[t.index()]))).collect(),
                }
            })
            .collect();
        let roots = self.roots.iter().map(|r| NodeId(map[r.index()])).collect();
        FeatureStructure { nodes, roots }
    }

    /// Nodes reachable from the roots, depth-first, arcs in feature order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = Vec::new();
        for &r in &self.roots {
            stack.push(r);
            while let Some(n) = stack.pop() {
                if seen[n.index()] {
                    continue;
                }
                seen[n.index()] = true;
                out.push(n);
                for &(_, t) in self.nodes[n.index()].arcs.iter().rev() {
                    if !seen[t.index()] {
                        stack.push(t);
                    }
                }
            }
        }
        out
    }

    /// How many times each node is referenced (arcs plus root slots).
    pub fn in_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.nodes.len()];
        for r in &self.roots {
            deg[r.index()] += 1;
        }
        for n in self.preorder() {
            for &(_, t) in &self.nodes[n.index()].arcs {
                deg[t.index()] += 1;
            }
        }
        deg
    }

    pub fn is_acyclic(&self) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.nodes.len()];
        for &r in &self.roots {
            if state[r.index()] != 0 {
                continue;
            }
            let mut stack: Vec<(NodeId, usize)> = vec![(r, 0)];
            state[r.index()] = 1;
            while let Some(&(n, i)) = stack.last() {
                let arcs = &self.nodes[n.index()].arcs;
                if i < arcs.len() {
                    let t = arcs[i].1;
                    stack.last_mut().unwrap().1 += 1;
                    match state[t.index()] {
                        0 => {
                            state[t.index()] = 1;
                            stack.push((t, 0));
                        }
                        1 => return false,
                        _ => {}
                    }
                } else {
                    state[n.index()] = 2;
                    stack.pop();
                }
            }
        }
        true
    }

    /// Follow `path` from `from`. Missing arcs mean the value is unconstrained,
    /// reported as `None`.
    pub fn walk(&self, from: NodeId, path: &[FeatId]) -> Option<NodeId> {
        path.iter().try_fold(from, |n, &f| self.arc(n, f))
    }

    /// Read the node at `path` below the first root.
    pub fn get_path(&self, sig: &Signature, path: &Path) -> Result<Option<NodeId>, PathError> {
        let feats = path.features(sig)?;
        Ok(self.walk(self.root(), &feats))
    }

    /// Check acyclicity and appropriateness of every arc.
    pub fn check(&self, sig: &Signature) -> Result<(), String> {
        if !self.is_acyclic() {
            return Err("cyclic feature structure".into());
        }
        for n in self.preorder() {
            let node = &self.nodes[n.index()];
            for &(f, t) in &node.arcs {
                let Some(restr) = sig.approp(node.ty, f) else {
                    return Err(format!(
                        "feature {} not appropriate for {}",
                        sig.feature_name(f),
                        sig.type_name(node.ty)
                    ));
                };
                if !sig.subtype(self.ty(t), restr) {
                    return Err(format!(
                        "value of {} at {} must be below {}, found {}",
                        sig.feature_name(f),
                        sig.type_name(node.ty),
                        sig.type_name(restr),
                        sig.type_name(self.ty(t))
                    ));
                }
            }
        }
        Ok(())
    }

    /// Canonical form: arcs whose value carries no information beyond the
    /// appropriateness restriction are dropped, and nodes are renumbered in
    /// root-first, feature-ordered traversal. Two structures are isomorphic
    /// iff their canonical forms are equal.
    pub fn canonical(&self, sig: &Signature) -> FeatureStructure {
        let deg = self.in_degrees();
        let order = self.preorder();
        let mut is_root = vec![false; self.nodes.len()];
        for r in &self.roots {
            is_root[r.index()] = true;
        }
        // A node reached once, through an arc whose restriction already equals
        // its type, with nothing informative below it, says nothing.
        let mut via: Vec<Option<(TypeId, FeatId)>> = vec![None; self.nodes.len()];
        for &p in &order {
            let node = &self.nodes[p.index()];
            for &(f, t) in &node.arcs {
                if deg[t.index()] == 1 && !is_root[t.index()] {
                    via[t.index()] = Some((node.ty, f));
                }
            }
        }
        let mut informative = vec![true; self.nodes.len()];
        for &n in order.iter().rev() {
            let node = &self.nodes[n.index()];
            let typed = match via[n.index()] {
                Some((pt, f)) => sig.approp(pt, f) != Some(node.ty),
                None => true,
            };
            informative[n.index()] =
                typed || node.arcs.iter().any(|&(_, t)| informative[t.index()]);
        }
        let mut pruned: Vec<Node> = self.nodes.clone();
        for &n in &order {
            pruned[n.index()].arcs.retain(|&(_, t)| informative[t.index()]);
        }
        FeatureStructure { nodes: pruned, roots: self.roots.clone() }.compact()
    }

    pub fn iso_eq(&self, sig: &Signature, other: &FeatureStructure) -> bool {
        self.canonical(sig) == other.canonical(sig)
    }

    /// Graph from one root, keeping other roots' sharing out of the picture.
    pub fn root_fs(&self, i: usize) -> FeatureStructure {
        self.project(self.roots[i])
    }

    /// Concatenate root lists of several structures into one graph.
    pub fn tuple(parts: &[&FeatureStructure]) -> FeatureStructure {
        let mut nodes = Vec::new();
        let mut roots = Vec::new();
        for p in parts {
            let off = nodes.len() as u32;
            nodes.extend(p.nodes.iter().map(|n| Node {
                ty: n.ty,
                arcs: n.arcs.iter().map(|&(f, t)| (f, NodeId(t.0 + off))).collect(),
            }));
            roots.extend(p.roots.iter().map(|r| NodeId(r.0 + off)));
        }
        FeatureStructure { nodes, roots }
    }
}
