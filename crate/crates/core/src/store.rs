//! Mutable node store with union-find unification and an undo trail.
//!
//! Everything that unifies goes through here: the pure operations load their
//! inputs into a throwaway store, the interpreters keep one store per solve
//! session and backtrack by undoing to a [`Mark`].

use std::collections::HashMap;

use smallvec::SmallVec;

use crate::fs::{FeatureStructure, Node, NodeId};
use crate::signature::{FeatId, Signature, TypeId};

const NONE: u32 = u32::MAX;

type Arcs = SmallVec<[(FeatId, u32); 4]>;

#[derive(Clone, Debug)]
struct SNode {
    ty: TypeId,
    arcs: Arcs,
    fwd: u32,
}

#[derive(Debug)]
enum Undo {
    Fwd(u32),
    Ty(u32, TypeId),
    Arcs(u32, Arcs),
}

/// Snapshot for [`Store::undo`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mark {
    nodes: usize,
    trail: usize,
}

/// Where a unification failed, as a feature path from the first node pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Clash {
    Types { path: Vec<FeatId>, left: TypeId, right: TypeId },
    Cycle,
}

enum Work {
    Pair(u32, u32, u32),
    Constrain(u32, TypeId, u32),
}

pub struct Store<'s> {
    sig: &'s Signature,
    nodes: Vec<SNode>,
    trail: Vec<Undo>,
    track_paths: bool,
    /// Reject cycles on every unification rather than on request.
    eager_cycles: bool,
    paths: Vec<(u32, FeatId)>,
    work: Vec<Work>,
    merged: Vec<u32>,
    visit: Vec<u32>,
    visit_gen: u32,
}

impl<'s> Store<'s> {
    pub fn new(sig: &'s Signature) -> Store<'s> {
        Store {
            sig,
            nodes: Vec::new(),
            trail: Vec::new(),
            track_paths: false,
            eager_cycles: true,
            paths: Vec::new(),
            work: Vec::new(),
            merged: Vec::new(),
            visit: Vec::new(),
            visit_gen: 0,
        }
    }

    /// Record feature paths so that clashes can be reported precisely.
    pub fn with_paths(mut self) -> Self {
        self.track_paths = true;
        self
    }

    /// Skip the per-unification cycle check; the owner calls
    /// [`Store::is_acyclic`] when it needs the answer. The eager check walks
    /// everything below the merged nodes, which makes long derivations
    /// quadratic.
    pub fn deferring_cycles(mut self) -> Self {
        self.eager_cycles = false;
        self
    }

    /// No live node reaches itself.
    pub fn is_acyclic(&mut self) -> bool {
        self.merged.clear();
        self.merged.extend((0..self.nodes.len() as u32).filter(|&n| self.nodes[n as usize].fwd == NONE));
        !self.creates_cycle()
    }

    pub fn signature(&self) -> &'s Signature {
        self.sig
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mark(&self) -> Mark {
        Mark { nodes: self.nodes.len(), trail: self.trail.len() }
    }

    pub fn undo(&mut self, mark: Mark) {
        while self.trail.len() > mark.trail {
            match self.trail.pop().expect("trail entry") {
                Undo::Fwd(n) => self.nodes[n as usize].fwd = NONE,
                Undo::Ty(n, t) => self.nodes[n as usize].ty = t,
                Undo::Arcs(n, a) => self.nodes[n as usize].arcs = a,
            }
        }
        self.nodes.truncate(mark.nodes);
    }

    pub fn fresh(&mut self, ty: TypeId) -> u32 {
        self.nodes.push(SNode { ty, arcs: Arcs::new(), fwd: NONE });
        (self.nodes.len() - 1) as u32
    }

    /// Copy a graph in; returns the offset of its node 0.
    pub fn load_nodes(&mut self, nodes: &[Node]) -> u32 {
        let off = self.nodes.len() as u32;
        self.nodes.extend(nodes.iter().map(|n| SNode {
            ty: n.ty,
            arcs: n.arcs.iter().map(|&(f, t)| (f, t.0 + off)).collect(),
            fwd: NONE,
        }));
        off
    }

    /// Copy a feature structure in; returns its roots as store nodes.
    pub fn load(&mut self, fs: &FeatureStructure) -> Vec<u32> {
        let off = self.load_nodes(fs.nodes());
        fs.roots().iter().map(|r| r.0 + off).collect()
    }

    pub fn find(&self, mut n: u32) -> u32 {
        while self.nodes[n as usize].fwd != NONE {
            n = self.nodes[n as usize].fwd;
        }
        n
    }

    pub fn ty(&self, n: u32) -> TypeId {
        self.nodes[self.find(n) as usize].ty
    }

    pub fn arc(&self, n: u32, f: FeatId) -> Option<u32> {
        let node = &self.nodes[self.find(n) as usize];
        node.arcs
            .binary_search_by_key(&f, |&(g, _)| g)
            .ok()
            .map(|i| node.arcs[i].1)
    }

    pub fn arcs(&self, n: u32) -> impl Iterator<Item = (FeatId, u32)> + '_ {
        self.nodes[self.find(n) as usize].arcs.iter().copied()
    }

    fn set_ty(&mut self, n: u32, ty: TypeId) {
        let old = self.nodes[n as usize].ty;
        if old != ty {
            self.trail.push(Undo::Ty(n, old));
            self.nodes[n as usize].ty = ty;
        }
    }

    fn save_arcs(&mut self, n: u32) {
        let old = self.nodes[n as usize].arcs.clone();
        self.trail.push(Undo::Arcs(n, old));
    }

    fn path_of(&self, mut p: u32) -> Vec<FeatId> {
        let mut out = Vec::new();
        while p != NONE {
            let (parent, f) = self.paths[p as usize];
            out.push(f);
            p = parent;
        }
        out.reverse();
        out
    }

    fn extend_path(&mut self, parent: u32, f: FeatId) -> u32 {
        if !self.track_paths {
            return NONE;
        }
        self.paths.push((parent, f));
        (self.paths.len() - 1) as u32
    }

    /// Narrow the type of `n` to `meet(type, ty)`, propagating restrictions.
    pub fn constrain(&mut self, n: u32, ty: TypeId) -> Result<(), Clash> {
        self.work.clear();
        self.merged.clear();
        self.work.push(Work::Constrain(n, ty, NONE));
        self.run()
    }

    /// Unify two nodes in place. On failure the store is left partially
    /// modified; callers undo to a mark taken before the call.
    pub fn unify(&mut self, a: u32, b: u32) -> Result<(), Clash> {
        self.work.clear();
        self.merged.clear();
        self.work.push(Work::Pair(a, b, NONE));
        self.run()
    }

    /// Unify several pairs as one step.
    pub fn unify_all(&mut self, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<(), Clash> {
        self.work.clear();
        self.merged.clear();
        let mut items: Vec<Work> = pairs.into_iter().map(|(a, b)| Work::Pair(a, b, NONE)).collect();
        items.reverse();
        self.work.extend(items);
        self.run()
    }

    fn run(&mut self) -> Result<(), Clash> {
        let sig = self.sig;
        while let Some(item) = self.work.pop() {
            match item {
                Work::Pair(a, b, path) => {
                    let (a, b) = (self.find(a), self.find(b));
                    if a == b {
                        continue;
                    }
                    let (ta, tb) = (self.nodes[a as usize].ty, self.nodes[b as usize].ty);
                    let Some(t) = sig.meet(ta, tb) else {
                        return Err(Clash::Types { path: self.path_of(path), left: ta, right: tb });
                    };
                    self.trail.push(Undo::Fwd(b));
                    self.nodes[b as usize].fwd = a;
                    self.set_ty(a, t);
                    self.merged.push(a);
                    let moved = self.nodes[b as usize].arcs.clone();
                    if !moved.is_empty() {
                        self.save_arcs(a);
                    }
                    for &(f, tgt) in &moved {
                        let arcs = &mut self.nodes[a as usize].arcs;
                        match arcs.binary_search_by_key(&f, |&(g, _)| g) {
                            Ok(i) => {
                                let mine = arcs[i].1;
                                let p = self.extend_path(path, f);
                                self.work.push(Work::Pair(mine, tgt, p));
                            }
                            Err(i) => arcs.insert(i, (f, tgt)),
                        }
                    }
                    if t != ta || t != tb {
                        self.push_restrictions(a, t, path);
                    }
                }
                Work::Constrain(n, ty, path) => {
                    let n = self.find(n);
                    let cur = self.nodes[n as usize].ty;
                    let Some(t) = sig.meet(cur, ty) else {
                        return Err(Clash::Types { path: self.path_of(path), left: cur, right: ty });
                    };
                    if t != cur {
                        self.set_ty(n, t);
                        self.push_restrictions(n, t, path);
                    }
                }
            }
        }
        if self.eager_cycles && self.creates_cycle() {
            return Err(Clash::Cycle);
        }
        Ok(())
    }

    fn push_restrictions(&mut self, n: u32, t: TypeId, path: u32) {
        let arcs = self.nodes[n as usize].arcs.clone();
        for (f, tgt) in arcs {
            let restr = self.sig.approp(t, f).unwrap_or(crate::signature::TOP);
            let p = self.extend_path(path, f);
            self.work.push(Work::Constrain(tgt, restr, p));
        }
    }

    /// Any new cycle has to pass through a node that absorbed another one.
    fn creates_cycle(&mut self) -> bool {
        if self.merged.is_empty() {
            return false;
        }
        if self.visit.len() < self.nodes.len() {
            self.visit.resize(self.nodes.len(), 0);
        }
        if self.visit_gen > u32::MAX - 4 {
            self.visit.iter_mut().for_each(|v| *v = 0);
            self.visit_gen = 0;
        }
        self.visit_gen += 2;
        let (open, done) = (self.visit_gen, self.visit_gen + 1);
        let starts = std::mem::take(&mut self.merged);
        let mut stack: Vec<(u32, usize)> = Vec::new();
        let mut cyclic = false;
        'outer: for &s in &starts {
            let s = self.find(s);
            if self.visit[s as usize] == done {
                continue;
            }
            self.visit[s as usize] = open;
            stack.push((s, 0));
            while let Some(top) = stack.last_mut() {
                let (n, i) = (top.0, top.1);
                if i < self.nodes[n as usize].arcs.len() {
                    top.1 += 1;
                    let t = self.find(self.nodes[n as usize].arcs[i].1);
                    let v = self.visit[t as usize];
                    if v == open {
                        cyclic = true;
                        break 'outer;
                    }
                    if v != done {
                        self.visit[t as usize] = open;
                        stack.push((t, 0));
                    }
                } else {
                    self.visit[n as usize] = done;
                    stack.pop();
                }
            }
        }
        self.merged = starts;
        self.merged.clear();
        cyclic
    }

    /// Get or create the value of `f` at `n`, inferring `n`'s type from the
    /// feature's introduction site.
    pub fn ensure_arc(&mut self, n: u32, f: FeatId) -> Result<u32, Clash> {
        let n = self.find(n);
        if let Some(t) = self.arc(n, f) {
            return Ok(t);
        }
        self.constrain(n, self.sig.feature_intro(f))?;
        let n = self.find(n);
        let restr = self
            .sig
            .approp(self.nodes[n as usize].ty, f)
            .unwrap_or(crate::signature::TOP);
        let child = self.fresh(restr);
        self.save_arcs(n);
        let arcs = &mut self.nodes[n as usize].arcs;
        let i = arcs.binary_search_by_key(&f, |&(g, _)| g).unwrap_err();
        arcs.insert(i, (f, child));
        Ok(child)
    }

    pub fn ensure_path(&mut self, n: u32, path: &[FeatId]) -> Result<u32, Clash> {
        let mut cur = n;
        for &f in path {
            cur = self.ensure_arc(cur, f)?;
        }
        Ok(cur)
    }

    /// Copy out the graph reachable from `roots`.
    pub fn extract(&self, roots: &[u32]) -> FeatureStructure {
        let mut map: HashMap<u32, u32> = HashMap::new();
        let mut order: Vec<u32> = Vec::new();
        let mut stack: Vec<u32> = Vec::new();
        for &r in roots {
            stack.push(self.find(r));
            while let Some(n) = stack.pop() {
                if map.contains_key(&n) {
                    continue;
                }
                map.insert(n, order.len() as u32);
                order.push(n);
                for &(_, t) in self.nodes[n as usize].arcs.iter().rev() {
                    let t = self.find(t);
                    if !map.contains_key(&t) {
                        stack.push(t);
                    }
                }
            }
        }
        let nodes = order
            .iter()
            .map(|&n| {
                let node = &self.nodes[n as usize];
                Node {
                    ty: node.ty,
                    arcs: node
                        .arcs
                        .iter()
                        .map(|&(f, t)| (f, NodeId(map[&self.find(t)])))
                        .collect(),
                }
            })
            .collect();
        let roots = roots.iter().map(|&r| NodeId(map[&self.find(r)])).collect();
        FeatureStructure::from_parts(nodes, roots)
    }
}
