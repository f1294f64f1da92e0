//! Pure lattice operations on feature structures: unification (meet),
//! subsumption, and most specific generalization (join).
//!
//! Multi-rooted structures are handled root by root, so the same functions
//! work on clause argument tuples.

use std::collections::HashMap;

use crate::error::{PathError, UnifyFailure};
use crate::fs::{FeatureStructure, Node, NodeId, Path};
use crate::signature::{FeatId, Signature, TypeId};
use crate::store::{Clash, Store};

fn clash_failure(sig: &Signature, clash: Clash) -> UnifyFailure {
    match clash {
        Clash::Types { path, left, right } => UnifyFailure::Clash {
            path: Path(path.iter().map(|&f| sig.feature_name(f).to_string()).collect()),
            left: sig.type_name(left).to_string(),
            right: sig.type_name(right).to_string(),
        },
        Clash::Cycle => UnifyFailure::Cyclic,
    }
}

/// Most general structure subsumed by both inputs.
pub fn unify(
    sig: &Signature,
    a: &FeatureStructure,
    b: &FeatureStructure,
) -> Result<FeatureStructure, UnifyFailure> {
    if a.roots().len() != b.roots().len() {
        return Err(UnifyFailure::Arity(a.roots().len(), b.roots().len()));
    }
    let mut store = Store::new(sig).with_paths();
    let ra = store.load(a);
    let rb = store.load(b);
    store
        .unify_all(ra.iter().copied().zip(rb.iter().copied()))
        .map_err(|c| clash_failure(sig, c))?;
    Ok(store.extract(&ra))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Side {
    Node(NodeId),
    /// An absent arc: a fresh, unshared node of the given restriction type.
    Implicit(TypeId),
}

fn side_ty(fs: &FeatureStructure, s: Side) -> TypeId {
    match s {
        Side::Node(n) => fs.ty(n),
        Side::Implicit(t) => t,
    }
}

fn side_child(sig: &Signature, fs: &FeatureStructure, s: Side, f: FeatId) -> Option<Side> {
    match s {
        Side::Node(n) => match fs.arc(n, f) {
            Some(c) => Some(Side::Node(c)),
            None => sig.approp(fs.ty(n), f).map(Side::Implicit),
        },
        Side::Implicit(t) => sig.approp(t, f).map(Side::Implicit),
    }
}

/// `a` subsumes `b`: `b` carries all the information in `a` (and maybe more).
pub fn subsumes(sig: &Signature, a: &FeatureStructure, b: &FeatureStructure) -> bool {
    if a.roots().len() != b.roots().len() {
        return false;
    }
    let mut map: HashMap<NodeId, Side> = HashMap::new();
    let mut stack: Vec<(NodeId, Side)> = a
        .roots()
        .iter()
        .zip(b.roots())
        .map(|(&x, &y)| (x, Side::Node(y)))
        .collect();
    while let Some((x, y)) = stack.pop() {
        if let Some(&prev) = map.get(&x) {
            // Implicit values are never token-identical to anything.
            if prev != y || matches!(y, Side::Implicit(_)) {
                return false;
            }
            continue;
        }
        map.insert(x, y);
        let ty_b = side_ty(b, y);
        if !sig.subtype(ty_b, a.ty(x)) {
            return false;
        }
        for &(f, cx) in &a.node(x).arcs {
            match side_child(sig, b, y, f) {
                Some(cy) => stack.push((cx, cy)),
                None => return false,
            }
        }
    }
    true
}

/// Mutual subsumption.
pub fn equivalent(sig: &Signature, a: &FeatureStructure, b: &FeatureStructure) -> bool {
    subsumes(sig, a, b) && subsumes(sig, b, a)
}

/// Most specific generalization (anti-unification).
///
/// Built as a product graph: node pairs reached by the same path collapse to
/// one result node of the joined type, so sharing survives only where both
/// inputs share.
pub fn msg(sig: &Signature, a: &FeatureStructure, b: &FeatureStructure) -> FeatureStructure {
    assert_eq!(a.roots().len(), b.roots().len(), "msg of structures with different arity");
    let mut nodes: Vec<Node> = Vec::new();
    let mut memo: HashMap<(NodeId, NodeId), NodeId> = HashMap::new();

    fn build(
        sig: &Signature,
        a: &FeatureStructure,
        b: &FeatureStructure,
        x: Side,
        y: Side,
        nodes: &mut Vec<Node>,
        memo: &mut HashMap<(NodeId, NodeId), NodeId>,
    ) -> NodeId {
        if let (Side::Node(nx), Side::Node(ny)) = (x, y) {
            if let Some(&id) = memo.get(&(nx, ny)) {
                return id;
            }
        }
        let ty = sig.join(side_ty(a, x), side_ty(b, y));
        let id = NodeId(nodes.len() as u32);
        nodes.push(Node::new(ty));
        if let (Side::Node(nx), Side::Node(ny)) = (x, y) {
            memo.insert((nx, ny), id);
        }
        let mut feats: Vec<FeatId> = Vec::new();
        if let Side::Node(nx) = x {
            feats.extend(a.node(nx).arcs.iter().map(|&(f, _)| f));
        }
        if let Side::Node(ny) = y {
            feats.extend(b.node(ny).arcs.iter().map(|&(f, _)| f));
        }
        feats.sort();
        feats.dedup();
        let mut arcs = Vec::new();
        for f in feats {
            if sig.approp(ty, f).is_none() {
                continue;
            }
            let (Some(cx), Some(cy)) = (side_child(sig, a, x, f), side_child(sig, b, y, f)) else {
                continue;
            };
            let child = build(sig, a, b, cx, cy, nodes, memo);
            arcs.push((f, child));
        }
        nodes[id.index()].arcs = arcs;
        id
    }

    let roots = a
        .roots()
        .iter()
        .zip(b.roots())
        .map(|(&x, &y)| build(sig, a, b, Side::Node(x), Side::Node(y), &mut nodes, &mut memo))
        .collect();
    FeatureStructure::from_parts(nodes, roots).canonical(sig)
}

/// Left fold of [`msg`]; `None` for an empty list.
pub fn msg_all<'a, I>(sig: &Signature, items: I) -> Option<FeatureStructure>
where
    I: IntoIterator<Item = &'a FeatureStructure>,
{
    let mut it = items.into_iter();
    let first = it.next()?.canonical(sig);
    Some(it.fold(first, |acc, x| msg(sig, &acc, x)))
}

/// Read the node at `path` below the first root.
pub fn get_path(
    sig: &Signature,
    fs: &FeatureStructure,
    path: &Path,
) -> Result<Option<NodeId>, PathError> {
    fs.get_path(sig, path)
}

/// A copy of `fs` whose value at `path` is narrowed to `ty`, creating the
/// path as needed.
pub fn put_path(
    sig: &Signature,
    fs: &FeatureStructure,
    path: &Path,
    ty: TypeId,
) -> Result<FeatureStructure, PathError> {
    let feats = path.features(sig)?;
    let mut store = Store::new(sig);
    let roots = store.load(fs);
    let mut cur = roots[0];
    for (i, &f) in feats.iter().enumerate() {
        let here = store.ty(cur);
        if sig.meet(here, sig.feature_intro(f)).is_none() {
            return Err(PathError::Inappropriate {
                feature: sig.feature_name(f).to_string(),
                ty: sig.type_name(here).to_string(),
                path: Path(path.0[..i].to_vec()),
            });
        }
        cur = store.ensure_arc(cur, f).map_err(|_| PathError::Inappropriate {
            feature: sig.feature_name(f).to_string(),
            ty: sig.type_name(here).to_string(),
            path: Path(path.0[..i].to_vec()),
        })?;
    }
    let existing = store.ty(cur);
    store.constrain(cur, ty).map_err(|_| PathError::Clash {
        ty: sig.type_name(ty).to_string(),
        existing: sig.type_name(existing).to_string(),
        path: path.clone(),
    })?;
    Ok(store.extract(&roots))
}
