//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use hpsgc_core::corpus::{aux, schema};
use hpsgc_core::ops::subsumes;
use hpsgc_core::source::load;
use hpsgc_core::store::Store;
use hpsgc_core::syntax::Grammar;
use hpsgc_core::{FeatId, FeatureStructure, Node, NodeId, Signature, TypeId, TOP};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn aux_grammar() -> (Arc<Signature>, Grammar) {
    load(aux::SIGNATURE, aux::GRAMMAR, &[aux::SENTENCES]).expect("bundled aux grammar")
}

pub fn schema_grammar() -> (Arc<Signature>, Grammar) {
    load(schema::SIGNATURE, schema::GRAMMAR, &[]).expect("bundled schema grammar")
}

pub fn aux_sentences() -> Vec<&'static str> {
    hpsgc_core::corpus::sentences(aux::SENTENCES).collect()
}

/// Mutual subsumption.
pub fn equiv(sig: &Signature, a: &FeatureStructure, b: &FeatureStructure) -> bool {
    subsumes(sig, a, b) && subsumes(sig, b, a)
}

// ---- random structures ----

pub struct Gen<'s> {
    sig: &'s Signature,
    pub rng: StdRng,
    atoms: Vec<TypeId>,
}

impl<'s> Gen<'s> {
    pub fn new(sig: &'s Signature, seed: u64) -> Self {
        let mut atoms: Vec<TypeId> = sig.atoms().filter_map(|a| sig.atom_id(a)).collect();
        atoms.truncate(4);
        Gen { sig, rng: StdRng::seed_from_u64(seed), atoms }
    }

    /// Types below `t`, atoms included (a few).
    fn below(&self, t: TypeId) -> Vec<TypeId> {
        let mut out: Vec<TypeId> = self.sig.declared_types().map(|(id, _)| id).filter(|&x| self.sig.subtype(x, t)).collect();
        out.extend(self.atoms.iter().copied().filter(|&a| self.sig.subtype(a, t)));
        out
    }

    /// A well-typed acyclic structure with at most `max_nodes` nodes,
    /// with occasional reentrancy.
    pub fn fs(&mut self, max_nodes: usize) -> FeatureStructure {
        let mut nodes: Vec<Node> = Vec::new();
        let root_choices = self.below(TOP);
        let t = root_choices[self.rng.gen_range(0..root_choices.len())];
        nodes.push(Node::new(t));
        // Completed nodes are never ancestors of the node being expanded.
        let mut done: Vec<usize> = Vec::new();
        self.expand(0, &mut nodes, &mut done, max_nodes, 0);
        FeatureStructure::from_parts(nodes, vec![NodeId(0)])
    }

    fn expand(&mut self, n: usize, nodes: &mut Vec<Node>, done: &mut Vec<usize>, max: usize, depth: usize) {
        let feats: Vec<(FeatId, TypeId)> = self.sig.appropriate(nodes[n].ty).to_vec();
        for (f, restr) in feats {
            if nodes.len() >= max || depth > 4 || !self.rng.gen_bool(0.6) {
                continue;
            }
            let reuse: Vec<usize> =
                done.iter().copied().filter(|&d| self.sig.subtype(nodes[d].ty, restr)).collect();
            if !reuse.is_empty() && self.rng.gen_bool(0.25) {
                let d = reuse[self.rng.gen_range(0..reuse.len())];
                nodes[n].arcs.push((f, NodeId(d as u32)));
                continue;
            }
            let choices = self.below(restr);
            let t = choices[self.rng.gen_range(0..choices.len())];
            nodes.push(Node::new(t));
            let c = nodes.len() - 1;
            nodes[n].arcs.push((f, NodeId(c as u32)));
            self.expand(c, nodes, done, max, depth + 1);
        }
        done.push(n);
    }

    /// A random generalization-or-variant of `fs`: used to get pairs that
    /// often unify.
    pub fn relative(&mut self, fs: &FeatureStructure) -> FeatureStructure {
        let gens = generalizations(self.sig, fs, 400);
        let g = &gens[self.rng.gen_range(0..gens.len())];
        if self.rng.gen_bool(0.5) {
            return g.clone();
        }
        let other = self.fs(5);
        hpsgc_core::ops::unify(self.sig, g, &other).unwrap_or_else(|_| g.clone())
    }
}

// ---- exhaustive generalizations (brute-force lattice oracle) ----

/// Every structure that subsumes `fs` (one root, acyclic), up to
/// equivalence, or `None` past `limit` candidates. Any upper bound of
/// `fs` is obtained by keeping a prefix-closed set of its paths, merging
/// only paths that were token-identical (closed under extension), and
/// raising types.
pub fn generalizations_checked(sig: &Signature, fs: &FeatureStructure, limit: usize) -> Option<Vec<FeatureStructure>> {
    // all paths with their nodes, shortest first
    let mut paths: Vec<(Vec<FeatId>, NodeId)> = vec![(Vec::new(), fs.root())];
    let mut i = 0;
    while i < paths.len() {
        let (p, n) = paths[i].clone();
        for &(f, t) in &fs.node(n).arcs {
            let mut q = p.clone();
            q.push(f);
            paths.push((q, t));
        }
        i += 1;
        if paths.len() > 10 {
            return None;
        }
    }
    let parent = |i: usize| -> Option<usize> {
        let p = &paths[i].0;
        if p.is_empty() {
            return None;
        }
        paths.iter().position(|(q, _)| q[..] == p[..p.len() - 1])
    };
    let parents: Vec<Option<usize>> = (0..paths.len()).map(parent).collect();

    let mut seen: HashSet<FeatureStructure> = HashSet::new();
    let mut out = Vec::new();
    let k = paths.len();
    for mask in 0u32..(1 << k) {
        if mask & 1 == 0 {
            continue;
        }
        let keep: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        if keep.iter().any(|&i| parents[i].is_some_and(|p| mask >> p & 1 == 0)) {
            continue;
        }
        // Candidate partitions: refine "same node" classes.
        let mut by_node: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for &i in &keep {
            by_node.entry(paths[i].1).or_default().push(i);
        }
        let classes: Vec<Vec<usize>> = by_node.into_values().collect();
        let mut partitions: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
        for c in &classes {
            let mut next = Vec::new();
            for part in &partitions {
                for split in set_partitions(c) {
                    let mut p = part.clone();
                    p.extend(split);
                    next.push(p);
                }
            }
            partitions = next;
        }
        for blocks in partitions {
            let block_of: HashMap<usize, usize> =
                blocks.iter().enumerate().flat_map(|(b, ps)| ps.iter().map(move |&p| (p, b))).collect();
            // congruence: merged paths have merged extensions
            let ext = |i: usize, f: FeatId| -> Option<usize> {
                let mut q = paths[i].0.clone();
                q.push(f);
                keep.iter().copied().find(|&j| paths[j].0 == q)
            };
            let mut ok = true;
            'outer: for b in &blocks {
                for &x in b {
                    for &y in b {
                        for &(f, _) in &fs.node(paths[x].1).arcs {
                            match (ext(x, f), ext(y, f)) {
                                (None, None) => {}
                                (Some(a), Some(c)) if block_of[&a] == block_of[&c] => {}
                                _ => {
                                    ok = false;
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
            if !ok {
                continue;
            }
            // types: every supertype of the original node type per block
            let ups: Vec<Vec<TypeId>> = blocks
                .iter()
                .map(|b| {
                    let t = fs.ty(paths[b[0]].1);
                    let mut v: Vec<TypeId> =
                        sig.declared_types().map(|(id, _)| id).filter(|&x| sig.subtype(t, x)).collect();
                    if sig.is_atom(t) {
                        v.push(t);
                    }
                    v
                })
                .collect();
            let mut choice = vec![0usize; blocks.len()];
            loop {
                let mut store = Store::new(sig);
                let ids: Vec<u32> = blocks.iter().enumerate().map(|(b, _)| store.fresh(ups[b][choice[b]])).collect();
                let mut good = true;
                for &i in &keep {
                    if let Some(p) = parents[i] {
                        let f = *paths[i].0.last().unwrap();
                        let a = match store.ensure_arc(ids[block_of[&p]], f) {
                            Ok(a) => a,
                            Err(_) => {
                                good = false;
                                break;
                            }
                        };
                        if store.unify(a, ids[block_of[&i]]).is_err() {
                            good = false;
                            break;
                        }
                    }
                }
                if good {
                    let g = store.extract(&[ids[block_of[&0]]]);
                    let c = g.canonical(sig);
                    if seen.insert(c.clone()) {
                        out.push(c);
                        if out.len() > limit {
                            return None;
                        }
                    }
                }
                // next type combination
                let mut j = 0;
                while j < choice.len() {
                    choice[j] += 1;
                    if choice[j] < ups[j].len() {
                        break;
                    }
                    choice[j] = 0;
                    j += 1;
                }
                if j == choice.len() {
                    break;
                }
            }
        }
    }
    Some(out)
}

pub fn generalizations(sig: &Signature, fs: &FeatureStructure, limit: usize) -> Vec<FeatureStructure> {
    generalizations_checked(sig, fs, limit).unwrap_or_else(|| vec![fs.clone(), FeatureStructure::top()])
}

fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for p in set_partitions(&items[1..]) {
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i].push(first);
            out.push(q);
        }
        let mut q = p.clone();
        q.push(vec![first]);
        out.push(q);
    }
    out
}

// ---- small random programs ----

pub const LIST_SIG: &str = "
type top sub [list, atom].
type list sub [e_list, ne_list].
type ne_list intro [FIRST:top, REST:list].
type atom.
";

/// Parse `src` over [`LIST_SIG`] plus the atoms it mentions.
pub fn list_program(src: &str, queries: &[&str]) -> (hpsgc_core::Program, Vec<hpsgc_core::Goal>) {
    use hpsgc_core::syntax::{collect_atoms, load_signature, parse_grammar, parse_query};
    let mut sig = load_signature(LIST_SIG).unwrap();
    sig.add_atoms(collect_atoms(src).unwrap()).unwrap();
    for q in queries {
        sig.add_atoms(collect_atoms(q).unwrap()).unwrap();
    }
    let g = parse_grammar(src, &sig).unwrap_or_else(|e| panic!("{e:?}\n{src}"));
    let mut p = hpsgc_core::Program::new(Arc::new(sig));
    for c in &g.clauses {
        p.add_raw_clause(c);
    }
    let goals = queries
        .iter()
        .map(|q| {
            let (shape, fs) = parse_query(q, p.sig()).unwrap();
            let preds: Vec<_> = shape.iter().map(|(n, k)| (p.intern_pred(n, *k), *k)).collect();
            hpsgc_core::Goal::conjunction(&preds, fs)
        })
        .collect();
    (p, goals)
}

fn term(rng: &mut StdRng, depth: u32) -> String {
    let tag = |rng: &mut StdRng| format!("#{}", rng.gen_range(1..=4));
    match rng.gen_range(0..if depth == 0 { 3 } else { 6 }) {
        0 => ["\"a\"", "\"b\"", "\"c\""][rng.gen_range(0..3)].to_string(),
        1 | 2 => tag(rng),
        3 => "<>".to_string(),
        4 => format!("<{}>", term(rng, depth - 1)),
        _ => format!("<{} | {}>", term(rng, depth - 1), tag(rng)),
    }
}

/// Source text of a random non-recursive program over predicates
/// `p0..pN` (each calls only lower-numbered ones) plus one open query per
/// predicate.
pub fn random_program_text(seed: u64) -> (String, Vec<String>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(2..=4);
    let arity: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=2)).collect();
    let mut src = String::new();
    let args = |rng: &mut StdRng, k: usize| (0..k).map(|_| term(rng, 2)).collect::<Vec<_>>().join(", ");
    for p in 0..n {
        for _ in 0..rng.gen_range(1..=3) {
            src += &format!("p{p}({})", args(&mut rng, arity[p]));
            let calls = if p == 0 { 0 } else { rng.gen_range(0..=2) };
            let body: Vec<String> = (0..calls)
                .map(|_| {
                    let q = rng.gen_range(0..p);
                    format!("p{q}({})", args(&mut rng, arity[q]))
                })
                .collect();
            if !body.is_empty() {
                src += &format!(" :- {}", body.join(", "));
            }
            src += ".\n";
        }
    }
    let queries = (0..n)
        .map(|p| format!("p{p}({})", (1..=arity[p]).map(|i| format!("#{i}")).collect::<Vec<_>>().join(", ")))
        .collect();
    (src, queries)
}
