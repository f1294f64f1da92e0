//! Type signatures: a finite type hierarchy with precomputed meet/join
//! tables, feature appropriateness, and on-demand atom types.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::SignatureError;

/// Index of a type in a [`Signature`]. Declared types come first, atoms after.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub u32);

/// Index of a feature; feature ids follow declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatId(pub u16);

/// The most general type. Always id 0.
pub const TOP: TypeId = TypeId(0);

pub const TOP_NAME: &str = "top";
pub const ATOM_NAME: &str = "atom";

/// One `type NAME sub [..] intro [..].` declaration, as written.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub subs: Vec<String>,
    pub intro: Vec<(String, String)>,
    pub line: usize,
    pub col: usize,
}

/// Unvalidated signature description, straight from the parser.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawSignature {
    pub decls: Vec<TypeDecl>,
}

#[derive(Clone, Debug)]
struct FeatureDef {
    name: String,
    intro: TypeId,
}

/// A validated type signature.
///
/// The declared hierarchy is a lattice (every pair has a unique greatest
/// lower bound, possibly failure, and a unique least upper bound). Atoms are
/// leaf types below `atom`; they are kept out of the dense tables so that
/// lexica with many word forms stay cheap.
#[derive(Clone)]
pub struct Signature {
    raw: RawSignature,
    names: Vec<String>,
    by_name: HashMap<String, TypeId>,
    atoms: HashMap<String, TypeId>,
    declared: usize,
    atom_type: Option<TypeId>,
    /// `above[t]` holds every declared supertype of `t`, including `t`.
    above: Vec<FixedBitSet>,
    meet: Vec<Option<TypeId>>,
    join: Vec<TypeId>,
    features: Vec<FeatureDef>,
    feat_by_name: HashMap<String, FeatId>,
    /// Appropriate features per declared type, sorted by feature id.
    approp: Vec<Vec<(FeatId, TypeId)>>,
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signature")
            .field("types", &self.declared)
            .field("atoms", &self.atoms.len())
            .field("features", &self.features.len())
            .finish()
    }
}

impl Signature {
    /// Validate a raw signature and precompute its tables.
    pub fn validate(raw: &RawSignature) -> Result<Signature, Vec<SignatureError>> {
        let mut errors = Vec::new();
        let mut names: Vec<String> = vec![TOP_NAME.to_string()];
        let mut by_name: HashMap<String, TypeId> = HashMap::new();
        by_name.insert(TOP_NAME.to_string(), TOP);
        let mut intern = |name: &str, names: &mut Vec<String>| -> TypeId {
            if let Some(&id) = by_name.get(name) {
                return id;
            }
            let id = TypeId(names.len() as u32);
            names.push(name.to_string());
            by_name.insert(name.to_string(), id);
            id
        };

        let mut edges: Vec<(TypeId, TypeId)> = Vec::new();
        for decl in &raw.decls {
            let parent = intern(&decl.name, &mut names);
            for sub in &decl.subs {
                let child = intern(sub, &mut names);
                if !edges.contains(&(parent, child)) {
                    edges.push((parent, child));
                }
            }
        }
        // Restriction types must be declared somewhere.
        for decl in &raw.decls {
            for (feat, restr) in &decl.intro {
                if !by_name_contains(&names, restr) {
                    errors.push(SignatureError::UnknownType {
                        name: restr.clone(),
                        context: format!("restriction of {feat} at {}", decl.name),
                        line: decl.line,
                        col: decl.col,
                    });
                }
            }
        }
        let by_name: HashMap<String, TypeId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), TypeId(i as u32)))
            .collect();
        let n = names.len();

        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(p, c) in &edges {
            if c == TOP {
                errors.push(SignatureError::TopHasSupertype { parent: names[p.0 as usize].clone() });
                continue;
            }
            parents[c.0 as usize].push(p.0 as usize);
        }
        for ps in parents.iter_mut().skip(1) {
            if ps.is_empty() {
                ps.push(0);
            }
        }

        // Topological order (parents before children); leftovers sit on a cycle.
        let order = match topo_order(&parents) {
            Ok(order) => order,
            Err(on_cycle) => {
                errors.push(SignatureError::Cycle {
                    types: on_cycle.iter().map(|&t| names[t].clone()).collect(),
                });
                return Err(errors);
            }
        };

        let mut above: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(n); n];
        for &t in &order {
            let mut set = FixedBitSet::with_capacity(n);
            set.insert(t);
            for &p in &parents[t] {
                set.union_with(&above[p]);
            }
            above[t] = set;
        }
        let mut below: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(n); n];
        for (t, ups) in above.iter().enumerate() {
            for u in ups.ones() {
                below[u].insert(t);
            }
        }

        let mut meet = vec![None; n * n];
        let mut join = vec![TOP; n * n];
        for a in 0..n {
            for b in a..n {
                let mut common = below[a].clone();
                common.intersect_with(&below[b]);
                let maxima: Vec<usize> = common
                    .ones()
                    .filter(|&c| !common.ones().any(|d| d != c && below[d].contains(c)))
                    .collect();
                match maxima.as_slice() {
                    [] => {}
                    [m] => {
                        meet[a * n + b] = Some(TypeId(*m as u32));
                        meet[b * n + a] = Some(TypeId(*m as u32));
                    }
                    _ => errors.push(SignatureError::NonUniqueGlb {
                        a: names[a].clone(),
                        b: names[b].clone(),
                        candidates: maxima.iter().map(|&m| names[m].clone()).collect(),
                    }),
                }
                let mut upper = above[a].clone();
                upper.intersect_with(&above[b]);
                let minima: Vec<usize> = upper
                    .ones()
                    .filter(|&c| !upper.ones().any(|d| d != c && above[d].contains(c)))
                    .collect();
                match minima.as_slice() {
                    [m] => {
                        join[a * n + b] = TypeId(*m as u32);
                        join[b * n + a] = TypeId(*m as u32);
                    }
                    _ => errors.push(SignatureError::NonUniqueLub {
                        a: names[a].clone(),
                        b: names[b].clone(),
                        candidates: minima.iter().map(|&m| names[m].clone()).collect(),
                    }),
                }
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        // Features, in order of first declaration.
        let mut features: Vec<FeatureDef> = Vec::new();
        let mut feat_by_name: HashMap<String, FeatId> = HashMap::new();
        let mut declared_at: Vec<Vec<(usize, TypeId, &TypeDecl)>> = Vec::new();
        for decl in &raw.decls {
            let t = by_name[&decl.name].0 as usize;
            for (feat, restr) in &decl.intro {
                let fid = *feat_by_name.entry(feat.clone()).or_insert_with(|| {
                    features.push(FeatureDef { name: feat.clone(), intro: TOP });
                    declared_at.push(Vec::new());
                    FeatId((features.len() - 1) as u16)
                });
                declared_at[fid.0 as usize].push((t, by_name[restr], decl));
            }
        }
        let sub = |a: usize, b: usize| above[a].contains(b);
        for (fi, sites) in declared_at.iter().enumerate() {
            let intro = sites
                .iter()
                .map(|s| s.0)
                .find(|&g| sites.iter().all(|s| sub(s.0, g)));
            match intro {
                Some(g) => features[fi].intro = TypeId(g as u32),
                None => {
                    let (a, b) = incomparable_pair(sites.iter().map(|s| s.0), &sub);
                    errors.push(SignatureError::FeatureIntroduction {
                        feature: features[fi].name.clone(),
                        a: names[a].clone(),
                        b: names[b].clone(),
                    });
                }
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        // Appropriateness: each type inherits every feature declared at one of
        // its supertypes, restricted to the meet of all inherited restrictions.
        let mut approp: Vec<Vec<(FeatId, TypeId)>> = vec![Vec::new(); n];
        for t in 0..n {
            for (fi, sites) in declared_at.iter().enumerate() {
                let mut restr: Option<TypeId> = None;
                let mut applies = false;
                for &(d, r, _) in sites {
                    if sub(t, d) {
                        applies = true;
                        restr = Some(match restr {
                            None => r,
                            Some(prev) => match meet[prev.0 as usize * n + r.0 as usize] {
                                Some(m) => m,
                                None => {
                                    errors.push(SignatureError::Restriction {
                                        feature: features[fi].name.clone(),
                                        at: names[t].clone(),
                                        detail: format!(
                                            "inherited restrictions {} and {} are incompatible",
                                            names[prev.0 as usize], names[r.0 as usize]
                                        ),
                                    });
                                    prev
                                }
                            },
                        });
                    }
                }
                if applies {
                    approp[t].push((FeatId(fi as u16), restr.unwrap_or(TOP)));
                }
            }
        }
        // A redeclaration must not loosen what a supertype already demands.
        for (fi, sites) in declared_at.iter().enumerate() {
            for &(d, r, decl) in sites {
                let inherited = approp[d]
                    .iter()
                    .find(|(f, _)| f.0 as usize == fi)
                    .map(|(_, r)| *r)
                    .unwrap_or(TOP);
                if !sub(r.0 as usize, inherited.0 as usize) {
                    errors.push(SignatureError::Restriction {
                        feature: features[fi].name.clone(),
                        at: decl.name.clone(),
                        detail: format!(
                            "declared restriction {} is not below inherited {}",
                            names[r.0 as usize],
                            names[inherited.0 as usize]
                        ),
                    });
                }
            }
        }

        let atom_type = by_name.get(ATOM_NAME).copied();
        if let Some(a) = atom_type {
            if !approp[a.0 as usize].is_empty() {
                errors.push(SignatureError::AtomWithFeatures);
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        Ok(Signature {
            raw: raw.clone(),
            names,
            by_name,
            atoms: HashMap::new(),
            declared: n,
            atom_type,
            above,
            meet,
            join,
            features,
            feat_by_name,
            approp,
        })
    }

    /// The description this signature was validated from.
    pub fn raw(&self) -> &RawSignature {
        &self.raw
    }

    /// Add atom types (leaves under `atom`). Existing atoms are left alone.
    pub fn add_atoms<I, S>(&mut self, atoms: I) -> Result<(), SignatureError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut iter = atoms.into_iter().peekable();
        if iter.peek().is_none() {
            return Ok(());
        }
        if self.atom_type.is_none() {
            return Err(SignatureError::NoAtomType);
        }
        for a in iter {
            let a = a.as_ref();
            if !self.atoms.contains_key(a) {
                let id = TypeId(self.names.len() as u32);
                self.names.push(a.to_string());
                self.atoms.insert(a.to_string(), id);
            }
        }
        Ok(())
    }

    pub fn type_count(&self) -> usize {
        self.names.len()
    }

    pub fn declared_count(&self) -> usize {
        self.declared
    }

    pub fn is_atom(&self, t: TypeId) -> bool {
        t.0 as usize >= self.declared
    }

    pub fn atom_type(&self) -> Option<TypeId> {
        self.atom_type
    }

    /// Atoms in creation order.
    pub fn atoms(&self) -> impl Iterator<Item = &str> {
        self.names[self.declared..].iter().map(String::as_str)
    }

    /// Look up a declared type by name.
    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn atom_id(&self, name: &str) -> Option<TypeId> {
        self.atoms.get(name).copied()
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.names[t.0 as usize]
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature_id(&self, name: &str) -> Option<FeatId> {
        self.feat_by_name.get(name).copied()
    }

    pub fn feature_name(&self, f: FeatId) -> &str {
        &self.features[f.0 as usize].name
    }

    /// The most general type at which `f` is appropriate.
    pub fn feature_intro(&self, f: FeatId) -> TypeId {
        self.features[f.0 as usize].intro
    }

    /// Greatest lower bound; `None` is failure.
    pub fn meet(&self, a: TypeId, b: TypeId) -> Option<TypeId> {
        if a == b {
            return Some(a);
        }
        match (self.is_atom(a), self.is_atom(b)) {
            (false, false) => self.meet[a.0 as usize * self.declared + b.0 as usize],
            (true, true) => None,
            (true, false) => self.atom_below(b).then_some(a),
            (false, true) => self.atom_below(a).then_some(b),
        }
    }

    /// Least upper bound; always defined.
    pub fn join(&self, a: TypeId, b: TypeId) -> TypeId {
        if a == b {
            return a;
        }
        let lift = |t: TypeId| if self.is_atom(t) { self.atom_type.unwrap_or(TOP) } else { t };
        let (la, lb) = (lift(a), lift(b));
        self.join[la.0 as usize * self.declared + lb.0 as usize]
    }

    /// `a` is at or below `b` (a is at least as specific).
    pub fn subtype(&self, a: TypeId, b: TypeId) -> bool {
        if a == b {
            return true;
        }
        match (self.is_atom(a), self.is_atom(b)) {
            (_, true) => false,
            (true, false) => self.atom_below(b),
            (false, false) => self.above[a.0 as usize].contains(b.0 as usize),
        }
    }

    fn atom_below(&self, t: TypeId) -> bool {
        match self.atom_type {
            Some(at) => self.above[at.0 as usize].contains(t.0 as usize),
            None => false,
        }
    }

    /// Value restriction of `f` at type `t`, or `None` if `f` is not appropriate.
    pub fn approp(&self, t: TypeId, f: FeatId) -> Option<TypeId> {
        if self.is_atom(t) {
            return None;
        }
        let list = &self.approp[t.0 as usize];
        list.binary_search_by_key(&f, |&(g, _)| g).ok().map(|i| list[i].1)
    }

    /// All appropriate features of `t` with their restrictions, in feature order.
    pub fn appropriate(&self, t: TypeId) -> &[(FeatId, TypeId)] {
        if self.is_atom(t) {
            &[]
        } else {
            &self.approp[t.0 as usize]
        }
    }

    /// Declared direct supertypes of a declared type (for serialization).
    pub fn declared_types(&self) -> impl Iterator<Item = (TypeId, &str)> {
        self.names[..self.declared]
            .iter()
            .enumerate()
            .map(|(i, n)| (TypeId(i as u32), n.as_str()))
    }
}

fn by_name_contains(names: &[String], name: &str) -> bool {
    names.iter().any(|n| n == name)
}

fn topo_order(parents: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
            indeg[c] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&t| indeg[t] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(t) = queue.pop() {
        order.push(t);
        for &c in &children[t] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                queue.push(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&t| indeg[t] > 0).collect())
    }
}

fn incomparable_pair(
    sites: impl Iterator<Item = usize> + Clone,
    sub: &impl Fn(usize, usize) -> bool,
) -> (usize, usize) {
    for a in sites.clone() {
        for b in sites.clone() {
            if !sub(a, b) && !sub(b, a) {
                return (a, b);
            }
        }
    }
    let mut it = sites;
    let a = it.next().unwrap_or(0);
    (a, it.next().unwrap_or(a))
}

#[cfg(test)]
mod tests {
    use crate::syntax::load_signature;

    #[test]
    fn diamond_without_meet_is_rejected() {
        // a and b share two maximal subtypes
        let err = load_signature("type top sub [a, b].\ntype a sub [c, d].\ntype b sub [c, d].\ntype c.\ntype d.")
            .unwrap_err();
        assert!(err.iter().any(|d| d.message.contains("GLB")), "{err:?}");
    }

    #[test]
    fn meet_and_join() {
        let s = load_signature("type top sub [x, atom].\ntype x sub [y, z].\ntype atom.").unwrap();
        let id = |n| s.type_id(n).unwrap();
        assert_eq!(s.meet(id("x"), id("y")), Some(id("y")));
        assert_eq!(s.meet(id("y"), id("z")), None);
        assert_eq!(s.join(id("y"), id("z")), id("x"));
        assert_eq!(s.join(id("y"), id("atom")), super::TOP);
    }
}
