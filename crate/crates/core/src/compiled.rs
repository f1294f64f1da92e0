//! Binary format for compiled programs (and an optional lexicon index).
//!
//! Layout: magic, u16 version, then sections `[u8 tag][u32 len][bytes]`
//! in fixed order, then a CRC32 of everything before it. All integers are
//! little-endian. Type, feature, atom and predicate names go through a
//! string table; the signature is re-validated on read, so ids never leak
//! into the file.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::fs::{FeatureStructure, Node, NodeId};
use crate::index::IndexedLexicon;
use crate::program::{Clause, ClauseId, PredId, Program};
use crate::signature::{FeatId, RawSignature, Signature, TypeDecl, TypeId};

pub const MAGIC: &[u8; 6] = b"HPSGC\0";
pub const VERSION: u16 = 1;

const STRINGS: u8 = 1;
const SIGNATURE: u8 = 2;
const PREDS: u8 = 3;
const CLAUSES: u8 = 4;
const META: u8 = 5;
const INDEX: u8 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("not a compiled program (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("checksum mismatch: file is corrupted")]
    Checksum,
    #[error("truncated file")]
    Truncated,
    #[error("malformed {section} section: {detail}")]
    Malformed { section: &'static str, detail: String },
    #[error("embedded signature is invalid: {0}")]
    Signature(String),
}

#[derive(Default)]
struct Strings {
    list: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Strings {
    fn id(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.ids.get(s) {
            return i;
        }
        let i = self.list.len() as u32;
        self.list.push(s.to_string());
        self.ids.insert(s.to_string(), i);
        i
    }
}

#[derive(Default)]
struct Out(Vec<u8>);

impl Out {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("section too large"));
    }
}

fn write_fs(o: &mut Out, s: &mut Strings, sig: &Signature, fs: &FeatureStructure) {
    o.len(fs.node_count());
    for n in fs.nodes() {
        o.u32(s.id(sig.type_name(n.ty)));
        o.len(n.arcs.len());
        for &(f, t) in &n.arcs {
            o.u32(s.id(sig.feature_name(f)));
            o.u32(t.0);
        }
    }
    o.len(fs.roots().len());
    for r in fs.roots() {
        o.u32(r.0);
    }
}

/// Serialize a program, with its index when given.
pub fn write_compiled(program: &Program, index: Option<&IndexedLexicon>) -> Vec<u8> {
    let sig = program.sig();
    let mut s = Strings::default();

    let mut sg = Out::default();
    let raw = sig.raw();
    sg.len(raw.decls.len());
    for d in &raw.decls {
        sg.u32(s.id(&d.name));
        sg.len(d.subs.len());
        for t in &d.subs {
            sg.u32(s.id(t));
        }
        sg.len(d.intro.len());
        for (f, r) in &d.intro {
            sg.u32(s.id(f));
            sg.u32(s.id(r));
        }
    }
    let atoms: Vec<&str> = sig.atoms().collect();
    sg.len(atoms.len());
    for a in atoms {
        sg.u32(s.id(a));
    }

    let mut pr = Out::default();
    let preds: Vec<_> = program.preds().collect();
    pr.len(preds.len());
    for (_, p) in &preds {
        pr.u32(s.id(&p.name));
        pr.len(p.arity);
        pr.u8(p.interaction as u8);
    }

    let mut cl = Out::default();
    cl.u32(program.next_clause_id());
    cl.len(program.clauses().len());
    for c in program.clauses() {
        cl.u32(c.id.0);
        cl.u32(c.head.pred.0);
        cl.len(c.body.len());
        for l in &c.body {
            cl.u32(l.pred.0);
        }
        write_fs(&mut cl, &mut s, sig, &c.graph);
    }

    let mut me = Out::default();
    match program.meta.entry_pred {
        Some(p) => {
            me.u8(1);
            me.u32(p.0);
        }
        None => me.u8(0),
    }
    me.len(program.meta.rule_preds.len());
    for p in &program.meta.rule_preds {
        me.u32(p.0);
    }
    me.u8(program.meta.nonterminating as u8);

    let ix = index.map(|ix| {
        let mut o = Out::default();
        let keys = ix.keys();
        o.len(keys.len());
        for k in keys {
            o.len(k.len());
            for w in k {
                o.u32(s.id(w));
            }
            let ids = &ix.buckets[k];
            o.len(ids.len());
            for id in ids {
                o.u32(id.0);
            }
        }
        o.len(ix.fallback.len());
        for id in &ix.fallback {
            o.u32(id.0);
        }
        o
    });

    let mut st = Out::default();
    st.len(s.list.len());
    for x in &s.list {
        st.len(x.len());
        st.0.extend_from_slice(x.as_bytes());
    }

    let mut out = Out::default();
    out.0.extend_from_slice(MAGIC);
    out.0.extend_from_slice(&VERSION.to_le_bytes());
    let mut sections = vec![(STRINGS, st), (SIGNATURE, sg), (PREDS, pr), (CLAUSES, cl), (META, me)];
    if let Some(ix) = ix {
        sections.push((INDEX, ix));
    }
    for (tag, body) in sections {
        out.u8(tag);
        out.len(body.0.len());
        out.0.extend_from_slice(&body.0);
    }
    let crc = crc32fast::hash(&out.0);
    out.u32(crc);
    out.0
}

struct In<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> In<'a> {
    fn bad(&self, detail: impl Into<String>) -> FormatError {
        FormatError::Malformed { section: self.section, detail: detail.into() }
    }
    fn bytes(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(FormatError::Truncated)?;
        let b = &self.buf[self.pos..end];
        self.pos = end;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.bytes(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }
    /// A count, sanity-checked against the bytes left (each item takes at least `min` bytes).
    fn count(&mut self, min: usize) -> Result<usize, FormatError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min) > self.buf.len() - self.pos {
            return Err(self.bad(format!("count {n} exceeds section size")));
        }
        Ok(n)
    }
    fn name(&mut self, strings: &[String]) -> Result<String, FormatError> {
        let i = self.u32()?;
        strings.get(i as usize).cloned().ok_or_else(|| self.bad(format!("string id {i} out of range")))
    }
    fn pred(&mut self, count: usize) -> Result<PredId, FormatError> {
        let i = self.u32()?;
        if (i as usize) < count {
            Ok(PredId(i))
        } else {
            Err(self.bad(format!("predicate id {i} out of range")))
        }
    }
    fn done(&self) -> Result<(), FormatError> {
        if self.pos != self.buf.len() {
            return Err(self.bad("trailing bytes"));
        }
        Ok(())
    }
}

fn read_fs(r: &mut In<'_>, names: &[String], sig: &Signature) -> Result<FeatureStructure, FormatError> {
    let n = r.count(8)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let tname = r.name(names)?;
        let ty: TypeId = sig.type_id(&tname).or_else(|| sig.atom_id(&tname)).ok_or_else(|| r.bad(format!("unknown type {tname}")))?;
        let mut node = Node::new(ty);
        let k = r.count(8)?;
        for _ in 0..k {
            let fname = r.name(names)?;
            let f: FeatId = sig.feature_id(&fname).ok_or_else(|| r.bad(format!("unknown feature {fname}")))?;
            let t = r.u32()?;
            if t as usize >= n {
                return Err(r.bad("arc target out of range"));
            }
            node.arcs.push((f, NodeId(t)));
        }
        nodes.push(node);
    }
    let k = r.count(4)?;
    let mut roots = Vec::with_capacity(k);
    for _ in 0..k {
        let t = r.u32()?;
        if t as usize >= n {
            return Err(r.bad("root out of range"));
        }
        roots.push(NodeId(t));
    }
    let fs = FeatureStructure::from_parts(nodes, roots);
    fs.check(sig).map_err(|e| r.bad(e))?;
    Ok(fs)
}

/// Parse a compiled file; the index is returned when one was stored.
pub fn read_compiled(bytes: &[u8]) -> Result<(Program, Option<IndexedLexicon>), FormatError> {
    if bytes.len() < MAGIC.len() + 2 + 4 {
        return Err(if bytes.starts_with(MAGIC) { FormatError::Truncated } else { FormatError::BadMagic });
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
        return Err(FormatError::Checksum);
    }
    let version = u16::from_le_bytes([body[6], body[7]]);
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let mut top = In { buf: body, pos: 8, section: "header" };
    let mut sections: HashMap<u8, &[u8]> = HashMap::new();
    let mut last = 0;
    while top.pos < body.len() {
        let tag = top.u8()?;
        if tag <= last || tag > INDEX {
            return Err(top.bad(format!("unexpected section tag {tag}")));
        }
        last = tag;
        let len = top.u32()? as usize;
        sections.insert(tag, top.bytes(len)?);
    }
    let section = |tag: u8, name: &'static str| -> Result<In<'_>, FormatError> {
        let buf = sections.get(&tag).copied().ok_or(FormatError::Malformed { section: name, detail: "missing".into() })?;
        Ok(In { buf, pos: 0, section: name })
    };

    let mut r = section(STRINGS, "strings")?;
    let n = r.count(4)?;
    let mut strings = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.count(1)?;
        let b = r.bytes(len)?;
        strings.push(String::from_utf8(b.to_vec()).map_err(|_| r.bad("invalid UTF-8"))?);
    }
    r.done()?;

    let mut r = section(SIGNATURE, "signature")?;
    let mut raw = RawSignature::default();
    for _ in 0..r.count(12)? {
        let name = r.name(&strings)?;
        let mut subs = Vec::new();
        for _ in 0..r.count(4)? {
            subs.push(r.name(&strings)?);
        }
        let mut intro = Vec::new();
        for _ in 0..r.count(8)? {
            let f = r.name(&strings)?;
            let t = r.name(&strings)?;
            intro.push((f, t));
        }
        raw.decls.push(TypeDecl { name, subs, intro, line: 0, col: 0 });
    }
    let mut atoms = Vec::new();
    for _ in 0..r.count(4)? {
        atoms.push(r.name(&strings)?);
    }
    r.done()?;
    let mut sig = Signature::validate(&raw).map_err(|errs| {
        FormatError::Signature(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    sig.add_atoms(&atoms).map_err(|e| FormatError::Signature(e.to_string()))?;
    let sig = Arc::new(sig);
    let mut program = Program::new(sig.clone());

    let mut r = section(PREDS, "predicates")?;
    let np = r.count(9)?;
    for _ in 0..np {
        let name = r.name(&strings)?;
        let arity = r.u32()? as usize;
        let inter = r.u8()? != 0;
        if program.pred_id(&name, arity).is_some() {
            return Err(r.bad(format!("duplicate predicate {name}/{arity}")));
        }
        let p = program.intern_pred(&name, arity);
        program.set_interaction(p, inter);
    }
    r.done()?;

    let mut r = section(CLAUSES, "clauses")?;
    let next_id = r.u32()?;
    let mut prev: Option<u32> = None;
    for _ in 0..r.count(16)? {
        let id = r.u32()?;
        if prev.is_some_and(|p| p >= id) {
            return Err(r.bad("clause ids not increasing"));
        }
        prev = Some(id);
        let head = r.pred(np)?;
        let mut body = Vec::new();
        for _ in 0..r.count(4)? {
            body.push(r.pred(np)?);
        }
        let graph = read_fs(&mut r, &strings, &sig)?;
        let arities: Vec<usize> =
            std::iter::once(head).chain(body.iter().copied()).map(|p| program.pred(p).arity).collect();
        if arities.iter().sum::<usize>() != graph.roots().len() {
            return Err(r.bad(format!("clause {id}: argument count does not match roots")));
        }
        program.push_clause(Clause::from_graph(ClauseId(id), head, &body, &arities, graph));
    }
    r.done()?;
    program.set_next_clause_id(next_id);

    let mut r = section(META, "metadata")?;
    if r.u8()? != 0 {
        program.meta.entry_pred = Some(r.pred(np)?);
    }
    for _ in 0..r.count(4)? {
        let p = r.pred(np)?;
        program.meta.rule_preds.push(p);
    }
    program.meta.nonterminating = r.u8()? != 0;
    r.done()?;

    let index = match sections.get(&INDEX) {
        None => None,
        Some(_) => {
            let mut r = section(INDEX, "index")?;
            let known = |r: &mut In<'_>| -> Result<ClauseId, FormatError> {
                let c = ClauseId(r.u32()?);
                program.clause_by_id(c).map(|_| c).ok_or_else(|| r.bad(format!("unknown clause {}", c.0)))
            };
            let mut buckets = HashMap::new();
            for _ in 0..r.count(8)? {
                let mut key = Vec::new();
                for _ in 0..r.count(4)? {
                    key.push(r.name(&strings)?);
                }
                let mut ids = Vec::new();
                for _ in 0..r.count(4)? {
                    ids.push(known(&mut r)?);
                }
                buckets.insert(key, ids);
            }
            let mut fallback = Vec::new();
            for _ in 0..r.count(4)? {
                fallback.push(known(&mut r)?);
            }
            r.done()?;
            if program.pred_id(crate::index::INDEX_PRED, 1).is_none() {
                return Err(r.bad("index without index predicate"));
            }
            Some(IndexedLexicon::from_parts(program.clone(), buckets, fallback))
        }
    };
    Ok((program, index))
}
