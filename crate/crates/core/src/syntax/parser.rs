//! Recursive-descent parser for signature and grammar files.
//!
//! Descriptions are built directly into a [`Store`], so tags, path
//! abbreviations and type inference all reduce to unification.

use std::collections::HashMap;
use std::fmt;

use crate::fs::{FeatureStructure, NodeId};
use crate::signature::{RawSignature, Signature, TypeDecl, TOP};
use crate::store::{Clash, Store};

use super::lexer::{tokenize, LexError, Tok, Token};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for Diagnostic {}

impl From<LexError> for Diagnostic {
    fn from(e: LexError) -> Self {
        Diagnostic { line: e.line, col: e.col, message: e.message }
    }
}

/// A literal whose arguments index into the enclosing graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawLiteral {
    pub name: String,
    pub args: Vec<NodeId>,
}

/// A clause before predicate resolution. Graph roots are the flattened
/// arguments of the head and then of each body literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawClause {
    pub head: RawLiteral,
    pub body: Vec<RawLiteral>,
    pub graph: FeatureStructure,
    pub line: usize,
}

/// A lexical rule: head is `NAME(IN, OUT)`.
pub type RawRule = RawClause;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Grammar {
    pub clauses: Vec<RawClause>,
    pub rules: Vec<RawRule>,
    pub entries: Vec<FeatureStructure>,
}

#[derive(Clone, Debug)]
enum Val {
    Tag(u32, Option<Box<Val>>),
    Type(String),
    Atom(String),
    Avm { ty: Option<(String, usize, usize)>, feats: Vec<(Vec<(String, usize, usize)>, Val)> },
    List { items: Vec<Val>, tail: Option<Box<Val>> },
}

#[derive(Clone, Debug)]
struct Spanned {
    val: Val,
    line: usize,
    col: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(text: &str) -> PResult<Parser> {
        Ok(Parser { toks: tokenize(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(Diagnostic { line, col, message: message.into() })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.next())
        } else {
            self.err(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<(String, usize, usize)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let t = self.next();
                Ok((s, t.line, t.col))
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    /// Skip to just past the next `.` after an error.
    fn recover(&mut self) {
        while !self.at_eof() {
            if self.next().tok == Tok::Dot {
                break;
            }
        }
    }

    /// `F:` or `F|G|..:` ahead.
    fn at_feature_path(&self) -> bool {
        let mut k = 0;
        loop {
            if !matches!(self.peek_at(k), Tok::Ident(_)) {
                return false;
            }
            match self.peek_at(k + 1) {
                Tok::Colon => return true,
                Tok::Bar => k += 2,
                _ => return false,
            }
        }
    }

    fn starts_value(&self) -> bool {
        match self.peek() {
            Tok::LParen | Tok::LAngle | Tok::Str(_) | Tok::Tag(_) => true,
            Tok::Ident(_) => !self.at_feature_path(),
            _ => false,
        }
    }

    fn value(&mut self) -> PResult<Spanned> {
        let (line, col) = self.here();
        let val = match self.peek().clone() {
            Tok::Tag(n) => {
                self.next();
                // A tag may carry its value: `#1 (noun)`, `#1 <>`, `#1 "x"`.
                let inner = if self.starts_value() && !matches!(self.peek(), Tok::Tag(_)) {
                    Some(Box::new(Val::wrap(self.value()?)))
                } else {
                    None
                };
                Val::Tag(n, inner)
            }
            Tok::Str(s) => {
                self.next();
                Val::Atom(s)
            }
            Tok::Ident(s) => {
                self.next();
                Val::Type(s)
            }
            Tok::LParen => {
                self.next();
                let mut ty = None;
                if let Tok::Ident(_) = self.peek() {
                    if !self.at_feature_path() {
                        ty = Some(self.ident()?);
                    }
                }
                let mut feats = Vec::new();
                while *self.peek() != Tok::RParen {
                    let mut path = vec![self.ident()?];
                    while *self.peek() == Tok::Bar {
                        self.next();
                        path.push(self.ident()?);
                    }
                    self.expect(Tok::Colon)?;
                    let v = self.value()?;
                    feats.push((path, Val::wrap(v)));
                    if *self.peek() == Tok::Comma {
                        self.next();
                    }
                }
                self.expect(Tok::RParen)?;
                Val::Avm { ty, feats }
            }
            Tok::LAngle => {
                self.next();
                let mut items = Vec::new();
                let mut tail = None;
                if *self.peek() != Tok::RAngle {
                    loop {
                        items.push(Val::wrap(self.value()?));
                        match self.peek() {
                            Tok::Comma => {
                                self.next();
                            }
                            Tok::Bar => {
                                self.next();
                                tail = Some(Box::new(Val::wrap(self.value()?)));
                                break;
                            }
                            _ => break,
                        }
                    }
                }
                self.expect(Tok::RAngle)?;
                Val::List { items, tail }
            }
            other => return self.err(format!("expected a value, found {other}")),
        };
        Ok(Spanned { val, line, col })
    }

    fn args(&mut self) -> PResult<Vec<Spanned>> {
        let mut out = Vec::new();
        if *self.peek() != Tok::LParen {
            return Ok(out);
        }
        self.next();
        if *self.peek() == Tok::RParen {
            self.next();
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn literal(&mut self) -> PResult<(String, Vec<Spanned>)> {
        let (name, _, _) = self.ident()?;
        let args = self.args()?;
        Ok((name, args))
    }

    fn body(&mut self) -> PResult<Vec<(String, Vec<Spanned>)>> {
        let mut out = Vec::new();
        if *self.peek() != Tok::Neck {
            return Ok(out);
        }
        self.next();
        loop {
            out.push(self.literal()?);
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        Ok(out)
    }
}

impl Val {
    /// Keep positions by wrapping spans into the tree where needed.
    fn wrap(s: Spanned) -> Val {
        match s.val {
            Val::Type(name) => Val::Avm { ty: Some((name, s.line, s.col)), feats: Vec::new() },
            other => other,
        }
    }
}

// ---- signature files ----

/// Parse `type NAME [sub [A, B]] [intro [F:T, ..]].` declarations.
pub fn parse_signature(text: &str) -> Result<RawSignature, Vec<Diagnostic>> {
    let mut p = Parser::new(text).map_err(|d| vec![d])?;
    let mut decls = Vec::new();
    let mut errors = Vec::new();
    while !p.at_eof() {
        match type_decl(&mut p) {
            Ok(d) => decls.push(d),
            Err(e) => {
                errors.push(e);
                p.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(RawSignature { decls })
    } else {
        Err(errors)
    }
}

fn type_decl(p: &mut Parser) -> PResult<TypeDecl> {
    let (kw, line, col) = p.ident()?;
    if kw != "type" {
        return Err(Diagnostic { line, col, message: format!("expected `type`, found `{kw}`") });
    }
    let (name, line, col) = p.ident()?;
    let mut decl = TypeDecl { name, line, col, ..Default::default() };
    loop {
        match p.peek().clone() {
            Tok::Dot => {
                p.next();
                return Ok(decl);
            }
            Tok::Ident(k) if k == "sub" => {
                p.next();
                p.expect(Tok::LBracket)?;
                while *p.peek() != Tok::RBracket {
                    decl.subs.push(p.ident()?.0);
                    if *p.peek() == Tok::Comma {
                        p.next();
                    }
                }
                p.next();
            }
            Tok::Ident(k) if k == "intro" => {
                p.next();
                p.expect(Tok::LBracket)?;
                while *p.peek() != Tok::RBracket {
                    let f = p.ident()?.0;
                    p.expect(Tok::Colon)?;
                    let t = p.ident()?.0;
                    decl.intro.push((f, t));
                    if *p.peek() == Tok::Comma {
                        p.next();
                    }
                }
                p.next();
            }
            other => return p.err(format!("expected `sub`, `intro` or `.`, found {other}")),
        }
    }
}

/// Parse and validate a signature file, reporting both syntax and
/// lattice errors as diagnostics.
pub fn load_signature(text: &str) -> Result<Signature, Vec<Diagnostic>> {
    let raw = parse_signature(text)?;
    Signature::validate(&raw).map_err(|errs| {
        errs.into_iter()
            .map(|e| {
                let (line, col) = match &e {
                    crate::error::SignatureError::UnknownType { line, col, .. } => (*line, *col),
                    _ => (0, 0),
                };
                Diagnostic { line, col, message: e.to_string() }
            })
            .collect()
    })
}

// ---- grammar files ----

/// Every quoted atom in a grammar or query text.
pub fn collect_atoms(text: &str) -> Result<Vec<String>, Diagnostic> {
    let mut out: Vec<String> = tokenize(text)?
        .into_iter()
        .filter_map(|t| match t.tok {
            Tok::Str(s) => Some(s),
            _ => None,
        })
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Builds parsed descriptions into a store, one item at a time.
struct Builder<'s> {
    sig: &'s Signature,
    store: Store<'s>,
    tags: HashMap<u32, u32>,
}

impl<'s> Builder<'s> {
    fn new(sig: &'s Signature) -> Self {
        Builder { sig, store: Store::new(sig), tags: HashMap::new() }
    }

    fn clash(&self, c: Clash, line: usize, col: usize) -> Diagnostic {
        let message = match c {
            Clash::Types { left, right, .. } => format!(
                "inconsistent description: {} and {} have no common subtype",
                self.sig.type_name(left),
                self.sig.type_name(right)
            ),
            Clash::Cycle => "description is cyclic".to_string(),
        };
        Diagnostic { line, col, message }
    }

    fn unify(&mut self, a: u32, b: u32, line: usize, col: usize) -> PResult<()> {
        self.store.unify(a, b).map_err(|c| self.clash(c, line, col))
    }

    fn type_node(&mut self, name: &str, line: usize, col: usize) -> PResult<u32> {
        match self.sig.type_id(name) {
            Some(t) => Ok(self.store.fresh(t)),
            None => Err(Diagnostic { line, col, message: format!("unknown type `{name}`") }),
        }
    }

    fn list_type(&mut self, name: &str, line: usize, col: usize) -> PResult<u32> {
        self.type_node(name, line, col).map_err(|mut d| {
            d.message = format!("list notation needs type `{name}` in the signature");
            d
        })
    }

    fn build(&mut self, s: &Spanned) -> PResult<u32> {
        self.build_val(&s.val, s.line, s.col)
    }

    fn build_val(&mut self, v: &Val, line: usize, col: usize) -> PResult<u32> {
        match v {
            Val::Tag(n, inner) => {
                let node = match self.tags.get(n) {
                    Some(&x) => x,
                    None => {
                        let x = self.store.fresh(TOP);
                        self.tags.insert(*n, x);
                        x
                    }
                };
                if let Some(inner) = inner {
                    let x = self.build_val(inner, line, col)?;
                    self.unify(node, x, line, col)?;
                }
                Ok(node)
            }
            Val::Type(name) => self.type_node(name, line, col),
            Val::Atom(a) => match self.sig.atom_id(a) {
                Some(t) => Ok(self.store.fresh(t)),
                None => Err(Diagnostic { line, col, message: format!("unknown atom \"{a}\"") }),
            },
            Val::Avm { ty, feats } => {
                let node = match ty {
                    Some((name, l, c)) => self.type_node(name, *l, *c)?,
                    None => self.store.fresh(TOP),
                };
                for (path, val) in feats {
                    let mut cur = node;
                    for (fname, l, c) in path {
                        let Some(f) = self.sig.feature_id(fname) else {
                            return Err(Diagnostic {
                                line: *l,
                                col: *c,
                                message: format!("unknown feature `{fname}`"),
                            });
                        };
                        let here = self.store.ty(cur);
                        cur = self.store.ensure_arc(cur, f).map_err(|_| Diagnostic {
                            line: *l,
                            col: *c,
                            message: format!(
                                "feature `{fname}` is not appropriate for type `{}`",
                                self.sig.type_name(here)
                            ),
                        })?;
                    }
                    let (l, c) = path.last().map(|p| (p.1, p.2)).unwrap_or((line, col));
                    let x = self.build_val(val, l, c)?;
                    self.unify(cur, x, l, c)?;
                }
                Ok(node)
            }
            Val::List { items, tail } => {
                let (Some(first), Some(rest)) = (self.sig.feature_id("FIRST"), self.sig.feature_id("REST"))
                else {
                    return Err(Diagnostic {
                        line,
                        col,
                        message: "list notation needs features FIRST and REST".into(),
                    });
                };
                let mut cur = match tail {
                    Some(t) => self.build_val(t, line, col)?,
                    None => self.list_type("e_list", line, col)?,
                };
                for item in items.iter().rev() {
                    let cell = self.list_type("ne_list", line, col)?;
                    let hd = self.store.ensure_arc(cell, first).map_err(|c| self.clash(c, line, col))?;
                    let x = self.build_val(item, line, col)?;
                    self.unify(hd, x, line, col)?;
                    let tl = self.store.ensure_arc(cell, rest).map_err(|c| self.clash(c, line, col))?;
                    self.unify(tl, cur, line, col)?;
                    cur = cell;
                }
                Ok(cur)
            }
        }
    }

    fn finish(&mut self, roots: &[u32]) -> FeatureStructure {
        let fs = self.store.extract(roots);
        self.store = Store::new(self.sig);
        self.tags.clear();
        fs
    }

    /// Build head and body literals over one graph.
    fn clause(
        &mut self,
        head: (String, Vec<Spanned>),
        body: Vec<(String, Vec<Spanned>)>,
        line: usize,
    ) -> PResult<RawClause> {
        let mut roots = Vec::new();
        let mut shape = Vec::new();
        for (name, args) in std::iter::once(head).chain(body) {
            for a in &args {
                roots.push(self.build(a)?);
            }
            shape.push((name, args.len()));
        }
        let graph = self.finish(&roots).compact();
        let ids = graph.roots().to_vec();
        let mut pos = 0;
        let mut lits = shape.into_iter().map(|(name, k)| {
            let l = RawLiteral { name, args: ids[pos..pos + k].to_vec() };
            pos += k;
            l
        });
        let head = lits.next().expect("head literal");
        let body = lits.collect();
        Ok(RawClause { head, body, graph, line })
    }
}

/// Parse a grammar file. All quoted atoms must already be known to `sig`
/// (see [`collect_atoms`]).
pub fn parse_grammar(text: &str, sig: &Signature) -> Result<Grammar, Vec<Diagnostic>> {
    let mut p = Parser::new(text).map_err(|d| vec![d])?;
    let mut b = Builder::new(sig);
    let mut g = Grammar::default();
    let mut errors = Vec::new();
    while !p.at_eof() {
        let start = p.pos;
        match grammar_item(&mut p, &mut b, &mut g) {
            Ok(()) => {}
            Err(e) => {
                errors.push(e);
                b.finish(&[]);
                if p.pos == start || p.toks[p.pos - 1].tok != Tok::Dot {
                    p.recover();
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(g)
    } else {
        Err(errors)
    }
}

fn grammar_item(p: &mut Parser, b: &mut Builder<'_>, g: &mut Grammar) -> PResult<()> {
    let (line, _) = p.here();
    match p.peek().clone() {
        Tok::Ident(k) if k == "entry" => {
            p.next();
            let v = p.value()?;
            let root = b.build(&v)?;
            p.expect(Tok::Dot)?;
            g.entries.push(b.finish(&[root]).compact());
        }
        Tok::Ident(k) if k == "lexrule" => {
            p.next();
            let (name, _, _) = p.ident()?;
            let mut io = Vec::new();
            for kw in ["in", "out"] {
                let (got, l, c) = p.ident()?;
                if got != kw {
                    return Err(Diagnostic { line: l, col: c, message: format!("expected `{kw}:`") });
                }
                p.expect(Tok::Colon)?;
                io.push(p.value()?);
            }
            let body = p.body()?;
            p.expect(Tok::Dot)?;
            g.rules.push(b.clause((name, io), body, line)?);
        }
        _ => {
            let head = p.literal()?;
            let body = p.body()?;
            p.expect(Tok::Dot)?;
            g.clauses.push(b.clause(head, body, line)?);
        }
    }
    Ok(())
}

/// A single description, e.g. `(sign PHON:<"x">)`.
pub fn parse_fs(text: &str, sig: &Signature) -> Result<FeatureStructure, Diagnostic> {
    let mut p = Parser::new(text)?;
    let v = p.value()?;
    if *p.peek() == Tok::Dot {
        p.next();
    }
    if !p.at_eof() {
        return p.err(format!("unexpected {} after description", p.peek()));
    }
    let mut b = Builder::new(sig);
    let root = b.build(&v)?;
    Ok(b.finish(&[root]).compact())
}

/// A conjunctive query `p(..), q(..)`; tags are shared across literals.
/// Returns the literal names with arities and the goal graph.
pub fn parse_query(
    text: &str,
    sig: &Signature,
) -> Result<(Vec<(String, usize)>, FeatureStructure), Diagnostic> {
    let mut p = Parser::new(text)?;
    let mut lits = vec![p.literal()?];
    while *p.peek() == Tok::Comma {
        p.next();
        lits.push(p.literal()?);
    }
    if *p.peek() == Tok::Dot {
        p.next();
    }
    if !p.at_eof() {
        return p.err(format!("unexpected {} after query", p.peek()));
    }
    let mut b = Builder::new(sig);
    let mut roots = Vec::new();
    let mut shape = Vec::new();
    for (name, args) in &lits {
        for a in args {
            roots.push(b.build(a)?);
        }
        shape.push((name.clone(), args.len()));
    }
    Ok((shape, b.finish(&roots).compact()))
}
