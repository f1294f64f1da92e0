//! Printing feature structures and clauses in the input syntax.
//!
//! Output re-parses to an isomorphic structure (modulo uninformative arcs).

use std::collections::HashMap;
use std::fmt::Write;

use crate::fs::{FeatureStructure, NodeId};
use crate::program::{Clause, Program};
use crate::signature::{FeatId, Signature, TypeId, TOP};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    /// Everything on one line.
    Compact,
    /// One feature per line.
    Indented,
}

struct Printer<'a> {
    sig: &'a Signature,
    fs: &'a FeatureStructure,
    style: Style,
    deg: Vec<u32>,
    tags: HashMap<NodeId, u32>,
    first: Option<FeatId>,
    rest: Option<FeatId>,
    ne_list: Option<TypeId>,
    e_list: Option<TypeId>,
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

impl<'a> Printer<'a> {
    fn new(sig: &'a Signature, fs: &'a FeatureStructure, style: Style) -> Self {
        Printer {
            sig,
            fs,
            style,
            deg: fs.in_degrees(),
            tags: HashMap::new(),
            first: sig.feature_id("FIRST"),
            rest: sig.feature_id("REST"),
            ne_list: sig.type_id("ne_list"),
            e_list: sig.type_id("e_list"),
        }
    }

    fn shared(&self, n: NodeId) -> bool {
        self.deg[n.index()] > 1
    }

    fn is_list_cell(&self, n: NodeId) -> bool {
        let node = self.fs.node(n);
        Some(node.ty) == self.ne_list
            && node.arcs.iter().all(|&(f, _)| Some(f) == self.first || Some(f) == self.rest)
    }

    fn is_empty_list(&self, n: NodeId) -> bool {
        Some(self.fs.ty(n)) == self.e_list && self.fs.node(n).arcs.is_empty()
    }

    fn node(&mut self, n: NodeId, out: &mut String, indent: usize) {
        if self.shared(n) {
            if let Some(&k) = self.tags.get(&n) {
                let _ = write!(out, "#{k}");
                return;
            }
            let k = self.tags.len() as u32 + 1;
            self.tags.insert(n, k);
            let _ = write!(out, "#{k}");
            let node = self.fs.node(n);
            if node.ty == TOP && node.arcs.is_empty() {
                return;
            }
            out.push(' ');
        }
        self.body(n, out, indent);
    }

    fn body(&mut self, n: NodeId, out: &mut String, indent: usize) {
        let node = self.fs.node(n);
        let ty = node.ty;
        if self.sig.is_atom(ty) {
            out.push_str(&quote(self.sig.type_name(ty)));
            return;
        }
        if self.is_empty_list(n) {
            out.push_str("<>");
            return;
        }
        if self.is_list_cell(n) {
            self.list(n, out, indent);
            return;
        }
        if node.arcs.is_empty() {
            out.push_str(self.sig.type_name(ty));
            return;
        }
        out.push('(');
        if ty != TOP {
            out.push_str(self.sig.type_name(ty));
        }
        let arcs = node.arcs.clone();
        for (i, (f, t)) in arcs.into_iter().enumerate() {
            match self.style {
                Style::Compact => {
                    if i > 0 || ty != TOP {
                        out.push(' ');
                    }
                }
                Style::Indented => {
                    out.push('\n');
                    out.push_str(&" ".repeat(indent + 2));
                }
            }
            out.push_str(self.sig.feature_name(f));
            out.push(':');
            if self.style == Style::Indented {
                out.push(' ');
            }
            self.node(t, out, indent + 2);
        }
        out.push(')');
    }

    fn list(&mut self, n: NodeId, out: &mut String, indent: usize) {
        out.push('<');
        let mut cur = n;
        loop {
            match self.first.and_then(|f| self.fs.arc(cur, f)) {
                Some(hd) => self.node(hd, out, indent),
                None => out.push_str("top"),
            }
            let Some(tl) = self.rest.and_then(|f| self.fs.arc(cur, f)) else {
                out.push_str(" | list");
                break;
            };
            if self.shared(tl) {
                out.push_str(" | ");
                self.node(tl, out, indent);
                break;
            }
            if self.is_empty_list(tl) {
                break;
            }
            if self.is_list_cell(tl) {
                out.push_str(", ");
                cur = tl;
                continue;
            }
            out.push_str(" | ");
            self.body(tl, out, indent);
            break;
        }
        out.push('>');
    }

    fn roots(&mut self, roots: &[NodeId], out: &mut String) {
        for (i, &r) in roots.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            self.node(r, out, 0);
        }
    }
}

/// All roots of `fs`, comma-separated.
pub fn print_fs(sig: &Signature, fs: &FeatureStructure, style: Style) -> String {
    let mut p = Printer::new(sig, fs, style);
    let mut out = String::new();
    p.roots(fs.roots(), &mut out);
    out
}

pub fn print_clause(program: &Program, clause: &Clause, style: Style) -> String {
    let sig = program.sig();
    let mut p = Printer::new(sig, &clause.graph, style);
    let mut out = String::new();
    let lit = |p: &mut Printer<'_>, out: &mut String, l: &crate::program::Literal| {
        out.push_str(&program.pred(l.pred).name);
        if !l.args.is_empty() {
            out.push('(');
            p.roots(&l.args, out);
            out.push(')');
        }
    };
    lit(&mut p, &mut out, &clause.head);
    for (i, b) in clause.body.iter().enumerate() {
        out.push_str(if i == 0 { " :-" } else { "," });
        match style {
            Style::Compact => out.push(' '),
            Style::Indented => out.push_str("\n    "),
        }
        lit(&mut p, &mut out, b);
    }
    out.push('.');
    out
}

/// Every clause, one per line, in program order.
pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for c in program.clauses() {
        out.push_str(&print_clause(program, c, Style::Compact));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::{load_signature, parse_fs};

    fn sig() -> Signature {
        let mut s = load_signature(
            "type top sub [list, head, atom].
             type list sub [e_list, ne_list].
             type ne_list intro [FIRST:top, REST:list].
             type head sub [noun, verb] intro [AGR:top, L:list].",
        )
        .unwrap();
        s.add_atoms(["a", "b c"]).unwrap();
        s
    }

    #[test]
    fn round_trips() {
        let s = sig();
        for text in [
            "<>",
            "<\"a\", #1 noun | #2>",
            "(noun AGR:#1 L:<#1, \"b c\">)",
            "(head L:<top | list>)",
            "(verb AGR:#1 L:<#1 | #2>)",
        ] {
            let fs = parse_fs(text, &s).unwrap_or_else(|e| panic!("{text}: {e}"));
            for style in [Style::Compact, Style::Indented] {
                let printed = print_fs(&s, &fs, style);
                let back = parse_fs(&printed, &s).unwrap_or_else(|e| panic!("{printed}: {e}"));
                assert!(back.iso_eq(&s, &fs), "{text} -> {printed}");
            }
        }
    }

    #[test]
    fn compact_shape() {
        let s = sig();
        let fs = parse_fs("(noun AGR:#1 \"a\" L:<#1>)", &s).unwrap();
        assert_eq!(print_fs(&s, &fs, Style::Compact), "(noun AGR:#1 \"a\" L:<#1>)");
    }
}
