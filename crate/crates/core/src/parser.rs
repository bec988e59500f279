//! Reader and printer for the Prolog subset plus declaration directives.
//!
//! Recognised items:
//! - clauses `h :- b1, ..., bn.` and facts;
//! - `:- block p(-,?), p(?,-).`
//! - `%:- mode(Name) p(i,o), q(i).` (name optional, defaults to `default`)
//! - `%:- type p(list,int).`
//! - `%:- typedef tree -> leaf ; node(tree,any,tree).`
//! - `%:- query(Name) p(X), q(X).` (name optional: the query applies to every mode)
//!
//! A `%:-` directive may continue on following lines that start with `%`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use indexmap::IndexMap;

use crate::builtins;
use crate::program::{Mode, Program, ProgramError, Query};
use crate::term::{Atom, BlockDecl, BlockMark, Clause, Permutation, Pred, Term, Var};
use crate::types::{ProdHead, Production, TypeError};

pub const DEFAULT_MODE: &str = "default";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("{0}")]
    BadType(TypeError),
    #[error("arity mismatch: {0} is not a predicate of the program")]
    ArityMismatch(Pred),
    #[error("duplicate block declaration for {0}")]
    DuplicateBlock(Pred),
    #[error("duplicate {what} declaration for {pred}")]
    DuplicateDecl { what: &'static str, pred: Pred },
    #[error("undefined predicate {0}")]
    Undefined(Pred),
    #[error("clauses for built-in {0}")]
    BuiltinRedefined(Pred),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    /// Quoted atom: never an operator.
    Quoted(String),
    Var(String),
    Int(i64),
    Open,
    /// `(` directly after a name, opening an argument list.
    OpenCall,
    Close,
    LBracket,
    RBracket,
    Bar,
    Comma,
    End,
    /// `%:-`
    Meta,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut in_meta = false;
    let mut line_start = true;
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
                line_start = true;
            } else {
                col += 1;
                if !chars[i].is_whitespace() {
                    line_start = false;
                }
            }
            i += 1;
        }};
    }
    let err = |line, col, m: &str| ParseError { line, col, kind: ParseErrorKind::Syntax(m.to_string()) };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            if chars[i + 1..].starts_with(&[':', '-']) && !in_meta {
                for _ in 0..3 {
                    bump!();
                }
                out.push(Token { tok: Tok::Meta, line: l0, col: c0 });
                in_meta = true;
                continue;
            }
            if in_meta && line_start {
                bump!();
                continue;
            }
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                bump!();
            }
            if i >= chars.len() {
                return Err(err(l0, c0, "unterminated block comment"));
            }
            bump!();
            bump!();
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[s..i].iter().collect();
            Tok::Int(text.parse().map_err(|_| err(l0, c0, "integer out of range"))?)
        } else if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let text: String = chars[s..i].iter().collect();
            if c.is_uppercase() || c == '_' {
                Tok::Var(text)
            } else {
                Tok::Name(text)
            }
        } else if c == '\'' {
            bump!();
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(l0, c0, "unterminated quoted atom")),
                    Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                        text.push('\'');
                        bump!();
                        bump!();
                    }
                    Some('\'') => {
                        bump!();
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        bump!();
                        text.push(chars[i]);
                        bump!();
                    }
                    Some(&ch) => {
                        text.push(ch);
                        bump!();
                    }
                }
            }
            Tok::Quoted(text)
        } else if SYMBOL_CHARS.contains(c) {
            let s = i;
            while i < chars.len() && SYMBOL_CHARS.contains(chars[i]) {
                bump!();
            }
            let text: String = chars[s..i].iter().collect();
            let at_end = i >= chars.len() || chars[i].is_whitespace() || chars[i] == '%';
            if text == "." && at_end {
                in_meta = false;
                Tok::End
            } else if text.len() > 1 && text.ends_with('.') && at_end {
                // `X = -.` style: symbol run glued to the end marker
                out.push(Token { tok: Tok::Name(text[..text.len() - 1].to_string()), line: l0, col: c0 });
                in_meta = false;
                out.push(Token { tok: Tok::End, line: l0, col: c0 + text.len() as u32 - 1 });
                continue;
            } else {
                Tok::Name(text)
            }
        } else {
            bump!();
            match c {
                '(' => {
                    let glued = matches!(out.last(), Some(Token { tok: Tok::Name(_) | Tok::Quoted(_), line: l, col: cc }) if *l == l0 && c0 > *cc && !chars[i - 2].is_whitespace());
                    if glued {
                        Tok::OpenCall
                    } else {
                        Tok::Open
                    }
                }
                ')' => Tok::Close,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '|' => Tok::Bar,
                ',' => Tok::Comma,
                ';' | '!' => Tok::Name(c.to_string()),
                _ => return Err(err(l0, c0, &format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token { tok, line: l0, col: c0 });
    }
    Ok(out)
}

fn infix(name: &str) -> Option<(u32, u32, u32)> {
    // (priority, left max, right max)
    match name {
        "is" | "<" | "=<" | ">" | "=\\=" | "=" => Some((700, 699, 699)),
        "+" | "-" => Some((500, 500, 499)),
        "*" => Some((400, 400, 399)),
        _ => None,
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: HashMap<String, Var>,
    anon: u32,
    eof: (u32, u32),
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (u32, u32) {
        self.toks.get(self.pos).map_or(self.eof, |t| (t.line, t.col))
    }

    fn fail<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError { line, col, kind: ParseErrorKind::Syntax(msg.into()) })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn starts_term(t: Option<&Tok>) -> bool {
        matches!(t, Some(Tok::Name(_) | Tok::Quoted(_) | Tok::Var(_) | Tok::Int(_) | Tok::Open | Tok::LBracket))
    }

    fn term(&mut self, max: u32) -> PResult<Term> {
        let (mut left, mut left_p) = self.primary(max)?;
        while let Some(Tok::Name(op)) = self.peek() {
            let Some((p, lm, rm)) = infix(op) else { break };
            if p > max || left_p > lm {
                break;
            }
            let op = op.clone();
            self.pos += 1;
            let right = self.term(rm)?;
            left = Term::app(&op, vec![left, right]);
            left_p = p;
        }
        Ok(left)
    }

    fn primary(&mut self, max: u32) -> PResult<(Term, u32)> {
        match self.next() {
            Some(Tok::Int(i)) => Ok((Term::Int(i), 0)),
            Some(Tok::Var(v)) => {
                if v == "_" {
                    self.anon += 1;
                    return Ok((Term::var(&format!("_{}", self.anon)), 0));
                }
                let var = self.vars.entry(v.clone()).or_insert_with(|| Var::new(&v)).clone();
                Ok((Term::Var(var), 0))
            }
            Some(Tok::Open | Tok::OpenCall) => {
                let t = self.term(1200)?;
                self.expect(Tok::Close, "`)`")?;
                Ok((t, 0))
            }
            Some(Tok::LBracket) => {
                if self.peek() == Some(&Tok::RBracket) {
                    self.pos += 1;
                    return self.after_name(crate::term::NIL.to_string(), max);
                }
                let mut items = vec![self.term(999)?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    items.push(self.term(999)?);
                }
                let tail = if self.peek() == Some(&Tok::Bar) {
                    self.pos += 1;
                    self.term(999)?
                } else {
                    Term::nil()
                };
                self.expect(Tok::RBracket, "`]`")?;
                Ok((Term::list(items, tail), 0))
            }
            Some(Tok::Quoted(name)) => self.after_name(name, 0).map(|(t, _)| (t, 0)),
            Some(Tok::Name(name)) => {
                if name == "-" && self.peek() != Some(&Tok::OpenCall) {
                    // negative literal or prefix minus
                    let glued = self.toks.get(self.pos).is_some_and(|t| {
                        let prev = &self.toks[self.pos - 1];
                        t.line == prev.line && t.col == prev.col + 1
                    });
                    if let (Some(Tok::Int(i)), true) = (self.peek(), glued) {
                        let i = *i;
                        self.pos += 1;
                        return Ok((Term::Int(-i), 0));
                    }
                    if Self::starts_term(self.peek()) && max >= 200 {
                        let arg = self.term(200)?;
                        return Ok((Term::app("-", vec![arg]), 200));
                    }
                }
                let p = infix(&name).map_or(0, |(p, _, _)| p);
                self.after_name(name, p.min(max))
            }
            Some(_) => {
                self.pos -= 1;
                self.fail("expected a term")
            }
            None => self.fail("unexpected end of input"),
        }
    }

    fn after_name(&mut self, name: String, prec: u32) -> PResult<(Term, u32)> {
        if self.peek() != Some(&Tok::OpenCall) {
            return Ok((Term::constant(&name), prec));
        }
        self.pos += 1;
        let mut args = vec![self.term(999)?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.term(999)?);
        }
        self.expect(Tok::Close, "`)` or `,`")?;
        Ok((Term::app(&name, args), 0))
    }

    fn atom(&mut self) -> PResult<Atom> {
        let at = self.pos;
        match self.term(999)? {
            Term::App(name, args) => Ok(Atom { name, args: args.to_vec() }),
            _ => {
                self.pos = at;
                self.fail("expected an atom")
            }
        }
    }

    fn atoms(&mut self) -> PResult<Vec<Atom>> {
        let mut out = vec![self.atom()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn reset_vars(&mut self) {
        self.vars.clear();
        self.anon = 0;
    }
}

enum Item {
    Clause(Clause),
    Block(Vec<Atom>),
    Mode(String, Vec<Atom>),
    Type(Vec<Atom>),
    Typedef(String, Vec<Term>),
    Query(Option<String>, Vec<Atom>),
}

struct Located<T> {
    item: T,
    line: u32,
    col: u32,
}

/// Reads a program. Clause order is preserved.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let lines = src.lines().count() as u32;
    let mut ps = Parser { toks, pos: 0, vars: HashMap::new(), anon: 0, eof: (lines.max(1), 1) };
    let mut items = Vec::new();
    while ps.peek().is_some() {
        ps.reset_vars();
        let (line, col) = ps.here();
        let item = read_item(&mut ps)?;
        ps.expect(Tok::End, "`.`")?;
        items.push(Located { item, line, col });
    }
    build(items)
}

fn read_item(ps: &mut Parser) -> PResult<Item> {
    match ps.peek() {
        Some(Tok::Meta) => {
            ps.pos += 1;
            let (line, _) = ps.here();
            let Some(Tok::Name(kw)) = ps.next() else {
                ps.pos -= 1;
                return ps.fail("expected `mode`, `type`, `typedef` or `query`");
            };
            match kw.as_str() {
                "mode" => {
                    let name = mode_label(ps)?.unwrap_or_else(|| DEFAULT_MODE.to_string());
                    Ok(Item::Mode(name, ps.atoms()?))
                }
                "type" => Ok(Item::Type(ps.atoms()?)),
                "query" => Ok(Item::Query(mode_label(ps)?, ps.atoms()?)),
                "typedef" => {
                    let name = match ps.next() {
                        Some(Tok::Name(n) | Tok::Quoted(n)) => n,
                        _ => {
                            ps.pos -= 1;
                            return ps.fail("expected a type name");
                        }
                    };
                    if ps.next() != Some(Tok::Name("->".into())) {
                        ps.pos -= 1;
                        return ps.fail("expected `->`");
                    }
                    let mut alts = vec![ps.term(999)?];
                    while ps.peek() == Some(&Tok::Name(";".into())) {
                        ps.pos += 1;
                        alts.push(ps.term(999)?);
                    }
                    Ok(Item::Typedef(name, alts))
                }
                other => {
                    let _ = line;
                    ps.pos -= 1;
                    ps.fail(format!("unknown directive `{other}`"))
                }
            }
        }
        Some(Tok::Name(n)) if n == ":-" => {
            ps.pos += 1;
            match ps.next() {
                Some(Tok::Name(kw)) if kw == "block" => Ok(Item::Block(ps.atoms()?)),
                _ => {
                    ps.pos -= 1;
                    ps.fail("only `block` directives are supported")
                }
            }
        }
        _ => {
            let (line, _) = ps.here();
            let head = ps.atom()?;
            let mut body = Vec::new();
            if ps.peek() == Some(&Tok::Name(":-".into())) {
                ps.pos += 1;
                body = ps.atoms()?;
            }
            let mut c = Clause::new(head, body);
            c.line = line;
            Ok(Item::Clause(c))
        }
    }
}

/// Optional `(Name)` after a directive keyword.
fn mode_label(ps: &mut Parser) -> PResult<Option<String>> {
    if ps.peek() != Some(&Tok::OpenCall) {
        return Ok(None);
    }
    ps.pos += 1;
    let name = match ps.next() {
        Some(Tok::Var(n) | Tok::Name(n) | Tok::Quoted(n)) => n,
        _ => {
            ps.pos -= 1;
            return ps.fail("expected a mode name");
        }
    };
    ps.expect(Tok::Close, "`)`")?;
    Ok(Some(name))
}

fn build(items: Vec<Located<Item>>) -> Result<Program, ParseError> {
    let mut prog = Program::default();
    let at = |l: &Located<Item>, kind| ParseError { line: l.line, col: l.col, kind };
    // clauses and typedefs first so declarations can be checked against them
    for l in &items {
        match &l.item {
            Item::Clause(c) => {
                let p = c.head.pred();
                if builtins::spec(&p).is_some() {
                    return Err(at(l, ParseErrorKind::BuiltinRedefined(p)));
                }
                prog.preds.entry(p).or_default().push(prog.clauses.len());
                prog.clauses.push(c.clone());
            }
            Item::Typedef(name, alts) => {
                let mut prods = Vec::new();
                for a in alts {
                    let prod = match a {
                        Term::Int(i) => Production { head: ProdHead::Int(*i), args: vec![] },
                        Term::App(f, args) => {
                            let mut names = Vec::new();
                            for x in args.iter() {
                                match x {
                                    Term::App(n, xs) if xs.is_empty() => names.push(n.to_string()),
                                    _ => return Err(at(l, ParseErrorKind::Syntax(format!("bad type argument `{x}`")))),
                                }
                            }
                            Production { head: ProdHead::Functor(f.clone()), args: names }
                        }
                        Term::Var(_) => return Err(at(l, ParseErrorKind::Syntax("variable in typedef".into()))),
                    };
                    prods.push(prod);
                }
                prog.type_table.define(name, prods).map_err(|e| at(l, ParseErrorKind::BadType(e)))?;
            }
            _ => {}
        }
    }
    prog.type_table.validate().map_err(|e| {
        let l = items.iter().find(|l| matches!(l.item, Item::Typedef(..))).unwrap_or(&items[0]);
        match e {
            TypeError::Unknown(n) => at(l, ParseErrorKind::UnknownType(n)),
            e => at(l, ParseErrorKind::BadType(e)),
        }
    })?;
    let known = |prog: &Program, p: &Pred| prog.is_defined(p) || builtins::spec(p).is_some();
    for l in &items {
        match &l.item {
            Item::Block(atoms) => {
                let mut by_pred: IndexMap<Pred, BlockDecl> = IndexMap::new();
                for a in atoms {
                    let p = a.pred();
                    if !prog.is_defined(&p) {
                        return Err(at(l, ParseErrorKind::ArityMismatch(p)));
                    }
                    let mut pat = Vec::new();
                    for t in &a.args {
                        match t {
                            Term::App(n, xs) if xs.is_empty() && &**n == "-" => pat.push(BlockMark::Var),
                            Term::App(n, xs) if xs.is_empty() && &**n == "?" => pat.push(BlockMark::Any),
                            _ => return Err(at(l, ParseErrorKind::Syntax(format!("block argument `{t}` is not `-` or `?`")))),
                        }
                    }
                    by_pred.entry(p).or_default().patterns.push(pat);
                }
                for (p, decl) in by_pred {
                    if prog.blocks.contains_key(&p) {
                        return Err(at(l, ParseErrorKind::DuplicateBlock(p)));
                    }
                    prog.blocks.insert(p, decl);
                }
            }
            Item::Mode(name, atoms) => {
                for a in atoms {
                    let p = a.pred();
                    if !known(&prog, &p) {
                        return Err(at(l, ParseErrorKind::ArityMismatch(p)));
                    }
                    let marks: Option<String> = a
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::App(n, xs) if xs.is_empty() => Some(n.to_string()),
                            Term::Var(v) => Some(v.name.to_string()),
                            _ => None,
                        })
                        .collect();
                    let Some(mode) = marks.as_deref().and_then(Mode::parse).filter(|m| m.arity() == p.arity) else {
                        return Err(at(l, ParseErrorKind::Syntax(format!("bad mode `{a}`, expected i/o marks"))));
                    };
                    let table = prog.modes.entry(name.clone()).or_default();
                    if table.insert(p.clone(), mode).is_some() {
                        return Err(at(l, ParseErrorKind::DuplicateDecl { what: "mode", pred: p }));
                    }
                }
            }
            Item::Type(atoms) => {
                for a in atoms {
                    let p = a.pred();
                    if !known(&prog, &p) {
                        return Err(at(l, ParseErrorKind::ArityMismatch(p)));
                    }
                    let mut tys = Vec::new();
                    for t in &a.args {
                        match t {
                            Term::App(n, xs) if xs.is_empty() => {
                                if !prog.type_table.contains(n) {
                                    return Err(at(l, ParseErrorKind::UnknownType(n.to_string())));
                                }
                                tys.push(n.to_string());
                            }
                            _ => return Err(at(l, ParseErrorKind::Syntax(format!("bad type argument `{t}`")))),
                        }
                    }
                    if prog.types.insert(p.clone(), tys).is_some() {
                        return Err(at(l, ParseErrorKind::DuplicateDecl { what: "type", pred: p }));
                    }
                }
            }
            Item::Query(mode, atoms) => {
                for a in atoms {
                    if !known(&prog, &a.pred()) {
                        return Err(at(l, ParseErrorKind::Undefined(a.pred())));
                    }
                }
                prog.queries.push(Query { mode: mode.clone(), atoms: atoms.clone() });
            }
            Item::Clause(c) => {
                for a in &c.body {
                    if !known(&prog, &a.pred()) {
                        return Err(at(l, ParseErrorKind::Undefined(a.pred())));
                    }
                }
            }
            Item::Typedef(..) => {}
        }
    }
    // one entry per defined predicate, in definition order
    let mut blocks = IndexMap::new();
    for p in prog.preds.keys() {
        blocks.insert(p.clone(), prog.blocks.get(p).cloned().unwrap_or_default());
    }
    prog.blocks = blocks;
    Ok(prog)
}

/// Prints a program; with a reordering, the listed clause bodies are written
/// in permuted order. `mode` restricts the mode directives to one mode.
pub fn emit_program(
    prog: &Program,
    mode: Option<&str>,
    reordering: &BTreeMap<usize, Permutation>,
) -> Result<String, ProgramError> {
    let prog = prog.reorder(reordering)?;
    let mut out = String::new();
    let mut w = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    for name in prog.type_table.names() {
        if crate::types::TypeTable::is_prelude(name) {
            continue;
        }
        if let Some(def) = prog.type_table.fmt_typedef(name) {
            w(format!("%:- typedef {def}."));
        }
    }
    for (name, table) in &prog.modes {
        if mode.is_some_and(|m| m != name) {
            continue;
        }
        for (p, m) in table {
            w(format!("%:- mode({name}) {}.", m.fmt_for(&p.name)));
        }
    }
    for (p, tys) in &prog.types {
        w(format!("%:- type {}({}).", crate::term::quoted_name(&p.name), tys.join(",")));
    }
    for q in &prog.queries {
        match &q.mode {
            Some(m) if mode.is_some_and(|sel| sel != m) => {}
            Some(m) => w(format!("%:- query({m}) {}.", crate::term::fmt_query(&q.atoms))),
            None => w(format!("%:- query {}.", crate::term::fmt_query(&q.atoms))),
        }
    }
    for (p, idxs) in &prog.preds {
        w(String::new());
        let decl = prog.block(p);
        if !decl.is_empty() {
            w(format!(":- block {}.", decl.fmt_for(&p.name)));
        }
        for &i in idxs {
            w(fmt_clause(&prog.clauses[i]));
        }
    }
    Ok(out)
}

fn fmt_clause(c: &Clause) -> String {
    if c.body.is_empty() {
        return format!("{}.", c.head);
    }
    let body: Vec<String> = c.body.iter().map(|a| format!("  {a}")).collect();
    format!("{} :-\n{}.", c.head, body.join(",\n"))
}

/// Reads a single query such as `nqueens(4,Sol)` (trailing `.` optional).
pub fn parse_query(src: &str) -> Result<Vec<Atom>, ParseError> {
    let toks = lex(src.trim())?;
    let mut ps = Parser { toks, pos: 0, vars: HashMap::new(), anon: 0, eof: (1, src.len() as u32 + 1) };
    let atoms = ps.atoms()?;
    if ps.peek() == Some(&Tok::End) {
        ps.pos += 1;
    }
    if ps.peek().is_some() {
        return ps.fail("trailing input after query");
    }
    Ok(atoms)
}

/// Reads a single term.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let toks = lex(src.trim())?;
    let mut ps = Parser { toks, pos: 0, vars: HashMap::new(), anon: 0, eof: (1, src.len() as u32 + 1) };
    let t = ps.term(1200)?;
    if ps.peek().is_some() {
        return ps.fail("trailing input after term");
    }
    Ok(t)
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match emit_program(self, None, &BTreeMap::new()) {
            Ok(s) => f.write_str(&s),
            Err(_) => Err(fmt::Error),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PERMUTE: &str = "
:- block permute(-,-).
permute([],[]).
permute([U|X],Y) :-
  permute(X,Z),
  delete(U,Y,Z).

:- block delete(?,-,-).
delete(X,[X|Z],Z).
delete(X,[U|Y],[U|Z]) :-
  delete(X,Y,Z).
%:- mode(M1) permute(i,o), delete(i,o,i).
%:- mode(M2) permute(o,i), delete(o,i,o).
%:- type permute(list,list), delete(any,list,list).
";

    #[test]
    fn reads_permute() {
        let p = parse_program(PERMUTE).unwrap();
        assert_eq!(p.clauses.len(), 4);
        assert_eq!(p.preds.len(), 2);
        let perm = Pred::new("permute", 2);
        assert_eq!(p.block(&perm).patterns, vec![vec![BlockMark::Var, BlockMark::Var]]);
        assert_eq!(p.block(&Pred::new("delete", 3)).fmt_for("delete"), "delete(?,-,-)");
        assert_eq!(p.modes.len(), 2);
        assert_eq!(p.mode_of("M2", &perm).unwrap(), Mode::parse("oi").unwrap());
        assert_eq!(p.clauses[1].to_string(), "permute([U|X],Y) :- permute(X,Z), delete(U,Y,Z).");
    }

    #[test]
    fn empty_source() {
        assert_eq!(parse_program("").unwrap(), Program::default());
        assert_eq!(parse_program("% only a comment\n").unwrap(), Program::default());
    }

    #[test]
    fn operators_and_literals() {
        let t = parse_term("N1 is N-1").unwrap();
        assert_eq!(t, Term::app("is", vec![Term::var("N1"), Term::app("-", vec![Term::var("N"), Term::Int(1)])]));
        let t = parse_term("Dist =\\= M-N").unwrap();
        assert_eq!(t.functor(), Some(("=\\=", 2)));
        assert_eq!(parse_term("a-b-c").unwrap().to_string(), "a-b-c");
        assert_eq!(parse_term("a-(b-c)").unwrap().to_string(), "a-(b-c)");
        assert_eq!(parse_term("X is -1").unwrap(), Term::app("is", vec![Term::var("X"), Term::Int(-1)]));
        assert_eq!(parse_term("- X").unwrap(), Term::app("-", vec![Term::var("X")]));
        assert_eq!(parse_term("1+2*3").unwrap().to_string(), "1+2*3");
        assert_eq!(parse_term("[1,2|T]").unwrap(), Term::list(vec![Term::Int(1), Term::Int(2)], Term::var("T")));
        assert_eq!(parse_term("'hello world'(x)").unwrap().to_string(), "'hello world'(x)");
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let p = parse_program("p(_, _).").unwrap();
        let args = &p.clauses[0].head.args;
        assert_ne!(args[0], args[1]);
    }

    #[test]
    fn typedef_directive() {
        let src = "%:- typedef tree -> leaf ; node(tree,any,tree).\n%:- type t(tree).\nt(leaf).\n";
        let p = parse_program(src).unwrap();
        assert!(p.type_table.contains("tree"));
        assert_eq!(p.type_table.fmt_typedef("tree").unwrap(), "tree -> leaf ; node(tree,any,tree)");
    }

    #[test]
    fn multi_line_meta_directive() {
        let src = "%:- mode(M1) p(i),\n%           q(o).\np(a).\nq(b).\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.modes["M1"].len(), 2);
    }

    #[test]
    fn errors() {
        let e = parse_program("p(X) :- q(X.").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)), "{e}");
        let e = parse_program("p(a).\n%:- type p(tree).\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownType("tree".into()));
        assert_eq!(e.line, 2);
        let e = parse_program("p(a).\n%:- mode p(i,o).\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::ArityMismatch(_)));
        let e = parse_program(":- block p(-).\n:- block p(?).\np(a).\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::DuplicateBlock(_)));
        let e = parse_program("p(X) :- r(X).\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undefined(Pred::new("r", 1)));
        let e = parse_program("p(a).\n  foo bar.\n").unwrap_err();
        assert_eq!((e.line, e.col), (2, 7));
        assert!(e.to_string().starts_with("2:7: syntax error"));
    }

    #[test]
    fn round_trip_with_reordering() {
        let p = parse_program(PERMUTE).unwrap();
        let text = emit_program(&p, None, &BTreeMap::new()).unwrap();
        assert_eq!(parse_program(&text).unwrap(), p);
        let swap: BTreeMap<usize, Permutation> = [(1, Permutation::new(vec![2, 1]).unwrap())].into();
        let text = emit_program(&p, Some("M2"), &swap).unwrap();
        let q = parse_program(&text).unwrap();
        assert_eq!(q.clauses[1].to_string(), "permute([U|X],Y) :- delete(U,Y,Z), permute(X,Z).");
        assert!(!text.contains("M1"));
        let bad: BTreeMap<usize, Permutation> = [(1, Permutation::identity(3))].into();
        assert!(emit_program(&p, None, &bad).is_err());
    }

    #[test]
    fn corpus_reads_and_round_trips() {
        for (name, src) in crate::corpus::ALL {
            let p = parse_program(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = parse_program(&p.to_string()).unwrap();
            assert_eq!(again, p, "{name}");
        }
        let q = parse_program(crate::corpus::QSORT).unwrap();
        assert_eq!(q.block(&Pred::new("qsort", 2)).fmt_for("qsort"), "qsort(-,-)");
        assert_eq!(q.block(&Pred::new("part", 4)).patterns.len(), 3);
        let n = parse_program(crate::corpus::NQUEENS).unwrap();
        assert_eq!(n.queries_for("M1").count(), 1);
        assert_eq!(n.queries_for("M2").count(), 0);
        assert_eq!(n.type_of(&Pred::new("is", 2)).unwrap(), vec!["int", "int"]);
    }
}
