//! System files, their parser, and the graph encoding the engine runs on.
//!
//! File format (UTF-8, line oriented): `#` starts a comment; the first
//! non-comment line is `functor <expr>`; every following line is
//! `state <name> = <term>`. Term syntax per layer: powerset `{t,...}`, bag
//! `[t,...]` with repetition, weight map `{t: p/q, ...}`, product `(t,u)`,
//! coproduct `inl t` / `inr t`, exponent `[t0,...,tk-1]`, constants bare
//! identifiers, and state references bare names.
//!
//! Parsing desugars composite types into sorts: every sub-term that belongs
//! to an inner sort becomes a fresh intermediate state (one per syntactic
//! occurrence), and the per-layer transition structure becomes labelled
//! edges. The result is a flat graph: states with type values plus an edge
//! array with a predecessor index.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::functor::parse_functor_at;
use crate::interface::{encode_type_into, Label, TypeValue};
use crate::sorts::{plan_sorts, PolyShape, Sort, SortPlan, SymbolTable};
use crate::{EdgeId, SortId, StateId};

/// A parsed term, kept for quotient emission.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    /// State reference or constant identifier (disambiguated by the type).
    Name(String),
    /// `{t,...}` — powerset literal (an empty one also stands for an empty
    /// weight map).
    Set(Vec<Term>),
    /// `[t,...]` — bag literal or exponent tuple.
    List(Vec<Term>),
    /// `{t: w, ...}` — group or distribution weight map.
    Map(Vec<(Term, BigRational)>),
    Pair(Box<Term>, Box<Term>),
    Inl(Box<Term>),
    Inr(Box<Term>),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, items: &[Term]) -> fmt::Result {
            for (i, t) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{t}")?;
            }
            Ok(())
        }
        match self {
            Term::Name(n) => write!(f, "{n}"),
            Term::Set(items) => {
                write!(f, "{{")?;
                list(f, items)?;
                write!(f, "}}")
            }
            Term::List(items) => {
                write!(f, "[")?;
                list(f, items)?;
                write!(f, "]")
            }
            Term::Map(entries) => {
                write!(f, "{{")?;
                for (i, (t, w)) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}: {w}")?;
                }
                write!(f, "}}")
            }
            Term::Pair(a, b) => write!(f, "({a},{b})"),
            Term::Inl(t) => write!(f, "inl {t}"),
            Term::Inr(t) => write!(f, "inr {t}"),
        }
    }
}

/// The edge-array encoding of a parsed system.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub plan: SortPlan,
    pub symbols: SymbolTable,
    /// The system type exactly as written in the file header.
    pub functor_text: String,
    /// Per state: its sort.
    pub sort_of: Vec<SortId>,
    /// Per state: its canonical one-step observation.
    pub types: Vec<TypeValue>,
    /// Names of the declared states; states `0..names.len()` are the
    /// declared ones, everything after is an intermediate.
    pub names: Vec<String>,
    /// Edge array: `edges[e] = (source, target)` with `labels[e]`.
    pub edges: Vec<(StateId, StateId)>,
    pub labels: Vec<Label>,
    /// Per state: contiguous span (start, len) of its outgoing edges.
    pub out: Vec<(u32, u32)>,
    /// Predecessor index: `pred_edges[pred_off[y]..pred_off[y+1]]` are the
    /// edges with target `y`.
    pub pred_off: Vec<u32>,
    pub pred_edges: Vec<EdgeId>,
    /// Terms of the declared states, for quotient emission.
    pub terms: Vec<Term>,
}

impl Encoding {
    pub fn n_states(&self) -> usize {
        self.sort_of.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn root_count(&self) -> usize {
        self.names.len()
    }

    pub fn out_edges(&self, x: StateId) -> std::ops::Range<usize> {
        let (start, len) = self.out[x as usize];
        start as usize..(start + len) as usize
    }

    pub fn pred(&self, y: StateId) -> &[EdgeId] {
        &self.pred_edges[self.pred_off[y as usize] as usize..self.pred_off[y as usize + 1] as usize]
    }

    /// Display name: declared states print their name, intermediates `#id`.
    pub fn state_display(&self, x: StateId) -> String {
        self.names
            .get(x as usize)
            .cloned()
            .unwrap_or_else(|| format!("#{x}"))
    }

    /// Grouping key shared by the engine, the oracle and the tests: sort id
    /// followed by the canonical type encoding.
    pub fn type_key(&self, x: StateId, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.sort_of[x as usize].to_be_bytes());
        encode_type_into(&self.types[x as usize], out);
    }
}

// --- term tokenizer ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Colon,
}

fn lex_term(src: &str, line: u32, col0: u32) -> Result<Vec<(Tok, u32)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let col = col0 + i as u32;
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' => i += 1,
            b'{' => {
                out.push((Tok::LBrace, col));
                i += 1;
            }
            b'}' => {
                out.push((Tok::RBrace, col));
                i += 1;
            }
            b'[' => {
                out.push((Tok::LBrack, col));
                i += 1;
            }
            b']' => {
                out.push((Tok::RBrack, col));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            b':' => {
                out.push((Tok::Colon, col));
                i += 1;
            }
            b'-' | b'0'..=b'9' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'/' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                out.push((Tok::Num(src[start..i].to_string()), col));
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), col));
            }
            other => {
                return Err(Error::parse(
                    line,
                    col,
                    format!("unexpected character {:?}", other as char),
                ))
            }
        }
    }
    Ok(out)
}

struct TermParser {
    toks: Vec<(Tok, u32)>,
    pos: usize,
    line: u32,
    end_col: u32,
}

impl TermParser {
    fn here(&self) -> u32 {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_col)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, self.here(), msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn rational(&mut self) -> Result<BigRational> {
        let col = self.here();
        match self.next() {
            Some(Tok::Num(s)) => parse_rational(&s)
                .ok_or_else(|| Error::parse(self.line, col, format!("bad rational '{s}'"))),
            _ => Err(Error::parse(self.line, col, "expected a rational number")),
        }
    }

    fn starts_term(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Ident(_))
                | Some(Tok::Num(_))
                | Some(Tok::LBrace)
                | Some(Tok::LBrack)
                | Some(Tok::LParen)
        )
    }

    fn term(&mut self) -> Result<Term> {
        match self.next() {
            Some(Tok::Ident(s)) if s == "inl" && self.starts_term() => {
                Ok(Term::Inl(Box::new(self.term()?)))
            }
            Some(Tok::Ident(s)) if s == "inr" && self.starts_term() => {
                Ok(Term::Inr(Box::new(self.term()?)))
            }
            Some(Tok::Ident(s)) => Ok(Term::Name(s)),
            Some(Tok::Num(s)) if !s.contains('/') && !s.starts_with('-') => {
                // Numeric constant identifiers such as the 0/1 of {0,1}.
                Ok(Term::Name(s))
            }
            Some(Tok::LParen) => {
                let a = self.term()?;
                self.expect(Tok::Comma, "',' in pair")?;
                let b = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Term::Pair(Box::new(a), Box::new(b)))
            }
            Some(Tok::LBrack) => {
                let mut items = Vec::new();
                if self.peek() == Some(&Tok::RBrack) {
                    self.pos += 1;
                    return Ok(Term::List(items));
                }
                loop {
                    items.push(self.term()?);
                    match self.peek() {
                        Some(Tok::Comma) => self.pos += 1,
                        Some(Tok::RBrack) => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ',' or ']'")),
                    }
                }
                Ok(Term::List(items))
            }
            Some(Tok::LBrace) => {
                if self.peek() == Some(&Tok::RBrace) {
                    self.pos += 1;
                    return Ok(Term::Set(Vec::new()));
                }
                let first = self.term()?;
                if self.peek() == Some(&Tok::Colon) {
                    self.pos += 1;
                    let mut entries = vec![(first, self.rational()?)];
                    loop {
                        match self.peek() {
                            Some(Tok::Comma) => {
                                self.pos += 1;
                                let k = self.term()?;
                                self.expect(Tok::Colon, "':' in weight map")?;
                                entries.push((k, self.rational()?));
                            }
                            Some(Tok::RBrace) => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.err("expected ',' or '}'")),
                        }
                    }
                    Ok(Term::Map(entries))
                } else {
                    let mut items = vec![first];
                    loop {
                        match self.peek() {
                            Some(Tok::Comma) => {
                                self.pos += 1;
                                items.push(self.term()?);
                            }
                            Some(Tok::RBrace) => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.err("expected ',' or '}'")),
                        }
                    }
                    Ok(Term::Set(items))
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

/// Parse `[-]?digits(/digits)?`; `None` for malformed input or a zero
/// denominator.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    if num.is_empty() || num == "-" || den.is_empty() {
        return None;
    }
    let n: BigInt = num.parse().ok()?;
    let d: BigInt = den.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

// --- typed desugaring ---------------------------------------------------------

struct Builder<'a> {
    plan: &'a SortPlan,
    symbols: SymbolTable,
    name_ids: &'a HashMap<String, StateId>,
    sort_of: Vec<SortId>,
    types: Vec<Option<TypeValue>>,
    edges: Vec<(StateId, StateId)>,
    labels: Vec<Label>,
    out: Vec<(u32, u32)>,
    queue: VecDeque<(StateId, &'a Term)>,
    line: u32,
}

impl<'a> Builder<'a> {
    fn shape_err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, 1, msg)
    }

    fn fresh(&mut self, sort: SortId, term: &'a Term) -> StateId {
        let id = self.sort_of.len() as StateId;
        self.sort_of.push(sort);
        self.types.push(None);
        self.out.push((0, 0));
        self.queue.push_back((id, term));
        id
    }

    /// Resolve a sub-term filling a successor position of sort `succ`:
    /// either a reference to a declared state or a fresh intermediate.
    fn target(&mut self, succ: SortId, term: &'a Term) -> Result<StateId> {
        if succ == 0 {
            let Term::Name(n) = term else {
                return Err(self.shape_err(format!("expected a state name, got '{term}'")));
            };
            self.name_ids
                .get(n)
                .copied()
                .ok_or_else(|| self.shape_err(format!("unknown state '{n}'")))
        } else {
            Ok(self.fresh(succ, term))
        }
    }

    fn walk_state(&mut self, state: StateId, term: &'a Term) -> Result<()> {
        let start = self.edges.len() as u32;
        let sort = self.sort_of[state as usize];
        let ty = match &self.plan.sorts[sort as usize] {
            Sort::Power { succ } => {
                let succ = *succ;
                let Term::Set(items) = term else {
                    return Err(self.shape_err(format!("expected a set literal, got '{term}'")));
                };
                let mut targets: Vec<StateId> = Vec::with_capacity(items.len());
                for item in items {
                    let t = self.target(succ, item)?;
                    // A set literal denotes a set: repeated state references
                    // collapse to one element.
                    if succ == 0 && targets.contains(&t) {
                        continue;
                    }
                    targets.push(t);
                }
                for t in &targets {
                    self.edges.push((state, *t));
                    self.labels.push(Label::Unit);
                }
                TypeValue::Nonempty(!targets.is_empty())
            }
            Sort::Bag { succ } => {
                let succ = *succ;
                let Term::List(items) = term else {
                    return Err(self.shape_err(format!("expected a bag literal, got '{term}'")));
                };
                let mut total = 0u64;
                if succ == 0 {
                    // One edge per distinct target, labelled with its
                    // multiplicity, in first-occurrence order.
                    let mut mult: Vec<(StateId, u64)> = Vec::new();
                    for item in items {
                        let t = self.target(0, item)?;
                        match mult.iter_mut().find(|(s, _)| *s == t) {
                            Some((_, m)) => *m += 1,
                            None => mult.push((t, 1)),
                        }
                    }
                    for (t, m) in mult {
                        self.edges.push((state, t));
                        self.labels.push(Label::Nat(m));
                        total += m;
                    }
                } else {
                    for item in items {
                        let t = self.target(succ, item)?;
                        self.edges.push((state, t));
                        self.labels.push(Label::Nat(1));
                        total += 1;
                    }
                }
                TypeValue::Count(total)
            }
            Sort::Group { succ } | Sort::Dist { succ } => {
                let succ = *succ;
                let dist = matches!(self.plan.sorts[sort as usize], Sort::Dist { .. });
                let entries: &'a [(Term, BigRational)] = match term {
                    Term::Map(entries) => entries,
                    Term::Set(items) if items.is_empty() => &[],
                    _ => return Err(self.shape_err(format!("expected a weight map, got '{term}'"))),
                };
                let mut targets: Vec<StateId> = Vec::with_capacity(entries.len());
                let mut total = BigRational::zero();
                for (key, w) in entries {
                    if w.is_zero() {
                        return Err(self.shape_err("zero weight in weight map"));
                    }
                    if dist && w.is_negative() {
                        return Err(self.shape_err("negative weight in a distribution"));
                    }
                    let t = self.target(succ, key)?;
                    if succ == 0 && targets.contains(&t) {
                        return Err(self.shape_err(format!("duplicate key '{key}' in weight map")));
                    }
                    targets.push(t);
                    self.edges.push((state, t));
                    self.labels.push(Label::rat(w.clone()));
                    total += w;
                }
                if dist {
                    if !total.is_one() {
                        return Err(self.shape_err(format!(
                            "distribution weights sum to {total}, expected 1"
                        )));
                    }
                    TypeValue::Unit
                } else {
                    TypeValue::total(total)
                }
            }
            Sort::Poly { shape } => {
                let shape = shape.clone();
                let mut key = Vec::new();
                let mut holes: Vec<(SortId, &'a Term)> = Vec::new();
                self.match_shape(&shape, term, &mut key, &mut holes)?;
                let sym = self.symbols.intern(key, holes.len() as u32);
                for (i, (succ, sub)) in holes.into_iter().enumerate() {
                    let t = self.target(succ, sub)?;
                    self.edges.push((state, t));
                    self.labels.push(Label::Pos(i as u32 + 1));
                }
                TypeValue::Symbol(sym)
            }
        };
        self.types[state as usize] = Some(ty);
        self.out[state as usize] = (start, self.edges.len() as u32 - start);
        Ok(())
    }

    /// Match a term against a polynomial shape, accumulating the canonical
    /// symbol key (constant choices and coproduct tags) and the hole fillers
    /// in left-to-right order.
    fn match_shape(
        &mut self,
        shape: &PolyShape,
        term: &'a Term,
        key: &mut Vec<u8>,
        holes: &mut Vec<(SortId, &'a Term)>,
    ) -> Result<()> {
        match (shape, term) {
            (PolyShape::Hole(s), t) => {
                holes.push((*s, t));
                Ok(())
            }
            (PolyShape::Const(ids), Term::Name(n)) => {
                let Some(idx) = ids.iter().position(|i| i == n) else {
                    return Err(
                        self.shape_err(format!("'{n}' is not one of the declared constants"))
                    );
                };
                key.extend_from_slice(&(idx as u32).to_be_bytes());
                Ok(())
            }
            (PolyShape::Pair(a, b), Term::Pair(l, r)) => {
                self.match_shape(a, l, key, holes)?;
                self.match_shape(b, r, key, holes)
            }
            (PolyShape::Sum(a, _), Term::Inl(t)) => {
                key.push(0);
                self.match_shape(a, t, key, holes)
            }
            (PolyShape::Sum(_, b), Term::Inr(t)) => {
                key.push(1);
                self.match_shape(b, t, key, holes)
            }
            (PolyShape::Tuple(sub, k), Term::List(items)) => {
                if items.len() != *k as usize {
                    return Err(self.shape_err(format!(
                        "expected a tuple of {k} entries, got {}",
                        items.len()
                    )));
                }
                for item in items {
                    self.match_shape(sub, item, key, holes)?;
                }
                Ok(())
            }
            (_, t) => Err(self.shape_err(format!("term '{t}' does not fit the system type"))),
        }
    }
}

/// Parse a system file into its edge-array encoding.
pub fn parse_coalgebra(text: &str) -> Result<Encoding> {
    let mut functor: Option<(String, crate::functor::FunctorExpr)> = None;
    let mut decls: Vec<(String, Term, u32)> = Vec::new();
    let mut name_ids: HashMap<String, StateId> = HashMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno as u32 + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = line.trim_start();
        let indent = (line.len() - trimmed.len()) as u32;
        let trimmed = trimmed.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = strip_word(trimmed, "functor") {
            if functor.is_some() {
                return Err(Error::parse(lineno, indent + 1, "duplicate functor line"));
            }
            let expr = parse_functor_at(rest, lineno, indent + 9)?;
            functor = Some((rest.trim().to_string(), expr));
        } else if let Some(rest) = strip_word(trimmed, "state") {
            if functor.is_none() {
                return Err(Error::parse(
                    lineno,
                    indent + 1,
                    "state declared before the functor line",
                ));
            }
            let col0 = indent + 7;
            let Some(eq) = rest.find('=') else {
                return Err(Error::parse(lineno, col0, "expected '='"));
            };
            let name = rest[..eq].trim();
            if !is_valid_name(name) {
                return Err(Error::parse(
                    lineno,
                    col0,
                    format!("'{name}' is not a valid state name"),
                ));
            }
            let term_src = &rest[eq + 1..];
            let toks = lex_term(term_src, lineno, col0 + eq as u32 + 1)?;
            let mut tp = TermParser {
                end_col: toks.last().map(|(_, c)| c + 1).unwrap_or(col0),
                toks,
                pos: 0,
                line: lineno,
            };
            let term = tp.term()?;
            if tp.peek().is_some() {
                return Err(tp.err("trailing input after term"));
            }
            if name_ids.contains_key(name) {
                return Err(Error::parse(
                    lineno,
                    col0,
                    format!("duplicate state name '{name}'"),
                ));
            }
            name_ids.insert(name.to_string(), decls.len() as StateId);
            decls.push((name.to_string(), term, lineno));
        } else {
            return Err(Error::parse(
                lineno,
                indent + 1,
                "expected 'functor <expr>' or 'state <name> = <term>'",
            ));
        }
    }

    let Some((functor_text, expr)) = functor else {
        return Err(Error::parse(1, 1, "missing functor line"));
    };
    let plan = plan_sorts(&expr)?;

    let mut builder = Builder {
        plan: &plan,
        symbols: SymbolTable::new(),
        name_ids: &name_ids,
        sort_of: vec![0; decls.len()],
        types: vec![None; decls.len()],
        edges: Vec::new(),
        labels: Vec::new(),
        out: vec![(0, 0); decls.len()],
        queue: VecDeque::new(),
        line: 0,
    };

    for (i, (_, term, lineno)) in decls.iter().enumerate() {
        builder.line = *lineno;
        builder.walk_state(i as StateId, term)?;
        while let Some((state, sub)) = builder.queue.pop_front() {
            builder.walk_state(state, sub)?;
        }
    }

    let n = builder.sort_of.len();
    let mut pred_off = vec![0u32; n + 1];
    for (_, tgt) in &builder.edges {
        pred_off[*tgt as usize + 1] += 1;
    }
    for i in 0..n {
        pred_off[i + 1] += pred_off[i];
    }
    let mut fill = pred_off.clone();
    let mut pred_edges = vec![0 as EdgeId; builder.edges.len()];
    for (e, (_, tgt)) in builder.edges.iter().enumerate() {
        pred_edges[fill[*tgt as usize] as usize] = e as EdgeId;
        fill[*tgt as usize] += 1;
    }

    let Builder {
        symbols,
        sort_of,
        types,
        edges,
        labels,
        out,
        ..
    } = builder;

    Ok(Encoding {
        plan,
        symbols,
        functor_text,
        sort_of,
        types: types.into_iter().map(Option::unwrap).collect(),
        names: decls.iter().map(|(n, _, _)| n.clone()).collect(),
        edges,
        labels,
        out,
        pred_off,
        pred_edges,
        terms: decls.into_iter().map(|(_, t, _)| t).collect(),
    })
}

fn strip_word<'s>(line: &'s str, word: &str) -> Option<&'s str> {
    let rest = line.strip_prefix(word)?;
    if rest.is_empty() || rest.starts_with(|c: char| c.is_whitespace()) {
        Some(rest)
    } else {
        None
    }
}

fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

// --- partition and quotient output --------------------------------------------

/// Restrict a full partition to the declared states and order it
/// canonically: names sorted within a block, blocks sorted by least name.
pub fn root_blocks(enc: &Encoding, partition: &[Vec<StateId>]) -> Vec<Vec<String>> {
    let mut blocks: Vec<Vec<String>> = partition
        .iter()
        .filter_map(|block| {
            let mut names: Vec<String> = block
                .iter()
                .filter(|s| (**s as usize) < enc.root_count())
                .map(|s| enc.names[*s as usize].clone())
                .collect();
            if names.is_empty() {
                return None;
            }
            names.sort();
            Some(names)
        })
        .collect();
    blocks.sort();
    blocks
}

/// Render a partition in the output file format: one block per line.
pub fn partition_to_text(enc: &Encoding, partition: &[Vec<StateId>]) -> String {
    let mut out = String::new();
    for block in root_blocks(enc, partition) {
        out.push('{');
        out.push_str(&block.join(","));
        out.push_str("}\n");
    }
    out
}

/// Emit the quotient system over block representatives. Blocks are named
/// `B0, B1, ...` in canonical order; each block's term is its least-named
/// member's term with successors replaced by block names and weights to
/// merged targets summed.
pub fn quotient_coalgebra(enc: &Encoding, partition: &[Vec<StateId>]) -> Result<String> {
    let blocks = root_blocks(enc, partition);
    let id_of: HashMap<&str, usize> = enc
        .names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut rename: HashMap<&str, String> = HashMap::new();
    for (i, block) in blocks.iter().enumerate() {
        for name in block {
            rename.insert(name.as_str(), format!("B{i}"));
        }
    }
    let mut out = format!("functor {}\n", enc.functor_text);
    for (i, block) in blocks.iter().enumerate() {
        let rep_id = id_of[block[0].as_str()];
        let term = rewrite_term(enc, 0, &enc.terms[rep_id], &rename)?;
        out.push_str(&format!("state B{i} = {term}\n"));
    }
    Ok(out)
}

fn rewrite_succ(
    enc: &Encoding,
    succ: SortId,
    term: &Term,
    rename: &HashMap<&str, String>,
) -> Result<Term> {
    if succ == 0 {
        let Term::Name(n) = term else {
            return Err(Error::invariant("stored term does not fit its type"));
        };
        let Some(new) = rename.get(n.as_str()) else {
            return Err(Error::invariant(format!(
                "state '{n}' is missing from the partition"
            )));
        };
        Ok(Term::Name(new.clone()))
    } else {
        rewrite_term(enc, succ, term, rename)
    }
}

fn rewrite_term(
    enc: &Encoding,
    sort: SortId,
    term: &Term,
    rename: &HashMap<&str, String>,
) -> Result<Term> {
    Ok(match &enc.plan.sorts[sort as usize] {
        Sort::Power { succ } => {
            let Term::Set(items) = term else {
                return Err(Error::invariant("stored term does not fit its type"));
            };
            let mut rewritten = items
                .iter()
                .map(|t| rewrite_succ(enc, *succ, t, rename))
                .collect::<Result<Vec<_>>>()?;
            rewritten.sort();
            rewritten.dedup();
            Term::Set(rewritten)
        }
        Sort::Bag { succ } => {
            let Term::List(items) = term else {
                return Err(Error::invariant("stored term does not fit its type"));
            };
            let mut rewritten = items
                .iter()
                .map(|t| rewrite_succ(enc, *succ, t, rename))
                .collect::<Result<Vec<_>>>()?;
            rewritten.sort();
            Term::List(rewritten)
        }
        Sort::Group { succ } | Sort::Dist { succ } => {
            let entries: &[(Term, BigRational)] = match term {
                Term::Map(entries) => entries,
                Term::Set(items) if items.is_empty() => &[],
                _ => return Err(Error::invariant("stored term does not fit its type")),
            };
            let mut merged: Vec<(Term, BigRational)> = Vec::new();
            for (key, w) in entries {
                let k = rewrite_succ(enc, *succ, key, rename)?;
                match merged.iter_mut().find(|(m, _)| *m == k) {
                    Some((_, acc)) => *acc += w,
                    None => merged.push((k, w.clone())),
                }
            }
            // Merged weights may cancel; the encoding omits zero entries.
            merged.retain(|(_, w)| !w.is_zero());
            merged.sort_by(|(a, _), (b, _)| a.cmp(b));
            Term::Map(merged)
        }
        Sort::Poly { shape } => rewrite_poly(enc, shape, term, rename)?,
    })
}

fn rewrite_poly(
    enc: &Encoding,
    shape: &PolyShape,
    term: &Term,
    rename: &HashMap<&str, String>,
) -> Result<Term> {
    Ok(match (shape, term) {
        (PolyShape::Hole(s), t) => rewrite_succ(enc, *s, t, rename)?,
        (PolyShape::Const(_), t) => t.clone(),
        (PolyShape::Pair(a, b), Term::Pair(l, r)) => Term::Pair(
            Box::new(rewrite_poly(enc, a, l, rename)?),
            Box::new(rewrite_poly(enc, b, r, rename)?),
        ),
        (PolyShape::Sum(a, _), Term::Inl(t)) => {
            Term::Inl(Box::new(rewrite_poly(enc, a, t, rename)?))
        }
        (PolyShape::Sum(_, b), Term::Inr(t)) => {
            Term::Inr(Box::new(rewrite_poly(enc, b, t, rename)?))
        }
        (PolyShape::Tuple(sub, _), Term::List(items)) => Term::List(
            items
                .iter()
                .map(|t| rewrite_poly(enc, sub, t, rename))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => return Err(Error::invariant("stored term does not fit its type")),
    })
}
