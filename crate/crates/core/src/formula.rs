//! Quantifier-free formulas over `G`: linear comparisons with integer
//! coefficients and rational constants, plus divisibility atoms.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! formula  := disj
//! disj     := conj ("or" conj)*
//! conj     := unary ("and" unary)*
//! unary    := "not" unary | "(" formula ")" | "true" | "false" | atom
//! atom     := ("div" | "ndiv") "(" INT "," term ")" | term REL term
//! REL      := "<" | "<=" | "=" | "!=" | ">=" | ">"
//! term     := ["+" | "-"] summand (("+" | "-") summand)*
//! summand  := INT "*" VAR | VAR | INT | INT "/" INT
//! VAR      := "x" DIGITS
//! ```
//!
//! `div(n, t)` holds when `t / n ∈ G`; `ndiv(n, t)` is its negation.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::group_model::Group;

/// Default cap on the number of DNF conjuncts.
pub const DEFAULT_DNF_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at column {}: {message}", .offset + 1)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("coordinate x{index} = {value} is not an element of G")]
    PointOutsideGroup { index: usize, value: BigRational },
    #[error("point has {got} coordinates, formula needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("disjunctive normal form exceeds {cap} conjuncts")]
    DnfTooLarge { cap: usize },
}

/// `Σ c_i x_i + constant` with integer `c_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    coeffs: BTreeMap<usize, BigInt>,
    constant: BigRational,
}

impl Term {
    pub fn zero() -> Self {
        Term {
            coeffs: BTreeMap::new(),
            constant: BigRational::zero(),
        }
    }

    pub fn var(index: usize) -> Self {
        Term::zero().with_coeff(index, BigInt::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Term {
            constant: c,
            ..Term::zero()
        }
    }

    pub fn with_coeff(mut self, index: usize, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        if c.is_zero() {
            self.coeffs.remove(&index);
        } else {
            self.coeffs.insert(index, c);
        }
        self
    }

    pub fn coeff(&self, index: usize) -> BigInt {
        self.coeffs.get(&index).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (usize, &BigInt)> {
        self.coeffs.iter().map(|(&i, c)| (i, c))
    }

    pub fn constant_part(&self) -> &BigRational {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// One past the largest variable index with a nonzero coefficient.
    pub fn arity(&self) -> usize {
        self.coeffs.keys().next_back().map_or(0, |&i| i + 1)
    }

    pub fn plus(&self, other: &Term) -> Term {
        let mut out = self.clone();
        for (&i, c) in &other.coeffs {
            let sum = out.coeff(i) + c;
            out = out.with_coeff(i, sum);
        }
        out.constant += &other.constant;
        out
    }

    pub fn minus(&self, other: &Term) -> Term {
        self.plus(&other.scaled(&BigInt::from(-1)))
    }

    pub fn scaled(&self, k: &BigInt) -> Term {
        if k.is_zero() {
            return Term::zero();
        }
        Term {
            coeffs: self.coeffs.iter().map(|(&i, c)| (i, c * k)).collect(),
            constant: &self.constant * BigRational::from_integer(k.clone()),
        }
    }

    pub fn shifted(&self, c: &BigRational) -> Term {
        Term {
            coeffs: self.coeffs.clone(),
            constant: &self.constant + c,
        }
    }

    /// Renames `x_i` to `x_{i + offset}`.
    pub fn relabeled(&self, offset: usize) -> Term {
        Term {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&i, c)| (i + offset, c.clone()))
                .collect(),
            constant: self.constant.clone(),
        }
    }

    /// Value at `point`; missing coordinates count as 0.
    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        let mut acc = self.constant.clone();
        for (&i, c) in &self.coeffs {
            if let Some(x) = point.get(i) {
                acc += x * BigRational::from_integer(c.clone());
            }
        }
        acc
    }

    /// Substitutes `x_i := map[i]` (rational affine forms) and clears
    /// denominators. Returns `(scale, term)` with `term = scale * t(map)`
    /// and `scale >= 1`.
    fn substitute(&self, map: &AffineMap) -> (BigInt, Term) {
        let width = map.target_arity;
        let mut lin = vec![BigRational::zero(); width];
        let mut constant = self.constant.clone();
        for (&i, c) in &self.coeffs {
            let c = BigRational::from_integer(c.clone());
            let (row, shift) = &map.rows[i];
            for (slot, a) in lin.iter_mut().zip(row) {
                *slot += &c * a;
            }
            constant += &c * shift;
        }
        let scale = lin.iter().fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
        let s = BigRational::from_integer(scale.clone());
        let mut out = Term::constant(&constant * &s);
        for (j, a) in lin.into_iter().enumerate() {
            out = out.with_coeff(j, (a * &s).to_integer());
        }
        (scale, out)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&i, c) in &self.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            if mag.is_one() {
                write!(f, "x{i}")?;
            } else {
                write!(f, "{mag}*x{i}")?;
            }
            first = false;
        }
        let c = &self.constant;
        if first {
            write!(f, "{c}")
        } else if c.is_zero() {
            Ok(())
        } else if c.is_negative() {
            write!(f, " - {}", -c)
        } else {
            write!(f, " + {c}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Rel {
    pub fn negate(self) -> Rel {
        match self {
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
        }
    }

    pub fn holds(self, lhs: &BigRational, rhs: &BigRational) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ne => lhs != rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Compare(Term, Rel, Term),
    /// `t / n ∈ G`.
    Div(u64, Term),
    /// `t / n ∉ G`.
    NDiv(u64, Term),
}

impl Atom {
    pub fn arity(&self) -> usize {
        match self {
            Atom::Compare(l, _, r) => l.arity().max(r.arity()),
            Atom::Div(_, t) | Atom::NDiv(_, t) => t.arity(),
        }
    }

    pub fn holds(&self, group: &Group, point: &[BigRational]) -> bool {
        match self {
            Atom::Compare(l, rel, r) => rel.holds(&l.eval(point), &r.eval(point)),
            Atom::Div(n, t) => divides(group, *n, &t.eval(point)),
            Atom::NDiv(n, t) => !divides(group, *n, &t.eval(point)),
        }
    }

    fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Atom {
        match self {
            Atom::Compare(l, rel, r) => Atom::Compare(f(l), *rel, f(r)),
            Atom::Div(n, t) => Atom::Div(*n, f(t)),
            Atom::NDiv(n, t) => Atom::NDiv(*n, f(t)),
        }
    }
}

/// `value / n ∈ G`.
pub fn divides(group: &Group, n: u64, value: &BigRational) -> bool {
    group.contains(&(value / BigRational::from_integer(BigInt::from(n))))
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Compare(l, rel, r) => write!(f, "{l} {} {r}", rel.symbol()),
            Atom::Div(n, t) => write!(f, "div({n}, {t})"),
            Atom::NDiv(n, t) => write!(f, "ndiv({n}, {t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn compare(l: Term, rel: Rel, r: Term) -> Self {
        Formula::Atom(Atom::Compare(l, rel, r))
    }

    pub fn div(n: u64, t: Term) -> Self {
        Formula::Atom(Atom::Div(n, t))
    }

    pub fn ndiv(n: u64, t: Term) -> Self {
        Formula::Atom(Atom::NDiv(n, t))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Conjunction; empty is `true`, a singleton is its member.
    pub fn and(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; empty is `false`, a singleton is its member.
    pub fn or(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn parse(text: &str) -> Result<Formula, ParseError> {
        Parser::new(text)?.parse_all()
    }

    /// One past the largest variable index mentioned.
    pub fn arity(&self) -> usize {
        match self {
            Formula::True | Formula::False => 0,
            Formula::Atom(a) => a.arity(),
            Formula::Not(f) => f.arity(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::arity).max().unwrap_or(0),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::True | Formula::False => {}
        }
    }

    /// Rebuilds the tree with every atom replaced by `f(atom)`.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => f(a),
            Formula::Not(g) => Formula::not(g.map_atoms(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_atoms(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_atoms(f)).collect()),
        }
    }

    /// Renames `x_i` to `x_{i + offset}`.
    pub fn relabeled(&self, offset: usize) -> Formula {
        self.map_atoms(&mut |a| Formula::Atom(a.map_terms(|t| t.relabeled(offset))))
    }

    /// Truth at a point whose coordinates are all in `G`.
    pub fn eval_point(&self, group: &Group, point: &[BigRational]) -> Result<bool, FormulaError> {
        let needed = self.arity();
        if point.len() < needed {
            return Err(FormulaError::DimensionMismatch {
                expected: needed,
                got: point.len(),
            });
        }
        if let Some((index, value)) = point.iter().enumerate().find(|(_, x)| !group.contains(x)) {
            return Err(FormulaError::PointOutsideGroup {
                index,
                value: value.clone(),
            });
        }
        Ok(self.holds(group, point))
    }

    /// Truth at an arbitrary point, without the membership check.
    pub fn holds(&self, group: &Group, point: &[BigRational]) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(group, point),
            Formula::Not(f) => !f.holds(group, point),
            Formula::And(fs) => fs.iter().all(|f| f.holds(group, point)),
            Formula::Or(fs) => fs.iter().any(|f| f.holds(group, point)),
        }
    }

    /// Substitutes `x_i := map.rows[i]`, clearing denominators so the
    /// result keeps integer coefficients.
    pub fn substitute(&self, map: &AffineMap) -> Formula {
        self.map_atoms(&mut |a| {
            Formula::Atom(match a {
                Atom::Compare(l, rel, r) => {
                    let (s, t) = l.minus(r).substitute(map);
                    debug_assert!(s.is_positive());
                    Atom::Compare(t, *rel, Term::zero())
                }
                Atom::Div(n, t) | Atom::NDiv(n, t) => {
                    let (s, t) = t.substitute(map);
                    let n = (BigInt::from(*n) * s)
                        .try_into()
                        .expect("modulus after substitution fits in u64");
                    if matches!(a, Atom::Div(..)) {
                        Atom::Div(n, t)
                    } else {
                        Atom::NDiv(n, t)
                    }
                }
            })
        })
    }

    /// Negation-free equivalent over `G^n`: negations pushed into atoms,
    /// `ndiv` rewritten as a disjunction of shifted `div`s, moduli reduced
    /// to their part outside `S`, `!=` split into `<` or `>`, and
    /// comparisons moved to the form `t rel 0`. Atoms that are constant
    /// over `G^n` are folded away.
    pub fn normalize(&self, group: &Group) -> Formula {
        self.nnf(false, group)
    }

    fn nnf(&self, negated: bool, group: &Group) -> Formula {
        match (self, negated) {
            (Formula::True, false) | (Formula::False, true) => Formula::True,
            (Formula::True, true) | (Formula::False, false) => Formula::False,
            (Formula::Not(f), _) => f.nnf(!negated, group),
            (Formula::And(fs), false) | (Formula::Or(fs), true) => {
                conjoin(fs.iter().map(|f| f.nnf(negated, group)))
            }
            (Formula::Or(fs), false) | (Formula::And(fs), true) => {
                disjoin(fs.iter().map(|f| f.nnf(negated, group)))
            }
            (Formula::Atom(a), _) => normalize_atom(a, negated, group),
        }
    }

    /// Disjunctive normal form of a normalized formula.
    pub fn dnf(&self, cap: usize) -> Result<Vec<Vec<Atom>>, FormulaError> {
        match self {
            Formula::True => Ok(vec![vec![]]),
            Formula::False => Ok(vec![]),
            Formula::Atom(a) => Ok(vec![vec![a.clone()]]),
            Formula::Not(_) => panic!("dnf expects a normalized formula"),
            Formula::Or(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    out.extend(f.dnf(cap)?);
                    if out.len() > cap {
                        return Err(FormulaError::DnfTooLarge { cap });
                    }
                }
                Ok(out)
            }
            Formula::And(fs) => {
                let mut acc: Vec<Vec<Atom>> = vec![vec![]];
                for f in fs {
                    let part = f.dnf(cap)?;
                    if acc.len().saturating_mul(part.len()) > cap {
                        return Err(FormulaError::DnfTooLarge { cap });
                    }
                    acc = acc
                        .iter()
                        .flat_map(|c| {
                            part.iter()
                                .map(move |d| c.iter().chain(d).cloned().collect())
                        })
                        .collect();
                }
                Ok(acc)
            }
        }
    }
}

fn conjoin(parts: impl Iterator<Item = Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Formula::True => {}
            Formula::False => return Formula::False,
            Formula::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    Formula::and(out)
}

fn disjoin(parts: impl Iterator<Item = Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Formula::False => {}
            Formula::True => return Formula::True,
            Formula::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    Formula::or(out)
}

fn normalize_atom(atom: &Atom, negated: bool, group: &Group) -> Formula {
    let truth = |b: bool| if b { Formula::True } else { Formula::False };
    match atom {
        Atom::Compare(l, rel, r) => {
            let rel = if negated { rel.negate() } else { *rel };
            let t = l.minus(r);
            if t.is_constant() {
                return truth(rel.holds(t.constant_part(), &BigRational::zero()));
            }
            let cmp = |rel| Formula::compare(t.clone(), rel, Term::zero());
            match rel {
                Rel::Ne => Formula::Or(vec![cmp(Rel::Lt), cmp(Rel::Gt)]),
                rel => cmp(rel),
            }
        }
        Atom::Div(n, t) | Atom::NDiv(n, t) => {
            let positive = matches!(atom, Atom::Div(..)) != negated;
            if t.is_constant() {
                return truth(divides(group, *n, t.constant_part()) == positive);
            }
            // the linear part lies in G, so t ∈ G iff its constant does
            if !group.contains(t.constant_part()) {
                return truth(!positive);
            }
            let (_, m) = group.s_split(*n);
            if m == 1 {
                return truth(positive);
            }
            if positive {
                return Formula::div(m, t.clone());
            }
            // exactly one of t, t + 1/n_K, ..., t + (m-1)/n_K is divisible by m
            let nk = BigInt::from(group.k_part(m));
            Formula::Or(
                (1..m)
                    .map(|i| {
                        let shift = BigRational::new(BigInt::from(i), nk.clone());
                        Formula::div(m, t.shifted(&shift))
                    })
                    .collect(),
            )
        }
    }
}

/// Rational affine substitution `x_i := Σ_j rows[i].0[j] y_j + rows[i].1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub target_arity: usize,
    pub rows: Vec<(Vec<BigRational>, BigRational)>,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap {
            target_arity: n,
            rows: (0..n)
                .map(|i| {
                    let mut row = vec![BigRational::zero(); n];
                    row[i] = BigRational::one();
                    (row, BigRational::zero())
                })
                .collect(),
        }
    }

    pub fn apply(&self, point: &[BigRational]) -> Vec<BigRational> {
        self.rows
            .iter()
            .map(|(row, c)| {
                row.iter()
                    .zip(point)
                    .fold(c.clone(), |acc, (a, x)| acc + a * x)
            })
            .collect()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, g: &Formula, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => {
                write!(f, "not ")?;
                child(f, g, matches!(**g, Formula::And(_) | Formula::Or(_)))
            }
            Formula::And(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " and ")?;
                    }
                    child(f, g, matches!(g, Formula::And(_) | Formula::Or(_)))?;
                }
                Ok(())
            }
            Formula::Or(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " or ")?;
                    }
                    child(f, g, matches!(g, Formula::Or(_)))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Var(usize),
    Int(BigInt),
    Word(String),
    Rel(Rel),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Dot,
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((start, Tok::Int(text[start..i].parse().unwrap())));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word.strip_prefix('x') {
                Some(digits)
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) =>
                {
                    match digits.parse() {
                        Ok(n) => Tok::Var(n),
                        Err(_) => {
                            return err(start, format!("variable index too large in `{word}`"))
                        }
                    }
                }
                _ => Tok::Word(word.to_string()),
            };
            out.push((start, tok));
            continue;
        }
        let two = text.get(i..i + 2);
        let (tok, len) = match (c, two) {
            (_, Some("<=")) => (Tok::Rel(Rel::Le), 2),
            (_, Some(">=")) => (Tok::Rel(Rel::Ge), 2),
            (_, Some("!=")) => (Tok::Rel(Rel::Ne), 2),
            ('<', _) => (Tok::Rel(Rel::Lt), 1),
            ('>', _) => (Tok::Rel(Rel::Gt), 1),
            ('=', _) => (Tok::Rel(Rel::Eq), 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return err(start, format!("unexpected character `{ch}`"));
            }
        };
        out.push((start, tok));
        i += len;
    }
    Ok(out)
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            err(self.offset(), format!("expected {what}"))
        }
    }

    fn parse_all(mut self) -> Result<Formula, ParseError> {
        let f = self.disj()?;
        if self.pos < self.toks.len() {
            return err(self.offset(), "unexpected trailing input");
        }
        Ok(f)
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conj()?];
        while self.is_word("or") {
            self.pos += 1;
            parts.push(self.conj()?);
        }
        Ok(Formula::or(parts))
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.is_word("and") {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        match self.peek() {
            Some(Tok::Word(w)) => match w.as_str() {
                "not" => {
                    self.pos += 1;
                    Ok(Formula::not(self.unary()?))
                }
                "true" => {
                    self.pos += 1;
                    Ok(Formula::True)
                }
                "false" => {
                    self.pos += 1;
                    Ok(Formula::False)
                }
                "div" | "ndiv" => {
                    let negative = w == "ndiv";
                    self.pos += 1;
                    self.expect(Tok::LParen, "`(` after div")?;
                    let m_at = self.offset();
                    let n = match self.bump() {
                        Some(Tok::Int(n)) => n,
                        _ => return err(m_at, "expected a positive integer modulus"),
                    };
                    let n: u64 = match n.try_into() {
                        Ok(n) if n >= 1 => n,
                        _ => return err(m_at, "modulus must be an integer in 1..2^64"),
                    };
                    self.expect(Tok::Comma, "`,`")?;
                    let t = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(if negative {
                        Formula::ndiv(n, t)
                    } else {
                        Formula::div(n, t)
                    })
                }
                "exists" | "forall" => err(
                    at,
                    "quantifiers are not supported; eliminate them first \
                     (Presburger quantifier elimination yields an equivalent \
                     quantifier-free formula) and pass that instead",
                ),
                "and" | "or" => err(at, format!("unexpected `{w}`")),
                _ => err(at, format!("unknown keyword `{w}`")),
            },
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.disj()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => {
                let l = self.term()?;
                let rel_at = self.offset();
                let rel = match self.bump() {
                    Some(Tok::Rel(r)) => r,
                    _ => return err(rel_at, "expected a comparison operator"),
                };
                let r = self.term()?;
                Ok(Formula::compare(l, rel, r))
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = Term::zero();
        let mut sign = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -1
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        loop {
            t = t.plus(&self.summand()?.scaled(&BigInt::from(sign)));
            sign = match self.peek() {
                Some(Tok::Plus) => 1,
                Some(Tok::Minus) => -1,
                _ => return Ok(t),
            };
            self.pos += 1;
        }
    }

    fn summand(&mut self) -> Result<Term, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Var(i)) => Ok(Term::var(i)),
            Some(Tok::Int(n)) => match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let v_at = self.offset();
                    match self.bump() {
                        Some(Tok::Var(i)) => Ok(Term::zero().with_coeff(i, n)),
                        _ => err(v_at, "expected a variable after `*`"),
                    }
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d_at = self.offset();
                    let d = match self.bump() {
                        Some(Tok::Int(d)) if !d.is_zero() => d,
                        _ => return err(d_at, "expected a nonzero denominator"),
                    };
                    if self.peek() == Some(&Tok::Star) {
                        return err(self.offset(), "variable coefficients must be integers");
                    }
                    Ok(Term::constant(BigRational::new(n, d)))
                }
                _ => Ok(Term::constant(BigRational::from_integer(n))),
            },
            Some(Tok::Dot) => err(at, "unexpected `.`"),
            _ => err(at, "expected a variable or a number"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::{ratio, GroupDescriptor};
    use proptest::prelude::*;

    fn g7() -> Group {
        GroupDescriptor::cofinite(&[7]).validate().unwrap()
    }

    fn p(text: &str) -> Formula {
        Formula::parse(text).unwrap()
    }

    #[test]
    fn parse_examples() {
        let f = p("0 < x0 and x0 < 1");
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::compare(Term::zero(), Rel::Lt, Term::var(0)),
                Formula::compare(Term::var(0), Rel::Lt, Term::constant(ratio(1, 1))),
            ])
        );
        assert_eq!(
            p("div(7, x0 - 1)"),
            Formula::div(7, Term::var(0).shifted(&ratio(-1, 1)))
        );
        let e = Formula::parse("exists x0. x0 > 0").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.message.contains("quantifier"));
        assert_eq!(p("7*x0 > 1").to_string(), "7*x0 > 1");
        assert_eq!(p("x0 = x0").arity(), 1);
        assert_eq!(
            p("3*x2 - x0 + 1/9 >= -2/3").to_string(),
            "-x0 + 3*x2 + 1/9 >= -2/3"
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = Formula::parse("0 < x0 and").unwrap_err();
        assert_eq!(e.offset, 10);
        let e = Formula::parse("0 < x0 & x0 < 1").unwrap_err();
        assert_eq!(e.offset, 7);
        let e = Formula::parse("1/2*x0 > 0").unwrap_err();
        assert!(e.message.contains("integers"));
        assert!(Formula::parse("div(0, x0)").is_err());
        assert!(Formula::parse("(0 < x0").is_err());
        assert!(Formula::parse("0 < x0)").is_err());
        assert!(Formula::parse("x0 < 1/0").is_err());
        let e = Formula::parse("forall x1. x1 = x1").unwrap_err();
        assert!(e.to_string().starts_with("parse error at column 1"));
    }

    #[test]
    fn printing_parenthesizes() {
        let f = p("(0 < x0 or x0 > 2) and not (x0 = 1 and x1 = 2)");
        assert_eq!(
            f.to_string(),
            "(0 < x0 or x0 > 2) and not (x0 = 1 and x1 = 2)"
        );
        assert_eq!(p(&f.to_string()), f);
    }

    #[test]
    fn eval_point_examples() {
        let z2 = GroupDescriptor::finite(&[2]).validate().unwrap();
        assert!(p("div(3, x0)").eval_point(&z2, &[ratio(3, 2)]).unwrap());
        assert!(!p("0 < x0").eval_point(&g7(), &[ratio(0, 1)]).unwrap());
        assert!(!p("div(7, x0)").eval_point(&g7(), &[ratio(1, 1)]).unwrap());
        assert!(matches!(
            p("0 < x0").eval_point(&g7(), &[ratio(1, 7)]),
            Err(FormulaError::PointOutsideGroup { index: 0, .. })
        ));
        assert!(matches!(
            p("0 < x1").eval_point(&g7(), &[ratio(1, 1)]),
            Err(FormulaError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn normalize_examples() {
        let h = GroupDescriptor::finite(&[2])
            .with_exponent(3, 2)
            .validate()
            .unwrap();
        assert_eq!(p("div(12, x0)").normalize(&h), p("div(3, x0)"));
        assert_eq!(
            p("ndiv(3, x0)").normalize(&h),
            p("div(3, x0 + 1/9) or div(3, x0 + 2/9)")
        );
        let z2 = GroupDescriptor::finite(&[2]).validate().unwrap();
        assert_eq!(p("div(8, x0)").normalize(&z2), Formula::True);
        assert_eq!(p("x0 != 1").normalize(&z2), p("x0 - 1 < 0 or x0 - 1 > 0"));
        assert_eq!(p("not (x0 < 1)").normalize(&z2), p("x0 - 1 >= 0"));
        assert_eq!(p("x0 = x0").normalize(&z2), Formula::True);
        assert_eq!(p("div(7, x0 + 1/7)").normalize(&g7()), Formula::False);
        assert_eq!(p("ndiv(7, x0 + 1/7)").normalize(&g7()), Formula::True);
        assert_eq!(p("div(7, 14)").normalize(&g7()), Formula::True);
        assert_eq!(p("not div(7, x0) and true").normalize(&g7()).to_string(),
            "div(7, x0 + 1) or div(7, x0 + 2) or div(7, x0 + 3) or div(7, x0 + 4) or div(7, x0 + 5) or div(7, x0 + 6)");
    }

    #[test]
    fn dnf_examples() {
        let a = p("x0 > 0");
        assert_eq!(a.dnf(10).unwrap().len(), 1);
        let f = p("(x0 > 0 or x0 < -1) and x1 > 0");
        let d = f.dnf(10).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].len(), 2);
        let big = p("(x0 > 0 or x0 < -1) and (x1 > 0 or x1 < -1) and (x0 > 5 or x1 > 5)");
        assert_eq!(big.dnf(8).unwrap().len(), 8);
        assert_eq!(big.dnf(7), Err(FormulaError::DnfTooLarge { cap: 7 }));
        assert_eq!(Formula::True.dnf(1).unwrap(), vec![vec![]]);
        assert!(Formula::False.dnf(1).unwrap().is_empty());
    }

    #[test]
    fn dnf_equivalence_on_samples() {
        let g = g7();
        let f = p("((x0 > 0 and not (x1 < 2 or div(7, x0 + x1))) or (x0 <= -1 and (x1 = 0 or ndiv(7, 2*x1 - 3)))) and not x0 = 3");
        let nf = f.normalize(&g);
        let dnf = nf.dnf(DEFAULT_DNF_CAP).unwrap();
        let pts = g.sample_elements_seeded(9, 400, 8, 4);
        for pt in pts.chunks(2) {
            let direct = f.eval_point(&g, pt).unwrap();
            let via_nf = nf.eval_point(&g, pt).unwrap();
            let via_dnf = dnf.iter().any(|c| c.iter().all(|a| a.holds(&g, pt)));
            assert_eq!(direct, via_nf, "{pt:?}");
            assert_eq!(direct, via_dnf, "{pt:?}");
        }
    }

    #[test]
    fn substitution_clears_denominators() {
        // x0 := y0 / 2 + 1/3
        let map = AffineMap {
            target_arity: 1,
            rows: vec![(vec![ratio(1, 2)], ratio(1, 3))],
        };
        let f = p("3*x0 < 1 and div(5, x0)");
        let g = f.substitute(&map);
        assert_eq!(g.to_string(), "3*x0 < 0 and div(10, x0 + 2/3)");
        let grp = g7();
        for y in grp.sample_elements_seeded(1, 100, 30, 5) {
            let x = map.apply(std::slice::from_ref(&y));
            assert_eq!(f.holds(&grp, &x), g.holds(&grp, &[y]));
        }
    }

    fn arb_term(n: usize) -> impl Strategy<Value = Term> {
        (prop::collection::vec(-5i64..=5, n), -20i64..20, 1i64..12).prop_map(|(cs, a, b)| {
            cs.into_iter()
                .enumerate()
                .fold(Term::constant(ratio(a, b)), |t, (i, c)| t.with_coeff(i, c))
        })
    }

    fn arb_atom() -> impl Strategy<Value = Formula> {
        let rel = prop::sample::select(vec![Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne, Rel::Ge, Rel::Gt]);
        prop_oneof![
            (arb_term(2), rel, arb_term(2)).prop_map(|(l, r, t)| Formula::compare(l, r, t)),
            (1u64..15, arb_term(2)).prop_map(|(n, t)| Formula::div(n, t)),
            (1u64..15, arb_term(2)).prop_map(|(n, t)| Formula::ndiv(n, t)),
        ]
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        arb_atom().prop_recursive(3, 16, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
                prop::collection::vec(inner, 2..4).prop_map(Formula::Or),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(f in arb_formula()) {
            let text = f.to_string();
            prop_assert_eq!(Formula::parse(&text).unwrap(), f);
        }

        #[test]
        fn normalize_preserves_truth(f in arb_formula(), seed in any::<u64>()) {
            let groups = [
                g7(),
                GroupDescriptor::finite(&[2]).with_exponent(3, 2).validate().unwrap(),
                GroupDescriptor::cofinite(&[7, 13]).with_exponent(13, 1).validate().unwrap(),
            ];
            for g in &groups {
                let nf = f.normalize(g);
                for pt in g.sample_elements_seeded(seed, 60, 30, 4).chunks(2) {
                    prop_assert_eq!(f.eval_point(g, pt).unwrap(), nf.eval_point(g, pt).unwrap());
                }
                for a in nf.atoms() {
                    match a {
                        Atom::Div(m, _) => prop_assert_eq!(g.s_split(*m), (1, *m)),
                        Atom::NDiv(..) => prop_assert!(false, "ndiv survived normalization"),
                        Atom::Compare(_, rel, r) => {
                            prop_assert!(*rel != Rel::Ne);
                            prop_assert!(r == &Term::zero());
                        }
                    }
                }
            }
        }
    }
}
