//! Values of quantifier-free definable sets in the candidate ring.
//!
//! Pipeline for a formula `f` in `n` variables:
//!
//! 1. normalize `f` (divisibility moduli lose their `S`-part);
//! 2. `L` = lcm of the remaining moduli, `L_K` its `k`-part;
//! 3. for each residue tuple `ℓ ∈ {0..L-1}^n` substitute
//!    `x_j = L z_j + ℓ_j / L_K`, which turns every `div` atom into a
//!    constant and maps `G^n` bijectively onto one coset;
//! 4. decompose the divisibility-free remainder into linear cells;
//! 5. value every `cell ∩ G^n` by recursion on the last coordinate.
//!
//! Step 5 reduces a cell of arity `n` to formulas of arity `n - 1`:
//! a section over `B` is `B` restricted to where the section function lands
//! in `G`; a ray `y > f(x)` with `f = s/m + c` is split by the residue of `s`
//! modulo `m_T` into products `B_j × (c - j/(m m_K), +∞)`; lower rays
//! mirror; bounded bands are a signed combination of the above.

use std::cell::{Cell as StdCell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::formula::{divides, Atom, Formula, Rel, Term, DEFAULT_DNF_CAP};
use crate::group_model::{Group, GroupError};
use crate::k0ring::{interval_value, point_value, Endpoint, K0Element, RingError, RingSpec};
use crate::lincell::{cell_membership, sign_invariant_cells, AffineFn, Cell, Coord};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{count} residue tuples exceed the cap of {cap}")]
    TooManyTuples { count: u128, cap: u64 },
    #[error("{count} cells exceed the cap of {cap}")]
    TooManyCells { count: usize, cap: usize },
    #[error("recursion depth exceeds {0}")]
    TooDeep(usize),
    #[error("modulus lcm overflows u64")]
    ModulusOverflow,
    #[error("formula has {got} variables, ambient arity is {arity}")]
    ArityTooSmall { arity: usize, got: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

impl EvalError {
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            EvalError::TooManyTuples { .. }
                | EvalError::TooManyCells { .. }
                | EvalError::TooDeep(_)
                | EvalError::ModulusOverflow
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    /// Residue tuples per (sub-)evaluation.
    pub max_tuples: u64,
    /// Cells per (sub-)evaluation.
    pub max_cells: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_tuples: 100_000,
            max_cells: 100_000,
            max_depth: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalTrace {
    /// Normalized input.
    pub formula: String,
    pub arity: usize,
    #[serde(rename = "L")]
    pub l: u64,
    #[serde(rename = "L_K")]
    pub l_k: u64,
    /// Conjunction count of the normalized formula's DNF; `None` above the cap.
    pub dnf_size: Option<usize>,
    pub tuples: Vec<TupleTrace>,
    pub total: K0Element,
}

impl EvalTrace {
    pub fn cell_count(&self) -> usize {
        self.tuples.iter().map(|t| t.cells.len()).sum()
    }

    pub fn surviving_tuples(&self) -> usize {
        self.tuples.iter().filter(|t| t.kept).count()
    }

    /// Every cell value summed in the ring.
    pub fn leaf_sum(&self) -> K0Element {
        let spec = self.total.ring();
        self.tuples
            .iter()
            .flat_map(|t| &t.cells)
            .fold(spec.zero(), |acc, c| acc + c.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TupleTrace {
    pub residues: Vec<u64>,
    pub kept: bool,
    /// Divisibility-free formula over `z` after substitution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<String>,
    pub cells: Vec<CellTrace>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellTrace {
    pub cell: Cell,
    pub value: K0Element,
    /// `value = Σ coefficient · sub.value`; empty for unary cells.
    pub parts: Vec<SubEvaluation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubEvaluation {
    pub role: String,
    pub coefficient: K0Element,
    pub value: K0Element,
    pub trace: Rc<EvalTrace>,
}

/// Residue pieces and linear cells covering a formula's set.
#[derive(Debug, Clone)]
pub struct QuasiDecomposition {
    pub arity: usize,
    pub l: u64,
    pub l_k: u64,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub residues: Vec<u64>,
    /// `None` when some divisibility atom is false on the whole coset.
    pub reduced: Option<Formula>,
    pub cells: Vec<Cell>,
}

impl QuasiDecomposition {
    /// Number of quasi-cells containing `x ∈ G^n`.
    pub fn membership_count(&self, group: &Group, x: &[BigRational]) -> usize {
        assert_eq!(x.len(), self.arity, "dimension mismatch");
        let l = BigRational::from_integer(self.l.into());
        let lk = BigRational::from_integer(self.l_k.into());
        let mut z = Vec::with_capacity(self.arity);
        let mut residues = Vec::with_capacity(self.arity);
        for xj in x {
            let found = (0..self.l).find_map(|r| {
                let zj = (xj - BigRational::from_integer(r.into()) / &lk) / &l;
                group.contains(&zj).then_some((r, zj))
            });
            let Some((r, zj)) = found else { return 0 };
            residues.push(r);
            z.push(zj);
        }
        self.pieces
            .iter()
            .filter(|p| p.residues == residues)
            .flat_map(|p| &p.cells)
            .filter(|c| cell_membership(c, &z))
            .count()
    }

    pub fn cell_count(&self) -> usize {
        self.pieces.iter().map(|p| p.cells.len()).sum()
    }
}

/// lcm of the divisibility moduli; 1 when there are none.
pub fn compute_l(f: &Formula) -> Option<u64> {
    f.atoms().iter().try_fold(1u64, |acc, a| match a {
        Atom::Div(m, _) | Atom::NDiv(m, _) => {
            let l = acc / acc.gcd(m);
            l.checked_mul(*m)
        }
        Atom::Compare(..) => Some(acc),
    })
}

/// Memoizing evaluator over a fixed group.
pub struct Evaluator<'g> {
    group: &'g Group,
    spec: RingSpec,
    limits: Limits,
    memo: RefCell<HashMap<(String, usize), Rc<EvalTrace>>>,
    depth: StdCell<usize>,
}

impl<'g> Evaluator<'g> {
    pub fn new(group: &'g Group, spec: RingSpec) -> Self {
        Evaluator {
            group,
            spec,
            limits: Limits::default(),
            memo: RefCell::new(HashMap::new()),
            depth: StdCell::new(0),
        }
    }

    /// Evaluator over the candidate ring of `group`.
    pub fn for_group(group: &'g Group) -> Result<Self, EvalError> {
        Ok(Evaluator::new(group, RingSpec::new(group.q()?)?))
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn spec(&self) -> &RingSpec {
        &self.spec
    }

    pub fn group(&self) -> &Group {
        self.group
    }

    /// Value of `f` as a subset of `G^arity(f)`.
    pub fn value(&self, f: &Formula) -> Result<K0Element, EvalError> {
        Ok(self.trace_in(f, f.arity())?.total)
    }

    /// Value of `f` as a subset of `G^arity`.
    pub fn value_in(&self, f: &Formula, arity: usize) -> Result<K0Element, EvalError> {
        Ok(self.trace_in(f, arity)?.total)
    }

    pub fn trace_in(&self, f: &Formula, arity: usize) -> Result<Rc<EvalTrace>, EvalError> {
        if f.arity() > arity {
            return Err(EvalError::ArityTooSmall {
                arity,
                got: f.arity(),
            });
        }
        let nf = f.normalize(self.group);
        let key = (nf.to_string(), arity);
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let trace = Rc::new(self.run(&nf, arity)?);
        self.memo.borrow_mut().insert(key, trace.clone());
        Ok(trace)
    }

    fn run(&self, nf: &Formula, arity: usize) -> Result<EvalTrace, EvalError> {
        let dnf_size = nf.dnf(DEFAULT_DNF_CAP).ok().map(|d| d.len());
        if self.spec.is_trivial() {
            return Ok(EvalTrace {
                formula: nf.to_string(),
                arity,
                l: 1,
                l_k: 1,
                dnf_size,
                tuples: vec![],
                total: self.spec.zero(),
            });
        }
        let dec = self.decompose_normalized(nf, arity)?;
        let mut total = self.spec.zero();
        let mut tuples = Vec::with_capacity(dec.pieces.len());
        for piece in dec.pieces {
            let mut cells = Vec::with_capacity(piece.cells.len());
            for cell in piece.cells {
                let (value, parts) = self.cell_parts(&cell)?;
                total = total + value;
                cells.push(CellTrace { cell, value, parts });
            }
            tuples.push(TupleTrace {
                residues: piece.residues,
                kept: piece.reduced.is_some(),
                reduced: piece.reduced.map(|f| f.to_string()),
                cells,
            });
        }
        Ok(EvalTrace {
            formula: nf.to_string(),
            arity,
            l: dec.l,
            l_k: dec.l_k,
            dnf_size,
            tuples,
            total,
        })
    }

    /// Steps 1-4 of the pipeline.
    pub fn decompose(&self, f: &Formula, arity: usize) -> Result<QuasiDecomposition, EvalError> {
        if f.arity() > arity {
            return Err(EvalError::ArityTooSmall {
                arity,
                got: f.arity(),
            });
        }
        self.decompose_normalized(&f.normalize(self.group), arity)
    }

    fn decompose_normalized(
        &self,
        nf: &Formula,
        arity: usize,
    ) -> Result<QuasiDecomposition, EvalError> {
        let l = compute_l(nf).ok_or(EvalError::ModulusOverflow)?;
        let l_k = self.group.k_part(l);
        let count = (l as u128)
            .checked_pow(arity as u32)
            .filter(|&c| c <= self.limits.max_tuples as u128)
            .ok_or(EvalError::TooManyTuples {
                count: (l as u128).saturating_pow(arity as u32),
                cap: self.limits.max_tuples,
            })?;
        let mut pieces = Vec::with_capacity(count as usize);
        let mut ncells = 0usize;
        let mut residues = vec![0u64; arity];
        for _ in 0..count {
            let reduced = self.substitute_residues(nf, l, l_k, &residues);
            let cells = match &reduced {
                Some(g) => {
                    let polys = compare_polys(g, arity);
                    sign_invariant_cells(&polys, arity)
                        .into_iter()
                        .filter(|c| g.holds(self.group, &crate::lincell::sample_point(c)))
                        .collect()
                }
                None => vec![],
            };
            ncells += cells.len();
            if ncells > self.limits.max_cells {
                return Err(EvalError::TooManyCells {
                    count: ncells,
                    cap: self.limits.max_cells,
                });
            }
            pieces.push(Piece {
                residues: residues.clone(),
                reduced,
                cells,
            });
            for r in residues.iter_mut().rev() {
                *r += 1;
                if *r < l {
                    break;
                }
                *r = 0;
            }
        }
        Ok(QuasiDecomposition {
            arity,
            l,
            l_k,
            pieces,
        })
    }

    /// `nf` under `x_j = L z_j + ℓ_j / L_K`; `None` if it is false everywhere.
    fn substitute_residues(
        &self,
        nf: &Formula,
        l: u64,
        l_k: u64,
        residues: &[u64],
    ) -> Option<Formula> {
        let lb = BigInt::from(l);
        let shifts: Vec<BigRational> = residues
            .iter()
            .map(|&r| BigRational::new(r.into(), l_k.into()))
            .collect();
        let offset = |t: &Term| {
            t.coeffs().fold(t.constant_part().clone(), |acc, (j, a)| {
                acc + BigRational::from_integer(a.clone()) * &shifts[j]
            })
        };
        let out = nf.map_atoms(&mut |a| match a {
            Atom::Compare(t, rel, r) => {
                let t = t.minus(r);
                let z = t.coeffs().fold(Term::constant(offset(&t)), |acc, (j, a)| {
                    acc.with_coeff(j, a * &lb)
                });
                Formula::compare(z, *rel, Term::zero())
            }
            Atom::Div(m, t) => truth(divides(self.group, *m, &offset(t))),
            Atom::NDiv(m, t) => truth(!divides(self.group, *m, &offset(t))),
        });
        match out.normalize(self.group) {
            Formula::False => None,
            g => Some(g),
        }
    }

    fn sub(&self, f: &Formula, arity: usize) -> Result<Rc<EvalTrace>, EvalError> {
        let d = self.depth.get();
        if d >= self.limits.max_depth {
            return Err(EvalError::TooDeep(self.limits.max_depth));
        }
        self.depth.set(d + 1);
        let out = self.trace_in(f, arity);
        self.depth.set(d);
        out
    }

    /// Value of `cell ∩ G^n`.
    pub fn evaluate_cell(&self, cell: &Cell) -> Result<K0Element, EvalError> {
        if self.spec.is_trivial() {
            return Ok(self.spec.zero());
        }
        Ok(self.cell_parts(cell)?.0)
    }

    fn cell_parts(&self, cell: &Cell) -> Result<(K0Element, Vec<SubEvaluation>), EvalError> {
        let spec = &self.spec;
        let Some(last) = cell.last() else {
            return Ok((spec.one(), vec![]));
        };
        let n = cell.arity();
        if n == 1 {
            let at = |f: &AffineFn| f.eval(&[]);
            let value = match last {
                Coord::Section(f) => point_value(spec, self.group, &at(f)),
                Coord::Band { lo, hi } => {
                    let lo = lo
                        .as_ref()
                        .map_or(Endpoint::NegInf, |f| Endpoint::at(self.group, at(f)));
                    let hi = hi
                        .as_ref()
                        .map_or(Endpoint::PosInf, |f| Endpoint::at(self.group, at(f)));
                    interval_value(spec, &lo, &hi)
                }
            };
            return Ok((value, vec![]));
        }
        let base = cell_formula(&cell.base());
        let mut parts = Vec::new();
        let one = spec.one();
        match last {
            Coord::Section(f) => self.section(&base, f, n, &one, &mut parts)?,
            Coord::Band { lo: None, hi: None } => {
                let t = self.sub(&base, n - 1)?;
                parts.push(SubEvaluation {
                    role: "base".into(),
                    coefficient: spec.line(),
                    value: t.total,
                    trace: t,
                });
            }
            Coord::Band {
                lo: Some(f),
                hi: None,
            } => self.ray_above(&base, f, n, &one, "above", &mut parts)?,
            Coord::Band {
                lo: None,
                hi: Some(g),
            } => self.ray_above(&base, &negated(g), n, &one, "below", &mut parts)?,
            Coord::Band {
                lo: Some(f),
                hi: Some(g),
            } => {
                let minus = -one;
                self.ray_above(&base, &negated(g), n, &one, "below upper", &mut parts)?;
                self.section(&base, f, n, &minus, &mut parts)?;
                self.ray_above(&base, &negated(f), n, &minus, "below lower", &mut parts)?;
            }
        }
        let value = parts
            .iter()
            .fold(spec.zero(), |acc, p| acc + p.coefficient * p.value);
        Ok((value, parts))
    }

    /// Graph of `f` over the base: the base where `f` lands in `G`.
    fn section(
        &self,
        base: &Formula,
        f: &AffineFn,
        n: usize,
        sign: &K0Element,
        parts: &mut Vec<SubEvaluation>,
    ) -> Result<(), EvalError> {
        let (s, m, c) = split_affine(f);
        let mc = &c * BigRational::from_integer(m.into());
        let g = Formula::and(vec![base.clone(), Formula::div(m, s.shifted(&mc))]);
        let t = self.sub(&g, n - 1)?;
        parts.push(SubEvaluation {
            role: "section".into(),
            coefficient: *sign,
            value: t.total,
            trace: t,
        });
        Ok(())
    }

    /// `{(x, y) : x ∈ base, y > f(x)}`, split by the residue of the
    /// linear part of `f` modulo `m_T`.
    fn ray_above(
        &self,
        base: &Formula,
        f: &AffineFn,
        n: usize,
        sign: &K0Element,
        role: &str,
        parts: &mut Vec<SubEvaluation>,
    ) -> Result<(), EvalError> {
        let (s, m, c) = split_affine(f);
        let (_, mt) = self.group.s_split(m);
        let mk = self.group.k_part(mt);
        for j in 0..mt {
            let g = if mt == 1 {
                base.clone()
            } else {
                let shift = BigRational::new(j.into(), mk.into());
                Formula::and(vec![base.clone(), Formula::div(mt, s.shifted(&shift))])
            };
            let t = self.sub(&g, n - 1)?;
            let end = &c - BigRational::new(j.into(), BigInt::from(m) * BigInt::from(mk));
            let ray = interval_value(
                &self.spec,
                &Endpoint::at(self.group, end),
                &Endpoint::PosInf,
            );
            parts.push(SubEvaluation {
                role: format!("{role} j={j}"),
                coefficient: *sign * ray,
                value: t.total,
                trace: t,
            });
        }
        Ok(())
    }
}

/// Value of `f` in `G^arity(f)` with its trace.
pub fn evaluate(
    group: &Group,
    spec: &RingSpec,
    f: &Formula,
) -> Result<(K0Element, EvalTrace), EvalError> {
    let ev = Evaluator::new(group, *spec);
    let trace = ev.trace_in(f, f.arity())?;
    drop(ev);
    let trace = Rc::try_unwrap(trace).unwrap_or_else(|rc| (*rc).clone());
    Ok((trace.total, trace))
}

/// Value of `cell ∩ G^n`.
pub fn evaluate_cell(group: &Group, spec: &RingSpec, cell: &Cell) -> Result<K0Element, EvalError> {
    Evaluator::new(group, *spec).evaluate_cell(cell)
}

fn truth(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

fn negated(f: &AffineFn) -> AffineFn {
    f.scale(&-BigRational::one())
}

/// `f = s/m + c` with `s` integer-linear and `m >= 1`.
fn split_affine(f: &AffineFn) -> (Term, u64, BigRational) {
    let m = f
        .coeffs
        .iter()
        .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
    let mr = BigRational::from_integer(m.clone());
    let s = f
        .coeffs
        .iter()
        .enumerate()
        .fold(Term::zero(), |acc, (i, a)| {
            acc.with_coeff(i, (a * &mr).to_integer())
        });
    let m = m.to_u64().expect("cell denominators fit in u64");
    (s, m, f.constant.clone())
}

/// `d·(x_i - f)` with `d > 0` chosen to make the coefficients integers.
fn coordinate_term(i: usize, f: &AffineFn) -> Term {
    let (s, m, c) = split_affine(f);
    let mr = BigRational::from_integer(m.into());
    Term::var(i)
        .scaled(&BigInt::from(m))
        .minus(&s)
        .shifted(&-(c * mr))
}

/// The cell as a conjunction of integer-coefficient comparisons.
pub fn cell_formula(cell: &Cell) -> Formula {
    let mut parts = Vec::new();
    for (i, c) in cell.coords.iter().enumerate() {
        match c {
            Coord::Section(f) => parts.push(Formula::compare(
                coordinate_term(i, f),
                Rel::Eq,
                Term::zero(),
            )),
            Coord::Band { lo, hi } => {
                if let Some(f) = lo {
                    parts.push(Formula::compare(
                        coordinate_term(i, f),
                        Rel::Gt,
                        Term::zero(),
                    ));
                }
                if let Some(g) = hi {
                    parts.push(Formula::compare(
                        coordinate_term(i, g),
                        Rel::Lt,
                        Term::zero(),
                    ));
                }
            }
        }
    }
    Formula::and(parts)
}

fn compare_polys(f: &Formula, arity: usize) -> Vec<AffineFn> {
    f.atoms()
        .into_iter()
        .filter_map(|a| match a {
            Atom::Compare(l, _, r) => {
                let t = l.minus(r);
                let mut coeffs = vec![BigRational::zero(); arity];
                for (j, c) in t.coeffs() {
                    coeffs[j] = BigRational::from_integer(c.clone());
                }
                Some(AffineFn::new(coeffs, t.constant_part().clone()))
            }
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::{ratio, GroupDescriptor};
    use proptest::prelude::*;

    fn g7() -> Group {
        GroupDescriptor::cofinite(&[7]).validate().unwrap()
    }

    fn val(group: &Group, text: &str) -> K0Element {
        let ev = Evaluator::for_group(group).unwrap();
        ev.value(&Formula::parse(text).unwrap()).unwrap()
    }

    fn c(v: i64) -> AffineFn {
        AffineFn::constant_fn(0, ratio(v, 1))
    }

    #[test]
    fn interval_examples() {
        let g = g7();
        let r = RingSpec::new(3).unwrap();
        assert_eq!(val(&g, "0 < x0 and x0 < 1"), r.element(2, 0));
        assert_eq!(val(&g, "0 < 7*x0 and 7*x0 < 1"), r.element(1, 0));
        assert_eq!(val(&g, "1 < 7*x0 and 7*x0 < 2"), r.zero());
        assert_eq!(val(&g, "0 < x0"), r.x());
        assert_eq!(val(&g, "7*x0 > 1"), r.element(2, 1));
        assert_eq!(val(&g, "x0 = x0"), r.line());
        assert_eq!(val(&g, "x0 = 1/7"), r.zero());
        assert_eq!(val(&g, "x0 = 3"), r.one());
    }

    #[test]
    fn x_squared() {
        let g = g7();
        let r = RingSpec::new(3).unwrap();
        let v = val(&g, "0 < x0 and 0 < x1");
        assert_eq!(v, r.element(0, 2));
        assert_eq!(v, r.x() * r.x());
    }

    #[test]
    fn divisibility_classes() {
        let g = g7();
        let r = RingSpec::new(3).unwrap();
        let mut sum = r.zero();
        for i in 0..7 {
            let v = val(&g, &format!("div(7, x0 + {i})"));
            assert_eq!(v, r.line(), "class {i}");
            sum = sum + v;
        }
        assert_eq!(sum, r.line());
        assert_eq!(val(&g, "ndiv(7, x0)"), r.line().scale(6));
    }

    #[test]
    fn ray_with_outside_endpoint_q15() {
        let g = GroupDescriptor::cofinite(&[31]).validate().unwrap();
        let r = RingSpec::new(15).unwrap();
        let cell = Cell {
            coords: vec![Coord::Band {
                lo: Some(AffineFn::constant_fn(0, ratio(1, 31))),
                hi: None,
            }],
        };
        assert_eq!(evaluate_cell(&g, &r, &cell).unwrap(), r.element(8, 1));
        assert_eq!(val(&g, "31*x0 > 1"), r.element(8, 1));
    }

    #[test]
    fn cells_directly() {
        let g = g7();
        let r = RingSpec::new(3).unwrap();
        let ray = Cell {
            coords: vec![Coord::Band {
                lo: Some(c(0)),
                hi: None,
            }],
        };
        assert_eq!(evaluate_cell(&g, &r, &ray).unwrap(), r.x());
        let diag = Cell {
            coords: vec![
                Coord::Band {
                    lo: Some(c(0)),
                    hi: Some(c(1)),
                },
                Coord::Section(AffineFn::new(vec![ratio(1, 1)], ratio(0, 1))),
            ],
        };
        assert_eq!(evaluate_cell(&g, &r, &diag).unwrap(), -r.one());
        // x1 = x0/7 over (0,1): x0 must be divisible by 7
        let seventh = Cell {
            coords: vec![
                Coord::Band {
                    lo: Some(c(0)),
                    hi: Some(c(1)),
                },
                Coord::Section(AffineFn::new(vec![ratio(1, 7)], ratio(0, 1))),
            ],
        };
        assert_eq!(
            evaluate_cell(&g, &r, &seventh).unwrap(),
            val(&g, "0 < x0 and x0 < 1 and div(7, x0)")
        );
    }

    #[test]
    fn compute_l_examples() {
        let p = |s: &str| Formula::parse(s).unwrap();
        assert_eq!(compute_l(&p("x0 < 1")), Some(1));
        assert_eq!(compute_l(&p("div(3, x0) and div(7, x1)")), Some(21));
        assert_eq!(compute_l(&p("div(3, x0) or div(9, x0 + 1)")), Some(9));
    }

    #[test]
    fn trace_sums_to_total() {
        let g = g7();
        let (v, t) = evaluate(
            &g,
            &RingSpec::new(3).unwrap(),
            &Formula::parse("div(7, x0 - x1) and x0 < 2*x1 + 1/3 and x1 > 0").unwrap(),
        )
        .unwrap();
        assert_eq!(t.l, 7);
        assert_eq!(t.tuples.len(), 49);
        assert_eq!(t.surviving_tuples(), 7);
        assert_eq!(t.leaf_sum(), v);
        for cell in t
            .tuples
            .iter()
            .flat_map(|t| &t.cells)
            .filter(|c| !c.parts.is_empty())
        {
            let s = cell
                .parts
                .iter()
                .fold(v.ring().zero(), |a, p| a + p.coefficient * p.value);
            assert_eq!(s, cell.value);
        }
        assert!(t.to_json().contains("\"L\": 7"));
    }

    #[test]
    fn trivial_ring_and_caps() {
        let g = GroupDescriptor::finite(&[2, 3, 5]).validate().unwrap();
        assert!(val(&g, "0 < x0 and x0 < 1").is_zero());
        let g = g7();
        let ev = Evaluator::for_group(&g).unwrap().with_limits(Limits {
            max_tuples: 10,
            ..Limits::default()
        });
        let err = ev
            .value(&Formula::parse("div(7, x0) and div(7, x1)").unwrap())
            .unwrap_err();
        assert!(matches!(
            err,
            EvalError::TooManyTuples { count: 49, cap: 10 }
        ));
        assert!(err.is_resource_cap());
    }

    #[test]
    fn empty_and_point_sets() {
        let g = g7();
        let r = RingSpec::new(3).unwrap();
        assert!(val(&g, "x0 < 0 and x0 > 1").is_zero());
        assert!(val(&g, "false").is_zero());
        assert_eq!(val(&g, "true"), r.one());
        assert_eq!(val(&g, "x0 = 1 and x1 = 2"), r.one());
        assert_eq!(val(&g, "x0 = 1 and x1 = 1/7"), r.zero());
    }

    #[test]
    fn decomposition_points() {
        let g = g7();
        let ev = Evaluator::for_group(&g).unwrap();
        let f = Formula::parse("div(7, x0 + 2) and x0 < 5").unwrap();
        let dec = ev.decompose(&f, 1).unwrap();
        for x in [
            ratio(5, 1),
            ratio(-2, 1),
            ratio(-9, 1),
            ratio(1, 2),
            ratio(12, 1),
            ratio(-2, 3),
        ] {
            let expect = f.holds(&g, std::slice::from_ref(&x)) as usize;
            assert_eq!(
                dec.membership_count(&g, std::slice::from_ref(&x)),
                expect,
                "{x}"
            );
        }
    }

    fn endpoint(v: Option<(i64, i64)>, g: &Group, inf: Endpoint) -> Endpoint {
        v.map_or(inf, |(a, b)| Endpoint::at(g, ratio(a, b)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unary_intervals_match_table(
            lo in proptest::option::of((-20i64..20, prop::sample::select(vec![1i64, 2, 7, 14, 49]))),
            hi in proptest::option::of((-20i64..20, prop::sample::select(vec![1i64, 3, 7, 21]))),
        ) {
            let g = g7();
            let r = RingSpec::new(3).unwrap();
            let mut parts = Vec::new();
            if let Some((a, b)) = lo {
                parts.push(format!("{b}*x0 > {a}"));
            }
            if let Some((a, b)) = hi {
                parts.push(format!("{b}*x0 < {a}"));
            }
            let text = if parts.is_empty() { "x0 = x0".to_string() } else { parts.join(" and ") };
            let expect = interval_value(
                &r,
                &endpoint(lo, &g, Endpoint::NegInf),
                &endpoint(hi, &g, Endpoint::PosInf),
            );
            prop_assert_eq!(val(&g, &text), expect);
        }

        #[test]
        fn translation_invariance(a in -6i64..6, b in 1i64..5, t in -9i64..9, td in prop::sample::select(vec![1i64, 2, 3, 4])) {
            let g = g7();
            let text = format!("{a} < {b}*x0 - x1 and x1 < 3 and div(7, x0 + x1)");
            let f = Formula::parse(&text).unwrap();
            let shift = ratio(t, td);
            let moved = f.substitute(&crate::formula::AffineMap {
                    target_arity: 2,
                    rows: vec![
                        (vec![ratio(1, 1), ratio(0, 1)], shift.clone()),
                        (vec![ratio(0, 1), ratio(1, 1)], ratio(0, 1)),
                    ],
                });
            prop_assert_eq!(val(&g, &text), val(&g, &moved.to_string()));
        }
    }
}
