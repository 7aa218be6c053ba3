//! Cylindrical cell decomposition of `Q^n` for linear constraints.
//!
//! Projection eliminates the last variable: every constraint that mentions
//! it contributes a root function `x_{n-1} = r(x_0..x_{n-2})`, and the base
//! is decomposed so that every pairwise difference of root functions has
//! constant sign on each base cell. Over a base cell the roots are then
//! totally ordered, and the cylinder splits into sections (on a root) and
//! bands (between consecutive roots). The result is sign-invariant for
//! every input polynomial.

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::formula::Rel;

/// `Σ c_i x_i + constant` with rational coefficients over the first
/// `coeffs.len()` coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineFn {
    pub coeffs: Vec<BigRational>,
    pub constant: BigRational,
}

impl AffineFn {
    pub fn new(coeffs: Vec<BigRational>, constant: BigRational) -> Self {
        AffineFn { coeffs, constant }
    }

    pub fn constant_fn(arity: usize, c: BigRational) -> Self {
        AffineFn::new(vec![BigRational::zero(); arity], c)
    }

    pub fn arity(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        self.coeffs
            .iter()
            .zip(point)
            .fold(self.constant.clone(), |acc, (c, x)| acc + c * x)
    }

    pub fn sub(&self, other: &AffineFn) -> AffineFn {
        debug_assert_eq!(self.arity(), other.arity());
        AffineFn {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
            constant: &self.constant - &other.constant,
        }
    }

    pub fn scale(&self, k: &BigRational) -> AffineFn {
        AffineFn {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            constant: &self.constant * k,
        }
    }

    fn truncated(&self, arity: usize) -> AffineFn {
        AffineFn {
            coeffs: self.coeffs[..arity].to_vec(),
            constant: self.constant.clone(),
        }
    }

    fn padded(mut self, arity: usize) -> AffineFn {
        if self.coeffs.len() < arity {
            self.coeffs.resize(arity, BigRational::zero());
        }
        self
    }

    /// Same zero set, scaled so the last nonzero coefficient is 1.
    fn monic(&self) -> Option<AffineFn> {
        let lead = self.coeffs.iter().rev().find(|c| !c.is_zero())?;
        Some(self.scale(&lead.recip()))
    }
}

impl fmt::Display for AffineFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (i, c) in self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            let sep = match (wrote, c.is_negative()) {
                (false, false) => "",
                (false, true) => "-",
                (true, false) => " + ",
                (true, true) => " - ",
            };
            let mag = c.abs();
            if mag.is_one() {
                write!(f, "{sep}x{i}")?;
            } else {
                write!(f, "{sep}{mag}*x{i}")?;
            }
            wrote = true;
        }
        let k = &self.constant;
        match (wrote, k.is_negative()) {
            (false, _) => write!(f, "{k}"),
            (true, _) if k.is_zero() => Ok(()),
            (true, true) => write!(f, " - {}", -k),
            (true, false) => write!(f, " + {k}"),
        }
    }
}

impl Serialize for AffineFn {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Rats<'a>(&'a [BigRational]);
        impl Serialize for Rats<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.len()))?;
                for r in self.0 {
                    seq.serialize_element(&r.to_string())?;
                }
                seq.end()
            }
        }
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("coeffs", &Rats(&self.coeffs))?;
        m.serialize_entry("constant", &self.constant.to_string())?;
        m.end()
    }
}

/// `poly rel 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearAtom {
    pub poly: AffineFn,
    pub rel: Rel,
}

impl LinearAtom {
    pub fn new(poly: AffineFn, rel: Rel) -> Self {
        LinearAtom { poly, rel }
    }

    pub fn holds(&self, point: &[BigRational]) -> bool {
        self.rel.holds(&self.poly.eval(point), &BigRational::zero())
    }
}

/// Description of one coordinate of a cell in terms of earlier ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coord {
    Section(AffineFn),
    /// Open band; `None` is an infinite end.
    Band {
        lo: Option<AffineFn>,
        hi: Option<AffineFn>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub coords: Vec<Coord>,
}

impl Cell {
    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    /// The cell made of the first `arity - 1` coordinates.
    pub fn base(&self) -> Cell {
        Cell {
            coords: self.coords[..self.coords.len().saturating_sub(1)].to_vec(),
        }
    }

    pub fn last(&self) -> Option<&Coord> {
        self.coords.last()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cell serializes")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match c {
                Coord::Section(s) => write!(f, "x{i} = {s}")?,
                Coord::Band { lo, hi } => {
                    match lo {
                        Some(l) => write!(f, "{l} < ")?,
                        None => write!(f, "-inf < ")?,
                    }
                    write!(f, "x{i}")?;
                    match hi {
                        Some(h) => write!(f, " < {h}")?,
                        None => write!(f, " < +inf")?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// A point of the cell, built coordinate by coordinate.
pub fn sample_point(cell: &Cell) -> Vec<BigRational> {
    let mut pt: Vec<BigRational> = Vec::with_capacity(cell.arity());
    let one = BigRational::one();
    for c in &cell.coords {
        let v = match c {
            Coord::Section(s) => s.eval(&pt),
            Coord::Band { lo: None, hi: None } => BigRational::zero(),
            Coord::Band {
                lo: Some(l),
                hi: None,
            } => l.eval(&pt) + &one,
            Coord::Band {
                lo: None,
                hi: Some(h),
            } => h.eval(&pt) - &one,
            Coord::Band {
                lo: Some(l),
                hi: Some(h),
            } => (l.eval(&pt) + h.eval(&pt)) / BigRational::from_integer(2.into()),
        };
        pt.push(v);
    }
    pt
}

pub fn cell_membership(cell: &Cell, point: &[BigRational]) -> bool {
    assert_eq!(cell.arity(), point.len(), "dimension mismatch");
    cell.coords.iter().enumerate().all(|(i, c)| {
        let (prefix, x) = (&point[..i], &point[i]);
        match c {
            Coord::Section(s) => *x == s.eval(prefix),
            Coord::Band { lo, hi } => {
                lo.as_ref().is_none_or(|l| l.eval(prefix) < *x)
                    && hi.as_ref().is_none_or(|h| *x < h.eval(prefix))
            }
        }
    })
}

/// Sign-invariant cylindrical decomposition of `Q^arity` for `polys`.
pub fn sign_invariant_cells(polys: &[AffineFn], arity: usize) -> Vec<Cell> {
    let mut set: Vec<AffineFn> = Vec::new();
    for p in polys {
        let p = p.clone().padded(arity).truncated(arity);
        if let Some(m) = p.monic() {
            if !set.contains(&m) {
                set.push(m);
            }
        }
    }
    cad(&set, arity)
}

fn cad(polys: &[AffineFn], n: usize) -> Vec<Cell> {
    if n == 0 {
        return vec![Cell { coords: vec![] }];
    }
    let mut roots: Vec<AffineFn> = Vec::new();
    let mut proj: Vec<AffineFn> = Vec::new();
    let push_proj = |proj: &mut Vec<AffineFn>, p: AffineFn| {
        if let Some(m) = p.monic() {
            if !proj.contains(&m) {
                proj.push(m);
            }
        }
    };
    for p in polys {
        let c = &p.coeffs[n - 1];
        let rest = p.truncated(n - 1);
        if c.is_zero() {
            push_proj(&mut proj, rest);
        } else {
            let root = rest.scale(&(-c.recip()));
            if !roots.contains(&root) {
                roots.push(root);
            }
        }
    }
    for (i, r) in roots.iter().enumerate() {
        for s in &roots[i + 1..] {
            push_proj(&mut proj, r.sub(s));
        }
    }
    let mut out = Vec::new();
    for base in cad(&proj, n - 1) {
        let at = sample_point(&base);
        let mut vals: Vec<(BigRational, &AffineFn)> =
            roots.iter().map(|r| (r.eval(&at), r)).collect();
        vals.sort_by(|a, b| a.0.cmp(&b.0));
        // roots agreeing at the sample agree on the whole base cell
        vals.dedup_by(|a, b| a.0.cmp(&b.0) == Ordering::Equal);
        let ordered: Vec<AffineFn> = vals.into_iter().map(|(_, r)| r.clone()).collect();
        let extend = |coord: Coord| {
            let mut coords = base.coords.clone();
            coords.push(coord);
            Cell { coords }
        };
        let mut lo: Option<AffineFn> = None;
        for r in ordered {
            out.push(extend(Coord::Band {
                lo: lo.clone(),
                hi: Some(r.clone()),
            }));
            out.push(extend(Coord::Section(r.clone())));
            lo = Some(r);
        }
        out.push(extend(Coord::Band { lo, hi: None }));
    }
    out
}

/// Cells covering the solution set of a conjunction of linear atoms.
pub fn decompose(atoms: &[LinearAtom], arity: usize) -> Vec<Cell> {
    let polys: Vec<AffineFn> = atoms.iter().map(|a| a.poly.clone()).collect();
    decompose_where(&polys, arity, |pt| atoms.iter().all(|a| a.holds(pt)))
}

/// Cells of the sign-invariant decomposition for `polys` on which `pred`
/// holds. `pred` must depend only on the signs of `polys`.
pub fn decompose_where(
    polys: &[AffineFn],
    arity: usize,
    pred: impl Fn(&[BigRational]) -> bool,
) -> Vec<Cell> {
    sign_invariant_cells(polys, arity)
        .into_iter()
        .filter(|c| pred(&sample_point(c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lin(coeffs: &[i64], c: i64) -> AffineFn {
        AffineFn::new(coeffs.iter().map(|&a| ratio(a, 1)).collect(), ratio(c, 1))
    }

    fn atom(coeffs: &[i64], c: i64, rel: Rel) -> LinearAtom {
        LinearAtom::new(lin(coeffs, c), rel)
    }

    #[test]
    fn unit_interval() {
        // 0 < x0, x0 < 1  i.e. -x0 < 0, x0 - 1 < 0
        let cells = decompose(&[atom(&[-1], 0, Rel::Lt), atom(&[1], -1, Rel::Lt)], 1);
        assert_eq!(cells.len(), 1);
        assert_eq!(
            cells[0].coords[0],
            Coord::Band {
                lo: Some(lin(&[], 0)),
                hi: Some(lin(&[], 1))
            }
        );
        assert_eq!(sample_point(&cells[0]), vec![ratio(1, 2)]);
    }

    #[test]
    fn empty_conjunction_of_disjoint_rays() {
        let cells = decompose(&[atom(&[1], 0, Rel::Lt), atom(&[1], -1, Rel::Gt)], 1);
        assert!(cells.is_empty());
    }

    #[test]
    fn degenerate_atoms() {
        let cells = decompose(&[atom(&[0], 0, Rel::Eq)], 1);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].coords[0], Coord::Band { lo: None, hi: None });
        assert!(decompose(&[atom(&[0], 1, Rel::Lt)], 1).is_empty());
        assert_eq!(decompose(&[], 0), vec![Cell { coords: vec![] }]);
    }

    #[test]
    fn section_sample() {
        let cell = Cell {
            coords: vec![
                Coord::Band {
                    lo: Some(lin(&[], 0)),
                    hi: Some(lin(&[], 1)),
                },
                Coord::Section(lin(&[1], 1)),
            ],
        };
        let pt = sample_point(&cell);
        assert_eq!(pt, vec![ratio(1, 2), ratio(3, 2)]);
        assert!(cell_membership(&cell, &pt));
        assert!(!cell_membership(&cell, &[ratio(1, 2), ratio(1, 1)]));
        assert!(!cell_membership(&cell, &[ratio(2, 1), ratio(3, 1)]));
        assert_eq!(cell.to_string(), "0 < x0 < 1, x1 = x0 + 1");
        assert!(cell.to_json().contains("\"section\""));
    }

    fn random_point(rng: &mut impl Rng, n: usize) -> Vec<BigRational> {
        (0..n)
            .map(|_| ratio(rng.gen_range(-40..=40), rng.gen_range(1..=4)))
            .collect()
    }

    fn check_cover(atoms: &[LinearAtom], n: usize, seed: u64) {
        let cells = decompose(atoms, n);
        for c in &cells {
            let s = sample_point(c);
            assert!(cell_membership(c, &s), "sample outside its cell {c}");
            assert!(atoms.iter().all(|a| a.holds(&s)));
        }
        let all =
            sign_invariant_cells(&atoms.iter().map(|a| a.poly.clone()).collect::<Vec<_>>(), n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..500 {
            let pt = random_point(&mut rng, n);
            let inside = atoms.iter().all(|a| a.holds(&pt));
            let hits = cells.iter().filter(|c| cell_membership(c, &pt)).count();
            assert_eq!(hits, inside as usize, "point {pt:?}");
            assert_eq!(all.iter().filter(|c| cell_membership(c, &pt)).count(), 1);
        }
    }

    #[test]
    fn trapezoid() {
        // 0 < x0 < 1, x0 < x1 < 2
        let atoms = [
            atom(&[-1, 0], 0, Rel::Lt),
            atom(&[1, 0], -1, Rel::Lt),
            atom(&[1, -1], 0, Rel::Lt),
            atom(&[0, 1], -2, Rel::Lt),
        ];
        check_cover(&atoms, 2, 1);
        let cells = decompose(&atoms, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut covered = 0;
        for _ in 0..100 {
            let pt = vec![
                ratio(rng.gen_range(1..8), 8),
                ratio(rng.gen_range(0..16), 8),
            ];
            let inside = pt[0] < pt[1] && pt[1] < ratio(2, 1);
            let hits = cells.iter().filter(|c| cell_membership(c, &pt)).count();
            assert_eq!(hits, inside as usize);
            covered += hits;
        }
        assert!(covered > 0);
    }

    #[test]
    fn random_conjunctions_cover_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rels = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ge, Rel::Gt, Rel::Ne];
        for round in 0..40 {
            let n = rng.gen_range(1..=3);
            let k = rng.gen_range(1..=4);
            let atoms: Vec<LinearAtom> = (0..k)
                .map(|_| {
                    let cs: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
                    atom(
                        &cs,
                        rng.gen_range(-5..=5),
                        rels[rng.gen_range(0..rels.len())],
                    )
                })
                .collect();
            check_cover(&atoms, n, round);
        }
    }

    // exists y with (p, y) satisfying the atoms, decided by interval bounds on y
    fn feasible_over(atoms: &[LinearAtom], p: &[BigRational]) -> bool {
        let n = p.len() + 1;
        let mut lo: Option<(BigRational, bool)> = None;
        let mut hi: Option<(BigRational, bool)> = None;
        let mut eq: Option<BigRational> = None;
        let mut ne: Vec<BigRational> = Vec::new();
        for a in atoms {
            let c = a.poly.coeffs[n - 1].clone();
            let rest = a.poly.truncated(n - 1).eval(p);
            if c.is_zero() {
                if !a.rel.holds(&rest, &BigRational::zero()) {
                    return false;
                }
                continue;
            }
            // c*y + rest rel 0  <=>  y rel' -rest/c
            let b = -rest / &c;
            let rel = if c.is_negative() {
                match a.rel {
                    Rel::Lt => Rel::Gt,
                    Rel::Le => Rel::Ge,
                    Rel::Gt => Rel::Lt,
                    Rel::Ge => Rel::Le,
                    r => r,
                }
            } else {
                a.rel
            };
            let tighter_lo =
                |cur: &Option<(BigRational, bool)>, v: &BigRational, strict: bool| match cur {
                    None => true,
                    Some((w, s)) => v > w || (v == w && strict && !s),
                };
            let tighter_hi =
                |cur: &Option<(BigRational, bool)>, v: &BigRational, strict: bool| match cur {
                    None => true,
                    Some((w, s)) => v < w || (v == w && strict && !s),
                };
            match rel {
                Rel::Gt | Rel::Ge => {
                    let strict = rel == Rel::Gt;
                    if tighter_lo(&lo, &b, strict) {
                        lo = Some((b, strict));
                    }
                }
                Rel::Lt | Rel::Le => {
                    let strict = rel == Rel::Lt;
                    if tighter_hi(&hi, &b, strict) {
                        hi = Some((b, strict));
                    }
                }
                Rel::Eq => {
                    if eq.as_ref().is_some_and(|e| *e != b) {
                        return false;
                    }
                    eq = Some(b);
                }
                Rel::Ne => ne.push(b),
            }
        }
        let ok = |y: &BigRational| {
            lo.as_ref()
                .is_none_or(|(l, s)| if *s { y > l } else { y >= l })
                && hi
                    .as_ref()
                    .is_none_or(|(h, s)| if *s { y < h } else { y <= h })
                && !ne.contains(y)
        };
        if let Some(e) = eq {
            return ok(&e);
        }
        match (&lo, &hi) {
            (Some((l, ls)), Some((h, hs))) => {
                if l > h || (l == h && (*ls || *hs)) {
                    return false;
                }
                if l == h {
                    return ok(l);
                }
                // an open interval holds infinitely many rationals, finitely many excluded
                true
            }
            _ => true,
        }
    }

    #[test]
    fn projection_soundness() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let rels = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ge, Rel::Gt];
        for _ in 0..30 {
            let k = rng.gen_range(1..=4);
            let atoms: Vec<LinearAtom> = (0..k)
                .map(|_| {
                    let cs = [rng.gen_range(-3..=3), rng.gen_range(-3..=3)];
                    atom(
                        &cs,
                        rng.gen_range(-5..=5),
                        rels[rng.gen_range(0..rels.len())],
                    )
                })
                .collect();
            let bases: Vec<Cell> = decompose(&atoms, 2).iter().map(Cell::base).collect();
            for _ in 0..200 {
                let p = random_point(&mut rng, 1);
                let projected = bases.iter().any(|b| cell_membership(b, &p));
                assert_eq!(
                    projected,
                    feasible_over(&atoms, &p),
                    "atoms {atoms:?} at {p:?}"
                );
            }
        }
    }
}
