//! Property checks for the evaluator, the ring and the group model.
//!
//! Every randomized trial draws from `ChaCha8Rng::seed_from_u64(base + i)`,
//! and failures record that seed, so [`Generator`] plus the seed replays
//! the inputs exactly.

use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{EvalError, Evaluator};
use crate::formula::{divides, AffineMap, Formula, Rel, Term};
use crate::group_model::{Group, GroupDescriptor, GroupError};
use crate::k0ring::{interval_value, Endpoint, K0Element, RingSpec};
use crate::numtheory::is_prime;

pub const SUITE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read suite config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid suite config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported suite version {0}")]
    Version(u32),
    #[error("suite lists no groups")]
    NoGroups,
    #[error("group {index}: {source}")]
    Group { index: usize, source: GroupError },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    /// Trial seed; `None` for fixed inputs.
    pub seed: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub failures: Vec<Failure>,
    #[serde(serialize_with = "secs")]
    pub elapsed: Duration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl CheckReport {
    fn start(name: &str) -> (Self, Instant) {
        let r = CheckReport {
            name: name.to_string(),
            trials: 0,
            failures: vec![],
            elapsed: Duration::ZERO,
            skipped: None,
        };
        (r, Instant::now())
    }

    fn finish(mut self, t0: Instant) -> Self {
        self.elapsed = t0.elapsed();
        self
    }

    fn fail(&mut self, seed: Option<u64>, message: impl Into<String>) {
        self.failures.push(Failure {
            seed,
            message: message.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random formula bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bounds {
    pub max_vars: usize,
    pub max_coeff: i64,
    pub max_modulus: u64,
    /// Complement primes up to this bound join the modulus pool.
    pub complement_prime_bound: u64,
    pub max_denominator: i64,
    pub max_depth: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_vars: 2,
            max_coeff: 5,
            max_modulus: 6,
            complement_prime_bound: 13,
            max_denominator: 100,
            max_depth: 2,
        }
    }
}

/// Random quantifier-free formulas over a group.
#[derive(Debug, Clone)]
pub struct Generator {
    bounds: Bounds,
    moduli: Vec<u64>,
    complement: Vec<u64>,
}

impl Generator {
    pub fn new(group: &Group, bounds: Bounds) -> Self {
        let moduli: Vec<u64> = (2..=bounds.max_modulus).collect();
        let complement = (2..=bounds.complement_prime_bound)
            .filter(|&p| is_prime(p) && !group.in_s(p))
            .collect();
        Generator {
            bounds,
            moduli,
            complement,
        }
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn term<R: Rng>(&self, rng: &mut R, arity: usize) -> Term {
        let c = self.bounds.max_coeff;
        let d = rng.gen_range(1..=self.bounds.max_denominator.max(1));
        let a = rng.gen_range(-3 * d..=3 * d);
        let mut t = Term::constant(BigRational::new(a.into(), d.into()));
        for j in 0..arity {
            t = t.with_coeff(j, rng.gen_range(-c..=c));
        }
        t
    }

    pub fn atom<R: Rng>(&self, rng: &mut R, arity: usize) -> Formula {
        const RELS: [Rel; 6] = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne, Rel::Ge, Rel::Gt];
        if self.moduli.is_empty() || rng.gen_bool(0.6) {
            let t = self.term(rng, arity);
            Formula::compare(t, RELS[rng.gen_range(0..RELS.len())], Term::zero())
        } else {
            // half of the moduli come from primes outside S, which survive normalization
            let pool = if self.complement.is_empty() || rng.gen_bool(0.5) {
                &self.moduli
            } else {
                &self.complement
            };
            let m = pool[rng.gen_range(0..pool.len())];
            // divisibility atoms get small constants so the coset test is not trivially false
            let mut t = self.term(rng, arity);
            let k = rng.gen_range(-(m as i64)..=m as i64);
            t = t.shifted(&(-t.constant_part().clone() + BigRational::from_integer(k.into())));
            if rng.gen_bool(0.5) {
                Formula::div(m, t)
            } else {
                Formula::ndiv(m, t)
            }
        }
    }

    pub fn formula<R: Rng>(&self, rng: &mut R, arity: usize) -> Formula {
        self.formula_at(rng, arity, self.bounds.max_depth)
    }

    fn formula_at<R: Rng>(&self, rng: &mut R, arity: usize, depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.4) {
            return self.atom(rng, arity);
        }
        match rng.gen_range(0..5) {
            0 => Formula::not(self.formula_at(rng, arity, depth - 1)),
            1 | 2 => Formula::And(vec![
                self.formula_at(rng, arity, depth - 1),
                self.formula_at(rng, arity, depth - 1),
            ]),
            _ => Formula::Or(vec![
                self.formula_at(rng, arity, depth - 1),
                self.formula_at(rng, arity, depth - 1),
            ]),
        }
    }

    pub fn arity<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(1..=self.bounds.max_vars.max(1))
    }

    /// Two formulas with disjoint sets: `a ∧ b` and `a ∧ ¬b`.
    pub fn disjoint_pair<R: Rng>(&self, rng: &mut R) -> (Formula, Formula, usize) {
        let n = self.arity(rng);
        let a = self.formula_at(rng, n, 1);
        let b = self.formula_at(rng, n, 1);
        (
            Formula::And(vec![a.clone(), b.clone()]),
            Formula::And(vec![a, Formula::not(b)]),
            n,
        )
    }
}

/// One piece of a piecewise affine map: on `guard`, apply `map`.
#[derive(Debug, Clone)]
pub struct BijectionPiece {
    pub guard: Formula,
    /// Output coordinate `i` is `rows[i]` applied to the input point.
    pub map: AffineMap,
}

#[derive(Debug, Clone)]
pub struct BijectionSpec {
    pub input_arity: usize,
    pub output_arity: usize,
    pub pieces: Vec<BijectionPiece>,
    pub inverse: Option<Box<BijectionSpec>>,
}

impl BijectionSpec {
    /// A single affine piece with a known inverse.
    pub fn affine(map: AffineMap, inverse: AffineMap) -> Self {
        let n = map.target_arity;
        let m = map.rows.len();
        BijectionSpec {
            input_arity: n,
            output_arity: m,
            pieces: vec![BijectionPiece {
                guard: Formula::True,
                map,
            }],
            inverse: Some(Box::new(BijectionSpec {
                input_arity: m,
                output_arity: n,
                pieces: vec![BijectionPiece {
                    guard: Formula::True,
                    map: inverse,
                }],
                inverse: None,
            })),
        }
    }

    pub fn identity(n: usize) -> Self {
        BijectionSpec::affine(AffineMap::identity(n), AffineMap::identity(n))
    }

    /// Image of `x` when exactly one guard holds.
    pub fn apply(&self, group: &Group, x: &[BigRational]) -> Result<Vec<BigRational>, String> {
        let hits: Vec<&BijectionPiece> = self
            .pieces
            .iter()
            .filter(|p| p.guard.holds(group, x))
            .collect();
        match hits.as_slice() {
            [p] => Ok(p.map.apply(x)),
            [] => Err("no piece applies".into()),
            _ => Err(format!("{} pieces overlap", hits.len())),
        }
    }
}

/// `x ↦ x + t` on coordinate `j`, `t ∈ G`.
pub fn translation(n: usize, j: usize, t: BigRational) -> BijectionSpec {
    let shift = |s: BigRational| {
        let mut m = AffineMap::identity(n);
        m.rows[j].1 = s;
        m
    };
    BijectionSpec::affine(shift(t.clone()), shift(-t))
}

/// `x ↦ -x` on every coordinate.
pub fn reflection(n: usize) -> BijectionSpec {
    let mut m = AffineMap::identity(n);
    for (i, row) in m.rows.iter_mut().enumerate() {
        row.0[i] = -BigRational::one();
    }
    BijectionSpec::affine(m.clone(), m)
}

/// `x ↦ k·x` on coordinate `j`.
pub fn scaling(n: usize, j: usize, k: BigRational) -> BijectionSpec {
    let scale = |s: BigRational| {
        let mut m = AffineMap::identity(n);
        m.rows[j].0[j] = s;
        m
    };
    BijectionSpec::affine(scale(k.clone()), scale(k.recip()))
}

/// The `g` with `g(y) ⇔ f(φ⁻¹(y))` for an affine `φ`.
fn image_formula(f: &Formula, bij: &BijectionSpec) -> Formula {
    let inv = bij
        .inverse
        .as_ref()
        .expect("affine bijection has an inverse");
    f.substitute(&inv.pieces[0].map)
}

/// Sample count and size for point-sampling checks.
const SAMPLE_DENOMINATORS: u64 = 60;
const SAMPLE_MAGNITUDE: u64 = 12;

fn sample_points<R: Rng>(
    group: &Group,
    rng: &mut R,
    n: usize,
    count: usize,
) -> Vec<Vec<BigRational>> {
    (0..count)
        .map(|_| group.sample_elements(rng, n, SAMPLE_DENOMINATORS, SAMPLE_MAGNITUDE))
        .collect()
}

/// Runs checks for one group.
pub struct Checker<'g> {
    ev: Evaluator<'g>,
    gen: Generator,
    corrupt: bool,
}

impl<'g> Checker<'g> {
    pub fn new(group: &'g Group, bounds: Bounds) -> Result<Self, EvalError> {
        Ok(Checker {
            ev: Evaluator::for_group(group)?,
            gen: Generator::new(group, bounds),
            corrupt: false,
        })
    }

    /// Perturbs ring multiplication as seen by the checks.
    pub fn corrupted(mut self) -> Self {
        self.corrupt = true;
        self
    }

    pub fn evaluator(&self) -> &Evaluator<'g> {
        &self.ev
    }

    fn group(&self) -> &Group {
        self.ev.group()
    }

    fn spec(&self) -> &RingSpec {
        self.ev.spec()
    }

    fn mul(&self, a: &K0Element, b: &K0Element) -> K0Element {
        let p = *a * *b;
        if self.corrupt {
            p + self.spec().one()
        } else {
            p
        }
    }

    fn value(&self, f: &Formula, n: usize) -> Result<K0Element, String> {
        self.ev.value_in(f, n).map_err(|e| format!("{f}: {e}"))
    }

    fn disjoint_on_samples(
        &self,
        f: &Formula,
        g: &Formula,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        let both = Formula::And(vec![f.clone(), g.clone()]);
        sample_points(self.group(), rng, n, 200)
            .iter()
            .all(|x| !both.holds(self.group(), x))
    }

    fn additivity_case(
        &self,
        f: &Formula,
        g: &Formula,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), String> {
        if !self.disjoint_on_samples(f, g, n, rng) {
            return Err(format!("rejected: {f} and {g} are not disjoint"));
        }
        let union = Formula::Or(vec![f.clone(), g.clone()]);
        let (vu, vf, vg) = (self.value(&union, n)?, self.value(f, n)?, self.value(g, n)?);
        if vu != vf + vg {
            return Err(format!("[{f}] = {vf}, [{g}] = {vg}, union {vu}"));
        }
        Ok(())
    }

    /// `[f ∨ g] = [f] + [g]` for the given disjoint pairs in arity `n`.
    pub fn check_additivity(&self, pairs: &[(Formula, Formula)], n: usize) -> CheckReport {
        let (mut r, t0) = CheckReport::start("additivity");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (f, g) in pairs {
            r.trials += 1;
            if let Err(e) = self.additivity_case(f, g, n, &mut rng) {
                r.fail(None, e);
            }
        }
        r.finish(t0)
    }

    pub fn random_additivity(&self, seed: u64, trials: usize) -> CheckReport {
        let (mut r, t0) = CheckReport::start("additivity");
        for i in 0..trials as u64 {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let (f, g, n) = self.gen.disjoint_pair(&mut rng);
            r.trials += 1;
            if let Err(e) = self.additivity_case(&f, &g, n, &mut rng) {
                r.fail(Some(s), e);
            }
        }
        r.finish(t0)
    }

    fn multiplicativity_case(
        &self,
        f: &Formula,
        nf: usize,
        g: &Formula,
        ng: usize,
    ) -> Result<(), String> {
        let prod = Formula::And(vec![f.clone(), g.relabeled(nf)]);
        let (vp, vf, vg) = (
            self.value(&prod, nf + ng)?,
            self.value(f, nf)?,
            self.value(g, ng)?,
        );
        let expect = self.mul(&vf, &vg);
        if vp != expect {
            return Err(format!(
                "[{f}] = {vf}, [{g}] = {vg}, product {vp}, ring product {expect}"
            ));
        }
        Ok(())
    }

    /// `[f ∧ g'] = [f]·[g]` with `g'` on fresh variables; both factors unary.
    pub fn random_multiplicativity(&self, seed: u64, trials: usize) -> CheckReport {
        let (mut r, t0) = CheckReport::start("multiplicativity");
        for i in 0..trials as u64 {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let f = self.gen.formula(&mut rng, 1);
            let g = self.gen.formula(&mut rng, 1);
            r.trials += 1;
            if let Err(e) = self.multiplicativity_case(&f, 1, &g, 1) {
                r.fail(Some(s), e);
            }
        }
        r.finish(t0)
    }

    fn validate_bijection(
        &self,
        f: &Formula,
        bij: &BijectionSpec,
        g: &Formula,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), String> {
        let group = self.group();
        for x in sample_points(group, rng, bij.input_arity, 200) {
            if !f.holds(group, &x) {
                continue;
            }
            let y = bij.apply(group, &x).map_err(|e| format!("at {x:?}: {e}"))?;
            if let Some(bad) = y.iter().find(|v| !group.contains(v)) {
                return Err(format!("image of {x:?} leaves G at {bad}"));
            }
            if !g.holds(group, &y) {
                return Err(format!("image of {x:?} misses the target set"));
            }
            if let Some(inv) = &bij.inverse {
                if inv.apply(group, &y).as_deref() != Ok(&x[..]) {
                    return Err(format!("inverse does not return {x:?}"));
                }
            }
        }
        if let Some(inv) = &bij.inverse {
            for y in sample_points(group, rng, bij.output_arity, 200) {
                if !g.holds(group, &y) {
                    continue;
                }
                let x = inv
                    .apply(group, &y)
                    .map_err(|e| format!("inverse at {y:?}: {e}"))?;
                if !x.iter().all(|v| group.contains(v)) || !f.holds(group, &x) {
                    return Err(format!("{y:?} has no preimage in the source set"));
                }
            }
        }
        Ok(())
    }

    fn bijection_case(
        &self,
        f: &Formula,
        bij: &BijectionSpec,
        g: &Formula,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), String> {
        self.validate_bijection(f, bij, g, rng)?;
        let (vf, vg) = (
            self.value(f, bij.input_arity)?,
            self.value(g, bij.output_arity)?,
        );
        if vf != vg {
            return Err(format!("[{f}] = {vf} but [{g}] = {vg}"));
        }
        Ok(())
    }

    /// `[f] = [g]` when `bij` maps the `f`-set onto the `g`-set.
    pub fn check_bijection_invariance(
        &self,
        f: &Formula,
        bij: &BijectionSpec,
        g: &Formula,
    ) -> CheckReport {
        let (mut r, t0) = CheckReport::start("bijection");
        r.trials = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        if let Err(e) = self.bijection_case(f, bij, g, &mut rng) {
            r.fail(None, e);
        }
        r.finish(t0)
    }

    /// Translations by elements of `G`, reflections and scalings by primes
    /// of `S` applied to random formulas.
    pub fn random_bijections(&self, seed: u64, trials: usize) -> CheckReport {
        let (mut r, t0) = CheckReport::start("bijection");
        let group = self.group();
        let s_prime = (2..).find(|&p| is_prime(p) && group.in_s(p));
        for i in 0..trials as u64 {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let n = self.gen.arity(&mut rng);
            let f = self.gen.formula(&mut rng, n);
            let j = rng.gen_range(0..n);
            let bij = match (rng.gen_range(0..3), s_prime) {
                (1, _) => reflection(n),
                (2, Some(p)) => scaling(n, j, BigRational::from_integer(p.into())),
                _ => {
                    let t =
                        group.sample_elements(&mut rng, 1, SAMPLE_DENOMINATORS, SAMPLE_MAGNITUDE);
                    translation(n, j, t[0].clone())
                }
            };
            let g = image_formula(&f, &bij);
            r.trials += 1;
            if let Err(e) = self.bijection_case(&f, &bij, &g, &mut rng) {
                r.fail(Some(s), e);
            }
        }
        r.finish(t0)
    }

    /// Exactly one `i < n` has `(y + i/n_K)/n ∈ G`, for moduli with `n_S = 1`.
    pub fn check_fact_div(&self, seed: u64, trials: usize, modulus_bound: u64) -> CheckReport {
        let (mut r, t0) = CheckReport::start("fact_div");
        let group = self.group();
        let moduli: Vec<u64> = (1..=modulus_bound)
            .filter(|&n| group.s_split(n).0 == 1)
            .collect();
        for i in 0..trials as u64 {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let y = &group.sample_elements(&mut rng, 1, 200, 50)[0];
            let n = moduli[rng.gen_range(0..moduli.len())];
            let nk = BigRational::from_integer(group.k_part(n).into());
            let hits: Vec<u64> = (0..n)
                .filter(|&i| divides(group, n, &(y + BigRational::from_integer(i.into()) / &nk)))
                .collect();
            r.trials += 1;
            if hits.len() != 1 {
                r.fail(Some(s), format!("y = {y}, n = {n}: residues {hits:?}"));
            }
        }
        r.finish(t0)
    }

    /// Classes modulo each complement prime `p` partition `G`, each with
    /// value `2X+1`, and `p·(2X+1) = 2X+1`.
    pub fn check_torsion(&self, prime_bound: u64) -> CheckReport {
        let (mut r, t0) = CheckReport::start("torsion");
        let spec = *self.spec();
        if spec.is_trivial() {
            r.skipped = Some("q = 1, the ring is trivial".into());
            return r.finish(t0);
        }
        let group = self.group();
        let line = spec.line();
        r.trials += 1;
        if !spec.one().scale(spec.q() as i64).is_zero() {
            r.fail(None, "q·1 != 0");
        }
        for p in group.complement_primes(prime_bound) {
            r.trials += 1;
            let pk = BigInt::from(p).pow(group.exponent(p).unwrap_or(0));
            let mut sum = spec.zero();
            for i in 0..p {
                let f = Formula::div(
                    p,
                    Term::var(0).shifted(&BigRational::new(i.into(), pk.clone())),
                );
                match self.value(&f, 1) {
                    Ok(v) => {
                        if v != line {
                            r.fail(None, format!("[{f}] = {v}, expected {line}"));
                        }
                        sum = sum + v;
                    }
                    Err(e) => r.fail(None, e),
                }
            }
            if sum != line {
                r.fail(None, format!("p = {p}: classes sum to {sum}"));
            }
            if line.scale(p as i64) != line || !line.scale(p as i64 - 1).is_zero() {
                r.fail(None, format!("p = {p}: p·(2X+1) != 2X+1"));
            }
        }
        r.finish(t0)
    }

    /// Interval formulas against the endpoint table.
    pub fn check_unary_table(&self, seed: u64, trials: usize) -> CheckReport {
        let (mut r, t0) = CheckReport::start("unary_table");
        let group = self.group();
        let spec = self.spec();
        for i in 0..trials as u64 {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let end = |rng: &mut ChaCha8Rng| -> Option<(i64, i64)> {
                rng.gen_bool(0.8).then(|| {
                    (
                        rng.gen_range(-40..=40),
                        rng.gen_range(1..=self.gen.bounds.max_denominator),
                    )
                })
            };
            let (lo, hi) = (end(&mut rng), end(&mut rng));
            let mut parts = vec![];
            let mut ep = |e: Option<(i64, i64)>, rel: Rel, inf: Endpoint| match e {
                Some((a, d)) => {
                    let t = Term::var(0)
                        .scaled(&BigInt::from(d))
                        .shifted(&BigRational::from_integer((-a).into()));
                    parts.push(Formula::compare(t, rel, Term::zero()));
                    Endpoint::at(group, BigRational::new(a.into(), d.into()))
                }
                None => inf,
            };
            let lo_e = ep(lo, Rel::Gt, Endpoint::NegInf);
            let hi_e = ep(hi, Rel::Lt, Endpoint::PosInf);
            let f = if parts.is_empty() {
                Formula::compare(Term::var(0), Rel::Eq, Term::var(0))
            } else {
                Formula::and(parts)
            };
            let expect = if spec.is_trivial() {
                spec.zero()
            } else {
                interval_value(spec, &lo_e, &hi_e)
            };
            r.trials += 1;
            match self.value(&f, 1) {
                Ok(v) if v == expect => {}
                Ok(v) => r.fail(Some(s), format!("[{f}] = {v}, table gives {expect}")),
                Err(e) => r.fail(Some(s), e),
            }
        }
        r.finish(t0)
    }

    /// Commutative ring axioms and `X² + X = 0` on random elements.
    pub fn check_ring_laws(&self, seed: u64, trials: usize) -> CheckReport {
        let (mut r, t0) = CheckReport::start("ring_laws");
        let spec = self.spec();
        let q = spec.q() as i64;
        for i in 0..trials as u64 {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut el = || spec.element(rng.gen_range(0..q), rng.gen_range(0..q));
            let (a, b, c) = (el(), el(), el());
            let m = |x: &K0Element, y: &K0Element| self.mul(x, y);
            let laws = [
                ("mul assoc", m(&m(&a, &b), &c) == m(&a, &m(&b, &c))),
                ("mul comm", m(&a, &b) == m(&b, &a)),
                ("distrib", m(&a, &(b + c)) == m(&a, &b) + m(&a, &c)),
                ("unit", m(&spec.one(), &a) == a),
                ("add inverse", (a + -a).is_zero()),
                ("X^2 + X", (m(&spec.x(), &spec.x()) + spec.x()).is_zero()),
            ];
            r.trials += 1;
            for (name, ok) in laws {
                if !ok {
                    r.fail(Some(s), format!("{name} fails at a={a}, b={b}, c={c}"));
                }
            }
        }
        r.finish(t0)
    }

    /// Point membership in `f` against the produced quasi-cells.
    pub fn check_decomposition(&self, seed: u64, formulas: usize, points: usize) -> CheckReport {
        let (mut r, t0) = CheckReport::start("decomposition");
        let group = self.group();
        for i in 0..formulas as u64 {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let n = self.gen.arity(&mut rng);
            let f = self.gen.formula(&mut rng, n);
            r.trials += 1;
            let dec = match self.ev.decompose(&f, n) {
                Ok(d) => d,
                Err(e) => {
                    r.fail(Some(s), format!("{f}: {e}"));
                    continue;
                }
            };
            for x in sample_points(group, &mut rng, n, points) {
                let inside = f.holds(group, &x);
                let hits = dec.membership_count(group, &x);
                if hits != inside as usize {
                    r.fail(
                        Some(s),
                        format!("{f} at {x:?}: holds = {inside}, in {hits} cells"),
                    );
                    break;
                }
            }
        }
        r.finish(t0)
    }
}

/// Trial counts per check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Trials {
    pub additivity: usize,
    pub multiplicativity: usize,
    pub bijection: usize,
    pub fact_div: usize,
    pub decomposition: usize,
    pub decomposition_points: usize,
    pub unary_table: usize,
    pub ring_laws: usize,
}

impl Default for Trials {
    fn default() -> Self {
        Trials {
            additivity: 100,
            multiplicativity: 100,
            bijection: 50,
            fact_div: 1000,
            decomposition: 50,
            decomposition_points: 200,
            unary_table: 60,
            ring_laws: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    CorruptRing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub version: u32,
    pub groups: Vec<GroupDescriptor>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trials: Trials,
    #[serde(default)]
    pub bounds: Bounds,
    #[serde(default = "default_modulus_bound")]
    pub fact_div_modulus_bound: u64,
    #[serde(default = "default_torsion_bound")]
    pub torsion_prime_bound: u64,
    #[serde(default)]
    pub mutation: Option<Mutation>,
}

fn default_modulus_bound() -> u64 {
    50
}

fn default_torsion_bound() -> u64 {
    40
}

impl SuiteConfig {
    /// The reference groups with default trial counts.
    pub fn reference() -> Self {
        SuiteConfig {
            version: SUITE_VERSION,
            groups: vec![
                GroupDescriptor::cofinite(&[7]),
                GroupDescriptor::cofinite(&[31]),
                GroupDescriptor::finite(&[2, 3, 5]),
            ],
            seed: 20_240_601,
            trials: Trials::default(),
            bounds: Bounds::default(),
            fact_div_modulus_bound: default_modulus_bound(),
            torsion_prime_bound: default_torsion_bound(),
            mutation: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: SuiteConfig = serde_json::from_str(text)?;
        if cfg.version != SUITE_VERSION {
            return Err(HarnessError::Version(cfg.version));
        }
        if cfg.groups.is_empty() {
            return Err(HarnessError::NoGroups);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        SuiteConfig::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub group: String,
    pub q: u64,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub groups: Vec<GroupReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.groups
            .iter()
            .flat_map(|g| &g.checks)
            .all(CheckReport::passed)
    }

    pub fn failure_count(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| &g.checks)
            .map(|c| c.failures.len())
            .sum()
    }
}

/// Runs every check on every group of the suite.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport, HarnessError> {
    let mut groups = Vec::with_capacity(cfg.groups.len());
    for (index, desc) in cfg.groups.iter().enumerate() {
        let group = desc
            .validate()
            .map_err(|source| HarnessError::Group { index, source })?;
        let mut checker = Checker::new(&group, cfg.bounds)?;
        if cfg.mutation == Some(Mutation::CorruptRing) {
            checker = checker.corrupted();
        }
        let t = &cfg.trials;
        let seed = cfg.seed;
        let checks = vec![
            checker.check_ring_laws(seed, t.ring_laws),
            checker.check_unary_table(seed, t.unary_table),
            checker.check_torsion(cfg.torsion_prime_bound),
            checker.check_fact_div(seed, t.fact_div, cfg.fact_div_modulus_bound),
            checker.check_decomposition(seed, t.decomposition, t.decomposition_points),
            checker.random_additivity(seed, t.additivity),
            checker.random_multiplicativity(seed, t.multiplicativity),
            checker.random_bijections(seed, t.bijection),
        ];
        groups.push(GroupReport {
            group: group.to_string(),
            q: checker.spec().q(),
            checks,
        });
    }
    Ok(SuiteReport { groups })
}
