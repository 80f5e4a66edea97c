//! Groebner bases: verification, a Buchberger oracle, the Macaulay-matrix
//! engine, solving degrees, normal forms and staircase counting.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::gf::Field;
use crate::macaulay::{Mode, RowSpace};
use crate::mpoly::{reduce, s_polynomial, Monomial, Polynomial, Ring};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GbError {
    #[error("pair budget of {0} exceeded")]
    PairBudget(usize),
    #[error("degree budget {0} exhausted")]
    DegreeBudget(u32),
    #[error("generators live in different rings")]
    RingMismatch,
    #[error("homogeneous mode needs homogeneous generators")]
    NotHomogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "degree")]
pub enum GbSource {
    BuchbergerOracle,
    Macaulay(u32),
    AssertedByStructure,
}

/// Reduced, monic Groebner basis sorted by ascending leading monomial.
#[derive(Debug, Clone)]
pub struct GroebnerBasis<K: Field> {
    pub ring: Ring<K>,
    pub polys: Vec<Polynomial<K>>,
    pub source: GbSource,
}

impl<K: Field> GroebnerBasis<K> {
    /// Wraps a set known to be a Groebner basis, normalising it to the reduced form.
    pub fn from_basis(ring: &Ring<K>, polys: &[Polynomial<K>], source: GbSource) -> Self {
        GroebnerBasis { ring: ring.clone(), polys: interreduce(ring, polys), source }
    }

    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.polys.iter().map(|p| p.lm().clone()).collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.polys.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.polys.len() == 1 && self.polys[0].lm().is_one()
    }

    pub fn normal_form(&self, f: &Polynomial<K>) -> Polynomial<K> {
        normal_form(f, &self.polys)
    }

    pub fn contains(&self, f: &Polynomial<K>) -> bool {
        self.normal_form(f).is_zero()
    }

    pub fn quotient_dimension(&self) -> QuotientDim {
        quotient_dimension(self.ring.nvars(), &self.leading_monomials())
    }

    pub fn render(&self) -> Vec<String> {
        self.polys.iter().map(|p| p.render()).collect()
    }
}

/// Remainder of `f` modulo `gb`; unique when `gb` is a Groebner basis.
pub fn normal_form<K: Field>(f: &Polynomial<K>, gb: &[Polynomial<K>]) -> Polynomial<K> {
    if gb.is_empty() {
        return f.clone();
    }
    reduce(f, gb)
}

fn sort_ascending<K: Field>(ring: &Ring<K>, v: &mut [Polynomial<K>]) {
    v.sort_by(|a, b| ring.cmp(a.lm(), b.lm()));
}

/// Turns a Groebner basis into the reduced one: drop redundant leading
/// monomials, tail-reduce, make monic, sort ascending.
pub fn interreduce<K: Field>(ring: &Ring<K>, polys: &[Polynomial<K>]) -> Vec<Polynomial<K>> {
    let mut v: Vec<Polynomial<K>> = polys.iter().filter(|p| !p.is_zero()).map(|p| p.monic()).collect();
    sort_ascending(ring, &mut v);
    let mut keep: Vec<Polynomial<K>> = Vec::new();
    for p in v {
        if keep.iter().any(|g| g.lm().divides(p.lm())) {
            continue;
        }
        keep.push(p);
    }
    let mut out = Vec::with_capacity(keep.len());
    for i in 0..keep.len() {
        let others: Vec<Polynomial<K>> = keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
        let p = &keep[i];
        let lead = Polynomial::from_terms(ring, vec![p.terms()[0].clone()]);
        let tail = p.sub(&lead);
        out.push(lead.add(&normal_form(&tail, &others)));
    }
    sort_ascending(ring, &mut out);
    out
}

fn pair_list<K: Field>(polys: &[Polynomial<K>]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            if !polys[i].lm().is_coprime(polys[j].lm()) {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_by_key(|&(i, j)| polys[i].lm().lcm(polys[j].lm()).degree());
    pairs
}

/// Buchberger criterion with the coprime-leading-monomial skip.
pub fn is_groebner<K: Field>(polys: &[Polynomial<K>]) -> bool {
    let polys: Vec<Polynomial<K>> = polys.iter().filter(|p| !p.is_zero()).cloned().collect();
    for (i, j) in pair_list(&polys) {
        let s = s_polynomial(&polys[i], &polys[j]).unwrap();
        if !normal_form(&s, &polys).is_zero() {
            return false;
        }
    }
    true
}

/// Default cap on the number of reduced pairs in [`buchberger`].
pub const DEFAULT_PAIR_BUDGET: usize = 20_000;

/// Buchberger's algorithm with normal selection, the coprime criterion and
/// the chain criterion. Returns the reduced Groebner basis.
pub fn buchberger<K: Field>(ring: &Ring<K>, polys: &[Polynomial<K>], pair_budget: usize) -> Result<GroebnerBasis<K>, GbError> {
    for p in polys {
        if p.ring() != ring {
            return Err(GbError::RingMismatch);
        }
    }
    let mut g: Vec<Polynomial<K>> = Vec::new();
    let mut pairs: BTreeSet<(u32, usize, usize)> = BTreeSet::new();
    let mut done: BTreeSet<(usize, usize)> = BTreeSet::new();
    let add = |g: &mut Vec<Polynomial<K>>, pairs: &mut BTreeSet<(u32, usize, usize)>, h: Polynomial<K>| {
        let h = h.monic();
        let k = g.len();
        for (i, gi) in g.iter().enumerate() {
            pairs.insert((gi.lm().lcm(h.lm()).degree(), i, k));
        }
        g.push(h);
    };
    for p in polys {
        let r = normal_form(p, &g);
        if !r.is_zero() {
            add(&mut g, &mut pairs, r);
        }
    }
    let mut reduced = 0usize;
    while let Some(&(deg, i, j)) = pairs.iter().next() {
        pairs.remove(&(deg, i, j));
        done.insert((i, j));
        let (li, lj) = (g[i].lm().clone(), g[j].lm().clone());
        if li.is_coprime(&lj) {
            continue;
        }
        let l = li.lcm(&lj);
        let chain = (0..g.len()).any(|k| {
            k != i
                && k != j
                && g[k].lm().divides(&l)
                && done.contains(&(i.min(k), i.max(k)))
                && done.contains(&(j.min(k), j.max(k)))
        });
        if chain {
            continue;
        }
        reduced += 1;
        if reduced > pair_budget {
            return Err(GbError::PairBudget(pair_budget));
        }
        let s = s_polynomial(&g[i], &g[j]).unwrap();
        let r = normal_form(&s, &g);
        if !r.is_zero() {
            add(&mut g, &mut pairs, r);
        }
    }
    Ok(GroebnerBasis { ring: ring.clone(), polys: interreduce(ring, &g), source: GbSource::BuchbergerOracle })
}

/// Outcome of elimination at one degree.
#[derive(Debug, Clone)]
pub struct LinearAlgebraGb<K: Field> {
    pub degree: u32,
    pub achieved: bool,
    pub gb: Option<GroebnerBasis<K>>,
    pub rank: usize,
    pub ncols: usize,
}

fn check_gens<K: Field>(ring: &Ring<K>, gens: &[Polynomial<K>], mode: Mode) -> Result<(), GbError> {
    for g in gens {
        if g.ring() != ring {
            return Err(GbError::RingMismatch);
        }
        if mode == Mode::Homogeneous && !g.is_homogeneous() {
            return Err(GbError::NotHomogeneous);
        }
    }
    Ok(())
}

/// Tests whether the current row space contains a Groebner basis of the ideal.
fn extract<K: Field>(rs: &RowSpace<K>, gens: &[Polynomial<K>]) -> Option<GroebnerBasis<K>> {
    let ring = rs.ring();
    let cand = interreduce(ring, &rs.minimal_basis());
    if gens.iter().any(|f| !normal_form(f, &cand).is_zero()) {
        return None;
    }
    if !is_groebner(&cand) {
        return None;
    }
    Some(GroebnerBasis { ring: ring.clone(), polys: cand, source: GbSource::Macaulay(rs.degree().unwrap_or(0)) })
}

fn la_step<K: Field>(rs: &mut RowSpace<K>, gens: &[Polynomial<K>], d: u32) -> LinearAlgebraGb<K> {
    rs.extend_to(d);
    let gb = extract(rs, gens);
    LinearAlgebraGb { degree: d, achieved: gb.is_some(), gb, rank: rs.dim(), ncols: rs.ncols() }
}

/// Gaussian elimination on M_{<=d} (or M_0..M_d in homogeneous mode) and a
/// Buchberger-criterion check of the extracted basis.
pub fn linear_algebra_gb<K: Field>(ring: &Ring<K>, gens: &[Polynomial<K>], d: u32, mode: Mode) -> Result<LinearAlgebraGb<K>, GbError> {
    check_gens(ring, gens, mode)?;
    let mut rs = RowSpace::new(ring, gens);
    Ok(la_step(&mut rs, gens, d))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvingDegree {
    pub degree: u32,
    /// (d, achieved) for every scanned degree.
    pub profile: Vec<(u32, bool)>,
    pub gb_max_degree: u32,
}

/// Least d (scanning upward from the largest input degree) at which
/// elimination on M_{<=d} yields a Groebner basis, together with that basis.
pub fn solving_degree_with_gb<K: Field>(ring: &Ring<K>, gens: &[Polynomial<K>], d_max: u32) -> Result<(SolvingDegree, GroebnerBasis<K>), GbError> {
    check_gens(ring, gens, Mode::Inhomogeneous)?;
    let start = gens.iter().filter(|g| !g.is_zero()).map(|g| g.degree()).max().unwrap_or(0);
    let mut rs = RowSpace::new(ring, gens);
    let mut profile = Vec::new();
    for d in start..=d_max.max(start) {
        if d > d_max {
            break;
        }
        let step = la_step(&mut rs, gens, d);
        profile.push((d, step.achieved));
        if let Some(gb) = step.gb {
            let sd = SolvingDegree { degree: d, profile, gb_max_degree: gb.max_degree() };
            return Ok((sd, gb));
        }
    }
    Err(GbError::DegreeBudget(d_max))
}

pub fn solving_degree<K: Field>(ring: &Ring<K>, gens: &[Polynomial<K>], d_max: u32) -> Result<SolvingDegree, GbError> {
    solving_degree_with_gb(ring, gens, d_max).map(|(s, _)| s)
}

/// True iff the two sets generate the same ideal, decided by mutual reduction
/// against reduced Groebner bases.
pub fn same_ideal<K: Field>(a: &GroebnerBasis<K>, b: &GroebnerBasis<K>) -> bool {
    a.polys.iter().all(|f| b.contains(f)) && b.polys.iter().all(|f| a.contains(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotientDim {
    Finite(u128),
    Infinite,
}

/// Hilbert-series numerator of P/(lms) in `n` variables: coefficients of t^0, t^1, ...
pub fn hilbert_numerator(n: usize, lms: &[Monomial]) -> Vec<i128> {
    let gens = minimalize(lms.to_vec());
    numerator_rec(n, gens)
}

fn minimalize(mut gens: Vec<Monomial>) -> Vec<Monomial> {
    gens.sort_by_key(|m| (m.degree(), m.exps().to_vec()));
    gens.dedup();
    let mut out: Vec<Monomial> = Vec::new();
    for m in gens {
        if !out.iter().any(|g| g.divides(&m)) {
            out.push(m);
        }
    }
    out
}

fn poly_add(a: &mut Vec<i128>, b: &[i128], shift: usize) {
    if a.len() < b.len() + shift {
        a.resize(b.len() + shift, 0);
    }
    for (i, v) in b.iter().enumerate() {
        a[i + shift] += v;
    }
}

fn numerator_rec(n: usize, gens: Vec<Monomial>) -> Vec<i128> {
    if gens.is_empty() {
        return vec![1];
    }
    let coprime = gens.iter().enumerate().all(|(i, a)| gens[i + 1..].iter().all(|b| a.is_coprime(b)));
    if coprime {
        let mut acc = vec![1i128];
        for g in &gens {
            let mut next = acc.clone();
            let neg: Vec<i128> = acc.iter().map(|v| -v).collect();
            poly_add(&mut next, &neg, g.degree() as usize);
            acc = next;
        }
        return acc;
    }
    // pivot on the most frequent variable among mixed generators, at the median exponent
    let mixed: Vec<&Monomial> = gens.iter().filter(|g| g.pure_power_var().is_none()).collect();
    let mut best = (0, 0usize);
    for v in 0..n {
        let c = mixed.iter().filter(|g| g.exps()[v] > 0).count();
        if c > best.1 {
            best = (v, c);
        }
    }
    let v = best.0;
    let mut es: Vec<u32> = mixed.iter().map(|g| g.exps()[v]).filter(|&e| e > 0).collect();
    es.sort_unstable();
    let e = es[es.len() / 2];
    let p = Monomial::var(n, v, e);
    let mut with_p = gens.clone();
    with_p.push(p.clone());
    let colon: Vec<Monomial> = gens
        .iter()
        .map(|g| {
            let mut ex = g.exps().to_vec();
            ex[v] = ex[v].saturating_sub(e);
            Monomial::new(ex)
        })
        .collect();
    let mut out = numerator_rec(n, minimalize(with_p));
    let rest = numerator_rec(n, minimalize(colon));
    poly_add(&mut out, &rest, e as usize);
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    out
}

/// Divides a numerator by (1 - t)^n; None if the division is not exact.
pub fn hilbert_polynomial_part(numerator: &[i128], n: usize) -> Option<Vec<i128>> {
    let mut h = numerator.to_vec();
    for _ in 0..n {
        // h = (1 - t) * q  <=>  q_k = sum_{i<=k} h_i
        let total: i128 = h.iter().sum();
        if total != 0 {
            return None;
        }
        let mut q = Vec::with_capacity(h.len().saturating_sub(1));
        let mut run = 0;
        for v in &h[..h.len() - 1] {
            run += v;
            q.push(run);
        }
        h = if q.is_empty() { vec![0] } else { q };
    }
    while h.len() > 1 && *h.last().unwrap() == 0 {
        h.pop();
    }
    Some(h)
}

/// Number of standard monomials outside the monomial ideal generated by `lms`.
pub fn quotient_dimension(n: usize, lms: &[Monomial]) -> QuotientDim {
    let has_pure = (0..n).all(|v| lms.iter().any(|m| m.pure_power_var() == Some(v) || (m.is_one())));
    if !has_pure {
        return QuotientDim::Infinite;
    }
    if lms.iter().any(|m| m.is_one()) {
        return QuotientDim::Finite(0);
    }
    let num = hilbert_numerator(n, lms);
    let h = hilbert_polynomial_part(&num, n).expect("zero-dimensional monomial ideal");
    QuotientDim::Finite(h.iter().sum::<i128>() as u128)
}

/// Compares leading monomials of two polynomials in their ring.
pub fn cmp_lm<K: Field>(a: &Polynomial<K>, b: &Polynomial<K>) -> Ordering {
    a.ring().cmp(a.lm(), b.lm())
}
