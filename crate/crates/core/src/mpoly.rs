//! Monomials, term orders and sparse multivariate polynomials.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::gf::Field;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("polynomials live in different rings")]
    RingMismatch,
    #[error("zero polynomial has no leading term")]
    ZeroPolynomial,
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("ring has no homogenization variable")]
    NoHomogenizer,
    #[error("duplicate variable name {0}")]
    DuplicateVariable(String),
    #[error("homogenization variable must be the least variable")]
    HomogenizerNotLeast,
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("parse error in {text:?} at byte {pos}: {msg}")]
    Parse { text: String, pos: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Drl,
    Lex,
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderKind::Drl => "DRL",
            OrderKind::Lex => "LEX",
        })
    }
}

/// Exponent vector with cached total degree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    exps: Box<[u32]>,
    deg: u32,
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps)
    }
}

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial { exps: vec![0; nvars].into_boxed_slice(), deg: 0 }
    }

    pub fn new(exps: Vec<u32>) -> Self {
        let deg = exps.iter().sum();
        Monomial { exps: exps.into_boxed_slice(), deg }
    }

    pub fn var(nvars: usize, i: usize, e: u32) -> Self {
        let mut v = vec![0; nvars];
        v[i] = e;
        Monomial::new(v)
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn is_one(&self) -> bool {
        self.deg == 0
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let exps: Box<[u32]> = self.exps.iter().zip(o.exps.iter()).map(|(a, b)| a + b).collect();
        Monomial { exps, deg: self.deg + o.deg }
    }

    pub fn divides(&self, o: &Monomial) -> bool {
        self.deg <= o.deg && self.exps.iter().zip(o.exps.iter()).all(|(a, b)| a <= b)
    }

    /// `o / self` when `self | o`.
    pub fn quotient_of(&self, o: &Monomial) -> Option<Monomial> {
        if !self.divides(o) {
            return None;
        }
        let exps: Box<[u32]> = o.exps.iter().zip(self.exps.iter()).map(|(a, b)| a - b).collect();
        Some(Monomial { exps, deg: o.deg - self.deg })
    }

    pub fn lcm(&self, o: &Monomial) -> Monomial {
        Monomial::new(self.exps.iter().zip(o.exps.iter()).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn is_coprime(&self, o: &Monomial) -> bool {
        self.exps.iter().zip(o.exps.iter()).all(|(a, b)| *a == 0 || *b == 0)
    }

    /// Index of the only variable occurring, if the monomial is a pure power.
    pub fn pure_power_var(&self) -> Option<usize> {
        let mut it = self.exps.iter().enumerate().filter(|(_, e)| **e > 0);
        match (it.next(), it.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }

    pub fn cmp_in(&self, o: &Monomial, kind: OrderKind) -> Ordering {
        match kind {
            OrderKind::Lex => self.exps.cmp(&o.exps),
            OrderKind::Drl => match self.deg.cmp(&o.deg) {
                Ordering::Equal => {
                    for (a, b) in self.exps.iter().zip(o.exps.iter()).rev() {
                        if a != b {
                            return b.cmp(a);
                        }
                    }
                    Ordering::Equal
                }
                c => c,
            },
        }
    }
}

/// All monomials of total degree exactly `d` in `n` variables, descending in `kind`.
pub fn monomials_of_degree(n: usize, d: u32, kind: OrderKind) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        let n = cur.len();
        if i + 1 == n {
            cur[i] = left;
            out.push(Monomial::new(cur.clone()));
            cur[i] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    if n == 0 {
        if d == 0 {
            out.push(Monomial::one(0));
        }
        return out;
    }
    rec(0, d, &mut cur, &mut out);
    out.sort_by(|a, b| b.cmp_in(a, kind));
    out
}

/// All monomials of total degree at most `d`, descending in a degree-compatible order.
pub fn monomials_up_to(n: usize, d: u32, kind: OrderKind) -> Vec<Monomial> {
    let mut out = Vec::new();
    for e in (0..=d).rev() {
        out.extend(monomials_of_degree(n, e, kind));
    }
    if kind == OrderKind::Lex {
        out.sort_by(|a, b| b.cmp_in(a, kind));
    }
    out
}

#[derive(Debug, PartialEq, Eq)]
pub struct RingData<K: Field> {
    pub names: Vec<String>,
    pub field: K,
    pub order: OrderKind,
    pub homogenizer: Option<usize>,
}

/// Polynomial ring over a prime field with a fixed variable order and term order.
///
/// Variable 0 is the greatest variable.
#[derive(Debug)]
pub struct Ring<K: Field>(Arc<RingData<K>>);

impl<K: Field> Clone for Ring<K> {
    fn clone(&self) -> Self {
        Ring(self.0.clone())
    }
}

impl<K: Field> PartialEq for Ring<K> {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.0, &o.0) || *self.0 == *o.0
    }
}
impl<K: Field> Eq for Ring<K> {}

impl<K: Field> Ring<K> {
    pub fn new<S: AsRef<str>>(field: K, names: &[S], order: OrderKind) -> Result<Self, PolyError> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(PolyError::DuplicateVariable(n.clone()));
            }
        }
        Ok(Ring(Arc::new(RingData { names, field, order, homogenizer: None })))
    }

    /// Ring with an extra least variable `name` used for homogenization.
    pub fn with_homogenizer(&self, name: &str) -> Result<Self, PolyError> {
        let mut names = self.0.names.clone();
        if names.iter().any(|n| n == name) {
            return Err(PolyError::DuplicateVariable(name.to_string()));
        }
        names.push(name.to_string());
        let h = names.len() - 1;
        Ok(Ring(Arc::new(RingData { names, field: self.0.field.clone(), order: self.0.order, homogenizer: Some(h) })))
    }

    /// Same variables under another term order.
    pub fn with_order(&self, order: OrderKind) -> Self {
        Ring(Arc::new(RingData {
            names: self.0.names.clone(),
            field: self.0.field.clone(),
            order,
            homogenizer: self.0.homogenizer,
        }))
    }

    /// Same field and order, different variable list (no homogenizer).
    pub fn with_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, PolyError> {
        Ring::new(self.0.field.clone(), names, self.0.order)
    }

    pub fn field(&self) -> &K {
        &self.0.field
    }
    pub fn names(&self) -> &[String] {
        &self.0.names
    }
    pub fn nvars(&self) -> usize {
        self.0.names.len()
    }
    pub fn order(&self) -> OrderKind {
        self.0.order
    }
    pub fn homogenizer(&self) -> Option<usize> {
        self.0.homogenizer
    }
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.names.iter().position(|n| n == name)
    }

    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        a.cmp_in(b, self.0.order)
    }

    pub fn var(&self, i: usize) -> Polynomial<K> {
        let k = self.field();
        Polynomial { ring: self.clone(), terms: vec![(Monomial::var(self.nvars(), i, 1), k.one())] }
    }

    pub fn var_named(&self, name: &str) -> Result<Polynomial<K>, PolyError> {
        self.index_of(name).map(|i| self.var(i)).ok_or_else(|| PolyError::UnknownVariable(name.into()))
    }

    pub fn constant(&self, c: K::Elem) -> Polynomial<K> {
        let terms = if self.field().is_zero(&c) { vec![] } else { vec![(Monomial::one(self.nvars()), c)] };
        Polynomial { ring: self.clone(), terms }
    }

    pub fn constant_u64(&self, c: u64) -> Polynomial<K> {
        self.constant(self.field().from_u64(c))
    }

    pub fn zero(&self) -> Polynomial<K> {
        Polynomial { ring: self.clone(), terms: vec![] }
    }

    pub fn one(&self) -> Polynomial<K> {
        self.constant(self.field().one())
    }

    pub fn monomial(&self, m: Monomial, c: K::Elem) -> Polynomial<K> {
        let terms = if self.field().is_zero(&c) { vec![] } else { vec![(m, c)] };
        Polynomial { ring: self.clone(), terms }
    }

    /// Parses canonical text such as `x^2*y - 3*y + 1`.
    pub fn parse(&self, text: &str) -> Result<Polynomial<K>, PolyError> {
        parse_poly(self, text)
    }
}

/// Compares two monomials in the ring's term order.
pub fn compare<K: Field>(ring: &Ring<K>, a: &Monomial, b: &Monomial) -> Result<Ordering, PolyError> {
    if a.nvars() != ring.nvars() || b.nvars() != ring.nvars() {
        return Err(PolyError::RingMismatch);
    }
    Ok(ring.cmp(a, b))
}

/// Sparse polynomial; terms sorted strictly descending in the ring's order.
#[derive(Clone, Debug)]
pub struct Polynomial<K: Field> {
    ring: Ring<K>,
    terms: Vec<(Monomial, K::Elem)>,
}

impl<K: Field> PartialEq for Polynomial<K> {
    fn eq(&self, o: &Self) -> bool {
        self.ring == o.ring && self.terms == o.terms
    }
}
impl<K: Field> Eq for Polynomial<K> {}

impl<K: Field> Polynomial<K> {
    /// Builds a polynomial from arbitrary terms, combining duplicates.
    pub fn from_terms(ring: &Ring<K>, terms: impl IntoIterator<Item = (Monomial, K::Elem)>) -> Self {
        let k = ring.field();
        let mut map: HashMap<Monomial, K::Elem> = HashMap::new();
        for (m, c) in terms {
            assert_eq!(m.nvars(), ring.nvars(), "monomial arity does not match ring");
            let e = map.entry(m).or_insert_with(|| k.zero());
            *e = k.add(e, &c);
        }
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !k.is_zero(c)).collect();
        terms.sort_by(|a, b| ring.cmp(&b.0, &a.0));
        Polynomial { ring: ring.clone(), terms }
    }

    /// Terms already sorted descending with nonzero coefficients.
    pub(crate) fn from_sorted(ring: &Ring<K>, terms: Vec<(Monomial, K::Elem)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| ring.cmp(&w[0].0, &w[1].0) == Ordering::Greater));
        Polynomial { ring: ring.clone(), terms }
    }

    pub fn ring(&self) -> &Ring<K> {
        &self.ring
    }
    pub fn field(&self) -> &K {
        self.ring.field()
    }
    pub fn terms(&self) -> &[(Monomial, K::Elem)] {
        &self.terms
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading_term(&self) -> Result<(&Monomial, &K::Elem), PolyError> {
        self.terms.first().map(|(m, c)| (m, c)).ok_or(PolyError::ZeroPolynomial)
    }

    /// Leading monomial; panics on the zero polynomial.
    pub fn lm(&self) -> &Monomial {
        &self.terms[0].0
    }

    pub fn lc(&self) -> &K::Elem {
        &self.terms[0].1
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|(m, _)| m.exps()[var]).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.terms.windows(2).all(|w| w[0].0.degree() == w[1].0.degree())
    }

    pub fn coefficient(&self, m: &Monomial) -> K::Elem {
        self.terms.iter().find(|(t, _)| t == m).map(|(_, c)| c.clone()).unwrap_or_else(|| self.field().zero())
    }

    /// Variables that occur with a nonzero exponent.
    pub fn support_vars(&self) -> Vec<usize> {
        (0..self.ring.nvars()).filter(|&i| self.terms.iter().any(|(m, _)| m.exps()[i] > 0)).collect()
    }

    fn check_ring(&self, o: &Self) -> Result<(), PolyError> {
        if self.ring != o.ring {
            Err(PolyError::RingMismatch)
        } else {
            Ok(())
        }
    }

    fn merge(&self, o: &Self, negate: bool) -> Self {
        let k = self.field();
        let ring = &self.ring;
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < o.terms.len() {
            let ord = if i == self.terms.len() {
                Ordering::Less
            } else if j == o.terms.len() {
                Ordering::Greater
            } else {
                ring.cmp(&self.terms[i].0, &o.terms[j].0)
            };
            match ord {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate { k.neg(&o.terms[j].1) } else { o.terms[j].1.clone() };
                    out.push((o.terms[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate {
                        k.sub(&self.terms[i].1, &o.terms[j].1)
                    } else {
                        k.add(&self.terms[i].1, &o.terms[j].1)
                    };
                    if !k.is_zero(&c) {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Polynomial { ring: ring.clone(), terms: out }
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_ring(o)?;
        Ok(self.merge(o, false))
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_ring(o)?;
        Ok(self.merge(o, true))
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_ring(o)?;
        let k = self.field();
        let mut map: HashMap<Monomial, K::Elem> = HashMap::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let e = map.entry(ma.mul(mb)).or_insert_with(|| k.zero());
                *e = k.add(e, &k.mul(ca, cb));
            }
        }
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !k.is_zero(c)).collect();
        terms.sort_by(|a, b| self.ring.cmp(&b.0, &a.0));
        Ok(Polynomial { ring: self.ring.clone(), terms })
    }

    pub fn add(&self, o: &Self) -> Self {
        self.try_add(o).expect("ring mismatch")
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.try_sub(o).expect("ring mismatch")
    }
    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("ring mismatch")
    }

    pub fn neg(&self) -> Self {
        let k = self.field();
        Polynomial { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), k.neg(c))).collect() }
    }

    pub fn scale(&self, s: &K::Elem) -> Self {
        let k = self.field();
        if k.is_zero(s) {
            return self.ring.zero();
        }
        Polynomial { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), k.mul(c, s))).collect() }
    }

    /// Multiplication by `c * m`; order is preserved because term orders are multiplicative.
    pub fn mul_term(&self, m: &Monomial, c: &K::Elem) -> Self {
        let k = self.field();
        if k.is_zero(c) {
            return self.ring.zero();
        }
        Polynomial {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(t, d)| (t.mul(m), k.mul(d, c))).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = self.ring.one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Scales so the leading coefficient is 1 (zero stays zero).
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.field().inv(self.lc()).unwrap();
        self.scale(&inv)
    }

    pub fn evaluate(&self, point: &[K::Elem]) -> K::Elem {
        let k = self.field();
        let mut acc = k.zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.exps().iter().enumerate() {
                if *e > 0 {
                    t = k.mul(&t, &k.pow_u64(&point[i], *e as u64));
                }
            }
            acc = k.add(&acc, &t);
        }
        acc
    }

    /// Substitutes `var := value` (a polynomial in the same ring).
    pub fn substitute(&self, var: usize, value: &Self) -> Self {
        let mut powers: Vec<Self> = vec![self.ring.one()];
        let mut acc = self.ring.zero();
        for (m, c) in &self.terms {
            let e = m.exps()[var] as usize;
            while powers.len() <= e {
                let next = powers.last().unwrap().mul(value);
                powers.push(next);
            }
            let mut rest = m.exps().to_vec();
            rest[var] = 0;
            acc = acc.add(&powers[e].mul_term(&Monomial::new(rest), c));
        }
        acc
    }

    /// Replaces several variables at once by polynomials of the same ring.
    pub fn substitute_many(&self, subs: &[(usize, Self)]) -> Self {
        let mut out = self.clone();
        for (v, p) in subs {
            out = out.substitute(*v, p);
        }
        out
    }

    /// Re-expresses the polynomial in `target`, matching variables by name.
    pub fn to_ring(&self, target: &Ring<K>) -> Result<Self, PolyError> {
        let map: Vec<Option<usize>> = self.ring.names().iter().map(|n| target.index_of(n)).collect();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut e = vec![0u32; target.nvars()];
            for (i, x) in m.exps().iter().enumerate() {
                if *x > 0 {
                    match map[i] {
                        Some(j) => e[j] = *x,
                        None => return Err(PolyError::UnknownVariable(self.ring.names()[i].clone())),
                    }
                }
            }
            terms.push((Monomial::new(e), c.clone()));
        }
        Ok(Polynomial::from_terms(target, terms))
    }

    /// Highest-degree homogeneous component.
    pub fn top_component(&self) -> Result<Self, PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let d = self.degree();
        let terms = self.terms.iter().filter(|(m, _)| m.degree() == d).cloned().collect();
        Ok(Polynomial { ring: self.ring.clone(), terms })
    }

    /// Homogenizes with respect to the ring's homogenization variable.
    ///
    /// The polynomial must not involve that variable.
    pub fn homogenize(&self) -> Result<Self, PolyError> {
        let h = self.ring.homogenizer().ok_or(PolyError::NoHomogenizer)?;
        if h + 1 != self.ring.nvars() {
            return Err(PolyError::HomogenizerNotLeast);
        }
        let d = self.degree();
        let terms = self.terms.iter().map(|(m, c)| {
            let mut e = m.exps().to_vec();
            e[h] += d - m.degree();
            (Monomial::new(e), c.clone())
        });
        Ok(Polynomial::from_terms(&self.ring, terms))
    }

    /// Sets the homogenization variable to 1.
    pub fn dehomogenize(&self) -> Result<Self, PolyError> {
        let h = self.ring.homogenizer().ok_or(PolyError::NoHomogenizer)?;
        let terms = self.terms.iter().map(|(m, c)| {
            let mut e = m.exps().to_vec();
            e[h] = 0;
            (Monomial::new(e), c.clone())
        });
        Ok(Polynomial::from_terms(&self.ring, terms))
    }

    /// Sets variable `var` to 0.
    pub fn set_zero(&self, var: usize) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| m.exps()[var] == 0).cloned().collect();
        Polynomial { ring: self.ring.clone(), terms }
    }

    /// Canonical text with coefficients as signed representatives.
    pub fn render(&self) -> String {
        render_terms(&self.ring, &self.terms)
    }
}

impl<K: Field> fmt::Display for Polynomial<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn render_terms<K: Field>(ring: &Ring<K>, terms: &[(Monomial, K::Elem)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let k = ring.field();
    let mut s = String::new();
    for (idx, (m, c)) in terms.iter().enumerate() {
        let (neg, mag) = k.to_signed_string(c);
        if idx == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if mag != "1" || m.is_one() {
            factors.push(mag);
        }
        for (i, e) in m.exps().iter().enumerate() {
            match *e {
                0 => {}
                1 => factors.push(ring.names()[i].clone()),
                e => factors.push(format!("{}^{}", ring.names()[i], e)),
            }
        }
        s.push_str(&factors.join("*"));
    }
    s
}

fn parse_poly<K: Field>(ring: &Ring<K>, text: &str) -> Result<Polynomial<K>, PolyError> {
    let k = ring.field();
    let n = ring.nvars();
    let bytes = text.as_bytes();
    let err = |pos: usize, msg: &str| PolyError::Parse { text: text.to_string(), pos, msg: msg.to_string() };
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let read_int = |pos: &mut usize| -> Option<num_bigint::BigUint> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            None
        } else {
            text[start..*pos].parse().ok()
        }
    };
    let mut terms = Vec::new();
    let mut first = true;
    skip_ws(&mut pos);
    if text.trim() == "0" {
        return Ok(ring.zero());
    }
    while pos < bytes.len() {
        let mut negative = false;
        skip_ws(&mut pos);
        if pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
            negative = bytes[pos] == b'-';
            pos += 1;
        } else if !first {
            return Err(err(pos, "expected + or -"));
        }
        first = false;
        let mut coeff = k.one();
        let mut exps = vec![0u32; n];
        loop {
            skip_ws(&mut pos);
            if pos >= bytes.len() {
                return Err(err(pos, "expected factor"));
            }
            if bytes[pos].is_ascii_digit() {
                let v = read_int(&mut pos).ok_or_else(|| err(pos, "bad integer"))?;
                coeff = k.mul(&coeff, &k.from_biguint(&v));
            } else if bytes[pos].is_ascii_alphabetic() || bytes[pos] == b'_' {
                let start = pos;
                while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                    pos += 1;
                }
                let name = &text[start..pos];
                let v = ring.index_of(name).ok_or_else(|| err(start, &format!("unknown variable {name}")))?;
                let mut e = 1u32;
                skip_ws(&mut pos);
                if pos < bytes.len() && bytes[pos] == b'^' {
                    pos += 1;
                    skip_ws(&mut pos);
                    let v = read_int(&mut pos).ok_or_else(|| err(pos, "bad exponent"))?;
                    e = u32::try_from(&v).map_err(|_| err(pos, "exponent too large"))?;
                }
                exps[v] += e;
            } else {
                return Err(err(pos, "unexpected character"));
            }
            skip_ws(&mut pos);
            if pos < bytes.len() && bytes[pos] == b'*' {
                pos += 1;
                continue;
            }
            break;
        }
        if negative {
            coeff = k.neg(&coeff);
        }
        terms.push((Monomial::new(exps), coeff));
        skip_ws(&mut pos);
    }
    if terms.is_empty() {
        return Err(err(0, "empty polynomial"));
    }
    Ok(Polynomial::from_terms(ring, terms))
}

/// Result of multivariate division.
#[derive(Clone, Debug)]
pub struct Division<K: Field> {
    pub quotients: Vec<Polynomial<K>>,
    pub remainder: Polynomial<K>,
}

/// Multivariate division: at each step the greatest reducible term is reduced by
/// the first divisor whose leading monomial divides it.
pub fn divide<K: Field>(f: &Polynomial<K>, divisors: &[Polynomial<K>]) -> Result<Division<K>, PolyError> {
    for g in divisors {
        f.check_ring(g)?;
        if g.is_zero() {
            return Err(PolyError::ZeroDivisor);
        }
    }
    let ring = f.ring();
    let k = ring.field();
    let mut quot: Vec<Vec<(Monomial, K::Elem)>> = vec![Vec::new(); divisors.len()];
    let mut rem = Vec::new();
    let mut p = f.clone();
    let lc_inv: Vec<K::Elem> = divisors.iter().map(|g| k.inv(g.lc()).unwrap()).collect();
    while !p.is_zero() {
        let (m, c) = (p.terms[0].0.clone(), p.terms[0].1.clone());
        let hit = divisors.iter().position(|g| g.lm().divides(&m));
        match hit {
            Some(i) => {
                let g = &divisors[i];
                let t = g.lm().quotient_of(&m).unwrap();
                let coef = k.mul(&c, &lc_inv[i]);
                p = p.sub(&g.mul_term(&t, &coef));
                quot[i].push((t, coef));
            }
            None => {
                rem.push(p.terms.remove(0));
            }
        }
    }
    Ok(Division {
        quotients: quot.into_iter().map(|t| Polynomial::from_terms(ring, t)).collect(),
        remainder: Polynomial::from_sorted(ring, rem),
    })
}

/// Remainder of [`divide`], with a faster in-place loop.
pub fn reduce<K: Field>(f: &Polynomial<K>, divisors: &[Polynomial<K>]) -> Polynomial<K> {
    let ring = f.ring();
    let k = ring.field();
    let lc_inv: Vec<K::Elem> = divisors.iter().map(|g| k.inv(g.lc()).unwrap()).collect();
    let mut rem: Vec<(Monomial, K::Elem)> = Vec::new();
    let mut p = f.clone();
    while !p.is_zero() {
        let mut moved = 0;
        let mut hit = None;
        for (idx, (m, _)) in p.terms.iter().enumerate() {
            if let Some(i) = divisors.iter().position(|g| g.lm().divides(m)) {
                hit = Some(i);
                moved = idx;
                break;
            }
        }
        match hit {
            None => {
                rem.append(&mut p.terms);
            }
            Some(i) => {
                rem.extend(p.terms.drain(..moved));
                let (m, c) = p.terms[0].clone();
                let g = &divisors[i];
                let t = g.lm().quotient_of(&m).unwrap();
                let coef = k.mul(&c, &lc_inv[i]);
                p = p.sub(&g.mul_term(&t, &coef));
            }
        }
    }
    Polynomial::from_sorted(ring, rem)
}

/// S-polynomial with respect to the ring's term order.
pub fn s_polynomial<K: Field>(f: &Polynomial<K>, g: &Polynomial<K>) -> Result<Polynomial<K>, PolyError> {
    f.check_ring(g)?;
    if f.is_zero() || g.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let k = f.field();
    let l = f.lm().lcm(g.lm());
    let a = f.mul_term(&f.lm().quotient_of(&l).unwrap(), &k.inv(f.lc()).unwrap());
    let b = g.mul_term(&g.lm().quotient_of(&l).unwrap(), &k.inv(g.lc()).unwrap());
    Ok(a.sub(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::SmallPrimeField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(names: &[&str], order: OrderKind) -> Ring<SmallPrimeField> {
        Ring::new(SmallPrimeField::new(13).unwrap(), names, order).unwrap()
    }

    /// DRL as a weight matrix: total degree, then -e_n, -e_{n-1}, ...
    fn reference_drl(a: &[u32], b: &[u32]) -> Ordering {
        let n = a.len();
        let mut rows: Vec<Vec<i64>> = vec![vec![1; n]];
        for i in (1..n).rev() {
            let mut r = vec![0i64; n];
            r[i] = -1;
            rows.push(r);
        }
        for r in rows {
            let wa: i64 = r.iter().zip(a).map(|(w, e)| w * *e as i64).sum();
            let wb: i64 = r.iter().zip(b).map(|(w, e)| w * *e as i64).sum();
            if wa != wb {
                return wa.cmp(&wb);
            }
        }
        Ordering::Equal
    }

    fn reference_lex(a: &[u32], b: &[u32]) -> Ordering {
        for (x, y) in a.iter().zip(b) {
            if x != y {
                return x.cmp(y);
            }
        }
        Ordering::Equal
    }

    #[test]
    fn orders_match_reference() {
        for n in 1..=4 {
            let mons = monomials_up_to(n, 4, OrderKind::Drl);
            for a in &mons {
                for b in &mons {
                    assert_eq!(a.cmp_in(b, OrderKind::Drl), reference_drl(a.exps(), b.exps()));
                    assert_eq!(a.cmp_in(b, OrderKind::Lex), reference_lex(a.exps(), b.exps()));
                }
            }
            for kind in [OrderKind::Drl, OrderKind::Lex] {
                for a in &mons {
                    for b in &mons {
                        for c in &mons {
                            if a.cmp_in(b, kind) == Ordering::Greater {
                                assert_eq!(a.mul(c).cmp_in(&b.mul(c), kind), Ordering::Greater);
                            }
                        }
                    }
                    assert_ne!(Monomial::one(n).cmp_in(a, kind), Ordering::Greater);
                }
            }
        }
    }

    #[test]
    fn degree_two_drl_sort() {
        let r = ring(&["x", "y", "z"], OrderKind::Drl);
        let mons = monomials_of_degree(3, 2, OrderKind::Drl);
        let mut by_ref = mons.clone();
        by_ref.sort_by(|a, b| reference_drl(b.exps(), a.exps()));
        assert_eq!(mons, by_ref);
        let xz = Monomial::new(vec![1, 0, 1]);
        let y2 = Monomial::new(vec![0, 2, 0]);
        assert_eq!(compare(&r, &xz, &y2).unwrap(), Ordering::Less);
        let lr = ring(&["x", "y"], OrderKind::Lex);
        assert_eq!(lr.cmp(&Monomial::new(vec![1, 0]), &Monomial::new(vec![0, 5])), Ordering::Greater);
        assert_eq!(r.cmp(&xz, &xz), Ordering::Equal);
        assert!(compare(&r, &Monomial::one(2), &xz).is_err());
    }

    #[test]
    fn arithmetic_examples() {
        let r = ring(&["x"], OrderKind::Drl);
        let x = r.var(0);
        let f = x.add(&r.one());
        assert!(f.add(&f.neg()).is_zero());
        let g = x.sub(&r.one());
        assert_eq!(f.mul(&g), r.parse("x^2 + 12").unwrap());
        let other = ring(&["x"], OrderKind::Lex);
        assert_eq!(f.try_add(&other.var(0)), Err(PolyError::RingMismatch));
    }

    fn random_poly(r: &Ring<SmallPrimeField>, rng: &mut ChaCha8Rng, maxdeg: u32, nterms: usize) -> Polynomial<SmallPrimeField> {
        let n = r.nvars();
        let terms: Vec<_> = (0..nterms)
            .map(|_| {
                let d = rng.gen_range(0..=maxdeg);
                let mut e = vec![0u32; n];
                for _ in 0..d {
                    e[rng.gen_range(0..n)] += 1;
                }
                (Monomial::new(e), rng.gen_range(0..13u64))
            })
            .collect();
        Polynomial::from_terms(r, terms)
    }

    #[test]
    fn multiplication_matches_schoolbook() {
        let r = ring(&["x", "y", "z"], OrderKind::Drl);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let f = random_poly(&r, &mut rng, 4, 8);
            let g = random_poly(&r, &mut rng, 4, 8);
            // dense coefficient cube oracle
            let idx = |e: &[u32]| (e[0] * 81 + e[1] * 9 + e[2]) as usize;
            let mut dense = vec![0u64; 729];
            for (ma, ca) in f.terms() {
                for (mb, cb) in g.terms() {
                    let e: Vec<u32> = ma.exps().iter().zip(mb.exps()).map(|(a, b)| a + b).collect();
                    dense[idx(&e)] = (dense[idx(&e)] + ca * cb) % 13;
                }
            }
            let h = f.mul(&g);
            for (m, c) in h.terms() {
                assert_eq!(dense[idx(m.exps())], *c);
            }
            assert_eq!(h.len(), dense.iter().filter(|c| **c != 0).count());
        }
    }

    #[test]
    fn leading_terms() {
        let r = ring(&["x1", "y"], OrderKind::Drl);
        let f = r.parse("y^3 - x1").unwrap();
        assert_eq!(f.lm(), &Monomial::new(vec![0, 3]));
        let l = ring(&["x", "y"], OrderKind::Lex);
        assert_eq!(l.parse("x + y^9").unwrap().lm(), &Monomial::new(vec![1, 0]));
        assert!(r.constant_u64(5).lm().is_one());
        assert_eq!(r.zero().leading_term().unwrap_err(), PolyError::ZeroPolynomial);
    }

    #[test]
    fn division_examples() {
        let l = ring(&["y", "x1"], OrderKind::Lex);
        let f = l.parse("y^9").unwrap();
        let g = l.parse("y^3 - x1").unwrap();
        let d = divide(&f, &[g.clone()]).unwrap();
        assert_eq!(d.remainder, l.parse("x1^3").unwrap());
        assert_eq!(d.quotients[0].mul(&g).add(&d.remainder), f);
        let one = l.one();
        let d = divide(&f, &[one]).unwrap();
        assert!(d.remainder.is_zero());
        assert_eq!(d.quotients[0], f);
        assert_eq!(divide(&f, &[l.zero()]).unwrap_err(), PolyError::ZeroDivisor);
    }

    #[test]
    fn division_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [OrderKind::Drl, OrderKind::Lex] {
            let r = ring(&["x", "y", "z"], kind);
            for _ in 0..40 {
                let f = random_poly(&r, &mut rng, 5, 10);
                let gs: Vec<_> = (0..3).map(|_| random_poly(&r, &mut rng, 3, 4)).filter(|g| !g.is_zero()).collect();
                let d = divide(&f, &gs).unwrap();
                let mut back = d.remainder.clone();
                for (q, g) in d.quotients.iter().zip(&gs) {
                    back = back.add(&q.mul(g));
                    if !q.is_zero() {
                        assert_ne!(r.cmp(&q.lm().mul(g.lm()), f.lm()), Ordering::Greater);
                    }
                }
                assert_eq!(back, f);
                for (m, _) in d.remainder.terms() {
                    assert!(gs.iter().all(|g| !g.lm().divides(m)));
                }
                assert_eq!(reduce(&f, &gs), d.remainder);
            }
        }
    }

    #[test]
    fn s_polynomials() {
        let r = ring(&["x1", "y"], OrderKind::Drl);
        let f = r.parse("y^3 + 3*y^2 + x1").unwrap();
        assert!(s_polynomial(&f, &f).unwrap().is_zero());
        let fe = r.parse("y^11 - y").unwrap();
        let s = s_polynomial(&f, &fe).unwrap();
        let y8 = Monomial::new(vec![0, 8]);
        let expect = f.mul_term(&y8, &1).sub(&fe);
        assert_eq!(s, expect);
        let a = r.parse("x1^2 + y").unwrap();
        let b = r.parse("y^3 + 1").unwrap();
        let s = s_polynomial(&a, &b).unwrap();
        assert!(divide(&s, &[a, b]).unwrap().remainder.is_zero());
    }

    #[test]
    fn homogenization() {
        let base = ring(&["x", "y"], OrderKind::Drl);
        let r = base.with_homogenizer("x0").unwrap();
        let f = r.parse("x^2 + y + 1").unwrap();
        assert_eq!(f.homogenize().unwrap(), r.parse("x^2 + y*x0 + x0^2").unwrap());
        let h = r.parse("x*y + y^2").unwrap();
        assert_eq!(h.homogenize().unwrap(), h);
        assert_eq!(base.one().homogenize().unwrap_err(), PolyError::NoHomogenizer);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let f = random_poly(&base, &mut rng, 4, 6).to_ring(&r).unwrap();
            if f.is_zero() {
                continue;
            }
            let fh = f.homogenize().unwrap();
            assert!(fh.is_homogeneous());
            assert_eq!(fh.dehomogenize().unwrap(), f);
            let mut pt = vec![0u64; 3];
            for _ in 0..5 {
                pt[0] = rng.gen_range(0..13);
                pt[1] = rng.gen_range(0..13);
                pt[2] = 1;
                assert_eq!(fh.evaluate(&pt), f.evaluate(&pt));
            }
            assert_eq!(f.top_component().unwrap(), fh.set_zero(2));
            let lm = fh.lm();
            assert_eq!(lm.exps()[2], 0);
            assert_eq!(lm, f.lm());
        }
    }

    #[test]
    fn top_component_examples() {
        let r = ring(&["x1", "y"], OrderKind::Drl);
        assert_eq!(r.parse("y^3 + y - 4").unwrap().top_component().unwrap(), r.parse("y^3").unwrap());
        let h = r.parse("x1^2 + x1*y").unwrap();
        assert_eq!(h.top_component().unwrap(), h);
    }

    #[test]
    fn render_parse_roundtrip() {
        let r = ring(&["xR2", "y"], OrderKind::Drl);
        let f = r.parse("xR2^3 + 3*xR2^2*y - 1 + 12*y").unwrap();
        assert_eq!(f.render(), "xR2^3 + 3*xR2^2*y - y - 1");
        assert_eq!(r.parse(&f.render()).unwrap(), f);
        assert_eq!(r.zero().render(), "0");
        assert!(r.parse("x^2").is_err());
        assert!(r.parse("y y").is_err());
    }

    #[test]
    fn substitution() {
        let r = ring(&["x", "y"], OrderKind::Drl);
        let f = r.parse("x^2*y + x + 1").unwrap();
        let g = f.substitute(0, &r.parse("y + 2").unwrap());
        assert_eq!(g, r.parse("y^3 + 4*y^2 + 4*y + y + 3").unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_poly() -> impl Strategy<Value = Vec<(Vec<u32>, u64)>> {
            prop::collection::vec((prop::collection::vec(0u32..4, 3), 0u64..13), 0..8)
        }

        proptest! {
            #[test]
            fn ring_laws(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
                let r = ring(&["x", "y", "z"], OrderKind::Drl);
                let mk = |t: Vec<(Vec<u32>, u64)>| Polynomial::from_terms(&r, t.into_iter().map(|(e, c)| (Monomial::new(e), c)));
                let (a, b, c) = (mk(a), mk(b), mk(c));
                prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
                prop_assert_eq!(a.mul(&b), b.mul(&a));
                prop_assert!(a.sub(&a).is_zero());
                prop_assert_eq!(r.parse(&a.render()).unwrap(), a);
            }
        }
    }
}
