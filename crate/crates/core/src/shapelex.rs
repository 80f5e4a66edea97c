//! LEX shape bases of keyed iterated systems, univariate root extraction
//! and key/preimage recovery.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::Arc;

use serde::Serialize;

use crate::mpoly::{reduce, OrderKind, PolyError};
use crate::systems::{eliminate_linear, PolySystem, Role, SystemError};
use crate::{Poly, PolyRing};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("polynomial {index} is not of keyed iterated shape: {reason}")]
    NotIterated { index: usize, reason: String },
    #[error("degenerate round polynomial {0}: its image is constant")]
    Degenerate(usize),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("degree budget {0} exceeded")]
    Budget(usize),
    #[error("cancelled")]
    Cancelled,
    #[error("no F_q root: the input pair is inconsistent with the cipher")]
    NoRoot,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Cooperative cancellation flag shared between threads.
#[derive(Debug, Clone, Default)]
pub struct Cancel(Arc<AtomicBool>);

impl Cancel {
    pub fn cancel(&self) {
        self.0.store(true, AtomicOrdering::Relaxed);
    }
    pub fn is_cancelled(&self) -> bool {
        self.0.load(AtomicOrdering::Relaxed)
    }
}

#[derive(Debug, Clone)]
pub struct ShapeOptions {
    /// Largest univariate degree the substitution may produce.
    pub degree_budget: usize,
    pub cancel: Option<Cancel>,
}

impl Default for ShapeOptions {
    fn default() -> Self {
        ShapeOptions { degree_budget: 1 << 20, cancel: None }
    }
}

impl ShapeOptions {
    fn check(&self, deg: usize) -> Result<(), ShapeError> {
        if self.cancel.as_ref().is_some_and(|c| c.is_cancelled()) {
            return Err(ShapeError::Cancelled);
        }
        if deg > self.degree_budget {
            return Err(ShapeError::Budget(self.degree_budget));
        }
        Ok(())
    }
}

/// Dense univariate polynomial over F_q, coefficients from degree 0 upward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    q: u64,
    c: Vec<u64>,
}

fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn inv(a: u64, q: u64) -> u64 {
    crate::systems::linalg::inv_mod(a, q).expect("nonzero element")
}

impl UniPoly {
    pub fn new(q: u64, mut c: Vec<u64>) -> Self {
        for v in c.iter_mut() {
            *v %= q;
        }
        let mut p = UniPoly { q, c };
        p.trim();
        p
    }
    pub fn zero(q: u64) -> Self {
        UniPoly { q, c: vec![] }
    }
    pub fn constant(q: u64, v: u64) -> Self {
        UniPoly::new(q, vec![v])
    }
    /// The monomial y^e.
    pub fn monomial(q: u64, e: usize) -> Self {
        let mut c = vec![0; e + 1];
        c[e] = 1 % q;
        UniPoly::new(q, c)
    }
    fn trim(&mut self) {
        while self.c.last() == Some(&0) {
            self.c.pop();
        }
    }
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }
    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }
    /// Degree; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }
    pub fn lc(&self) -> u64 {
        self.c.last().copied().unwrap_or(0)
    }
    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let c = (0..n)
            .map(|i| {
                let a = self.c.get(i).copied().unwrap_or(0);
                let b = o.c.get(i).copied().unwrap_or(0);
                (a + b) % self.q
            })
            .collect();
        UniPoly::new(self.q, c)
    }
    pub fn neg(&self) -> Self {
        UniPoly::new(self.q, self.c.iter().map(|v| (self.q - v) % self.q).collect())
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn scale(&self, s: u64) -> Self {
        UniPoly::new(self.q, self.c.iter().map(|v| mulmod(*v, s % self.q, self.q)).collect())
    }
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return UniPoly::zero(self.q);
        }
        let q = self.q as u128;
        let mut acc = vec![0u128; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                acc[i + j] = (acc[i + j] + *a as u128 * *b as u128) % q;
            }
        }
        UniPoly::new(self.q, acc.into_iter().map(|v| v as u64).collect())
    }
    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut out = UniPoly::constant(self.q, 1);
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(inv(self.lc(), self.q))
    }
    /// Quotient and remainder; panics on a zero divisor.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let q = self.q;
        let li = inv(d.lc(), q);
        let mut r = self.c.clone();
        if r.len() <= dd {
            return (UniPoly::zero(q), self.clone());
        }
        let mut quo = vec![0u64; r.len() - dd];
        for i in (dd..r.len()).rev() {
            let t = mulmod(r[i], li, q);
            if t == 0 {
                continue;
            }
            quo[i - dd] = t;
            for (j, dj) in d.c.iter().enumerate() {
                let k = i - dd + j;
                r[k] = (r[k] + q - mulmod(t, *dj, q)) % q;
            }
        }
        r.truncate(dd);
        (UniPoly::new(q, quo), UniPoly::new(q, r))
    }
    pub fn rem(&self, d: &Self) -> Self {
        self.divrem(d).1
    }
    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
    /// base^e mod m by square-and-multiply.
    pub fn powmod(&self, mut e: u64, m: &Self) -> Self {
        let mut base = self.rem(m);
        let mut out = UniPoly::constant(self.q, 1).rem(m);
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base).rem(m);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).rem(m);
            }
        }
        out
    }
    pub fn eval(&self, x: u64) -> u64 {
        self.c.iter().rev().fold(0, |acc, c| (mulmod(acc, x, self.q) + c) % self.q)
    }
    pub fn derivative(&self) -> Self {
        UniPoly::new(self.q, self.c.iter().enumerate().skip(1).map(|(i, c)| mulmod(*c, i as u64 % self.q, self.q)).collect())
    }
    /// Embeds the polynomial into `ring` as a polynomial in variable `var`.
    pub fn to_poly(&self, ring: &PolyRing, var: usize) -> Poly {
        let y = ring.var(var);
        let mut out = ring.zero();
        let mut pw = ring.one();
        for c in &self.c {
            if *c != 0 {
                out = out.add(&pw.scale(c));
            }
            pw = pw.mul(&y);
        }
        out
    }
    /// Reads a polynomial whose support lies in `var` only.
    pub fn from_poly(f: &Poly, var: usize) -> Option<Self> {
        let q = f.ring().field().p();
        let mut c = vec![0u64; f.degree_in(var) as usize + 1];
        for (m, v) in f.terms() {
            let e = m.exps();
            if e.iter().enumerate().any(|(i, x)| i != var && *x != 0) {
                return None;
            }
            c[e[var] as usize] = *v;
        }
        Some(UniPoly::new(q, c))
    }
    pub fn render(&self, name: &str) -> String {
        let ring = PolyRing::new(crate::Fq::new(self.q).expect("prime"), &[name], OrderKind::Drl).expect("ring");
        self.to_poly(&ring, 0).render()
    }
}

/// gcd(f, y^q - y), computed through y^q mod f.
pub fn field_gcd(f: &UniPoly) -> UniPoly {
    let q = f.q();
    if f.is_zero() {
        return UniPoly::monomial(q, q as usize).sub(&UniPoly::monomial(q, 1));
    }
    let y = UniPoly::monomial(q, 1);
    let yq = y.powmod(q, f);
    f.gcd(&yq.sub(&y.rem(f)))
}

/// The F_q-rational roots of f, ascending.
pub fn field_gcd_roots(f: &UniPoly) -> Vec<u64> {
    let g = field_gcd(f);
    if g.degree().unwrap_or(0) == 0 {
        return vec![];
    }
    (0..f.q()).filter(|x| g.eval(*x) == 0).collect()
}

/// LEX shape basis x_v - g_v(y), ..., f_n(y), where y is the last ring variable.
#[derive(Debug, Clone)]
pub struct ShapeBasis {
    pub ring: PolyRing,
    /// Index of the univariate variable.
    pub y: usize,
    /// (variable, g_v) in discovery order.
    pub linear_part: Vec<(usize, UniPoly)>,
    /// The first univariate constraint met.
    pub univariate: UniPoly,
    /// Further univariate constraints, in discovery order.
    pub extra: Vec<UniPoly>,
}

impl ShapeBasis {
    pub fn q(&self) -> u64 {
        self.univariate.q()
    }

    pub fn lex_ring(&self) -> PolyRing {
        self.ring.with_order(OrderKind::Lex)
    }

    /// Degrees of the g_v followed by the degree of the univariate polynomial.
    pub fn degrees(&self) -> Vec<usize> {
        self.linear_part.iter().map(|(_, g)| g.degree().unwrap_or(0)).chain([self.univariate.degree().unwrap_or(0)]).collect()
    }

    /// The LEX polynomials x_v - g_v(y) and the univariate polynomial.
    pub fn polys(&self) -> Vec<Poly> {
        let ring = self.lex_ring();
        let mut out: Vec<Poly> = self.linear_part.iter().map(|(v, g)| ring.var(*v).sub(&g.to_poly(&ring, self.y))).collect();
        out.push(self.univariate.to_poly(&ring, self.y));
        out
    }

    /// Pairwise coprime leading monomials under LEX, hence a LEX Groebner basis.
    pub fn is_coprime_lex_basis(&self) -> bool {
        let ps = self.polys();
        let lms: Vec<_> = ps.iter().filter(|p| !p.is_zero()).map(|p| p.lm().clone()).collect();
        lms.iter().enumerate().all(|(i, a)| lms[i + 1..].iter().all(|b| a.is_coprime(b)))
    }

    /// gcd of every univariate constraint.
    pub fn combined_univariate(&self) -> UniPoly {
        self.extra.iter().fold(self.univariate.clone(), |a, b| a.gcd(b))
    }

    /// Univariate image of f: every x_v replaced by g_v(y).
    pub fn image(&self, f: &Poly) -> Result<UniPoly, ShapeError> {
        let known: BTreeMap<usize, UniPoly> = self.linear_part.iter().cloned().collect();
        let (img, lin) = substitute(f, &known, self.y, None, &ShapeOptions::default())?;
        if lin.is_some() {
            return Err(ShapeError::Hypothesis("polynomial involves a variable outside the shape basis".into()));
        }
        Ok(img)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names = self.ring.names();
        let y = &names[self.y];
        serde_json::json!({
            "variable": y,
            "linear_part": self.linear_part.iter().map(|(v, g)| serde_json::json!({
                "variable": names[*v], "degree": g.degree(), "poly": g.render(y)
            })).collect::<Vec<_>>(),
            "univariate_degree": self.univariate.degree(),
            "extra_degrees": self.extra.iter().map(|u| u.degree()).collect::<Vec<_>>(),
        })
    }
}

/// Replaces known variables by univariate images. Returns the image of the
/// known part and, if exactly one unknown variable occurs linearly with a
/// constant coefficient, that variable with its coefficient.
fn substitute(
    f: &Poly,
    known: &BTreeMap<usize, UniPoly>,
    y: usize,
    allow_new: Option<usize>,
    opts: &ShapeOptions,
) -> Result<(UniPoly, Option<(usize, u64)>), ShapeError> {
    let q = f.ring().field().p();
    let mut powers: BTreeMap<(usize, u32), UniPoly> = BTreeMap::new();
    let mut img = UniPoly::zero(q);
    let mut lin: Option<(usize, u64)> = None;
    for (m, c) in f.terms() {
        let e = m.exps();
        if let Some(v) = allow_new {
            if e[v] > 0 {
                if e[v] != 1 || m.degree() != 1 {
                    return Err(ShapeError::Hypothesis(format!("new variable {} does not occur linearly with constant coefficient", f.ring().names()[v])));
                }
                lin = Some((v, *c));
                continue;
            }
        }
        let mut t = UniPoly::constant(q, *c);
        for (var, &ex) in e.iter().enumerate() {
            if ex == 0 {
                continue;
            }
            let p = if var == y {
                UniPoly::monomial(q, ex as usize)
            } else {
                let g = known.get(&var).ok_or_else(|| ShapeError::Hypothesis(format!("variable {} is not yet determined", f.ring().names()[var])))?;
                opts.check(g.degree().unwrap_or(0) * ex as usize)?;
                powers.entry((var, ex)).or_insert_with(|| g.pow(ex)).clone()
            };
            opts.check(t.degree().unwrap_or(0) + p.degree().unwrap_or(0))?;
            t = t.mul(&p);
        }
        img = img.add(&t);
    }
    Ok((img, lin))
}

/// Runs the triangular substitution over `order` (indices into sys.polys):
/// each polynomial either introduces one new variable linearly or becomes a
/// univariate constraint in the last ring variable.
pub fn triangular_shape(sys: &PolySystem, order: &[usize], opts: &ShapeOptions) -> Result<ShapeBasis, ShapeError> {
    let ring = &sys.ring;
    let n = ring.nvars();
    let y = n - 1;
    let q = sys.q();
    let mut known: BTreeMap<usize, UniPoly> = BTreeMap::new();
    let mut linear_part = Vec::new();
    let mut unis: Vec<UniPoly> = Vec::new();
    for &i in order {
        let f = &sys.polys[i];
        let unknown: Vec<usize> = f.support_vars().into_iter().filter(|v| *v != y && !known.contains_key(v)).collect();
        match unknown.len() {
            0 => {
                let (img, _) = substitute(f, &known, y, None, opts)?;
                if img.degree().unwrap_or(0) == 0 {
                    if img.is_zero() {
                        continue;
                    }
                    return Err(ShapeError::Degenerate(i));
                }
                unis.push(img.scale(q - 1));
            }
            1 => {
                let v = unknown[0];
                let (img, lin) = substitute(f, &known, y, Some(v), opts)?;
                let (_, c) = lin.ok_or_else(|| ShapeError::NotIterated { index: i, reason: "new variable vanished".into() })?;
                // f = c v + img  =>  v = -img / c
                let g = img.scale(q - inv(c, q));
                known.insert(v, g.clone());
                linear_part.push((v, g));
            }
            _ => {
                return Err(ShapeError::NotIterated { index: i, reason: format!("{} undetermined variables", unknown.len()) });
            }
        }
    }
    if known.len() != n - 1 {
        return Err(ShapeError::Hypothesis("some state variable is never determined".into()));
    }
    let mut it = unis.into_iter();
    let univariate = it.next().ok_or_else(|| ShapeError::Hypothesis("no univariate constraint".into()))?;
    Ok(ShapeBasis { ring: ring.clone(), y, linear_part, univariate, extra: it.collect() })
}

/// Shape Lemma I on a univariate keyed iterated system f_1, ..., f_n.
pub fn lex_gb_iterated(sys: &PolySystem, opts: &ShapeOptions) -> Result<ShapeBasis, ShapeError> {
    let shape = triangular_shape(sys, &(0..sys.polys.len()).collect::<Vec<_>>(), opts)?;
    for (k, (_, g)) in shape.linear_part.iter().enumerate() {
        if g.degree().unwrap_or(0) == 0 {
            return Err(ShapeError::Degenerate(k));
        }
    }
    debug_assert!(shape.is_coprime_lex_basis());
    Ok(shape)
}

fn check_feistel(sys: &PolySystem) -> Result<(), ShapeError> {
    if sys.provenance.builder != "feistel" {
        return Err(ShapeError::Hypothesis(format!("expected a Feistel system, got {}", sys.provenance.builder)));
    }
    let r = sys.polys.len() / 2;
    let ring = &sys.ring;
    for i in 2..=r {
        let v = ring.index_of(&format!("xL{}", i - 1)).expect("feistel variable");
        let f = &sys.polys[2 * (i - 1)];
        let d = f.degree();
        if f.degree_in(v) != d || d < 2 {
            return Err(ShapeError::Hypothesis(format!("f_L{} lacks the monomial xL{}^{}", i, i - 1, d)));
        }
    }
    Ok(())
}

/// F \ {f_{R,n}} with every affine equation eliminated: the downsized DRL basis.
pub fn downsized_drl_feistel(sys: &PolySystem) -> Result<PolySystem, ShapeError> {
    check_feistel(sys)?;
    let mut t = sys.clone();
    t.polys.pop();
    Ok(eliminate_linear(&t)?.note("f_R,n dropped"))
}

/// LEX shape basis of F \ {f_{R,n}}.
pub fn lex_gb_feistel(sys: &PolySystem, opts: &ShapeOptions) -> Result<ShapeBasis, ShapeError> {
    check_feistel(sys)?;
    let order: Vec<usize> = (0..sys.polys.len() - 1).collect();
    triangular_shape(sys, &order, opts)
}

/// Shape Lemma II: iterated generators g_1(y) - x_1, g_2(x_1, y) - x_2, ...
/// obtained by DRL reduction modulo the previously constructed generators.
pub fn iterated_from_lex(shape: &ShapeBasis) -> Result<Vec<Poly>, ShapeError> {
    let degs = shape.degrees();
    if degs.windows(2).any(|w| w[0] > w[1]) || degs.first() == Some(&0) {
        return Err(ShapeError::Hypothesis(format!("degrees {:?} are not weakly increasing from 1", degs)));
    }
    let ring = shape.ring.with_order(OrderKind::Drl);
    let mut out: Vec<Poly> = Vec::new();
    for f in shape.polys() {
        let f = f.to_ring(&ring)?.neg();
        let divisors: Vec<Poly> = out.iter().rev().cloned().collect();
        let g = if divisors.is_empty() { f } else { reduce(&f, &divisors) };
        if g.is_zero() {
            return Err(ShapeError::Hypothesis("a generator reduced to zero".into()));
        }
        out.push(g.monic());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attack {
    FieldEq,
    TwoPlaintext,
    Feistel,
    Hash,
}

impl Attack {
    pub fn of(sys: &PolySystem) -> Option<Attack> {
        match sys.provenance.builder.as_str() {
            "mimc" => Some(Attack::FieldEq),
            "two_plaintext" => Some(Attack::TwoPlaintext),
            "feistel" => Some(Attack::Feistel),
            "hash_preimage" => Some(Attack::Hash),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Recovery {
    pub attack: Attack,
    /// Values of the key (or, for the hash attack, the message) variable.
    pub keys: Vec<u64>,
    /// Full solution points in ring variable order.
    pub solutions: Vec<Vec<u64>>,
    pub univariate_degrees: Vec<usize>,
    pub gcd_degree: usize,
}

/// Recovers every F_q-rational solution through the shape basis.
pub fn recover_key(sys: &PolySystem, opts: &ShapeOptions) -> Result<Recovery, ShapeError> {
    let attack = Attack::of(sys).ok_or_else(|| ShapeError::Hypothesis(format!("no attack for builder {}", sys.provenance.builder)))?;
    let order: Vec<usize> = match attack {
        Attack::Hash => (0..sys.polys.len()).rev().collect(),
        _ => (0..sys.polys.len()).collect(),
    };
    let shape = triangular_shape(sys, &order, opts)?;
    let g = shape.combined_univariate();
    let fg = field_gcd(&g);
    let roots = field_gcd_roots(&g);
    let target = match attack {
        Attack::Hash => sys.roles.iter().position(|r| *r == Role::PlaintextUnknown),
        _ => sys.roles.iter().position(|r| matches!(r, Role::Key { .. })),
    }
    .expect("target variable");
    let mut solutions = Vec::new();
    for a in roots {
        let mut pt = vec![0u64; sys.nvars()];
        pt[shape.y] = a;
        for (v, gv) in &shape.linear_part {
            pt[*v] = gv.eval(a);
        }
        if sys.vanishes_at(&pt) {
            solutions.push(pt);
        }
    }
    let mut keys: Vec<u64> = solutions.iter().map(|p| p[target]).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut univariate_degrees = vec![shape.univariate.degree().unwrap_or(0)];
    univariate_degrees.extend(shape.extra.iter().map(|u| u.degree().unwrap_or(0)));
    Ok(Recovery { attack, keys, solutions, univariate_degrees, gcd_degree: fg.degree().unwrap_or(0) })
}
