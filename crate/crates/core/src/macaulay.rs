//! Macaulay matrices and Gaussian elimination over F_q.
//!
//! [`MacaulayMatrix`] is the explicit labelled matrix M_d / M_{<=d} with a
//! dense reduced row echelon form. [`RowSpace`] is the sparse elimination
//! engine used by the solving-degree and degree-fall scans; it grows the row
//! space degree by degree and yields the same row space as a fresh build.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::gf::Field;
use crate::mpoly::{monomials_of_degree, monomials_up_to, Monomial, OrderKind, Polynomial, Ring};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MacaulayError {
    #[error("homogeneous mode needs homogeneous generators (generator {0} is not)")]
    NotHomogeneous(usize),
    #[error("matrix is not in reduced row echelon form")]
    NotReduced,
    #[error("generators live in different rings")]
    RingMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Homogeneous,
    Inhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowLabel {
    pub generator: usize,
    pub multiplier: Monomial,
}

/// Degree-bounded coefficient matrix with labelled rows and columns.
#[derive(Debug, Clone)]
pub struct MacaulayMatrix<K: Field> {
    ring: Ring<K>,
    degree: u32,
    mode: Mode,
    columns: Vec<Monomial>,
    labels: Vec<Option<RowLabel>>,
    rows: Vec<Vec<K::Elem>>,
    reduced: bool,
}

fn multipliers(n: usize, lo: u32, hi: u32, kind: OrderKind) -> Vec<Monomial> {
    let mut out = Vec::new();
    for e in lo..=hi {
        out.extend(monomials_of_degree(n, e, kind));
    }
    out.sort_by(|a, b| b.cmp_in(a, kind));
    out
}

impl<K: Field> MacaulayMatrix<K> {
    /// Builds M_d (homogeneous) or M_{<=d} (inhomogeneous).
    pub fn build(ring: &Ring<K>, gens: &[Polynomial<K>], d: u32, mode: Mode) -> Result<Self, MacaulayError> {
        for (i, g) in gens.iter().enumerate() {
            if g.ring() != ring {
                return Err(MacaulayError::RingMismatch);
            }
            if mode == Mode::Homogeneous && !g.is_homogeneous() {
                return Err(MacaulayError::NotHomogeneous(i));
            }
        }
        let n = ring.nvars();
        let kind = ring.order();
        let columns = match mode {
            Mode::Homogeneous => monomials_of_degree(n, d, kind),
            Mode::Inhomogeneous => monomials_up_to(n, d, kind),
        };
        let index: HashMap<&Monomial, usize> = columns.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let k = ring.field();
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (gi, g) in gens.iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            let dg = g.degree();
            if dg > d {
                continue;
            }
            let lo = if mode == Mode::Homogeneous { d - dg } else { 0 };
            for s in multipliers(n, lo, d - dg, kind) {
                let mut row = vec![k.zero(); columns.len()];
                for (m, c) in g.terms() {
                    row[index[&m.mul(&s)]] = c.clone();
                }
                rows.push(row);
                labels.push(Some(RowLabel { generator: gi, multiplier: s }));
            }
        }
        Ok(MacaulayMatrix { ring: ring.clone(), degree: d, mode, columns, labels, rows, reduced: false })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }
    pub fn columns(&self) -> &[Monomial] {
        &self.columns
    }
    pub fn labels(&self) -> &[Option<RowLabel>] {
        &self.labels
    }
    pub fn rows(&self) -> &[Vec<K::Elem>] {
        &self.rows
    }
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }
    pub fn ncols(&self) -> usize {
        self.columns.len()
    }
    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// Matrix over the columns of `self` from explicit rows; used for tests and fixtures.
    pub fn from_rows(ring: &Ring<K>, columns: Vec<Monomial>, rows: Vec<Vec<K::Elem>>) -> Self {
        let labels = vec![None; rows.len()];
        MacaulayMatrix { ring: ring.clone(), degree: columns.iter().map(|m| m.degree()).max().unwrap_or(0), mode: Mode::Inhomogeneous, columns, labels, rows, reduced: false }
    }

    /// Reduced row echelon form: leftmost pivot column, first candidate row, zero rows dropped.
    pub fn rref(&self) -> Self {
        let k = self.ring.field();
        let mut rows = self.rows.clone();
        let ncols = self.columns.len();
        let mut rank = 0;
        for c in 0..ncols {
            let Some(p) = (rank..rows.len()).find(|&i| !k.is_zero(&rows[i][c])) else { continue };
            rows.swap(rank, p);
            let inv = k.inv(&rows[rank][c]).unwrap();
            for v in rows[rank].iter_mut() {
                *v = k.mul(v, &inv);
            }
            let pivot = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && !k.is_zero(&row[c]) {
                    let f = row[c].clone();
                    k.sub_scaled(row, &f, &pivot);
                }
            }
            rank += 1;
        }
        rows.truncate(rank);
        MacaulayMatrix {
            ring: self.ring.clone(),
            degree: self.degree,
            mode: self.mode,
            columns: self.columns.clone(),
            labels: vec![None; rank],
            rows,
            reduced: true,
        }
    }

    pub fn rank(&self) -> usize {
        if self.reduced {
            self.rows.len()
        } else {
            self.rref().rows.len()
        }
    }

    pub fn row_poly(&self, i: usize) -> Polynomial<K> {
        let k = self.ring.field();
        let terms = self.rows[i]
            .iter()
            .zip(&self.columns)
            .filter(|(c, _)| !k.is_zero(c))
            .map(|(c, m)| (m.clone(), c.clone()))
            .collect();
        Polynomial::from_sorted(&self.ring, terms)
    }

    /// Basis of the row space as polynomials with distinct leading monomials.
    pub fn row_space_polys(&self) -> Result<Vec<Polynomial<K>>, MacaulayError> {
        if !self.reduced {
            return Err(MacaulayError::NotReduced);
        }
        Ok((0..self.rows.len()).map(|i| self.row_poly(i)).collect())
    }

    /// Debug dump: header, row labels, then `row col value` triples.
    pub fn dump(&self) -> String {
        let k = self.ring.field();
        let mut s = String::new();
        let mode = match self.mode {
            Mode::Homogeneous => "homogeneous",
            Mode::Inhomogeneous => "inhomogeneous",
        };
        writeln!(s, "d={} mode={} rows={} cols={}", self.degree, mode, self.rows.len(), self.columns.len()).unwrap();
        for (i, l) in self.labels.iter().enumerate() {
            match l {
                Some(l) => writeln!(s, "row {} gen={} mult={:?}", i, l.generator, l.multiplier).unwrap(),
                None => writeln!(s, "row {} reduced", i).unwrap(),
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !k.is_zero(v) {
                    writeln!(s, "{} {} {}", i, j, k.to_biguint(v)).unwrap();
                }
            }
        }
        s
    }
}

/// Sparse row in echelon storage: (column id, value), leading entry first.
type SparseRow<E> = Vec<(u32, E)>;

/// Row echelon structure over column ids where a larger id is a larger monomial.
#[derive(Debug, Clone)]
pub struct Echelon<K: Field> {
    field: K,
    pivot_of: Vec<Option<u32>>,
    rows: Vec<SparseRow<K::Elem>>,
    acc: Vec<K::Elem>,
}

impl<K: Field> Echelon<K> {
    pub fn new(field: &K, ncols: usize) -> Self {
        Echelon { field: field.clone(), pivot_of: vec![None; ncols], rows: Vec::new(), acc: vec![field.zero(); ncols] }
    }

    pub fn grow(&mut self, ncols: usize) {
        if ncols > self.pivot_of.len() {
            self.pivot_of.resize(ncols, None);
            self.acc.resize(ncols, self.field.zero());
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseRow<K::Elem>] {
        &self.rows
    }

    pub fn pivot_cols(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().map(|r| r[0].0)
    }

    fn scatter(&mut self, row: &[(u32, K::Elem)]) {
        for (c, v) in row {
            self.acc[*c as usize] = v.clone();
        }
    }

    /// Reduces the accumulator from column `top` downwards. With `stop_early`
    /// it halts at the first nonzero column without a pivot and returns it.
    fn reduce_acc(&mut self, top: usize, stop_early: bool) -> Option<usize> {
        let k = &self.field;
        let mut first_free = None;
        for c in (0..=top).rev() {
            if k.is_zero(&self.acc[c]) {
                continue;
            }
            match self.pivot_of[c] {
                Some(p) => {
                    let coef = self.acc[c].clone();
                    for (cc, v) in &self.rows[p as usize] {
                        let cc = *cc as usize;
                        self.acc[cc] = k.sub(&self.acc[cc], &k.mul(&coef, v));
                    }
                }
                None => {
                    if first_free.is_none() {
                        first_free = Some(c);
                    }
                    if stop_early {
                        return first_free;
                    }
                }
            }
        }
        first_free
    }

    fn gather(&mut self, top: usize) -> SparseRow<K::Elem> {
        let k = &self.field;
        let mut out = Vec::new();
        for c in (0..=top).rev() {
            if !k.is_zero(&self.acc[c]) {
                out.push((c as u32, std::mem::replace(&mut self.acc[c], k.zero())));
            }
        }
        out
    }

    /// Inserts a row given with strictly descending column ids; returns true if the rank grew.
    pub fn insert(&mut self, row: SparseRow<K::Elem>) -> bool {
        if row.is_empty() {
            return false;
        }
        let lead = row[0].0 as usize;
        let k = self.field.clone();
        let new_row = if self.pivot_of[lead].is_none() {
            row
        } else {
            self.scatter(&row);
            match self.reduce_acc(lead, true) {
                None => {
                    return false;
                }
                Some(c) => {
                    let out = self.gather(c);
                    out
                }
            }
        };
        let inv = k.inv(&new_row[0].1).unwrap();
        let new_row: SparseRow<K::Elem> = if k.is_one(&inv) {
            new_row
        } else {
            new_row.into_iter().map(|(c, v)| (c, k.mul(&v, &inv))).collect()
        };
        self.pivot_of[new_row[0].0 as usize] = Some(self.rows.len() as u32);
        self.rows.push(new_row);
        true
    }

    /// True iff the row lies in the span.
    pub fn contains(&mut self, row: &[(u32, K::Elem)]) -> bool {
        if row.is_empty() {
            return true;
        }
        let top = row[0].0 as usize;
        self.scatter(row);
        let free = self.reduce_acc(top, false);
        let _ = self.gather(top);
        free.is_none()
    }

    /// Fully reduced rows (each pivot column is zero in every other row), sorted by descending pivot.
    pub fn reduced_rows(&mut self) -> Vec<SparseRow<K::Elem>> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| self.rows[i][0].0);
        for &i in &order {
            let row = self.rows[i].clone();
            let lead = row[0].0 as usize;
            self.scatter(&row);
            if lead > 0 {
                // reduce everything right of the pivot
                let piv = self.pivot_of[lead].take();
                self.reduce_acc(lead - 1, false);
                self.pivot_of[lead] = piv;
            }
            self.rows[i] = self.gather(lead);
        }
        let mut out: Vec<_> = self.rows.clone();
        out.sort_by(|a, b| b[0].0.cmp(&a[0].0));
        out
    }
}

/// Growing row space W_{F,d} of the Macaulay matrix M_{<=d}.
#[derive(Debug, Clone)]
pub struct RowSpace<K: Field> {
    ring: Ring<K>,
    gens: Vec<Polynomial<K>>,
    degree: Option<u32>,
    columns: Vec<Monomial>,
    col_id: HashMap<Monomial, u32>,
    ech: Echelon<K>,
    rows_built: usize,
}

impl<K: Field> RowSpace<K> {
    pub fn new(ring: &Ring<K>, gens: &[Polynomial<K>]) -> Self {
        RowSpace {
            ring: ring.clone(),
            gens: gens.iter().filter(|g| !g.is_zero()).cloned().collect(),
            degree: None,
            columns: Vec::new(),
            col_id: HashMap::new(),
            ech: Echelon::new(ring.field(), 0),
            rows_built: 0,
        }
    }

    pub fn ring(&self) -> &Ring<K> {
        &self.ring
    }

    pub fn degree(&self) -> Option<u32> {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.ech.rank()
    }

    pub fn rows_built(&self) -> usize {
        self.rows_built
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    fn rebuild_columns(&mut self, d: u32) {
        let n = self.ring.nvars();
        let kind = self.ring.order();
        let mut cols = monomials_up_to(n, d, kind);
        cols.reverse();
        self.col_id = cols.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
        self.columns = cols;
        self.ech = Echelon::new(self.ring.field(), self.columns.len());
        self.rows_built = 0;
    }

    fn add_degree_columns(&mut self, e: u32) {
        let n = self.ring.nvars();
        let mut block = monomials_of_degree(n, e, OrderKind::Drl);
        block.reverse();
        for m in block {
            self.col_id.insert(m.clone(), self.columns.len() as u32);
            self.columns.push(m);
        }
        self.ech.grow(self.columns.len());
    }

    fn sparse_row(&self, g: &Polynomial<K>, s: &Monomial) -> SparseRow<K::Elem> {
        g.terms().iter().map(|(m, c)| (self.col_id[&m.mul(s)], c.clone())).collect()
    }

    fn add_rows(&mut self, lo: u32, hi: u32) {
        let n = self.ring.nvars();
        let kind = self.ring.order();
        let gens = self.gens.clone();
        for g in &gens {
            let dg = g.degree();
            if dg > hi {
                continue;
            }
            let from = lo.saturating_sub(dg);
            if from > hi - dg {
                continue;
            }
            for s in multipliers(n, from, hi - dg, kind) {
                let row = self.sparse_row(g, &s);
                self.rows_built += 1;
                self.ech.insert(row);
            }
        }
    }

    /// Extends the row space to W_{F,d}. Under DRL previous work is reused;
    /// under other orders the space is rebuilt.
    pub fn extend_to(&mut self, d: u32) {
        let drl = self.ring.order() == OrderKind::Drl;
        match self.degree {
            Some(cur) if cur >= d && drl => {}
            Some(cur) if drl => {
                for e in cur + 1..=d {
                    self.add_degree_columns(e);
                }
                self.add_rows(cur + 1, d);
            }
            _ => {
                self.rebuild_columns(d);
                self.add_rows(0, d);
            }
        }
        self.degree = Some(d);
    }

    /// True iff `f` lies in W_{F,d} for the current degree.
    pub fn contains(&mut self, f: &Polynomial<K>) -> bool {
        if f.is_zero() {
            return true;
        }
        let Some(d) = self.degree else { return false };
        if f.degree() > d {
            return false;
        }
        let f = f.to_ring(&self.ring).expect("ring mismatch");
        let row: SparseRow<K::Elem> = f.terms().iter().map(|(m, c)| (self.col_id[m], c.clone())).collect();
        self.ech.contains(&row)
    }

    /// Number of basis rows whose leading monomial has degree at most `e`,
    /// i.e. dim(W_{F,d} ∩ P_{<=e}) for a degree-compatible order.
    pub fn dim_below(&self, e: u32) -> usize {
        self.ech.pivot_cols().filter(|c| self.columns[*c as usize].degree() <= e).count()
    }

    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.ech.pivot_cols().map(|c| self.columns[c as usize].clone()).collect()
    }

    fn row_to_poly(&self, row: &[(u32, K::Elem)]) -> Polynomial<K> {
        let terms = row.iter().map(|(c, v)| (self.columns[*c as usize].clone(), v.clone())).collect();
        Polynomial::from_sorted(&self.ring, terms)
    }

    /// Triangular basis of the row space (distinct leading monomials).
    pub fn basis(&self) -> Vec<Polynomial<K>> {
        let mut v: Vec<_> = self.ech.rows().iter().map(|r| self.row_to_poly(r)).collect();
        v.sort_by(|a, b| self.ring.cmp(b.lm(), a.lm()));
        v
    }

    /// Reduced row echelon basis, descending by leading monomial.
    pub fn reduced_basis(&mut self) -> Vec<Polynomial<K>> {
        let rows = self.ech.reduced_rows();
        rows.iter().map(|r| self.row_to_poly(r)).collect()
    }

    /// Basis rows whose leading monomials are minimal under divisibility.
    pub fn minimal_basis(&self) -> Vec<Polynomial<K>> {
        let basis = self.basis();
        let lms: Vec<Monomial> = basis.iter().map(|p| p.lm().clone()).collect();
        basis
            .into_iter()
            .enumerate()
            .filter(|(i, p)| !lms.iter().enumerate().any(|(j, m)| j != *i && m.divides(p.lm())))
            .map(|(_, p)| p)
            .collect()
    }
}
