//! Degree falls: membership degrees, last fall degrees and the lower-bound
//! witness constructions.

use serde::Serialize;

use crate::groebner::{buchberger, GbError, GroebnerBasis};
use crate::macaulay::RowSpace;
use crate::mpoly::{s_polynomial, Monomial, PolyError};
use crate::shapelex::{field_gcd_roots, lex_gb_iterated, triangular_shape, ShapeError, ShapeOptions};
use crate::systems::{append_field_equations, eliminate_linear, PolySystem, SystemError};
use crate::{Fq, Poly, PolyRing};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DegfallError {
    #[error("polynomial is not in the ideal")]
    NotInIdeal,
    #[error("degree budget {0} exhausted")]
    Exhausted(u32),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Gb(#[from] GbError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    MimcFieldEq,
    MimcFieldEqRemainder,
    Feistel,
    Hash,
    Conjecture,
    GenericScan,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeFallRecord {
    pub construction: Construction,
    /// Canonical rendering of the witness.
    pub witness: String,
    #[serde(skip)]
    pub witness_poly: Poly,
    pub deg_witness: u32,
    /// Least d with the witness in W_{F,d}.
    pub d_f: u32,
    pub predicted: Option<u32>,
    pub confirmed: bool,
}

impl DegreeFallRecord {
    fn new(construction: Construction, w: Poly, d_f: u32, predicted: Option<u32>) -> Self {
        DegreeFallRecord {
            construction,
            witness: w.render(),
            deg_witness: w.degree(),
            witness_poly: w,
            d_f,
            confirmed: predicted.is_some_and(|p| p == d_f),
            predicted,
        }
    }

    pub fn is_fall(&self) -> bool {
        self.d_f > self.deg_witness
    }
}

/// Least d <= d_max with f in the row space of M_{<=d}. When `gb` is given,
/// membership in the ideal is checked first.
pub fn membership_degree(f: &Poly, gens: &[Poly], d_max: u32, gb: Option<&GroebnerBasis<Fq>>) -> Result<u32, DegfallError> {
    if f.is_zero() {
        return Ok(0);
    }
    if let Some(gb) = gb {
        if !gb.contains(f) {
            return Err(DegfallError::NotInIdeal);
        }
    }
    let mut rs = RowSpace::new(f.ring(), gens);
    for d in f.degree()..=d_max {
        rs.extend_to(d);
        if rs.contains(f) {
            return Ok(d);
        }
    }
    Err(DegfallError::Exhausted(d_max))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LastFall {
    /// Largest d in the scan with W_d ∩ P_{<=d-1} != W_{d-1}.
    pub last: Option<u32>,
    pub falls: Vec<u32>,
    pub scanned_to: u32,
}

/// Scans d = 1..=d_max comparing dim(W_d ∩ P_{<=d-1}) with dim W_{d-1}.
pub fn last_fall_degree(ring: &PolyRing, gens: &[Poly], d_max: u32) -> LastFall {
    let mut rs = RowSpace::new(ring, gens);
    let mut prev = 0usize;
    let mut falls = Vec::new();
    for d in 1..=d_max {
        rs.extend_to(d);
        if rs.dim_below(d - 1) > prev {
            falls.push(d);
        }
        prev = rs.dim();
    }
    LastFall { last: falls.last().copied(), falls, scanned_to: d_max }
}

/// The scan cap: Macaulay bound of the generators plus two.
pub fn default_scan_cap(sys: &PolySystem) -> u32 {
    crate::complexity::macaulay_bound(&sys.degrees(), sys.nvars()).unwrap_or(1) + 2
}

fn field_eq(ring: &PolyRing, v: usize, q: u64) -> Poly {
    let x = ring.var(v);
    x.pow(q as u32).sub(&x)
}

fn split_field_eq(sys: &PolySystem) -> (Vec<Poly>, Poly) {
    let y = sys.nvars() - 1;
    let fe = field_eq(&sys.ring, y, sys.q());
    let polys: Vec<Poly> = sys.polys.iter().filter(|p| **p != fe).cloned().collect();
    (polys, fe)
}

fn pure_power_degrees(polys: &[Poly], n: usize) -> Result<Vec<u32>, DegfallError> {
    let mut d = vec![0u32; n];
    for p in polys {
        let v = p.lm().pure_power_var().ok_or_else(|| DegfallError::Hypothesis(format!("leading monomial of {} is not a pure power", p.render())))?;
        d[v] = p.degree();
    }
    Ok(d)
}

fn monomial_poly(ring: &PolyRing, exps: Vec<u32>) -> Poly {
    ring.monomial(Monomial::new(exps), 1)
}

fn mimc_checks(polys: &[Poly], fe: &Poly, sys: &PolySystem) -> Result<(Vec<u32>, usize), DegfallError> {
    let q = sys.q() as u32;
    let n = polys.len();
    let d: Vec<u32> = polys.iter().map(|p| p.degree()).collect();
    if d.iter().any(|x| *x < 2) || d[0] > q {
        return Err(DegfallError::Hypothesis("degrees must be at least 2 and d_1 <= q".into()));
    }
    for i in 1..n {
        let m = Monomial::var(sys.nvars(), i - 1, d[i]);
        if polys[i].coefficient(&m) == 0 {
            return Err(DegfallError::Hypothesis(format!("f_{} lacks x_{}^{}", i + 1, i, d[i])));
        }
    }
    let gb = buchberger(&sys.ring, polys, 100_000)?;
    if gb.contains(fe) {
        return Err(DegfallError::Hypothesis("the field equation lies in the ideal".into()));
    }
    let mut base = sys.clone();
    base.polys = polys.to_vec();
    let shape = lex_gb_iterated(&base, &ShapeOptions::default())?;
    let roots = field_gcd_roots(&shape.univariate).len();
    Ok((d, roots))
}

/// s = x^γ S(f_1, y^q - y) with x^γ = Π x_i^{d_{i+1}-1}; predicted fall at q + Σ_{i>=2}(d_i - 1).
pub fn witness_mimc_field_eq(sys: &PolySystem) -> Result<DegreeFallRecord, DegfallError> {
    let (polys, fe) = split_field_eq(sys);
    let (d, roots) = mimc_checks(&polys, &fe, sys)?;
    if roots >= d[0] as usize {
        return Err(DegfallError::Hypothesis(format!("the univariate polynomial has {} roots in F_q, not fewer than {}", roots, d[0])));
    }
    let n = polys.len();
    let mut e = vec![0u32; sys.nvars()];
    for i in 1..n {
        e[i - 1] = d[i] - 1;
    }
    let s = monomial_poly(&sys.ring, e).mul(&s_polynomial(&polys[0], &fe)?);
    let predicted = sys.q() as u32 + d[1..].iter().map(|x| x - 1).sum::<u32>();
    let mut gens = polys.clone();
    gens.push(fe);
    let d_f = membership_degree(&s, &gens, predicted + 2, None)?;
    Ok(DegreeFallRecord::new(Construction::MimcFieldEq, s, d_f, Some(predicted)))
}

/// Variant with r_y = NF(y^q - y) in place of the field equation.
pub fn witness_mimc_remainder(sys: &PolySystem) -> Result<DegreeFallRecord, DegfallError> {
    let (polys, fe) = split_field_eq(sys);
    let (d, _) = mimc_checks(&polys, &fe, sys)?;
    let n = polys.len();
    let nv = sys.nvars();
    let y = nv - 1;
    let gb = buchberger(&sys.ring, &polys, 100_000)?;
    let ry = gb.normal_form(&fe);
    let top = ry.top_component()?;
    if top.len() != 1 {
        return Err(DegfallError::Hypothesis("top component of r_y is not a monomial".into()));
    }
    let m = top.lm().exps().to_vec();
    if m[y] != d[0] - 1 {
        return Err(DegfallError::Hypothesis("y^{d_1 - 1} does not exactly divide the top of r_y".into()));
    }
    // top = y^{d_1-1} Π_{i<=k} x_i^{d_{i+1}-1}
    let k = (0..n - 1).take_while(|i| m[*i] == d[i + 1] - 1).count();
    if k > n.saturating_sub(2) || (k..n - 1).any(|i| m[i] != 0) {
        return Err(DegfallError::Hypothesis("top component of r_y has an unexpected shape".into()));
    }
    let j = k + 1;
    let mut base = sys.clone();
    base.polys = polys.clone();
    let shape = lex_gb_iterated(&base, &ShapeOptions::default())?;
    let g = field_gcd_roots(&shape.univariate).len();
    let prod_j: u32 = d[..j].iter().product();
    if g + 1 >= prod_j as usize {
        return Err(DegfallError::Hypothesis(format!("gcd degree {} is not below {}", g, prod_j - 1)));
    }
    let mut e = vec![0u32; nv];
    for i in j..n {
        e[i - 1] = d[i] - 1;
    }
    let s = monomial_poly(&sys.ring, e).mul(&s_polynomial(&polys[0], &ry)?);
    let predicted = ry.degree() + d[j..].iter().map(|x| x - 1).sum::<u32>() + 1;
    let mut gens = polys.clone();
    gens.push(ry);
    let d_f = membership_degree(&s, &gens, predicted + 2, None)?;
    Ok(DegreeFallRecord::new(Construction::MimcFieldEqRemainder, s, d_f, Some(predicted)))
}

/// Feistel: s = Π_{i=2}^{n-1} x_{R,i}^{d_i-1} S(t, f_{L,1}) in the downsized ring,
/// t = f_{L,n} with x_{L,n-1} -> c_R; predicted fall at d_n + Σ_{i=2}^{n-1}(d_i - 1).
pub fn witness_feistel(sys: &PolySystem) -> Result<DegreeFallRecord, DegfallError> {
    let down = crate::shapelex::downsized_drl_feistel(sys)?;
    let ring = &down.ring;
    let n = sys.polys.len() / 2;
    let fr = sys.polys.last().unwrap().to_ring(ring).map_err(|_| DegfallError::Hypothesis("f_R,n leaves the downsized ring".into()))?;
    let xl = ring.index_of(&format!("xL{}", n - 1)).ok_or_else(|| DegfallError::Hypothesis("x_L,n-1 was eliminated".into()))?;
    let y = ring.nvars() - 1;
    let d: Vec<u32> = down.polys.iter().map(|p| p.degree()).collect();
    if d.iter().any(|x| *x < 2) || d[0] > d[n - 1] {
        return Err(DegfallError::Hypothesis("degree assumptions fail".into()));
    }
    let last = &down.polys[n - 1];
    if last.coefficient(&Monomial::var(ring.nvars(), y, d[n - 1])) == 0 {
        return Err(DegfallError::Hypothesis("f_L,n lacks y^{d_n}".into()));
    }
    // gcd of the two branch univariates
    let full = triangular_shape(sys, &(0..sys.polys.len()).collect::<Vec<_>>(), &ShapeOptions::default())?;
    let g = full.combined_univariate().degree().unwrap_or(0);
    if g >= d[0] as usize {
        return Err(DegfallError::Hypothesis(format!("branch gcd has degree {} >= d_1", g)));
    }
    // x_{L,n-1} - c_R
    let c_r = ring.var(xl).sub(&fr);
    let t = last.substitute(xl, &c_r);
    if t.degree() != d[n - 1] {
        return Err(DegfallError::Hypothesis("deg t != d_n".into()));
    }
    let mut e = vec![0u32; ring.nvars()];
    for i in 2..n {
        let v = ring.index_of(&format!("xR{}", i)).ok_or_else(|| DegfallError::Hypothesis(format!("xR{} missing", i)))?;
        e[v] = d[i - 1] - 1;
    }
    let s = monomial_poly(ring, e).mul(&s_polynomial(&t, &down.polys[0])?);
    let predicted = d[n - 1] + d[1..n - 1].iter().map(|x| x - 1).sum::<u32>();
    let mut gens = down.polys.clone();
    gens.push(fr);
    let d_f = membership_degree(&s, &gens, predicted + 2, None)?;
    Ok(DegreeFallRecord::new(Construction::Feistel, s, d_f, Some(predicted)))
}

/// The downsized hash system with the field equation of the output variable appended.
pub fn downsized_hash_system(sys: &PolySystem) -> Result<PolySystem, DegfallError> {
    let (polys, _) = split_field_eq(sys);
    let mut base = sys.clone();
    base.polys = polys;
    let down = eliminate_linear(&base)?;
    let y = down.nvars() - 1;
    Ok(append_field_equations(&down, &[y]))
}

/// Hash: s = x^γ S(g, x_2^q - x_2) on the downsized system, g the generator
/// with leading monomial a power of x_2 and x^γ = Π v^{d_v - 1} over the others.
pub fn witness_hash(sys: &PolySystem) -> Result<DegreeFallRecord, DegfallError> {
    if sys.provenance.builder != "hash_preimage" {
        return Err(DegfallError::Hypothesis("expected a hash preimage system".into()));
    }
    let down = downsized_hash_system(sys)?;
    let (polys, fe) = split_field_eq(&down);
    let n = down.nvars();
    let y = n - 1;
    let degs = pure_power_degrees(&polys, n)?;
    if degs.iter().any(|x| *x < 2) {
        return Err(DegfallError::Hypothesis("some variable has no nonlinear pure-power generator".into()));
    }
    let g = polys.iter().find(|p| p.lm().pure_power_var() == Some(y)).cloned().unwrap();
    let full = triangular_shape(sys, &(0..sys.polys.len()).rev().collect::<Vec<_>>(), &ShapeOptions::default())?;
    let roots = field_gcd_roots(&full.combined_univariate()).len();
    let d2 = degs[y];
    if roots >= d2 as usize {
        return Err(DegfallError::Hypothesis(format!("the univariate polynomial has {} roots in F_q, not fewer than {}", roots, d2)));
    }
    let mut e: Vec<u32> = degs.iter().map(|x| x - 1).collect();
    e[y] = 0;
    let predicted = sys.q() as u32 + e.iter().sum::<u32>();
    let s = monomial_poly(&down.ring, e).mul(&s_polynomial(&g, &fe)?);
    let d_f = membership_degree(&s, &down.polys, predicted + 2, None)?;
    Ok(DegreeFallRecord::new(Construction::Hash, s, d_f, Some(predicted)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjectureVerdict {
    Supports,
    Refutes,
    HypothesesFail,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureRun {
    pub verdict: ConjectureVerdict,
    pub record: Option<DegreeFallRecord>,
    pub note: String,
}

/// Tests whether (Π x_i) S(f_1, y^q - y) has a degree fall for F plus all field equations.
pub fn conjecture_harness(sys: &PolySystem, d_max: u32) -> Result<ConjectureRun, DegfallError> {
    let nv = sys.nvars();
    let q = sys.q();
    let fes: Vec<Poly> = (0..nv).map(|v| field_eq(&sys.ring, v, q)).collect();
    let polys: Vec<Poly> = sys.polys.iter().filter(|p| !fes.contains(p)).cloned().collect();
    let fe = fes[nv - 1].clone();
    let (d, roots) = match mimc_checks(&polys, &fe, sys) {
        Ok(v) => v,
        Err(DegfallError::Hypothesis(h)) => return Ok(ConjectureRun { verdict: ConjectureVerdict::HypothesesFail, record: None, note: h }),
        Err(e) => return Err(e),
    };
    if roots >= d[0] as usize {
        return Ok(ConjectureRun { verdict: ConjectureVerdict::HypothesesFail, record: None, note: format!("{} roots in F_q", roots) });
    }
    let mut e = vec![1u32; nv];
    e[nv - 1] = 0;
    let w = monomial_poly(&sys.ring, e).mul(&s_polynomial(&polys[0], &fe)?);
    let mut gens = polys.clone();
    gens.extend(fes);
    Ok(conjecture_record(w, &gens, d_max))
}

fn conjecture_record(w: Poly, gens: &[Poly], d_max: u32) -> ConjectureRun {
    match membership_degree(&w, gens, d_max, None) {
        Ok(d_f) => {
            let rec = DegreeFallRecord::new(Construction::Conjecture, w, d_f, None);
            let verdict = if rec.is_fall() { ConjectureVerdict::Supports } else { ConjectureVerdict::Refutes };
            ConjectureRun { verdict, note: format!("d_f = {}, deg = {}", rec.d_f, rec.deg_witness), record: Some(rec) }
        }
        Err(e) => ConjectureRun { verdict: ConjectureVerdict::HypothesesFail, record: None, note: e.to_string() },
    }
}

/// Membership degree of an arbitrary ideal element, recorded as a generic scan.
pub fn scan_witness(w: &Poly, gens: &[Poly], d_max: u32) -> Result<DegreeFallRecord, DegfallError> {
    let d_f = membership_degree(w, gens, d_max, None)?;
    Ok(DegreeFallRecord::new(Construction::GenericScan, w.clone(), d_f, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groebner::solving_degree_with_gb;
    use crate::systems::*;

    fn mimc_fe(q: u64, r: u32, seed: u64, key: u64) -> PolySystem {
        let spec = CipherSpec::mimc(q, r).with_seed(seed);
        let c = encrypt(&spec, &[key], &[1]).unwrap()[0];
        let sys = build_mimc_system(&spec, 1, c).unwrap();
        let y = sys.nvars() - 1;
        append_field_equations(&sys, &[y])
    }

    /// First seed whose instance passes the root-count gate.
    fn gated_mimc(q: u64, r: u32) -> PolySystem {
        (0..).map(|s| mimc_fe(q, r, s, 2)).find(|s| witness_mimc_field_eq(s).is_ok()).unwrap()
    }

    #[test]
    fn membership_basics() {
        let sys = mimc_fe(11, 2, 0, 3);
        let g = &sys.polys[0];
        assert_eq!(membership_degree(g, &sys.polys, 20, None).unwrap(), g.degree());
        assert_eq!(membership_degree(&sys.ring.zero(), &sys.polys, 20, None).unwrap(), 0);
        let s = s_polynomial(&sys.polys[0], sys.polys.last().unwrap()).unwrap();
        let d_f = membership_degree(&s, &sys.polys, 20, None).unwrap();
        assert_eq!(d_f, 11);
        assert!(d_f > s.degree());
        let gb = buchberger(&sys.ring, &sys.polys, 100_000).unwrap();
        let outside = sys.ring.var(0);
        if !gb.contains(&outside) {
            assert_eq!(membership_degree(&outside, &sys.polys, 20, Some(&gb)), Err(DegfallError::NotInIdeal));
        }
    }

    #[test]
    fn mimc_witness_q11_r2() {
        let sys = gated_mimc(11, 2);
        let rec = witness_mimc_field_eq(&sys).unwrap();
        assert_eq!(rec.predicted, Some(13));
        assert!(rec.confirmed, "{:?}", rec);
        assert!(rec.is_fall());
        let lf = last_fall_degree(&sys.ring, &sys.polys, default_scan_cap(&sys));
        assert!(lf.last.unwrap() >= 13);
    }

    #[test]
    fn mimc_root_gate() {
        // some seed plants at least d_1 roots; the gate must reject it
        let planted = (0..400).map(|s| mimc_fe(11, 2, s, 2)).find(|s| {
            let (p, _) = split_field_eq(s);
            let mut b = s.clone();
            b.polys = p;
            field_gcd_roots(&lex_gb_iterated(&b, &ShapeOptions::default()).unwrap().univariate).len() >= 3
        });
        if let Some(s) = planted {
            assert!(matches!(witness_mimc_field_eq(&s), Err(DegfallError::Hypothesis(_))));
        }
    }

    #[test]
    fn remainder_variant_q11_r3() {
        let found = (0..40).map(|s| mimc_fe(11, 3, s, 2)).find_map(|s| witness_mimc_remainder(&s).ok());
        let rec = found.expect("an instance satisfying the remainder hypotheses");
        assert!(rec.is_fall());
        assert!(rec.d_f >= rec.predicted.unwrap(), "{:?}", rec);
    }

    #[test]
    fn feistel_witness_f11_r4() {
        let rec = (0..40)
            .find_map(|seed| {
                let spec = CipherSpec::feistel(11, 4).with_seed(seed);
                let ct = encrypt(&spec, &[5], &[1, 2]).unwrap();
                let sys = build_feistel_system(&spec, (1, 2), (ct[0], ct[1])).unwrap();
                witness_feistel(&sys).ok()
            })
            .unwrap();
        assert_eq!(rec.predicted, Some(7));
        assert!(rec.confirmed, "{:?}", rec);
    }

    #[test]
    fn hash_witness_q11_r4() {
        let rec = (0..40)
            .find_map(|seed| {
                let spec = CipherSpec::hash(11, 4).with_seed(seed);
                let (alpha, _) = hash_point(&spec, 3).unwrap();
                let sys = build_hash_preimage_system(&spec, alpha).unwrap();
                witness_hash(&sys).ok()
            })
            .unwrap();
        assert_eq!(rec.predicted, Some(15));
        assert!(rec.confirmed, "{:?}", rec);
    }

    #[test]
    fn single_generator_has_no_fall() {
        let k = Fq::new(7).unwrap();
        let ring = PolyRing::new(k, &["x", "y"], crate::OrderKind::Drl).unwrap();
        let f = ring.parse("x^2 + y + 1").unwrap();
        let lf = last_fall_degree(&ring, &[f], 6);
        assert_eq!(lf.last, None);
    }

    #[test]
    fn conjecture_runs_and_negative_control() {
        for q in [5u64, 7] {
            let spec = CipherSpec::mimc(q, 2).with_seed(1);
            if spec.validate().is_err() {
                continue;
            }
            let c = encrypt(&spec, &[1], &[2]).unwrap()[0];
            let sys = build_mimc_system(&spec, 2, c).unwrap();
            let all = append_field_equations(&sys, &[0, 1]);
            let run = conjecture_harness(&all, 3 * q as u32).unwrap();
            assert!(matches!(run.verdict, ConjectureVerdict::Supports | ConjectureVerdict::Refutes | ConjectureVerdict::HypothesesFail));
        }
        let sys = mimc_fe(11, 2, 0, 3);
        let ctl = conjecture_record(sys.polys[0].clone(), &sys.polys, 20);
        assert_eq!(ctl.verdict, ConjectureVerdict::Refutes);
    }

    #[test]
    fn solving_degree_below_last_fall_or_gb_degree() {
        let sys = gated_mimc(11, 2);
        let (sd, gb) = solving_degree_with_gb(&sys.ring, &sys.polys, 30).unwrap();
        let lf = last_fall_degree(&sys.ring, &sys.polys, default_scan_cap(&sys));
        assert!(sd.degree <= lf.last.unwrap().max(gb.max_degree()));
        let rec = witness_mimc_field_eq(&sys).unwrap();
        assert!(gb.normal_form(&rec.witness_poly).is_zero());
        assert!(lf.last.unwrap() >= rec.d_f);
    }
}
