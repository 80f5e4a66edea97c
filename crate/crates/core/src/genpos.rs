//! Generic-coordinate checks: top components, pure-power certificates, the
//! substitution procedure, SPN structure, Feistel rank criteria and the
//! degree of regularity.

use serde::{Deserialize, Serialize};

use crate::groebner::{buchberger, hilbert_numerator, hilbert_polynomial_part, quotient_dimension, GbError, QuotientDim};
use crate::mpoly::OrderKind;
use crate::systems::{linalg, spn_transform, CipherSpec, Family, PolySystem, Provenance, Role, SystemError};
use crate::{Fq, Poly, PolyRing};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenposError {
    #[error(transparent)]
    Gb(#[from] GbError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Generic,
    NotGeneric,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PurePowers,
    SubstitutionProcedure,
    SpnStructure,
    RankCriterion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankVariant {
    Erf,
    StrongCrf,
    Crf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Witness {
    /// Pure-power degree per variable.
    PurePowers { degrees: Vec<(String, u32)> },
    /// Variables eliminated before the procedure stopped, and those left.
    Stall { eliminated: Vec<(String, u32)>, remaining: Vec<String> },
    Rank { variant: RankVariant, achieved: usize, required: usize },
    Precondition { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub verdict: Verdict,
    pub method: Method,
    pub witness: Witness,
}

impl GenericityReport {
    fn precondition(method: Method, reason: impl Into<String>) -> Self {
        GenericityReport { verdict: Verdict::Indeterminate, method, witness: Witness::Precondition { reason: reason.into() } }
    }
}

/// Default pair budget for the Buchberger oracle.
pub const PAIR_BUDGET: usize = 200_000;

/// Highest-degree components, zero components dropped.
pub fn top_component_system(sys: &PolySystem) -> PolySystem {
    let polys: Vec<Poly> = sys.polys.iter().filter(|f| !f.is_zero()).map(|f| f.top_component().expect("nonzero")).collect();
    let mut out = sys.clone();
    out.polys = polys;
    out.blocks = None;
    out.provenance.notes.push("top components".into());
    out
}

fn non_homogenizer_vars(sys: &PolySystem) -> Vec<usize> {
    (0..sys.nvars()).filter(|v| sys.roles[*v] != Role::Homogenizer).collect()
}

/// Checks (F) != (1) and dim (F) = 0 with the oracle; returns the failure reason.
fn zero_dimensional_gate(sys: &PolySystem, budget: usize) -> Result<Option<String>, GenposError> {
    let gb = buchberger(&sys.ring, &sys.polys, budget)?;
    if gb.is_one() {
        return Ok(Some("the ideal is trivial".into()));
    }
    if gb.quotient_dimension() == QuotientDim::Infinite {
        return Ok(Some("the ideal is not zero-dimensional".into()));
    }
    Ok(None)
}

pub fn is_generic_coordinates(sys: &PolySystem, method: Method, budget: usize) -> Result<GenericityReport, GenposError> {
    match method {
        Method::SpnStructure => return spn_genericity(sys),
        Method::RankCriterion => {
            let spec = sys.provenance.spec.as_ref().ok_or_else(|| GenposError::Unsupported("system carries no cipher spec".into()))?;
            let variant = match spec.family {
                Family::GmimcErf => RankVariant::Erf,
                Family::GmimcCrf => RankVariant::Crf,
                f => return Err(GenposError::Unsupported(format!("rank criterion for {:?}", f))),
            };
            return feistel_rank_criterion(spec, variant);
        }
        _ => {}
    }
    if let Some(reason) = zero_dimensional_gate(sys, budget)? {
        return Ok(GenericityReport::precondition(method, reason));
    }
    let top = top_component_system(sys);
    let names = sys.ring.names();
    let vars = non_homogenizer_vars(sys);
    if method == Method::PurePowers {
        let gb = buchberger(&top.ring, &top.polys, budget)?;
        let lms = gb.leading_monomials();
        let mut degrees = Vec::new();
        let mut missing = Vec::new();
        for &v in &vars {
            match lms.iter().filter(|m| m.pure_power_var() == Some(v)).map(|m| m.degree()).min() {
                Some(d) => degrees.push((names[v].clone(), d)),
                None => missing.push(names[v].clone()),
            }
        }
        let verdict = if missing.is_empty() { Verdict::Generic } else { Verdict::NotGeneric };
        let witness = if missing.is_empty() { Witness::PurePowers { degrees } } else { Witness::Stall { eliminated: degrees, remaining: missing } };
        return Ok(GenericityReport { verdict, method, witness });
    }
    Ok(substitution_procedure(&top.polys, &vars, names))
}

/// Repeatedly takes a single-term pure power x_i^d from the top components
/// and sets x_i = 0.
fn substitution_procedure(top: &[Poly], vars: &[usize], names: &[String]) -> GenericityReport {
    let mut t: Vec<Poly> = top.iter().filter(|p| !p.is_zero()).cloned().collect();
    let mut left: Vec<usize> = vars.to_vec();
    let mut eliminated = Vec::new();
    loop {
        if left.is_empty() {
            return GenericityReport { verdict: Verdict::Generic, method: Method::SubstitutionProcedure, witness: Witness::PurePowers { degrees: eliminated } };
        }
        let hit = t.iter().find_map(|p| {
            if p.len() != 1 {
                return None;
            }
            let v = p.lm().pure_power_var()?;
            left.contains(&v).then(|| (v, p.degree()))
        });
        match hit {
            Some((v, d)) => {
                eliminated.push((names[v].clone(), d));
                left.retain(|x| *x != v);
                t = t.iter().map(|p| p.set_zero(v)).filter(|p| !p.is_zero()).collect();
            }
            None => {
                let remaining = left.iter().map(|v| names[*v].clone()).collect();
                let verdict = if t.is_empty() { Verdict::NotGeneric } else { Verdict::Indeterminate };
                return GenericityReport { verdict, method: Method::SubstitutionProcedure, witness: Witness::Stall { eliminated, remaining } };
            }
        }
    }
}

/// SPN certificate: after multiplying each round block by A^{-1} the
/// generators have pairwise coprime pure-power leading monomials.
pub fn spn_genericity(sys: &PolySystem) -> Result<GenericityReport, GenposError> {
    let m = Method::SpnStructure;
    let Some(spec) = sys.provenance.spec.as_ref() else {
        return Ok(GenericityReport::precondition(m, "system carries no cipher spec"));
    };
    if spec.family != Family::Hades {
        return Ok(GenericityReport::precondition(m, "not a partial SPN"));
    }
    if spec.rf == 0 {
        return Ok(GenericityReport::precondition(m, "first round is not a full S-box layer"));
    }
    if spec.exponent < 2 {
        return Ok(GenericityReport::precondition(m, "S-box of degree 1"));
    }
    let g = if sys.blocks.as_ref().is_some_and(|b| b.transformed) { sys.clone() } else { spn_transform(sys)? };
    let names = g.ring.names();
    let mut degrees = Vec::new();
    let mut seen = vec![false; g.nvars()];
    for p in &g.polys {
        match p.lm().pure_power_var() {
            Some(v) if !seen[v] => {
                seen[v] = true;
                degrees.push((names[v].clone(), p.degree()));
            }
            _ => return Ok(GenericityReport::precondition(m, format!("leading monomial of {} is not a new pure power", p.render()))),
        }
    }
    if seen.iter().any(|s| !s) {
        return Ok(GenericityReport::precondition(m, "some variable has no pure-power leading monomial"));
    }
    Ok(GenericityReport { verdict: Verdict::Generic, method: m, witness: Witness::PurePowers { degrees } })
}

type Form = Vec<u64>;

fn form_add(a: &Form, b: &Form, q: u64) -> Form {
    a.iter().zip(b).map(|(x, y)| (x + y) % q).collect()
}

fn form_sub(a: &Form, b: &Form, q: u64) -> Form {
    a.iter().zip(b).map(|(x, y)| (x + q - y) % q).collect()
}

fn apply(m: &[Vec<u64>], v: &[Form], q: u64) -> Vec<Form> {
    let ncols = v[0].len();
    m.iter()
        .map(|row| {
            let mut acc = vec![0u64; ncols];
            for (c, f) in row.iter().zip(v) {
                if *c != 0 {
                    for (a, x) in acc.iter_mut().zip(f) {
                        *a = (*a + c * x) % q;
                    }
                }
            }
            acc
        })
        .collect()
}

/// Linear parts of the round keys: k_i = M^i y (identity without a schedule).
fn key_linear_parts(spec: &CipherSpec, ys: &[Form], r: usize) -> Vec<Vec<Form>> {
    let q = spec.q;
    let mut out = vec![ys.to_vec()];
    for _ in 0..r {
        let prev = out.last().unwrap().clone();
        out.push(match spec.key_schedule_affine() {
            Some((m, _)) => apply(&m, &prev, q),
            None => prev,
        });
    }
    out
}

/// Builds the criterion's linear system over the surviving variables and
/// compares its rank with the required rank.
pub fn feistel_rank_criterion(spec: &CipherSpec, variant: RankVariant) -> Result<GenericityReport, GenposError> {
    if !matches!(spec.family, Family::GmimcErf | Family::GmimcCrf) {
        return Err(GenposError::Unsupported(format!("rank criterion for {:?}", spec.family)));
    }
    spec.validate()?;
    let q = spec.q;
    let n = spec.branches;
    let r = spec.rounds as usize;
    let a = spec.layer_matrix();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(GenposError::Unsupported("layer matrix shape".into()));
    }
    let ainv = linalg::inverse(&a, q).ok_or(SystemError::SingularMatrix)?;
    let (rows, required) = match variant {
        RankVariant::Erf | RankVariant::Crf => {
            let nc = r * n;
            let unit = |i: usize| -> Form {
                let mut v = vec![0; nc];
                v[i] = 1;
                v
            };
            let ys: Vec<Form> = (0..n).map(unit).collect();
            let xs = |i: usize| -> Vec<Form> { (0..n).map(|k| unit(n * i + k)).collect() };
            let keys = key_linear_parts(spec, &ys, r);
            let zero = vec![vec![0u64; nc]; n];
            let mut rows = Vec::new();
            for i in 1..=r {
                let z = if i == 1 { ys.clone() } else { xs(i - 1) };
                let xo = if i < r { xs(i) } else { zero.clone() };
                let diff: Vec<Form> = keys[i - 1].iter().zip(&xo).map(|(k, x)| form_sub(k, x, q)).collect();
                let u = apply(&ainv, &diff, q);
                if variant == RankVariant::Erf {
                    rows.push(z[n - 1].clone());
                    for j in 1..n - 1 {
                        rows.push(form_add(&form_sub(&z[j], &z[0], q), &form_sub(&u[j], &u[0], q), q));
                    }
                    rows.push(form_add(&z[n - 1], &u[n - 1], q));
                } else {
                    let s = z[1..].iter().fold(vec![0u64; nc], |acc, v| form_add(&acc, v, q));
                    rows.push(s);
                    for j in 1..n {
                        rows.push(form_add(&z[j], &u[j], q));
                    }
                }
            }
            (rows, nc)
        }
        RankVariant::StrongCrf => {
            // variables y_1, x_1^{(1)}, ..., x_1^{(r-1)}
            let unit = |i: usize| -> Form {
                let mut v = vec![0; r];
                v[i] = 1;
                v
            };
            let zero = vec![0u64; r];
            let hat = |v: Form| -> Vec<Form> { std::iter::once(v).chain(std::iter::repeat(zero.clone()).take(n - 1)).collect() };
            let yhat = hat(unit(0));
            let keys = key_linear_parts(spec, &yhat, r);
            let mut rows = Vec::new();
            for i in 1..=r {
                let xo = if i < r { hat(unit(i)) } else { hat(zero.clone()) };
                let diff: Vec<Form> = keys[i - 1].iter().zip(&xo).map(|(k, x)| form_sub(k, x, q)).collect();
                rows.push(apply(&ainv, &diff, q)[n - 1].clone());
            }
            (rows, r)
        }
    };
    let achieved = linalg::rank(&rows, q);
    let verdict = if achieved == required { Verdict::Generic } else { Verdict::Indeterminate };
    Ok(GenericityReport { verdict, method: Method::RankCriterion, witness: Witness::Rank { variant, achieved, required } })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum RegularityDegree {
    Finite(u32),
    Infinite,
}

/// d_reg = deg h + 1 with h the Hilbert series of the initial ideal of (F^top).
pub fn degree_of_regularity(sys: &PolySystem, budget: usize) -> Result<RegularityDegree, GenposError> {
    let top = top_component_system(sys);
    let gb = buchberger(&top.ring, &top.polys, budget)?;
    let lms = gb.leading_monomials();
    let n = sys.nvars();
    if lms.iter().any(|m| m.is_one()) {
        return Ok(RegularityDegree::Finite(0));
    }
    if quotient_dimension(n, &lms) == QuotientDim::Infinite {
        return Ok(RegularityDegree::Infinite);
    }
    let h = hilbert_polynomial_part(&hilbert_numerator(n, &lms), n).expect("zero-dimensional");
    Ok(RegularityDegree::Finite(h.len() as u32))
}

/// The F_5 sponge example: two rounds of cubing with a 2x2 circulant layer.
pub fn sponge_example() -> PolySystem {
    let k = Fq::new(5).expect("prime");
    let names = ["x1_1", "x1_2", "x2_1", "x2_2", "x_in", "y_out"];
    let ring = PolyRing::new(k, &names, OrderKind::Drl).expect("ring");
    let texts = [
        "x_in^3 + 2*x1_1 + x1_2",
        "-2*x_in^3 + x1_1 + 2*x1_2",
        "x1_1^3 + 2*x2_1 + x2_2",
        "x1_2 + x2_1 + 2*x2_2",
        "x2_1^3 + y_out",
        "x2_2^3 + 2*y_out",
    ];
    let polys = texts.iter().map(|t| ring.parse(t).expect("sponge polynomial")).collect();
    let roles = vec![
        Role::State { round: 1, branch: 0 },
        Role::State { round: 1, branch: 1 },
        Role::State { round: 2, branch: 0 },
        Role::State { round: 2, branch: 1 },
        Role::PlaintextUnknown,
        Role::HashOutputUnknown,
    ];
    PolySystem::new(ring, polys, roles, Provenance { builder: "sponge_example".into(), spec: None, notes: vec!["hash value 0".into()] })
}

/// MiMC with the key schedule y_i = y_{i-1}^3 kept as extra equations.
pub fn mimc_cubic_key_schedule(spec: &CipherSpec, p: u64, c: u64) -> Result<PolySystem, SystemError> {
    if spec.family != Family::Mimc {
        return Err(SystemError::WrongFamily(spec.family));
    }
    let k = spec.validate()?;
    let r = spec.rounds as usize;
    let mut names: Vec<String> = (1..r).map(|i| format!("x{}", i)).collect();
    names.extend((1..=r).map(|i| format!("y{}", i)));
    let ring = PolyRing::new(k, &names, OrderKind::Drl)?;
    let x = |i: usize| ring.var(i - 1);
    let y = |i: usize| ring.var(r - 1 + i - 1);
    let cs = spec.round_constants();
    let d = spec.exponent;
    let mut polys = Vec::new();
    for i in 1..=r {
        let input = if i == 1 { ring.constant_u64(p) } else { x(i - 1) };
        let mut f = input.add(&y(i)).add(&ring.constant_u64(cs[i - 1][0])).pow(d);
        f = if i == r { f.add(&y(r)).sub(&ring.constant_u64(c)) } else { f.sub(&x(i)) };
        polys.push(f);
        if i >= 2 {
            polys.push(y(i - 1).pow(3).sub(&y(i)));
        }
    }
    let mut roles: Vec<Role> = (1..r).map(|i| Role::State { round: i, branch: 0 }).collect();
    roles.extend((0..r).map(|i| Role::Key { index: i }));
    Ok(PolySystem::new(ring, polys, roles, Provenance { builder: "mimc_cubic_key_schedule".into(), spec: Some(spec.clone()), notes: vec![] }))
}
