//! Macaulay bounds, the binomial bit-complexity estimate and table reproduction.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const OMEGA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComplexityError {
    #[error("empty degree list")]
    Empty,
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("unknown table {0:?}")]
    UnknownTable(String),
}

/// d_1 + ... + d_l - l + 1 over the l = min(n + 1, m) largest degrees.
pub fn macaulay_bound(degrees: &[u32], nvars: usize) -> Result<u32, ComplexityError> {
    if degrees.is_empty() {
        return Err(ComplexityError::Empty);
    }
    let mut d = degrees.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let l = (nvars + 1).min(d.len());
    let s: i64 = d[..l].iter().map(|x| *x as i64).sum::<i64>() - l as i64 + 1;
    Ok(s.max(0) as u32)
}

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// ω·(½·log2(N / (π·d·(n−1))) + N·H2(d/N)) with N = n + d − 1.
pub fn kappa_bits(n: u64, d: u64, omega: f64) -> Result<f64, ComplexityError> {
    if n < 2 || d < 1 {
        return Err(ComplexityError::Domain(format!("need n >= 2 and d >= 1, got n = {n}, d = {d}")));
    }
    let (n, d) = (n as f64, d as f64);
    let big = n + d - 1.0;
    let k = omega * (0.5 * (big / (PI * d * (n - 1.0))).log2() + big * h2(d / big));
    if !k.is_finite() {
        return Err(ComplexityError::Domain("non-finite estimate".into()));
    }
    Ok(k.max(0.0))
}

/// log2 C(big, k) for small k.
fn log2_binomial_small_k(big: f64, k: u32) -> f64 {
    (1..=k).map(|i| ((big - k as f64 + i as f64) / i as f64).log2()).sum()
}

/// log2(2^a + 2^b).
fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// ⌈log_3 q⌉ for q = 2^bits.
fn ceil_log3_pow2(bits: u32) -> u64 {
    (bits as f64 / 3f64.log2()).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmimcVariant {
    Crf,
    Erf,
}

/// Attack parameters at cryptographic scale; the modulus enters only through its bit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attack", rename_all = "snake_case")]
pub enum AttackParams {
    /// MiMC with the key field equation replaced by its remainder.
    MimcFieldEq { log2_q: u32, r: u32 },
    TwoPlaintext { r: u32 },
    Feistel { r: u32 },
    Hash { log2_q: u32, r: u32 },
    Hades { n: u32, rf: u32, rp: u32, d: u32 },
    Gmimc { n: u32, r: u32, d: u32 },
}

impl AttackParams {
    pub fn name(&self) -> &'static str {
        match self {
            AttackParams::MimcFieldEq { .. } => "mimc_field_eq",
            AttackParams::TwoPlaintext { .. } => "two_plaintext",
            AttackParams::Feistel { .. } => "feistel",
            AttackParams::Hash { .. } => "hash",
            AttackParams::Hades { .. } => "hades",
            AttackParams::Gmimc { .. } => "gmimc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aux {
    pub quotient_dim_log2: f64,
    pub fglm_bits: f64,
    pub gcd_bits: Option<f64>,
    pub macaulay_bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub attack: String,
    pub nvars: u64,
    pub solving_degree_bound: u64,
    pub omega: f64,
    pub kappa_bits: f64,
    pub aux: Aux,
    pub provenance: String,
    pub approximate: bool,
}

/// log2 of the number of solutions in the algebraic closure.
pub fn quotient_dim_log2(a: &AttackParams) -> f64 {
    let l3 = 3f64.log2();
    match *a {
        AttackParams::MimcFieldEq { r, .. } | AttackParams::Feistel { r } => r as f64 * l3,
        AttackParams::TwoPlaintext { r } => r as f64 * l3,
        AttackParams::Hash { r, .. } => r.saturating_sub(1) as f64 * l3,
        AttackParams::Hades { n, rf, rp, d } => (2 * n * rf + rp) as f64 * (d as f64).log2(),
        AttackParams::Gmimc { r, d, .. } => r as f64 * (d as f64).log2(),
    }
}

fn degree_and_vars(a: &AttackParams) -> (u64, u64, String) {
    match *a {
        AttackParams::MimcFieldEq { log2_q, r } => {
            let r = r as u64;
            (r, 2 * ceil_log3_pow2(log2_q) + 2 * r, "n = r, d = 2*ceil(log3 q) + 2r".into())
        }
        AttackParams::TwoPlaintext { r } => {
            let r = r as u64;
            (2 * r - 1, 4 * r + 1, "n = 2r - 1, d = 4r + 1".into())
        }
        AttackParams::Feistel { r } => {
            let r = r as u64;
            (r, 2 * r + 1, "n = r, d = 2r + 1".into())
        }
        AttackParams::Hash { log2_q, r } => {
            let n = r as u64 - 1;
            (n, 2 * ceil_log3_pow2(log2_q) + 2 * n, "n = r - 1, d = 2*ceil(log3 q) + 2(r - 1)".into())
        }
        AttackParams::Hades { n, rf, rp, d } => {
            let nv = (2 * n * rf + rp) as u64;
            (nv, (d as u64 - 1) * nv + 1, "n = 2*n*rf + rp, d = (d - 1)*n + 1".into())
        }
        AttackParams::Gmimc { r, d, .. } => {
            let r = r as u64;
            (r, (d as u64 - 1) * r + 1, "n = r, d = (d - 1)*r + 1".into())
        }
    }
}

fn validate(a: &AttackParams) -> Result<(), ComplexityError> {
    let ok = match *a {
        AttackParams::MimcFieldEq { log2_q, r } => log2_q >= 1 && r >= 2,
        AttackParams::TwoPlaintext { r } => r >= 2,
        AttackParams::Feistel { r } => r >= 2,
        AttackParams::Hash { log2_q, r } => log2_q >= 1 && r >= 3,
        AttackParams::Hades { n, rf, rp, d } => n >= 1 && d >= 2 && 2 * n * rf + rp >= 2,
        AttackParams::Gmimc { n, r, d } => n >= 2 && r >= 2 && d >= 2,
    };
    if ok {
        Ok(())
    } else {
        Err(ComplexityError::Domain(format!("parameters out of range: {a:?}")))
    }
}

/// Gröbner-basis estimate: κ at the attack's solving-degree bound.
pub fn estimate_attack(a: &AttackParams) -> Result<ComplexityReport, ComplexityError> {
    validate(a)?;
    let (n, d, prov) = degree_and_vars(a);
    let kappa = kappa_bits(n, d, OMEGA)?;
    let qd = quotient_dim_log2(a);
    Ok(ComplexityReport {
        attack: a.name().into(),
        nvars: n,
        solving_degree_bound: d,
        omega: OMEGA,
        kappa_bits: kappa,
        aux: Aux { quotient_dim_log2: qd, fglm_bits: (n as f64).log2() + OMEGA * qd, gcd_bits: None, macaulay_bound: d },
        provenance: prov,
        approximate: false,
    })
}

/// Best previously known attack: probabilistic FGLM at O(n·D^ω), plus a univariate
/// gcd/factoring term D·log q·log D where it applies.
pub fn estimate_established(a: &AttackParams) -> Result<ComplexityReport, ComplexityError> {
    validate(a)?;
    let l3 = 3f64.log2();
    let (n, d, _) = degree_and_vars(a);
    let qd = quotient_dim_log2(a);
    let gcd_term = |log2_q: f64, log2_d: f64| log2_d + log2_q.log2() + log2_d.log2();
    let (kappa, gcd, prov): (f64, Option<f64>, String) = match *a {
        AttackParams::MimcFieldEq { log2_q, r } => {
            let fglm = (r as f64).log2() + OMEGA * r as f64 * l3;
            let g = gcd_term(log2_q as f64, r as f64 * l3);
            (log2_add(fglm, g), Some(g), "log2 r + w*r*log2 3 (+) D*log q*log D, D = 3^r".into())
        }
        AttackParams::TwoPlaintext { r } => {
            let fglm = 1.0 + (r as f64).log2() + OMEGA * r as f64 * l3;
            (fglm, None, "two FGLM runs: 1 + log2 r + w*r*log2 3".into())
        }
        AttackParams::Feistel { r } => ((r as f64).log2() + OMEGA * r as f64 * l3, None, "log2 r + w*r*log2 3".into()),
        AttackParams::Hash { log2_q, r } => {
            let fglm = ((r - 1) as f64).log2() + OMEGA * r as f64 * l3;
            let g = gcd_term(log2_q as f64, r as f64 * l3);
            (log2_add(fglm, g), Some(g), "log2(r - 1) + w*r*log2 3 (+) D*log q*log D".into())
        }
        AttackParams::Hades { .. } => (kappa_bits(n, d, OMEGA)?, None, "Groebner basis estimate".into()),
        AttackParams::Gmimc { .. } => {
            let k = gmimc_designer_bits(a, GmimcVariant::Crf).unwrap();
            (k, None, "designers' bound 2*log2 C(n + D, D), crf".into())
        }
    };
    Ok(ComplexityReport {
        attack: a.name().into(),
        nvars: n,
        solving_degree_bound: d,
        omega: OMEGA,
        kappa_bits: kappa,
        aux: Aux { quotient_dim_log2: qd, fglm_bits: (n as f64).log2() + OMEGA * qd, gcd_bits: gcd, macaulay_bound: d },
        provenance: prov,
        approximate: true,
    })
}

/// GMiMC designers' estimate ω·log2 C(n + D, n), D = d^{r-2n+2} (crf) or d^{r-n} (erf).
pub fn gmimc_designer_bits(a: &AttackParams, variant: GmimcVariant) -> Option<f64> {
    let AttackParams::Gmimc { n, r, d } = *a else { return None };
    let e = match variant {
        GmimcVariant::Crf => r as i64 - 2 * n as i64 + 2,
        GmimcVariant::Erf => r as i64 - n as i64,
    };
    if e < 0 {
        return None;
    }
    let big = (d as f64).powi(e as i32);
    Some(OMEGA * log2_binomial_small_k(big + n as f64, n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub table: &'static str,
    pub params: String,
    pub column: &'static str,
    pub computed: f64,
    pub paper: f64,
    pub delta: f64,
    pub tolerance: f64,
    /// Set when the printed value disagrees with another printed value for the same parameters.
    pub note: Option<&'static str>,
}

impl TableRow {
    pub fn within(&self) -> bool {
        self.delta.abs() <= self.tolerance
    }
}

pub const TABLES: [&str; 7] = ["mimc", "two_plaintext", "feistel", "hades", "gmimc", "hash", "overview"];

const KAPPA_TOL: f64 = 0.5;
const ESTABLISHED_TOL: f64 = 1.0;
const DISCREPANCY: &str = "printed 527.4 here; the dedicated MiMC table prints 572.4 for the same parameters";

fn row(table: &'static str, a: AttackParams, column: &'static str, computed: f64, paper: f64, tol: f64, note: Option<&'static str>) -> TableRow {
    TableRow { table, params: params_label(&a), column, computed, paper, delta: computed - paper, tolerance: tol, note }
}

fn params_label(a: &AttackParams) -> String {
    match *a {
        AttackParams::MimcFieldEq { log2_q, r } | AttackParams::Hash { log2_q, r } => format!("log2q={log2_q} r={r}"),
        AttackParams::TwoPlaintext { r } => format!("r={r} m=2"),
        AttackParams::Feistel { r } => format!("r={r}"),
        AttackParams::Hades { n, rf, rp, d } => format!("rf={rf} rp={rp} n={n} d={d}"),
        AttackParams::Gmimc { n, r, d } => format!("r={r} n={n} d={d}"),
    }
}

fn gb(a: AttackParams) -> f64 {
    estimate_attack(&a).expect("table parameters are valid").kappa_bits
}

fn est(a: AttackParams) -> f64 {
    estimate_established(&a).expect("table parameters are valid").kappa_bits
}

const MIMC: [(u32, u32, f64); 3] = [(64, 50, 337.5), (128, 81, 572.4), (256, 162, 1156.2)];
const TWO: [(u32, f64); 2] = [(10, 99.4), (50, 538.1)];
const FEISTEL: [(u32, f64); 2] = [(10, 48.6), (50, 266.7)];
const HADES: [(u32, u32, u32, f64); 6] = [(3, 13, 3, 130.0), (4, 10, 3, 135.4), (5, 5, 3, 130.0), (3, 10, 5, 149.0), (4, 10, 5, 177.6), (5, 4, 5, 163.3)];
const GMIMC: [(u32, u32, f64); 6] = [(10, 3, 48.6), (25, 3, 130.0), (50, 3, 266.7), (10, 5, 63.5), (25, 5, 170.5), (50, 5, 350.0)];

/// Rows of one reproduced table, or of all tables for "all".
pub fn table(which: &str) -> Result<Vec<TableRow>, ComplexityError> {
    if which == "all" {
        return Ok(TABLES.iter().flat_map(|t| table(t).unwrap()).collect());
    }
    let mut rows = Vec::new();
    match which {
        "mimc" => {
            for (b, r, p) in MIMC {
                let a = AttackParams::MimcFieldEq { log2_q: b, r };
                rows.push(row("mimc", a, "kappa_rem", gb(a), p, KAPPA_TOL, None));
            }
        }
        "two_plaintext" => {
            for (r, p) in TWO {
                let a = AttackParams::TwoPlaintext { r };
                rows.push(row("two_plaintext", a, "kappa", gb(a), p, KAPPA_TOL, None));
            }
        }
        "feistel" => {
            for (r, p) in FEISTEL {
                let a = AttackParams::Feistel { r };
                rows.push(row("feistel", a, "kappa", gb(a), p, KAPPA_TOL, None));
            }
        }
        "hades" => {
            for (rf, rp, d, p) in HADES {
                let a = AttackParams::Hades { n: 2, rf, rp, d };
                rows.push(row("hades", a, "kappa", gb(a), p, KAPPA_TOL, None));
            }
        }
        "gmimc" => {
            for (r, d, p) in GMIMC {
                let a = AttackParams::Gmimc { n: 3, r, d };
                rows.push(row("gmimc", a, "kappa", gb(a), p, KAPPA_TOL, None));
            }
        }
        "hash" => {
            for (b, r, p) in [(64, 51, 337.5), (128, 82, 572.4), (256, 163, 1156.2)] {
                let a = AttackParams::Hash { log2_q: b, r };
                rows.push(row("hash", a, "kappa", gb(a), p, KAPPA_TOL, None));
            }
        }
        "overview" => overview(&mut rows),
        other => return Err(ComplexityError::UnknownTable(other.into())),
    }
    Ok(rows)
}

fn overview(rows: &mut Vec<TableRow>) {
    const T: &str = "overview";
    let mimc = [(64, 50, 337.5, 164.1), (128, 81, 527.4, 263.1), (256, 162, 1156.2, 520.9)];
    for (b, r, p, e) in mimc {
        let a = AttackParams::MimcFieldEq { log2_q: b, r };
        let note = (p == 527.4).then_some(DISCREPANCY);
        rows.push(row(T, a, "groebner", gb(a), p, KAPPA_TOL, note));
        rows.push(row(T, a, "established", est(a), e, ESTABLISHED_TOL, None));
    }
    for (r, p, e) in [(10, 99.4, 36.0), (50, 538.1, 165.1)] {
        let a = AttackParams::TwoPlaintext { r };
        rows.push(row(T, a, "groebner", gb(a), p, KAPPA_TOL, None));
        rows.push(row(T, a, "established", est(a), e, ESTABLISHED_TOL, None));
    }
    for (r, p, e) in [(10, 48.6, 35.0), (50, 266.7, 164.1)] {
        let a = AttackParams::Feistel { r };
        rows.push(row(T, a, "groebner", gb(a), p, KAPPA_TOL, None));
        rows.push(row(T, a, "established", est(a), e, ESTABLISHED_TOL, None));
    }
    for (b, r, p, e) in [(64, 51, 337.5, 167.3), (128, 82, 527.4, 266.2), (256, 163, 1156.2, 524.0)] {
        let a = AttackParams::Hash { log2_q: b, r };
        let note = (p == 527.4).then_some(DISCREPANCY);
        rows.push(row(T, a, "groebner", gb(a), p, KAPPA_TOL, note));
        rows.push(row(T, a, "established", est(a), e, ESTABLISHED_TOL, None));
    }
    let hades = [(3, 13, 3, 130.0), (4, 10, 3, 135.4), (5, 5, 3, 130.0), (3, 10, 5, 149.0), (4, 10, 5, 177.5), (5, 4, 5, 163.3)];
    for (rf, rp, d, p) in hades {
        let a = AttackParams::Hades { n: 2, rf, rp, d };
        rows.push(row(T, a, "groebner", gb(a), p, KAPPA_TOL, None));
        rows.push(row(T, a, "established", est(a), p, ESTABLISHED_TOL, None));
    }
    let gm = [
        (10, 3, 48.6, 51.9, 61.4),
        (25, 3, 130.0, 194.5, 204.0),
        (50, 3, 266.7, 432.3, 441.8),
        (10, 5, 63.5, 78.4, 92.4),
        (25, 5, 170.5, 287.4, 301.3),
        (50, 5, 350.0, 635.7, 649.6),
    ];
    for (r, d, p, crf, erf) in gm {
        let a = AttackParams::Gmimc { n: 3, r, d };
        rows.push(row(T, a, "groebner", gb(a), p, KAPPA_TOL, None));
        rows.push(row(T, a, "established_crf", gmimc_designer_bits(&a, GmimcVariant::Crf).unwrap(), crf, ESTABLISHED_TOL, None));
        rows.push(row(T, a, "established_erf", gmimc_designer_bits(&a, GmimcVariant::Erf).unwrap(), erf, ESTABLISHED_TOL, None));
    }
}

/// CSV with one decimal for values and two for deltas.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("table,params,column,computed,paper,delta,tolerance,within,note\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.1},{:.1},{:.2},{:.1},{},{}",
            r.table,
            r.params,
            r.column,
            r.computed,
            r.paper,
            r.delta,
            r.tolerance,
            r.within(),
            r.note.unwrap_or("")
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Independent oracle: exact log2 C(N, d) via lgamma-free summation.
    fn log2_binomial_exact(big: u64, k: u64) -> f64 {
        let k = k.min(big - k);
        (1..=k).map(|i| ((big - k + i) as f64 / i as f64).log2()).sum()
    }

    #[test]
    fn macaulay_examples() {
        assert_eq!(macaulay_bound(&[3, 3, 3, 3, 3], 3).unwrap(), 4 * 2 + 1);
        assert_eq!(macaulay_bound(&[3, 3, 11], 2).unwrap(), 11 + 2 * 2);
        assert_eq!(macaulay_bound(&[3, 3, 3, 23], 3).unwrap(), 23 + 2 * 3);
        assert_eq!(macaulay_bound(&[1], 4).unwrap(), 1);
        assert_eq!(macaulay_bound(&[], 4), Err(ComplexityError::Empty));
    }

    #[test]
    fn kappa_examples() {
        assert_abs_diff_eq!(kappa_bits(25, 51, 2.0).unwrap(), 130.0, epsilon = 0.5);
        assert_abs_diff_eq!(kappa_bits(10, 21, 2.0).unwrap(), 48.6, epsilon = 0.5);
        assert_abs_diff_eq!(kappa_bits(19, 41, 2.0).unwrap(), 99.4, epsilon = 0.5);
        assert!(kappa_bits(1, 5, 2.0).is_err());
        assert!(kappa_bits(3, 0, 2.0).is_err());
    }

    #[test]
    fn kappa_tracks_binomial() {
        // Stirling approximation of ω·log2 C(n + d - 1, d), within 3%
        for (n, d) in [(10u64, 21u64), (25, 51), (19, 41), (50, 101)] {
            let exact = 2.0 * log2_binomial_exact(n + d - 1, d);
            let k = kappa_bits(n, d, 2.0).unwrap();
            assert!((k - exact).abs() <= 0.03 * exact, "{n} {d}: {k} vs {exact}");
        }
    }

    #[test]
    fn estimate_examples() {
        let k = |a| estimate_attack(&a).unwrap().kappa_bits;
        assert_abs_diff_eq!(k(AttackParams::MimcFieldEq { log2_q: 64, r: 50 }), 337.5, epsilon = 0.5);
        assert_abs_diff_eq!(k(AttackParams::Gmimc { n: 3, r: 50, d: 5 }), 350.0, epsilon = 0.5);
        assert_abs_diff_eq!(k(AttackParams::Feistel { r: 50 }), 266.7, epsilon = 0.5);
        let e = |a| estimate_established(&a).unwrap().kappa_bits;
        assert_abs_diff_eq!(e(AttackParams::MimcFieldEq { log2_q: 64, r: 50 }), 164.1, epsilon = 1.0);
        assert_abs_diff_eq!(e(AttackParams::TwoPlaintext { r: 50 }), 165.1, epsilon = 1.0);
        assert_abs_diff_eq!(e(AttackParams::Feistel { r: 10 }), 35.0, epsilon = 1.0);
        assert_abs_diff_eq!(e(AttackParams::Hash { log2_q: 64, r: 51 }), 167.3, epsilon = 1.0);
    }

    #[test]
    fn quotient_dims() {
        assert_abs_diff_eq!(quotient_dim_log2(&AttackParams::MimcFieldEq { log2_q: 64, r: 50 }), 79.248, epsilon = 1e-3);
        assert_abs_diff_eq!(quotient_dim_log2(&AttackParams::Hades { n: 2, rf: 3, rp: 13, d: 3 }), 25.0 * 3f64.log2(), epsilon = 1e-9);
        assert_eq!(quotient_dim_log2(&AttackParams::Feistel { r: 0 }), 0.0);
    }

    #[test]
    fn all_tables_within_tolerance_except_flagged() {
        let rows = table("all").unwrap();
        for r in &rows {
            if r.note.is_some() {
                assert_abs_diff_eq!(r.computed, 572.4, epsilon = 0.5);
            } else {
                assert!(r.within(), "{r:?}");
            }
        }
        assert_eq!(rows.iter().filter(|r| r.note.is_some()).count(), 2);
        assert!(table("nope").is_err());
    }

    #[test]
    fn csv_shape() {
        let csv = table_csv(&table("gmimc").unwrap());
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().nth(6).unwrap().contains(",350.0,350.0,"));
    }

    proptest! {
        #[test]
        fn kappa_monotone(n in 2u64..60, d in 1u64..200) {
            let k = kappa_bits(n, d, 2.0).unwrap();
            prop_assert!(kappa_bits(n, d + 1, 2.0).unwrap() > k);
            prop_assert!(kappa_bits(n + 1, d, 2.0).unwrap() > k);
        }

        #[test]
        fn macaulay_bound_is_order_free(mut ds in proptest::collection::vec(1u32..20, 1..8), n in 1usize..8) {
            let b = macaulay_bound(&ds, n).unwrap();
            ds.reverse();
            prop_assert_eq!(macaulay_bound(&ds, n).unwrap(), b);
            prop_assert!(b >= *ds.iter().max().unwrap());
        }
    }
}
