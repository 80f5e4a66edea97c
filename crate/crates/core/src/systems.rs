//! Cipher specifications, reference encryption and polynomial-system builders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gf::{is_permutation_exponent, Field, SmallPrimeField};
use crate::mpoly::{OrderKind, PolyError, Ring};
use crate::{Poly, PolyRing};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SystemError {
    #[error("modulus {0} is not a prime below 2^32")]
    BadModulus(u64),
    #[error("exponent {d} is not a permutation of F_{q}")]
    NotPermutation { d: u32, q: u64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular affine layer")]
    SingularMatrix,
    #[error("identical plain/ciphertext pairs")]
    IdenticalPairs,
    #[error("operation not available for family {0:?}")]
    WrongFamily(Family),
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Mimc,
    FeistelMimc,
    GmimcErf,
    GmimcCrf,
    Hades,
    FeistelHash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    /// (x_1, ..., x_n) -> (x_n, x_1, ..., x_{n-1})
    Shift,
    /// circulant(1, ..., n), right-shift rows
    Circulant,
    /// Cauchy matrix 1/(i + n + j)
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyScheduleKind {
    #[default]
    None,
    Affine,
}

/// Which Feistel branch carries the hash message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HashInput {
    /// Message in the right branch: the first round is affine in it.
    #[default]
    Right,
    /// Message in the left branch: the first round cubes it.
    Left,
}

fn default_branches() -> usize {
    1
}
fn default_exponent() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CipherSpec {
    pub family: Family,
    pub q: u64,
    #[serde(default)]
    pub rounds: u32,
    #[serde(default)]
    pub rf: u32,
    #[serde(default)]
    pub rp: u32,
    #[serde(default = "default_branches")]
    pub branches: usize,
    #[serde(default = "default_exponent")]
    pub exponent: u32,
    /// Explicit round constants, one row per round (length = branches).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Vec<Vec<u64>>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<Layer>,
    /// Explicit affine layer, overriding `layer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<u64>>>,
    #[serde(default)]
    pub key_schedule: KeyScheduleKind,
    #[serde(default)]
    pub hash_input: HashInput,
}

impl CipherSpec {
    pub fn new(family: Family, q: u64, rounds: u32) -> Self {
        let branches = match family {
            Family::Mimc | Family::FeistelMimc | Family::FeistelHash => 1,
            _ => 2,
        };
        CipherSpec {
            family,
            q,
            rounds,
            rf: 0,
            rp: 0,
            branches,
            exponent: 3,
            constants: None,
            seed: 0,
            layer: None,
            matrix: None,
            key_schedule: KeyScheduleKind::None,
            hash_input: HashInput::Right,
        }
    }

    pub fn mimc(q: u64, rounds: u32) -> Self {
        Self::new(Family::Mimc, q, rounds)
    }

    pub fn feistel(q: u64, rounds: u32) -> Self {
        Self::new(Family::FeistelMimc, q, rounds)
    }

    pub fn hash(q: u64, rounds: u32) -> Self {
        Self::new(Family::FeistelHash, q, rounds)
    }

    pub fn gmimc(erf: bool, q: u64, n: usize, rounds: u32) -> Self {
        let mut s = Self::new(if erf { Family::GmimcErf } else { Family::GmimcCrf }, q, rounds);
        s.branches = n;
        s
    }

    pub fn hades(q: u64, n: usize, rf: u32, rp: u32) -> Self {
        let mut s = Self::new(Family::Hades, q, 2 * rf + rp);
        s.branches = n;
        s.rf = rf;
        s.rp = rp;
        s
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_constants(mut self, c: Vec<Vec<u64>>) -> Self {
        self.constants = Some(c);
        self
    }

    pub fn with_exponent(mut self, d: u32) -> Self {
        self.exponent = d;
        self
    }

    pub fn with_layer(mut self, l: Layer) -> Self {
        self.layer = Some(l);
        self
    }

    pub fn field(&self) -> Result<SmallPrimeField, SystemError> {
        SmallPrimeField::new(self.q).map_err(|_| SystemError::BadModulus(self.q))
    }

    /// Total round count r (2 r_f + r_p for Hades).
    pub fn total_rounds(&self) -> u32 {
        if self.family == Family::Hades {
            2 * self.rf + self.rp
        } else {
            self.rounds
        }
    }

    /// Number of words the key and each round constant consist of.
    pub fn width(&self) -> usize {
        match self.family {
            Family::Mimc | Family::FeistelMimc | Family::FeistelHash => 1,
            _ => self.branches,
        }
    }

    pub fn validate(&self) -> Result<SmallPrimeField, SystemError> {
        let k = self.field()?;
        let r = self.total_rounds();
        if r == 0 {
            return Err(SystemError::Invalid("at least one round is required".into()));
        }
        if self.exponent < 2 {
            return Err(SystemError::Invalid("exponent must be at least 2".into()));
        }
        match self.family {
            Family::Mimc | Family::Hades => {
                if !is_permutation_exponent(self.exponent as u64, &k.modulus()) {
                    return Err(SystemError::NotPermutation { d: self.exponent, q: self.q });
                }
            }
            Family::FeistelMimc | Family::FeistelHash => {
                if r < 2 {
                    return Err(SystemError::Invalid("Feistel systems need at least two rounds".into()));
                }
            }
            Family::GmimcErf | Family::GmimcCrf => {}
        }
        if self.width() != 1 && self.branches < 2 {
            return Err(SystemError::Invalid("multi-branch families need n >= 2".into()));
        }
        if self.family == Family::Hades && self.rf == 0 {
            return Err(SystemError::Invalid("Hades needs r_f >= 1".into()));
        }
        if self.key_schedule == KeyScheduleKind::Affine && self.width() == 1 {
            return Err(SystemError::Invalid("affine key schedules need a multi-branch family".into()));
        }
        if let Some(c) = &self.constants {
            if c.len() != r as usize || c.iter().any(|row| row.len() != self.width()) {
                return Err(SystemError::Dimension(format!("constants must be {} rows of {} values", r, self.width())));
            }
        }
        if self.width() > 1 {
            let a = self.layer_matrix();
            if linalg::inverse(&a, self.q).is_none() {
                return Err(SystemError::SingularMatrix);
            }
            if let Some(m) = &self.matrix {
                if m.len() != self.branches || m.iter().any(|row| row.len() != self.branches) {
                    return Err(SystemError::Dimension("matrix must be n x n".into()));
                }
            }
        }
        Ok(k)
    }

    /// Round constants: explicit, or ChaCha8 seeded with `seed`, round-major, uniform in [0, q).
    pub fn round_constants(&self) -> Vec<Vec<u64>> {
        if let Some(c) = &self.constants {
            return c.iter().map(|row| row.iter().map(|v| v % self.q).collect()).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.total_rounds()).map(|_| (0..self.width()).map(|_| rng.gen_range(0..self.q)).collect()).collect()
    }

    /// The affine layer matrix A (same in every round).
    pub fn layer_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.branches;
        if let Some(m) = &self.matrix {
            return m.iter().map(|r| r.iter().map(|v| v % self.q).collect()).collect();
        }
        let default = if self.family == Family::Hades { Layer::Cauchy } else { Layer::Shift };
        match self.layer.unwrap_or(default) {
            Layer::Shift => (0..n).map(|i| (0..n).map(|j| u64::from((i + n - 1) % n == j)).collect()).collect(),
            Layer::Circulant => linalg::circulant(&(1..=n as u64).map(|v| v % self.q).collect::<Vec<_>>()),
            Layer::Cauchy => (0..n)
                .map(|i| (0..n).map(|j| linalg::inv_mod(((i + n + j) as u64) % self.q, self.q).unwrap_or(0)).collect())
                .collect(),
        }
    }

    /// Affine key schedule (M, b) with k_0 = y and k_i = M k_{i-1} + b; drawn from stream 1 of the seed.
    pub fn key_schedule_affine(&self) -> Option<(Vec<Vec<u64>>, Vec<u64>)> {
        if self.key_schedule != KeyScheduleKind::Affine {
            return None;
        }
        let n = self.branches;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        loop {
            let m: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..self.q)).collect()).collect();
            if linalg::inverse(&m, self.q).is_some() {
                let b = (0..n).map(|_| rng.gen_range(0..self.q)).collect();
                return Some((m, b));
            }
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Small dense linear algebra over F_q with q < 2^32.
pub mod linalg {
    pub fn inv_mod(a: u64, q: u64) -> Option<u64> {
        let a = a % q;
        if a == 0 {
            return None;
        }
        let (mut t, mut nt, mut r, mut nr) = (0i128, 1i128, q as i128, a as i128);
        while nr != 0 {
            let k = r / nr;
            (t, nt) = (nt, t - k * nt);
            (r, nr) = (nr, r - k * nr);
        }
        Some(t.rem_euclid(q as i128) as u64)
    }

    pub fn circulant(a: &[u64]) -> Vec<Vec<u64>> {
        let n = a.len();
        (0..n).map(|i| (0..n).map(|j| a[(j + n - i) % n]).collect()).collect()
    }

    pub fn mat_vec(m: &[Vec<u64>], v: &[u64], q: u64) -> Vec<u64> {
        m.iter().map(|row| row.iter().zip(v).fold(0, |acc, (a, b)| (acc + a * b) % q)).collect()
    }

    pub fn mat_mul(a: &[Vec<u64>], b: &[Vec<u64>], q: u64) -> Vec<Vec<u64>> {
        let n = b.first().map_or(0, |r| r.len());
        a.iter().map(|row| (0..n).map(|j| row.iter().enumerate().fold(0, |acc, (k, x)| (acc + x * b[k][j]) % q)).collect()).collect()
    }

    pub fn identity(n: usize) -> Vec<Vec<u64>> {
        (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect()
    }

    /// Rank of a matrix over F_q.
    pub fn rank(rows: &[Vec<u64>], q: u64) -> usize {
        let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v % q).collect()).collect();
        let ncols = m.first().map_or(0, |r| r.len());
        let mut rk = 0;
        for c in 0..ncols {
            let Some(p) = (rk..m.len()).find(|&i| m[i][c] != 0) else { continue };
            m.swap(rk, p);
            let inv = inv_mod(m[rk][c], q).unwrap();
            for v in m[rk].iter_mut() {
                *v = *v * inv % q;
            }
            let pivot = m[rk].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i != rk && row[c] != 0 {
                    let f = row[c];
                    for (x, p) in row.iter_mut().zip(&pivot) {
                        *x = (*x + q * q - f * p) % q;
                    }
                }
            }
            rk += 1;
        }
        rk
    }

    pub fn inverse(a: &[Vec<u64>], q: u64) -> Option<Vec<Vec<u64>>> {
        let n = a.len();
        let mut m: Vec<Vec<u64>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|v| v % q).chain((0..n).map(|j| u64::from(i == j))).collect())
            .collect();
        for c in 0..n {
            let p = (c..n).find(|&i| m[i][c] != 0)?;
            m.swap(c, p);
            let inv = inv_mod(m[c][c], q)?;
            for v in m[c].iter_mut() {
                *v = *v * inv % q;
            }
            let pivot = m[c].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i != c && row[c] != 0 {
                    let f = row[c];
                    for (x, p) in row.iter_mut().zip(&pivot) {
                        *x = (*x + q * q - f * p) % q;
                    }
                }
            }
        }
        Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
    }
}

fn powm(mut b: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    acc
}

/// Intermediate states recorded during encryption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    /// State after each round; the last entry is the ciphertext.
    pub states: Vec<Vec<u64>>,
}

impl Trace {
    pub fn output(&self) -> &[u64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

fn check_len(what: &str, v: &[u64], n: usize) -> Result<(), SystemError> {
    if v.len() != n {
        return Err(SystemError::Dimension(format!("{} has length {}, expected {}", what, v.len(), n)));
    }
    Ok(())
}

/// Round keys k_0..k_r (k_0 is the whitening key).
fn round_keys(spec: &CipherSpec, key: &[u64]) -> Vec<Vec<u64>> {
    let q = spec.q;
    let r = spec.total_rounds() as usize;
    match spec.key_schedule_affine() {
        None => vec![key.to_vec(); r + 1],
        Some((m, b)) => {
            let mut ks = vec![key.to_vec()];
            for _ in 0..r {
                let next: Vec<u64> = linalg::mat_vec(&m, ks.last().unwrap(), q).iter().zip(&b).map(|(x, y)| (x + y) % q).collect();
                ks.push(next);
            }
            ks
        }
    }
}

fn nonlinear_layer(spec: &CipherSpec, round: usize, z: &[u64]) -> Vec<u64> {
    let q = spec.q;
    let d = spec.exponent as u64;
    let n = z.len();
    match spec.family {
        Family::GmimcErf => {
            let f = powm(z[n - 1], d, q);
            (0..n).map(|j| if j + 1 < n { (z[j] + f) % q } else { z[j] }).collect()
        }
        Family::GmimcCrf => {
            let s = z[1..].iter().fold(0, |a, b| (a + b) % q);
            let mut out = z.to_vec();
            out[0] = (z[0] + powm(s, d, q)) % q;
            out
        }
        Family::Hades => {
            let rf = spec.rf as usize;
            let full = round < rf || round >= rf + spec.rp as usize;
            (0..n).map(|j| if full || j == 0 { powm(z[j], d, q) } else { z[j] }).collect()
        }
        _ => unreachable!(),
    }
}

/// Reference encryption returning every intermediate state.
pub fn encrypt_trace(spec: &CipherSpec, key: &[u64], plaintext: &[u64]) -> Result<Trace, SystemError> {
    spec.validate()?;
    let q = spec.q;
    let d = spec.exponent as u64;
    let r = spec.total_rounds() as usize;
    let c = spec.round_constants();
    check_len("key", key, spec.width())?;
    let key: Vec<u64> = key.iter().map(|v| v % q).collect();
    let mut states = Vec::with_capacity(r);
    match spec.family {
        Family::Mimc => {
            check_len("plaintext", plaintext, 1)?;
            let k = key[0];
            let mut x = plaintext[0] % q;
            for i in 0..r {
                x = powm(x + k + c[i][0], d, q);
                if i + 1 == r {
                    x = (x + k) % q;
                }
                states.push(vec![x]);
            }
        }
        Family::FeistelMimc | Family::FeistelHash => {
            check_len("plaintext", plaintext, 2)?;
            let k = key[0];
            let (mut l, mut rr) = (plaintext[0] % q, plaintext[1] % q);
            for i in 0..r {
                let mut nl = (rr + powm(l + k + c[i][0], d, q)) % q;
                if i + 1 == r {
                    nl = (nl + k) % q;
                }
                rr = l;
                l = nl;
                states.push(vec![l, rr]);
            }
        }
        Family::GmimcErf | Family::GmimcCrf | Family::Hades => {
            let n = spec.branches;
            check_len("plaintext", plaintext, n)?;
            let a = spec.layer_matrix();
            let ks = round_keys(spec, &key);
            let mut z: Vec<u64> = plaintext.iter().zip(&ks[0]).map(|(p, k)| (p + k) % q).collect();
            for i in 0..r {
                let s = nonlinear_layer(spec, i, &z);
                let m = linalg::mat_vec(&a, &s, q);
                z = (0..n).map(|j| (m[j] + c[i][j] + ks[i + 1][j]) % q).collect();
                states.push(z.clone());
            }
        }
    }
    Ok(Trace { states })
}

pub fn encrypt(spec: &CipherSpec, key: &[u64], plaintext: &[u64]) -> Result<Vec<u64>, SystemError> {
    Ok(encrypt_trace(spec, key, plaintext)?.output().to_vec())
}

/// Inverse of [`encrypt`] for MiMC and the two-branch Feistel families.
pub fn decrypt(spec: &CipherSpec, key: &[u64], ciphertext: &[u64]) -> Result<Vec<u64>, SystemError> {
    spec.validate()?;
    let q = spec.q;
    let d = spec.exponent as u64;
    let r = spec.total_rounds() as usize;
    let c = spec.round_constants();
    let k = key[0] % q;
    match spec.family {
        Family::Mimc => {
            // inverse exponent e with d e = 1 mod q - 1
            let e = inv_exponent(d, q - 1).ok_or(SystemError::NotPermutation { d: spec.exponent, q })?;
            let mut x = ciphertext[0] % q;
            for i in (0..r).rev() {
                if i + 1 == r {
                    x = (x + q - k) % q;
                }
                x = (powm(x, e, q) + 2 * q - k - c[i][0]) % q;
            }
            Ok(vec![x])
        }
        Family::FeistelMimc | Family::FeistelHash => {
            let (mut l, mut rr) = (ciphertext[0] % q, ciphertext[1] % q);
            for i in (0..r).rev() {
                let mut nl = l;
                if i + 1 == r {
                    nl = (nl + q - k) % q;
                }
                let prev_l = rr;
                let prev_r = (nl + q - powm(prev_l + k + c[i][0], d, q)) % q;
                l = prev_l;
                rr = prev_r;
            }
            Ok(vec![l, rr])
        }
        f => Err(SystemError::WrongFamily(f)),
    }
}

fn inv_exponent(d: u64, m: u64) -> Option<u64> {
    linalg::inv_mod(d, m).filter(|e| (d as u128 * *e as u128) % m as u128 == 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "role")]
pub enum Role {
    Key { index: usize },
    State { round: usize, branch: usize },
    PlaintextUnknown,
    HashOutputUnknown,
    Homogenizer,
}

/// Per-round block structure of multivariate systems: polys [n i, n i + n) form round i.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blocks {
    pub n: usize,
    pub matrices: Vec<Vec<Vec<u64>>>,
    pub transformed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub builder: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<CipherSpec>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// An ordered polynomial list with ring metadata.
#[derive(Debug, Clone)]
pub struct PolySystem {
    pub ring: PolyRing,
    pub polys: Vec<Poly>,
    pub roles: Vec<Role>,
    pub provenance: Provenance,
    pub blocks: Option<Blocks>,
}

impl PolySystem {
    pub fn new(ring: PolyRing, polys: Vec<Poly>, roles: Vec<Role>, provenance: Provenance) -> Self {
        assert_eq!(roles.len(), ring.nvars(), "one role per variable");
        PolySystem { ring, polys, roles, provenance, blocks: None }
    }

    pub fn q(&self) -> u64 {
        self.ring.field().p()
    }

    pub fn nvars(&self) -> usize {
        self.ring.nvars()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(|p| p.degree()).collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.ring.index_of(name)
    }

    /// Evaluates every polynomial at the point (ordered as the ring variables).
    pub fn evaluate(&self, point: &[u64]) -> Vec<u64> {
        self.polys.iter().map(|p| p.evaluate(point)).collect()
    }

    pub fn vanishes_at(&self, point: &[u64]) -> bool {
        self.evaluate(point).iter().all(|v| *v == 0)
    }

    pub fn render(&self) -> Vec<String> {
        self.polys.iter().map(|p| p.render()).collect()
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.provenance.notes.push(s.into());
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "q": self.q(),
            "order": match self.ring.order() { OrderKind::Drl => "drl", OrderKind::Lex => "lex" },
            "variables": self.ring.names(),
            "roles": self.roles,
            "polys": self.render(),
            "provenance": self.provenance,
        })
    }

    /// Loads a system from its JSON form, validating every field.
    pub fn from_json(v: &serde_json::Value) -> Result<Self, SystemError> {
        let bad = |s: &str| SystemError::Invalid(s.to_string());
        let q = v.get("q").and_then(|x| x.as_u64()).ok_or_else(|| bad("/q: expected a prime integer"))?;
        let k = SmallPrimeField::new(q).map_err(|_| SystemError::BadModulus(q))?;
        let order = match v.get("order").and_then(|x| x.as_str()).unwrap_or("drl") {
            "drl" => OrderKind::Drl,
            "lex" => OrderKind::Lex,
            _ => return Err(bad("/order: expected \"drl\" or \"lex\"")),
        };
        let names: Vec<String> = serde_json::from_value(v.get("variables").cloned().unwrap_or_default()).map_err(|_| bad("/variables: expected a list of names"))?;
        let ring = Ring::new(k, &names, order)?;
        let texts: Vec<String> = serde_json::from_value(v.get("polys").cloned().unwrap_or_default()).map_err(|_| bad("/polys: expected a list of strings"))?;
        let polys = texts.iter().map(|t| ring.parse(t)).collect::<Result<Vec<_>, _>>()?;
        let roles: Vec<Role> = match v.get("roles") {
            Some(r) => serde_json::from_value(r.clone()).map_err(|_| bad("/roles: malformed role list"))?,
            None => (0..names.len()).map(|i| Role::State { round: 0, branch: i }).collect(),
        };
        if roles.len() != names.len() {
            return Err(bad("/roles: one role per variable required"));
        }
        let provenance = match v.get("provenance") {
            Some(p) => serde_json::from_value(p.clone()).map_err(|_| bad("/provenance: malformed"))?,
            None => Provenance { builder: "json".into(), spec: None, notes: vec![] },
        };
        Ok(PolySystem { ring, polys, roles, provenance, blocks: None })
    }
}

fn prov(builder: &str, spec: &CipherSpec) -> Provenance {
    Provenance { builder: builder.into(), spec: Some(spec.clone()), notes: vec![] }
}

fn gi(ring: &PolyRing, x: &Poly, y: &Poly, c: u64, d: u32) -> Poly {
    x.add(y).add(&ring.constant_u64(c)).pow(d)
}

/// MiMC: (p + y + c_1)^d - x_1, (x_{i-1} + y + c_i)^d - x_i, (x_{r-1} + y + c_r)^d + y - c.
pub fn build_mimc_system(spec: &CipherSpec, p: u64, c: u64) -> Result<PolySystem, SystemError> {
    if spec.family != Family::Mimc {
        return Err(SystemError::WrongFamily(spec.family));
    }
    let k = spec.validate()?;
    let r = spec.rounds as usize;
    let names: Vec<String> = (1..r).map(|i| format!("x{}", i)).chain(["y".to_string()]).collect();
    let ring = Ring::new(k, &names, OrderKind::Drl)?;
    let cs = spec.round_constants();
    let polys = iterated_polys(&ring, spec.exponent, &cs.iter().map(|v| v[0]).collect::<Vec<_>>(), p, c, &(0..r - 1).collect::<Vec<_>>(), r - 1);
    let mut roles: Vec<Role> = (0..r - 1).map(|i| Role::State { round: i + 1, branch: 0 }).collect();
    roles.push(Role::Key { index: 0 });
    Ok(PolySystem::new(ring, polys, roles, prov("mimc", spec)))
}

/// Shared univariate iterated chain over state variables `xs` and key variable `yv`.
fn iterated_polys(ring: &PolyRing, d: u32, cs: &[u64], p: u64, c: u64, xs: &[usize], yv: usize) -> Vec<Poly> {
    let r = cs.len();
    let y = ring.var(yv);
    let mut out = Vec::with_capacity(r);
    for i in 0..r {
        let input = if i == 0 { ring.constant_u64(p) } else { ring.var(xs[i - 1]) };
        let mut f = gi(ring, &input, &y, cs[i], d);
        if i + 1 == r {
            f = f.add(&y).sub(&ring.constant_u64(c));
        } else {
            f = f.sub(&ring.var(xs[i]));
        }
        out.push(f);
    }
    out
}

/// Solution point of the MiMC system for the true key.
pub fn mimc_point(spec: &CipherSpec, key: u64, p: u64) -> Result<Vec<u64>, SystemError> {
    let t = encrypt_trace(spec, &[key], &[p])?;
    let r = spec.rounds as usize;
    Ok(t.states[..r - 1].iter().map(|s| s[0]).chain([key % spec.q]).collect())
}

/// Two-plaintext MiMC system over u_1 > ... > u_{r-1} > v_1 > ... > v_{r-1} > y.
pub fn build_two_plaintext_system(spec: &CipherSpec, pair1: (u64, u64), pair2: (u64, u64)) -> Result<PolySystem, SystemError> {
    if spec.family != Family::Mimc {
        return Err(SystemError::WrongFamily(spec.family));
    }
    let k = spec.validate()?;
    let q = spec.q;
    if (pair1.0 % q, pair1.1 % q) == (pair2.0 % q, pair2.1 % q) {
        return Err(SystemError::IdenticalPairs);
    }
    let r = spec.rounds as usize;
    let mut names: Vec<String> = (1..r).map(|i| format!("u{}", i)).collect();
    names.extend((1..r).map(|i| format!("v{}", i)));
    names.push("y".into());
    let ring = Ring::new(k, &names, OrderKind::Drl)?;
    let cs: Vec<u64> = spec.round_constants().iter().map(|v| v[0]).collect();
    let us: Vec<usize> = (0..r - 1).collect();
    let vs: Vec<usize> = (r - 1..2 * r - 2).collect();
    let yv = 2 * r - 2;
    let mut polys = iterated_polys(&ring, spec.exponent, &cs, pair1.0, pair1.1, &us, yv);
    polys.extend(iterated_polys(&ring, spec.exponent, &cs, pair2.0, pair2.1, &vs, yv));
    let mut roles: Vec<Role> = (0..r - 1).map(|i| Role::State { round: i + 1, branch: 0 }).collect();
    roles.extend((0..r - 1).map(|i| Role::State { round: i + 1, branch: 1 }));
    roles.push(Role::Key { index: 0 });
    Ok(PolySystem::new(ring, polys, roles, prov("two_plaintext", spec)))
}

fn feistel_names(r: usize) -> Vec<String> {
    let mut names = Vec::new();
    for i in 1..r {
        names.push(format!("xL{}", i));
        names.push(format!("xR{}", i));
    }
    names
}

/// Feistel-2n/n system f_{L,1}, f_{R,1}, ..., f_{L,r}, f_{R,r} over x_{L,1} > x_{R,1} > ... > x_{R,r-1} > y.
pub fn build_feistel_system(spec: &CipherSpec, p: (u64, u64), c: (u64, u64)) -> Result<PolySystem, SystemError> {
    if spec.family != Family::FeistelMimc {
        return Err(SystemError::WrongFamily(spec.family));
    }
    let k = spec.validate()?;
    let r = spec.rounds as usize;
    let mut names = feistel_names(r);
    names.push("y".into());
    let ring = Ring::new(k, &names, OrderKind::Drl)?;
    let y = ring.var(2 * r - 2);
    let cs: Vec<u64> = spec.round_constants().iter().map(|v| v[0]).collect();
    let xl = |i: usize| ring.var(2 * (i - 1));
    let xr = |i: usize| ring.var(2 * (i - 1) + 1);
    let d = spec.exponent;
    let mut polys = Vec::with_capacity(2 * r);
    for i in 1..=r {
        let (pl, pr) = if i == 1 { (ring.constant_u64(p.0), ring.constant_u64(p.1)) } else { (xl(i - 1), xr(i - 1)) };
        let mut g = gi(&ring, &pl, &y, cs[i - 1], d);
        if i == r {
            g = g.add(&y);
        }
        let (ol, or) = if i == r { (ring.constant_u64(c.0), ring.constant_u64(c.1)) } else { (xl(i), xr(i)) };
        polys.push(pr.add(&g).sub(&ol));
        polys.push(pl.sub(&or));
    }
    let mut roles = Vec::new();
    for i in 1..r {
        roles.push(Role::State { round: i, branch: 0 });
        roles.push(Role::State { round: i, branch: 1 });
    }
    roles.push(Role::Key { index: 0 });
    Ok(PolySystem::new(ring, polys, roles, prov("feistel", spec)))
}

/// Solution point of the Feistel system for the true key.
pub fn feistel_point(spec: &CipherSpec, key: u64, p: (u64, u64)) -> Result<Vec<u64>, SystemError> {
    let t = encrypt_trace(spec, &[key], &[p.0, p.1])?;
    let r = spec.rounds as usize;
    let mut pt: Vec<u64> = t.states[..r - 1].iter().flat_map(|s| s.clone()).collect();
    pt.push(key % spec.q);
    Ok(pt)
}

/// Hash preimage system Feistel(m) = (alpha, x_2) with key 0. Variables:
/// x_{R,r-1} > x_{L,r-1} > ... > x_{R,1} > x_{L,1} > x_1 > x_2; the state
/// x_{L,r-1} is identified with x_2 through f_{R,r}.
pub fn build_hash_preimage_system(spec: &CipherSpec, alpha: u64) -> Result<PolySystem, SystemError> {
    if spec.family != Family::FeistelHash {
        return Err(SystemError::WrongFamily(spec.family));
    }
    let k = spec.validate()?;
    let r = spec.rounds as usize;
    let mut names = Vec::new();
    for i in (1..r).rev() {
        names.push(format!("xR{}", i));
        names.push(format!("xL{}", i));
    }
    names.push("x1".into());
    names.push("x2".into());
    let ring = Ring::new(k, &names, OrderKind::Drl)?;
    let idx = |s: String| ring.index_of(&s).unwrap();
    let xl = |i: usize| ring.var(idx(format!("xL{}", i)));
    let xr = |i: usize| ring.var(idx(format!("xR{}", i)));
    let x1 = ring.var(2 * r - 2);
    let x2 = ring.var(2 * r - 1);
    let zero = ring.zero();
    let cs: Vec<u64> = spec.round_constants().iter().map(|v| v[0]).collect();
    let d = spec.exponent;
    let (p_l, p_r) = match spec.hash_input {
        HashInput::Left => (x1.clone(), ring.zero()),
        HashInput::Right => (ring.zero(), x1.clone()),
    };
    let mut polys = Vec::with_capacity(2 * r);
    for i in 1..=r {
        let (pl, pr) = if i == 1 { (p_l.clone(), p_r.clone()) } else { (xl(i - 1), xr(i - 1)) };
        let g = gi(&ring, &pl, &zero, cs[i - 1], d);
        let (ol, or) = if i == r { (ring.constant_u64(alpha), x2.clone()) } else { (xl(i), xr(i)) };
        polys.push(pr.add(&g).sub(&ol));
        polys.push(pl.sub(&or));
    }
    let mut roles = Vec::new();
    for i in (1..r).rev() {
        roles.push(Role::State { round: i, branch: 1 });
        roles.push(Role::State { round: i, branch: 0 });
    }
    roles.push(Role::PlaintextUnknown);
    roles.push(Role::HashOutputUnknown);
    let input = match spec.hash_input {
        HashInput::Left => "message enters the left branch: Feistel(x1, 0) = (alpha, x2)",
        HashInput::Right => "message enters the right branch: Feistel(0, x1) = (alpha, x2)",
    };
    Ok(PolySystem::new(ring, polys, roles, prov("hash_preimage", spec)).note(input))
}

/// Plaintext block for a hash message under the spec's input convention.
pub fn hash_plaintext(spec: &CipherSpec, x1: u64) -> [u64; 2] {
    match spec.hash_input {
        HashInput::Left => [x1, 0],
        HashInput::Right => [0, x1],
    }
}

/// Solution point of the hash system for message x1.
pub fn hash_point(spec: &CipherSpec, x1: u64) -> Result<(u64, Vec<u64>), SystemError> {
    let t = encrypt_trace(spec, &[0], &hash_plaintext(spec, x1))?;
    let r = spec.rounds as usize;
    let mut pt = Vec::new();
    for i in (1..r).rev() {
        pt.push(t.states[i - 1][1]);
        pt.push(t.states[i - 1][0]);
    }
    let out = t.output();
    pt.push(x1 % spec.q);
    pt.push(out[1]);
    Ok((out[0], pt))
}

fn mv_names(n: usize, r: usize) -> Vec<String> {
    let mut names = Vec::new();
    for i in 1..r {
        for j in 1..=n {
            names.push(format!("x{}_{}", i, j));
        }
    }
    for j in 1..=n {
        names.push(format!("y{}", j));
    }
    names
}

fn affine_key_polys(spec: &CipherSpec, ring: &PolyRing, ys: &[Poly]) -> Vec<Vec<Poly>> {
    let q = spec.q;
    let r = spec.total_rounds() as usize;
    match spec.key_schedule_affine() {
        None => vec![ys.to_vec(); r + 1],
        Some((m, b)) => {
            let mut ks = vec![ys.to_vec()];
            for _ in 0..r {
                let prev = ks.last().unwrap();
                let next: Vec<Poly> = (0..ys.len())
                    .map(|i| {
                        let mut acc = ring.constant_u64(b[i] % q);
                        for (j, pj) in prev.iter().enumerate() {
                            acc = acc.add(&pj.scale(&(m[i][j] % q)));
                        }
                        acc
                    })
                    .collect();
                ks.push(next);
            }
            ks
        }
    }
}

fn nonlinear_poly_layer(spec: &CipherSpec, ring: &PolyRing, round: usize, z: &[Poly]) -> Vec<Poly> {
    let d = spec.exponent;
    let n = z.len();
    match spec.family {
        Family::GmimcErf => {
            let f = z[n - 1].pow(d);
            (0..n).map(|j| if j + 1 < n { z[j].add(&f) } else { z[j].clone() }).collect()
        }
        Family::GmimcCrf => {
            let s = z[1..].iter().fold(ring.zero(), |a, b| a.add(b));
            let mut out = z.to_vec();
            out[0] = z[0].add(&s.pow(d));
            out
        }
        Family::Hades => {
            let rf = spec.rf as usize;
            let full = round < rf || round >= rf + spec.rp as usize;
            (0..n).map(|j| if full || j == 0 { z[j].pow(d) } else { z[j].clone() }).collect()
        }
        _ => unreachable!(),
    }
}

/// Multivariate keyed iterated system A P(z) + c_i + k_i - x^{(i)} flattened round-major.
fn build_multivariate(spec: &CipherSpec, p: &[u64], c: &[u64], builder: &str) -> Result<PolySystem, SystemError> {
    let k = spec.validate()?;
    let n = spec.branches;
    let r = spec.total_rounds() as usize;
    check_len("plaintext", p, n)?;
    check_len("ciphertext", c, n)?;
    let ring = Ring::new(k, &mv_names(n, r), OrderKind::Drl)?;
    let ys: Vec<Poly> = (0..n).map(|j| ring.var(n * (r - 1) + j)).collect();
    let xs = |i: usize| -> Vec<Poly> { (0..n).map(|j| ring.var(n * (i - 1) + j)).collect() };
    let keys = affine_key_polys(spec, &ring, &ys);
    let a = spec.layer_matrix();
    let cs = spec.round_constants();
    let mut polys = Vec::with_capacity(n * r);
    for i in 1..=r {
        let z: Vec<Poly> = if i == 1 { (0..n).map(|j| keys[0][j].add(&ring.constant_u64(p[j]))).collect() } else { xs(i - 1) };
        let s = nonlinear_poly_layer(spec, &ring, i - 1, &z);
        let out: Vec<Poly> = if i == r { c.iter().map(|v| ring.constant_u64(*v)).collect() } else { xs(i) };
        for row in 0..n {
            let mut f = ring.constant_u64(cs[i - 1][row]).add(&keys[i][row]).sub(&out[row]);
            for (col, sc) in s.iter().enumerate() {
                if a[row][col] != 0 {
                    f = f.add(&sc.scale(&a[row][col]));
                }
            }
            polys.push(f);
        }
    }
    let mut roles = Vec::new();
    for i in 1..r {
        for j in 0..n {
            roles.push(Role::State { round: i, branch: j });
        }
    }
    for j in 0..n {
        roles.push(Role::Key { index: j });
    }
    let mut sys = PolySystem::new(ring, polys, roles, prov(builder, spec));
    if matches!(spec.family, Family::GmimcErf | Family::GmimcCrf) {
        sys = sys.note("round constants are added after the affine layer");
    }
    sys.blocks = Some(Blocks { n, matrices: vec![a; r], transformed: false });
    Ok(sys)
}

pub fn build_gmimc_system(spec: &CipherSpec, p: &[u64], c: &[u64]) -> Result<PolySystem, SystemError> {
    if !matches!(spec.family, Family::GmimcErf | Family::GmimcCrf) {
        return Err(SystemError::WrongFamily(spec.family));
    }
    build_multivariate(spec, p, c, "gmimc")
}

pub fn build_hades_system(spec: &CipherSpec, p: &[u64], c: &[u64]) -> Result<PolySystem, SystemError> {
    if spec.family != Family::Hades {
        return Err(SystemError::WrongFamily(spec.family));
    }
    build_multivariate(spec, p, c, "hades")
}

/// Solution point (x^{(1)}, ..., x^{(r-1)}, y) of a multivariate system.
pub fn multivariate_point(spec: &CipherSpec, key: &[u64], p: &[u64]) -> Result<(Vec<u64>, Vec<u64>), SystemError> {
    let t = encrypt_trace(spec, key, p)?;
    let r = spec.total_rounds() as usize;
    let mut pt: Vec<u64> = t.states[..r - 1].iter().flat_map(|s| s.clone()).collect();
    pt.extend(key.iter().map(|v| v % spec.q));
    Ok((t.output().to_vec(), pt))
}

/// Appends v^q - v for each selected variable.
pub fn append_field_equations(sys: &PolySystem, vars: &[usize]) -> PolySystem {
    let mut out = sys.clone();
    let q = sys.q() as u32;
    for &v in vars {
        let x = sys.ring.var(v);
        out.polys.push(x.pow(q).sub(&x));
    }
    if !vars.is_empty() {
        let names: Vec<&str> = vars.iter().map(|&v| sys.ring.names()[v].as_str()).collect();
        out.provenance.notes.push(format!("field equations for {}", names.join(", ")));
    }
    out
}

fn apply_blocks(sys: &PolySystem, inverse: bool) -> Result<PolySystem, SystemError> {
    let blocks = sys.blocks.as_ref().ok_or_else(|| SystemError::Invalid("system has no round structure".into()))?;
    let q = sys.q();
    let n = blocks.n;
    let mut out = sys.clone();
    for (i, a) in blocks.matrices.iter().enumerate() {
        let m = if inverse { linalg::inverse(a, q).ok_or(SystemError::SingularMatrix)? } else { a.clone() };
        for row in 0..n {
            let mut acc = sys.ring.zero();
            for col in 0..n {
                if m[row][col] != 0 {
                    acc = acc.add(&sys.polys[n * i + col].scale(&m[row][col]));
                }
            }
            out.polys[n * i + row] = acc;
        }
    }
    out.blocks.as_mut().unwrap().transformed = inverse;
    Ok(out)
}

/// G = {A_i^{-1} f^{(i)}}.
pub fn spn_transform(sys: &PolySystem) -> Result<PolySystem, SystemError> {
    match sys.provenance.spec.as_ref().map(|s| s.family) {
        Some(Family::Hades) | Some(Family::GmimcCrf) | Some(Family::GmimcErf) => {}
        Some(f) => return Err(SystemError::WrongFamily(f)),
        None => return Err(SystemError::Invalid("system has no cipher spec".into())),
    }
    Ok(apply_blocks(sys, true)?.note("round blocks multiplied by A^-1"))
}

/// Undoes [`spn_transform`] by multiplying each round block by A.
pub fn spn_untransform(sys: &PolySystem) -> Result<PolySystem, SystemError> {
    apply_blocks(sys, false)
}

/// (A^{-1} f)_j - (A^{-1} f)_1 for 2 <= j <= n-1; components 1 and n unchanged.
pub fn gmimc_erf_transform(sys: &PolySystem) -> Result<PolySystem, SystemError> {
    match sys.provenance.spec.as_ref().map(|s| s.family) {
        Some(Family::GmimcErf) => {}
        Some(f) => return Err(SystemError::WrongFamily(f)),
        None => return Err(SystemError::Invalid("system has no cipher spec".into())),
    }
    let mut t = apply_blocks(sys, true)?;
    let n = t.blocks.as_ref().unwrap().n;
    let r = t.polys.len() / n;
    for i in 0..r {
        let first = t.polys[n * i].clone();
        for j in 1..n - 1 {
            t.polys[n * i + j] = t.polys[n * i + j].sub(&first);
        }
    }
    Ok(t.note("erf differences taken against the first branch"))
}

/// Substitutes each affine polynomial (in list order) for its leading variable,
/// drops it, and removes that variable from the ring.
pub fn eliminate_linear(sys: &PolySystem) -> Result<PolySystem, SystemError> {
    let ring = &sys.ring;
    let k = ring.field().clone();
    let mut polys: Vec<Option<Poly>> = sys.polys.iter().cloned().map(Some).collect();
    let mut removed = vec![false; ring.nvars()];
    let mut i = 0;
    while i < polys.len() {
        let Some(f) = polys[i].clone() else {
            i += 1;
            continue;
        };
        if f.is_zero() || f.degree() != 1 {
            i += 1;
            continue;
        }
        let lm_var = f.lm().pure_power_var().unwrap();
        // v = -(f - lc v) / lc
        let lc = f.lc().clone();
        let lead = ring.var(lm_var).scale(&lc);
        let rest = f.sub(&lead);
        let value = rest.scale(&k.neg(&k.inv(&lc).unwrap()));
        polys[i] = None;
        removed[lm_var] = true;
        for g in polys.iter_mut().flatten() {
            if g.degree_in(lm_var) > 0 {
                *g = g.substitute(lm_var, &value);
            }
        }
        i = 0;
    }
    let keep: Vec<usize> = (0..ring.nvars()).filter(|v| !removed[*v]).collect();
    let names: Vec<String> = keep.iter().map(|&v| ring.names()[v].clone()).collect();
    let new_ring = Ring::new(k, &names, ring.order())?;
    let mut out_polys = Vec::new();
    for p in polys.into_iter().flatten() {
        if !p.is_zero() {
            out_polys.push(p.to_ring(&new_ring)?);
        }
    }
    let roles = keep.iter().map(|&v| sys.roles[v]).collect();
    let mut out = PolySystem::new(new_ring, out_polys, roles, sys.provenance.clone());
    out.provenance.notes.push(format!("eliminated {} variables by affine substitution", ring.nvars() - keep.len()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solutions(sys: &PolySystem) -> Vec<Vec<u64>> {
        let q = sys.q();
        let n = sys.nvars();
        let total = q.pow(n as u32);
        let mut out = Vec::new();
        for mut code in 0..total {
            let pt: Vec<u64> = (0..n)
                .map(|_| {
                    let v = code % q;
                    code /= q;
                    v
                })
                .collect();
            if sys.vanishes_at(&pt) {
                out.push(pt);
            }
        }
        out
    }

    #[test]
    fn mimc_encrypt_examples() {
        let bad = CipherSpec::mimc(13, 2);
        assert_eq!(bad.validate().unwrap_err(), SystemError::NotPermutation { d: 3, q: 13 });
        let s = CipherSpec::mimc(11, 1).with_constants(vec![vec![0]]);
        assert_eq!(encrypt(&s, &[0], &[2]).unwrap(), vec![8]);
        let s = CipherSpec::mimc(11, 4).with_seed(5);
        for k in 0..11 {
            for p in 0..11 {
                let c = encrypt(&s, &[k], &[p]).unwrap();
                assert_eq!(decrypt(&s, &[k], &c).unwrap(), vec![p]);
            }
        }
    }

    #[test]
    fn feistel_round_trip_f13() {
        let s = CipherSpec::feistel(13, 4).with_constants(vec![vec![0]; 4]);
        for k in 0..13 {
            for l in 0..13 {
                for r in [0, 5, 12] {
                    let c = encrypt(&s, &[k], &[l, r]).unwrap();
                    assert_eq!(decrypt(&s, &[k], &c).unwrap(), vec![l, r]);
                }
            }
        }
        // keys consistent with (0,0) -> (0,0)
        let keys: Vec<u64> = (0..13).filter(|k| encrypt(&s, &[*k], &[0, 0]).unwrap() == vec![0, 0]).collect();
        assert!(keys.contains(&0));
    }

    #[test]
    fn mimc_system_shape() {
        let s = CipherSpec::mimc(11, 1).with_constants(vec![vec![4]]);
        let sys = build_mimc_system(&s, 3, 7).unwrap();
        assert_eq!(sys.polys.len(), 1);
        let r = &sys.ring;
        let y = r.var(0);
        assert_eq!(sys.polys[0], y.add(&r.constant_u64(7)).pow(3).add(&y).sub(&r.constant_u64(7)));
        let s = CipherSpec::mimc(11, 3).with_seed(1);
        let sys = build_mimc_system(&s, 3, 7).unwrap();
        let lms: Vec<String> = sys.polys.iter().map(|p| r_m(&sys, p)).collect();
        assert_eq!(lms, vec!["y^3", "x1^3", "x2^3"]);
    }

    fn r_m(sys: &PolySystem, p: &Poly) -> String {
        sys.ring.monomial(p.lm().clone(), 1).render()
    }

    #[test]
    fn true_key_zeroes_every_family() {
        for seed in 0..5u64 {
            let s = CipherSpec::mimc(11, 3).with_seed(seed);
            let c = encrypt(&s, &[seed + 2], &[4]).unwrap()[0];
            let sys = build_mimc_system(&s, 4, c).unwrap();
            assert!(sys.vanishes_at(&mimc_point(&s, seed + 2, 4).unwrap()));

            let c2 = encrypt(&s, &[seed + 2], &[9]).unwrap()[0];
            let two = build_two_plaintext_system(&s, (4, c), (9, c2)).unwrap();
            let mut pt = mimc_point(&s, seed + 2, 4).unwrap();
            let key = pt.pop().unwrap();
            let mut p2 = mimc_point(&s, seed + 2, 9).unwrap();
            p2.pop();
            pt.extend(p2);
            pt.push(key);
            assert!(two.vanishes_at(&pt));

            let f = CipherSpec::feistel(13, 4).with_seed(seed);
            let c = encrypt(&f, &[seed], &[1, 2]).unwrap();
            let sys = build_feistel_system(&f, (1, 2), (c[0], c[1])).unwrap();
            assert_eq!(sys.polys.len(), 8);
            assert!(sys.vanishes_at(&feistel_point(&f, seed, (1, 2)).unwrap()));

            for input in [HashInput::Left, HashInput::Right] {
                let mut h = CipherSpec::hash(11, 4).with_seed(seed);
                h.hash_input = input;
                let (alpha, pt) = hash_point(&h, 3).unwrap();
                let sys = build_hash_preimage_system(&h, alpha).unwrap();
                assert!(sys.vanishes_at(&pt));
                let out = encrypt(&h, &[0], &hash_plaintext(&h, 3)).unwrap();
                assert_eq!(out[0], alpha);
            }

            for fam in [true, false] {
                let mut g = CipherSpec::gmimc(fam, 11, 3, 4).with_seed(seed);
                if seed % 2 == 1 {
                    g.key_schedule = KeyScheduleKind::Affine;
                }
                let key = [1, seed, 5];
                let (c, pt) = multivariate_point(&g, &key, &[2, 3, 4]).unwrap();
                let sys = build_gmimc_system(&g, &[2, 3, 4], &c).unwrap();
                assert_eq!(sys.polys.len(), 12);
                assert!(sys.vanishes_at(&pt));
            }
            let hd = CipherSpec::hades(11, 2, 1, 2).with_seed(seed);
            let (c, pt) = multivariate_point(&hd, &[seed, 3], &[2, 7]).unwrap();
            let sys = build_hades_system(&hd, &[2, 7], &c).unwrap();
            assert!(sys.vanishes_at(&pt));
        }
    }

    #[test]
    fn builders_reject_bad_input() {
        let s = CipherSpec::mimc(11, 2);
        assert_eq!(build_two_plaintext_system(&s, (1, 2), (1, 2)).unwrap_err(), SystemError::IdenticalPairs);
        assert!(matches!(build_feistel_system(&CipherSpec::feistel(11, 1), (0, 0), (0, 0)), Err(SystemError::Invalid(_))));
        assert!(matches!(build_feistel_system(&s, (0, 0), (0, 0)), Err(SystemError::WrongFamily(Family::Mimc))));
        let mut g = CipherSpec::gmimc(true, 11, 3, 3);
        g.matrix = Some(vec![vec![1, 1, 1], vec![1, 1, 1], vec![0, 0, 1]]);
        assert_eq!(g.validate().unwrap_err(), SystemError::SingularMatrix);
        let bad_c = CipherSpec::mimc(11, 2).with_constants(vec![vec![1]]);
        assert!(matches!(bad_c.validate(), Err(SystemError::Dimension(_))));
    }

    #[test]
    fn field_equations() {
        let s = CipherSpec::mimc(11, 2).with_seed(3);
        let sys = build_mimc_system(&s, 1, 5).unwrap();
        assert_eq!(append_field_equations(&sys, &[]).polys, sys.polys);
        let fe = append_field_equations(&sys, &[1]);
        assert_eq!(fe.polys.len(), 3);
        assert_eq!(fe.polys[2].degree(), 11);
        let s5 = CipherSpec::mimc(5, 2).with_seed(3);
        let c = encrypt(&s5, &[2], &[1]).unwrap()[0];
        let sys = build_mimc_system(&s5, 1, c).unwrap();
        let all = append_field_equations(&sys, &[0, 1]);
        assert_eq!(solutions(&all), solutions(&sys));
        assert!(solutions(&sys).contains(&mimc_point(&s5, 2, 1).unwrap()));
    }

    #[test]
    fn spn_transform_round_trip_and_pure_powers() {
        let hd = CipherSpec::hades(11, 2, 1, 1).with_seed(4);
        let (c, _) = multivariate_point(&hd, &[1, 2], &[3, 4]).unwrap();
        let sys = build_hades_system(&hd, &[3, 4], &c).unwrap();
        let t = spn_transform(&sys).unwrap();
        assert_eq!(spn_untransform(&t).unwrap().polys, sys.polys);
        let full = CipherSpec::hades(11, 2, 1, 0).with_seed(4);
        let (c, _) = multivariate_point(&full, &[1, 2], &[3, 4]).unwrap();
        let t = spn_transform(&build_hades_system(&full, &[3, 4], &c).unwrap()).unwrap();
        for p in &t.polys {
            assert!(p.lm().pure_power_var().is_some());
            assert_eq!(p.degree(), 3);
        }
        assert!(matches!(spn_transform(&build_mimc_system(&CipherSpec::mimc(11, 2), 1, 1).unwrap()), Err(SystemError::WrongFamily(_))));
    }

    #[test]
    fn hades_elimination_counts_and_solutions() {
        let hd = CipherSpec::hades(5, 2, 1, 1).with_seed(2);
        let (c, pt) = multivariate_point(&hd, &[1, 3], &[2, 0]).unwrap();
        let sys = build_hades_system(&hd, &[2, 0], &c).unwrap();
        let el = eliminate_linear(&spn_transform(&sys).unwrap()).unwrap();
        assert_eq!(el.nvars(), 2 * 2 * 1 + 1);
        assert_eq!(el.polys.len(), 5);
        let before = solutions(&sys);
        assert!(before.contains(&pt));
        let after = solutions(&el);
        assert_eq!(before.len(), after.len());
        let keep: Vec<usize> = el.ring.names().iter().map(|n| sys.var_index(n).unwrap()).collect();
        let projected: Vec<Vec<u64>> = before.iter().map(|s| keep.iter().map(|&i| s[i]).collect()).collect();
        for s in &after {
            assert!(projected.contains(s));
        }
    }

    #[test]
    fn gmimc_erf_one_nonlinear_per_round() {
        let g = CipherSpec::gmimc(true, 11, 3, 2).with_seed(8);
        let (c, _) = multivariate_point(&g, &[1, 2, 3], &[0, 1, 2]).unwrap();
        let sys = build_gmimc_system(&g, &[0, 1, 2], &c).unwrap();
        let t = gmimc_erf_transform(&sys).unwrap();
        let nonlinear = t.polys.iter().filter(|p| p.degree() > 1).count();
        assert_eq!(nonlinear, 2);
        let el = eliminate_linear(&t).unwrap();
        assert_eq!(el.polys.len(), 2);
        assert!(el.polys.iter().all(|p| p.degree() > 1));
        assert!(matches!(gmimc_erf_transform(&build_hades_system(&CipherSpec::hades(11, 2, 1, 1), &[0, 0], &[0, 0]).unwrap()), Err(SystemError::WrongFamily(_))));
    }

    #[test]
    fn hash_system_counts() {
        for r in 3..=5 {
            let h = CipherSpec::hash(11, r).with_seed(r as u64);
            let (alpha, _) = hash_point(&h, 6).unwrap();
            let sys = build_hash_preimage_system(&h, alpha).unwrap();
            let el = eliminate_linear(&sys).unwrap();
            assert_eq!(el.polys.iter().filter(|p| p.degree() == 3).count(), r as usize - 1);
            assert_eq!(el.nvars(), r as usize - 1);
        }
    }

    #[test]
    fn hash_preimage_brute_force_r3() {
        let h = CipherSpec::hash(11, 3).with_seed(7);
        let (alpha, _) = hash_point(&h, 5).unwrap();
        let sys = build_hash_preimage_system(&h, alpha).unwrap();
        for x1 in 0..11 {
            let (a, pt) = hash_point(&h, x1).unwrap();
            if a == alpha {
                assert!(sys.vanishes_at(&pt));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let s = CipherSpec::feistel(13, 3).with_seed(9);
        let sys = build_feistel_system(&s, (1, 1), (2, 3)).unwrap();
        let back = PolySystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(back.polys, sys.polys);
        assert_eq!(back.roles, sys.roles);
        let spec_json = serde_json::to_string(&s).unwrap();
        let s2: CipherSpec = serde_json::from_str(&spec_json).unwrap();
        assert_eq!(s, s2);
        assert_eq!(s.digest(), s2.digest());
        assert!(serde_json::from_str::<CipherSpec>(r#"{"family":"mimc","q":11,"bogus":1}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn encrypt_trace_zeroes_system(seed in 0u64..1000, key in 0u64..11, p in 0u64..11) {
            let s = CipherSpec::mimc(11, 3).with_seed(seed);
            let c = encrypt(&s, &[key], &[p]).unwrap()[0];
            let sys = build_mimc_system(&s, p, c).unwrap();
            prop_assert!(sys.vanishes_at(&mimc_point(&s, key, p).unwrap()));
            let lms: Vec<_> = sys.polys.iter().map(|f| f.lm().clone()).collect();
            for i in 0..lms.len() {
                for j in i + 1..lms.len() {
                    prop_assert!(lms[i].is_coprime(&lms[j]));
                }
            }
        }

        #[test]
        fn erf_transform_preserves_solutions(seed in 0u64..200) {
            let g = CipherSpec::gmimc(true, 5, 3, 2).with_seed(seed);
            let (c, pt) = multivariate_point(&g, &[1, 2, 3], &[0, 1, 2]).unwrap();
            let sys = build_gmimc_system(&g, &[0, 1, 2], &c).unwrap();
            let t = gmimc_erf_transform(&sys).unwrap();
            prop_assert!(t.vanishes_at(&pt));
            prop_assert_eq!(solutions(&t), solutions(&sys));
        }
    }
}
