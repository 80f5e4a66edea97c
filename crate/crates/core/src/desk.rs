//! Seeded desk-scale instances: a cipher spec, a known key, and the polynomial model
//! of one attack with its solution point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::shapelex::{recover_key, ShapeError, ShapeOptions};
use crate::systems::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeskFamily {
    Mimc,
    TwoPlaintext,
    Feistel,
    Hash,
    GmimcCrf,
    GmimcErf,
    Hades,
}

impl DeskFamily {
    pub const ALL: [DeskFamily; 7] = [
        DeskFamily::Mimc,
        DeskFamily::TwoPlaintext,
        DeskFamily::Feistel,
        DeskFamily::Hash,
        DeskFamily::GmimcCrf,
        DeskFamily::GmimcErf,
        DeskFamily::Hades,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).ok()
    }

    pub fn name(&self) -> String {
        serde_json::to_value(self).unwrap().as_str().unwrap().to_string()
    }

    /// Families whose model is a univariate chain in one key variable.
    pub fn is_iterated(&self) -> bool {
        matches!(self, DeskFamily::Mimc | DeskFamily::TwoPlaintext | DeskFamily::Feistel | DeskFamily::Hash)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldEq {
    #[default]
    None,
    /// The key variable; for the hash model the output variable x2.
    Key,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeskConfig {
    pub family: DeskFamily,
    pub q: u64,
    /// Rounds; for Hades the partial rounds come from `rp` and full rounds from `rf`.
    #[serde(default)]
    pub r: u32,
    /// Branches for GMiMC and Hades.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub rf: u32,
    #[serde(default)]
    pub rp: u32,
    #[serde(default)]
    pub exponent: Option<u32>,
    #[serde(default)]
    pub layer: Option<Layer>,
    #[serde(default)]
    pub seed: u64,
    /// Key (message for the hash model); drawn from the seed when absent.
    #[serde(default)]
    pub key: Option<Vec<u64>>,
    #[serde(default)]
    pub field_eq: FieldEq,
    /// Eliminate affine generators; defaults to true for the hash model only.
    #[serde(default)]
    pub downsize: Option<bool>,
}

impl DeskConfig {
    pub fn new(family: DeskFamily, q: u64, r: u32) -> Self {
        DeskConfig { family, q, r, n: None, rf: 0, rp: 0, exponent: None, layer: None, seed: 0, key: None, field_eq: FieldEq::None, downsize: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_field_eq(mut self, fe: FieldEq) -> Self {
        self.field_eq = fe;
        self
    }

    pub fn spec(&self) -> CipherSpec {
        let n = self.n.unwrap_or(match self.family {
            DeskFamily::GmimcCrf | DeskFamily::GmimcErf => 3,
            _ => 2,
        });
        let mut spec = match self.family {
            DeskFamily::Mimc | DeskFamily::TwoPlaintext => CipherSpec::mimc(self.q, self.r),
            DeskFamily::Feistel => CipherSpec::feistel(self.q, self.r),
            DeskFamily::Hash => CipherSpec::hash(self.q, self.r),
            DeskFamily::GmimcCrf => CipherSpec::gmimc(false, self.q, n, self.r),
            DeskFamily::GmimcErf => CipherSpec::gmimc(true, self.q, n, self.r),
            DeskFamily::Hades => CipherSpec::hades(self.q, n, self.rf, self.rp),
        }
        .with_seed(self.seed);
        if let Some(d) = self.exponent {
            spec = spec.with_exponent(d);
        }
        if let Some(l) = self.layer {
            spec = spec.with_layer(l);
        }
        spec
    }
}

#[derive(Debug, Clone)]
pub struct DeskInstance {
    pub config: DeskConfig,
    pub spec: CipherSpec,
    pub system: PolySystem,
    pub key: Vec<u64>,
    pub plaintexts: Vec<Vec<u64>>,
    pub ciphertexts: Vec<Vec<u64>>,
    /// Values of the system's variables at the true key.
    pub solution: Vec<u64>,
}

fn draw(rng: &mut ChaCha8Rng, q: u64, k: usize) -> Vec<u64> {
    (0..k).map(|_| rng.gen_range(0..q)).collect()
}

/// Builds the instance; the seed fixes round constants, key and plaintexts.
pub fn build_instance(cfg: &DeskConfig) -> Result<DeskInstance, SystemError> {
    let spec = cfg.spec();
    spec.validate()?;
    let q = spec.q;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6465_736b);
    let (system, key, pts, cts, solution) = match cfg.family {
        DeskFamily::Mimc => {
            let key = cfg.key.clone().unwrap_or_else(|| draw(&mut rng, q, 1));
            let p = rng.gen_range(0..q);
            let c = encrypt(&spec, &key, &[p])?[0];
            let sol = mimc_point(&spec, key[0], p)?;
            (build_mimc_system(&spec, p, c)?, key, vec![vec![p]], vec![vec![c]], sol)
        }
        DeskFamily::TwoPlaintext => {
            let key = cfg.key.clone().unwrap_or_else(|| draw(&mut rng, q, 1));
            let p1 = rng.gen_range(0..q);
            let p2 = (p1 + rng.gen_range(1..q)) % q;
            let c1 = encrypt(&spec, &key, &[p1])?[0];
            let c2 = encrypt(&spec, &key, &[p2])?[0];
            let s1 = mimc_point(&spec, key[0], p1)?;
            let s2 = mimc_point(&spec, key[0], p2)?;
            let r = spec.rounds as usize;
            let mut sol: Vec<u64> = s1[..r - 1].to_vec();
            sol.extend_from_slice(&s2[..r - 1]);
            sol.push(key[0] % q);
            (build_two_plaintext_system(&spec, (p1, c1), (p2, c2))?, key, vec![vec![p1], vec![p2]], vec![vec![c1], vec![c2]], sol)
        }
        DeskFamily::Feistel => {
            let key = cfg.key.clone().unwrap_or_else(|| draw(&mut rng, q, 1));
            let p = draw(&mut rng, q, 2);
            let c = encrypt(&spec, &key, &p)?;
            let sol = feistel_point(&spec, key[0], (p[0], p[1]))?;
            (build_feistel_system(&spec, (p[0], p[1]), (c[0], c[1]))?, key, vec![p], vec![c], sol)
        }
        DeskFamily::Hash => {
            let msg = cfg.key.clone().unwrap_or_else(|| draw(&mut rng, q, 1));
            let (alpha, sol) = hash_point(&spec, msg[0])?;
            (build_hash_preimage_system(&spec, alpha)?, msg.clone(), vec![msg], vec![vec![alpha]], sol)
        }
        DeskFamily::GmimcCrf | DeskFamily::GmimcErf | DeskFamily::Hades => {
            let w = spec.width();
            let key = cfg.key.clone().unwrap_or_else(|| draw(&mut rng, q, w));
            let p = draw(&mut rng, q, w);
            let (c, sol) = multivariate_point(&spec, &key, &p)?;
            let sys = if cfg.family == DeskFamily::Hades { build_hades_system(&spec, &p, &c)? } else { build_gmimc_system(&spec, &p, &c)? };
            (sys, key, vec![p], vec![c], sol)
        }
    };
    let mut system = system;
    let mut solution = solution;
    if cfg.downsize.unwrap_or(cfg.family == DeskFamily::Hash) {
        let down = eliminate_linear(&system)?;
        solution = down.ring.names().iter().map(|n| solution[system.ring.index_of(n).unwrap()]).collect();
        system = down;
    }
    let fe_vars: Vec<usize> = match cfg.field_eq {
        FieldEq::None => vec![],
        FieldEq::All => (0..system.nvars()).collect(),
        FieldEq::Key => (0..system.nvars()).filter(|v| matches!(system.roles[*v], Role::Key { .. } | Role::HashOutputUnknown)).collect(),
    };
    let system = append_field_equations(&system, &fe_vars);
    Ok(DeskInstance { config: cfg.clone(), spec, system, key, plaintexts: pts, ciphertexts: cts, solution })
}

/// Number of F_q-rational solutions of the instance without field equations.
pub fn fq_solution_count(inst: &DeskInstance) -> Result<usize, ShapeError> {
    let base = build_instance(&DeskConfig { field_eq: FieldEq::None, downsize: Some(false), ..inst.config.clone() })?;
    Ok(recover_key(&base.system, &ShapeOptions::default())?.solutions.len())
}

/// First instance at seed, seed + 1, ... (at most `tries`) with fewer than three F_q solutions.
pub fn gated_instance(cfg: &DeskConfig, tries: u64) -> Result<Option<DeskInstance>, ShapeError> {
    for s in cfg.seed..cfg.seed + tries {
        let inst = build_instance(&DeskConfig { seed: s, ..cfg.clone() })?;
        if !inst.config.family.is_iterated() || fq_solution_count(&inst)? < 3 {
            return Ok(Some(inst));
        }
    }
    Ok(None)
}
