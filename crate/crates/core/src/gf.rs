//! Prime-field arithmetic.
//!
//! Everything above this module is generic over [`Field`], a context object
//! that owns the modulus and performs arithmetic on plain element values.
//! Two implementations are provided: [`SmallPrimeField`] for moduli below
//! 2^32 (the desk-scale path) and [`BigPrimeField`] for arbitrary moduli.
//! Both produce identical canonical values for the same modulus.

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GfError {
    #[error("modulus {0} is not prime")]
    NotPrime(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields (q = {0} vs q = {1})")]
    FieldMismatch(String, String),
    #[error("modulus {0} too large for the small-prime field")]
    TooLarge(String),
}

/// Arithmetic context for a prime field.
pub trait Field: Clone + fmt::Debug + PartialEq + Eq + Send + Sync + 'static {
    type Elem: Clone + fmt::Debug + PartialEq + Eq + Hash + Ord + Send + Sync;

    fn modulus(&self) -> BigUint;
    /// The modulus as a machine word, when it fits.
    fn small_modulus(&self) -> Option<u64>;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse by the extended Euclidean algorithm.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;

    fn from_u64(&self, v: u64) -> Self::Elem;
    fn from_biguint(&self, v: &BigUint) -> Self::Elem;
    fn to_biguint(&self, a: &Self::Elem) -> BigUint;
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    fn from_i64(&self, v: i64) -> Self::Elem {
        let a = self.from_u64(v.unsigned_abs());
        if v < 0 {
            self.neg(&a)
        } else {
            a
        }
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }

    fn pow(&self, a: &Self::Elem, e: &BigUint) -> Self::Elem {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    fn pow_u64(&self, a: &Self::Elem, e: u64) -> Self::Elem {
        self.pow(a, &BigUint::from(e))
    }

    /// `dst[i] -= c * src[i]`.
    fn sub_scaled(&self, dst: &mut [Self::Elem], c: &Self::Elem, src: &[Self::Elem]) {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = self.sub(d, &self.mul(c, s));
        }
    }

    /// Signed representative in (-q/2, q/2], used for display.
    fn to_signed_string(&self, a: &Self::Elem) -> (bool, String) {
        let v = self.to_biguint(a);
        let q = self.modulus();
        if &v + &v > q {
            (true, (q - v).to_string())
        } else {
            (false, v.to_string())
        }
    }
}

/// Deterministic Miller-Rabin with a fixed base set.
///
/// The first thirteen prime bases are a proof of primality below 3.3e24;
/// above that the extended base list makes the check a strong probable-prime
/// test that is still deterministic in its answer.
pub fn is_prime(n: &BigUint) -> bool {
    const BASES: [u32; 24] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    ];
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in BASES.iter() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'outer: for &a in BASES.iter() {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// True iff `x -> x^d` permutes F_q, i.e. gcd(d, q - 1) = 1.
pub fn is_permutation_exponent(d: u64, q: &BigUint) -> bool {
    let q1 = q - 1u32;
    BigUint::from(d).gcd(&q1).is_one()
}

/// Prime field with modulus below 2^32; elements are canonical `u64` values.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmallPrimeField {
    p: u64,
}

impl fmt::Debug for SmallPrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.p)
    }
}

impl SmallPrimeField {
    pub fn new(p: u64) -> Result<Self, GfError> {
        if p >= 1 << 32 {
            return Err(GfError::TooLarge(p.to_string()));
        }
        if !is_prime(&BigUint::from(p)) {
            return Err(GfError::NotPrime(p.to_string()));
        }
        Ok(SmallPrimeField { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

impl Field for SmallPrimeField {
    type Elem = u64;

    fn modulus(&self) -> BigUint {
        BigUint::from(self.p)
    }
    fn small_modulus(&self) -> Option<u64> {
        Some(self.p)
    }
    #[inline]
    fn zero(&self) -> u64 {
        0
    }
    #[inline]
    fn one(&self) -> u64 {
        1 % self.p
    }
    #[inline]
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    #[inline]
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    #[inline]
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        if *a == 0 {
            return None;
        }
        let (mut r0, mut r1) = (self.p as i64, *a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let qt = r0 / r1;
            (r0, r1) = (r1, r0 - qt * r1);
            (t0, t1) = (t1, t0 - qt * t1);
        }
        Some(t0.rem_euclid(self.p as i64) as u64)
    }
    fn from_u64(&self, v: u64) -> u64 {
        v % self.p
    }
    fn from_biguint(&self, v: &BigUint) -> u64 {
        (v % self.p).to_u64().unwrap()
    }
    fn to_biguint(&self, a: &u64) -> BigUint {
        BigUint::from(*a)
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }
    fn pow_u64(&self, a: &u64, mut e: u64) -> u64 {
        let mut base = *a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }
    fn sub_scaled(&self, dst: &mut [u64], c: &u64, src: &[u64]) {
        let nc = self.p - c;
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (*d + nc * s) % self.p;
        }
    }
}

/// Prime field with an arbitrary-precision modulus.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BigPrimeField {
    p: Arc<BigUint>,
}

impl fmt::Debug for BigPrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.p)
    }
}

impl BigPrimeField {
    pub fn new(p: BigUint) -> Result<Self, GfError> {
        if !is_prime(&p) {
            return Err(GfError::NotPrime(p.to_string()));
        }
        Ok(BigPrimeField { p: Arc::new(p) })
    }
}

impl Field for BigPrimeField {
    type Elem = BigUint;

    fn modulus(&self) -> BigUint {
        (*self.p).clone()
    }
    fn small_modulus(&self) -> Option<u64> {
        self.p.to_u64()
    }
    fn zero(&self) -> BigUint {
        BigUint::zero()
    }
    fn one(&self) -> BigUint {
        BigUint::one() % &*self.p
    }
    fn is_zero(&self, a: &BigUint) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= *self.p {
            s - &*self.p
        } else {
            s
        }
    }
    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            a + &*self.p - b
        }
    }
    fn neg(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            &*self.p - a
        }
    }
    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &*self.p
    }
    fn inv(&self, a: &BigUint) -> Option<BigUint> {
        if a.is_zero() {
            return None;
        }
        let p = num_bigint::BigInt::from((*self.p).clone());
        let ext = num_bigint::BigInt::from(a.clone()).extended_gcd(&p);
        let x = ext.x.mod_floor(&p);
        x.to_biguint()
    }
    fn from_u64(&self, v: u64) -> BigUint {
        BigUint::from(v) % &*self.p
    }
    fn from_biguint(&self, v: &BigUint) -> BigUint {
        v % &*self.p
    }
    fn to_biguint(&self, a: &BigUint) -> BigUint {
        a.clone()
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        let mut adapter = RngAdapter(rng);
        adapter.gen_biguint_below(&self.p)
    }
}

struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> rand::RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// A field element that carries its field, for standalone arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldElement<K: Field> {
    pub value: K::Elem,
    pub field: K,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl<K: Field> FieldElement<K> {
    pub fn new(field: &K, v: u64) -> Self {
        FieldElement { value: field.from_u64(v), field: field.clone() }
    }

    pub fn from_value(field: &K, value: K::Elem) -> Self {
        FieldElement { value, field: field.clone() }
    }

    pub fn inverse(&self) -> Result<Self, GfError> {
        self.field
            .inv(&self.value)
            .map(|v| FieldElement { value: v, field: self.field.clone() })
            .ok_or(GfError::DivisionByZero)
    }

    pub fn pow(&self, e: u64) -> Self {
        FieldElement { value: self.field.pow_u64(&self.value, e), field: self.field.clone() }
    }

    pub fn to_biguint(&self) -> BigUint {
        self.field.to_biguint(&self.value)
    }
}

impl<K: Field> fmt::Display for FieldElement<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

/// Checked binary arithmetic on standalone elements.
pub fn field_arith<K: Field>(
    a: &FieldElement<K>,
    b: &FieldElement<K>,
    op: ArithOp,
) -> Result<FieldElement<K>, GfError> {
    if a.field != b.field {
        return Err(GfError::FieldMismatch(
            a.field.modulus().to_string(),
            b.field.modulus().to_string(),
        ));
    }
    let k = &a.field;
    let value = match op {
        ArithOp::Add => k.add(&a.value, &b.value),
        ArithOp::Sub => k.sub(&a.value, &b.value),
        ArithOp::Mul => k.mul(&a.value, &b.value),
        ArithOp::Div => k.div(&a.value, &b.value).ok_or(GfError::DivisionByZero)?,
    };
    Ok(FieldElement { value, field: k.clone() })
}
