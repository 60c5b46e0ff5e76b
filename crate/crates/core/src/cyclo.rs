//! Exact arithmetic in cyclotomic fields `Q(ζ_N)`.
//!
//! Elements are stored in the power basis `1, ζ, …, ζ^{φ(N)-1}` after
//! reduction modulo the `N`-th cyclotomic polynomial, so equality of two
//! values of the same order is coefficient equality. Values of different
//! orders are compared after embedding both into the lcm order.
//!
//! [`QHalfExt`] adjoins a formal square root of `q`; it is never identified
//! with a cyclotomic expression, so an identity proved there implies the
//! complex identity but not conversely.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

/// Scalar type for cyclotomic coordinates.
pub trait Coeff:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_i64(v: i64) -> Self;
    fn to_num_den(&self) -> (BigInt, BigInt);
    fn from_num_den(num: BigInt, den: BigInt) -> Option<Self>;
}

impl Coeff for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_num_den(&self) -> (BigInt, BigInt) {
        (self.numer().clone(), self.denom().clone())
    }
    fn from_num_den(num: BigInt, den: BigInt) -> Option<Self> {
        if den.is_zero() {
            None
        } else {
            Some(BigRational::new(num, den))
        }
    }
}

impl Coeff for Ratio<i64> {
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }
    fn to_num_den(&self) -> (BigInt, BigInt) {
        (BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
    fn from_num_den(num: BigInt, den: BigInt) -> Option<Self> {
        let (n, d) = (num.to_i64()?, den.to_i64()?);
        if d == 0 {
            None
        } else {
            Some(Ratio::new(n, d))
        }
    }
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            while n % d == 0 {
                n /= d;
            }
            result -= result / d;
        }
        d += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

fn mobius(mut n: u64) -> i32 {
    let mut sign = 1;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn poly_mul_int(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact division by a monic integer polynomial; the remainder must vanish.
fn poly_div_exact_int(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![0i64; num.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dd];
        quot[i] = c;
        if c != 0 {
            for (j, &d) in den.iter().enumerate() {
                rem[i + j] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

fn compute_cyclotomic(n: u64) -> Vec<i64> {
    // Φ_N = Π_{d | N} (x^d − 1)^{μ(N/d)}
    let mut num = vec![1i64];
    let mut dens = Vec::new();
    for d in divisors(n) {
        let mut f = vec![0i64; d as usize + 1];
        f[0] = -1;
        f[d as usize] = 1;
        match mobius(n / d) {
            1 => num = poly_mul_int(&num, &f),
            -1 => dens.push(f),
            _ => {}
        }
    }
    for den in dens {
        num = poly_div_exact_int(&num, &den);
    }
    num
}

/// Coefficients (low to high, monic) of the `N`-th cyclotomic polynomial.
pub fn cyclotomic_polynomial(n: u64) -> Arc<[i64]> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<[i64]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    let p: Arc<[i64]> = compute_cyclotomic(n).into();
    cache.lock().unwrap().insert(n, p.clone());
    p
}

/// Reduces a dense polynomial in ζ (any length) to canonical coordinates.
fn reduce_dense<T: Coeff>(order: u64, mut poly: Vec<T>) -> Vec<T> {
    let phi = cyclotomic_polynomial(order);
    let deg = phi.len() - 1;
    let n = order as usize;
    // fold exponents ≥ N using ζ^N = 1
    if poly.len() > n {
        let tail = poly.split_off(n);
        for (i, c) in tail.into_iter().enumerate() {
            if !c.is_zero() {
                let k = i % n;
                poly[k] = poly[k].clone() + c;
            }
        }
    }
    for i in (deg..poly.len()).rev() {
        let c = std::mem::replace(&mut poly[i], T::zero());
        if c.is_zero() {
            continue;
        }
        for (j, &pj) in phi[..deg].iter().enumerate() {
            if pj != 0 {
                let idx = i - deg + j;
                poly[idx] = poly[idx].clone() - c.clone() * T::from_i64(pj);
            }
        }
    }
    poly.resize(deg, T::zero());
    poly
}

/// Canonical coordinates of `ζ_N^k` using integer arithmetic only.
fn root_power_coords(order: u64, k: u64) -> Vec<i64> {
    let phi = cyclotomic_polynomial(order);
    let deg = phi.len() - 1;
    let k = (k % order) as usize;
    let mut poly = vec![0i64; (k + 1).max(deg)];
    poly[k] = 1;
    for i in (deg..poly.len()).rev() {
        let c = poly[i];
        if c == 0 {
            continue;
        }
        poly[i] = 0;
        for (j, &pj) in phi[..deg].iter().enumerate() {
            poly[i - deg + j] -= c * pj;
        }
    }
    poly.truncate(deg);
    poly
}

/// An element of `Q(ζ_N)` in canonical power-basis coordinates.
#[derive(Clone, Debug)]
pub struct CycNum<T> {
    order: u64,
    coeffs: Vec<T>,
}

impl<T: Coeff> CycNum<T> {
    pub fn zero(order: u64) -> Self {
        assert!(order >= 1, "cyclotomic order must be positive");
        let deg = euler_phi(order) as usize;
        Self { order, coeffs: vec![T::zero(); deg] }
    }

    pub fn one(order: u64) -> Self {
        Self::from_scalar(order, T::one())
    }

    pub fn from_scalar(order: u64, c: T) -> Self {
        let mut z = Self::zero(order);
        z.coeffs[0] = c;
        z
    }

    pub fn from_int(order: u64, v: i64) -> Self {
        Self::from_scalar(order, T::from_i64(v))
    }

    /// `ζ_N^k` for any integer `k`.
    pub fn zeta_pow(order: u64, k: i64) -> Self {
        let k = k.rem_euclid(order as i64) as u64;
        let coeffs = root_power_coords(order, k).into_iter().map(T::from_i64).collect();
        Self { order, coeffs }
    }

    /// Builds `Σ c_k ζ_N^k` from arbitrary (possibly negative) exponents.
    pub fn from_exponents(order: u64, terms: impl IntoIterator<Item = (i64, T)>) -> Self {
        let n = order as i64;
        let mut dense = vec![T::zero(); order as usize];
        for (k, c) in terms {
            let idx = k.rem_euclid(n) as usize;
            dense[idx] = dense[idx].clone() + c;
        }
        Self { order, coeffs: reduce_dense(order, dense) }
    }

    /// Builds a value from canonical coordinates; extra coordinates are reduced.
    pub fn from_coeffs(order: u64, coeffs: Vec<T>) -> Self {
        Self { order, coeffs: reduce_dense(order, coeffs) }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Re-expresses the value in `Q(ζ_M)`; `N` must divide `M`.
    pub fn embed(&self, new_order: u64) -> Self {
        assert!(new_order % self.order == 0, "embedding order {} does not divide {}", self.order, new_order);
        if new_order == self.order {
            return self.clone();
        }
        let step = (new_order / self.order) as i64;
        Self::from_exponents(
            new_order,
            self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (k as i64 * step, c.clone())),
        )
    }

    /// Attempts to express the value in the smaller field `Q(ζ_M)`, `M | N`.
    pub fn restrict(&self, new_order: u64) -> Option<Self> {
        if self.order % new_order != 0 {
            return None;
        }
        let step = (self.order / new_order) as usize;
        let deg = euler_phi(new_order) as usize;
        // Solve in the smaller basis by matching after embedding; the image of the
        // smaller power basis is triangular in general only for prime-power steps,
        // so use a linear solve.
        let images: Vec<Vec<T>> = (0..deg)
            .map(|k| Self::zeta_pow(self.order, (k * step) as i64).coeffs)
            .collect();
        let sol = solve_linear(&images, &self.coeffs)?;
        Some(Self { order: new_order, coeffs: sol })
    }

    fn common(&self, other: &Self) -> (Self, Self) {
        if self.order == other.order {
            return (self.clone(), other.clone());
        }
        let m = lcm_u64(self.order, other.order);
        (self.embed(m), other.embed(m))
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.order != other.order {
            let (a, b) = self.common(other);
            return a.add(&b);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect();
        Self { order: self.order, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn scale(&self, s: &T) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.order != other.order {
            let (a, b) = self.common(other);
            return a.mul(&b);
        }
        let d = self.coeffs.len();
        let mut prod = vec![T::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] = prod[i + j].clone() + a.clone() * b.clone();
                }
            }
        }
        Self { order: self.order, coeffs: reduce_dense(self.order, prod) }
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        Self::from_exponents(
            self.order,
            self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (-(k as i64), c.clone())),
        )
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::NotInvertible);
        }
        // columns of the multiplication-by-self matrix are self·ζ^k
        let d = self.coeffs.len();
        let cols: Vec<Vec<T>> = (0..d)
            .map(|k| self.mul(&Self::zeta_pow(self.order, k as i64)).coeffs)
            .collect();
        let mut rhs = vec![T::zero(); d];
        rhs[0] = T::one();
        let sol = solve_linear(&cols, &rhs).ok_or(Error::NotInvertible)?;
        Ok(Self { order: self.order, coeffs: sol })
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(self.order);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// Floating-point embedding `ζ_N ↦ exp(2πi/N)`, for display only.
    pub fn to_complex_approx(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let (n, d) = c.to_num_den();
            let v = n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN);
            let ang = 2.0 * std::f64::consts::PI * k as f64 / self.order as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re, im)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "order": self.order,
            "coeffs": self.coeffs.iter().map(|c| {
                let (n, d) = c.to_num_den();
                Value::Array(vec![bigint_json(&n), bigint_json(&d)])
            }).collect::<Vec<_>>()
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let order = v.get("order").and_then(Value::as_u64).ok_or_else(|| Error::Malformed("cyclotomic order".into()))?;
        if order == 0 {
            return Err(Error::ZeroOrder);
        }
        let arr = v.get("coeffs").and_then(Value::as_array).ok_or_else(|| Error::Malformed("cyclotomic coeffs".into()))?;
        let mut coeffs = Vec::with_capacity(arr.len());
        for c in arr {
            let pair = c.as_array().filter(|p| p.len() == 2).ok_or_else(|| Error::Malformed("coefficient pair".into()))?;
            let n = json_bigint(&pair[0])?;
            let d = json_bigint(&pair[1])?;
            coeffs.push(T::from_num_den(n, d).ok_or_else(|| Error::Malformed("coefficient value".into()))?);
        }
        if coeffs.len() != euler_phi(order) as usize {
            return Err(Error::Malformed(format!("expected {} coefficients", euler_phi(order))));
        }
        Ok(Self { order, coeffs })
    }
}

fn bigint_json(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(x) => Value::from(x),
        None => Value::String(v.to_string()),
    }
}

fn json_bigint(v: &Value) -> Result<BigInt> {
    if let Some(x) = v.as_i64() {
        return Ok(BigInt::from(x));
    }
    v.as_str()
        .and_then(|s| s.parse::<BigInt>().ok())
        .ok_or_else(|| Error::Malformed(format!("integer {v}")))
}

/// Solves `Σ_k x_k · cols[k] = rhs` exactly; `None` if singular.
fn solve_linear<T: Coeff>(cols: &[Vec<T>], rhs: &[T]) -> Option<Vec<T>> {
    let rows = rhs.len();
    let ncols = cols.len();
    let mut m: Vec<Vec<T>> = (0..rows)
        .map(|r| {
            let mut row: Vec<T> = cols.iter().map(|c| c[r].clone()).collect();
            row.push(rhs[r].clone());
            row
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..ncols {
        let Some(pr) = (pivot_row..rows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(pivot_row, pr);
        let inv = T::one() / m[pivot_row][col].clone();
        for x in m[pivot_row].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for r in 0..rows {
            if r != pivot_row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=ncols {
                    let v = m[pivot_row][c].clone();
                    m[r][c] = m[r][c].clone() - f.clone() * v;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    // inconsistent or underdetermined
    if pivots.len() < ncols || m[pivot_row..].iter().any(|row| !row[ncols].is_zero()) {
        return None;
    }
    let mut x = vec![T::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][ncols].clone();
    }
    Some(x)
}

impl<T: Coeff> PartialEq for CycNum<T> {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            self.coeffs == other.coeffs
        } else {
            let (a, b) = self.common(other);
            a.coeffs == b.coeffs
        }
    }
}

impl<T: Coeff> Eq for CycNum<T> {}

impl<T: Coeff> fmt::Display for CycNum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (n, d) = c.to_num_den();
            let neg = n.is_negative();
            let abs = n.abs();
            let coef = if d.is_one() { abs.to_string() } else { format!("{abs}/{d}") };
            let sign = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            let term = match k {
                0 => coef,
                _ => {
                    let z = if k == 1 { format!("ζ{}", self.order) } else { format!("ζ{}^{}", self.order, k) };
                    if abs.is_one() && d.is_one() { z } else { format!("{coef}·{z}") }
                }
            };
            write!(f, "{sign}{term}")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<T: Coeff> Serialize for CycNum<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de, T: Coeff> Deserialize<'de> for CycNum<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Self::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// `ζ_N^k`, stored with `k` reduced mod `N`.
#[derive(Clone, Copy, Debug)]
pub struct RootOfUnity {
    order: u64,
    exp: u64,
}

impl RootOfUnity {
    pub fn new(order: u64, k: i64) -> Result<Self> {
        if order == 0 {
            return Err(Error::ZeroOrder);
        }
        Ok(Self { order, exp: k.rem_euclid(order as i64) as u64 })
    }

    pub fn one() -> Self {
        Self { order: 1, exp: 0 }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exp(&self) -> u64 {
        self.exp
    }

    /// Same value with the smallest possible order.
    pub fn reduced(&self) -> Self {
        let g = gcd_u64(self.exp, self.order);
        if self.exp == 0 {
            return Self::one();
        }
        Self { order: self.order / g, exp: self.exp / g }
    }

    pub fn is_one(&self) -> bool {
        self.exp == 0
    }

    /// The exponent of this value as a power of `ζ_M`; `None` unless it lies in `μ_M`.
    pub fn exp_in(&self, m: u64) -> Option<u64> {
        let r = self.reduced();
        if m % r.order == 0 {
            Some(r.exp * (m / r.order))
        } else {
            None
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = lcm_u64(self.order, other.order);
        let e = (self.exp * (m / self.order) + other.exp * (m / other.order)) % m;
        Self { order: m, exp: e }.reduced()
    }

    pub fn inv(&self) -> Self {
        Self { order: self.order, exp: (self.order - self.exp) % self.order }
    }

    pub fn pow(&self, k: i64) -> Self {
        let n = self.order as i128;
        let e = ((self.exp as i128) * (k as i128)).rem_euclid(n) as u64;
        Self { order: self.order, exp: e }.reduced()
    }

    pub fn to_cyc<T: Coeff>(&self) -> CycNum<T> {
        CycNum::zeta_pow(self.order, self.exp as i64)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "order": self.order, "exp": self.exp })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let order = v.get("order").and_then(Value::as_u64).ok_or_else(|| Error::Malformed("root order".into()))?;
        let exp = v.get("exp").and_then(Value::as_i64).ok_or_else(|| Error::Malformed("root exp".into()))?;
        Self::new(order, exp)
    }
}

impl PartialEq for RootOfUnity {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.reduced(), other.reduced());
        a.order == b.order && a.exp == b.exp
    }
}

impl Eq for RootOfUnity {}

impl std::hash::Hash for RootOfUnity {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let r = self.reduced();
        r.order.hash(state);
        r.exp.hash(state);
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        if r.exp == 0 {
            write!(f, "1")
        } else {
            write!(f, "ζ{}^{}", r.order, r.exp)
        }
    }
}

impl Serialize for RootOfUnity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RootOfUnity", 2)?;
        st.serialize_field("order", &self.order)?;
        st.serialize_field("exp", &self.exp)?;
        st.end()
    }
}

/// Integer combination of `N`-th roots of unity, accumulated by exponent.
///
/// Summing character values through this avoids rational arithmetic until
/// the final conversion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootSum {
    order: u64,
    counts: Vec<i64>,
}

impl RootSum {
    pub fn new(order: u64) -> Self {
        Self { order, counts: vec![0; order as usize] }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn add_root(&mut self, r: &RootOfUnity, mult: i64) {
        let k = r.exp_in(self.order).unwrap_or_else(|| panic!("root {r} not in μ_{}", self.order));
        self.counts[k as usize] += mult;
    }

    pub fn add_exp(&mut self, k: u64, mult: i64) {
        self.counts[(k % self.order) as usize] += mult;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        assert_eq!(self.order, other.order);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> i64 {
        self.counts.iter().sum()
    }

    pub fn to_cyc<T: Coeff>(&self) -> CycNum<T> {
        CycNum::from_exponents(
            self.order,
            self.counts.iter().enumerate().filter(|(_, c)| **c != 0).map(|(k, &c)| (k as i64, T::from_i64(c))),
        )
    }
}

/// `base + half·√q` with a formal square root of `q`.
#[derive(Clone, Debug)]
pub struct QHalfExt<T> {
    q: u64,
    base: CycNum<T>,
    half: CycNum<T>,
}

impl<T: Coeff> QHalfExt<T> {
    pub fn new(q: u64, base: CycNum<T>, half: CycNum<T>) -> Self {
        let (base, half) = if base.order == half.order { (base, half) } else { base.common(&half) };
        Self { q, base, half }
    }

    pub fn from_base(q: u64, base: CycNum<T>) -> Self {
        let half = CycNum::zero(base.order);
        Self { q, base, half }
    }

    pub fn sqrt_q(q: u64, order: u64) -> Self {
        Self { q, base: CycNum::zero(order), half: CycNum::one(order) }
    }

    /// `q^{k/2}` for any integer `k`.
    pub fn q_pow_half(q: u64, k: i64, order: u64) -> Self {
        let whole = k.div_euclid(2);
        let odd = k.rem_euclid(2) == 1;
        let qt = T::from_i64(q as i64);
        let mut s = T::one();
        for _ in 0..whole.unsigned_abs() {
            s = s * qt.clone();
        }
        if whole < 0 {
            s = T::one() / s;
        }
        if odd {
            Self { q, base: CycNum::zero(order), half: CycNum::from_scalar(order, s) }
        } else {
            Self { q, base: CycNum::from_scalar(order, s), half: CycNum::zero(order) }
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn base(&self) -> &CycNum<T> {
        &self.base
    }

    pub fn half(&self) -> &CycNum<T> {
        &self.half
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.half.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.q, o.q, "√q rings with different q");
        Self::new(self.q, self.base.add(&o.base), self.half.add(&o.half))
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.q, o.q, "√q rings with different q");
        Self::new(self.q, self.base.sub(&o.base), self.half.sub(&o.half))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.q, o.q, "√q rings with different q");
        let qt = T::from_i64(self.q as i64);
        let base = self.base.mul(&o.base).add(&self.half.mul(&o.half).scale(&qt));
        let half = self.base.mul(&o.half).add(&self.half.mul(&o.base));
        Self::new(self.q, base, half)
    }

    pub fn mul_cyc(&self, c: &CycNum<T>) -> Self {
        Self::new(self.q, self.base.mul(c), self.half.mul(c))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.q, self.base.conj(), self.half.conj())
    }

    pub fn pow(&self, k: u64) -> Self {
        let order = self.base.order;
        let mut acc = Self::from_base(self.q, CycNum::one(order));
        let mut sq = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "q": self.q, "base": self.base.to_json(), "half": self.half.to_json() })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let q = v.get("q").and_then(Value::as_u64).ok_or_else(|| Error::Malformed("qhalf q".into()))?;
        let base = CycNum::from_json(v.get("base").ok_or_else(|| Error::Malformed("qhalf base".into()))?)?;
        let half = CycNum::from_json(v.get("half").ok_or_else(|| Error::Malformed("qhalf half".into()))?)?;
        Ok(Self::new(q, base, half))
    }
}

/// Componentwise equality after embedding to a common order.
pub fn qhalf_eq<T: Coeff>(x: &QHalfExt<T>, y: &QHalfExt<T>) -> bool {
    x.q == y.q && x.base == y.base && x.half == y.half
}

impl<T: Coeff> PartialEq for QHalfExt<T> {
    fn eq(&self, other: &Self) -> bool {
        qhalf_eq(self, other)
    }
}

impl<T: Coeff> Eq for QHalfExt<T> {}

impl<T: Coeff> fmt::Display for QHalfExt<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.half.is_zero() {
            write!(f, "{}", self.base)
        } else if self.base.is_zero() {
            write!(f, "({})·√{}", self.half, self.q)
        } else {
            write!(f, "{} + ({})·√{}", self.base, self.half, self.q)
        }
    }
}

impl<T: Coeff> Serialize for QHalfExt<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type C = CycNum<BigRational>;
    type Q = QHalfExt<BigRational>;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(&*cyclotomic_polynomial(1), &[-1, 1]);
        assert_eq!(&*cyclotomic_polynomial(4), &[1, 0, 1]);
        assert_eq!(&*cyclotomic_polynomial(6), &[1, -1, 1]);
        assert_eq!(&*cyclotomic_polynomial(12), &[1, 0, -1, 0, 1]);
        for n in 1..60 {
            assert_eq!(cyclotomic_polynomial(n).len() as u64 - 1, euler_phi(n));
        }
        // Φ_105 is the first with a coefficient −2
        assert!(cyclotomic_polynomial(105).contains(&-2));
    }

    #[test]
    fn basic_relations() {
        let i = C::zeta_pow(4, 1);
        assert_eq!(i.mul(&i), C::from_int(4, -1));
        let w = C::zeta_pow(3, 1);
        assert!(w.mul(&w).add(&w).add(&C::one(3)).is_zero());
        let z5 = C::zeta_pow(5, 1);
        assert_eq!(z5.conj().mul(&z5), C::one(5));
        assert_eq!(C::zeta_pow(7, 7), C::one(7));
    }

    #[test]
    fn roots_of_unity() {
        let r = RootOfUnity::new(6, 3).unwrap();
        assert_eq!((r.order(), r.exp()), (6, 3));
        assert_eq!(r.to_cyc::<BigRational>(), C::from_int(1, -1));
        assert_eq!(RootOfUnity::new(5, 7).unwrap().exp(), 2);
        assert_eq!(RootOfUnity::new(1, 0).unwrap().to_cyc::<BigRational>(), C::one(1));
        assert_eq!(RootOfUnity::new(0, 1), Err(Error::ZeroOrder));
        let a = RootOfUnity::new(4, 1).unwrap();
        let b = RootOfUnity::new(6, 1).unwrap();
        assert_eq!(a.mul(&b), RootOfUnity::new(12, 5).unwrap());
        assert_eq!(a.inv().mul(&a), RootOfUnity::one());
    }

    #[test]
    fn inversion() {
        assert_eq!(C::zero(5).inv(), Err(Error::NotInvertible));
        let x = C::from_exponents(7, [(0, BigRational::from_i64(2)), (3, BigRational::from_i64(-1))]);
        assert_eq!(x.mul(&x.inv().unwrap()), C::one(7));
        assert_eq!(x.pow(-3).unwrap().mul(&x.pow(3).unwrap()), C::one(7));
    }

    #[test]
    fn embedding_and_restriction() {
        let x = C::from_exponents(6, [(1, BigRational::from_i64(3)), (5, BigRational::from_i64(-2))]);
        let big = x.embed(30);
        assert_eq!(big.order(), 30);
        assert_eq!(big.restrict(6).unwrap().coeffs(), x.coeffs());
        assert_eq!(big, x);
        assert!(C::zeta_pow(30, 1).restrict(6).is_none());
    }

    #[test]
    fn qhalf_relations() {
        let q = 7;
        let one = Q::from_base(q, C::one(1));
        assert!(qhalf_eq(&one, &one.clone()));
        let s = Q::sqrt_q(q, 1);
        assert_eq!(s.mul(&s), Q::from_base(q, C::from_int(1, 7)));
        let lhs = one.add(&s).mul(&one.sub(&s));
        assert_eq!(lhs, Q::from_base(q, C::from_int(1, 1 - 7)));
        assert_eq!(Q::q_pow_half(q, -3, 1).mul(&Q::q_pow_half(q, 3, 1)), one);
        assert_eq!(Q::q_pow_half(q, 1, 1), s);
    }

    #[test]
    fn json_round_trip() {
        let x = C::from_exponents(12, [(1, BigRational::new(3.into(), 4.into())), (7, BigRational::from_i64(5))]);
        let back = C::from_json(&x.to_json()).unwrap();
        assert_eq!(back, x);
        let small: CycNum<Ratio<i64>> = CycNum::from_json(&x.to_json()).unwrap();
        assert_eq!(small.to_json(), x.to_json());
    }

    fn cyc_strategy(order: u64) -> impl Strategy<Value = C> {
        let d = euler_phi(order) as usize;
        proptest::collection::vec((-20i64..20, 1i64..5), d).prop_map(move |v| {
            C::from_coeffs(order, v.into_iter().map(|(n, den)| BigRational::new(n.into(), den.into())).collect())
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(x in cyc_strategy(12), y in cyc_strategy(12), z in cyc_strategy(12)) {
            prop_assert_eq!(x.add(&y).add(&z), x.add(&y.add(&z)));
            prop_assert_eq!(x.mul(&y.add(&z)), x.mul(&y).add(&x.mul(&z)));
            prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
        }

        #[test]
        fn conj_is_automorphism(x in cyc_strategy(15), y in cyc_strategy(15)) {
            prop_assert_eq!(x.mul(&y).conj(), x.conj().mul(&y.conj()));
            prop_assert_eq!(x.add(&y).conj(), x.conj().add(&y.conj()));
        }

        #[test]
        fn root_times_conj(n in 1u64..40, k in -100i64..100) {
            let r = RootOfUnity::new(n, k).unwrap();
            let c: C = r.to_cyc();
            prop_assert_eq!(c.conj().mul(&c), C::one(n));
        }

        #[test]
        fn embedding_injective(x in cyc_strategy(10), y in cyc_strategy(10)) {
            prop_assume!(x != y);
            prop_assert_ne!(x.embed(30).coeffs().to_vec(), y.embed(30).coeffs().to_vec());
            prop_assert_eq!(x.embed(30).restrict(10).unwrap(), x);
        }
    }
}
