use std::fmt;

use crate::error::{Error, Result};

/// Upper bound on `q` so that the `q × q` addition table stays small.
pub const MAX_Q: u64 = 1 << 12;

/// A residue-field element, encoded as base-`p` digits of its coordinates in
/// the polynomial basis `1, x, …, x^{f-1}` of `F_p[x]/(modulus)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Res(pub u32);

impl Res {
    pub const ZERO: Res = Res(0);
    pub const ONE: Res = Res(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Parameters of the base field `F = k((t))` with `k = F_q`, `q = p^f`.
///
/// `η` is the class of `x` in `F_p[x]/(modulus)`, where `modulus` is the
/// first primitive polynomial in a fixed enumeration order (for `f = 1`,
/// `x − g` with `g` the least primitive root mod `p`). Discrete-log tables
/// are built once here and shared read-only.
#[derive(Clone)]
pub struct FieldParams {
    p: u64,
    f: u32,
    q: u64,
    modulus: Vec<u32>,
    eta: Res,
    add: Vec<u32>,
    neg: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace: Vec<u32>,
}

impl fmt::Debug for FieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldParams")
            .field("p", &self.p)
            .field("f", &self.f)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .field("eta", &self.eta)
            .finish()
    }
}

impl PartialEq for FieldParams {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.f == other.f && self.modulus == other.modulus
    }
}

impl Eq for FieldParams {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn digits(code: u32, p: u32, f: u32) -> Vec<u32> {
    let mut c = code;
    (0..f)
        .map(|_| {
            let d = c % p;
            c /= p;
            d
        })
        .collect()
}

fn from_digits(ds: &[u32], p: u32) -> u32 {
    ds.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Multiplies an element by `x` modulo the monic `modulus` (low to high).
fn times_x(code: u32, modulus: &[u32], p: u32, f: u32) -> u32 {
    let ds = digits(code, p, f);
    let top = ds[f as usize - 1];
    let mut out = vec![0u32; f as usize];
    for i in (1..f as usize).rev() {
        out[i] = ds[i - 1];
    }
    // x^f ≡ −Σ m_i x^i
    for (i, o) in out.iter_mut().enumerate() {
        *o = (*o + (p - (top * modulus[i]) % p)) % p;
    }
    from_digits(&out, p)
}

/// Powers of `x` in `F_p[x]/(modulus)` if `x` has order `q − 1`.
fn primitive_powers(modulus: &[u32], p: u32, f: u32, q: u64) -> Option<Vec<u32>> {
    let mut table = Vec::with_capacity(q as usize - 1);
    let mut cur = 1u32;
    for i in 0..(q - 1) {
        if i > 0 && cur == 1 {
            return None;
        }
        table.push(cur);
        cur = times_x(cur, modulus, p, f);
    }
    if cur != 1 {
        return None;
    }
    Some(table)
}

impl FieldParams {
    pub fn new(p: u64, f: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParams(format!("p = {p} is not prime")));
        }
        if f == 0 {
            return Err(Error::InvalidParams("f must be positive".into()));
        }
        let q = p.checked_pow(f).filter(|&q| q <= MAX_Q).ok_or_else(|| {
            Error::InvalidParams(format!("q = {p}^{f} exceeds the supported bound {MAX_Q}"))
        })?;
        let pp = p as u32;
        let (modulus, exp) = if q == 2 {
            (vec![1, 1], vec![1])
        } else if f == 1 {
            // x − g with g the least primitive root
            (2..pp)
                .find_map(|g| {
                    let m = vec![pp - g, 1];
                    primitive_powers(&m, pp, 1, q).map(|t| (m, t))
                })
                .ok_or_else(|| Error::InvalidParams("no primitive root found".into()))?
        } else {
            // enumerate the lower coefficients; constant term must be nonzero
            let mut found = None;
            for code in 1..q as u32 {
                let mut m = digits(code, pp, f);
                if m[0] == 0 {
                    continue;
                }
                m.push(1);
                if let Some(t) = primitive_powers(&m, pp, f, q) {
                    found = Some((m, t));
                    break;
                }
            }
            found.ok_or_else(|| Error::InvalidParams("no primitive polynomial found".into()))?
        };
        let q_us = q as usize;
        let mut add = vec![0u32; q_us * q_us];
        for a in 0..q as u32 {
            let da = digits(a, pp, f);
            for b in 0..q as u32 {
                let db = digits(b, pp, f);
                let s: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % pp).collect();
                add[a as usize * q_us + b as usize] = from_digits(&s, pp);
            }
        }
        let neg = (0..q as u32)
            .map(|a| from_digits(&digits(a, pp, f).iter().map(|d| (pp - d) % pp).collect::<Vec<_>>(), pp))
            .collect();
        let mut log = vec![u32::MAX; q_us];
        for (i, &c) in exp.iter().enumerate() {
            log[c as usize] = i as u32;
        }
        let eta = Res(*exp.get(1).unwrap_or(&1));
        let mut params = Self { p, f, q, modulus, eta, add, neg, exp, log, trace: Vec::new() };
        params.trace = (0..q as u32)
            .map(|a| {
                // Tr(z) = Σ z^{p^i}; the result lies in the prime field
                let mut s = Res::ZERO;
                let mut z = Res(a);
                for _ in 0..f {
                    s = params.add(s, z);
                    z = params.pow(z, p);
                }
                debug_assert!(s.0 < pp);
                s.0
            })
            .collect();
        Ok(params)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn res_modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// The chosen generator `η` of `k^×`.
    pub fn eta(&self) -> Res {
        self.eta
    }

    pub fn elements(&self) -> impl Iterator<Item = Res> {
        (0..self.q as u32).map(Res)
    }

    pub fn units(&self) -> impl Iterator<Item = Res> + '_ {
        self.exp.iter().map(|&c| Res(c))
    }

    /// An `F_p`-basis of `k`: the monomials `1, x, …, x^{f-1}`.
    pub fn prime_basis(&self) -> Vec<Res> {
        (0..self.f).map(|i| Res((self.p as u32).pow(i))).collect()
    }

    #[inline]
    pub fn add(&self, a: Res, b: Res) -> Res {
        Res(self.add[a.0 as usize * self.q as usize + b.0 as usize])
    }

    #[inline]
    pub fn neg(&self, a: Res) -> Res {
        Res(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Res, b: Res) -> Res {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Res, b: Res) -> Res {
        if a.is_zero() || b.is_zero() {
            return Res::ZERO;
        }
        let n = self.q as usize - 1;
        let e = (self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize) % n;
        Res(self.exp[e])
    }

    pub fn inv(&self, a: Res) -> Result<Res> {
        if a.is_zero() {
            return Err(Error::NotInvertible);
        }
        let n = self.q as usize - 1;
        let e = (n - self.log[a.0 as usize] as usize) % n;
        Ok(Res(self.exp[e]))
    }

    pub fn pow(&self, a: Res, k: u64) -> Res {
        if a.is_zero() {
            return if k == 0 { Res::ONE } else { Res::ZERO };
        }
        let n = self.q - 1;
        let e = (self.log[a.0 as usize] as u64 * (k % n)) % n;
        Res(self.exp[e as usize])
    }

    /// `η^k` for any integer `k`.
    pub fn eta_pow(&self, k: i64) -> Res {
        let n = self.q as i64 - 1;
        Res(self.exp[k.rem_euclid(n) as usize])
    }

    /// Discrete logarithm to base `η`, in `[0, q − 1)`.
    pub fn dlog(&self, a: Res) -> Result<u64> {
        if a.is_zero() {
            return Err(Error::ZeroInput);
        }
        Ok(self.log[a.0 as usize] as u64)
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, v: i64) -> Res {
        Res(v.rem_euclid(self.p as i64) as u32)
    }

    /// Absolute trace `k → F_p`, returned as an integer in `[0, p)`.
    pub fn trace_to_prime(&self, a: Res) -> u64 {
        self.trace[a.0 as usize] as u64
    }

    /// Renders an element as a power of `η`.
    pub fn show(&self, a: Res) -> String {
        match a.0 {
            0 => "0".into(),
            1 => "1".into(),
            _ => format!("η^{}", self.log[a.0 as usize]),
        }
    }
}
