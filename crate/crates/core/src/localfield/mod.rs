//! Truncated exact model of `F = k((t))` and its tame totally ramified
//! extensions `E_r = F(ⁿ√(t·η^r))`, realised as `k((u))` with `t = η^{-r}·u^n`.

mod laurent;
mod residue;

use std::sync::Arc;

pub use laurent::{FieldTag, LaurentTrunc, EXACT};
pub use residue::{is_prime, FieldParams, Res, MAX_Q};

use crate::cyclo::gcd_u64;
use crate::error::{Error, Result};

/// A tame totally ramified extension `E_r/F` of degree `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TameExt {
    params: Arc<FieldParams>,
    n: u64,
    r: u64,
}

/// Number of tame totally ramified extensions of degree `n`: `gcd(n, q − 1)`.
pub fn extension_census(q: u64, n: u64) -> u64 {
    gcd_u64(n, q - 1)
}

pub fn make_extension(params: &Arc<FieldParams>, n: u64, r: u64) -> Result<TameExt> {
    if n == 0 {
        return Err(Error::OutOfRange("degree must be positive".into()));
    }
    if gcd_u64(n, params.p()) != 1 {
        return Err(Error::WildDegree { n, p: params.p() });
    }
    let e = extension_census(params.q(), n);
    if r >= e {
        return Err(Error::OutOfRange(format!("r = {r} not in [0, {e})")));
    }
    Ok(TameExt { params: params.clone(), n, r })
}

impl TameExt {
    pub fn params(&self) -> &Arc<FieldParams> {
        &self.params
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    /// `gcd(n, q − 1)`, the number of extensions of this degree.
    pub fn census(&self) -> u64 {
        extension_census(self.params.q(), self.n)
    }

    pub fn ramification_index(&self) -> u64 {
        self.n
    }

    pub fn tag(&self) -> FieldTag {
        FieldTag::Ext { n: self.n, r: self.r }
    }

    pub fn uniformizer(&self) -> LaurentTrunc {
        LaurentTrunc::uniformizer(&self.params, self.tag())
    }

    /// Image of `x ∈ F` under `t ↦ η^{-r}·u^n`.
    pub fn embed(&self, x: &LaurentTrunc) -> LaurentTrunc {
        assert_eq!(x.tag(), FieldTag::Base, "embedding expects an element of F");
        let k = &self.params;
        let n = self.n as i64;
        let r = self.r as i64;
        let terms: Vec<_> = x.terms().map(|(e, c)| (e * n, k.mul(c, k.eta_pow(-r * e)))).collect();
        let abs = if x.is_exact() { EXACT } else { x.abs_prec() * n };
        LaurentTrunc::from_terms(k, self.tag(), &terms, abs)
    }

    fn check_tag(&self, x: &LaurentTrunc) -> Result<()> {
        if x.tag() != self.tag() {
            return Err(Error::FieldMismatch(format!("expected {:?}, got {:?}", self.tag(), x.tag())));
        }
        Ok(())
    }

    /// `tr_{E/F}`: `u^m ↦ 0` for `n ∤ m`, `u^{nk} ↦ n·(η^r t)^k`.
    pub fn trace(&self, x: &LaurentTrunc) -> Result<LaurentTrunc> {
        self.check_tag(x)?;
        let k = &self.params;
        let n = self.n as i64;
        let r = self.r as i64;
        let nres = k.from_int(n);
        let terms: Vec<_> = x
            .terms()
            .filter(|(e, _)| e.rem_euclid(n) == 0)
            .map(|(e, c)| {
                let j = e.div_euclid(n);
                (j, k.mul(nres, k.mul(c, k.eta_pow(r * j))))
            })
            .collect();
        let abs = if x.is_exact() { EXACT } else { (x.abs_prec() + n - 1).div_euclid(n) };
        Ok(LaurentTrunc::from_terms(k, FieldTag::Base, &terms, abs))
    }

    /// Splits `x = Σ_j u^j·g_j(t)` over the basis `1, u, …, u^{n−1}`.
    fn coordinates(&self, x: &LaurentTrunc) -> Vec<LaurentTrunc> {
        let k = &self.params;
        let n = self.n as i64;
        let r = self.r as i64;
        (0..n)
            .map(|j| {
                let terms: Vec<_> = x
                    .terms()
                    .filter(|(e, _)| (e - j).rem_euclid(n) == 0)
                    .map(|(e, c)| {
                        let m = (e - j).div_euclid(n);
                        (m, k.mul(c, k.eta_pow(r * m)))
                    })
                    .collect();
                let abs = if x.is_exact() { EXACT } else { (x.abs_prec() - j + n - 1).div_euclid(n) };
                LaurentTrunc::from_terms(k, FieldTag::Base, &terms, abs)
            })
            .collect()
    }

    /// `N_{E/F}` as the determinant of multiplication by `x` on `F`-basis `u^i`.
    pub fn norm(&self, x: &LaurentTrunc) -> Result<LaurentTrunc> {
        self.check_tag(x)?;
        if x.is_zero() {
            return Err(Error::ZeroInput);
        }
        let k = &self.params;
        let n = self.n as usize;
        let g = self.coordinates(x);
        let t_eta = LaurentTrunc::monomial(k, FieldTag::Base, k.eta_pow(self.r as i64), 1, EXACT);
        // row i: x·u^i = Σ_j g_j u^{i+j}, with u^n = η^r t
        let mut m = vec![vec![LaurentTrunc::zero(k, FieldTag::Base, EXACT); n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                let col = (i + j) % n;
                row[col] = if i + j >= n { gj.mul(&t_eta) } else { gj.clone() };
            }
        }
        Ok(determinant(&m))
    }

    /// The automorphism `u ↦ ζ·u` (`ζ ∈ μ_n(k)`), fixing `F` pointwise.
    pub fn apply_automorphism(&self, zeta: Res, x: &LaurentTrunc) -> Result<LaurentTrunc> {
        self.check_tag(x)?;
        if self.params.pow(zeta, self.n) != Res::ONE {
            return Err(Error::OutOfRange("ζ is not an n-th root of unity".into()));
        }
        Ok(x.substitute_scaled(zeta))
    }
}

/// Leibniz determinant; precision follows from the entry arithmetic.
pub(crate) fn determinant(m: &[Vec<LaurentTrunc>]) -> LaurentTrunc {
    let n = m.len();
    let params = m[0][0].params().clone();
    let tag = m[0][0].tag();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut acc = LaurentTrunc::zero(&params, tag, EXACT);
    let mut sign = 1i32;
    // Heap's algorithm, tracking parity
    let mut c = vec![0usize; n];
    let term = |perm: &[usize], sign: i32| {
        let mut prod = LaurentTrunc::one(&params, tag);
        for (i, &j) in perm.iter().enumerate() {
            prod = prod.mul(&m[i][j]);
        }
        if sign < 0 { prod.neg() } else { prod }
    };
    acc = acc.add(&term(&perm, sign));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            acc = acc.add(&term(&perm, sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    acc
}
