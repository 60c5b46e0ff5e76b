use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use super::residue::{FieldParams, Res};
use crate::error::{Error, Result};

/// Absolute precision of an exact element (a Laurent polynomial).
pub const EXACT: i64 = i64::MAX / 4;

#[inline]
/// Precisions this far out only arise from shifting `EXACT`; snap them back
/// so exact elements have one representation.
fn cap(a: i64) -> i64 {
    if a >= EXACT / 2 {
        EXACT
    } else {
        a
    }
}

/// Which field an element lives in: the base `F = k((t))` or the tame
/// extension `E_r = k((u))` with `t = η^{-r}·u^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldTag {
    Base,
    Ext { n: u64, r: u64 },
}

impl FieldTag {
    pub fn var(&self) -> &'static str {
        match self {
            FieldTag::Base => "t",
            FieldTag::Ext { .. } => "u",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            FieldTag::Base => Value::from("F"),
            FieldTag::Ext { n, r } => serde_json::json!({ "n": n, "r": r }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        if v.as_str() == Some("F") {
            return Ok(FieldTag::Base);
        }
        let n = v.get("n").and_then(Value::as_u64);
        let r = v.get("r").and_then(Value::as_u64);
        match (n, r) {
            (Some(n), Some(r)) => Ok(FieldTag::Ext { n, r }),
            _ => Err(Error::Malformed(format!("field tag {v}"))),
        }
    }
}

/// A truncated Laurent series `Σ c_i X^i` over the residue field.
///
/// Coefficients at exponents `< abs_prec` are determined; past the stored
/// vector they are zero. Reading at or beyond `abs_prec` is an error, never
/// a silent zero. The zero element has no valuation (`valuation() == None`)
/// but still carries its absolute precision.
#[derive(Clone)]
pub struct LaurentTrunc {
    params: Arc<FieldParams>,
    tag: FieldTag,
    val: Option<i64>,
    coeffs: Vec<Res>,
    abs_prec: i64,
}

impl fmt::Debug for LaurentTrunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentTrunc({:?}, {})", self.tag, self)
    }
}

impl PartialEq for LaurentTrunc {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag
            && self.val == other.val
            && self.coeffs == other.coeffs
            && self.abs_prec == other.abs_prec
            && *self.params == *other.params
    }
}

impl Eq for LaurentTrunc {}

impl LaurentTrunc {
    /// Builds an element from `(exponent, coefficient)` terms, dropping any
    /// term at or beyond `abs_prec`. Repeated exponents are summed.
    pub fn from_terms(params: &Arc<FieldParams>, tag: FieldTag, terms: &[(i64, Res)], abs_prec: i64) -> Self {
        let abs_prec = cap(abs_prec);
        let kept: Vec<(i64, Res)> = terms.iter().copied().filter(|(e, c)| *e < abs_prec && !c.is_zero()).collect();
        if kept.is_empty() {
            return Self::zero(params, tag, abs_prec);
        }
        let lo = kept.iter().map(|t| t.0).min().unwrap();
        let hi = kept.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![Res::ZERO; (hi - lo + 1) as usize];
        for (e, c) in kept {
            let slot = &mut coeffs[(e - lo) as usize];
            *slot = params.add(*slot, c);
        }
        Self::normalized(params.clone(), tag, lo, coeffs, abs_prec)
    }

    fn normalized(params: Arc<FieldParams>, tag: FieldTag, start: i64, mut coeffs: Vec<Res>, abs_prec: i64) -> Self {
        let abs_prec = cap(abs_prec);
        let avail = (abs_prec - start).max(0) as usize;
        coeffs.truncate(avail);
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => Self { params, tag, val: None, coeffs: Vec::new(), abs_prec },
            Some(i) => {
                coeffs.drain(..i);
                Self { params, tag, val: Some(start + i as i64), coeffs, abs_prec }
            }
        }
    }

    pub fn zero(params: &Arc<FieldParams>, tag: FieldTag, abs_prec: i64) -> Self {
        Self { params: params.clone(), tag, val: None, coeffs: Vec::new(), abs_prec: cap(abs_prec) }
    }

    pub fn monomial(params: &Arc<FieldParams>, tag: FieldTag, c: Res, v: i64, abs_prec: i64) -> Self {
        Self::from_terms(params, tag, &[(v, c)], abs_prec)
    }

    pub fn one(params: &Arc<FieldParams>, tag: FieldTag) -> Self {
        Self::monomial(params, tag, Res::ONE, 0, EXACT)
    }

    /// The uniformizer `t` of `F` or `u` of `E_r`, exactly.
    pub fn uniformizer(params: &Arc<FieldParams>, tag: FieldTag) -> Self {
        Self::monomial(params, tag, Res::ONE, 1, EXACT)
    }

    /// The Teichmüller lift `η^a` as an exact constant.
    pub fn teichmuller(params: &Arc<FieldParams>, tag: FieldTag, a: i64) -> Self {
        Self::monomial(params, tag, params.eta_pow(a), 0, EXACT)
    }

    pub fn params(&self) -> &Arc<FieldParams> {
        &self.params
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    /// `None` for the zero element (valuation `+∞`).
    pub fn valuation(&self) -> Option<i64> {
        self.val
    }

    pub fn abs_prec(&self) -> i64 {
        self.abs_prec
    }

    pub fn is_exact(&self) -> bool {
        self.abs_prec >= EXACT
    }

    /// Relative precision; `None` for zero.
    pub fn rel_prec(&self) -> Option<i64> {
        self.val.map(|v| self.abs_prec - v)
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    pub fn leading_coeff(&self) -> Option<Res> {
        self.coeffs.first().copied()
    }

    /// Coefficient of `X^e`; fails if `e` is beyond the known precision.
    pub fn coeff(&self, e: i64) -> Result<Res> {
        if e >= self.abs_prec {
            return Err(Error::Precision { exponent: e, abs_prec: self.abs_prec });
        }
        Ok(self.coeff_unchecked(e))
    }

    fn coeff_unchecked(&self, e: i64) -> Res {
        match self.val {
            Some(v) if e >= v => self.coeffs.get((e - v) as usize).copied().unwrap_or(Res::ZERO),
            _ => Res::ZERO,
        }
    }

    /// Nonzero terms as `(exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Res)> + '_ {
        let v = self.val.unwrap_or(0);
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(i, &c)| (v + i as i64, c))
    }

    /// Lowers the absolute precision to `abs` (never raises it).
    pub fn truncate(&self, abs: i64) -> Self {
        let abs = abs.min(self.abs_prec);
        match self.val {
            None => Self::zero(&self.params, self.tag, abs),
            Some(v) => Self::normalized(self.params.clone(), self.tag, v, self.coeffs.clone(), abs),
        }
    }

    /// The part with exponents `< 0`, as an exact element (needs `abs_prec ≥ 0`).
    pub fn polar_part(&self) -> Result<Self> {
        if self.abs_prec < 0 {
            return Err(Error::Precision { exponent: -1, abs_prec: self.abs_prec });
        }
        let terms: Vec<_> = self.terms().filter(|(e, _)| *e < 0).collect();
        Ok(Self::from_terms(&self.params, self.tag, &terms, EXACT))
    }

    fn check_same(&self, other: &Self) {
        assert_eq!(self.tag, other.tag, "arithmetic across different fields");
        debug_assert!(*self.params == *other.params);
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same(other);
        let abs = self.abs_prec.min(other.abs_prec);
        let lo = match (self.val, other.val) {
            (None, None) => return Self::zero(&self.params, self.tag, abs),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => a.min(b),
        };
        if lo >= abs {
            return Self::zero(&self.params, self.tag, abs);
        }
        let hi = [self.val.map(|v| v + self.coeffs.len() as i64), other.val.map(|v| v + other.coeffs.len() as i64)]
            .into_iter()
            .flatten()
            .max()
            .unwrap()
            .min(abs);
        let k = &self.params;
        let coeffs = (lo..hi).map(|e| k.add(self.coeff_unchecked(e), other.coeff_unchecked(e))).collect();
        Self::normalized(self.params.clone(), self.tag, lo, coeffs, abs)
    }

    pub fn neg(&self) -> Self {
        let k = &self.params;
        Self { coeffs: self.coeffs.iter().map(|&c| k.neg(c)).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: Res) -> Self {
        if c.is_zero() {
            return Self::zero(&self.params, self.tag, EXACT);
        }
        let k = &self.params;
        Self { coeffs: self.coeffs.iter().map(|&x| k.mul(x, c)).collect(), ..self.clone() }
    }

    /// Multiplies by `X^s`.
    pub fn shift(&self, s: i64) -> Self {
        Self { val: self.val.map(|v| v + s), abs_prec: cap(self.abs_prec.saturating_add(s)), ..self.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_same(other);
        // a zero operand contributes its precision as an effective valuation
        let va = self.val.unwrap_or(self.abs_prec);
        let vb = other.val.unwrap_or(other.abs_prec);
        let abs = cap(va.saturating_add(other.abs_prec)).min(cap(vb.saturating_add(self.abs_prec)));
        let (Some(a), Some(b)) = (self.val, other.val) else {
            return Self::zero(&self.params, self.tag, abs);
        };
        let lo = a + b;
        if lo >= abs {
            return Self::zero(&self.params, self.tag, abs);
        }
        let len = ((self.coeffs.len() + other.coeffs.len() - 1) as i64).min(abs - lo) as usize;
        let k = &self.params;
        let mut out = vec![Res::ZERO; len];
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x.is_zero() || i >= len {
                continue;
            }
            for (j, &y) in other.coeffs.iter().enumerate().take(len - i) {
                if !y.is_zero() {
                    out[i + j] = k.add(out[i + j], k.mul(x, y));
                }
            }
        }
        Self::normalized(self.params.clone(), self.tag, lo, out, abs)
    }

    /// Inverse with the same relative precision. An exact monomial has an
    /// exact inverse; an exact non-monomial needs [`inv_with_rel_prec`].
    ///
    /// [`inv_with_rel_prec`]: Self::inv_with_rel_prec
    pub fn inv(&self) -> Result<Self> {
        let v = self.val.ok_or(Error::NotInvertible)?;
        if self.is_exact() {
            if self.coeffs.len() == 1 {
                let c = self.params.inv(self.coeffs[0])?;
                return Ok(Self::monomial(&self.params, self.tag, c, -v, EXACT));
            }
            return Err(Error::Precision { exponent: EXACT, abs_prec: EXACT });
        }
        self.inv_with_rel_prec(self.abs_prec - v)
    }

    pub fn inv_with_rel_prec(&self, rel: i64) -> Result<Self> {
        let v = self.val.ok_or(Error::NotInvertible)?;
        let rel = rel.min(self.abs_prec - v);
        if rel <= 0 {
            return Err(Error::Precision { exponent: v, abs_prec: self.abs_prec });
        }
        let k = &self.params;
        let n = rel as usize;
        let a: Vec<Res> = (0..n).map(|i| self.coeffs.get(i).copied().unwrap_or(Res::ZERO)).collect();
        let inv0 = k.inv(a[0])?;
        let mut b = vec![Res::ZERO; n];
        b[0] = inv0;
        for i in 1..n {
            let mut s = Res::ZERO;
            for j in 1..=i {
                s = k.add(s, k.mul(a[j], b[i - j]));
            }
            b[i] = k.neg(k.mul(s, inv0));
        }
        Ok(Self::normalized(self.params.clone(), self.tag, -v, b, -v + rel))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one(&self.params, self.tag);
        let mut sq = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// Writes `x = X^v · η^a · w` with `w ≡ 1 mod 𝔭` to the available precision.
    pub fn decompose_unit(&self) -> Result<(i64, u64, Self)> {
        let v = self.val.ok_or(Error::ZeroInput)?;
        let lead = self.coeffs[0];
        let a = self.params.dlog(lead)?;
        let inv = self.params.inv(lead)?;
        let w = Self {
            params: self.params.clone(),
            tag: self.tag,
            val: Some(0),
            coeffs: self.coeffs.iter().map(|&c| self.params.mul(c, inv)).collect(),
            abs_prec: if self.is_exact() { EXACT } else { self.abs_prec - v },
        };
        Ok((v, a, w))
    }

    /// Truncated logarithm `Σ_{i=1}^{l} (−1)^{i+1}(w−1)^i / i` mod `𝔭^{l+1}`.
    pub fn trunc_log(&self, level: u64) -> Result<Self> {
        let p = self.params.p();
        if p <= level {
            return Err(Error::WildBound { level, p });
        }
        if self.val != Some(0) || self.coeffs[0] != Res::ONE {
            return Err(Error::NotOneUnit);
        }
        let abs = level as i64 + 1;
        if self.abs_prec < abs {
            return Err(Error::Precision { exponent: self.abs_prec, abs_prec: self.abs_prec });
        }
        let x = self.sub(&Self::one(&self.params, self.tag)).truncate(abs);
        let k = &self.params;
        let mut acc = Self::zero(&self.params, self.tag, abs);
        let mut pw = x.clone();
        for i in 1..=level {
            let c = k.inv(k.from_int(i as i64))?;
            let c = if i % 2 == 1 { c } else { k.neg(c) };
            acc = acc.add(&pw.scale(c));
            pw = pw.mul(&x).truncate(abs);
        }
        Ok(acc.truncate(abs))
    }

    /// Applies `X ↦ ζ·X` for a residue constant `ζ` (coefficients fixed).
    pub fn substitute_scaled(&self, zeta: Res) -> Self {
        let k = &self.params;
        match self.val {
            None => self.clone(),
            Some(v) => {
                let coeffs = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        let e = v + i as i64;
                        let z = if e >= 0 { k.pow(zeta, e as u64) } else { k.inv(k.pow(zeta, (-e) as u64)).unwrap() };
                        k.mul(c, z)
                    })
                    .collect();
                Self { coeffs, ..self.clone() }
            }
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "field": self.tag.to_json(),
            "val": self.val,
            "abs_prec": if self.is_exact() { Value::Null } else { Value::from(self.abs_prec) },
            "coeffs": self.coeffs.iter().map(|c| c.0).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(params: &Arc<FieldParams>, v: &Value) -> Result<Self> {
        let tag = FieldTag::from_json(v.get("field").ok_or_else(|| Error::Malformed("laurent field".into()))?)?;
        let abs = match v.get("abs_prec") {
            None | Some(Value::Null) => EXACT,
            Some(a) => a.as_i64().ok_or_else(|| Error::Malformed("abs_prec".into()))?,
        };
        let val = v.get("val").and_then(Value::as_i64);
        let coeffs = v
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("laurent coeffs".into()))?
            .iter()
            .map(|c| c.as_u64().filter(|&c| c < params.q()).map(|c| Res(c as u32)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Malformed("laurent coefficient".into()))?;
        let terms: Vec<_> = coeffs.iter().enumerate().map(|(i, &c)| (val.unwrap_or(0) + i as i64, c)).collect();
        Ok(Self::from_terms(params, tag, &terms, abs))
    }
}

impl fmt::Display for LaurentTrunc {
    /// `η^a·u^v·(1 + c₁u + …)` with coefficients as powers of `η`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.tag.var();
        let Ok((v, a, w)) = self.decompose_unit() else {
            return if self.is_exact() { write!(f, "0") } else { write!(f, "O({x}^{})", self.abs_prec) };
        };
        write!(f, "η^{a}·{x}^{v}·(1")?;
        let k = &self.params;
        for (e, c) in w.terms().skip(1) {
            let cs = k.show(c);
            let mon = if e == 1 { x.to_string() } else { format!("{x}^{e}") };
            if cs == "1" {
                write!(f, " + {mon}")?;
            } else {
                write!(f, " + {cs}·{mon}")?;
            }
        }
        if !w.is_exact() {
            write!(f, " + O({x}^{})", w.abs_prec)?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(p: u64) -> Arc<FieldParams> {
        Arc::new(FieldParams::new(p, 1).unwrap())
    }

    #[test]
    fn precision_is_tracked_and_enforced() {
        let k = k(5);
        let x = LaurentTrunc::from_terms(&k, FieldTag::Base, &[(0, Res(1)), (1, Res(2))], 3);
        assert_eq!(x.coeff(2).unwrap(), Res(0));
        assert!(matches!(x.coeff(3), Err(Error::Precision { .. })));
        let t = LaurentTrunc::uniformizer(&k, FieldTag::Base);
        let y = x.mul(&t.pow(-2).unwrap());
        assert_eq!(y.abs_prec(), 1);
        assert_eq!(y.valuation(), Some(-2));
        let z = LaurentTrunc::zero(&k, FieldTag::Base, 2);
        assert_eq!(z.mul(&x).abs_prec(), 2);
        assert_eq!(z.valuation(), None);
    }

    #[test]
    fn inverse_matches_series() {
        let k = k(7);
        let x = LaurentTrunc::from_terms(&k, FieldTag::Base, &[(-1, Res(3)), (0, Res(1)), (2, Res(5))], 6);
        let y = x.inv().unwrap();
        let one = x.mul(&y);
        assert_eq!(one.valuation(), Some(0));
        // relative precision 7 is preserved
        assert_eq!(one.abs_prec(), 7);
        for e in 1..7 {
            assert_eq!(one.coeff(e).unwrap(), Res::ZERO);
        }
        assert_eq!(one.coeff(0).unwrap(), Res::ONE);
    }

    #[test]
    fn decompose_examples() {
        let k = k(5);
        let tag = FieldTag::Ext { n: 2, r: 0 };
        let x = LaurentTrunc::from_terms(&k, tag, &[(-1, k.eta())], EXACT);
        let (v, a, w) = x.decompose_unit().unwrap();
        assert_eq!((v, a), (-1, 1));
        assert_eq!(w, LaurentTrunc::one(&k, tag));
        let y = LaurentTrunc::from_terms(&k, tag, &[(2, Res(1)), (3, Res(1))], EXACT);
        let (v, a, w) = y.decompose_unit().unwrap();
        assert_eq!((v, a), (2, 0));
        assert_eq!(w, LaurentTrunc::from_terms(&k, tag, &[(0, Res(1)), (1, Res(1))], EXACT));
        for c in k.units() {
            let (v, a, w) = LaurentTrunc::monomial(&k, tag, c, 4, EXACT).decompose_unit().unwrap();
            assert_eq!((v, a), (4, k.dlog(c).unwrap()));
            assert_eq!(w, LaurentTrunc::one(&k, tag));
        }
        assert_eq!(LaurentTrunc::zero(&k, tag, 3).decompose_unit().unwrap_err(), Error::ZeroInput);
    }

    #[test]
    fn log_examples() {
        let k = k(5);
        let one = LaurentTrunc::one(&k, FieldTag::Base);
        assert!(one.trunc_log(3).unwrap().is_zero());
        let w = LaurentTrunc::from_terms(&k, FieldTag::Base, &[(0, Res(1)), (1, Res(1))], EXACT);
        let lg = w.trunc_log(3).unwrap();
        // t − t²/2 + t³/3 over F_5
        assert_eq!(lg.terms().collect::<Vec<_>>(), vec![(1, Res(1)), (2, Res(2)), (3, Res(2))]);
        assert_eq!(lg.abs_prec(), 4);
        assert!(matches!(w.trunc_log(5), Err(Error::WildBound { .. })));
        let t = LaurentTrunc::uniformizer(&k, FieldTag::Base);
        assert_eq!(t.trunc_log(1).unwrap_err(), Error::NotOneUnit);
    }

    #[test]
    fn display_form() {
        let k = k(3);
        let x = LaurentTrunc::from_terms(&k, FieldTag::Base, &[(-1, Res(2)), (1, Res(1))], 2);
        assert_eq!(x.to_string(), "η^1·t^-1·(1 + η^1·t^2 + O(t^3))");
    }

    #[test]
    fn json_round_trip() {
        let k = k(7);
        let x = LaurentTrunc::from_terms(&k, FieldTag::Ext { n: 3, r: 2 }, &[(-2, Res(3)), (0, Res(6))], 4);
        assert_eq!(LaurentTrunc::from_json(&k, &x.to_json()).unwrap(), x);
    }
}
