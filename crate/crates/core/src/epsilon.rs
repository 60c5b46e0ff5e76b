//! Epsilon factors `s ↦ C·q^{a(1/2−s)}`, stored as the pair `(a, C)`.

use std::sync::Arc;

use serde_json::Value;

use crate::characters::{AddChar, MultChar};
use crate::cyclo::{lcm_u64, CycNum, QHalfExt, RootOfUnity, RootSum};
use crate::error::{Error, Result};
use crate::localfield::{FieldParams, FieldTag, LaurentTrunc, Res, EXACT};
use crate::pairs::AdmissiblePair;
use crate::{Cyclo, QHalf};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonFactor {
    pub exponent: i64,
    pub constant: QHalf,
}

impl EpsilonFactor {
    pub fn from_root(q: u64, exponent: i64, root: &RootOfUnity) -> Self {
        Self { exponent, constant: QHalfExt::from_base(q, root.to_cyc()) }
    }

    /// Value at `s` for integer `s`, as an element of the `√q` ring.
    pub fn at(&self, s: i64) -> QHalf {
        let k = self.exponent * (1 - 2 * s);
        self.constant.mul(&QHalfExt::q_pow_half(self.constant.q(), k, self.constant.base().order()))
    }

    pub fn pow(&self, n: u64) -> Self {
        Self { exponent: self.exponent * n as i64, constant: self.constant.pow(n) }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "exponent": self.exponent, "constant": self.constant.to_json() })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let exponent = v.get("exponent").and_then(Value::as_i64).ok_or_else(|| Error::Malformed("epsilon exponent".into()))?;
        let constant = QHalfExt::from_json(v.get("constant").ok_or_else(|| Error::Malformed("epsilon constant".into()))?)?;
        Ok(Self { exponent, constant })
    }
}

/// Equal as functions of `s`: the `q`-power separates distinct exponents.
pub fn eps_equal(a: &EpsilonFactor, b: &EpsilonFactor) -> bool {
    a.exponent == b.exponent && a.constant == b.constant
}

fn check_psi(psi: &AddChar, chi: &MultChar) -> Result<()> {
    if psi != chi.psi() {
        return Err(Error::ParamMismatch("character was built against a different ψ".into()));
    }
    Ok(())
}

fn check_odd_level(level: u64) -> Result<()> {
    if level == 0 {
        return Err(Error::LevelZero("level-zero θ has no simple cuspidal epsilon here".into()));
    }
    if level % 2 == 0 {
        return Err(Error::OutOfScope(format!("closed epsilon formula needs odd level, got {level}")));
    }
    Ok(())
}

/// `θ(α)^{-1}·ψ(tr α)` for an arbitrary representative `α` of the wild parameter.
pub fn eps_simple_cuspidal_root_at(pair: &AdmissiblePair, psi: &AddChar, alpha: &LaurentTrunc) -> Result<RootOfUnity> {
    let theta = pair.theta();
    check_psi(psi, theta)?;
    check_odd_level(theta.level())?;
    let k = (theta.level() as i64 - 1) / 2;
    let diff = alpha.sub(theta.alpha());
    if diff.valuation().is_some_and(|v| v < -k) {
        return Err(Error::Precondition(format!("α representative differs from the stored one below 𝔭^{}", -k)));
    }
    Ok(theta.eval(alpha)?.inv().mul(&psi.eval_ext(pair.ext(), alpha)?))
}

pub fn eps_simple_cuspidal_root(pair: &AdmissiblePair, psi: &AddChar) -> Result<RootOfUnity> {
    eps_simple_cuspidal_root_at(pair, psi, pair.theta().alpha())
}

/// Epsilon at `s = 1/2` of the simple cuspidal representation attached to
/// an odd-level pair, with exponent `l(θ)`.
pub fn eps_simple_cuspidal(pair: &AdmissiblePair, psi: &AddChar) -> Result<EpsilonFactor> {
    let root = eps_simple_cuspidal_root(pair, psi)?;
    Ok(EpsilonFactor::from_root(psi.params().q(), pair.level() as i64, &root))
}

/// A common order for every value `χ^{-1}(x)·ψ(y)` can take.
pub fn value_order(chi: &MultChar) -> u64 {
    let k = chi.params();
    lcm_u64(lcm_u64(chi.pi_value().reduced().order(), k.q() - 1), k.p())
}

/// Representatives `η^a(1 + b₁t + … + b_l t^l)` of `U_F/U_F^{l+1}`.
pub fn unit_representatives(params: &Arc<FieldParams>, level: u64) -> impl Iterator<Item = LaurentTrunc> + '_ {
    let q = params.q();
    let one_units = q.pow(level as u32);
    (0..q - 1).flat_map(move |a| {
        (0..one_units).map(move |mut code| {
            let mut terms = vec![(0, Res::ONE)];
            for i in 1..=level as i64 {
                terms.push((i, Res((code % q) as u32)));
                code /= q;
            }
            LaurentTrunc::from_terms(params, FieldTag::Base, &terms, EXACT)
                .mul(&LaurentTrunc::teichmuller(params, FieldTag::Base, a as i64))
        })
    })
}

/// `Σ_{u ∈ U/U^{l+1}} χ^{-1}(cu)·ψ(cu)` for a given `c` of valuation `−l`.
pub fn gauss_sum_tate_at(chi: &MultChar, psi: &AddChar, c: &LaurentTrunc) -> Result<Cyclo> {
    check_psi(psi, chi)?;
    if chi.tag() != FieldTag::Base {
        return Err(Error::FieldMismatch("Tate Gauss sums are over F".into()));
    }
    let l = chi.level();
    if l == 0 {
        return Err(Error::LevelZero("Tate epsilon of a level-zero character is not computed".into()));
    }
    if c.valuation() != Some(-(l as i64)) {
        return Err(Error::Precondition("c must have valuation −l".into()));
    }
    let mut acc = RootSum::new(value_order(chi));
    for u in unit_representatives(chi.params(), l) {
        let cu = c.mul(&u);
        acc.add_root(&chi.eval(&cu)?.inv().mul(&psi.eval(&cu)?), 1);
    }
    Ok(acc.to_cyc())
}

/// The classical Gauss sum with `c = α_χ`.
pub fn gauss_sum_tate(chi: &MultChar, psi: &AddChar) -> Result<Cyclo> {
    gauss_sum_tate_at(chi, psi, chi.alpha())
}

/// `ε(χ, s, ψ)`: exponent `l`, constant `q^{−(l+1)/2}·τ(χ, ψ)`.
pub fn eps_character(chi: &MultChar, psi: &AddChar) -> Result<EpsilonFactor> {
    let tau = gauss_sum_tate(chi, psi)?;
    let l = chi.level() as i64;
    let q = psi.params().q();
    let constant = QHalfExt::q_pow_half(q, -(l + 1), tau.order()).mul_cyc(&tau);
    Ok(EpsilonFactor { exponent: l, constant })
}

/// `ε(χ∘det, s, ψ) = ε(χ, s, ψ)^n`.
pub fn eps_det_twist(chi: &MultChar, n: u64, psi: &AddChar) -> Result<EpsilonFactor> {
    Ok(eps_character(chi, psi)?.pow(n))
}

/// `|x|²` computed as `x·x̄`.
pub fn abs_squared(x: &Cyclo) -> Cyclo {
    x.mul(&x.conj())
}

pub fn cyc_int(order: u64, v: i64) -> Cyclo {
    CycNum::from_int(order, v)
}
