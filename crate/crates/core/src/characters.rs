//! The level-one additive character `ψ` and finite-level multiplicative
//! characters of `F^×` and `E_r^×`.
//!
//! A multiplicative character is stored by its value at the uniformizer, its
//! exponent on Teichmüller units, and a single wild parameter `α ∈ 𝔭^{-l}/𝔬`
//! acting through the truncated logarithm: `χ(w) = ψ(tr(α·log w))` for
//! one-units `w`. This needs `p > l`.

use std::sync::Arc;

use serde_json::Value;

use crate::cyclo::RootOfUnity;
use crate::error::{Error, Result};
use crate::localfield::{make_extension, FieldParams, FieldTag, LaurentTrunc, Res, TameExt, EXACT};

/// `ψ(x) = ζ_p^{Tr_{k/F_p}(b·x₀)}`, `x₀` the constant coefficient of `x ∈ F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddChar {
    params: Arc<FieldParams>,
    unit: Res,
}

impl AddChar {
    pub fn new(params: &Arc<FieldParams>, unit: Res) -> Result<Self> {
        if unit.is_zero() || unit.0 as u64 >= params.q() {
            return Err(Error::OutOfRange("additive character twisting unit must be a nonzero residue".into()));
        }
        Ok(Self { params: params.clone(), unit })
    }

    /// The character with twisting unit `b = 1`.
    pub fn standard(params: &Arc<FieldParams>) -> Self {
        Self { params: params.clone(), unit: Res::ONE }
    }

    pub fn params(&self) -> &Arc<FieldParams> {
        &self.params
    }

    pub fn unit(&self) -> Res {
        self.unit
    }

    /// `ψ₀(z)` on the residue field.
    pub fn eval_residue(&self, z: Res) -> RootOfUnity {
        let k = &self.params;
        let tr = k.trace_to_prime(k.mul(self.unit, z));
        RootOfUnity::new(k.p(), tr as i64).unwrap()
    }

    /// `ψ(x)` for `x ∈ F`.
    pub fn eval(&self, x: &LaurentTrunc) -> Result<RootOfUnity> {
        if x.tag() != FieldTag::Base {
            return Err(Error::FieldMismatch("ψ is defined on F; use eval_ext for E".into()));
        }
        Ok(self.eval_residue(x.coeff(0)?))
    }

    /// `ψ_{E/F}(x) = ψ(tr_{E/F} x)`.
    pub fn eval_ext(&self, ext: &TameExt, x: &LaurentTrunc) -> Result<RootOfUnity> {
        self.eval(&ext.trace(x)?)
    }

    /// `ψ` composed with the trace from whichever field `x` lives in.
    pub fn eval_any(&self, x: &LaurentTrunc) -> Result<RootOfUnity> {
        match x.tag() {
            FieldTag::Base => self.eval(x),
            FieldTag::Ext { n, r } => self.eval_ext(&make_extension(&self.params, n, r)?, x),
        }
    }
}

pub fn add_char_eval(psi: &AddChar, x: &LaurentTrunc) -> Result<RootOfUnity> {
    psi.eval(x)
}

/// A character of `F^×` or `E_r^×` of finite level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultChar {
    psi: AddChar,
    tag: FieldTag,
    level: u64,
    pi_value: RootOfUnity,
    teich_exp: u64,
    alpha: LaurentTrunc,
}

impl MultChar {
    /// Builds a character from its data. `alpha` is reduced to its polar part;
    /// the level is `−v(α)` (zero when `α ∈ 𝔬`).
    pub fn new(psi: &AddChar, tag: FieldTag, pi_value: RootOfUnity, teich_exp: i64, alpha: LaurentTrunc) -> Result<Self> {
        if alpha.tag() != tag {
            return Err(Error::FieldMismatch("wild parameter lives in a different field".into()));
        }
        let params = psi.params();
        if let FieldTag::Ext { n, r } = tag {
            make_extension(params, n, r)?;
        }
        let alpha = alpha.polar_part()?;
        let level = alpha.valuation().map_or(0, |v| (-v) as u64);
        if level >= 1 && params.p() <= level {
            return Err(Error::WildBound { level, p: params.p() });
        }
        let teich_exp = teich_exp.rem_euclid(params.q() as i64 - 1) as u64;
        Ok(Self { psi: psi.clone(), tag, level, pi_value, teich_exp, alpha })
    }

    pub fn trivial(psi: &AddChar, tag: FieldTag) -> Self {
        let alpha = LaurentTrunc::zero(psi.params(), tag, EXACT);
        Self::new(psi, tag, RootOfUnity::one(), 0, alpha).unwrap()
    }

    /// The tame character with `χ(η) = ζ_{q−1}^j`, trivial on the uniformizer and on one-units.
    pub fn tame(psi: &AddChar, tag: FieldTag, j: i64) -> Self {
        let alpha = LaurentTrunc::zero(psi.params(), tag, EXACT);
        Self::new(psi, tag, RootOfUnity::one(), j, alpha).unwrap()
    }

    /// The unramified character with the given value at the uniformizer.
    pub fn unramified(psi: &AddChar, tag: FieldTag, pi_value: RootOfUnity) -> Self {
        let alpha = LaurentTrunc::zero(psi.params(), tag, EXACT);
        Self::new(psi, tag, pi_value, 0, alpha).unwrap()
    }

    pub fn psi(&self) -> &AddChar {
        &self.psi
    }

    pub fn params(&self) -> &Arc<FieldParams> {
        self.psi.params()
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn pi_value(&self) -> RootOfUnity {
        self.pi_value
    }

    pub fn teich_exp(&self) -> u64 {
        self.teich_exp
    }

    /// `χ(η)` as `ζ_{q−1}^{teich_exp}`.
    pub fn eta_value(&self) -> RootOfUnity {
        RootOfUnity::new(self.params().q() - 1, self.teich_exp as i64).unwrap()
    }

    /// The wild parameter (polar part, exact).
    pub fn alpha(&self) -> &LaurentTrunc {
        &self.alpha
    }

    pub fn extension(&self) -> Option<TameExt> {
        match self.tag {
            FieldTag::Base => None,
            FieldTag::Ext { n, r } => Some(make_extension(self.params(), n, r).unwrap()),
        }
    }

    /// Evaluates `χ(x) = π^v · ζ_{q−1}^{teich·a} · ψ(tr(α·log w))` for `x = X^v η^a w`.
    pub fn eval(&self, x: &LaurentTrunc) -> Result<RootOfUnity> {
        if x.tag() != self.tag {
            return Err(Error::FieldMismatch(format!("character on {:?} evaluated on {:?}", self.tag, x.tag())));
        }
        let (v, a, w) = x.decompose_unit()?;
        let q1 = self.params().q() - 1;
        let mut val = self
            .pi_value
            .pow(v)
            .mul(&RootOfUnity::new(q1, ((self.teich_exp * a) % q1) as i64).unwrap());
        if self.level >= 1 {
            let lg = w.trunc_log(self.level)?;
            val = val.mul(&self.psi.eval_any(&self.alpha.mul(&lg))?);
        }
        Ok(val)
    }

    /// Pointwise product. Both characters must live on the same field with the same `ψ`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.tag != other.tag || self.psi != other.psi {
            return Err(Error::FieldMismatch("product of characters on different fields".into()));
        }
        Self::new(
            &self.psi,
            self.tag,
            self.pi_value.mul(&other.pi_value),
            (self.teich_exp + other.teich_exp) as i64,
            self.alpha.add(&other.alpha),
        )
    }

    pub fn inv(&self) -> Self {
        let mut c = self.clone();
        c.pi_value = self.pi_value.inv();
        let q1 = self.params().q() - 1;
        c.teich_exp = (q1 - self.teich_exp) % q1;
        c.alpha = self.alpha.neg();
        c
    }

    /// Serialized form `{"field", "level", "pi", "teich", "alpha", "psi_unit"}`.
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "field": self.tag.to_json(),
            "level": self.level,
            "pi": self.pi_value.to_json(),
            "teich": self.teich_exp,
            "alpha": self.alpha.to_json(),
            "psi_unit": self.psi.unit().0,
        })
    }

    pub fn from_json(params: &Arc<FieldParams>, v: &Value) -> Result<Self> {
        let tag = FieldTag::from_json(v.get("field").ok_or_else(|| Error::Malformed("character field".into()))?)?;
        let pi = RootOfUnity::from_json(v.get("pi").ok_or_else(|| Error::Malformed("character pi".into()))?)?;
        let teich = v.get("teich").and_then(Value::as_i64).ok_or_else(|| Error::Malformed("character teich".into()))?;
        let alpha = LaurentTrunc::from_json(params, v.get("alpha").ok_or_else(|| Error::Malformed("character alpha".into()))?)?;
        let unit = v.get("psi_unit").and_then(Value::as_u64).unwrap_or(1);
        let psi = AddChar::new(params, Res(unit as u32))?;
        let chi = Self::new(&psi, tag, pi, teich, alpha)?;
        if let Some(l) = v.get("level").and_then(Value::as_u64) {
            if l != chi.level {
                return Err(Error::Malformed(format!("stored level {l} disagrees with α (level {})", chi.level)));
            }
        }
        Ok(chi)
    }
}

pub fn mult_char_eval(chi: &MultChar, x: &LaurentTrunc) -> Result<RootOfUnity> {
    chi.eval(x)
}

/// `χ_E = χ∘N_{E/F}`.
pub fn base_change(chi: &MultChar, ext: &TameExt) -> Result<MultChar> {
    if chi.tag() != FieldTag::Base {
        return Err(Error::FieldMismatch("base change expects a character of F^×".into()));
    }
    let n = ext.n();
    let p = chi.params().p();
    if chi.level() >= 1 && p <= n * chi.level() {
        return Err(Error::WildBound { level: n * chi.level(), p });
    }
    let pi_e = chi.eval(&ext.norm(&ext.uniformizer())?)?;
    MultChar::new(chi.psi(), ext.tag(), pi_e, (n * chi.teich_exp()) as i64, ext.embed(chi.alpha()))
}

/// `θ|_{F^×}` for a character `θ` of `E^×`.
pub fn restrict_to_base(theta: &MultChar) -> Result<MultChar> {
    let Some(ext) = theta.extension() else {
        return Ok(theta.clone());
    };
    let params = theta.params();
    let t_image = ext.embed(&LaurentTrunc::uniformizer(params, FieldTag::Base));
    let pi_f = theta.eval(&t_image)?;
    // θ(ι(w)) = ψ(tr(α)·log w) by F-linearity of the trace
    let alpha_f = ext.trace(theta.alpha())?;
    MultChar::new(theta.psi(), FieldTag::Base, pi_f, theta.teich_exp() as i64, alpha_f)
}

/// All wild parameters `α ∈ 𝔭^{-l}/𝔬` of exact valuation `−l`, in index order:
/// the leading coefficient `η^i` first, then the higher coefficients as codes.
pub fn enumerate_wild(params: &Arc<FieldParams>, tag: FieldTag, level: u64) -> Vec<LaurentTrunc> {
    if level == 0 {
        return vec![LaurentTrunc::zero(params, tag, EXACT)];
    }
    let q = params.q();
    let l = level as i64;
    let rest = q.pow(level as u32 - 1);
    let mut out = Vec::with_capacity(((q - 1) * rest) as usize);
    for lead in 0..q - 1 {
        for mut code in 0..rest {
            let mut terms = vec![(-l, params.eta_pow(lead as i64))];
            for e in (-l + 1)..0 {
                terms.push((e, Res((code % q) as u32)));
                code /= q;
            }
            out.push(LaurentTrunc::from_terms(params, tag, &terms, EXACT));
        }
    }
    out
}

/// Characters of exact level `l` with `π`-value in `μ_M`, ordered by
/// (π exponent, Teichmüller exponent, wild index).
pub fn enumerate_chars(psi: &AddChar, tag: FieldTag, level: u64, m: u64) -> Result<Vec<MultChar>> {
    let q1 = psi.params().q() - 1;
    let wild = enumerate_wild(psi.params(), tag, level);
    let mut out = Vec::new();
    for j in 0..m {
        let pi = RootOfUnity::new(m, j as i64)?;
        for a in 0..q1 {
            for alpha in &wild {
                out.push(MultChar::new(psi, tag, pi, a as i64, alpha.clone())?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(p: u64, f: u32) -> (Arc<FieldParams>, AddChar) {
        let k = Arc::new(FieldParams::new(p, f).unwrap());
        let psi = AddChar::standard(&k);
        (k, psi)
    }

    fn random_unit(rng: &mut ChaCha8Rng, k: &Arc<FieldParams>, tag: FieldTag, min_val: i64, abs: i64) -> LaurentTrunc {
        loop {
            let terms: Vec<_> = (min_val..abs).map(|e| (e, Res(rng.gen_range(0..k.q() as u32)))).collect();
            let x = LaurentTrunc::from_terms(k, tag, &terms, abs);
            if !x.is_zero() {
                return x;
            }
        }
    }

    fn random_char(rng: &mut ChaCha8Rng, psi: &AddChar, tag: FieldTag, level: u64) -> MultChar {
        let wild = enumerate_wild(psi.params(), tag, level);
        let alpha = wild[rng.gen_range(0..wild.len())].clone();
        let pi = RootOfUnity::new(12, rng.gen_range(0..12)).unwrap();
        MultChar::new(psi, tag, pi, rng.gen_range(0..1000), alpha).unwrap()
    }

    #[test]
    fn additive_character_examples() {
        let (k, psi) = setup(3, 1);
        let t = LaurentTrunc::uniformizer(&k, FieldTag::Base);
        assert!(add_char_eval(&psi, &t).unwrap().is_one());
        assert!(psi.eval(&LaurentTrunc::zero(&k, FieldTag::Base, 5)).unwrap().is_one());
        let x = LaurentTrunc::from_terms(&k, FieldTag::Base, &[(-1, k.eta()), (0, Res::ONE)], EXACT);
        assert_eq!(psi.eval(&x).unwrap(), RootOfUnity::new(3, 1).unwrap());
        let gap = LaurentTrunc::from_terms(&k, FieldTag::Base, &[(-1, Res::ONE)], 0);
        assert!(matches!(psi.eval(&gap), Err(Error::Precision { .. })));
        // level one: trivial on 𝔭, nontrivial on 𝔬
        let nontrivial = k.elements().any(|z| !psi.eval_residue(z).is_one());
        assert!(nontrivial);
    }

    #[test]
    fn multiplicative_examples() {
        let (k, psi) = setup(5, 1);
        let e = make_extension(&k, 2, 0).unwrap();
        let tag = e.tag();
        let alpha = LaurentTrunc::monomial(&k, tag, k.eta_pow(3), -1, EXACT);
        let pi = RootOfUnity::new(4, 1).unwrap();
        let theta = MultChar::new(&psi, tag, pi, 2, alpha).unwrap();
        assert_eq!(theta.level(), 1);
        assert!(mult_char_eval(&theta, &LaurentTrunc::one(&k, tag)).unwrap().is_one());
        let u2 = e.uniformizer().pow(2).unwrap();
        assert_eq!(theta.eval(&u2).unwrap(), pi.pow(2));
        for c in k.elements() {
            let x = LaurentTrunc::from_terms(&k, tag, &[(0, Res::ONE), (1, c)], EXACT);
            let expect = psi.eval_ext(&e, &LaurentTrunc::monomial(&k, tag, k.mul(k.eta_pow(3), c), 0, EXACT)).unwrap();
            assert_eq!(theta.eval(&x).unwrap(), expect);
        }
        let z = LaurentTrunc::zero(&k, tag, 4);
        assert_eq!(theta.eval(&z).unwrap_err(), Error::ZeroInput);
        let bad = LaurentTrunc::monomial(&k, tag, Res::ONE, -7, EXACT);
        assert!(matches!(MultChar::new(&psi, tag, pi, 0, bad), Err(Error::WildBound { .. })));
    }

    #[test]
    fn multiplicativity_and_level_exactness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, f, n) in [(7u64, 1u32, 3u64), (5, 1, 2), (3, 2, 2)] {
            let (k, psi) = setup(p, f);
            let mut tags = vec![FieldTag::Base];
            for r in 0..crate::localfield::extension_census(k.q(), n) {
                tags.push(FieldTag::Ext { n, r });
            }
            for tag in tags {
                for level in 0..=3u64.min(p - 1) {
                    let chi = random_char(&mut rng, &psi, tag, level);
                    for _ in 0..10 {
                        let x = random_unit(&mut rng, &k, tag, -2, 6);
                        let y = random_unit(&mut rng, &k, tag, -1, 6);
                        let lhs = chi.eval(&x.mul(&y)).unwrap();
                        let rhs = chi.eval(&x).unwrap().mul(&chi.eval(&y).unwrap());
                        assert_eq!(lhs, rhs);
                    }
                    if level >= 1 {
                        // trivial on U^{l+1}, nontrivial somewhere on U^l
                        for _ in 0..10 {
                            let mut w = random_unit(&mut rng, &k, tag, level as i64 + 1, level as i64 + 4);
                            w = w.add(&LaurentTrunc::one(&k, tag));
                            assert!(chi.eval(&w).unwrap().is_one());
                        }
                        let hit = k.elements().any(|c| {
                            let w = LaurentTrunc::from_terms(&k, tag, &[(0, Res::ONE), (level as i64, c)], EXACT);
                            !chi.eval(&w).unwrap().is_one()
                        });
                        assert!(hit);
                    }
                }
            }
        }
    }

    #[test]
    fn base_change_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (k, psi) = setup(7, 1);
        let e = make_extension(&k, 3, 1).unwrap();
        let tame = MultChar::tame(&psi, FieldTag::Base, 2);
        let te = base_change(&tame, &e).unwrap();
        assert_eq!((te.level(), te.teich_exp()), (0, 6 % 6));
        let unr = MultChar::unramified(&psi, FieldTag::Base, RootOfUnity::new(5, 2).unwrap());
        let ue = base_change(&unr, &e).unwrap();
        let nu = e.norm(&e.uniformizer()).unwrap();
        assert_eq!(ue.eval(&e.uniformizer()).unwrap(), unr.eval(&nu).unwrap());
        for level in 0..=2 {
            let chi = random_char(&mut rng, &psi, FieldTag::Base, level);
            let che = base_change(&chi, &e).unwrap();
            assert_eq!(che.level(), 3 * level);
            for _ in 0..100 {
                let x = random_unit(&mut rng, &k, e.tag(), -3, 9);
                assert_eq!(che.eval(&x).unwrap(), chi.eval(&e.norm(&x).unwrap()).unwrap());
            }
        }
        let wild3 = random_char(&mut rng, &psi, FieldTag::Base, 3);
        assert!(matches!(base_change(&wild3, &e), Err(Error::WildBound { .. })));
    }

    #[test]
    fn restriction_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (k, psi) = setup(5, 1);
        let e = make_extension(&k, 2, 0).unwrap();
        let trivial = MultChar::trivial(&psi, e.tag());
        assert_eq!(restrict_to_base(&trivial).unwrap(), MultChar::trivial(&psi, FieldTag::Base));
        let i = RootOfUnity::new(4, 1).unwrap();
        let theta = MultChar::unramified(&psi, e.tag(), i);
        let omega = restrict_to_base(&theta).unwrap();
        assert_eq!(omega.pi_value(), RootOfUnity::new(2, 1).unwrap());
        // level-one θ restricts to a tame character with the closed-form values
        for r in 0..2 {
            let e = make_extension(&k, 2, r).unwrap();
            for theta in enumerate_chars(&psi, e.tag(), 1, 4).unwrap() {
                let omega = restrict_to_base(&theta).unwrap();
                assert_eq!(omega.level(), 0);
                let expect = theta.pi_value().pow(2).mul(&theta.eta_value().pow(-(r as i64)));
                assert_eq!(omega.pi_value(), expect);
                assert_eq!(omega.eta_value(), theta.eta_value());
                for _ in 0..3 {
                    let w = random_unit(&mut rng, &k, FieldTag::Base, 1, 4).add(&LaurentTrunc::one(&k, FieldTag::Base));
                    assert!(theta.eval(&e.embed(&w)).unwrap().is_one());
                }
            }
        }
    }

    #[test]
    fn base_change_then_restrict_is_nth_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (k, psi) = setup(11, 1);
        for n in [2u64, 5] {
            for r in 0..crate::localfield::extension_census(11, n) {
                let e = make_extension(&k, n, r).unwrap();
                for level in 0..=2 {
                    let chi = random_char(&mut rng, &psi, FieldTag::Base, level);
                    let back = restrict_to_base(&base_change(&chi, &e).unwrap()).unwrap();
                    let gens = [
                        LaurentTrunc::uniformizer(&k, FieldTag::Base),
                        LaurentTrunc::teichmuller(&k, FieldTag::Base, 1),
                        random_unit(&mut rng, &k, FieldTag::Base, 1, 5).add(&LaurentTrunc::one(&k, FieldTag::Base)),
                    ];
                    for g in gens {
                        assert_eq!(back.eval(&g).unwrap(), chi.eval(&g).unwrap().pow(n as i64));
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let (k, psi) = setup(7, 1);
        let chars = enumerate_chars(&psi, FieldTag::Ext { n: 3, r: 2 }, 1, 2).unwrap();
        for c in chars.iter().step_by(7) {
            assert_eq!(&MultChar::from_json(&k, &c.to_json()).unwrap(), c);
        }
    }
}
