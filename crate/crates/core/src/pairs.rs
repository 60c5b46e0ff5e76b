//! Admissible pairs `(E_r/F, θ)` with `E_r` tame and totally ramified.

use std::sync::Arc;

use num_rational::Rational64;
use serde_json::Value;

use crate::characters::{base_change, enumerate_chars, restrict_to_base, AddChar, MultChar};
use crate::cyclo::{gcd_u64, RootOfUnity};
use crate::error::{Error, Result};
use crate::localfield::{extension_census, make_extension, FieldParams, FieldTag, LaurentTrunc, Res, TameExt};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissiblePair {
    ext: TameExt,
    theta: MultChar,
}

/// `σ: u ↦ ζ·u` between two copies of `E_r`, with `ζ = η^{j(q−1)/e}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldIso {
    pub n: u64,
    pub r: u64,
    pub e: u64,
    pub zeta_exp: u64,
}

impl FieldIso {
    pub fn identity(ext: &TameExt) -> Self {
        Self { n: ext.n(), r: ext.r(), e: ext.census(), zeta_exp: 0 }
    }

    pub fn new(ext: &TameExt, j: i64) -> Self {
        let e = ext.census();
        Self { n: ext.n(), r: ext.r(), e, zeta_exp: j.rem_euclid(e as i64) as u64 }
    }

    pub fn zeta(&self, params: &FieldParams) -> Res {
        params.eta_pow((self.zeta_exp * ((params.q() - 1) / self.e)) as i64)
    }

    pub fn is_identity(&self) -> bool {
        self.zeta_exp == 0
    }

    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.r), (other.n, other.r));
        Self { zeta_exp: (self.zeta_exp + other.zeta_exp) % self.e, ..*self }
    }

    pub fn inverse(&self) -> Self {
        Self { zeta_exp: (self.e - self.zeta_exp) % self.e, ..*self }
    }

    pub fn apply(&self, x: &LaurentTrunc) -> LaurentTrunc {
        x.substitute_scaled(self.zeta(x.params()))
    }

    /// `θ∘σ`: the uniformizer value picks up `θ(ζ)` and `α` moves by `σ^{-1}`
    /// (the trace is `σ`-invariant).
    pub fn pullback(&self, theta: &MultChar) -> Result<MultChar> {
        let k = theta.params();
        let zeta = self.zeta(k);
        let pi = theta.pi_value().mul(&theta.eta_value().pow(k.dlog(zeta)? as i64));
        let alpha = theta.alpha().substitute_scaled(k.inv(zeta)?);
        MultChar::new(theta.psi(), theta.tag(), pi, theta.teich_exp() as i64, alpha)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "n": self.n, "r": self.r, "zeta_exp": self.zeta_exp, "e": self.e })
    }
}

/// The arithmetic admissibility criterion: `l(θ) ≥ 1` and `gcd(l(θ), n) = 1`.
pub fn is_admissible(ext: &TameExt, theta: &MultChar) -> bool {
    theta.tag() == ext.tag() && theta.level() >= 1 && gcd_u64(theta.level(), ext.n()) == 1
}

/// Cross-check: `θ|U¹` factors through `N_{E/K}` for the subfield `K` with
/// `[E:K] = d` iff `x ↦ ψ(tr(α x))` on `𝔭/𝔭^{l+1}` kills `ker tr_{E/K}`,
/// which is spanned by `c·u^m` with `d ∤ m`. Returns false when some `d > 1`
/// admits such a factorization.
pub fn is_admissible_bruteforce(ext: &TameExt, theta: &MultChar) -> Result<bool> {
    if theta.level() == 0 {
        return Ok(false);
    }
    let k = ext.params();
    let l = theta.level() as i64;
    for d in (2..=ext.n()).filter(|d| ext.n() % d == 0) {
        let mut nontrivial = false;
        'search: for m in (1..=l).filter(|m| m % d as i64 != 0) {
            for c in k.units() {
                let x = LaurentTrunc::monomial(k, ext.tag(), c, m, crate::localfield::EXACT);
                if !theta.psi().eval_ext(ext, &theta.alpha().mul(&x))?.is_one() {
                    nontrivial = true;
                    break 'search;
                }
            }
        }
        if !nontrivial {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether an out-of-scope twist needs flagging.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScopeFlag {
    /// Even level: the closed epsilon formula does not apply.
    EvenLevel(u64),
    /// Level zero or sharing a factor with `n`.
    NotSimple(u64),
}

impl AdmissiblePair {
    pub fn new(ext: TameExt, theta: MultChar) -> Result<Self> {
        if theta.tag() != ext.tag() {
            return Err(Error::FieldMismatch("θ does not live on the given extension".into()));
        }
        if !is_admissible(&ext, &theta) {
            return Err(Error::Precondition(format!(
                "level {} with n = {} is not admissible",
                theta.level(),
                ext.n()
            )));
        }
        Ok(Self { ext, theta })
    }

    /// Skips the admissibility check; twists of admissible pairs land here.
    pub(crate) fn from_parts(ext: TameExt, theta: MultChar) -> Self {
        debug_assert_eq!(theta.tag(), ext.tag());
        Self { ext, theta }
    }

    pub fn ext(&self) -> &TameExt {
        &self.ext
    }

    pub fn theta(&self) -> &MultChar {
        &self.theta
    }

    pub fn n(&self) -> u64 {
        self.ext.n()
    }

    pub fn r(&self) -> u64 {
        self.ext.r()
    }

    pub fn level(&self) -> u64 {
        self.theta.level()
    }

    pub fn params(&self) -> &Arc<FieldParams> {
        self.ext.params()
    }

    pub fn scope_flag(&self) -> Option<ScopeFlag> {
        let l = self.level();
        if l >= 1 && l % 2 == 0 {
            Some(ScopeFlag::EvenLevel(l))
        } else if l == 0 || gcd_u64(l, self.n()) != 1 {
            Some(ScopeFlag::NotSimple(l))
        } else {
            None
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "n": self.n(), "r": self.r(), "theta": self.theta.to_json() })
    }

    pub fn from_json(params: &Arc<FieldParams>, v: &Value) -> Result<Self> {
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| Error::Malformed("pair n".into()))?;
        let r = v.get("r").and_then(Value::as_u64).ok_or_else(|| Error::Malformed("pair r".into()))?;
        let theta = MultChar::from_json(params, v.get("theta").ok_or_else(|| Error::Malformed("pair theta".into()))?)?;
        Self::new(make_extension(params, n, r)?, theta)
    }
}

fn check_enumeration(params: &FieldParams, n: u64, level: u64) -> Result<()> {
    if gcd_u64(n, params.p()) != 1 {
        return Err(Error::WildDegree { n, p: params.p() });
    }
    if level == 0 || level % 2 == 0 {
        return Err(Error::Precondition(format!("level {level} is not of the form 2k+1")));
    }
    if params.p() <= level {
        return Err(Error::WildBound { level, p: params.p() });
    }
    if gcd_u64(level, n) != 1 {
        return Err(Error::Precondition(format!("gcd(level {level}, n {n}) ≠ 1")));
    }
    Ok(())
}

/// `e·M·(q−1)²·q^{l−1}`.
pub fn pair_count(q: u64, n: u64, level: u64, m: u64) -> u64 {
    extension_census(q, n) * m * (q - 1) * (q - 1) * q.pow(level as u32 - 1)
}

/// All admissible pairs of the given level with `θ(u) ∈ μ_M`, ordered by
/// (r, π exponent, Teichmüller exponent, wild index).
pub fn enumerate_pairs(psi: &AddChar, n: u64, level: u64, m: u64) -> Result<Vec<AdmissiblePair>> {
    let params = psi.params();
    check_enumeration(params, n, level)?;
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let mut out = Vec::new();
    for r in 0..extension_census(params.q(), n) {
        let ext = make_extension(params, n, r)?;
        for theta in enumerate_chars(psi, ext.tag(), level, m)? {
            out.push(AdmissiblePair { ext: ext.clone(), theta });
        }
    }
    Ok(out)
}

/// Generators of `E^×/U^{l+1}`: `u`, `η`, and `1 + b·u^i` (`b` an `F_p`-basis, `1 ≤ i ≤ l`).
fn generators(ext: &TameExt, level: u64) -> Vec<LaurentTrunc> {
    let k = ext.params();
    let tag = ext.tag();
    let mut g = vec![ext.uniformizer(), LaurentTrunc::teichmuller(k, tag, 1)];
    for i in 1..=level as i64 {
        for b in k.prime_basis() {
            g.push(LaurentTrunc::from_terms(k, tag, &[(0, Res::ONE), (i, b)], crate::localfield::EXACT));
        }
    }
    g
}

/// An `F`-isomorphism `σ: E₁ → E₂` with `θ₁ = θ₂∘σ`, if one exists.
pub fn are_isomorphic(p1: &AdmissiblePair, p2: &AdmissiblePair) -> Result<Option<FieldIso>> {
    if p1.params() != p2.params() || p1.n() != p2.n() || p1.level() != p2.level() {
        return Err(Error::ParamMismatch("pairs differ in (q, n, level)".into()));
    }
    if p1.r() != p2.r() {
        return Ok(None);
    }
    let gens = generators(&p1.ext, p1.level());
    for j in 0..p1.ext.census() {
        let sigma = FieldIso::new(&p1.ext, j as i64);
        let mut ok = true;
        for g in &gens {
            if p1.theta.eval(g)? != p2.theta.eval(&sigma.apply(g))? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(sigma));
        }
    }
    Ok(None)
}

/// `(E, χ_E·θ)`, with a flag when the result leaves the odd-level simple range.
pub fn twist_pair(chi: &MultChar, pair: &AdmissiblePair) -> Result<(AdmissiblePair, Option<ScopeFlag>)> {
    let p = pair.params().p();
    let bound = pair.level().max(pair.n() * chi.level());
    if bound >= 1 && p <= bound {
        return Err(Error::WildBound { level: bound, p });
    }
    let chi_e = base_change(chi, &pair.ext)?;
    let twisted = AdmissiblePair::from_parts(pair.ext.clone(), pair.theta.mul(&chi_e)?);
    let flag = twisted.scope_flag();
    Ok((twisted, flag))
}

/// Normalized level `l(θ)/n` and central character `θ|_{F^×}`.
pub fn pair_invariants(pair: &AdmissiblePair) -> Result<(Rational64, MultChar)> {
    let lvl = Rational64::new(pair.level() as i64, pair.n() as i64);
    Ok((lvl, restrict_to_base(&pair.theta)?))
}

/// `θ(u)` rewritten as an element of `μ_M`, used for display.
pub fn pi_exponent(pair: &AdmissiblePair, m: u64) -> Option<u64> {
    pair.theta.pi_value().exp_in(m)
}

/// Builds the pair `(E_r, θ)` from explicit data.
pub fn make_pair(
    psi: &AddChar,
    n: u64,
    r: u64,
    pi: RootOfUnity,
    teich: i64,
    alpha: &[(i64, Res)],
) -> Result<AdmissiblePair> {
    let ext = make_extension(psi.params(), n, r)?;
    let alpha = LaurentTrunc::from_terms(psi.params(), ext.tag(), alpha, crate::localfield::EXACT);
    let theta = MultChar::new(psi, ext.tag(), pi, teich, alpha)?;
    AdmissiblePair::new(ext, theta)
}

/// Tag helper for characters of `F^×`.
pub const BASE: FieldTag = FieldTag::Base;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::enumerate_wild;
    use crate::localfield::EXACT;

    fn psi(p: u64, f: u32) -> AddChar {
        AddChar::standard(&Arc::new(FieldParams::new(p, f).unwrap()))
    }

    #[test]
    fn admissibility_examples() {
        let psi = psi(7, 1);
        let k = psi.params();
        let e3 = make_extension(k, 3, 0).unwrap();
        let lvl1 = MultChar::new(&psi, e3.tag(), RootOfUnity::one(), 0, LaurentTrunc::monomial(k, e3.tag(), Res::ONE, -1, EXACT)).unwrap();
        assert!(is_admissible(&e3, &lvl1));
        let lvl3 = MultChar::new(&psi, e3.tag(), RootOfUnity::one(), 0, LaurentTrunc::monomial(k, e3.tag(), Res::ONE, -3, EXACT)).unwrap();
        assert!(!is_admissible(&e3, &lvl3));
        assert!(!is_admissible_bruteforce(&e3, &lvl3).unwrap());
        assert!(!is_admissible(&e3, &MultChar::tame(&psi, e3.tag(), 2)));
    }

    #[test]
    fn bruteforce_admissibility_agrees_on_minimal_characters() {
        // gcd(l, n) = 1 always passes; for monomial α the two tests coincide
        for (p, n) in [(7u64, 2u64), (7, 3), (5, 4), (11, 6)] {
            let psi = psi(p, 1);
            let k = psi.params();
            let ext = make_extension(k, n, 0).unwrap();
            for level in 1..p.min(6) {
                for alpha in enumerate_wild(k, ext.tag(), level).iter().take(40) {
                    let theta = MultChar::new(&psi, ext.tag(), RootOfUnity::one(), 1, alpha.clone()).unwrap();
                    let brute = is_admissible_bruteforce(&ext, &theta).unwrap();
                    if is_admissible(&ext, &theta) {
                        assert!(brute);
                    }
                    if alpha.terms().count() == 1 {
                        assert_eq!(brute, is_admissible(&ext, &theta));
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        let ps = enumerate_pairs(&psi(3, 1), 2, 1, 1).unwrap();
        assert_eq!(ps.len(), 8);
        assert_eq!(ps.len() as u64, pair_count(3, 2, 1, 1));
        assert!(ps.iter().all(|p| is_admissible(p.ext(), p.theta())));
        assert_eq!(enumerate_pairs(&psi(2, 1), 3, 1, 1).unwrap().len(), 1);
        assert_eq!(enumerate_pairs(&psi(5, 1), 2, 3, 1).unwrap().len() as u64, pair_count(5, 2, 3, 1));
        assert!(enumerate_pairs(&psi(3, 1), 3, 1, 1).is_err());
        assert!(enumerate_pairs(&psi(5, 1), 2, 2, 1).is_err());
        assert!(enumerate_pairs(&psi(7, 1), 3, 3, 1).is_err());
    }

    #[test]
    fn field_count_is_gcd() {
        for (p, f) in [(2u64, 1u32), (3, 1), (5, 1), (7, 1), (3, 2)] {
            let psi = psi(p, f);
            let q = psi.params().q();
            for n in 1..=6u64 {
                if n % p == 0 {
                    continue;
                }
                let fields: std::collections::BTreeSet<u64> =
                    enumerate_pairs(&psi, n, 1, 1).unwrap().iter().map(|p| p.r()).collect();
                assert_eq!(fields.len() as u64, gcd_u64(n, q - 1));
            }
        }
    }

    #[test]
    fn isomorphism_is_an_equivalence() {
        let ps = enumerate_pairs(&psi(3, 1), 2, 1, 2).unwrap();
        let iso = |a: &AdmissiblePair, b: &AdmissiblePair| are_isomorphic(a, b).unwrap();
        for a in &ps {
            assert_eq!(iso(a, a).map(|s| s.is_identity()), Some(true));
            for b in &ps {
                let ab = iso(a, b);
                assert_eq!(ab.is_some(), iso(b, a).is_some());
                if let Some(s) = ab {
                    // θ_a = θ_b∘σ ⟺ θ_b = θ_a∘σ^{-1}
                    assert_eq!(s.inverse().pullback(a.theta()).unwrap(), *b.theta());
                    assert_eq!(s.pullback(b.theta()).unwrap(), *a.theta());
                    for c in &ps {
                        if let Some(t) = iso(b, c) {
                            assert!(iso(a, c).is_some());
                            assert_eq!(t.compose(&s).pullback(c.theta()).unwrap(), *a.theta());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn construct_and_recover_isomorphism() {
        for (p, n, m) in [(7u64, 3u64, 3u64), (5, 2, 4), (13, 3, 2)] {
            let psi = psi(p, 1);
            let ps = enumerate_pairs(&psi, n, 1, m).unwrap();
            for p1 in ps.iter().step_by(5) {
                let sigma = FieldIso::new(p1.ext(), 1);
                assert!(!sigma.is_identity());
                let theta2 = sigma.inverse().pullback(p1.theta()).unwrap();
                let p2 = AdmissiblePair::new(p1.ext().clone(), theta2).unwrap();
                let found = are_isomorphic(p1, &p2).unwrap().expect("isomorphism");
                assert_eq!(found.pullback(p2.theta()).unwrap(), *p1.theta());
            }
        }
    }

    #[test]
    fn distinct_fields_never_match() {
        let ps = enumerate_pairs(&psi(5, 1), 2, 1, 2).unwrap();
        for a in &ps {
            for b in ps.iter().filter(|b| b.r() != a.r()) {
                assert_eq!(are_isomorphic(a, b).unwrap(), None);
            }
        }
        let other = enumerate_pairs(&psi(5, 1), 4, 1, 1).unwrap();
        assert!(are_isomorphic(&ps[0], &other[0]).is_err());
    }

    #[test]
    fn twist_examples() {
        let psi = psi(7, 1);
        let k = psi.params().clone();
        let ps = enumerate_pairs(&psi, 3, 1, 3).unwrap();
        let p = &ps[17];
        let (same, flag) = twist_pair(&MultChar::trivial(&psi, BASE), p).unwrap();
        assert_eq!((&same, flag), (p, None));
        let unr = MultChar::unramified(&psi, BASE, RootOfUnity::new(5, 1).unwrap());
        let (tw, _) = twist_pair(&unr, p).unwrap();
        let nu = p.ext().norm(&p.ext().uniformizer()).unwrap();
        assert_eq!(tw.theta().pi_value(), p.theta().pi_value().mul(&unr.eval(&nu).unwrap()));
        assert_eq!((tw.theta().teich_exp(), tw.theta().alpha()), (p.theta().teich_exp(), p.theta().alpha()));
        let tame = MultChar::tame(&psi, BASE, 4);
        let (tw, flag) = twist_pair(&tame, p).unwrap();
        assert_eq!((tw.level(), tw.theta().alpha(), flag), (1, p.theta().alpha(), None));
        // level-1 χ on a quadratic extension gives an even level
        let ps2 = enumerate_pairs(&psi, 2, 1, 1).unwrap();
        let wild = MultChar::new(&psi, BASE, RootOfUnity::one(), 0, LaurentTrunc::monomial(&k, BASE, Res::ONE, -1, EXACT)).unwrap();
        let (tw, flag) = twist_pair(&wild, &ps2[0]).unwrap();
        assert_eq!(tw.level(), 2);
        assert_eq!(flag, Some(ScopeFlag::EvenLevel(2)));
        let wild2 = MultChar::new(&psi, BASE, RootOfUnity::one(), 0, LaurentTrunc::monomial(&k, BASE, Res::ONE, -4, EXACT)).unwrap();
        assert!(matches!(twist_pair(&wild2, &ps2[0]), Err(Error::WildBound { .. })));
    }

    #[test]
    fn twists_preserve_isomorphism_and_scale_central_character() {
        let psi = psi(5, 1);
        let ps = enumerate_pairs(&psi, 2, 1, 2).unwrap();
        let chis = [
            MultChar::tame(&psi, BASE, 1),
            MultChar::new(&psi, BASE, RootOfUnity::new(3, 1).unwrap(), 3, LaurentTrunc::zero(psi.params(), BASE, EXACT)).unwrap(),
        ];
        let k = psi.params();
        let gens = [LaurentTrunc::uniformizer(k, BASE), LaurentTrunc::teichmuller(k, BASE, 1)];
        for chi in &chis {
            for a in &ps {
                let (ta, _) = twist_pair(chi, a).unwrap();
                let (_, om) = pair_invariants(a).unwrap();
                let (_, tom) = pair_invariants(&ta).unwrap();
                for g in &gens {
                    let expect = om.eval(g).unwrap().mul(&chi.eval(g).unwrap().pow(2));
                    assert_eq!(tom.eval(g).unwrap(), expect);
                }
                for b in &ps {
                    if are_isomorphic(a, b).unwrap().is_some() {
                        let (tb, _) = twist_pair(chi, b).unwrap();
                        assert!(are_isomorphic(&ta, &tb).unwrap().is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn invariants_examples() {
        let psi = psi(7, 1);
        let p = &enumerate_pairs(&psi, 2, 1, 1).unwrap()[0];
        assert_eq!(pair_invariants(p).unwrap().0, Rational64::new(1, 2));
        let p3 = &enumerate_pairs(&psi, 2, 3, 1).unwrap()[0];
        assert_eq!(pair_invariants(p3).unwrap().0, Rational64::new(3, 2));
        // r = 0, θ(u) = 1, teich 0: θ(t) = θ(u²) = 1 and θ(η) = 1
        let k = psi.params();
        let pair = make_pair(&psi, 2, 0, RootOfUnity::one(), 0, &[(-1, Res::ONE)]).unwrap();
        let (_, om) = pair_invariants(&pair).unwrap();
        assert!(om.eval(&LaurentTrunc::uniformizer(k, BASE)).unwrap().is_one());
        assert!(om.eval(&LaurentTrunc::teichmuller(k, BASE, 1)).unwrap().is_one());
        assert_eq!(om.level(), 0);
    }

    #[test]
    fn json_round_trip() {
        let psi = psi(5, 1);
        for p in enumerate_pairs(&psi, 4, 1, 2).unwrap().iter().step_by(11) {
            assert_eq!(&AdmissiblePair::from_json(psi.params(), &p.to_json()).unwrap(), p);
        }
    }
}
