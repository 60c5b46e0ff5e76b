//! Principal hereditary orders in `M_n(F)` and brute-force matrix Gauss sums.
//!
//! Entry `(i, j)` of `𝔓^m` lies in block `(I, J) = (i/b, j/b)`, `b = n/e`, and
//! has valuation at least `⌈(m + I − J)/e⌉`. Matrices are enumerated as
//! digit vectors over exactly these slots, so no filtering by membership is
//! needed. Only `det y` and `tr y` modulo `t^{l+1}` enter a summand, so a
//! single pass builds a histogram over those two codes and every character
//! of the sample is summed against the histogram afterwards.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::characters::{enumerate_chars, AddChar, MultChar};
use crate::cyclo::{QHalfExt, RootSum};
use crate::epsilon::{eps_det_twist, gauss_sum_tate, value_order, EpsilonFactor};
use crate::error::{Error, Result};
use crate::localfield::{FieldParams, FieldTag, LaurentTrunc, Res, EXACT};
use crate::{Cyclo, QHalf};

pub const DEFAULT_BUDGET: u128 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HereditaryOrder {
    n: usize,
    e: usize,
}

pub fn make_order(n: u64, e: u64) -> Result<HereditaryOrder> {
    if n == 0 || e == 0 || n % e != 0 {
        return Err(Error::InvalidParams(format!("e = {e} must divide n = {n}")));
    }
    Ok(HereditaryOrder { n: n as usize, e: e as usize })
}

impl HereditaryOrder {
    pub fn n(&self) -> u64 {
        self.n as u64
    }

    pub fn e(&self) -> u64 {
        self.e as u64
    }

    pub fn block_size(&self) -> u64 {
        (self.n / self.e) as u64
    }

    fn block(&self, i: usize) -> i64 {
        (i / (self.n / self.e)) as i64
    }

    /// Least valuation of entry `(i, j)` in `𝔓^m`.
    pub fn floor(&self, i: usize, j: usize, m: i64) -> i64 {
        let x = m + self.block(i) - self.block(j);
        x.div_euclid(self.e as i64) + i64::from(x.rem_euclid(self.e as i64) != 0)
    }

    /// `log_q (𝔄 : 𝔓^m) = (n²/e)·m`.
    pub fn index_exponent(&self, m: i64) -> i64 {
        (self.n * self.n / self.e) as i64 * m
    }

    /// `(𝔄 : 𝔓^m)` when it fits.
    pub fn index(&self, q: u64, m: i64) -> Option<u128> {
        (q as u128).checked_pow(u32::try_from(self.index_exponent(m)).ok()?)
    }

    /// Digit positions `(i, j, exponent)` spanning `𝔓^{m1}/𝔓^{m2}`.
    pub fn digit_slots(&self, m1: i64, m2: i64) -> Vec<(usize, usize, i64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                for ex in self.floor(i, j, m1)..self.floor(i, j, m2) {
                    out.push((i, j, ex));
                }
            }
        }
        out
    }
}

/// Residue polynomials modulo `t^L`, encoded base `q`.
struct PolyRing<'a> {
    k: &'a FieldParams,
    len: usize,
}

impl PolyRing<'_> {
    fn mul_into(&self, a: &[Res], b: &[Res], out: &mut [Res]) {
        out.fill(Res::ZERO);
        for (i, &x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in b[..self.len - i].iter().enumerate() {
                if !y.is_zero() {
                    out[i + j] = self.k.add(out[i + j], self.k.mul(x, y));
                }
            }
        }
    }

    fn code(&self, a: &[Res]) -> u64 {
        a.iter().rev().fold(0, |acc, c| acc * self.k.q() + c.0 as u64)
    }

    fn decode(&self, mut code: u64) -> Vec<(i64, Res)> {
        (0..self.len as i64)
            .map(|i| {
                let c = Res((code % self.k.q()) as u32);
                code /= self.k.q();
                (i, c)
            })
            .collect()
    }
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], odd: bool, out: &mut Vec<(Vec<usize>, bool)>) {
        let n = used.len();
        if prefix.len() == n {
            out.push((prefix.clone(), odd));
            return;
        }
        for v in 0..n {
            if used[v] {
                continue;
            }
            // inversions contributed by v against later, smaller values
            let inv = (0..v).filter(|&w| !used[w]).count() % 2 == 1;
            used[v] = true;
            prefix.push(v);
            rec(prefix, used, odd ^ inv, out);
            prefix.pop();
            used[v] = false;
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], false, &mut out);
    out
}

/// Multiset of `(det y mod t^{l+1}, tr y mod t^{l+1})` codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub size: u128,
    pub units: u64,
    pub counts: BTreeMap<(u64, u64), u64>,
}

/// What to enumerate: all of `𝔄/𝔓^{el+1}` (keeping units), or `1 + 𝔓^{c'}/𝔓^{c''}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Full,
    Reduced,
}

/// `(c', c'') = (⌊(el+1)/2⌋, ⌊el/2⌋ + 1)`.
pub fn reduced_range(order: &HereditaryOrder, l: u64) -> (i64, i64) {
    let el = (order.e as u64 * l) as i64;
    ((el + 1) / 2, el / 2 + 1)
}

pub fn sweep_size(order: &HereditaryOrder, q: u64, l: u64, sweep: Sweep) -> Option<u128> {
    let slots = match sweep {
        Sweep::Full => order.index_exponent(order.e as i64 * l as i64 + 1),
        Sweep::Reduced => {
            let (c1, c2) = reduced_range(order, l);
            order.index_exponent(c2 - c1)
        }
    };
    (q as u128).checked_pow(u32::try_from(slots).ok()?)
}

/// Enumerates the sweep with `partitions` independent index ranges; the
/// merged histogram does not depend on the partition count.
pub fn histogram(
    order: &HereditaryOrder,
    params: &Arc<FieldParams>,
    l: u64,
    sweep: Sweep,
    budget: u128,
    partitions: usize,
) -> Result<Histogram> {
    if l == 0 {
        return Err(Error::LevelZero("matrix Gauss sums need level ≥ 1".into()));
    }
    let q = params.q();
    let size = sweep_size(order, q, l, sweep).unwrap_or(u128::MAX);
    if size > budget {
        return Err(Error::Budget { size, budget });
    }
    let n = order.n;
    let len = l as usize + 1;
    let slots = match sweep {
        Sweep::Full => order.digit_slots(0, order.e as i64 * l as i64 + 1),
        Sweep::Reduced => {
            let (c1, c2) = reduced_range(order, l);
            order.digit_slots(c1, c2)
        }
    };
    debug_assert!(slots.iter().all(|&(_, _, ex)| (0..len as i64).contains(&ex)));
    let mut base = vec![Res::ZERO; n * n * len];
    if sweep == Sweep::Reduced {
        for i in 0..n {
            base[(i * n + i) * len] = Res::ONE;
        }
        debug_assert!(slots.iter().all(|&(i, j, ex)| !(i == j && ex == 0)));
    }
    let perms = permutations(n);
    let total = size as u64;
    let parts = (partitions.max(1) as u64).min(total.max(1));
    let chunk = total.div_ceil(parts);
    let ring = PolyRing { k: params, len };
    let slot_pos: Vec<usize> = slots.iter().map(|&(i, j, ex)| (i * n + j) * len + ex as usize).collect();

    let partials: Vec<(u64, HashMap<(u64, u64), u64>)> = (0..parts)
        .into_par_iter()
        .map(|part| {
            let start = part * chunk;
            let end = (start + chunk).min(total);
            let mut hist = HashMap::new();
            let mut units = 0u64;
            if start >= end {
                return (units, hist);
            }
            let mut m = base.clone();
            let mut digits = vec![0u64; slots.len()];
            let mut c = start;
            for (d, &pos) in digits.iter_mut().zip(&slot_pos) {
                *d = c % q;
                c /= q;
                m[pos] = Res(*d as u32);
            }
            let mut prod = vec![Res::ZERO; len];
            let mut tmp = vec![Res::ZERO; len];
            let mut det = vec![Res::ZERO; len];
            let mut tr = vec![Res::ZERO; len];
            for idx in start..end {
                if idx > start {
                    // odometer step
                    for (d, &pos) in digits.iter_mut().zip(&slot_pos) {
                        *d += 1;
                        if *d == q {
                            *d = 0;
                            m[pos] = Res::ZERO;
                        } else {
                            m[pos] = Res(*d as u32);
                            break;
                        }
                    }
                }
                det.fill(Res::ZERO);
                for (perm, odd) in &perms {
                    prod.copy_from_slice(&m[perm[0] * len..perm[0] * len + len]);
                    for (i, &j) in perm.iter().enumerate().skip(1) {
                        let e = &m[(i * n + j) * len..(i * n + j) * len + len];
                        ring.mul_into(&prod, e, &mut tmp);
                        std::mem::swap(&mut prod, &mut tmp);
                    }
                    for (d, &x) in det.iter_mut().zip(&prod) {
                        *d = if *odd { params.sub(*d, x) } else { params.add(*d, x) };
                    }
                }
                if det[0].is_zero() {
                    continue;
                }
                units += 1;
                tr.fill(Res::ZERO);
                for i in 0..n {
                    for (t, &x) in tr.iter_mut().zip(&m[(i * n + i) * len..(i * n + i) * len + len]) {
                        *t = params.add(*t, x);
                    }
                }
                *hist.entry((ring.code(&det), ring.code(&tr))).or_insert(0) += 1;
            }
            (units, hist)
        })
        .collect();

    let mut counts = BTreeMap::new();
    let mut units = 0;
    for (u, h) in partials {
        units += u;
        for (key, c) in h {
            *counts.entry(key).or_insert(0) += c;
        }
    }
    Ok(Histogram { size, units, counts })
}

/// `Σ count·χ^{-1}(cⁿ·det)·ψ(c·tr)` over a histogram.
pub fn sum_over_histogram(hist: &Histogram, n: u64, l: u64, chi: &MultChar, psi: &AddChar) -> Result<Cyclo> {
    let k = chi.params();
    if chi.level() != l {
        return Err(Error::ParamMismatch(format!("character of level {} against a level-{l} sweep", chi.level())));
    }
    let ring = PolyRing { k, len: l as usize + 1 };
    let c = chi.alpha();
    let cn = c.pow(n as i64)?;
    let mut acc = RootSum::new(value_order(chi));
    for (&(d, t), &cnt) in &hist.counts {
        let det = LaurentTrunc::from_terms(k, FieldTag::Base, &ring.decode(d), l as i64 + 1);
        let tr = LaurentTrunc::from_terms(k, FieldTag::Base, &ring.decode(t), l as i64 + 1);
        let v = chi.eval(&cn.mul(&det))?.inv().mul(&psi.eval(&c.mul(&tr))?);
        acc.add_root(&v, cnt as i64);
    }
    Ok(acc.to_cyc())
}

/// `τ_𝔄(χ, ψ)` by summing over all of `U_𝔄/U_𝔄^{el+1}`.
pub fn matrix_gauss_full(order: &HereditaryOrder, chi: &MultChar, psi: &AddChar, budget: u128) -> Result<Cyclo> {
    let h = histogram(order, chi.params(), chi.level(), Sweep::Full, budget, rayon::current_num_threads() * 4)?;
    sum_over_histogram(&h, order.n(), chi.level(), chi, psi)
}

/// `(𝔄 : 𝔓^{c'})·Σ_{y ∈ U^{c'}/U^{c''}}`.
pub fn matrix_gauss_reduced(order: &HereditaryOrder, chi: &MultChar, psi: &AddChar, budget: u128) -> Result<Cyclo> {
    let h = histogram(order, chi.params(), chi.level(), Sweep::Reduced, budget, rayon::current_num_threads() * 4)?;
    let s = sum_over_histogram(&h, order.n(), chi.level(), chi, psi)?;
    Ok(scale_by_index(order, chi.params().q(), reduced_range(order, chi.level()).0, &s))
}

fn scale_by_index(order: &HereditaryOrder, q: u64, m: i64, s: &Cyclo) -> Cyclo {
    let idx = num_bigint::BigInt::from(q).pow(order.index_exponent(m) as u32);
    s.scale(&num_rational::BigRational::from_integer(idx))
}

/// `(𝔄 : 𝔓^{el+1})^{-1/2}·τ_𝔄` in the `√q` ring.
pub fn normalized_matrix_sum(order: &HereditaryOrder, q: u64, l: u64, tau_a: &Cyclo) -> QHalf {
    let k = order.index_exponent(order.e as i64 * l as i64 + 1);
    QHalfExt::q_pow_half(q, -k, tau_a.order()).mul_cyc(tau_a)
}

/// `q^{−n(l+1)/2}·τ(χ, ψ)^n`.
pub fn classical_side(n: u64, q: u64, l: u64, tau: &Cyclo) -> Result<QHalf> {
    Ok(QHalfExt::q_pow_half(q, -((n * (l + 1)) as i64), tau.order()).mul_cyc(&tau.pow(n as i64)?))
}

/// The epsilon factor of `χ∘det` read off the matrix sum: exponent `n·l`.
pub fn eps_det_twist_matrix(order: &HereditaryOrder, chi: &MultChar, tau_a: &Cyclo) -> EpsilonFactor {
    let q = chi.params().q();
    EpsilonFactor { exponent: (order.n() * chi.level()) as i64, constant: normalized_matrix_sum(order, q, chi.level(), tau_a) }
}

/// `Σ_{a,b ∈ k} ψ(u·a·b)`.
pub fn easy_sum(psi: &AddChar, u: Res) -> Cyclo {
    let k = psi.params();
    let mut acc = RootSum::new(k.p());
    for a in k.elements() {
        for b in k.elements() {
            acc.add_root(&psi.eval_residue(k.mul(u, k.mul(a, b))), 1);
        }
    }
    acc.to_cyc()
}

/// The prefactor from pairing off-diagonal entries inside each diagonal block:
/// a product of `(n² − ne)/(2e)` easy sums.
pub fn block_pair_product(order: &HereditaryOrder, psi: &AddChar) -> Cyclo {
    let b = order.n / order.e;
    let pairs = order.e * b * (b - 1) / 2;
    let mut acc = Cyclo::one(psi.params().p());
    for _ in 0..pairs {
        acc = acc.mul(&easy_sum(psi, Res::ONE));
    }
    acc
}

/// The factorized value of the reduced sum for `l = 2m`:
/// `t·(Σ_{a ∈ k} χ^{-1}(c(1+ϖ^m a))·ψ(c(1+ϖ^m a)))^n`.
pub fn factorized_reduced_sum(order: &HereditaryOrder, chi: &MultChar, psi: &AddChar) -> Result<Option<Cyclo>> {
    let l = chi.level();
    if l == 0 || l % 2 == 1 {
        return Ok(None);
    }
    let k = chi.params();
    let m = (l / 2) as i64;
    let c = chi.alpha();
    let mut diag = RootSum::new(value_order(chi));
    for a in k.elements() {
        let y = LaurentTrunc::from_terms(k, FieldTag::Base, &[(0, Res::ONE), (m, a)], EXACT);
        let cy = c.mul(&y);
        diag.add_root(&chi.eval(&cy)?.inv().mul(&psi.eval(&cy)?), 1);
    }
    let d: Cyclo = diag.to_cyc();
    Ok(Some(block_pair_product(order, psi).mul(&d.pow(order.n() as i64)?)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaussMode {
    Full,
    Reduced,
    Both,
}

impl GaussMode {
    /// Full enumeration when it fits the budget, reduced otherwise (always reduced too).
    pub fn auto(order: &HereditaryOrder, q: u64, l: u64, budget: u128) -> Self {
        match sweep_size(order, q, l, Sweep::Full) {
            Some(s) if s <= budget => GaussMode::Both,
            _ => GaussMode::Reduced,
        }
    }
}

/// Outcome of [`verify_gauss_identity`]; `timing` is kept apart so that the
/// rest is reproducible byte for byte.
#[derive(Clone, Debug)]
pub struct GaussReport {
    pub body: Value,
    pub pass: bool,
    pub elapsed_ms: u128,
}

/// The level-`l` characters of `F^×` with `χ(ϖ) ∈ μ_M`.
pub fn chi_sample(psi: &AddChar, l: u64, m: u64) -> Result<Vec<MultChar>> {
    enumerate_chars(psi, FieldTag::Base, l, m)
}

/// Checks, for every character in `chis`,
/// `(𝔄:𝔓^{el+1})^{-1/2}·τ_𝔄 = q^{−n(l+1)/2}·τ^n` (through each requested
/// sweep), agreement of full and reduced sweeps, the factorized form for even
/// `l`, and equality with `ε(χ, ·, ψ)^n` as epsilon factors. Also checks the
/// easy sums `Σψ(uab) = q` for all `u ∈ k^×` and the block-pair prefactor.
pub fn verify_gauss_identity(
    psi: &AddChar,
    order: &HereditaryOrder,
    l: u64,
    chis: &[MultChar],
    mode: GaussMode,
    budget: u128,
) -> Result<GaussReport> {
    let started = Instant::now();
    let k = psi.params();
    let q = k.q();
    let n = order.n();
    if l == 0 {
        return Err(Error::LevelZero("matrix Gauss sums need level ≥ 1".into()));
    }
    if l >= k.p() {
        return Err(Error::WildBound { level: l, p: k.p() });
    }
    let parts = rayon::current_num_threads() * 4;
    let full = if mode != GaussMode::Reduced { Some(histogram(order, k, l, Sweep::Full, budget, parts)?) } else { None };
    let reduced = if mode != GaussMode::Full { Some(histogram(order, k, l, Sweep::Reduced, budget, parts)?) } else { None };
    let (c1, c2) = reduced_range(order, l);

    let q_int = Cyclo::from_int(1, q as i64);
    let easy: Vec<Value> = k
        .units()
        .map(|u| {
            let s = easy_sum(psi, u);
            json!({ "u": u.0, "value": s.to_json(), "ok": s == q_int })
        })
        .collect();
    let easy_ok = easy.iter().all(|v| v["ok"] == Value::Bool(true));
    let b = n / order.e();
    let t_exp = order.e() * b * (b - 1) / 2;
    let t_val = block_pair_product(order, psi);
    let t_ok = t_val == Cyclo::from_int(1, (q as i64).pow(t_exp as u32));

    let per_chi: Vec<Result<(bool, Value)>> = chis
        .par_iter()
        .enumerate()
        .map(|(i, chi)| {
            if chi.level() != l || chi.tag() != FieldTag::Base {
                return Err(Error::ParamMismatch(format!("sample character {i} is not of level {l} on F")));
            }
            let tau = gauss_sum_tate(chi, psi)?;
            let rhs = classical_side(n, q, l, &tau)?;
            let mut ok = true;
            let mut rec = json!({ "index": i, "chi": chi.to_json(), "rhs": rhs.to_json() });
            let mut taus = Vec::new();
            if let Some(h) = &full {
                let ta = sum_over_histogram(h, n, l, chi, psi)?;
                let lhs = normalized_matrix_sum(order, q, l, &ta);
                let good = lhs == rhs;
                ok &= good;
                rec["full"] = json!({ "lhs": lhs.to_json(), "ok": good });
                taus.push(ta);
            }
            if let Some(h) = &reduced {
                let s = sum_over_histogram(h, n, l, chi, psi)?;
                let ta = scale_by_index(order, q, c1, &s);
                let lhs = normalized_matrix_sum(order, q, l, &ta);
                let good = lhs == rhs;
                ok &= good;
                rec["reduced"] = json!({ "lhs": lhs.to_json(), "ok": good });
                if let Some(f) = factorized_reduced_sum(order, chi, psi)? {
                    let good = f == s;
                    ok &= good;
                    rec["factorized_ok"] = json!(good);
                }
                taus.push(ta);
            }
            if taus.len() == 2 {
                let good = taus[0] == taus[1];
                ok &= good;
                rec["full_equals_reduced"] = json!(good);
            }
            let eps = eps_det_twist(chi, n, psi)?;
            let good = eps_det_twist_matrix(order, chi, &taus[0]) == eps;
            ok &= good;
            rec["det_twist_epsilon_ok"] = json!(good);
            rec["ok"] = json!(ok);
            Ok((ok, rec))
        })
        .collect();
    let mut verdicts = Vec::with_capacity(per_chi.len());
    let mut counterexample = Value::Null;
    let mut all_ok = true;
    for r in per_chi {
        let (ok, rec) = r?;
        if !ok && counterexample.is_null() {
            counterexample = rec.clone();
        }
        all_ok &= ok;
        verdicts.push(rec);
    }
    let pass = all_ok && easy_ok && t_ok;
    let body = json!({
        "check": "gauss",
        "params": { "p": k.p(), "f": k.f(), "q": q, "n": n, "e": order.e(), "chi_level": l },
        "counts": {
            "full_size": full.as_ref().map(|h| h.size.to_string()),
            "full_units": full.as_ref().map(|h| h.units),
            "reduced_size": reduced.as_ref().map(|h| h.size.to_string()),
            "reduced_range": [c1, c2],
            "characters": chis.len(),
        },
        "easy_sums": { "ok": easy_ok, "values": easy },
        "block_pair_prefactor": { "exponent": t_exp, "value": t_val.to_json(), "ok": t_ok },
        "per_chi": verdicts,
        "counterexample": counterexample,
        "verdict": if pass { "PASS" } else { "FAIL" },
    });
    Ok(GaussReport { body, pass, elapsed_ms: started.elapsed().as_millis() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epsilon::{abs_squared, eps_character};

    fn psi(p: u64, f: u32) -> AddChar {
        AddChar::standard(&Arc::new(FieldParams::new(p, f).unwrap()))
    }

    #[test]
    fn order_indices() {
        assert_eq!(make_order(2, 1).unwrap().index(3, 1), Some(81));
        assert_eq!(make_order(2, 2).unwrap().index(3, 1), Some(9));
        assert_eq!(make_order(1, 1).unwrap().index(5, 1), Some(5));
        assert!(make_order(3, 2).is_err());
        // slot counts match the index for every m
        for (n, e) in [(2u64, 1u64), (2, 2), (3, 3), (4, 2), (6, 3)] {
            let o = make_order(n, e).unwrap();
            for m in 0..5 {
                assert_eq!(o.digit_slots(0, m).len() as i64, o.index_exponent(m));
                assert_eq!(o.digit_slots(m, m + 1).len() as i64, o.index_exponent(1));
            }
        }
        // 𝔓 for e = n: strictly upper part integral, diagonal and below in 𝔭
        let o = make_order(3, 3).unwrap();
        assert_eq!((o.floor(0, 1, 1), o.floor(1, 1, 1), o.floor(2, 0, 1)), (0, 1, 1));
        assert_eq!((o.floor(0, 2, 0), o.floor(2, 0, 0)), (0, 1));
    }

    #[test]
    fn permutation_signs() {
        let ps = permutations(3);
        assert_eq!(ps.len(), 6);
        assert_eq!(ps.iter().filter(|(_, odd)| *odd).count(), 3);
        assert!(ps.contains(&(vec![1, 0, 2], true)));
        assert!(ps.contains(&(vec![1, 2, 0], false)));
    }

    #[test]
    fn one_by_one_is_tate() {
        for (p, l) in [(3u64, 1u64), (5, 2), (7, 1)] {
            let psi = psi(p, 1);
            let o = make_order(1, 1).unwrap();
            for chi in chi_sample(&psi, l, 2).unwrap().iter().step_by(3) {
                let tau = gauss_sum_tate(chi, &psi).unwrap();
                assert_eq!(matrix_gauss_full(&o, chi, &psi, DEFAULT_BUDGET).unwrap(), tau);
                assert_eq!(matrix_gauss_reduced(&o, chi, &psi, DEFAULT_BUDGET).unwrap(), tau);
            }
        }
    }

    #[test]
    fn unit_counts() {
        // |GL_2(F_3)| = 48, times q^4 for the second layer
        let k = Arc::new(FieldParams::new(3, 1).unwrap());
        let h = histogram(&make_order(2, 1).unwrap(), &k, 1, Sweep::Full, DEFAULT_BUDGET, 7).unwrap();
        assert_eq!((h.size, h.units), (6561, 48 * 81));
        // Iwahori: 𝔄/𝔓 = k × k, then q² per further layer
        let h = histogram(&make_order(2, 2).unwrap(), &k, 1, Sweep::Full, DEFAULT_BUDGET, 3).unwrap();
        assert_eq!((h.size, h.units), (729, 4 * 81));
    }

    #[test]
    fn partition_independence() {
        let k = Arc::new(FieldParams::new(3, 1).unwrap());
        let o = make_order(2, 1).unwrap();
        let a = histogram(&o, &k, 1, Sweep::Full, DEFAULT_BUDGET, 1).unwrap();
        let b = histogram(&o, &k, 1, Sweep::Full, DEFAULT_BUDGET, 97).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_refusal() {
        let k = Arc::new(FieldParams::new(3, 1).unwrap());
        let o = make_order(2, 1).unwrap();
        assert_eq!(histogram(&o, &k, 1, Sweep::Full, 100, 1).unwrap_err(), Error::Budget { size: 6561, budget: 100 });
    }

    #[test]
    fn quadratic_full_matches_tate_square() {
        // (𝔄:𝔓²)^{1/2} = q⁴ and q^{−n(l+1)/2} = q^{−2}, so τ_𝔄 = q²·τ²
        let psi = psi(3, 1);
        let o = make_order(2, 1).unwrap();
        for chi in chi_sample(&psi, 1, 1).unwrap() {
            let tau = gauss_sum_tate(&chi, &psi).unwrap();
            let full = matrix_gauss_full(&o, &chi, &psi, DEFAULT_BUDGET).unwrap();
            assert_eq!(full, tau.mul(&tau).scale(&num_rational::BigRational::from_integer(9.into())));
            assert_eq!(matrix_gauss_reduced(&o, &chi, &psi, DEFAULT_BUDGET).unwrap(), full);
        }
    }

    #[test]
    fn iwahori_full_matches_reduced_and_single_term() {
        let psi = psi(3, 1);
        let o = make_order(2, 2).unwrap();
        assert_eq!(reduced_range(&o, 1), (1, 2));
        let o1 = make_order(2, 1).unwrap();
        for chi in chi_sample(&psi, 1, 2).unwrap() {
            let full = matrix_gauss_full(&o, &chi, &psi, DEFAULT_BUDGET).unwrap();
            assert_eq!(matrix_gauss_reduced(&o, &chi, &psi, DEFAULT_BUDGET).unwrap(), full);
            // the normalized sum does not depend on the order
            let a = normalized_matrix_sum(&o, 3, 1, &full);
            let b = normalized_matrix_sum(&o1, 3, 1, &matrix_gauss_full(&o1, &chi, &psi, DEFAULT_BUDGET).unwrap());
            assert_eq!(a, b);
        }
        // el+1 even: y = 1 only
        let o = make_order(3, 1).unwrap();
        let k2 = Arc::new(FieldParams::new(2, 1).unwrap());
        assert_eq!(histogram(&o, &k2, 1, Sweep::Reduced, DEFAULT_BUDGET, 1).unwrap().size, 1);
    }

    #[test]
    fn single_term_value() {
        // el odd: τ_𝔄 = (𝔄:𝔓^{c'})·χ^{-1}(cⁿ)·ψ(n·c)
        let psi = psi(5, 1);
        let o = make_order(2, 1).unwrap();
        for chi in chi_sample(&psi, 1, 1).unwrap().iter().step_by(3) {
            let c = chi.alpha();
            let n_c = c.scale(psi.params().from_int(2));
            let v = chi.eval(&c.pow(2).unwrap()).unwrap().inv().mul(&psi.eval(&n_c).unwrap());
            let expect: Cyclo = v.to_cyc::<num_rational::BigRational>().scale(&num_rational::BigRational::from_integer(625.into()));
            assert_eq!(matrix_gauss_reduced(&o, chi, &psi, DEFAULT_BUDGET).unwrap(), expect);
        }
    }

    #[test]
    fn easy_sums_and_prefactor() {
        for (p, f) in [(2u64, 1u32), (3, 1), (5, 1), (7, 1), (3, 2)] {
            let psi = psi(p, f);
            let q = psi.params().q() as i64;
            for u in psi.params().units() {
                assert_eq!(easy_sum(&psi, u), Cyclo::from_int(1, q));
            }
            let o = make_order(4, 2).unwrap();
            assert_eq!(block_pair_product(&o, &psi), Cyclo::from_int(1, q * q));
        }
    }

    #[test]
    fn even_level_identity_small() {
        let psi = psi(3, 1);
        let o = make_order(2, 1).unwrap();
        let chis = chi_sample(&psi, 2, 1).unwrap();
        let rep = verify_gauss_identity(&psi, &o, 2, &chis[..4], GaussMode::Both, DEFAULT_BUDGET).unwrap();
        assert!(rep.pass, "{}", rep.body);
        assert_eq!(rep.body["per_chi"][0]["factorized_ok"], Value::Bool(true));
    }

    #[test]
    fn report_flags_wrong_characters() {
        let psi = psi(3, 1);
        let o = make_order(2, 2).unwrap();
        let chis = chi_sample(&psi, 1, 1).unwrap();
        let rep = verify_gauss_identity(&psi, &o, 1, &chis, GaussMode::auto(&o, 3, 1, DEFAULT_BUDGET), DEFAULT_BUDGET).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.body["counts"]["full_units"], json!(324));
        assert!(verify_gauss_identity(&psi, &o, 2, &chis, GaussMode::Reduced, DEFAULT_BUDGET).is_err());
        // sanity on the classical side
        let tau = gauss_sum_tate(&chis[0], &psi).unwrap();
        assert_eq!(abs_squared(&tau), Cyclo::from_int(1, 9));
        assert_eq!(eps_character(&chis[0], &psi).unwrap().exponent, 1);
    }
}
