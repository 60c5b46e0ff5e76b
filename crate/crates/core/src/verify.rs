//! Exhaustive and sampled verifiers over enumerated pairs.
//!
//! Every check returns a [`VerifyReport`]. Its JSON form is deterministic for
//! a given configuration; the elapsed time is kept in a separate field.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::characters::{base_change, enumerate_chars, restrict_to_base, AddChar, MultChar};
use crate::cyclo::{gcd_u64, QHalfExt, RootOfUnity};
use crate::epsilon::{eps_det_twist, eps_equal, eps_simple_cuspidal, eps_simple_cuspidal_root, EpsilonFactor};
use crate::error::{Error, Result};
use crate::hereditary::{self, make_order, GaussMode, HereditaryOrder, Histogram, Sweep};
use crate::localfield::{extension_census, make_extension, FieldParams, FieldTag, TameExt};
use crate::pairs::{are_isomorphic, enumerate_pairs, pair_count, pair_invariants, twist_pair, AdmissiblePair};
use crate::QHalf;

pub const SCHEMA: u64 = 1;

/// Epsilon data of a pair: exponent, central character on `ϖ` and `η`, and
/// the values at `1/2` after twisting by each tame character `χ_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    pub exponent: i64,
    pub omega_pi: RootOfUnity,
    pub omega_teich: u64,
    pub tame_eps: Vec<QHalf>,
}

impl Fingerprint {
    pub fn to_json(&self) -> Value {
        json!({
            "exponent": self.exponent,
            "omega_pi_val": self.omega_pi.reduced().to_json(),
            "omega_teich": self.omega_teich,
            "tame_eps": self.tame_eps.iter().map(QHalfExt::to_json).collect::<Vec<_>>(),
        })
    }
}

/// `ε(χ_j·π, 1/2, ψ)` for `j = 0..q−2` as roots of unity.
pub fn tame_twist_roots(pair: &AdmissiblePair, psi: &AddChar) -> Result<Vec<RootOfUnity>> {
    let q1 = psi.params().q() - 1;
    (0..q1)
        .map(|j| {
            let chi = MultChar::tame(psi, FieldTag::Base, j as i64);
            eps_simple_cuspidal_root(&twist_pair(&chi, pair)?.0, psi)
        })
        .collect()
}

pub fn fingerprint(pair: &AdmissiblePair, psi: &AddChar) -> Result<Fingerprint> {
    let q = psi.params().q();
    let (_, omega) = pair_invariants(pair)?;
    let tame_eps = tame_twist_roots(pair, psi)?
        .iter()
        .map(|r| EpsilonFactor::from_root(q, pair.level() as i64, r).constant)
        .collect();
    Ok(Fingerprint {
        exponent: eps_simple_cuspidal(pair, psi)?.exponent,
        omega_pi: omega.pi_value(),
        omega_teich: omega.teich_exp(),
        tame_eps,
    })
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub check: &'static str,
    pub params: Value,
    pub pair_count: u64,
    pub comparisons: u64,
    pub violations: Vec<Value>,
    pub details: Value,
    pub skipped: Option<String>,
    pub exploratory: bool,
    pub elapsed_ms: u128,
}

impl VerifyReport {
    fn new(check: &'static str, params: Value) -> Self {
        Self {
            check,
            params,
            pair_count: 0,
            comparisons: 0,
            violations: Vec::new(),
            details: Value::Null,
            skipped: None,
            exploratory: false,
            elapsed_ms: 0,
        }
    }

    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn verdict(&self) -> &'static str {
        match (&self.skipped, self.pass()) {
            (Some(_), _) => "SKIPPED",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        }
    }

    /// The report; `timing` adds the wall-clock field.
    pub fn to_json(&self, timing: bool) -> Value {
        let mut v = json!({
            "schema": SCHEMA,
            "check": self.check,
            "params": self.params,
            "pair_count": self.pair_count,
            "comparisons": self.comparisons,
            "violations": self.violations,
            "verdict": self.verdict(),
            "details": self.details,
        });
        if let Some(s) = &self.skipped {
            v["skipped_reason"] = json!(s);
        }
        if self.exploratory {
            v["exploratory"] = json!(true);
        }
        if timing {
            v["timing"] = json!({ "elapsed_ms": self.elapsed_ms as u64 });
        }
        v
    }
}

fn field_json(params: &FieldParams) -> Value {
    json!({ "p": params.p(), "f": params.f(), "q": params.q() })
}

/// Test hook for the negative control: replaces one fingerprint entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Corruption {
    pub pair: usize,
    pub entry: usize,
}

/// Over all pairs of the given level with `θ(u) ∈ μ_M`: fingerprints agree
/// exactly when the pairs are isomorphic. Levels above one are reported as
/// exploratory.
pub fn converse_check(psi: &AddChar, n: u64, level: u64, m: u64, corrupt: Option<Corruption>) -> Result<VerifyReport> {
    let started = Instant::now();
    let params = psi.params();
    let pairs = enumerate_pairs(psi, n, level, m)?;
    let mut fps: Vec<Fingerprint> = pairs.par_iter().map(|p| fingerprint(p, psi)).collect::<Result<_>>()?;
    if let Some(c) = corrupt {
        let fp = fps.get_mut(c.pair).ok_or_else(|| Error::OutOfRange(format!("no pair {}", c.pair)))?;
        let len = fp.tame_eps.len();
        let slot = fp.tame_eps.get_mut(c.entry).ok_or_else(|| Error::OutOfRange(format!("entry {} of {len}", c.entry)))?;
        // 2 is not a root of unity, so this entry now matches nothing
        *slot = slot.mul(&QHalfExt::from_base(params.q(), crate::Cyclo::from_int(1, 2)));
    }
    let np = pairs.len();
    let rows: Vec<(Vec<Value>, u64)> = (0..np)
        .into_par_iter()
        .map(|i| -> Result<(Vec<Value>, u64)> {
            let mut out = Vec::new();
            let mut classes = 0;
            for j in i + 1..np {
                let iso = are_isomorphic(&pairs[i], &pairs[j])?;
                let same = fps[i] == fps[j];
                if iso.is_some() {
                    classes += 1;
                }
                if iso.is_some() != same {
                    out.push(json!({
                        "i": i,
                        "j": j,
                        "direction": if same { "fingerprints_equal_not_isomorphic" } else { "isomorphic_fingerprints_differ" },
                        "iso": iso.map(|s| s.to_json()),
                        "pair_i": pairs[i].to_json(),
                        "pair_j": pairs[j].to_json(),
                        "fingerprint_i": fps[i].to_json(),
                        "fingerprint_j": fps[j].to_json(),
                    }));
                }
            }
            Ok((out, classes))
        })
        .collect::<Result<_>>()?;
    let mut rep = VerifyReport::new(
        "converse",
        json!({ "field": field_json(params), "psi_unit": psi.unit().0, "n": n, "level": level, "M": m }),
    );
    let iso_pairs: u64 = rows.iter().map(|r| r.1).sum();
    rep.violations = rows.into_iter().flat_map(|r| r.0).collect();
    rep.pair_count = np as u64;
    rep.comparisons = (np * np.saturating_sub(1) / 2) as u64;
    rep.exploratory = level != 1;
    rep.details = json!({
        "isomorphic_unordered_pairs": iso_pairs,
        "fields": extension_census(params.q(), n),
        "corrupted": corrupt.map(|c| json!({ "pair": c.pair, "entry": c.entry })),
    });
    rep.elapsed_ms = started.elapsed().as_millis();
    Ok(rep)
}

/// Dlog of the leading coefficient of the wild parameter.
fn leading_teich(pair: &AdmissiblePair) -> Result<i64> {
    let lead = pair.theta().alpha().leading_coeff().ok_or(Error::ZeroInput)?;
    Ok(pair.params().dlog(lead)? as i64)
}

/// `d = n(a₁ − a₂) + l(r₂ − r₁)`: the exponent difference of the tame parts
/// of `N(α₁)` and `N(α₂)`, so that the `j`-th tame-twist ratio is
/// `(ε₁/ε₂)(j) = (ε₁/ε₂)(0)·ζ_{q−1}^{−jd}`.
pub fn separation_witness(p1: &AdmissiblePair, p2: &AdmissiblePair) -> Result<i64> {
    let n = p1.n() as i64;
    let l = p1.level() as i64;
    Ok(n * (leading_teich(p1)? - leading_teich(p2)?) + l * (p2.r() as i64 - p1.r() as i64))
}

/// Cross-field pairs are told apart by some tame twist, and the mismatch
/// pattern across all `j` is the one predicted by the witness `d`.
pub fn field_separation_check(
    psi: &AddChar,
    n: u64,
    k: u64,
    m: u64,
    samples: Option<usize>,
    seed: u64,
) -> Result<VerifyReport> {
    let started = Instant::now();
    let params = psi.params();
    let q = params.q();
    let e = extension_census(q, n);
    let level = 2 * k + 1;
    let mut rep = VerifyReport::new(
        "field_separation",
        json!({
            "field": field_json(params), "psi_unit": psi.unit().0, "n": n, "k": k, "level": level, "M": m,
            "samples": samples, "seed": seed,
        }),
    );
    if e == 1 {
        rep.skipped = Some("only one tame totally ramified extension of this degree".into());
        return Ok(rep);
    }
    let pairs = enumerate_pairs(psi, n, level, m)?;
    rep.pair_count = pairs.len() as u64;
    let mut cross: Vec<(usize, usize)> = Vec::new();
    match samples {
        None => {
            for i in 0..pairs.len() {
                for j in 0..pairs.len() {
                    if pairs[i].r() < pairs[j].r() {
                        cross.push((i, j));
                    }
                }
            }
        }
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx: Vec<usize> = (0..pairs.len()).collect();
            while cross.len() < s {
                let i = *idx.choose(&mut rng).unwrap();
                let j = rng.gen_range(0..pairs.len());
                if pairs[i].r() != pairs[j].r() {
                    cross.push((i, j));
                }
            }
        }
    }
    let roots: Vec<Vec<RootOfUnity>> = pairs.par_iter().map(|p| tame_twist_roots(p, psi)).collect::<Result<_>>()?;
    let q1 = (q - 1) as i64;
    let results: Vec<(Option<Value>, Option<u64>)> = cross
        .par_iter()
        .map(|&(i, j)| -> Result<(Option<Value>, Option<u64>)> {
            let (a, b) = (&roots[i], &roots[j]);
            let found = (0..a.len()).find(|&x| a[x] != b[x]).map(|x| x as u64);
            let d = separation_witness(&pairs[i], &pairs[j])?;
            let base = a[0].mul(&b[0].inv());
            let pattern_ok = (0..a.len()).all(|x| {
                a[x].mul(&b[x].inv()) == base.mul(&RootOfUnity::new(q - 1, -(x as i64) * d).unwrap())
            });
            let d_ok = d.rem_euclid(q1) != 0;
            let ok = found.is_some() && d_ok && pattern_ok;
            let v = (!ok).then(|| {
                json!({
                    "i": i, "j": j,
                    "direction": if found.is_none() { "not_separated" } else { "witness_disagrees" },
                    "witness_d": d, "witness_nonzero": d_ok, "ratio_pattern_ok": pattern_ok,
                    "pair_i": pairs[i].to_json(), "pair_j": pairs[j].to_json(),
                })
            });
            Ok((v, found))
        })
        .collect::<Result<_>>()?;
    let mut first_j_hist = vec![0u64; (q - 1) as usize];
    for (v, found) in &results {
        if let Some(v) = v {
            rep.violations.push(v.clone());
        }
        if let Some(x) = found {
            first_j_hist[*x as usize] += 1;
        }
    }
    rep.comparisons = cross.len() as u64;
    rep.exploratory = k >= 1;
    rep.details = json!({ "fields": e, "first_separating_twist_histogram": first_j_hist });
    rep.elapsed_ms = started.elapsed().as_millis();
    Ok(rep)
}

/// The character-side data that every pair is compared against.
#[derive(Clone, Debug)]
pub struct StabilityRhs {
    pub chi: MultChar,
    /// `ε(χ, ·, ψ)^n`.
    pub det_power: EpsilonFactor,
    /// `ε(χ∘det, ·, ψ)` through matrix sums, per order ramification index.
    pub det_matrix: Vec<(u64, EpsilonFactor)>,
}

fn check_stability_pre(n: u64, theta_level: u64, chi: &MultChar) -> Result<()> {
    let m = chi.level();
    let p = chi.params().p();
    if chi.tag() != FieldTag::Base {
        return Err(Error::FieldMismatch("twisting character must live on F".into()));
    }
    if n * m <= 2 * theta_level {
        return Err(Error::Precondition(format!("need l(χ) > 2·l(θ)/n, got l(χ) = {m}, l(θ) = {theta_level}, n = {n}")));
    }
    if (n * m) % 2 == 0 {
        return Err(Error::Precondition(format!("n·l(χ) = {} is even", n * m)));
    }
    if p <= n * m {
        return Err(Error::WildBound { level: n * m, p });
    }
    Ok(())
}

/// Reduced histograms for the orders used on the matrix side, where the budget allows.
pub fn stability_histograms(
    params: &Arc<FieldParams>,
    n: u64,
    chi_level: u64,
    budget: u128,
) -> Result<Vec<(HereditaryOrder, Histogram)>> {
    let mut es = vec![1, n];
    es.dedup();
    let mut out = Vec::new();
    for e in es {
        let o = make_order(n, e)?;
        let parts = rayon::current_num_threads() * 4;
        match hereditary::histogram(&o, params, chi_level, Sweep::Reduced, budget, parts) {
            Ok(h) => out.push((o, h)),
            Err(Error::Budget { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn stability_rhs(chi: &MultChar, n: u64, psi: &AddChar, matrices: &[(HereditaryOrder, Histogram)]) -> Result<StabilityRhs> {
    let q = psi.params().q();
    let det_power = eps_det_twist(chi, n, psi)?;
    let mut det_matrix = Vec::new();
    for (o, h) in matrices {
        let s = hereditary::sum_over_histogram(h, n, chi.level(), chi, psi)?;
        let (c1, _) = hereditary::reduced_range(o, chi.level());
        let idx = num_bigint::BigInt::from(q).pow(o.index_exponent(c1) as u32);
        let tau_a = s.scale(&num_rational::BigRational::from_integer(idx));
        det_matrix.push((o.e(), hereditary::eps_det_twist_matrix(o, chi, &tau_a)));
    }
    Ok(StabilityRhs { chi: chi.clone(), det_power, det_matrix })
}

/// Outcome of one stability comparison, with every side serialized.
#[derive(Clone, Debug)]
pub struct StabilityVerdict {
    pub holds: bool,
    pub record: Value,
}

fn stability_compare(
    pair: &AdmissiblePair,
    omega: &MultChar,
    chi_e: &MultChar,
    rhs: &StabilityRhs,
    psi: &AddChar,
) -> Result<StabilityVerdict> {
    let twisted = AdmissiblePair::from_parts(pair.ext().clone(), pair.theta().mul(chi_e)?);
    let lhs = eps_simple_cuspidal(&twisted, psi)?;
    let w = omega.eval(rhs.chi.alpha())?.inv();
    let scale = |e: &EpsilonFactor| EpsilonFactor { exponent: e.exponent, constant: e.constant.mul_cyc(&w.to_cyc()) };
    let rhs_power = scale(&rhs.det_power);
    let mut holds = eps_equal(&lhs, &rhs_power);
    let mut matrix = Vec::new();
    for (e, eps) in &rhs.det_matrix {
        let r = scale(eps);
        let ok = eps_equal(&lhs, &r);
        holds &= ok;
        matrix.push(json!({ "e": e, "rhs": r.to_json(), "ok": ok }));
    }
    let record = json!({
        "pair": pair.to_json(),
        "chi": rhs.chi.to_json(),
        "lhs": lhs.to_json(),
        "rhs_det_power": rhs_power.to_json(),
        "rhs_matrix": matrix,
        "holds": holds,
    });
    Ok(StabilityVerdict { holds, record })
}

/// Verdict only. The identity reads `ε(χπ)·ω(c) = ε(χ∘det)` with the left side a
/// root of unity times a power of `q`, so the right-hand comparisons are memoized
/// on that root.
fn stability_holds(
    pair: &AdmissiblePair,
    omega: &MultChar,
    chi_e: &MultChar,
    rhs: &StabilityRhs,
    psi: &AddChar,
    memo: &Mutex<HashMap<(i64, RootOfUnity), bool>>,
) -> Result<bool> {
    let twisted = AdmissiblePair::from_parts(pair.ext().clone(), pair.theta().mul(chi_e)?);
    let key = (
        twisted.level() as i64,
        eps_simple_cuspidal_root(&twisted, psi)?.mul(&omega.eval(rhs.chi.alpha())?).reduced(),
    );
    if let Some(&v) = memo.lock().expect("memo lock").get(&key) {
        return Ok(v);
    }
    let lhs = EpsilonFactor::from_root(psi.params().q(), key.0, &key.1);
    let v = eps_equal(&lhs, &rhs.det_power) && rhs.det_matrix.iter().all(|(_, e)| eps_equal(&lhs, e));
    memo.lock().expect("memo lock").insert(key, v);
    Ok(v)
}

/// `ε(χπ, s, ψ) = ω_π(c)^{-1}·ε(χ∘det, s, ψ)` for a single pair and character.
pub fn stability_check(pair: &AdmissiblePair, chi: &MultChar, psi: &AddChar, budget: u128) -> Result<StabilityVerdict> {
    check_stability_pre(pair.n(), pair.level(), chi)?;
    let mats = stability_histograms(psi.params(), pair.n(), chi.level(), budget)?;
    let rhs = stability_rhs(chi, pair.n(), psi, &mats)?;
    stability_compare(pair, &restrict_to_base(pair.theta())?, &base_change(chi, pair.ext())?, &rhs, psi)
}

/// All pairs of level `level` (with `θ(u) ∈ μ_M`) against all characters of
/// level `chi_level` (with `χ(ϖ) ∈ μ_{M_χ}`).
pub fn stability_sweep(
    psi: &AddChar,
    n: u64,
    level: u64,
    m: u64,
    chi_level: u64,
    chi_m: u64,
    budget: u128,
) -> Result<VerifyReport> {
    let started = Instant::now();
    let params = psi.params();
    let pairs = enumerate_pairs(psi, n, level, m)?;
    let chis = enumerate_chars(psi, FieldTag::Base, chi_level, chi_m)?;
    if let Some(c) = chis.first() {
        check_stability_pre(n, level, c)?;
    } else {
        return Err(Error::Precondition("no characters to test".into()));
    }
    let mats = stability_histograms(params, n, chi_level, budget)?;
    let rhss: Vec<StabilityRhs> = chis.par_iter().map(|c| stability_rhs(c, n, psi, &mats)).collect::<Result<_>>()?;
    let exts: Vec<TameExt> = (0..extension_census(params.q(), n)).map(|r| make_extension(params, n, r)).collect::<Result<_>>()?;
    // χ_E for every (r, χ)
    let chi_e: Vec<Vec<MultChar>> = exts
        .par_iter()
        .map(|e| chis.iter().map(|c| base_change(c, e)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let memos: Vec<Mutex<HashMap<(i64, RootOfUnity), bool>>> = chis.iter().map(|_| Mutex::new(HashMap::new())).collect();
    let rows: Vec<Vec<Value>> = pairs
        .par_iter()
        .map(|p| -> Result<Vec<Value>> {
            let mut bad = Vec::new();
            let omega = restrict_to_base(p.theta())?;
            for (ci, rhs) in rhss.iter().enumerate() {
                let ce = &chi_e[p.r() as usize][ci];
                if !stability_holds(p, &omega, ce, rhs, psi, &memos[ci])? {
                    bad.push(stability_compare(p, &omega, ce, rhs, psi)?.record);
                }
            }
            Ok(bad)
        })
        .collect::<Result<_>>()?;
    let mut rep = VerifyReport::new(
        "stability",
        json!({
            "field": field_json(params), "psi_unit": psi.unit().0, "n": n, "level": level, "M": m,
            "chi_level": chi_level, "chi_M": chi_m,
        }),
    );
    rep.pair_count = pairs.len() as u64;
    rep.comparisons = (pairs.len() * chis.len()) as u64;
    rep.violations = rows.into_iter().flatten().collect();
    let matrix_paths: Vec<Value> = mats.iter().map(|(o, h)| json!({ "e": o.e(), "reduced_size": h.size.to_string() })).collect();
    rep.details = json!({ "characters": chis.len(), "matrix_paths": matrix_paths });
    rep.elapsed_ms = started.elapsed().as_millis();
    Ok(rep)
}

/// The Gauss identity over the order `(n, e)` for every level-`l` character with `χ(ϖ) ∈ μ_M`.
pub fn gauss_check(psi: &AddChar, n: u64, e: u64, l: u64, m: u64, budget: u128) -> Result<VerifyReport> {
    let started = Instant::now();
    let params = psi.params();
    let order = make_order(n, e)?;
    let chis = hereditary::chi_sample(psi, l, m)?;
    let mode = GaussMode::auto(&order, params.q(), l, budget);
    let g = hereditary::verify_gauss_identity(psi, &order, l, &chis, mode, budget)?;
    let mut rep = VerifyReport::new(
        "gauss",
        json!({ "field": field_json(params), "psi_unit": psi.unit().0, "n": n, "e": e, "chi_level": l, "M": m }),
    );
    rep.comparisons = chis.len() as u64;
    if !g.pass {
        rep.violations = g.body["per_chi"].as_array().into_iter().flatten().filter(|v| v["ok"] != json!(true)).cloned().collect();
        if g.body["easy_sums"]["ok"] != json!(true) || g.body["block_pair_prefactor"]["ok"] != json!(true) {
            rep.violations.push(json!({ "direction": "prefactor_identities", "easy_sums": g.body["easy_sums"], "block_pair_prefactor": g.body["block_pair_prefactor"] }));
        }
    }
    rep.details = json!({
        "mode": format!("{mode:?}"),
        "counts": g.body["counts"],
        "easy_sums_ok": g.body["easy_sums"]["ok"],
        "block_pair_prefactor": g.body["block_pair_prefactor"],
        "per_chi": g.body["per_chi"].as_array().map(|a| a.iter().map(|v| json!({ "index": v["index"], "ok": v["ok"] })).collect::<Vec<_>>()),
    });
    rep.elapsed_ms = started.elapsed().as_millis();
    Ok(rep)
}

/// Fails unless `gcd(n, q − 1) > 1`; used to reject vacuous cross-field runs early.
pub fn has_several_fields(q: u64, n: u64) -> bool {
    gcd_u64(n, q - 1) > 1
}

pub fn expected_pair_count(q: u64, n: u64, level: u64, m: u64) -> u64 {
    pair_count(q, n, level, m)
}
