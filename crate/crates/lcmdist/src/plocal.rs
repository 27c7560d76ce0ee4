//! Everything local to a single prime p: tagged divisibility conditions, the
//! dropped-maximum table, p-local factors of the exact distribution, and both
//! p-local Euler factors of the Dirichlet series F_k(s).
//!
//! The events live on a tuple of k independent geometric exponents at p. A
//! tagged vector `<e_1, ..., e_i^, ..., e_k>_p` fixes the p-adic valuation of
//! every untagged component exactly and bounds the tagged one from below; the
//! tagged slot is the dropped maximum. For each composition x of e into k-1
//! parts with last-argmax index i1, the table emits k conditions: the value
//! `x_{i1}` tagged at positions i1+1..k, and `x_{i1}+1` tagged at positions
//! 1..i1. Summed over compositions this yields the local probability
//!
//! ```text
//! (1 - 1/p)^{k-1} p^{-e} * sum_x [ (k - i1) p^{-x_{i1}} + i1 p^{-x_{i1}-1} ]
//! ```
//!
//! that e units of exponent survive in product/lcm at p.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::ntcore::{self, binomial, composition_count, compositions, prime_power_rat, Rational};
use crate::series::Bracket;
use crate::{Error, Result};

/// Largest index attaining the maximum entry (1-based).
pub fn i1_index(parts: &[u32]) -> usize {
    assert!(!parts.is_empty(), "i1_index: empty composition");
    let max = *parts.iter().max().unwrap();
    parts.iter().rposition(|&v| v == max).unwrap() + 1
}

/// One p-power divisibility row. Untagged entries mean exact valuation,
/// the tagged entry means "at least".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedCondition {
    pub prime: u64,
    pub exponents: Vec<u32>,
    /// 0-based index of the tagged entry.
    pub tag_index: usize,
}

impl TaggedCondition {
    /// 1-based position of the dropped maximum; by construction this is the
    /// tagged position, kept as table-regression metadata.
    pub fn dropped_position(&self) -> usize {
        self.tag_index + 1
    }

    pub fn tag_value(&self) -> u32 {
        self.exponents[self.tag_index]
    }

    /// Does a concrete k-tuple satisfy this condition?
    pub fn is_satisfied_by(&self, tuple: &[u64]) -> bool {
        assert_eq!(tuple.len(), self.exponents.len());
        self.exponents.iter().enumerate().all(|(j, &e)| {
            let v = valuation(self.prime, tuple[j]);
            if j == self.tag_index {
                v >= e
            } else {
                v == e
            }
        })
    }

    /// Exact probability of this condition under independent geometric
    /// exponents: (1-1/p) p^{-e_j} per untagged slot, p^{-e_tag} for the tag.
    pub fn probability(&self) -> Rational {
        let p = self.prime;
        let mut acc = Rational::one();
        for (j, &e) in self.exponents.iter().enumerate() {
            if j == self.tag_index {
                acc *= prime_power_rat(p, -(e as i64));
            } else {
                acc *= Rational::new(BigInt::from(p - 1), BigInt::from(p))
                    * prime_power_rat(p, -(e as i64));
            }
        }
        acc
    }
}

/// p-adic valuation of n >= 1.
pub fn valuation(p: u64, mut n: u64) -> u32 {
    assert!(n >= 1 && p >= 2);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// All divisibility conditions realizing "e units of exponent drop at p" for
/// a k-tuple: k conditions per composition of e into k-1 parts, emitted in
/// composition-lexicographic order, dropped position k down to 1 within each
/// composition.
pub fn tagged_conditions(p: u64, e: u32, k: u32) -> Vec<TaggedCondition> {
    assert!(k >= 2, "tagged_conditions: k must be >= 2");
    assert!(e >= 1, "tagged_conditions: e must be >= 1");
    let mut out = Vec::with_capacity((composition_count(e, k - 1) * k as u128) as usize);
    for comp in compositions(e, k - 1) {
        let x = &comp.parts;
        let i1 = i1_index(x);
        let max = x[i1 - 1];
        for dropped in (1..=k as usize).rev() {
            let tag_value = if dropped > i1 { max } else { max + 1 };
            let mut exponents = Vec::with_capacity(k as usize);
            exponents.extend_from_slice(&x[..dropped - 1]);
            exponents.push(tag_value);
            exponents.extend_from_slice(&x[dropped - 1..]);
            out.push(TaggedCondition {
                prime: p,
                exponents,
                tag_index: dropped - 1,
            });
        }
    }
    out
}

/// Sum over all compositions with maximum entry 1 of (k - i1); closed form
/// 2^k - k - 1, checked by enumeration.
pub fn dropped_max_identity(k: u32) -> u64 {
    assert!(k >= 2);
    let mut total = 0u64;
    for e in 1..=(k - 1) {
        for comp in compositions(e, k - 1) {
            let x = &comp.parts;
            if *x.iter().max().unwrap() == 1 {
                total += (k as usize - i1_index(x)) as u64;
            }
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Composition profiles: counts of compositions grouped by (max, last argmax).
// The inner sums of every Euler factor only depend on the composition through
// (x_{i1}, i1), so grouping turns an exponential enumeration into a table.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub(crate) struct Profile {
    pub max: u32,
    pub i1: u32,
    pub count: u128,
}

pub(crate) struct LocalTable {
    pub k: u32,
    pub e_max: u32,
    /// profiles[e] lists (max, i1, count) over compositions of e into k-1 parts.
    profiles: Vec<Vec<Profile>>,
}

impl LocalTable {
    fn build(k: u32, e_max: u32) -> LocalTable {
        let parts = (k - 1) as usize;
        let len = e_max as usize + 1;
        let mut profiles: Vec<Vec<Profile>> = vec![Vec::new(); len];
        // bounded_row(b): counts of compositions of s into m parts, parts <= b,
        // for m in 0..=parts, s in 0..len.
        let bounded_table = |b: usize| -> Vec<Vec<u128>> {
            let mut table = vec![vec![0u128; len]; parts + 1];
            table[0][0] = 1;
            for m in 1..=parts {
                // sliding-window sum of table[m-1] over the last b+1 entries
                let mut window = 0u128;
                for s in 0..len {
                    window += table[m - 1][s];
                    if s > b {
                        window -= table[m - 1][s - b - 1];
                    }
                    table[m][s] = window;
                }
            }
            table
        };
        let mut below = bounded_table(0);
        for max in 1..=e_max as usize {
            let at_most = bounded_table(max);
            for i1 in 1..=parts {
                // positions before i1 bounded by max, after bounded by max-1
                let pre = &at_most[i1 - 1];
                let post = &below[parts - i1];
                for e in max..len {
                    let rest = e - max;
                    let mut count = 0u128;
                    for a in 0..=rest {
                        count += pre[a] * post[rest - a];
                    }
                    if count > 0 {
                        profiles[e].push(Profile {
                            max: max as u32,
                            i1: i1 as u32,
                            count,
                        });
                    }
                }
            }
            below = at_most;
        }
        if e_max >= 1 {
            debug_assert!(profiles
                .iter()
                .enumerate()
                .skip(1)
                .all(|(e, ps)| ps.iter().map(|p| p.count).sum::<u128>()
                    == composition_count(e as u32, k - 1)));
        }
        LocalTable {
            k,
            e_max,
            profiles,
        }
    }

    pub fn profiles(&self, e: u32) -> &[Profile] {
        &self.profiles[e as usize]
    }

    /// S_e(p) = sum over compositions of (k-i1) p^{-max} + i1 p^{-max-1}, exact.
    pub fn s_exact(&self, p: u64, e: u32) -> Rational {
        let k = self.k;
        let mut acc = Rational::zero();
        for pr in self.profiles(e) {
            let weight = Rational::from(BigInt::from((k - pr.i1) as u64 * p + pr.i1 as u64))
                * prime_power_rat(p, -(pr.max as i64 + 1));
            acc += weight * Rational::from(BigInt::from(pr.count));
        }
        acc
    }

    /// S_e(p) in floating point (counts stay below 2^53 at desk scale).
    pub fn s_f64(&self, p: f64, e: u32) -> f64 {
        let k = self.k as f64;
        let mut acc = 0.0;
        for pr in self.profiles(e) {
            let um = p.powi(-(pr.max as i32));
            acc += pr.count as f64 * ((k - pr.i1 as f64) * um + pr.i1 as f64 * um / p);
        }
        acc
    }
}

static TABLES: OnceLock<Mutex<HashMap<u32, Arc<LocalTable>>>> = OnceLock::new();

/// Shared profile table for k, covering exponents up to at least e_max.
pub(crate) fn local_table(k: u32, e_max: u32) -> Arc<LocalTable> {
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = tables.lock().unwrap();
    match guard.get(&k) {
        Some(t) if t.e_max >= e_max => Arc::clone(t),
        _ => {
            let grown = e_max.max(16);
            let table = Arc::new(LocalTable::build(k, grown));
            guard.insert(k, Arc::clone(&table));
            table
        }
    }
}

/// p-local factor of p_k(n)/T_k at p^e || n (Eq.-(4) form):
/// `1/(1+(k-1)/p) * p^{-e} * S_e(p)`, and 1 at e = 0.
pub fn plocal_pk(p: u64, e: u32, k: u32) -> Rational {
    assert!(k >= 2);
    if e == 0 {
        return Rational::one();
    }
    let prefactor = Rational::new(BigInt::from(p), BigInt::from(p + (k as u64 - 1)));
    prefactor * plocal_gk(p, e, k)
}

/// p-local factor of the dominating multiplicative density g_k:
/// `p^{-e} * S_e(p)`, and 1 at e = 0. May exceed 1.
pub fn plocal_gk(p: u64, e: u32, k: u32) -> Rational {
    assert!(k >= 2);
    if e == 0 {
        return Rational::one();
    }
    let table = local_table(k, e);
    prime_power_rat(p, -(e as i64)) * table.s_exact(p, e)
}

// ---------------------------------------------------------------------------
// Euler factors of F_k(s) (normalized so the T_k-local part is divided out).
// ---------------------------------------------------------------------------

/// Upper bound for `sum_{e >= e_from} p^{-(s+1)e} S_e(p)`.
///
/// Termwise `S_e <= k C(e+k-2, k-2) p^{-ceil(e/(k-1))} <= k C(e+k-2,k-2) p^{-e/(k-1)}`,
/// and the majorant's term ratio `p^{-(s+1+1/(k-1))} (e+k-1)/(e+1)` decreases
/// in e, so once it falls below 1 a geometric series closes the tail.
pub(crate) fn e_tail_upper(p: u64, s: f64, k: u32, e_from: u32) -> f64 {
    let pf = p as f64;
    let alpha = (s + 1.0) + 1.0 / (k as f64 - 1.0);
    debug_assert!(alpha > 0.0, "series diverges at s = {s}");
    let term = |e: u32| -> f64 {
        k as f64
            * binomial(e as u64 + k as u64 - 2, k as u64 - 2) as f64
            * pf.powf(-alpha * e as f64)
    };
    let ratio = |e: u32| -> f64 { pf.powf(-alpha) * (e as f64 + k as f64 - 1.0) / (e as f64 + 1.0) };
    let mut total = 0.0;
    let mut e = e_from;
    loop {
        let rho = ratio(e);
        if rho < 0.9 {
            // remaining terms dominated by a geometric series of ratio rho
            total += term(e) / (1.0 - rho);
            return total * 1.000_000_001;
        }
        total += term(e);
        e += 1;
        if e > e_from + 100_000 {
            return f64::INFINITY;
        }
    }
}

/// Exponent cap that makes the dropped tail provably below `eps`.
pub(crate) fn required_e(p: u64, s: f64, k: u32, floor: u32, eps: f64) -> u32 {
    let mut e = floor.max(2);
    while e_tail_upper(p, s, k, e + 1) > eps {
        e += (e / 2).max(4);
        if e > 200_000 {
            break;
        }
    }
    e
}

/// Partial sum of the normalized Euler factor of F_k(s) at p, plus a rigorous
/// geometric tail: `1 + (p/(p+k-1)) * sum_{e<=e_max} p^{-(s+1)e} S_e(p)`.
/// The product of these factors over all primes equals F_k(s)/T_k.
pub fn plocal_f_series(p: u64, s: f64, k: u32, e_max: u32) -> Result<Bracket> {
    if s <= -1.0 {
        return Err(Error::domain(format!(
            "plocal_f_series: series diverges for s <= -1 (got {s})"
        )));
    }
    assert!(k >= 2 && e_max >= 1);
    let table = local_table(k, e_max);
    let pf = p as f64;
    let mut sum = 0.0;
    for e in 1..=e_max {
        sum += pf.powf(-(s + 1.0) * e as f64) * table.s_f64(pf, e);
    }
    let prefactor = pf / (pf + k as f64 - 1.0);
    let tail = prefactor * e_tail_upper(p, s, k, e_max + 1);
    let lo = (1.0 + prefactor * sum) * (1.0 - 1e-13);
    let hi = (1.0 + prefactor * sum + tail) * (1.0 + 1e-13);
    Ok(Bracket::new(lo, hi))
}

/// Closed finite form of the same normalized Euler factor, from the
/// geometric-variable generating function:
///
/// ```text
/// (1-1/p)^k / (1-p^{-(s+1)})^k * sum_{j=1}^k C(k,j)(-1)^{j-1}
///     (1 - p^{-j(s+1)}) / (1 - p^{-((j-1)(s+1)+1)})
/// ```
///
/// divided by the T_k-local factor. No symbolic proof of equivalence with the
/// composition-sum form is attempted; agreement is checked numerically.
pub fn plocal_f_closed(p: u64, s: f64, k: u32) -> Result<f64> {
    if s <= -1.0 {
        return Err(Error::domain(format!(
            "plocal_f_closed: series diverges for s <= -1 (got {s})"
        )));
    }
    assert!(k >= 2);
    let pf = p as f64;
    let u = 1.0 / pf;
    let q = pf.powf(-(s + 1.0));
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=k {
        let numer = 1.0 - q.powi(j as i32);
        let denom = 1.0 - q.powi(j as i32 - 1) * u;
        sum += sign * binomial(k as u64, j as u64) as f64 * numer / denom;
        sign = -sign;
    }
    let full = (1.0 - u).powi(k as i32) / (1.0 - q).powi(k as i32) * sum;
    let tk_local = (1.0 - u).powi(k as i32 - 1) * (1.0 + (k as f64 - 1.0) * u);
    Ok(full / tk_local)
}

/// Full (un-normalized) local factor of F_k(s) at p as a bracket, T_k-local
/// part included; used to assemble Dirichlet-series values without splitting
/// the product into two separately-truncated pieces.
pub(crate) fn local_factor_full_f(p: u64, s: f64, k: u32, e_floor: u32) -> Bracket {
    // the tail criterion shrinks the exponent cap automatically for large p;
    // the policy floor only matters where the geometric decay is slow
    let e_max = required_e(p, s, k, if p < 5 { e_floor } else { 2 }, 1e-17);
    let table = local_table(k, e_max);
    let pf = p as f64;
    let u = 1.0 / pf;
    let tk_local = (1.0 - u).powi(k as i32 - 1) * (1.0 + (k as f64 - 1.0) * u);
    let prefactor = pf / (pf + k as f64 - 1.0);
    let mut sum = 0.0;
    for e in 1..=e_max {
        let w = pf.powf(-(s + 1.0) * e as f64) * table.s_f64(pf, e);
        if w == 0.0 && e > 4 {
            break;
        }
        sum += w;
    }
    let tail = prefactor * e_tail_upper(p, s, k, e_max + 1);
    let value = tk_local * (1.0 + prefactor * sum);
    Bracket::new(value * (1.0 - 1e-14), (value + tk_local * tail) * (1.0 + 1e-14))
}

/// Full local factor of G_k(s) at p (no T_k-local part, no prefactor):
/// `1 + sum_e p^{-(s+1)e} S_e(p)`.
pub(crate) fn local_factor_full_g(p: u64, s: f64, k: u32, e_floor: u32) -> Bracket {
    let e_max = required_e(p, s, k, if p < 5 { e_floor } else { 2 }, 1e-17);
    let table = local_table(k, e_max);
    let pf = p as f64;
    let mut sum = 0.0;
    for e in 1..=e_max {
        let w = pf.powf(-(s + 1.0) * e as f64) * table.s_f64(pf, e);
        if w == 0.0 && e > 4 {
            break;
        }
        sum += w;
    }
    let tail = e_tail_upper(p, s, k, e_max + 1);
    Bracket::new((1.0 + sum) * (1.0 - 1e-14), (1.0 + sum + tail) * (1.0 + 1e-14))
}
