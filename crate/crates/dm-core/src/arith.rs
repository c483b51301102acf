//! Exact integer arithmetic and sieving for the multiplicative functions of
//! the toolkit: factorization, Mobius, Euler phi, divisor counts, shifted
//! divisor functions and Ramanujan sums.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A multiset of small complex shifts together with its regime metadata.
///
/// `delta_bound` caps each |shift|; when `min_separation > 0` all pairwise
/// distances must stay at or above it. Modules that need distinct shifts
/// (residue constants, G-function closed forms) check `min_separation` at
/// their own boundary; coincident shifts are legal here.
#[derive(Clone, Debug)]
pub struct ShiftSet {
    shifts: Vec<Complex64>,
    delta_bound: f64,
    min_separation: f64,
    label: String,
}

impl ShiftSet {
    pub fn new(
        shifts: Vec<Complex64>,
        delta_bound: f64,
        min_separation: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::Config("shift set must contain at least one shift".into()));
        }
        if delta_bound < 0.0 || min_separation < 0.0 {
            return Err(Error::Config("delta_bound and min_separation must be >= 0".into()));
        }
        for a in &shifts {
            if a.norm() > delta_bound * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "shift {a} exceeds delta bound {delta_bound}"
                )));
            }
        }
        if min_separation > 0.0 {
            for i in 0..shifts.len() {
                for j in (i + 1)..shifts.len() {
                    if (shifts[i] - shifts[j]).norm() < min_separation * (1.0 - 1e-12) {
                        return Err(Error::CoincidentShifts { min_distance: min_separation });
                    }
                }
            }
        }
        Ok(ShiftSet { shifts, delta_bound, min_separation, label: label.into() })
    }

    /// Set with the given shifts, bounds derived from the data itself.
    pub fn from_shifts(shifts: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        let delta = shifts.iter().map(|a| a.norm()).fold(0.0f64, f64::max);
        let mut sep = f64::INFINITY;
        for i in 0..shifts.len() {
            for j in (i + 1)..shifts.len() {
                sep = sep.min((shifts[i] - shifts[j]).norm());
            }
        }
        if !sep.is_finite() {
            sep = 0.0;
        }
        ShiftSet::new(shifts, delta, sep, label)
    }

    /// Convenience constructor from real shifts.
    pub fn from_real(shifts: &[f64], label: impl Into<String>) -> Result<Self> {
        ShiftSet::from_shifts(shifts.iter().map(|&x| Complex64::new(x, 0.0)).collect(), label)
    }

    /// All shifts equal to zero (sigma reduces to tau_k).
    pub fn zeros(k: usize) -> Self {
        ShiftSet::new(vec![Complex64::new(0.0, 0.0); k], 0.0, 0.0, format!("zeros-{k}")).unwrap()
    }

    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn delta_bound(&self) -> f64 {
        self.delta_bound
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Fails unless all pairwise distances are at least `eps`.
    pub fn require_distinct(&self, eps: f64) -> Result<()> {
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if (self.shifts[i] - self.shifts[j]).norm() < eps {
                    return Err(Error::CoincidentShifts { min_distance: eps });
                }
            }
        }
        Ok(())
    }

    /// The set with `w` added to every shift.
    pub fn shifted(&self, w: Complex64) -> Self {
        let shifts: Vec<_> = self.shifts.iter().map(|a| a + w).collect();
        Self::rederive(shifts, format!("{}+w", self.label))
    }

    /// The set of negated shifts.
    pub fn negated(&self) -> Self {
        let shifts: Vec<_> = self.shifts.iter().map(|a| -a).collect();
        Self::rederive(shifts, format!("-{}", self.label))
    }

    /// Removes the single occurrence at position `idx`.
    pub fn without_index(&self, idx: usize) -> Result<Self> {
        if self.len() < 2 {
            return Err(Error::Config("cannot remove the only shift".into()));
        }
        let mut shifts = self.shifts.clone();
        shifts.remove(idx);
        Ok(Self::rederive(shifts, format!("{}\\{{{idx}}}", self.label)))
    }

    /// Appends one more shift.
    pub fn with_appended(&self, z: Complex64) -> Self {
        let mut shifts = self.shifts.clone();
        shifts.push(z);
        Self::rederive(shifts, format!("{}+elt", self.label))
    }

    /// Multiset equality: same shifts regardless of order.
    pub fn multiset_eq(&self, other: &ShiftSet, eps: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut a = self.shifts.clone();
        let mut b = other.shifts.clone();
        let key = |z: &Complex64| (z.re, z.im);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= eps)
    }

    fn rederive(shifts: Vec<Complex64>, label: String) -> Self {
        let delta = shifts.iter().map(|a| a.norm()).fold(0.0f64, f64::max);
        let mut sep = f64::INFINITY;
        for i in 0..shifts.len() {
            for j in (i + 1)..shifts.len() {
                sep = sep.min((shifts[i] - shifts[j]).norm());
            }
        }
        if !sep.is_finite() {
            sep = 0.0;
        }
        ShiftSet { shifts, delta_bound: delta, min_separation: sep, label }
    }
}

/// Prime factorization as (prime, exponent) pairs with strictly increasing
/// primes. `n = 1` is the empty product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub pairs: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn value(&self) -> u64 {
        self.pairs.iter().fold(1u64, |acc, &(p, e)| acc * p.pow(e))
    }
}

/// Trial-division factorization; exact for all u64 at desk scale.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut pairs = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            pairs.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        pairs.push((m, 1));
    }
    Factorization { pairs }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let f = factorize(n);
    f.pairs.len() == 1 && f.pairs[0].1 == 1
}

fn binomial_u64(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::Overflow { what: "binomial" })?
            / (i + 1);
    }
    Ok(acc)
}

/// k-th divisor function: the number of ordered k-tuples with product n.
/// At a prime power, tau_k(p^e) = C(e + k - 1, k - 1).
pub fn tau_k(k: u32, n: u64) -> Result<u64> {
    assert!(k >= 1 && n >= 1);
    let mut acc: u64 = 1;
    for &(_, e) in &factorize(n).pairs {
        let local = binomial_u64(e as u64 + k as u64 - 1, k as u64 - 1)?;
        acc = acc.checked_mul(local).ok_or(Error::Overflow { what: "tau_k" })?;
    }
    Ok(acc)
}

/// Coefficients sigma_I(p^j) for j = 0..=j_max: the power-series
/// coefficients of prod_{a in I} (1 - x p^{-a})^{-1}.
pub fn sigma_prime_power(shifts: &[Complex64], p: u64, j_max: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); j_max + 1];
    c[0] = Complex64::new(1.0, 0.0);
    let logp = (p as f64).ln();
    for a in shifts {
        // multiply by 1/(1 - w x): cumulative recurrence c[j] += w c[j-1]
        let w = (-a * logp).exp();
        for j in 1..=j_max {
            let prev = c[j - 1];
            c[j] += w * prev;
        }
    }
    c
}

/// Shifted divisor sum sigma_I(n) = sum over d_1 ... d_k = n of
/// prod d_i^{-a_i}, evaluated multiplicatively.
pub fn sigma_shift(set: &ShiftSet, n: u64) -> Complex64 {
    assert!(n >= 1);
    let mut acc = Complex64::new(1.0, 0.0);
    for &(p, e) in &factorize(n).pairs {
        let coeffs = sigma_prime_power(set.shifts(), p, e as usize);
        acc *= coeffs[e as usize];
    }
    acc
}

/// Mobius function.
pub fn mobius(n: u64) -> i64 {
    assert!(n >= 1);
    let f = factorize(n);
    for &(_, e) in &f.pairs {
        if e > 1 {
            return 0;
        }
    }
    if f.pairs.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Euler totient.
pub fn euler_phi(n: u64) -> u64 {
    assert!(n >= 1);
    let mut acc = n;
    for &(p, _) in &factorize(n).pairs {
        acc = acc / p * (p - 1);
    }
    acc
}

/// Number of distinct prime factors.
pub fn omega_distinct(n: u64) -> u32 {
    assert!(n >= 1);
    factorize(n).pairs.len() as u32
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Ramanujan sum c_q(r) via the divisor identity
/// c_q(r) = sum_{d | (q, r)} d mu(q/d); c_q(0) = phi(q).
pub fn ramanujan_sum(q: u64, r: i64) -> i64 {
    assert!(q >= 1);
    if r == 0 {
        return euler_phi(q) as i64;
    }
    let g = gcd(q, r.unsigned_abs());
    let mut acc: i64 = 0;
    // divisors of g
    let mut d = 1u64;
    while d * d <= g {
        if g % d == 0 {
            acc += d as i64 * mobius(q / d);
            let d2 = g / d;
            if d2 != d {
                acc += d2 as i64 * mobius(q / d2);
            }
        }
        d += 1;
    }
    acc
}

/// Smallest-prime-factor sieve with Mobius and phi tables, shared by the
/// bulk evaluators.
pub struct Sieve {
    pub n: usize,
    /// smallest prime factor; spf[p] = p for primes, spf[1] = 1
    pub spf: Vec<u32>,
    pub primes: Vec<u32>,
    pub mobius: Vec<i8>,
    pub phi: Vec<u32>,
}

impl Sieve {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        if n >= 1 {
            spf[1] = 1;
        }
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            for &p in &primes {
                let p = p as usize;
                if p > spf[i] as usize || i * p > n {
                    break;
                }
                spf[i * p] = p as u32;
            }
        }
        let mut mob = vec![0i8; n + 1];
        let mut phi = vec![0u32; n + 1];
        if n >= 1 {
            mob[1] = 1;
            phi[1] = 1;
        }
        for i in 2..=n {
            let p = spf[i] as usize;
            let m = i / p;
            mob[i] = if m % p == 0 { 0 } else { -mob[m] };
            phi[i] = if m % p == 0 { phi[m] * p as u32 } else { phi[m] * (p as u32 - 1) };
        }
        Sieve { n, spf, primes, mobius: mob, phi }
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        assert!(n as usize <= self.n && n >= 1);
        let mut pairs = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as u64;
            let mut e = 0u32;
            while m % p as usize == 0 {
                m /= p as usize;
                e += 1;
            }
            pairs.push((p, e));
        }
        pairs.sort_unstable();
        Factorization { pairs }
    }

    pub fn divisors(&self, n: u64) -> Vec<u64> {
        let f = self.factorize(n);
        let mut divs = vec![1u64];
        for &(p, e) in &f.pairs {
            let len = divs.len();
            let mut pe = 1u64;
            for _ in 0..e {
                pe *= p;
                for i in 0..len {
                    divs.push(divs[i] * pe);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Bulk table of sigma_I(n) for n in [1, upper].
#[derive(Debug)]
pub struct DivisorTable {
    pub shift_set: ShiftSet,
    pub upper: u64,
    /// values[n] = sigma_I(n); index 0 unused
    pub values: Vec<Complex64>,
}

impl DivisorTable {
    pub fn get(&self, n: u64) -> Complex64 {
        self.values[n as usize]
    }
}

/// Default memory budget for sieved divisor tables (entries).
pub const SIEVE_BUDGET_DEFAULT: u64 = 40_000_000;

/// Linear-sieve evaluation of sigma_I over [1, upper].
///
/// The table is filled in doubling chunks so that every lookup
/// `values[n / p^e]` lands in an already completed chunk; inside a chunk the
/// work may be split over `jobs` workers with fixed ranges, so the result is
/// identical for any worker count.
pub fn sieve_sigma(set: &ShiftSet, upper: u64, jobs: usize) -> Result<DivisorTable> {
    sieve_sigma_with_budget(set, upper, jobs, SIEVE_BUDGET_DEFAULT)
}

pub fn sieve_sigma_with_budget(
    set: &ShiftSet,
    upper: u64,
    jobs: usize,
    budget: u64,
) -> Result<DivisorTable> {
    if upper > budget {
        return Err(Error::Budget { what: "sieve_sigma", requested: upper, cap: budget });
    }
    assert!(upper >= 1);
    let n = upper as usize;
    let sieve = Sieve::new(n);
    // pp[i] = spf(i)^e where spf(i)^e || i  (largest power of the smallest
    // prime factor dividing i); lets the fill step split i multiplicatively.
    let mut pp = vec![0u32; n + 1];
    pp[1] = 1;
    for i in 2..=n {
        let p = sieve.spf[i] as usize;
        let m = i / p;
        pp[i] = if m % p == 0 { pp[m] * p as u32 } else { p as u32 };
    }

    // sigma at prime powers, cached per prime as needed
    let max_exp = |p: u64| -> usize {
        let mut e = 0;
        let mut v = 1u64;
        while v <= upper / p {
            v *= p;
            e += 1;
        }
        e
    };
    let mut sigma_pp: Vec<(u64, Vec<Complex64>)> = Vec::with_capacity(sieve.primes.len());
    for &p in &sieve.primes {
        let p = p as u64;
        sigma_pp.push((p, sigma_prime_power(set.shifts(), p, max_exp(p))));
    }
    let prime_index = |p: u64| -> usize {
        sigma_pp.binary_search_by_key(&p, |&(q, _)| q).expect("prime present")
    };

    let mut values = vec![Complex64::new(0.0, 0.0); n + 1];
    values[0] = Complex64::new(0.0, 0.0);
    values[1] = Complex64::new(1.0, 0.0);
    // chunks [2^t, 2^{t+1}) guarantee i / pp[i] < chunk start
    let mut lo = 2usize;
    while lo <= n {
        let hi = (2 * lo - 1).min(n);
        {
            let (done, rest) = values.split_at_mut(lo);
            let chunk = &mut rest[..hi - lo + 1];
            let fill = |i_off: usize, slot: &mut Complex64| {
                let i = lo + i_off;
                let q = pp[i] as usize;
                if q == i {
                    // prime power
                    let p = sieve.spf[i] as u64;
                    let mut e = 0usize;
                    let mut v = 1usize;
                    while v < i {
                        v *= p as usize;
                        e += 1;
                    }
                    *slot = sigma_pp[prime_index(p)].1[e];
                } else {
                    let rest = i / q;
                    // rest < lo and q < lo, both already computed
                    let p = sieve.spf[i] as u64;
                    let mut e = 0usize;
                    let mut v = 1usize;
                    while v < q {
                        v *= p as usize;
                        e += 1;
                    }
                    *slot = done[rest] * sigma_pp[prime_index(p)].1[e];
                }
            };
            if jobs > 1 && chunk.len() >= 4096 {
                let jobs = jobs.min(chunk.len());
                let sz = chunk.len().div_ceil(jobs);
                std::thread::scope(|scope| {
                    let mut rest = &mut chunk[..];
                    let mut base = 0usize;
                    for _ in 0..jobs {
                        if rest.is_empty() {
                            break;
                        }
                        let take = sz.min(rest.len());
                        let (head, tail) = rest.split_at_mut(take);
                        rest = tail;
                        let b = base;
                        base += take;
                        let fill = &fill;
                        scope.spawn(move || {
                            for (off, slot) in head.iter_mut().enumerate() {
                                fill(b + off, slot);
                            }
                        });
                    }
                });
            } else {
                for (off, slot) in chunk.iter_mut().enumerate() {
                    fill(off, slot);
                }
            }
        }
        lo = hi + 1;
    }
    Ok(DivisorTable { shift_set: set.clone(), upper, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(1).pairs, vec![]);
        assert_eq!(factorize(12).pairs, vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(997).pairs, vec![(997, 1)]);
        assert_eq!(factorize(2u64.pow(10) * 3 * 49).value(), 2u64.pow(10) * 3 * 49);
    }

    #[test]
    fn factorize_invariants() {
        // primes strictly increasing, every listed prime passes a primality
        // check, and the product reconstructs n
        let mut rng = crate::rng::SplitMix64::new(17);
        for _ in 0..300 {
            let n = 1 + rng.below(1_000_000);
            let f = factorize(n);
            assert_eq!(f.value(), n);
            for w in f.pairs.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
            for &(p, e) in &f.pairs {
                assert!(is_prime(p), "n={n} p={p}");
                assert!(e >= 1);
            }
        }
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_k(2, 6).unwrap(), 4);
        assert_eq!(tau_k(3, 4).unwrap(), 6);
        for k in 1..=8 {
            assert_eq!(tau_k(k, 1).unwrap(), 1);
        }
        // tau_3(12) = C(2+2,2) * C(1+2,2) = 6 * 3 = 18
        assert_eq!(tau_k(3, 12).unwrap(), 18);
    }

    #[test]
    fn tau_overflow_is_signalled() {
        // C(62 + 39, 39) exceeds u64
        let err = tau_k(40, 1u64 << 62).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn sigma_zero_shifts_is_tau() {
        let set = ShiftSet::zeros(2);
        for n in 1..200u64 {
            let s = sigma_shift(&set, n);
            assert!((s.re - tau_k(2, n).unwrap() as f64).abs() < 1e-12);
            assert!(s.im.abs() < 1e-14);
        }
        let set3 = ShiftSet::zeros(3);
        for n in [1u64, 6, 30, 64, 97] {
            let s = sigma_shift(&set3, n);
            assert!((s.re - tau_k(3, n).unwrap() as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn sigma_single_shift() {
        let a = c(0.07, -0.02);
        let set = ShiftSet::from_shifts(vec![a], "single").unwrap();
        let n = 8u64;
        let expect = (-a * (n as f64).ln()).exp();
        assert!((sigma_shift(&set, n) - expect).norm() < 1e-14);
    }

    #[test]
    fn sigma_shift_identity_under_translation() {
        // sigma_{I + w}(n) = n^{-w} sigma_I(n)
        let set = ShiftSet::from_shifts(vec![c(0.0, 0.0), c(0.0, 0.0)], "pair").unwrap();
        let shifted = set.shifted(c(1.0, 0.0));
        let n = 6u64;
        let lhs = sigma_shift(&shifted, n);
        let rhs = sigma_shift(&set, n) / n as f64;
        assert!((lhs - rhs).norm() < 1e-14);
        assert!((lhs - c(4.0 / 6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn sigma_multiplicative() {
        let set =
            ShiftSet::from_shifts(vec![c(0.01, 0.0), c(-0.02, 0.03)], "generic").unwrap();
        for (m, n) in [(4u64, 9u64), (5, 8), (7, 27), (25, 11)] {
            assert_eq!(gcd(m, n), 1);
            let lhs = sigma_shift(&set, m * n);
            let rhs = sigma_shift(&set, m) * sigma_shift(&set, n);
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn ramanujan_examples() {
        assert_eq!(ramanujan_sum(1, 5), 1);
        // prime p not dividing r: only d = 1 survives, mu(p) = -1
        for p in [3u64, 7, 11, 997] {
            assert_eq!(ramanujan_sum(p, 1), -1);
            assert_eq!(ramanujan_sum(p, (p + 1) as i64), -1);
        }
        assert_eq!(ramanujan_sum(6, 4), -1);
        for q in 1..50u64 {
            assert_eq!(ramanujan_sum(q, 0), euler_phi(q) as i64);
        }
    }

    #[test]
    fn ramanujan_exponential_sum_oracle() {
        // direct definition: sum over residues a mod q with gcd(a, q) = 1 of
        // e(a r / q)
        let oracle = |q: u64, r: i64| -> f64 {
            let mut acc = c(0.0, 0.0);
            for a in 1..=q {
                if gcd(a, q) == 1 {
                    let th = 2.0 * std::f64::consts::PI * (a as f64) * (r as f64) / (q as f64);
                    acc += c(th.cos(), th.sin());
                }
            }
            assert!(acc.im.abs() < 1e-9);
            acc.re
        };
        for q in 1..=60u64 {
            for r in [0i64, 1, 4, 6, 30, -9] {
                let direct = oracle(q, r);
                assert!(
                    (direct - ramanujan_sum(q, r) as f64).abs() < 1e-7,
                    "q={q} r={r}: {direct} vs {}",
                    ramanujan_sum(q, r)
                );
            }
        }
    }

    #[test]
    fn ramanujan_multiplicative_in_q() {
        // exhaustive over coprime q1, q2 with q1 q2 <= 10^4
        for r in [0i64, 1, 4, 6, 30] {
            for q1 in 1..=100u64 {
                for q2 in 1..=(10_000 / q1) {
                    if gcd(q1, q2) == 1 {
                        assert_eq!(
                            ramanujan_sum(q1 * q2, r),
                            ramanujan_sum(q1, r) * ramanujan_sum(q2, r),
                            "q1={q1} q2={q2} r={r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ramanujan_gcd_bound() {
        for q in 1..200u64 {
            for r in 1..40i64 {
                assert!(ramanujan_sum(q, r).unsigned_abs() <= gcd(q, r as u64));
            }
        }
    }

    #[test]
    fn small_arithmetic_functions() {
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
        assert_eq!(mobius(6), 1);
        assert_eq!(euler_phi(6), 2);
        assert_eq!(euler_phi(1), 1);
        assert_eq!(omega_distinct(60), 3);
        assert_eq!(omega_distinct(1), 0);
    }

    #[test]
    fn sieve_tables_match_direct() {
        let sv = Sieve::new(5000);
        for n in 1..=5000u64 {
            assert_eq!(sv.mobius[n as usize] as i64, mobius(n), "mobius {n}");
            assert_eq!(sv.phi[n as usize] as u64, euler_phi(n), "phi {n}");
        }
        assert_eq!(sv.divisors(12), vec![1, 2, 3, 4, 6, 12]);
    }

    #[test]
    fn sieve_sigma_matches_pointwise() {
        let set = ShiftSet::from_shifts(vec![c(0.01, 0.0), c(-0.02, 0.03)], "spot").unwrap();
        let table = sieve_sigma(&set, 10_000, 1).unwrap();
        assert!((table.get(1) - c(1.0, 0.0)).norm() == 0.0);
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..200 {
            let n = 1 + rng.below(10_000);
            let direct = sigma_shift(&set, n);
            let rel = (table.get(n) - direct).norm() / direct.norm().max(1e-300);
            assert!(rel < 1e-12, "n={n}");
        }
    }

    #[test]
    fn sieve_sigma_zero_shifts_equals_tau_table() {
        let table = sieve_sigma(&ShiftSet::zeros(2), 10, 1).unwrap();
        let tau: Vec<u64> = (1..=10).map(|n| tau_k(2, n).unwrap()).collect();
        for n in 1..=10u64 {
            assert!((table.get(n).re - tau[n as usize - 1] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn sieve_sigma_single_shift_table() {
        let a = c(0.3, 0.0);
        let set = ShiftSet::from_shifts(vec![a], "single").unwrap();
        let table = sieve_sigma(&set, 10, 1).unwrap();
        for n in 1..=10u64 {
            let expect = (n as f64).powf(-0.3);
            assert!((table.get(n).re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sieve_sigma_worker_count_invariant() {
        let set = ShiftSet::from_shifts(vec![c(0.02, 0.01), c(-0.01, 0.0)], "par").unwrap();
        let t1 = sieve_sigma(&set, 30_000, 1).unwrap();
        let t4 = sieve_sigma(&set, 30_000, 4).unwrap();
        for n in 1..=30_000usize {
            assert_eq!(t1.values[n], t4.values[n], "n={n}");
        }
    }

    #[test]
    fn sieve_sigma_budget() {
        let set = ShiftSet::zeros(2);
        let err = sieve_sigma_with_budget(&set, 1000, 1, 100).unwrap_err();
        matches!(err, Error::Budget { .. });
    }

    #[test]
    fn sieve_sigma_magnitude_bound() {
        let set = ShiftSet::from_shifts(vec![c(0.04, 0.0), c(-0.04, 0.01)], "bound").unwrap();
        let delta = set.delta_bound();
        let table = sieve_sigma(&set, 2000, 1).unwrap();
        for n in 1..=2000u64 {
            let cap = tau_k(2, n).unwrap() as f64 * (n as f64).powf(delta);
            assert!(table.get(n).norm() <= cap * (1.0 + 1e-9), "n={n}");
        }
    }

    #[test]
    fn dirichlet_series_converges_to_zeta_product() {
        // sum_{n <= N} sigma_I(n) n^{-s} approaches prod_a zeta(s + a) and the
        // discrepancy shrinks from N to 2N
        let set = ShiftSet::from_real(&[0.05, -0.03], "dirichlet").unwrap();
        let s = 2.5f64;
        let table = sieve_sigma(&set, 40_000, 1).unwrap();
        let partial = |n_max: u64| -> Complex64 {
            let mut acc = c(0.0, 0.0);
            for n in 1..=n_max {
                acc += table.get(n) * (n as f64).powf(-s);
            }
            acc
        };
        // reference product via a long plain sum for each factor
        let zeta_real = |x: f64| -> f64 {
            let mut acc = 0.0;
            let n0 = 200u64;
            for n in 1..n0 {
                acc += (n as f64).powf(-x);
            }
            // Euler-Maclaurin tail to second order
            let nf = n0 as f64;
            acc + nf.powf(1.0 - x) / (x - 1.0) + 0.5 * nf.powf(-x) + x / 12.0 * nf.powf(-x - 1.0)
        };
        let target = zeta_real(s + 0.05) * zeta_real(s - 0.03);
        let d1 = (partial(20_000).re - target).abs();
        let d2 = (partial(40_000).re - target).abs();
        assert!(d2 < d1, "discrepancy should shrink: {d1} -> {d2}");
        assert!(d2 < 1e-5);
    }

    #[test]
    fn shift_set_validation() {
        assert!(ShiftSet::new(vec![], 0.1, 0.0, "empty").is_err());
        assert!(ShiftSet::new(vec![c(0.2, 0.0)], 0.1, 0.0, "too big").is_err());
        assert!(
            ShiftSet::new(vec![c(0.01, 0.0), c(0.011, 0.0)], 0.1, 0.01, "too close").is_err()
        );
        let ok = ShiftSet::new(vec![c(0.01, 0.0), c(0.03, 0.0)], 0.1, 0.01, "ok").unwrap();
        assert_eq!(ok.len(), 2);
        ok.require_distinct(1e-6).unwrap();
    }

    #[test]
    fn multiset_equality_ignores_order() {
        let a = ShiftSet::from_shifts(vec![c(0.01, 0.0), c(0.03, 0.02)], "a").unwrap();
        let b = ShiftSet::from_shifts(vec![c(0.03, 0.02), c(0.01, 0.0)], "b").unwrap();
        assert!(a.multiset_eq(&b, 1e-15));
    }
}
