//! The Euler products and Dirichlet series of the mean-value analysis: the
//! multiplicative functions g_A and G_A with their closed forms, the series
//! B / Z / A, the local factors C, and the two-variable H-function with its
//! zeta factorization.

use num_complex::Complex64;

use crate::arith::{
    sieve_sigma_with_budget, sigma_prime_power, ShiftSet, Sieve,
};
use crate::error::{Error, Result};
use crate::policy::TruncationPolicy;
use crate::specfun::zeta_default;
use crate::sympoly::{elem_sym, q_coefficients};

/// One truncated local power series sum_j sigma_A(p^j) x^j at a prime,
/// together with its certified geometric tail bound.
#[derive(Clone, Debug)]
pub struct LocalSeries {
    pub prime: u64,
    pub coefficients: Vec<Complex64>,
    pub truncation_len: usize,
    pub tail_bound: f64,
}

/// Value of a truncated Euler product with its truncation diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct ProductResult {
    pub value: Complex64,
    pub prime_cutoff: u64,
    pub tail_estimate: f64,
}

/// Margin kept from every zeta pole.
pub const POLE_MARGIN: f64 = 1e-4;

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// max(0, -Re a) over the shifts: the growth exponent of |sigma_A(p^j)|.
fn growth_exponent(shifts: &[Complex64]) -> f64 {
    shifts.iter().map(|a| (-a.re).max(0.0)).fold(0.0, f64::max)
}

/// Certified bound on sum_{j > len} tau_k(p^j) p^{j (mu - sigma)}: the
/// tail of a local sigma-series under |sigma_A(p^j)| <= tau_k(p^j) p^{j mu}.
fn sigma_series_tail(k: usize, ratio: f64, len: usize) -> f64 {
    if ratio >= 0.999 {
        return f64::INFINITY;
    }
    // tau_k(p^j) <= (j+1)^{k-1}
    let mut tail = 0.0;
    let mut rj = ratio.powi(len as i32 + 1);
    for j in (len + 1)..(len + 200) {
        tail += (j as f64 + 1.0).powi(k as i32 - 1) * rj;
        rj *= ratio;
    }
    tail + (len as f64 + 201.0).powi(k as i32 - 1) * rj / (1.0 - ratio)
}

/// The local series object for sigma_A at one prime (diagnostic surface).
pub fn local_series(shifts: &ShiftSet, p: u64, len: usize) -> LocalSeries {
    let coefficients = sigma_prime_power(shifts.shifts(), p, len);
    let mu = growth_exponent(shifts.shifts());
    let ratio = (p as f64).powf(mu - 1.0);
    LocalSeries {
        prime: p,
        coefficients,
        truncation_len: len,
        tail_bound: sigma_series_tail(shifts.len(), ratio, len),
    }
}

/// g_A(s, n): at each p^e || n the quotient of the shifted local series by
/// the unshifted one, multiplied over p | n. Both series share one
/// truncation length so their geometric parts cancel.
pub fn g_local(set: &ShiftSet, s: Complex64, n: u64) -> Result<Complex64> {
    assert!(n >= 1);
    let tol = 1e-16;
    let mut acc = Complex64::new(1.0, 0.0);
    for &(p, e) in &crate::arith::factorize(n).pairs {
        let e = e as usize;
        let mu = growth_exponent(set.shifts());
        let ratio = (p as f64).powf(mu - s.re);
        if ratio >= 0.95 {
            return Err(Error::Regime {
                what: "g_local",
                detail: format!("series ratio {ratio:.3} at p = {p} (Re s too small)"),
            });
        }
        let k = set.len();
        let mut len = 8usize;
        while sigma_series_tail(k, ratio, len) >= tol && len < 400 {
            len *= 2;
        }
        let coeffs = sigma_prime_power(set.shifts(), p, len + e);
        let z = (-s * (p as f64).ln()).exp();
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        let mut zj = Complex64::new(1.0, 0.0);
        for j in 0..=len {
            num += coeffs[j + e] * zj;
            den += coeffs[j] * zj;
            zj *= z;
        }
        acc *= num / den;
    }
    Ok(acc)
}

/// G_A(s, n) from its definition: the Mobius double sum over d | n, e | d
/// of mu(d) d^s / phi(d) * mu(e) e^{-s} g_A(s, n e / d).
pub fn g_cap(set: &ShiftSet, s: Complex64, n: u64) -> Result<Complex64> {
    assert!(n >= 1);
    let divisors = divisors_of(n);
    let mut acc = Complex64::new(0.0, 0.0);
    for &d in &divisors {
        let mu_d = crate::arith::mobius(d);
        if mu_d == 0 {
            continue;
        }
        let phi_d = crate::arith::euler_phi(d) as f64;
        let d_pow = (s * (d as f64).ln()).exp();
        let mut inner = Complex64::new(0.0, 0.0);
        for &e in &divisors_of(d) {
            let mu_e = crate::arith::mobius(e);
            if mu_e == 0 {
                continue;
            }
            let e_pow = (-s * (e as f64).ln()).exp();
            inner += cx(mu_e as f64) * e_pow * g_local(set, s, n / d * e)?;
        }
        acc += cx(mu_d as f64) * d_pow / phi_d * inner;
    }
    Ok(acc)
}

fn divisors_of(n: u64) -> Vec<u64> {
    let f = crate::arith::factorize(n);
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

/// Closed form for G_X(s, p^j) with distinct xs:
/// prod_i (1 - p^{-s-x_i}) * (p-1)^{-1} *
/// sum_i (p^{1 - x_i j} - p^{s - x_i (j-1)}) / (1 - p^{-x_i-s})
///        * prod_{l != i} (1 - p^{x_i - x_l})^{-1}.
pub fn g_mult_closed(xs: &[Complex64], s: Complex64, p: u64, j: u32) -> Result<Complex64> {
    assert!(j >= 1);
    for (i, xi) in xs.iter().enumerate() {
        for xl in &xs[i + 1..] {
            if (xi - xl).norm() < 1e-9 {
                return Err(Error::CoincidentShifts { min_distance: 1e-9 });
            }
        }
    }
    let lp = (p as f64).ln();
    let pw = |z: Complex64| (z * lp).exp();
    let mut front = Complex64::new(1.0, 0.0);
    for xi in xs {
        front *= cx(1.0) - pw(-s - xi);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, xi) in xs.iter().enumerate() {
        let jf = j as f64;
        let num = pw(cx(1.0) - xi * jf) - pw(s - xi * (jf - 1.0));
        let mut term = num / (cx(1.0) - pw(-xi - s));
        for (l, xl) in xs.iter().enumerate() {
            if l != i {
                term /= cx(1.0) - pw(xi - xl);
            }
        }
        sum += term;
    }
    Ok(front / (p as f64 - 1.0) * sum)
}

/// G_I(1 - a_{i1}, p^n) through the coefficient polynomials:
/// sum_j q_{n,j}(X_2, ..., X_k) X_1^{-j} p^{-j} with X_i = p^{-a_i}, after
/// moving shift `i1` to the front.
pub fn g_first_shift(set: &ShiftSet, i1: usize, p: u64, n: u32) -> Result<Complex64> {
    assert!(i1 < set.len() && n >= 1);
    set.require_distinct(1e-9)?;
    let k = set.len();
    if k == 1 {
        // empty coefficient sum
        return Ok(Complex64::new(0.0, 0.0));
    }
    let lp = (p as f64).ln();
    let a1 = set.shifts()[i1];
    let others: Vec<Complex64> = set
        .shifts()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != i1)
        .map(|(_, &a)| (-a * lp).exp())
        .collect();
    let e_values: Vec<Complex64> = elem_sym(&others)[1..].to_vec();
    let q = q_coefficients(n as usize, k - 1)?;
    let x1_inv = (a1 * lp).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = Complex64::new(1.0, 0.0); // (X_1^{-1} / p)^j
    for qj in &q {
        acc += qj.eval(&e_values) * w;
        w *= x1_inv / p as f64;
    }
    Ok(acc)
}

/// Multiplicative table of G_A(s, q) for q <= q_max, built from prime-power
/// values supplied by `g_pp`.
fn multiplicative_table<F>(q_max: u64, sieve: &Sieve, mut g_pp: F) -> Result<Vec<Complex64>>
where
    F: FnMut(u64, u32) -> Result<Complex64>,
{
    let n = q_max as usize;
    let mut table = vec![Complex64::new(0.0, 0.0); n + 1];
    table[1] = Complex64::new(1.0, 0.0);
    // largest spf-power divisor, as in the sigma sieve
    let mut pp = vec![0u32; n + 1];
    pp[1] = 1;
    for i in 2..=n {
        let p = sieve.spf[i] as usize;
        let m = i / p;
        pp[i] = if m % p == 0 { pp[m] * p as u32 } else { p as u32 };
    }
    for i in 2..=n {
        let q = pp[i] as u64;
        if q == i as u64 {
            let p = sieve.spf[i] as u64;
            let mut e = 0u32;
            let mut v = 1u64;
            while v < q {
                v *= p;
                e += 1;
            }
            table[i] = g_pp(p, e)?;
        } else {
            table[i] = table[(i as u64 / q) as usize] * table[q as usize];
        }
    }
    Ok(table)
}

/// Table of G_I(1 - a_{i1}, q), q <= q_max, via the polynomial form where
/// the exact-arithmetic cap allows and the closed form above it (the
/// definitional `g_cap` route when the set is a singleton).
pub fn g_table_first_shift(
    set: &ShiftSet,
    i1: usize,
    q_max: u64,
    sieve: &Sieve,
) -> Result<Vec<Complex64>> {
    let s = cx(1.0) - set.shifts()[i1];
    multiplicative_table(q_max, sieve, |p, e| {
        if set.len() == 1 {
            g_cap(set, s, p.pow(e))
        } else if e as usize <= crate::sympoly::Q_COEFF_CAP {
            g_first_shift(set, i1, p, e)
        } else {
            g_mult_closed(set.shifts(), s, p, e)
        }
    })
}

/// Table of G_A(s, q), q <= q_max, through the definitional Mobius sums.
pub fn g_table_definitional(
    set: &ShiftSet,
    s: Complex64,
    q_max: u64,
    sieve: &Sieve,
) -> Result<Vec<Complex64>> {
    multiplicative_table(q_max, sieve, |p, e| g_cap(set, s, p.pow(e)))
}

// --- the script-A Euler product -------------------------------------------

/// Empirical tail fit: |local - 1| is modelled as C p^{-beta} from the last
/// sampled primes, then summed past the cutoff by the integral bound.
fn fit_tail(samples: &[(u64, f64)], cutoff: u64) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(_, d)| d > 1e-300)
        .map(|&(p, d)| ((p as f64).ln(), d.ln()))
        .collect();
    if pts.len() < 4 {
        return 0.0;
    }
    // least-squares slope of ln d against ln p
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let beta = if denom.abs() < 1e-12 { 2.0 } else { -(n * sxy - sx * sy) / denom };
    let beta = beta.clamp(1.05, 8.0);
    let c = pts
        .iter()
        .map(|&(lx, ly)| (ly + beta * lx).exp())
        .fold(0.0f64, f64::max);
    // sum_{p > cutoff} C p^{-beta} <= C integral x^{-beta} / ln x dx
    let x = cutoff as f64;
    2.0 * c * x.powf(1.0 - beta) / ((beta - 1.0) * x.ln())
}

/// Tail fit for callers building their own contour-specialized products.
pub fn fit_tail_public(samples: &[(u64, f64)], cutoff: u64) -> f64 {
    fit_tail(samples, cutoff)
}

/// The absolutely convergent product
/// script_A(U, V) = prod_p [prod_{u,v} (1 - p^{-1-u-v})] *
///                  [sum_a sigma_U(p^a) sigma_V(p^a) p^{-a}].
pub fn script_a(u: &ShiftSet, v: &ShiftSet, policy: &TruncationPolicy) -> Result<ProductResult> {
    let mu = growth_exponent(u.shifts());
    let mv = growth_exponent(v.shifts());
    if mu + mv > 0.9 {
        return Err(Error::Regime {
            what: "script_a",
            detail: format!("growth exponents {mu:.3} + {mv:.3} too close to 1"),
        });
    }
    let sieve = Sieve::new(policy.prime_cutoff as usize);
    let tol = (policy.target_tol * 1e-3).max(1e-15);
    let mut value = Complex64::new(1.0, 0.0);
    let mut recent: Vec<(u64, f64)> = Vec::new();
    let n_primes = sieve.primes.len();
    for (idx, &p) in sieve.primes.iter().enumerate() {
        let p = p as u64;
        let (series, _) = local_sigma_sum_product(u.shifts(), v.shifts(), p, tol, policy)?;
        let mut pairs = Complex64::new(1.0, 0.0);
        let lp = (p as f64).ln();
        for a in u.shifts() {
            for b in v.shifts() {
                pairs *= cx(1.0) - ((-(a + b) - 1.0) * lp).exp();
            }
        }
        let local = pairs * series;
        value *= local;
        if idx + 40 >= n_primes {
            recent.push((p, (local - cx(1.0)).norm()));
        }
    }
    let rel_tail = fit_tail(&recent, policy.prime_cutoff);
    Ok(ProductResult {
        value,
        prime_cutoff: policy.prime_cutoff,
        tail_estimate: rel_tail * value.norm(),
    })
}

/// sum_a sigma_U(p^a) sigma_V(p^a) p^{-a}, adaptively truncated.
fn local_sigma_sum_product(
    u: &[Complex64],
    v: &[Complex64],
    p: u64,
    tol: f64,
    policy: &TruncationPolicy,
) -> Result<(Complex64, f64)> {
    let mu = growth_exponent(u);
    let mv = growth_exponent(v);
    let ratio = (p as f64).powf(mu + mv - 1.0);
    let kl = u.len() + v.len();
    let mut len = 4usize;
    loop {
        let tail = sigma_series_tail(kl, ratio, len);
        if tail < tol || len >= policy.series_len {
            let su = sigma_prime_power(u, p, len);
            let sv = sigma_prime_power(v, p, len);
            let pinv = 1.0 / p as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut w = 1.0f64;
            for a in 0..=len {
                acc += su[a] * sv[a] * w;
                w *= pinv;
            }
            return Ok((acc, tail));
        }
        len = (len * 2).min(policy.series_len);
    }
}

/// A_{I,J}(s) = script_A(I_s, J): the correction factor in the zeta
/// factorization of Z.
pub fn a_product(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    s: Complex64,
    policy: &TruncationPolicy,
) -> Result<ProductResult> {
    script_a(&i_set.shifted(s), j_set, policy)
}

/// Z_{I,J}(s) by the factorized route: prod_{i,j} zeta(1 + s + a_i + b_j)
/// times A_{I,J}(s). Pole proximity is reported with the offending pair.
pub fn z_eval(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    s: Complex64,
    policy: &TruncationPolicy,
) -> Result<ProductResult> {
    let mut zprod = Complex64::new(1.0, 0.0);
    for (i, a) in i_set.shifts().iter().enumerate() {
        for (j, b) in j_set.shifts().iter().enumerate() {
            let arg = cx(1.0) + s + a + b;
            if (arg - cx(1.0)).norm() < POLE_MARGIN {
                return Err(Error::PoleProximity {
                    what: "z_eval",
                    detail: format!("s near -a_{} - b_{}", i + 1, j + 1),
                });
            }
            zprod *= zeta_default(arg)?;
        }
    }
    let a = a_product(i_set, j_set, s, policy)?;
    Ok(ProductResult {
        value: zprod * a.value,
        prime_cutoff: a.prime_cutoff,
        tail_estimate: a.tail_estimate * zprod.norm(),
    })
}

/// Truncated Dirichlet series Z_{I,J}(s) = sum_{n <= N} sigma_I sigma_J /
/// n^{1+s}, with an empirical tail estimate from the last dyadic block.
pub fn z_series(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    s: Complex64,
    n_max: u64,
    policy: &TruncationPolicy,
) -> Result<(Complex64, f64)> {
    let ti = sieve_sigma_with_budget(i_set, n_max, policy.jobs, policy.sieve_budget)?;
    let tj = sieve_sigma_with_budget(j_set, n_max, policy.jobs, policy.sieve_budget)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut last_block = 0.0f64;
    let half = n_max / 2;
    for n in 1..=n_max {
        let nf = n as f64;
        let term = ti.get(n) * tj.get(n) * ((-s - 1.0) * nf.ln()).exp();
        acc += term;
        if n > half {
            last_block += term.norm();
        }
    }
    // terms decay like n^{-1-sigma+2delta} (slowly varying factors): the
    // tail beyond N is the last dyadic block scaled by 1/(2^q - 1)
    let q = (s.re - i_set.delta_bound() - j_set.delta_bound()).max(0.05);
    let tail = 2.0 * last_block / (2f64.powf(q) - 1.0);
    Ok((acc, tail))
}

/// B(I, J) as a truncated series (convergent regime only).
pub fn b_series(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    n_max: u64,
    policy: &TruncationPolicy,
) -> Result<(Complex64, f64)> {
    for a in i_set.shifts() {
        for b in j_set.shifts() {
            if (a + b).re <= 0.05 {
                return Err(Error::Regime {
                    what: "b_series",
                    detail: format!("Re(a + b) = {:.3} not safely positive", (a + b).re),
                });
            }
        }
    }
    z_series(i_set, j_set, cx(0.0), n_max, policy)
}

/// B(I, J) as the per-prime product of the raw local sums.
pub fn b_eulerized(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    policy: &TruncationPolicy,
) -> Result<ProductResult> {
    for a in i_set.shifts() {
        for b in j_set.shifts() {
            if (a + b).re <= 0.05 {
                return Err(Error::Regime {
                    what: "b_eulerized",
                    detail: format!("Re(a + b) = {:.3} not safely positive", (a + b).re),
                });
            }
        }
    }
    let sieve = Sieve::new(policy.prime_cutoff as usize);
    let tol = (policy.target_tol * 1e-3).max(1e-15);
    let mut value = Complex64::new(1.0, 0.0);
    let mut recent = Vec::new();
    let n_primes = sieve.primes.len();
    for (idx, &p) in sieve.primes.iter().enumerate() {
        let (series, _) =
            local_sigma_sum_product(i_set.shifts(), j_set.shifts(), p as u64, tol, policy)?;
        value *= series;
        if idx + 40 >= n_primes {
            recent.push((p as u64, (series - cx(1.0)).norm()));
        }
    }
    let rel_tail = fit_tail(&recent, policy.prime_cutoff);
    Ok(ProductResult {
        value,
        prime_cutoff: policy.prime_cutoff,
        tail_estimate: rel_tail * value.norm(),
    })
}

/// B(I, J) via the factorization B = Z(I, J) * A(I, J) evaluated at s = 0.
pub fn b_factored(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    policy: &TruncationPolicy,
) -> Result<ProductResult> {
    z_eval(i_set, j_set, cx(0.0), policy)
}

// --- the C local factors and the H function -------------------------------

/// The local factor C_{I,J;a_{i1},b_{i2}}(p; s):
/// (1 + sum_{j >= 1} G_I(1-a_{i1}, p^j) G_J(1-b_{i2}, p^j)
///         (1 - p^{a_{i1}+b_{i2}+s-1}) p^{-j(1+s)})
///   * prod_{i != i1, j != i2} (1 - p^{-1-a_i-b_j-s}).
pub fn c_local(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    i1: usize,
    i2: usize,
    p: u64,
    s: Complex64,
    policy: &TruncationPolicy,
) -> Result<Complex64> {
    let delta = i_set.delta_bound().max(j_set.delta_bound());
    if s.re <= -0.5 + 2.0 * delta + 0.02 {
        return Err(Error::Regime {
            what: "c_local",
            detail: format!("Re s = {:.3} at or below -1/2 + 2 delta", s.re),
        });
    }
    let a1 = i_set.shifts()[i1];
    let b1 = j_set.shifts()[i2];
    let lp = (p as f64).ln();
    let pw = |z: Complex64| (z * lp).exp();
    let head = cx(1.0) - pw(a1 + b1 + s - 1.0);
    let v = pw(-1.0 - s);
    // series over j with |G_I G_J| << p^{2 j delta}
    let ratio = v.norm() * (p as f64).powf(2.0 * delta);
    let tol = (policy.target_tol * 1e-3).max(1e-15);
    let mut len = 4usize;
    while sigma_series_tail(2, ratio, len) >= tol && len < policy.series_len {
        len *= 2;
    }
    // polynomial form within the exact-arithmetic cap, closed form beyond
    let g_at = |set: &ShiftSet, idx: usize, j: u32| -> Result<Complex64> {
        if set.len() == 1 {
            Ok(Complex64::new(0.0, 0.0))
        } else if j as usize <= crate::sympoly::Q_COEFF_CAP {
            g_first_shift(set, idx, p, j)
        } else {
            g_mult_closed(set.shifts(), cx(1.0) - set.shifts()[idx], p, j)
        }
    };
    let mut series = Complex64::new(1.0, 0.0);
    let mut vj = Complex64::new(1.0, 0.0);
    for j in 1..=len {
        vj *= v;
        let gi = g_at(i_set, i1, j as u32)?;
        let gj = g_at(j_set, i2, j as u32)?;
        series += gi * gj * head * vj;
    }
    let mut pairs = Complex64::new(1.0, 0.0);
    for (i, a) in i_set.shifts().iter().enumerate() {
        for (j, b) in j_set.shifts().iter().enumerate() {
            if i != i1 && j != i2 {
                pairs *= cx(1.0) - pw(-1.0 - a - b - s);
            }
        }
    }
    Ok(series * pairs)
}

/// The product of the C local factors over p <= cutoff.
pub fn c_product(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    i1: usize,
    i2: usize,
    s: Complex64,
    policy: &TruncationPolicy,
) -> Result<ProductResult> {
    i_set.require_distinct(1e-9)?;
    j_set.require_distinct(1e-9)?;
    let sieve = Sieve::new(policy.prime_cutoff as usize);
    let mut value = Complex64::new(1.0, 0.0);
    let mut recent = Vec::new();
    let n_primes = sieve.primes.len();
    for (idx, &p) in sieve.primes.iter().enumerate() {
        let local = c_local(i_set, j_set, i1, i2, p as u64, s, policy)?;
        value *= local;
        if idx + 40 >= n_primes {
            recent.push((p as u64, (local - cx(1.0)).norm()));
        }
    }
    let rel_tail = fit_tail(&recent, policy.prime_cutoff);
    Ok(ProductResult {
        value,
        prime_cutoff: policy.prime_cutoff,
        tail_estimate: rel_tail * value.norm(),
    })
}

/// H by its zeta factorization:
/// zeta(a_{i1}+b_{i2}+s) prod_{k1 != i1, k2 != i2} zeta(1+a_{k1}+b_{k2}+s)
/// times the C product. Valid right of -1/2 + 2 delta; the simple poles are
/// kept at distance `POLE_MARGIN`.
pub fn h_eval(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    i1: usize,
    i2: usize,
    s: Complex64,
    policy: &TruncationPolicy,
) -> Result<ProductResult> {
    let a1 = i_set.shifts()[i1];
    let b1 = j_set.shifts()[i2];
    if (a1 + b1 + s - cx(1.0)).norm() < POLE_MARGIN {
        return Err(Error::PoleProximity {
            what: "h_eval",
            detail: "s near 1 - a_{i1} - b_{i2}".into(),
        });
    }
    let mut zprod = zeta_default(a1 + b1 + s)?;
    for (k1, a) in i_set.shifts().iter().enumerate() {
        for (k2, b) in j_set.shifts().iter().enumerate() {
            if k1 != i1 && k2 != i2 {
                if (a + b + s).norm() < POLE_MARGIN {
                    return Err(Error::PoleProximity {
                        what: "h_eval",
                        detail: format!("s near -a_{} - b_{}", k1 + 1, k2 + 1),
                    });
                }
                zprod *= zeta_default(cx(1.0) + a + b + s)?;
            }
        }
    }
    let c = c_product(i_set, j_set, i1, i2, s, policy)?;
    Ok(ProductResult {
        value: zprod * c.value,
        prime_cutoff: c.prime_cutoff,
        tail_estimate: c.tail_estimate * zprod.norm(),
    })
}

/// H as the truncated double series over r <= r_max, q <= q_max:
/// sum c_q(r) G_I(1-a_{i1}, q) G_J(1-b_{i2}, q) q^{-2+a_{i1}+b_{i2}}
///       r^{-a_{i1}-b_{i2}-s},
/// computed exactly on the truncated index box via the divisor form of
/// c_q(r). Returns the value and a combined tail estimate.
pub fn h_direct(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    i1: usize,
    i2: usize,
    s: Complex64,
    r_max: u64,
    q_max: u64,
) -> Result<(Complex64, f64)> {
    let delta = i_set.delta_bound().max(j_set.delta_bound());
    if s.re <= 1.0 + 2.0 * delta {
        return Err(Error::Regime {
            what: "h_direct",
            detail: format!("needs Re s > 1 + 2 delta, got {:.3}", s.re),
        });
    }
    let a1 = i_set.shifts()[i1];
    let b1 = j_set.shifts()[i2];
    let c = a1 + b1 + s;
    let sieve = Sieve::new(q_max as usize);
    // definitional (Mobius-sum) G tables keep this route independent of the
    // polynomial closed forms used by the factorized side
    let gi = g_table_definitional(i_set, cx(1.0) - a1, q_max, &sieve)?;
    let gj = g_table_definitional(j_set, cx(1.0) - b1, q_max, &sieve)?;
    // prefix sums of r^{-c}
    let mut prefix = vec![Complex64::new(0.0, 0.0); r_max as usize + 1];
    for r in 1..=r_max as usize {
        prefix[r] = prefix[r - 1] + (-c * (r as f64).ln()).exp();
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for q in 1..=q_max {
        let alpha = gi[q as usize] * gj[q as usize]
            * ((a1 + b1 - 2.0) * (q as f64).ln()).exp();
        if alpha.norm() < 1e-18 {
            continue;
        }
        let mut inner = Complex64::new(0.0, 0.0);
        for &d in &sieve.divisors(q) {
            let mu = sieve.mobius[(q / d) as usize];
            if mu == 0 {
                continue;
            }
            // sum over r <= r_max with d | r of r^{-c}
            let m = r_max / d;
            if m == 0 {
                continue;
            }
            inner += cx(mu as f64)
                * ((cx(1.0) - c) * (d as f64).ln()).exp()
                * prefix[m as usize];
        }
        acc += alpha * inner;
    }
    // r-tail: sum_q |u_{q,r}| <= 10 tau_2(r), then sum_{r > R} tau_2(r) r^{-sigma_c}
    let sc = c.re;
    let rf = r_max as f64;
    let r_tail = 10.0 * rf.powf(1.0 - sc) * (rf.ln() / (sc - 1.0) + 1.0 / ((sc - 1.0) * (sc - 1.0)));
    // q-tail: |u| ~ gcd(q, r) q^{-2+4delta} against zeta(sigma_c) worth of r mass
    let qf = q_max as f64;
    let zeta_sc = zeta_default(cx(sc))?.norm();
    let q_tail = 10.0 * zeta_sc * zeta_sc * qf.powf(-1.0 + 4.0 * delta) / (1.0 - 4.0 * delta);
    Ok((acc, r_tail + q_tail))
}
