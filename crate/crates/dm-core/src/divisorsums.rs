//! Additive divisor correlation sums: the smoothed two-variable kernel f_r,
//! the brute-force correlation sum D_{f;I,J}(r), and the conjectured main
//! term with its shift constants and Ramanujan-sum q-series.

use num_complex::Complex64;

use crate::arith::{gcd, DivisorTable, ShiftSet, Sieve};
use crate::error::{Error, Result};
use crate::eulerprod::{g_cap, g_first_shift};
use crate::policy::TruncationPolicy;
use crate::quad::{integrate_gk_with_knots, QuadratureSpec};
use crate::specfun::zeta_default;
use crate::weights::{w0_eval, OmegaHatTable, OmegaWeight, PhiCutoff};

/// Hard cap on brute-force support enumeration (points).
pub const BRUTE_BUDGET: u64 = 10_000_000;

/// The smoothed two-variable test function
/// f_r(x, y) = W(x/M) W(y/N) phi(x/K) phi(y/K) what(log(1 + r/y)/2pi) / T
/// with W(u) = u^{-1/2} W0(u).
///
/// `uses_w0` drops the dyadic bumps (keeping the u^{-1/2} factors), which
/// yields the un-partitioned weight for partition-refinement checks. Note
/// the Fourier factor makes the kernel complex-valued away from r = 0.
pub struct KernelSpec {
    pub m_box: f64,
    pub n_box: f64,
    pub k_len: f64,
    pub r: i64,
    pub omega: OmegaWeight,
    pub phi: PhiCutoff,
    pub uses_w0: bool,
    what: OmegaHatTable,
}

impl KernelSpec {
    pub fn new(
        m_box: f64,
        n_box: f64,
        k_len: f64,
        r: i64,
        omega: OmegaWeight,
        phi: PhiCutoff,
        uses_w0: bool,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        if r == 0 {
            return Err(Error::Config("kernel needs r != 0 (diagonal excluded)".into()));
        }
        // dyadic scales start at 2^{-1/2}
        let scale_floor = std::f64::consts::FRAC_1_SQRT_2 * (1.0 - 1e-12);
        if !(m_box >= scale_floor && n_box >= scale_floor && k_len >= 1.0) {
            return Err(Error::Config(
                "kernel boxes need M, N >= 2^{-1/2} and K >= 1".into(),
            ));
        }
        // |log(1 + r/y)| is largest at the low end of the effective
        // y-support (pairs need y + r >= 1)
        let y_low = if uses_w0 { n_box } else { 1.0 };
        let y_low_eff = y_low.max(1.0).max(1.0 - r as f64);
        let u_max = (1.0 + r as f64 / y_low_eff).ln().abs() / (2.0 * std::f64::consts::PI);
        let what = OmegaHatTable::build(&omega, 1.5 * u_max + 1e-9, quad);
        Ok(KernelSpec { m_box, n_box, k_len, r, omega, phi, uses_w0, what })
    }

    fn window(&self, ratio: f64, use_bump: bool) -> f64 {
        if ratio <= 0.0 {
            return 0.0;
        }
        let base = ratio.powf(-0.5);
        if use_bump {
            base * w0_eval(ratio)
        } else {
            base
        }
    }

    /// The Fourier factor what(log(1 + r/y) / 2pi) / T; zero where the pair
    /// (y + r, y) leaves the first quadrant.
    pub fn fourier_factor(&self, y: f64) -> Complex64 {
        if y + self.r as f64 <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let u = (1.0 + self.r as f64 / y).ln() / (2.0 * std::f64::consts::PI);
        self.what.eval(u) / self.omega.t
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        if x <= 0.0 || y <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let wx = self.window(x / self.m_box, self.uses_w0);
        let wy = self.window(y / self.n_box, self.uses_w0);
        if wx == 0.0 || wy == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let px = self.phi.eval(x / self.k_len);
        let py = self.phi.eval(y / self.k_len);
        if px == 0.0 || py == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.fourier_factor(y) * (wx * wy * px * py)
    }

    /// x-support of the diagonal slice x -> f(x, x - r).
    pub fn slice_support(&self) -> (f64, f64) {
        let r = self.r as f64;
        let (mut lo, mut hi) = (1.0f64.max(r + 1.0), (1.0 + self.phi.rho) * self.k_len);
        if self.uses_w0 {
            lo = lo.max(self.m_box).max(self.n_box + r);
            hi = hi.min(2.0 * self.m_box).min(2.0 * self.n_box + r);
        }
        (lo, hi)
    }
}

/// D_{f;I,J}(r) = sum over m - n = r of sigma_I(m) sigma_J(n) f(m, n),
/// with one deterministic ascending loop over n and compensated summation.
/// The tables must cover the support.
pub fn brute_d(
    spec: &KernelSpec,
    ti: &DivisorTable,
    tj: &DivisorTable,
) -> Result<Complex64> {
    let (lo, hi) = spec.slice_support();
    if hi < lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n_lo = ((lo - spec.r as f64).ceil() as i64).max(1) as u64;
    let n_hi = (hi - spec.r as f64).floor() as i64;
    if n_hi < n_lo as i64 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n_hi = n_hi as u64;
    if n_hi - n_lo + 1 > BRUTE_BUDGET {
        return Err(Error::Budget {
            what: "brute_d",
            requested: n_hi - n_lo + 1,
            cap: BRUTE_BUDGET,
        });
    }
    if n_hi > tj.upper || n_hi as i64 + spec.r > ti.upper as i64 {
        return Err(Error::Budget {
            what: "brute_d (tables too short)",
            requested: (n_hi as i64 + spec.r.max(0)) as u64,
            cap: ti.upper.min(tj.upper),
        });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for n in n_lo..=n_hi {
        let m = (n as i64 + spec.r) as u64;
        let f = spec.eval(m as f64, n as f64);
        if f == Complex64::new(0.0, 0.0) {
            continue;
        }
        let term = ti.get(m) * tj.get(n) * f;
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum)
}

/// The zeta product c_{i1,i2} = prod_{j1 != i1} zeta(1 - a_{i1} + a_{j1})
/// prod_{j2 != i2} zeta(1 - b_{i2} + b_{j2}); needs distinct shifts.
pub fn shift_constant(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    i1: usize,
    i2: usize,
) -> Result<Complex64> {
    i_set.require_distinct(1e-9)?;
    j_set.require_distinct(1e-9)?;
    let one = Complex64::new(1.0, 0.0);
    let mut acc = one;
    let a1 = i_set.shifts()[i1];
    for (j, a) in i_set.shifts().iter().enumerate() {
        if j != i1 {
            acc *= zeta_default(one - a1 + a)?;
        }
    }
    let b1 = j_set.shifts()[i2];
    for (j, b) in j_set.shifts().iter().enumerate() {
        if j != i2 {
            acc *= zeta_default(one - b1 + b)?;
        }
    }
    Ok(acc)
}

/// Additive divisor hypothesis parameters (theta, C, beta).
#[derive(Clone, Copy, Debug)]
pub struct AdcHypothesis {
    pub theta: f64,
    pub growth_c: f64,
    pub beta: f64,
}

impl AdcHypothesis {
    pub fn new(theta: f64, growth_c: f64, beta: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&theta) {
            return Err(Error::Config("theta must lie in [1/2, 1)".into()));
        }
        if growth_c < 0.0 {
            return Err(Error::Config("C must be >= 0".into()));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Config("beta must lie in (0, 1]".into()));
        }
        Ok(AdcHypothesis { theta, growth_c, beta })
    }

    /// The unconditional k = l = 2 triple.
    pub fn hughes_young() -> Self {
        AdcHypothesis { theta: 0.75, growth_c: 1.25, beta: 1.0 }
    }
}

/// One brute-vs-main comparison at a single r.
#[derive(Clone, Copy, Debug)]
pub struct AdcComparison {
    pub r: i64,
    pub brute: Complex64,
    pub main: Complex64,
    pub delta: Complex64,
    pub runtime_ms: u128,
}

/// Precomputed state for main-term evaluation over many r and boxes: the
/// per-prime G values at every prime up to the cutoff, for each choice of
/// the selected shifts.
pub struct AdcEvaluator {
    i_set: ShiftSet,
    j_set: ShiftSet,
    policy: TruncationPolicy,
    primes: Vec<u64>,
    /// g_i[i1][p-index] = G_I(1 - a_{i1}, p)
    g_i: Vec<Vec<Complex64>>,
    g_j: Vec<Vec<Complex64>>,
    constants: Vec<Vec<Complex64>>,
}

impl AdcEvaluator {
    pub fn new(i_set: &ShiftSet, j_set: &ShiftSet, policy: &TruncationPolicy) -> Result<Self> {
        i_set.require_distinct(1e-9)?;
        j_set.require_distinct(1e-9)?;
        let sieve = Sieve::new(policy.prime_cutoff as usize);
        let primes: Vec<u64> = sieve.primes.iter().map(|&p| p as u64).collect();
        let g_line = |set: &ShiftSet, idx: usize| -> Result<Vec<Complex64>> {
            primes
                .iter()
                .map(|&p| {
                    if set.len() == 1 {
                        g_cap(set, Complex64::new(1.0, 0.0) - set.shifts()[idx], p)
                    } else {
                        g_first_shift(set, idx, p, 1)
                    }
                })
                .collect()
        };
        let g_i: Vec<Vec<Complex64>> =
            (0..i_set.len()).map(|i1| g_line(i_set, i1)).collect::<Result<_>>()?;
        let g_j: Vec<Vec<Complex64>> =
            (0..j_set.len()).map(|i2| g_line(j_set, i2)).collect::<Result<_>>()?;
        let mut constants = Vec::new();
        for i1 in 0..i_set.len() {
            let mut row = Vec::new();
            for i2 in 0..j_set.len() {
                row.push(shift_constant(i_set, j_set, i1, i2)?);
            }
            constants.push(row);
        }
        Ok(AdcEvaluator {
            i_set: i_set.clone(),
            j_set: j_set.clone(),
            policy: *policy,
            primes,
            g_i,
            g_j,
            constants,
        })
    }

    fn alpha_exponent(&self, i1: usize, i2: usize) -> Complex64 {
        // alpha(q) = G_I G_J q^{-2 + a_{i1} + b_{i2}}
        self.i_set.shifts()[i1] + self.j_set.shifts()[i2] - 2.0
    }

    fn alpha_at(&self, i1: usize, i2: usize, p: u64, v: u32) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let g_of = |set: &ShiftSet, idx: usize| -> Result<Complex64> {
            if set.len() == 1 {
                g_cap(set, one - set.shifts()[idx], p.pow(v))
            } else if v as usize <= crate::sympoly::Q_COEFF_CAP {
                g_first_shift(set, idx, p, v)
            } else {
                crate::eulerprod::g_mult_closed(set.shifts(), one - set.shifts()[idx], p, v)
            }
        };
        let gi = g_of(&self.i_set, i1)?;
        let gj = g_of(&self.j_set, i2)?;
        let e = self.alpha_exponent(i1, i2);
        Ok(gi * gj * (e * ((p.pow(v)) as f64).ln()).exp())
    }

    /// The q-series sum_q c_q(r) G_I(1-a_{i1}, q) G_J(1-b_{i2}, q)
    /// q^{-2+a_{i1}+b_{i2}}, summed exactly by multiplicativity:
    /// prod_p (1 - alpha(p)) * sum_{d | r} d prod_{p^v || d}
    /// (alpha(p^v) - alpha(p^{v+1})) / (1 - alpha(p)).
    /// Returns the value and the prime-cutoff tail estimate.
    pub fn q_series(&self, i1: usize, i2: usize, r: i64) -> Result<(Complex64, f64)> {
        assert!(r != 0);
        let one = Complex64::new(1.0, 0.0);
        let e = self.alpha_exponent(i1, i2);
        let mut product = one;
        for (pi, &p) in self.primes.iter().enumerate() {
            let alpha_p = self.g_i[i1][pi] * self.g_j[i2][pi] * (e * (p as f64).ln()).exp();
            product *= one - alpha_p;
        }
        // divisor-of-r correction factors
        let r_abs = r.unsigned_abs();
        let fact = crate::arith::factorize(r_abs);
        // enumerate divisors with their factorizations
        let mut terms: Vec<(u64, Complex64)> = vec![(1, one)];
        for &(p, e_max) in &fact.pairs {
            let pi = self.primes.binary_search(&p).ok();
            let alpha_p = match pi {
                Some(pi) => self.g_i[i1][pi] * self.g_j[i2][pi] * (e * (p as f64).ln()).exp(),
                None => self.alpha_at(i1, i2, p, 1)?,
            };
            let mut augmented = Vec::new();
            for &(d, w) in &terms {
                let mut pv = 1u64;
                for v in 1..=e_max {
                    pv *= p;
                    let a_v = self.alpha_at(i1, i2, p, v)?;
                    let a_v1 = self.alpha_at(i1, i2, p, v + 1)?;
                    augmented.push((d * pv, w * (a_v - a_v1) / (one - alpha_p)));
                }
            }
            terms.extend(augmented);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &(d, w) in &terms {
            acc += w * d as f64;
        }
        // tail of prod (1 - alpha(p)): |alpha(p)| ~ p^{-2 + 4 delta}
        let delta = self.i_set.delta_bound() + self.j_set.delta_bound();
        let pf = self.policy.prime_cutoff as f64;
        let kl = (self.i_set.len() * self.j_set.len()) as f64;
        let tail_rel = kl * pf.powf(-1.0 + 2.0 * delta) / ((1.0 - 2.0 * delta) * pf.ln());
        Ok((product * acc, tail_rel * (product * acc).norm()))
    }

    /// The q-series truncated at `q_max` as a plain sum, with the
    /// divisor-bound tail estimate 10 tau_2(r) q_max^{-1+4 delta}.
    pub fn q_series_truncated(
        &self,
        i1: usize,
        i2: usize,
        r: i64,
        q_max: u64,
        sieve: &Sieve,
    ) -> Result<(Complex64, f64)> {
        assert!(r != 0 && q_max as usize <= sieve.n);
        let one = Complex64::new(1.0, 0.0);
        let gi = crate::eulerprod::g_table_first_shift(&self.i_set, i1, q_max, sieve)?;
        let gj = crate::eulerprod::g_table_first_shift(&self.j_set, i2, q_max, sieve)?;
        let e = self.alpha_exponent(i1, i2);
        let r_abs = r.unsigned_abs();
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 1..=q_max {
            let g = gcd(q, r_abs);
            let mut cq = 0i64;
            let mut d = 1u64;
            while d * d <= g {
                if g % d == 0 {
                    cq += d as i64 * sieve.mobius[(q / d) as usize] as i64;
                    let d2 = g / d;
                    if d2 != d {
                        cq += d2 as i64 * sieve.mobius[(q / d2) as usize] as i64;
                    }
                }
                d += 1;
            }
            if cq == 0 {
                continue;
            }
            acc += gi[q as usize]
                * gj[q as usize]
                * (e * (q as f64).ln()).exp()
                * (cq as f64)
                * one;
        }
        let delta = self.i_set.delta_bound().max(self.j_set.delta_bound());
        let tau2 = crate::arith::tau_k(2, r_abs)? as f64;
        let tail = 10.0 * tau2 * (q_max as f64).powf(-1.0 + 4.0 * delta) / (1.0 - 4.0 * delta);
        Ok((acc, tail))
    }

    /// The x-integral int f(x, x - r) x^{-a_{i1}} (x - r)^{-b_{i2}} dx over
    /// the diagonal slice, subdivided at the window and cutoff ramp knots.
    pub fn x_integral(&self, spec: &KernelSpec, i1: usize, i2: usize) -> Result<Complex64> {
        let (lo, hi) = spec.slice_support();
        if hi <= lo {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let a1 = self.i_set.shifts()[i1];
        let b1 = self.j_set.shifts()[i2];
        let r = spec.r as f64;
        let sqrt2 = std::f64::consts::SQRT_2;
        let knots = [
            spec.m_box * sqrt2,
            r + spec.n_box * sqrt2,
            spec.k_len,
            (1.0 + spec.phi.rho) * spec.k_len,
        ];
        let quad = QuadratureSpec { tol: self.policy.quad_tol, ..Default::default() };
        let mut f = |x: f64| {
            spec.eval(x, x - r)
                * (-a1 * x.ln()).exp()
                * (-b1 * (x - r).ln()).exp()
        };
        let out = integrate_gk_with_knots(&mut f, lo, hi, &knots, &quad);
        Ok(out.value)
    }

    /// Per-pair breakdown of the conjectured main term at one r.
    pub fn main_term_detail(
        &self,
        spec: &KernelSpec,
    ) -> Result<(Complex64, Vec<((usize, usize), Complex64)>, f64)> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut tails = 0.0;
        let mut per_pair = Vec::new();
        for i1 in 0..self.i_set.len() {
            for i2 in 0..self.j_set.len() {
                let (q, q_tail) = self.q_series(i1, i2, spec.r)?;
                let integral = self.x_integral(spec, i1, i2)?;
                let term = self.constants[i1][i2] * q * integral;
                tails += self.constants[i1][i2].norm() * q_tail * integral.norm();
                per_pair.push(((i1, i2), term));
                acc += term;
            }
        }
        Ok((acc, per_pair, tails))
    }

    /// The conjectured main term for D_{f_r;I,J}(r).
    pub fn main_term(&self, spec: &KernelSpec) -> Result<Complex64> {
        Ok(self.main_term_detail(spec)?.0)
    }
}

/// Summary of a brute-vs-main sweep over one box.
#[derive(Clone, Debug)]
pub struct AdcBoxReport {
    pub x_box: f64,
    pub comparisons: Vec<AdcComparison>,
    pub agg_delta: f64,
    pub agg_main: f64,
    /// sum |Delta| over H X^theta
    pub ratio_to_hypothesis: f64,
}

/// Runs the comparison for every r in `r_list` on the box [X, 2X]^2 and
/// aggregates. The r range must respect |r| <= X^beta.
#[allow(clippy::too_many_arguments)]
pub fn adc_sweep(
    i_set: &ShiftSet,
    j_set: &ShiftSet,
    x_box: f64,
    r_list: &[i64],
    hyp: &AdcHypothesis,
    omega: &OmegaWeight,
    phi: &PhiCutoff,
    k_factor: f64,
    policy: &TruncationPolicy,
) -> Result<AdcBoxReport> {
    for &r in r_list {
        if r == 0 {
            return Err(Error::Config("adc_sweep: r = 0 excluded".into()));
        }
        if (r.abs() as f64) > x_box.powf(hyp.beta) {
            return Err(Error::Config(format!(
                "adc_sweep: |r| = {} above X^beta = {:.1}",
                r.abs(),
                x_box.powf(hyp.beta)
            )));
        }
    }
    if r_list.is_empty() {
        return Ok(AdcBoxReport {
            x_box,
            comparisons: vec![],
            agg_delta: 0.0,
            agg_main: 0.0,
            ratio_to_hypothesis: 0.0,
        });
    }
    let r_max = r_list.iter().map(|r| r.unsigned_abs()).max().unwrap();
    let upper = (2.0 * x_box) as u64 + r_max + 2;
    let ti = crate::arith::sieve_sigma_with_budget(i_set, upper, policy.jobs, policy.sieve_budget)?;
    let tj = crate::arith::sieve_sigma_with_budget(j_set, upper, policy.jobs, policy.sieve_budget)?;
    let eval = AdcEvaluator::new(i_set, j_set, policy)?;
    let quad = QuadratureSpec { tol: policy.quad_tol, ..Default::default() };
    let k_len = k_factor * x_box;
    let comparisons: Vec<Result<AdcComparison>> =
        crate::par::map_indexed(r_list.len(), policy.jobs, |idx| {
            let r = r_list[idx];
            let start = std::time::Instant::now();
            let spec = KernelSpec::new(
                x_box,
                x_box,
                k_len,
                r,
                omega.clone(),
                *phi,
                true,
                &quad,
            )?;
            let brute = brute_d(&spec, &ti, &tj)?;
            let main = eval.main_term(&spec)?;
            Ok(AdcComparison {
                r,
                brute,
                main,
                delta: brute - main,
                runtime_ms: start.elapsed().as_millis(),
            })
        });
    let comparisons: Vec<AdcComparison> = comparisons.into_iter().collect::<Result<_>>()?;
    let agg_delta: f64 = comparisons.iter().map(|c| c.delta.norm()).sum();
    let agg_main: f64 = comparisons.iter().map(|c| c.main.norm()).sum();
    let h = r_max as f64;
    Ok(AdcBoxReport {
        x_box,
        comparisons,
        agg_delta,
        agg_main,
        ratio_to_hypothesis: agg_delta / (h * x_box.powf(hyp.theta)),
    })
}
