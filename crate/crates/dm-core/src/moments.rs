//! Top of the pipeline: the direct mean value of a long Dirichlet
//! polynomial pair with shifted divisor coefficients, its diagonal, and the
//! zero-swap / one-swap main terms M0 and M1 computed by contour
//! quadrature.

use num_complex::Complex64;

use crate::arith::{sieve_sigma_with_budget, sigma_prime_power, DivisorTable, ShiftSet, Sieve};
use crate::divisorsums::shift_constant;
use crate::error::{Error, Result};
use crate::policy::TruncationPolicy;
use crate::quad::{integrate_gk, integrate_gk_with_knots, kronrod15_rule, QuadratureSpec};
use crate::specfun::zeta_default;
use crate::weights::{OmegaHatTable, OmegaWeight, PhiCutoff};

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// One moment experiment: shifts, window, cutoff and truncation policy.
/// The polynomial length K = T^{1+eta} is always recomputed from (T, eta).
#[derive(Clone, Debug)]
pub struct MomentConfig {
    pub i_set: ShiftSet,
    pub j_set: ShiftSet,
    pub t: f64,
    pub eta: f64,
    pub omega: OmegaWeight,
    pub phi: PhiCutoff,
    pub policy: TruncationPolicy,
}

impl MomentConfig {
    pub fn new(
        i_set: ShiftSet,
        j_set: ShiftSet,
        t: f64,
        eta: f64,
        omega: OmegaWeight,
        phi: PhiCutoff,
        policy: TruncationPolicy,
    ) -> Result<Self> {
        i_set.require_distinct(1e-9)?;
        j_set.require_distinct(1e-9)?;
        if !(t > 1.0) || eta < 0.0 {
            return Err(Error::Config("moment config needs T > 1 and eta >= 0".into()));
        }
        Ok(MomentConfig { i_set, j_set, t, eta, omega, phi, policy })
    }

    /// Canonical experiment: k and l shifts spaced by 1/(10 log T), the
    /// standard window with ramp exponent `b`, rho = 0.1.
    pub fn standard_experiment(
        k: usize,
        l: usize,
        t: f64,
        eta: f64,
        b_exponent: f64,
        policy: TruncationPolicy,
    ) -> Result<Self> {
        let d = 1.0 / (10.0 * t.ln());
        let i_shifts: Vec<f64> = (0..k).map(|i| (i as f64 + 1.0) * d).collect();
        let j_shifts: Vec<f64> = (0..l).map(|j| (j as f64 + 1.25) * d).collect();
        MomentConfig::new(
            ShiftSet::from_real(&i_shifts, "I")?,
            ShiftSet::from_real(&j_shifts, "J")?,
            t,
            eta,
            OmegaWeight::standard(t, b_exponent)?,
            PhiCutoff::new(0.1)?,
            policy,
        )
    }

    pub fn k_len(&self) -> f64 {
        self.t.powf(1.0 + self.eta)
    }

    pub fn delta(&self) -> f64 {
        self.i_set.delta_bound().max(self.j_set.delta_bound())
    }

    /// Advisory flags: conditions under which the asymptotic statements
    /// backing the comparison are out of range. Never enforced.
    pub fn lints(&self, theta: f64, growth_c: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.eta <= 0.0 {
            out.push("eta = 0: polynomial length K = T, outside the long regime".into());
        }
        let b_needed = (growth_c + theta * (self.eta + 1.0)) / (1.0 + growth_c);
        if self.omega.b_exponent <= b_needed {
            out.push(format!(
                "ramp exponent b = {:.3} at or below the non-triviality threshold {:.3}",
                self.omega.b_exponent, b_needed
            ));
        }
        let scale = 1.0 / self.t.ln();
        if self.delta() > 10.0 * scale {
            out.push(format!(
                "shifts exceed the 1/log T scale by more than 10x (delta = {:.4})",
                self.delta()
            ));
        }
        out
    }
}

/// Direct evaluation of the mean value, split into diagonal and
/// off-diagonal parts, with the truncation bookkeeping of the ignored
/// off-diagonal mass.
#[derive(Clone, Debug)]
pub struct DirectMoment {
    pub value: Complex64,
    pub diagonal: Complex64,
    pub off_diagonal: Complex64,
    /// bound on the mass of the pairs dropped by the log-ratio cut
    pub neglected_mass: f64,
    /// the |log(m/n)| cut actually used
    pub cut_used: f64,
    pub pair_count: u64,
}

fn sigma_tables(cfg: &MomentConfig) -> Result<(DivisorTable, DivisorTable, u64)> {
    let upper = ((1.0 + cfg.phi.rho) * cfg.k_len()).floor() as u64;
    let ti = sieve_sigma_with_budget(&cfg.i_set, upper, cfg.policy.jobs, cfg.policy.sieve_budget)?;
    let tj = sieve_sigma_with_budget(&cfg.j_set, upper, cfg.policy.jobs, cfg.policy.sieve_budget)?;
    Ok((ti, tj, upper))
}

fn diagonal_sum(cfg: &MomentConfig, ti: &DivisorTable, tj: &DivisorTable, upper: u64) -> Complex64 {
    let k = cfg.k_len();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for m in 1..=upper {
        let p = cfg.phi.eval(m as f64 / k);
        if p == 0.0 {
            continue;
        }
        let term = ti.get(m) * tj.get(m) * (p * p / m as f64);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum * cfg.omega.hat_zero()
}

/// The diagonal part: omega_hat(0) sum_m sigma_I(m) sigma_J(m)
/// phi^2(m/K) / m.
pub fn diag_direct(cfg: &MomentConfig) -> Result<Complex64> {
    let (ti, tj, upper) = sigma_tables(cfg)?;
    Ok(diagonal_sum(cfg, &ti, &tj, upper))
}

/// Direct double sum over m, n <= (1+rho) K with the off-diagonal restricted
/// to |log(m/n)| below an adaptive cut. The cut starts at the nominal
/// 10 T0^{-0.95} and widens until the enveloped mass of the dropped pairs is
/// negligible against the diagonal; the final bound is reported, never
/// silently dropped.
pub fn direct_moment(cfg: &MomentConfig) -> Result<DirectMoment> {
    let (ti, tj, upper) = sigma_tables(cfg)?;
    let diagonal = diagonal_sum(cfg, &ti, &tj, upper);
    let k = cfg.k_len();
    let quad = QuadratureSpec { tol: cfg.policy.quad_tol, ..Default::default() };
    let ratio_cap = 6.0f64.ln();
    let table = OmegaHatTable::build(&cfg.omega, ratio_cap / (2.0 * std::f64::consts::PI), &quad);

    // weighted prefix sums for the shell mass bounds
    let weight = |t: &DivisorTable, m: u64| -> f64 {
        t.get(m).norm() * cfg.phi.eval(m as f64 / k) / (m as f64).sqrt()
    };
    let mut prefix_i = vec![0.0f64; upper as usize + 1];
    let mut prefix_j = vec![0.0f64; upper as usize + 1];
    for m in 1..=upper as usize {
        prefix_i[m] = prefix_i[m - 1] + weight(&ti, m as u64);
        prefix_j[m] = prefix_j[m - 1] + weight(&tj, m as u64);
    }
    // mass of ordered pairs with log(m/n) in (lo, hi]
    let shell_mass = |lo: f64, hi: f64| -> f64 {
        let mut acc = 0.0;
        for m in 2..=upper {
            let n_hi = ((m as f64) * (-lo).exp()).min(upper as f64).floor() as usize;
            let n_lo = ((m as f64) * (-hi).exp()).ceil() as usize;
            if n_hi >= n_lo && n_lo >= 1 {
                acc += weight(&ti, m) * (prefix_j[n_hi] - prefix_j[n_lo - 1]);
                acc += weight(&tj, m) * (prefix_i[n_hi] - prefix_i[n_lo - 1]);
            }
        }
        acc
    };
    let envelope = |lo: f64, hi: f64| -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..=8 {
            let u = (lo + (hi - lo) * i as f64 / 8.0) / (2.0 * std::f64::consts::PI);
            best = best.max(table.eval(u).norm());
        }
        4.0 * best
    };
    let neglected_beyond = |cut: f64| -> f64 {
        let mut acc = 0.0;
        let mut lo = cut;
        while lo < ratio_cap {
            let hi = (lo * 2.0).min(ratio_cap);
            acc += envelope(lo, hi) * shell_mass(lo, hi);
            lo = hi;
        }
        // pairs beyond ratio_cap sit under the last envelope value
        acc + envelope(ratio_cap * 0.9, ratio_cap) * shell_mass(ratio_cap, (upper as f64).ln())
        // note: shells are crude upper bounds; the envelope already carries
        // a safety factor
    };
    let target = 1e-5 * diagonal.norm().max(1e-300);
    let mut cut = 10.0 * cfg.omega.t0.powf(-0.95);
    let mut neglected = neglected_beyond(cut);
    while neglected > target && cut < ratio_cap {
        cut = (cut * 1.3).min(ratio_cap);
        neglected = neglected_beyond(cut);
    }

    // the off-diagonal sum under the cut
    let mut off = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    let mut pair_count = 0u64;
    for n in 1..=upper {
        let pn = cfg.phi.eval(n as f64 / k);
        if pn == 0.0 {
            continue;
        }
        let m_hi = ((n as f64) * cut.exp()).min(upper as f64).floor() as u64;
        for m in (n + 1)..=m_hi {
            let pm = cfg.phi.eval(m as f64 / k);
            if pm == 0.0 {
                break;
            }
            let u = ((m as f64) / (n as f64)).ln() / (2.0 * std::f64::consts::PI);
            let what = table.eval(u);
            let scale = pm * pn / ((m as f64) * (n as f64)).sqrt();
            let term =
                (ti.get(m) * tj.get(n) * what + ti.get(n) * tj.get(m) * what.conj()) * scale;
            pair_count += 1;
            let y = term - comp;
            let t = off + y;
            comp = (t - off) - y;
            off = t;
        }
    }
    Ok(DirectMoment {
        value: diagonal + off,
        diagonal,
        off_diagonal: off,
        neglected_mass: neglected,
        cut_used: cut,
        pair_count,
    })
}

/// A contour value together with its truncation/tail estimate.
#[derive(Clone, Copy, Debug)]
pub struct ContourValue {
    pub value: Complex64,
    pub tail: f64,
}

// Fast evaluator for A(I_s, J) along a vertical contour: the sigma products
// at each prime are s-free and precomputed.
struct ZContourEvaluator {
    primes: Vec<f64>,
    h: Vec<Vec<Complex64>>,
    pair_w: Vec<Vec<Complex64>>, // p^{-1-a_i-b_j}
    tail_rel: f64,
}

impl ZContourEvaluator {
    fn new(i_set: &ShiftSet, j_set: &ShiftSet, sigma_line: f64, policy: &TruncationPolicy) -> Self {
        let sieve = Sieve::new(policy.prime_cutoff as usize);
        let delta = i_set.delta_bound() + j_set.delta_bound();
        let mut primes = Vec::new();
        let mut h = Vec::new();
        let mut pair_w = Vec::new();
        for &p in &sieve.primes {
            let p = p as u64;
            let ratio = (p as f64).powf(delta - 1.0 - sigma_line.min(0.0));
            let mut len = 4usize;
            while ratio.powi(len as i32 + 1) * (len as f64 + 2.0) > 1e-16 && len < policy.series_len
            {
                len *= 2;
            }
            let si = sigma_prime_power(i_set.shifts(), p, len);
            let sj = sigma_prime_power(j_set.shifts(), p, len);
            h.push((0..=len).map(|u| si[u] * sj[u]).collect());
            let lp = (p as f64).ln();
            let mut w = Vec::with_capacity(i_set.len() * j_set.len());
            for a in i_set.shifts() {
                for b in j_set.shifts() {
                    w.push(((-(a + b) - 1.0) * lp).exp());
                }
            }
            pair_w.push(w);
            primes.push(p as f64);
        }
        let mut me = ZContourEvaluator { primes, h, pair_w, tail_rel: 0.0 };
        // tail fit at the contour abscissa (sigma is constant on the line)
        let mut recent = Vec::new();
        let n = me.primes.len();
        for idx in n.saturating_sub(40)..n {
            let local = me.local(idx, cx(sigma_line));
            recent.push((me.primes[idx] as u64, (local - cx(1.0)).norm()));
        }
        me.tail_rel = crate::eulerprod::fit_tail_public(&recent, policy.prime_cutoff);
        me
    }

    fn local(&self, idx: usize, s: Complex64) -> Complex64 {
        let p = self.primes[idx];
        let z = (-s * p.ln()).exp(); // p^{-s}
        let v = z / p;
        // series sum_u h_u V^u by Horner
        let hs = &self.h[idx];
        let mut series = hs[hs.len() - 1];
        for u in (0..hs.len() - 1).rev() {
            series = series * v + hs[u];
        }
        let mut pairs = Complex64::new(1.0, 0.0);
        for w in &self.pair_w[idx] {
            pairs *= cx(1.0) - w * z;
        }
        pairs * series
    }

    fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for idx in 0..self.primes.len() {
            acc *= self.local(idx, s);
        }
        acc
    }
}

/// The zero-swap main term by contour quadrature:
/// omega_hat(0) (2 pi i)^{-1} int_{(c)} K^s Phi_2(s) Z_{I,J}(s) ds.
pub fn m0_contour(cfg: &MomentConfig) -> Result<ContourValue> {
    let delta = cfg.delta();
    let c = (4.0 * delta).max(0.05).min(0.5);
    let k = cfg.k_len();
    let s_max = cfg.policy.contour_height;
    let quad = QuadratureSpec { tol: cfg.policy.quad_tol, ..Default::default() };
    let a_eval = ZContourEvaluator::new(&cfg.i_set, &cfg.j_set, c, &cfg.policy);
    // pole check: contour must clear s = -a_i - b_j
    for a in cfg.i_set.shifts() {
        for b in cfg.j_set.shifts() {
            if (c + (a + b).re).abs() < 1e-4 {
                return Err(Error::PoleProximity {
                    what: "m0_contour",
                    detail: "contour abscissa touches a Z pole".into(),
                });
            }
        }
    }
    let ln_k = k.ln();
    let integrand = |s: Complex64| -> Complex64 {
        let phi2 = cfg.phi.psi2(s, &quad).expect("psi2 quadrature") / s;
        let mut zfac = Complex64::new(1.0, 0.0);
        for a in cfg.i_set.shifts() {
            for b in cfg.j_set.shifts() {
                zfac *= zeta_default(cx(1.0) + s + a + b).expect("zeta on contour");
            }
        }
        (s * ln_k).exp() * phi2 * zfac * a_eval.eval(s)
    };
    // panel width of about one K^s oscillation
    let panel = (2.0 * std::f64::consts::PI / ln_k).min(2.0);
    let n_panels = (2.0 * s_max / panel).ceil() as usize;
    let width = 2.0 * s_max / n_panels as f64;
    let mut value = Complex64::new(0.0, 0.0);
    let mut quad_err = 0.0;
    let mut panel_mass: Vec<f64> = Vec::with_capacity(n_panels);
    for i in 0..n_panels {
        let u0 = -s_max + i as f64 * width;
        let r = integrate_gk(&mut |u| integrand(Complex64::new(c, u)), u0, u0 + width, &quad);
        value += r.value;
        quad_err += r.abs_error;
        panel_mass.push(r.value.norm());
    }
    value /= 2.0 * std::f64::consts::PI;
    quad_err /= 2.0 * std::f64::consts::PI;
    // truncation remainder: geometric continuation of the observed panel
    // decay at both contour ends
    let remainder = geometric_panel_tail(&panel_mass) / (2.0 * std::f64::consts::PI);
    let what0 = cfg.omega.hat_zero();
    Ok(ContourValue {
        value: value * what0,
        tail: (remainder + quad_err + a_eval.tail_rel * value.norm()) * what0,
    })
}

// Evaluator for the one-swap correction factor
// A((I \ a_{i1}) u {-b_{i2}-s}, ((J \ b_{i2}) + s) u {-a_{i1}})
// along a vertical contour. The s-free building blocks per prime are
// precomputed; each evaluation costs O(series length) per prime.
struct PairAEvaluator {
    primes: Vec<f64>,
    ci_free: Vec<Vec<Complex64>>,
    cj_free: Vec<Vec<Complex64>>,
    /// p^{b_{i2}}, p^{a_{i1} + b_{i2} - 1}
    yb: Vec<Complex64>,
    w_ab: Vec<Complex64>,
    /// p^{a_{i1}} (appended element of the J side)
    x1: Vec<Complex64>,
    /// product of the s-free pair factors
    sfree: Vec<Complex64>,
    /// p^{-1-a_{j1}-b_{j2}} for the z-dependent pair factors
    zpairs: Vec<Vec<Complex64>>,
    tail_rel: f64,
}

impl PairAEvaluator {
    fn new(
        i_set: &ShiftSet,
        j_set: &ShiftSet,
        i1: usize,
        i2: usize,
        sigma_line: f64,
        policy: &TruncationPolicy,
    ) -> Self {
        let sieve = Sieve::new(policy.prime_cutoff as usize);
        let a1 = i_set.shifts()[i1];
        let b1 = j_set.shifts()[i2];
        let rest_i: Vec<Complex64> = i_set
            .shifts()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != i1)
            .map(|(_, &a)| a)
            .collect();
        let rest_j: Vec<Complex64> = j_set
            .shifts()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i2)
            .map(|(_, &b)| b)
            .collect();
        // growth of the appended elements at the contour abscissa
        let growth = (b1.re + sigma_line).max(a1.re).max(0.0)
            + rest_i.iter().map(|a| (-a.re).max(0.0)).fold(0.0, f64::max);
        let mut primes = Vec::new();
        let mut ci_free = Vec::new();
        let mut cj_free = Vec::new();
        let mut yb = Vec::new();
        let mut w_ab = Vec::new();
        let mut x1 = Vec::new();
        let mut sfree = Vec::new();
        let mut zpairs = Vec::new();
        for &p in &sieve.primes {
            let p = p as u64;
            let pf = p as f64;
            let lp = pf.ln();
            let ratio = pf.powf(growth - 1.0);
            let mut len = 4usize;
            while ratio.powi(len as i32 + 1) * (len as f64 + 2.0) > 1e-15
                && len < policy.series_len
            {
                len *= 2;
            }
            ci_free.push(sigma_prime_power(&rest_i, p, len));
            cj_free.push(sigma_prime_power(&rest_j, p, len));
            yb.push((b1 * lp).exp());
            w_ab.push(((a1 + b1 - 1.0) * lp).exp());
            x1.push((a1 * lp).exp());
            let mut sf = Complex64::new(1.0, 0.0);
            for a in &rest_i {
                sf *= cx(1.0) - ((a1 - a - 1.0) * lp).exp();
            }
            for b in &rest_j {
                sf *= cx(1.0) - ((b1 - b - 1.0) * lp).exp();
            }
            sfree.push(sf);
            let mut zp = Vec::new();
            for a in &rest_i {
                for b in &rest_j {
                    zp.push(((-(a + b) - 1.0) * lp).exp());
                }
            }
            zpairs.push(zp);
            primes.push(pf);
        }
        let mut me = PairAEvaluator {
            primes,
            ci_free,
            cj_free,
            yb,
            w_ab,
            x1,
            sfree,
            zpairs,
            tail_rel: 0.0,
        };
        let mut recent = Vec::new();
        let n = me.primes.len();
        for idx in n.saturating_sub(40)..n {
            let local = me.local(idx, cx(sigma_line));
            recent.push((me.primes[idx] as u64, (local - cx(1.0)).norm()));
        }
        me.tail_rel = crate::eulerprod::fit_tail_public(&recent, policy.prime_cutoff);
        me
    }

    fn local(&self, idx: usize, s: Complex64) -> Complex64 {
        let p = self.primes[idx];
        let z = (-s * p.ln()).exp(); // p^{-s}
        let len = self.ci_free[idx].len() - 1;
        // sigma over (I \ a) u {-b - s}: append ratio w1 = p^{b+s}
        let w1 = self.yb[idx] / z;
        // sigma over ((J \ b) + s) u {-a}: base z^v cj_free[v], append p^{a}
        let w2 = self.x1[idx];
        let pinv = 1.0 / p;
        let mut series = Complex64::new(0.0, 0.0);
        let mut ci_prev = Complex64::new(0.0, 0.0);
        let mut cj_prev = Complex64::new(0.0, 0.0);
        let mut zv = Complex64::new(1.0, 0.0);
        let mut pu = 1.0f64;
        for u in 0..=len {
            let ci = self.ci_free[idx][u] + w1 * ci_prev;
            let cj = self.cj_free[idx][u] * zv + w2 * cj_prev;
            series += ci * cj * pu;
            ci_prev = ci;
            cj_prev = cj;
            zv *= z;
            pu *= pinv;
        }
        let mut pairs = self.sfree[idx];
        for w in &self.zpairs[idx] {
            pairs *= cx(1.0) - w * z;
        }
        // the (-b - s, -a) pair factor: 1 - p^{a + b - 1} / z
        pairs *= cx(1.0) - self.w_ab[idx] / z;
        pairs * series
    }

    fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for idx in 0..self.primes.len() {
            acc *= self.local(idx, s);
        }
        acc
    }
}

// Continues the tail of a panelled contour integral geometrically from the
// decay observed in the outermost panels (both ends), with a safety factor.
fn geometric_panel_tail(mass: &[f64]) -> f64 {
    let n = mass.len();
    if n < 4 {
        return mass.iter().sum();
    }
    let end = |a: f64, b: f64| -> f64 {
        // b is the outermost panel, a its neighbour
        if b <= 0.0 {
            return 0.0;
        }
        let q = (b / a.max(1e-300)).min(0.9);
        b * q / (1.0 - q)
    };
    4.0 * (end(mass[1], mass[0]) + end(mass[n - 2], mass[n - 1]))
}

/// One-swap main term result with the per-pair breakdown.
#[derive(Clone, Debug)]
pub struct M1Result {
    pub value: Complex64,
    pub per_pair: Vec<((usize, usize), Complex64)>,
    pub tail: f64,
}

/// The one-swap main term:
/// sum_{i1, i2} int omega(t) (t / 2pi)^{-a-b} c_{i1,i2}
///   (2 pi i)^{-1} int_{(c)} Phi_2(s) (2 pi K / t)^s
///   [prod zeta(1 + a' + b' + s)] zeta(1 - a - b - s) A(...) ds dt.
///
/// The s-contour integrand is cached at fixed nodes, so the t-integral is a
/// plain dot product against (2 pi K / t)^{s_node}.
pub fn m1_contour(cfg: &MomentConfig) -> Result<M1Result> {
    let delta = cfg.delta();
    let c = (4.0 * delta).max(0.04);
    let k_len = cfg.k_len();
    let two_pi = 2.0 * std::f64::consts::PI;
    let quad = QuadratureSpec { tol: cfg.policy.quad_tol, ..Default::default() };
    let s_max = cfg.policy.contour_height * 0.6;
    // fixed contour nodes: resolve the oscillation of (2 pi K / t)^{iu}
    let osc = (two_pi * k_len / cfg.t).ln().max(1.0);
    let panel = (two_pi / osc / 3.0).min(1.0);
    let n_panels = (2.0 * s_max / panel).ceil() as usize;
    let width = 2.0 * s_max / n_panels as f64;
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for i in 0..n_panels {
        let u0 = -s_max + i as f64 * width;
        nodes.extend(kronrod15_rule(u0, u0 + width));
    }

    let (lo_t, hi_t) = cfg.omega.support();
    let pairs: Vec<(usize, usize)> = (0..cfg.i_set.len())
        .flat_map(|i1| (0..cfg.j_set.len()).map(move |i2| (i1, i2)))
        .collect();
    let results: Vec<Result<((usize, usize), Complex64, f64)>> =
        crate::par::map_indexed(pairs.len(), cfg.policy.jobs, |pi| {
            let (i1, i2) = pairs[pi];
            let a1 = cfg.i_set.shifts()[i1];
            let b1 = cfg.j_set.shifts()[i2];
            let constant = shift_constant(&cfg.i_set, &cfg.j_set, i1, i2)?;
            let a_eval = PairAEvaluator::new(&cfg.i_set, &cfg.j_set, i1, i2, c, &cfg.policy);
            // cache the t-independent integrand at the contour nodes
            let mut cached: Vec<Complex64> = Vec::with_capacity(nodes.len());
            for &(u, w) in &nodes {
                let s = Complex64::new(c, u);
                let phi2 = cfg.phi.psi2(s, &quad)? / s;
                let mut zfac = Complex64::new(1.0, 0.0);
                for (j1, a) in cfg.i_set.shifts().iter().enumerate() {
                    for (j2, b) in cfg.j_set.shifts().iter().enumerate() {
                        if j1 != i1 && j2 != i2 {
                            zfac *= zeta_default(cx(1.0) + a + b + s)?;
                        }
                    }
                }
                let zlow = zeta_default(cx(1.0) - a1 - b1 - s)?;
                let a_val = a_eval.eval(s);
                cached.push(phi2 * zfac * zlow * a_val * w);
            }
            let panel_mass: Vec<f64> = cached
                .chunks(15)
                .map(|chunk| chunk.iter().map(|v| v.norm()).sum())
                .collect();
            // inner(t) = (1/2pi) sum_j cached_j exp(s_j ln(2 pi K / t))
            let inner = |t: f64| -> Complex64 {
                let l = (two_pi * k_len / t).ln();
                let mut acc = Complex64::new(0.0, 0.0);
                for (&(u, _), cval) in nodes.iter().zip(cached.iter()) {
                    acc += cval * (Complex64::new(c, u) * l).exp();
                }
                acc / two_pi
            };
            let mut outer = |t: f64| -> Complex64 {
                let w = cfg.omega.eval(t);
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let phase = (-(a1 + b1) * (t / two_pi).ln()).exp();
                inner(t) * w * phase
            };
            let t_quad = QuadratureSpec { tol: 1e-8, max_depth: 18, ..Default::default() };
            let knots = [lo_t + cfg.omega.t0, hi_t - cfg.omega.t0];
            let r = integrate_gk_with_knots(&mut outer, lo_t, hi_t, &knots, &t_quad);
            let term = constant * r.value;
            // contour truncation remainder for this pair, uniform in t:
            // |(2 pi K / t)^s| = e^{c L(t)} on the line, so the observed
            // panel decay continues geometrically
            let l_max = (two_pi * k_len / lo_t).ln();
            let inner_tail = geometric_panel_tail(&panel_mass) * (c * l_max).exp() / two_pi;
            let t_mass = cfg.omega.hat_zero() * (lo_t / two_pi).powf(-(a1.re + b1.re));
            let remainder = inner_tail * t_mass * constant.norm();
            let pair_tail =
                remainder + r.abs_error * constant.norm() + a_eval.tail_rel * term.norm();
            Ok(((i1, i2), term, pair_tail))
        });
    let mut value = Complex64::new(0.0, 0.0);
    let mut per_pair = Vec::new();
    let mut tail = 0.0f64;
    for r in results {
        let (pair, term, pair_tail) = r?;
        value += term;
        tail += pair_tail;
        per_pair.push((pair, term));
    }
    Ok(M1Result { value, per_pair, tail })
}

/// Full report for one configuration.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub t: f64,
    pub eta: f64,
    pub direct: DirectMoment,
    pub diag_direct: Complex64,
    pub m0: ContourValue,
    pub m1: M1Result,
    pub residual: Complex64,
    pub lints: Vec<String>,
}

impl MomentReport {
    pub fn relative_residual(&self) -> f64 {
        self.residual.norm() / self.direct.value.norm().max(1e-300)
    }

    /// Combined self-reported error budget (truncation tails, neglected
    /// off-diagonal mass, contour remainders), relative to the direct value.
    pub fn error_budget(&self) -> f64 {
        (self.m0.tail + self.m1.tail + self.direct.neglected_mass)
            / self.direct.value.norm().max(1e-300)
    }
}

/// Direct vs (M0 + M1) for one configuration.
pub fn moment_report(cfg: &MomentConfig) -> Result<MomentReport> {
    let direct = direct_moment(cfg)?;
    let m0 = m0_contour(cfg)?;
    let m1 = m1_contour(cfg)?;
    let residual = direct.value - (m0.value + m1.value);
    let mut lints = cfg.lints(0.75, 1.25);
    if direct.pair_count > 1_000_000 {
        lints.push(format!(
            "off-diagonal cut admits {} neighbor pairs (> 1e6)",
            direct.pair_count
        ));
    }
    Ok(MomentReport {
        t: cfg.t,
        eta: cfg.eta,
        diag_direct: direct.diagonal,
        residual,
        lints,
        direct,
        m0,
        m1,
    })
}

/// Reports across a grid of configurations (independent work items).
pub fn consistency_report(cfgs: &[MomentConfig], jobs: usize) -> Result<Vec<MomentReport>> {
    let out = crate::par::map_indexed(cfgs.len(), jobs, |i| moment_report(&cfgs[i]));
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerprod::script_a;

    fn small_cfg(t: f64, eta: f64) -> MomentConfig {
        MomentConfig::standard_experiment(
            2,
            2,
            t,
            eta,
            0.8,
            TruncationPolicy::default().with_prime_cutoff(3000),
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let bad = ShiftSet::from_shifts(
            vec![Complex64::new(0.01, 0.0), Complex64::new(0.01, 0.0)],
            "dup",
        )
        .unwrap();
        let ok = ShiftSet::from_real(&[0.01, 0.02], "ok").unwrap();
        assert!(matches!(
            MomentConfig::new(
                bad,
                ok.clone(),
                500.0,
                0.2,
                OmegaWeight::standard(500.0, 0.8).unwrap(),
                PhiCutoff::new(0.1).unwrap(),
                TruncationPolicy::default(),
            ),
            Err(Error::CoincidentShifts { .. })
        ));
        let cfg = small_cfg(500.0, 0.2);
        assert!((cfg.k_len() - 500.0f64.powf(1.2)).abs() < 1e-9);
    }

    #[test]
    fn eta_zero_flagged_not_rejected() {
        let cfg = small_cfg(500.0, 0.0);
        let lints = cfg.lints(0.75, 1.25);
        assert!(lints.iter().any(|l| l.contains("eta = 0")));
        // still well-defined
        let d = diag_direct(&cfg).unwrap();
        assert!(d.norm() > 0.0);
    }

    #[test]
    fn direct_moment_matches_full_double_sum_oracle() {
        // T = 500, near-zero shifts: compare against the unrestricted double
        // sum with compensated accumulation over the same tables
        let cfg = small_cfg(500.0, 0.2);
        let got = direct_moment(&cfg).unwrap();
        let (ti, tj, upper) = sigma_tables(&cfg).unwrap();
        let quad = QuadratureSpec { tol: 1e-11, ..Default::default() };
        let table = OmegaHatTable::build(
            &cfg.omega,
            (upper as f64).ln() / (2.0 * std::f64::consts::PI),
            &quad,
        );
        let k = cfg.k_len();
        let mut oracle = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for m in 1..=upper {
            for n in 1..=upper {
                let p = cfg.phi.eval(m as f64 / k) * cfg.phi.eval(n as f64 / k);
                if p == 0.0 {
                    continue;
                }
                let what = if m == n {
                    Complex64::new(cfg.omega.hat_zero(), 0.0)
                } else {
                    table.eval(((m as f64) / (n as f64)).ln() / (2.0 * std::f64::consts::PI))
                };
                let term = ti.get(m) * tj.get(n) * what * p / ((m * n) as f64).sqrt();
                let y = term - comp;
                let t = oracle + y;
                comp = (t - oracle) - y;
                oracle = t;
            }
        }
        let gap = (got.value - oracle).norm();
        assert!(
            gap <= got.neglected_mass.max(1e-6 * oracle.norm()),
            "gap {gap} vs neglected {}",
            got.neglected_mass
        );
        assert!(got.neglected_mass < 0.02 * oracle.norm());
    }

    #[test]
    fn direct_moment_split_is_structural() {
        // value = diagonal + off-diagonal exactly as accumulated, and at
        // eta = 0 the off-diagonal stays a modest fraction of the diagonal.
        // (With T0 <= T <= K every nearest-neighbor pair has
        // |log(m/n)| T0 << 1, so a configuration where no off-diagonal pair
        // survives the window does not exist; the split identity is the
        // testable content.)
        let cfg = small_cfg(500.0, 0.0);
        let d = direct_moment(&cfg).unwrap();
        assert_eq!(d.value, d.diagonal + d.off_diagonal);
        assert!(d.off_diagonal.norm() < 0.5 * d.diagonal.norm());
        assert!(d.off_diagonal.norm() > 0.0);
    }

    #[test]
    fn m0_matches_diagonal_at_modest_t() {
        let cfg = MomentConfig::standard_experiment(
            2,
            2,
            500.0,
            0.2,
            0.8,
            TruncationPolicy::default().with_prime_cutoff(30_000),
        )
        .unwrap();
        let diag = diag_direct(&cfg).unwrap();
        let m0 = m0_contour(&cfg).unwrap();
        let rel = (diag - m0.value).norm() / diag.norm();
        assert!(rel < 1e-3, "relative gap {rel}, tail {}", m0.tail);
    }

    #[test]
    fn diagonal_growth_trend_with_k() {
        // doubling K grows the diagonal consistent with a (log K)^{kl} trend
        let d_at = |t: f64| {
            let cfg = small_cfg(t, 0.2);
            (diag_direct(&cfg).unwrap().norm(), cfg.k_len())
        };
        let (d1, k1) = d_at(400.0);
        let (d2, k2) = d_at(800.0);
        // normalize out the omega-hat(0) ~ T factor
        let g1 = d1 / 400.0;
        let g2 = d2 / 800.0;
        let predicted = (k2.ln() / k1.ln()).powi(4);
        let observed = g2 / g1;
        assert!(
            observed > 0.5 * predicted && observed < 2.0 * predicted,
            "observed {observed} predicted {predicted}"
        );
    }

    #[test]
    fn pair_a_evaluator_matches_generic_product() {
        // the specialized one-swap correction factor equals the generic
        // script-A of the swapped multisets, over the same prime cutoff
        let i_set = ShiftSet::from_real(&[0.012, 0.026], "i").unwrap();
        let j_set = ShiftSet::from_real(&[0.016, 0.031], "j").unwrap();
        let policy = TruncationPolicy::default().with_prime_cutoff(2000);
        for (i1, i2) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
            let pe = PairAEvaluator::new(&i_set, &j_set, i1, i2, 0.1, &policy);
            for s in [cx(0.1), Complex64::new(0.1, 4.0), Complex64::new(0.1, -17.0)] {
                let fast = pe.eval(s);
                let a1 = i_set.shifts()[i1];
                let b1 = j_set.shifts()[i2];
                let mut u_shifts: Vec<Complex64> = i_set
                    .shifts()
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != i1)
                    .map(|(_, &a)| a)
                    .collect();
                u_shifts.push(-b1 - s);
                let mut v_shifts: Vec<Complex64> = j_set
                    .shifts()
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i2)
                    .map(|(_, &b)| b + s)
                    .collect();
                v_shifts.push(-a1);
                let u = ShiftSet::from_shifts(u_shifts, "u").unwrap();
                let v = ShiftSet::from_shifts(v_shifts, "v").unwrap();
                let generic = script_a(&u, &v, &policy).unwrap();
                assert!(
                    (fast - generic.value).norm() < 1e-9 * generic.value.norm().max(1.0),
                    "i1={i1} i2={i2} s={s}: {fast} vs {}",
                    generic.value
                );
            }
        }
    }

    #[test]
    fn pair_a_evaluator_symmetric_under_set_exchange() {
        // the one-swap correction factor is invariant under
        // (I, i1) <-> (J, i2); both routes equal the same local product
        let i_set = ShiftSet::from_real(&[0.012, 0.026], "i").unwrap();
        let j_set = ShiftSet::from_real(&[0.016, 0.031], "j").unwrap();
        let policy = TruncationPolicy::default().with_prime_cutoff(1500);
        let a = PairAEvaluator::new(&i_set, &j_set, 0, 1, 0.1, &policy);
        let b = PairAEvaluator::new(&j_set, &i_set, 1, 0, 0.1, &policy);
        for s in [cx(0.1), Complex64::new(0.1, 9.0)] {
            let va = a.eval(s);
            let vb = b.eval(s);
            assert!((va - vb).norm() < 1e-11 * va.norm().max(1.0), "s={s}: {va} vs {vb}");
        }
    }

    #[test]
    fn m1_pair_structure() {
        let cfg = small_cfg(300.0, 0.2);
        let m1 = m1_contour(&cfg).unwrap();
        assert_eq!(m1.per_pair.len(), 4);
        let sum: Complex64 = m1.per_pair.iter().map(|&(_, v)| v).sum();
        assert!((sum - m1.value).norm() < 1e-9 * m1.value.norm().max(1e-12));
    }

    #[test]
    fn m1_k1l1_single_term() {
        let i_set = ShiftSet::from_real(&[0.02], "i").unwrap();
        let j_set = ShiftSet::from_real(&[0.03], "j").unwrap();
        let cfg = MomentConfig::new(
            i_set,
            j_set,
            300.0,
            0.2,
            OmegaWeight::standard(300.0, 0.8).unwrap(),
            PhiCutoff::new(0.1).unwrap(),
            TruncationPolicy::default().with_prime_cutoff(1000),
        )
        .unwrap();
        let m1 = m1_contour(&cfg).unwrap();
        assert_eq!(m1.per_pair.len(), 1);
        // the swap correction factor is identically 1 for k = l = 1
        let pe = PairAEvaluator::new(&cfg.i_set, &cfg.j_set, 0, 0, 0.1, &cfg.policy);
        for s in [cx(0.1), Complex64::new(0.1, 7.0)] {
            assert!((pe.eval(s) - cx(1.0)).norm() < 1e-10, "s = {s}");
        }
    }

    #[test]
    fn consistency_report_grid() {
        let cfgs = vec![small_cfg(200.0, 0.2), small_cfg(280.0, 0.2)];
        let reports = consistency_report(&cfgs, 2).unwrap();
        assert_eq!(reports.len(), 2);
        for (rep, cfg) in reports.iter().zip(cfgs.iter()) {
            assert_eq!(rep.t, cfg.t);
            // residual is exactly direct - (m0 + m1) as computed
            let expect = rep.direct.value - (rep.m0.value + rep.m1.value);
            assert_eq!(rep.residual, expect);
            assert!(rep.relative_residual() < 0.2, "T={}: {}", rep.t, rep.relative_residual());
        }
    }

    #[test]
    fn moment_report_worker_count_invariant() {
        // identical numbers regardless of the worker cap
        let mk = |jobs: usize| {
            let mut cfg = small_cfg(200.0, 0.2);
            cfg.policy = cfg.policy.with_jobs(jobs);
            moment_report(&cfg).unwrap()
        };
        let a = mk(1);
        let b = mk(3);
        assert_eq!(a.direct.value, b.direct.value);
        assert_eq!(a.m0.value, b.m0.value);
        assert_eq!(a.m1.value, b.m1.value);
        assert_eq!(a.residual, b.residual);
    }

    #[test]
    fn m1_contour_height_self_consistency() {
        // raising the contour height moves M1 by less than its reported tail
        let mk = |height: f64| {
            let mut cfg = small_cfg(300.0, 0.2);
            cfg.policy.contour_height = height;
            m1_contour(&cfg).unwrap()
        };
        let lo = mk(60.0);
        let hi = mk(120.0);
        assert!(
            (lo.value - hi.value).norm() <= lo.tail.max(1e-12),
            "moved {} vs tail {}",
            (lo.value - hi.value).norm(),
            lo.tail
        );
    }
}
