//! Complex special functions: Riemann zeta away from the critical-strip
//! interior heights we never visit, Gamma / log-Gamma, and the Gamma-quotient
//! asymptotics used by the mean-value integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Evaluation controls for zeta.
#[derive(Clone, Copy, Debug)]
pub struct EvalControl {
    pub target_tol: f64,
    pub max_terms: usize,
    /// highest Bernoulli index used in the Euler-Maclaurin correction (even)
    pub bernoulli_order: usize,
}

impl EvalControl {
    pub fn new(target_tol: f64, max_terms: usize, bernoulli_order: usize) -> Result<Self> {
        if target_tol < 1e-14 {
            return Err(Error::Config("zeta target_tol must be >= 1e-14".into()));
        }
        if bernoulli_order % 2 != 0 || bernoulli_order > 30 || bernoulli_order < 2 {
            return Err(Error::Config("bernoulli_order must be even and in [2, 30]".into()));
        }
        Ok(EvalControl { target_tol, max_terms, bernoulli_order })
    }
}

impl Default for EvalControl {
    fn default() -> Self {
        EvalControl { target_tol: 1e-13, max_terms: 2_000_000, bernoulli_order: 12 }
    }
}

/// B_2, B_4, ..., B_30.
pub const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// Desk-scale cap on |Im s| for zeta.
pub const ZETA_HEIGHT_CAP: f64 = 1.0e6;
/// Callers must stay at least this far from the pole at s = 1.
pub const ZETA_POLE_MARGIN: f64 = 1e-6;

/// Riemann zeta by Euler-Maclaurin summation.
///
/// The cutoff is max(|Im s| / 2, 30) (capped by `ctl.max_terms`) and the
/// correction uses Bernoulli numbers up to `ctl.bernoulli_order`. The error
/// is estimated by the first omitted correction term; if that estimate
/// misses `ctl.target_tol`, an error is returned rather than a bad value.
pub fn zeta(s: Complex64, ctl: &EvalControl) -> Result<Complex64> {
    if (s - Complex64::new(1.0, 0.0)).norm() < ZETA_POLE_MARGIN {
        return Err(Error::Pole { what: "zeta", at: "s = 1".into() });
    }
    if s.im.abs() > ZETA_HEIGHT_CAP {
        return Err(Error::Regime {
            what: "zeta",
            detail: format!("|Im s| = {:.3e} above height cap", s.im.abs()),
        });
    }
    let nu = ctl.bernoulli_order / 2;
    // remainder model: |B_{2nu+2}/(2nu+2)! * s(s+1)...(s+2nu) * N^{-s-2nu-1}|
    // inflated by the standard |s + 2nu + 1| / (sigma + 2nu + 1)
    let estimate_for = |n: usize| -> f64 {
        let nf = n as f64;
        let mut rising_norm = 0.0f64;
        for j in 0..=(2 * nu) {
            rising_norm += (s + j as f64).norm().ln();
        }
        let mut factorial_ln = 0.0f64;
        for j in 2..=(2 * nu + 2) {
            factorial_ln += (j as f64).ln();
        }
        let denom = s.re + 2.0 * nu as f64 + 1.0;
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        let ln_term = BERNOULLI_EVEN[nu].abs().ln() - factorial_ln + rising_norm
            + (-s.re - 2.0 * nu as f64 - 1.0) * nf.ln();
        ln_term.exp() * (s + 2.0 * nu as f64 + 1.0).norm() / denom
    };
    // the floor max(|Im s|/2, 30) is grown until the estimate meets the target
    let mut n = ((s.im.abs() / 2.0).ceil() as usize).max(30);
    let mut estimate = estimate_for(n);
    while estimate > ctl.target_tol && n < ctl.max_terms {
        n = (n + n / 2 + 1).min(ctl.max_terms);
        estimate = estimate_for(n);
    }
    if estimate > ctl.target_tol {
        return Err(Error::AccuracyNotReached {
            what: "zeta",
            achieved: estimate,
            requested: ctl.target_tol,
        });
    }

    let nf = n as f64;
    let mut head = Complex64::new(0.0, 0.0);
    for k in 1..n {
        head += (-s * (k as f64).ln()).exp();
    }
    let n_pow = (-s * nf.ln()).exp(); // N^{-s}
    let mut value = head + n_pow * nf / (s - 1.0) + 0.5 * n_pow;

    // correction terms B_{2k}/(2k)! * s (s+1) ... (s+2k-2) * N^{1-s-2k}
    let mut rising = s; // s (s+1) ... (s + 2k - 2), starts at k = 1
    let mut factorial = 2.0f64; // (2k)!
    for k in 1..=nu {
        value += n_pow * BERNOULLI_EVEN[k - 1] / factorial * rising * nf.powi(1 - 2 * k as i32);
        let two_k = 2.0 * k as f64;
        rising = rising * (s + two_k - 1.0) * (s + two_k);
        factorial *= (two_k + 1.0) * (two_k + 2.0);
    }
    Ok(value)
}

/// Zeta with the default controls.
pub fn zeta_default(s: Complex64) -> Result<Complex64> {
    zeta(s, &EvalControl::default())
}

const LOG_TWO_PI_HALF: f64 = 0.9189385332046727; // ln(2 pi) / 2
const STIRLING_RADIUS: f64 = 24.0;

fn log_gamma_stirling(z: Complex64) -> Complex64 {
    // valid for |z| >= STIRLING_RADIUS, Re z > 0
    let mut acc = (z - 0.5) * z.ln() - z + LOG_TWO_PI_HALF;
    let z2 = z * z;
    let mut zp = z;
    for k in 1..=8usize {
        let tk = 2.0 * k as f64;
        acc += BERNOULLI_EVEN[k - 1] / (tk * (tk - 1.0)) / zp;
        zp *= z2;
    }
    acc
}

/// log sin(pi z), stable for large |Im z|; value correct up to 2 pi i.
fn log_sin_pi(z: Complex64) -> Complex64 {
    let pi = std::f64::consts::PI;
    let w = z * pi;
    let iw = Complex64::new(0.0, 1.0) * w;
    let half_log2 = (0.5f64).ln();
    if z.im >= 0.0 {
        // sin w = e^{-iw} (1 - e^{2iw}) * (i/2), |e^{2iw}| <= 1
        (-iw) + (Complex64::new(1.0, 0.0) - (2.0 * iw).exp()).ln()
            + Complex64::new(half_log2, pi / 2.0)
    } else {
        // sin w = e^{iw} (1 - e^{-2iw}) * (-i/2), |e^{-2iw}| <= 1
        iw + (Complex64::new(1.0, 0.0) - (-2.0 * iw).exp()).ln()
            + Complex64::new(half_log2, -pi / 2.0)
    }
}

fn near_nonpositive_integer(z: Complex64) -> Option<String> {
    if z.im.abs() < 1e-9 && z.re < 0.5 {
        let k = z.re.round();
        if k <= 0.0 && (z.re - k).abs() < 1e-9 {
            return Some(format!("s = {k}"));
        }
    }
    None
}

/// Log-Gamma.
///
/// Principal-branch values for Re s >= 0 (Stirling plus the recurrence,
/// both branch-exact there). For Re s < 0 the reflection formula is used;
/// the imaginary part is then only pinned modulo 2 pi, which every consumer
/// in this crate exponentiates away.
pub fn log_gamma(s: Complex64) -> Result<Complex64> {
    if let Some(at) = near_nonpositive_integer(s) {
        return Err(Error::Pole { what: "log_gamma", at });
    }
    if s.re >= 0.0 {
        if s.norm() >= STIRLING_RADIUS {
            return Ok(log_gamma_stirling(s));
        }
        // shift right until Stirling applies: logG(z) = logG(z+m) - sum log(z+j)
        let mut shift = Complex64::new(0.0, 0.0);
        let mut z = s;
        while z.norm() < STIRLING_RADIUS {
            shift += z.ln();
            z += 1.0;
        }
        Ok(log_gamma_stirling(z) - shift)
    } else {
        // reflection: logG(s) = ln pi - log sin(pi s) - logG(1 - s)
        let pi = std::f64::consts::PI;
        Ok(Complex64::new(pi.ln(), 0.0) - log_sin_pi(s) - log_gamma(1.0 - s)?)
    }
}

/// Gamma function via exp(log_gamma); poles at the nonpositive integers are
/// reported as errors.
pub fn gamma(s: Complex64) -> Result<Complex64> {
    if let Some(at) = near_nonpositive_integer(s) {
        return Err(Error::Pole { what: "gamma", at });
    }
    Ok(log_gamma(s)?.exp())
}

/// The quotient Gamma(1/2 - b - s2 + sign*it) / Gamma(1/2 + a + s1 + sign*it),
/// computed stably as exp(log_gamma - log_gamma).
pub fn gamma_ratio(
    s1: Complex64,
    s2: Complex64,
    a: Complex64,
    b: Complex64,
    t: f64,
    sign: i32,
) -> Result<Complex64> {
    assert!(t >= 2.0, "gamma_ratio expects t >= 2");
    let it = Complex64::new(0.0, sign.signum() as f64 * t);
    let num = Complex64::new(0.5, 0.0) - b - s2 + it;
    let den = Complex64::new(0.5, 0.0) + a + s1 + it;
    Ok((log_gamma(num)? - log_gamma(den)?).exp())
}

/// Leading-order model of `gamma_ratio` for t large:
/// t^{-(s1+s2+a+b)} exp(-sign * i pi (s1+s2+a+b) / 2).
pub fn gamma_ratio_asymptotic(
    s1: Complex64,
    s2: Complex64,
    a: Complex64,
    b: Complex64,
    t: f64,
    sign: i32,
) -> Complex64 {
    let w = s1 + s2 + a + b;
    let phase = Complex64::new(0.0, -sign.signum() as f64 * std::f64::consts::FRAC_PI_2) * w;
    (-w * t.ln()).exp() * phase.exp()
}
