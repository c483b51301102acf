//! Numerical integration: adaptive Gauss-Kronrod and tanh-sinh rules for
//! complex-valued integrands on finite intervals, plus a vertical-line
//! contour helper.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which base rule the adaptive driver refines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadScheme {
    AdaptiveGauss,
    TanhSinh,
}

/// Quadrature controls: scheme, subdivision depth and absolute/relative
/// tolerance target.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub scheme: QuadScheme,
    pub max_depth: usize,
    pub tol: f64,
}

impl QuadratureSpec {
    pub fn new(scheme: QuadScheme, max_depth: usize, tol: f64) -> Result<Self> {
        if tol < 1e-13 {
            return Err(Error::Config(format!("quadrature tol {tol:.3e} below 1e-13 floor")));
        }
        Ok(QuadratureSpec { scheme, max_depth, tol })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { scheme: QuadScheme::AdaptiveGauss, max_depth: 40, tol: 1e-11 }
    }
}

/// Integral value with its error estimate.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_error: f64,
    pub evals: usize,
}

// 15-point Kronrod extension of 7-point Gauss (QUADPACK qk15 constants).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn kronrod15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_g = f_center * WG[3];
    let mut res_k = f_center * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        res_k += sum * WGK[j];
        if j % 2 == 1 {
            // XGK[1], XGK[3], XGK[5] are the Gauss-7 nodes.
            res_g += sum * WG[j / 2];
        }
    }
    let err = ((res_k - res_g) * half).norm();
    (res_k * half, err)
}

/// The 15-point Kronrod rule on [a, b] as explicit (node, weight) pairs,
/// for callers that need a fixed rule they can reuse across integrands.
pub fn kronrod15_rule(a: f64, b: f64) -> Vec<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = Vec::with_capacity(15);
    for j in 0..7 {
        out.push((center - half * XGK[j], WGK[j] * half));
        out.push((center + half * XGK[j], WGK[j] * half));
    }
    out.push((center, WGK[7] * half));
    out
}

/// Adaptive Gauss-Kronrod on [a, b]. The error target is
/// `tol * max(1, |integral|)`; the worst panel is split first.
pub fn integrate_gk<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> QuadResult {
    integrate_gk_with_knots(f, a, b, &[], spec)
}

/// Adaptive Gauss-Kronrod with forced initial subdivision points (knots
/// inside (a, b) where the integrand loses smoothness).
pub fn integrate_gk_with_knots<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    knots: &[f64],
    spec: &QuadratureSpec,
) -> QuadResult {
    if a == b {
        return QuadResult { value: Complex64::new(0.0, 0.0), abs_error: 0.0, evals: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = vec![lo];
    for &k in knots {
        if k > lo && k < hi {
            cuts.push(k);
        }
    }
    cuts.push(hi);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    struct Panel {
        a: f64,
        b: f64,
        value: Complex64,
        err: f64,
    }
    let mut evals = 0usize;
    let mut panels: Vec<Panel> = Vec::new();
    for w in cuts.windows(2) {
        let (v, e) = kronrod15(f, w[0], w[1]);
        evals += 15;
        panels.push(Panel { a: w[0], b: w[1], value: v, err: e });
    }
    for _ in 0..(1usize << spec.max_depth.min(24)) {
        let total: Complex64 = panels.iter().map(|p| p.value).sum();
        let toterr: f64 = panels.iter().map(|p| p.err).sum();
        if toterr <= spec.tol * total.norm().max(1.0) {
            break;
        }
        // split the worst panel
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .unwrap();
        let p = panels.swap_remove(worst);
        if (p.b - p.a) < 1e-14 * (hi - lo).abs() {
            // cannot refine further; keep the panel and stop
            panels.push(p);
            break;
        }
        let mid = 0.5 * (p.a + p.b);
        let (v1, e1) = kronrod15(f, p.a, mid);
        let (v2, e2) = kronrod15(f, mid, p.b);
        evals += 30;
        panels.push(Panel { a: p.a, b: mid, value: v1, err: e1 });
        panels.push(Panel { a: mid, b: p.b, value: v2, err: e2 });
    }
    let value: Complex64 = panels.iter().map(|p| p.value).sum();
    let abs_error: f64 = panels.iter().map(|p| p.err).sum();
    QuadResult { value: value * sign, abs_error, evals }
}

/// Tanh-sinh (double exponential) rule on [a, b]; good for endpoint
/// singularities in derivatives. Level doubling until the change is below
/// tolerance or `max_depth` levels are spent.
pub fn integrate_tanh_sinh<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> QuadResult {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut h = 1.0f64;
    let g = |t: f64| (0.5 * std::f64::consts::PI * t.sinh()).tanh();
    let gp = |t: f64| {
        let u = 0.5 * std::f64::consts::PI * t.sinh();
        0.5 * std::f64::consts::PI * t.cosh() / u.cosh().powi(2)
    };
    let t_max = 3.8; // g(3.8) is within ~1e-16 of 1
    let eval_level = |f: &mut F, h: f64, only_odd: bool| -> (Complex64, usize) {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut n = 0usize;
        let mut k = if only_odd { 1i64 } else { 0i64 };
        let step = if only_odd { 2 } else { 1 };
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            let w = gp(t);
            let x1 = c + half * g(t);
            let x2 = c - half * g(t);
            if k == 0 {
                acc += f(x1) * w;
                n += 1;
            } else {
                acc += (f(x1) + f(x2)) * w;
                n += 2;
            }
            k += step;
        }
        (acc, n)
    };
    let (mut sum, mut evals) = eval_level(f, h, false);
    let mut value = sum * h * half;
    let mut err = value.norm();
    for _ in 0..spec.max_depth.min(12) {
        h *= 0.5;
        let (odd, n) = eval_level(f, h, true);
        evals += n;
        sum += odd;
        let new_value = sum * h * half;
        err = (new_value - value).norm();
        value = new_value;
        if err <= spec.tol * value.norm().max(1.0) {
            break;
        }
    }
    QuadResult { value, abs_error: err, evals }
}

/// Dispatches on the configured scheme.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> QuadResult {
    match spec.scheme {
        QuadScheme::AdaptiveGauss => integrate_gk(f, a, b, spec),
        QuadScheme::TanhSinh => integrate_tanh_sinh(f, a, b, spec),
    }
}

/// Checked variant: fails if the final error estimate misses the tolerance
/// by more than a factor of 32 relative to the result size.
pub fn integrate_checked<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    what: &'static str,
) -> Result<QuadResult> {
    let r = integrate(f, a, b, spec);
    if r.abs_error > 32.0 * spec.tol * r.value.norm().max(1.0) {
        return Err(Error::QuadratureFailure { what, estimate: r.abs_error });
    }
    Ok(r)
}

/// Truncated vertical-line integral (1/2pi i) int_{c-iS}^{c+iS} f(s) ds,
/// evaluated panel by panel so oscillation in Im(s) is resolved.
///
/// `panel` is the initial panel width along the imaginary direction; each
/// panel then refines adaptively.
pub fn contour_line<F: FnMut(Complex64) -> Complex64>(
    f: &mut F,
    c: f64,
    s_max: f64,
    panel: f64,
    spec: &QuadratureSpec,
) -> QuadResult {
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut evals = 0usize;
    let n_panels = (2.0 * s_max / panel).ceil() as usize;
    let width = 2.0 * s_max / n_panels as f64;
    for i in 0..n_panels {
        let u0 = -s_max + i as f64 * width;
        let u1 = u0 + width;
        let mut g = |u: f64| f(Complex64::new(c, u));
        let r = integrate_gk(&mut g, u0, u1, spec);
        value += r.value;
        err += r.abs_error;
        evals += r.evals;
    }
    // ds = i du and the 1/(2 pi i) normalization leave a real 1/(2 pi).
    QuadResult {
        value: value / (2.0 * std::f64::consts::PI),
        abs_error: err / (2.0 * std::f64::consts::PI),
        evals,
    }
}
