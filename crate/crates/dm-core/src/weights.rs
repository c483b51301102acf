//! Smooth cutoff weights and their transforms: the time window omega and its
//! Fourier transform, the Dirichlet-polynomial cutoff phi with its Mellin
//! transforms Phi / Psi / Phi_2, and the dyadic partition of unity W_0.
//!
//! All three weights are built from one C-infinity smoothstep
//! S(x) = sig(x) / (sig(x) + sig(1-x)) with sig(x) = exp(-1/x), which has
//! verifiable derivative bounds at every scale.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_gk, QuadResult, QuadratureSpec};

fn sig(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn sig_deriv(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp() / (x * x)
    }
}

/// Smoothstep: 0 for x <= 0, 1 for x >= 1, strictly increasing in between,
/// with S(x) + S(1 - x) = 1.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = sig(x);
        let b = sig(1.0 - x);
        a / (a + b)
    }
}

/// First derivative of the smoothstep.
pub fn smoothstep_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let a = sig(x);
        let b = sig(1.0 - x);
        let ap = sig_deriv(x);
        let bp = sig_deriv(1.0 - x);
        (ap * b + a * bp) / ((a + b) * (a + b))
    }
}

/// The smooth time window: supported on [c1 T, c2 T], ramps of width T0 at
/// both ends, identically 1 in between when the ramps do not overlap.
#[derive(Clone, Debug)]
pub struct OmegaWeight {
    pub t: f64,
    pub t0: f64,
    pub c1: f64,
    pub c2: f64,
    pub b_exponent: f64,
}

impl OmegaWeight {
    pub fn new(t: f64, t0: f64, c1: f64, c2: f64, b_exponent: f64) -> Result<Self> {
        if !(t > 0.0) || !(t0 > 0.0) {
            return Err(Error::Config("omega weight needs T > 0 and T0 > 0".into()));
        }
        if !(0.0 < c1 && c1 < c2) {
            return Err(Error::Config("omega weight needs 0 < c1 < c2".into()));
        }
        if !(0.0 < b_exponent && b_exponent <= 1.0) {
            return Err(Error::Config("omega weight needs b in (0, 1]".into()));
        }
        if t0 < t.powf(b_exponent) * (1.0 - 1e-9) || t0 > t * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "omega weight needs T^b <= T0 <= T (T0 = {t0}, T^b = {})",
                t.powf(b_exponent)
            )));
        }
        if 2.0 * t0 > (c2 - c1) * t {
            return Err(Error::Config(
                "omega ramps overlap: need 2 T0 <= (c2 - c1) T".into(),
            ));
        }
        Ok(OmegaWeight { t, t0, c1, c2, b_exponent })
    }

    /// c1 = 1, c2 = 2, T0 = T^b.
    pub fn standard(t: f64, b_exponent: f64) -> Result<Self> {
        OmegaWeight::new(t, t.powf(b_exponent), 1.0, 2.0, b_exponent)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.c1 * self.t, self.c2 * self.t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        smoothstep((t - lo) / self.t0) * smoothstep((hi - t) / self.t0)
    }

    /// Fourier transform at u = 0, i.e. the integral of omega.
    pub fn hat_zero(&self) -> f64 {
        // plateau plus two half ramps: (c2 - c1) T - T0 exactly, by the
        // point symmetry of the smoothstep
        (self.c2 - self.c1) * self.t - self.t0
    }

    /// Fourier transform integral over [c1 T, c2 T] by direct quadrature.
    pub fn hat(&self, u: f64, spec: &QuadratureSpec) -> Result<Complex64> {
        if u == 0.0 {
            return Ok(Complex64::new(self.hat_zero(), 0.0));
        }
        let (lo, hi) = self.support();
        let (r1, plateau, r2) = (lo + self.t0, hi - self.t0, hi);
        let _ = r2;
        let two_pi = 2.0 * std::f64::consts::PI;
        // plateau contribution in closed form
        let mut total = if plateau > r1 {
            let den = Complex64::new(0.0, -two_pi * u);
            ((den * plateau).exp() - (den * r1).exp()) / den
        } else {
            Complex64::new(0.0, 0.0)
        };
        // ramp contributions by panelled quadrature (|u| T0 cycles per ramp)
        let panels = ((u.abs() * self.t0).ceil() as usize + 1).min(4000);
        let ramp = |a: f64, b: f64| -> Result<Complex64> {
            let width = (b - a) / panels as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut err = 0.0;
            for i in 0..panels {
                let x0 = a + i as f64 * width;
                let r: QuadResult = integrate_gk(
                    &mut |t| {
                        Complex64::new(0.0, -two_pi * u * t).exp() * self.eval(t)
                    },
                    x0,
                    x0 + width,
                    spec,
                );
                acc += r.value;
                err += r.abs_error;
            }
            if err > 1e3 * spec.tol * self.t.max(1.0) {
                return Err(Error::QuadratureFailure { what: "omega_hat", estimate: err });
            }
            Ok(acc)
        };
        total += ramp(lo, r1)?;
        total += ramp(plateau, hi)?;
        Ok(total)
    }
}

/// Tabulated Fourier transform of an `OmegaWeight`.
///
/// The two ramp contributions are e^{-2 pi i u t_edge} T0 F(u T0) for fixed
/// smooth profiles F; only those slow profiles are tabulated (cubic
/// interpolation on a uniform grid in v = u T0), so evaluation is cheap at
/// any u with |u| T0 <= v_max and exact in the oscillatory prefactors.
pub struct OmegaHatTable {
    w: OmegaWeight,
    v_max: f64,
    step: f64,
    /// F_up(v) = int_0^1 S(y) e^{-2 pi i v y} dy
    up: Vec<Complex64>,
}

impl OmegaHatTable {
    pub fn build(w: &OmegaWeight, u_max: f64, spec: &QuadratureSpec) -> Self {
        let v_max = (u_max * w.t0).max(4.0) + 2.0;
        let step = 1.0 / 256.0;
        let n = (v_max / step).ceil() as usize + 3;
        let two_pi = 2.0 * std::f64::consts::PI;
        let up: Vec<Complex64> = (0..n)
            .map(|i| {
                let v = i as f64 * step;
                let panels = (v.ceil() as usize).max(1);
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..panels {
                    let a = j as f64 / panels as f64;
                    let b = (j + 1) as f64 / panels as f64;
                    acc += integrate_gk(
                        &mut |y| Complex64::new(0.0, -two_pi * v * y).exp() * smoothstep(y),
                        a,
                        b,
                        spec,
                    )
                    .value;
                }
                acc
            })
            .collect();
        OmegaHatTable { w: w.clone(), v_max, step, up }
    }

    fn lookup(&self, v: f64) -> Complex64 {
        // Catmull-Rom cubic on the uniform grid
        let x = v / self.step;
        let i = (x.floor() as usize).min(self.up.len() - 3).max(1);
        let t = x - i as f64;
        let (p0, p1, p2, p3) = (self.up[i - 1], self.up[i], self.up[i + 1], self.up[i + 2]);
        let a = (p2 - p0) * 0.5;
        let b = p0 - p1 * 2.5 + p2 * 2.0 - p3 * 0.5;
        let c = (p3 - p0) * 0.5 + (p1 - p2) * 1.5;
        p1 + a * t + b * (t * t) + c * (t * t * t)
    }

    pub fn covers(&self, u: f64) -> bool {
        u.abs() * self.w.t0 <= self.v_max
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::new(self.w.hat_zero(), 0.0);
        }
        if u < 0.0 {
            return self.eval(-u).conj();
        }
        let w = &self.w;
        let (lo, hi) = w.support();
        let v = u * w.t0;
        debug_assert!(v <= self.v_max, "omega-hat table does not cover u = {u}");
        let two_pi = 2.0 * std::f64::consts::PI;
        let den = Complex64::new(0.0, -two_pi * u);
        // plateau [lo + T0, hi - T0] exactly
        let plateau = ((den * (hi - w.t0)).exp() - (den * (lo + w.t0)).exp()) / den;
        // up ramp: t = lo + T0 y
        let f_up = self.lookup(v);
        let up = (den * lo).exp() * w.t0 * f_up;
        // down ramp: t = hi - T0 + T0 y, profile S(1 - y) = 1 - S(y)
        let d_v = if v.abs() < 1e-12 {
            Complex64::new(1.0, 0.0)
        } else {
            let dv = Complex64::new(0.0, -two_pi * v);
            (dv.exp() - 1.0) / dv
        };
        let down = (den * (hi - w.t0)).exp() * w.t0 * (d_v - f_up);
        plateau + up + down
    }

    /// Crude decreasing envelope of |omega_hat| for |u| >= u0: max of samples
    /// at geometric points, inflated by 4.
    pub fn envelope_beyond(&self, u0: f64) -> f64 {
        let mut best: f64 = 0.0;
        let mut u = u0;
        let u_cap = self.v_max / self.w.t0;
        let mut k = 0;
        while u <= u_cap && k < 400 {
            best = best.max(self.eval(u).norm());
            u *= 1.03;
            k += 1;
        }
        4.0 * best
    }
}

/// The smooth cutoff phi: 1 on [0, 1], 0 on [1 + rho, infinity), smoothstep
/// ramp in between.
#[derive(Clone, Copy, Debug)]
pub struct PhiCutoff {
    pub rho: f64,
}

impl PhiCutoff {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 0.5) {
            return Err(Error::Config("phi cutoff needs rho in (0, 1/2)".into()));
        }
        Ok(PhiCutoff { rho })
    }

    pub fn eval(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "phi is defined on t >= 0");
        if t <= 1.0 {
            1.0
        } else if t >= 1.0 + self.rho {
            0.0
        } else {
            smoothstep((1.0 + self.rho - t) / self.rho)
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if t <= 1.0 || t >= 1.0 + self.rho {
            0.0
        } else {
            -smoothstep_deriv((1.0 + self.rho - t) / self.rho) / self.rho
        }
    }

    /// Psi(s) = -int phi'(t) t^s dt; entire, with Psi(0) = 1.
    pub fn psi(&self, s: Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
        let r = integrate_gk(
            &mut |t| -Complex64::new(self.deriv(t), 0.0) * (s * t.ln()).exp(),
            1.0,
            1.0 + self.rho,
            spec,
        );
        if r.abs_error > 1e3 * spec.tol {
            return Err(Error::QuadratureFailure { what: "psi", estimate: r.abs_error });
        }
        Ok(r.value)
    }

    /// Mellin transform Phi(s) = Psi(s) / s; simple pole at s = 0.
    pub fn mellin(&self, s: Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
        if s.norm() < 1e-12 {
            return Err(Error::Pole { what: "mellin_phi", at: "s = 0".into() });
        }
        Ok(self.psi(s, spec)? / s)
    }

    /// Psi_2(s) = -int (phi^2)'(t) t^s dt; entire, with Psi_2(0) = 1.
    pub fn psi2(&self, s: Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
        let r = integrate_gk(
            &mut |t| {
                let p = self.eval(t);
                -Complex64::new(2.0 * p * self.deriv(t), 0.0) * (s * t.ln()).exp()
            },
            1.0,
            1.0 + self.rho,
            spec,
        );
        if r.abs_error > 1e3 * spec.tol {
            return Err(Error::QuadratureFailure { what: "psi2", estimate: r.abs_error });
        }
        Ok(r.value)
    }

    /// Phi_2(s) = int phi(t)^2 t^{s-1} dt = Psi_2(s) / s; simple pole at 0.
    pub fn phi2(&self, s: Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
        if s.norm() < 1e-12 {
            return Err(Error::Pole { what: "phi2", at: "s = 0".into() });
        }
        Ok(self.psi2(s, spec)? / s)
    }

    /// Decay bound |Phi(s)| <= rho^{1-m} (1+rho)^{sigma+m-1} / prod |s+j|,
    /// minimized over the integration-by-parts order m.
    pub fn mellin_decay_bound(&self, s: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        let mut denom = 1.0f64;
        for m in 1..=12usize {
            denom *= (s + (m as f64 - 1.0)).norm();
            if denom == 0.0 {
                continue;
            }
            // |phi^(m)| <= c_m rho^{-m}; modest growth for the smoothstep
            // family is folded into a fixed factor
            let c_m = 10.0f64.powi(m as i32 - 1);
            let bound = c_m * self.rho.powi(1 - (m as i32))
                * (1.0 + self.rho).powf(s.re + m as f64 - 1.0)
                / denom;
            best = best.min(bound);
        }
        best
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// The bump generating the dyadic partition: h(y) = S(4(y-1)) S(4(2-y)),
/// supported on [1, 2] and positive inside.
pub fn w0_bump(y: f64) -> f64 {
    smoothstep(4.0 * (y - 1.0)) * smoothstep(4.0 * (2.0 - y))
}

/// Normalized partition bump: W0(y) = h(y) / sum_j h(y 2^{j/2}); the sum of
/// W0(x / 2^{k/2}) over all k is 1 for every x > 0.
pub fn w0_eval(y: f64) -> f64 {
    if y <= 1.0 || y >= 2.0 {
        return 0.0;
    }
    let h = w0_bump(y);
    let mut denom = h;
    // neighbours: y * 2^{j/2} lands in (1, 2) only for j in {-1, 1} here
    for j in [-1i32, 1] {
        let ys = y * SQRT2.powi(j);
        if ys > 1.0 && ys < 2.0 {
            denom += w0_bump(ys);
        }
    }
    h / denom
}

/// The at-most-two dyadic scales M = 2^{k/2} (k >= -1) with W0(x / M) > 0,
/// together with the weights; the weights sum to 1 for x >= 1.
pub fn w0_partition(x: f64) -> Vec<(f64, f64)> {
    assert!(x >= 1.0, "dyadic partition is for x >= 1");
    // x / 2^{k/2} in (1, 2)  <=>  k in (2 log2(x/2), 2 log2 x)
    let lo = (2.0 * (x / 2.0).log2()).floor() as i64 - 1;
    let hi = (2.0 * x.log2()).ceil() as i64 + 1;
    let mut out = Vec::new();
    for k in lo..=hi {
        if k < -1 {
            continue;
        }
        let m = SQRT2.powi(k as i32);
        let w = w0_eval(x / m);
        if w > 0.0 {
            out.push((m, w));
        }
    }
    out
}

/// All dyadic scales 2^{k/2}, k >= -1, not exceeding `cap`.
pub fn dyadic_scales(cap: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = -1i32;
    loop {
        let m = SQRT2.powi(k);
        if m > cap {
            break;
        }
        out.push(m);
        k += 1;
    }
    out
}

/// Max of |d^j/dt^j f| * scale^j over samples, via central finite
/// differences; used to spot-check the derivative-bound invariants.
pub fn scaled_derivative_sup<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    scale: f64,
    order: usize,
    samples: usize,
) -> f64 {
    assert!(order <= 4);
    let h = scale / 64.0;
    let stencil: &[(f64, f64)] = match order {
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        4 => &[(-2.0, 1.0), (-1.0, -4.0), (0.0, 6.0), (1.0, -4.0), (2.0, 1.0)],
        _ => unreachable!(),
    };
    let mut sup: f64 = 0.0;
    for i in 0..samples {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
        let mut d = 0.0;
        for &(off, w) in stencil {
            d += w * f(t + off * h);
        }
        d /= h.powi(order as i32);
        sup = sup.max(d.abs() * scale.powi(order as i32));
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{contour_line, integrate_gk_with_knots};

    fn spec() -> QuadratureSpec {
        QuadratureSpec { tol: 1e-12, ..Default::default() }
    }

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(-0.5), 0.0);
        assert_eq!(smoothstep(1.5), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        for x in [0.1, 0.3, 0.7] {
            assert!((smoothstep(x) + smoothstep(1.0 - x) - 1.0).abs() < 1e-15);
        }
        // derivative consistency with finite differences
        for x in [0.2, 0.5, 0.8] {
            let h = 1e-6;
            let fd = (smoothstep(x + h) - smoothstep(x - h)) / (2.0 * h);
            assert!((smoothstep_deriv(x) - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn omega_plateau_edges_and_ramp() {
        let w = OmegaWeight::standard(2000.0, 0.8).unwrap();
        assert!(w.t0 <= (w.c2 - w.c1) * w.t / 4.0);
        let mid = 0.5 * (w.c1 + w.c2) * w.t;
        assert_eq!(w.eval(mid), 1.0);
        assert_eq!(w.eval(w.c1 * w.t), 0.0);
        assert_eq!(w.eval(w.c2 * w.t), 0.0);
        let half = w.eval(w.c1 * w.t + w.t0 / 2.0);
        assert!((half - 0.5).abs() < 1e-14);
    }

    #[test]
    fn omega_hat_zero_in_stated_interval() {
        let w = OmegaWeight::standard(1000.0, 0.8).unwrap();
        let v = w.hat(0.0, &spec()).unwrap();
        assert_eq!(v.im, 0.0);
        let lo = (w.c2 - w.c1) * w.t - 2.0 * w.t0;
        let hi = (w.c2 - w.c1) * w.t;
        assert!(v.re >= lo && v.re <= hi);
        // against direct quadrature of omega itself
        let direct = integrate_gk_with_knots(
            &mut |t| Complex64::new(w.eval(t), 0.0),
            w.c1 * w.t,
            w.c2 * w.t,
            &[w.c1 * w.t + w.t0, w.c2 * w.t - w.t0],
            &spec(),
        );
        assert!((direct.value.re - v.re).abs() < 1e-7);
    }

    #[test]
    fn omega_hat_conjugate_symmetry() {
        let w = OmegaWeight::standard(500.0, 0.8).unwrap();
        for u in [1e-4, 3e-3, 2e-2] {
            let plus = w.hat(u, &spec()).unwrap();
            let minus = w.hat(-u, &spec()).unwrap();
            assert!((plus.conj() - minus).norm() < 1e-8 * plus.norm().max(1.0));
        }
    }

    #[test]
    fn omega_hat_table_matches_direct() {
        let w = OmegaWeight::standard(1000.0, 0.8).unwrap();
        let table = OmegaHatTable::build(&w, 45.0 / w.t0, &spec());
        for u in [0.0, 1e-5, 7e-4, 3e-3, 9.9 / w.t0, -2e-3, 25.0 / w.t0, 42.0 / w.t0] {
            let a = table.eval(u);
            let b = w.hat(u, &spec()).unwrap();
            assert!(
                (a - b).norm() < 1e-6 * w.t,
                "u = {u}: table {a}, direct {b}"
            );
        }
    }

    #[test]
    fn omega_hat_decay_ratio_per_doubling() {
        // envelope of |omega_hat| beyond u = T0^{-0.9} decays by at least 2^3
        // per doubling of u
        let w = OmegaWeight::standard(10_000.0, 0.9).unwrap();
        let u0 = w.t0.powf(-0.9);
        let table = OmegaHatTable::build(&w, 40.0 * u0, &spec());
        let env = |u: f64| -> f64 {
            let mut best: f64 = 0.0;
            let mut x = u;
            while x <= 1.45 * u {
                best = best.max(table.eval(x).norm());
                x *= 1.005;
            }
            best
        };
        let mut u = u0;
        for _ in 0..4 {
            let here = env(u);
            let there = env(2.0 * u);
            assert!(
                there <= here / 8.0,
                "u = {u}: envelope {here} -> {there} decays too slowly"
            );
            u *= 2.0;
        }
        // absolute smallness well past the knee, here at 8 u0
        assert!(env(8.0 * u0) <= 1e-5 * w.t);
    }

    #[test]
    fn omega_derivative_bounds_uniform_in_t() {
        // |omega^(j)| * T0^j bounded by constants independent of T
        let mut sups = vec![vec![]; 4];
        for t in [100.0, 1000.0, 10_000.0] {
            let w = OmegaWeight::standard(t, 0.8).unwrap();
            let (lo, _) = w.support();
            for j in 1..=4usize {
                let s = scaled_derivative_sup(
                    |x| w.eval(x),
                    lo,
                    lo + w.t0,
                    w.t0,
                    j,
                    400,
                );
                sups[j - 1].push(s);
            }
        }
        let caps = [3.0, 20.0, 200.0, 3000.0];
        for j in 0..4 {
            for &s in &sups[j] {
                assert!(s <= caps[j], "order {} sup {} above cap {}", j + 1, s, caps[j]);
            }
            let max = sups[j].iter().cloned().fold(0.0f64, f64::max);
            let min = sups[j].iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max / min < 1.5, "order {} not T-uniform: {:?}", j + 1, sups[j]);
        }
    }

    #[test]
    fn phi_pointwise() {
        let p = PhiCutoff::new(0.1).unwrap();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.0 + p.rho), 0.0);
        assert!((p.eval(1.0 + p.rho / 2.0) - 0.5).abs() < 1e-14);
        assert_eq!(p.eval(3.0), 0.0);
        for t in [1.02, 1.05, 1.08] {
            let h = 1e-6;
            let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
            assert!((p.deriv(t) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn phi_derivative_bounds_scale_with_rho() {
        for rho in [0.05, 0.1, 0.2] {
            let p = PhiCutoff::new(rho).unwrap();
            for j in 1..=4usize {
                let s = scaled_derivative_sup(|t| p.eval(t), 1.0, 1.0 + rho, rho, j, 400);
                let caps = [3.0, 20.0, 200.0, 3000.0];
                assert!(s <= caps[j - 1], "rho {rho} order {j} sup {s}");
            }
        }
    }

    #[test]
    fn mellin_phi_residue_probe() {
        // s Phi(s) -> 1 as s -> 0: linear extrapolation from s and 10 s
        let p = PhiCutoff::new(0.1).unwrap();
        let q = spec();
        let f = |s: f64| (p.mellin(Complex64::new(s, 0.0), &q).unwrap()
            * Complex64::new(s, 0.0))
        .re;
        let (a, b) = (1e-2, 1e-3);
        let extrapolated = f(b) - b * (f(a) - f(b)) / (a - b);
        assert!(
            (extrapolated - 1.0).abs() < 1e-6,
            "residue probe: {extrapolated}"
        );
        assert!(matches!(
            p.mellin(Complex64::new(0.0, 0.0), &q),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn mellin_phi_at_one_between_cutoff_masses() {
        let p = PhiCutoff::new(0.1).unwrap();
        let v = p.mellin(Complex64::new(1.0, 0.0), &spec()).unwrap();
        assert!(v.im.abs() < 1e-12);
        assert!(v.re >= 1.0 && v.re <= 1.0 + p.rho);
    }

    #[test]
    fn mellin_phi_polynomial_decay() {
        // |Phi(1 + iu)| falls at least like u^{-3}: envelope ratio test on
        // u, 2u, 4u
        let p = PhiCutoff::new(0.1).unwrap();
        let q = spec();
        let env = |u: f64| -> f64 {
            let mut best: f64 = 0.0;
            let mut x = u;
            while x <= 1.2 * u {
                best = best.max(p.mellin(Complex64::new(1.0, x), &q).unwrap().norm());
                x *= 1.02;
            }
            best
        };
        let (e1, e2, e4) = (env(200.0), env(400.0), env(800.0));
        assert!(e2 <= e1 / 8.0 * 1.2, "{e1} -> {e2}");
        assert!(e4 <= e2 / 8.0 * 1.2, "{e2} -> {e4}");
    }

    #[test]
    fn phi2_residue_and_value() {
        let p = PhiCutoff::new(0.1).unwrap();
        let q = spec();
        let f = |s: f64| (p.phi2(Complex64::new(s, 0.0), &q).unwrap()
            * Complex64::new(s, 0.0))
        .re;
        let (a, b) = (1e-2, 1e-3);
        let extrapolated = f(b) - b * (f(a) - f(b)) / (a - b);
        assert!((extrapolated - 1.0).abs() < 1e-6);
        let v = p.phi2(Complex64::new(1.0, 0.0), &q).unwrap();
        assert!(v.re >= 1.0 && v.re <= 1.0 + p.rho);
        // pole parts of Phi and Phi_2 agree: s (Phi_2 - Phi) -> 0
        for s in [1e-2, 1e-3] {
            let sc = Complex64::new(s, 0.0);
            let d = (p.phi2(sc, &q).unwrap() - p.mellin(sc, &q).unwrap()) * sc;
            assert!(d.norm() < 1e-3 * s.max(1e-3) / 1e-3);
        }
    }

    #[test]
    fn phi2_convolution_cross_check() {
        // Phi_2(s) = (1/2 pi i) int_{(1)} Phi(s1) Phi(s - s1) ds1, contour
        // truncated at |Im s1| <= 200
        let p = PhiCutoff::new(0.1).unwrap();
        let q = QuadratureSpec { tol: 1e-10, ..Default::default() };
        let s = Complex64::new(2.0, 3.0);
        let direct = p.phi2(s, &q).unwrap();
        let mut f = |s1: Complex64| {
            p.mellin(s1, &q).unwrap() * p.mellin(s - s1, &q).unwrap()
        };
        let conv = contour_line(&mut f, 1.0, 200.0, 2.0, &q);
        assert!(
            (conv.value - direct).norm() < 1e-6 * direct.norm().max(1.0),
            "conv {} vs direct {}",
            conv.value,
            direct
        );
    }

    #[test]
    fn w0_partition_of_unity() {
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..10_000 {
            let x = (rng.uniform(0.0, 8.0 * std::f64::consts::LN_10)).exp();
            let x = x.max(1.0);
            let parts = w0_partition(x);
            assert!(!parts.is_empty() && parts.len() <= 2, "x = {x}");
            let sum: f64 = parts.iter().map(|&(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-12, "x = {x}, sum = {sum}");
        }
    }

    #[test]
    fn w0_partition_scales_near_one() {
        for (m, _) in w0_partition(1.0001) {
            let ok = [SQRT2.powi(-1), 1.0, SQRT2];
            assert!(ok.iter().any(|&v| (v - m).abs() < 1e-12), "unexpected scale {m}");
        }
    }

    #[test]
    fn w0_partition_support_box() {
        for (m, w) in w0_partition(1e6) {
            assert!(w > 0.0);
            assert!(m <= 1e6 && 1e6 <= 2.0 * m);
        }
    }

    #[test]
    fn omega_weight_validation() {
        assert!(OmegaWeight::new(1000.0, 5.0, 1.0, 2.0, 0.8).is_err()); // T0 < T^b
        assert!(OmegaWeight::new(1000.0, 900.0, 1.0, 1.5, 0.8).is_err()); // overlap
        assert!(OmegaWeight::new(1000.0, 251.0, 2.0, 1.0, 0.8).is_err()); // c order
        assert!(PhiCutoff::new(0.6).is_err());
        assert!(PhiCutoff::new(0.0).is_err());
    }
}
