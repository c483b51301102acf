//! Exact polynomial algebra in the elementary symmetric polynomials
//! e_1, ..., e_m: the coefficient polynomials q_{a,j} of the rational
//! function F_a, their generating recurrence, and randomized verification of
//! the polynomial identity F_a(Y; Z) = sum_j q_{a,j}(e(Y)) Z^j.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Exact-arithmetic caps: the recurrence is exponential in a + m.
pub const Q_COEFF_CAP: usize = 8;

/// Polynomial in Z[e_1, ..., e_m], stored as exponent vector -> coefficient.
/// The grading assigns e_j degree j; no zero coefficients are kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPolynomial {
    pub m: usize,
    pub terms: BTreeMap<Vec<u16>, i64>,
}

impl SymPolynomial {
    pub fn zero(m: usize) -> Self {
        SymPolynomial { m, terms: BTreeMap::new() }
    }

    pub fn constant(m: usize, c: i64) -> Self {
        let mut p = SymPolynomial::zero(m);
        if c != 0 {
            p.terms.insert(vec![0; m], c);
        }
        p
    }

    /// The single variable e_j (1-indexed, j <= m).
    pub fn e(m: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= m);
        let mut exps = vec![0u16; m];
        exps[j - 1] = 1;
        let mut p = SymPolynomial::zero(m);
        p.terms.insert(exps, 1);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_assign(&mut self, other: &SymPolynomial) {
        assert_eq!(self.m, other.m);
        for (exps, &c) in &other.terms {
            let entry = self.terms.entry(exps.clone()).or_insert(0);
            *entry = entry.checked_add(c).expect("coefficient overflow");
            if *entry == 0 {
                self.terms.remove(exps);
            }
        }
    }

    pub fn neg(&self) -> SymPolynomial {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scaled(&self, k: i64) -> SymPolynomial {
        if k == 0 {
            return SymPolynomial::zero(self.m);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.checked_mul(k).expect("coefficient overflow");
        }
        out
    }

    pub fn mul(&self, other: &SymPolynomial) -> SymPolynomial {
        assert_eq!(self.m, other.m);
        let mut out = SymPolynomial::zero(self.m);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let exps: Vec<u16> = ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
                let c = ca.checked_mul(cb).expect("coefficient overflow");
                let entry = out.terms.entry(exps).or_insert(0);
                *entry = entry.checked_add(c).expect("coefficient overflow");
            }
        }
        out.terms.retain(|_, c| *c != 0);
        out
    }

    /// Weighted degrees (deg e_j = j) of every monomial.
    pub fn monomial_degrees(&self) -> Vec<usize> {
        self.terms
            .keys()
            .map(|exps| exps.iter().enumerate().map(|(i, &e)| (i + 1) * e as usize).sum())
            .collect()
    }

    /// Evaluate at numeric values (e_1, ..., e_m).
    pub fn eval(&self, e_values: &[Complex64]) -> Complex64 {
        assert_eq!(e_values.len(), self.m);
        let mut acc = Complex64::new(0.0, 0.0);
        for (exps, &c) in &self.terms {
            let mut term = Complex64::new(c as f64, 0.0);
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    term *= e_values[i];
                }
            }
            acc += term;
        }
        acc
    }
}

/// Elementary symmetric polynomials of the input values: the coefficients
/// of prod_i (1 + x Y_i), so e_0 = 1 and the result has length m + 1.
pub fn elem_sym(values: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); values.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (i, &y) in values.iter().enumerate() {
        // multiply (1 + x y) into the first i+1 coefficients, descending
        for j in (1..=(i + 1)).rev() {
            let prev = e[j - 1];
            e[j] += y * prev;
        }
    }
    e
}

/// The coefficient polynomials q_{a,0}, ..., q_{a,m-1} with
/// F_a(Y_1..Y_m; Z) = sum_j q_{a,j}(e_1..e_m) Z^j.
///
/// Built from the partial-fraction recurrence: with c_a = 1,
/// c_{a-i} = -sum_{u+v=i, u>=1} (-1)^u e_u c_{a-v} for 1 <= i <= a-1, then
/// theta_i = sum_{u+v=i, u<=m, v<=a-1} (-1)^u e_u c_{a-v} and
/// q_{a,j} = -theta_{a+j}. Every monomial of q_{a,j} has weighted degree
/// a + j.
pub fn q_coefficients(a: usize, m: usize) -> Result<Vec<SymPolynomial>> {
    if a < 1 || m < 1 {
        return Err(Error::Config("q_coefficients needs a >= 1 and m >= 1".into()));
    }
    if a > Q_COEFF_CAP || m > Q_COEFF_CAP {
        return Err(Error::Budget {
            what: "q_coefficients",
            requested: a.max(m) as u64,
            cap: Q_COEFF_CAP as u64,
        });
    }
    // e_u as polynomials; e_0 = 1, e_u = 0 for u > m
    let e_poly = |u: usize| -> SymPolynomial {
        if u == 0 {
            SymPolynomial::constant(m, 1)
        } else if u <= m {
            SymPolynomial::e(m, u)
        } else {
            SymPolynomial::zero(m)
        }
    };
    // c[v] holds c_{a-v} for v = 0..a-1
    let mut c: Vec<SymPolynomial> = Vec::with_capacity(a);
    c.push(SymPolynomial::constant(m, 1));
    for i in 1..a {
        let mut acc = SymPolynomial::zero(m);
        for u in 1..=i.min(m) {
            let v = i - u; // v <= i-1, so c[v] is known
            let sign = if u % 2 == 0 { 1 } else { -1 };
            acc.add_assign(&e_poly(u).mul(&c[v]).scaled(sign));
        }
        c.push(acc.neg());
    }
    let theta = |i: usize| -> SymPolynomial {
        let mut acc = SymPolynomial::zero(m);
        for u in 0..=i.min(m) {
            let v = i - u;
            if v <= a - 1 {
                let sign = if u % 2 == 0 { 1 } else { -1 };
                acc.add_assign(&e_poly(u).mul(&c[v]).scaled(sign));
            }
        }
        acc
    };
    Ok((0..m).map(|j| theta(a + j).neg()).collect())
}

/// Direct termwise evaluation of the rational function
/// F_a(Y; Z) = sum_i Y_i^a prod_{l != i} (1 - Z Y_l) / (1 - Y_l / Y_i).
///
/// The formula has removable singularities at coincident Y_i which this
/// evaluator cannot cross, hence the distance precondition.
pub fn f_direct(a: usize, y: &[Complex64], z: Complex64) -> Result<Complex64> {
    assert!(a >= 1 && !y.is_empty());
    for (i, yi) in y.iter().enumerate() {
        if yi.norm() == 0.0 {
            return Err(Error::Config("f_direct needs nonzero Y_i".into()));
        }
        for yj in &y[i + 1..] {
            if (yi - yj).norm() < 1e-6 {
                return Err(Error::CoincidentShifts { min_distance: 1e-6 });
            }
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..y.len() {
        let mut term = y[i].powu(a as u32);
        for (l, yl) in y.iter().enumerate() {
            if l != i {
                term *= (1.0 - z * yl) / (1.0 - yl / y[i]);
            }
        }
        acc += term;
    }
    Ok(acc)
}

/// Outcome of the randomized identity check.
#[derive(Clone, Debug)]
pub struct CombIdentityReport {
    pub a: usize,
    pub m: usize,
    pub trials: usize,
    pub max_rel_discrepancy: f64,
}

/// Randomized check of F_a(Y; Z) = sum_j q_{a,j}(e(Y)) Z^j: `trials` draws
/// of distinct Y with moduli in [1/2, 2] and |Z| <= 2, reporting the largest
/// relative discrepancy between the rational and polynomial sides.
pub fn verify_comb_identity(
    a: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<CombIdentityReport> {
    let q = q_coefficients(a, m)?;
    let mut rng = SplitMix64::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let y = loop {
            let cand: Vec<Complex64> = (0..m)
                .map(|_| {
                    let r = rng.uniform(0.5, 2.0);
                    let th = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
                    Complex64::from_polar(r, th)
                })
                .collect();
            let mut ok = true;
            'outer: for i in 0..m {
                for j in (i + 1)..m {
                    if (cand[i] - cand[j]).norm() < 1e-3 {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            if ok {
                break cand;
            }
        };
        let z = Complex64::from_polar(rng.uniform(0.0, 2.0), rng.uniform(0.0, std::f64::consts::TAU));
        let direct = f_direct(a, &y, z)?;
        let e_values: Vec<Complex64> = elem_sym(&y)[1..].to_vec();
        let mut poly = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        for qj in &q {
            poly += qj.eval(&e_values) * zp;
            zp *= z;
        }
        let rel = (direct - poly).norm() / (1.0 + direct.norm());
        worst = worst.max(rel);
    }
    Ok(CombIdentityReport { a, m, trials, max_rel_discrepancy: worst })
}
