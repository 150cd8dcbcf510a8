//! Finite Blaschke products: a unimodular constant times a multiset of
//! zeros in the open unit disk.
//!
//! These are exactly the rational inner functions, and every symbol in the
//! crate is assembled from them. Zero multisets are compared with an
//! absolute matching tolerance ([`ZERO_MATCH_TOL`] by default).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two zeros closer than this are treated as the same point.
pub const ZERO_MATCH_TOL: f64 = 1e-9;
/// Evaluation closer than this to a pole `1/conj(a)` is rejected.
pub const POLE_TOL: f64 = 1e-12;
/// Allowed deviation of `|constant|` from one.
pub const UNIMODULAR_TOL: f64 = 1e-12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A single disk automorphism `b_a(z) = (z - a) / (1 - conj(a) z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeFactor {
    alpha: Complex64,
}

impl BlaschkeFactor {
    pub fn new(alpha: Complex64) -> Result<Self> {
        if !(alpha.norm() < 1.0) {
            return Err(Error::InvalidZero(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let den = ONE - self.alpha.conj() * z;
        if self.alpha != ZERO && den.norm() <= POLE_TOL {
            return Err(Error::PoleEvaluation { z, tol: POLE_TOL });
        }
        Ok((z - self.alpha) / den)
    }

    /// Taylor coefficients `c_0..=c_max` at the origin:
    /// `-a, (1-|a|^2), (1-|a|^2) conj(a), (1-|a|^2) conj(a)^2, ...`.
    pub fn taylor(&self, max_index: usize) -> Vec<Complex64> {
        let a = self.alpha;
        let scale = 1.0 - a.norm_sqr();
        let mut out = Vec::with_capacity(max_index + 1);
        out.push(-a);
        let mut pow = ONE;
        for _ in 1..=max_index {
            out.push(pow * scale);
            pow *= a.conj();
        }
        out
    }
}

/// `constant * prod (z - a_k) / (1 - conj(a_k) z)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteBlaschkeProduct {
    constant: Complex64,
    zeros: Vec<Complex64>,
}

impl Default for FiniteBlaschkeProduct {
    fn default() -> Self {
        Self::one()
    }
}

impl FiniteBlaschkeProduct {
    pub fn new(constant: Complex64, zeros: Vec<Complex64>) -> Result<Self> {
        if (constant.norm() - 1.0).abs() > UNIMODULAR_TOL {
            return Err(Error::NotUnimodular(constant));
        }
        for &a in &zeros {
            if !(a.norm() < 1.0) {
                return Err(Error::InvalidZero(a));
            }
        }
        Ok(Self { constant, zeros })
    }

    pub fn from_zeros(zeros: Vec<Complex64>) -> Result<Self> {
        Self::new(ONE, zeros)
    }

    /// The empty product.
    pub fn one() -> Self {
        Self { constant: ONE, zeros: Vec::new() }
    }

    pub fn unimodular(constant: Complex64) -> Result<Self> {
        Self::new(constant, Vec::new())
    }

    pub fn factor(alpha: Complex64) -> Result<Self> {
        Self::from_zeros(vec![alpha])
    }

    /// `z^k`.
    pub fn z_power(k: usize) -> Self {
        Self { constant: ONE, zeros: vec![ZERO; k] }
    }

    pub fn constant(&self) -> Complex64 {
        self.constant
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_constant(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Largest zero modulus; 0 for constants and powers of `z`.
    pub fn zero_radius(&self) -> f64 {
        self.zeros.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Same zeros, constant replaced by 1.
    pub fn normalized(&self) -> Self {
        Self { constant: ONE, zeros: self.zeros.clone() }
    }

    pub fn with_constant(&self, constant: Complex64) -> Result<Self> {
        Self::new(constant, self.zeros.clone())
    }

    /// Number of zeros within `tol` of `w`.
    pub fn multiplicity_at(&self, w: Complex64, tol: f64) -> usize {
        self.zeros.iter().filter(|a| (**a - w).norm() <= tol).count()
    }

    /// Distinct zeros (first representative of each cluster) with multiplicities.
    pub fn distinct_zeros(&self, tol: f64) -> Vec<(Complex64, usize)> {
        let mut out: Vec<(Complex64, usize)> = Vec::new();
        for &a in &self.zeros {
            match out.iter_mut().find(|(w, _)| (*w - a).norm() <= tol) {
                Some(entry) => entry.1 += 1,
                None => out.push((a, 1)),
            }
        }
        out
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = self.constant;
        for &a in &self.zeros {
            acc *= BlaschkeFactor { alpha: a }.eval(z)?;
        }
        Ok(acc)
    }

    /// Value at `e^{it}`; never hits a pole.
    pub fn boundary(&self, t: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, t);
        self.zeros
            .iter()
            .fold(self.constant, |acc, &a| acc * (z - a) / (ONE - a.conj() * z))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        Self { constant: self.constant * other.constant, zeros }
    }

    pub fn powi(&self, k: usize) -> Self {
        (0..k).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn div(&self, divisor: &Self) -> Result<Self> {
        self.div_tol(divisor, ZERO_MATCH_TOL)
    }

    pub fn div_tol(&self, divisor: &Self, tol: f64) -> Result<Self> {
        let mut remaining = self.zeros.clone();
        for &b in &divisor.zeros {
            let pos = nearest_within(&remaining, b, tol).ok_or(Error::NotDivisible(b))?;
            remaining.swap_remove(pos);
        }
        Ok(Self { constant: self.constant / divisor.constant, zeros: remaining })
    }

    pub fn divides(&self, other: &Self) -> bool {
        other.div(self).is_ok()
    }

    /// Multiset intersection of zeros; constant 1.
    pub fn gcd(&self, other: &Self) -> Self {
        self.gcd_tol(other, ZERO_MATCH_TOL)
    }

    pub fn gcd_tol(&self, other: &Self, tol: f64) -> Self {
        let mut pool = other.zeros.clone();
        let mut common = Vec::new();
        for &a in &self.zeros {
            if let Some(pos) = nearest_within(&pool, a, tol) {
                pool.swap_remove(pos);
                common.push(a);
            }
        }
        Self { constant: ONE, zeros: common }
    }

    /// Zeros with the larger of the two multiplicities; constant 1.
    pub fn lcm(&self, other: &Self) -> Self {
        self.lcm_tol(other, ZERO_MATCH_TOL)
    }

    pub fn lcm_tol(&self, other: &Self, tol: f64) -> Self {
        let mut zeros = self.zeros.clone();
        let mut pool = self.zeros.clone();
        for &b in &other.zeros {
            match nearest_within(&pool, b, tol) {
                Some(pos) => {
                    pool.swap_remove(pos);
                }
                None => zeros.push(b),
            }
        }
        Self { constant: ONE, zeros }
    }

    pub fn is_coprime(&self, other: &Self) -> bool {
        self.gcd(other).degree() == 0
    }

    /// Zero multisets agree within `tol` (constants ignored).
    pub fn same_zeros(&self, other: &Self, tol: f64) -> bool {
        self.degree() == other.degree() && self.div_tol(other, tol).is_ok()
    }

    /// Zero multisets and constants agree within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.same_zeros(other, tol) && (self.constant - other.constant).norm() <= tol
    }

    /// Taylor coefficients `c_0..=c_max` of the product at the origin.
    ///
    /// Multiplying a series `s` by `b_a` uses `y (1 - conj(a) z) = s (z - a)`,
    /// i.e. `y_n = conj(a) y_{n-1} + s_{n-1} - a s_n`.
    pub fn fourier_analytic(&self, max_index: usize) -> Vec<Complex64> {
        let len = max_index + 1;
        let mut series = vec![ZERO; len];
        series[0] = self.constant;
        for &a in &self.zeros {
            let mut next = vec![ZERO; len];
            for n in 0..len {
                let mut y = -a * series[n];
                if n > 0 {
                    y += a.conj() * next[n - 1] + series[n - 1];
                }
                next[n] = y;
            }
            series = next;
        }
        series
    }

    /// Samples `|B(e^{it})|` at `samples` uniform points and returns the
    /// largest deviation from 1.
    pub fn boundary_defect(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / samples as f64;
                (self.boundary(t).norm() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for FiniteBlaschkeProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.constant)?;
        for a in &self.zeros {
            write!(f, "·b[{}]", a)?;
        }
        Ok(())
    }
}

fn nearest_within(pool: &[Complex64], target: Complex64, tol: f64) -> Option<usize> {
    pool.iter()
        .enumerate()
        .map(|(i, a)| (i, (*a - target).norm()))
        .filter(|(_, d)| *d <= tol)
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
}
