//! Dense complex polynomials and the rational functions built from finite
//! Blaschke data. Used where a symbol has to leave the term grammar:
//! determinants of inner matrices and reduced coprime cofactors.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::blaschke::FiniteBlaschkeProduct;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `prod (z - r)`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots.iter().fold(Self::constant(ONE), |p, &r| p.mul(&Self::new(vec![-r, ONE])))
    }

    /// `prod (1 - conj(a) z)`.
    pub fn pole_factors(zeros: &[Complex64]) -> Self {
        zeros
            .iter()
            .fold(Self::constant(ONE), |p, &a| p.mul(&Self::new(vec![ONE, -a.conj()])))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Degree after dropping trailing coefficients below `rel * max_abs`.
    /// `None` for the zero polynomial.
    pub fn degree(&self, rel: f64) -> Option<usize> {
        let cut = rel * self.max_abs();
        if self.max_abs() == 0.0 {
            return None;
        }
        self.coeffs.iter().rposition(|c| c.norm() > cut)
    }

    pub fn trimmed(&self, rel: f64) -> Self {
        match self.degree(rel) {
            Some(d) => Self::new(self.coeffs[..=d].to_vec()),
            None => Self::zero(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or(ZERO);
        Self::new((0..len).map(|i| get(&self.coeffs, i) + get(&other.coeffs, i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Synthetic division by `(z - w)`: returns quotient and remainder `p(w)`.
    pub fn deflate(&self, w: Complex64) -> (Self, Complex64) {
        if self.coeffs.is_empty() {
            return (Self::zero(), ZERO);
        }
        let n = self.coeffs.len();
        let mut q = vec![ZERO; n.saturating_sub(1)];
        let mut acc = ZERO;
        for k in (0..n).rev() {
            acc = acc * w + self.coeffs[k];
            if k > 0 {
                q[k - 1] = acc;
            }
        }
        (Self::new(q), acc)
    }

    /// Taylor coefficients at `w`, i.e. `p^{(k)}(w) / k!` for `k = 0..=deg`.
    /// These are the successive deflation remainders.
    pub fn taylor_at(&self, w: Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut cur = self.clone();
        while !cur.coeffs.is_empty() {
            let (q, r) = cur.deflate(w);
            out.push(r);
            cur = q;
        }
        out
    }

    /// Order of vanishing at `w`: the number of leading Taylor coefficients
    /// at `w` below `rel` times the largest one.
    pub fn order_at(&self, w: Complex64, rel: f64) -> usize {
        let t = self.taylor_at(w);
        let scale = t.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return usize::MAX;
        }
        t.iter().take_while(|c| c.norm() <= rel * scale).count()
    }

    /// Roots from the eigenvalues of the companion matrix (complex Schur).
    pub fn roots(&self, rel: f64) -> Vec<Complex64> {
        let p = self.trimmed(rel);
        let Some(deg) = p.degree(rel) else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        let lead = p.coeffs[deg];
        let mut m = DMatrix::<Complex64>::zeros(deg, deg);
        for i in 1..deg {
            m[(i, i - 1)] = ONE;
        }
        for i in 0..deg {
            m[(i, deg - 1)] = -p.coeffs[i] / lead;
        }
        let (_, t) = m.schur().unpack();
        (0..deg).map(|i| t[(i, i)]).collect()
    }

    /// Distinct roots with multiplicities.
    ///
    /// Low-order coefficients below `rel * max_abs` are taken as exact roots
    /// at the origin. Remaining companion roots are grouped around their
    /// centroid; a group of size `m` is accepted when the first `m`
    /// deflation remainders at the centroid are below `cluster_tol` relative
    /// to the largest Taylor coefficient there.
    pub fn roots_with_multiplicity(&self, rel: f64, cluster_tol: f64) -> Vec<(Complex64, usize)> {
        let mut out = Vec::new();
        let cut = rel * self.max_abs();
        let lead_zeros = self.coeffs.iter().take_while(|c| c.norm() <= cut).count();
        let mut rest = self.clone();
        if lead_zeros > 0 {
            out.push((ZERO, lead_zeros));
            rest = Self::new(self.coeffs[lead_zeros..].to_vec());
        }
        let roots = rest.roots(rel);
        let mut used = vec![false; roots.len()];
        // Clusters of a multiplicity-m root spread like eps^(1/m).
        let search_radius = 1e-3;
        for i in 0..roots.len() {
            if used[i] {
                continue;
            }
            let mut near: Vec<(usize, f64)> = (0..roots.len())
                .filter(|&j| !used[j])
                .map(|j| (j, (roots[j] - roots[i]).norm()))
                .filter(|(_, d)| *d <= search_radius)
                .collect();
            near.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let mut accepted = 1;
            let mut centre = roots[i];
            for m in (1..=near.len()).rev() {
                let c = near[..m].iter().map(|(j, _)| roots[*j]).sum::<Complex64>() / m as f64;
                let t = rest.taylor_at(c);
                let scale = t.iter().map(|x| x.norm()).fold(0.0, f64::max);
                if t[..m].iter().all(|x| x.norm() <= cluster_tol * scale) {
                    accepted = m;
                    centre = c;
                    break;
                }
            }
            for (j, _) in &near[..accepted] {
                used[*j] = true;
            }
            out.push((centre, accepted));
        }
        out
    }
}

/// `numerator / denominator`.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    pub numerator: Poly,
    pub denominator: Poly,
}

impl RationalFunction {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.numerator.eval(z) / self.denominator.eval(z)
    }

    /// `constant * prod (z - a) / prod (1 - conj(a) z)`.
    pub fn from_blaschke(b: &FiniteBlaschkeProduct) -> Self {
        Self {
            numerator: Poly::from_roots(b.zeros()).scale(b.constant()),
            denominator: Poly::pole_factors(b.zeros()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn deflation_and_taylor() {
        let p = Poly::from_roots(&[c(0.5, 0.0), c(0.5, 0.0), c(-0.2, 0.3)]);
        assert_eq!(p.order_at(c(0.5, 0.0), 1e-12), 2);
        assert_eq!(p.order_at(c(-0.2, 0.3), 1e-12), 1);
        assert_eq!(p.order_at(c(0.1, 0.0), 1e-12), 0);
        let (q, r) = p.deflate(c(-0.2, 0.3));
        assert!(r.norm() < 1e-15);
        assert!((q.eval(c(0.3, 0.1)) - Poly::from_roots(&[c(0.5, 0.0), c(0.5, 0.0)]).eval(c(0.3, 0.1))).norm() < 1e-14);
    }

    #[test]
    fn roots_with_multiplicity_recovers_triple_root() {
        let p = Poly::from_roots(&[
            c(0.5, 0.0),
            c(0.5, 0.0),
            c(0.5, 0.0),
            c(0.2, 0.1),
            c(-0.3, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ]);
        let mut r = p.roots_with_multiplicity(1e-13, 1e-7);
        r.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
        let mults: Vec<usize> = r.iter().map(|x| x.1).collect();
        assert_eq!(mults, vec![1, 2, 1, 3]);
        assert!((r[3].0 - c(0.5, 0.0)).norm() < 1e-9);
        assert_eq!(r[1].0, c(0.0, 0.0));
    }

    #[test]
    fn rational_from_blaschke_matches_product() {
        let b = FiniteBlaschkeProduct::new(c(0.0, 1.0), vec![c(0.3, 0.2), c(-0.6, 0.0)]).unwrap();
        let r = RationalFunction::from_blaschke(&b);
        for z in [c(0.1, 0.2), c(-0.7, 0.1), c(0.0, 0.9)] {
            assert!((r.eval(z) - b.eval(z).unwrap()).norm() < 1e-14);
        }
    }
}
