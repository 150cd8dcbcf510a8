//! Inner matrix functions with finite Blaschke entries: the diagonal hull
//! `D(Δ) = δ I`, coprimeness tests against scalar inner functions, the
//! explicit kernels of `H_{Φ_-^*}` for the 2x2 completion problem, and a
//! numerical check of those kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::blaschke::{FiniteBlaschkeProduct, ZERO_MATCH_TOL};
use crate::classify::{Verdict, Witness};
use crate::error::{Error, Result};
use crate::hardy_ops::hankel_rect;
use crate::poly::Poly;
use crate::symbol::{sample_angles, spectral_norm, MatrixSymbol, ScalarSymbol, TermKind};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Boundary samples and tolerance used to validate inner functions.
pub const INNER_SAMPLES: usize = 256;
pub const INNER_TOL: f64 = 1e-9;

/// Smallest singular value below which a matrix counts as singular.
pub const SINGULAR_TOL: f64 = 1e-9;

/// Relative tolerance for orders of vanishing of adjugate entries.
const ORDER_REL: f64 = 1e-7;
/// Deflation tolerance when clustering determinant roots.
const CLUSTER_TOL: f64 = 1e-7;

/// Sampled `sup_t ||Θ(e^{it})^* Θ(e^{it}) - I||`; non-analytic input is never inner.
pub fn is_inner(theta: &MatrixSymbol, samples: usize, tol: f64) -> (bool, f64) {
    if !theta.is_analytic() {
        return (false, f64::INFINITY);
    }
    let n = theta.n();
    let defect = sample_angles(samples)
        .map(|t| {
            let m = theta.boundary(t);
            spectral_norm(&(m.adjoint() * &m - DMatrix::identity(n, n)))
        })
        .fold(0.0, f64::max);
    (defect <= tol, defect)
}

#[derive(Clone, Debug)]
pub struct InnerMatrixFunction {
    symbol: MatrixSymbol,
}

impl InnerMatrixFunction {
    pub fn new(symbol: MatrixSymbol) -> Result<Self> {
        if !symbol.is_analytic() {
            return Err(Error::NotAnalytic("inner matrix entries must be analytic".into()));
        }
        let (ok, defect) = is_inner(&symbol, INNER_SAMPLES, INNER_TOL);
        if !ok {
            return Err(Error::NotInner(defect));
        }
        Ok(Self { symbol })
    }

    pub fn diagonal(entries: Vec<FiniteBlaschkeProduct>) -> Result<Self> {
        let n = entries.len();
        let mut cells = vec![ScalarSymbol::zero(); n * n];
        for (i, b) in entries.into_iter().enumerate() {
            cells[i * n + i] = ScalarSymbol::analytic(ONE, b);
        }
        Self::new(MatrixSymbol::new(n, cells)?)
    }

    pub fn symbol(&self) -> &MatrixSymbol {
        &self.symbol
    }

    pub fn n(&self) -> usize {
        self.symbol.n()
    }

    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.symbol.eval_analytic(z)
    }

    /// `Δ = N / D` entrywise with a common denominator `D = prod (1 - conj(a) z)`.
    fn polynomial_form(&self) -> Result<(Vec<Poly>, Poly)> {
        let lcm = self
            .symbol
            .entries()
            .iter()
            .flat_map(|e| e.terms())
            .fold(FiniteBlaschkeProduct::one(), |acc, t| acc.lcm(&t.inner));
        let mut numerators = Vec::with_capacity(self.symbol.entries().len());
        for e in self.symbol.entries() {
            let mut p = Poly::zero();
            for t in e.terms() {
                debug_assert_eq!(t.kind, TermKind::Analytic);
                let rest = lcm.div(&t.inner)?;
                let part = Poly::from_roots(t.inner.zeros())
                    .mul(&Poly::pole_factors(rest.zeros()))
                    .scale(t.coeff * t.inner.constant());
                p = p.add(&part);
            }
            numerators.push(p);
        }
        Ok((numerators, Poly::pole_factors(lcm.zeros())))
    }

    /// Zeros of `det Δ` in the disk with multiplicities.
    pub fn det_zeros(&self) -> Result<Vec<(Complex64, usize)>> {
        let (num, _) = self.polynomial_form()?;
        let det = poly_det(&num, self.n());
        if det.max_abs() == 0.0 || det.trimmed(1e-13).coeffs().is_empty() {
            return Err(Error::DegenerateDeterminant);
        }
        Ok(det
            .roots_with_multiplicity(1e-13, CLUSTER_TOL)
            .into_iter()
            .filter(|(w, _)| w.norm() < 1.0 - 1e-6)
            .collect())
    }

    /// Degree of the finite Blaschke product `det Δ`.
    pub fn det_degree(&self) -> Result<usize> {
        Ok(self.det_zeros()?.iter().map(|(_, m)| m).sum())
    }
}

/// Determinant of an `n x n` polynomial matrix (row-major) by cofactor expansion.
fn poly_det(m: &[Poly], n: usize) -> Poly {
    match n {
        0 => Poly::constant(ONE),
        1 => m[0].clone(),
        _ => {
            let mut acc = Poly::zero();
            for j in 0..n {
                let minor = minor(m, n, 0, j);
                let term = m[j].mul(&poly_det(&minor, n - 1));
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

fn minor(m: &[Poly], n: usize, row: usize, col: usize) -> Vec<Poly> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != row) {
        for j in (0..n).filter(|&j| j != col) {
            out.push(m[i * n + j].clone());
        }
    }
    out
}

/// Adjugate entries, row-major.
fn poly_adjugate(m: &[Poly], n: usize) -> Vec<Poly> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let c = poly_det(&minor(m, n, j, i), n - 1);
            out.push(if (i + j) % 2 == 0 { c } else { c.scale(-ONE) });
        }
    }
    out
}

/// The minimal `δ` with `δ Δ^{-1}` analytic, so that `D(Δ) = δ I`.
///
/// At each zero `w` of `det Δ` the multiplicity of `w` in `δ` is
/// `max_ij max(0, ord_w det - ord_w adj_ij)`.
pub fn diagonal_hull(delta: &InnerMatrixFunction) -> Result<FiniteBlaschkeProduct> {
    let n = delta.n();
    let (num, _) = delta.polynomial_form()?;
    let adj = poly_adjugate(&num, n);
    let mut zeros = Vec::new();
    for (w, ord) in delta.det_zeros()? {
        let need = adj
            .iter()
            .map(|p| ord.saturating_sub(p.order_at(w, ORDER_REL).min(ord)))
            .max()
            .unwrap_or(0);
        zeros.extend(std::iter::repeat(w).take(need));
    }
    FiniteBlaschkeProduct::from_zeros(zeros)
}

/// `θ I` and `Δ` coprime, decided through the diagonal hull.
pub fn coprime_diag(theta: &FiniteBlaschkeProduct, delta: &InnerMatrixFunction) -> Result<bool> {
    Ok(theta.is_coprime(&diagonal_hull(delta)?))
}

/// `θ` and `det Δ` share no zero.
pub fn coprime_det(theta: &FiniteBlaschkeProduct, delta: &InnerMatrixFunction) -> Result<bool> {
    let det = delta.det_zeros()?;
    Ok(theta
        .distinct_zeros(ZERO_MATCH_TOL)
        .iter()
        .all(|(w, _)| det.iter().all(|(d, _)| (w - d).norm() > ZERO_MATCH_TOL.sqrt())))
}

/// Whether `A(w)` is invertible at every zero `w` of `θ`; otherwise the
/// first failing zero.
pub fn coprime_point_test(theta: &FiniteBlaschkeProduct, a: &MatrixSymbol) -> Result<(bool, Option<Complex64>)> {
    for (w, _) in theta.distinct_zeros(ZERO_MATCH_TOL) {
        let m = a.eval_analytic(w)?;
        let smin = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > SINGULAR_TOL) {
            return Ok((false, Some(w)));
        }
    }
    Ok((true, None))
}

/// Which branch of the kernel formula to use, named by where `α` sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelCase {
    /// `θ0` vanishes at `α`, `θ1` does not.
    A,
    /// `θ1` vanishes at `α`, `θ0` does not.
    B,
    /// Neither vanishes at `α`.
    C,
    /// Both vanish at `α`.
    D,
}

fn inner_scalar(b: FiniteBlaschkeProduct) -> ScalarSymbol {
    ScalarSymbol::analytic(ONE, b)
}

fn not_zero(v: Complex64, what: &str) -> Result<()> {
    if v.norm() <= ZERO_MATCH_TOL {
        return Err(Error::CaseHypothesisViolated(format!("{what} must not vanish")));
    }
    Ok(())
}

fn check_coprime(theta: &FiniteBlaschkeProduct, a: &ScalarSymbol, name: &str) -> Result<()> {
    for (w, _) in theta.distinct_zeros(ZERO_MATCH_TOL) {
        if a.eval_analytic(w)?.norm() <= ZERO_MATCH_TOL {
            return Err(Error::CaseHypothesisViolated(format!("{name} vanishes at the zero {w} of its inner part")));
        }
    }
    Ok(())
}

/// `[[b_α, θ1 conj(b)], [θ0 conj(a), b_α]]`; each inner part of `a` must
/// divide `θ0` (and of `b` divide `θ1`) so that the entries are analytic.
pub fn phi_minus(
    alpha: Complex64,
    theta0: &FiniteBlaschkeProduct,
    theta1: &FiniteBlaschkeProduct,
    a: &ScalarSymbol,
    b: &ScalarSymbol,
) -> Result<MatrixSymbol> {
    let ba = inner_scalar(FiniteBlaschkeProduct::factor(alpha)?);
    MatrixSymbol::from_rows(vec![
        vec![ba.clone(), times_conj(theta1, b)?],
        vec![times_conj(theta0, a)?, ba],
    ])
}

/// `θ conj(a)` for analytic `a` whose inner parts divide `θ`.
pub fn times_conj(theta: &FiniteBlaschkeProduct, a: &ScalarSymbol) -> Result<ScalarSymbol> {
    if !a.is_analytic() {
        return Err(Error::NotAnalytic("cofactor must be analytic".into()));
    }
    let mut out = ScalarSymbol::zero();
    for t in a.terms() {
        let q = theta.div(&t.inner)?;
        out = out.add(&ScalarSymbol::analytic(t.coeff.conj(), q));
    }
    Ok(out)
}

/// The inner `Δ` with `ker H_{Φ_-^*} = Δ H^2` for
/// `Φ_- = [[b_α, θ1 conj(b)], [θ0 conj(a), b_α]]`.
pub fn lemma41_delta(
    theta0: &FiniteBlaschkeProduct,
    theta1: &FiniteBlaschkeProduct,
    a: &ScalarSymbol,
    b: &ScalarSymbol,
    alpha: Complex64,
    case: KernelCase,
) -> Result<InnerMatrixFunction> {
    check_coprime(theta0, a, "a")?;
    check_coprime(theta1, b, "b")?;
    let ba = FiniteBlaschkeProduct::factor(alpha)?;
    let n0 = theta0.multiplicity_at(alpha, ZERO_MATCH_TOL);
    let n1 = theta1.multiplicity_at(alpha, ZERO_MATCH_TOL);
    let zero = ScalarSymbol::zero;
    let s = inner_scalar;
    let rows = match case {
        KernelCase::A => {
            if n0 == 0 {
                return Err(Error::CaseHypothesisViolated("theta0 must vanish at alpha".into()));
            }
            let t1a = theta1.eval(alpha)?;
            not_zero(t1a, "theta1(alpha)")?;
            if n0 == 1 {
                vec![vec![s(ba.mul(theta1)), zero()], vec![zero(), s(theta0.clone())]]
            } else {
                let gamma = -a.eval_analytic(alpha)? / t1a;
                let nu = Complex64::new(1.0 / (gamma.norm_sqr() + 1.0).sqrt(), 0.0);
                let t0p = theta0.div(&ba.powi(n0))?;
                vec![
                    vec![s(ba.mul(theta1)).scale(nu), s(theta1.clone()).scale(gamma * nu)],
                    vec![s(theta0.clone()).scale(-gamma.conj() * nu), s(ba.powi(n0 - 1).mul(&t0p)).scale(nu)],
                ]
            }
        }
        KernelCase::B => {
            if n1 == 0 {
                return Err(Error::CaseHypothesisViolated("theta1 must vanish at alpha".into()));
            }
            let t0a = theta0.eval(alpha)?;
            not_zero(t0a, "theta0(alpha)")?;
            if n1 == 1 {
                vec![vec![s(theta1.clone()), zero()], vec![zero(), s(ba.mul(theta0))]]
            } else {
                let gamma = -b.eval_analytic(alpha)? / t0a;
                let nu = Complex64::new(1.0 / (gamma.norm_sqr() + 1.0).sqrt(), 0.0);
                let t1p = theta1.div(&ba.powi(n1))?;
                vec![
                    vec![s(ba.powi(n1 - 1).mul(&t1p)).scale(nu), s(theta1.clone()).scale(-gamma.conj() * nu)],
                    vec![s(theta0.clone()).scale(gamma * nu), s(ba.mul(theta0)).scale(nu)],
                ]
            }
        }
        KernelCase::C => {
            not_zero(theta0.eval(alpha)?, "theta0(alpha)")?;
            not_zero(theta1.eval(alpha)?, "theta1(alpha)")?;
            vec![vec![s(ba.mul(theta1)), zero()], vec![zero(), s(ba.mul(theta0))]]
        }
        KernelCase::D => {
            if n0 == 0 || n1 == 0 {
                return Err(Error::CaseHypothesisViolated("theta0 and theta1 must both vanish at alpha".into()));
            }
            let t0p = theta0.div(&ba)?;
            let t1p = theta1.div(&ba)?;
            let ab = a.eval_analytic(alpha)? * b.eval_analytic(alpha)?;
            let tt = t0p.eval(alpha)? * t1p.eval(alpha)?;
            if (ab - tt).norm() > ZERO_MATCH_TOL {
                vec![vec![s(theta1.clone()), zero()], vec![zero(), s(theta0.clone())]]
            } else {
                let t1pa = t1p.eval(alpha)?;
                not_zero(t1pa, "theta1'(alpha)")?;
                let gamma = -a.eval_analytic(alpha)? / t1pa;
                let nu = Complex64::new(1.0 / (gamma.norm_sqr() + 1.0).sqrt(), 0.0);
                vec![
                    vec![s(theta1.clone()).scale(nu), s(t1p).scale(gamma * nu)],
                    vec![s(theta0.clone()).scale(-gamma.conj() * nu), s(t0p).scale(nu)],
                ]
            }
        }
    };
    InnerMatrixFunction::new(MatrixSymbol::from_rows(rows)?)
}

/// Outcome of [`kernel_check`].
#[derive(Clone, Debug)]
pub struct KernelCheck {
    pub verdict: Verdict,
    pub max_residual: f64,
    pub rank: usize,
    pub expected_rank: usize,
}

/// Relative singular-value threshold for numerical Hankel rank.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Numerical rank of a matrix relative to its largest singular value.
pub fn numerical_rank(m: &DMatrix<Complex64>, rel: f64) -> usize {
    let s = m.singular_values();
    let top = s.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel * top).count()
}

/// Checks `ker H_{Φ_-^*} = Δ H^2` on a section with `size` blocks:
/// `H_{Φ_-^*}` must annihilate `Δ z^k e_j` for `k = 0..=3`, and its rank
/// must equal `deg det Δ`.
pub fn kernel_check(phi_minus: &MatrixSymbol, delta: &InnerMatrixFunction, size: usize, tol: f64) -> Result<KernelCheck> {
    let n = phi_minus.n();
    if delta.n() != n {
        return Err(Error::BlockMismatch(n, delta.n()));
    }
    let adj = phi_minus.adjoint();
    let cols = 4 * size;
    let h = hankel_rect(&adj, size, cols);
    let dc = delta.symbol().coefficients(0, cols);
    let (eh, ed) = (adj.envelope(), delta.symbol().envelope());
    let r = eh.rate.max(ed.rate);
    let mut max_residual = 0.0f64;
    let mut failure = None;
    for k in 0..4 {
        let tail = eh.constant * ed.constant * r.powi((cols + 1 - k) as i32) / (1.0 - r).powi(2);
        for j in 0..n {
            let mut f = nalgebra::DVector::zeros(n * cols);
            for m in k..cols {
                let block = dc.get((m - k) as i64);
                for i in 0..n {
                    f[m * n + i] = block[(i, j)];
                }
            }
            let residual = (&h * f).norm();
            max_residual = max_residual.max(residual);
            if residual > tol + tail && failure.is_none() {
                failure = Some(Witness::Annihilation { power: k, column: j, residual });
            }
        }
    }
    let rank = numerical_rank(&hankel_rect(&adj, size, size), RANK_REL_TOL);
    let expected_rank = delta.det_degree()?;
    let verdict = match failure {
        Some(w) => Verdict::fails(max_residual, size, w),
        None if rank != expected_rank => {
            Verdict::fails(max_residual, size, Witness::Rank { found: rank, expected: expected_rank })
        }
        None => Verdict::holds(max_residual, size),
    };
    Ok(KernelCheck { verdict, max_residual, rank, expected_rank })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn b(a: f64) -> FiniteBlaschkeProduct {
        FiniteBlaschkeProduct::factor(c(a, 0.0)).unwrap()
    }

    fn z() -> FiniteBlaschkeProduct {
        FiniteBlaschkeProduct::z_power(1)
    }

    fn s(x: FiniteBlaschkeProduct) -> ScalarSymbol {
        inner_scalar(x)
    }

    #[test]
    fn is_inner_examples() {
        let zz = s(z());
        let zero = ScalarSymbol::zero();
        let diag = MatrixSymbol::from_rows(vec![vec![zz.clone(), zero.clone()], vec![zero.clone(), zz.clone()]]).unwrap();
        assert!(is_inner(&diag, 64, 1e-12).0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rot = MatrixSymbol::from_rows(vec![
            vec![zz.scale(c(h, 0.0)), zz.scale(c(h, 0.0))],
            vec![zz.scale(c(h, 0.0)), zz.scale(c(-h, 0.0))],
        ])
        .unwrap();
        assert!(is_inner(&rot, 64, 1e-12).0);
        let bad = MatrixSymbol::from_rows(vec![vec![zz.clone(), zero.clone()], vec![zero, zz.scale(c(2.0, 0.0))]]).unwrap();
        assert!(!is_inner(&bad, 64, 1e-12).0);
    }

    #[test]
    fn diagonal_hull_examples() {
        let d = InnerMatrixFunction::diagonal(vec![b(0.5), b(0.5)]).unwrap();
        assert!(diagonal_hull(&d).unwrap().same_zeros(&b(0.5), 1e-9));

        let d = InnerMatrixFunction::diagonal(vec![b(0.5), b(0.2)]).unwrap();
        assert!(diagonal_hull(&d).unwrap().same_zeros(&b(0.5).mul(&b(0.2)), 1e-9));

        // diag(z^2, 1) times a constant unitary
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z2 = s(FiniteBlaschkeProduct::z_power(2));
        let one = ScalarSymbol::constant(ONE);
        let d = InnerMatrixFunction::new(
            MatrixSymbol::from_rows(vec![
                vec![z2.scale(c(h, 0.0)), z2.scale(c(h, 0.0))],
                vec![one.scale(c(h, 0.0)), one.scale(c(-h, 0.0))],
            ])
            .unwrap(),
        )
        .unwrap();
        let hull = diagonal_hull(&d).unwrap();
        assert!(hull.same_zeros(&FiniteBlaschkeProduct::z_power(2), 1e-9));
        assert_eq!(d.det_degree().unwrap(), 2);
    }

    #[test]
    fn coprime_examples() {
        let d = InnerMatrixFunction::diagonal(vec![b(0.3), b(-0.4)]).unwrap();
        assert!(coprime_diag(&b(0.7), &d).unwrap());
        assert!(!coprime_diag(&b(0.3), &d).unwrap());
        assert!(coprime_det(&b(0.7), &d).unwrap());
        assert!(!coprime_det(&b(-0.4), &d).unwrap());
        assert!(coprime_point_test(&b(0.7), d.symbol()).unwrap().0);
        assert_eq!(coprime_point_test(&b(0.3), d.symbol()).unwrap().0, false);

        let id = MatrixSymbol::constant(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(coprime_point_test(&z(), &id).unwrap(), (true, None));
        let proj = MatrixSymbol::constant(&DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), ONE])).unwrap();
        assert_eq!(coprime_point_test(&z(), &proj).unwrap(), (false, Some(c(0.0, 0.0))));
    }

    #[test]
    fn case_c_example() {
        let one = ScalarSymbol::constant(ONE);
        let d = lemma41_delta(&b(0.5), &b(0.3), &one, &one, c(0.0, 0.0), KernelCase::C).unwrap();
        let want = [z().mul(&b(0.3)), z().mul(&b(0.5))];
        for (i, w) in want.iter().enumerate() {
            let e = d.symbol().get(i, i);
            assert_eq!(e.terms().len(), 1);
            assert!(e.terms()[0].inner.same_zeros(w, 1e-12));
        }
        let pm = phi_minus(c(0.0, 0.0), &b(0.5), &b(0.3), &one, &one).unwrap();
        let check = kernel_check(&pm, &d, 24, 1e-9).unwrap();
        assert!(check.verdict.is_holds(), "{check:?}");
        assert_eq!(check.rank, 4);

        let wrong = InnerMatrixFunction::diagonal(vec![z(), z()]).unwrap();
        let check = kernel_check(&pm, &wrong, 24, 1e-9).unwrap();
        assert!(matches!(check.verdict.witness, Some(Witness::Annihilation { .. })));
    }

    #[test]
    fn scalar_shift_kernel() {
        let pm = MatrixSymbol::scalar(s(z()));
        let d = InnerMatrixFunction::new(pm.clone()).unwrap();
        let check = kernel_check(&pm, &d, 12, 1e-12).unwrap();
        assert!(check.verdict.is_holds());
        assert_eq!(check.rank, 1);
    }

    #[test]
    fn case_hypotheses_are_validated() {
        let one = ScalarSymbol::constant(ONE);
        let err = lemma41_delta(&b(0.5), &b(0.3), &one, &one, c(0.5, 0.0), KernelCase::C).unwrap_err();
        assert!(matches!(err, Error::CaseHypothesisViolated(_)));
        let err = lemma41_delta(&b(0.5), &b(0.3), &one, &one, c(0.0, 0.0), KernelCase::A).unwrap_err();
        assert!(matches!(err, Error::CaseHypothesisViolated(_)));
    }
}
