//! Operator-level verdicts on finite sections, plus symbol-level
//! certificates.
//!
//! `Holds` only ever means "no counterexample at the tested truncations":
//! positivity of every compression is equivalent to positivity of the
//! operator, but only a failure is finitely certifiable.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy_ops::{self, product_bound_for, OpFactor, TruncatedOperator};
use crate::quadrature::{fourier_blocks, QUAD_POINTS};
use crate::symbol::{hermitian_norm, spectral_norm, MatrixSymbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Witness {
    /// `H v = value v` with `v` a unit vector.
    Eigenpair { value: f64, vector: Vec<[f64; 2]> },
    /// `||A v|| = value` with `v` a unit vector.
    NormAttained { value: f64, vector: Vec<[f64; 2]> },
    /// A Fourier coefficient that should vanish but has this norm.
    Coefficient { index: i64, norm: f64 },
    /// A sampled sup norm exceeding its bound.
    SupNorm { value: f64 },
    /// Largest sampled pointwise defect of a symbol identity.
    PointwiseDefect { value: f64 },
    /// Least-squares residual and unitarity defect of a solve.
    Residual { residual: f64, unitarity: f64 },
    /// A kernel candidate `z^power e_column` that the operator does not annihilate.
    Annihilation { power: usize, column: usize, residual: f64 },
    /// Numerical rank differing from the predicted one.
    Rank { found: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub defect: f64,
    #[serde(rename = "atN")]
    pub at_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn holds(defect: f64, at_n: usize) -> Self {
        Self { status: Status::Holds, defect, at_n, witness: None }
    }

    pub fn fails(defect: f64, at_n: usize, witness: Witness) -> Self {
        Self { status: Status::Fails, defect, at_n, witness: Some(witness) }
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }
}

pub const DEFAULT_LADDER: [usize; 3] = [16, 32, 64];

fn pack(v: &DVector<Complex64>) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

/// Eigenvalues in ascending order, ties by original index.
fn sorted_eigen(h: &DMatrix<Complex64>) -> (Vec<(f64, usize)>, SymmetricEigen<Complex64, nalgebra::Dyn>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().zip(0..).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (order, eig)
}

/// `λ_min(H) >= -tol`, with the most negative eigenpair as witness.
pub fn psd_check(h: &DMatrix<Complex64>, tol: f64, at_n: usize) -> Verdict {
    if h.is_empty() {
        return Verdict::holds(0.0, at_n);
    }
    let (order, eig) = sorted_eigen(h);
    let (lmin, idx) = order[0];
    if lmin < -tol {
        let v = eig.eigenvectors.column(idx).into_owned();
        Verdict::fails(-lmin, at_n, Witness::Eigenpair { value: lmin, vector: pack(&v) })
    } else {
        Verdict::holds(lmin.min(0.0).abs(), at_n)
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn lambda_min(h: &DMatrix<Complex64>) -> f64 {
    h.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `[T_Φ^*, T_Φ] >= 0` on every section in `ladder`; stops at the first
/// failure.
pub fn hyponormal(phi: &MatrixSymbol, ladder: &[usize], tol: f64) -> Result<Verdict> {
    let mut last = Verdict::holds(0.0, 0);
    for &size in ladder {
        let c = hardy_ops::self_commutator(phi, size, tol)?;
        last = psd_check(&c.matrix, tol, size);
        if last.is_fails() {
            return Ok(last);
        }
    }
    Ok(last)
}

/// `||[T_Φ^*, T_Φ]|| <= tol` on every section in `ladder`.
pub fn normal_operator(phi: &MatrixSymbol, ladder: &[usize], tol: f64) -> Result<Verdict> {
    let mut worst = 0.0f64;
    let mut at = 0;
    for &size in ladder {
        let c = hardy_ops::self_commutator(phi, size, tol)?;
        let (order, eig) = sorted_eigen(&c.matrix);
        let (lo, hi) = (order[0], order[order.len() - 1]);
        let (value, idx) = if hi.0.abs() > lo.0.abs() { hi } else { lo };
        if value.abs() > tol {
            let v = eig.eigenvectors.column(idx).into_owned();
            return Ok(Verdict::fails(value.abs(), size, Witness::Eigenpair { value, vector: pack(&v) }));
        }
        worst = worst.max(value.abs());
        at = size;
    }
    Ok(Verdict::holds(worst, at))
}

fn norm_verdict(m: &DMatrix<Complex64>, tol: f64, at_n: usize) -> Verdict {
    let svd = m.clone().svd(false, true);
    let (idx, value) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    if value <= tol {
        return Verdict::holds(value, at_n);
    }
    let v_t = svd.v_t.expect("requested right singular vectors");
    let v = v_t.row(idx).adjoint();
    Verdict::fails(value, at_n, Witness::NormAttained { value, vector: pack(&v) })
}

/// `||P_N T^* [T^*, T] P_N||`; zero exactly when `T` is quasinormal.
pub fn quasinormal_defect(phi: &MatrixSymbol, size: usize, buffer: usize, tol: f64) -> Result<Verdict> {
    let t = OpFactor::toeplitz(phi);
    let ts = t.clone().adjoint();
    let a = hardy_ops::op_product(&[ts.clone(), ts.clone(), t.clone()], size, buffer, tol)?;
    let b = hardy_ops::op_product(&[ts.clone(), t, ts], size, buffer, tol)?;
    Ok(norm_verdict(&(a.matrix - b.matrix), tol, size))
}

/// Quasinormality of `T_{Φ - β I}`.
pub fn quasinormal_after_shift(
    phi: &MatrixSymbol,
    beta: Complex64,
    size: usize,
    buffer: usize,
    tol: f64,
) -> Result<Verdict> {
    quasinormal_defect(&phi.shift(beta), size, buffer, tol)
}

/// The `k x k` block matrix `(T^{*j} T^i - T^i T^{*j})_{i,j}` compressed to
/// `N` blocks, each word formed on `N + buffer` blocks.
pub fn k_hyponormal_matrix(phi: &MatrixSymbol, k: usize, size: usize, buffer: usize, tol: f64) -> Result<TruncatedOperator> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("k-hyponormality needs k in 1..=3, got {k}")));
    }
    let n = phi.n();
    let env = phi.envelope();
    let mut bound = 0.0;
    for i in 1..=k {
        for j in 1..=k {
            bound += 2.0 * product_bound_for(&vec![phi; i + j], size, buffer);
        }
    }
    if !(bound <= tol) {
        return Err(Error::BufferTooSmall { bound, tol });
    }
    let big = size + buffer;
    let t = OpFactor::toeplitz(phi).section(big);
    let ts = t.adjoint();
    let mut tp = vec![DMatrix::identity(n * big, n * big)];
    let mut sp = vec![DMatrix::identity(n * big, n * big)];
    for p in 1..=k {
        tp.push(&tp[p - 1] * &t);
        sp.push(&sp[p - 1] * &ts);
    }
    let d = n * size;
    let mut m = DMatrix::zeros(k * d, k * d);
    for i in 1..=k {
        for j in 1..=k {
            let word = &sp[j] * &tp[i] - &tp[i] * &sp[j];
            m.view_mut(((i - 1) * d, (j - 1) * d), (d, d)).copy_from(&word.view((0, 0), (d, d)));
        }
    }
    let matrix = (&m + m.adjoint()).scale(0.5);
    Ok(TruncatedOperator {
        n,
        size,
        matrix,
        decay_rate: env.zero_radius,
        tail_constant: env.constant,
        error_bound: bound,
    })
}

pub fn k_hyponormal(phi: &MatrixSymbol, k: usize, size: usize, buffer: usize, tol: f64) -> Result<Verdict> {
    let m = k_hyponormal_matrix(phi, k, size, buffer, tol)?;
    Ok(psd_check(&m.matrix, tol, size))
}

/// Number of eigenvalues of the compressed self-commutator above `tol` in
/// modulus, grown in steps of 8 until two consecutive sections agree.
pub fn commutator_rank(phi: &MatrixSymbol, size: usize, tol: f64) -> Result<usize> {
    let count = |s: usize| -> Result<usize> {
        let c = hardy_ops::self_commutator(phi, s, tol)?;
        Ok(c.matrix.symmetric_eigenvalues().iter().filter(|v| v.abs() > tol).count())
    };
    let mut s = size;
    let mut prev = count(s)?;
    for _ in 0..4 {
        let next = count(s + 8)?;
        if next == prev {
            break;
        }
        prev = next;
        s += 8;
    }
    Ok(prev)
}

/// `||K||_∞ <= 1` and `Φ - K Φ^*` analytic, checked on sampled data.
pub fn ghr_certificate(phi: &MatrixSymbol, k: &MatrixSymbol, samples: usize, tol: f64) -> Result<Verdict> {
    if phi.n() != k.n() {
        return Err(Error::BlockMismatch(phi.n(), k.n()));
    }
    let sup = k.sup_norm(samples);
    if sup > 1.0 + tol {
        return Ok(Verdict::fails(sup - 1.0, 0, Witness::SupNorm { value: sup }));
    }
    let (ep, ek) = (phi.envelope(), k.envelope());
    let r = ep.rate.max(ek.rate);
    let depth = match (ep.band, ek.band) {
        (Some(a), Some(b)) => a + b,
        _ => {
            let mut m = 1usize;
            let bound = |m: usize| {
                let m = m as f64;
                (ep.constant + ek.constant * ep.constant * (m + 1.0 + 2.0 / (1.0 - r * r))) * r.powf(m)
            };
            while bound(m) > 1e-2 * tol && m < QUAD_POINTS / 4 {
                m += 1;
            }
            m
        }
    };
    let coeffs = fourier_blocks(
        |t| {
            let p = phi.boundary(t);
            &p - k.boundary(t) * p.adjoint()
        },
        phi.n(),
        depth,
        0,
        QUAD_POINTS,
    );
    let (index, norm) = (1..=depth as i64)
        .map(|m| (-m, spectral_norm(&coeffs.get(-m))))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if norm > tol {
        Ok(Verdict::fails(norm, depth, Witness::Coefficient { index, norm }))
    } else {
        Ok(Verdict::holds(norm.max(sup - 1.0).max(0.0), depth))
    }
}

/// Samples used to decide that `det Φ_+` is not identically zero.
const DET_SAMPLES: usize = 16;

/// Solves `Φ_+^(m) = Φ_-^(m) U` for `m = 1..=max_index` in least squares
/// and tests whether the solution is an exact unitary.
pub fn normality_unitary_test(
    phi: &MatrixSymbol,
    max_index: Option<usize>,
    tol: f64,
) -> Result<(Verdict, Option<DMatrix<Complex64>>)> {
    let n = phi.n();
    let (plus, minus) = phi.split();
    let degenerate = crate::symbol::sample_angles(DET_SAMPLES)
        .all(|t| plus.boundary(t).determinant().norm() < 1e-12);
    if degenerate {
        return Err(Error::DegenerateDeterminant);
    }
    let max_index = max_index.unwrap_or(2 * phi.max_degree() + 4);
    let pc = plus.coefficients(0, max_index);
    let mc = minus.coefficients(0, max_index);
    let mut a = DMatrix::zeros(n * max_index, n);
    let mut b = DMatrix::zeros(n * max_index, n);
    for m in 1..=max_index {
        a.view_mut(((m - 1) * n, 0), (n, n)).copy_from(&mc.get(m as i64));
        b.view_mut(((m - 1) * n, 0), (n, n)).copy_from(&pc.get(m as i64));
    }
    let u = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let residual = (&a * &u - &b).norm();
    let unitarity = hermitian_norm(&(u.adjoint() * &u - DMatrix::identity(n, n)));
    let defect = residual.max(unitarity);
    let verdict = if defect <= tol {
        Verdict::holds(defect, max_index)
    } else {
        Verdict::fails(defect, max_index, Witness::Residual { residual, unitarity })
    };
    Ok((verdict, Some(u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::FiniteBlaschkeProduct;
    use crate::symbol::ScalarSymbol;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn z() -> ScalarSymbol {
        ScalarSymbol::analytic(ONE, FiniteBlaschkeProduct::z_power(1))
    }

    fn cor43() -> MatrixSymbol {
        let off = z().conj().add(&z().scale(c(2.0)));
        MatrixSymbol::from_rows(vec![vec![z().conj(), off.clone()], vec![off, z().conj()]]).unwrap()
    }

    #[test]
    fn psd_examples() {
        let mut h = DMatrix::zeros(3, 3);
        h[(0, 0)] = c(3.0);
        assert!(psd_check(&h, 1e-12, 3).is_holds());
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, -ONE]));
        let v = psd_check(&h, 1e-12, 2);
        assert!(v.is_fails());
        match v.witness {
            Some(Witness::Eigenpair { value, .. }) => assert!((value + 1.0).abs() < 1e-15),
            other => panic!("unexpected witness {other:?}"),
        }
    }

    #[test]
    fn shift_is_hyponormal_not_normal() {
        let s = MatrixSymbol::scalar(z());
        assert!(hyponormal(&s, &[8, 16], 1e-10).unwrap().is_holds());
        let v = normal_operator(&s, &[8], 1e-10).unwrap();
        assert!(v.is_fails());
        assert!((v.defect - 1.0).abs() < 1e-12);
        assert!(quasinormal_defect(&s, 8, 4, 1e-12).unwrap().is_holds());
        assert!(k_hyponormal(&s, 2, 8, 8, 1e-12).unwrap().is_holds());
        assert_eq!(commutator_rank(&s, 8, 1e-10).unwrap(), 1);
    }

    #[test]
    fn corollary_symbol_is_quasinormal() {
        let phi = cor43();
        assert!(hyponormal(&phi, &[8, 16], 1e-10).unwrap().is_holds());
        let v = normal_operator(&phi, &[8], 1e-10).unwrap();
        assert!((v.defect - 4.0).abs() < 1e-10);
        let q = quasinormal_defect(&phi, 8, 8, 1e-12).unwrap();
        assert!(q.is_holds() && q.defect <= 1e-12);
        assert!(k_hyponormal(&phi, 2, 8, 16, 1e-10).unwrap().is_holds());
        assert_eq!(commutator_rank(&phi, 8, 1e-10).unwrap(), 1);
    }

    #[test]
    fn zbar_plus_2z_is_not_quasinormal() {
        let phi = MatrixSymbol::scalar(z().conj().add(&z().scale(c(2.0))));
        let q = quasinormal_defect(&phi, 8, 8, 1e-10).unwrap();
        assert!(q.is_fails());
        assert!((q.defect - 3.0).abs() < 1e-12);
    }

    #[test]
    fn family_one_at_origin_has_zero_commutator() {
        let phi = MatrixSymbol::from_rows(vec![vec![z().conj(), z()], vec![z(), z().conj()]]).unwrap();
        assert_eq!(commutator_rank(&phi, 8, 1e-10).unwrap(), 0);
        assert!(normal_operator(&phi, &[8, 16], 1e-10).unwrap().is_holds());
    }

    #[test]
    fn ghr_examples() {
        let phi = MatrixSymbol::scalar(z().conj().add(&z().scale(c(2.0))));
        let k = MatrixSymbol::scalar(ScalarSymbol::constant(c(0.5)));
        assert!(ghr_certificate(&phi, &k, 256, 1e-10).unwrap().is_holds());

        let phi = MatrixSymbol::scalar(z().conj());
        let k = MatrixSymbol::scalar(ScalarSymbol::zero());
        let v = ghr_certificate(&phi, &k, 256, 1e-10).unwrap();
        assert_eq!(v.witness, Some(Witness::Coefficient { index: -1, norm: 1.0 }));
    }

    #[test]
    fn unitary_test_examples() {
        let zero = ScalarSymbol::zero();
        let phi = MatrixSymbol::from_rows(vec![
            vec![z().conj(), z()],
            vec![z(), z().conj()],
        ])
        .unwrap();
        let (v, u) = normality_unitary_test(&phi, None, 1e-10).unwrap();
        assert!(v.is_holds());
        let u = u.unwrap();
        assert!((u[(0, 1)] - ONE).norm() < 1e-12 && u[(0, 0)].norm() < 1e-12);

        let s5 = 5f64.sqrt();
        let phi_entry = z().conj().scale(c(2.0)).add(&z().scale(c(s5)));
        let phi = MatrixSymbol::from_rows(vec![
            vec![z().conj(), phi_entry.clone()],
            vec![phi_entry.scale(-ONE), z().conj()],
        ])
        .unwrap();
        let (v, _) = normality_unitary_test(&phi, None, 1e-10).unwrap();
        assert!(v.is_holds());

        let bad = MatrixSymbol::from_rows(vec![vec![z().conj(), zero.clone()], vec![zero, z().conj()]]).unwrap();
        assert_eq!(normality_unitary_test(&bad, None, 1e-10).unwrap_err(), Error::DegenerateDeterminant);
    }

    #[test]
    fn verdict_json_shape() {
        let v = Verdict::fails(1.0, 4, Witness::Coefficient { index: -1, norm: 1.0 });
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"status":"Fails","defect":1.0,"atN":4,"witness":{"kind":"coefficient","index":-1,"norm":1.0}}"#);
    }
}
