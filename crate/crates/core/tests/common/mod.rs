#![allow(dead_code)]

use blocktoep::blaschke::FiniteBlaschkeProduct;
use blocktoep::symbol::{MatrixSymbol, ScalarSymbol};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn b(a: Complex64) -> FiniteBlaschkeProduct {
    FiniteBlaschkeProduct::factor(a).unwrap()
}

pub fn br(a: f64) -> FiniteBlaschkeProduct {
    b(r(a))
}

pub fn z() -> ScalarSymbol {
    ScalarSymbol::analytic(ONE, FiniteBlaschkeProduct::z_power(1))
}

pub fn inner(x: &FiniteBlaschkeProduct) -> ScalarSymbol {
    ScalarSymbol::analytic(ONE, x.clone())
}

pub fn coinner(x: &FiniteBlaschkeProduct) -> ScalarSymbol {
    ScalarSymbol::coanalytic(ONE, x.clone())
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// `[[z̄, z̄+2z], [z̄+2z, z̄]]`.
pub fn cor43() -> MatrixSymbol {
    let off = z().conj().add(&z().scale(r(2.0)));
    MatrixSymbol::from_rows(vec![vec![z().conj(), off.clone()], vec![off, z().conj()]]).unwrap()
}

pub struct Example22 {
    pub phi: MatrixSymbol,
    pub k: MatrixSymbol,
    pub c: f64,
    pub theta: FiniteBlaschkeProduct,
    pub alpha: f64,
    pub beta: f64,
}

pub const EX22_SAMPLES: usize = 4096;

/// `θ = b_0.7`, `α = 0.3`, `β = -0.4`,
/// `Φ = [[θ̄, conj(θ b_α) + c θ b_β], [conj(b_β) + c θ² b_α, θ̄]]`,
/// `K = (1/c) [[θ, b_β], [θ b_α, θ]]` with `c = sup ||[[θ, b_β], [θ b_α, θ]]|| + 0.1`.
pub fn example22() -> Example22 {
    let (alpha, beta) = (0.3, -0.4);
    let theta = br(0.7);
    let (ba, bb) = (br(alpha), br(beta));
    let m = MatrixSymbol::from_rows(vec![
        vec![inner(&theta), inner(&bb)],
        vec![inner(&theta.mul(&ba)), inner(&theta)],
    ])
    .unwrap();
    let cc = m.sup_norm(EX22_SAMPLES) + 0.1;
    let k = m.scale(r(1.0 / cc));
    let phi = MatrixSymbol::from_rows(vec![
        vec![coinner(&theta), coinner(&theta.mul(&ba)).add(&inner(&theta.mul(&bb)).scale(r(cc)))],
        vec![coinner(&bb).add(&inner(&theta.powi(2).mul(&ba)).scale(r(cc))), coinner(&theta)],
    ])
    .unwrap();
    Example22 { phi, k, c: cc, theta, alpha, beta }
}

pub fn unit_disk_point(rng: &mut ChaCha8Rng, max_radius: f64) -> Complex64 {
    let rad = max_radius * rng.gen::<f64>().sqrt();
    Complex64::from_polar(rad, rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn random_coeff(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_blaschke(rng: &mut ChaCha8Rng, degree: usize, max_radius: f64) -> FiniteBlaschkeProduct {
    let zeros = (0..degree).map(|_| unit_disk_point(rng, max_radius)).collect();
    let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    FiniteBlaschkeProduct::new(phase, zeros).unwrap()
}

/// A random `n x n` grammar symbol whose entries have total Blaschke
/// degree at most `max_degree`.
pub fn random_symbol(rng: &mut ChaCha8Rng, n: usize, max_degree: usize, max_radius: f64) -> MatrixSymbol {
    let mut cells = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let mut s = ScalarSymbol::constant(random_coeff(rng));
        let mut budget = max_degree;
        while budget > 0 && rng.gen_bool(0.7) {
            let d = rng.gen_range(1..=budget);
            budget -= d;
            let inner = random_blaschke(rng, d, max_radius);
            let t = if rng.gen_bool(0.5) {
                ScalarSymbol::analytic(random_coeff(rng), inner)
            } else {
                ScalarSymbol::coanalytic(random_coeff(rng), inner)
            };
            s = s.add(&t);
        }
        cells.push(s);
    }
    MatrixSymbol::new(n, cells).unwrap()
}

/// Analytic random symbol of the same shape.
pub fn random_analytic_symbol(rng: &mut ChaCha8Rng, n: usize, max_degree: usize, max_radius: f64) -> MatrixSymbol {
    random_symbol(rng, n, max_degree, max_radius).map(|e| e.analytic_part())
}

/// Haar-ish random unitary from the QR factorization of a Gaussian-like matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(n, n, |_, _| random_coeff(rng));
    m.qr().q()
}

pub fn constant_symbol(m: &DMatrix<Complex64>) -> MatrixSymbol {
    MatrixSymbol::constant(m).unwrap()
}

/// Matrix product of two symbols, entry by entry in the grammar. Only
/// valid when every product of terms is again a term (one factor
/// constant, or both of the same kind).
pub fn symbol_product(a: &MatrixSymbol, b: &MatrixSymbol) -> Option<MatrixSymbol> {
    let n = a.n();
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = ScalarSymbol::zero();
            for k in 0..n {
                acc = acc.add(&scalar_product(a.get(i, k), b.get(k, j))?);
            }
            cells.push(acc);
        }
    }
    MatrixSymbol::new(n, cells).ok()
}

fn scalar_product(x: &ScalarSymbol, y: &ScalarSymbol) -> Option<ScalarSymbol> {
    let mut acc = ScalarSymbol::zero();
    for s in x.terms() {
        for t in y.terms() {
            let term = if s.is_constant() {
                ScalarSymbol::new(vec![t.clone()]).scale(s.coeff)
            } else if t.is_constant() {
                ScalarSymbol::new(vec![s.clone()]).scale(t.coeff)
            } else if s.kind == t.kind {
                let inner = s.inner.mul(&t.inner);
                match s.kind {
                    blocktoep::symbol::TermKind::Analytic => ScalarSymbol::analytic(s.coeff * t.coeff, inner),
                    blocktoep::symbol::TermKind::Coanalytic => ScalarSymbol::coanalytic(s.coeff * t.coeff, inner),
                }
            } else {
                return None;
            };
            acc = acc.add(&term);
        }
    }
    Some(acc)
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Minimal divisor `δ` of `det Δ` with `δ Δ^{-1}` analytic, by brute force
/// over sub-multisets of the known zeros of `det Δ`. Analyticity near a
/// zero `w` is judged by whether `||δ Δ^{-1}||` blows up as `z -> w`.
pub fn hull_by_enumeration(delta: &MatrixSymbol, det_zeros: &[Complex64]) -> FiniteBlaschkeProduct {
    let k = det_zeros.len();
    let mut best: Option<FiniteBlaschkeProduct> = None;
    for mask in 0u32..(1 << k) {
        let pick: Vec<Complex64> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| det_zeros[i]).collect();
        if best.as_ref().is_some_and(|b| b.degree() <= pick.len()) {
            continue;
        }
        let d = FiniteBlaschkeProduct::from_zeros(pick).unwrap();
        if det_zeros.iter().all(|&w| bounded_near(delta, &d, w)) {
            best = Some(d);
        }
    }
    best.expect("det itself always works")
}

fn bounded_near(delta: &MatrixSymbol, d: &FiniteBlaschkeProduct, w: Complex64) -> bool {
    let norm_at = |eps: f64| {
        (0..6)
            .map(|j| {
                let z = w + Complex64::from_polar(eps, 0.3 + j as f64);
                let m = delta.eval_analytic(z).unwrap();
                let inv = m.try_inverse().unwrap();
                (inv * d.eval(z).unwrap()).norm()
            })
            .fold(0.0, f64::max)
    };
    norm_at(1e-4) < 5.0 * norm_at(1e-3)
}

/// Largest sampled boundary difference of two symbols.
pub fn boundary_distance(a: &MatrixSymbol, b: &MatrixSymbol) -> f64 {
    blocktoep::symbol::sample_angles(128)
        .map(|t| max_abs(&(a.boundary(t) - b.boundary(t))))
        .fold(0.0, f64::max)
}
