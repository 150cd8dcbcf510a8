//! Scalar and matrix symbols written as finite sums of analytic terms
//! `c * B(z)` and coanalytic terms `c * conj(B(z))`, `B` a finite Blaschke
//! product.
//!
//! The grammar is closed under adjoints, sums and scalar multiples, and the
//! Riesz projections act term by term, so `split` is exact. Pointwise
//! products such as `Φ*Φ` leave the grammar and are handled by sampling
//! (see [`crate::quadrature`]).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blaschke::{FiniteBlaschkeProduct, ZERO_MATCH_TOL};
use crate::error::{Error, Result};
use crate::poly::{Poly, RationalFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Terms whose coefficient falls below this are dropped on normalization.
pub const COEFF_DROP: f64 = 1e-14;

/// Default number of boundary samples for sup norms and normality checks.
pub const DEFAULT_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Analytic,
    Coanalytic,
}

#[derive(Clone, Debug)]
pub struct SymbolTerm {
    pub coeff: Complex64,
    pub kind: TermKind,
    pub inner: FiniteBlaschkeProduct,
}

impl SymbolTerm {
    pub fn analytic(coeff: Complex64, inner: FiniteBlaschkeProduct) -> Self {
        Self { coeff, kind: TermKind::Analytic, inner }
    }

    pub fn coanalytic(coeff: Complex64, inner: FiniteBlaschkeProduct) -> Self {
        Self { coeff, kind: TermKind::Coanalytic, inner }
    }

    pub fn is_constant(&self) -> bool {
        self.inner.is_constant()
    }

    pub fn boundary(&self, t: f64) -> Complex64 {
        let v = self.inner.boundary(t);
        match self.kind {
            TermKind::Analytic => self.coeff * v,
            TermKind::Coanalytic => self.coeff * v.conj(),
        }
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        let kind = match self.kind {
            TermKind::Analytic => TermKind::Coanalytic,
            TermKind::Coanalytic => TermKind::Analytic,
        };
        Self { coeff: self.coeff.conj(), kind, inner: self.inner.clone() }
    }

    /// Folds the inner constant into the coefficient; degree-0 terms become
    /// analytic constants with trivial inner part.
    fn canonical(&self) -> Self {
        let lambda = self.inner.constant();
        let coeff = match self.kind {
            TermKind::Analytic => self.coeff * lambda,
            TermKind::Coanalytic => self.coeff * lambda.conj(),
        };
        if self.inner.is_constant() {
            return Self::analytic(coeff, FiniteBlaschkeProduct::one());
        }
        Self { coeff, kind: self.kind, inner: self.inner.normalized() }
    }
}

/// Fourier coefficients of a scalar symbol at indices `-neg..=pos`.
#[derive(Clone, Debug)]
pub struct FourierTable {
    pos: Vec<Complex64>,
    neg: Vec<Complex64>,
}

impl FourierTable {
    pub fn get(&self, k: i64) -> Complex64 {
        if k >= 0 {
            self.pos.get(k as usize).copied().unwrap_or(ZERO)
        } else {
            self.neg.get((-k) as usize).copied().unwrap_or(ZERO)
        }
    }
}

/// A finite sum of symbol terms in canonical form.
#[derive(Clone, Debug, Default)]
pub struct ScalarSymbol {
    terms: Vec<SymbolTerm>,
}

impl ScalarSymbol {
    pub fn new(terms: Vec<SymbolTerm>) -> Self {
        let mut out: Vec<SymbolTerm> = Vec::new();
        for t in terms.iter().map(SymbolTerm::canonical) {
            match out
                .iter_mut()
                .find(|o| o.kind == t.kind && o.inner.same_zeros(&t.inner, ZERO_MATCH_TOL))
            {
                Some(o) => o.coeff += t.coeff,
                None => out.push(t),
            }
        }
        out.retain(|t| t.coeff.norm() > COEFF_DROP);
        Self { terms: out }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![SymbolTerm::analytic(c, FiniteBlaschkeProduct::one())])
    }

    pub fn analytic(c: Complex64, inner: FiniteBlaschkeProduct) -> Self {
        Self::new(vec![SymbolTerm::analytic(c, inner)])
    }

    pub fn coanalytic(c: Complex64, inner: FiniteBlaschkeProduct) -> Self {
        Self::new(vec![SymbolTerm::coanalytic(c, inner)])
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().chain(other.terms.iter()).cloned().collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| SymbolTerm { coeff: t.coeff * s, ..t.clone() })
                .collect(),
        )
    }

    pub fn conj(&self) -> Self {
        Self::new(self.terms.iter().map(SymbolTerm::conj).collect())
    }

    /// No nonconstant coanalytic term.
    pub fn is_analytic(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.kind == TermKind::Analytic || t.is_constant())
    }

    pub fn is_coanalytic(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.kind == TermKind::Coanalytic || t.is_constant())
    }

    /// Coefficient of the degree-0 term (0 when absent).
    pub fn constant_term(&self) -> Complex64 {
        self.terms.iter().filter(|t| t.is_constant()).map(|t| t.coeff).sum()
    }

    /// Nonconstant terms of the given kind.
    pub fn nonconstant_terms(&self, kind: TermKind) -> impl Iterator<Item = &SymbolTerm> {
        self.terms.iter().filter(move |t| t.kind == kind && !t.is_constant())
    }

    pub fn boundary(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|term| term.boundary(t)).sum()
    }

    /// Value inside the disk; only defined for analytic symbols.
    pub fn eval_analytic(&self, z: Complex64) -> Result<Complex64> {
        if !self.is_analytic() {
            return Err(Error::NotAnalytic("coanalytic term has no interior value".into()));
        }
        let mut acc = ZERO;
        for t in &self.terms {
            acc += t.coeff * t.inner.eval(z)?;
        }
        Ok(acc)
    }

    /// The `index`-th Fourier coefficient.
    pub fn fourier(&self, index: i64) -> Complex64 {
        let m = index.unsigned_abs() as usize;
        self.fourier_table(m, m).get(index)
    }

    /// Coefficients at `-max_neg..=max_pos`.
    pub fn fourier_table(&self, max_neg: usize, max_pos: usize) -> FourierTable {
        let mut pos = vec![ZERO; max_pos + 1];
        let mut neg = vec![ZERO; max_neg + 1];
        for t in &self.terms {
            match t.kind {
                TermKind::Analytic => {
                    for (k, c) in t.inner.fourier_analytic(max_pos).into_iter().enumerate() {
                        pos[k] += t.coeff * c;
                    }
                }
                TermKind::Coanalytic => {
                    let series = t.inner.fourier_analytic(max_neg);
                    pos[0] += t.coeff * series[0].conj();
                    for (k, c) in series.into_iter().enumerate().skip(1) {
                        neg[k] += t.coeff * c.conj();
                    }
                }
            }
        }
        neg[0] = pos[0];
        FourierTable { pos, neg }
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.inner.degree()).max().unwrap_or(0)
    }

    pub fn zero_radius(&self) -> f64 {
        self.terms.iter().map(|t| t.inner.zero_radius()).fold(0.0, f64::max)
    }

    /// `P` applied to the symbol, with the constants of coanalytic terms
    /// moved here as well (so the coanalytic remainder vanishes at 0).
    pub fn analytic_part(&self) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            match t.kind {
                TermKind::Analytic => terms.push(t.clone()),
                TermKind::Coanalytic => terms.push(SymbolTerm::analytic(
                    t.coeff * t.inner.constant_at_origin().conj(),
                    FiniteBlaschkeProduct::one(),
                )),
            }
        }
        Self::new(terms)
    }

    /// `f_-` with `conj(f_-)` the strictly coanalytic part of the symbol;
    /// `f_-(0) = 0`.
    pub fn coanalytic_conj_part(&self) -> Self {
        let mut terms = Vec::new();
        for t in self.nonconstant_terms(TermKind::Coanalytic) {
            terms.push(SymbolTerm::analytic(t.coeff.conj(), t.inner.clone()));
            terms.push(SymbolTerm::analytic(
                -t.coeff.conj() * t.inner.constant_at_origin(),
                FiniteBlaschkeProduct::one(),
            ));
        }
        Self::new(terms)
    }

    /// Fourier-coefficient envelope `|f^(k)| <= C r^{|k|}`.
    pub fn envelope(&self, rate: f64) -> f64 {
        let radius = 1.0 / rate;
        self.terms
            .iter()
            .map(|t| {
                t.coeff.norm()
                    * t.inner
                        .zeros()
                        .iter()
                        .map(|a| (radius + a.norm()) / (1.0 - a.norm() * radius))
                        .product::<f64>()
            })
            .sum()
    }
}

impl FiniteBlaschkeProduct {
    /// `B(0)`.
    pub fn constant_at_origin(&self) -> Complex64 {
        self.zeros().iter().fold(self.constant(), |acc, a| acc * (-a))
    }
}

/// Geometric bound on the Fourier blocks of a symbol:
/// `||Φ^(k)|| <= constant * rate^{|k|}`, and `Φ^(k) = 0` for `|k| > band`
/// when the symbol is a trigonometric polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub rate: f64,
    pub constant: f64,
    pub band: Option<usize>,
    /// Largest zero modulus over all inner data.
    pub zero_radius: f64,
}

impl Envelope {
    /// Bound on `sum_{|k| >= m} ||Φ^(k)||` over one side.
    pub fn one_sided_tail(&self, m: usize) -> f64 {
        if let Some(w) = self.band {
            if m > w {
                return 0.0;
            }
        }
        self.constant * self.rate.powi(m as i32) / (1.0 - self.rate)
    }
}

/// Square matrix of scalar symbols, stored row-major.
#[derive(Clone, Debug)]
pub struct MatrixSymbol {
    n: usize,
    entries: Vec<ScalarSymbol>,
}

/// Fourier blocks at `-max_neg..=max_pos`.
#[derive(Clone, Debug)]
pub struct BlockCoefficients {
    pub n: usize,
    pos: Vec<DMatrix<Complex64>>,
    neg: Vec<DMatrix<Complex64>>,
}

impl BlockCoefficients {
    pub fn from_parts(n: usize, pos: Vec<DMatrix<Complex64>>, neg: Vec<DMatrix<Complex64>>) -> Self {
        Self { n, pos, neg }
    }

    pub fn get(&self, k: i64) -> DMatrix<Complex64> {
        let found = if k >= 0 { self.pos.get(k as usize) } else { self.neg.get((-k) as usize) };
        found.cloned().unwrap_or_else(|| DMatrix::zeros(self.n, self.n))
    }

    pub fn get_ref(&self, k: i64) -> Option<&DMatrix<Complex64>> {
        if k >= 0 {
            self.pos.get(k as usize)
        } else {
            self.neg.get((-k) as usize)
        }
    }
}

impl MatrixSymbol {
    pub fn new(n: usize, entries: Vec<ScalarSymbol>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "matrix symbol needs n >= 1 and n*n entries (n = {n}, got {})",
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<ScalarSymbol>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix symbol must be square".into()));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn scalar(s: ScalarSymbol) -> Self {
        Self { n: 1, entries: vec![s] }
    }

    pub fn constant(m: &DMatrix<Complex64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::InvalidArgument("constant symbol must be square".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(ScalarSymbol::constant(m[(i, j)]));
            }
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarSymbol {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[ScalarSymbol] {
        &self.entries
    }

    pub fn map(&self, f: impl Fn(&ScalarSymbol) -> ScalarSymbol) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(f).collect() }
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let entries = (0..n * n).map(|k| self.get(k % n, k / n).conj()).collect();
        Self { n, entries }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|e| e.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::BlockMismatch(self.n, other.n));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect();
        Ok(Self { n: self.n, entries })
    }

    /// `Φ - β I`.
    pub fn shift(&self, beta: Complex64) -> Self {
        let n = self.n;
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| if k / n == k % n { e.sub(&ScalarSymbol::constant(beta)) } else { e.clone() })
            .collect();
        Self { n, entries }
    }

    pub fn is_analytic(&self) -> bool {
        self.entries.iter().all(ScalarSymbol::is_analytic)
    }

    pub fn max_degree(&self) -> usize {
        self.entries.iter().map(ScalarSymbol::max_degree).max().unwrap_or(0)
    }

    pub fn zero_radius(&self) -> f64 {
        self.entries.iter().map(ScalarSymbol::zero_radius).fold(0.0, f64::max)
    }

    pub fn boundary(&self, t: f64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).boundary(t))
    }

    pub fn eval_analytic(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self.get(i, j).eval_analytic(z)?;
            }
        }
        Ok(m)
    }

    /// Matrix Fourier coefficient `Φ^(index)`.
    pub fn fourier(&self, index: i64) -> DMatrix<Complex64> {
        let m = index.unsigned_abs() as usize;
        self.coefficients(m, m).get(index)
    }

    pub fn coefficients(&self, max_neg: usize, max_pos: usize) -> BlockCoefficients {
        let tables: Vec<FourierTable> =
            self.entries.iter().map(|e| e.fourier_table(max_neg, max_pos)).collect();
        let n = self.n;
        let block = |k: i64| DMatrix::from_fn(n, n, |i, j| tables[i * n + j].get(k));
        BlockCoefficients {
            n,
            pos: (0..=max_pos as i64).map(block).collect(),
            neg: (0..=max_neg as i64).map(|k| block(-k)).collect(),
        }
    }

    /// `(Φ_+, Φ_-)` with `Φ = Φ_-^* + Φ_+` and `Φ_-(0) = 0`.
    pub fn split(&self) -> (Self, Self) {
        let n = self.n;
        let plus = self.map(ScalarSymbol::analytic_part);
        let entries = (0..n * n)
            .map(|k| self.get(k % n, k / n).coanalytic_conj_part())
            .collect();
        (plus, Self { n, entries })
    }

    /// Envelope with the default rate `ρ + (1 - ρ)/3` (`1/2` when banded).
    pub fn envelope(&self) -> Envelope {
        let rho = self.zero_radius();
        if rho == 0.0 {
            return self.envelope_at(0.5);
        }
        self.envelope_at(rho + (1.0 - rho) / 3.0)
    }

    /// Envelope at a given rate in `(ρ, 1)`.
    pub fn envelope_at(&self, rate: f64) -> Envelope {
        let zero_radius = self.zero_radius();
        let band = (zero_radius == 0.0).then(|| self.max_degree());
        let constant = self
            .entries
            .iter()
            .map(|e| e.envelope(rate).powi(2))
            .sum::<f64>()
            .sqrt();
        Envelope { rate, constant, band, zero_radius }
    }

    /// Envelope whose rate minimizes `C r^horizon`, for bounding tails that
    /// start `horizon` steps out.
    pub fn envelope_for_horizon(&self, horizon: usize) -> Envelope {
        let rho = self.zero_radius();
        if rho == 0.0 {
            return self.envelope();
        }
        [0.02, 0.05, 0.1, 0.2, 1.0 / 3.0, 0.5, 0.7]
            .iter()
            .map(|f| self.envelope_at(rho + (1.0 - rho) * f))
            .min_by(|a, b| {
                let score = |e: &Envelope| e.constant.ln() + horizon as f64 * e.rate.ln();
                score(a).total_cmp(&score(b))
            })
            .expect("nonempty grid")
    }

    /// Whether `Φ*Φ = ΦΦ*` at `samples` boundary points, with the largest
    /// spectral-norm defect seen.
    pub fn is_normal_symbol(&self, samples: usize, tol: f64) -> (bool, f64) {
        let defect = sample_angles(samples)
            .map(|t| {
                let m = self.boundary(t);
                let d = m.adjoint() * &m - &m * m.adjoint();
                hermitian_norm(&d)
            })
            .fold(0.0, f64::max);
        (defect <= tol, defect)
    }

    /// Largest sampled spectral norm; a lower estimate of `||Φ||_∞`.
    pub fn sup_norm(&self, samples: usize) -> f64 {
        sample_angles(samples.max(16))
            .map(|t| spectral_norm(&self.boundary(t)))
            .fold(0.0, f64::max)
    }
}

pub fn sample_angles(samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |k| 2.0 * PI * k as f64 / samples as f64)
}

pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn hermitian_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// `f_- = θ conj(b)` with `θ` inner of minimal degree and `b` analytic,
/// coprime with `θ`.
#[derive(Clone, Debug)]
pub struct CoprimeFactorization {
    pub theta: FiniteBlaschkeProduct,
    pub cofactor: RationalFunction,
}

impl CoprimeFactorization {
    /// `θ(e^{it}) conj(b(e^{it}))`.
    pub fn boundary(&self, t: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, t);
        self.theta.boundary(t) * self.cofactor.eval(z).conj()
    }
}

/// Relative threshold for deciding that the cofactor vanishes at a zero of θ.
const COFACTOR_ORDER_REL: f64 = 1e-10;

/// Coprime factorization of an analytic symbol `f_- = θ conj(b)`.
///
/// Starts from `θ = lcm` of the inner parts and `b = conj(f_-) θ`, then
/// strips every zero of `θ` at which `b` also vanishes.
pub fn coprime_factorization(fminus: &ScalarSymbol) -> Result<CoprimeFactorization> {
    if !fminus.is_analytic() {
        return Err(Error::NotAnalytic("coprime factorization expects f_- in H^2".into()));
    }
    if fminus.is_zero() {
        return Err(Error::ZeroSymbol);
    }
    let lcm = fminus
        .nonconstant_terms(TermKind::Analytic)
        .fold(FiniteBlaschkeProduct::one(), |acc, t| acc.lcm(&t.inner));

    // Common denominator prod (1 - conj(a) z) over the zeros of lcm.
    let mut numerator = Poly::from_roots(lcm.zeros()).scale(fminus.constant_term().conj());
    for t in fminus.nonconstant_terms(TermKind::Analytic) {
        let quotient = lcm.div(&t.inner)?;
        let part = Poly::from_roots(quotient.zeros())
            .mul(&Poly::pole_factors(t.inner.zeros()))
            .scale(t.coeff.conj() * quotient.constant());
        numerator = numerator.add(&part);
    }
    let mut theta_zeros = lcm.zeros().to_vec();
    let mut pole_zeros = lcm.zeros().to_vec();
    for (w, mult) in lcm.distinct_zeros(ZERO_MATCH_TOL) {
        let order = numerator.order_at(w, COFACTOR_ORDER_REL).min(mult);
        for _ in 0..order {
            numerator = numerator.deflate(w).0;
            remove_near(&mut theta_zeros, w);
            remove_near(&mut pole_zeros, w);
        }
    }
    Ok(CoprimeFactorization {
        theta: FiniteBlaschkeProduct::from_zeros(theta_zeros)?,
        cofactor: RationalFunction { numerator, denominator: Poly::pole_factors(&pole_zeros) },
    })
}

fn remove_near(v: &mut Vec<Complex64>, w: Complex64) {
    if let Some(pos) = v.iter().position(|a| (*a - w).norm() <= ZERO_MATCH_TOL) {
        v.remove(pos);
    }
}

// ---------------------------------------------------------------------------
// JSON wire format

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub coeff: [f64; 2],
    pub kind: TermKind,
    pub constant: [f64; 2],
    pub zeros: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSymbolJson {
    pub n: usize,
    pub entries: Vec<Vec<Vec<TermJson>>>,
}

/// Zeros must satisfy `|a| < 1 - ZERO_MARGIN` on input.
pub const ZERO_MARGIN: f64 = 1e-10;

fn cx(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl TermJson {
    pub fn to_term(&self) -> Result<SymbolTerm> {
        let zeros: Vec<Complex64> = self.zeros.iter().copied().map(cx).collect();
        if let Some(bad) = zeros.iter().find(|a| !(a.norm() < 1.0 - ZERO_MARGIN)) {
            return Err(Error::InvalidZero(*bad));
        }
        let inner = FiniteBlaschkeProduct::new(cx(self.constant), zeros)?;
        Ok(SymbolTerm { coeff: cx(self.coeff), kind: self.kind, inner })
    }

    pub fn from_term(t: &SymbolTerm) -> Self {
        Self {
            coeff: [t.coeff.re, t.coeff.im],
            kind: t.kind,
            constant: [t.inner.constant().re, t.inner.constant().im],
            zeros: t.inner.zeros().iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl MatrixSymbolJson {
    pub fn to_symbol(&self) -> Result<MatrixSymbol> {
        if self.entries.len() != self.n {
            return Err(Error::GrammarParse(format!(
                "entries has {} rows, n = {}",
                self.entries.len(),
                self.n
            )));
        }
        let mut rows = Vec::with_capacity(self.n);
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != self.n {
                return Err(Error::GrammarParse(format!("row {i} has {} entries", row.len())));
            }
            let mut out = Vec::with_capacity(self.n);
            for cell in row {
                let terms = cell.iter().map(TermJson::to_term).collect::<Result<Vec<_>>>()?;
                out.push(ScalarSymbol::new(terms));
            }
            rows.push(out);
        }
        MatrixSymbol::from_rows(rows)
    }

    pub fn from_symbol(s: &MatrixSymbol) -> Self {
        let entries = (0..s.n())
            .map(|i| {
                (0..s.n())
                    .map(|j| s.get(i, j).terms().iter().map(TermJson::from_term).collect())
                    .collect()
            })
            .collect();
        Self { n: s.n(), entries }
    }
}
