//! Finite sections of block Toeplitz and Hankel operators on `H^2(C^n)`.
//!
//! Matrices are block-major: row `k * n + i` is Fourier index `k`, component
//! `i`. Toeplitz block `(i, j)` is `Φ^(i - j)`, Hankel block `(i, j)` is
//! `Φ^(-(i + j + 1))`; with this convention
//! `T_{ΦΨ} - T_Φ T_Ψ = H_{Φ*}^* H_Ψ` and `H_{ΦΨ} = H_Φ T_Ψ` for analytic `Ψ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{fourier_blocks, product_alias_bound, QUAD_POINTS};
use crate::symbol::{BlockCoefficients, Envelope, MatrixSymbol};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_N: usize = 64;
pub const DEFAULT_BUFFER: usize = 32;

/// An `nN x nN` compression together with the data used to bound what the
/// compression dropped.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub n: usize,
    pub size: usize,
    pub matrix: DMatrix<Complex64>,
    /// Largest zero modulus in the generating symbols.
    pub decay_rate: f64,
    pub tail_constant: f64,
    /// Bound on the spectral norm of (computed - exact compression).
    pub error_bound: f64,
}

impl TruncatedOperator {
    pub fn block(&self, i: usize, j: usize) -> DMatrix<Complex64> {
        self.matrix.view((i * self.n, j * self.n), (self.n, self.n)).into_owned()
    }

    pub fn dim(&self) -> usize {
        self.n * self.size
    }
}

fn set_block(m: &mut DMatrix<Complex64>, n: usize, i: usize, j: usize, b: &DMatrix<Complex64>) {
    m.view_mut((i * n, j * n), (n, n)).copy_from(b);
}

/// Rectangular Toeplitz section with `rows x cols` blocks.
pub fn toeplitz_matrix(c: &BlockCoefficients, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let n = c.n;
    let mut m = DMatrix::zeros(rows * n, cols * n);
    for i in 0..rows {
        for j in 0..cols {
            if let Some(b) = c.get_ref(i as i64 - j as i64) {
                set_block(&mut m, n, i, j, b);
            }
        }
    }
    m
}

/// Rectangular Hankel section with `rows x cols` blocks.
pub fn hankel_matrix(c: &BlockCoefficients, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let n = c.n;
    let mut m = DMatrix::zeros(rows * n, cols * n);
    for i in 0..rows {
        for j in 0..cols {
            if let Some(b) = c.get_ref(-((i + j + 1) as i64)) {
                set_block(&mut m, n, i, j, b);
            }
        }
    }
    m
}

pub fn toeplitz_rect(phi: &MatrixSymbol, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let c = phi.coefficients(cols.saturating_sub(1), rows.saturating_sub(1));
    toeplitz_matrix(&c, rows, cols)
}

pub fn hankel_rect(phi: &MatrixSymbol, rows: usize, cols: usize) -> DMatrix<Complex64> {
    hankel_matrix(&phi.coefficients(rows + cols, 0), rows, cols)
}

fn wrap(phi: &MatrixSymbol, size: usize, matrix: DMatrix<Complex64>) -> TruncatedOperator {
    let env = phi.envelope();
    TruncatedOperator {
        n: phi.n(),
        size,
        matrix,
        decay_rate: env.zero_radius,
        tail_constant: env.constant,
        error_bound: 0.0,
    }
}

/// `P_N T_Φ P_N`.
pub fn toeplitz(phi: &MatrixSymbol, size: usize) -> TruncatedOperator {
    wrap(phi, size, toeplitz_rect(phi, size, size))
}

/// `P_N H_Φ P_N`.
pub fn hankel(phi: &MatrixSymbol, size: usize) -> TruncatedOperator {
    wrap(phi, size, hankel_rect(phi, size, size))
}

/// Number of Hankel rows needed so that the dropped rows of an `N`-column
/// Hankel section contribute at most `tol / 4` to `H^*H`.
pub fn hankel_depth(env: &Envelope, size: usize, tol: f64) -> usize {
    if let Some(w) = env.band {
        return size + w;
    }
    let (c, r) = (env.constant, env.rate);
    let tail = |k: usize| c * c * r.powi(2 * k as i32 + 2) / (1.0 - r * r).powi(2);
    let mut k = size;
    while tail(k) > tol / 4.0 && k < size + 100_000 {
        k += 1;
    }
    k
}

/// `P_N [T_Φ^*, T_Φ] P_N`, assembled as
/// `T(Φ*Φ - ΦΦ*) + H(Φ*)^* H(Φ*) - H(Φ)^* H(Φ)`.
pub fn self_commutator(phi: &MatrixSymbol, size: usize, tol: f64) -> Result<TruncatedOperator> {
    let n = phi.n();
    let env = phi.envelope();
    let max_index = size.saturating_sub(1);
    // Two products, each aliased on at most 2N - 1 block diagonals.
    let alias = 2.0 * (2 * size) as f64 * product_alias_bound(&env, max_index, QUAD_POINTS);
    if !(alias <= tol) {
        return Err(Error::GrammarOverflow {
            tol,
            reason: format!("aliasing bound {alias:e} at {QUAD_POINTS} nodes"),
        });
    }
    let defect = fourier_blocks(
        |t| {
            let m = phi.boundary(t);
            m.adjoint() * &m - &m * m.adjoint()
        },
        n,
        max_index,
        max_index,
        QUAD_POINTS,
    );
    let depth = hankel_depth(&env, size, tol);
    let adj = phi.adjoint();
    let h_adj = hankel_rect(&adj, depth, size);
    let h = hankel_rect(phi, depth, size);
    let m = toeplitz_matrix(&defect, size, size) + h_adj.adjoint() * &h_adj - h.adjoint() * &h;
    let matrix = (&m + m.adjoint()).scale(0.5);
    let tail = if env.band.is_some() {
        0.0
    } else {
        2.0 * env.constant.powi(2) * env.rate.powi(2 * depth as i32 + 2) / (1.0 - env.rate.powi(2)).powi(2)
    };
    Ok(TruncatedOperator {
        n,
        size,
        matrix,
        decay_rate: env.zero_radius,
        tail_constant: env.constant,
        error_bound: alias + tail,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Toeplitz,
    Hankel,
}

/// One factor of an operator product: `T_Φ`, `H_Φ`, or an adjoint.
#[derive(Clone, Debug)]
pub struct OpFactor {
    pub kind: OpKind,
    pub symbol: MatrixSymbol,
    pub adjoint: bool,
}

impl OpFactor {
    pub fn toeplitz(symbol: &MatrixSymbol) -> Self {
        Self { kind: OpKind::Toeplitz, symbol: symbol.clone(), adjoint: false }
    }

    pub fn hankel(symbol: &MatrixSymbol) -> Self {
        Self { kind: OpKind::Hankel, symbol: symbol.clone(), adjoint: false }
    }

    pub fn adjoint(mut self) -> Self {
        self.adjoint = !self.adjoint;
        self
    }

    /// Square section with `size` blocks.
    pub fn section(&self, size: usize) -> DMatrix<Complex64> {
        match (self.kind, self.adjoint) {
            (OpKind::Toeplitz, false) => toeplitz_rect(&self.symbol, size, size),
            (OpKind::Toeplitz, true) => toeplitz_rect(&self.symbol.adjoint(), size, size),
            (OpKind::Hankel, false) => hankel_rect(&self.symbol, size, size),
            (OpKind::Hankel, true) => hankel_rect(&self.symbol, size, size).adjoint(),
        }
    }
}

/// Bound on the spectral norm of the error made by compressing every
/// intermediate index of a product of factors with the given envelopes to
/// `size + buffer` blocks.
///
/// Both Toeplitz and Hankel blocks satisfy `||A(k, l)|| <= C r^{|k - l|}`, and
/// a path that leaves the window and comes back has total variation at least
/// `2 buffer + 2`.
pub fn product_error_bound(envs: &[Envelope], size: usize, buffer: usize) -> f64 {
    let p = envs.len();
    if p <= 1 {
        return 0.0;
    }
    let width: Option<usize> = envs.iter().map(|e| e.band).sum();
    if let Some(w) = width {
        if 2 * buffer + 2 > w {
            return 0.0;
        }
    }
    let r = envs.iter().map(|e| e.rate).fold(0.0, f64::max);
    let c: f64 = envs.iter().map(|e| e.constant).product();
    size as f64 * c * path_tail(p, r, 2 * buffer + 2)
}

/// [`product_error_bound`] for a product of Toeplitz or Hankel operators
/// with these symbols, each envelope tuned to the buffer.
pub fn product_bound_for(symbols: &[&MatrixSymbol], size: usize, buffer: usize) -> f64 {
    let envs: Vec<Envelope> = symbols.iter().map(|s| s.envelope_for_horizon(2 * buffer + 2)).collect();
    product_error_bound(&envs, size, buffer)
}

/// Smallest buffer for which [`product_bound_for`] is at most `tol`, if
/// one exists up to `max_buffer`.
pub fn required_buffer(symbols: &[&MatrixSymbol], size: usize, tol: f64, max_buffer: usize) -> Option<usize> {
    if product_bound_for(symbols, size, max_buffer) > tol {
        return None;
    }
    let (mut lo, mut hi) = (0, max_buffer);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if product_bound_for(symbols, size, mid) <= tol {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// `sum_{T >= t0} 2^p binom(T + p - 1, p - 1) r^T`.
fn path_tail(p: usize, r: f64, t0: usize) -> f64 {
    let ln_binom = |t: usize| (1..p).map(|i| ((t + i) as f64 / i as f64).ln()).sum::<f64>();
    let mut term = (p as f64 * 2f64.ln() + ln_binom(t0) + t0 as f64 * r.ln()).exp();
    let mut sum = 0.0;
    let mut t = t0;
    for _ in 0..1_000_000 {
        sum += term;
        let q = r * (t + p) as f64 / (t + 1) as f64;
        if q < 1.0 && term * q / (1.0 - q) <= 1e-6 * sum {
            return sum + term * q / (1.0 - q);
        }
        term *= q;
        t += 1;
    }
    f64::INFINITY
}

/// `P_N A_1 ... A_p P_N`, each factor built with `size + buffer` blocks.
pub fn op_product(factors: &[OpFactor], size: usize, buffer: usize, tol: f64) -> Result<TruncatedOperator> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidArgument("op_product needs at least one factor".into()))?;
    let n = first.symbol.n();
    if let Some(f) = factors.iter().find(|f| f.symbol.n() != n) {
        return Err(Error::BlockMismatch(n, f.symbol.n()));
    }
    let envs: Vec<Envelope> = factors.iter().map(|f| f.symbol.envelope_for_horizon(2 * buffer + 2)).collect();
    let bound = product_error_bound(&envs, size, buffer);
    if !(bound <= tol) {
        return Err(Error::BufferTooSmall { bound, tol });
    }
    let big = size + buffer;
    let mut acc = first.section(big);
    for f in &factors[1..] {
        acc = acc * f.section(big);
    }
    Ok(TruncatedOperator {
        n,
        size,
        matrix: acc.view((0, 0), (n * size, n * size)).into_owned(),
        decay_rate: envs.iter().map(|e| e.zero_radius).fold(0.0, f64::max),
        tail_constant: envs.iter().map(|e| e.constant).product(),
        error_bound: bound,
    })
}

/// Truncation of `√(1 - |α|²) / (1 - α z)`.
#[derive(Clone, Debug)]
pub struct CauchyKernelVector {
    pub alpha: Complex64,
    pub entries: DVector<Complex64>,
}

pub fn kernel_vector(alpha: Complex64, size: usize) -> Result<CauchyKernelVector> {
    if !(alpha.norm() < 1.0) {
        return Err(Error::InvalidZero(alpha));
    }
    let s = (1.0 - alpha.norm_sqr()).sqrt();
    let entries = DVector::from_iterator(size, (0..size).map(|k| alpha.powu(k as u32) * s));
    Ok(CauchyKernelVector { alpha, entries })
}
