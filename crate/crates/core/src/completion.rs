//! The 2x2 completion problem `[[T_{conj b_α}, T_φ], [T_ψ, T_{conj b_β}]]`:
//! constructors for the subnormal families, a classifier for candidate
//! pairs `(φ, ψ)`, and an operator-level cross-check of its verdicts.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::blaschke::{FiniteBlaschkeProduct, ZERO_MATCH_TOL};
use crate::classify::{self, Verdict};
use crate::error::{Error, Result};
use crate::hardy_ops::required_buffer;
use crate::symbol::{coprime_factorization, MatrixSymbol, ScalarSymbol, TermKind};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance for recovering family parameters from a candidate pair.
pub const MATCH_TOL: f64 = 1e-9;
/// `α` and `β` closer than this are treated as equal.
pub const ALPHA_BETA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FamilyTag {
    Family1,
    Family2,
    QuasinormalFamily,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionFamily {
    pub alpha: Complex64,
    pub tag: FamilyTag,
    /// Only meaningful for `Family2`.
    pub mu: Complex64,
    pub theta_angle: f64,
    pub omega_angle: f64,
    pub zeta: Complex64,
}

fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU { 0.0 } else { r }
}

fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

impl CompletionFamily {
    pub fn family1(alpha: Complex64, theta: f64, omega: f64, zeta: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { alpha, tag: FamilyTag::Family1, mu: zero, theta_angle: wrap_angle(theta), omega_angle: wrap_angle(omega), zeta }
    }

    pub fn family2(alpha: Complex64, mu: Complex64, theta: f64, zeta: Complex64) -> Self {
        Self { alpha, tag: FamilyTag::Family2, mu, theta_angle: wrap_angle(theta), omega_angle: 0.0, zeta }
    }

    pub fn quasinormal(alpha: Complex64, theta: f64, omega: f64, zeta: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            alpha,
            tag: FamilyTag::QuasinormalFamily,
            mu: zero,
            theta_angle: wrap_angle(theta),
            omega_angle: wrap_angle(omega),
            zeta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.norm() < 1.0) {
            return Err(Error::InvalidFamilyParameters(format!("|alpha| = {} is not below 1", self.alpha.norm())));
        }
        if !self.theta_angle.is_finite() || !self.omega_angle.is_finite() || !self.zeta.is_finite() {
            return Err(Error::InvalidFamilyParameters("parameters must be finite".into()));
        }
        if self.tag == FamilyTag::Family2 && !(self.mu.norm() > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidFamilyParameters("Family2 needs mu != 0".into()));
        }
        Ok(())
    }

    /// Phase `χ` with `ψ = e^{iχ} φ`.
    pub fn psi_phase(&self) -> f64 {
        match self.tag {
            FamilyTag::Family1 => self.omega_angle,
            FamilyTag::Family2 => wrap_angle(PI - 2.0 * self.mu.arg()),
            FamilyTag::QuasinormalFamily => wrap_angle(-2.0 * self.theta_angle),
        }
    }

    /// `|μ| = 1` places a Family2 member in the rational-refinement branch.
    pub fn on_refinement_branch(&self) -> bool {
        self.tag == FamilyTag::Family2 && (self.mu.norm() - 1.0).abs() <= MATCH_TOL
    }
}

fn b_alpha(alpha: Complex64) -> Result<FiniteBlaschkeProduct> {
    FiniteBlaschkeProduct::factor(alpha).map_err(|e| Error::InvalidFamilyParameters(e.to_string()))
}

/// `φ` of the family.
pub fn family_phi(f: &CompletionFamily) -> Result<ScalarSymbol> {
    f.validate()?;
    let b = b_alpha(f.alpha)?;
    let zeta = ScalarSymbol::constant(f.zeta);
    let phi = match f.tag {
        FamilyTag::Family1 => ScalarSymbol::analytic(cis(f.theta_angle), b).add(&zeta),
        FamilyTag::Family2 => {
            let s = (1.0 + f.mu.norm_sqr()).sqrt();
            ScalarSymbol::coanalytic(f.mu, b.clone())
                .add(&ScalarSymbol::analytic(cis(f.theta_angle) * s, b))
                .add(&zeta)
        }
        FamilyTag::QuasinormalFamily => ScalarSymbol::coanalytic(cis(f.theta_angle), b.clone())
            .add(&ScalarSymbol::analytic(cis(f.omega_angle) * 2.0, b))
            .add(&zeta),
    };
    Ok(phi)
}

/// `Φ = [[conj b_α, φ], [ψ, conj b_α]]`.
pub fn build_completion(f: &CompletionFamily) -> Result<MatrixSymbol> {
    let phi = family_phi(f)?;
    let psi = phi.scale(cis(f.psi_phase()));
    completion_symbol(f.alpha, f.alpha, &phi, &psi)
}

/// `[[conj b_α, φ], [ψ, conj b_β]]`.
pub fn completion_symbol(alpha: Complex64, beta: Complex64, phi: &ScalarSymbol, psi: &ScalarSymbol) -> Result<MatrixSymbol> {
    let da = ScalarSymbol::coanalytic(ONE, FiniteBlaschkeProduct::factor(alpha)?);
    let db = ScalarSymbol::coanalytic(ONE, FiniteBlaschkeProduct::factor(beta)?);
    MatrixSymbol::from_rows(vec![vec![da, phi.clone()], vec![psi.clone(), db]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum CompletionStatus {
    Normal,
    QuasinormalAfterShift { beta: Complex64 },
    ExceptionalCaseUnresolved,
    NotSubnormal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionVerdict {
    #[serde(flatten)]
    pub status: CompletionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_family: Option<CompletionFamily>,
    pub diagnostics: Vec<String>,
}

impl CompletionVerdict {
    fn new(status: CompletionStatus, matched_family: Option<CompletionFamily>, diagnostics: Vec<String>) -> Self {
        Self { status, matched_family, diagnostics }
    }
}

/// `φ = κ conj(b_α) + λ b_α + ζ + (anything else)`.
#[derive(Clone, Copy, Debug)]
struct Parts {
    kappa: Complex64,
    lambda: Complex64,
    zeta: Complex64,
    /// No terms outside the three above.
    clean: bool,
}

fn parts(s: &ScalarSymbol, b: &FiniteBlaschkeProduct) -> Parts {
    let zero = Complex64::new(0.0, 0.0);
    let mut p = Parts { kappa: zero, lambda: zero, zeta: zero, clean: true };
    for t in s.terms() {
        if t.is_constant() {
            p.zeta += t.coeff;
        } else if !t.inner.same_zeros(b, ZERO_MATCH_TOL) {
            p.clean = false;
        } else if t.kind == TermKind::Coanalytic {
            p.kappa += t.coeff;
        } else {
            p.lambda += t.coeff;
        }
    }
    p
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= MATCH_TOL * (1.0 + a.norm().max(b.norm()))
}

/// `ψ = e^{iχ} φ` part by part.
fn is_rotation(p: &Parts, q: &Parts, chi: f64) -> bool {
    let u = cis(chi);
    close(q.kappa, u * p.kappa) && close(q.lambda, u * p.lambda) && close(q.zeta, u * p.zeta)
}

fn match_family1(alpha: Complex64, p: &Parts, q: &Parts) -> Option<CompletionFamily> {
    if !(p.clean && q.clean) || p.kappa.norm() > MATCH_TOL || (p.lambda.norm() - 1.0).abs() > MATCH_TOL {
        return None;
    }
    let omega = (q.lambda / p.lambda).arg();
    is_rotation(p, q, omega).then(|| CompletionFamily::family1(alpha, p.lambda.arg(), omega, p.zeta))
}

fn match_family2(alpha: Complex64, p: &Parts, q: &Parts) -> Option<CompletionFamily> {
    if !(p.clean && q.clean) || p.kappa.norm() <= MATCH_TOL {
        return None;
    }
    let mu = p.kappa;
    if (p.lambda.norm() - (1.0 + mu.norm_sqr()).sqrt()).abs() > MATCH_TOL * (1.0 + mu.norm()) {
        return None;
    }
    let f = CompletionFamily::family2(alpha, mu, p.lambda.arg(), p.zeta);
    is_rotation(p, q, f.psi_phase()).then_some(f)
}

fn match_quasinormal(alpha: Complex64, p: &Parts, q: &Parts) -> Option<CompletionFamily> {
    if !(p.clean && q.clean) || (p.kappa.norm() - 1.0).abs() > MATCH_TOL || (p.lambda.norm() - 2.0).abs() > 2.0 * MATCH_TOL {
        return None;
    }
    let f = CompletionFamily::quasinormal(alpha, p.kappa.arg(), (p.lambda / 2.0).arg(), p.zeta);
    is_rotation(p, q, f.psi_phase()).then_some(f)
}

/// Result of the exceptional-case detector on `φ_-`, `ψ_-`.
#[derive(Clone, Copy, Debug)]
struct Exceptional {
    theta0_degree: usize,
    theta1_degree: usize,
}

/// Factors `φ_- = b_α θ0' conj(a)`, `ψ_- = b_α θ1' conj(b)` and tests
/// `(ab)(α) = (θ0' θ1')(α) != 0`.
fn detect_exceptional(alpha: Complex64, phi: &ScalarSymbol, psi: &ScalarSymbol) -> Result<Option<Exceptional>> {
    let (pm, qm) = (phi.coanalytic_conj_part(), psi.coanalytic_conj_part());
    if pm.is_zero() || qm.is_zero() {
        return Ok(None);
    }
    let f0 = coprime_factorization(&pm)?;
    let f1 = coprime_factorization(&qm)?;
    let ba = FiniteBlaschkeProduct::factor(alpha)?;
    if f0.theta.multiplicity_at(alpha, ZERO_MATCH_TOL) != 1 || f1.theta.multiplicity_at(alpha, ZERO_MATCH_TOL) != 1 {
        return Ok(None);
    }
    let t0 = f0.theta.div_tol(&ba, ZERO_MATCH_TOL)?;
    let t1 = f1.theta.div_tol(&ba, ZERO_MATCH_TOL)?;
    let ab = f0.cofactor.eval(alpha) * f1.cofactor.eval(alpha);
    let tt = t0.eval(alpha)? * t1.eval(alpha)?;
    let hit = tt.norm() > MATCH_TOL && close(ab, tt);
    Ok(hit.then_some(Exceptional { theta0_degree: f0.theta.degree(), theta1_degree: f1.theta.degree() }))
}

/// Decides which solution family, if any, the pair `(φ, ψ)` belongs to.
pub fn classify_candidate(
    alpha: Complex64,
    beta: Complex64,
    phi: &ScalarSymbol,
    psi: &ScalarSymbol,
) -> Result<CompletionVerdict> {
    use CompletionStatus::*;
    if (alpha - beta).norm() > ALPHA_BETA_TOL {
        return Ok(CompletionVerdict::new(NotSubnormal, None, vec!["alpha != beta".into()]));
    }
    if !(alpha.norm() < 1.0) {
        return Err(Error::InvalidZero(alpha));
    }
    let b = FiniteBlaschkeProduct::factor(alpha)?;
    let (p, q) = (parts(phi, &b), parts(psi, &b));

    if let Some(f) = match_family1(alpha, &p, &q) {
        return Ok(CompletionVerdict::new(Normal, Some(f), vec![]));
    }
    if let Some(f) = match_family2(alpha, &p, &q) {
        let mut diagnostics = vec![];
        if f.on_refinement_branch() {
            diagnostics.push("|mu| = 1: member of the rational-refinement branch".into());
        }
        return Ok(CompletionVerdict::new(Normal, Some(f), diagnostics));
    }
    let Some(hit) = detect_exceptional(alpha, phi, psi)? else {
        return Ok(CompletionVerdict::new(NotSubnormal, None, vec!["no family matched".into()]));
    };
    let degrees = format!("deg theta0 = {}, deg theta1 = {}", hit.theta0_degree, hit.theta1_degree);
    if hit.theta0_degree != hit.theta1_degree {
        return Ok(CompletionVerdict::new(
            ExceptionalCaseUnresolved,
            None,
            vec![
                "(ab)(alpha) = (theta0' theta1')(alpha) != 0".into(),
                format!("pole counts differ ({degrees}); outside the rational refinement"),
                "singular-inner alternatives cannot be represented with finite Blaschke data".into(),
            ],
        ));
    }
    if let Some(f) = match_quasinormal(alpha, &p, &q) {
        let beta = -cis(-f.theta_angle) * f.zeta;
        return Ok(CompletionVerdict::new(QuasinormalAfterShift { beta }, Some(f), vec![degrees]));
    }
    Ok(CompletionVerdict::new(
        NotSubnormal,
        None,
        vec![format!("exceptional identity holds with equal pole counts ({degrees}) but no family matched")],
    ))
}

/// One operator-level sub-check of a completion verdict.
#[derive(Clone, Debug, Serialize)]
pub struct SubCheck {
    pub name: String,
    pub verdict: Verdict,
    /// Whether this sub-verdict agrees with the symbol-level verdict.
    pub agrees: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<SubCheck>,
    pub commutator_rank: Option<usize>,
    pub consistent: bool,
}

/// Largest buffer tried when sizing operator products.
const MAX_BUFFER: usize = 2048;

/// Cross-checks a completion verdict against finite sections of the
/// operator.
pub fn verify_completion(phi: &MatrixSymbol, verdict: &CompletionVerdict, size: usize, tol: f64) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    let mut rank = None;
    let consistent;
    match verdict.status {
        CompletionStatus::Normal => {
            let v = classify::normal_operator(phi, &[size], tol)?;
            consistent = v.is_holds();
            checks.push(SubCheck { name: "normal".into(), agrees: consistent, verdict: v });
        }
        CompletionStatus::QuasinormalAfterShift { beta } => {
            let shifted = phi.shift(beta);
            let buffer = required_buffer(&[&shifted; 3], size, tol, MAX_BUFFER)
                .ok_or(Error::BufferTooSmall { bound: f64::INFINITY, tol })?;
            let q = classify::quasinormal_defect(&shifted, size, buffer, tol)?;
            let r = classify::commutator_rank(phi, size, tol)?;
            let nv = classify::normal_operator(phi, &[size], tol)?;
            consistent = q.is_holds() && r == 1 && nv.is_fails();
            rank = Some(r);
            checks.push(SubCheck { name: "quasinormal_after_shift".into(), agrees: q.is_holds(), verdict: q });
            checks.push(SubCheck { name: "normal".into(), agrees: nv.is_fails(), verdict: nv });
        }
        CompletionStatus::NotSubnormal => {
            let h = classify::hyponormal(phi, &[size], tol)?;
            let mut failed = h.is_fails();
            checks.push(SubCheck { name: "hyponormal".into(), agrees: h.is_fails(), verdict: h });
            if !failed {
                let buffer = required_buffer(&[phi; 4], size, tol, MAX_BUFFER)
                    .ok_or(Error::BufferTooSmall { bound: f64::INFINITY, tol })?;
                let k2 = classify::k_hyponormal(phi, 2, size, buffer, tol)?;
                failed = k2.is_fails();
                checks.push(SubCheck { name: "2-hyponormal".into(), agrees: k2.is_fails(), verdict: k2 });
            }
            let off_diagonal_analytic = phi.get(0, 1).is_analytic() || phi.get(1, 0).is_analytic();
            consistent = failed || off_diagonal_analytic;
        }
        CompletionStatus::ExceptionalCaseUnresolved => {
            let h = classify::hyponormal(phi, &[size], tol)?;
            checks.push(SubCheck { name: "hyponormal".into(), agrees: true, verdict: h });
            consistent = true;
        }
    }
    Ok(VerificationReport { checks, commutator_rank: rank, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z() -> ScalarSymbol {
        ScalarSymbol::analytic(ONE, FiniteBlaschkeProduct::z_power(1))
    }

    fn same(a: &ScalarSymbol, b: &ScalarSymbol) -> bool {
        crate::symbol::sample_angles(64).all(|t| (a.boundary(t) - b.boundary(t)).norm() < 1e-12)
    }

    #[test]
    fn build_examples() {
        let zero = c(0.0, 0.0);
        let phi = build_completion(&CompletionFamily::family1(zero, 0.0, 0.0, zero)).unwrap();
        assert!(same(phi.get(0, 0), &z().conj()));
        assert!(same(phi.get(0, 1), &z()) && same(phi.get(1, 0), &z()));

        let phi = build_completion(&CompletionFamily::family2(zero, c(2.0, 0.0), 0.0, zero)).unwrap();
        let f = z().conj().scale(c(2.0, 0.0)).add(&z().scale(c(5f64.sqrt(), 0.0)));
        assert!(same(phi.get(0, 1), &f));
        assert!(same(phi.get(1, 0), &f.scale(-ONE)));

        let phi = build_completion(&CompletionFamily::quasinormal(zero, 0.0, 0.0, zero)).unwrap();
        let f = z().conj().add(&z().scale(c(2.0, 0.0)));
        assert!(same(phi.get(0, 1), &f) && same(phi.get(1, 0), &f));

        let bad = CompletionFamily::family2(zero, zero, 0.0, zero);
        assert!(matches!(build_completion(&bad), Err(Error::InvalidFamilyParameters(_))));
    }

    #[test]
    fn classify_examples() {
        let zero = c(0.0, 0.0);
        let v = classify_candidate(c(0.3, 0.0), c(0.4, 0.0), &z(), &z()).unwrap();
        assert_eq!(v.status, CompletionStatus::NotSubnormal);
        assert_eq!(v.diagnostics, vec!["alpha != beta".to_string()]);

        let v = classify_candidate(zero, zero, &z(), &z().scale(cis(1.0))).unwrap();
        assert_eq!(v.status, CompletionStatus::Normal);
        let f = v.matched_family.unwrap();
        assert_eq!(f.tag, FamilyTag::Family1);
        assert!((f.omega_angle - 1.0).abs() < 1e-12 && f.theta_angle.abs() < 1e-12);

        let phi = z().conj().add(&z().scale(c(2.0, 0.0)));
        let v = classify_candidate(zero, zero, &phi, &phi).unwrap();
        assert_eq!(v.status, CompletionStatus::QuasinormalAfterShift { beta: zero });
    }

    #[test]
    fn zbar_everywhere_is_not_subnormal() {
        let zero = c(0.0, 0.0);
        let v = classify_candidate(zero, zero, &z().conj(), &z().conj()).unwrap();
        assert_eq!(v.status, CompletionStatus::NotSubnormal);
        let phi = completion_symbol(zero, zero, &z().conj(), &z().conj()).unwrap();
        let report = verify_completion(&phi, &v, 8, 1e-9).unwrap();
        assert!(report.consistent);
        assert!(report.checks[0].verdict.is_fails());
    }

    #[test]
    fn corollary_verification() {
        let f = CompletionFamily::quasinormal(c(0.0, 0.0), 0.0, 0.0, c(0.0, 0.0));
        let phi = build_completion(&f).unwrap();
        let v = classify_candidate(f.alpha, f.alpha, phi.get(0, 1), phi.get(1, 0)).unwrap();
        let report = verify_completion(&phi, &v, 8, 1e-10).unwrap();
        assert!(report.consistent, "{report:?}");
        assert_eq!(report.commutator_rank, Some(1));
    }

    #[test]
    fn verdict_json_shape() {
        let v = CompletionVerdict::new(CompletionStatus::QuasinormalAfterShift { beta: c(1.0, -2.0) }, None, vec![]);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"status":"QuasinormalAfterShift","beta":[1.0,-2.0],"diagnostics":[]}"#
        );
    }
}
