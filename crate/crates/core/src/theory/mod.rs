//! Robustness and tractability radii for the constrained and penalized
//! M-estimators, evaluated in closed form and numerically.
//!
//! `h(z) = E psi(z + ε)` with `ε ~ N(0, σ²)` and `H(s) = inf_{0<z<=s} h(z)/z`
//! drive every radius. Welsch has closed forms for both; Huber goes through
//! quadrature. Formulas consume the per-derivative bounds from
//! [`LossSpec::bounds`]: `l_psi` for η₀ and r_s, `l_psi1` for κ.

pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossFamily, LossSpec};
pub use quadrature::{integrate, integrate_with_breaks, Quadrature};

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Half-width of the integration window in units of σ; the Gaussian mass
/// outside is below 1e-31.
const TRUNCATION_SIGMAS: f64 = 12.0;

const H_GRID_POINTS: usize = 10_000;

fn require_bounded(spec: &LossSpec<f64>) -> Result<()> {
    if spec.is_quadratic() {
        return Err(Error::InvalidSpec(
            "squared loss has an unbounded score; theory quantities need a bounded psi".into(),
        ));
    }
    Ok(())
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn normal_pdf(x: f64, sigma: f64) -> f64 {
    let u = x / sigma;
    (-0.5 * u * u).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Integrate `g(ε) φ_σ(ε)` over the truncated real line, splitting at the
/// Huber corners of `psi(shift + ε)` when present.
fn gaussian_expectation(
    spec: &LossSpec<f64>,
    sigma: f64,
    shift: f64,
    quad_tol: f64,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let lim = TRUNCATION_SIGMAS * sigma;
    let mut points = vec![-lim, lim];
    if spec.family() == LossFamily::Huber {
        let a = spec.alpha();
        points.extend([-a - shift, a - shift].into_iter().filter(|c| c.abs() < lim));
    }
    points.sort_by(f64::total_cmp);
    let q = integrate_with_breaks(|e| g(e) * normal_pdf(e, sigma), &points, quad_tol)?;
    Ok(q.value)
}

/// `h(z) = ∫ φ_σ(ε) psi(z + ε) dε` by adaptive quadrature to `quad_tol`.
pub fn h_numeric(spec: &LossSpec<f64>, sigma: f64, z: f64, quad_tol: f64) -> Result<f64> {
    require_bounded(spec)?;
    require_positive("sigma", sigma)?;
    if !z.is_finite() {
        return Err(Error::InvalidConfig(format!("z must be finite, got {z}")));
    }
    gaussian_expectation(spec, sigma, z, quad_tol, |e| spec.psi(z + e))
}

/// Closed-form Welsch `h(z) = z (1+ασ²)^{-3/2} exp(-α z² / (2(1+ασ²)))`.
pub fn h_closed_welsch(alpha: f64, sigma: f64, z: f64) -> f64 {
    let a = 1.0 + alpha * sigma * sigma;
    z * a.powf(-1.5) * (-alpha * z * z / (2.0 * a)).exp()
}

/// `h'(0) = E psi'(ε)`: closed form for Welsch, quadrature otherwise.
pub fn h_prime_zero(spec: &LossSpec<f64>, sigma: f64, quad_tol: f64) -> Result<f64> {
    require_bounded(spec)?;
    require_positive("sigma", sigma)?;
    match spec.family() {
        LossFamily::Welsch => Ok((1.0 + spec.alpha() * sigma * sigma).powf(-1.5)),
        _ => gaussian_expectation(spec, sigma, 0.0, quad_tol, |e| spec.psi_prime(e)),
    }
}

/// `H(s) = inf_{0<z<=s} h(z)/z`, using the Welsch closed form
/// `(1+ασ²)^{-3/2} exp(-α s² / (2(1+ασ²)))` when available.
pub fn big_h(spec: &LossSpec<f64>, sigma: f64, s: f64, quad_tol: f64) -> Result<f64> {
    require_bounded(spec)?;
    require_positive("sigma", sigma)?;
    require_positive("s", s)?;
    match spec.family() {
        LossFamily::Welsch => {
            let a = 1.0 + spec.alpha() * sigma * sigma;
            Ok(a.powf(-1.5) * (-spec.alpha() * s * s / (2.0 * a)).exp())
        }
        _ => big_h_numeric(spec, sigma, s, quad_tol),
    }
}

/// `H(s)` from a log-spaced grid on `[1e-8 s, s]` followed by golden-section
/// refinement around the smallest grid value.
pub fn big_h_numeric(spec: &LossSpec<f64>, sigma: f64, s: f64, quad_tol: f64) -> Result<f64> {
    require_bounded(spec)?;
    require_positive("sigma", sigma)?;
    require_positive("s", s)?;
    let ratio = |z: f64| h_numeric(spec, sigma, z, quad_tol).map(|h| h / z);
    let lo = (1e-8 * s).ln();
    let hi = s.ln();
    let last = H_GRID_POINTS - 1;
    let grid: Vec<f64> = (0..H_GRID_POINTS)
        .map(|k| if k == last { s } else { (lo + (hi - lo) * k as f64 / last as f64).exp() })
        .collect();
    let mut best = (0, f64::INFINITY);
    for (k, &z) in grid.iter().enumerate() {
        let v = ratio(z)?;
        if v < best.1 {
            best = (k, v);
        }
    }
    let (k, mut fbest) = best;
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(last)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ratio(c)?, ratio(d)?);
    for _ in 0..60 {
        if (b - a) <= 1e-12 * b {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ratio(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ratio(d)?;
        }
    }
    fbest = fbest.min(fc).min(fd);
    Ok(fbest)
}

/// Closed-form lower bound on Huber `h(z)/z`:
/// `(α³/(3√(2π)σ³) + α/(√(2π)σ)) exp(-(s² + α²)/(2σ²))`.
pub fn huber_bound_big_h(alpha: f64, sigma: f64, s: f64) -> f64 {
    let r2pi = (2.0 * std::f64::consts::PI).sqrt();
    (alpha.powi(3) / (3.0 * r2pi * sigma.powi(3)) + alpha / (r2pi * sigma))
        * (-(s * s + alpha * alpha) / (2.0 * sigma * sigma)).exp()
}

/// Design, noise and constraint constants entering the radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConstants {
    /// Inlier noise standard deviation.
    pub sigma: f64,
    /// Sub-Gaussian scale of the design.
    pub tau: f64,
    /// Constraint radius.
    pub r: f64,
    /// `E[x xᵀ] ⪰ γ τ² I`.
    pub gamma: f64,
    /// Fourth-moment constant, `E<u,X>⁴ <= c2 ||u||⁴ τ⁴`.
    pub c2: f64,
    pub delta: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            tau: 1.0,
            r: 1.0,
            gamma: 1.0,
            c2: 3.0,
            delta: 0.0,
        }
    }
}

impl ModelConstants {
    pub fn validate(&self) -> Result<()> {
        require_positive("sigma", self.sigma)?;
        require_positive("tau", self.tau)?;
        require_positive("r", self.r)?;
        require_positive("c2", self.c2)?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// Argument of `H` in the η₀ bound: `(8τr/3) sqrt(c2/γ)`.
    pub fn s_tilde(&self) -> f64 {
        8.0 * self.tau * self.r / 3.0 * (self.c2 / self.gamma).sqrt()
    }

    /// `κ = ((1-δ) h'(0) γ - δ L) τ² / 2`.
    pub fn kappa(&self, h_prime_zero: f64, l_psi1: f64) -> f64 {
        ((1.0 - self.delta) * h_prime_zero * self.gamma - self.delta * l_psi1) / 2.0 * self.tau * self.tau
    }

    fn odds(&self) -> f64 {
        self.delta / (1.0 - self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryRadii {
    /// Robustness radius; infinite when the bound overflows.
    pub eta0: f64,
    /// Curvature radius; infinite for convex losses.
    pub eta1: f64,
    pub kappa: f64,
    /// `eta0 < eta1` with `eta1 > 0`.
    pub tractable: bool,
}

impl TheoryRadii {
    fn new(eta0: f64, eta1: f64, kappa: f64) -> Self {
        Self {
            eta0,
            eta1,
            kappa,
            tractable: eta1 > 0.0 && eta0 < eta1,
        }
    }
}

/// Huber radii:
/// `η₀ = δ/(1-δ) · 4√(2π)σ³ / ((α²+3σ²)τ) · exp((α² + 22τ²r²)/(2σ²))`, `η₁ = ∞`.
pub fn huber_radii(alpha: f64, mc: &ModelConstants) -> Result<TheoryRadii> {
    require_positive("alpha", alpha)?;
    mc.validate()?;
    let ModelConstants { sigma, tau, r, .. } = *mc;
    let eta0 = if mc.delta == 0.0 {
        0.0
    } else {
        mc.odds() * 4.0 * (2.0 * std::f64::consts::PI).sqrt() * sigma.powi(3)
            / ((alpha * alpha + 3.0 * sigma * sigma) * tau)
            * ((alpha * alpha + 22.0 * tau * tau * r * r) / (2.0 * sigma * sigma)).exp()
    };
    let spec = LossSpec::huber(alpha)?;
    let hp0 = h_prime_zero(&spec, sigma, DEFAULT_QUAD_TOL)?;
    Ok(TheoryRadii::new(eta0, f64::INFINITY, mc.kappa(hp0, spec.bounds().l_psi1)))
}

/// Welsch radii, with `a = 1 + ασ²`:
/// `η₀ = δ/(1-δ) · sqrt(e/α) · 4a^{3/2}/τ · exp(32αr²τ²/(3a))` and
/// `η₁ = (τ² - δ(τ² + a^{3/2})) / (3 sqrt(3α) a^{3/2} τ)`.
pub fn welsch_radii(alpha: f64, mc: &ModelConstants) -> Result<TheoryRadii> {
    require_positive("alpha", alpha)?;
    mc.validate()?;
    let ModelConstants { sigma, tau, r, delta, .. } = *mc;
    let a = 1.0 + alpha * sigma * sigma;
    let a32 = a.powf(1.5);
    let eta0 = if delta == 0.0 {
        0.0
    } else {
        mc.odds() * (std::f64::consts::E / alpha).sqrt() * 4.0 * a32 / tau
            * (32.0 * alpha * r * r * tau * tau / (3.0 * a)).exp()
    };
    let eta1 = (tau * tau - delta * (tau * tau + a32)) / (3.0 * (3.0 * alpha).sqrt() * a32 * tau);
    Ok(TheoryRadii::new(eta0, eta1, mc.kappa(1.0 / a32, 1.0)))
}

/// Contamination level where the Welsch η₁ changes sign: `τ²/(τ² + (1+ασ²)^{3/2})`.
pub fn welsch_eta1_root(alpha: f64, sigma: f64, tau: f64) -> f64 {
    let a32 = (1.0 + alpha * sigma * sigma).powf(1.5);
    tau * tau / (tau * tau + a32)
}

/// Family-specific closed-form radii.
pub fn radii(spec: &LossSpec<f64>, mc: &ModelConstants) -> Result<TheoryRadii> {
    require_bounded(spec)?;
    match spec.family() {
        LossFamily::Huber => huber_radii(spec.alpha(), mc),
        LossFamily::Welsch => welsch_radii(spec.alpha(), mc),
        LossFamily::Squared => unreachable!("rejected above"),
    }
}

/// `δ L / ((1-δ) (3/4) H τ γ)` for a given value of `H`.
pub fn eta0_from_big_h(l_psi: f64, big_h: f64, mc: &ModelConstants) -> f64 {
    if mc.delta == 0.0 {
        return 0.0;
    }
    mc.odds() * l_psi / (0.75 * big_h * mc.tau * mc.gamma)
}

/// η₀ through the generic bound with `H` evaluated numerically at
/// [`ModelConstants::s_tilde`]; independent of the closed forms.
pub fn generic_eta0(spec: &LossSpec<f64>, mc: &ModelConstants, quad_tol: f64) -> Result<f64> {
    require_bounded(spec)?;
    mc.validate()?;
    let l_psi = spec.bounds().l_psi;
    if mc.delta == 0.0 {
        return Ok(0.0);
    }
    let h = big_h_numeric(spec, mc.sigma, mc.s_tilde(), quad_tol)?;
    Ok(eta0_from_big_h(l_psi, h, mc))
}

/// Statistical radius of the penalized problem and its constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighDimRadius {
    pub r_s: f64,
    /// `L_ψ / D` with `D = (3/4) H(s̃) τ γ`.
    pub c0: f64,
    /// `max(1, C_π) / D`.
    pub c1: f64,
    /// `2 C_π M sqrt(log p / n) + (L_ψ τ / 2) δ / sqrt(s0)`.
    pub lambda_rec: f64,
    /// Whether the supplied λ_n reaches `lambda_rec`.
    pub lambda_admissible: bool,
}

/// Inputs of [`high_dim_radius`] besides the loss and model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityParams {
    pub s0: usize,
    pub n: usize,
    pub p: usize,
    /// Bound `M` on the sub-Gaussian scale of the score at θ₀.
    pub m_bound: f64,
    /// Probability constant `C_π`.
    pub c_pi: f64,
}

impl SparsityParams {
    pub fn validate(&self) -> Result<()> {
        if self.s0 == 0 || self.n == 0 || self.p == 0 || self.s0 > self.p {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= s0 <= p and n >= 1, got s0 = {}, n = {}, p = {}",
                self.s0, self.n, self.p
            )));
        }
        require_positive("m_bound", self.m_bound)?;
        require_positive("c_pi", self.c_pi)
    }

    fn rate(&self) -> f64 {
        ((self.p as f64).ln() / self.n as f64).sqrt()
    }
}

/// Recommended penalty level for the given sparsity setting.
pub fn lambda_recommended(spec: &LossSpec<f64>, mc: &ModelConstants, sp: &SparsityParams) -> Result<f64> {
    require_bounded(spec)?;
    sp.validate()?;
    let l_psi = spec.bounds().l_psi;
    Ok(2.0 * sp.c_pi * sp.m_bound * sp.rate() + l_psi * mc.tau / 2.0 * mc.delta / (sp.s0 as f64).sqrt())
}

/// `r_s = δ/(1-δ) C₀ + 4 sqrt(s0)/(1-δ) (M sqrt(log p / n) + λ_n) C₁`.
pub fn high_dim_radius(
    spec: &LossSpec<f64>,
    mc: &ModelConstants,
    sp: &SparsityParams,
    lambda_n: f64,
    quad_tol: f64,
) -> Result<HighDimRadius> {
    require_bounded(spec)?;
    mc.validate()?;
    sp.validate()?;
    if !(lambda_n >= 0.0) || !lambda_n.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda_n must be nonnegative, got {lambda_n}")));
    }
    let l_psi = spec.bounds().l_psi;
    let d = 0.75 * big_h(spec, mc.sigma, mc.s_tilde(), quad_tol)? * mc.tau * mc.gamma;
    let c0 = l_psi / d;
    let c1 = sp.c_pi.max(1.0) / d;
    let lambda_rec = lambda_recommended(spec, mc, sp)?;
    let one_minus = 1.0 - mc.delta;
    let r_s = mc.odds() * c0
        + 4.0 * (sp.s0 as f64).sqrt() / one_minus * (sp.m_bound * sp.rate() + lambda_n) * c1;
    Ok(HighDimRadius {
        r_s,
        c0,
        c1,
        lambda_rec,
        lambda_admissible: lambda_n >= lambda_rec * (1.0 - 1e-12),
    })
}

/// Summary record printed by the `theory` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub eta0: f64,
    pub eta1: f64,
    pub kappa: f64,
    pub tractable: bool,
    pub lambda_rec: f64,
    pub r_s: f64,
}

/// Closed-form radii plus the high-dimensional radius at `lambda_n`
/// (defaulting to the recommended level).
pub fn theory_report(
    spec: &LossSpec<f64>,
    mc: &ModelConstants,
    sp: &SparsityParams,
    lambda_n: Option<f64>,
) -> Result<TheoryReport> {
    let radii = radii(spec, mc)?;
    let lambda = match lambda_n {
        Some(l) => l,
        None => lambda_recommended(spec, mc, sp)?,
    };
    let hd = high_dim_radius(spec, mc, sp, lambda, DEFAULT_QUAD_TOL)?;
    Ok(TheoryReport {
        eta0: radii.eta0,
        eta1: radii.eta1,
        kappa: radii.kappa,
        tractable: radii.tractable,
        lambda_rec: hd.lambda_rec,
        r_s: hd.r_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn welsch(a: f64) -> LossSpec<f64> {
        LossSpec::welsch(a).unwrap()
    }

    fn huber(a: f64) -> LossSpec<f64> {
        LossSpec::huber(a).unwrap()
    }

    /// Constants under which the generic η₀ bound reduces to the Welsch closed form.
    fn welsch_mc(delta: f64, r: f64) -> ModelConstants {
        ModelConstants {
            gamma: 1.0 / 3.0,
            c2: 1.0,
            r,
            delta,
            ..Default::default()
        }
    }

    #[test]
    fn h_vanishes_at_zero_and_is_odd() {
        for spec in [welsch(1.0), welsch(0.1), huber(1.0), huber(0.3)] {
            assert!(h_numeric(&spec, 1.0, 0.0, 1e-12).unwrap().abs() < 1e-12);
            for z in [0.1, 0.7, 2.5] {
                let a = h_numeric(&spec, 1.3, z, 1e-12).unwrap();
                let b = h_numeric(&spec, 1.3, -z, 1e-12).unwrap();
                assert!((a + b).abs() < 1e-11, "{spec:?} z={z}");
            }
        }
    }

    #[test]
    fn welsch_h_matches_closed_form() {
        let spec = welsch(1.0);
        let h = h_numeric(&spec, 1.0, 0.5, 1e-12).unwrap();
        let closed = 0.5 * 2f64.powf(-1.5) * (-0.25f64 / 4.0).exp();
        assert!((h - closed).abs() < 1e-12);
        assert!((h_closed_welsch(1.0, 1.0, 0.5) - closed).abs() < 1e-16);
    }

    #[test]
    fn huber_h_matches_reference_values() {
        // E clip(z + ε, ±1), ε ~ N(0, 1), evaluated at 30 digits.
        let reference = [
            (0.1, 0.068_188_372_904_858_306_571),
            (0.5, 0.331_510_236_361_298_599_01),
            (1.0, 0.609_548_422_215_396_959_61),
            (3.0, 0.991_516_442_641_602_768_12),
        ];
        for (z, oracle) in reference {
            let h = h_numeric(&huber(1.0), 1.0, z, 1e-13).unwrap();
            assert!((h - oracle).abs() < 1e-12, "z={z}: {h} vs {oracle}");
        }
    }

    #[test]
    fn h_positive_on_grid() {
        for spec in [welsch(0.1), welsch(2.0), huber(0.5)] {
            for k in 1..=50 {
                let z = 0.1 * k as f64;
                assert!(h_numeric(&spec, 1.0, z, 1e-12).unwrap() > 0.0, "{spec:?} z={z}");
            }
        }
    }

    #[test]
    fn h_prime_zero_oracles() {
        let w = h_prime_zero(&welsch(0.5), 2.0, 1e-12).unwrap();
        assert!((w - 3f64.powf(-1.5)).abs() < 1e-15);
        // P(|ε| <= α) = erf(α / (σ√2)), reference values at 30 digits
        for (a, s, oracle) in [
            (1.0, 1.0, 0.682_689_492_137_085_897_170_465),
            (0.3, 2.0, 0.119_235_384_740_485_035_924_523),
        ] {
            let hp = h_prime_zero(&huber(a), s, 1e-13).unwrap();
            assert!((hp - oracle).abs() < 1e-13, "{hp} vs {oracle}");
        }
        // finite difference of h for the Welsch closed form
        let spec = welsch(0.7);
        let e = 1e-4;
        let fd = (h_numeric(&spec, 1.0, e, 1e-13).unwrap() - h_numeric(&spec, 1.0, -e, 1e-13).unwrap()) / (2.0 * e);
        assert!((fd - h_prime_zero(&spec, 1.0, 1e-12).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn squared_is_rejected() {
        let sq = LossSpec::squared();
        assert!(h_numeric(&sq, 1.0, 1.0, 1e-10).is_err());
        assert!(big_h(&sq, 1.0, 1.0, 1e-10).is_err());
        assert!(generic_eta0(&sq, &ModelConstants::default(), 1e-10).is_err());
        assert!(radii(&LossSpec::welsch(0.0).unwrap(), &ModelConstants::default()).is_err());
    }

    #[test]
    fn big_h_closed_and_numeric() {
        let spec = welsch(1.0);
        let closed = big_h(&spec, 1.0, 1.0, 1e-10).unwrap();
        assert!((closed - 2f64.powf(-1.5) * (-0.25f64).exp()).abs() < 1e-15);
        let numeric = big_h_numeric(&spec, 1.0, 1.0, 1e-12).unwrap();
        assert!((numeric - closed).abs() < 1e-6);
        for s in [0.3, 1.0, 2.0] {
            let h = big_h(&huber(1.0), 1.0, s, 1e-11).unwrap();
            assert!(h <= h_numeric(&huber(1.0), 1.0, s, 1e-12).unwrap() / s + 1e-12);
            assert!(huber_bound_big_h(1.0, 1.0, s) <= h);
        }
    }

    #[test]
    fn huber_closed_form_value() {
        let mc = ModelConstants { delta: 0.1, r: 1.0, ..Default::default() };
        let eta0 = huber_radii(1.0, &mc).unwrap().eta0;
        let expected = (1.0 / 9.0) * 4.0 * (2.0 * std::f64::consts::PI).sqrt() / 4.0 * 11.5f64.exp();
        assert!((eta0 / expected - 1.0).abs() < 1e-14);
        assert!(huber_radii(1.0, &mc).unwrap().eta1.is_infinite());
        assert_eq!(huber_radii(2.0, &ModelConstants::default()).unwrap().eta0, 0.0);
        assert!(huber_radii(0.0, &mc).is_err());
    }

    #[test]
    fn huber_bound_pipeline_differs_by_exponent_constant() {
        // The bound-based pipeline has s² = 64/3 τ²r² where the closed form has 22 τ²r².
        let mc = ModelConstants { delta: 0.2, r: 0.5, tau: 1.2, sigma: 1.5, ..Default::default() };
        let alpha = 0.8;
        let pipeline = eta0_from_big_h(alpha, huber_bound_big_h(alpha, mc.sigma, mc.s_tilde()), &mc);
        let closed = huber_radii(alpha, &mc).unwrap().eta0;
        let ratio = (mc.tau * mc.tau * mc.r * mc.r / (3.0 * mc.sigma * mc.sigma)).exp();
        assert!((closed / pipeline / ratio - 1.0).abs() < 1e-12);
        let numeric = generic_eta0(&huber(alpha), &mc, 1e-11).unwrap();
        assert!(numeric <= pipeline);
    }

    #[test]
    fn welsch_closed_forms() {
        let mc = ModelConstants { delta: 0.1, r: 0.3, ..Default::default() };
        let w = welsch_radii(1.0, &mc).unwrap();
        let a32 = 2f64.powf(1.5);
        let eta0 = 0.1 / 0.9 * std::f64::consts::E.sqrt() * 4.0 * a32 * (32.0 * 0.09 / 6.0f64).exp();
        let eta1 = (1.0 - 0.1 * (1.0 + a32)) / (3.0 * 3f64.sqrt() * a32);
        assert!((w.eta0 / eta0 - 1.0).abs() < 1e-14);
        assert!((w.eta1 / eta1 - 1.0).abs() < 1e-14);
        assert!(!w.tractable);
        let clean = welsch_radii(1.0, &ModelConstants { delta: 0.0, ..mc }).unwrap();
        assert_eq!(clean.eta0, 0.0);
        assert!(clean.eta1 > 0.0 && clean.tractable);
    }

    #[test]
    fn welsch_eta1_decreases_and_changes_sign_at_root() {
        let (alpha, sigma, tau) = (0.4, 1.3, 0.8);
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let mc = ModelConstants { delta: k as f64 * 0.05, sigma, tau, ..Default::default() };
            let e1 = welsch_radii(alpha, &mc).unwrap().eta1;
            assert!(e1 < prev);
            prev = e1;
        }
        let root = welsch_eta1_root(alpha, sigma, tau);
        let at = welsch_radii(alpha, &ModelConstants { delta: root, sigma, tau, ..Default::default() }).unwrap();
        assert!(at.eta1.abs() < 1e-12);
    }

    #[test]
    fn generic_eta0_reproduces_welsch_closed_form() {
        for (alpha, delta, r) in [(1.0, 0.1, 0.3), (0.1, 0.05, 1.0), (0.5, 0.3, 0.5)] {
            let mc = welsch_mc(delta, r);
            let g = generic_eta0(&welsch(alpha), &mc, 1e-12).unwrap();
            let c = welsch_radii(alpha, &mc).unwrap().eta0;
            assert!((g / c - 1.0).abs() < 1e-6, "alpha={alpha}: {g} vs {c}");
        }
        assert_eq!(generic_eta0(&welsch(1.0), &welsch_mc(0.0, 1.0), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn kappa_sign_matches_threshold() {
        for spec in [welsch(0.5), huber(1.0)] {
            let hp = h_prime_zero(&spec, 1.0, 1e-12).unwrap();
            let gamma = 0.7;
            let thresh = hp * gamma / (hp * gamma + 1.0);
            for delta in [0.0, 0.5 * thresh, 0.99 * thresh, 1.01 * thresh, 0.9] {
                let mc = ModelConstants { delta, gamma, ..Default::default() };
                let k = radii(&spec, &mc).unwrap().kappa;
                assert_eq!(k > 0.0, delta < thresh, "{spec:?} delta={delta}");
            }
        }
    }

    fn sparse(n: usize) -> SparsityParams {
        SparsityParams { s0: 10, n, p: 400, m_bound: 1.0, c_pi: 1.0 }
    }

    #[test]
    fn high_dim_radius_limits_and_monotonicity() {
        let spec = welsch(0.1);
        let clean = welsch_mc(0.0, 1.0);
        let mut prev = f64::INFINITY;
        for n in [1e3, 1e5, 1e7, 1e9, 1e11] {
            let sp = sparse(n as usize);
            let lam = lambda_recommended(&spec, &clean, &sp).unwrap();
            let r = high_dim_radius(&spec, &clean, &sp, lam, 1e-10).unwrap().r_s;
            assert!(r < prev);
            prev = r;
        }
        assert!(prev < 1e-2);

        let sp = sparse(200);
        let mut prev = 0.0;
        for delta in [0.0, 0.1, 0.2, 0.3] {
            let r = high_dim_radius(&spec, &welsch_mc(delta, 1.0), &sp, 0.5, 1e-10).unwrap().r_s;
            assert!(r > prev);
            prev = r;
        }
        let mut prev = 0.0;
        for lam in [0.1, 0.2, 0.5, 1.0] {
            let r = high_dim_radius(&spec, &welsch_mc(0.1, 1.0), &sp, lam, 1e-10).unwrap().r_s;
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn high_dim_radius_approaches_scaled_eta0() {
        let (spec, tau) = (welsch(0.5), 1.5);
        let mc = ModelConstants { tau, ..welsch_mc(0.1, 0.4) };
        let sp = SparsityParams { n: 1usize << 60, ..sparse(1) };
        let lam = lambda_recommended(&spec, &mc, &sp).unwrap();
        let hd = high_dim_radius(&spec, &mc, &sp, lam, 1e-10).unwrap();
        let eta0 = welsch_radii(0.5, &mc).unwrap().eta0;
        assert!((hd.r_s / ((1.0 + 2.0 * tau) * eta0) - 1.0).abs() < 1e-4);
        assert!(hd.lambda_admissible);
        assert!(!high_dim_radius(&spec, &mc, &sp, 0.5 * lam, 1e-10).unwrap().lambda_admissible);
    }

    #[test]
    fn theory_report_json_shape() {
        let rep = theory_report(&huber(1.0), &ModelConstants { delta: 0.1, ..Default::default() }, &sparse(200), None)
            .unwrap();
        let v: serde_json::Value = serde_json::to_value(rep).unwrap();
        for k in ["eta0", "eta1", "kappa", "tractable", "lambda_rec", "r_s"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert!(v["eta1"].is_null());
    }
}
