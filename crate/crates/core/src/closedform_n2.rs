//! Two-center analysis with the gauge `f = −(r₁ + r₂)/2`.
//!
//! In the frame `e¹ ∝ dr₁ + dr₂`, `e² ∝ dr₁ − dr₂`, `e³ = e¹ × e²` the
//! Schouten tensor has a closed form in `(r₁, r₂, φ)` where `φ` is half the
//! angle between `dr₁` and `dr₂`:
//! `dr₁ = cos φ e¹ + sin φ e²`, `dr₂ = cos φ e¹ − sin φ e²`.

use serde::{Deserialize, Serialize};

use crate::ansatz::{Configuration, GaugeKind};
use crate::curvature::{eig_sym4, evaluate, schouten_q, Sym4};
use crate::error::{Error, Result};
use crate::hyperbolic3::{coth_minus_one, dist, dr_covector, star_wedge, Covector3, HPoint};

/// Margin for the strict inequalities of the certificate.
pub const PASS_MARGIN: f64 = 1e-9;

/// Below this `|dr₁ ± dr₂|` the moving frame is treated as degenerate.
const FRAME_DEGENERACY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCenterFrame {
    pub r1: f64,
    pub r2: f64,
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl TwoCenterFrame {
    pub fn new(r1: f64, r2: f64, phi: f64) -> Result<Self> {
        let (alpha, beta, gamma) = abg(r1, r2)?;
        check_phi(phi)?;
        Ok(TwoCenterFrame { r1, r2, phi, alpha, beta, gamma })
    }
}

fn check_radii(r1: f64, r2: f64) -> Result<()> {
    for (what, r) in [("r1", r1), ("r2", r2)] {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositive { what, value: r });
        }
    }
    Ok(())
}

fn check_phi(phi: f64) -> Result<()> {
    if !(-1e-12..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&phi) {
        return Err(Error::Domain(format!("phi = {phi} outside [0, π/2]")));
    }
    Ok(())
}

/// `α = coth r₁ + coth r₂ − 2`, `β = (coth²r₁ + coth²r₂ − 2)/(coth r₁ + coth r₂)`,
/// `γ = coth r₁ − coth r₂`.
pub fn abg(r1: f64, r2: f64) -> Result<(f64, f64, f64)> {
    check_radii(r1, r2)?;
    let (m1, m2) = (coth_minus_one(r1), coth_minus_one(r2));
    let (c1, c2) = (1.0 + m1, 1.0 + m2);
    let alpha = m1 + m2;
    let beta = (m1 * (c1 + 1.0) + m2 * (c2 + 1.0)) / (c1 + c2);
    let gamma = m1 - m2;
    Ok((alpha, beta, gamma))
}

/// `(α − β, β − |γ|)` evaluated without cancellation. Both are positive for
/// all radii, which is the chain `α > β > |γ|`.
pub fn abg_gaps(r1: f64, r2: f64) -> Result<(f64, f64)> {
    check_radii(r1, r2)?;
    let (m1, m2) = (coth_minus_one(r1), coth_minus_one(r2));
    let sum = 2.0 + m1 + m2;
    let m_small = m1.min(m2);
    Ok((2.0 * m1 * m2 / sum, 2.0 * m_small * (2.0 + m_small) / sum))
}

/// `φ` at `p`, with the adapted coframe when it is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiAt {
    pub phi: f64,
    pub r1: f64,
    pub r2: f64,
    /// `[e¹, e², e³]` in the hyperbolic frame; `None` where `dr₁ = ±dr₂`.
    pub frame: Option<[Covector3; 3]>,
}

impl PhiAt {
    pub fn is_degenerate(&self) -> bool {
        self.frame.is_none()
    }
}

/// `cos φ = |dr₁ + dr₂|/2`, `sin φ = |dr₁ − dr₂|/2`.
pub fn phi_at(p: &HPoint, p1: &HPoint, p2: &HPoint) -> Result<PhiAt> {
    let dr1 = dr_covector(p, p1).map_err(|_| Error::AtCenter { index: 0, distance: dist(p, p1) })?;
    let dr2 = dr_covector(p, p2).map_err(|_| Error::AtCenter { index: 1, distance: dist(p, p2) })?;
    let sum = dr1 + dr2;
    let diff = dr1 - dr2;
    let phi = diff.norm().atan2(sum.norm());
    let frame = if sum.norm() > FRAME_DEGENERACY && diff.norm() > FRAME_DEGENERACY {
        let e1 = sum * (1.0 / sum.norm());
        let e2 = diff * (1.0 / diff.norm());
        Some([e1, e2, star_wedge(&e1, &e2)])
    } else {
        None
    };
    Ok(PhiAt { phi, r1: dist(p, p1), r2: dist(p, p2), frame })
}

/// Schouten components in the frame `{e₁, e₂, e₃, e₄}`.
pub fn q_components(r1: f64, r2: f64, phi: f64) -> Result<Sym4> {
    let fr = TwoCenterFrame::new(r1, r2, phi)?;
    let (s2, c2) = (phi.sin().powi(2), phi.cos().powi(2));
    let (a, b, g) = (fr.alpha, fr.beta, fr.gamma);
    let mut q = Sym4::diagonal([
        (a + 1.0) * s2 + b * c2,
        (a - b) * c2 - s2,
        // (α + 1) − (β + 1)cos²φ, without the cancellation in 1 − cos²φ
        a - b * c2 + s2,
        s2 + b * c2,
    ]);
    q.set(2, 3, g * phi.sin() * phi.cos());
    Ok(q)
}

/// `e^{−2f}V⁻¹ = 2e^{r₁+r₂}/(coth r₁ + coth r₂)`.
pub fn rescale_factor(r1: f64, r2: f64) -> f64 {
    2.0 * (r1 + r2).exp() / (2.0 + coth_minus_one(r1) + coth_minus_one(r2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuCertificate {
    /// Eigenvalues of the g-orthonormal Schouten tensor, ascending.
    pub mu: [f64; 4],
    /// `2/(1 + e^{−(r₁+r₂)})`.
    pub bound: f64,
    /// `α e^{r₁+r₂}/(coth r₁ + coth r₂)`, the intermediate lower bound.
    pub alpha_bound: f64,
    /// `det(Q_{34 block} − sin²φ) − (β² − γ²) sin²φ cos²φ`.
    pub det_margin: f64,
    pub pass: bool,
}

impl MuCertificate {
    pub fn mu13(&self) -> f64 {
        self.mu[0] + self.mu[2]
    }

    pub fn mu12(&self) -> f64 {
        self.mu[0] + self.mu[1]
    }
}

pub fn mu_certificate(r1: f64, r2: f64, phi: f64) -> Result<MuCertificate> {
    let fr = TwoCenterFrame::new(r1, r2, phi)?;
    let q = q_components(r1, r2, phi)?;
    let factor = rescale_factor(r1, r2);
    let mu = eig_sym4(&(q * factor));
    let s2 = phi.sin().powi(2);
    let c2 = phi.cos().powi(2);
    let det = (q.0[2][2] - s2) * (q.0[3][3] - s2) - q.0[2][3] * q.0[3][2];
    let det_margin = det - (fr.beta * fr.beta - fr.gamma * fr.gamma) * s2 * c2;
    let bound = 2.0 / (1.0 + (-(r1 + r2)).exp());
    let alpha_bound = fr.alpha * factor / 2.0;
    let pass = mu[0] + mu[2] > 1.0 - PASS_MARGIN && mu[0] + mu[1] >= -PASS_MARGIN && det_margin > -PASS_MARGIN;
    Ok(MuCertificate { mu, bound, alpha_bound, det_margin, pass })
}

/// Realize `(r₁, r₂, φ)` at `p` and express the general pipeline's Schouten
/// tensor in the same moving frame. `None` frame at degenerate points.
pub fn pipeline_q_in_frame(cfg: &Configuration, p: &HPoint) -> Result<(PhiAt, Option<Sym4>)> {
    let [p1, p2] = two_centers(cfg)?;
    let at = phi_at(p, &p1, &p2)?;
    let pc = evaluate(cfg, p)?;
    let q = schouten_q(&pc.potential, &pc.gauge);
    Ok((at, at.frame.map(|rows| q.rotate_spatial(&rows))))
}

fn two_centers(cfg: &Configuration) -> Result<[HPoint; 2]> {
    if cfg.n() != 2 || !matches!(cfg.gauge_kind(), GaugeKind::MeanDistance) {
        return Err(Error::InvalidConfiguration(
            "the two-center analysis needs exactly two centers and the mean-distance gauge".into(),
        ));
    }
    Ok([cfg.centers()[0], cfg.centers()[1]])
}
