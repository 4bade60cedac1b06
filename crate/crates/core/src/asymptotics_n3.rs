//! Near-coincident centers.
//!
//! Two regimes are covered. The orbifold limit is `n` centers merged into one
//! point, with potential `V = 1 + nG` and gauge `f = −r`. Its Ricci tensor
//! has one eigenvalue `ζ` on `{dr, V⁻¹θ}` and another, `η`, on the
//! orthogonal plane. The cluster regime has three collinear centers, close
//! together. There the leading part `R̂` of `6V·Ric` is explicit in the radii
//! `r_j` and in the angles `φ_j` of `dr_j` against `ê¹ ∝ Σ dr_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Configuration, GaugeKind};
use crate::curvature::{eig_sym4, evaluate, Sym4};
use crate::error::{Error, Result};
use crate::hyperbolic3::{coth_minus_one, dist, dr_covector, geodesic_point, star_wedge, Covector3, HPoint};

/// Tolerance on `Σ sin φ_j = 0`.
pub const ANGLE_CONSTRAINT_TOL: f64 = 1e-10;

/// Relative triangle-equality defect accepted as collinear by default.
pub const COLLINEARITY_TOL: f64 = 1e-9;

/// Inner core of each ball excluded from sampling, relative to `ε`.
pub const CORE_FRACTION: f64 = 1e-3;

/// `(ζ, η)` for `V = 1 + nG`, `f = −r`:
/// `Ric = ζ[dr² + (V⁻¹θ)²] + η(h − dr²)` in the adapted frame.
///
/// With `m = coth r − 1`:
/// `ζ = m(4 + 2n + 3nm)/(2 + nm)`, `η = m(8 − 2n + 3nm)/(2 + nm)`.
pub fn orbifold_ricci(n: u32, r: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain("orbifold multiplicity must be at least 1".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NonPositive { what: "r", value: r });
    }
    let nf = f64::from(n);
    let m = coth_minus_one(r);
    let pre = m / (2.0 + nf * m);
    Ok((pre * (4.0 + 2.0 * nf + 3.0 * nf * m), pre * (8.0 - 2.0 * nf + 3.0 * nf * m)))
}

/// The sign of the orbifold-limit Ricci tensor, including the boundary at
/// infinity where `η/ζ → (8 − 2n)/(4 + 2n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbifoldSign {
    Positive,
    /// Positive at every finite `r` but degenerate in the limit.
    NonNegative,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbifoldVerdict {
    pub n: u32,
    /// `η > 0` (hence `ζ > 0`) at every finite `r`.
    pub positive_everywhere: bool,
    pub limit_eta_over_zeta: f64,
    pub verdict: OrbifoldSign,
    /// First scanned radius with `η < 0`.
    pub negative_witness: Option<f64>,
    /// Smallest `η/ζ` over the scanned radii.
    pub min_eta_over_zeta: f64,
    /// Whether the scan agrees with the sign analysis.
    pub scan_consistent: bool,
}

/// Radii scanned by [`orbifold_positivity`]: log-spaced over `[1e−3, 40]`.
pub fn orbifold_scan_radii() -> Vec<f64> {
    let count = 2000;
    let (lo, hi) = (1e-3f64.ln(), 40f64.ln());
    (0..count).map(|k| (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp()).collect()
}

/// Sign analysis of `η`. Its numerator is `8 − 2n + 3n(coth r − 1)`, and
/// `coth r − 1` sweeps `(0, ∞)`, so `η > 0` for all `r` iff `n ≤ 4`, with
/// limit ratio zero exactly when `n = 4`. A radius scan backs this up and
/// supplies a witness when `η` goes negative.
pub fn orbifold_positivity(n: u32) -> Result<OrbifoldVerdict> {
    if n == 0 {
        return Err(Error::Domain("orbifold multiplicity must be at least 1".into()));
    }
    let nf = f64::from(n);
    let constant = 8.0 - 2.0 * nf;
    let verdict = if constant > 0.0 {
        OrbifoldSign::Positive
    } else if constant == 0.0 {
        OrbifoldSign::NonNegative
    } else {
        OrbifoldSign::Negative
    };
    let mut negative_witness = None;
    let mut min_ratio = f64::INFINITY;
    for r in orbifold_scan_radii() {
        let (zeta, eta) = orbifold_ricci(n, r)?;
        if eta < 0.0 && negative_witness.is_none() {
            negative_witness = Some(r);
        }
        min_ratio = min_ratio.min(eta / zeta);
    }
    let positive_everywhere = constant >= 0.0;
    Ok(OrbifoldVerdict {
        n,
        positive_everywhere,
        limit_eta_over_zeta: constant / (4.0 + 2.0 * nf),
        verdict,
        negative_witness,
        min_eta_over_zeta: min_ratio,
        scan_consistent: positive_everywhere == negative_witness.is_none(),
    })
}

/// Radii and angles of three `dr_j` in a frame with `ê¹ ∝ Σ dr_j`:
/// `dr_j = cos φ_j ê¹ + sin φ_j ê²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterFrameData {
    pub r: [f64; 3],
    pub phi: [f64; 3],
    /// `Σ cos φ_j = |Σ dr_j|`.
    pub kappa: f64,
}

fn check_angles(phi: &[f64; 3]) -> Result<()> {
    let s: f64 = phi.iter().map(|p| p.sin()).sum();
    if !phi.iter().all(|p| p.is_finite()) || s.abs() > ANGLE_CONSTRAINT_TOL {
        return Err(Error::Constraint(format!("Σ sin φ_j = {s:e}, expected 0")));
    }
    Ok(())
}

impl ClusterFrameData {
    pub fn new(r: [f64; 3], phi: [f64; 3]) -> Result<Self> {
        for (what, v) in ["r1", "r2", "r3"].into_iter().zip(r) {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositive { what, value: v });
            }
        }
        check_angles(&phi)?;
        Ok(ClusterFrameData { r, phi, kappa: phi.iter().map(|p| p.cos()).sum() })
    }

    /// `(Σ 1/r_j)²`, the eigenvalue floor for `R̂`.
    pub fn inverse_radius_sum_sq(&self) -> f64 {
        self.r.iter().map(|r| 1.0 / r).sum::<f64>().powi(2)
    }
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Leading part of `6V·Ric` near a cluster, in the frame `{ê¹, ê², ê³, V⁻¹θ}`.
pub fn rhat(d: &ClusterFrameData) -> Sym4 {
    let (s, c): (Vec<f64>, Vec<f64>) = d.phi.iter().map(|p| p.sin_cos()).unzip();
    let k = d.kappa;
    let mut t = [0.0f64; 6];
    for j in 0..3 {
        let w = 1.0 / (d.r[j] * d.r[j]);
        t[0] += w * (2.0 + k * c[j] + 2.0 * s[j] * s[j]);
        t[1] += w * (2.0 - k * c[j] + 2.0 * c[j] * c[j]);
        t[2] += w * (k - 2.0 * c[j]) * s[j];
        t[3] += w * (4.0 - k * c[j]);
        t[4] += w * (2.0 + k * c[j]);
        t[5] += w * k * s[j];
    }
    for (j, l) in PAIRS {
        let w = 1.0 / (d.r[j] * d.r[l]);
        t[0] += 2.0 * w * (2.0 + s[j] * s[j] + s[l] * s[l]);
        t[1] += 2.0 * w * (2.0 + c[j] * c[j] + c[l] * c[l]);
        t[2] -= 2.0 * w * (c[j] * s[j] + c[l] * s[l]);
        t[3] += 8.0 * w;
        t[4] += 4.0 * w;
    }
    let mut m = Sym4::diagonal([t[0], t[1], t[3], t[4]]);
    m.set(0, 1, t[2]);
    m.set(2, 3, t[5]);
    m
}

/// The quadratic-form coefficients of `R̂` along `cos ϑ ê₁ + sin ϑ ê₂`
/// (the `a`'s) and `cos ϑ ê₃ + sin ϑ ê₄` (the `b`'s). Pairs are ordered
/// `(1,2), (1,3), (2,3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFunctions {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub a_pairs: [f64; 3],
    pub b_pairs: [f64; 3],
}

/// Simplified trigonometric forms.
pub fn bound_functions(phi: [f64; 3], theta: f64) -> Result<BoundFunctions> {
    check_angles(&phi)?;
    let mut a = [3.0; 3];
    let mut b = [3.0; 3];
    for j in 0..3 {
        for k in (0..3).filter(|&k| k != j) {
            a[j] += (phi[j] + phi[k] - 2.0 * theta).cos();
            b[j] -= (phi[j] - phi[k] + 2.0 * theta).cos();
        }
    }
    let a_pairs = PAIRS.map(|(j, k)| 6.0 - (2.0 * phi[j] - 2.0 * theta).cos() - (2.0 * phi[k] - 2.0 * theta).cos());
    let b_pairs = [4.0 + 4.0 * theta.cos().powi(2); 3];
    Ok(BoundFunctions { a, b, a_pairs, b_pairs })
}

/// The same coefficients read directly off the `R̂` table.
pub fn bound_functions_by_definition(phi: [f64; 3], theta: f64) -> Result<BoundFunctions> {
    check_angles(&phi)?;
    let k: f64 = phi.iter().map(|p| p.cos()).sum();
    let (st, ct) = theta.sin_cos();
    let (s, c) = (phi.map(f64::sin), phi.map(f64::cos));
    let a = [0, 1, 2].map(|j| {
        ct * ct * (2.0 + k * c[j] + 2.0 * s[j] * s[j])
            + st * st * (2.0 - k * c[j] + 2.0 * c[j] * c[j])
            + 2.0 * ct * st * (k - 2.0 * c[j]) * s[j]
    });
    let b = [0, 1, 2].map(|j| ct * ct * (4.0 - k * c[j]) + 2.0 * ct * st * k * s[j] + st * st * (2.0 + k * c[j]));
    let a_pairs = PAIRS.map(|(j, l)| {
        2.0 * ct * ct * (2.0 + s[j] * s[j] + s[l] * s[l]) + 2.0 * st * st * (2.0 + c[j] * c[j] + c[l] * c[l])
            - 4.0 * st * ct * (c[j] * s[j] + c[l] * s[l])
    });
    let b_pairs = [8.0 * ct * ct + 4.0 * st * st; 3];
    Ok(BoundFunctions { a, b, a_pairs, b_pairs })
}

/// Relative triangle-equality defect `(d₁ + d₂ + d₃ − 2 max d)/max d`,
/// zero exactly when the three centers lie on one geodesic, in order.
pub fn collinearity_defect(centers: &[HPoint]) -> Result<f64> {
    let [p, q, s] = three(centers)?;
    let d = [dist(&p, &q), dist(&p, &s), dist(&q, &s)];
    let max = d.iter().cloned().fold(0.0, f64::max);
    Ok((d.iter().sum::<f64>() - 2.0 * max) / max)
}

fn three(centers: &[HPoint]) -> Result<[HPoint; 3]> {
    match centers {
        [p, q, s] => Ok([*p, *q, *s]),
        _ => Err(Error::InvalidConfiguration(format!("expected three centers, got {}", centers.len()))),
    }
}

/// Cluster data realized at an actual point, with the frame used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedCluster {
    pub data: ClusterFrameData,
    /// `[ê¹, ê², ê³]` in the hyperbolic frame, `ê³ = ê¹ × ê²`.
    pub frame: [Covector3; 3],
    /// Largest `|⟨dr_j, ê³⟩|`; zero for collinear centers.
    pub off_plane: f64,
}

/// Compute `r_j`, `φ_j` at `p`. `ê²` is taken from the `dr_j` with the
/// largest component orthogonal to `ê¹`; on the axis through collinear
/// centers any orthogonal direction serves.
pub fn realize_cluster(centers: &[HPoint], p: &HPoint) -> Result<RealizedCluster> {
    let cs = three(centers)?;
    let mut dr = [Covector3::ZERO; 3];
    let mut r = [0.0; 3];
    for j in 0..3 {
        dr[j] = dr_covector(p, &cs[j]).map_err(|_| Error::AtCenter { index: j, distance: dist(p, &cs[j]) })?;
        r[j] = dist(p, &cs[j]);
    }
    let sum = dr[0] + dr[1] + dr[2];
    let e1 = sum
        .normalized()
        .filter(|e| e.norm() > 0.5 && sum.norm() > 1e-12)
        .ok_or_else(|| Error::Domain("Σ dr_j vanishes; the adapted frame is undefined".into()))?;
    let perp = dr.map(|d| d - e1 * d.dot(&e1));
    let best = perp.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("three entries");
    let e2 = if best.norm() > 1e-9 {
        best * (1.0 / best.norm())
    } else {
        let trial = if e1.0[0].abs() < 0.9 { Covector3([1.0, 0.0, 0.0]) } else { Covector3([0.0, 1.0, 0.0]) };
        let t = trial - e1 * trial.dot(&e1);
        t * (1.0 / t.norm())
    };
    let e3 = star_wedge(&e1, &e2);
    let phi = dr.map(|d| d.dot(&e2).atan2(d.dot(&e1)));
    let off_plane = dr.iter().map(|d| d.dot(&e3).abs()).fold(0.0, f64::max);
    Ok(RealizedCluster { data: ClusterFrameData::new(r, phi)?, frame: [e1, e2, e3], off_plane })
}

/// Sampling and acceptance parameters for [`cluster_certificate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    /// Accepted relative collinearity defect. Raising it lets nearly
    /// collinear clusters through; the report then shows whether they pass.
    pub collinearity_tol: f64,
}

impl ClusterSpec {
    pub fn new(epsilon: f64, samples: usize, seed: u64) -> Self {
        ClusterSpec { epsilon, samples, seed, collinearity_tol: COLLINEARITY_TOL }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub config: Configuration,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    /// `min (λ_min(R̂)/(Σ 1/r_j)²) − 1` over the samples.
    pub min_eig_margin: f64,
    /// `min (λ_min(R̂)/V²) − 1`.
    pub min_v2_margin: f64,
    /// Smallest eigenvalue of the g-orthonormal Ricci tensor from the full
    /// closed-form pipeline (mean-distance gauge).
    pub min_pipeline_eig: f64,
    /// `max |6V·Ric − R̂|/V`, entrywise in the adapted frame.
    pub max_discrepancy: f64,
    pub max_off_plane: f64,
    /// Samples where the realized angles miss `Σ sin φ_j = 0`; only
    /// possible for clusters admitted through a relaxed collinearity test.
    pub constraint_failures: usize,
    pub collinearity_defect: f64,
    pub worst_point: Option<HPoint>,
    pub passed: bool,
}

/// Sample point `k` of `count` in the hyperbolic shell `rmin ≤ r ≤ rmax`
/// around `center`: log-uniform radius, uniform direction.
pub fn shell_sample(rng: &mut ChaCha8Rng, center: &HPoint, rmin: f64, rmax: f64) -> Result<HPoint> {
    let radius = if rmin < rmax { rng.random_range(rmin.ln()..rmax.ln()).exp() } else { rmax };
    let uz: f64 = rng.random_range(-1.0..1.0);
    let az: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let st = (1.0 - uz * uz).sqrt();
    geodesic_point(center, radius, [st * az.cos(), st * az.sin(), uz])
}

struct ClusterSample {
    point: HPoint,
    eig_margin: f64,
    v2_margin: f64,
    pipeline_eig: f64,
    discrepancy: f64,
    off_plane: f64,
}

fn cluster_sample(cfg: &Configuration, p: HPoint) -> Result<ClusterSample> {
    let rc = realize_cluster(cfg.centers(), &p)?;
    let rh = rhat(&rc.data);
    let min_eig = eig_sym4(&rh)[0];
    let pc = evaluate(cfg, &p)?;
    let v = pc.potential.v;
    let six_v_ric = pc.ricci_frame.rotate_spatial(&rc.frame) * (6.0 * v);
    Ok(ClusterSample {
        point: p,
        eig_margin: min_eig / rc.data.inverse_radius_sum_sq() - 1.0,
        v2_margin: min_eig / (v * v) - 1.0,
        pipeline_eig: pc.report.eigs[0],
        discrepancy: six_v_ric.max_abs_diff(&rh) / v,
        off_plane: rc.off_plane,
    })
}

/// Evaluate the cluster bounds at `samples` points spread over the three
/// balls `B_ε(p_j)`, outside cores of radius `10⁻³ε`. The gauge is forced to
/// the mean distance. Passing requires, at every sample, `λ_min(R̂)` above
/// both `(Σ 1/r_j)²` and `V²` and a positive pipeline Ricci tensor.
pub fn cluster_certificate(cfg: &Configuration, spec: &ClusterSpec) -> Result<ClusterReport> {
    if !(spec.epsilon > 0.0 && spec.epsilon < 0.5) {
        return Err(Error::Domain(format!("epsilon = {} must lie in (0, 1/2)", spec.epsilon)));
    }
    if spec.samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let cfg = cfg.with_gauge(GaugeKind::MeanDistance)?;
    let defect = collinearity_defect(cfg.centers())?;
    if defect > spec.collinearity_tol {
        return Err(Error::InvalidConfiguration(format!(
            "centers are not collinear (relative defect {defect:e} > {:e})",
            spec.collinearity_tol
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = cfg.centers().to_vec();
    let points = (0..spec.samples)
        .map(|k| shell_sample(&mut rng, &centers[k % 3], CORE_FRACTION * spec.epsilon, spec.epsilon))
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Result<ClusterSample>> = points.par_iter().map(|p| cluster_sample(&cfg, *p)).collect();
    let mut results = Vec::with_capacity(outcomes.len());
    let mut constraint_failures = 0;
    for o in outcomes {
        match o {
            Ok(s) => results.push(s),
            Err(Error::Constraint(_)) => constraint_failures += 1,
            Err(e) => return Err(e),
        }
    }
    let mut report = ClusterReport {
        config: cfg.clone(),
        epsilon: spec.epsilon,
        samples: spec.samples,
        seed: spec.seed,
        min_eig_margin: f64::INFINITY,
        min_v2_margin: f64::INFINITY,
        min_pipeline_eig: f64::INFINITY,
        max_discrepancy: 0.0,
        max_off_plane: 0.0,
        constraint_failures,
        collinearity_defect: defect,
        worst_point: None,
        passed: false,
    };
    for s in &results {
        if s.eig_margin < report.min_eig_margin {
            report.min_eig_margin = s.eig_margin;
            report.worst_point = Some(s.point);
        }
        report.min_v2_margin = report.min_v2_margin.min(s.v2_margin);
        report.min_pipeline_eig = report.min_pipeline_eig.min(s.pipeline_eig);
        report.max_discrepancy = report.max_discrepancy.max(s.discrepancy);
        report.max_off_plane = report.max_off_plane.max(s.off_plane);
    }
    report.passed = constraint_failures == 0
        && report.min_eig_margin > 0.0 && report.min_v2_margin > 0.0 && report.min_pipeline_eig > 0.0;
    Ok(report)
}

impl ClusterReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{gauge, PotentialData};
    use crate::curvature::ricci_frame;
    use crate::hyperbolic3::{collinear_config, dgreen, green, SymForm3};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn third() -> f64 {
        2.0 * PI / 3.0
    }

    #[test]
    fn orbifold_examples() {
        let r = 0.5 * 3f64.ln();
        let (z, e) = orbifold_ricci(3, r).unwrap();
        assert_abs_diff_eq!(z, 3.8, epsilon = 1e-13);
        assert_abs_diff_eq!(e, 2.2, epsilon = 1e-13);
        let (z, e) = orbifold_ricci(1, r).unwrap();
        assert_abs_diff_eq!(z, 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(e, 3.0, epsilon = 1e-13);
        let (_, e) = orbifold_ricci(5, 3.0).unwrap();
        assert!(e < 0.0);
        assert!(orbifold_ricci(0, 1.0).is_err());
        assert!(orbifold_ricci(2, 0.0).is_err());
    }

    #[test]
    fn zeta_dominates_eta() {
        for n in 1..=12 {
            for r in orbifold_scan_radii() {
                let (z, e) = orbifold_ricci(n, r).unwrap();
                assert!(z >= e, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn orbifold_matches_the_ricci_formula() {
        // V = 1 + nG(r) and f = −r fed straight into the general Ricci formula.
        let c = HPoint::new(0.0, 0.0, 1.0).unwrap();
        let cfg = Configuration::new(vec![c], GaugeKind::SingleDistance(0)).unwrap();
        for n in 1..=6u32 {
            for &(x, z) in &[(0.3, 1.4), (2.0, 0.2), (0.0, 9.0), (0.05, 1.01)] {
                let p = HPoint::new(x, 0.1, z).unwrap();
                let r = dist(&p, &c);
                let dr = dr_covector(&p, &c).unwrap();
                let nf = f64::from(n);
                let pd = PotentialData { v: 1.0 + nf * green(r).unwrap(), dv: dr * (nf * dgreen(r).unwrap()) };
                let gd = gauge(&cfg, &p).unwrap();
                let ric = ricci_frame(&pd, &gd);
                let (zeta, eta) = orbifold_ricci(n, r).unwrap();
                let block = SymForm3::square(&dr) * zeta + (SymForm3::identity() - SymForm3::square(&dr)) * eta;
                let mut expect = Sym4::diagonal([0.0, 0.0, 0.0, zeta]);
                for i in 0..3 {
                    for j in 0..3 {
                        expect.0[i][j] = block.0[i][j];
                    }
                }
                assert!(ric.max_abs_diff(&expect) < 1e-10 * (1.0 + zeta.abs()), "n={n} r={r}");
            }
        }
    }

    #[test]
    fn orbifold_verdicts() {
        for n in 1..=3 {
            let v = orbifold_positivity(n).unwrap();
            assert_eq!(v.verdict, OrbifoldSign::Positive);
            assert!(v.positive_everywhere && v.limit_eta_over_zeta > 0.0 && v.scan_consistent);
        }
        let v = orbifold_positivity(4).unwrap();
        assert_eq!(v.verdict, OrbifoldSign::NonNegative);
        assert!(v.positive_everywhere && v.negative_witness.is_none());
        assert_eq!(v.limit_eta_over_zeta, 0.0);
        assert!(v.min_eta_over_zeta > 0.0 && v.min_eta_over_zeta < 1e-3);
        let v = orbifold_positivity(5).unwrap();
        assert_eq!(v.verdict, OrbifoldSign::Negative);
        let w = v.negative_witness.unwrap();
        assert!(orbifold_ricci(5, w).unwrap().1 < 0.0);
        // η < 0 iff coth r − 1 < 2/15, i.e. r > ½ ln 16
        assert!(w > 0.5 * 16f64.ln() && w < 0.5 * 16f64.ln() * 1.01);
        assert!(!v.positive_everywhere && v.scan_consistent);
    }

    #[test]
    fn rhat_examples() {
        let d = ClusterFrameData::new([0.1; 3], [0.0, third(), -third()]).unwrap();
        assert_abs_diff_eq!(d.kappa, 0.0, epsilon = 1e-15);
        let m = rhat(&d);
        assert_abs_diff_eq!(m.0[3][3], 1800.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.0[2][3], 0.0, epsilon = 1e-9);

        let d = ClusterFrameData::new([0.1, 0.2, 0.3], [0.0; 3]).unwrap();
        assert_eq!(d.kappa, 3.0);
        let m = rhat(&d);
        assert_eq!(m.0[0][1], 0.0);
        assert_eq!(m.0[2][3], 0.0);

        assert!(ClusterFrameData::new([0.1; 3], [0.3, 0.0, 0.0]).is_err());
        assert!(ClusterFrameData::new([0.1, -1.0, 0.1], [0.0; 3]).is_err());
    }

    /// The leading-order display: with `S = Σ 1/r_j`, `A = Σ dr_j/r_j²`,
    /// `B = Σ dr_j`, the 3×3 block is `(2S² − ⟨A,B⟩)h + 2S Σ (h − dr_j²)/r_j + 2A⊙B`,
    /// the fiber entry `2S² + ⟨A,B⟩`, the mixed entries `−⋆(A∧B)`.
    fn rhat_from_display(r: [f64; 3], dr: [Covector3; 3]) -> Sym4 {
        let s: f64 = r.iter().map(|x| 1.0 / x).sum();
        let a = (0..3).fold(Covector3::ZERO, |acc, j| acc + dr[j] * (1.0 / (r[j] * r[j])));
        let b = dr[0] + dr[1] + dr[2];
        let mut block = SymForm3::identity() * (2.0 * s * s - a.dot(&b)) + SymForm3::sym_product(&a, &b) * 2.0;
        for j in 0..3 {
            block += (SymForm3::identity() - SymForm3::square(&dr[j])) * (2.0 * s / r[j]);
        }
        let mut m = Sym4::diagonal([0.0, 0.0, 0.0, 2.0 * s * s + a.dot(&b)]);
        let cross = star_wedge(&a, &b);
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = block.0[i][j];
            }
            m.set(i, 3, -cross.0[i]);
        }
        m
    }

    #[test]
    fn rhat_table_matches_the_display() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let phi1: f64 = rng.random_range(-PI..PI);
            let phi2: f64 = rng.random_range(-PI..PI);
            let s3 = -(phi1.sin() + phi2.sin());
            if s3.abs() > 1.0 {
                continue;
            }
            let phi3 = if rng.random_bool(0.5) { s3.asin() } else { PI - s3.asin() };
            let phi = [phi1, phi2, phi3];
            let r = [rng.random_range(0.01..0.3), rng.random_range(0.01..0.3), rng.random_range(0.01..0.3)];
            let d = ClusterFrameData::new(r, phi).unwrap();
            if d.kappa <= 0.0 {
                continue;
            }
            let dr = phi.map(|p| Covector3([p.cos(), p.sin(), 0.0]));
            let expect = rhat_from_display(r, dr);
            let got = rhat(&d);
            assert!(got.max_abs_diff(&expect) < 1e-10 * expect.max_abs());
        }
    }

    #[test]
    fn bound_function_examples() {
        let bf = bound_functions([0.0, third(), -third()], 0.0).unwrap();
        assert_abs_diff_eq!(bf.a[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(bf.b[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(bf.a_pairs[0], 5.5, epsilon = 1e-14);
        assert_abs_diff_eq!(bf.b_pairs[0], 8.0, epsilon = 1e-14);
        let bf = bound_functions([0.0, third(), -third()], FRAC_PI_2).unwrap();
        assert!(bf.b_pairs.iter().all(|b| (b - 4.0).abs() < 1e-14));
        assert!(bound_functions([0.5, 0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn bound_function_forms_agree_and_quadratic_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut tested = 0;
        while tested < 500 {
            let phi1: f64 = rng.random_range(-PI..PI);
            let phi2: f64 = rng.random_range(-PI..PI);
            let s3 = -(phi1.sin() + phi2.sin());
            if s3.abs() > 1.0 {
                continue;
            }
            let phi = [phi1, phi2, PI - s3.asin()];
            let theta: f64 = rng.random_range(-PI..PI);
            let fast = bound_functions(phi, theta).unwrap();
            let slow = bound_functions_by_definition(phi, theta).unwrap();
            for k in 0..3 {
                assert_abs_diff_eq!(fast.a[k], slow.a[k], epsilon = 1e-12);
                assert_abs_diff_eq!(fast.b[k], slow.b[k], epsilon = 1e-12);
                assert_abs_diff_eq!(fast.a_pairs[k], slow.a_pairs[k], epsilon = 1e-12);
                assert_abs_diff_eq!(fast.b_pairs[k], slow.b_pairs[k], epsilon = 1e-12);
            }
            let r = [rng.random_range(0.01..1.0), rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)];
            let m = rhat(&ClusterFrameData::new(r, phi).unwrap());
            let (st, ct) = theta.sin_cos();
            let lhs_a = ct * ct * m.0[0][0] + 2.0 * ct * st * m.0[0][1] + st * st * m.0[1][1];
            let lhs_b = ct * ct * m.0[2][2] + 2.0 * ct * st * m.0[2][3] + st * st * m.0[3][3];
            let mut rhs_a = 0.0;
            let mut rhs_b = 0.0;
            for j in 0..3 {
                rhs_a += fast.a[j] / (r[j] * r[j]);
                rhs_b += fast.b[j] / (r[j] * r[j]);
            }
            for (k, (j, l)) in PAIRS.into_iter().enumerate() {
                rhs_a += fast.a_pairs[k] / (r[j] * r[l]);
                rhs_b += fast.b_pairs[k] / (r[j] * r[l]);
            }
            assert!((lhs_a - rhs_a).abs() < 1e-10 * rhs_a.abs().max(1.0));
            assert!((lhs_b - rhs_b).abs() < 1e-10 * rhs_b.abs().max(1.0));
            tested += 1;
        }
    }

    #[test]
    fn realized_clusters_satisfy_the_constraint() {
        let cfg = collinear_config(&[0.1, 0.1], GaugeKind::MeanDistance).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..300 {
            let p = shell_sample(&mut rng, &cfg.centers()[k % 3], 1e-3, 0.2).unwrap();
            let rc = realize_cluster(cfg.centers(), &p).unwrap();
            assert!(rc.off_plane < 1e-12);
            let [e1, e2, _] = rc.frame;
            for j in 0..3 {
                let dr = dr_covector(&p, &cfg.centers()[j]).unwrap();
                let (s, c) = rc.data.phi[j].sin_cos();
                assert!((dr - (e1 * c + e2 * s)).norm() < 1e-12);
            }
            let m = rhat(&rc.data);
            assert!(eig_sym4(&m)[0] > rc.data.inverse_radius_sum_sq());
        }
    }

    #[test]
    fn degenerate_axis_sample() {
        // Separations (0.2, 0.02); the point sits on the axis at distance 0.01
        // above the lowest center, so r = (0.01, 0.19, 0.21).
        let cfg = collinear_config(&[0.2, 0.02], GaugeKind::MeanDistance).unwrap();
        let p = HPoint::new(0.0, 0.0, 0.01f64.exp()).unwrap();
        let rc = realize_cluster(cfg.centers(), &p).unwrap();
        for (got, want) in rc.data.r.iter().zip([0.01, 0.19, 0.21]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(rc.data.kappa, 1.0, epsilon = 1e-12);
        let m = rhat(&rc.data);
        assert!(eig_sym4(&m)[0] > rc.data.inverse_radius_sum_sq());
    }

    #[test]
    fn collinearity_detection() {
        let cfg = collinear_config(&[0.1, 0.1], GaugeKind::MeanDistance).unwrap();
        assert!(collinearity_defect(cfg.centers()).unwrap().abs() < 1e-12);
        let mut cs = cfg.centers().to_vec();
        cs[1].x += 0.05;
        assert!(collinearity_defect(&cs).unwrap() > 1e-3);
        let bent = Configuration::new(cs, GaugeKind::MeanDistance).unwrap();
        assert!(cluster_certificate(&bent, &ClusterSpec::new(0.05, 30, 1)).is_err());
        // With the tolerance relaxed the certificate runs and reports where
        // the planar frame breaks down.
        let mut spec = ClusterSpec::new(0.05, 30, 1);
        spec.collinearity_tol = 1.0;
        let rep = cluster_certificate(&bent, &spec).unwrap();
        assert!(rep.constraint_failures > 0 && !rep.passed);
        assert!(realize_cluster(&cfg.centers()[..2], &cfg.centers()[0]).is_err());
    }

    #[test]
    fn certificate_on_a_tight_cluster() {
        let cfg = collinear_config(&[0.1, 0.1], GaugeKind::MeanDistance).unwrap();
        let rep = cluster_certificate(&cfg, &ClusterSpec::new(0.05, 600, 9)).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.min_eig_margin > 0.0 && rep.min_v2_margin > 0.0 && rep.min_pipeline_eig > 0.0);
        // discrepancy stays bounded on the g₀ scale
        assert!(rep.max_discrepancy.is_finite() && rep.max_discrepancy < 100.0, "{}", rep.max_discrepancy);
        let again = cluster_certificate(&cfg, &ClusterSpec::new(0.05, 600, 9)).unwrap();
        assert_eq!(rep.to_json().unwrap(), again.to_json().unwrap());
        assert!(cluster_certificate(&cfg, &ClusterSpec::new(0.5, 10, 1)).is_err());
        assert!(cluster_certificate(&cfg, &ClusterSpec::new(0.05, 0, 1)).is_err());
    }
}
