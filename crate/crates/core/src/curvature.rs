//! Closed-form Ricci, scalar and Schouten curvature of
//! `g = e^{2f}(Vh + V⁻¹θ²)`, and pointwise positivity classification.
//!
//! Components are first assembled in the adapted frame
//! `{ê¹, ê², ê³, e⁴ = V⁻¹θ}` (orthonormal for `h + (V⁻¹θ)²`), then multiplied by
//! `e^{−2f}V⁻¹` to obtain components in a g-orthonormal frame.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::ansatz::{gauge, potential, Configuration, GaugeData, PotentialData};
use crate::error::Result;
use crate::hyperbolic3::{star_wedge, Covector3, HPoint, SymForm3};

/// Symmetric 4×4 components in the adapted frame (index 3 is the fiber).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym4(pub [[f64; 4]; 4]);

impl Sym4 {
    pub fn identity() -> Self {
        Self::diagonal([1.0; 4])
    }

    pub fn diagonal(d: [f64; 4]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = d[i];
        }
        Sym4(m)
    }

    /// Sets `(j, k)` and `(k, j)`.
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.0[j][k] = v;
        self.0[k][j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Sym4) -> f64 {
        (*self - *other).max_abs()
    }

    /// Components in a rotated frame of the `h`-block: `R M Rᵀ`, where the
    /// rows of `rows` are the new coframe vectors expressed in the old frame.
    /// The fiber direction is left unchanged.
    pub fn rotate_spatial(&self, rows: &[Covector3; 3]) -> Sym4 {
        let mut r = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = rows[i].0[j];
            }
        }
        r[3][3] = 1.0;
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        acc += r[i][a] * self.0[a][b] * r[j][b];
                    }
                }
                out[i][j] = acc;
            }
        }
        Sym4(out)
    }

    fn from_blocks(spatial: &SymForm3, fiber: f64, cross: &Covector3) -> Sym4 {
        let mut m = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = spatial.0[i][j];
            }
            m[i][3] = cross.0[i];
            m[3][i] = cross.0[i];
        }
        m[3][3] = fiber;
        Sym4(m)
    }
}

impl Add for Sym4 {
    type Output = Sym4;
    fn add(self, o: Sym4) -> Sym4 {
        let mut m = self.0;
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += o.0[i][j];
            }
        }
        Sym4(m)
    }
}

impl Sub for Sym4 {
    type Output = Sym4;
    fn sub(self, o: Sym4) -> Sym4 {
        self + o * -1.0
    }
}

impl Mul<f64> for Sym4 {
    type Output = Sym4;
    fn mul(self, s: f64) -> Sym4 {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|v| *v *= s);
        Sym4(m)
    }
}

/// Ricci tensor of `e^{2f}(Vh + V⁻¹θ²)` in the adapted frame:
///
/// ```text
/// (−2 − △f − 2|df|² − V⁻¹⟨dV,df⟩) h − 2Ddf + 2(df)² + 2V⁻¹ dV⊙df
///   + (−△f − 2|df|² + V⁻¹⟨dV,df⟩)(V⁻¹θ)² − 2V⁻¹ ⋆(dV∧df) ⊙ V⁻¹θ
/// ```
pub fn ricci_frame(pd: &PotentialData, gd: &GaugeData) -> Sym4 {
    let inv_v = 1.0 / pd.v;
    let df2 = gd.df.norm_sq();
    let dv_df = pd.dv.dot(&gd.df);
    let spatial = SymForm3::identity() * (-2.0 - gd.lapf - 2.0 * df2 - inv_v * dv_df) - gd.ddf * 2.0
        + SymForm3::square(&gd.df) * 2.0
        + SymForm3::sym_product(&pd.dv, &gd.df) * (2.0 * inv_v);
    let fiber = -gd.lapf - 2.0 * df2 + inv_v * dv_df;
    let cross = star_wedge(&pd.dv, &gd.df) * (-inv_v);
    Sym4::from_blocks(&spatial, fiber, &cross)
}

/// `s = 6 e^{−2f} V⁻¹ (−1 − △f − |df|²)`.
pub fn scalar_curv(pd: &PotentialData, gd: &GaugeData) -> f64 {
    6.0 * (-2.0 * gd.f).exp() / pd.v * (-1.0 - gd.lapf - gd.df.norm_sq())
}

/// Components of `g` itself in the adapted frame: `e^{2f}V · Id`.
pub fn metric_frame(pd: &PotentialData, gd: &GaugeData) -> Sym4 {
    Sym4::identity() * ((2.0 * gd.f).exp() * pd.v)
}

/// Schouten tensor `Q = Ric − (s/6) g`, assembled directly with `ψ = d log V`:
///
/// ```text
/// (−1 − |df|² − ⟨ψ,df⟩) h − 2Ddf + 2(df)² + 2ψ⊙df
///   + (1 − |df|² + ⟨ψ,df⟩)(V⁻¹θ)² − 2⋆(ψ∧df) ⊙ V⁻¹θ
/// ```
pub fn schouten_q(pd: &PotentialData, gd: &GaugeData) -> Sym4 {
    let psi = pd.dv * (1.0 / pd.v);
    let df2 = gd.df.norm_sq();
    let psi_df = psi.dot(&gd.df);
    let spatial = SymForm3::identity() * (-1.0 - df2 - psi_df) - gd.ddf * 2.0
        + SymForm3::square(&gd.df) * 2.0
        + SymForm3::sym_product(&psi, &gd.df) * 2.0;
    let fiber = 1.0 - df2 + psi_df;
    let cross = -star_wedge(&psi, &gd.df);
    Sym4::from_blocks(&spatial, fiber, &cross)
}

/// `e^{−2f}V⁻¹` times adapted-frame components: components w.r.t. a
/// g-orthonormal frame.
pub fn orthonormal_rescale(t: &Sym4, pd: &PotentialData, gd: &GaugeData) -> Sym4 {
    *t * ((-2.0 * gd.f).exp() / pd.v)
}

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 50;

/// Eigen-decomposition of a symmetric 4×4 array by cyclic Jacobi rotations.
/// Returns ascending eigenvalues and the matching eigenvectors as columns.
pub fn jacobi_eigen_sym4(t: &Sym4) -> ([f64; 4], [[f64; 4]; 4]) {
    let mut a = t.0;
    let mut v = Sym4::identity().0;
    let scale = t.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..4).flat_map(|p| ((p + 1)..4).map(move |q| (p, q))).map(|(p, q)| a[p][q] * a[p][q]).sum();
        if off.sqrt() <= JACOBI_TOL * scale || off == 0.0 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let tan = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let tan = if theta == 0.0 { 1.0 } else { tan };
                let c = 1.0 / (tan * tan + 1.0).sqrt();
                let s = tan * c;
                for k in 0..4 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut vals = [0.0; 4];
    let mut vecs = [[0.0; 4]; 4];
    for (slot, &i) in order.iter().enumerate() {
        vals[slot] = a[i][i];
        for k in 0..4 {
            vecs[k][slot] = v[k][i];
        }
    }
    (vals, vecs)
}

/// Eigenvalues in ascending order.
pub fn eig_sym4(t: &Sym4) -> [f64; 4] {
    jacobi_eigen_sym4(t).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFlags {
    pub positive_ricci: bool,
    pub strongly_positive: bool,
    pub ric_operator_nonneg: bool,
}

/// Pointwise summary of the Ricci tensor in a g-orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub point: Option<HPoint>,
    pub s: f64,
    pub eigs: [f64; 4],
    /// Eigenvalues `μ₁ ≤ … ≤ μ₄` of `Q′ = Ric′ − (s/6) Id`.
    pub q_eigs: [f64; 4],
    /// `eigs / s`; absent where `s = 0`.
    pub lambda: Option<[f64; 4]>,
    pub flags: CurvatureFlags,
    /// `s²/12 − |Ric₀|²`.
    pub gb_integrand: f64,
    pub ric_prime: Sym4,
}

impl CurvatureReport {
    /// `|Ric₀|`, the norm of the trace-free part.
    pub fn ric0_norm(&self) -> f64 {
        self.eigs.iter().map(|e| (e - self.s / 4.0).powi(2)).sum::<f64>().sqrt()
    }

    /// `s/(2√3) − |Ric₀|`; positive iff strongly positive.
    pub fn strong_margin(&self) -> f64 {
        self.s / (2.0 * 3f64.sqrt()) - self.ric0_norm()
    }
}

/// Classify `ric_prime` (g-orthonormal components) with scalar curvature `s`.
///
/// The Ricci-operator test `μ₁ + μ₂ ≥ 0` allows rounding of `1e−12` relative
/// to the largest `|μ|`, since the sum vanishes exactly on some loci.
pub fn classify(ric_prime: &Sym4, s: f64) -> CurvatureReport {
    let eigs = eig_sym4(ric_prime);
    let q_eigs = eigs.map(|e| e - s / 6.0);
    let ric0_sq: f64 = eigs.iter().map(|e| (e - s / 4.0).powi(2)).sum();
    let q_scale = q_eigs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let flags = CurvatureFlags {
        positive_ricci: eigs[0] > 0.0,
        strongly_positive: s > 0.0 && ric0_sq < s * s / 12.0,
        ric_operator_nonneg: q_eigs[0] + q_eigs[1] >= -1e-12 * q_scale,
    };
    CurvatureReport {
        point: None,
        s,
        eigs,
        q_eigs,
        lambda: (s != 0.0).then(|| eigs.map(|e| e / s)),
        flags,
        gb_integrand: s * s / 12.0 - ric0_sq,
        ric_prime: *ric_prime,
    }
}

/// Everything the closed-form pipeline produces at one point.
#[derive(Debug, Clone)]
pub struct PointCurvature {
    pub potential: PotentialData,
    pub gauge: GaugeData,
    /// Ricci in the adapted (conformal) frame.
    pub ricci_frame: Sym4,
    pub report: CurvatureReport,
}

pub fn evaluate(cfg: &Configuration, p: &HPoint) -> Result<PointCurvature> {
    let pd = potential(cfg, p)?;
    let gd = gauge(cfg, p)?;
    let ric = ricci_frame(&pd, &gd);
    let s = scalar_curv(&pd, &gd);
    let mut report = classify(&orthonormal_rescale(&ric, &pd, &gd), s);
    report.point = Some(*p);
    Ok(PointCurvature { potential: pd, gauge: gd, ricci_frame: ric, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::GaugeKind;
    use crate::hyperbolic3::{coth, dist};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64, z: f64) -> HPoint {
        HPoint::new(x, y, z).unwrap()
    }

    fn config(n: usize, gauge: GaugeKind) -> Configuration {
        let all = [pt(0.0, 0.0, 1.0), pt(0.4, -0.2, 1.7), pt(-0.3, 0.5, 0.6), pt(0.9, 0.8, 1.2)];
        Configuration::new(all[..n].to_vec(), gauge).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng) -> HPoint {
        pt(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(0.3..2.5))
    }

    #[test]
    fn zero_gauge_gives_minus_two_h() {
        let cfg = config(3, GaugeKind::Zero);
        let pc = evaluate(&cfg, &pt(0.1, 0.2, 0.9)).unwrap();
        assert!(pc.ricci_frame.max_abs_diff(&Sym4::diagonal([-2.0, -2.0, -2.0, 0.0])) < 1e-14);
        assert!(pc.report.s < 0.0);
        assert_abs_diff_eq!(pc.report.s, -6.0 / pc.potential.v, epsilon = 1e-13);
        let q = schouten_q(&pc.potential, &pc.gauge);
        assert!(q.max_abs_diff(&Sym4::diagonal([-1.0, -1.0, -1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn single_center_distance_gauge_is_einstein() {
        let cfg = config(1, GaugeKind::SingleDistance(0));
        for p in [pt(0.3, 0.0, 1.2), pt(-2.0, 1.0, 0.4), pt(0.0, 0.01, 1.0)] {
            let pc = evaluate(&cfg, &p).unwrap();
            let r = dist(&p, &cfg.centers()[0]);
            let expect = 3.0 * (coth(r) - 1.0);
            let target = Sym4::diagonal([expect; 4]);
            assert!(pc.ricci_frame.max_abs_diff(&target) < 1e-12 * (1.0 + expect));
            assert!(pc.report.ric_prime.max_abs_diff(&Sym4::diagonal([6.0; 4])) < 1e-10);
            assert_abs_diff_eq!(pc.report.s, 24.0, epsilon = 1e-10);
            let qp = orthonormal_rescale(&schouten_q(&pc.potential, &pc.gauge), &pc.potential, &pc.gauge);
            assert!(qp.max_abs_diff(&Sym4::diagonal([2.0; 4])) < 1e-10);
        }
    }

    #[test]
    fn log_z_gauge_is_scalar_flat() {
        for n in 1..=4 {
            let cfg = config(n, GaugeKind::LogZ);
            let pc = evaluate(&cfg, &pt(0.2, -0.4, 0.75)).unwrap();
            assert!(pc.report.s.abs() < 1e-12);
            assert!(pc.report.lambda.is_none());
            assert!(!pc.report.flags.strongly_positive);
        }
    }

    #[test]
    fn rescale_examples() {
        let pd = PotentialData { v: 1.0, dv: Covector3::ZERO };
        assert_eq!(orthonormal_rescale(&Sym4::identity(), &pd, &GaugeData::ZERO), Sym4::identity());
        // n = 2, coth r₁ = coth r₂ = 2: e^{−2f}V⁻¹ = 2e^{r₁+r₂}/(coth r₁ + coth r₂) = 1.5
        let t = 0.5 * 3f64.ln();
        let cfg = Configuration::new(vec![pt(0.0, 0.0, 1.0), pt(0.0, 0.0, (2.0 * t).exp())], GaugeKind::MeanDistance)
            .unwrap();
        let p = pt(0.0, 0.0, t.exp());
        let pd = potential(&cfg, &p).unwrap();
        let gd = gauge(&cfg, &p).unwrap();
        assert_abs_diff_eq!(orthonormal_rescale(&Sym4::identity(), &pd, &gd).0[0][0], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn classify_examples() {
        let rep = classify(&Sym4::diagonal([6.0; 4]), 24.0);
        assert!(rep.flags.positive_ricci && rep.flags.strongly_positive && rep.flags.ric_operator_nonneg);
        assert_abs_diff_eq!(rep.gb_integrand, 48.0, epsilon = 1e-12);

        let rep = classify(&Sym4::diagonal([1.0, 1.0, 1.0, -0.1]), 2.9);
        assert!(!rep.flags.positive_ricci);

        let rep = classify(&Sym4::diagonal([2.0, 1.0, 1.0, 1.0]), 5.0);
        assert_abs_diff_eq!(rep.ric0_norm().powi(2), 0.75, epsilon = 1e-12);
        assert!(rep.flags.strongly_positive);
        assert_abs_diff_eq!(rep.gb_integrand, 25.0 / 12.0 - 0.75, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(eig_sym4(&Sym4::diagonal([4.0, 3.0, 2.0, 1.0])), [1.0, 2.0, 3.0, 4.0]);
        let mut m = Sym4::diagonal([1.5, 1.5, 7.0, -3.0]);
        m.set(0, 1, 0.25);
        let e = eig_sym4(&m);
        assert!(e.iter().any(|v| (v - 1.25).abs() < 1e-13));
        assert!(e.iter().any(|v| (v - 1.75).abs() < 1e-13));
    }

    fn random_sym(rng: &mut ChaCha8Rng) -> Sym4 {
        let mut m = Sym4::default();
        for i in 0..4 {
            for j in i..4 {
                m.set(i, j, rng.random_range(-5.0..5.0));
            }
        }
        m
    }

    #[test]
    fn jacobi_spectral_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let m = random_sym(&mut rng);
            let (vals, vecs) = jacobi_eigen_sym4(&m);
            for w in vals.windows(2) {
                assert!(w[0] <= w[1]);
            }
            let mut rec = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    rec[i][j] = (0..4).map(|k| vecs[i][k] * vals[k] * vecs[j][k]).sum();
                }
            }
            assert!(Sym4(rec).max_abs_diff(&m) < 1e-10);
            let reference = nalgebra::Matrix4::from_fn(|i, j| m.0[i][j]).symmetric_eigenvalues();
            let mut r: Vec<f64> = reference.iter().copied().collect();
            r.sort_by(f64::total_cmp);
            for k in 0..4 {
                assert!((r[k] - vals[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobi_similarity_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_sym(&mut rng);
        let (_, q) = jacobi_eigen_sym4(&random_sym(&mut rng));
        let mut rot = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                rot[i][j] = (0..4)
                    .flat_map(|a| (0..4).map(move |b| (a, b)))
                    .map(|(a, b)| q[a][i] * m.0[a][b] * q[b][j])
                    .sum();
            }
        }
        let (a, b) = (eig_sym4(&m), eig_sym4(&Sym4(rot)));
        for k in 0..4 {
            assert_abs_diff_eq!(a[k], b[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn trace_and_schouten_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for gauge_kind in [GaugeKind::MeanDistance, GaugeKind::LogZ, GaugeKind::SingleDistance(0)] {
                let cfg = config(n, gauge_kind);
                for _ in 0..50 {
                    let p = random_point(&mut rng);
                    let Ok(pc) = evaluate(&cfg, &p) else { continue };
                    let scale = 1.0 + pc.report.s.abs();
                    assert!((pc.report.ric_prime.trace() - pc.report.s).abs() < 1e-9 * scale);
                    let via_ricci = pc.ricci_frame
                        - metric_frame(&pc.potential, &pc.gauge) * (scalar_curv(&pc.potential, &pc.gauge) / 6.0);
                    let direct = schouten_q(&pc.potential, &pc.gauge);
                    assert!(via_ricci.max_abs_diff(&direct) < 1e-12 * (1.0 + direct.max_abs()));
                    let rep = &pc.report;
                    assert_abs_diff_eq!(
                        rep.gb_integrand,
                        rep.s * rep.s / 12.0 - rep.ric0_norm().powi(2),
                        epsilon = 1e-9 * scale * scale
                    );
                }
            }
        }
    }

    #[test]
    fn gauge_constant_shift() {
        use crate::ansatz::{CustomGauge, LinearGauge};
        let c = 0.7;
        let base = config(2, GaugeKind::Custom(CustomGauge::new(LinearGauge {
            constant: 0.0,
            log_z: 0.0,
            weights: vec![-0.5, -0.5],
        })));
        let shifted = base
            .with_gauge(GaugeKind::Custom(CustomGauge::new(LinearGauge {
                constant: c,
                log_z: 0.0,
                weights: vec![-0.5, -0.5],
            })))
            .unwrap();
        let p = pt(0.3, 0.3, 1.1);
        let a = evaluate(&base, &p).unwrap();
        let b = evaluate(&shifted, &p).unwrap();
        assert!(a.ricci_frame.max_abs_diff(&b.ricci_frame) < 1e-14);
        assert_abs_diff_eq!(b.report.s, a.report.s * (-2.0 * c).exp(), epsilon = 1e-12);
    }

    #[test]
    fn isometry_equivariance() {
        let cfg = config(3, GaugeKind::MeanDistance);
        let (lam, tx, ty) = (2.5, -0.4, 1.3);
        let moved: Vec<HPoint> = cfg.centers().iter().map(|c| c.scaled_translated(lam, tx, ty).unwrap()).collect();
        let cfg2 = Configuration::new(moved, GaugeKind::MeanDistance).unwrap();
        let p = pt(0.2, 0.1, 0.8);
        let a = evaluate(&cfg, &p).unwrap().report;
        let b = evaluate(&cfg2, &p.scaled_translated(lam, tx, ty).unwrap()).unwrap().report;
        for k in 0..4 {
            assert_abs_diff_eq!(a.eigs[k], b.eigs[k], epsilon = 1e-9 * (1.0 + a.eigs[k].abs()));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn positivity_inclusions(d in prop::array::uniform4(-1.0..3.0f64)) {
                let m = Sym4::diagonal(d);
                let rep = classify(&m, m.trace());
                if rep.flags.strongly_positive {
                    prop_assert!(rep.flags.positive_ricci);
                }
                if rep.flags.ric_operator_nonneg && rep.s > 0.0 {
                    prop_assert!(rep.ric0_norm() <= rep.s / (2.0 * 3f64.sqrt()) + 1e-12);
                }
            }
        }
    }
}
