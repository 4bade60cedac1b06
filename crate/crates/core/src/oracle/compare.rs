//! Closed-form curvature against the finite-difference oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::{ChartMetric, HopfGauge, Mat4};
use super::fd::{christoffel, fd_curvature, metric_jet, relative_error, FdOptions};
use super::theta::ThetaPotential;
use crate::ansatz::Configuration;
use crate::curvature::evaluate;
use crate::error::{Error, Result};
use crate::hyperbolic3::{dist, geodesic_point, HPoint};

/// The closed-form Ricci tensor at a chart point `(x, y, z, t)` of the ansatz
/// chart, converted from the adapted frame to chart components through the
/// coframe `dx/z, dy/z, dz/z, V⁻¹θ`.
pub fn pipeline_ricci_in_chart(cfg: &Configuration, theta: &ThetaPotential, p: &[f64; 4]) -> Result<Mat4> {
    let pc = evaluate(cfg, &HPoint::new(p[0], p[1], p[2])?)?;
    let v = pc.potential.v;
    let th = theta.theta(p);
    let mut coframe = [[0.0; 4]; 4];
    for (i, row) in coframe.iter_mut().enumerate().take(3) {
        row[i] = 1.0 / p[2];
    }
    coframe[3] = th.map(|c| c / v);
    let ric = pc.ricci_frame.0;
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    s += ric[i][j] * coframe[i][a] * coframe[j][b];
                }
            }
            out[a][b] = s;
        }
    }
    Ok(out)
}

/// `f`, `∂f`, `∂∂f` by central differences with one Richardson level.
pub fn scalar_jet<F>(f: &F, p: &[f64; 4], opts: FdOptions) -> (f64, [f64; 4], Mat4)
where
    F: Fn(&[f64; 4]) -> f64 + ?Sized,
{
    let f0 = f(p);
    let at = |h: f64| {
        let mut d = [0.0; 4];
        let mut dd = [[0.0; 4]; 4];
        let sh = |moves: &[(usize, f64)]| {
            let mut q = *p;
            for &(k, s) in moves {
                q[k] += s;
            }
            f(&q)
        };
        for k in 0..4 {
            let (fp, fm) = (sh(&[(k, h)]), sh(&[(k, -h)]));
            d[k] = (fp - fm) / (2.0 * h);
            dd[k][k] = (fp - 2.0 * f0 + fm) / (h * h);
            for l in 0..k {
                let v = (sh(&[(k, h), (l, h)]) - sh(&[(k, h), (l, -h)]) - sh(&[(k, -h), (l, h)]) + sh(&[(k, -h), (l, -h)]))
                    / (4.0 * h * h);
                dd[k][l] = v;
                dd[l][k] = v;
            }
        }
        (d, dd)
    };
    let (mut d, mut dd) = at(opts.step);
    if opts.richardson {
        let (d2, dd2) = at(0.5 * opts.step);
        for k in 0..4 {
            d[k] = (4.0 * d2[k] - d[k]) / 3.0;
            for l in 0..4 {
                dd[k][l] = (4.0 * dd2[k][l] - dd[k][l]) / 3.0;
            }
        }
    }
    (f0, d, dd)
}

/// `∇df`, `df` and the inverse metric of `g₀` at `p`.
fn covariant_hessian<F>(g0: &ChartMetric, f: &F, p: &[f64; 4], opts: FdOptions) -> Result<(Mat4, [f64; 4], Mat4, Mat4)>
where
    F: Fn(&[f64; 4]) -> f64 + ?Sized,
{
    let jet = metric_jet(g0, p, opts)?;
    let gamma = christoffel(&jet);
    let (_, df, ddf) = scalar_jet(f, p, opts);
    let mut hess = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            hess[a][b] = ddf[a][b] - (0..4).map(|c| gamma[c][a][b] * df[c]).sum::<f64>();
        }
    }
    Ok((hess, df, jet.inv, jet.g))
}

/// Trace of the `g₀`-Hessian of `f`, so that `Δ log z = −2` on `H³`.
pub fn fd_laplacian<F>(g0: &ChartMetric, f: &F, p: &[f64; 4], opts: FdOptions) -> Result<f64>
where
    F: Fn(&[f64; 4]) -> f64 + ?Sized,
{
    let (hess, _, inv, _) = covariant_hessian(g0, f, p, opts)?;
    Ok((0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| inv[a][b] * hess[a][b]).sum())
}

/// Ricci of `e^{2f} g₀` from the Ricci tensor of `g₀`:
/// `Ric₀ − 2∇df + 2 df⊗df − (Δf + 2|df|²) g₀`.
pub fn conformal_rescale_ricci<F>(ric0: &Mat4, g0: &ChartMetric, f: &F, p: &[f64; 4], opts: FdOptions) -> Result<Mat4>
where
    F: Fn(&[f64; 4]) -> f64 + ?Sized,
{
    let (hess, df, inv, g) = covariant_hessian(g0, f, p, opts)?;
    let mut lap = 0.0;
    let mut norm2 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            lap += inv[a][b] * hess[a][b];
            norm2 += inv[a][b] * df[a] * df[b];
        }
    }
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = ric0[a][b] - 2.0 * hess[a][b] + 2.0 * df[a] * df[b] - (lap + 2.0 * norm2) * g[a][b];
        }
    }
    Ok(out)
}

/// Interior points of the ansatz chart: hyperbolic distance in
/// `[0.15, 2]` from a random center (or from `(0,0,1)` when there are
/// none), at least `0.1` from every center and clear of the axis.
pub fn sample_ansatz_points(cfg: &Configuration, count: usize, seed: u64) -> Result<Vec<[f64; 4]>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = HPoint::new(0.0, 0.0, 1.0)?;
    let anchors: Vec<HPoint> = if cfg.n() == 0 { vec![base] } else { cfg.centers().to_vec() };
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * (count + 1) {
            return Err(Error::Domain("could not place sample points in the chart".into()));
        }
        let c = anchors[rng.random_range(0..anchors.len())];
        let radius = rng.random_range(0.15f64.ln()..2f64.ln()).exp();
        let uz: f64 = rng.random_range(-1.0..1.0);
        let az: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let st = (1.0 - uz * uz).sqrt();
        let q = geodesic_point(&c, radius, [st * az.cos(), st * az.sin(), uz])?;
        let rho = q.x.hypot(q.y);
        if rho < 0.1 * q.z || rho < 0.02 || cfg.centers().iter().any(|c| dist(&q, c) < 0.1) {
            continue;
        }
        out.push([q.x, q.y, q.z, rng.random_range(0.0..1.0)]);
    }
    Ok(out)
}

/// Points of the single-center chart away from the coordinate poles.
pub fn sample_hopf_points(count: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            [
                rng.random_range(0.2..3.0),
                rng.random_range(0.3..std::f64::consts::PI - 0.3),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect()
}

/// Summary of an oracle run over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub chart: String,
    pub samples: usize,
    pub seed: u64,
    pub step: f64,
    /// `max |Ric_fd − Ric_ref| / max |Ric_ref|` over the samples.
    pub max_ricci_rel_error: f64,
    pub max_selfduality_residual: f64,
    pub min_weyl_plus_norm: f64,
    pub max_bianchi_residual: f64,
    pub max_weyl_trace_residual: f64,
    /// Worst sample by Ricci error.
    pub worst_point: Option<[f64; 4]>,
}

struct OracleSample {
    p: [f64; 4],
    ricci_err: f64,
    sd: f64,
    wplus: f64,
    bianchi: f64,
    wtrace: f64,
}

fn summarize(chart: &ChartMetric, samples: Vec<OracleSample>, seed: u64, opts: FdOptions) -> OracleReport {
    let mut rep = OracleReport {
        chart: chart.name().to_string(),
        samples: samples.len(),
        seed,
        step: opts.step,
        max_ricci_rel_error: 0.0,
        max_selfduality_residual: 0.0,
        min_weyl_plus_norm: f64::INFINITY,
        max_bianchi_residual: 0.0,
        max_weyl_trace_residual: 0.0,
        worst_point: None,
    };
    for s in samples {
        if s.ricci_err >= rep.max_ricci_rel_error {
            rep.max_ricci_rel_error = s.ricci_err;
            rep.worst_point = Some(s.p);
        }
        rep.max_selfduality_residual = rep.max_selfduality_residual.max(s.sd);
        rep.min_weyl_plus_norm = rep.min_weyl_plus_norm.min(s.wplus);
        rep.max_bianchi_residual = rep.max_bianchi_residual.max(s.bianchi);
        rep.max_weyl_trace_residual = rep.max_weyl_trace_residual.max(s.wtrace);
    }
    rep
}

fn run<R>(chart: &ChartMetric, points: &[[f64; 4]], seed: u64, opts: FdOptions, reference: R) -> Result<OracleReport>
where
    R: Fn(&[f64; 4], &Mat4) -> Result<Mat4> + Sync,
{
    let samples = points
        .par_iter()
        .map(|p| {
            let c = fd_curvature(chart, p, opts)?;
            let want = reference(p, &c.metric)?;
            Ok(OracleSample {
                p: *p,
                ricci_err: relative_error(&c.ricci, &want),
                sd: c.selfduality_residual(),
                wplus: c.weyl_plus_norm,
                bianchi: c.bianchi_residual,
                wtrace: c.weyl_trace_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(chart, samples, seed, opts))
}

/// FD curvature of the ansatz chart against the closed-form pipeline.
pub fn compare_ansatz(cfg: &Configuration, samples: usize, seed: u64, opts: FdOptions) -> Result<OracleReport> {
    let chart = ChartMetric::ansatz(cfg)?;
    let theta = ThetaPotential::new(cfg)?;
    let points = sample_ansatz_points(cfg, samples, seed)?;
    run(&chart, &points, seed, opts, |p, _| pipeline_ricci_in_chart(cfg, &theta, p))
}

/// FD curvature of the single-center chart with `f = −r` against `6g`.
pub fn compare_einstein(samples: usize, seed: u64, opts: FdOptions) -> Result<OracleReport> {
    let chart = ChartMetric::hopf(HopfGauge::MinusDistance);
    run(&chart, &sample_hopf_points(samples, seed), seed, opts, |_, g| Ok(g.map(|row| row.map(|v| 6.0 * v))))
}

/// FD curvature of Euclidean space in curvilinear coordinates against zero.
pub fn compare_flat(samples: usize, seed: u64, opts: FdOptions) -> Result<OracleReport> {
    let chart = ChartMetric::flat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 4]> = (0..samples).map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))).collect();
    run(&chart, &points, seed, opts, |_, _| Ok([[0.0; 4]; 4]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{gauge, GaugeKind};
    use crate::hyperbolic3::collinear_config;
    use crate::oracle::chart::gauge_value;

    #[test]
    fn flat_mode_is_exact() {
        let rep = compare_flat(20, 1, FdOptions::default()).unwrap();
        assert!(rep.max_ricci_rel_error < 1e-10);
    }

    #[test]
    fn single_center_ansatz_chart_matches_pipeline() {
        let cfg = collinear_config(&[], GaugeKind::SingleDistance(0)).unwrap();
        let rep = compare_ansatz(&cfg, 12, 2, FdOptions::default()).unwrap();
        assert!(rep.max_ricci_rel_error < 1e-3, "{rep:?}");
        assert!(rep.max_bianchi_residual < 1e-6);
    }

    #[test]
    fn laplacian_relation() {
        let cfg = collinear_config(&[0.7], GaugeKind::MeanDistance).unwrap();
        let g0 = ChartMetric::ansatz(&cfg.with_gauge(GaugeKind::Zero).unwrap()).unwrap();
        let cs: Vec<[f64; 3]> = cfg.centers().iter().map(|c| c.to_array()).collect();
        let f = |p: &[f64; 4]| gauge_value(&cfg, &cs, p).unwrap();
        for p in sample_ansatz_points(&cfg, 10, 3).unwrap() {
            let lap4 = fd_laplacian(&g0, &f, &p, FdOptions::default()).unwrap();
            let h = HPoint::new(p[0], p[1], p[2]).unwrap();
            let v = crate::ansatz::potential(&cfg, &h).unwrap().v;
            let lap3 = gauge(&cfg, &h).unwrap().lapf;
            assert!((lap4 - lap3 / v).abs() < 1e-4 * (1.0 + lap3.abs()), "{lap4} {}", lap3 / v);
        }
    }

    #[test]
    fn conformal_law_reproduces_the_rescaled_chart() {
        let g0 = ChartMetric::hopf(HopfGauge::Zero);
        let g = ChartMetric::hopf(HopfGauge::MinusDistance);
        let f = |p: &[f64; 4]| -p[0];
        for p in sample_hopf_points(6, 4) {
            let ric0 = fd_curvature(&g0, &p, FdOptions::default()).unwrap().ricci;
            let law = conformal_rescale_ricci(&ric0, &g0, &f, &p, FdOptions::default()).unwrap();
            let direct = fd_curvature(&g, &p, FdOptions::default()).unwrap().ricci;
            assert!(relative_error(&law, &direct) < 1e-3);
            // constant f changes nothing
            let same = conformal_rescale_ricci(&ric0, &g0, &|_: &[f64; 4]| 0.7, &p, FdOptions::default()).unwrap();
            assert!(relative_error(&same, &ric0) < 1e-9);
        }
    }

    #[test]
    fn fubini_study_is_einstein_and_self_dual() {
        let fs = ChartMetric::fubini_study();
        for p in [[0.4, 1.0, 0.3, 0.2], [1.1, 2.0, 1.0, 4.0], [0.8, 0.6, 5.0, 1.0]] {
            let c = fd_curvature(&fs, &p, FdOptions::default()).unwrap();
            let six_g = c.metric.map(|row| row.map(|v| 6.0 * v));
            assert!(relative_error(&c.ricci, &six_g) < 1e-3);
            assert!((c.scalar - 24.0).abs() < 0.05);
            assert!(c.selfduality_residual() < 1e-4 && c.weyl_plus_norm > 1.0, "{c:?}");
            let flipped = fd_curvature(&fs.flipped(), &p, FdOptions::default()).unwrap();
            assert!(flipped.selfduality_residual() > 0.999);
        }
        let rep = compare_einstein(8, 5, FdOptions::default()).unwrap();
        assert!(rep.max_ricci_rel_error < 1e-3 && rep.max_selfduality_residual < 1e-4, "{rep:?}");
    }

    #[test]
    fn two_center_chart_is_self_dual_and_matches_pipeline() {
        let cfg = collinear_config(&[1.0], GaugeKind::MeanDistance).unwrap();
        let rep = compare_ansatz(&cfg, 10, 6, FdOptions::default()).unwrap();
        assert!(rep.max_ricci_rel_error < 1e-3, "{rep:?}");
        assert!(rep.max_selfduality_residual < 1e-3 && rep.min_weyl_plus_norm > 0.0, "{rep:?}");
        let chart = ChartMetric::ansatz(&cfg).unwrap().flipped();
        let p = sample_ansatz_points(&cfg, 1, 6).unwrap()[0];
        assert!(fd_curvature(&chart, &p, FdOptions::default()).unwrap().selfduality_residual() > 0.99);
    }

    #[test]
    fn self_duality_survives_conformal_changes() {
        let cfg = collinear_config(&[0.8], GaugeKind::Zero).unwrap();
        let chart = ChartMetric::ansatz(&cfg).unwrap();
        let rescaled = chart.conformal(|p| 0.3 * p[0] - 0.2 * p[1] * p[2] + 0.1 * (2.0 * p[3]).sin());
        for p in sample_ansatz_points(&cfg, 5, 7).unwrap() {
            let a = fd_curvature(&chart, &p, FdOptions::default()).unwrap().selfduality_residual();
            let b = fd_curvature(&rescaled, &p, FdOptions::default()).unwrap().selfduality_residual();
            assert!(a < 1e-3 && b < 1e-3, "{a} {b}");
        }
    }
}
