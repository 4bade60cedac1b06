//! Explicit 4-dimensional charts of metrics, evaluated componentwise.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix4;

use super::theta::{potential_and_gradient, ThetaPotential};
use crate::ansatz::{Configuration, GaugeKind};
use crate::error::{Error, Result};
use crate::hyperbolic3::HPoint;

pub type Mat4 = [[f64; 4]; 4];

type MetricFn = dyn Fn(&[f64; 4]) -> Result<Mat4> + Send + Sync;
type DomainFn = dyn Fn(&[f64; 4]) -> bool + Send + Sync;

/// A metric given by its components in a coordinate chart, together with
/// the chart's validity domain and an orientation sign relative to the
/// coordinate order.
#[derive(Clone)]
pub struct ChartMetric {
    name: String,
    eval: Arc<MetricFn>,
    domain: Arc<DomainFn>,
    orientation: f64,
}

impl fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMetric").field("name", &self.name).field("orientation", &self.orientation).finish()
    }
}

/// Gauge of the `n = 1` chart in geodesic polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopfGauge {
    /// `f = 0`.
    Zero,
    /// `f = −r`.
    MinusDistance,
}

impl ChartMetric {
    pub fn new<M, D>(name: impl Into<String>, eval: M, domain: D, orientation: f64) -> Self
    where
        M: Fn(&[f64; 4]) -> Result<Mat4> + Send + Sync + 'static,
        D: Fn(&[f64; 4]) -> bool + Send + Sync + 'static,
    {
        ChartMetric { name: name.into(), eval: Arc::new(eval), domain: Arc::new(domain), orientation: orientation.signum() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn contains(&self, p: &[f64; 4]) -> bool {
        p.iter().all(|v| v.is_finite()) && (self.domain)(p)
    }

    pub fn metric(&self, p: &[f64; 4]) -> Result<Mat4> {
        if !self.contains(p) {
            return Err(Error::Domain(format!("{:?} lies outside the {} chart", p, self.name)));
        }
        (self.eval)(p)
    }

    /// The same metric with the opposite orientation.
    pub fn flipped(&self) -> Self {
        ChartMetric { orientation: -self.orientation, name: format!("{} (flipped)", self.name), ..self.clone() }
    }

    /// `e^{2f}` times this metric.
    pub fn conformal<F>(&self, f: F) -> Self
    where
        F: Fn(&[f64; 4]) -> f64 + Send + Sync + 'static,
    {
        let inner = self.eval.clone();
        ChartMetric {
            name: format!("{} (rescaled)", self.name),
            eval: Arc::new(move |p| {
                let k = (2.0 * f(p)).exp();
                inner(p).map(|g| g.map(|row| row.map(|v| v * k)))
            }),
            domain: self.domain.clone(),
            orientation: self.orientation,
        }
    }

    /// Cholesky test of positive-definiteness at `p`.
    pub fn is_positive_definite(&self, p: &[f64; 4]) -> Result<bool> {
        let g = self.metric(p)?;
        Ok(Matrix4::from_fn(|i, j| g[i][j]).cholesky().is_some())
    }

    /// Euclidean `R⁴` in standard coordinates.
    pub fn flat() -> Self {
        ChartMetric::new("flat", |_| Ok(diag([1.0; 4])), |_| true, 1.0)
    }

    /// Euclidean `R³ × R` in spherical coordinates `(r, ϑ, ϕ, t)`. Flat but
    /// with non-constant components, so finite-difference errors show.
    pub fn spherical_flat() -> Self {
        ChartMetric::new(
            "spherical flat",
            |p| {
                let (r, th) = (p[0], p[1]);
                Ok(diag([1.0, r * r, (r * th.sin()).powi(2), 1.0]))
            },
            |p| p[0] > 0.0 && p[1] > 0.0 && p[1] < std::f64::consts::PI,
            1.0,
        )
    }

    /// The single-center metric in coordinates `(r, ϑ, ϕ, ψ)` about the center:
    /// `V(dr² + sinh²r(dϑ² + sin²ϑ dϕ²)) + V⁻¹·¼(dψ + cos ϑ dϕ)²`, times
    /// `e^{2f}`, with `V = 1/(1 − e^{−2r})`. The connection `½(dψ + cos ϑ dϕ)`
    /// has curvature `⋆dV`; `θ ∧ v_h` is negative on the coordinate order.
    pub fn hopf(gauge: HopfGauge) -> Self {
        ChartMetric::new(
            match gauge {
                HopfGauge::Zero => "single center",
                HopfGauge::MinusDistance => "single center, f = -r",
            },
            move |p| {
                let (r, th) = (p[0], p[1]);
                let v = -1.0 / (-2.0 * r).exp_m1();
                let conf = match gauge {
                    HopfGauge::Zero => 1.0,
                    HopfGauge::MinusDistance => (-2.0 * r).exp(),
                };
                let sh2 = r.sinh().powi(2);
                let (s, c) = th.sin_cos();
                let fib = 0.25 / v;
                let mut g = [[0.0; 4]; 4];
                g[0][0] = v;
                g[1][1] = v * sh2;
                g[2][2] = v * sh2 * s * s + fib * c * c;
                g[3][3] = fib;
                g[2][3] = fib * c;
                g[3][2] = fib * c;
                Ok(g.map(|row| row.map(|x| x * conf)))
            },
            |p| p[0] > 0.0 && p[1] > 0.0 && p[1] < std::f64::consts::PI,
            -1.0,
        )
    }

    /// `dρ² + sin²ρ(σ₁² + σ₂² + cos²ρ σ₃²)` in coordinates `(ρ, ϑ, ϕ, ψ)` with
    /// `σ₁² + σ₂² = ¼(dϑ² + sin²ϑ dϕ²)`, `σ₃ = ½(dψ + cos ϑ dϕ)`.
    pub fn fubini_study() -> Self {
        ChartMetric::new(
            "Fubini-Study",
            |p| {
                let (rho, th) = (p[0], p[1]);
                let s2 = rho.sin().powi(2);
                let fib = 0.25 * s2 * rho.cos().powi(2);
                let (s, c) = th.sin_cos();
                let mut g = [[0.0; 4]; 4];
                g[0][0] = 1.0;
                g[1][1] = 0.25 * s2;
                g[2][2] = 0.25 * s2 * s * s + fib * c * c;
                g[3][3] = fib;
                g[2][3] = fib * c;
                g[3][2] = fib * c;
                Ok(g)
            },
            |p| p[0] > 0.0 && p[0] < std::f64::consts::FRAC_PI_2 && p[1] > 0.0 && p[1] < std::f64::consts::PI,
            -1.0,
        )
    }

    /// `e^{2f}(V h + V⁻¹θ²)` in coordinates `(x, y, z, t)` for centers on the
    /// `z`-axis, using the configuration's gauge. The domain excludes the
    /// axis and the centers; `θ ∧ v_h` is negative on the coordinate order.
    pub fn ansatz(cfg: &Configuration) -> Result<Self> {
        let theta = ThetaPotential::new(cfg)?;
        let centers: Vec<[f64; 3]> = cfg.centers().iter().map(|c| c.to_array()).collect();
        let dom_centers = centers.clone();
        let cfg = cfg.clone();
        let name = format!("ansatz n={} gauge={}", cfg.n(), cfg.gauge_kind().name());
        Ok(ChartMetric::new(
            name,
            move |p| {
                let (v, _) = potential_and_gradient(&centers, [p[0], p[1], p[2]]);
                let f = gauge_value(&cfg, &centers, p)?;
                let th = theta.theta(p);
                let conf = (2.0 * f).exp();
                let hz = v / (p[2] * p[2]);
                let mut g = [[0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        g[i][j] = th[i] * th[j] / v;
                    }
                }
                for (i, row) in g.iter_mut().enumerate().take(3) {
                    row[i] += hz;
                }
                Ok(g.map(|row| row.map(|x| x * conf)))
            },
            move |p| {
                p[2] > 0.0
                    && p[0] * p[0] + p[1] * p[1] > 0.0
                    && dom_centers.iter().all(|c| {
                        let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
                        d2 > 1e-12 * c[2] * c[2]
                    })
            },
            -1.0,
        ))
    }
}

/// Chart metric for a configuration: the ansatz chart (centers on the axis).
pub fn build_chart_metric(cfg: &Configuration) -> Result<ChartMetric> {
    ChartMetric::ansatz(cfg)
}

fn diag(d: [f64; 4]) -> Mat4 {
    let mut g = [[0.0; 4]; 4];
    for i in 0..4 {
        g[i][i] = d[i];
    }
    g
}

fn hyperbolic_distance(p: [f64; 3], c: [f64; 3]) -> f64 {
    let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
    2.0 * (d2.sqrt() / (2.0 * (p[2] * c[2]).sqrt())).asinh()
}

/// The gauge function alone, evaluated without the library's derivative code.
pub(crate) fn gauge_value(cfg: &Configuration, centers: &[[f64; 3]], p: &[f64; 4]) -> Result<f64> {
    let q = [p[0], p[1], p[2]];
    Ok(match cfg.gauge_kind() {
        GaugeKind::Zero => 0.0,
        GaugeKind::LogZ => p[2].ln(),
        GaugeKind::MeanDistance if centers.is_empty() => 0.0,
        GaugeKind::MeanDistance => {
            -centers.iter().map(|c| hyperbolic_distance(q, *c)).sum::<f64>() / centers.len() as f64
        }
        GaugeKind::SingleDistance(i) => -hyperbolic_distance(q, centers[*i]),
        GaugeKind::Custom(g) => g.function().eval(cfg.centers(), &HPoint::new(p[0], p[1], p[2])?)?.f,
    })
}
