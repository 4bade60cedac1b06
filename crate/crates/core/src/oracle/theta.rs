//! The connection 1-form for centers on the `z`-axis.
//!
//! With `ρ̃² = x² + y²` and `θ = dt + (w/ρ̃²)(x dy − y dx)`, the condition
//! `dθ = ⋆dV` reduces to `∂w/∂ρ̃ = ρ̃ V_z/z`, `∂w/∂z = −ρ̃ V_ρ̃/z`. The gauge
//! is `w = 0` on the axis above every center; crossing a center downward
//! lowers `w` by one.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::ansatz::Configuration;
use crate::error::{Error, Result};

/// `V` and its coordinate gradient `(∂x, ∂y, ∂z)` for the given centers,
/// computed from `cosh r = 1 + |p − c|²/(2 z z_c)`.
pub(crate) fn potential_and_gradient(centers: &[[f64; 3]], p: [f64; 3]) -> (f64, [f64; 3]) {
    let mut v = 1.0;
    let mut grad = [0.0; 3];
    for c in centers {
        let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let r = 2.0 * (d2.sqrt() / (2.0 * (p[2] * c[2]).sqrt())).asinh();
        let sh = r.sinh();
        v += 1.0 / (2.0 * r).exp_m1();
        // dG/dr = −1/(2 sinh²r); dr = d(cosh r)/sinh r
        let scale = -1.0 / (2.0 * sh * sh * sh);
        grad[0] += scale * d[0] / (p[2] * c[2]);
        grad[1] += scale * d[1] / (p[2] * c[2]);
        grad[2] += scale * (d[2] / (p[2] * c[2]) - d2 / (2.0 * p[2] * p[2] * c[2]));
    }
    (v, grad)
}

/// `w` for a set of heights `c_j` on the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPotential {
    heights: Vec<f64>,
}

/// Tolerance and recursion limit for the path quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { tol: 1e-12, max_depth: 40 }
    }
}

fn adaptive_gauss<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, f);
    let right = rule.integrate(mid, b, f);
    if depth == 0 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adaptive_gauss(rule, f, a, mid, left, 0.5 * tol, depth - 1) + adaptive_gauss(rule, f, mid, b, right, 0.5 * tol, depth - 1)
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadratureOptions) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(10).expect("nonzero"));
    let whole = rule.integrate(a, b, &f);
    adaptive_gauss(&rule, &f, a, b, whole, opts.tol, opts.max_depth)
}

impl ThetaPotential {
    /// Requires every center on the `z`-axis.
    pub fn new(cfg: &Configuration) -> Result<Self> {
        if !cfg.is_axisymmetric() {
            return Err(Error::InvalidConfiguration("the connection potential needs all centers on the z-axis".into()));
        }
        Ok(ThetaPotential { heights: cfg.centers().iter().map(|c| c.z).collect() })
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    fn centers(&self) -> Vec<[f64; 3]> {
        self.heights.iter().map(|&c| [0.0, 0.0, c]).collect()
    }

    /// Closed form: `w = Σ_j ½[(cosh r_j − c_j/z)/sinh r_j − 1]`.
    pub fn w(&self, rho: f64, z: f64) -> f64 {
        self.heights
            .iter()
            .map(|&c| {
                let cosh_r = (rho * rho + z * z + c * c) / (2.0 * z * c);
                let d = (rho * rho + (z - c) * (z - c)).sqrt();
                let r = 2.0 * (d / (2.0 * (z * c).sqrt())).asinh();
                0.5 * ((cosh_r - c / z) / r.sinh() - 1.0)
            })
            .sum()
    }

    /// Derivatives `(∂w/∂ρ̃, ∂w/∂z)` from the defining equations.
    pub fn w_gradient(&self, rho: f64, z: f64) -> (f64, f64) {
        let (_, g) = potential_and_gradient(&self.centers(), [rho, 0.0, z]);
        (rho * g[2] / z, -rho * g[0] / z)
    }

    /// `w` by integrating its gradient from the axis above all centers, at
    /// height `start_height`, first outward to `ρ̃` and then vertically to `z`.
    pub fn w_by_quadrature(&self, rho: f64, z: f64, start_height: f64, opts: QuadratureOptions) -> Result<f64> {
        let top = self.heights.iter().cloned().fold(0.0, f64::max);
        if !(start_height > top) || !(z > 0.0) || !(rho >= 0.0) {
            return Err(Error::Domain(format!("path start {start_height} must lie above every center")));
        }
        let across = integrate(|s| self.w_gradient(s, start_height).0, 0.0, rho, opts);
        let down = integrate(|s| self.w_gradient(rho, s).1, start_height, z, opts);
        Ok(across + down)
    }

    /// Default path start: a factor `e` above the highest center and `z`.
    pub fn default_start(&self, z: f64) -> f64 {
        std::f64::consts::E * self.heights.iter().cloned().fold(z, f64::max)
    }

    /// Values of `w` on the axis segments, listed from the top segment down.
    /// Each is evaluated at the geometric midpoint of the segment (or a
    /// factor `e` beyond the extreme centers), at `ρ̃ = 10⁻⁹ z`.
    pub fn axis_values(&self) -> Vec<f64> {
        self.segment_heights().into_iter().map(|z| self.w(1e-9 * z, z)).collect()
    }

    /// Axis values by quadrature: reach the segment along a path that leaves
    /// the axis above all centers, descends at `ρ̃ = max c_j`, then moves in
    /// horizontally to the axis.
    pub fn axis_values_by_quadrature(&self, opts: QuadratureOptions) -> Result<Vec<f64>> {
        let out_rho = self.heights.iter().cloned().fold(1e-3, f64::max);
        self.segment_heights()
            .into_iter()
            .map(|z| {
                let outside = self.w_by_quadrature(out_rho, z, self.default_start(z), opts)?;
                let inward = integrate(|s| self.w_gradient(s, z).0, out_rho, 0.0, opts);
                Ok(outside + inward)
            })
            .collect()
    }

    /// `w(above) − w(below)` across each center, ordered from the highest.
    pub fn axis_jumps(values: &[f64]) -> Vec<f64> {
        values.windows(2).map(|p| p[0] - p[1]).collect()
    }

    fn segment_heights(&self) -> Vec<f64> {
        let mut hs = self.heights.clone();
        hs.sort_by(|a, b| b.total_cmp(a));
        hs.dedup();
        if hs.is_empty() {
            return vec![1.0];
        }
        let e = std::f64::consts::E;
        let mut out = vec![hs[0] * e];
        out.extend(hs.windows(2).map(|p| (p[0] * p[1]).sqrt()));
        out.push(hs[hs.len() - 1] / e);
        out
    }

    /// The connection components `(θ_x, θ_y, θ_z, θ_t)` at a chart point.
    pub fn theta(&self, p: &[f64; 4]) -> [f64; 4] {
        let rho2 = p[0] * p[0] + p[1] * p[1];
        let k = self.w(rho2.sqrt(), p[2]) / rho2;
        [-p[1] * k, p[0] * k, 0.0, 1.0]
    }
}
