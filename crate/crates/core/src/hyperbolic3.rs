//! Hyperbolic 3-space in the upper half-space model `h = (dx² + dy² + dz²)/z²`.
//!
//! Every covector and symmetric form is stored in the fixed h-orthonormal
//! frame `{z∂x, z∂y, z∂z}` (coframe `{dx/z, dy/z, dz/z}`) at its base point.
//! The frame is positively oriented for `v_h = dx∧dy∧dz / z³`, so the Hodge
//! star of a wedge of two covectors is their cross product.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Configuration, GaugeKind};
use crate::error::{Error, Result};

/// Points closer than this to a center are treated as the center itself.
pub const POLE_EXCLUSION: f64 = 1e-8;

/// A point of the upper half-space. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() && z.is_finite() && z > 0.0 {
            Ok(HPoint { x, y, z })
        } else {
            Err(Error::InvalidPoint { x, y, z })
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Apply the isometry `p ↦ λp + (tx, ty, 0)`.
    pub fn scaled_translated(self, lambda: f64, tx: f64, ty: f64) -> Result<Self> {
        HPoint::new(lambda * self.x + tx, lambda * self.y + ty, lambda * self.z)
    }
}

impl TryFrom<[f64; 3]> for HPoint {
    type Error = Error;
    fn try_from(a: [f64; 3]) -> Result<Self> {
        HPoint::new(a[0], a[1], a[2])
    }
}

impl From<HPoint> for [f64; 3] {
    fn from(p: HPoint) -> Self {
        p.to_array()
    }
}

/// A 1-form at a point, in the coframe `{dx/z, dy/z, dz/z}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Covector3(pub [f64; 3]);

impl Covector3 {
    pub const ZERO: Covector3 = Covector3([0.0; 3]);

    pub fn dot(&self, other: &Covector3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Option<Covector3> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }
}

impl Add for Covector3 {
    type Output = Covector3;
    fn add(self, o: Covector3) -> Covector3 {
        Covector3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Covector3 {
    fn add_assign(&mut self, o: Covector3) {
        *self = *self + o;
    }
}

impl Sub for Covector3 {
    type Output = Covector3;
    fn sub(self, o: Covector3) -> Covector3 {
        self + (-o)
    }
}

impl Neg for Covector3 {
    type Output = Covector3;
    fn neg(self) -> Covector3 {
        self * -1.0
    }
}

impl Mul<f64> for Covector3 {
    type Output = Covector3;
    fn mul(self, s: f64) -> Covector3 {
        Covector3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// A symmetric bilinear form on the tangent space, same frame as [`Covector3`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymForm3(pub [[f64; 3]; 3]);

impl SymForm3 {
    pub const ZERO: SymForm3 = SymForm3([[0.0; 3]; 3]);

    pub fn identity() -> Self {
        Self::diagonal([1.0, 1.0, 1.0])
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            m[i][i] = d[i];
        }
        SymForm3(m)
    }

    /// `a ⊗ a`, written `a²` in the curvature formulas.
    pub fn square(a: &Covector3) -> Self {
        Self::sym_product(a, a)
    }

    /// `a ⊙ b = ½(a⊗b + b⊗a)`.
    pub fn sym_product(a: &Covector3, b: &Covector3) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = 0.5 * (a.0[i] * b.0[j] + b.0[i] * a.0[j]);
            }
        }
        SymForm3(m)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Contract with a covector (raised with h): `m(a♯, ·)`.
    pub fn apply(&self, a: &Covector3) -> Covector3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.0[i][j] * a.0[j]).sum();
        }
        Covector3(out)
    }

    pub fn eval(&self, a: &Covector3, b: &Covector3) -> f64 {
        self.apply(a).dot(b)
    }

    pub fn max_abs_diff(&self, other: &SymForm3) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }
}

impl Add for SymForm3 {
    type Output = SymForm3;
    fn add(self, o: SymForm3) -> SymForm3 {
        let mut m = self.0;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += o.0[i][j];
            }
        }
        SymForm3(m)
    }
}

impl AddAssign for SymForm3 {
    fn add_assign(&mut self, o: SymForm3) {
        *self = *self + o;
    }
}

impl Sub for SymForm3 {
    type Output = SymForm3;
    fn sub(self, o: SymForm3) -> SymForm3 {
        self + o * -1.0
    }
}

impl Mul<f64> for SymForm3 {
    type Output = SymForm3;
    fn mul(self, s: f64) -> SymForm3 {
        let mut m = self.0;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        SymForm3(m)
    }
}

/// Hyperbolic distance, via `sinh(r/2) = |p − q| / (2√(z_p z_q))`.
pub fn dist(p: &HPoint, q: &HPoint) -> f64 {
    if p == q {
        return 0.0;
    }
    let d2 = (p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2);
    2.0 * (d2.sqrt() / (2.0 * (p.z * q.z).sqrt())).asinh()
}

/// `coth r − 1 = 2/(e^{2r} − 1)`, free of cancellation for large `r`.
pub fn coth_minus_one(r: f64) -> f64 {
    2.0 / (2.0 * r).exp_m1()
}

pub fn coth(r: f64) -> f64 {
    1.0 + coth_minus_one(r)
}

fn check_separated(p: &HPoint, center: &HPoint) -> Result<f64> {
    let r = dist(p, center);
    if r < POLE_EXCLUSION {
        return Err(Error::AtCenter { index: 0, distance: r });
    }
    Ok(r)
}

/// The unit covector `dr` of the distance from `center`, evaluated at `p`.
pub fn dr_covector(p: &HPoint, center: &HPoint) -> Result<Covector3> {
    let r = check_separated(p, center)?;
    Ok(dr_with_distance(p, center, r))
}

pub(crate) fn dr_with_distance(p: &HPoint, center: &HPoint, r: f64) -> Covector3 {
    // cosh r = 1 + |p − c|²/(2 z z_c); dr = d(cosh r)/sinh r, frame components z ∂_i.
    let d2 = (p.x - center.x).powi(2) + (p.y - center.y).powi(2) + (p.z - center.z).powi(2);
    let zc = center.z;
    let raw = [
        (p.x - center.x) / zc,
        (p.y - center.y) / zc,
        (p.z - zc) / zc - d2 / (2.0 * p.z * zc),
    ];
    Covector3(raw) * (1.0 / r.sinh())
}

/// Hessian of the distance function: `coth r (h − dr²)`.
pub fn hess_dist(p: &HPoint, center: &HPoint) -> Result<SymForm3> {
    let r = check_separated(p, center)?;
    let dr = dr_with_distance(p, center, r);
    Ok((SymForm3::identity() - SymForm3::square(&dr)) * coth(r))
}

/// `⋆(a ∧ b)` for the orientation `dx∧dy∧dz`.
pub fn star_wedge(a: &Covector3, b: &Covector3) -> Covector3 {
    let (a, b) = (a.0, b.0);
    Covector3([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Hyperbolic Green's function `G(r) = ½(coth r − 1)`, normalized so `d⋆dG = −2πδ`.
pub fn green(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositive { what: "distance", value: r });
    }
    Ok(0.5 * coth_minus_one(r))
}

/// `dG/dr = −1/(2 sinh² r)`.
pub fn dgreen(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositive { what: "distance", value: r });
    }
    Ok(-0.5 / r.sinh().powi(2))
}

/// The point at hyperbolic distance `radius` from `center` on the geodesic
/// sphere, in Euclidean direction `dir` from the sphere's Euclidean center.
///
/// A hyperbolic sphere about `(x, y, z)` is the Euclidean sphere centred at
/// `(x, y, z cosh R)` with radius `z sinh R`.
pub fn sphere_point(center: &HPoint, radius: f64, dir: [f64; 3]) -> Result<HPoint> {
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if !(n > 0.0) {
        return Err(Error::Domain("zero direction".into()));
    }
    let rho = center.z * radius.sinh();
    HPoint::new(
        center.x + rho * dir[0] / n,
        center.y + rho * dir[1] / n,
        center.z * radius.cosh() + rho * dir[2] / n,
    )
}

/// The point reached from `center` along the geodesic with initial unit
/// direction `u` (frame components) after hyperbolic length `radius`.
pub fn geodesic_point(center: &HPoint, radius: f64, u: [f64; 3]) -> Result<HPoint> {
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if !(n > 0.0) {
        return Err(Error::Domain("zero direction".into()));
    }
    let (s, c) = (radius.sinh(), radius.cosh());
    let denom = c - s * u[2] / n;
    HPoint::new(
        center.x + center.z * s * u[0] / n / denom,
        center.y + center.z * s * u[1] / n / denom,
        center.z / denom,
    )
}

/// Flux of `⋆ω` through the geodesic sphere of the given radius, outward
/// orientation. `omega` returns frame components of the 1-form at a point.
///
/// The sphere is parametrized by initial directions `u ∈ S²` at the center;
/// the integrand is `⟨ω, n⟩ sinh²R` with `n` the Euclidean outward normal of
/// the sphere (the frame is conformal, so it is also the unit normal for `h`).
/// Gauss–Legendre in `u_z`, trapezoid rule in the azimuth.
pub fn star_flux_through_sphere<F>(omega: F, center: &HPoint, radius: f64, nodes: usize) -> Result<f64>
where
    F: Fn(&HPoint) -> Result<Covector3>,
{
    if !(radius > 0.0) {
        return Err(Error::NonPositive { what: "radius", value: radius });
    }
    let nodes = NonZeroUsize::new(nodes.max(2)).expect("nonzero");
    let rule = GaussLegendre::new(nodes);
    let n_phi = 2 * nodes.get();
    let rho = center.z * radius.sinh();
    let euclid_center = [center.x, center.y, center.z * radius.cosh()];
    let area = radius.sinh().powi(2);
    let mut err = None;
    let total = rule.integrate(-1.0, 1.0, |uz: f64| {
        let st = (1.0 - uz * uz).max(0.0).sqrt();
        let mut ring = 0.0;
        for k in 0..n_phi {
            let ph = 2.0 * PI * (k as f64) / (n_phi as f64);
            let value = geodesic_point(center, radius, [st * ph.cos(), st * ph.sin(), uz]).and_then(|p| {
                let n = [
                    (p.x - euclid_center[0]) / rho,
                    (p.y - euclid_center[1]) / rho,
                    (p.z - euclid_center[2]) / rho,
                ];
                omega(&p).map(|w| w.dot(&Covector3(n)))
            });
            match value {
                Ok(v) => ring += v,
                Err(e) => err = Some(e),
            }
        }
        ring * 2.0 * PI / (n_phi as f64)
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total * area),
    }
}

/// Frame components of `dF` by central differences (coordinate step `step·z`).
pub fn fd_frame_gradient<F>(f: F, p: &HPoint, step: f64) -> Result<Covector3>
where
    F: Fn(&HPoint) -> Result<f64>,
{
    let h = step * p.z;
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let (plus, minus) = (offset(p, i, h)?, offset(p, i, -h)?);
        *o = p.z * (f(&plus)? - f(&minus)?) / (2.0 * h);
    }
    Ok(Covector3(out))
}

/// Frame components of the covariant Hessian `D dF` by second differences.
///
/// Uses `Γᵏᵢⱼ = δᵢᵏ∂ⱼφ + δⱼᵏ∂ᵢφ − δᵢⱼ∂ₖφ` with `φ = −log z`.
pub fn fd_frame_hessian<F>(f: F, p: &HPoint, step: f64) -> Result<SymForm3>
where
    F: Fn(&HPoint) -> Result<f64>,
{
    let h = step * p.z;
    let f0 = f(p)?;
    let mut grad = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for i in 0..3 {
        let fp = f(&offset(p, i, h)?)?;
        let fm = f(&offset(p, i, -h)?)?;
        grad[i] = (fp - fm) / (2.0 * h);
        second[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let pp = f(&offset(&offset(p, i, h)?, j, h)?)?;
            let pm = f(&offset(&offset(p, i, h)?, j, -h)?)?;
            let mp = f(&offset(&offset(p, i, -h)?, j, h)?)?;
            let mm = f(&offset(&offset(p, i, -h)?, j, -h)?)?;
            second[i][j] = (pp - pm - mp + mm) / (4.0 * h * h);
            second[j][i] = second[i][j];
        }
    }
    let dphi = [0.0, 0.0, -1.0 / p.z];
    let grad_dot_dphi: f64 = (0..3).map(|k| grad[k] * dphi[k]).sum();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let gamma = grad[i] * dphi[j] + grad[j] * dphi[i] - if i == j { grad_dot_dphi } else { 0.0 };
            m[i][j] = p.z * p.z * (second[i][j] - gamma);
        }
    }
    Ok(SymForm3(m))
}

fn offset(p: &HPoint, axis: usize, h: f64) -> Result<HPoint> {
    let mut a = p.to_array();
    a[axis] += h;
    HPoint::new(a[0], a[1], a[2])
}

/// Centers on the vertical geodesic `x = y = 0`, starting at `(0, 0, 1)`,
/// with consecutive hyperbolic distances given by `separations`.
pub fn collinear_centers(separations: &[f64]) -> Result<Vec<HPoint>> {
    let mut centers = vec![HPoint { x: 0.0, y: 0.0, z: 1.0 }];
    let mut log_z = 0.0;
    for &s in separations {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NonPositive { what: "separation", value: s });
        }
        log_z += s;
        centers.push(HPoint::new(0.0, 0.0, log_z.exp())?);
    }
    Ok(centers)
}

pub fn collinear_config(separations: &[f64], gauge: GaugeKind) -> Result<Configuration> {
    Configuration::new(collinear_centers(separations)?, gauge)
}
