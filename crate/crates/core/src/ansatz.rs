//! The harmonic potential `V = 1 + Σ G(r_j)` and the conformal gauge `f`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic3::{
    coth, dgreen, dist, dr_with_distance, fd_frame_gradient, fd_frame_hessian, green, Covector3, HPoint,
    SymForm3, POLE_EXCLUSION,
};

/// `V` and `dV` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialData {
    pub v: f64,
    pub dv: Covector3,
}

/// The gauge function and the derivatives entering the Ricci formula.
/// `lapf` is the trace of `ddf`, so `△ log z = −2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeData {
    pub f: f64,
    pub df: Covector3,
    pub ddf: SymForm3,
    pub lapf: f64,
}

impl GaugeData {
    pub const ZERO: GaugeData = GaugeData { f: 0.0, df: Covector3::ZERO, ddf: SymForm3::ZERO, lapf: 0.0 };
}

/// A user-supplied gauge. Implementations return `f` together with its
/// frame derivatives; consistency is checked when a [`Configuration`] is built.
pub trait GaugeFunction: fmt::Debug + Send + Sync {
    fn eval(&self, centers: &[HPoint], p: &HPoint) -> Result<GaugeData>;

    /// JSON form used inside `{"custom": …}`; `None` if not serializable.
    fn to_json(&self) -> Option<serde_json::Value> {
        None
    }
}

/// `f = constant + log_z·log z + Σ_j weights[j]·r_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGauge {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub log_z: f64,
    #[serde(default)]
    pub weights: Vec<f64>,
}

impl GaugeFunction for LinearGauge {
    fn eval(&self, centers: &[HPoint], p: &HPoint) -> Result<GaugeData> {
        if self.weights.len() > centers.len() {
            return Err(Error::InvalidConfiguration(format!(
                "linear gauge has {} weights for {} centers",
                self.weights.len(),
                centers.len()
            )));
        }
        let mut g = GaugeData {
            f: self.constant + self.log_z * p.z.ln(),
            df: Covector3([0.0, 0.0, self.log_z]),
            ddf: SymForm3::diagonal([-self.log_z, -self.log_z, 0.0]),
            lapf: -2.0 * self.log_z,
        };
        for (j, (&w, c)) in self.weights.iter().zip(centers).enumerate() {
            if w == 0.0 {
                continue;
            }
            let r = checked_distance(p, c, j)?;
            let dr = dr_with_distance(p, c, r);
            let ct = coth(r);
            g.f += w * r;
            g.df += dr * w;
            g.ddf += (SymForm3::identity() - SymForm3::square(&dr)) * (w * ct);
            g.lapf += 2.0 * w * ct;
        }
        Ok(g)
    }

    fn to_json(&self) -> Option<serde_json::Value> {
        serde_json::to_value(self).ok()
    }
}

#[derive(Clone)]
pub struct CustomGauge(Arc<dyn GaugeFunction>);

impl CustomGauge {
    pub fn new<G: GaugeFunction + 'static>(g: G) -> Self {
        CustomGauge(Arc::new(g))
    }

    pub fn function(&self) -> &dyn GaugeFunction {
        self.0.as_ref()
    }
}

impl fmt::Debug for CustomGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone)]
pub enum GaugeKind {
    /// `f ≡ 0`: the metric `Vh + V⁻¹θ²` itself.
    Zero,
    /// `f = −(r₁ + ⋯ + r_n)/n`.
    MeanDistance,
    /// `f = −r_i`.
    SingleDistance(usize),
    /// `f = log z`, the Kähler representative.
    LogZ,
    Custom(CustomGauge),
}

impl GaugeKind {
    pub fn name(&self) -> String {
        match self {
            GaugeKind::Zero => "zero".into(),
            GaugeKind::MeanDistance => "mean_distance".into(),
            GaugeKind::SingleDistance(i) => format!("single_distance({i})"),
            GaugeKind::LogZ => "log_z".into(),
            GaugeKind::Custom(_) => "custom".into(),
        }
    }
}

/// Centers of the potential plus the gauge selector.
#[derive(Debug, Clone)]
pub struct Configuration {
    centers: Vec<HPoint>,
    gauge: GaugeKind,
}

const CUSTOM_CHECK_POINTS: usize = 8;
const CUSTOM_CHECK_SEED: u64 = 0x5eed_f00d;

impl Configuration {
    pub fn new(centers: Vec<HPoint>, gauge: GaugeKind) -> Result<Self> {
        for (i, a) in centers.iter().enumerate() {
            for (j, b) in centers.iter().enumerate().skip(i + 1) {
                if dist(a, b) < POLE_EXCLUSION {
                    return Err(Error::InvalidConfiguration(format!("centers {i} and {j} coincide")));
                }
            }
        }
        if let GaugeKind::SingleDistance(i) = gauge {
            if i >= centers.len() {
                return Err(Error::InvalidConfiguration(format!(
                    "single_distance index {i} out of range for {} centers",
                    centers.len()
                )));
            }
        }
        let cfg = Configuration { centers, gauge };
        if let GaugeKind::Custom(_) = &cfg.gauge {
            cfg.validate_custom_gauge()?;
        }
        Ok(cfg)
    }

    pub fn centers(&self) -> &[HPoint] {
        &self.centers
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn gauge_kind(&self) -> &GaugeKind {
        &self.gauge
    }

    pub fn with_gauge(&self, gauge: GaugeKind) -> Result<Self> {
        Configuration::new(self.centers.clone(), gauge)
    }

    /// True when every center lies on the `x = y = 0` axis.
    pub fn is_axisymmetric(&self) -> bool {
        self.centers.iter().all(|c| c.x == 0.0 && c.y == 0.0)
    }

    fn validate_custom_gauge(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(CUSTOM_CHECK_SEED);
        let (cx, cy, cz) = self.centroid();
        let mut checked = 0;
        let mut attempts = 0;
        while checked < CUSTOM_CHECK_POINTS {
            attempts += 1;
            if attempts > 1000 {
                return Err(Error::InconsistentGauge("no admissible check points".into()));
            }
            let z = cz * (rng.random_range(-1.0..1.0f64)).exp();
            let p = HPoint::new(cx + z * rng.random_range(-1.0..1.0), cy + z * rng.random_range(-1.0..1.0), z)?;
            if self.centers.iter().any(|c| dist(&p, c) < 0.05) {
                continue;
            }
            let g = match gauge(self, &p) {
                Ok(g) => g,
                Err(Error::AtCenter { .. }) => continue,
                Err(e) => return Err(e),
            };
            let f_at = |q: &HPoint| gauge(self, q).map(|g| g.f);
            let fd_df = fd_frame_gradient(f_at, &p, 1e-5)?;
            let scale = 1.0 + g.df.norm();
            if (fd_df - g.df).norm() > 1e-5 * scale {
                return Err(Error::InconsistentGauge(format!(
                    "df = {:?} but finite differences give {:?} at {:?}",
                    g.df.0, fd_df.0, p
                )));
            }
            let fd_ddf = fd_frame_hessian(f_at, &p, 1e-4)?;
            let scale = 1.0 + g.ddf.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            if fd_ddf.max_abs_diff(&g.ddf) > 1e-5 * scale {
                return Err(Error::InconsistentGauge(format!(
                    "Ddf disagrees with finite differences by {:e} at {:?}",
                    fd_ddf.max_abs_diff(&g.ddf),
                    p
                )));
            }
            if (g.ddf.trace() - g.lapf).abs() > 1e-10 * scale {
                return Err(Error::InconsistentGauge(format!(
                    "trace(Ddf) = {} but lapf = {}",
                    g.ddf.trace(),
                    g.lapf
                )));
            }
            checked += 1;
        }
        Ok(())
    }

    fn centroid(&self) -> (f64, f64, f64) {
        if self.centers.is_empty() {
            return (0.0, 0.0, 1.0);
        }
        let n = self.centers.len() as f64;
        let sx: f64 = self.centers.iter().map(|c| c.x).sum();
        let sy: f64 = self.centers.iter().map(|c| c.y).sum();
        let lz: f64 = self.centers.iter().map(|c| c.z.ln()).sum();
        (sx / n, sy / n, (lz / n).exp())
    }
}

fn checked_distance(p: &HPoint, c: &HPoint, index: usize) -> Result<f64> {
    let r = dist(p, c);
    if r < POLE_EXCLUSION {
        return Err(Error::AtCenter { index, distance: r });
    }
    Ok(r)
}

/// `V = 1 + Σ G(r_j)`, `dV = Σ G′(r_j) dr_j`.
pub fn potential(cfg: &Configuration, p: &HPoint) -> Result<PotentialData> {
    let mut v = 1.0;
    let mut dv = Covector3::ZERO;
    for (j, c) in cfg.centers.iter().enumerate() {
        let r = checked_distance(p, c, j)?;
        v += green(r)?;
        dv += dr_with_distance(p, c, r) * dgreen(r)?;
    }
    Ok(PotentialData { v, dv })
}

pub fn gauge(cfg: &Configuration, p: &HPoint) -> Result<GaugeData> {
    match &cfg.gauge {
        GaugeKind::Zero => Ok(GaugeData::ZERO),
        GaugeKind::LogZ => Ok(GaugeData {
            f: p.z.ln(),
            df: Covector3([0.0, 0.0, 1.0]),
            ddf: SymForm3::diagonal([-1.0, -1.0, 0.0]),
            lapf: -2.0,
        }),
        GaugeKind::MeanDistance => {
            let n = cfg.centers.len();
            if n == 0 {
                return Ok(GaugeData::ZERO);
            }
            distance_gauge(cfg.centers.iter().enumerate(), p, 1.0 / n as f64)
        }
        GaugeKind::SingleDistance(i) => distance_gauge(std::iter::once((*i, &cfg.centers[*i])), p, 1.0),
        GaugeKind::Custom(c) => c.function().eval(&cfg.centers, p),
    }
}

/// `f = −w Σ r_j` over the given centers.
fn distance_gauge<'a>(centers: impl Iterator<Item = (usize, &'a HPoint)>, p: &HPoint, w: f64) -> Result<GaugeData> {
    let mut g = GaugeData::ZERO;
    for (j, c) in centers {
        let r = checked_distance(p, c, j)?;
        let dr = dr_with_distance(p, c, r);
        let ct = coth(r);
        g.f -= w * r;
        g.df += dr * (-w);
        g.ddf += (SymForm3::identity() - SymForm3::square(&dr)) * (-w * ct);
        g.lapf -= 2.0 * w * ct;
    }
    Ok(g)
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GaugeSpec {
    Zero,
    MeanDistance,
    LogZ,
    SingleDistance(usize),
    Custom(serde_json::Value),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationSpec {
    centers: Vec<HPoint>,
    gauge: GaugeSpec,
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let gauge = match &self.gauge {
            GaugeKind::Zero => GaugeSpec::Zero,
            GaugeKind::MeanDistance => GaugeSpec::MeanDistance,
            GaugeKind::LogZ => GaugeSpec::LogZ,
            GaugeKind::SingleDistance(i) => GaugeSpec::SingleDistance(*i),
            GaugeKind::Custom(c) => GaugeSpec::Custom(
                c.function()
                    .to_json()
                    .ok_or_else(|| serde::ser::Error::custom("custom gauge has no JSON form"))?,
            ),
        };
        ConfigurationSpec { centers: self.centers.clone(), gauge }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let spec = ConfigurationSpec::deserialize(d)?;
        let gauge = match spec.gauge {
            GaugeSpec::Zero => GaugeKind::Zero,
            GaugeSpec::MeanDistance => GaugeKind::MeanDistance,
            GaugeSpec::LogZ => GaugeKind::LogZ,
            GaugeSpec::SingleDistance(i) => GaugeKind::SingleDistance(i),
            GaugeSpec::Custom(v) => {
                let lin: LinearGauge = serde_json::from_value(v).map_err(D::Error::custom)?;
                GaugeKind::Custom(CustomGauge::new(lin))
            }
        };
        Configuration::new(spec.centers, gauge).map_err(D::Error::custom)
    }
}

impl Configuration {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
