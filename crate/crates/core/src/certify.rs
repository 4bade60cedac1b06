//! Grid sweeps that certify curvature conditions over a region.
//!
//! Points are placed around each center on log-spaced geodesic spheres
//! (radii from `eps` to `rmax`) with Fibonacci-lattice directions, jittered
//! by a seeded generator. Results are collected in grid order, so a sweep
//! is reproducible from its spec.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Configuration, GaugeKind};
use crate::asymptotics_n3::{cluster_certificate, orbifold_positivity, ClusterSpec, OrbifoldSign};
use crate::closedform_n2::{mu_certificate, phi_at, q_components, MuCertificate};
use crate::curvature::{evaluate, schouten_q, CurvatureReport};
use crate::error::{Error, Result};
use crate::hyperbolic3::{dist, geodesic_point, HPoint};
use crate::oracle::{compare_ansatz, compare_flat, FdOptions};

/// At most this many failing points are listed per check.
pub const MAX_LISTED_FAILURES: usize = 20;

/// Tolerance of the oracle comparisons (relative Ricci error and self-duality residual).
pub const ORACLE_TOL: f64 = 1e-3;

/// Relative agreement required between the two-center table and the general pipeline.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Smallest Ricci eigenvalue positive.
    Positivity,
    /// `|Ric₀| < s/(2√3)`.
    Strong,
    /// `μ₁ + μ₂ ≥ 0`.
    RicOperator,
    /// `μ₁ + μ₃ ≥ 1` and `μ₁ + μ₂ ≥ 0` from the two-center table, which must
    /// agree with the general pipeline.
    MuBound,
    /// The three-center cluster certificate.
    Cluster,
    /// Finite-difference oracle comparison on the ansatz chart.
    Oracle,
    /// Sign of the Ricci tensor in the limit where all centers merge.
    Orbifold,
}

impl Check {
    pub const ALL: [Check; 7] =
        [Check::Positivity, Check::Strong, Check::RicOperator, Check::MuBound, Check::Cluster, Check::Oracle, Check::Orbifold];

    pub fn name(self) -> &'static str {
        match self {
            Check::Positivity => "positivity",
            Check::Strong => "strong",
            Check::RicOperator => "ric-operator",
            Check::MuBound => "mu-bound",
            Check::Cluster => "cluster",
            Check::Oracle => "oracle",
            Check::Orbifold => "orbifold",
        }
    }

    fn is_pointwise(self) -> bool {
        matches!(self, Check::Positivity | Check::Strong | Check::RicOperator | Check::MuBound)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::Domain(format!("unknown check '{s}'")))
    }
}

/// Parse a comma-separated list of checks.
pub fn parse_checks(list: &str) -> Result<Vec<Check>> {
    let mut out: Vec<Check> = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Domain("no checks requested".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub config: Configuration,
    /// Outer radius of the sampled region around each center.
    pub rmax: f64,
    /// Inner exclusion radius around each center.
    pub eps: f64,
    /// Number of radii per center; each sphere carries `grid²` directions.
    pub grid: usize,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub cluster_eps: f64,
    pub cluster_samples: usize,
    pub oracle_samples: usize,
    pub oracle_step: f64,
}

impl SweepSpec {
    pub fn new(config: Configuration, checks: Vec<Check>) -> Self {
        SweepSpec {
            config,
            rmax: 8.0,
            eps: 1e-3,
            grid: 12,
            checks,
            seed: 0,
            cluster_eps: 0.05,
            cluster_samples: 10_000,
            oracle_samples: 100,
            oracle_step: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::Domain(format!("grid = {} must be at least 2", self.grid)));
        }
        if !(self.eps > 0.0 && self.eps < self.rmax && self.rmax.is_finite()) {
            return Err(Error::Domain(format!("need 0 < eps < rmax, got eps = {}, rmax = {}", self.eps, self.rmax)));
        }
        if self.checks.is_empty() {
            return Err(Error::Domain("no checks requested".into()));
        }
        let n = self.config.n();
        for c in &self.checks {
            match c {
                Check::MuBound if n != 2 || !matches!(self.config.gauge_kind(), GaugeKind::MeanDistance) => {
                    return Err(Error::InvalidConfiguration(
                        "mu-bound needs two centers and the mean-distance gauge".into(),
                    ))
                }
                Check::Cluster if n != 3 => {
                    return Err(Error::InvalidConfiguration("cluster needs three centers".into()))
                }
                Check::Oracle if !self.config.is_axisymmetric() => {
                    return Err(Error::InvalidConfiguration("oracle needs every center on the z-axis".into()))
                }
                Check::Orbifold if n == 0 => {
                    return Err(Error::InvalidConfiguration("orbifold needs at least one center".into()))
                }
                _ => {}
            }
        }
        if self.checks.contains(&Check::Cluster) && !(self.cluster_eps > 0.0 && self.cluster_eps < 0.5) {
            return Err(Error::Domain(format!("cluster eps = {} must lie in (0, 1/2)", self.cluster_eps)));
        }
        if self.checks.contains(&Check::Oracle) && !(self.oracle_step > 0.0 && self.oracle_samples > 0) {
            return Err(Error::Domain("oracle needs a positive step and sample count".into()));
        }
        Ok(())
    }
}

/// Sweep points: for every center, `grid` log-spaced radii in `[eps, rmax]`
/// times `grid²` directions, dropping points within `eps` of another center.
pub fn sweep_points(cfg: &Configuration, eps: f64, rmax: f64, grid: usize, seed: u64) -> Result<Vec<HPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchors: Vec<HPoint> = if cfg.n() == 0 { vec![HPoint::new(0.0, 0.0, 1.0)?] } else { cfg.centers().to_vec() };
    let dirs = grid * grid;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let (lo, hi) = (eps.ln(), rmax.ln());
    let spacing = (hi - lo) / (grid - 1) as f64;
    let mut out = Vec::with_capacity(anchors.len() * grid * dirs);
    for c in &anchors {
        for i in 0..grid {
            let offset: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            for k in 0..dirs {
                let jitter: f64 = rng.random_range(-0.5..0.5);
                let log_r = (lo + spacing * (i as f64 + jitter)).clamp(lo, hi);
                let uz = 1.0 - (2 * k + 1) as f64 / dirs as f64;
                let az = golden * k as f64 + offset;
                let st = (1.0 - uz * uz).sqrt();
                let p = geodesic_point(c, log_r.exp(), [st * az.cos(), st * az.sin(), uz])?;
                if cfg.centers().iter().all(|q| dist(&p, q) >= eps) {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Summary of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: Check,
    /// What `min` measures.
    pub metric: String,
    pub evaluated: usize,
    pub min: f64,
    pub argmin: Option<HPoint>,
    pub failures: usize,
    pub failing_points: Vec<HPoint>,
    pub passed: bool,
    /// Check-specific report (cluster, oracle, orbifold).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl CheckSummary {
    fn new(check: Check, metric: &str) -> Self {
        CheckSummary {
            check,
            metric: metric.to_string(),
            evaluated: 0,
            min: f64::INFINITY,
            argmin: None,
            failures: 0,
            failing_points: Vec::new(),
            passed: true,
            details: None,
        }
    }

    fn record(&mut self, p: HPoint, value: f64, ok: bool) {
        self.evaluated += 1;
        if value < self.min || self.argmin.is_none() {
            self.min = value;
            self.argmin = Some(p);
        }
        if !ok {
            self.failures += 1;
            self.passed = false;
            if self.failing_points.len() < MAX_LISTED_FAILURES {
                self.failing_points.push(p);
            }
        }
    }
}

/// One CSV row: point, scalar curvature, Ricci eigenvalues, flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub point: HPoint,
    pub s: f64,
    pub eigs: [f64; 4],
    pub positive_ricci: bool,
    pub strongly_positive: bool,
    pub ric_operator_nonneg: bool,
}

impl PointRow {
    pub const CSV_HEADER: &'static str =
        "x,y,z,s,eig1,eig2,eig3,eig4,positive_ricci,strongly_positive,ric_operator_nonneg";

    pub fn to_csv(&self) -> String {
        let p = self.point;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.x,
            p.y,
            p.z,
            self.s,
            self.eigs[0],
            self.eigs[1],
            self.eigs[2],
            self.eigs[3],
            self.positive_ricci,
            self.strongly_positive,
            self.ric_operator_nonneg
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: Configuration,
    pub rmax: f64,
    pub eps: f64,
    pub grid: usize,
    pub seed: u64,
    pub points: usize,
    pub checks: Vec<CheckSummary>,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<PointRow>,
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(PointRow::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s
    }

    pub fn check(&self, c: Check) -> Option<&CheckSummary> {
        self.checks.iter().find(|s| s.check == c)
    }
}

struct PointResult {
    point: HPoint,
    report: CurvatureReport,
    closed_form: Option<ClosedForm>,
}

/// Two-center table at the realized `(r₁, r₂, φ)`.
struct ClosedForm {
    cert: MuCertificate,
    /// `max |Q_table − Q_pipeline| / (1 + max |Q_table|)` where the frame exists.
    gap: Option<f64>,
}

fn evaluate_point(cfg: &Configuration, p: HPoint, with_closed_form: bool) -> Result<PointResult> {
    let pc = evaluate(cfg, &p)?;
    let closed_form = if with_closed_form {
        let [c1, c2] = [cfg.centers()[0], cfg.centers()[1]];
        let at = phi_at(&p, &c1, &c2)?;
        let gap = match at.frame {
            Some(rows) => {
                let q = schouten_q(&pc.potential, &pc.gauge).rotate_spatial(&rows);
                let table = q_components(at.r1, at.r2, at.phi)?;
                Some(table.max_abs_diff(&q) / (1.0 + table.max_abs()))
            }
            None => None,
        };
        Some(ClosedForm { cert: mu_certificate(at.r1, at.r2, at.phi)?, gap })
    } else {
        None
    };
    Ok(PointResult { point: p, report: pc.report, closed_form })
}

/// Run every requested check.
pub fn run_certify(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let cfg = &spec.config;
    let needs_grid = spec.checks.iter().any(|c| c.is_pointwise());
    let points = if needs_grid { sweep_points(cfg, spec.eps, spec.rmax, spec.grid, spec.seed)? } else { Vec::new() };
    let with_closed_form = spec.checks.contains(&Check::MuBound);
    let results =
        points.par_iter().map(|p| evaluate_point(cfg, *p, with_closed_form)).collect::<Result<Vec<PointResult>>>()?;

    let mut summaries = Vec::new();
    for &check in &spec.checks {
        let mut sum = match check {
            Check::Positivity => CheckSummary::new(check, "min Ricci eigenvalue"),
            Check::Strong => CheckSummary::new(check, "s/(2√3) − |Ric₀|"),
            Check::RicOperator => CheckSummary::new(check, "μ₁ + μ₂"),
            Check::MuBound => CheckSummary::new(check, "μ₁ + μ₃ − 1"),
            Check::Cluster => CheckSummary::new(check, "min eigenvalue margin of the cluster bound"),
            Check::Oracle => CheckSummary::new(check, "1e-3 − max(Ricci relative error, self-duality residual)"),
            Check::Orbifold => CheckSummary::new(check, "min η/ζ over scanned radii"),
        };
        match check {
            Check::Positivity | Check::Strong | Check::RicOperator | Check::MuBound => {
                let (mut max_gap, mut min_mu12): (f64, f64) = (0.0, f64::INFINITY);
                for r in &results {
                    let rep = &r.report;
                    let (value, ok) = match check {
                        Check::Positivity => (rep.eigs[0], rep.flags.positive_ricci),
                        Check::Strong => (rep.strong_margin(), rep.flags.strongly_positive),
                        Check::RicOperator => (rep.q_eigs[0] + rep.q_eigs[1], rep.flags.ric_operator_nonneg),
                        _ => {
                            let cf = r.closed_form.as_ref().expect("closed form requested");
                            let gap = cf.gap.unwrap_or(0.0);
                            max_gap = max_gap.max(gap);
                            min_mu12 = min_mu12.min(cf.cert.mu12());
                            (cf.cert.mu13() - 1.0, cf.cert.pass && gap <= CLOSED_FORM_TOL)
                        }
                    };
                    sum.record(r.point, value, ok);
                }
                if check == Check::MuBound {
                    sum.details = Some(serde_json::json!({ "max_closed_form_gap": max_gap, "min_mu12": min_mu12 }));
                }
            }
            Check::Cluster => {
                let cs = ClusterSpec::new(spec.cluster_eps, spec.cluster_samples, spec.seed);
                let rep = cluster_certificate(cfg, &cs)?;
                sum.evaluated = rep.samples;
                sum.min = rep.min_eig_margin;
                sum.argmin = rep.worst_point;
                sum.passed = rep.passed;
                if !rep.passed {
                    sum.failures = 1;
                    sum.failing_points.extend(rep.worst_point);
                }
                sum.details = Some(serde_json::to_value(&rep)?);
            }
            Check::Oracle => {
                let rep = compare_ansatz(cfg, spec.oracle_samples, spec.seed, FdOptions::with_step(spec.oracle_step))?;
                let worst = rep.max_ricci_rel_error.max(rep.max_selfduality_residual);
                sum.evaluated = rep.samples;
                sum.min = ORACLE_TOL - worst;
                sum.passed = worst < ORACLE_TOL;
                if let Some(p) = rep.worst_point {
                    sum.argmin = HPoint::new(p[0], p[1], p[2]).ok();
                }
                if !sum.passed {
                    sum.failures = 1;
                    sum.failing_points.extend(sum.argmin);
                }
                sum.details = Some(serde_json::to_value(&rep)?);
            }
            Check::Orbifold => {
                let n = u32::try_from(cfg.n()).map_err(|_| Error::Domain("too many centers".into()))?;
                let v = orbifold_positivity(n)?;
                sum.evaluated = 1;
                sum.min = v.min_eta_over_zeta;
                sum.passed = v.verdict == OrbifoldSign::Positive;
                if !sum.passed {
                    sum.failures = 1;
                }
                sum.details = Some(serde_json::to_value(&v)?);
            }
        }
        summaries.push(sum);
    }
    let rows = results
        .iter()
        .map(|r| PointRow {
            point: r.point,
            s: r.report.s,
            eigs: r.report.eigs,
            positive_ricci: r.report.flags.positive_ricci,
            strongly_positive: r.report.flags.strongly_positive,
            ric_operator_nonneg: r.report.flags.ric_operator_nonneg,
        })
        .collect();
    Ok(SweepReport {
        config: cfg.clone(),
        rmax: spec.rmax,
        eps: spec.eps,
        grid: spec.grid,
        seed: spec.seed,
        points: results.len(),
        passed: summaries.iter().all(|s| s.passed),
        checks: summaries,
        rows,
    })
}

/// Oracle run: the ansatz chart for `config`, or the flat chart when `None`.
pub fn run_oracle(config: Option<&Configuration>, samples: usize, step: f64, seed: u64) -> Result<crate::oracle::OracleReport> {
    if samples == 0 || !(step > 0.0) {
        return Err(Error::Domain("oracle needs a positive step and sample count".into()));
    }
    let opts = FdOptions::with_step(step);
    match config {
        Some(cfg) => compare_ansatz(cfg, samples, seed, opts),
        None => compare_flat(samples, seed, opts),
    }
}
