//! Curvature of a chart metric from finite differences of its components.
//!
//! Metric derivatives up to second order come from central differences with
//! one Richardson level. Christoffel symbols, the Riemann tensor, Ricci,
//! scalar and Weyl curvature then follow from the usual coordinate formulas.

use nalgebra::{Matrix4, Matrix6};
use serde::{Deserialize, Serialize};

use super::chart::{ChartMetric, Mat4};
use crate::error::{Error, Result};

pub type Riemann = [[[[f64; 4]; 4]; 4]; 4];

/// Finite-difference step (chart units) and whether to Richardson-extrapolate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub step: f64,
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { step: 1e-3, richardson: true }
    }
}

impl FdOptions {
    pub fn with_step(step: f64) -> Self {
        FdOptions { step, ..Default::default() }
    }
}

/// Metric, inverse and coordinate derivatives at a point.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub g: Mat4,
    pub inv: Mat4,
    /// `dg[k][i][j] = ∂_k g_ij`.
    pub dg: [Mat4; 4],
    /// `ddg[k][l][i][j] = ∂_k ∂_l g_ij`.
    pub ddg: [[Mat4; 4]; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCurvature {
    pub metric: Mat4,
    pub ricci: Mat4,
    pub scalar: f64,
    /// All-lower `R_abcd`, with `Ric_bd = g^{ac} R_abcd`.
    pub riemann: Riemann,
    pub weyl_plus_norm: f64,
    pub weyl_minus_norm: f64,
    /// `max |R_abcd + R_acdb + R_adbc| / max |R|`.
    pub bianchi_residual: f64,
    /// `max |g^{ac} W_abcd| / max |W|`.
    pub weyl_trace_residual: f64,
}

impl FdCurvature {
    /// `|W₋| / (|W₊| + |W₋| + ε)`.
    pub fn selfduality_residual(&self) -> f64 {
        self.weyl_minus_norm / (self.weyl_plus_norm + self.weyl_minus_norm + f64::EPSILON)
    }
}

fn axpy(acc: &mut Mat4, k: f64, m: &Mat4) {
    for i in 0..4 {
        for j in 0..4 {
            acc[i][j] += k * m[i][j];
        }
    }
}

fn shifted(p: &[f64; 4], moves: &[(usize, f64)]) -> [f64; 4] {
    let mut q = *p;
    for &(k, d) in moves {
        q[k] += d;
    }
    q
}

fn derivatives_at_step(m: &ChartMetric, p: &[f64; 4], g0: &Mat4, h: f64) -> Result<([Mat4; 4], [[Mat4; 4]; 4])> {
    let mut dg = [[[0.0; 4]; 4]; 4];
    let mut ddg = [[[[0.0; 4]; 4]; 4]; 4];
    for k in 0..4 {
        let plus = m.metric(&shifted(p, &[(k, h)]))?;
        let minus = m.metric(&shifted(p, &[(k, -h)]))?;
        axpy(&mut dg[k], 0.5 / h, &plus);
        axpy(&mut dg[k], -0.5 / h, &minus);
        axpy(&mut ddg[k][k], 1.0 / (h * h), &plus);
        axpy(&mut ddg[k][k], 1.0 / (h * h), &minus);
        axpy(&mut ddg[k][k], -2.0 / (h * h), g0);
        for l in 0..k {
            let mut mixed = [[0.0; 4]; 4];
            for (sk, sl, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let g = m.metric(&shifted(p, &[(k, sk * h), (l, sl * h)]))?;
                axpy(&mut mixed, sign / (4.0 * h * h), &g);
            }
            ddg[k][l] = mixed;
            ddg[l][k] = mixed;
        }
    }
    Ok((dg, ddg))
}

fn invert(g: &Mat4) -> Result<Mat4> {
    let m = Matrix4::from_fn(|i, j| g[i][j]);
    let inv = m.try_inverse().ok_or_else(|| Error::Domain("singular metric".into()))?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
}

/// Metric derivatives by (extrapolated) central differences.
pub fn metric_jet(m: &ChartMetric, p: &[f64; 4], opts: FdOptions) -> Result<MetricJet> {
    if !(opts.step > 0.0) {
        return Err(Error::NonPositive { what: "step", value: opts.step });
    }
    if !m.contains(p) {
        return Err(Error::Domain(format!("{:?} lies outside the {} chart", p, m.name())));
    }
    for k in 0..4 {
        for s in [-2.0, 2.0] {
            if !m.contains(&shifted(p, &[(k, s * opts.step)])) {
                return Err(Error::StepTooLarge(*p));
            }
        }
    }
    let g = m.metric(p)?;
    let (mut dg, mut ddg) = derivatives_at_step(m, p, &g, opts.step)?;
    if opts.richardson {
        let (dg2, ddg2) = derivatives_at_step(m, p, &g, 0.5 * opts.step)?;
        for k in 0..4 {
            let mut d = [[0.0; 4]; 4];
            axpy(&mut d, 4.0 / 3.0, &dg2[k]);
            axpy(&mut d, -1.0 / 3.0, &dg[k]);
            dg[k] = d;
            for l in 0..4 {
                let mut d = [[0.0; 4]; 4];
                axpy(&mut d, 4.0 / 3.0, &ddg2[k][l]);
                axpy(&mut d, -1.0 / 3.0, &ddg[k][l]);
                ddg[k][l] = d;
            }
        }
    }
    Ok(MetricJet { g, inv: invert(&g)?, dg, ddg })
}

/// `Γ^a_bc` from a jet.
pub fn christoffel(jet: &MetricJet) -> [Mat4; 4] {
    let mut first = [[[0.0; 4]; 4]; 4]; // Γ_dbc
    for d in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                first[d][b][c] = 0.5 * (jet.dg[b][d][c] + jet.dg[c][d][b] - jet.dg[d][b][c]);
            }
        }
    }
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                gamma[a][b][c] = (0..4).map(|d| jet.inv[a][d] * first[d][b][c]).sum();
            }
        }
    }
    gamma
}

fn riemann_from_jet(jet: &MetricJet) -> Riemann {
    let gamma = christoffel(jet);
    // ∂_e Γ^a_bc = ∂_e g^{ad} Γ_dbc + g^{ad} ∂_e Γ_dbc, ∂_e g^{ad} = −g^{ap} ∂_e g_pq g^{qd}
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4]; // [e][a][b][c]
    for e in 0..4 {
        let mut dinv = [[0.0; 4]; 4];
        for a in 0..4 {
            for d in 0..4 {
                let mut s = 0.0;
                for pp in 0..4 {
                    for q in 0..4 {
                        s -= jet.inv[a][pp] * jet.dg[e][pp][q] * jet.inv[q][d];
                    }
                }
                dinv[a][d] = s;
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let mut s = 0.0;
                    for d in 0..4 {
                        let first = 0.5 * (jet.dg[b][d][c] + jet.dg[c][d][b] - jet.dg[d][b][c]);
                        let dfirst = 0.5 * (jet.ddg[e][b][d][c] + jet.ddg[e][c][d][b] - jet.ddg[e][d][b][c]);
                        s += dinv[a][d] * first + jet.inv[a][d] * dfirst;
                    }
                    dgamma[e][a][b][c] = s;
                }
            }
        }
    }
    // R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb
    let mut up = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..4 {
                        s += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    up[a][b][c][d] = s;
                }
            }
        }
    }
    let mut low = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    low[a][b][c][d] = (0..4).map(|e| jet.g[a][e] * up[e][b][c][d]).sum();
                }
            }
        }
    }
    low
}

fn max_abs4(t: &Riemann) -> f64 {
    t.iter().flatten().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// Pairs `(12, 13, 14, 23, 24, 34)` indexing the 2-form basis.
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Hodge star on 2-forms in a positively oriented orthonormal frame.
fn hodge6() -> Matrix6<f64> {
    let mut s = Matrix6::zeros();
    for (i, j, v) in [(0, 5, 1.0), (1, 4, -1.0), (2, 3, 1.0)] {
        s[(i, j)] = v;
        s[(j, i)] = v;
    }
    s
}

/// Curvature at `p` by finite differences.
pub fn fd_curvature(m: &ChartMetric, p: &[f64; 4], opts: FdOptions) -> Result<FdCurvature> {
    let jet = metric_jet(m, p, opts)?;
    let r = riemann_from_jet(&jet);
    let (g, inv) = (jet.g, jet.inv);
    let mut ricci = [[0.0; 4]; 4];
    for b in 0..4 {
        for d in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                for c in 0..4 {
                    s += inv[a][c] * r[a][b][c][d];
                }
            }
            ricci[b][d] = s;
        }
    }
    for b in 0..4 {
        for d in 0..b {
            let avg = 0.5 * (ricci[b][d] + ricci[d][b]);
            ricci[b][d] = avg;
            ricci[d][b] = avg;
        }
    }
    let scalar: f64 = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| inv[a][b] * ricci[a][b]).sum();

    let mut weyl = [[[[0.0; 4]; 4]; 4]; 4];
    let mut bianchi: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let kn = g[a][c] * ricci[b][d] - g[a][d] * ricci[b][c] - g[b][c] * ricci[a][d] + g[b][d] * ricci[a][c];
                    weyl[a][b][c][d] =
                        r[a][b][c][d] - 0.5 * kn + scalar / 6.0 * (g[a][c] * g[b][d] - g[a][d] * g[b][c]);
                    bianchi = bianchi.max((r[a][b][c][d] + r[a][c][d][b] + r[a][d][b][c]).abs());
                }
            }
        }
    }
    let r_scale = max_abs4(&r);
    let w_scale = max_abs4(&weyl);
    let mut trace: f64 = 0.0;
    for b in 0..4 {
        for d in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                for c in 0..4 {
                    s += inv[a][c] * weyl[a][b][c][d];
                }
            }
            trace = trace.max(s.abs());
        }
    }

    // Orthonormal frame: columns of L^{−T} for g = L Lᵀ, positively oriented.
    let chol = Matrix4::from_fn(|i, j| g[i][j])
        .cholesky()
        .ok_or_else(|| Error::Domain(format!("metric not positive-definite at {p:?}")))?;
    let e = chol.l().try_inverse().ok_or_else(|| Error::Domain("singular frame".into()))?.transpose();
    // contract one index at a time
    let mut tmp = weyl;
    for slot in 0..4 {
        let mut out = [[[[0.0; 4]; 4]; 4]; 4];
        for i0 in 0..4 {
            for i1 in 0..4 {
                for i2 in 0..4 {
                    for i3 in 0..4 {
                        let idx = [i0, i1, i2, i3];
                        let mut s = 0.0;
                        for k in 0..4 {
                            let mut src = idx;
                            src[slot] = k;
                            s += e[(k, idx[slot])] * tmp[src[0]][src[1]][src[2]][src[3]];
                        }
                        out[i0][i1][i2][i3] = s;
                    }
                }
            }
        }
        tmp = out;
    }
    let w_frame = tmp;
    let wm = Matrix6::from_fn(|i, j| {
        let (a, b) = PAIRS[i];
        let (c, d) = PAIRS[j];
        w_frame[a][b][c][d]
    });
    let star = hodge6() * m.orientation();
    let id = Matrix6::<f64>::identity();
    let plus = (id + star) * 0.5;
    let minus = (id - star) * 0.5;
    Ok(FdCurvature {
        metric: g,
        ricci,
        scalar,
        riemann: r,
        weyl_plus_norm: (plus * wm * plus).norm(),
        weyl_minus_norm: (minus * wm * minus).norm(),
        bianchi_residual: if r_scale > 0.0 { bianchi / r_scale } else { bianchi },
        weyl_trace_residual: if w_scale > 0.0 { trace / w_scale } else { trace },
    })
}

/// `|W₋|/(|W₊| + |W₋| + ε)` at `p`.
pub fn selfduality_residual(m: &ChartMetric, p: &[f64; 4], opts: FdOptions) -> Result<f64> {
    Ok(fd_curvature(m, p, opts)?.selfduality_residual())
}

/// `max |A − B| / max |B|`, or the absolute error when `B` vanishes.
pub fn relative_error(a: &Mat4, b: &Mat4) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            diff = diff.max((a[i][j] - b[i][j]).abs());
            scale = scale.max(b[i][j].abs());
        }
    }
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
