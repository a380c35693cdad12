//! Linearized drift and diffusion models around a steady state: stability,
//! steady-state and time-dependent Lyapunov equations, polariton and
//! Bogoliubov analysis.
//!
//! Quadrature ordering is [X_1, Y_1, ..., X_N, Y_N] in mode declaration
//! order, with mechanical pairs (q, p). Vacuum variance is 1/2.

use crate::error::{Error, Result};
use crate::linalg::{self, MatrixJson};
use crate::meanfield::SteadyState;
use crate::model::{CouplingKind, ModeKind, ValidatedSystem};
use crate::ode::{self, OdeOptions};
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Time-periodic correction: A(t) = A + a_cos cos(W t) + a_sin sin(W t).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPart {
    pub a_cos: DMatrix<f64>,
    pub a_sin: DMatrix<f64>,
    /// Modulation frequency W (rad/s); for two-tone drives W = 2 w_b and the
    /// period is 2 pi / (2 w_b).
    pub frequency: f64,
}

/// Linearized drift/diffusion model du = A u dt + noise, with D the
/// symmetrized noise correlator matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftModel {
    pub ordering: String,
    pub a: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub periodic: Option<PeriodicPart>,
}

impl DriftModel {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Drift matrix at time t (includes the periodic part when present).
    pub fn a_at(&self, t: f64) -> DMatrix<f64> {
        match &self.periodic {
            None => self.a.clone(),
            Some(p) => {
                let (s, c) = (p.frequency * t).sin_cos();
                &self.a + &p.a_cos * c + &p.a_sin * s
            }
        }
    }

    /// Modulation period of the periodic part, if any.
    pub fn period(&self) -> Option<f64> {
        self.periodic
            .as_ref()
            .map(|p| 2.0 * std::f64::consts::PI / p.frequency)
    }
}

/// Real symmetric covariance matrix of symmetrized quadrature moments.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub v: DMatrix<f64>,
    pub ordering: String,
}

impl CovarianceMatrix {
    pub fn n_modes(&self) -> usize {
        self.v.nrows() / 2
    }

    /// Minimum eigenvalue of V + i Omega/2; physical states satisfy
    /// defect >= -1e-9.
    pub fn physicality_defect(&self) -> f64 {
        linalg::physicality_defect(&self.v)
    }

    pub fn is_physical(&self) -> bool {
        self.physicality_defect() >= -1e-9
    }

    /// 2x2 diagonal block of one mode.
    pub fn mode_block(&self, mode: usize) -> DMatrix<f64> {
        self.v.view((2 * mode, 2 * mode), (2, 2)).clone_owned()
    }

    /// Reduced covariance matrix of a subset of modes (declaration order).
    pub fn reduced(&self, modes: &[usize]) -> CovarianceMatrix {
        let k = modes.len();
        let mut v = DMatrix::<f64>::zeros(2 * k, 2 * k);
        for (i, &mi) in modes.iter().enumerate() {
            for (j, &mj) in modes.iter().enumerate() {
                v.view_mut((2 * i, 2 * j), (2, 2))
                    .copy_from(&self.v.view((2 * mi, 2 * mj), (2, 2)));
            }
        }
        CovarianceMatrix {
            v,
            ordering: format!("reduced{modes:?} of {}", self.ordering),
        }
    }
}

/// Serialization mirror for [`DriftModel`] (row-major arrays).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftModelJson {
    pub ordering: String,
    pub a: MatrixJson,
    pub d: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<PeriodicPartJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicPartJson {
    pub a_cos: MatrixJson,
    pub a_sin: MatrixJson,
    pub frequency: f64,
}

impl DriftModel {
    pub fn to_json(&self) -> DriftModelJson {
        DriftModelJson {
            ordering: self.ordering.clone(),
            a: MatrixJson::from_matrix(&self.a),
            d: MatrixJson::from_matrix(&self.d),
            periodic: self.periodic.as_ref().map(|p| PeriodicPartJson {
                a_cos: MatrixJson::from_matrix(&p.a_cos),
                a_sin: MatrixJson::from_matrix(&p.a_sin),
                frequency: p.frequency,
            }),
        }
    }

    pub fn from_json(j: &DriftModelJson) -> Result<Self> {
        Ok(DriftModel {
            ordering: j.ordering.clone(),
            a: j.a.to_matrix()?,
            d: j.d.to_matrix()?,
            periodic: match &j.periodic {
                None => None,
                Some(p) => Some(PeriodicPart {
                    a_cos: p.a_cos.to_matrix()?,
                    a_sin: p.a_sin.to_matrix()?,
                    frequency: p.frequency,
                }),
            },
        })
    }
}

/// Serialization mirror for [`CovarianceMatrix`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceMatrixJson {
    pub ordering: String,
    pub v: MatrixJson,
}

impl CovarianceMatrix {
    pub fn to_json(&self) -> CovarianceMatrixJson {
        CovarianceMatrixJson {
            ordering: self.ordering.clone(),
            v: MatrixJson::from_matrix(&self.v),
        }
    }

    pub fn from_json(j: &CovarianceMatrixJson) -> Result<Self> {
        Ok(CovarianceMatrix {
            v: j.v.to_matrix()?,
            ordering: j.ordering.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// Drift assembly
// ---------------------------------------------------------------------------

/// Adds the quadrature image of dA/dt += -i (c1 dB + c2 dB') to the block
/// (rows of mode `ka`, columns of mode `kb`).
fn add_pair(a: &mut DMatrix<f64>, ka: usize, kb: usize, c1: C64, c2: C64) {
    let (r, c) = (2 * ka, 2 * kb);
    a[(r, c)] += (c1 + c2).im;
    a[(r, c + 1)] += (c1 - c2).re;
    a[(r + 1, c)] += -(c1 + c2).re;
    a[(r + 1, c + 1)] += (c1 - c2).im;
}

struct AssembleOptions {
    /// Admit phase-beam-splitter couplings with Phi outside {0, pi}. The
    /// classical response modules set this; the fluctuation path must not,
    /// since no matching noise model exists for those phases.
    classical: bool,
}

/// Builds (A, D) from the linearized equations around the given amplitudes.
fn assemble(
    sys: &ValidatedSystem,
    amps: &[C64],
    opts: &AssembleOptions,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = sys.n_modes();
    assert_eq!(amps.len(), n);
    let dim = 2 * n;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut d = DMatrix::<f64>::zeros(dim, dim);

    // effective detunings from the linearization point
    let mut det: Vec<f64> = sys.modes.iter().map(|m| m.detuning).collect();
    for c in &sys.couplings {
        match c.kind {
            CouplingKind::Dispersive => {
                det[c.a] += c.sign * c.rate * std::f64::consts::SQRT_2 * amps[c.b].re;
            }
            CouplingKind::CrossKerr => {
                det[c.a] += c.rate * amps[c.b].norm_sqr();
                det[c.b] += c.rate * amps[c.a].norm_sqr();
            }
            _ => {}
        }
    }
    for (k, m) in sys.modes.iter().enumerate() {
        if let Some(km) = m.spec.self_kerr {
            det[k] += 2.0 * km * amps[k].norm_sqr();
        }
    }

    for (k, m) in sys.modes.iter().enumerate() {
        let (r, kappa, nth) = (2 * k, m.spec.decay, m.spec.thermal_occupation);
        if m.spec.kind.is_mechanical() {
            a[(r, r + 1)] += det[k];
            a[(r + 1, r)] += -det[k];
            a[(r + 1, r + 1)] += -kappa;
            d[(r + 1, r + 1)] = kappa * (2.0 * nth + 1.0);
        } else {
            a[(r, r)] += -kappa;
            a[(r, r + 1)] += det[k];
            a[(r + 1, r)] += -det[k];
            a[(r + 1, r + 1)] += -kappa;
            d[(r, r)] = kappa * (2.0 * nth + 1.0);
            d[(r + 1, r + 1)] = kappa * (2.0 * nth + 1.0);
        }
        if let Some(km) = m.spec.self_kerr {
            // full Kerr linearization: dm' += -i 2K (2|a|^2 dm + a^2 dm');
            // half the normal shift already sits in det[k], the rest plus
            // the anomalous part enter here. The Duffing middle branch is
            // only classified unstable with the anomalous term present.
            let x = amps[k].norm_sqr();
            add_pair(
                &mut a,
                k,
                k,
                C64::new(2.0 * km * x, 0.0),
                2.0 * km * amps[k] * amps[k],
            );
        }
    }

    for c in &sys.couplings {
        let g = C64::new(c.rate, 0.0);
        match c.kind {
            CouplingKind::BeamSplitter => {
                add_pair(&mut a, c.a, c.b, g, C64::new(0.0, 0.0));
                add_pair(&mut a, c.b, c.a, g, C64::new(0.0, 0.0));
            }
            CouplingKind::PhaseBeamSplitter => {
                let on_axis = c.phase.abs() < 1e-12
                    || (c.phase - std::f64::consts::PI).abs() < 1e-12;
                if !opts.classical && !on_axis {
                    return Err(Error::Topology(format!(
                        "phase-beam-splitter with Phi = {:.6} has no consistent \
                         fluctuation-dissipation model; only the classical response \
                         modules admit it",
                        c.phase
                    )));
                }
                add_pair(&mut a, c.a, c.b, g, C64::new(0.0, 0.0));
                add_pair(
                    &mut a,
                    c.b,
                    c.a,
                    g * C64::from_polar(1.0, c.phase),
                    C64::new(0.0, 0.0),
                );
            }
            CouplingKind::ParametricAmplification => {
                add_pair(&mut a, c.a, c.b, C64::new(0.0, 0.0), g);
                add_pair(&mut a, c.b, c.a, C64::new(0.0, 0.0), g);
            }
            CouplingKind::Dispersive => {
                // H_lin = s g (m* dm + m dm') dq: both sides carry
                // cpair = s g <alpha_a>/sqrt2
                let cc = c.sign * c.rate * amps[c.a] / std::f64::consts::SQRT_2;
                add_pair(&mut a, c.a, c.b, cc, cc);
                add_pair(&mut a, c.b, c.a, cc.conj(), cc);
            }
            CouplingKind::CrossKerr => {} // frequency pulling only
        }
    }
    Ok((a, d))
}

/// Builds the drift and diffusion model around a solved steady state. For
/// systems carrying a two-tone drive this dispatches to [`two_tone_model`]
/// (the static steady state does not exist there).
pub fn build_drift(sys: &ValidatedSystem, steady: &SteadyState) -> Result<DriftModel> {
    if sys.two_tone_drive().is_some() {
        return two_tone_model(sys);
    }
    let (a, d) = assemble(sys, &steady.amplitudes, &AssembleOptions { classical: false })?;
    Ok(DriftModel {
        ordering: sys.quadrature_ordering(),
        a,
        d,
        periodic: None,
    })
}

/// Classical drift matrix around arbitrary amplitudes; admits
/// phase-beam-splitter couplings with any phase. Used by the response
/// machinery and for fixed-point stability classification.
pub(crate) fn classical_drift(sys: &ValidatedSystem, amps: &[C64]) -> Result<DMatrix<f64>> {
    let (a, _) = assemble(sys, amps, &AssembleOptions { classical: true })?;
    Ok(a)
}

/// Stability of the fixed point at the given amplitudes (classical drift
/// spectrum).
pub(crate) fn amplitudes_are_stable(sys: &ValidatedSystem, amps: &[C64]) -> Result<bool> {
    let a = classical_drift(sys, amps)?;
    Ok(is_stable_matrix(&a).0)
}

/// Stability threshold: max Re eig(A) < -1e-9 ||A||_F. Marginal models count
/// as unstable, since the Lyapunov solve is ill-conditioned there.
pub fn is_stable_matrix(a: &DMatrix<f64>) -> (bool, f64) {
    let abscissa = linalg::spectral_abscissa(a);
    (abscissa < -1e-9 * linalg::fro(a), abscissa)
}

/// Stability of the static part of a drift model; returns the spectral
/// abscissa alongside the verdict.
pub fn is_stable(model: &DriftModel) -> (bool, f64) {
    is_stable_matrix(&model.a)
}

/// Steady-state covariance matrix from A V + V A^T + D = 0.
pub fn solve_lyapunov(model: &DriftModel) -> Result<CovarianceMatrix> {
    let (stable, abscissa) = is_stable(model);
    if !stable {
        return Err(Error::UnstableModel { abscissa });
    }
    let v = linalg::solve_lyapunov(&model.a, &model.d)?;
    Ok(CovarianceMatrix {
        v,
        ordering: model.ordering.clone(),
    })
}

/// Time-resolved covariance matrices.
#[derive(Debug, Clone)]
pub struct CovarianceTrajectory {
    pub times: Vec<f64>,
    pub covariances: Vec<DMatrix<f64>>,
    pub ordering: String,
}

impl CovarianceTrajectory {
    pub fn last(&self) -> CovarianceMatrix {
        CovarianceMatrix {
            v: self.covariances.last().expect("non-empty trajectory").clone(),
            ordering: self.ordering.clone(),
        }
    }
}

/// Integrates dV/dt = A(t) V + V A(t)^T + D from `v0` over `horizon`,
/// sampling `samples` points (plus the initial one).
pub fn evolve_cm(
    model: &DriftModel,
    v0: &CovarianceMatrix,
    horizon: f64,
    samples: usize,
) -> Result<CovarianceTrajectory> {
    let dim = model.dim();
    assert_eq!(v0.v.nrows(), dim, "covariance dimension mismatch");
    let y0: Vec<f64> = v0.v.iter().copied().collect();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let v = DMatrix::<f64>::from_column_slice(dim, dim, y);
        let a = model.a_at(t);
        let dv = &a * &v + &v * a.transpose() + &model.d;
        for (o, s) in dy.iter_mut().zip(dv.iter()) {
            *o = *s;
        }
    };
    let opts = OdeOptions {
        rtol: 1e-10,
        atol: 1e-13,
        norm_bound: 1e15,
        ..OdeOptions::default()
    };
    let mut times = Vec::with_capacity(samples + 1);
    let mut covs = Vec::with_capacity(samples + 1);
    let rate = samples as f64 / horizon;
    let res = ode::integrate(rhs, 0.0, horizon, &y0, rate, &opts, |t, y| {
        let v = DMatrix::<f64>::from_column_slice(dim, dim, y);
        times.push(t);
        covs.push((&v + v.transpose()) * 0.5);
    });
    match res {
        Ok(()) => Ok(CovarianceTrajectory {
            times,
            covariances: covs,
            ordering: model.ordering.clone(),
        }),
        Err(Error::Runaway { time, bound }) => Err(Error::DynamicalInstability {
            time,
            norm: bound,
        }),
        Err(e) => Err(e),
    }
}

/// Iterates a periodic model to its periodic steady orbit (period-to-period
/// Frobenius change below 1e-8 relative, at most 10^4 periods), then returns
/// one period sampled at `samples_per_period` points.
pub fn periodic_steady_orbit(
    model: &DriftModel,
    samples_per_period: usize,
) -> Result<CovarianceTrajectory> {
    let period = model.period().ok_or_else(|| {
        Error::Topology("periodic_steady_orbit needs a periodic drift model".into())
    })?;
    // seed with the RWA steady state when stable, else vacuum
    let mut v = match solve_lyapunov(&DriftModel {
        periodic: None,
        ..model.clone()
    }) {
        Ok(cm) => cm.v,
        Err(_) => DMatrix::<f64>::identity(model.dim(), model.dim()) * 0.5,
    };
    let mut converged = false;
    for _ in 0..10_000 {
        let traj = evolve_cm(
            model,
            &CovarianceMatrix {
                v: v.clone(),
                ordering: model.ordering.clone(),
            },
            period,
            1,
        )?;
        let v_next = traj.covariances.last().unwrap().clone();
        let change = linalg::fro(&(&v_next - &v)) / linalg::fro(&v_next).max(1.0);
        v = v_next;
        if change < 1e-8 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: 10_000,
            residual: f64::NAN,
        });
    }
    evolve_cm(
        model,
        &CovarianceMatrix {
            v,
            ordering: model.ordering.clone(),
        },
        period,
        samples_per_period,
    )
}

// ---------------------------------------------------------------------------
// Two-tone (reservoir-engineering) models
// ---------------------------------------------------------------------------

/// Two-tone steady response and effective couplings.
#[derive(Debug, Clone)]
pub struct TwoToneData {
    /// Magnon response amplitude at the red tone (w_m - w_b).
    pub m_minus: C64,
    /// Magnon response amplitude at the blue tone (w_m + w_b).
    pub m_plus: C64,
    /// Beam-splitter coupling G_- = g_mb m_- / sqrt2.
    pub g_minus: C64,
    /// Parametric coupling G_+ = g_mb m_+ / sqrt2.
    pub g_plus: C64,
    pub omega_b: f64,
}

/// Resolves the two-tone reservoir-engineering configuration: a magnon
/// driven at w_m +- w_b, dispersively coupled to one mechanical mode, with
/// an optional beam-splitter cavity.
pub fn two_tone_data(sys: &ValidatedSystem) -> Result<TwoToneData> {
    let di = sys
        .two_tone_drive()
        .ok_or_else(|| Error::Topology("no two-tone drive declared".into()))?;
    let drive = &sys.drives[di];
    let magnon = drive.target;
    if sys.modes[magnon].spec.kind != ModeKind::Magnon {
        return Err(Error::Topology(
            "two-tone reservoir engineering drives the magnon mode".into(),
        ));
    }
    let disp = sys
        .couplings
        .iter()
        .find(|c| c.kind == CouplingKind::Dispersive && c.a == magnon)
        .ok_or_else(|| {
            Error::Topology("two-tone model needs a dispersive magnon-mechanics coupling".into())
        })?;
    let mech = disp.b;
    let omega_b = sys.modes[mech].spec.frequency;
    let omega_m = sys.modes[magnon].spec.frequency;

    let cavity = sys.couplings.iter().find_map(|c| {
        (c.kind == CouplingKind::BeamSplitter && (c.a == magnon || c.b == magnon)).then(|| {
            let other = if c.a == magnon { c.b } else { c.a };
            (other, c.rate)
        })
    });

    let response = |tone: &crate::model::ValidatedTone| -> C64 {
        let dm = omega_m - tone.frequency;
        let mut denom = C64::new(sys.modes[magnon].spec.decay, dm);
        if let Some((cav, g)) = cavity {
            let da = sys.modes[cav].spec.frequency - tone.frequency;
            denom += g * g / C64::new(sys.modes[cav].spec.decay, da);
        }
        tone.injection / denom
    };

    let mut m_plus = C64::new(0.0, 0.0);
    let mut m_minus = C64::new(0.0, 0.0);
    for t in &drive.tones {
        if t.frequency > omega_m {
            m_plus = response(t);
        } else {
            m_minus = response(t);
        }
    }
    let scale = disp.sign * disp.rate / std::f64::consts::SQRT_2;
    Ok(TwoToneData {
        m_minus,
        m_plus,
        g_minus: scale * m_minus,
        g_plus: scale * m_plus,
        omega_b,
    })
}

/// Builds the two-tone drift model in the interaction picture: the static
/// part is the rotating-wave model, the periodic part carries the
/// counter-rotating corrections oscillating at 2 w_b.
pub fn two_tone_model(sys: &ValidatedSystem) -> Result<DriftModel> {
    let data = two_tone_data(sys)?;
    let di = sys.two_tone_drive().unwrap();
    let magnon = sys.drives[di].target;
    let disp = sys
        .couplings
        .iter()
        .find(|c| c.kind == CouplingKind::Dispersive && c.a == magnon)
        .unwrap();
    let mech = disp.b;
    let omega_m = sys.modes[magnon].spec.frequency;

    let n = sys.n_modes();
    let dim = 2 * n;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut d = DMatrix::<f64>::zeros(dim, dim);

    for (k, m) in sys.modes.iter().enumerate() {
        let (r, kappa, nth) = (2 * k, m.spec.decay, m.spec.thermal_occupation);
        // interaction picture at w_m (bosonic) / w_b (mechanical): the
        // mechanical bath is the RWA bosonic one here, as in the two-tone
        // quantum Langevin equations
        let det = if m.spec.kind.is_mechanical() {
            0.0
        } else {
            m.spec.frequency - omega_m
        };
        a[(r, r)] += -kappa;
        a[(r, r + 1)] += -det;
        a[(r + 1, r)] += det;
        a[(r + 1, r + 1)] += -kappa;
        d[(r, r)] = kappa * (2.0 * nth + 1.0);
        d[(r + 1, r + 1)] = kappa * (2.0 * nth + 1.0);
    }

    for c in &sys.couplings {
        match c.kind {
            CouplingKind::BeamSplitter => {
                let g = C64::new(c.rate, 0.0);
                add_pair(&mut a, c.a, c.b, g, C64::new(0.0, 0.0));
                add_pair(&mut a, c.b, c.a, g, C64::new(0.0, 0.0));
            }
            CouplingKind::Dispersive if c.a == magnon && c.b == mech => {}
            other => {
                return Err(Error::Topology(format!(
                    "two-tone model admits only the magnon-mechanics dispersive coupling \
                     and magnon-cavity beam splitters (found {other:?})"
                )))
            }
        }
    }

    // RWA part: dm' (G_- db + G_+ db') + h.c.
    let (gm, gp) = (data.g_minus, data.g_plus);
    add_pair(&mut a, magnon, mech, gm, gp);
    add_pair(&mut a, mech, magnon, gm.conj(), gp);

    // counter-rotating part at 2 w_b:
    //   dm/dt += -i (G_+ e^{-2iwt} db + G_- e^{+2iwt} db')
    //   db/dt += -i (G_+* e^{+2iwt} dm + G_- e^{+2iwt} dm')
    let mut a_cos = DMatrix::<f64>::zeros(dim, dim);
    let mut a_sin = DMatrix::<f64>::zeros(dim, dim);
    let i = C64::i();
    // cos components use the bare coefficients, sin components pick up
    // +i c per e^{+i W t} and -i c per e^{-i W t}
    add_pair(&mut a_cos, magnon, mech, gp, gm);
    add_pair(&mut a_sin, magnon, mech, -i * gp, i * gm);
    add_pair(&mut a_cos, mech, magnon, gp.conj(), gm);
    add_pair(&mut a_sin, mech, magnon, i * gp.conj(), i * gm);

    Ok(DriftModel {
        ordering: sys.quadrature_ordering(),
        a,
        d,
        periodic: Some(PeriodicPart {
            a_cos,
            a_sin,
            frequency: 2.0 * data.omega_b,
        }),
    })
}

/// Bogoliubov transformation of the two-tone couplings:
/// r = ln[(G_- + G_+)/(G_- - G_+)]/2 and the cooling rate
/// script-G = sqrt(G_-^2 - G_+^2). Requires G_- > G_+ >= 0.
pub fn bogoliubov_parameters(g_plus: f64, g_minus: f64) -> Result<(f64, f64)> {
    if g_plus < 0.0 || g_minus <= g_plus {
        return Err(Error::Topology(format!(
            "Bogoliubov parameters need G_- > G_+ >= 0 (got G_+ = {g_plus:e}, G_- = {g_minus:e})"
        )));
    }
    let r = 0.5 * ((g_minus + g_plus) / (g_minus - g_plus)).ln();
    let rate = (g_minus * g_minus - g_plus * g_plus).sqrt();
    Ok((r, rate))
}

// ---------------------------------------------------------------------------
// Polariton analysis
// ---------------------------------------------------------------------------

/// Hybridized cavity-magnon mode data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolaritonAnalysis {
    /// Upper/lower polariton frequencies (rad/s).
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// Polariton decay rates from the mixing angle.
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    /// Mixing angle theta in (0, pi/2); pi/4 at resonance.
    pub theta: f64,
    /// sqrt(4 g^2 + Delta_am^2) - w_b, when a mechanical mode exists.
    pub triple_resonance_gap: Option<f64>,
    /// kappa_e - kappa_int = kappa_m balance (resonant-case condition).
    pub cpa_satisfied: bool,
    /// kappa_e - kappa_int - kappa_m residual (rad/s), when the split is
    /// declared.
    pub cpa_residual: Option<f64>,
}

/// Diagonalizes the coherent cavity-magnon block. The system must contain
/// exactly one cavity-magnon beam-splitter pair.
pub fn polariton_analysis(sys: &ValidatedSystem) -> Result<PolaritonAnalysis> {
    let mut pair = None;
    for c in &sys.couplings {
        if c.kind != CouplingKind::BeamSplitter {
            continue;
        }
        let (ka, kb) = (sys.modes[c.a].spec.kind, sys.modes[c.b].spec.kind);
        let cav_mag = (ka.is_cavity() && kb == ModeKind::Magnon)
            || (kb.is_cavity() && ka == ModeKind::Magnon);
        if cav_mag {
            if pair.is_some() {
                return Err(Error::Topology(
                    "polariton analysis needs exactly one cavity-magnon beam-splitter pair"
                        .into(),
                ));
            }
            let (cav, mag) = if ka.is_cavity() { (c.a, c.b) } else { (c.b, c.a) };
            pair = Some((cav, mag, c.rate));
        }
    }
    let (cav, mag, g) = pair.ok_or_else(|| {
        Error::Topology("polariton analysis needs a cavity-magnon beam-splitter coupling".into())
    })?;

    let wa = sys.modes[cav].spec.frequency;
    let wm = sys.modes[mag].spec.frequency;
    let (ka, km) = (sys.modes[cav].spec.decay, sys.modes[mag].spec.decay);
    let delta_am = wa - wm;
    let split = (4.0 * g * g + delta_am * delta_am).sqrt();
    let mean = 0.5 * (wa + wm);
    let theta = 0.5 * (2.0 * g).atan2(delta_am);
    let (s2, c2) = (theta.sin() * theta.sin(), theta.cos() * theta.cos());

    let mech = sys.indices_of(ModeKind::Mechanical);
    let triple_resonance_gap = mech
        .first()
        .map(|&b| split - sys.modes[b].spec.frequency);

    let cpa_residual = match (
        sys.modes[cav].spec.external_decay,
        sys.modes[cav].spec.internal_decay,
    ) {
        (Some(ke), Some(ki)) => Some(ke - ki - km),
        _ => None,
    };
    let cpa_satisfied = cpa_residual.is_some_and(|r| r.abs() <= 1e-9 * km.max(1.0));

    Ok(PolaritonAnalysis {
        omega_plus: mean + 0.5 * split,
        omega_minus: mean - 0.5 * split,
        // A_+ = a cos(theta) + m sin(theta)
        kappa_plus: ka * c2 + km * s2,
        kappa_minus: ka * s2 + km * c2,
        theta,
        triple_resonance_gap,
        cpa_satisfied,
        cpa_residual,
    })
}
