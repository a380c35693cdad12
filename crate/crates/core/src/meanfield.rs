//! Nonlinear semiclassical steady states, Kerr multistability, and
//! hysteresis sweeps.
//!
//! Mechanical modes are described by the position/momentum pair (q, p) of
//! the Brownian damping model (q' = w_b p, p' = -w_b q - gamma_b p - force);
//! for storage they are folded into the complex amplitude b = (q + i p)/sqrt2.

use crate::cubic;
use crate::error::{Error, Result};
use crate::fluctuations;
use crate::model::{CouplingKind, ValidatedSystem};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Multistability branch label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Lower,
    Middle,
    Upper,
    Unique,
}

/// Self-consistent semiclassical steady state and the induced linearization
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Complex mean amplitude per mode, declaration order; mechanical modes
    /// store (q + i p)/sqrt2.
    pub amplitudes: Vec<C64>,
    /// Effective detunings (rad/s): Delta~ for rotating modes including
    /// Kerr and magnomechanical shifts, w~_b for mechanical modes.
    pub effective_detunings: Vec<f64>,
    /// Linearized coupling G = i sqrt2 s g <alpha_a> per dispersive
    /// coupling, indexed like `ValidatedSystem::couplings`.
    pub effective_couplings: Vec<Option<C64>>,
    pub branch: Branch,
    pub stable: bool,
    /// Final relative residual of the Newton solve.
    pub residual: f64,
}

impl SteadyState {
    /// Mechanical position <q> of mode `index`.
    pub fn q(&self, index: usize) -> f64 {
        std::f64::consts::SQRT_2 * self.amplitudes[index].re
    }

    /// Mechanical momentum <p> of mode `index`.
    pub fn p(&self, index: usize) -> f64 {
        std::f64::consts::SQRT_2 * self.amplitudes[index].im
    }

    /// Excitation number |<o>|^2 of mode `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

const MAX_NEWTON_ITERS: usize = 200;
const NEWTON_RTOL: f64 = 1e-12;
const NEWTON_DAMPING: f64 = 0.5;

/// Frame-resonant injection per mode: the static drive terms entering the
/// steady-state equations. Errors when a nonzero tone does not rotate with
/// the frame (no static steady state exists then).
fn static_injections(sys: &ValidatedSystem) -> Result<Vec<C64>> {
    let mut lam = vec![C64::new(0.0, 0.0); sys.n_modes()];
    let mut frame_tones = 0usize;
    for d in &sys.drives {
        for t in &d.tones {
            if t.amplitude == 0.0 {
                continue;
            }
            if t.detuning.abs() <= 1e-9 * t.frequency.abs() {
                lam[d.target] += t.injection;
                frame_tones += 1;
            } else {
                return Err(Error::Topology(format!(
                    "drive tone at detuning {:e} rad/s from the frame has no static steady \
                     state; use the two-tone covariance machinery for bichromatic drives",
                    t.detuning
                )));
            }
        }
    }
    if frame_tones > 1 {
        return Err(Error::Topology(
            "more than one frame-resonant drive tone".into(),
        ));
    }
    Ok(lam)
}

/// Nonlinear steady-state residual F(alpha) and its real 2N x 2N Jacobian.
fn residual_and_jacobian(
    sys: &ValidatedSystem,
    lam: &[C64],
    amps: &[C64],
    want_jac: bool,
) -> (Vec<C64>, Option<DMatrix<f64>>) {
    let n = sys.n_modes();
    let i = C64::i();
    let mut f = vec![C64::new(0.0, 0.0); n];
    // Wirtinger derivatives dF_k/d alpha_j and dF_k/d conj(alpha_j)
    let mut p = DMatrix::<C64>::zeros(n, n);
    let mut q = DMatrix::<C64>::zeros(n, n);

    for (k, m) in sys.modes.iter().enumerate() {
        let a = amps[k];
        if m.spec.kind.is_mechanical() {
            let gamma = m.spec.decay;
            // base pull assembled below via cross-Kerr terms
            f[k] += -i * m.detuning * a - 0.5 * gamma * (a - a.conj());
            p[(k, k)] += -i * m.detuning - C64::new(0.5 * gamma, 0.0);
            q[(k, k)] += C64::new(0.5 * gamma, 0.0);
        } else {
            f[k] += -(i * m.detuning + m.spec.decay) * a + lam[k];
            p[(k, k)] += -(i * m.detuning + m.spec.decay);
            if let Some(km) = m.spec.self_kerr {
                f[k] += -2.0 * i * km * a.norm_sqr() * a;
                p[(k, k)] += -4.0 * i * km * a.norm_sqr();
                q[(k, k)] += -2.0 * i * km * a * a;
            }
        }
    }

    for c in &sys.couplings {
        let (a, b) = (c.a, c.b);
        let (aa, ab) = (amps[a], amps[b]);
        match c.kind {
            CouplingKind::BeamSplitter => {
                f[a] += -i * c.rate * ab;
                f[b] += -i * c.rate * aa;
                p[(a, b)] += -i * c.rate;
                p[(b, a)] += -i * c.rate;
            }
            CouplingKind::PhaseBeamSplitter => {
                let ph = C64::from_polar(1.0, c.phase);
                f[a] += -i * c.rate * ab;
                f[b] += -i * c.rate * ph * aa;
                p[(a, b)] += -i * c.rate;
                p[(b, a)] += -i * c.rate * ph;
            }
            CouplingKind::ParametricAmplification => {
                f[a] += -i * c.rate * ab.conj();
                f[b] += -i * c.rate * aa.conj();
                q[(a, b)] += -i * c.rate;
                q[(b, a)] += -i * c.rate;
            }
            CouplingKind::Dispersive => {
                let s = c.sign;
                let g = c.rate;
                let qb = std::f64::consts::SQRT_2 * ab.re;
                // mode a: -i s g q_b alpha_a
                f[a] += -i * s * g * qb * aa;
                p[(a, a)] += -i * s * g * qb;
                let da = -i * s * g * aa / std::f64::consts::SQRT_2;
                p[(a, b)] += da;
                q[(a, b)] += da;
                // mechanical force on p: -s g |alpha_a|^2  ->  -i s g |a|^2 / sqrt2 in b
                f[b] += -i * s * g * aa.norm_sqr() / std::f64::consts::SQRT_2;
                p[(b, a)] += -i * s * g * aa.conj() / std::f64::consts::SQRT_2;
                q[(b, a)] += -i * s * g * aa / std::f64::consts::SQRT_2;
            }
            CouplingKind::CrossKerr => {
                let kx = c.rate;
                let (na, nb) = (aa.norm_sqr(), ab.norm_sqr());
                // bosonic partner: -i K n_b alpha_a
                f[a] += -i * kx * nb * aa;
                p[(a, a)] += -i * kx * nb;
                p[(a, b)] += -i * kx * aa * ab.conj();
                q[(a, b)] += -i * kx * aa * ab;
                // mechanical partner: frequency pull -i K n_a alpha_b
                f[b] += -i * kx * na * ab;
                p[(b, b)] += -i * kx * na;
                p[(b, a)] += -i * kx * ab * aa.conj();
                q[(b, a)] += -i * kx * ab * aa;
            }
        }
    }

    let jac = want_jac.then(|| {
        let mut j = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for k in 0..n {
            for l in 0..n {
                let (pp, qq) = (p[(k, l)], q[(k, l)]);
                let (sum, diff) = (pp + qq, pp - qq);
                j[(2 * k, 2 * l)] = sum.re;
                j[(2 * k, 2 * l + 1)] = -diff.im;
                j[(2 * k + 1, 2 * l)] = sum.im;
                j[(2 * k + 1, 2 * l + 1)] = diff.re;
            }
        }
        j
    });
    (f, jac)
}

fn residual_norm(f: &[C64]) -> f64 {
    f.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Damped Newton iteration on the complex amplitude vector with analytic
/// Jacobian; returns converged amplitudes and the relative residual.
fn newton_solve(
    sys: &ValidatedSystem,
    lam: &[C64],
    scale: f64,
    start: &[C64],
) -> Result<(Vec<C64>, f64)> {
    let n = sys.n_modes();
    let mut amps = start.to_vec();
    let (mut f, _) = residual_and_jacobian(sys, lam, &amps, false);
    let mut fnorm = residual_norm(&f);
    let mut iterations = 0usize;
    while fnorm > NEWTON_RTOL * scale {
        if iterations >= MAX_NEWTON_ITERS {
            return Err(Error::NonConvergence {
                iterations,
                residual: fnorm / scale,
            });
        }
        iterations += 1;
        let (_, jac) = residual_and_jacobian(sys, lam, &amps, true);
        let jac = jac.unwrap();
        let mut rhs = DVector::<f64>::zeros(2 * n);
        for k in 0..n {
            rhs[2 * k] = -f[k].re;
            rhs[2 * k + 1] = -f[k].im;
        }
        let step = jac.lu().solve(&rhs).ok_or(Error::NonConvergence {
            iterations,
            residual: fnorm / scale,
        })?;
        // damped line search: halve on residual increase
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<C64> = amps
                .iter()
                .enumerate()
                .map(|(k, a)| a + lambda * C64::new(step[2 * k], step[2 * k + 1]))
                .collect();
            let (ft, _) = residual_and_jacobian(sys, lam, &trial, false);
            let fn_t = residual_norm(&ft);
            if fn_t < fnorm || fn_t <= NEWTON_RTOL * scale {
                amps = trial;
                f = ft;
                fnorm = fn_t;
                accepted = true;
                break;
            }
            lambda *= NEWTON_DAMPING;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations,
                residual: fnorm / scale,
            });
        }
    }
    Ok((amps, fnorm / scale))
}

/// Solves the nonlinear mean-field equations. With an initial guess, the
/// Newton continuation returns the branch continuously connected to it.
/// When the iteration stalls between Duffing branches, the scalar-cubic
/// reduction (exhaustive for canonical topologies) provides the restart.
pub fn solve_steady(
    sys: &ValidatedSystem,
    initial_guess: Option<&[C64]>,
) -> Result<SteadyState> {
    let n = sys.n_modes();
    let lam = static_injections(sys)?;
    let scale = lam
        .iter()
        .map(|x| x.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let start: Vec<C64> = match initial_guess {
        Some(g) => {
            assert_eq!(g.len(), n, "initial guess length mismatch");
            g.to_vec()
        }
        None => vec![C64::new(0.0, 0.0); n],
    };

    let newton_err = match newton_solve(sys, &lam, scale, &start) {
        Ok((amps, residual)) => return Ok(finish_state(sys, amps, residual)),
        Err(e) => e,
    };

    // cubic fallback: seed the polish from the exhaustive root set
    let Ok(red) = reduce_to_cubic(sys) else {
        return Err(newton_err);
    };
    let [c0, c1, c2, c3] = red.coeffs;
    let roots: Vec<f64> = cubic::real_roots(c3, c2, c1, c0)
        .into_iter()
        .filter(|&x| x >= 0.0)
        .collect();
    let mut candidates: Vec<Vec<C64>> = roots
        .iter()
        .map(|&x| state_from_root(sys, &red, x).amplitudes)
        .collect();
    // branch continuity: nearest candidate to the seed first
    candidates.sort_by(|a, b| {
        let da: f64 = a
            .iter()
            .zip(start.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        let db: f64 = b
            .iter()
            .zip(start.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        da.partial_cmp(&db).unwrap()
    });
    for cand in candidates {
        if let Ok((amps, residual)) = newton_solve(sys, &lam, scale, &cand) {
            return Ok(finish_state(sys, amps, residual));
        }
    }
    Err(newton_err)
}

/// Assembles the derived steady-state data (effective detunings, linearized
/// couplings, stability flag, branch label) around converged amplitudes.
fn finish_state(sys: &ValidatedSystem, amps: Vec<C64>, residual: f64) -> SteadyState {
    let mut det: Vec<f64> = sys.modes.iter().map(|m| m.detuning).collect();
    let mut eff_g: Vec<Option<C64>> = vec![None; sys.couplings.len()];
    for (ci, c) in sys.couplings.iter().enumerate() {
        match c.kind {
            CouplingKind::Dispersive => {
                let qb = std::f64::consts::SQRT_2 * amps[c.b].re;
                det[c.a] += c.sign * c.rate * qb;
                eff_g[ci] =
                    Some(C64::i() * std::f64::consts::SQRT_2 * c.sign * c.rate * amps[c.a]);
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

    let stable = fluctuations::amplitudes_are_stable(sys, &amps).unwrap_or(false);
    let branch = classify_branch(sys, &amps).unwrap_or(Branch::Unique);

    SteadyState {
        amplitudes: amps,
        effective_detunings: det,
        effective_couplings: eff_g,
        branch,
        stable,
        residual,
    }
}

/// Substitutes amplitudes into the full nonlinear mean-field equations and
/// returns the residual relative to the drive amplitude.
pub fn steady_residual(sys: &ValidatedSystem, amps: &[C64]) -> Result<f64> {
    let lam = static_injections(sys)?;
    let scale = lam
        .iter()
        .map(|x| x.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let (f, _) = residual_and_jacobian(sys, &lam, amps, false);
    Ok(residual_norm(&f) / scale)
}

/// Data of the scalar-cubic reduction of the mean-field equations.
struct CubicReduction {
    /// Index of the driven (primary) bosonic mode.
    primary: usize,
    /// Index of the auxiliary bosonic mode (cavity), if present.
    auxiliary: Option<usize>,
    /// Net Kerr pull coefficient: 2 K_m - sum g_mb^2 / w_b.
    s_k: f64,
    /// Effective drive felt by the primary mode.
    lam_eff: C64,
    /// chi~ = 1/(i Delta_aux + kappa_aux) when an auxiliary mode exists.
    chi_aux: C64,
    g_bs: f64,
    /// Cubic coefficients in x = |m|^2, ascending powers.
    coeffs: [f64; 4],
}

fn reduce_to_cubic(sys: &ValidatedSystem) -> Result<CubicReduction> {
    let lam = static_injections(sys)?;
    let bosonic: Vec<usize> = (0..sys.n_modes())
        .filter(|&k| !sys.modes[k].spec.kind.is_mechanical())
        .collect();
    if bosonic.is_empty() || bosonic.len() > 2 {
        return Err(Error::Topology(format!(
            "cubic reduction needs one or two bosonic modes (got {})",
            bosonic.len()
        )));
    }
    for c in &sys.couplings {
        match c.kind {
            CouplingKind::BeamSplitter | CouplingKind::Dispersive => {}
            CouplingKind::CrossKerr => {} // negligible backreaction on the magnon line
            other => {
                return Err(Error::Topology(format!(
                    "cubic reduction does not admit {other:?} couplings"
                )))
            }
        }
    }
    // the primary mode is the one carrying the dispersive couplings, else
    // the driven one
    let disp_sources: Vec<usize> = sys
        .couplings
        .iter()
        .filter(|c| c.kind == CouplingKind::Dispersive)
        .map(|c| c.a)
        .collect();
    let primary = if let Some(&p) = disp_sources.first() {
        if disp_sources.iter().any(|&x| x != p) {
            return Err(Error::Topology(
                "cubic reduction needs all dispersive couplings anchored on one mode".into(),
            ));
        }
        p
    } else {
        *bosonic
            .iter()
            .find(|&&k| lam[k].norm() > 0.0)
            .unwrap_or(&bosonic[0])
    };
    let auxiliary = bosonic.iter().copied().find(|&k| k != primary);

    let mut g_bs = 0.0;
    if let Some(aux) = auxiliary {
        let mut found = false;
        for c in &sys.couplings {
            if c.kind == CouplingKind::BeamSplitter
                && ((c.a == primary && c.b == aux) || (c.a == aux && c.b == primary))
            {
                g_bs = c.rate;
                found = true;
            }
        }
        if !found {
            return Err(Error::Topology(
                "cubic reduction needs the two bosonic modes beam-splitter coupled".into(),
            ));
        }
    }

    let mut s_k = 2.0 * sys.modes[primary].spec.self_kerr.unwrap_or(0.0);
    for c in &sys.couplings {
        if c.kind == CouplingKind::Dispersive && c.a == primary {
            s_k -= c.rate * c.rate / sys.modes[c.b].spec.frequency;
        }
    }

    let (chi_aux, lam_eff) = match auxiliary {
        Some(aux) => {
            let ma = &sys.modes[aux];
            let chi = 1.0 / (C64::i() * ma.detuning + ma.spec.decay);
            (chi, lam[primary] - C64::i() * g_bs * lam[aux] * chi)
        }
        None => (C64::new(0.0, 0.0), lam[primary]),
    };

    let mp = &sys.modes[primary];
    let loaded = C64::new(mp.spec.decay, mp.detuning) + g_bs * g_bs * chi_aux;
    let p = loaded.re;
    let q = loaded.im;
    let coeffs = [
        -lam_eff.norm_sqr(),
        p * p + q * q,
        2.0 * q * s_k,
        s_k * s_k,
    ];
    Ok(CubicReduction {
        primary,
        auxiliary,
        s_k,
        lam_eff,
        chi_aux,
        g_bs,
        coeffs,
    })
}

/// Reconstructs the full steady state from a root x = |m|^2 of the cubic.
fn state_from_root(sys: &ValidatedSystem, red: &CubicReduction, x: f64) -> SteadyState {
    let mp = &sys.modes[red.primary];
    let denom = C64::new(mp.spec.decay, mp.detuning + red.s_k * x)
        + red.g_bs * red.g_bs * red.chi_aux;
    let m = red.lam_eff / denom;
    let mut amps = vec![C64::new(0.0, 0.0); sys.n_modes()];
    amps[red.primary] = m;
    if let Some(aux) = red.auxiliary {
        let lam = static_injections(sys).expect("validated by reduce_to_cubic");
        amps[aux] = (lam[aux] - C64::i() * red.g_bs * m)
            / C64::new(sys.modes[aux].spec.decay, sys.modes[aux].detuning);
    }
    for c in &sys.couplings {
        if c.kind == CouplingKind::Dispersive && c.a == red.primary {
            let qb = -c.sign * c.rate * x / sys.modes[c.b].spec.frequency;
            amps[c.b] = C64::new(qb / std::f64::consts::SQRT_2, 0.0);
        }
    }
    finish_state(sys, amps, 0.0)
}

/// Converts the complex mean-field equation of a canonical (or single driven
/// magnon) topology into a real cubic in x = |m|^2 and returns all real
/// non-negative roots with stability flags, ascending in x.
pub fn magnon_cubic_roots(sys: &ValidatedSystem) -> Result<Vec<(f64, bool)>> {
    let red = reduce_to_cubic(sys)?;
    let [c0, c1, c2, c3] = red.coeffs;
    let mut roots: Vec<f64> = cubic::real_roots(c3, c2, c1, c0)
        .into_iter()
        .filter(|&x| x >= 0.0)
        .collect();
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    Ok(roots
        .into_iter()
        .map(|x| {
            let st = state_from_root(sys, &red, x);
            (x, st.stable)
        })
        .collect())
}

/// Discriminant of the mean-field cubic as a function of the same reduction;
/// zero crossings mark the turning points of the bistable window.
pub fn cubic_discriminant(sys: &ValidatedSystem) -> Result<f64> {
    let red = reduce_to_cubic(sys)?;
    let [c0, c1, c2, c3] = red.coeffs;
    Ok(cubic::discriminant(c3, c2, c1, c0))
}

fn classify_branch(sys: &ValidatedSystem, amps: &[C64]) -> Option<Branch> {
    let red = reduce_to_cubic(sys).ok()?;
    let [c0, c1, c2, c3] = red.coeffs;
    let roots: Vec<f64> = cubic::real_roots(c3, c2, c1, c0)
        .into_iter()
        .filter(|&x| x >= 0.0)
        .collect();
    if roots.len() < 3 {
        return Some(Branch::Unique);
    }
    let x = amps[red.primary].norm_sqr();
    let nearest = roots
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - x).abs().partial_cmp(&(*b - x).abs()).unwrap()
        })?
        .0;
    Some(match nearest {
        0 => Branch::Lower,
        1 => Branch::Middle,
        _ => Branch::Upper,
    })
}

/// Kerr-shifted frequencies: w~_m = w_m + 2 K_m |M|^2, w~_b = w_b + K_cross |M|^2.
pub fn kerr_shifts(
    omega_m: f64,
    omega_b: f64,
    magnon_population: f64,
    k_m: f64,
    k_cross: f64,
) -> (f64, f64) {
    (
        omega_m + 2.0 * k_m * magnon_population,
        omega_b + k_cross * magnon_population,
    )
}

/// Sweepable scalar parameters of a validated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Amplitude of one drive tone: `drive:<target>:amplitude[:tone]`.
    DriveAmplitude { target: String, tone: usize },
    /// Mode frequency: `mode:<label>:frequency`.
    ModeFrequency { label: String },
    /// Coupling rate: `coupling:<a>:<b>:rate`.
    CouplingRate { mode_a: String, mode_b: String },
}

impl SweepParameter {
    /// Parses a textual parameter path.
    pub fn parse(path: &str) -> Result<Self> {
        let parts: Vec<&str> = path.split(':').collect();
        match parts.as_slice() {
            ["drive", target, "amplitude"] => Ok(SweepParameter::DriveAmplitude {
                target: target.to_string(),
                tone: 0,
            }),
            ["drive", target, "amplitude", tone] => Ok(SweepParameter::DriveAmplitude {
                target: target.to_string(),
                tone: tone
                    .parse()
                    .map_err(|_| Error::Format(format!("bad tone index in '{path}'")))?,
            }),
            ["mode", label, "frequency"] => Ok(SweepParameter::ModeFrequency {
                label: label.to_string(),
            }),
            ["coupling", a, b, "rate"] => Ok(SweepParameter::CouplingRate {
                mode_a: a.to_string(),
                mode_b: b.to_string(),
            }),
            _ => Err(Error::Format(format!(
                "unrecognized sweep parameter path '{path}' \
                 (expected drive:<target>:amplitude[:tone], mode:<label>:frequency, \
                 or coupling:<a>:<b>:rate)"
            ))),
        }
    }

    fn apply(&self, sys: &ValidatedSystem, value: f64) -> Result<ValidatedSystem> {
        let mut spec = sys.to_spec();
        match self {
            SweepParameter::DriveAmplitude { target, tone } => {
                let d = spec
                    .drives
                    .iter_mut()
                    .find(|d| &d.target == target)
                    .ok_or_else(|| Error::Format(format!("no drive on '{target}'")))?;
                let t = d.tones.get_mut(*tone).ok_or_else(|| {
                    Error::Format(format!("drive on '{target}' has no tone {tone}"))
                })?;
                t.amplitude = value;
            }
            SweepParameter::ModeFrequency { label } => {
                let m = spec
                    .modes
                    .iter_mut()
                    .find(|m| &m.label == label)
                    .ok_or_else(|| Error::Format(format!("no mode '{label}'")))?;
                m.frequency = value;
            }
            SweepParameter::CouplingRate { mode_a, mode_b } => {
                let c = spec
                    .couplings
                    .iter_mut()
                    .find(|c| {
                        (&c.mode_a == mode_a && &c.mode_b == mode_b)
                            || (&c.mode_a == mode_b && &c.mode_b == mode_a)
                    })
                    .ok_or_else(|| {
                        Error::Format(format!("no coupling between '{mode_a}' and '{mode_b}'"))
                    })?;
                c.rate = value;
            }
        }
        crate::model::validate_system(&spec)
    }
}

/// Sweep direction; values must be monotone accordingly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepDirection {
    Forward,
    Backward,
}

/// One step of a hysteresis sweep.
#[derive(Debug, Clone)]
pub struct SweepStep {
    pub value: f64,
    pub state: SteadyState,
}

/// Hysteresis sweep result: per-step states plus detected jump indices.
#[derive(Debug, Clone)]
pub struct SweepTrace {
    pub parameter: SweepParameter,
    pub direction: SweepDirection,
    pub steps: Vec<SweepStep>,
    /// Indices i where the state jumped discontinuously between steps
    /// i-1 and i.
    pub jumps: Vec<usize>,
}

/// Sweeps a parameter along `values`, seeding each solve with the previous
/// step's amplitudes (branch continuation).
pub fn sweep_hysteresis(
    sys: &ValidatedSystem,
    parameter: &SweepParameter,
    values: &[f64],
    direction: SweepDirection,
) -> Result<SweepTrace> {
    let monotone = values.windows(2).all(|w| match direction {
        SweepDirection::Forward => w[1] >= w[0],
        SweepDirection::Backward => w[1] <= w[0],
    });
    if !monotone {
        return Err(Error::Format(
            "sweep values are not monotone in the stated direction".into(),
        ));
    }
    let mut steps: Vec<SweepStep> = Vec::with_capacity(values.len());
    let mut jumps = Vec::new();
    let mut seed: Option<Vec<C64>> = None;
    for (i, &v) in values.iter().enumerate() {
        let sys_i = parameter.apply(sys, v)?;
        // when the seeded branch ceases to exist at a fold, the Newton
        // continuation stalls; the physical system jumps, so retry cold
        let mut state = solve_steady(&sys_i, seed.as_deref())
            .or_else(|_| solve_steady(&sys_i, None))
            .map_err(|e| Error::SweepStep {
                step: i,
                value: v,
                source: Box::new(e),
            })?;
        // next to a fold the Newton step can land on the coexisting middle
        // branch; a swept experiment only ever occupies stable branches, so
        // move to the nearest stable cubic root when one exists
        if !state.stable {
            if let Ok(red) = reduce_to_cubic(&sys_i) {
                let [c0, c1, c2, c3] = red.coeffs;
                let x0 = state.amplitudes[red.primary].norm_sqr();
                let nearest_stable = cubic::real_roots(c3, c2, c1, c0)
                    .into_iter()
                    .filter(|&x| x >= 0.0)
                    .map(|x| (x, state_from_root(&sys_i, &red, x)))
                    .filter(|(_, st)| st.stable)
                    .min_by(|(xa, _), (xb, _)| {
                        (xa - x0)
                            .abs()
                            .partial_cmp(&(xb - x0).abs())
                            .unwrap()
                    });
                if let Some((_, st)) = nearest_stable {
                    if let Ok(polished) = solve_steady(&sys_i, Some(&st.amplitudes)) {
                        if polished.stable {
                            state = polished;
                        }
                    }
                }
            }
        }
        seed = Some(state.amplitudes.clone());
        steps.push(SweepStep { value: v, state });
    }
    // a jump is an isolated step change far above both neighbouring
    // increments; continuous fold steepening grows gradually instead
    let deltas: Vec<f64> = steps
        .windows(2)
        .map(|w| {
            w[1].state
                .amplitudes
                .iter()
                .zip(w[0].state.amplitudes.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    for (i, &d) in deltas.iter().enumerate() {
        let prev = if i > 0 { deltas[i - 1] } else { f64::NAN };
        let next = if i + 1 < deltas.len() {
            deltas[i + 1]
        } else {
            f64::NAN
        };
        let neighbor = prev.max(next); // NaN-tolerant: max(NaN, x) = x
        let scale: f64 = steps[i]
            .state
            .amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if d > 5.0 * neighbor && d > 0.1 * scale.max(1e-300) {
            jumps.push(i + 1);
        }
    }
    Ok(SweepTrace {
        parameter: parameter.clone(),
        direction,
        steps,
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonical_spec, validate_system, CouplingSpec, DriveSpec, DriveTone};
    use approx::assert_relative_eq;

    fn canonical() -> ValidatedSystem {
        validate_system(&canonical_spec()).unwrap()
    }

    #[test]
    fn undriven_system_sits_at_zero() {
        let mut spec = canonical_spec();
        spec.drives[0].tones[0].amplitude = 0.0;
        let sys = validate_system(&spec).unwrap();
        let ss = solve_steady(&sys, None).unwrap();
        for a in &ss.amplitudes {
            assert_eq!(*a, C64::new(0.0, 0.0));
        }
        assert!(ss.stable);
    }

    /// Independent oracle: joint 2x2 complex linear solve of the
    /// cavity/magnon lines for g_mb = 0.
    fn two_mode_oracle(sys: &ValidatedSystem, lam_m: C64) -> (C64, C64) {
        let (ka, da) = (sys.modes[0].spec.decay, sys.modes[0].detuning);
        let (km, dm) = (sys.modes[1].spec.decay, sys.modes[1].detuning);
        let g = sys.couplings[0].rate;
        // [ (i da + ka)   i g      ] [a]   [0    ]
        // [ i g           (i dm+km)] [m] = [lam_m]
        let d11 = C64::new(ka, da);
        let d22 = C64::new(km, dm);
        let ig = C64::i() * g;
        let det = d11 * d22 - ig * ig;
        let a = -ig * lam_m / det;
        let m = d11 * lam_m / det;
        (a, m)
    }

    #[test]
    fn linear_limit_matches_closed_form() {
        let mut spec = canonical_spec();
        spec.couplings[1].rate = 0.0; // g_mb = 0
        let sys = validate_system(&spec).unwrap();
        let ss = solve_steady(&sys, None).unwrap();
        let lam_m = C64::new(sys.drives[0].tones[0].amplitude, 0.0);
        let (a, m) = two_mode_oracle(&sys, lam_m);
        assert_relative_eq!(ss.amplitudes[0].re, a.re, max_relative = 1e-12);
        assert_relative_eq!(ss.amplitudes[0].im, a.im, max_relative = 1e-12);
        assert_relative_eq!(ss.amplitudes[1].re, m.re, max_relative = 1e-12);
        assert_relative_eq!(ss.amplitudes[1].im, m.im, max_relative = 1e-12);
    }

    #[test]
    fn canonical_invariants_hold_at_solution() {
        let sys = canonical();
        let ss = solve_steady(&sys, None).unwrap();
        assert!(ss.residual < 1e-10);
        assert!(steady_residual(&sys, &ss.amplitudes).unwrap() < 1e-10);
        // <q> = -(g_mb/w_b) |<m>|^2 exactly
        let g = sys.couplings[1].rate;
        let wb = sys.modes[2].spec.frequency;
        let x = ss.population(1);
        assert_relative_eq!(ss.q(2), -g / wb * x, max_relative = 1e-12);
        assert_relative_eq!(ss.p(2), 0.0, epsilon = 1e-9 * ss.q(2).abs());
        // G_mb = i sqrt2 g_mb <m>
        let gm = ss.effective_couplings[1].unwrap();
        let expect = C64::i() * std::f64::consts::SQRT_2 * g * ss.amplitudes[1];
        assert_relative_eq!(gm.re, expect.re, max_relative = 1e-12);
        assert_relative_eq!(gm.im, expect.im, max_relative = 1e-12);
    }

    #[test]
    fn cubic_degenerates_to_linear_solution() {
        let mut spec = canonical_spec();
        spec.couplings[1].rate = 0.0;
        let sys = validate_system(&spec).unwrap();
        let roots = magnon_cubic_roots(&sys).unwrap();
        assert_eq!(roots.len(), 1);
        let ss = solve_steady(&sys, None).unwrap();
        assert_relative_eq!(roots[0].0, ss.population(1), max_relative = 1e-9);
    }

    /// Driven Kerr magnon with a dispersive mechanical partner, pushed into
    /// the bistable window: positive self-Kerr pulls the resonance up, so
    /// the fold opens for a drive blue of the bare magnon line. No cavity:
    /// at Kerr shifts of order the detuning an off-resonant cavity adds a
    /// parametric instability channel that would mask the clean fold.
    pub fn bistable_spec(amplitude: f64) -> crate::model::SystemSpec {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut spec = canonical_spec();
        spec.modes.remove(0); // drop the cavity
        spec.couplings.remove(0);
        spec.modes[0].self_kerr = Some(two_pi * 1.0e-7);
        // keep the magnomechanical backaction negligible next to the Kerr
        spec.couplings[0].rate = two_pi * 2.0e-3;
        spec.drives[0].tones[0].frequency = spec.modes[0].frequency + two_pi * 20.0e6;
        spec.drives[0].tones[0].amplitude = amplitude;
        spec
    }

    #[test]
    fn bistable_window_has_three_roots() {
        // pick the drive so that Q ~ -20 MHz, P ~ few MHz, and s_k x sweeps
        // through the fold: x_fold ~ |Q|/s_k ~ 2 pi 20e6/(2 pi 2e-7) = 1e14
        let two_pi = 2.0 * std::f64::consts::PI;
        let amp = two_pi * 3.3e13;
        let sys = validate_system(&bistable_spec(amp)).unwrap();
        let roots = magnon_cubic_roots(&sys).unwrap();
        assert_eq!(roots.len(), 3, "expected bistable window, got {roots:?}");
        assert!(roots[0].1, "lower branch should be stable");
        assert!(!roots[1].1, "middle branch should be unstable");
        assert!(roots[2].1, "upper branch should be stable");
        // every root satisfies the full mean-field equations
        let red = reduce_to_cubic(&sys).unwrap();
        for (x, _) in &roots {
            let st = state_from_root(&sys, &red, *x);
            assert!(steady_residual(&sys, &st.amplitudes).unwrap() < 1e-9);
        }
    }

    /// Companion-matrix root oracle, independent of the Cardano path. The
    /// variable is rescaled by the natural root magnitude first so the
    /// companion matrix stays balanced.
    fn companion_roots(c: [f64; 4]) -> Vec<f64> {
        let x0 = (c[0] / c[3]).abs().cbrt().max(1.0);
        let (b2, b1, b0) = (
            c[2] / c[3] / x0,
            c[1] / c[3] / (x0 * x0),
            c[0] / c[3] / (x0 * x0 * x0),
        );
        let m = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[-b2, -b1, -b0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        );
        let eig = m.complex_eigenvalues();
        let mut out: Vec<f64> = eig
            .iter()
            .filter(|l| l.im.abs() < 1e-7 * l.norm().max(1.0))
            .map(|l| l.re * x0)
            .filter(|&x| x >= 0.0)
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    #[test]
    fn cubic_roots_match_companion_matrix_oracle() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let sys = validate_system(&bistable_spec(two_pi * 3.3e13)).unwrap();
        let red = reduce_to_cubic(&sys).unwrap();
        let got = magnon_cubic_roots(&sys).unwrap();
        let want = companion_roots(red.coeffs);
        assert_eq!(got.len(), want.len());
        for ((x, _), w) in got.iter().zip(want.iter()) {
            assert_relative_eq!(x, w, max_relative = 1e-6);
        }
    }

    #[test]
    fn roots_invariant_under_drive_phase_rotation() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut spec = bistable_spec(two_pi * 3.3e13);
        let sys1 = validate_system(&spec).unwrap();
        spec.drives[0].tones[0].phase = 1.234;
        let sys2 = validate_system(&spec).unwrap();
        let r1 = magnon_cubic_roots(&sys1).unwrap();
        let r2 = magnon_cubic_roots(&sys2).unwrap();
        assert_eq!(r1.len(), r2.len());
        for (a, b) in r1.iter().zip(r2.iter()) {
            assert_relative_eq!(a.0, b.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn monostable_sweep_retraces_itself() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let sys = canonical();
        let param = SweepParameter::parse("drive:magnon:amplitude").unwrap();
        let values: Vec<f64> = (0..20).map(|i| two_pi * 1.0e11 * (i as f64 + 1.0)).collect();
        let fwd = sweep_hysteresis(&sys, &param, &values, SweepDirection::Forward).unwrap();
        let rev: Vec<f64> = values.iter().rev().copied().collect();
        let bwd = sweep_hysteresis(&sys, &param, &rev, SweepDirection::Backward).unwrap();
        assert!(fwd.jumps.is_empty());
        assert!(bwd.jumps.is_empty());
        for (f, b) in fwd.steps.iter().zip(bwd.steps.iter().rev()) {
            let da = (f.state.amplitudes[1] - b.state.amplitudes[1]).norm();
            assert!(da <= 1e-9 * f.state.amplitudes[1].norm().max(1.0));
        }
    }

    #[test]
    fn bistable_sweep_shows_hysteresis_between_cubic_branches() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let sys = validate_system(&bistable_spec(two_pi * 0.5e13)).unwrap();
        let param = SweepParameter::parse("drive:magnon:amplitude").unwrap();
        let values: Vec<f64> = (0..150)
            .map(|i| two_pi * (0.5e13 + 9.0e13 * i as f64 / 149.0))
            .collect();
        let fwd = sweep_hysteresis(&sys, &param, &values, SweepDirection::Forward).unwrap();
        let rev: Vec<f64> = values.iter().rev().copied().collect();
        let bwd = sweep_hysteresis(&sys, &param, &rev, SweepDirection::Backward).unwrap();
        assert_eq!(fwd.jumps.len(), 1, "forward jump expected");
        assert_eq!(bwd.jumps.len(), 1, "backward jump expected");
        // traces differ inside the window
        let mag = sys.mode_index("magnon").unwrap();
        let mut max_rel = 0.0f64;
        for (f, b) in fwd.steps.iter().zip(bwd.steps.iter().rev()) {
            let rel = (f.state.population(mag) - b.state.population(mag)).abs()
                / f.state.population(mag).max(1.0);
            max_rel = max_rel.max(rel);
        }
        assert!(max_rel > 0.5, "hysteresis window should separate branches");
        // away from the folds (where one eigenvalue crosses zero and the
        // margin treats the point as unstable), both traces follow a
        // stable non-middle branch
        let near_jump = |trace: &SweepTrace, i: usize| {
            trace.jumps.iter().any(|&j| i.abs_diff(j) <= 2)
        };
        for (i, step) in fwd.steps.iter().enumerate() {
            if !near_jump(&fwd, i) {
                assert!(step.state.stable, "forward step {i} unstable");
                assert_ne!(step.state.branch, Branch::Middle);
            }
        }
        for (i, step) in bwd.steps.iter().enumerate() {
            if !near_jump(&bwd, i) {
                assert!(step.state.stable, "backward step {i} unstable");
                assert_ne!(step.state.branch, Branch::Middle);
            }
        }
    }

    #[test]
    fn kerr_shift_arithmetic() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let (wm, wb) = (two_pi * 10.0e9, two_pi * 10.0e6);
        assert_eq!(kerr_shifts(wm, wb, 0.0, 1.0, 1.0), (wm, wb));
        // K_cross/2pi = -5.4 pHz and |M|^2 chosen so the shift is -10 kHz
        let kx = -two_pi * 5.4e-12;
        let pop = two_pi * 10.0e3 / kx.abs();
        let (_, wbt) = kerr_shifts(wm, wb, pop, 0.0, kx);
        assert_relative_eq!(wbt - wb, -two_pi * 10.0e3, max_relative = 1e-12);
        // negative shift for either sign of the detuning choice: the shift
        // depends only on K_cross and |M|^2
        assert!(wbt < wb);
    }

    #[test]
    fn two_tone_drive_is_rejected_by_static_solver() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut spec = canonical_spec();
        let wb = spec.modes[2].frequency;
        let wm = spec.modes[1].frequency;
        spec.drives[0].tones = vec![
            DriveTone {
                frequency: wm - wb,
                amplitude: two_pi * 1.0e10,
                phase: 0.0,
            },
            DriveTone {
                frequency: wm + wb,
                amplitude: two_pi * 0.3e10,
                phase: 0.0,
            },
        ];
        spec.frame = crate::model::FrameSpec::Frequency(wm);
        let sys = validate_system(&spec).unwrap();
        assert!(matches!(
            solve_steady(&sys, None),
            Err(Error::Topology(_))
        ));
    }

    #[test]
    fn cavity_driven_mean_field_matches_quoted_closed_form() {
        // <a> = (i g_ma <m> + i sqrt(2 k_e) eps_d)/(i w_d - i w_a - k_a)
        // jointly solved with the magnon line, for g_mb = 0
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut spec = canonical_spec();
        spec.couplings[1].rate = 0.0;
        spec.modes[0].external_decay = Some(spec.modes[0].decay * 0.7);
        spec.modes[0].internal_decay = Some(spec.modes[0].decay * 0.3);
        spec.drives = vec![DriveSpec {
            target: "cavity".into(),
            tones: vec![DriveTone {
                frequency: spec.modes[0].frequency - two_pi * 13.0e6,
                amplitude: two_pi * 1.0e10,
                phase: 0.0,
            }],
            convention: None,
        }];
        spec.frame = crate::model::FrameSpec::Tone {
            drive: "cavity".into(),
            tone: 0,
        };
        let sys = validate_system(&spec).unwrap();
        let ss = solve_steady(&sys, None).unwrap();
        // closed form, iterating the pair of quoted lines to a fixed point
        let ke = sys.modes[0].spec.external_decay.unwrap();
        let eps = sys.drives[0].tones[0].amplitude;
        let (ka, da) = (sys.modes[0].spec.decay, sys.modes[0].detuning);
        let (km, dm) = (sys.modes[1].spec.decay, sys.modes[1].detuning);
        let g = sys.couplings[0].rate;
        // a = (i g m + i sqrt(2 ke) eps)/(-i da - ka); m = -i g a/(i dm + km)
        let denom_a = C64::new(-ka, -da);
        let mut a = C64::new(0.0, 0.0);
        let mut m = C64::new(0.0, 0.0);
        for _ in 0..200 {
            a = (C64::i() * g * m + C64::i() * (2.0 * ke).sqrt() * eps) / denom_a;
            m = -C64::i() * g * a / C64::new(km, dm);
        }
        assert_relative_eq!(ss.amplitudes[0].re, a.re, max_relative = 1e-9);
        assert_relative_eq!(ss.amplitudes[0].im, a.im, max_relative = 1e-9);
        assert_relative_eq!(ss.amplitudes[1].re, m.re, max_relative = 1e-9);
        assert_relative_eq!(ss.amplitudes[1].im, m.im, max_relative = 1e-9);
    }

    #[test]
    fn added_coupling_spec_survives_reduction_checks() {
        // cross-Kerr present: reduction still runs (negligible backreaction)
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut spec = bistable_spec(two_pi * 3.3e13);
        spec.couplings.push(CouplingSpec {
            kind: CouplingKind::CrossKerr,
            mode_a: "magnon".into(),
            mode_b: "mech".into(),
            rate: -two_pi * 5.4e-12,
            sign: None,
            phase: None,
        });
        let sys = validate_system(&spec).unwrap();
        assert!(magnon_cubic_roots(&sys).is_ok());
    }
}

#[cfg(test)]
pub use tests::bistable_spec;
