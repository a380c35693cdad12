//! Declarative system model: modes, couplings, drives, rotating frame.
//!
//! A [`SystemSpec`] is a plain description of the mode graph. Every solver
//! consumes a [`ValidatedSystem`], produced by [`validate_system`], in which
//! labels are resolved to indices, detunings are resolved against the frame
//! tone, and all invariants have been checked.

use crate::constants::{hz_to_rad, rad_to_hz, GAMMA_GYRO, HBAR, K_B};
use crate::error::{Error, Result, Violation};
use crate::C64;
use serde::{Deserialize, Serialize};

/// Kind of bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    MicrowaveCavity,
    Magnon,
    Mechanical,
    OpticalCavity,
}

impl ModeKind {
    pub fn is_cavity(self) -> bool {
        matches!(self, ModeKind::MicrowaveCavity | ModeKind::OpticalCavity)
    }
    pub fn is_mechanical(self) -> bool {
        self == ModeKind::Mechanical
    }
}

/// One bosonic mode. Frequencies and rates in rad/s (amplitude-decay
/// convention: total half-linewidth `decay`; the mechanical `decay` is the
/// Brownian damping rate, equal to the full mechanical linewidth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: String,
    pub kind: ModeKind,
    /// Resonance frequency omega_k (rad/s).
    pub frequency: f64,
    /// Total decay rate kappa_k or gamma_b (rad/s).
    pub decay: f64,
    /// External (port) decay rate kappa_e (rad/s); cavities only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_decay: Option<f64>,
    /// Internal decay rate kappa_int (rad/s); cavities only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal_decay: Option<f64>,
    /// Mean thermal occupation of the local bath.
    #[serde(default)]
    pub thermal_occupation: f64,
    /// Self-Kerr coefficient K_m (rad/s per excitation); magnon only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_kerr: Option<f64>,
}

/// Kind of two-mode coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    /// g (a b' + a' b): excitation-conserving state swap.
    BeamSplitter,
    /// s g (a' a) q_b: radiation-pressure-like, mode_b mechanical.
    Dispersive,
    /// g (a b + a' b'): two-mode squeezing.
    ParametricAmplification,
    /// K n_a n_b: mutual frequency pulling, mode_b mechanical.
    CrossKerr,
    /// g (a' b + e^{i Phi} a b'): phase-dependent (dissipative) coupling.
    PhaseBeamSplitter,
}

/// One coupling between two declared modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub kind: CouplingKind,
    pub mode_a: String,
    pub mode_b: String,
    /// Coupling rate g or K_cross (rad/s). Signed for cross-Kerr only.
    pub rate: f64,
    /// Sign of the dispersive term: +1 for g m'm q, -1 for -g c'c q.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
    /// Coupling phase Phi in [0, 2pi); phase-beam-splitter only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

/// Amplitude semantics of a drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveConvention {
    /// Magnon Rabi frequency Omega: dm/dt += Omega e^{i phase}.
    Rabi,
    /// Cavity feed rate E: da/dt += E e^{i phase}.
    Feed,
    /// Port amplitude eps_d paired with the declared kappa_e:
    /// da/dt += -i sqrt(2 kappa_e) eps_d e^{i phase}.
    ExternalFeed,
}

/// One drive tone (rad/s amplitudes, absolute frequency).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveTone {
    /// Absolute tone frequency (rad/s).
    pub frequency: f64,
    /// Amplitude (rad/s); meaning set by the drive convention.
    pub amplitude: f64,
    /// Tone phase (rad). Multi-tone relative phases are taken as declared;
    /// the default 0 is a documented convention, not an inference.
    #[serde(default)]
    pub phase: f64,
}

/// Drive applied to one mode; one or two tones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub target: String,
    pub tones: Vec<DriveTone>,
    /// Defaults to `Rabi` on magnons, `ExternalFeed` on cavities with a
    /// declared kappa_e, `Feed` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<DriveConvention>,
}

/// Rotating-frame reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameSpec {
    /// Frame rotates at the given tone of the given drive.
    Tone { drive: String, tone: usize },
    /// Frame rotates at an explicit frequency (rad/s).
    Frequency(f64),
}

/// Declarative system graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub modes: Vec<ModeSpec>,
    pub couplings: Vec<CouplingSpec>,
    pub drives: Vec<DriveSpec>,
    pub frame: FrameSpec,
}

/// A mode with its frame-resolved detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedMode {
    pub spec: ModeSpec,
    /// omega_k - omega_frame for rotating modes; omega_b for mechanical
    /// modes, which do not rotate.
    pub detuning: f64,
}

/// A coupling with endpoints resolved to mode indices. For dispersive and
/// cross-Kerr couplings `b` is always the mechanical partner.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedCoupling {
    pub kind: CouplingKind,
    pub a: usize,
    pub b: usize,
    pub rate: f64,
    pub sign: f64,
    pub phase: f64,
}

/// A drive tone with its frame-relative detuning and complex injection
/// amplitude lambda: the equation of motion gains
/// `d<o>/dt += lambda e^{-i (omega_tone - omega_frame) t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedTone {
    pub frequency: f64,
    pub detuning: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub injection: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDrive {
    pub target: usize,
    pub convention: DriveConvention,
    pub tones: Vec<ValidatedTone>,
}

/// Normalized, checked system. Immutable after validation; any number of
/// concurrent readers is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSystem {
    pub modes: Vec<ValidatedMode>,
    pub couplings: Vec<ValidatedCoupling>,
    pub drives: Vec<ValidatedDrive>,
    pub frame_frequency: f64,
    pub warnings: Vec<String>,
}

impl ValidatedSystem {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.spec.label == label)
    }

    pub fn mode(&self, index: usize) -> &ModeSpec {
        &self.modes[index].spec
    }

    /// Indices of modes of the given kind, in declaration order.
    pub fn indices_of(&self, kind: ModeKind) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.spec.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Quadrature ordering string, e.g. `[X_a,Y_a,X_m,Y_m,q_b,p_b]`.
    pub fn quadrature_ordering(&self) -> String {
        let mut parts = Vec::new();
        for m in &self.modes {
            if m.spec.kind.is_mechanical() {
                parts.push(format!("q_{}", m.spec.label));
                parts.push(format!("p_{}", m.spec.label));
            } else {
                parts.push(format!("X_{}", m.spec.label));
                parts.push(format!("Y_{}", m.spec.label));
            }
        }
        format!("[{}]", parts.join(","))
    }

    /// Reconstructs the normalized `SystemSpec`. Validating the result
    /// reproduces this `ValidatedSystem` exactly.
    pub fn to_spec(&self) -> SystemSpec {
        SystemSpec {
            modes: self.modes.iter().map(|m| m.spec.clone()).collect(),
            couplings: self
                .couplings
                .iter()
                .map(|c| CouplingSpec {
                    kind: c.kind,
                    mode_a: self.modes[c.a].spec.label.clone(),
                    mode_b: self.modes[c.b].spec.label.clone(),
                    rate: c.rate,
                    sign: match c.kind {
                        CouplingKind::Dispersive => Some(c.sign as i8),
                        _ => None,
                    },
                    phase: match c.kind {
                        CouplingKind::PhaseBeamSplitter => Some(c.phase),
                        _ => None,
                    },
                })
                .collect(),
            drives: self
                .drives
                .iter()
                .map(|d| DriveSpec {
                    target: self.modes[d.target].spec.label.clone(),
                    tones: d
                        .tones
                        .iter()
                        .map(|t| DriveTone {
                            frequency: t.frequency,
                            amplitude: t.amplitude,
                            phase: t.phase,
                        })
                        .collect(),
                    convention: Some(d.convention),
                })
                .collect(),
            frame: FrameSpec::Frequency(self.frame_frequency),
        }
    }

    /// The single frame-defining tone (drive index, tone index), if the
    /// frame was declared through a tone.
    pub fn two_tone_drive(&self) -> Option<usize> {
        self.drives.iter().position(|d| d.tones.len() == 2)
    }
}

const KAPPA_SPLIT_RTOL: f64 = 1e-12;

/// Validates a system specification, resolving detunings against the frame
/// tone. Returns all violations at once.
pub fn validate_system(spec: &SystemSpec) -> Result<ValidatedSystem> {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    // Mode-level checks.
    for (i, m) in spec.modes.iter().enumerate() {
        let item = format!("modes[{i}] ({})", m.label);
        if spec.modes[..i].iter().any(|o| o.label == m.label) {
            violations.push(Violation {
                item: item.clone(),
                message: format!("duplicate label '{}'", m.label),
            });
        }
        if !(m.frequency > 0.0) {
            violations.push(Violation {
                item: item.clone(),
                message: format!("frequency must be > 0 (got {:e})", m.frequency),
            });
        }
        if !(m.decay >= 0.0) {
            violations.push(Violation {
                item: item.clone(),
                message: format!("negative decay rate {:e}", m.decay),
            });
        }
        if !(m.thermal_occupation >= 0.0) {
            violations.push(Violation {
                item: item.clone(),
                message: format!("negative thermal occupation {:e}", m.thermal_occupation),
            });
        }
        if (m.external_decay.is_some() || m.internal_decay.is_some()) && !m.kind.is_cavity() {
            violations.push(Violation {
                item: item.clone(),
                message: "external/internal decay split applies to cavity modes only".into(),
            });
        }
        if let Some(ke) = m.external_decay {
            if ke < 0.0 {
                violations.push(Violation {
                    item: item.clone(),
                    message: format!("negative external decay {ke:e}"),
                });
            }
        }
        if let Some(ki) = m.internal_decay {
            if ki < 0.0 {
                violations.push(Violation {
                    item: item.clone(),
                    message: format!("negative internal decay {ki:e}"),
                });
            }
        }
        if let (Some(ke), Some(ki)) = (m.external_decay, m.internal_decay) {
            let sum = ke + ki;
            let scale = m.decay.abs().max(sum.abs()).max(f64::MIN_POSITIVE);
            if (sum - m.decay).abs() > KAPPA_SPLIT_RTOL * scale {
                violations.push(Violation {
                    item: item.clone(),
                    message: format!(
                        "external + internal decay ({sum:e}) does not match total decay ({:e})",
                        m.decay
                    ),
                });
            }
        } else if let Some(ke) = m.external_decay {
            if ke > m.decay * (1.0 + KAPPA_SPLIT_RTOL) {
                violations.push(Violation {
                    item: item.clone(),
                    message: format!(
                        "external decay {ke:e} exceeds total decay {:e}",
                        m.decay
                    ),
                });
            }
        }
        if m.self_kerr.is_some() && m.kind != ModeKind::Magnon {
            violations.push(Violation {
                item,
                message: "self-Kerr coefficient applies to magnon modes only".into(),
            });
        }
    }

    let find = |label: &str| spec.modes.iter().position(|m| m.label == label);

    // Coupling checks; endpoints normalized so the mechanical partner of a
    // dispersive/cross-Kerr coupling sits in slot b.
    let mut couplings = Vec::new();
    for (i, c) in spec.couplings.iter().enumerate() {
        let item = format!("couplings[{i}] ({}-{})", c.mode_a, c.mode_b);
        let (ia, ib) = match (find(&c.mode_a), find(&c.mode_b)) {
            (Some(a), Some(b)) => (a, b),
            (a, b) => {
                if a.is_none() {
                    violations.push(Violation {
                        item: item.clone(),
                        message: format!("coupling to unknown mode '{}'", c.mode_a),
                    });
                }
                if b.is_none() {
                    violations.push(Violation {
                        item: item.clone(),
                        message: format!("coupling to unknown mode '{}'", c.mode_b),
                    });
                }
                continue;
            }
        };
        if ia == ib {
            violations.push(Violation {
                item: item.clone(),
                message: "coupling endpoints must differ".into(),
            });
            continue;
        }
        if c.rate < 0.0 && c.kind != CouplingKind::CrossKerr {
            violations.push(Violation {
                item: item.clone(),
                message: format!(
                    "negative coupling rate {:e}; only cross-Kerr coefficients are signed",
                    c.rate
                ),
            });
        }
        if c.sign.is_some() && c.kind != CouplingKind::Dispersive {
            violations.push(Violation {
                item: item.clone(),
                message: "sign applies to dispersive couplings only".into(),
            });
        }
        if let Some(s) = c.sign {
            if s != 1 && s != -1 {
                violations.push(Violation {
                    item: item.clone(),
                    message: format!("dispersive sign must be +1 or -1 (got {s})"),
                });
            }
        }
        if c.phase.is_some() && c.kind != CouplingKind::PhaseBeamSplitter {
            violations.push(Violation {
                item: item.clone(),
                message: "phase applies to phase-beam-splitter couplings only".into(),
            });
        }
        let phase = c.phase.unwrap_or(0.0);
        if !(0.0..2.0 * std::f64::consts::PI).contains(&phase) {
            violations.push(Violation {
                item: item.clone(),
                message: format!("coupling phase {phase:e} outside [0, 2pi)"),
            });
        }
        let (mut a, mut b) = (ia, ib);
        match c.kind {
            CouplingKind::Dispersive | CouplingKind::CrossKerr => {
                let mech_a = spec.modes[ia].kind.is_mechanical();
                let mech_b = spec.modes[ib].kind.is_mechanical();
                match (mech_a, mech_b) {
                    (false, true) => {}
                    (true, false) => std::mem::swap(&mut a, &mut b),
                    _ => {
                        violations.push(Violation {
                            item: item.clone(),
                            message:
                                "dispersive/cross-Kerr couplings need exactly one mechanical partner"
                                    .into(),
                        });
                        continue;
                    }
                }
            }
            _ => {
                if spec.modes[ia].kind.is_mechanical() || spec.modes[ib].kind.is_mechanical() {
                    violations.push(Violation {
                        item: item.clone(),
                        message: format!(
                            "{:?} couplings between mechanical modes are not modeled",
                            c.kind
                        ),
                    });
                    continue;
                }
            }
        }
        couplings.push(ValidatedCoupling {
            kind: c.kind,
            a,
            b,
            rate: c.rate,
            sign: f64::from(c.sign.unwrap_or(1)),
            phase,
        });
    }

    // Drive checks.
    let mut drives = Vec::new();
    let mut multi_tone_targets = 0usize;
    for (i, d) in spec.drives.iter().enumerate() {
        let item = format!("drives[{i}] (target {})", d.target);
        let Some(target) = find(&d.target) else {
            violations.push(Violation {
                item,
                message: format!("drive targets unknown mode '{}'", d.target),
            });
            continue;
        };
        let kind = spec.modes[target].kind;
        if kind.is_mechanical() {
            violations.push(Violation {
                item: item.clone(),
                message: "mechanical modes cannot be driven directly".into(),
            });
            continue;
        }
        if d.tones.is_empty() {
            violations.push(Violation {
                item: item.clone(),
                message: "drive declares no tones".into(),
            });
            continue;
        }
        if d.tones.len() > 2 {
            violations.push(Violation {
                item: item.clone(),
                message: format!("at most two tones per drive (got {})", d.tones.len()),
            });
            continue;
        }
        if d.tones.len() == 2 {
            multi_tone_targets += 1;
        }
        let convention = d.convention.unwrap_or(match kind {
            ModeKind::Magnon => DriveConvention::Rabi,
            _ => {
                if spec.modes[target].external_decay.is_some() {
                    DriveConvention::ExternalFeed
                } else {
                    DriveConvention::Feed
                }
            }
        });
        match convention {
            DriveConvention::Rabi if kind != ModeKind::Magnon => {
                violations.push(Violation {
                    item: item.clone(),
                    message: "Rabi drives apply to magnon modes only".into(),
                });
            }
            DriveConvention::Feed | DriveConvention::ExternalFeed if !kind.is_cavity() => {
                violations.push(Violation {
                    item: item.clone(),
                    message: "feed drives apply to cavity modes only".into(),
                });
            }
            DriveConvention::ExternalFeed if spec.modes[target].external_decay.is_none() => {
                violations.push(Violation {
                    item: item.clone(),
                    message: "external-feed drives require a declared kappa_e".into(),
                });
            }
            _ => {}
        }
        let mut tones = Vec::new();
        for (j, t) in d.tones.iter().enumerate() {
            if !(t.frequency > 0.0) {
                violations.push(Violation {
                    item: format!("{item} tone {j}"),
                    message: format!("tone frequency must be > 0 (got {:e})", t.frequency),
                });
            }
            if t.amplitude < 0.0 {
                violations.push(Violation {
                    item: format!("{item} tone {j}"),
                    message: format!("negative tone amplitude {:e}", t.amplitude),
                });
            }
            tones.push((t.frequency, t.amplitude, t.phase));
        }
        drives.push((target, convention, tones));
    }

    // Frame resolution.
    let frame_frequency = match &spec.frame {
        FrameSpec::Frequency(w) => {
            if !(*w > 0.0) {
                violations.push(Violation {
                    item: "frame".into(),
                    message: format!("frame frequency must be > 0 (got {w:e})"),
                });
            }
            *w
        }
        FrameSpec::Tone { drive, tone } => {
            let mut w = f64::NAN;
            match spec.drives.iter().find(|d| &d.target == drive) {
                Some(d) => match d.tones.get(*tone) {
                    Some(t) => w = t.frequency,
                    None => violations.push(Violation {
                        item: "frame".into(),
                        message: format!("drive on '{drive}' has no tone {tone}"),
                    }),
                },
                None => violations.push(Violation {
                    item: "frame".into(),
                    message: format!("frame references a drive on unknown target '{drive}'"),
                }),
            }
            w
        }
    };

    if multi_tone_targets > 1 {
        violations.push(Violation {
            item: "drives".into(),
            message: "two-tone drives are allowed on at most one mode at a time".into(),
        });
    }

    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    fn findr(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }

    // Connectivity over the coupling graph: a warning, not an error, so
    // single-mode diagnostic runs stay possible.
    if spec.modes.len() > 1 {
        let mut root: Vec<usize> = (0..spec.modes.len()).collect();
        for c in &couplings {
            let (ra, rb) = (findr(&mut root, c.a), findr(&mut root, c.b));
            root[ra] = rb;
        }
        let first = findr(&mut root, 0);
        if (1..spec.modes.len()).any(|i| findr(&mut root, i) != first) {
            warnings.push("coupling graph is not connected".into());
        }
    }

    // Rotating-frame sectors: modes joined by phase-sensitive couplings
    // (beam splitters, parametric amplifiers) must share one frame, while
    // dispersive/cross-Kerr links transmit only phase-insensitive forces
    // and admit independent frames. A sector away from the frame-defining
    // tone rotates with its own single-tone drive when it has one; this is
    // what lets a GHz magnon pump coexist with an optical laser drive.
    let mut sector: Vec<usize> = (0..spec.modes.len()).collect();
    for c in &couplings {
        match c.kind {
            CouplingKind::BeamSplitter
            | CouplingKind::ParametricAmplification
            | CouplingKind::PhaseBeamSplitter => {
                let (ra, rb) = (findr(&mut sector, c.a), findr(&mut sector, c.b));
                sector[ra] = rb;
            }
            _ => {}
        }
    }
    let frame_sector = match &spec.frame {
        FrameSpec::Tone { drive, tone: _ } => spec
            .modes
            .iter()
            .position(|m| {
                spec.drives
                    .iter()
                    .any(|d| &d.target == drive && d.target == m.label)
            })
            .map(|k| findr(&mut sector, k)),
        FrameSpec::Frequency(_) => None,
    };
    let mut sector_frame = vec![frame_frequency; spec.modes.len()];
    for k in 0..spec.modes.len() {
        let root_k = findr(&mut sector, k);
        if Some(root_k) == frame_sector {
            continue;
        }
        let mut single_tone: Option<f64> = None;
        let mut count = 0usize;
        for (target, _, tones) in &drives {
            if findr(&mut sector, *target) == root_k && tones.len() == 1 {
                single_tone = Some(tones[0].0);
                count += 1;
            }
        }
        if count == 1 {
            sector_frame[k] = single_tone.unwrap();
        }
    }

    let modes: Vec<ValidatedMode> = spec
        .modes
        .iter()
        .enumerate()
        .map(|(k, m)| ValidatedMode {
            spec: m.clone(),
            detuning: if m.kind.is_mechanical() {
                m.frequency
            } else {
                m.frequency - sector_frame[k]
            },
        })
        .collect();

    let drives: Vec<ValidatedDrive> = drives
        .into_iter()
        .map(|(target, convention, tones)| ValidatedDrive {
            target,
            convention,
            tones: tones
                .into_iter()
                .map(|(frequency, amplitude, phase)| {
                    let carrier = C64::from_polar(amplitude, phase);
                    let injection = match convention {
                        DriveConvention::Rabi | DriveConvention::Feed => carrier,
                        DriveConvention::ExternalFeed => {
                            let ke = modes[target].spec.external_decay.unwrap_or(0.0);
                            -C64::i() * (2.0 * ke).sqrt() * carrier
                        }
                    };
                    ValidatedTone {
                        frequency,
                        detuning: frequency - sector_frame[target],
                        amplitude,
                        phase,
                        injection,
                    }
                })
                .collect(),
        })
        .collect();

    Ok(ValidatedSystem {
        modes,
        couplings,
        drives,
        frame_frequency,
        warnings,
    })
}

/// Bose occupation N = [exp(hbar omega / k_B T) - 1]^{-1}; 0 at T = 0.
pub fn thermal_occupation(frequency: f64, temperature: f64) -> Result<f64> {
    if !(frequency > 0.0) {
        return Err(Error::Format(format!(
            "thermal occupation needs frequency > 0 (got {frequency:e})"
        )));
    }
    if temperature < 0.0 {
        return Err(Error::Format(format!(
            "negative temperature {temperature:e}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * frequency / (K_B * temperature);
    // exp_m1 keeps precision in the high-temperature limit.
    Ok(1.0 / x.exp_m1())
}

/// Magnon frequency from the bias field: omega_m = gamma H, gamma/2pi = 28 GHz/T.
pub fn bias_to_frequency(bias_field: f64) -> Result<f64> {
    if !(bias_field > 0.0) {
        return Err(Error::Format(format!(
            "bias field must be > 0 (got {bias_field:e} T)"
        )));
    }
    Ok(GAMMA_GYRO * bias_field)
}

// ---------------------------------------------------------------------------
// External Hz-based configuration documents.
// ---------------------------------------------------------------------------

/// On-disk scenario/system document. All frequencies in Hz, bias fields in
/// tesla, temperatures in kelvin.
pub mod config {
    use super::*;

    pub const SPEC_VERSION: u32 = 1;

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct ConfigMode {
        pub label: String,
        pub kind: ModeKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub frequency_hz: Option<f64>,
        /// Alternative to `frequency_hz` for magnon modes.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub bias_field_tesla: Option<f64>,
        pub decay_hz: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub external_decay_hz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub internal_decay_hz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub thermal_occupation: Option<f64>,
        /// Alternative to `thermal_occupation`: bath temperature in kelvin.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub temperature_kelvin: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub self_kerr_hz: Option<f64>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct ConfigCoupling {
        pub kind: CouplingKind,
        pub mode_a: String,
        pub mode_b: String,
        pub rate_hz: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub sign: Option<i8>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub phase_rad: Option<f64>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct ConfigTone {
        pub frequency_hz: f64,
        pub amplitude_hz: f64,
        #[serde(default)]
        pub phase_rad: f64,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct ConfigDrive {
        pub target: String,
        pub tones: Vec<ConfigTone>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub convention: Option<DriveConvention>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case")]
    pub enum ConfigFrame {
        Tone { drive: String, tone: usize },
        FrequencyHz(f64),
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct ConfigDocument {
        pub spec_version: u32,
        pub modes: Vec<ConfigMode>,
        pub couplings: Vec<ConfigCoupling>,
        pub drives: Vec<ConfigDrive>,
        pub frame: ConfigFrame,
    }

    impl ConfigDocument {
        pub fn from_json(text: &str) -> Result<Self> {
            let doc: ConfigDocument = serde_json::from_str(text)?;
            if doc.spec_version != SPEC_VERSION {
                return Err(Error::Format(format!(
                    "unsupported spec_version {} (expected {})",
                    doc.spec_version, SPEC_VERSION
                )));
            }
            Ok(doc)
        }

        /// Converts the Hz-based document to the internal rad/s spec.
        pub fn to_system(&self) -> Result<SystemSpec> {
            let mut modes = Vec::new();
            for m in &self.modes {
                let frequency = match (m.frequency_hz, m.bias_field_tesla) {
                    (Some(f), None) => hz_to_rad(f),
                    (None, Some(h)) => bias_to_frequency(h)?,
                    (Some(_), Some(_)) => {
                        return Err(Error::Format(format!(
                            "mode '{}': give frequency_hz or bias_field_tesla, not both",
                            m.label
                        )))
                    }
                    (None, None) => {
                        return Err(Error::Format(format!(
                            "mode '{}': missing frequency_hz (or bias_field_tesla)",
                            m.label
                        )))
                    }
                };
                let thermal_occupation = match (m.thermal_occupation, m.temperature_kelvin) {
                    (Some(n), None) => n,
                    (None, Some(t)) => thermal_occupation(frequency, t)?,
                    (None, None) => 0.0,
                    (Some(_), Some(_)) => {
                        return Err(Error::Format(format!(
                            "mode '{}': give thermal_occupation or temperature_kelvin, not both",
                            m.label
                        )))
                    }
                };
                modes.push(ModeSpec {
                    label: m.label.clone(),
                    kind: m.kind,
                    frequency,
                    decay: hz_to_rad(m.decay_hz),
                    external_decay: m.external_decay_hz.map(hz_to_rad),
                    internal_decay: m.internal_decay_hz.map(hz_to_rad),
                    thermal_occupation,
                    self_kerr: m.self_kerr_hz.map(hz_to_rad),
                });
            }
            Ok(SystemSpec {
                modes,
                couplings: self
                    .couplings
                    .iter()
                    .map(|c| CouplingSpec {
                        kind: c.kind,
                        mode_a: c.mode_a.clone(),
                        mode_b: c.mode_b.clone(),
                        rate: hz_to_rad(c.rate_hz),
                        sign: c.sign,
                        phase: c.phase_rad,
                    })
                    .collect(),
                drives: self
                    .drives
                    .iter()
                    .map(|d| DriveSpec {
                        target: d.target.clone(),
                        tones: d
                            .tones
                            .iter()
                            .map(|t| DriveTone {
                                frequency: hz_to_rad(t.frequency_hz),
                                amplitude: hz_to_rad(t.amplitude_hz),
                                phase: t.phase_rad,
                            })
                            .collect(),
                        convention: d.convention,
                    })
                    .collect(),
                frame: match &self.frame {
                    ConfigFrame::Tone { drive, tone } => FrameSpec::Tone {
                        drive: drive.clone(),
                        tone: *tone,
                    },
                    ConfigFrame::FrequencyHz(f) => FrameSpec::Frequency(hz_to_rad(*f)),
                },
            })
        }

        /// Re-exports a rad/s spec back into the Hz-based document form.
        pub fn from_system(spec: &SystemSpec) -> Self {
            ConfigDocument {
                spec_version: SPEC_VERSION,
                modes: spec
                    .modes
                    .iter()
                    .map(|m| ConfigMode {
                        label: m.label.clone(),
                        kind: m.kind,
                        frequency_hz: Some(rad_to_hz(m.frequency)),
                        bias_field_tesla: None,
                        decay_hz: rad_to_hz(m.decay),
                        external_decay_hz: m.external_decay.map(rad_to_hz),
                        internal_decay_hz: m.internal_decay.map(rad_to_hz),
                        thermal_occupation: Some(m.thermal_occupation),
                        temperature_kelvin: None,
                        self_kerr_hz: m.self_kerr.map(rad_to_hz),
                    })
                    .collect(),
                couplings: spec
                    .couplings
                    .iter()
                    .map(|c| ConfigCoupling {
                        kind: c.kind,
                        mode_a: c.mode_a.clone(),
                        mode_b: c.mode_b.clone(),
                        rate_hz: rad_to_hz(c.rate),
                        sign: c.sign,
                        phase_rad: c.phase,
                    })
                    .collect(),
                drives: spec
                    .drives
                    .iter()
                    .map(|d| ConfigDrive {
                        target: d.target.clone(),
                        tones: d
                            .tones
                            .iter()
                            .map(|t| ConfigTone {
                                frequency_hz: rad_to_hz(t.frequency),
                                amplitude_hz: rad_to_hz(t.amplitude),
                                phase_rad: t.phase,
                            })
                            .collect(),
                        convention: d.convention,
                    })
                    .collect(),
                frame: match &spec.frame {
                    FrameSpec::Tone { drive, tone } => ConfigFrame::Tone {
                        drive: drive.clone(),
                        tone: *tone,
                    },
                    FrameSpec::Frequency(w) => ConfigFrame::FrequencyHz(rad_to_hz(*w)),
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Canonical three-mode system: cavity + magnon + mechanical oscillator,
    /// beam-splitter g_ma, dispersive g_mb, magnon Rabi drive.
    pub fn canonical_spec() -> SystemSpec {
        let two_pi = 2.0 * std::f64::consts::PI;
        SystemSpec {
            modes: vec![
                ModeSpec {
                    label: "cavity".into(),
                    kind: ModeKind::MicrowaveCavity,
                    frequency: two_pi * 10.0e9,
                    decay: two_pi * 1.0e6,
                    external_decay: None,
                    internal_decay: None,
                    thermal_occupation: 0.0,
                    self_kerr: None,
                },
                ModeSpec {
                    label: "magnon".into(),
                    kind: ModeKind::Magnon,
                    frequency: two_pi * 10.0e9,
                    decay: two_pi * 1.0e6,
                    external_decay: None,
                    internal_decay: None,
                    thermal_occupation: 0.0,
                    self_kerr: None,
                },
                ModeSpec {
                    label: "mech".into(),
                    kind: ModeKind::Mechanical,
                    frequency: two_pi * 10.0e6,
                    decay: two_pi * 100.0,
                    external_decay: None,
                    internal_decay: None,
                    thermal_occupation: 0.0,
                    self_kerr: None,
                },
            ],
            couplings: vec![
                CouplingSpec {
                    kind: CouplingKind::BeamSplitter,
                    mode_a: "cavity".into(),
                    mode_b: "magnon".into(),
                    rate: two_pi * 3.2e6,
                    sign: None,
                    phase: None,
                },
                CouplingSpec {
                    kind: CouplingKind::Dispersive,
                    mode_a: "magnon".into(),
                    mode_b: "mech".into(),
                    rate: two_pi * 0.2,
                    sign: Some(1),
                    phase: None,
                },
            ],
            drives: vec![DriveSpec {
                target: "magnon".into(),
                tones: vec![DriveTone {
                    frequency: two_pi * (10.0e9 - 10.0e6),
                    amplitude: two_pi * 1.0e12,
                    phase: 0.0,
                }],
                convention: None,
            }],
            frame: FrameSpec::Tone {
                drive: "magnon".into(),
                tone: 0,
            },
        }
    }

    #[test]
    fn canonical_spec_validates_and_resolves_detunings() {
        let v = validate_system(&canonical_spec()).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert_eq!(v.n_modes(), 3);
        assert!(v.warnings.is_empty());
        assert_relative_eq!(v.modes[0].detuning, two_pi * 10.0e6, max_relative = 1e-12);
        assert_relative_eq!(v.modes[1].detuning, two_pi * 10.0e6, max_relative = 1e-12);
        // mechanical modes do not rotate
        assert_relative_eq!(v.modes[2].detuning, two_pi * 10.0e6, max_relative = 1e-12);
        assert_eq!(v.drives[0].convention, DriveConvention::Rabi);
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let mut spec = canonical_spec();
        spec.modes[1].label = "cavity".into();
        let err = validate_system(&spec).unwrap_err();
        let v = err.violations().expect("validation error");
        assert!(v.iter().any(|x| x.message.contains("duplicate label")));
    }

    #[test]
    fn five_mode_system_validates() {
        // One cavity, two magnons, two mechanical modes.
        let two_pi = 2.0 * std::f64::consts::PI;
        let mode = |label: &str, kind, f, k| ModeSpec {
            label: label.into(),
            kind,
            frequency: two_pi * f,
            decay: two_pi * k,
            external_decay: None,
            internal_decay: None,
            thermal_occupation: 0.0,
            self_kerr: None,
        };
        let bs = |a: &str, b: &str, g: f64| CouplingSpec {
            kind: CouplingKind::BeamSplitter,
            mode_a: a.into(),
            mode_b: b.into(),
            rate: two_pi * g,
            sign: None,
            phase: None,
        };
        let disp = |a: &str, b: &str, g: f64| CouplingSpec {
            kind: CouplingKind::Dispersive,
            mode_a: a.into(),
            mode_b: b.into(),
            rate: two_pi * g,
            sign: Some(1),
            phase: None,
        };
        let spec = SystemSpec {
            modes: vec![
                mode("cavity", ModeKind::MicrowaveCavity, 10.0e9, 1.0e6),
                mode("m1", ModeKind::Magnon, 10.0e9, 1.0e6),
                mode("m2", ModeKind::Magnon, 10.01e9, 1.0e6),
                mode("b1", ModeKind::Mechanical, 10.0e6, 100.0),
                mode("b2", ModeKind::Mechanical, 12.0e6, 100.0),
            ],
            couplings: vec![
                bs("cavity", "m1", 3.0e6),
                bs("cavity", "m2", 3.0e6),
                disp("m1", "b1", 0.2),
                disp("m2", "b2", 0.2),
            ],
            drives: vec![DriveSpec {
                target: "m1".into(),
                tones: vec![DriveTone {
                    frequency: two_pi * 9.99e9,
                    amplitude: two_pi * 1.0e12,
                    phase: 0.0,
                }],
                convention: None,
            }],
            frame: FrameSpec::Tone {
                drive: "m1".into(),
                tone: 0,
            },
        };
        let v = validate_system(&spec).unwrap();
        assert_eq!(v.n_modes(), 5);
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn validation_is_idempotent() {
        let v1 = validate_system(&canonical_spec()).unwrap();
        let v2 = validate_system(&v1.to_spec()).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn mechanical_partner_is_normalized_to_slot_b() {
        let mut spec = canonical_spec();
        let c = &mut spec.couplings[1];
        std::mem::swap(&mut c.mode_a, &mut c.mode_b);
        let v = validate_system(&spec).unwrap();
        assert_eq!(v.modes[v.couplings[1].b].spec.kind, ModeKind::Mechanical);
    }

    #[test]
    fn kappa_split_mismatch_is_rejected() {
        let mut spec = canonical_spec();
        spec.modes[0].external_decay = Some(spec.modes[0].decay * 0.6);
        spec.modes[0].internal_decay = Some(spec.modes[0].decay * 0.5);
        assert!(validate_system(&spec).is_err());
        spec.modes[0].internal_decay = Some(spec.modes[0].decay * 0.4);
        assert!(validate_system(&spec).is_ok());
    }

    #[test]
    fn disconnected_graph_warns_but_validates() {
        let mut spec = canonical_spec();
        spec.couplings.remove(0); // cavity now floats free
        let v = validate_system(&spec).unwrap();
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn thermal_occupation_limits() {
        assert_eq!(thermal_occupation(1.0e9, 0.0).unwrap(), 0.0);
        // hbar omega / kB T = ln 2  =>  N = 1
        let omega = 1.0e9;
        let t = HBAR * omega / (K_B * std::f64::consts::LN_2);
        assert_relative_eq!(thermal_occupation(omega, t).unwrap(), 1.0, max_relative = 1e-12);
        // frozen from a 40-digit evaluation of the Bose factor
        let n = thermal_occupation(hz_to_rad(10.0e6), 0.010).unwrap();
        assert_relative_eq!(n, 20.340618351800997, max_relative = 1e-13);
        assert!(thermal_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn thermal_occupation_monotonicity() {
        // strictly increasing in T, strictly decreasing in omega (T > 0)
        let omega = hz_to_rad(5.0e9);
        let mut prev = thermal_occupation(omega, 0.001).unwrap();
        for t in [0.01, 0.1, 1.0, 10.0] {
            let n = thermal_occupation(omega, t).unwrap();
            assert!(n > prev);
            prev = n;
        }
        let t = 0.1;
        let mut prev = thermal_occupation(hz_to_rad(1.0e6), t).unwrap();
        for f in [1.0e7, 1.0e8, 1.0e9, 1.0e10] {
            let n = thermal_occupation(hz_to_rad(f), t).unwrap();
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn bias_field_conversion() {
        let w = bias_to_frequency(10.0 / 28.0).unwrap();
        assert_relative_eq!(rad_to_hz(w), 10.0e9, max_relative = 1e-12);
        let w = bias_to_frequency(0.5).unwrap();
        assert_relative_eq!(rad_to_hz(w), 14.0e9, max_relative = 1e-12);
        assert!(bias_to_frequency(0.0).is_err());
    }

    #[test]
    fn hz_config_round_trip_is_exact_2pi() {
        let spec = canonical_spec();
        let doc = config::ConfigDocument::from_system(&spec);
        let back = doc.to_system().unwrap();
        for (a, b) in spec.modes.iter().zip(back.modes.iter()) {
            assert_relative_eq!(a.frequency, b.frequency, max_relative = 1e-15);
            assert_relative_eq!(a.decay, b.decay, max_relative = 1e-15);
        }
        for (a, b) in spec.couplings.iter().zip(back.couplings.iter()) {
            assert_relative_eq!(a.rate, b.rate, max_relative = 1e-15);
        }
    }
}

#[cfg(test)]
pub use tests::canonical_spec;
