//! Strain waveforms and the policy deciding where a drive acts.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::register::Side;

/// Extra time after `t_star` over which the chirp envelope runs to zero.
pub const CHIRP_TAIL: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Waveform {
    #[default]
    None,
    Monochromatic {
        omega: f64,
    },
    Chirp {
        omega_t: f64,
        omega_l: f64,
        t_star: f64,
    },
}

impl Waveform {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Waveform::Chirp { omega_t, omega_l, t_star } => {
                if !(omega_l > omega_t && omega_t > 0.0 && t_star > 0.0) {
                    return Err(invalid(format!(
                        "chirp needs omega_l > omega_t > 0 and t_star > 0 (got {omega_t}, {omega_l}, {t_star})"
                    )));
                }
                Ok(())
            }
            Waveform::Monochromatic { omega } if !omega.is_finite() => Err(invalid("non-finite drive frequency")),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Waveform::None => 0.0,
            Waveform::Monochromatic { omega } => (omega * t).cos(),
            Waveform::Chirp { omega_t, omega_l, t_star } => {
                let end = t_star + CHIRP_TAIL;
                if !(0.0..=end).contains(&t) {
                    return 0.0;
                }
                let envelope = (std::f64::consts::PI * t / end).sin();
                envelope * (omega_t * t + (omega_l - omega_t) * t * t / (2.0 * t_star)).cos()
            }
        }
    }

    /// Time derivative of the phase; `None` for an undriven waveform.
    pub fn instantaneous_frequency(&self, t: f64) -> Option<f64> {
        match *self {
            Waveform::None => None,
            Waveform::Monochromatic { omega } => Some(omega),
            Waveform::Chirp { omega_t, omega_l, t_star } => Some(omega_t + (omega_l - omega_t) * t / t_star),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Waveform::None)
    }
}

pub fn eval_waveform(w: &Waveform, t: f64) -> f64 {
    w.eval(t)
}

/// `√(mean h²)` over `[t0, t1]` by midpoint quadrature with spacing at most `dt`.
pub fn rms_amplitude(w: &Waveform, t0: f64, t1: f64, dt: f64) -> Result<f64> {
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(invalid("rms window needs t1 > t0 and a positive spacing"));
    }
    let n = ((t1 - t0) / dt).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let sum: f64 = (0..n).map(|k| w.eval(t0 + (k as f64 + 0.5) * h).powi(2)).sum();
    Ok((sum / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolStep {
    PrepBackward,
    PrepForward,
    Readout,
}

impl ProtocolStep {
    pub const ALL: [ProtocolStep; 3] = [ProtocolStep::PrepBackward, ProtocolStep::PrepForward, ProtocolStep::Readout];

    pub fn side(self) -> Side {
        match self {
            ProtocolStep::Readout => Side::R,
            _ => Side::L,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub epsilon: f64,
    pub waveform: Waveform,
    pub sides: Vec<Side>,
    pub active_steps: Vec<ProtocolStep>,
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl DriveSpec {
    pub fn none() -> Self {
        Self { epsilon: 0.0, waveform: Waveform::None, sides: vec![], active_steps: vec![] }
    }

    /// Both boundaries, every protocol step.
    pub fn bilateral(epsilon: f64, waveform: Waveform) -> Self {
        Self { epsilon, waveform, sides: Side::BOTH.to_vec(), active_steps: ProtocolStep::ALL.to_vec() }
    }

    /// Right boundary during readout only.
    pub fn right_readout(epsilon: f64, waveform: Waveform) -> Self {
        Self { epsilon, waveform, sides: vec![Side::R], active_steps: vec![ProtocolStep::Readout] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(invalid(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        self.waveform.validate()
    }

    /// The drive seen by `side` during `step`.
    pub fn active(&self, step: ProtocolStep) -> ActiveDrive {
        let side = step.side();
        if self.sides.contains(&side) && self.active_steps.contains(&step) {
            ActiveDrive { epsilon: self.epsilon, waveform: self.waveform }
        } else {
            ActiveDrive::off()
        }
    }

    /// The drive on one boundary regardless of protocol step (used outside the protocol).
    pub fn on_side(&self, side: Side) -> ActiveDrive {
        if self.sides.contains(&side) {
            ActiveDrive { epsilon: self.epsilon, waveform: self.waveform }
        } else {
            ActiveDrive::off()
        }
    }
}

/// `ε h(t)` multiplying the strain operator during one evolution segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActiveDrive {
    pub epsilon: f64,
    pub waveform: Waveform,
}

impl ActiveDrive {
    pub fn off() -> Self {
        Self { epsilon: 0.0, waveform: Waveform::None }
    }

    pub fn new(epsilon: f64, waveform: Waveform) -> Self {
        Self { epsilon, waveform }
    }

    pub fn is_off(&self) -> bool {
        self.epsilon == 0.0 || self.waveform.is_none()
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        if self.is_off() {
            0.0
        } else {
            self.epsilon * self.waveform.eval(t)
        }
    }
}
