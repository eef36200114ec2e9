use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// A scalar input signal u(t).
#[derive(Clone, Debug, PartialEq)]
pub enum Waveform {
    Constant(f64),
    /// `offset + amplitude · sin(2π f t + phase)`
    Sin {
        offset: f64,
        amplitude: f64,
        freq: f64,
        phase: f64,
    },
    /// Piecewise linear through `(t, v)` samples, held constant outside.
    Table(Vec<(f64, f64)>),
}

impl Waveform {
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Model("tabulated waveform needs at least one sample".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Model("tabulated waveform times must increase strictly".into()));
        }
        Ok(Waveform::Table(points))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Waveform::Constant(v) => *v,
            Waveform::Sin {
                offset,
                amplitude,
                freq,
                phase,
            } => offset + amplitude * (2.0 * PI * freq * t + phase).sin(),
            Waveform::Table(p) => {
                if t <= p[0].0 {
                    return p[0].1;
                }
                let last = p[p.len() - 1];
                if t >= last.0 {
                    return last.1;
                }
                let k = p.partition_point(|&(tk, _)| tk <= t);
                let ((t0, v0), (t1, v1)) = (p[k - 1], p[k]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

impl fmt::Display for Waveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Waveform::Constant(v) => write!(f, "DC {v:e}"),
            Waveform::Sin {
                offset,
                amplitude,
                freq,
                phase,
            } => {
                write!(f, "SIN {offset:e} {amplitude:e} {freq:e}")?;
                if *phase != 0.0 {
                    write!(f, " {phase:e}")?;
                }
                Ok(())
            }
            Waveform::Table(p) => {
                write!(f, "TABLE")?;
                for (t, v) in p {
                    write!(f, " {t:e} {v:e}")?;
                }
                Ok(())
            }
        }
    }
}

/// Vector input `u(t)`, one waveform per port.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct InputSignal {
    pub channels: Vec<Waveform>,
}

impl InputSignal {
    pub fn new(channels: Vec<Waveform>) -> Self {
        InputSignal { channels }
    }

    pub fn zero(m: usize) -> Self {
        InputSignal {
            channels: vec![Waveform::Constant(0.0); m],
        }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.channels.iter().map(|w| w.eval(t)).collect()
    }
}
