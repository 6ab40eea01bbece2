use crate::error::{Error, Result};
use crate::sim::{
    fictitious_reference_samples, toeplitz_mul_samples, toeplitz_solve_samples, ExperimentData, Signal, OVERFLOW_LIMIT,
};

use super::controller::{build_controller, ControllerSpec};

/// Loss value assigned to parameter vectors that cannot be evaluated.
pub const PENALTY: f64 = 1e18;

fn check_overflow(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(x.abs() <= OVERFLOW_LIMIT)) {
        Some(i) => Err(Error::NonFiniteSample(i)),
        None => Ok(()),
    }
}

/// Evaluates the data-driven matching loss for one experiment and one
/// reference impulse response. Never touches a plant model.
#[derive(Debug, Clone)]
pub struct LossEvaluator {
    template: ControllerSpec,
    data: ExperimentData,
    m_ref: Vec<f64>,
    ref_output: Vec<f64>,
}

impl LossEvaluator {
    pub fn new(template: ControllerSpec, data: ExperimentData, m_ref: &Signal) -> Result<Self> {
        if m_ref.len() != data.len() {
            return Err(Error::LengthMismatch(data.len(), m_ref.len()));
        }
        if (template.ts - data.ts()).abs() > 1e-12 * data.ts() {
            return Err(Error::SamplingMismatch(template.ts, data.ts()));
        }
        let ref_output = toeplitz_mul_samples(data.r().samples(), m_ref.samples())?;
        Ok(Self {
            template,
            data,
            m_ref: m_ref.samples().to_vec(),
            ref_output,
        })
    }

    pub fn data(&self) -> &ExperimentData {
        &self.data
    }

    pub fn template(&self) -> &ControllerSpec {
        &self.template
    }

    pub fn m_ref(&self) -> &[f64] {
        &self.m_ref
    }

    /// Response of the reference model to the logged reference input.
    pub fn reference_output(&self) -> &[f64] {
        &self.ref_output
    }

    /// Squared norm of the reference output over the horizon.
    pub fn reference_energy(&self) -> f64 {
        self.ref_output.iter().map(|x| x * x).sum()
    }

    /// Closed-loop impulse response implied by the data under `theta`.
    pub fn restore(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let c = build_controller(&self.template.with_theta(theta))?;
        let rt = fictitious_reference_samples(&c, self.data.u().samples(), self.data.y().samples())?;
        check_overflow(&rt)?;
        let t = toeplitz_solve_samples(&rt, self.data.y().samples())?;
        check_overflow(&t)?;
        Ok(t)
    }

    /// Estimated closed-loop response to the logged reference under `theta`.
    pub fn estimated_output(&self, theta: &[f64]) -> Result<Vec<f64>> {
        toeplitz_mul_samples(self.data.r().samples(), &self.restore(theta)?)
    }

    pub fn try_loss(&self, theta: &[f64]) -> Result<f64> {
        let t = self.restore(theta)?;
        let diff: Vec<f64> = t.iter().zip(&self.m_ref).map(|(a, b)| a - b).collect();
        let e = toeplitz_mul_samples(self.data.r().samples(), &diff)?;
        let j: f64 = e.iter().map(|x| x * x).sum();
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::NonFiniteSample(0))
        }
    }

    /// Loss with failures mapped to [`PENALTY`].
    pub fn loss(&self, theta: &[f64]) -> f64 {
        self.try_loss(theta).unwrap_or(PENALTY).min(PENALTY)
    }
}

/// One-off loss evaluation; see [`LossEvaluator`] for repeated use.
pub fn loss_j(theta: &[f64], template: &ControllerSpec, data: &ExperimentData, m_ref: &Signal) -> f64 {
    match LossEvaluator::new(template.clone(), data.clone(), m_ref) {
        Ok(ev) => ev.loss(theta),
        Err(_) => PENALTY,
    }
}
