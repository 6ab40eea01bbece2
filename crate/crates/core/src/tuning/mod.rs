//! Controller parameterizations, the matching loss, swarm search and the
//! post-tuning stability screen.

mod controller;
mod loss;
mod pso;
mod screen;

pub use controller::{build_controller, ControllerSpec, Structure};
pub use loss::{loss_j, LossEvaluator, PENALTY};
pub use pso::{pso_minimize, PsoOutcome, PsoSettings, SearchBounds};
pub use screen::{stability_screen, Verdict, TAIL_FRACTION, TAIL_RATIO};

use serde::Serialize;

use crate::error::Result;
use crate::freq::{default_band, loop_margins};
use crate::sim::{closed_loop_sim, step_metrics, Signal};
use crate::tf::DiscreteTf;

/// Default loss threshold for a `likely_bibo` verdict: this multiple of the
/// reference output energy over the horizon.
pub const J_THRESHOLD_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub theta_star: Vec<f64>,
    pub j_star: f64,
    pub restored_impulse: Vec<f64>,
    pub verdict: Verdict,
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub j_threshold: f64,
}

/// Minimizes the loss over `bounds`, starting the swarm from `theta0`, and
/// screens the result.
pub fn tune(
    evaluator: &LossEvaluator,
    bounds: &SearchBounds,
    settings: &PsoSettings,
    theta0: Option<&[f64]>,
    j_threshold: Option<f64>,
) -> Result<TuneResult> {
    let out = pso_minimize(|th| evaluator.loss(th), bounds, settings, theta0)?;
    let j_threshold = j_threshold.unwrap_or(J_THRESHOLD_FACTOR * evaluator.reference_energy());
    let j_star = evaluator.loss(&out.theta);
    let restored = evaluator.restore(&out.theta).unwrap_or_default();
    let verdict = stability_screen(&restored, j_star, j_threshold);
    Ok(TuneResult {
        theta_star: out.theta,
        j_star,
        restored_impulse: restored,
        verdict,
        history: out.history,
        evaluations: out.evaluations,
        j_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub gain: f64,
    pub overshoot_percent: f64,
    pub settling_time: f64,
    pub steady_state: f64,
    pub omega_c: Option<f64>,
    pub phi_m: Option<f64>,
}

/// Step and loop metrics with the plant scaled by each gain. Needs a plant
/// model, so it serves validation only.
pub fn gain_robustness_report(p: &DiscreteTf, c: &DiscreteTf, gains: &[f64], r: &Signal) -> Result<Vec<RobustnessRow>> {
    let setpoint = r.samples().last().copied().unwrap_or(1.0);
    gains
        .iter()
        .map(|&g| {
            let pg = p.scale(g);
            let (_, y) = closed_loop_sim(&pg, c, r)?;
            let m = step_metrics(&y, setpoint)?;
            let margins = loop_margins(&pg.mul(c)?, default_band(p.ts())).ok();
            Ok(RobustnessRow {
                gain: g,
                overshoot_percent: m.overshoot_percent,
                settling_time: m.settling_time,
                steady_state: m.steady_state,
                omega_c: margins.map(|x| x.omega_c),
                phi_m: margins.map(|x| x.phi_m),
            })
        })
        .collect()
}
