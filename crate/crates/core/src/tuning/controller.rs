use serde::{Deserialize, Serialize};

use crate::discretize::tustin;
use crate::error::{Error, Result};
use crate::frac::{f2i, FracTf, OustaloupSettings};
use crate::tf::{DiscreteTf, RationalTf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// `Kp + Ki/s + Kd s/(tau s + 1)`, theta = `[Kp, Ki, Kd]`.
    IoPid,
    /// `Kp + Ki/s^lambda + Kd s^mu/(tau s^mu + 1)`, theta = `[Kp, Ki, lambda, Kd, mu]`.
    FoPid,
    /// `Kp + Ki/s^lambda`, theta = `[Kp, Ki, lambda]`.
    FoPi,
}

impl Structure {
    pub fn dim(self) -> usize {
        self.parameter_names().len()
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Structure::IoPid => &["kp", "ki", "kd"],
            Structure::FoPid => &["kp", "ki", "lambda", "kd", "mu"],
            Structure::FoPi => &["kp", "ki", "lambda"],
        }
    }

    /// Indices of fractional orders in theta.
    fn order_indices(self) -> &'static [usize] {
        match self {
            Structure::IoPid => &[],
            Structure::FoPid => &[2, 4],
            Structure::FoPi => &[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    pub structure: Structure,
    pub theta: Vec<f64>,
    /// Derivative filter time constant; the sampling time by convention.
    pub tau: f64,
    pub ts: f64,
    /// Used by the fractional structures only.
    pub oust: OustaloupSettings,
}

impl ControllerSpec {
    pub fn new(structure: Structure, theta: Vec<f64>, ts: f64, oust: OustaloupSettings) -> Result<Self> {
        let spec = Self {
            structure,
            theta,
            tau: ts,
            ts,
            oust,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_theta(&self, theta: &[f64]) -> Self {
        Self {
            theta: theta.to_vec(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.structure.dim();
        if self.theta.len() != dim {
            return Err(Error::InvalidController(format!(
                "{:?} takes {dim} parameters, got {}",
                self.structure,
                self.theta.len()
            )));
        }
        if let Some(x) = self.theta.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidController(format!("non-finite parameter {x}")));
        }
        let orders = self.structure.order_indices();
        for (i, &x) in self.theta.iter().enumerate() {
            let name = self.structure.parameter_names()[i];
            if orders.contains(&i) {
                if !(0.0..=2.0).contains(&x) {
                    return Err(Error::InvalidController(format!("{name} = {x} outside [0, 2]")));
                }
            } else if x < 0.0 {
                return Err(Error::InvalidController(format!("gain {name} = {x} is negative")));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidController(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        crate::tf::check_ts(self.ts)?;
        if self.structure != Structure::IoPid {
            self.oust.validate()?;
        }
        Ok(())
    }

    /// Continuous-time fractional form. Integer structures have integer exponents.
    pub fn continuous(&self) -> Result<FracTf> {
        self.validate()?;
        let t = &self.theta;
        let tau = self.tau;
        match self.structure {
            Structure::IoPid => {
                let (kp, ki, kd) = (t[0], t[1], t[2]);
                FracTf::new(
                    &[(kp * tau + kd, 2.0), (kp + ki * tau, 1.0), (ki, 0.0)],
                    &[(tau, 2.0), (1.0, 1.0)],
                )
            }
            Structure::FoPid => {
                let (kp, ki, lam, kd, mu) = (t[0], t[1], t[2], t[3], t[4]);
                FracTf::new(
                    &[
                        (kp, lam),
                        (kp * tau, lam + mu),
                        (ki, 0.0),
                        (ki * tau, mu),
                        (kd, lam + mu),
                    ],
                    &[(1.0, lam), (tau, lam + mu)],
                )
            }
            Structure::FoPi => {
                let (kp, ki, lam) = (t[0], t[1], t[2]);
                FracTf::new(&[(kp, lam), (ki, 0.0)], &[(1.0, lam)])
            }
        }
    }

    /// Integer-order continuous approximant.
    pub fn rational(&self) -> Result<RationalTf> {
        f2i(&self.continuous()?, &self.oust)
    }
}

/// Discrete controller `tustin(f2i(C(s; theta)))`; must be biproper.
pub fn build_controller(spec: &ControllerSpec) -> Result<DiscreteTf> {
    let g = spec.rational()?;
    if !g.is_biproper() {
        return Err(Error::NotBiproper);
    }
    let c = tustin(&g, spec.ts)?;
    if !c.is_biproper() {
        return Err(Error::NotBiproper);
    }
    Ok(c)
}
