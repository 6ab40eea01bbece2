//! Tustin discretization.
//!
//! The bilinear substitution is applied to roots rather than coefficients:
//! a continuous root `s_k` maps to `(1 + s_k t_s/2) / (1 - s_k t_s/2)` and the
//! relative-degree excess becomes zeros at `z = -1`.

use crate::error::{Error, Result};
use crate::frac::{f2i, FracTf, OustaloupSettings};
use crate::tf::{check_ts, Bilinear, DiscreteTf, RationalTf, WForm};

/// Bilinear transform `s = (2/t_s)(z - 1)/(z + 1)` without pre-warping.
pub fn tustin(g: &RationalTf, ts: f64) -> Result<DiscreteTf> {
    check_ts(ts)?;
    if !g.is_proper() {
        return Err(Error::NonProper {
            num: g.num().degree(),
            den: g.den().degree(),
        });
    }
    if g.num().is_zero() {
        return Ok(DiscreteTf::zero(ts));
    }
    let w = WForm {
        lead: g.num().leading() / g.den().leading(),
        zeros: g.zeros()?,
        inf: 0,
        poles: g.poles()?,
    };
    Bilinear::new(ts).z_form(&w).map_err(|e| match e {
        Error::NonProper { .. } => Error::DegenerateDenominator,
        other => other,
    })
}

/// `tustin(f2i(g))`
pub fn c2d_f2i(g: &FracTf, settings: &OustaloupSettings, ts: f64) -> Result<DiscreteTf> {
    tustin(&f2i(g, settings)?, ts)
}
