//! Fractional-order transfer functions and their Oustaloup approximation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretize::tustin;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::{DiscreteTf, RationalTf};

/// Fractional parts smaller than this are treated as integer exponents.
const INTEGER_TOL: f64 = 1e-12;

/// Pole radii at or above `1 - STABILITY_MARGIN` reject a reference model.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// `sum(a_i s^alpha_i) / sum(b_j s^beta_j)`, stored as `(coefficient, exponent)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FracTf {
    num: Vec<(f64, f64)>,
    den: Vec<(f64, f64)>,
}

fn merge_terms(terms: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(terms.len());
    for &(c, e) in terms {
        if !c.is_finite() || !e.is_finite() {
            return Err(Error::InvalidFracTf(format!("non-finite term {c} s^{e}")));
        }
        match out.iter_mut().find(|(_, x)| *x == e) {
            Some(t) => t.0 += c,
            None => out.push((c, e)),
        }
    }
    out.retain(|&(c, _)| c != 0.0);
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(out)
}

impl FracTf {
    pub fn new(num: &[(f64, f64)], den: &[(f64, f64)]) -> Result<Self> {
        let num = merge_terms(num)?;
        let den = merge_terms(den)?;
        if den.is_empty() {
            return Err(Error::InvalidFracTf("denominator has no nonzero term".into()));
        }
        Ok(Self { num, den })
    }

    pub fn constant(k: f64) -> Self {
        Self::new(&[(k, 0.0)], &[(1.0, 0.0)]).expect("unit denominator")
    }

    pub fn num_terms(&self) -> &[(f64, f64)] {
        &self.num
    }

    pub fn den_terms(&self) -> &[(f64, f64)] {
        &self.den
    }

    pub fn is_integer_order(&self) -> bool {
        self.num
            .iter()
            .chain(&self.den)
            .all(|&(_, e)| (e - e.round()).abs() < INTEGER_TOL)
    }

    fn cross(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
        a.iter()
            .flat_map(|&(ca, ea)| b.iter().map(move |&(cb, eb)| (ca * cb, ea + eb)))
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Self::new(&Self::cross(&self.num, &other.num), &Self::cross(&self.den, &other.den))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut num = Self::cross(&self.num, &other.den);
        num.extend(Self::cross(&other.num, &self.den));
        Self::new(&num, &Self::cross(&self.den, &other.den))
    }

    /// Exact evaluation on the principal branch of `s^alpha`.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let sum = |terms: &[(f64, f64)]| -> Complex64 { terms.iter().map(|&(c, e)| s.powf(e) * c).sum() };
        let d = sum(&self.den);
        if d.norm() < crate::tf::POLE_HIT_TOL {
            return Err(Error::PoleHit);
        }
        Ok(sum(&self.num) / d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OustaloupSettings {
    /// Zero-pole pairs per side; the filter has `2 * order + 1` factors.
    pub order: usize,
    pub omega_b: f64,
    pub omega_h: f64,
}

impl OustaloupSettings {
    pub fn new(order: usize, omega_b: f64, omega_h: f64) -> Result<Self> {
        let s = Self {
            order,
            omega_b,
            omega_h,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidOustaloup("order must be at least 1".into()));
        }
        if !(self.omega_b > 0.0 && self.omega_b < self.omega_h && self.omega_h.is_finite()) {
            return Err(Error::InvalidOustaloup(format!(
                "need 0 < omega_b < omega_h, got ({}, {})",
                self.omega_b, self.omega_h
            )));
        }
        Ok(())
    }

    /// Zeros and poles (both on the negative real axis) and gain of the
    /// approximation of `s^alpha`.
    pub fn factors(&self, alpha: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        self.validate()?;
        if !(alpha.abs() < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let n = self.order as i64;
        let ratio = self.omega_h / self.omega_b;
        let width = (2 * n + 1) as f64;
        let corner = |k: i64, sign: f64| self.omega_b * ratio.powf(((k + n) as f64 + 0.5 + sign * alpha / 2.0) / width);
        let zeros = (-n..=n).map(|k| -corner(k, -1.0)).collect();
        let poles = (-n..=n).map(|k| -corner(k, 1.0)).collect();
        Ok((zeros, poles, self.omega_h.powf(alpha)))
    }
}

/// Oustaloup approximation of `s^alpha`, `|alpha| < 1`. Exactly 1 for `alpha = 0`.
pub fn oustaloup(alpha: f64, settings: &OustaloupSettings) -> Result<RationalTf> {
    settings.validate()?;
    if alpha == 0.0 {
        return Ok(RationalTf::constant(1.0));
    }
    let (zeros, poles, k) = settings.factors(alpha)?;
    let to_c = |v: Vec<f64>| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
    RationalTf::new(
        Polynomial::from_roots(&to_c(zeros)).scale(k),
        Polynomial::from_roots(&to_c(poles)),
    )
}

/// Splits `alpha = n + f` with integer `n` and the smallest `|f|`, ties toward `f >= 0`.
pub fn split_exponent(alpha: f64) -> (i64, f64) {
    let n = (alpha - 0.5).ceil();
    let f = alpha - n;
    if f.abs() < INTEGER_TOL || (f.abs() - 1.0).abs() < INTEGER_TOL {
        (alpha.round() as i64, 0.0)
    } else {
        (n as i64, f)
    }
}

/// Integer-order approximation: every `s^alpha` becomes `s^n * oustaloup(f)`,
/// flattened over the common denominator of the substituted filters.
pub fn f2i(g: &FracTf, settings: &OustaloupSettings) -> Result<RationalTf> {
    let split = |terms: &[(f64, f64)]| -> Vec<(f64, i64, f64)> {
        terms
            .iter()
            .map(|&(c, e)| {
                let (n, f) = split_exponent(e);
                (c, n, f)
            })
            .collect()
    };
    let num = split(&g.num);
    let den = split(&g.den);

    let mut fracs: Vec<f64> = Vec::new();
    for &(_, _, f) in num.iter().chain(&den) {
        if f != 0.0 && !fracs.iter().any(|&x| (x - f).abs() < INTEGER_TOL) {
            fracs.push(f);
        }
    }
    let filters = fracs
        .iter()
        .map(|&f| oustaloup(f, settings))
        .collect::<Result<Vec<_>>>()?;

    let shift = num.iter().chain(&den).map(|t| t.1).min().unwrap_or(0);
    let flatten = |terms: &[(f64, i64, f64)]| -> Polynomial {
        let mut acc = Polynomial::zero();
        for &(c, n, f) in terms {
            let mut p = Polynomial::monomial((n - shift) as usize).scale(c);
            for (g, filt) in fracs.iter().zip(&filters) {
                let same = f != 0.0 && (g - f).abs() < INTEGER_TOL;
                p = &p * if same { filt.num() } else { filt.den() };
            }
            acc = &acc + &p;
        }
        acc
    };
    RationalTf::new(flatten(&num), flatten(&den))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceModelSpec {
    /// Phase margin in degrees.
    pub phi_m: f64,
    /// Gain-crossover frequency in rad/s.
    pub omega_c: f64,
    pub oust: OustaloupSettings,
    pub ts: f64,
}

impl ReferenceModelSpec {
    pub fn new(phi_m: f64, omega_c: f64, oust: OustaloupSettings, ts: f64) -> Result<Self> {
        let s = Self {
            phi_m,
            omega_c,
            oust,
            ts,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_m > 0.0 && self.phi_m < 180.0) {
            return Err(Error::InvalidReference(format!(
                "phase margin {} outside (0, 180) degrees",
                self.phi_m
            )));
        }
        if !(self.omega_c > self.oust.omega_b && self.omega_c < self.oust.omega_h) {
            return Err(Error::InvalidReference(format!(
                "crossover {} outside the Oustaloup band ({}, {})",
                self.omega_c, self.oust.omega_b, self.oust.omega_h
            )));
        }
        self.oust.validate()?;
        crate::tf::check_ts(self.ts)
    }

    /// Order of the ideal loop, `2 (1 - phi_m / 180)`.
    pub fn gamma(&self) -> f64 {
        gamma_from_phase_margin(self.phi_m)
    }
}

pub fn gamma_from_phase_margin(phi_m_deg: f64) -> f64 {
    2.0 * (1.0 - phi_m_deg / 180.0)
}

/// `(omega_c / s)^gamma`
pub fn bitf(spec: &ReferenceModelSpec) -> FracTf {
    let gamma = spec.gamma();
    FracTf::new(&[(spec.omega_c.powf(gamma), 0.0)], &[(1.0, gamma)]).expect("valid ideal loop")
}

#[derive(Debug, Clone)]
pub struct ReferenceModel {
    /// Closed loop `L / (1 + L)`.
    pub m_ref: DiscreteTf,
    /// Discretized approximant of the ideal open loop.
    pub l_flat: DiscreteTf,
    pub pole_radii: Vec<f64>,
}

pub fn build_reference_model(spec: &ReferenceModelSpec) -> Result<ReferenceModel> {
    spec.validate()?;
    let l_flat = tustin(&f2i(&bitf(spec), &spec.oust)?, spec.ts)?;
    let m_ref = l_flat.feedback_unity()?;
    let mut pole_radii: Vec<f64> = m_ref.poles().iter().map(|p| p.norm()).collect();
    pole_radii.sort_by(|a, b| b.total_cmp(a));
    if pole_radii.iter().any(|&r| r >= 1.0 - STABILITY_MARGIN) {
        return Err(Error::ReferenceModelUnstable { radii: pole_radii });
    }
    Ok(ReferenceModel {
        m_ref,
        l_flat,
        pole_radii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(order: usize) -> OustaloupSettings {
        OustaloupSettings::new(order, 1e-4, 1e4).unwrap()
    }

    fn jw(w: f64) -> Complex64 {
        Complex64::new(0.0, w)
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_from_phase_margin(90.0), 1.0);
        assert!((gamma_from_phase_margin(80.0) - 10.0 / 9.0).abs() < 1e-15);
        let spec = ReferenceModelSpec::new(60.0, 12.0, OustaloupSettings::new(7, 1e-3, 1e6).unwrap(), 0.01).unwrap();
        assert!((spec.gamma() - 4.0 / 3.0).abs() < 1e-15);
        let l = bitf(&spec);
        assert!((l.num_terms()[0].0 - 12f64.powf(4.0 / 3.0)).abs() < 1e-12);
        let mut last = 2.0;
        for phi in [1.0, 30.0, 45.0, 60.0, 80.0, 90.0, 120.0, 179.0] {
            let g = gamma_from_phase_margin(phi);
            assert!(g > 0.0 && g < 2.0 && g < last);
            last = g;
        }
    }

    #[test]
    fn split_prefers_small_fraction() {
        assert_eq!(split_exponent(1.0), (1, 0.0));
        assert_eq!(split_exponent(0.5), (0, 0.5));
        assert_eq!(split_exponent(1.5), (1, 0.5));
        let (n, f) = split_exponent(10.0 / 9.0);
        assert_eq!(n, 1);
        assert!((f - 1.0 / 9.0).abs() < 1e-15);
        let (n, f) = split_exponent(1.5465);
        assert_eq!(n, 2);
        assert!((f + 0.4535).abs() < 1e-12);
        assert_eq!(split_exponent(-0.3).0, 0);
    }

    #[test]
    fn oustaloup_zero_order_is_unity() {
        let g = oustaloup(0.0, &band(5)).unwrap();
        assert_eq!(g, RationalTf::constant(1.0));
        assert_eq!(oustaloup(1.0, &band(5)), Err(Error::AlphaOutOfRange(1.0)));
        assert!(OustaloupSettings::new(0, 1.0, 2.0).is_err());
        assert!(OustaloupSettings::new(3, 2.0, 1.0).is_err());
    }

    #[test]
    fn oustaloup_half_order_at_center() {
        let g = oustaloup(0.5, &band(5)).unwrap();
        let v = g.eval(jw(1.0)).unwrap();
        assert!((v.arg().to_degrees() - 45.0).abs() < 1.0);
        assert!((v.norm() - 1.0).abs() < 0.05);
    }

    #[test]
    fn oustaloup_reciprocity() {
        let pos = oustaloup(0.5, &band(5)).unwrap();
        let neg = oustaloup(-0.5, &band(5)).unwrap();
        for k in 0..16 {
            let w = 10f64.powf(-3.5 + 7.0 * (k as f64 * 0.618).fract());
            let prod = pos.eval(jw(w)).unwrap() * neg.eval(jw(w)).unwrap();
            assert!((prod - 1.0).norm() < 1e-9, "w = {w}: {prod}");
        }
    }

    #[test]
    fn oustaloup_phase_and_slope_in_central_decades() {
        let s = band(5);
        for alpha in [-0.7, -0.3, 0.25, 0.5, 0.9] {
            let g = oustaloup(alpha, &s).unwrap();
            let grid: Vec<f64> = (0..50).map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 49.0)).collect();
            let resp: Vec<Complex64> = grid.iter().map(|&w| g.eval(jw(w)).unwrap()).collect();
            for v in &resp {
                assert!((v.arg().to_degrees() - 90.0 * alpha).abs() < 2.0);
            }
            let db = |v: &Complex64| 20.0 * v.norm().log10();
            let slope = (db(&resp[49]) - db(&resp[0])) / 2.0;
            assert!((slope - 20.0 * alpha).abs() <= 0.1 * (20.0 * alpha).abs());
        }
    }

    #[test]
    fn f2i_integer_order_is_exact() {
        let g = FracTf::new(&[(1.0, 0.0)], &[(1.0, 1.0)]).unwrap();
        let r = f2i(&g, &band(5)).unwrap();
        assert_eq!(r, RationalTf::from_coeffs(&[1.0], &[1.0, 0.0]).unwrap());
        let g = FracTf::new(&[(2.0, 1.0), (3.0, 0.0)], &[(1.0, 2.0), (4.0, 1.0), (5.0, 0.0)]).unwrap();
        let r = f2i(&g, &band(5)).unwrap();
        assert_eq!(r, RationalTf::from_coeffs(&[2.0, 3.0], &[1.0, 4.0, 5.0]).unwrap());
    }

    #[test]
    fn f2i_bitf_order_bookkeeping() {
        let spec = ReferenceModelSpec::new(80.0, 1.0, band(5), 0.01).unwrap();
        let r = f2i(&bitf(&spec), &band(5)).unwrap();
        assert_eq!(r.den().degree(), 2 * 5 + 2);
        assert_eq!(r.num().degree(), 2 * 5 + 1);
    }

    #[test]
    fn f2i_matches_exact_fractional_response() {
        let g = FracTf::new(&[(1.3, 1.1), (0.4, 0.0), (0.8, 1.55)], &[(1.0, 1.1), (0.01, 1.6)]).unwrap();
        let r = f2i(&g, &band(5)).unwrap();
        for w in [0.0316, 0.316, 1.0, 3.16, 31.6] {
            let exact = g.eval(jw(w)).unwrap();
            let approx = r.eval(jw(w)).unwrap();
            assert!((approx.norm() / exact.norm() - 1.0).abs() < 0.05, "w = {w}");
            assert!((approx / exact).arg().to_degrees().abs() < 2.0, "w = {w}");
        }
    }

    #[test]
    fn frac_algebra_matches_pointwise() {
        let a = FracTf::new(&[(1.0, 0.5)], &[(1.0, 1.2), (2.0, 0.0)]).unwrap();
        let b = FracTf::new(&[(3.0, 0.0), (1.0, 0.3)], &[(1.0, 0.7)]).unwrap();
        let s = Complex64::new(0.2, 1.4);
        let (va, vb) = (a.eval(s).unwrap(), b.eval(s).unwrap());
        assert!((a.mul(&b).unwrap().eval(s).unwrap() - va * vb).norm() < 1e-12);
        assert!((a.add(&b).unwrap().eval(s).unwrap() - (va + vb)).norm() < 1e-12);
        let merged = FracTf::new(&[(1.0, 0.5), (2.0, 0.5), (1.0, 1.0), (-1.0, 1.0)], &[(1.0, 0.0)]).unwrap();
        assert_eq!(merged.num_terms(), &[(3.0, 0.5)]);
        assert!(FracTf::new(&[(1.0, 0.0)], &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn reference_model_first_order_case() {
        let ts = 0.01;
        let spec = ReferenceModelSpec::new(90.0, 1.0, band(5), ts).unwrap();
        let m = build_reference_model(&spec).unwrap();
        assert_eq!(m.m_ref.poles().len(), 1);
        let want = (1.0 - ts / 2.0) / (1.0 + ts / 2.0);
        assert!((m.m_ref.poles()[0].re - want).abs() < 1e-14);
        assert!((m.m_ref.eval(Complex64::new(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn reference_models_are_stable_on_grid() {
        for phi in [30.0, 45.0, 60.0, 80.0, 90.0, 120.0] {
            for wc in [0.5, 1.0, 12.0] {
                let spec = ReferenceModelSpec::new(phi, wc, band(5), 0.01).unwrap();
                let m = build_reference_model(&spec).unwrap();
                assert!(m.pole_radii[0] < 1.0 - STABILITY_MARGIN, "{phi} {wc}");
            }
        }
        let ex2 = ReferenceModelSpec::new(60.0, 12.0, OustaloupSettings::new(7, 1e-3, 1e6).unwrap(), 0.01).unwrap();
        assert!(build_reference_model(&ex2).unwrap().pole_radii[0] < 1.0);
    }
}
