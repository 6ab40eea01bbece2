//! Rational transfer functions in `s` and `z`.
//!
//! Continuous-time systems ([`RationalTf`]) are stored as numerator and
//! denominator coefficient polynomials. Discrete-time systems ([`DiscreteTf`])
//! are stored in zero-pole-gain form: Oustaloup approximants put clusters of
//! poles within 1e-6 of `z = 1`, and expanded `z`-polynomials cannot locate
//! such clusters in double precision. Sums and feedback of discrete systems
//! are therefore formed in the bilinear variable `w = (2/t_s)(z-1)/(z+1)`,
//! where those clusters are spread over many decades and the polynomials are
//! well graded, and the new roots are mapped back to `z`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Magnitude below which a denominator evaluation is treated as a pole hit.
pub const POLE_HIT_TOL: f64 = 1e-300;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalTf {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTf {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den))
    }

    pub fn constant(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn is_biproper(&self) -> bool {
        !self.num.is_zero() && self.num.degree() == self.den.degree()
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval_complex(s);
        if d.norm() < POLE_HIT_TOL {
            return Err(Error::PoleHit);
        }
        Ok(self.num.eval_complex(s) / d)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            num: &(&self.num * &other.den) + &(&other.num * &self.den),
            den: &self.den * &other.den,
        }
    }

    /// Swaps numerator and denominator. The result may be improper; check
    /// [`RationalTf::is_proper`] where that matters.
    pub fn inverse(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::NonInvertible);
        }
        Ok(Self {
            num: self.den.clone(),
            den: self.num.clone(),
        })
    }

    /// `G / (1 + G)`
    pub fn feedback_unity(&self) -> Result<Self> {
        let den = &self.den + &self.num;
        if den.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        Ok(Self {
            num: self.num.clone(),
            den,
        })
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        self.num.roots()
    }
}

/// Proper discrete-time transfer function in zero-pole-gain form:
/// `gain * prod(z - zeros) / prod(z - poles)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTf {
    gain: f64,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    ts: f64,
}

pub(crate) fn check_ts(ts: f64) -> Result<()> {
    if ts > 0.0 && ts.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSamplingTime(ts))
    }
}

fn check_conjugate_closed(roots: &[Complex64]) -> Result<()> {
    for r in roots.iter().filter(|r| r.im != 0.0) {
        let tol = 1e-9 * (1.0 + r.norm());
        let paired = roots.iter().any(|q| (q - r.conj()).norm() <= tol);
        if !paired {
            return Err(Error::InvalidSettings(format!(
                "root {r} has no complex conjugate partner"
            )));
        }
    }
    Ok(())
}

impl DiscreteTf {
    pub fn from_zpk(gain: f64, zeros: Vec<Complex64>, poles: Vec<Complex64>, ts: f64) -> Result<Self> {
        check_ts(ts)?;
        if !gain.is_finite() {
            return Err(Error::InvalidSettings(format!("non-finite gain {gain}")));
        }
        if zeros.len() > poles.len() {
            return Err(Error::NonProper {
                num: zeros.len(),
                den: poles.len(),
            });
        }
        check_conjugate_closed(&zeros)?;
        check_conjugate_closed(&poles)?;
        if gain == 0.0 {
            return Ok(Self::zero(ts));
        }
        Ok(Self { gain, zeros, poles, ts })
    }

    /// From coefficient lists in `z`, highest power first.
    pub fn from_coeffs(num: &[f64], den: &[f64], ts: f64) -> Result<Self> {
        Self::from_polys(&Polynomial::new(num), &Polynomial::new(den), ts)
    }

    pub fn from_polys(num: &Polynomial, den: &Polynomial, ts: f64) -> Result<Self> {
        check_ts(ts)?;
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self::zero(ts));
        }
        if num.degree() > den.degree() {
            return Err(Error::NonProper {
                num: num.degree(),
                den: den.degree(),
            });
        }
        Self::from_zpk(num.leading() / den.leading(), num.roots()?, den.roots()?, ts)
    }

    pub fn zero(ts: f64) -> Self {
        Self {
            gain: 0.0,
            zeros: Vec::new(),
            poles: Vec::new(),
            ts,
        }
    }

    pub fn constant(k: f64, ts: f64) -> Result<Self> {
        Self::from_zpk(k, Vec::new(), Vec::new(), ts)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn is_zero(&self) -> bool {
        self.gain == 0.0
    }

    pub fn is_biproper(&self) -> bool {
        !self.is_zero() && self.zeros.len() == self.poles.len()
    }

    pub fn relative_degree(&self) -> usize {
        self.poles.len() - self.zeros.len()
    }

    /// `lim_{z -> inf} G(z)`
    pub fn direct_feedthrough(&self) -> f64 {
        if self.is_biproper() {
            self.gain
        } else {
            0.0
        }
    }

    /// Expanded numerator polynomial in `z`. Lossy for clustered roots; use
    /// for display and interchange, not for simulation.
    pub fn numerator(&self) -> Polynomial {
        Polynomial::from_roots(&self.zeros).scale(self.gain)
    }

    pub fn denominator(&self) -> Polynomial {
        Polynomial::from_roots(&self.poles)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let den: Complex64 = self.poles.iter().map(|p| z - p).product();
        if den.norm() < POLE_HIT_TOL {
            return Err(Error::PoleHit);
        }
        let num: Complex64 = self.zeros.iter().map(|q| z - q).product();
        Ok(num * self.gain / den)
    }

    /// Frequency response at `omega` rad/s, i.e. at `z = exp(j omega t_s)`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        self.eval(Complex64::from_polar(1.0, omega * self.ts))
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero(self.ts);
        }
        Self {
            gain: self.gain * k,
            ..self.clone()
        }
    }

    fn same_ts(&self, other: &Self) -> Result<()> {
        if (self.ts - other.ts).abs() > 1e-12 * self.ts {
            return Err(Error::SamplingMismatch(self.ts, other.ts));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_ts(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.ts));
        }
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        let mut poles = self.poles.clone();
        poles.extend_from_slice(&other.poles);
        Ok(Self {
            gain: self.gain * other.gain,
            zeros,
            poles,
            ts: self.ts,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::NonInvertible);
        }
        if !self.is_biproper() {
            return Err(Error::NonProper {
                num: self.poles.len(),
                den: self.zeros.len(),
            });
        }
        Ok(Self {
            gain: 1.0 / self.gain,
            zeros: self.poles.clone(),
            poles: self.zeros.clone(),
            ts: self.ts,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_ts(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let map = Bilinear::new(self.ts);
        let a = map.w_form(self);
        let b = map.w_form(other);
        let k = a.inf.min(b.inf);
        let term = |x: &WForm, y: &WForm| {
            let mut p = Polynomial::from_roots(&x.zeros).scale(x.lead);
            p = &p * &map.q_pow(x.inf - k);
            &p * &Polynomial::from_roots(&y.poles)
        };
        let core = &term(&a, &b) + &term(&b, &a);
        if core.is_zero() {
            return Ok(Self::zero(self.ts));
        }
        let mut poles = a.poles.clone();
        poles.extend_from_slice(&b.poles);
        let sum = WForm {
            lead: core.leading(),
            zeros: core.roots()?,
            inf: k,
            poles,
        };
        map.z_form(&sum)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// `G / (1 + G)` with the closed-loop poles recomputed as roots of
    /// `den + num` in the bilinear variable.
    pub fn feedback_unity(&self) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::zero(self.ts));
        }
        let map = Bilinear::new(self.ts);
        let l = map.w_form(self);
        let num = &Polynomial::from_roots(&l.zeros).scale(l.lead) * &map.q_pow(l.inf);
        let den = &Polynomial::from_roots(&l.poles) + &num;
        if den.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        let closed = WForm {
            lead: l.lead / den.leading(),
            zeros: l.zeros,
            inf: l.inf,
            poles: den.roots()?,
        };
        map.z_form(&closed).map_err(|e| match e {
            Error::NonProper { .. } => Error::DegenerateLoop,
            other => other,
        })
    }

    /// Largest pole modulus, 0 for a static gain.
    pub fn spectral_radius(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

/// `lead * prod(w - zeros) * (1 - a w)^inf / prod(w - poles)` with `a = t_s/2`.
#[derive(Debug, Clone)]
pub(crate) struct WForm {
    pub lead: f64,
    pub zeros: Vec<Complex64>,
    pub inf: usize,
    pub poles: Vec<Complex64>,
}

/// Bilinear map between `z` and `w = (1/a)(z-1)/(z+1)`, `a = t_s/2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bilinear {
    pub a: f64,
    pub ts: f64,
}

/// Roots within this distance of `z = -1` are treated as sitting on it.
const AT_MINUS_ONE: f64 = 1e-13;
/// Relative distance of `a w` from 1 below which a root is taken to be at
/// `z = infinity`.
const AT_INFINITY: f64 = 1e-10;

impl Bilinear {
    pub fn new(ts: f64) -> Self {
        Self { a: 0.5 * ts, ts }
    }

    /// `(1 - a w)^n`
    pub fn q_pow(&self, n: usize) -> Polynomial {
        let q = Polynomial::new(&[-self.a, 1.0]);
        (0..n).fold(Polynomial::one(), |acc, _| &acc * &q)
    }

    pub fn w_form(&self, g: &DiscreteTf) -> WForm {
        let a = self.a;
        let mut lead = c(g.gain);
        let mut zeros = Vec::with_capacity(g.zeros.len());
        let mut poles = Vec::with_capacity(g.poles.len());
        for &r in &g.zeros {
            if (r + 1.0).norm() <= AT_MINUS_ONE {
                lead *= 2.0;
            } else {
                lead *= (r + 1.0) * a;
                zeros.push((r - 1.0) / ((r + 1.0) * a));
            }
        }
        for &p in &g.poles {
            if (p + 1.0).norm() <= AT_MINUS_ONE {
                lead /= 2.0;
            } else {
                lead /= (p + 1.0) * a;
                poles.push((p - 1.0) / ((p + 1.0) * a));
            }
        }
        WForm {
            lead: lead.re,
            zeros,
            inf: g.poles.len() - g.zeros.len(),
            poles,
        }
    }

    /// Maps a w-domain rational function back to `z`. This is exactly the
    /// Tustin substitution when `w` is read as `s`.
    pub fn z_form(&self, h: &WForm) -> Result<DiscreteTf> {
        let a = self.a;
        let mut lead = c(h.lead);
        let mut inf = h.inf as i64;
        // Power of (z + 1) accumulated from the substitution.
        let mut zpow: i64 = 0;
        let mut zeros = Vec::with_capacity(h.zeros.len() + h.inf);
        let mut poles = Vec::with_capacity(h.poles.len() + h.inf);
        for &w in &h.zeros {
            let one_minus = 1.0 - w * a;
            if one_minus.norm() <= AT_INFINITY * (1.0 + (w * a).norm()) {
                lead *= -1.0 / a;
                inf += 1;
            } else {
                lead *= one_minus / a;
                zpow -= 1;
                zeros.push((1.0 + w * a) / one_minus);
            }
        }
        for &w in &h.poles {
            let one_minus = 1.0 - w * a;
            if one_minus.norm() <= AT_INFINITY * (1.0 + (w * a).norm()) {
                return Err(Error::NonProper {
                    num: h.zeros.len(),
                    den: h.poles.len(),
                });
            }
            lead /= one_minus / a;
            zpow += 1;
            poles.push((1.0 + w * a) / one_minus);
        }
        lead *= 2f64.powi(inf as i32);
        zpow -= inf;
        for _ in 0..zpow.max(0) {
            zeros.push(c(-1.0));
        }
        for _ in 0..(-zpow).max(0) {
            poles.push(c(-1.0));
        }
        DiscreteTf::from_zpk(lead.re, zeros, poles, self.ts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TS: f64 = 0.01;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn sorted_re(v: &[Complex64]) -> Vec<f64> {
        let mut r: Vec<f64> = v.iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    /// Stable random discrete system with real and complex poles.
    fn random_tf(seed: &[f64]) -> DiscreteTf {
        let p1 = seed[0] * 0.9;
        let (r, th) = (0.3 + 0.6 * seed[1].abs(), seed[2] * 3.0);
        let z1 = seed[3] * 1.5;
        DiscreteTf::from_zpk(
            1.0 + seed[4],
            vec![c(z1)],
            vec![c(p1), Complex64::from_polar(r, th), Complex64::from_polar(r, -th)],
            TS,
        )
        .unwrap()
    }

    #[test]
    fn feedback_of_static_gains() {
        let one = DiscreteTf::constant(1.0, TS).unwrap();
        let t = one.feedback_unity().unwrap();
        assert_eq!(t.gain(), 0.5);
        assert!(t.poles().is_empty());
        let zero = DiscreteTf::zero(TS);
        assert!(zero.feedback_unity().unwrap().is_zero());
    }

    #[test]
    fn feedback_dc_gain_matches_direct_evaluation() {
        let l = DiscreteTf::from_coeffs(&[0.2, 0.1], &[1.0, -1.5, 0.7], TS).unwrap();
        let t = l.feedback_unity().unwrap();
        let l1 = l.eval(c(1.0)).unwrap();
        let t1 = t.eval(c(1.0)).unwrap();
        assert!(rel(t1, l1 / (1.0 + l1)) < 1e-12);
    }

    #[test]
    fn feedback_degenerate_loop() {
        let l = DiscreteTf::constant(-1.0, TS).unwrap();
        assert_eq!(l.feedback_unity(), Err(Error::DegenerateLoop));
        // Biproper L with L(inf) = -1: closed loop would be improper.
        let l = DiscreteTf::from_coeffs(&[-1.0, 0.2], &[1.0, -0.5], TS).unwrap();
        assert_eq!(l.feedback_unity(), Err(Error::DegenerateLoop));
    }

    #[test]
    fn inverse_of_static_gain_and_errors() {
        let k = DiscreteTf::constant(4.0, TS).unwrap();
        assert_eq!(k.inverse().unwrap().gain(), 0.25);
        assert_eq!(DiscreteTf::zero(TS).inverse(), Err(Error::NonInvertible));
        let sp = DiscreteTf::from_coeffs(&[1.0], &[1.0, -0.5], TS).unwrap();
        assert!(matches!(sp.inverse(), Err(Error::NonProper { .. })));
    }

    #[test]
    fn inverse_cancels_pointwise() {
        let g = DiscreteTf::from_coeffs(&[2.0, -0.4, 0.1], &[1.0, -1.2, 0.5], TS).unwrap();
        let gi = g.inverse().unwrap();
        let prod = g.mul(&gi).unwrap();
        for k in 0..16 {
            let z = Complex64::from_polar(0.5 + 0.1 * k as f64, 0.37 * k as f64 + 0.1);
            assert!((prod.eval(z).unwrap() - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn common_denominator_sum() {
        let (a, b) = (0.3, -0.6);
        let ga = DiscreteTf::from_coeffs(&[1.0], &[1.0, -a], TS).unwrap();
        let gb = DiscreteTf::from_coeffs(&[1.0], &[1.0, -b], TS).unwrap();
        let sum = ga.add(&gb).unwrap();
        let num = sum.numerator();
        let den = sum.denominator();
        let want_num = [2.0, -a - b];
        let want_den = [1.0, -(a + b), a * b];
        for (x, y) in num.coeffs().iter().zip(&want_num) {
            assert!((x - y).abs() < 1e-12, "{num}");
        }
        for (x, y) in den.coeffs().iter().zip(&want_den) {
            assert!((x - y).abs() < 1e-12, "{den}");
        }
    }

    #[test]
    fn eval_basics() {
        let g = DiscreteTf::from_coeffs(&[1.0], &[1.0, -1.0], TS).unwrap();
        assert!((g.eval(c(2.0)).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(g.eval(c(1.0)), Err(Error::PoleHit));
        let p = RationalTf::from_coeffs(&[9.0], &[1.0, 3.0, 11.0, 9.0]).unwrap();
        assert!((p.eval(c(0.0)).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn poles_of_known_denominators() {
        let g = DiscreteTf::from_coeffs(&[1.0], &[1.0, -0.5], TS).unwrap();
        assert_eq!(g.poles(), &[c(0.5)]);
        let g = DiscreteTf::from_coeffs(&[1.0], &[1.0, -1.4, 0.45], TS).unwrap();
        let p = sorted_re(g.poles());
        assert!((p[0] - 0.5).abs() < 1e-10 && (p[1] - 0.9).abs() < 1e-10);
        let g = DiscreteTf::from_coeffs(&[1.0], &[1.0, 0.0, 1.0], TS).unwrap();
        let mut im: Vec<f64> = g.poles().iter().map(|p| p.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + 1.0).abs() < 1e-14 && (im[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_proper_rejected() {
        assert!(matches!(
            DiscreteTf::from_coeffs(&[1.0, 0.0, 0.0], &[1.0, 0.5], TS),
            Err(Error::NonProper { .. })
        ));
        assert_eq!(
            DiscreteTf::from_coeffs(&[1.0], &[1.0], 0.0),
            Err(Error::InvalidSamplingTime(0.0))
        );
    }

    #[test]
    fn bilinear_round_trip_preserves_system() {
        let g = DiscreteTf::from_zpk(
            1.3,
            vec![c(-1.0), c(0.2), Complex64::new(0.1, 0.4), Complex64::new(0.1, -0.4)],
            vec![
                c(0.999999),
                c(-0.3),
                Complex64::new(0.5, 0.5),
                Complex64::new(0.5, -0.5),
                c(0.0),
            ],
            TS,
        )
        .unwrap();
        let map = Bilinear::new(TS);
        let back = map.z_form(&map.w_form(&g)).unwrap();
        assert_eq!(back.zeros().len(), g.zeros().len());
        assert_eq!(back.poles().len(), g.poles().len());
        for k in 0..12 {
            let z = Complex64::from_polar(1.2, 0.5 * k as f64 + 0.05);
            assert!(rel(back.eval(z).unwrap(), g.eval(z).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn rational_tf_algebra() {
        let g = RationalTf::from_coeffs(&[1.0, 2.0], &[1.0, 3.0, 2.5]).unwrap();
        assert!(g.is_proper() && !g.is_biproper());
        let gi = g.inverse().unwrap();
        assert!(!gi.is_proper());
        let t = g.feedback_unity().unwrap();
        let s = Complex64::new(0.3, 1.1);
        let gs = g.eval(s).unwrap();
        assert!(rel(t.eval(s).unwrap(), gs / (1.0 + gs)) < 1e-12);
        assert!(rel(g.mul(&gi).eval(s).unwrap(), c(1.0)) < 1e-12);
        assert!(rel(g.add(&g).eval(s).unwrap(), gs * 2.0) < 1e-12);
        assert_eq!(
            RationalTf::from_coeffs(&[0.0], &[1.0]).unwrap().inverse(),
            Err(Error::NonInvertible)
        );
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(
            s1 in prop::collection::vec(-0.99f64..0.99, 5),
            s2 in prop::collection::vec(-0.99f64..0.99, 5),
            mag in 1.05f64..3.0, ang in 0.0f64..6.2,
        ) {
            let (a, b) = (random_tf(&s1), random_tf(&s2));
            let z = Complex64::from_polar(mag, ang);
            let ab = a.mul(&b).unwrap().eval(z).unwrap();
            let want = a.eval(z).unwrap() * b.eval(z).unwrap();
            prop_assert!(rel(ab, want) <= 1e-9);
        }

        #[test]
        fn feedback_evaluates_pointwise(
            s1 in prop::collection::vec(-0.99f64..0.99, 5),
            mag in 1.05f64..3.0, ang in 0.0f64..6.2,
        ) {
            let l = random_tf(&s1);
            let t = l.feedback_unity().unwrap();
            let z = Complex64::from_polar(mag, ang);
            let lz = l.eval(z).unwrap();
            prop_assert!(rel(t.eval(z).unwrap(), lz / (1.0 + lz)) <= 1e-9);
        }

        #[test]
        fn sum_evaluates_pointwise(
            s1 in prop::collection::vec(-0.99f64..0.99, 5),
            s2 in prop::collection::vec(-0.99f64..0.99, 5),
            mag in 1.05f64..3.0, ang in 0.0f64..6.2,
        ) {
            let (a, b) = (random_tf(&s1), random_tf(&s2));
            let z = Complex64::from_polar(mag, ang);
            let got = a.add(&b).unwrap().eval(z).unwrap();
            let want = a.eval(z).unwrap() + b.eval(z).unwrap();
            prop_assert!((got - want).norm() <= 1e-9 * (a.eval(z).unwrap().norm() + b.eval(z).unwrap().norm()));
        }

        #[test]
        fn product_poles_are_union(
            s1 in prop::collection::vec(-0.99f64..0.99, 5),
            s2 in prop::collection::vec(-0.99f64..0.99, 5),
        ) {
            let (a, b) = (random_tf(&s1), random_tf(&s2));
            let ab = a.mul(&b).unwrap();
            let mut want: Vec<Complex64> = a.poles().to_vec();
            want.extend_from_slice(b.poles());
            prop_assert_eq!(ab.poles().len(), want.len());
            for p in ab.poles() {
                prop_assert!(want.iter().any(|q| (p - q).norm() < 1e-12));
            }
        }
    }
}
