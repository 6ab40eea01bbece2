//! Discrete-time simulation and lower-triangular Toeplitz algebra.
//!
//! Systems are simulated as a cascade of second-order sections in transposed
//! direct form II, built from the factored representation of [`DiscreteTf`].
//! Each pole is paired with its nearest zeros so that the near-cancelling
//! pole/zero pairs of Oustaloup filters stay inside one section.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tf::DiscreteTf;

/// Samples with magnitude above this abort a loss evaluation.
pub const OVERFLOW_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    ts: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, ts: f64) -> Result<Self> {
        crate::tf::check_ts(ts)?;
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self { samples, ts })
    }

    pub fn step(len: usize, amplitude: f64, ts: f64) -> Result<Self> {
        Self::new(vec![amplitude; len], ts)
    }

    pub fn impulse(len: usize, ts: f64) -> Result<Self> {
        let mut v = vec![0.0; len];
        if let Some(x) = v.first_mut() {
            *x = 1.0;
        }
        Self::new(v, ts)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        if (self.ts - other.ts).abs() > 1e-12 * self.ts {
            return Err(Error::SamplingMismatch(self.ts, other.ts));
        }
        Ok(())
    }
}

/// One closed-loop record: reference, controller output and plant output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    r: Signal,
    u: Signal,
    y: Signal,
}

impl ExperimentData {
    pub fn new(r: Signal, u: Signal, y: Signal) -> Result<Self> {
        r.same_grid(&u)?;
        r.same_grid(&y)?;
        if r.samples[0] == 0.0 {
            return Err(Error::ZeroLeadingReference);
        }
        Ok(Self { r, u, y })
    }

    pub fn r(&self) -> &Signal {
        &self.r
    }

    pub fn u(&self) -> &Signal {
        &self.u
    }

    pub fn y(&self) -> &Signal {
        &self.y
    }

    pub fn ts(&self) -> f64 {
        self.r.ts
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
struct Section {
    b: [f64; 3],
    a: [f64; 2],
    s: [f64; 2],
}

impl Section {
    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.s[0];
        self.s[0] = self.b[1] * x - self.a[0] * y + self.s[1];
        self.s[1] = self.b[2] * x - self.a[1] * y;
        y
    }
}

/// Stateful sample-by-sample realization of a [`DiscreteTf`].
#[derive(Debug, Clone)]
pub struct Filter {
    gain: f64,
    sections: Vec<Section>,
}

/// Coefficients of `prod(1 - r_i q)` for up to two roots, as reals.
fn factor_coeffs(roots: &[Complex64]) -> Vec<f64> {
    match roots {
        [] => vec![1.0],
        [r] => vec![1.0, -r.re],
        [r1, r2] => vec![1.0, -(r1 + r2).re, (r1 * r2).re],
        _ => unreachable!("sections hold at most two roots"),
    }
}

/// Groups conjugate pairs; real roots come back as singletons.
fn group_roots(roots: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut groups = Vec::new();
    for &r in roots {
        if r.im == 0.0 {
            groups.push(vec![r]);
        } else if r.im > 0.0 {
            groups.push(vec![r, r.conj()]);
        }
    }
    groups
}

fn nearest(candidates: &[Vec<Complex64>], used: &[bool], poles: &[Complex64], size: usize) -> Option<usize> {
    let dist = |g: &Vec<Complex64>| {
        g.iter()
            .flat_map(|z| poles.iter().map(move |p| (z - p).norm()))
            .fold(f64::INFINITY, f64::min)
    };
    candidates
        .iter()
        .enumerate()
        .filter(|(i, g)| !used[*i] && g.len() == size)
        .min_by(|a, b| dist(a.1).total_cmp(&dist(b.1)))
        .map(|(i, _)| i)
}

impl Filter {
    pub fn new(g: &DiscreteTf) -> Self {
        let mut pole_groups = group_roots(g.poles());
        let zero_groups = group_roots(g.zeros());
        let complex_zero_pairs = zero_groups.iter().filter(|z| z.len() == 2).count();

        // Merge real poles into pairs only as far as complex zero pairs need
        // second-order sections.
        let complex_pole_pairs = pole_groups.iter().filter(|p| p.len() == 2).count();
        let mut need = complex_zero_pairs.saturating_sub(complex_pole_pairs);
        if need > 0 {
            let mut reals: Vec<Complex64> = pole_groups.iter().filter(|p| p.len() == 1).map(|p| p[0]).collect();
            reals.sort_by(|a, b| a.re.total_cmp(&b.re));
            pole_groups.retain(|p| p.len() == 2);
            let mut it = reals.into_iter();
            while let Some(p) = it.next() {
                if need > 0 {
                    if let Some(q) = it.next() {
                        pole_groups.push(vec![p, q]);
                        need -= 1;
                        continue;
                    }
                }
                pole_groups.push(vec![p]);
            }
        }

        let circle_dist = |p: &Vec<Complex64>| p.iter().map(|x| (1.0 - x.norm()).abs()).fold(f64::INFINITY, f64::min);
        pole_groups.sort_by(|a, b| circle_dist(a).total_cmp(&circle_dist(b)));

        let mut used = vec![false; zero_groups.len()];
        let mut pairs_left = complex_zero_pairs;
        let mut doubles_left = pole_groups.iter().filter(|p| p.len() == 2).count();
        let mut sections = Vec::with_capacity(pole_groups.len());
        for poles in &pole_groups {
            let mut zeros: Vec<Complex64> = Vec::new();
            if poles.len() == 2 {
                let pair = nearest(&zero_groups, &used, poles, 2);
                let real = nearest(&zero_groups, &used, poles, 1);
                let take_pair = match (pair, real) {
                    (Some(_), _) if pairs_left >= doubles_left => true,
                    (Some(i), Some(j)) => {
                        let d = |k: usize| {
                            zero_groups[k]
                                .iter()
                                .map(|z| (z - poles[0]).norm())
                                .fold(f64::INFINITY, f64::min)
                        };
                        d(i) < d(j)
                    }
                    (Some(_), None) => true,
                    _ => false,
                };
                if take_pair {
                    let i = pair.expect("pair available");
                    used[i] = true;
                    pairs_left -= 1;
                    zeros.extend_from_slice(&zero_groups[i]);
                } else {
                    for _ in 0..2 {
                        if let Some(j) = nearest(&zero_groups, &used, poles, 1) {
                            used[j] = true;
                            zeros.push(zero_groups[j][0]);
                        }
                    }
                }
                doubles_left -= 1;
            } else if let Some(j) = nearest(&zero_groups, &used, poles, 1) {
                used[j] = true;
                zeros.push(zero_groups[j][0]);
            }
            let delay = poles.len() - zeros.len();
            let mut b = [0.0; 3];
            for (k, c) in factor_coeffs(&zeros).into_iter().enumerate() {
                b[k + delay] = c;
            }
            let a = factor_coeffs(poles);
            sections.push(Section {
                b,
                a: [a[1], a.get(2).copied().unwrap_or(0.0)],
                s: [0.0; 2],
            });
        }
        debug_assert!(used.iter().all(|&u| u), "every zero is assigned to a section");
        sections.reverse();
        Self {
            gain: g.gain(),
            sections,
        }
    }

    /// Instantaneous gain from input to output.
    pub fn feedthrough(&self) -> f64 {
        self.sections.iter().fold(self.gain, |acc, s| acc * s.b[0])
    }

    /// Output the filter would produce for a zero input now, without
    /// advancing its state.
    pub fn peek_free(&self) -> f64 {
        self.sections.iter().fold(0.0, |x, s| s.b[0] * x + s.s[0])
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let mut v = self.gain * x;
        for s in &mut self.sections {
            v = s.step(v);
        }
        v
    }

    pub fn reset(&mut self) {
        for s in &mut self.sections {
            s.s = [0.0; 2];
        }
    }

    pub fn run(&mut self, input: &[f64]) -> Vec<f64> {
        input.iter().map(|&x| self.step(x)).collect()
    }
}

/// Zero-state response on raw samples. Values may overflow to infinity for
/// unstable systems; callers decide how to treat that.
pub fn lfilter_samples(g: &DiscreteTf, u: &[f64]) -> Vec<f64> {
    Filter::new(g).run(u)
}

pub fn lfilter(g: &DiscreteTf, u: &Signal) -> Result<Signal> {
    check_grid(g.ts(), u.ts)?;
    Signal::new(lfilter_samples(g, &u.samples), u.ts)
}

/// First `len` samples of the impulse response, `g_0` being the direct
/// feedthrough.
pub fn impulse_response(g: &DiscreteTf, len: usize) -> Result<Signal> {
    lfilter(g, &Signal::impulse(len.max(1), g.ts())?)
}

fn check_grid(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-12 * a {
        return Err(Error::SamplingMismatch(a, b));
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Truncated causal convolution `out_t = sum_{k<=t} f_k v_{t-k}`.
pub fn toeplitz_mul_samples(first_col: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = first_col.len();
    if v.len() != n {
        return Err(Error::LengthMismatch(n, v.len()));
    }
    let rev: Vec<f64> = first_col.iter().rev().copied().collect();
    Ok((0..n).map(|t| dot(&rev[n - 1 - t..], &v[..=t])).collect())
}

pub fn toeplitz_mul(first_col: &Signal, v: &Signal) -> Result<Signal> {
    Signal::new(toeplitz_mul_samples(&first_col.samples, &v.samples)?, first_col.ts)
}

/// Forward substitution for the lower-triangular Toeplitz system with the
/// given first column.
pub fn toeplitz_solve_samples(first_col: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = first_col.len();
    if rhs.len() != n {
        return Err(Error::LengthMismatch(n, rhs.len()));
    }
    let f0 = first_col[0];
    let scale = first_col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(f0.abs() >= 1e-12 * scale) || f0 == 0.0 {
        return Err(Error::SingularLeadingSample(f0));
    }
    let rev: Vec<f64> = first_col.iter().rev().copied().collect();
    let mut x = vec![0.0; n];
    for t in 0..n {
        let acc = dot(&rev[n - 1 - t..n - 1], &x[..t]);
        x[t] = (rhs[t] - acc) / f0;
    }
    Ok(x)
}

pub fn toeplitz_solve(first_col: &Signal, rhs: &Signal) -> Result<Signal> {
    Signal::new(toeplitz_solve_samples(&first_col.samples, &rhs.samples)?, first_col.ts)
}

fn controller_inverse(c: &DiscreteTf) -> Result<DiscreteTf> {
    if c.is_zero() {
        return Err(Error::ControllerNotInvertible("controller is identically zero".into()));
    }
    if !c.is_biproper() {
        return Err(Error::ControllerNotInvertible(format!(
            "controller is strictly proper (relative degree {})",
            c.relative_degree()
        )));
    }
    let lead = c.direct_feedthrough();
    if !(lead.abs() > 1e-12) || !lead.is_finite() {
        return Err(Error::ControllerNotInvertible(format!(
            "direct feedthrough {lead:e} is numerically zero"
        )));
    }
    c.inverse()
}

/// `C^{-1} u + y` on raw samples; may contain huge or non-finite values when
/// the inverse controller is unstable.
pub fn fictitious_reference_samples(c: &DiscreteTf, u: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let inv = controller_inverse(c)?;
    let mut out = lfilter_samples(&inv, u);
    for (o, yk) in out.iter_mut().zip(y) {
        *o += yk;
    }
    Ok(out)
}

pub fn fictitious_reference(c: &DiscreteTf, data: &ExperimentData) -> Result<Signal> {
    check_grid(c.ts(), data.ts())?;
    Signal::new(
        fictitious_reference_samples(c, &data.u.samples, &data.y.samples)?,
        data.ts(),
    )
}

/// Unity negative feedback loop driven by `r`; returns `(u, y)`.
pub fn closed_loop_sim(p: &DiscreteTf, c: &DiscreteTf, r: &Signal) -> Result<(Signal, Signal)> {
    check_grid(p.ts(), c.ts())?;
    check_grid(p.ts(), r.ts)?;
    let mut pf = Filter::new(p);
    let mut cf = Filter::new(c);
    let (dp, dc) = (pf.feedthrough(), cf.feedthrough());
    let det = 1.0 + dp * dc;
    if det.abs() < 1e-12 {
        return Err(Error::AlgebraicLoopSingular(det));
    }
    let n = r.len();
    let mut u = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for &rk in &r.samples {
        let (p0, c0) = (pf.peek_free(), cf.peek_free());
        let uk = (c0 + dc * (rk - p0)) / det;
        let yk = p0 + dp * uk;
        cf.step(rk - yk);
        pf.step(uk);
        u.push(uk);
        y.push(yk);
    }
    Ok((Signal::new(u, r.ts)?, Signal::new(y, r.ts)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    pub overshoot_percent: f64,
    pub settling_time: f64,
    pub steady_state: f64,
    /// False when the final window still moves by more than 1% of the setpoint.
    pub settled: bool,
}

/// Overshoot against the mean of the final 5% of samples, settling time for a
/// 2% band around that mean.
pub fn step_metrics(y: &Signal, setpoint: f64) -> Result<StepMetrics> {
    if setpoint == 0.0 || !setpoint.is_finite() {
        return Err(Error::InvalidSettings(format!(
            "setpoint must be nonzero, got {setpoint}"
        )));
    }
    let s = &y.samples;
    let tail = ((s.len() as f64) * 0.05).ceil().max(1.0) as usize;
    let window = &s[s.len() - tail..];
    let y_inf = window.iter().sum::<f64>() / tail as f64;
    let base = if y_inf.abs() > 1e-9 * setpoint.abs() {
        y_inf
    } else {
        setpoint
    };
    // A peak inside the final window is the still-rising tail, not overshoot.
    let head = &s[..s.len() - tail];
    let peak = head.iter().map(|v| v / base).fold(f64::NEG_INFINITY, f64::max);
    let tail_peak = window.iter().map(|v| v / base).fold(f64::NEG_INFINITY, f64::max);
    let overshoot_percent = if peak > tail_peak {
        (100.0 * (peak - 1.0)).max(0.0)
    } else {
        0.0
    };
    let band = 0.02 * base.abs();
    let settling_time = s
        .iter()
        .rposition(|v| (v - y_inf).abs() > band)
        .map_or(0.0, |k| (k + 1) as f64 * y.ts);
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    Ok(StepMetrics {
        overshoot_percent,
        settling_time,
        steady_state: y_inf,
        settled: hi - lo <= 0.01 * setpoint.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::tustin;
    use crate::poly::Polynomial;
    use crate::tf::RationalTf;
    use proptest::prelude::*;

    const TS: f64 = 0.01;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn sig(v: Vec<f64>) -> Signal {
        Signal::new(v, TS).unwrap()
    }

    fn random_proper(p: &[f64], biproper: bool) -> DiscreteTf {
        let poles = vec![
            c(0.9 * p[0]),
            Complex64::from_polar(0.2 + 0.7 * p[1], 2.5 * p[2]),
            Complex64::from_polar(0.2 + 0.7 * p[1], -2.5 * p[2]),
        ];
        let mut zeros = vec![c(1.8 * p[3] - 0.9), c(-0.5 + p[4])];
        if biproper {
            zeros.push(c(0.3 - 0.6 * p[5]));
        }
        DiscreteTf::from_zpk(0.5 + p[5], zeros, poles, TS).unwrap()
    }

    /// Power series of num/den in z^{-1} by long division of expanded
    /// coefficients.
    fn long_division(g: &DiscreteTf, len: usize) -> Vec<f64> {
        let num = g.numerator();
        let den = g.denominator();
        let a = den.coeffs();
        let lag = den.degree() - num.degree();
        let mut b = vec![0.0; lag];
        b.extend_from_slice(num.coeffs());
        let mut h = vec![0.0; len];
        for k in 0..len {
            let mut acc = b.get(k).copied().unwrap_or(0.0);
            for i in 1..a.len().min(k + 1) {
                acc -= a[i] * h[k - i];
            }
            h[k] = acc / a[0];
        }
        h
    }

    #[test]
    fn impulse_of_simple_systems() {
        let one = DiscreteTf::constant(1.0, TS).unwrap();
        assert_eq!(impulse_response(&one, 4).unwrap().samples(), &[1.0, 0.0, 0.0, 0.0]);
        let a = 0.7;
        let g = DiscreteTf::from_coeffs(&[1.0], &[1.0, -a], TS).unwrap();
        let h = impulse_response(&g, 6).unwrap();
        let want = [0.0, 1.0, a, a * a, a * a * a, a.powi(4)];
        for (x, y) in h.samples().iter().zip(&want) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn step_into_accumulator_is_ramp() {
        let g = DiscreteTf::from_coeffs(&[1.0], &[1.0, -1.0], TS).unwrap();
        let y = lfilter(&g, &Signal::step(6, 1.0, TS).unwrap()).unwrap();
        assert_eq!(y.samples(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let one = DiscreteTf::constant(1.0, TS).unwrap();
        let u = sig(vec![0.3, -1.0, 2.0]);
        assert_eq!(lfilter(&one, &u).unwrap(), u);
    }

    #[test]
    fn complex_zeros_with_real_poles() {
        // Complex zero pair with only real poles forces paired real sections.
        let g = DiscreteTf::from_zpk(
            2.0,
            vec![Complex64::new(0.2, 0.5), Complex64::new(0.2, -0.5), c(0.1)],
            vec![c(0.5), c(-0.4), c(0.9)],
            TS,
        )
        .unwrap();
        let h = impulse_response(&g, 40).unwrap();
        for (x, y) in h.samples().iter().zip(long_division(&g, 40)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn toeplitz_small_cases() {
        let id = sig(vec![1.0, 0.0, 0.0]);
        let v = sig(vec![3.0, -1.0, 2.0]);
        assert_eq!(toeplitz_mul(&id, &v).unwrap(), v);
        assert_eq!(toeplitz_solve(&id, &v).unwrap(), v);
        let ones = sig(vec![1.0, 1.0]);
        assert_eq!(toeplitz_mul(&ones, &ones).unwrap().samples(), &[1.0, 2.0]);
        let x = toeplitz_solve(&sig(vec![2.0, 1.0]), &sig(vec![2.0, 3.0])).unwrap();
        assert_eq!(x.samples(), &[1.0, 1.0]);
        assert!(matches!(
            toeplitz_solve(&sig(vec![1e-14, 1.0]), &sig(vec![1.0, 1.0])),
            Err(Error::SingularLeadingSample(_))
        ));
    }

    #[test]
    fn fictitious_reference_with_unit_controller() {
        let one = DiscreteTf::constant(1.0, TS).unwrap();
        let data = ExperimentData::new(sig(vec![1.0, 1.0]), sig(vec![0.5, 0.25]), sig(vec![0.1, 0.2])).unwrap();
        assert_eq!(fictitious_reference(&one, &data).unwrap().samples(), &[0.6, 0.45]);
        let sp = DiscreteTf::from_coeffs(&[1.0], &[1.0, -0.5], TS).unwrap();
        assert!(matches!(
            fictitious_reference(&sp, &data),
            Err(Error::ControllerNotInvertible(_))
        ));
        assert_eq!(
            ExperimentData::new(sig(vec![0.0, 1.0]), sig(vec![0.0, 0.0]), sig(vec![0.0, 0.0])),
            Err(Error::ZeroLeadingReference)
        );
    }

    #[test]
    fn closed_loop_with_zero_plant() {
        let c = DiscreteTf::from_coeffs(&[2.0, -1.0], &[1.0, -0.5], TS).unwrap();
        let r = Signal::step(20, 1.0, TS).unwrap();
        let (u, y) = closed_loop_sim(&DiscreteTf::zero(TS), &c, &r).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
        assert_eq!(u, lfilter(&c, &r).unwrap());
        let m1 = DiscreteTf::constant(-1.0, TS).unwrap();
        assert!(matches!(
            closed_loop_sim(&m1, &DiscreteTf::constant(1.0, TS).unwrap(), &r),
            Err(Error::AlgebraicLoopSingular(_))
        ));
    }

    #[test]
    fn step_metrics_cases() {
        let flat = Signal::step(100, 2.0, TS).unwrap();
        let m = step_metrics(&flat, 2.0).unwrap();
        assert_eq!((m.overshoot_percent, m.settling_time), (0.0, 0.0));
        assert!(m.settled);
        let lag = tustin(&RationalTf::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap(), TS).unwrap();
        let y = lfilter(&lag, &Signal::step(2000, 1.0, TS).unwrap()).unwrap();
        assert_eq!(step_metrics(&y, 1.0).unwrap().overshoot_percent, 0.0);
        // zeta = 0.5, wn = 2
        let zeta: f64 = 0.5;
        let so = RationalTf::from_coeffs(&[4.0], &[1.0, 2.0 * zeta * 2.0, 4.0]).unwrap();
        let y = lfilter(&tustin(&so, TS).unwrap(), &Signal::step(3000, 1.0, TS).unwrap()).unwrap();
        let m = step_metrics(&y, 1.0).unwrap();
        let want = 100.0 * (-zeta * std::f64::consts::PI / (1.0 - zeta * zeta).sqrt()).exp();
        assert!(
            (m.overshoot_percent - want).abs() < 0.5,
            "{} vs {want}",
            m.overshoot_percent
        );
        assert!(m.settled && m.settling_time > 1.0 && m.settling_time < 5.0);
        assert!(step_metrics(&y, 0.0).is_err());
    }

    #[test]
    fn strictly_proper_first_sample_is_zero() {
        let g = random_proper(&[0.3, 0.5, 0.7, 0.2, 0.1, 0.9], false);
        let y = lfilter(&g, &sig(vec![5.0, 1.0, -2.0])).unwrap();
        assert_eq!(y.samples()[0], 0.0);
    }

    #[test]
    fn high_order_clustered_system_matches_factor_evaluation() {
        // DC gain of a cascade with poles clustered near 1 must match the
        // factored evaluation at z = 1.
        let poles: Vec<Complex64> = (0..12).map(|k| c(1.0 - 1e-5 * 3f64.powi(k))).collect();
        let zeros: Vec<Complex64> = (0..12).map(|k| c(1.0 - 1.3e-5 * 3f64.powi(k))).collect();
        let g = DiscreteTf::from_zpk(1.0, zeros, poles, TS).unwrap();
        let y = lfilter(&g, &Signal::step(200_000, 1.0, TS).unwrap()).unwrap();
        let dc = g.eval(c(1.0)).unwrap().re;
        let last = *y.samples().last().unwrap();
        assert!((last / dc - 1.0).abs() < 0.05, "{last} vs {dc}");
        assert!(y.samples().iter().all(|v| v.is_finite()));
    }

    proptest! {
        #[test]
        fn impulse_matches_long_division(p in prop::collection::vec(0.0f64..1.0, 6), bip in any::<bool>()) {
            let g = random_proper(&p, bip);
            let h = impulse_response(&g, 64).unwrap();
            let want = long_division(&g, 64);
            for (x, y) in h.samples().iter().zip(&want) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
            prop_assert_eq!(h.samples()[0], g.direct_feedthrough() * if bip { 1.0 } else { 0.0 });
        }

        #[test]
        fn lfilter_equals_toeplitz_product(p in prop::collection::vec(0.0f64..1.0, 6), u in prop::collection::vec(-1.0f64..1.0, 41)) {
            let g = random_proper(&p, true);
            let u = sig(u);
            let y = lfilter(&g, &u).unwrap();
            let h = impulse_response(&g, 41).unwrap();
            let y2 = toeplitz_mul(&h, &u).unwrap();
            for (a, b) in y.samples().iter().zip(y2.samples()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn toeplitz_matches_dense_matrix_and_commutes(
            f in prop::collection::vec(-1.0f64..1.0, 30),
            g in prop::collection::vec(-1.0f64..1.0, 30),
            v in prop::collection::vec(-1.0f64..1.0, 30),
        ) {
            let n = f.len();
            let dense: Vec<f64> = (0..n).map(|i| (0..=i).map(|j| f[i - j] * v[j]).sum()).collect();
            let fast = toeplitz_mul_samples(&f, &v).unwrap();
            for (a, b) in fast.iter().zip(&dense) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let ab = toeplitz_mul_samples(&f, &toeplitz_mul_samples(&g, &v).unwrap()).unwrap();
            let ba = toeplitz_mul_samples(&g, &toeplitz_mul_samples(&f, &v).unwrap()).unwrap();
            for (a, b) in ab.iter().zip(&ba) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn toeplitz_solve_round_trip(tail in prop::collection::vec(-1.0f64..1.0, 100), v in prop::collection::vec(-1.0f64..1.0, 101)) {
            // Decaying column with a dominant leading sample stays well conditioned.
            let mut f = vec![2.0];
            f.extend(tail.iter().enumerate().map(|(k, x)| x * 0.7f64.powi(k as i32 + 1)));
            let x = toeplitz_solve_samples(&f, &v).unwrap();
            let back = toeplitz_mul_samples(&f, &x).unwrap();
            let err: f64 = back.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-8 * nv);
        }

        #[test]
        fn lfilter_is_time_invariant(p in prop::collection::vec(0.0f64..1.0, 6), u in prop::collection::vec(-1.0f64..1.0, 30), shift in 1usize..10) {
            let g = random_proper(&p, true);
            let y = lfilter_samples(&g, &u);
            let mut us = vec![0.0; shift];
            us.extend_from_slice(&u[..u.len() - shift]);
            let ys = lfilter_samples(&g, &us);
            for k in shift..u.len() {
                prop_assert!((ys[k] - y[k - shift]).abs() <= 1e-12);
            }
        }

        #[test]
        fn closed_loop_matches_feedback_transfer_function(
            p in prop::collection::vec(0.0f64..1.0, 6),
            q in prop::collection::vec(0.0f64..1.0, 2),
        ) {
            let plant = random_proper(&p, false).scale(0.3);
            let ctrl = DiscreteTf::from_zpk(0.5 + q[0], vec![c(0.5 * q[1])], vec![c(1.0)], TS).unwrap();
            let r = Signal::step(200, 1.0, TS).unwrap();
            let (_, y) = closed_loop_sim(&plant, &ctrl, &r).unwrap();
            let t = plant.mul(&ctrl).unwrap().feedback_unity().unwrap();
            prop_assume!(t.spectral_radius() < 0.999);
            let y2 = lfilter(&t, &r).unwrap();
            for (a, b) in y.samples().iter().zip(y2.samples()) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
            let data = ExperimentData::new(r.clone(), closed_loop_sim(&plant, &ctrl, &r).unwrap().0, y).unwrap();
            let rt = fictitious_reference(&ctrl, &data).unwrap();
            for (a, b) in rt.samples().iter().zip(r.samples()) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn polynomial_helpers_agree() {
        let g = DiscreteTf::from_polys(&Polynomial::new(&[1.0, 0.5]), &Polynomial::new(&[1.0, -0.2, 0.1]), TS).unwrap();
        let h = impulse_response(&g, 30).unwrap();
        for (a, b) in h.samples().iter().zip(long_division(&g, 30)) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
