//! Frequency-domain analysis of discrete loops.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{toeplitz_mul_samples, Signal};
use crate::tf::DiscreteTf;

pub const DEFAULT_GRID_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodePoint {
    pub omega: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

/// `[1e-2, 0.99 * pi / ts]` rad/s.
pub fn default_band(ts: f64) -> (f64, f64) {
    (1e-2, 0.99 * PI / ts)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

fn nyquist(g: &DiscreteTf) -> f64 {
    PI / g.ts()
}

fn check_omega(g: &DiscreteTf, w: f64) -> Result<()> {
    if !(w > 0.0 && w < nyquist(g)) {
        return Err(Error::AboveNyquist(w, nyquist(g)));
    }
    Ok(())
}

/// Principal phase in degrees, on (-180, 180) with +180 folded to -180.
fn principal_deg(v: Complex64) -> f64 {
    let p = v.arg().to_degrees();
    if p >= 180.0 {
        p - 360.0
    } else {
        p
    }
}

fn unwrap_phases<F>(f: &F, grid: &[f64]) -> Result<Vec<BodePoint>>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut prev: Option<f64> = None;
    for &w in grid {
        let v = f(w)?;
        let mut phase = principal_deg(v);
        if let Some(p) = prev {
            phase += 360.0 * ((p - phase) / 360.0).round();
        }
        prev = Some(phase);
        out.push(BodePoint {
            omega: w,
            magnitude_db: 20.0 * v.norm().log10(),
            phase_deg: phase,
        });
    }
    Ok(out)
}

/// Bode data along `grid`, phase unwrapped for continuity from the first point.
pub fn bode(g: &DiscreteTf, grid: &[f64]) -> Result<Vec<BodePoint>> {
    for &w in grid {
        check_omega(g, w)?;
    }
    unwrap_phases(&|w| g.freq_response(w), grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover {
    pub omega_c: f64,
    /// `|L|` crosses 1 more than once inside the band.
    pub multiple_crossings: bool,
}

fn crossover_of<F>(f: &F, band: (f64, f64)) -> Result<Crossover>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let log_mag = |w: f64| -> Result<f64> { Ok(f(w)?.norm().ln()) };
    let grid = log_grid(band.0, band.1, DEFAULT_GRID_POINTS);
    let vals = grid.iter().map(|&w| log_mag(w)).collect::<Result<Vec<_>>>()?;
    let brackets: Vec<usize> = (1..grid.len())
        .filter(|&i| (vals[i - 1] > 0.0) != (vals[i] > 0.0))
        .collect();
    let &first = brackets.first().ok_or(Error::NoCrossing)?;
    let (mut a, mut b) = (grid[first - 1].ln(), grid[first].ln());
    let sign_a = vals[first - 1] > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (log_mag(m.exp())? > 0.0) == sign_a {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    Ok(Crossover {
        omega_c: (0.5 * (a + b)).exp(),
        multiple_crossings: brackets.len() > 1,
    })
}

/// Lowest frequency in `band` with `|L| = 1`.
pub fn gain_crossover(l: &DiscreteTf, band: (f64, f64)) -> Result<Crossover> {
    check_omega(l, band.0)?;
    check_omega(l, band.1)?;
    crossover_of(&|w| l.freq_response(w), band)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    pub omega_c: f64,
    /// Degrees, normalized to (-180, 180].
    pub phi_m: f64,
    pub multiple_crossings: bool,
}

fn margins_of<F>(f: &F, band: (f64, f64)) -> Result<Margins>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let c = crossover_of(f, band)?;
    let mut grid: Vec<f64> = log_grid(band.0, c.omega_c, DEFAULT_GRID_POINTS)
        .into_iter()
        .filter(|&w| w < c.omega_c)
        .collect();
    grid.push(c.omega_c);
    let phase = unwrap_phases(f, &grid)?.last().expect("non-empty grid").phase_deg;
    let mut pm = (180.0 + phase) % 360.0;
    if pm > 180.0 {
        pm -= 360.0;
    } else if pm <= -180.0 {
        pm += 360.0;
    }
    Ok(Margins {
        omega_c: c.omega_c,
        phi_m: pm,
        multiple_crossings: c.multiple_crossings,
    })
}

/// Crossover and phase margin over `band`.
pub fn loop_margins(l: &DiscreteTf, band: (f64, f64)) -> Result<Margins> {
    check_omega(l, band.0)?;
    check_omega(l, band.1)?;
    margins_of(&|w| l.freq_response(w), band)
}

/// Open-loop response `T / (1 - T)` implied by a finite closed-loop impulse
/// response, with `T` its discrete-time Fourier transform.
pub fn implied_open_loop(t: &[f64], ts: f64, omega: f64) -> Result<Complex64> {
    let step = Complex64::from_polar(1.0, -omega * ts);
    let mut z = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for &x in t {
        acc += z * x;
        z *= step;
    }
    let den = Complex64::new(1.0, 0.0) - acc;
    if den.norm() < crate::tf::POLE_HIT_TOL {
        return Err(Error::PoleHit);
    }
    Ok(acc / den)
}

/// Margins of the open loop implied by a restored closed-loop impulse
/// response. Accurate only when the response has decayed over the horizon.
pub fn estimated_margins(t: &[f64], ts: f64, band: (f64, f64)) -> Result<Margins> {
    crate::tf::check_ts(ts)?;
    if !(band.0 > 0.0 && band.1 < PI / ts) {
        return Err(Error::AboveNyquist(band.1, PI / ts));
    }
    margins_of(&|w| implied_open_loop(t, ts, w), band)
}

/// Phase slope of the implied open loop, as in [`flatness_metric`].
pub fn estimated_flatness(t: &[f64], ts: f64, omega_c: f64, factor: f64) -> Result<f64> {
    let grid = log_grid(omega_c / factor, omega_c * factor, 21);
    if grid.last().is_some_and(|&w| w >= PI / ts) {
        return Err(Error::AboveNyquist(omega_c * factor, PI / ts));
    }
    Ok(phase_slope(&unwrap_phases(&|w| implied_open_loop(t, ts, w), &grid)?))
}

fn phase_slope(pts: &[BodePoint]) -> f64 {
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.omega.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = pts.iter().map(|p| p.phase_deg).sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(pts).map(|(x, p)| (x - mx) * (p.phase_deg - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Phase margin in degrees over the default band.
pub fn phase_margin(l: &DiscreteTf) -> Result<f64> {
    Ok(loop_margins(l, default_band(l.ts()))?.phi_m)
}

/// Least-squares slope of the unwrapped phase against `log10(omega)` over 21
/// points in `[omega_c / factor, omega_c * factor]`, in degrees per decade.
pub fn flatness_metric(l: &DiscreteTf, omega_c: f64, factor: f64) -> Result<f64> {
    if !(factor > 1.0) {
        return Err(Error::InvalidSettings(format!(
            "band factor must exceed 1, got {factor}"
        )));
    }
    Ok(phase_slope(&bode(
        l,
        &log_grid(omega_c / factor, omega_c * factor, 21),
    )?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralCheck {
    /// Squared norm of the truncated convolution over the horizon.
    pub time_j: f64,
    /// Integral of `|T - M|^2` weighted by the input spectrum, from a
    /// zero-padded transform of length at least `2N - 1`.
    pub freq_j: f64,
    pub relative_gap: f64,
}

pub fn spectral_loss_check(t: &Signal, m_ref: &Signal, r: &Signal) -> Result<SpectralCheck> {
    let n = t.len();
    if m_ref.len() != n || r.len() != n {
        return Err(Error::LengthMismatch(
            n,
            if m_ref.len() != n { m_ref.len() } else { r.len() },
        ));
    }
    let d: Vec<f64> = t.samples().iter().zip(m_ref.samples()).map(|(a, b)| a - b).collect();
    let time_j: f64 = toeplitz_mul_samples(r.samples(), &d)?.iter().map(|x| x * x).sum();

    let len = (2 * n - 1).next_power_of_two();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let spectrum = |x: &[f64]| {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(len, Complex64::new(0.0, 0.0));
        fft.process(&mut buf);
        buf
    };
    let (dd, rr) = (spectrum(&d), spectrum(r.samples()));
    let freq_j = dd
        .iter()
        .zip(&rr)
        .map(|(a, b)| a.norm_sqr() * b.norm_sqr())
        .sum::<f64>()
        / len as f64;
    let scale = time_j.abs().max(freq_j.abs());
    let relative_gap = if scale == 0.0 {
        0.0
    } else {
        (time_j - freq_j).abs() / scale
    };
    Ok(SpectralCheck {
        time_j,
        freq_j,
        relative_gap,
    })
}
