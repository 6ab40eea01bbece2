//! Real polynomials with coefficients stored highest degree first.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative size below which the leading coefficient of a sum is treated as
/// cancelled.
pub const CANCEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from coefficients ordered highest degree first.
    /// Exact leading zeros are dropped; an empty slice is the zero polynomial.
    pub fn new(coeffs: &[f64]) -> Self {
        let start = coeffs.iter().position(|c| *c != 0.0).unwrap_or(coeffs.len());
        let mut coeffs = coeffs[start..].to_vec();
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `x^n`
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[0] = 1.0;
        Self { coeffs }
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; the imaginary residue of the expansion is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Self::new(&acc.iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(&self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    /// Multiplies by `x^n`.
    pub fn shift(&self, n: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.extend(std::iter::repeat_n(0.0, n));
        Self { coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    /// Sum with cancellation-aware trimming: a leading coefficient whose
    /// magnitude is below `CANCEL_TOL` times the larger contributing term is
    /// dropped.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let pad = |p: &Self| {
            let mut v = vec![0.0; n - p.coeffs.len()];
            v.extend_from_slice(&p.coeffs);
            v
        };
        let a = pad(self);
        let b = pad(other);
        let mut out: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        for i in 0..n {
            let scale = a[i].abs().max(b[i].abs());
            if out[i].abs() <= CANCEL_TOL * scale {
                out[i] = 0.0;
            } else {
                break;
            }
        }
        Self::new(&out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// All complex roots with multiplicity.
    ///
    /// Exact zero roots are split off first. The remainder is solved as the
    /// eigenvalues of the balanced companion matrix, then each root is polished
    /// with Newton steps that are kept only if they reduce the residual.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Ok(Vec::new());
        }
        let trailing = self.coeffs.iter().rev().take_while(|c| **c == 0.0).count();
        let core = Polynomial::new(&self.coeffs[..self.coeffs.len() - trailing]);
        let mut roots = vec![Complex64::new(0.0, 0.0); trailing];
        let n = core.degree();
        match n {
            0 => {}
            1 => roots.push(Complex64::new(-core.coeffs[1] / core.coeffs[0], 0.0)),
            2 => roots.extend(quadratic_roots(core.coeffs[0], core.coeffs[1], core.coeffs[2])),
            _ => roots.extend(companion_roots(&core)?),
        }
        Ok(roots)
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        let r1 = q / a;
        let r2 = c / q;
        [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn companion_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let lead = p.coeffs[0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p.coeffs[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance(&mut m);
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 100 * n * n).ok_or(Error::RootFinding(n))?;
    let eig = schur.complex_eigenvalues();

    let mut real = Vec::new();
    let mut upper = Vec::new();
    for z in eig.iter() {
        if z.im == 0.0 {
            real.push(polish(p, *z, true));
        } else if z.im > 0.0 {
            upper.push(polish(p, *z, false));
        }
    }
    let lower_count = eig.iter().filter(|z| z.im < 0.0).count();
    if lower_count != upper.len() {
        return Err(Error::RootFinding(n));
    }
    let mut out = real;
    for z in upper {
        if z.im == 0.0 {
            // Newton collapsed the pair onto the real axis; keep multiplicity.
            out.push(z);
            out.push(z);
        } else {
            out.push(z);
            out.push(z.conj());
        }
    }
    Ok(out)
}

fn polish(p: &Polynomial, mut z: Complex64, real: bool) -> Complex64 {
    let (mut val, _) = p.eval_with_derivative(z);
    for _ in 0..4 {
        let (_, dp) = p.eval_with_derivative(z);
        if dp.norm() == 0.0 {
            break;
        }
        let mut cand = z - val / dp;
        if real {
            cand.im = 0.0;
        }
        let (cv, _) = p.eval_with_derivative(cand);
        if cv.norm() < val.norm() && cand.re.is_finite() && cand.im.is_finite() {
            z = cand;
            val = cv;
        } else {
            break;
        }
    }
    z
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable.
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let n = m.nrows();
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 200 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= ginv;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 && n > 0 {
                continue;
            }
            if !first {
                f.write_str(if *c < 0.0 { " - " } else { " + " })?;
            } else if *c < 0.0 {
                f.write_str("-")?;
            }
            first = false;
            let p = n - i;
            match p {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}x", c.abs())?,
                _ => write!(f, "{}x^{}", c.abs(), p)?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Self) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Self) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Self) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn binomial_square() {
        let p = Polynomial::new(&[1.0, 1.0]);
        assert_eq!((&p * &p).coeffs(), &[1.0, 2.0, 1.0]);
        assert_eq!((&p * &Polynomial::one()).coeffs(), p.coeffs());
    }

    #[test]
    fn example_plant_denominator() {
        let a = Polynomial::new(&[1.0, 1.0]);
        let b = Polynomial::new(&[1.0, 2.0, 9.0]);
        assert_eq!((&a * &b).coeffs(), &[1.0, 3.0, 11.0, 9.0]);
    }

    #[test]
    fn trims_leading_zeros_and_cancellation() {
        assert_eq!(Polynomial::new(&[0.0, 0.0, 2.0, 1.0]).coeffs(), &[2.0, 1.0]);
        assert!(Polynomial::new(&[]).is_zero());
        let a = Polynomial::new(&[1.0, 2.0, 3.0]);
        let b = Polynomial::new(&[-1.0, 0.5, 1.0]);
        assert_eq!((&a + &b).coeffs(), &[2.5, 4.0]);
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn roots_of_known_factors() {
        let r = Polynomial::new(&[1.0, -0.5]).roots().unwrap();
        assert_eq!(r, vec![Complex64::new(0.5, 0.0)]);

        let p = &Polynomial::new(&[1.0, -0.5]) * &Polynomial::new(&[1.0, -0.9]);
        let r = sorted(p.roots().unwrap());
        assert!((r[0].re - 0.5).abs() < 1e-10 && (r[1].re - 0.9).abs() < 1e-10);

        let r = sorted(Polynomial::new(&[1.0, 0.0, 1.0]).roots().unwrap());
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_roots_are_exact() {
        let p = Polynomial::new(&[1.0, 3.0, 2.0, 0.0, 0.0]);
        let r = p.roots().unwrap();
        assert_eq!(r.iter().filter(|z| **z == Complex64::new(0.0, 0.0)).count(), 2);
    }

    #[test]
    fn graded_roots_spanning_eight_decades() {
        // Roots like those of an Oustaloup filter over (1e-4, 1e4).
        let expected: Vec<f64> = (0..11).map(|k| -1e-4 * 1e8f64.powf((k as f64 + 0.5) / 11.0)).collect();
        let roots: Vec<Complex64> = expected.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        let p = Polynomial::from_roots(&roots);
        let got = sorted(p.roots().unwrap());
        let mut want = expected.clone();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!(((g.re - w) / w).abs() < 1e-8, "{g} vs {w}");
            assert!(g.im.abs() < 1e-8 * w.abs());
        }
    }

    #[test]
    fn higher_degree_companion_matches_factors() {
        let roots = [
            Complex64::new(-0.3, 0.0),
            Complex64::new(0.7, 0.2),
            Complex64::new(0.7, -0.2),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.1, 1.5),
            Complex64::new(0.1, -1.5),
        ];
        let p = Polynomial::from_roots(&roots);
        let got = sorted(p.roots().unwrap());
        let want = sorted(roots.to_vec());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10, "{g} vs {w}");
        }
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(
            a in prop::collection::vec(-10.0f64..10.0, 1..6),
            b in prop::collection::vec(-10.0f64..10.0, 1..6),
            c in prop::collection::vec(-10.0f64..10.0, 1..6),
        ) {
            let (a, b, c) = (Polynomial::new(&a), Polynomial::new(&b), Polynomial::new(&c));
            let ab = &a * &b;
            let ba = &b * &a;
            prop_assert_eq!(ab.coeffs().len(), ba.coeffs().len());
            for (x, y) in ab.coeffs().iter().zip(ba.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
            let l = &(&a * &b) * &c;
            let r = &a * &(&b * &c);
            prop_assert_eq!(l.coeffs().len(), r.coeffs().len());
            let scale = l.coeffs().iter().fold(1.0f64, |m, x| m.max(x.abs()));
            for (x, y) in l.coeffs().iter().zip(r.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn roots_reconstruct_polynomial(coeffs in prop::collection::vec(-5.0f64..5.0, 2..9)) {
            let mut coeffs = coeffs;
            coeffs[0] = if coeffs[0].abs() < 0.5 { 1.0 } else { coeffs[0] };
            let p = Polynomial::new(&coeffs);
            let roots = p.roots().unwrap();
            prop_assert_eq!(roots.len(), p.degree());
            for r in roots {
                let scale: f64 = p.coeffs().iter().enumerate()
                    .map(|(i, c)| c.abs() * r.norm().powi((p.degree() - i) as i32)).sum();
                prop_assert!(p.eval_complex(r).norm() <= 1e-9 * scale);
            }
        }
    }
}
