use serde::{Deserialize, Serialize};

use super::loss::PENALTY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LikelyBibo,
    Suspect,
    Rejected,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::LikelyBibo => "likely_bibo",
            Verdict::Suspect => "suspect",
            Verdict::Rejected => "rejected",
        }
    }
}

/// Fraction of the horizon treated as the tail.
pub const TAIL_FRACTION: f64 = 0.1;
/// Tail-to-total energy ratio above which a response is suspect.
pub const TAIL_RATIO: f64 = 0.3;

/// Finite-horizon stability heuristic on a restored closed-loop impulse
/// response and its loss.
pub fn stability_screen(restored: &[f64], j: f64, j_threshold: f64) -> Verdict {
    if !j.is_finite() || j >= PENALTY || restored.is_empty() || restored.iter().any(|x| !x.is_finite()) {
        return Verdict::Rejected;
    }
    let n = restored.len();
    let tail_len = ((n as f64) * TAIL_FRACTION).ceil().max(1.0) as usize;
    let tail = &restored[n - tail_len..];
    let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let total = energy(restored);
    let peak = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let head = &restored[..(n / 2).max(1)];
    let tail_heavy = total > 0.0 && (energy(tail) / total).sqrt() > TAIL_RATIO;
    let growing = peak(tail) > peak(head);
    if tail_heavy || growing || j >= j_threshold {
        Verdict::Suspect
    } else {
        Verdict::LikelyBibo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequences() {
        let decay: Vec<f64> = (0..300).map(|k| 0.9f64.powi(k)).collect();
        assert_eq!(stability_screen(&decay, 0.1, 1.0), Verdict::LikelyBibo);
        let grow: Vec<f64> = (0..300).map(|k| 1.05f64.powi(k)).collect();
        assert_eq!(stability_screen(&grow, 0.1, 1.0), Verdict::Suspect);
        let slow: Vec<f64> = (0..200).map(|k| 1.01f64.powi(k)).collect();
        assert_eq!(stability_screen(&slow, 0.1, 1.0), Verdict::Suspect);
    }

    #[test]
    fn loss_based_outcomes() {
        let decay: Vec<f64> = (0..300).map(|k| 0.9f64.powi(k)).collect();
        assert_eq!(stability_screen(&decay, PENALTY, 1.0), Verdict::Rejected);
        assert_eq!(stability_screen(&decay, f64::NAN, 1.0), Verdict::Rejected);
        assert_eq!(stability_screen(&decay, 2.0, 1.0), Verdict::Suspect);
        assert_eq!(stability_screen(&[], 0.0, 1.0), Verdict::Rejected);
    }
}
