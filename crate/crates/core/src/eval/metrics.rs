use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::model::UnitKind;

use super::EvalError;

/// Penalty and attenuation constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyConfig {
    pub epsilon: f64,
    pub eps_header: f64,
    pub eps_port: f64,
    pub eps_definition: f64,
    pub alpha_c: f64,
    pub beta_c: f64,
    pub len_c: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            epsilon: 0.8,
            eps_header: 0.6,
            eps_port: 0.6,
            eps_definition: 0.6,
            alpha_c: 0.2,
            beta_c: 0.1,
            len_c: 1.0,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(EvalError::InvalidConfig(format!("{name} = {v} is outside (0, 1]")))
            }
        };
        unit("epsilon", self.epsilon)?;
        unit("eps_header", self.eps_header)?;
        unit("eps_port", self.eps_port)?;
        unit("eps_definition", self.eps_definition)?;
        for (name, v) in [("alpha_c", self.alpha_c), ("beta_c", self.beta_c)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(EvalError::InvalidConfig(format!("{name} = {v} is outside (0, 1)")));
            }
        }
        if self.beta_c >= self.alpha_c {
            return Err(EvalError::InvalidConfig(format!(
                "beta_c ({}) must be smaller than alpha_c ({})",
                self.beta_c, self.alpha_c
            )));
        }
        if !(self.len_c > 0.0 && self.len_c.is_finite()) {
            return Err(EvalError::InvalidConfig(format!("len_c = {} must be positive", self.len_c)));
        }
        Ok(())
    }
}

fn check_group(name: &str, ws: &[f64]) -> Result<(), EvalError> {
    if ws.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(EvalError::InvalidWeights(format!("{name}: weights must be finite and nonnegative")));
    }
    let s: f64 = ws.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(EvalError::InvalidWeights(format!("{name}: weights sum to {s}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoupleWeights {
    pub k_h: f64,
    pub k_a: f64,
    pub k_c: f64,
}

impl Default for CoupleWeights {
    fn default() -> Self {
        CoupleWeights {
            k_h: 1.0 / 3.0,
            k_a: 1.0 / 3.0,
            k_c: 1.0 / 3.0,
        }
    }
}

impl CoupleWeights {
    pub fn validate(&self) -> Result<(), EvalError> {
        check_group("couple weights", &[self.k_h, self.k_a, self.k_c])
    }
}

/// Header, definition, state and equation weights. Only one of the last two
/// applies to a unit; the group is rescaled over the applicable three.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomicWeights {
    pub k_h: f64,
    pub k_d: f64,
    pub k_s: f64,
    pub k_e: f64,
}

impl Default for AtomicWeights {
    fn default() -> Self {
        AtomicWeights {
            k_h: 0.25,
            k_d: 0.25,
            k_s: 0.25,
            k_e: 0.25,
        }
    }
}

impl AtomicWeights {
    pub fn validate(&self) -> Result<(), EvalError> {
        check_group("atomic weights", &[self.k_h, self.k_d, self.k_s, self.k_e])?;
        if self.k_h + self.k_d + self.k_s <= 0.0 || self.k_h + self.k_d + self.k_e <= 0.0 {
            return Err(EvalError::InvalidWeights("atomic weights: an applicable group is all zero".into()));
        }
        Ok(())
    }

    /// (header, definition, behavior) weights for `kind`, summing to 1.
    pub fn active(&self, kind: UnitKind) -> (f64, f64, f64) {
        let b = if kind == UnitKind::Continuous { self.k_e } else { self.k_s };
        let s = self.k_h + self.k_d + b;
        (self.k_h / s, self.k_d / s, b / s)
    }
}

/// Consistent and inconsistent element counts for one component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyTally {
    pub ce: usize,
    pub ie: usize,
}

impl ConsistencyTally {
    pub fn consistent(&self) -> bool {
        self.ie == 0
    }

    pub fn add(&mut self, ok: bool) {
        if ok {
            self.ce += 1;
        } else {
            self.ie += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub m: usize,
    pub n: usize,
    pub len: usize,
}

/// `A_parent · Σ C_i · A_i`, divided by `Σ C_i` so that rounding in the
/// weights cannot pull a fully correct set below 1.
pub fn score_couple(parent_a: f64, weights: &[f64], child_a: &[f64]) -> Result<f64, EvalError> {
    if weights.len() != child_a.len() {
        return Err(EvalError::WeightMismatch {
            weights: weights.len(),
            children: child_a.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    let weighted: f64 = weights.iter().zip(child_a).map(|(c, a)| c * a).sum();
    Ok(if total > 0.0 { parent_a * weighted / total } else { 0.0 })
}

/// 1 for a fully correct model, else `ε · P`.
pub fn simulation_correctness(fully_correct: bool, p: f64, epsilon: f64) -> f64 {
    if fully_correct {
        1.0
    } else {
        epsilon * p
    }
}

/// `k_h·P_header + k_a·(F1_part·P_port) + k_c·F1_connection`.
pub fn couple_similarity(p_header: f64, f1_part: f64, p_port: f64, f1_connection: f64, w: &CoupleWeights) -> f64 {
    w.k_h * p_header + w.k_a * (f1_part * p_port) + w.k_c * f1_connection
}

/// F1 of `generated` against `reference`; two empty sets score 1.
pub fn match_f1<T: Ord>(generated: &BTreeSet<T>, reference: &BTreeSet<T>) -> f64 {
    if generated.is_empty() && reference.is_empty() {
        return 1.0;
    }
    let tp = generated.intersection(reference).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let p = tp / generated.len() as f64;
    let r = tp / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// 1 when consistent, else `ε · CE / (CE + IE)`.
pub fn element_similarity(t: &ConsistencyTally, eps: f64) -> f64 {
    if t.consistent() {
        1.0
    } else {
        eps * t.ce as f64 / (t.ce + t.ie) as f64
    }
}

/// `(α_i, β_i)` with `ln α_i = (len_c / len_i) · ln α_c`.
pub fn attenuation(alpha_c: f64, beta_c: f64, len_c: f64, len_i: usize) -> (f64, f64) {
    let r = len_c / len_i.max(1) as f64;
    ((r * alpha_c.ln()).exp(), (r * beta_c.ln()).exp())
}

/// `α_i^m · β_i^n`.
pub fn behavior_similarity(c: &ErrorCounts, cfg: &PenaltyConfig) -> f64 {
    let (a, b) = attenuation(cfg.alpha_c, cfg.beta_c, cfg.len_c, c.len);
    a.powi(c.m as i32) * b.powi(c.n as i32)
}

/// Component similarities of an atomic unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicParts {
    pub header: f64,
    pub definition: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equation: Option<f64>,
}

/// Header, definition and the kind's behavior part, weighted.
pub fn atomic_similarity(parts: &AtomicParts, kind: UnitKind, w: &AtomicWeights) -> Result<f64, EvalError> {
    let behavior = match (kind, parts.state, parts.equation) {
        (UnitKind::Discrete, Some(s), None) => s,
        (UnitKind::Continuous, None, Some(e)) => e,
        _ => return Err(EvalError::KindMismatch(kind)),
    };
    let (h, d, b) = w.active(kind);
    Ok(h * parts.header + d * parts.definition + b * behavior)
}

/// Entropy weights of the columns of `rows` (alternatives × criteria).
/// Columns without variability, including all-zero columns, get weight 0;
/// when no column varies the weights are uniform and a diagnostic is
/// returned.
pub fn entropy_weights(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Diagnostic>), EvalError> {
    let n = rows.len();
    if n < 2 {
        return Err(EvalError::DegenerateMatrix(format!("{n} rows; at least 2 are needed")));
    }
    let m = rows[0].len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(EvalError::DegenerateMatrix("rows must be nonempty and of equal length".into()));
    }
    if rows.iter().flatten().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(EvalError::DegenerateMatrix("entries must be finite and nonnegative".into()));
    }
    let ln_n = (n as f64).ln();
    let d: Vec<f64> = (0..m)
        .map(|j| {
            let sum: f64 = rows.iter().map(|r| r[j]).sum();
            if sum == 0.0 {
                return 0.0;
            }
            let e = -rows
                .iter()
                .map(|r| r[j] / sum)
                .filter(|p| *p > 0.0)
                .map(|p| p * p.ln())
                .sum::<f64>()
                / ln_n;
            (1.0 - e).max(0.0)
        })
        .collect();
    let total: f64 = d.iter().sum();
    if total <= 1e-15 {
        return Ok((
            vec![1.0 / m as f64; m],
            vec![Diagnostic::warning("UniformWeights", "no criterion varies across alternatives; weights are uniform")],
        ));
    }
    Ok((d.iter().map(|x| x / total).collect(), Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn score_couple_examples() {
        assert_eq!(score_couple(1.0, &[0.5, 0.5], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((score_couple(0.9, &[0.4, 0.6], &[1.0, 0.5]).unwrap() - 0.63).abs() < TOL);
        assert_eq!(score_couple(0.0, &[0.4, 0.6], &[1.0, 0.5]).unwrap(), 0.0);
        assert!(matches!(score_couple(1.0, &[1.0], &[1.0, 1.0]), Err(EvalError::WeightMismatch { .. })));
        assert_eq!(score_couple(1.0, &[1.0 / 6.0; 6], &[1.0; 6]).unwrap(), 1.0);
    }

    #[test]
    fn correctness_branches() {
        assert_eq!(simulation_correctness(true, 0.1, 0.8), 1.0);
        assert!((simulation_correctness(false, 0.5, 0.8) - 0.4).abs() < TOL);
        assert_eq!(simulation_correctness(false, 0.0, 0.8), 0.0);
    }

    #[test]
    fn couple_similarity_examples() {
        let third = CoupleWeights::default();
        assert!((couple_similarity(1.0, 1.0, 1.0, 1.0, &third) - 1.0).abs() < TOL);
        assert!((couple_similarity(1.0, 0.8, 1.0, 0.5, &third) - 2.3 / 3.0).abs() < TOL);
        let no_attr = CoupleWeights { k_h: 0.5, k_a: 0.0, k_c: 0.5 };
        assert_eq!(couple_similarity(1.0, 0.1, 1.0, 0.5, &no_attr), couple_similarity(1.0, 0.9, 1.0, 0.5, &no_attr));
    }

    #[test]
    fn f1_examples() {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let six = set(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(match_f1(&six, &six), 1.0);
        let five_plus = set(&["a", "b", "c", "d", "e", "z"]);
        assert!((match_f1(&five_plus, &six) - 5.0 / 6.0).abs() < TOL);
        assert_eq!(match_f1(&set(&["x"]), &set(&["y"])), 0.0);
        assert_eq!(match_f1(&set(&[]), &set(&[])), 1.0);
        assert_eq!(match_f1(&set(&[]), &set(&["y"])), 0.0);
    }

    #[test]
    fn element_similarity_examples() {
        assert_eq!(element_similarity(&ConsistencyTally { ce: 5, ie: 0 }, 0.6), 1.0);
        assert!((element_similarity(&ConsistencyTally { ce: 3, ie: 1 }, 0.6) - 0.45).abs() < TOL);
        assert_eq!(element_similarity(&ConsistencyTally { ce: 0, ie: 4 }, 0.6), 0.0);
    }

    #[test]
    fn attenuation_examples() {
        assert!((attenuation(0.2, 0.1, 1.0, 1).0 - 0.2).abs() < TOL);
        assert!((attenuation(0.2, 0.1, 1.0, 4).0 - 0.668_740_304_976_422).abs() < 1e-12);
        assert!((attenuation(0.2, 0.1, 1.0, 2).1 - 0.316_227_766_016_838).abs() < 1e-12);
    }

    #[test]
    fn behavior_examples() {
        let cfg = PenaltyConfig::default();
        assert_eq!(behavior_similarity(&ErrorCounts { m: 0, n: 0, len: 3 }, &cfg), 1.0);
        let v = behavior_similarity(&ErrorCounts { m: 2, n: 1, len: 4 }, &cfg);
        assert!((v - 0.251_486_685).abs() < 1e-8, "{v}");
        let doubled = behavior_similarity(&ErrorCounts { m: 4, n: 2, len: 8 }, &cfg);
        assert!((v - doubled).abs() < 1e-12);
    }

    #[test]
    fn atomic_examples() {
        let w = AtomicWeights { k_h: 0.2, k_d: 0.3, k_s: 0.5, k_e: 0.0 };
        let parts = AtomicParts { header: 1.0, definition: 0.45, state: Some(0.251_486_685), equation: None };
        let v = atomic_similarity(&parts, UnitKind::Discrete, &w).unwrap();
        assert!((v - 0.460_743_342_5).abs() < 1e-8, "{v}");
        let perfect = AtomicParts { header: 1.0, definition: 1.0, state: None, equation: Some(1.0) };
        assert!((atomic_similarity(&perfect, UnitKind::Continuous, &AtomicWeights::default()).unwrap() - 1.0).abs() < TOL);
        let wrong = AtomicParts { equation: Some(1.0), ..parts };
        assert!(matches!(atomic_similarity(&wrong, UnitKind::Discrete, &w), Err(EvalError::KindMismatch(_))));
    }

    #[test]
    fn ewm_examples() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, 0.5], vec![1.0, 0.25]];
        let (w, d) = entropy_weights(&rows).unwrap();
        assert!(d.is_empty());
        assert!(w[0].abs() < TOL && (w[1] - 1.0).abs() < TOL);
        let (u, d) = entropy_weights(&[vec![2.0, 3.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(u, [0.5, 0.5]);
        assert_eq!(d[0].code, "UniformWeights");
        assert!(matches!(entropy_weights(&[vec![1.0]]), Err(EvalError::DegenerateMatrix(_))));
    }

    #[test]
    fn config_validation() {
        assert!(PenaltyConfig::default().validate().is_ok());
        let bad = PenaltyConfig { beta_c: 0.3, ..PenaltyConfig::default() };
        assert!(bad.validate().is_err());
        assert!(CoupleWeights { k_h: 0.5, k_a: 0.5, k_c: 0.5 }.validate().is_err());
    }
}
