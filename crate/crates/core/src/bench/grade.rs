use serde::{Deserialize, Serialize};

/// Coarse rating of one method on one criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Strong,
    Medium,
    Weak,
}

impl std::fmt::Display for Grade {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Grade::Strong => "strong",
            Grade::Medium => "medium",
            Grade::Weak => "weak",
        })
    }
}

/// Relative tolerance for "similar to the best / worst".
pub const GRADE_TOLERANCE: f64 = 0.1;

/// Grades every value relative to the best and worst of the group:
/// within 10% of the best is strong, otherwise the worst or anything within
/// 10% of it is weak, and the rest is medium. "Within 10%" means
/// `|v - ref| <= 0.1 * |ref|` (or exact equality when `ref` is zero).
pub fn grade_relative(values: &[f64], higher_is_better: bool) -> Vec<Grade> {
    if values.is_empty() {
        return Vec::new();
    }
    let (best, worst) = values.iter().fold((values[0], values[0]), |(b, w), &v| {
        if higher_is_better {
            (b.max(v), w.min(v))
        } else {
            (b.min(v), w.max(v))
        }
    });
    let near = |v: f64, r: f64| (v - r).abs() <= GRADE_TOLERANCE * r.abs();
    values
        .iter()
        .map(|&v| {
            if near(v, best) {
                Grade::Strong
            } else if v == worst || near(v, worst) {
                Grade::Weak
            } else {
                Grade::Medium
            }
        })
        .collect()
}
