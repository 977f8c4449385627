//! Per-session ranking quality measures and series statistics.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::rank::RankingMode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no headlines were chosen")]
    EmptyChoice,
    #[error("a trend needs at least two points with distinct session indices")]
    DegenerateSeries,
    #[error("series shapes differ: {0}")]
    ShapeMismatch(String),
}

/// Checks `offered` and `chosen`, returning each chosen item's offered position.
fn chosen_positions<S: AsRef<str>>(
    offered: &[(S, f64)],
    chosen: &BTreeSet<String>,
) -> Result<Vec<usize>, EvalError> {
    if offered.is_empty() {
        return Err(EvalError::InvalidInput("no headlines were offered".into()));
    }
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(offered.len());
    for (pos, (link, score)) in offered.iter().enumerate() {
        if !(score.is_finite() && *score >= 0.0) {
            return Err(EvalError::InvalidInput(format!(
                "score {score} of {:?} is not a finite non-negative number",
                link.as_ref()
            )));
        }
        if index.insert(link.as_ref(), pos).is_some() {
            return Err(EvalError::InvalidInput(format!(
                "{:?} offered twice",
                link.as_ref()
            )));
        }
    }
    chosen
        .iter()
        .map(|link| {
            index
                .get(link.as_str())
                .copied()
                .ok_or_else(|| EvalError::InvalidInput(format!("{link:?} was not offered")))
        })
        .collect()
}

/// Mean score of the chosen headlines and mean of the top-N offered scores,
/// N being the number chosen. `None` when nothing was chosen.
pub fn chosen_and_max_means<S: AsRef<str>>(
    offered: &[(S, f64)],
    chosen: &BTreeSet<String>,
) -> Result<Option<(f64, f64)>, EvalError> {
    let positions = chosen_positions(offered, chosen)?;
    if positions.is_empty() {
        return Ok(None);
    }
    let n = positions.len();
    // Both sums run over descending scores so the chosen sum can never exceed
    // the top-N sum through rounding.
    let mut picked: Vec<f64> = positions.iter().map(|&p| offered[p].1).collect();
    picked.sort_by(|a, b| b.total_cmp(a));
    let mut all: Vec<f64> = offered.iter().map(|(_, s)| *s).collect();
    all.sort_by(|a, b| b.total_cmp(a));

    let chosen_sum: f64 = picked.iter().sum();
    let top_sum: f64 = all[..n].iter().sum();
    Ok(Some((chosen_sum / n as f64, top_sum / n as f64)))
}

/// Ratio of the chosen headlines' mean score to the best achievable mean for
/// the same number of choices.
///
/// Returns `None` when nothing was chosen and 1 when every offered score is 0.
pub fn c_d_rate<S: AsRef<str>>(
    offered: &[(S, f64)],
    chosen: &BTreeSet<String>,
) -> Result<Option<f64>, EvalError> {
    Ok(chosen_and_max_means(offered, chosen)?.map(
        |(mean, max_mean)| {
            if max_mean == 0.0 {
                1.0
            } else {
                mean / max_mean
            }
        },
    ))
}

/// Fraction of the R chosen headlines found in the first R offered positions.
pub fn r_precision<S: AsRef<str>>(offered: &[(S, f64)], chosen: &BTreeSet<String>) -> Result<f64, EvalError> {
    let positions = chosen_positions(offered, chosen)?;
    if positions.is_empty() {
        return Err(EvalError::EmptyChoice);
    }
    let r = positions.len();
    let hits = positions.iter().filter(|&&p| p < r).count();
    Ok(hits as f64 / r as f64)
}

/// Ordinary least-squares slope and intercept of `(x, y)` points.
pub fn linear_fit(series: &[(f64, f64)]) -> Result<(f64, f64), EvalError> {
    if series.len() < 2 {
        return Err(EvalError::DegenerateSeries);
    }
    let n = series.len() as f64;
    let mean_x = series.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = series.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = series.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(EvalError::DegenerateSeries);
    }
    let sxy: f64 = series.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    Ok((slope, mean_y - slope * mean_x))
}

pub fn trend_slope(series: &[(f64, f64)]) -> Result<f64, EvalError> {
    linear_fit(series).map(|(slope, _)| slope)
}

/// One point of a per-session difference-of-means series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferencePoint {
    /// 1-based session number.
    pub session: usize,
    /// Number of users with a value under both variants.
    pub n_users: usize,
    pub mean_diff: Option<f64>,
    /// Sample (n - 1) standard deviation of the per-user differences.
    pub stddev: Option<f64>,
}

/// Per session, the mean over users of `a - b` and its sample standard
/// deviation. Inputs are indexed `[session][user]`; users missing a value in
/// either input are left out of that session.
pub fn difference_series(
    a: &[Vec<Option<f64>>],
    b: &[Vec<Option<f64>>],
) -> Result<Vec<DifferencePoint>, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::ShapeMismatch(format!(
            "{} sessions vs {}",
            a.len(),
            b.len()
        )));
    }
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(s, (ua, ub))| {
            if ua.len() != ub.len() {
                return Err(EvalError::ShapeMismatch(format!(
                    "session {}: {} users vs {}",
                    s + 1,
                    ua.len(),
                    ub.len()
                )));
            }
            let diffs: Vec<f64> = ua
                .iter()
                .zip(ub)
                .filter_map(|(x, y)| Some((*x)? - (*y)?))
                .collect();
            let n = diffs.len();
            let mean = (n > 0).then(|| diffs.iter().sum::<f64>() / n as f64);
            let stddev = mean
                .filter(|_| n > 1)
                .map(|m| (diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
            Ok(DifferencePoint {
                session: s + 1,
                n_users: n,
                mean_diff: mean,
                stddev,
            })
        })
        .collect()
}

/// Everything measured about one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_index: usize,
    pub n_chosen: usize,
    pub mean_chosen_score: Option<f64>,
    pub max_mean_score: Option<f64>,
    pub c_d: Option<f64>,
    pub r_precision: Option<f64>,
    pub mode: RankingMode,
}

impl SessionMetrics {
    pub fn compute<S: AsRef<str>>(
        session_index: usize,
        mode: RankingMode,
        offered: &[(S, f64)],
        chosen: &BTreeSet<String>,
    ) -> Result<Self, EvalError> {
        let means = chosen_and_max_means(offered, chosen)?;
        let c_d = c_d_rate(offered, chosen)?;
        let r_precision = match r_precision(offered, chosen) {
            Ok(v) => Some(v),
            Err(EvalError::EmptyChoice) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            session_index,
            n_chosen: chosen.len(),
            mean_chosen_score: means.map(|m| m.0),
            max_mean_score: means.map(|m| m.1),
            c_d,
            r_precision,
            mode,
        })
    }
}
