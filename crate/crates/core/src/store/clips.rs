use serde::{Deserialize, Serialize};

use crate::error::{CupidError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtitle {
    pub text: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// Subtitle line as it appears in the JSON-lines subtitle file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleRecord {
    pub video_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

impl From<SubtitleRecord> for Subtitle {
    fn from(r: SubtitleRecord) -> Self {
        Subtitle {
            text: r.text,
            start_s: r.start_s,
            end_s: r.end_s,
        }
    }
}

/// Splits `[0, duration_s]` into `n` contiguous windows of equal width.
///
/// Window `k` starts at exactly `k * duration_s / n` and ends where window
/// `k + 1` starts; the last window ends at `duration_s`.
pub fn make_uniform_windows(duration_s: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(CupidError::Argument("window count must be at least 1".into()));
    }
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(CupidError::Argument(format!(
            "duration must be positive and finite, got {duration_s}"
        )));
    }
    let start = |k: usize| k as f64 * duration_s / n as f64;
    Ok((0..n)
        .map(|k| {
            let end = if k + 1 == n { duration_s } else { start(k + 1) };
            (start(k), end)
        })
        .collect())
}

/// Merges each run of `group` consecutive subtitles into one. A trailing
/// short run is kept.
pub fn merge_consecutive_subtitles(subs: &[Subtitle], group: usize) -> Result<Vec<Subtitle>> {
    if group == 0 {
        return Err(CupidError::Argument("group must be at least 1".into()));
    }
    if let Some(w) = subs.windows(2).position(|w| w[1].start_s < w[0].start_s) {
        return Err(CupidError::Argument(format!(
            "subtitles not sorted by start time at index {}",
            w + 1
        )));
    }
    if let Some(bad) = subs.iter().position(|s| !(s.start_s <= s.end_s)) {
        return Err(CupidError::Argument(format!("subtitle {bad} ends before it starts")));
    }
    Ok(subs
        .chunks(group)
        .map(|run| Subtitle {
            text: run
                .iter()
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" "),
            start_s: run[0].start_s,
            end_s: run.iter().map(|s| s.end_s).fold(f64::NEG_INFINITY, f64::max),
        })
        .collect())
}
