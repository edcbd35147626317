use super::{CurationConfig, CurationManifest, Strategy};
use crate::error::{CupidError, Result};
use crate::similarity::ColumnMeans;

/// Top `c` sources by mean similarity to the target corpus, best first,
/// ties to the smaller id.
pub fn curate_avg_sim(means: &ColumnMeans, c: usize) -> Result<CurationManifest> {
    let n = means.len();
    if c == 0 {
        return Err(CupidError::Argument("capacity must be at least 1".into()));
    }
    if c > n {
        return Err(CupidError::Capacity(format!(
            "capacity {c} exceeds {n} scored sources"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let cmp = |&a: &usize, &b: &usize| {
        means.means[b]
            .total_cmp(&means.means[a])
            .then_with(|| means.source_ids[a].cmp(&means.source_ids[b]))
    };
    if c < n {
        order.select_nth_unstable_by(c - 1, cmp);
        order.truncate(c);
    }
    order.sort_unstable_by(cmp);
    Ok(CurationManifest::from_ranked(
        CurationConfig::new(Strategy::AvgSim, c),
        order
            .into_iter()
            .map(|i| (means.source_ids[i].clone(), Some(means.means[i]))),
    ))
}
