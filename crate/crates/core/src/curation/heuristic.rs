use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CurationConfig, CurationManifest, Strategy};
use crate::error::{CupidError, Result};
use crate::store::{SubtitleSource, VideoMeta};

/// Metadata rules: category allow-list, title/vocabulary overlap, and an
/// optional human-subtitle requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRules {
    pub allowed_categories: BTreeSet<String>,
    pub target_vocabulary: BTreeSet<String>,
    pub require_human_subtitles: bool,
    pub cap: Option<usize>,
}

impl HeuristicRules {
    /// Vocabulary words are folded to lowercase.
    pub fn new(
        allowed_categories: impl IntoIterator<Item = String>,
        target_vocabulary: impl IntoIterator<Item = String>,
        require_human_subtitles: bool,
        cap: Option<usize>,
    ) -> Result<Self> {
        let rules = Self {
            allowed_categories: allowed_categories.into_iter().collect(),
            target_vocabulary: target_vocabulary
                .into_iter()
                .map(|w| w.to_lowercase())
                .collect(),
            require_human_subtitles,
            cap,
        };
        rules.validate()?;
        Ok(rules)
    }

    pub fn validate(&self) -> Result<()> {
        if self.allowed_categories.is_empty() {
            return Err(CupidError::Argument("at least one allowed category is required".into()));
        }
        Ok(())
    }

    pub fn category_matches(&self, meta: &VideoMeta) -> bool {
        self.allowed_categories.contains(&meta.category)
    }

    pub fn title_matches(&self, meta: &VideoMeta) -> bool {
        tokenize_title(&meta.title)
            .iter()
            .any(|w| self.target_vocabulary.contains(w))
    }

    pub fn subtitles_ok(&self, meta: &VideoMeta) -> bool {
        !self.require_human_subtitles || meta.subtitle_source == SubtitleSource::Human
    }

    pub fn accepts(&self, meta: &VideoMeta) -> bool {
        self.category_matches(meta) && self.title_matches(meta) && self.subtitles_ok(meta)
    }
}

/// Lowercased whitespace tokens with ASCII punctuation removed; empty
/// tokens are dropped.
pub fn tokenize_title(title: &str) -> Vec<String> {
    title
        .split_whitespace()
        .map(|t| {
            t.chars()
                .filter(|c| !c.is_ascii_punctuation())
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Vocabulary drawn from downstream titles.
pub fn vocabulary_from_titles<'a>(titles: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    titles.into_iter().flat_map(tokenize_title).collect()
}

/// Keeps videos passing every rule, ordered by id; `cap` keeps the first
/// `cap` ids. Scores are absent.
pub fn curate_heuristic(
    metadata: impl IntoIterator<Item = VideoMeta>,
    rules: &HeuristicRules,
) -> Result<CurationManifest> {
    rules.validate()?;
    let mut kept: Vec<String> = metadata
        .into_iter()
        .filter(|m| rules.accepts(m))
        .map(|m| m.video_id)
        .collect();
    kept.sort_unstable();
    kept.dedup();
    if let Some(cap) = rules.cap {
        kept.truncate(cap);
    }
    let config = CurationConfig::new(Strategy::Heuristic, kept.len());
    Ok(CurationManifest::from_ranked(
        config,
        kept.into_iter().map(|id| (id, None)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOOD: &str = "Food and Entertaining";

    fn meta(id: &str, category: &str, title: &str, src: SubtitleSource) -> VideoMeta {
        VideoMeta {
            video_id: id.into(),
            category: category.into(),
            title: title.into(),
            subtitle_source: src,
            duration_s: 60.0,
        }
    }

    fn rules(vocab: &[&str], human: bool, cap: Option<usize>) -> HeuristicRules {
        HeuristicRules::new(
            [FOOD.to_owned()],
            vocab.iter().map(|s| s.to_string()),
            human,
            cap,
        )
        .unwrap()
    }

    #[test]
    fn tokenizer_folds_case_and_punctuation() {
        assert_eq!(tokenize_title("How to: Make PASTA!"), ["how", "to", "make", "pasta"]);
        assert_eq!(tokenize_title("don't -- stop"), ["dont", "stop"]);
    }

    #[test]
    fn six_video_fixture() {
        use SubtitleSource::*;
        let data = vec![
            meta("v1", FOOD, "Easy pasta dinner", Human),          // all three
            meta("v2", FOOD, "Easy pasta dinner", Asr),            // asr subtitles
            meta("v3", "Sports and Fitness", "Pasta run", Human),  // category
            meta("v4", FOOD, "Knife skills", Human),               // no overlap
            meta("v5", FOOD, "Grilled CHICKEN, fast!", Human),     // all three
            meta("v6", FOOD, "Chicken", None),                     // no subtitles
        ];
        let m = curate_heuristic(data, &rules(&["pasta", "chicken"], true, Option::None)).unwrap();
        assert_eq!(m.ids().collect::<Vec<_>>(), ["v1", "v5"]);
        assert!(m.entries.iter().all(|e| e.score.is_none()));
        assert_eq!(m.strategy, Strategy::Heuristic);
    }

    #[test]
    fn no_vocabulary_overlap_excluded() {
        let data = vec![meta("a", FOOD, "Unrelated words", SubtitleSource::Human)];
        assert!(curate_heuristic(data, &rules(&["pasta"], false, None)).unwrap().is_empty());
    }

    #[test]
    fn cap_keeps_smallest_ids() {
        let data: Vec<VideoMeta> = ["d", "b", "a", "c"]
            .iter()
            .map(|id| meta(id, FOOD, "pasta", SubtitleSource::Asr))
            .collect();
        let m = curate_heuristic(data, &rules(&["pasta"], false, Some(2))).unwrap();
        assert_eq!(m.ids().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn empty_categories_rejected() {
        assert!(HeuristicRules::new(Vec::<String>::new(), vec![], false, None).is_err());
    }
}
