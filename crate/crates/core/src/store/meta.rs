use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::clips::SubtitleRecord;
use crate::error::{CupidError, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubtitleSource {
    Human,
    Asr,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub category: String,
    pub title: String,
    pub subtitle_source: SubtitleSource,
    pub duration_s: f64,
}

pub fn validate_metadata(records: &[VideoMeta]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.video_id.as_str()) {
            return Err(CupidError::data(&r.video_id, "duplicate metadata record"));
        }
        if !(r.duration_s >= 0.0) {
            return Err(CupidError::data(&r.video_id, "negative or NaN duration"));
        }
    }
    Ok(())
}

pub fn read_metadata<R: BufRead>(reader: R) -> Result<Vec<VideoMeta>> {
    let records: Vec<VideoMeta> = jsonl::read_jsonl(reader)?;
    validate_metadata(&records)?;
    Ok(records)
}

pub fn read_subtitles<R: BufRead>(reader: R) -> Result<Vec<SubtitleRecord>> {
    let records: Vec<SubtitleRecord> = jsonl::read_jsonl(reader)?;
    if let Some(bad) = records.iter().find(|r| !(r.start_s <= r.end_s)) {
        return Err(CupidError::data(&bad.video_id, "subtitle ends before it starts"));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_metadata_lines() {
        let text = r#"{"video_id":"a","category":"Food and Entertaining","title":"Easy Pasta","subtitle_source":"human","duration_s":120.5}
{"video_id":"b","category":"Sports and Fitness","title":"Squats","subtitle_source":"asr","duration_s":0}
"#;
        let m = read_metadata(text.as_bytes()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].subtitle_source, SubtitleSource::Human);
    }

    #[test]
    fn rejects_duplicates_and_negative_duration() {
        let dup = r#"{"video_id":"a","category":"c","title":"t","subtitle_source":"none","duration_s":1}
{"video_id":"a","category":"c","title":"t","subtitle_source":"none","duration_s":1}"#;
        assert!(read_metadata(dup.as_bytes()).is_err());
        let neg = r#"{"video_id":"a","category":"c","title":"t","subtitle_source":"none","duration_s":-1}"#;
        assert!(read_metadata(neg.as_bytes()).is_err());
    }

    #[test]
    fn subtitle_records() {
        let text = r#"{"video_id":"a","start_s":0,"end_s":1.5,"text":"hi"}"#;
        assert_eq!(read_subtitles(text.as_bytes()).unwrap()[0].text, "hi");
        let bad = r#"{"video_id":"a","start_s":2,"end_s":1.5,"text":"hi"}"#;
        assert!(read_subtitles(bad.as_bytes()).is_err());
    }
}
