use cupid_core::store::{make_uniform_windows, merge_consecutive_subtitles, Subtitle};
use proptest::prelude::*;

fn subs_strategy() -> impl Strategy<Value = Vec<Subtitle>> {
    proptest::collection::vec((0.0f64..5.0, 0.0f64..10.0, "[a-z]{1,6}"), 0..30).prop_map(|raw| {
        let mut t = 0.0;
        raw.into_iter()
            .map(|(gap, len, text)| {
                t += gap;
                Subtitle { text, start_s: t, end_s: t + len }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn windows_tile_the_duration(duration in 0.001f64..1e5, n in 1usize..200) {
        let w = make_uniform_windows(duration, n).unwrap();
        prop_assert_eq!(w.len(), n);
        prop_assert_eq!(w[0].0, 0.0);
        prop_assert_eq!(w[n - 1].1, duration);
        for (k, win) in w.iter().enumerate() {
            prop_assert_eq!(win.0, k as f64 * duration / n as f64);
        }
        prop_assert!(w.windows(2).all(|p| p[0].1 == p[1].0));
    }

    #[test]
    fn merging_preserves_text_and_span(subs in subs_strategy(), group in 1usize..6) {
        let merged = merge_consecutive_subtitles(&subs, group).unwrap();
        prop_assert_eq!(merged.len(), subs.len().div_ceil(group));
        let words = |v: &[Subtitle]| v.iter().flat_map(|s| s.text.split(' ').map(str::to_owned).collect::<Vec<_>>()).collect::<Vec<_>>();
        prop_assert_eq!(words(&merged), words(&subs));
        if !subs.is_empty() {
            let span = |v: &[Subtitle]| (
                v.iter().map(|s| s.start_s).fold(f64::INFINITY, f64::min),
                v.iter().map(|s| s.end_s).fold(f64::NEG_INFINITY, f64::max),
            );
            prop_assert_eq!(span(&merged), span(&subs));
        }
        if group == 1 {
            prop_assert_eq!(merged, subs);
        }
    }
}

#[test]
fn window_examples() {
    let w = make_uniform_windows(100.0, 20).unwrap();
    assert_eq!(w[19], (95.0, 100.0));
    assert_eq!(make_uniform_windows(7.0, 1).unwrap(), vec![(0.0, 7.0)]);
    let w = make_uniform_windows(10.0, 3).unwrap();
    assert_eq!(w, vec![(0.0, 10.0 / 3.0), (10.0 / 3.0, 20.0 / 3.0), (20.0 / 3.0, 10.0)]);
}
