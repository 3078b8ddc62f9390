//! Frame-reference grammar: `frame`/`frames` (any case), an optional `-` or
//! single space, then a decimal integer >= 1. The token must start a word.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static FRAME_REF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bframes?[- ]?([0-9]+)").expect("valid regex"));

/// One frame reference found in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRefMatch {
    pub frame_id: u32,
    /// Byte span of the whole reference (token through last digit).
    pub span: Range<usize>,
}

/// All references in order of appearance, including repeats.
pub fn find_frame_refs(text: &str) -> Vec<FrameRefMatch> {
    FRAME_REF
        .captures_iter(text)
        .filter_map(|caps| {
            let whole = caps.get(0)?;
            let id: u32 = caps.get(1)?.as_str().parse().ok()?;
            (id >= 1).then_some(FrameRefMatch {
                frame_id: id,
                span: whole.range(),
            })
        })
        .collect()
}

/// Distinct frame IDs in order of first mention.
pub fn extract_frame_refs(text: &str) -> Vec<u32> {
    let mut seen = Vec::new();
    for m in find_frame_refs(text) {
        if !seen.contains(&m.frame_id) {
            seen.push(m.frame_id);
        }
    }
    seen
}

pub fn contains_frame_ref(text: &str) -> bool {
    !find_frame_refs(text).is_empty()
}

/// Histogram over distinct reference counts with bins 0..=10 and an
/// overflow bin "11+".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefHistogram {
    bins: [u64; RefHistogram::N_BINS],
}

impl RefHistogram {
    pub const N_BINS: usize = 12;

    pub fn bin_label(idx: usize) -> String {
        if idx + 1 == Self::N_BINS {
            "11+".to_string()
        } else {
            idx.to_string()
        }
    }

    pub fn add(&mut self, n_refs: usize) {
        self.bins[n_refs.min(Self::N_BINS - 1)] += 1;
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.bins[idx]
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn populated_bins(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (String, u64)> + '_ {
        self.bins
            .iter()
            .enumerate()
            .map(|(i, &c)| (Self::bin_label(i), c))
    }

    /// Comma-separated `bin,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_refs,count\n");
        for (label, count) in self.iter() {
            out.push_str(&format!("{label},{count}\n"));
        }
        out
    }
}

impl<'a> FromIterator<&'a str> for RefHistogram {
    fn from_iter<I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let mut h = RefHistogram::default();
        for t in texts {
            h.add(extract_frame_refs(t).len());
        }
        h
    }
}

impl Serialize for RefHistogram {
    /// Populated bins only, in numeric bin order.
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        for (label, count) in self.iter().filter(|(_, c)| *c > 0) {
            m.serialize_entry(&label, &count)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for RefHistogram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, u64>::deserialize(d)?;
        let mut h = RefHistogram::default();
        for (k, v) in map {
            let idx = (0..Self::N_BINS)
                .find(|&i| Self::bin_label(i) == k)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown histogram bin {k:?}")))?;
            h.bins[idx] = v;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Character-level scan of the grammar, written without regex.
    /// Returns `(id, byte offset of the first digit)`.
    fn scan_oracle(text: &str) -> Vec<(u32, usize)> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let is_word = |c: char| c.is_alphanumeric() || c == '_';
        let lower = |k: usize| chars.get(k).map(|&(_, c)| c.to_ascii_lowercase());
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let starts_word = i == 0 || !is_word(chars[i - 1].1);
            let token = (0..5).all(|d| lower(i + d) == "frame".chars().nth(d));
            if starts_word && token {
                let mut j = i + 5;
                if lower(j) == Some('s') {
                    j += 1;
                }
                if matches!(lower(j), Some('-') | Some(' ')) {
                    j += 1;
                }
                let first_digit = j;
                while lower(j).is_some_and(|c| c.is_ascii_digit()) {
                    j += 1;
                }
                if j > first_digit {
                    let start = chars[first_digit].0;
                    let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
                    if let Ok(id) = text[start..end].parse::<u32>() {
                        if id >= 1 {
                            out.push((id, start));
                        }
                    }
                    i = j;
                    continue;
                }
            }
            i += 1;
        }
        out
    }

    #[test]
    fn no_references() {
        assert!(extract_frame_refs("no references here").is_empty());
    }

    #[test]
    fn mixed_forms_dedup_in_first_mention_order() {
        let text = "In Frame 2 the cube moves; by frame-10 it stops; Frame 2 again";
        let oracle: Vec<u32> = scan_oracle(text).into_iter().map(|(id, _)| id).collect();
        assert_eq!(oracle, vec![2, 10, 2]);
        assert_eq!(extract_frame_refs(text), vec![2, 10]);
    }

    #[test]
    fn frame_zero_is_not_a_reference() {
        assert!(extract_frame_refs("frame 0").is_empty());
    }

    #[test]
    fn plural_matches_adjacent_integer_only() {
        assert_eq!(extract_frame_refs("Frames 3 and 5"), vec![3]);
        assert_eq!(extract_frame_refs("FRAME7 then Frame-8"), vec![7, 8]);
        assert!(extract_frame_refs("keyframe 4, frame  9, 12 frames").is_empty());
    }

    #[test]
    fn histogram_bins_overflow() {
        let mut h = RefHistogram::default();
        for n in [0, 2, 2, 11, 40] {
            h.add(n);
        }
        assert_eq!(h.count(0), 1);
        assert_eq!(h.count(2), 2);
        assert_eq!(h.count(11), 2);
        assert_eq!(h.total(), 5);
        assert_eq!(h.populated_bins(), 3);
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, r#"{"0":1,"2":2,"11+":2}"#);
        assert_eq!(serde_json::from_str::<RefHistogram>(&json).unwrap(), h);
        assert!(h.to_csv().contains("\n11+,2\n"));
    }

    fn texty() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            Just("Frame ".to_string()),
            Just("frame-".to_string()),
            Just("frames ".to_string()),
            Just("FRAME".to_string()),
            Just("keyframe ".to_string()),
            Just(" ".to_string()),
            Just("  ".to_string()),
            Just(", ".to_string()),
            Just("é".to_string()),
            "[0-9]{1,3}",
            "[a-z]{1,6}",
        ];
        prop::collection::vec(piece, 0..24).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn grammar_agrees_with_character_scan(text in texty()) {
            let found: Vec<(u32, usize)> = find_frame_refs(&text)
                .into_iter()
                .map(|m| {
                    let digits = text[m.span.clone()]
                        .find(|c: char| c.is_ascii_digit())
                        .unwrap();
                    (m.frame_id, m.span.start + digits)
                })
                .collect();
            prop_assert_eq!(found, scan_oracle(&text));
        }

        #[test]
        fn every_id_is_adjacent_to_a_frame_token(text in texty()) {
            for m in find_frame_refs(&text) {
                let s = text[m.span.clone()].to_ascii_lowercase();
                prop_assert!(s.starts_with("frame"));
                let rest = s["frame".len()..].trim_start_matches('s');
                let rest = rest.strip_prefix(['-', ' ']).unwrap_or(rest);
                prop_assert_eq!(rest.parse::<u32>().ok(), Some(m.frame_id));
            }
        }
    }
}
