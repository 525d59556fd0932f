use serde::Serialize;

use crate::error::{Error, Result};

/// Word substituted for removed spans in the generic prompt.
pub const GENERIC_WORD: &str = "object";

/// Input and edit prompts, tokenized on whitespace and lowercased.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPair {
    input: Vec<String>,
    edited: Vec<String>,
}

impl PromptPair {
    pub fn new(input: &str, edited: &str) -> Result<Self> {
        let input = tokenize(input);
        let edited = tokenize(edited);
        if input.is_empty() || edited.is_empty() {
            return Err(Error::Precondition(
                "prompts must contain at least one token".into(),
            ));
        }
        Ok(Self { input, edited })
    }

    pub fn input(&self) -> &[String] {
        &self.input
    }

    pub fn edited(&self) -> &[String] {
        &self.edited
    }
}

fn tokenize(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffStatus {
    Edit,
    NoEdit,
}

/// One maximal run of unmatched tokens between two aligned tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffHunk {
    /// Token offset of `removed` in the input prompt.
    pub input_start: usize,
    /// Token offset of `added` in the edit prompt.
    pub edited_start: usize,
    pub removed: Vec<String>,
    pub added: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptDiff {
    pub status: DiffStatus,
    pub hunks: Vec<DiffHunk>,
    pub generic: Vec<String>,
}

impl PromptDiff {
    /// Removed tokens of the first hunk, space-joined.
    pub fn removed_text(&self) -> String {
        self.hunks
            .first()
            .map(|h| h.removed.join(" "))
            .unwrap_or_default()
    }

    /// Added tokens of the first hunk, space-joined.
    pub fn added_text(&self) -> String {
        self.hunks
            .first()
            .map(|h| h.added.join(" "))
            .unwrap_or_default()
    }

    pub fn generic_text(&self) -> String {
        self.generic.join(" ")
    }
}

/// Aligns the prompts by longest common subsequence and reports the
/// unmatched spans.
///
/// The generic prompt is the input with every removed span replaced by
/// [`GENERIC_WORD`]. Spans that only insert tokens leave it unchanged.
pub fn prompt_diff(pair: &PromptPair) -> PromptDiff {
    let (x, y) = (&pair.input, &pair.edited);
    let (n, m) = (x.len(), y.len());
    // lcs[i][j] = LCS length of x[i..] and y[j..].
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if x[i] == y[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }

    let mut hunks = Vec::new();
    let mut open: Option<DiffHunk> = None;
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && x[i] == y[j] {
            hunks.extend(open.take());
            i += 1;
            j += 1;
            continue;
        }
        let hunk = open.get_or_insert_with(|| DiffHunk {
            input_start: i,
            edited_start: j,
            removed: Vec::new(),
            added: Vec::new(),
        });
        if j == m || (i < n && lcs[i + 1][j] >= lcs[i][j + 1]) {
            hunk.removed.push(x[i].clone());
            i += 1;
        } else {
            hunk.added.push(y[j].clone());
            j += 1;
        }
    }
    hunks.extend(open);

    let mut generic = Vec::with_capacity(n);
    let mut next = 0;
    for h in hunks.iter().filter(|h| !h.removed.is_empty()) {
        generic.extend_from_slice(&x[next..h.input_start]);
        generic.push(GENERIC_WORD.to_string());
        next = h.input_start + h.removed.len();
    }
    generic.extend_from_slice(&x[next..]);

    PromptDiff {
        status: if hunks.is_empty() {
            DiffStatus::NoEdit
        } else {
            DiffStatus::Edit
        },
        hunks,
        generic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diff(a: &str, b: &str) -> PromptDiff {
        prompt_diff(&PromptPair::new(a, b).unwrap())
    }

    #[test]
    fn replacement_in_the_middle() {
        let d = diff("a chicken riding a bike", "a cat riding a bike");
        assert_eq!(d.status, DiffStatus::Edit);
        assert_eq!(d.hunks.len(), 1);
        assert_eq!(d.removed_text(), "chicken");
        assert_eq!(d.added_text(), "cat");
        assert_eq!(d.generic_text(), "a object riding a bike");
    }

    #[test]
    fn multi_token_addition() {
        let d = diff(
            "a skull warrior with a sword",
            "a skull warrior with a viking axe",
        );
        assert_eq!(d.removed_text(), "sword");
        assert_eq!(d.added_text(), "viking axe");
        assert_eq!(d.generic_text(), "a skull warrior with a object");
    }

    #[test]
    fn case_and_spacing_are_ignored() {
        let d = diff("A  Chicken\triding a bike", "a chicken riding a BIKE");
        assert_eq!(d.status, DiffStatus::NoEdit);
        assert!(d.hunks.is_empty());
        assert_eq!(d.generic_text(), "a chicken riding a bike");
    }

    #[test]
    fn disjoint_spans_are_all_reported() {
        let d = diff("a red car on a road", "a blue car on a bridge");
        assert_eq!(d.hunks.len(), 2);
        assert_eq!(d.hunks[1].removed, vec!["road"]);
        assert_eq!(d.hunks[1].added, vec!["bridge"]);
        assert_eq!(d.generic_text(), "a object car on a object");
    }

    #[test]
    fn pure_insertion_keeps_generic() {
        let d = diff("a cat", "a cat with a tail");
        assert_eq!(d.hunks[0].removed, Vec::<String>::new());
        assert_eq!(d.added_text(), "with a tail");
        assert_eq!(d.generic_text(), "a cat");
    }

    #[test]
    fn empty_prompt_rejected() {
        assert!(matches!(
            PromptPair::new("  ", "a cat"),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #[test]
        fn hunks_rebuild_both_prompts(a in proptest::collection::vec(0u8..4, 1..8), b in proptest::collection::vec(0u8..4, 1..8)) {
            let words = ["a", "cat", "dog", "bike"];
            let sa: Vec<&str> = a.iter().map(|i| words[*i as usize]).collect();
            let sb: Vec<&str> = b.iter().map(|i| words[*i as usize]).collect();
            let pair = PromptPair::new(&sa.join(" "), &sb.join(" ")).unwrap();
            let d = prompt_diff(&pair);
            // Unmatched token counts agree with the LCS length.
            let removed: usize = d.hunks.iter().map(|h| h.removed.len()).sum();
            let added: usize = d.hunks.iter().map(|h| h.added.len()).sum();
            prop_assert_eq!(sa.len() - removed, sb.len() - added);
            // Removed spans sit at their recorded offsets.
            for h in &d.hunks {
                prop_assert_eq!(&pair.input()[h.input_start..h.input_start + h.removed.len()], &h.removed[..]);
                prop_assert_eq!(&pair.edited()[h.edited_start..h.edited_start + h.added.len()], &h.added[..]);
            }
            prop_assert_eq!(d.status == DiffStatus::NoEdit, sa == sb);
        }
    }
}
