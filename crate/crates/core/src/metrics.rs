//! Directional CLIP scores over precomputed, unit-normalized embeddings.
//!
//! All scores are raw; multiply by [`METRIC_REPORT_SCALE`] for reporting.
//! Per-view terms are summed in view order so results do not depend on
//! scheduling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::METRIC_REPORT_SCALE;

/// Directions shorter than this are treated as zero.
const ZERO_NORM: f64 = 1e-12;
/// Views whose larger similarity is at most this are skipped by
/// [`diff_score`].
pub const REL_GUARD: f64 = 1e-6;

/// Image embeddings of `N` rendered views before and after the edit, plus
/// the four text embeddings, all of dimension `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub(crate) image_input: Vec<Vec<f64>>,
    pub(crate) image_edited: Vec<Vec<f64>>,
    pub(crate) text_input: Vec<f64>,
    pub(crate) text_edited: Vec<f64>,
    pub(crate) text_word: Vec<f64>,
    pub(crate) text_generic: Vec<f64>,
}

impl EmbeddingSet {
    /// Validates shapes and L2-normalizes every vector.
    ///
    /// Vectors already within `1e-12` of unit length are kept as given, so a
    /// normalized set survives a write/read cycle unchanged.
    pub fn new(
        image_input: Vec<Vec<f64>>,
        image_edited: Vec<Vec<f64>>,
        text_input: Vec<f64>,
        text_edited: Vec<f64>,
        text_word: Vec<f64>,
        text_generic: Vec<f64>,
    ) -> Result<Self> {
        let n = image_input.len();
        if n == 0 {
            return Err(Error::Schema("image_input needs at least one view".into()));
        }
        if image_edited.len() != n {
            return Err(Error::Schema(format!(
                "image_edited has {} views, image_input has {n}",
                image_edited.len()
            )));
        }
        let d = text_input.len();
        if d == 0 {
            return Err(Error::Schema("embedding dimension must be >= 1".into()));
        }
        let named_texts = [
            ("text_input", &text_input),
            ("text_edited", &text_edited),
            ("text_word", &text_word),
            ("text_generic", &text_generic),
        ];
        for (name, v) in named_texts {
            check_dim(name, None, v, d)?;
        }
        for (name, set) in [
            ("image_input", &image_input),
            ("image_edited", &image_edited),
        ] {
            for (i, v) in set.iter().enumerate() {
                check_dim(name, Some(i), v, d)?;
            }
        }
        let mut set = Self {
            image_input,
            image_edited,
            text_input,
            text_edited,
            text_word,
            text_generic,
        };
        for v in set.vectors_mut() {
            normalize(v)?;
        }
        Ok(set)
    }

    fn vectors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.image_input
            .iter_mut()
            .chain(self.image_edited.iter_mut())
            .chain([
                &mut self.text_input,
                &mut self.text_edited,
                &mut self.text_word,
                &mut self.text_generic,
            ])
    }

    pub fn views(&self) -> usize {
        self.image_input.len()
    }

    pub fn dimension(&self) -> usize {
        self.text_input.len()
    }

    pub fn image_input(&self) -> &[Vec<f64>] {
        &self.image_input
    }

    pub fn image_edited(&self) -> &[Vec<f64>] {
        &self.image_edited
    }

    pub fn text_input(&self) -> &[f64] {
        &self.text_input
    }

    pub fn text_edited(&self) -> &[f64] {
        &self.text_edited
    }

    pub fn text_word(&self) -> &[f64] {
        &self.text_word
    }

    pub fn text_generic(&self) -> &[f64] {
        &self.text_generic
    }
}

fn check_dim(name: &str, index: Option<usize>, v: &[f64], d: usize) -> Result<()> {
    let label = match index {
        Some(i) => format!("{name}[{i}]"),
        None => name.to_string(),
    };
    if v.len() != d {
        return Err(Error::Schema(format!(
            "{label} has dimension {}, expected {d}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data(format!("{label} contains a non-finite value")));
    }
    Ok(())
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let n = norm(v);
    if n == 0.0 {
        return Err(Error::Data("cannot normalize a zero embedding".into()));
    }
    if (n - 1.0).abs() > ZERO_NORM {
        v.iter_mut().for_each(|x| *x /= n);
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionVariant {
    Dir,
    DirCos,
    DirAvg,
    DirAvgCos,
}

impl DirectionVariant {
    pub const ALL: [DirectionVariant; 4] = [
        DirectionVariant::Dir,
        DirectionVariant::DirCos,
        DirectionVariant::DirAvg,
        DirectionVariant::DirAvgCos,
    ];

    fn is_cosine(self) -> bool {
        matches!(self, DirectionVariant::DirCos | DirectionVariant::DirAvgCos)
    }

    fn averages_first(self) -> bool {
        matches!(self, DirectionVariant::DirAvg | DirectionVariant::DirAvgCos)
    }
}

impl fmt::Display for DirectionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DirectionVariant::Dir => "dir",
            DirectionVariant::DirCos => "dir_cos",
            DirectionVariant::DirAvg => "dir_avg",
            DirectionVariant::DirAvgCos => "dir_avg_cos",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffTarget {
    /// Compare against the edited word or phrase.
    Edit,
    /// Compare against the generic prompt.
    NoEdit,
}

/// How the pairwise cosine term `C(a, b)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CosineMode {
    #[default]
    Similarity,
    /// `1 − similarity`.
    Distance,
}

impl CosineMode {
    fn apply(self, similarity: f64) -> f64 {
        match self {
            CosineMode::Similarity => similarity,
            CosineMode::Distance => 1.0 - similarity,
        }
    }
}

impl FromStr for CosineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "similarity" => Ok(CosineMode::Similarity),
            "distance" => Ok(CosineMode::Distance),
            other => Err(Error::Domain(format!(
                "cosine mode must be similarity or distance, got {other:?}"
            ))),
        }
    }
}

/// A raw score with its view bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub value: f64,
    /// Views whose term was undefined and left out of the mean.
    pub skipped: usize,
    pub evaluated: usize,
}

impl Score {
    /// `value` in reporting units.
    pub fn reported(&self) -> f64 {
        self.value * METRIC_REPORT_SCALE
    }

    fn mean(terms: impl Iterator<Item = Option<f64>>) -> Self {
        let (mut sum, mut evaluated, mut skipped) = (0.0, 0, 0);
        for t in terms {
            match t {
                Some(v) => {
                    sum += v;
                    evaluated += 1;
                }
                None => skipped += 1,
            }
        }
        let value = if evaluated == 0 {
            0.0
        } else {
            sum / evaluated as f64
        };
        Self {
            value,
            skipped,
            evaluated,
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    (na > ZERO_NORM && nb > ZERO_NORM).then(|| dot(a, b) / (na * nb))
}

/// Agreement between the image change direction and the text change
/// direction.
///
/// Cosine variants skip views with a zero image direction (counted in
/// [`Score::skipped`]); when every view is skipped the value is 0. The
/// averaged direction is not renormalized.
pub fn direction_score(
    e: &EmbeddingSet,
    variant: DirectionVariant,
    mode: CosineMode,
) -> Result<Score> {
    let text = difference(&e.text_edited, &e.text_input);
    if variant.is_cosine() && norm(&text) <= ZERO_NORM {
        return Err(Error::Undefined(format!(
            "{variant}: text direction is zero (input and edit prompts embed identically)"
        )));
    }
    let term = |image: &[f64]| -> Option<f64> {
        if variant.is_cosine() {
            cosine(image, &text).map(|c| mode.apply(c))
        } else {
            Some(dot(image, &text))
        }
    };
    let directions = e
        .image_edited
        .iter()
        .zip(&e.image_input)
        .map(|(a, b)| difference(a, b));
    if !variant.averages_first() {
        return Ok(Score::mean(directions.map(|d| term(&d))));
    }
    let n = e.views();
    let mut mean = vec![0.0; e.dimension()];
    for d in directions {
        mean.iter_mut().zip(&d).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    Ok(match term(&mean) {
        Some(value) => Score {
            value,
            skipped: 0,
            evaluated: n,
        },
        None => Score {
            value: 0.0,
            skipped: n,
            evaluated: 0,
        },
    })
}

/// `|x − y| / max(x, y)`, undefined when `max(x, y) <= REL_GUARD`.
pub fn relative_difference(x: f64, y: f64) -> Option<f64> {
    let m = x.max(y);
    (m > REL_GUARD).then(|| (x - y).abs() / m)
}

/// Mean relative change of the image/text similarity between the input
/// and edited renders.
pub fn diff_score(e: &EmbeddingSet, target: DiffTarget, mode: CosineMode) -> Score {
    let text = match target {
        DiffTarget::Edit => &e.text_word,
        DiffTarget::NoEdit => &e.text_generic,
    };
    let c = |img: &[f64]| cosine(img, text).map(|s| mode.apply(s));
    Score::mean(e.image_input.iter().zip(&e.image_edited).map(|(i, o)| {
        let (x, y) = (c(i)?, c(o)?);
        relative_difference(x, y)
    }))
}

/// The six scores in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub dir: Score,
    pub dir_cos: Score,
    pub dir_avg: Score,
    pub dir_avg_cos: Score,
    pub diff_edit: Score,
    pub diff_noedit: Score,
}

impl MetricsReport {
    pub fn compute(e: &EmbeddingSet, mode: CosineMode) -> Result<Self> {
        Ok(Self {
            dir: direction_score(e, DirectionVariant::Dir, mode)?,
            dir_cos: direction_score(e, DirectionVariant::DirCos, mode)?,
            dir_avg: direction_score(e, DirectionVariant::DirAvg, mode)?,
            dir_avg_cos: direction_score(e, DirectionVariant::DirAvgCos, mode)?,
            diff_edit: diff_score(e, DiffTarget::Edit, mode),
            diff_noedit: diff_score(e, DiffTarget::NoEdit, mode),
        })
    }

    pub fn entries(&self) -> [(&'static str, Score); 6] {
        [
            ("clip_dir", self.dir),
            ("clip_dir_cos", self.dir_cos),
            ("clip_dir_avg", self.dir_avg),
            ("clip_dir_avg_cos", self.dir_avg_cos),
            ("clip_diff_edit", self.diff_edit),
            ("clip_diff_noedit", self.diff_noedit),
        ]
    }
}

impl fmt::Display for MetricsReport {
    /// One line per score in reporting units, with skipped-view counts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, s) in self.entries() {
            writeln!(
                f,
                "{name:<18} {:>10.2}  skipped {}",
                s.reported(),
                s.skipped
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set2d(ii: [f64; 2], ie: [f64; 2], ti: [f64; 2], te: [f64; 2]) -> EmbeddingSet {
        EmbeddingSet::new(
            vec![ii.to_vec()],
            vec![ie.to_vec()],
            ti.to_vec(),
            te.to_vec(),
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        )
        .unwrap()
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingSet {
        let mut v = || {
            (0..d)
                .map(|_| rng.random::<f64>() - 0.5)
                .collect::<Vec<_>>()
        };
        let ii = (0..n).map(|_| v()).collect();
        let ie = (0..n).map(|_| v()).collect();
        EmbeddingSet::new(ii, ie, v(), v(), v(), v()).unwrap()
    }

    #[test]
    fn hand_computed_2d() {
        let e = set2d([1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]);
        let s = |v| {
            direction_score(&e, v, CosineMode::Similarity)
                .unwrap()
                .value
        };
        assert!((s(DirectionVariant::Dir) - 2.0).abs() < 1e-12);
        assert!((s(DirectionVariant::DirCos) - 1.0).abs() < 1e-12);
        assert!((s(DirectionVariant::DirAvg) - 2.0).abs() < 1e-12);
        let d = direction_score(&e, DirectionVariant::DirCos, CosineMode::Distance).unwrap();
        assert!(d.value.abs() < 1e-12);
    }

    #[test]
    fn relative_difference_examples() {
        assert_eq!(relative_difference(0.2, 0.1), Some(0.5));
        assert_eq!(relative_difference(0.4, 0.2), relative_difference(0.2, 0.1));
        assert_eq!(relative_difference(0.0, -0.3), None);
        assert_eq!(relative_difference(0.1, 0.2), Some(0.5));
    }

    #[test]
    fn unit_vectors_are_kept_verbatim() {
        let v = vec![0.6, 0.8];
        let e = set2d([0.6, 0.8], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert_eq!(e.image_input()[0], v);
        let scaled = set2d([3.0, 4.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert!((norm(&scaled.image_input()[0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schema_and_data_errors() {
        let bad_d = EmbeddingSet::new(
            vec![vec![1.0; 512]],
            vec![vec![1.0; 511]],
            vec![1.0; 512],
            vec![1.0; 512],
            vec![1.0; 512],
            vec![1.0; 512],
        );
        assert!(matches!(bad_d, Err(Error::Schema(_))));
        let nan = EmbeddingSet::new(
            vec![vec![f64::NAN]],
            vec![vec![1.0]],
            vec![1.0],
            vec![1.0],
            vec![1.0],
            vec![1.0],
        );
        assert!(matches!(nan, Err(Error::Data(_))));
        let empty = EmbeddingSet::new(vec![], vec![], vec![1.0], vec![1.0], vec![1.0], vec![1.0]);
        assert!(matches!(empty, Err(Error::Schema(_))));
    }

    #[test]
    fn identity_views_score_zero_and_are_skipped() {
        let e = set2d([1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        let r = MetricsReport::compute(&e, CosineMode::Similarity).unwrap();
        for (_, s) in r.entries() {
            assert_eq!(s.value, 0.0);
        }
        assert_eq!(r.dir_cos.skipped, 1);
        assert_eq!(r.dir.skipped, 0);
    }

    #[test]
    fn zero_text_direction_is_undefined_for_cosine() {
        let e = set2d([1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]);
        assert!(matches!(
            direction_score(&e, DirectionVariant::DirCos, CosineMode::Similarity),
            Err(Error::Undefined(_))
        ));
        assert_eq!(
            direction_score(&e, DirectionVariant::Dir, CosineMode::Similarity)
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn averaging_commutes_with_the_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let e = random_set(&mut rng, 12, 16);
            let a = direction_score(&e, DirectionVariant::Dir, CosineMode::Similarity).unwrap();
            let b = direction_score(&e, DirectionVariant::DirAvg, CosineMode::Similarity).unwrap();
            assert!((a.value - b.value).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_ignores_direction_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = random_set(&mut rng, 1, 8);
        // Doubling the edited render's offset from the input doubles the
        // image direction for that view.
        let mut scaled = e.clone();
        let d = difference(&e.image_edited[0], &e.image_input[0]);
        scaled.image_edited[0] = e.image_input[0]
            .iter()
            .zip(&d)
            .map(|(a, b)| a + 2.0 * b)
            .collect();
        let cos = |s: &EmbeddingSet| {
            direction_score(s, DirectionVariant::DirCos, CosineMode::Similarity)
                .unwrap()
                .value
        };
        let raw = |s: &EmbeddingSet| {
            direction_score(s, DirectionVariant::Dir, CosineMode::Similarity)
                .unwrap()
                .value
        };
        assert!((cos(&e) - cos(&scaled)).abs() < 1e-12);
        assert!((raw(&scaled) - 2.0 * raw(&e)).abs() < 1e-12);
        assert!(raw(&e).abs() > 1e-6);
    }

    #[test]
    fn diff_is_symmetric_in_input_and_edited() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = random_set(&mut rng, 30, 8);
        let mut swapped = e.clone();
        std::mem::swap(&mut swapped.image_input, &mut swapped.image_edited);
        for t in [DiffTarget::Edit, DiffTarget::NoEdit] {
            assert_eq!(
                diff_score(&e, t, CosineMode::Similarity),
                diff_score(&swapped, t, CosineMode::Similarity)
            );
        }
    }

    #[test]
    fn reporting_scales_by_100() {
        let s = Score {
            value: 0.01234,
            skipped: 0,
            evaluated: 1,
        };
        assert_eq!(s.reported(), 0.01234 * 100.0);
    }
}
