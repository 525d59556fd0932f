//! The embeddings document: one JSON object with keys `image_input` and
//! `image_edited` (N×D arrays) and `text_input`, `text_edited`, `text_word`,
//! `text_generic` (D-vectors). Unknown keys are ignored.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use crate::error::{Error, Result};
use crate::metrics::EmbeddingSet;

#[derive(Serialize, Deserialize)]
struct Document {
    image_input: Vec<Vec<f64>>,
    image_edited: Vec<Vec<f64>>,
    text_input: Vec<f64>,
    text_edited: Vec<f64>,
    text_word: Vec<f64>,
    text_generic: Vec<f64>,
}

pub fn embeddings_from_json(text: &str) -> Result<EmbeddingSet> {
    let doc: Document = serde_json::from_str(text).map_err(|e| match e.classify() {
        Category::Data => Error::Schema(e.to_string()),
        _ => Error::Json(e),
    })?;
    EmbeddingSet::new(
        doc.image_input,
        doc.image_edited,
        doc.text_input,
        doc.text_edited,
        doc.text_word,
        doc.text_generic,
    )
}

/// Shortest round-tripping decimal form of every value.
pub fn embeddings_to_json(set: &EmbeddingSet) -> String {
    let doc = Document {
        image_input: set.image_input.clone(),
        image_edited: set.image_edited.clone(),
        text_input: set.text_input.clone(),
        text_edited: set.text_edited.clone(),
        text_word: set.text_word.clone(),
        text_generic: set.text_generic.clone(),
    };
    serde_json::to_string(&doc).expect("finite floats always serialize")
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    embeddings_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, embeddings_to_json(set))?;
    Ok(())
}
