//! Ingredient-list distance used to filter candidate pairs.
//!
//! Both lists are canonicalized, exact matches cancel one-for-one, then each
//! remaining ingredient of the candidate list looks for an original-list
//! ingredient among its three nearest embedding neighbours. Whatever is left
//! on either side counts toward the distance.
//!
//! The procedure is directional: pass `(original, candidate)`.

use log::debug;

use crate::corpus::Recipe;
use crate::embed::{nearest_neighbors, train_sgns, EmbeddingTable, SgnsConfig};
use crate::textnorm::{fold_kana, strip_parenthetical, strip_symbols};
use crate::tokenize::{Granularity, TokenSeq};
use crate::Result;

/// Neighbours consulted per unmatched candidate ingredient.
pub const SIMILAR_WORDS: usize = 3;

/// Largest distance that still makes a pair an annotation target.
pub const ANNOTATION_THRESHOLD: usize = 2;

/// Strips parenthesised notes and symbols, folds hiragana to katakana and
/// trims. Returns `None` when nothing is left.
pub fn canonicalize_ingredient(name: &str) -> Option<String> {
    let folded = fold_kana(&strip_symbols(&strip_parenthetical(name)));
    let trimmed = folded.trim();
    if trimmed.is_empty() {
        debug!("ingredient {name:?} is empty after canonicalization; dropped");
        None
    } else {
        Some(trimmed.to_string())
    }
}

pub fn canonicalize_list<S: AsRef<str>>(names: &[S]) -> Vec<String> {
    names.iter().filter_map(|n| canonicalize_ingredient(n.as_ref())).collect()
}

pub fn ingredients_distance<S: AsRef<str>, T: AsRef<str>>(
    original: &[S],
    candidate: &[T],
    table: &EmbeddingTable,
) -> usize {
    let mut a = canonicalize_list(original);
    let mut b = canonicalize_list(candidate);

    // Exact matches cancel as a multiset.
    b.retain(|item| match a.iter().position(|x| x == item) {
        Some(pos) => {
            a.remove(pos);
            false
        }
        None => true,
    });

    b.retain(|item| {
        let similar = nearest_neighbors(table, item, SIMILAR_WORDS);
        match a.iter().position(|x| similar.iter().any(|(s, _)| s == x)) {
            Some(pos) => {
                a.remove(pos);
                false
            }
            None => true,
        }
    });
    a.len() + b.len()
}

pub fn passes_annotation_filter(distance: usize) -> bool {
    distance <= ANNOTATION_THRESHOLD
}

/// One word-granularity sentence per recipe, each canonical ingredient name a
/// single token.
pub fn ingredient_sentences<'a>(recipes: impl IntoIterator<Item = &'a Recipe>) -> Vec<TokenSeq> {
    recipes
        .into_iter()
        .map(|r| TokenSeq {
            tokens: canonicalize_list(&r.ingredients),
            granularity: Granularity::Word,
        })
        .collect()
}

/// Trains the ingredient similarity table over the recipes' ingredient lists.
pub fn train_ingredient_table<'a>(
    recipes: impl IntoIterator<Item = &'a Recipe>,
    config: &SgnsConfig,
) -> Result<EmbeddingTable> {
    train_sgns(&ingredient_sentences(recipes), config)
}
