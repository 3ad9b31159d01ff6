//! Word and character n-gram tokenization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Recipe;
use crate::textnorm::{normalize, NormalizationConfig};
use crate::Error;

/// Pre-tokenized text without a separator longer than this is suspicious.
const LONGEST_TOKEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Granularity {
    Word,
    CharNGram(usize),
}

impl Granularity {
    pub const GRAM3: Granularity = Granularity::CharNGram(3);
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Granularity::Word => f.write_str("word"),
            Granularity::CharNGram(n) => write!(f, "gram{n}"),
        }
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "word" {
            return Ok(Granularity::Word);
        }
        s.strip_prefix("gram")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(Granularity::CharNGram)
            .ok_or_else(|| Error::Config(format!("granularity `{s}` (expected word or gramN)")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub granularity: Granularity,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segmenter {
    Whitespace,
    /// Tokens already split by the given separator.
    Pretokenized(char),
}

/// Overlapping codepoint n-grams. Text shorter than `n` becomes one token.
pub fn char_ngrams(text: &str, n: usize) -> TokenSeq {
    assert!(n >= 1, "n-gram size must be positive");
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let count = bounds.len() - 1;
    let tokens = if count == 0 {
        Vec::new()
    } else if count < n {
        vec![text.to_string()]
    } else {
        (0..=count - n)
            .map(|i| text[bounds[i]..bounds[i + n]].to_string())
            .collect()
    };
    TokenSeq {
        tokens,
        granularity: Granularity::CharNGram(n),
    }
}

pub fn word_tokens(text: &str, segmenter: Segmenter) -> TokenSeq {
    let tokens: Vec<String> = match segmenter {
        Segmenter::Whitespace => text.split_whitespace().map(str::to_string).collect(),
        Segmenter::Pretokenized(sep) => {
            if text.is_empty() {
                Vec::new()
            } else {
                if !text.contains(sep) && text.chars().count() > LONGEST_TOKEN {
                    log::warn!(
                        "pre-tokenized input of {} chars has no `{sep}` separator",
                        text.chars().count()
                    );
                }
                text.split(sep)
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect()
            }
        }
    };
    TokenSeq {
        tokens,
        granularity: Granularity::Word,
    }
}

/// Tokenizes a recipe's instructions after normalization.
///
/// Word granularity uses `instructions_tokens` when the record carries them
/// and whitespace segmentation otherwise.
pub fn tokenize_instructions(
    recipe: &Recipe,
    granularity: Granularity,
    config: &NormalizationConfig,
) -> TokenSeq {
    match granularity {
        Granularity::CharNGram(n) => char_ngrams(&normalize(&recipe.instructions, config), n),
        Granularity::Word => match &recipe.instructions_tokens {
            Some(tokens) => TokenSeq {
                tokens: tokens
                    .iter()
                    .map(|t| normalize(t, config))
                    .filter(|t| !t.is_empty())
                    .collect(),
                granularity: Granularity::Word,
            },
            None => word_tokens(&normalize(&recipe.instructions, config), Segmenter::Whitespace),
        },
    }
}
