//! Deterministic text normalization.
//!
//! "Symbols" are the Unicode general categories P (punctuation) and S
//! (symbol). Width folding uses NFKC.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

static SYMBOLS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}\p{S}]").expect("static pattern"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub fold_width: bool,
    pub fold_kana: bool,
    pub lowercase: bool,
    pub strip_symbols: bool,
}

impl NormalizationConfig {
    pub const NONE: NormalizationConfig = NormalizationConfig {
        fold_width: false,
        fold_kana: false,
        lowercase: false,
        strip_symbols: false,
    };

    /// Applied to instruction text before n-gram extraction.
    pub const INSTRUCTIONS: NormalizationConfig = NormalizationConfig {
        fold_width: true,
        ..NormalizationConfig::NONE
    };
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig::INSTRUCTIONS
    }
}

/// Applies the enabled steps in the order width, case, kana, symbols.
pub fn normalize(text: &str, config: &NormalizationConfig) -> String {
    let mut out = if config.fold_width {
        text.nfkc().collect()
    } else {
        text.to_string()
    };
    if config.lowercase {
        out = out.to_lowercase();
    }
    if config.fold_kana {
        out = fold_kana(&out);
    }
    if config.strip_symbols {
        out = strip_symbols(&out);
        if config.fold_width {
            // Removing a symbol can leave a base letter next to a combining mark.
            out = out.nfc().collect();
        }
    }
    out
}

pub fn strip_symbols(text: &str) -> String {
    SYMBOLS.replace_all(text, "").into_owned()
}

pub fn is_symbol(c: char) -> bool {
    let mut buf = [0u8; 4];
    SYMBOLS.is_match(c.encode_utf8(&mut buf))
}

fn is_open(c: char) -> bool {
    c == '(' || c == '（'
}

fn is_close(c: char) -> bool {
    c == ')' || c == '）'
}

/// Removes every maximal parenthesized span, parentheses included.
///
/// ASCII and full-width parentheses pair with each other. Unmatched
/// parentheses are dropped on their own and their surroundings kept.
pub fn strip_parenthetical(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut drop = vec![false; chars.len()];
    let mut open = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        if is_open(c) {
            open.push(i);
        } else if is_close(c) {
            match open.pop() {
                Some(start) => drop[start..=i].iter_mut().for_each(|d| *d = true),
                None => drop[i] = true,
            }
        }
    }
    for i in open {
        drop[i] = true;
    }
    chars
        .into_iter()
        .zip(drop)
        .filter_map(|(c, d)| (!d).then_some(c))
        .collect()
}

/// Maps hiragana to katakana; everything else passes through.
pub fn fold_kana(text: &str) -> String {
    text.chars().map(fold_kana_char).collect()
}

fn fold_kana_char(c: char) -> char {
    match c {
        // ぁ..ゖ and the iteration marks ゝゞ sit 0x60 below their katakana forms.
        '\u{3041}'..='\u{3096}' | '\u{309D}' | '\u{309E}' => {
            char::from_u32(c as u32 + 0x60).unwrap_or(c)
        }
        _ => c,
    }
}
