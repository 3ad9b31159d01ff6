//! Synthetic recipe corpora with planted near-duplicates.
//!
//! Base recipes are a few templated steps over a pool of hiragana ingredient
//! names. Each planted duplicate copies a training-period recipe, writes one
//! ingredient mention in katakana, then injects random single-codepoint
//! typos. Every duplicate is dated after the split cutoff.

use chrono::{Days, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PairLabel, Recipe};
use crate::pipeline::GoldLabels;
use crate::textnorm::fold_kana;
use crate::{Error, Result};

const STEPS: &[&str] = &[
    "cut the {a} into {n} pieces",
    "boil the {a} for {n} minutes",
    "mix the {a} and the {b} in a bowl",
    "fry the {a} with the {b} over medium heat",
    "add {n} spoons of {a}",
    "season with {a} and serve warm",
    "chill the {a} for {n} hours",
    "simmer the {a} and the {b} until soft",
    "slice the {a} thinly",
    "bake the {a} at {t} degrees for {n} minutes",
    "grate the {a} over the {b}",
    "stir in the {a} slowly",
    "drain the {a} well",
    "marinate the {a} in {b} overnight",
    "roast the {a} until golden",
    "whisk the {a} with the {b}",
    "steam the {a} for {n} minutes",
    "peel and dice the {a}",
    "soak the {a} in water for {n} minutes",
    "top the {a} with chopped {b}",
    "wrap the {a} in foil",
    "grill the {a} on both sides",
    "toss the {a} with a little {b}",
    "mash the {a} while hot",
];

const HIRAGANA: std::ops::RangeInclusive<u32> = 0x3042..=0x3093;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Total recipes, duplicates included.
    pub recipes: usize,
    pub duplicates: usize,
    pub ingredient_pool: usize,
    /// Per-codepoint typo probability in duplicates.
    pub typo_rate: f64,
    /// Base recipes dated after the cutoff alongside the duplicates.
    pub late_originals: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            recipes: 1000,
            duplicates: 50,
            ingredient_pool: 200,
            typo_rate: 0.02,
            late_originals: 50,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub original_id: String,
    pub duplicate_id: String,
    /// Typos injected into the duplicate's instructions.
    pub typos: usize,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub planted: Vec<PlantedPair>,
    pub cutoff: NaiveDate,
    pub ingredient_pool: Vec<String>,
}

impl SynthCorpus {
    /// Planted pairs as near-duplicate gold labels.
    pub fn gold(&self) -> GoldLabels {
        let mut gold = GoldLabels::default();
        for p in &self.planted {
            gold.insert(&p.duplicate_id, &p.original_id, PairLabel::NearDuplicate);
        }
        gold
    }
}

fn ingredient_pool(rng: &mut impl Rng, size: usize) -> Vec<String> {
    let mut pool: Vec<String> = Vec::with_capacity(size);
    while pool.len() < size {
        let len = rng.random_range(2..=4);
        let name: String = (0..len)
            .map(|_| char::from_u32(rng.random_range(HIRAGANA)).expect("hiragana block"))
            .collect();
        if !pool.contains(&name) {
            pool.push(name);
        }
    }
    pool
}

fn base_recipe(rng: &mut impl Rng, pool: &[String]) -> (Vec<String>, String) {
    let count = rng.random_range(3..=6);
    let ingredients: Vec<String> = pool.choose_multiple(rng, count).cloned().collect();
    let steps = rng.random_range(4..=6);
    let text: Vec<String> = (0..steps)
        .map(|_| {
            let step = STEPS.choose(rng).expect("templates");
            let a = ingredients.choose(rng).expect("ingredients");
            let b = ingredients.choose(rng).expect("ingredients");
            step.replace("{a}", a)
                .replace("{b}", b)
                .replace("{n}", &rng.random_range(2..=30).to_string())
                .replace("{t}", &(rng.random_range(16..=24) * 10).to_string())
        })
        .collect();
    (ingredients, text.join("\n"))
}

/// Writes the first instruction mention of one listed ingredient in
/// katakana, together with its ingredient-list entry.
fn kana_variant(rng: &mut impl Rng, ingredients: &mut [String], text: &str) -> String {
    let mentioned: Vec<usize> = (0..ingredients.len()).filter(|&i| text.contains(&ingredients[i])).collect();
    let Some(&i) = mentioned.choose(rng) else {
        return text.to_string();
    };
    let name = ingredients[i].clone();
    let variant = fold_kana(&name);
    ingredients[i] = variant.clone();
    text.replacen(&name, &variant, 1)
}

/// Swaps, deletes or inserts at each codepoint with probability `rate`.
/// Newlines are left alone. Returns the text and the number of typos.
pub fn inject_typos(rng: &mut impl Rng, text: &str, rate: f64) -> (String, usize) {
    let mut chars: Vec<char> = text.chars().collect();
    let mut out = Vec::with_capacity(chars.len() + 8);
    let mut typos = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' || !rng.random_bool(rate) {
            out.push(c);
            i += 1;
            continue;
        }
        typos += 1;
        match rng.random_range(0..3) {
            0 if i + 1 < chars.len() && chars[i + 1] != '\n' => {
                chars.swap(i, i + 1);
                out.push(chars[i]);
                i += 1;
            }
            1 => i += 1,
            _ => {
                out.push(random_like(rng, c));
                out.push(c);
                i += 1;
            }
        }
    }
    (out.into_iter().collect(), typos)
}

fn random_like(rng: &mut impl Rng, near: char) -> char {
    if HIRAGANA.contains(&(near as u32)) {
        char::from_u32(rng.random_range(HIRAGANA)).expect("hiragana block")
    } else {
        rng.random_range('a'..='z')
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    let base_count = config
        .recipes
        .checked_sub(config.duplicates)
        .ok_or_else(|| Error::Config("duplicates exceed recipes".into()))?;
    let early = base_count
        .checked_sub(config.late_originals)
        .filter(|&e| e >= config.duplicates && e > 0)
        .ok_or_else(|| Error::Config("too few training-period recipes for the requested duplicates".into()))?;
    if config.ingredient_pool < 6 {
        return Err(Error::Config("ingredient pool must hold at least 6 names".into()));
    }
    if !(0.0..=1.0).contains(&config.typo_rate) {
        return Err(Error::Config("typo rate must lie in [0, 1]".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool = ingredient_pool(&mut rng, config.ingredient_pool);
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date");
    let cutoff = NaiveDate::from_ymd_opt(2020, 6, 30).expect("valid date");
    let train_days = (cutoff - start).num_days() as u64;

    let mut recipes = Vec::with_capacity(config.recipes);
    for n in 0..base_count {
        let (ingredients, instructions) = base_recipe(&mut rng, &pool);
        let published = if n < early {
            start + Days::new(rng.random_range(0..=train_days))
        } else {
            cutoff + Days::new(rng.random_range(1..=180))
        };
        recipes.push(Recipe {
            id: format!("r{n:04}"),
            title: format!("recipe {n}"),
            ingredients,
            instructions,
            published,
            instructions_tokens: None,
        });
    }

    let mut originals: Vec<usize> = (0..early).collect();
    originals.shuffle(&mut rng);
    let mut planted = Vec::with_capacity(config.duplicates);
    for (k, &o) in originals.iter().take(config.duplicates).enumerate() {
        let original = &recipes[o];
        let mut ingredients = original.ingredients.clone();
        let text = kana_variant(&mut rng, &mut ingredients, &original.instructions);
        let (instructions, typos) = inject_typos(&mut rng, &text, config.typo_rate);
        let id = format!("r{:04}", base_count + k);
        planted.push(PlantedPair {
            original_id: original.id.clone(),
            duplicate_id: id.clone(),
            typos,
        });
        recipes.push(Recipe {
            id,
            title: format!("{} (copy)", original.title),
            ingredients,
            instructions,
            published: cutoff + Days::new(rng.random_range(1..=180)),
            instructions_tokens: None,
        });
    }
    Ok(SynthCorpus {
        corpus: Corpus::new(recipes)?,
        planted,
        cutoff,
        ingredient_pool: pool,
    })
}
