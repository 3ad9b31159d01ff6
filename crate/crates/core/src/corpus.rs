//! Recipe records, JSON Lines ingestion, and date-based splitting.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// One user-posted recipe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Recipe {
    pub id: String,
    pub title: String,
    /// Ingredient names in posting order, quantities excluded.
    pub ingredients: Vec<String>,
    /// Cooking steps joined with a single newline.
    pub instructions: String,
    #[serde(with = "day")]
    pub published: NaiveDate,
    /// Pre-segmented instruction words, when the corpus supplies them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instructions_tokens: Option<Vec<String>>,
}

mod day {
    use chrono::NaiveDate;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(date: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&date.format(super::DATE_FORMAT))
    }
}

impl Recipe {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("recipe serialization is infallible")
    }
}

/// Parses one JSON Lines record.
pub fn parse_recipe_record(line: &str) -> Result<Recipe> {
    parse_record_at(line, 1)
}

fn parse_record_at(line: &str, lineno: usize) -> Result<Recipe> {
    let value: Value = serde_json::from_str(line).map_err(|e| Error::Json {
        line: lineno,
        reason: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(Error::Json {
            line: lineno,
            reason: "record is not a JSON object".into(),
        });
    };
    let field_err = |field: &'static str, reason: &str| Error::Record {
        line: lineno,
        field,
        reason: reason.to_string(),
    };

    let id = required_str(&obj, "id", lineno)?;
    if id.trim().is_empty() {
        return Err(field_err("id", "empty id"));
    }
    let title = match obj.get("title") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(field_err("title", "expected a string")),
    };

    let ingredients = match obj.get("ingredients") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => {
            let mut names = Vec::with_capacity(items.len());
            for (k, item) in items.iter().enumerate() {
                // Objects carry a quantity alongside the name; only the name is kept.
                let name = match item {
                    Value::String(s) => s.as_str(),
                    Value::Object(o) => match o.get("name") {
                        Some(Value::String(s)) => s.as_str(),
                        _ => {
                            return Err(field_err(
                                "ingredients",
                                &format!("item {k} has no string `name`"),
                            ))
                        }
                    },
                    _ => {
                        return Err(field_err(
                            "ingredients",
                            &format!("item {k} is not a string"),
                        ))
                    }
                };
                if name.trim().is_empty() {
                    return Err(field_err("ingredients", &format!("item {k} is empty")));
                }
                names.push(name.to_string());
            }
            names
        }
        Some(_) => return Err(field_err("ingredients", "expected an array of strings")),
    };

    let instructions = match obj.get("instructions") {
        None | Some(Value::Null) => return Err(field_err("instructions", "missing field")),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(steps)) => {
            let mut parts = Vec::with_capacity(steps.len());
            for step in steps {
                match step {
                    Value::String(s) => parts.push(s.as_str()),
                    _ => return Err(field_err("instructions", "steps must be strings")),
                }
            }
            parts.join("\n")
        }
        Some(_) => return Err(field_err("instructions", "expected a string")),
    };
    if instructions.trim().is_empty() {
        return Err(field_err("instructions", "empty instructions"));
    }

    let published_raw = required_str(&obj, "published", lineno)?;
    let published = parse_day(&published_raw)
        .ok_or_else(|| field_err("published", &format!("unparseable date `{published_raw}`")))?;

    let instructions_tokens = match obj.get("instructions_tokens") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => Some(
            items
                .iter()
                .map(|t| t.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| field_err("instructions_tokens", "expected strings"))?,
        ),
        Some(_) => return Err(field_err("instructions_tokens", "expected an array")),
    };

    Ok(Recipe {
        id,
        title,
        ingredients,
        instructions,
        published,
        instructions_tokens,
    })
}

fn required_str(obj: &Map<String, Value>, field: &'static str, line: usize) -> Result<String> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        None | Some(Value::Null) => Err(Error::Record {
            line,
            field,
            reason: format!("missing field \"{field}\""),
        }),
        Some(_) => Err(Error::Record {
            line,
            field,
            reason: "expected a string".into(),
        }),
    }
}

/// Accepts `YYYY-MM-DD`, RFC 3339 timestamps (converted to the UTC day), and
/// naive timestamps, which are read as UTC.
fn parse_day(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(raw, DATE_FORMAT) {
        return Some(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc).date_naive());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.date());
        }
    }
    None
}

/// An immutable, id-indexed recipe collection.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    recipes: Vec<Recipe>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(recipes: Vec<Recipe>) -> Result<Self> {
        let mut index = HashMap::with_capacity(recipes.len());
        for (pos, r) in recipes.iter().enumerate() {
            if index.insert(r.id.clone(), pos).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Corpus { recipes, index })
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut recipes = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Json {
                line: n + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            recipes.push(parse_record_at(&line, n + 1)?);
        }
        Corpus::new(recipes)
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Corpus::from_reader(std::io::BufReader::new(file))
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.recipes {
            writeln!(out, "{}", r.to_json_line())?;
        }
        Ok(())
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    pub fn get(&self, id: &str) -> Option<&Recipe> {
        self.index.get(id).map(|&i| &self.recipes[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    /// Splits into (published <= cutoff, published > cutoff), preserving order.
    pub fn split_by_date(&self, cutoff: NaiveDate) -> (Corpus, Corpus) {
        let (train, test): (Vec<_>, Vec<_>) = self
            .recipes
            .iter()
            .cloned()
            .partition(|r| r.published <= cutoff);
        (
            Corpus::new(train).expect("subset of a valid corpus"),
            Corpus::new(test).expect("subset of a valid corpus"),
        )
    }
}

/// Annotation label of a candidate pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLabel {
    NearDuplicate,
    NonDuplicateA,
    NonDuplicateB,
    NonDuplicateC,
    #[default]
    Unlabeled,
}

impl PairLabel {
    pub const ANNOTATED: [PairLabel; 4] = [
        PairLabel::NearDuplicate,
        PairLabel::NonDuplicateA,
        PairLabel::NonDuplicateB,
        PairLabel::NonDuplicateC,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::NearDuplicate => "near_duplicate",
            PairLabel::NonDuplicateA => "non_duplicate_a",
            PairLabel::NonDuplicateB => "non_duplicate_b",
            PairLabel::NonDuplicateC => "non_duplicate_c",
            PairLabel::Unlabeled => "unlabeled",
        }
    }

    /// Column heading used in text reports.
    pub fn heading(self) -> &'static str {
        match self {
            PairLabel::NearDuplicate => "Near-dup.",
            PairLabel::NonDuplicateA => "Non-dup. A",
            PairLabel::NonDuplicateB => "Non-dup. B",
            PairLabel::NonDuplicateC => "Non-dup. C",
            PairLabel::Unlabeled => "Unlabeled",
        }
    }

    pub fn is_annotated(self) -> bool {
        self != PairLabel::Unlabeled
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "near_duplicate" => PairLabel::NearDuplicate,
            "non_duplicate_a" => PairLabel::NonDuplicateA,
            "non_duplicate_b" => PairLabel::NonDuplicateB,
            "non_duplicate_c" => PairLabel::NonDuplicateC,
            "unlabeled" => PairLabel::Unlabeled,
            other => return Err(Error::Invalid(format!("unknown label `{other}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn recipe(id: &str, published: &str) -> Recipe {
        Recipe {
            id: id.into(),
            title: String::new(),
            ingredients: vec![],
            instructions: "boil".into(),
            published: day(published),
            instructions_tokens: None,
        }
    }

    #[test]
    fn parses_well_formed_record() {
        let r = parse_recipe_record(
            r#"{"id":"r1","title":"t","ingredients":["carrot"],"instructions":"Cut a carrot","published":"2016-10-01"}"#,
        )
        .unwrap();
        assert_eq!(r.id, "r1");
        assert_eq!(r.ingredients, vec!["carrot"]);
        assert_eq!(r.published, day("2016-10-01"));
    }

    #[test]
    fn rejects_empty_id() {
        let err = parse_recipe_record(
            r#"{"id":"","title":"t","ingredients":[],"instructions":"x","published":"2016-10-01"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Record { field: "id", .. }), "{err}");
    }

    #[test]
    fn rejects_missing_published() {
        let err = parse_recipe_record(r#"{"id":"a","title":"t","ingredients":[],"instructions":"x"}"#)
            .unwrap_err();
        assert!(err.to_string().contains("missing field \"published\""), "{err}");
    }

    #[test]
    fn rejects_blank_instructions() {
        let err = parse_recipe_record(
            r#"{"id":"a","ingredients":[],"instructions":"  \n ","published":"2016-10-01"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Record { field: "instructions", .. }));
    }

    #[test]
    fn amounts_are_discarded_and_steps_joined() {
        let r = parse_recipe_record(
            r#"{"id":"a","ingredients":[{"name":"salt","amount":"1 tsp"}],"amounts":["1 tsp"],"instructions":["Cut","Boil"],"published":"2016-10-01T23:30:00-02:00"}"#,
        )
        .unwrap();
        assert_eq!(r.ingredients, vec!["salt"]);
        assert_eq!(r.instructions, "Cut\nBoil");
        // 23:30 at UTC-2 is the next UTC day.
        assert_eq!(r.published, day("2016-10-02"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Corpus::new(vec![recipe("a", "2016-01-01"), recipe("a", "2016-01-02")]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn split_at_month_boundary() {
        let c = Corpus::new(vec![
            recipe("a", "2016-10-30"),
            recipe("b", "2016-10-31"),
            recipe("c", "2016-11-01"),
        ])
        .unwrap();
        let (train, test) = c.split_by_date(day("2016-10-31"));
        assert_eq!((train.len(), test.len()), (2, 1));
        assert!(test.get("c").is_some());

        let (train, test) = c.split_by_date(day("2000-01-01"));
        assert_eq!((train.len(), test.len()), (0, 3));
        let (train, test) = c.split_by_date(day("2030-01-01"));
        assert_eq!((train.len(), test.len()), (3, 0));
    }

    fn arb_recipe() -> impl Strategy<Value = Recipe> {
        (
            "[a-z0-9]{1,8}",
            ".{0,12}",
            proptest::collection::vec("[^\\s]{1,6}( [^\\s]{1,4})?", 0..5),
            "[^\\s].{0,40}",
            0i64..5000,
        )
            .prop_map(|(id, title, ingredients, instructions, offset)| Recipe {
                id,
                title,
                ingredients,
                instructions,
                published: day("2010-06-30") + chrono::Duration::days(offset),
                instructions_tokens: None,
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_round_trips(r in arb_recipe()) {
            let back = parse_recipe_record(&r.to_json_line()).unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn split_partitions_by_date(
            offsets in proptest::collection::vec(0i64..100, 0..40),
            cut in -5i64..105,
        ) {
            let base = day("2016-01-01");
            let recipes: Vec<_> = offsets.iter().enumerate().map(|(i, &o)| Recipe {
                published: base + chrono::Duration::days(o),
                ..recipe(&format!("r{i}"), "2016-01-01")
            }).collect();
            let corpus = Corpus::new(recipes).unwrap();
            let cutoff = base + chrono::Duration::days(cut);
            let (train, test) = corpus.split_by_date(cutoff);
            prop_assert_eq!(train.len() + test.len(), corpus.len());
            prop_assert!(train.recipes().iter().all(|r| r.published <= cutoff));
            prop_assert!(test.recipes().iter().all(|r| r.published > cutoff));
        }
    }
}
