//! Lenient parsing of model replies.

use serde_json::Value;

use super::LlmError;
use crate::ingest::split_text;
use crate::model::{normalize_term, AspectPair, Polarity};

/// Byte ranges of balanced `[...]` / `{...}` regions, in order of their
/// opening bracket. Brackets inside JSON strings are ignored.
fn bracket_regions(raw: &str) -> impl Iterator<Item = &str> {
    raw.char_indices()
        .filter(|(_, c)| *c == '[' || *c == '{')
        .filter_map(move |(start, _)| {
            let mut stack = Vec::new();
            let mut in_string = false;
            let mut escaped = false;
            for (offset, c) in raw[start..].char_indices() {
                if in_string {
                    match c {
                        _ if escaped => escaped = false,
                        '\\' => escaped = true,
                        '"' => in_string = false,
                        _ => {}
                    }
                    continue;
                }
                match c {
                    '"' => in_string = true,
                    '[' | '{' => stack.push(c),
                    ']' | '}' => {
                        let open = stack.pop()?;
                        if (open == '[') != (c == ']') {
                            return None;
                        }
                        if stack.is_empty() {
                            return Some(&raw[start..start + offset + c.len_utf8()]);
                        }
                    }
                    _ => {}
                }
            }
            None
        })
}

const ASPECT_KEYS: &[&str] = &["aspect", "aspect_term", "term", "target"];
const SENTIMENT_KEYS: &[&str] = &["sentiment", "polarity"];

enum Shape {
    Pairs(Vec<AspectPair>),
    Unrecognized,
}

fn pair_from(value: &Value) -> Result<Option<AspectPair>, LlmError> {
    let (aspect, sentiment) = match value {
        Value::Object(obj) => {
            let aspect = ASPECT_KEYS.iter().find_map(|k| obj.get(*k));
            let sentiment = SENTIMENT_KEYS.iter().find_map(|k| obj.get(*k));
            match (aspect, sentiment) {
                (Some(a), Some(s)) => (a, s),
                _ => return Err(LlmError::MalformedJson),
            }
        }
        Value::Array(items) if items.len() == 2 => (&items[0], &items[1]),
        _ => return Err(LlmError::MalformedJson),
    };
    let aspect = match aspect {
        Value::Null => return Ok(None),
        Value::String(s) => normalize_term(s),
        _ => return Err(LlmError::MalformedJson),
    };
    if aspect.is_empty() {
        return Ok(None);
    }
    let Value::String(sentiment) = sentiment else {
        return Err(LlmError::MalformedJson);
    };
    let polarity: Polarity = sentiment
        .parse()
        .map_err(|_| LlmError::UnknownPolarity(sentiment.clone()))?;
    Ok(Some(AspectPair {
        aspect_term: aspect,
        polarity,
    }))
}

fn interpret(value: &Value) -> Result<Shape, LlmError> {
    let collect = |items: &[Value]| -> Result<Shape, LlmError> {
        let mut pairs = Vec::new();
        for item in items {
            match pair_from(item) {
                Ok(Some(p)) => pairs.push(p),
                Ok(None) => {}
                Err(LlmError::MalformedJson) => return Ok(Shape::Unrecognized),
                Err(e) => return Err(e),
            }
        }
        Ok(Shape::Pairs(pairs))
    };
    match value {
        Value::Array(items) => collect(items),
        Value::Object(obj) => {
            if ASPECT_KEYS.iter().any(|k| obj.contains_key(*k)) {
                return collect(std::slice::from_ref(value));
            }
            match obj.values().find_map(Value::as_array) {
                Some(items) => collect(items),
                None => Ok(Shape::Unrecognized),
            }
        }
        _ => Ok(Shape::Unrecognized),
    }
}

/// Extracts `(aspect, polarity)` pairs from the first JSON region of a reply
/// that has the expected shape. Aspect terms come back normalized.
pub fn parse_absa_response(raw: &str) -> Result<Vec<AspectPair>, LlmError> {
    for region in bracket_regions(raw) {
        let Ok(value) = serde_json::from_str::<Value>(region) else {
            continue;
        };
        if let Shape::Pairs(pairs) = interpret(&value)? {
            return Ok(pairs);
        }
    }
    Err(LlmError::MalformedJson)
}

const LABELS: &[&str] = &["key point", "keypoint", "kp", "output", "answer", "summary"];

fn strip_label(line: &str) -> &str {
    for label in LABELS {
        let matches = line
            .get(..label.len())
            .is_some_and(|head| head.eq_ignore_ascii_case(label));
        if matches {
            let trimmed = line[label.len()..].trim_start();
            if let Some(after) = trimmed.strip_prefix(':') {
                return after.trim();
            }
        }
    }
    line
}

fn strip_markup(line: &str) -> &str {
    let mut s = line.trim();
    loop {
        let before = s;
        s = s.trim_start_matches(['#', '>', '*', '-', '\u{2022}']).trim_start();
        if let Some(rest) = s.split_once(". ").filter(|(n, _)| {
            !n.is_empty() && n.len() <= 2 && n.chars().all(|c| c.is_ascii_digit())
        }) {
            s = rest.1.trim_start();
        }
        s = s.trim_end_matches(['*', '_']).trim_start_matches('_').trim();
        if s == before {
            return s;
        }
    }
}

fn strip_quotes(s: &str) -> &str {
    let quotes: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];
    let mut s = s.trim();
    while let (Some(first), Some(last)) = (s.chars().next(), s.chars().last()) {
        if s.chars().count() >= 2 && quotes.contains(&first) && quotes.contains(&last) {
            s = s[first.len_utf8()..s.len() - last.len_utf8()].trim();
        } else {
            break;
        }
    }
    s
}

/// Reduces a key point generation reply to one clean sentence.
pub fn parse_kpg_response(raw: &str) -> Result<String, LlmError> {
    let text = raw.trim();
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.starts_with("```"))
        .map(strip_markup)
        .filter(|l| !l.is_empty())
        .collect();
    // a lead-in such as "Here is the key point:" introduces the next line
    let line = lines
        .iter()
        .enumerate()
        .filter(|(i, l)| !(l.ends_with(':') && i + 1 < lines.len()))
        .map(|(_, l)| strip_quotes(strip_label(l)))
        .find(|l| !l.is_empty())
        .ok_or(LlmError::EmptyGeneration)?;
    let first = split_text(line)
        .into_iter()
        .next()
        .ok_or(LlmError::EmptyGeneration)?;
    let mut sentence = strip_quotes(strip_markup(&first))
        .trim_end_matches([':', ';', ',', '-'])
        .trim_end()
        .to_string();
    if sentence.is_empty() || !sentence.chars().any(char::is_alphanumeric) {
        return Err(LlmError::EmptyGeneration);
    }
    if !sentence.ends_with(['.', '!', '?']) {
        sentence.push('.');
    }
    Ok(sentence)
}
