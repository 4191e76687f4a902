//! Rule-based sentence segmentation.
//!
//! A sentence ends at a run of `.`, `?` or `!` (plus any closing quotes or
//! brackets) that is followed by whitespace and an uppercase letter, or by
//! the end of the text. A period closing a known abbreviation or a single
//! letter initial is not a boundary.

const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "st.", "jr.", "sr.", "prof.", "vs.", "etc.", "e.g.", "i.e.",
    "u.s.", "u.k.", "a.m.", "p.m.", "approx.", "mt.", "ave.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// The whitespace-delimited word ending at byte offset `end` (exclusive),
/// stripped of leading brackets and quotes and lowercased.
fn word_before(text: &str, end: usize) -> String {
    let start = text[..end]
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    text[start..end]
        .trim_start_matches(is_opener)
        .to_lowercase()
}

fn is_abbreviation(word_with_dot: &str) -> bool {
    if ABBREVIATIONS.contains(&word_with_dot) {
        return true;
    }
    // single-letter initials such as "J."
    let stem = word_with_dot.trim_end_matches('.');
    stem.chars().count() == 1 && stem.chars().all(char::is_alphabetic)
}

/// Splits `text` into trimmed, non-empty sentences in document order.
pub fn split_text(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let run_start = pos;
        let mut j = i;
        let mut only_periods = true;
        while j < chars.len() && is_terminal(chars[j].1) {
            only_periods &= chars[j].1 == '.';
            j += 1;
        }
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map(|(p, _)| *p).unwrap_or(text.len());

        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = if k == chars.len() {
            true
        } else if k == j {
            false
        } else {
            let mut next = k;
            while next < chars.len() && is_opener(chars[next].1) {
                next += 1;
            }
            let starts_upper = chars.get(next).is_some_and(|(_, c)| c.is_uppercase());
            let abbreviation = only_periods
                && j - i == 1
                && is_abbreviation(&word_before(text, run_start + 1));
            starts_upper && !abbreviation
        };

        if boundary {
            let sentence = text[start..end].trim();
            if !sentence.is_empty() {
                sentences.push(sentence.to_string());
            }
            start = end;
        }
        i = j.max(i + 1);
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}
