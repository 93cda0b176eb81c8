use serde::{Deserialize, Serialize};

/// Token emitted for every run of digits.
pub const NUM_TOKEN: &str = "NUM";

/// A normalized token and the byte range of the raw text it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: (usize, usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Letter,
    Digit,
    Other,
}

fn classify(c: char) -> CharClass {
    if c.is_alphabetic() {
        CharClass::Letter
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// Normalizes one letter run or digit run.
pub fn normalize(raw: &str) -> String {
    match raw.chars().next().map(classify) {
        Some(CharClass::Digit) => NUM_TOKEN.to_string(),
        _ => raw.to_lowercase(),
    }
}

/// Splits on everything that is not a letter or digit. Letter runs are
/// lowercased; digit runs collapse to [`NUM_TOKEN`]. A letter run and an
/// adjacent digit run are separate tokens (`"b12"` is `b`, `NUM`).
pub fn tokenize_words(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, CharClass)> = None;
    for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        let class = classify(c);
        if let Some((s, run_class)) = start {
            if class != run_class {
                let raw = &text[s..i];
                tokens.push(Token {
                    text: normalize(raw),
                    span: (s, i),
                });
                start = None;
            }
        }
        if start.is_none() && class != CharClass::Other {
            start = Some((i, class));
        }
    }
    tokens
}

/// Token strings only.
pub fn token_strings(text: &str) -> Vec<String> {
    tokenize_words(text).into_iter().map(|t| t.text).collect()
}

/// Lowercased letter and digit runs with digits kept verbatim, for short
/// phrases where numbers carry meaning (`type 2 diabetes`).
pub fn phrase_tokens(text: &str) -> Vec<String> {
    tokenize_words(text)
        .into_iter()
        .map(|t| text[t.span.0..t.span.1].to_lowercase())
        .collect()
}

/// Vocabulary ids with source spans, aligned index by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub ids: Vec<u32>,
    pub spans: Vec<(usize, usize)>,
}

impl TokenizedDocument {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn truncate(&mut self, max_tokens: usize) {
        self.ids.truncate(max_tokens);
        self.spans.truncate(max_tokens);
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn lowercases_and_drops_punctuation() {
        let text = "Acute Kidney Failure.";
        let tokens = tokenize_words(text);
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["acute", "kidney", "failure"]);
        assert_eq!(tokens[0].span, (0, 5));
        assert_eq!(tokens[1].span, (6, 12));
        assert_eq!(tokens[2].span, (13, 20));
    }

    #[test]
    fn digits_collapse() {
        assert_eq!(token_strings("HR 120"), ["hr", "NUM"]);
        assert_eq!(token_strings("Metformin 850mg po"), ["metformin", "NUM", "mg", "po"]);
        assert_eq!(token_strings("b12"), ["b", "NUM"]);
        assert!(tokenize_words("").is_empty());
        assert!(tokenize_words(" ,.; ").is_empty());
    }

    proptest! {
        #[test]
        fn spans_are_faithful_and_ordered(text in "\\PC{0,60}") {
            let tokens = tokenize_words(&text);
            let mut last_end = 0;
            for t in &tokens {
                prop_assert!(t.span.0 >= last_end && t.span.0 < t.span.1);
                prop_assert_eq!(normalize(&text[t.span.0..t.span.1]), t.text.clone());
                last_end = t.span.1;
            }
        }
    }
}
