//! Tokenization helpers shared by the detectors.

use std::borrow::Cow;

/// Characters stripped from the end of a source token before trigger comparison.
pub const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', ')', '"', '\''];

/// A token with its byte range in the owning string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Whitespace tokenization with byte offsets.
pub fn whitespace_tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &text[s..i],
                    start: s,
                    end: i,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &text[s..],
            start: s,
            end: text.len(),
        });
    }
    out
}

pub fn is_currency_symbol(c: char) -> bool {
    matches!(
        c,
        '$' | '¢'
            | '£'
            | '¤'
            | '¥'
            | '֏'
            | '؋'
            | '৲'
            | '৳'
            | '฿'
            | '៛'
            | '\u{20A0}'..='\u{20C0}'
            | '﷼'
            | '＄'
            | '￠'
            | '￡'
            | '￥'
            | '￦'
    )
}

/// Whitespace tokens, further split wherever a currency symbol touches an ASCII digit
/// (`£14` becomes `£`, `14`).
pub fn trigger_tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for tok in whitespace_tokens(text) {
        if !tok.text.contains(is_currency_symbol) {
            out.push(tok);
            continue;
        }
        let mut piece_start = tok.start;
        let mut prev: Option<char> = None;
        for (off, c) in tok.text.char_indices() {
            let at = tok.start + off;
            if let Some(p) = prev {
                let boundary = (is_currency_symbol(p) && c.is_ascii_digit())
                    || (p.is_ascii_digit() && is_currency_symbol(c));
                if boundary {
                    out.push(Token {
                        text: &text[piece_start..at],
                        start: piece_start,
                        end: at,
                    });
                    piece_start = at;
                }
            }
            prev = Some(c);
        }
        out.push(Token {
            text: &text[piece_start..tok.end],
            start: piece_start,
            end: tok.end,
        });
    }
    out
}

pub fn strip_trailing_punct(token: &str) -> &str {
    token.trim_end_matches(TRAILING_PUNCT)
}

pub fn lowercase(s: &str) -> Cow<'_, str> {
    if s.chars().any(char::is_uppercase) {
        Cow::Owned(s.to_lowercase())
    } else {
        Cow::Borrowed(s)
    }
}

/// Comparison key for a source token or a table trigger.
pub fn match_key(token: &str) -> Cow<'_, str> {
    lowercase(strip_trailing_punct(token))
}

/// True when every character is Unicode punctuation (general category P*).
pub fn is_punctuation_token(token: &str) -> bool {
    use std::sync::LazyLock;
    static PUNCT: LazyLock<regex::Regex> =
        LazyLock::new(|| regex::Regex::new(r"^\p{P}+$").expect("static regex"));
    PUNCT.is_match(token)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts<'a>(toks: &[Token<'a>]) -> Vec<&'a str> {
        toks.iter().map(|t| t.text).collect()
    }

    #[test]
    fn whitespace_split_keeps_offsets() {
        let s = "  a  bc\td ";
        let toks = whitespace_tokens(s);
        assert_eq!(texts(&toks), ["a", "bc", "d"]);
        assert_eq!(&s[toks[1].start..toks[1].end], "bc");
    }

    #[test]
    fn currency_fused_with_digits_is_split() {
        assert_eq!(
            texts(&trigger_tokens("Tiles, £14 from 15€ or US$3.")),
            ["Tiles,", "£", "14", "from", "15", "€", "or", "US$", "3."]
        );
    }

    #[test]
    fn punctuation_tokens() {
        assert!(is_punctuation_token("--"));
        assert!(is_punctuation_token("«»"));
        assert!(!is_punctuation_token("day."));
        assert!(!is_punctuation_token("$"));
        assert!(!is_punctuation_token(""));
    }

    #[test]
    fn match_key_strips_and_lowercases() {
        assert_eq!(match_key("Feet.\")"), "feet");
        assert_eq!(match_key("sq.ft."), "sq.ft");
        assert_eq!(match_key("(feet"), "(feet");
    }
}
