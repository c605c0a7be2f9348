use serde::{Deserialize, Serialize};

use crate::chem::{lexes_as_smiles, parse_smiles, validate};

/// Which rule produced an extracted SMILES.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStage {
    /// Inside a fenced block or inline backticks.
    CodeSpan,
    /// On a line labelled `SMILES:`.
    Labeled,
    /// Longest token that is a valid molecule.
    ValidToken,
    /// Longest token made of SMILES characters.
    LexToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub smiles: Option<String>,
    pub stage: Option<ExtractionStage>,
}

fn trim_token(t: &str) -> &str {
    let mut t = t.trim_matches(|c: char| {
        matches!(c, '"' | '\'' | '`' | '*' | ',' | ';' | ':') || c.is_whitespace()
    });
    loop {
        let next = t
            .trim_end_matches('.')
            .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*' | ',' | ';' | ':'));
        if next == t {
            return t;
        }
        t = next;
    }
}

fn is_valid(token: &str) -> bool {
    parse_smiles(token).is_ok_and(|m| validate(&m).is_valid())
}

/// Short all-letter tokens are almost always words ("I", "a", "ON").
fn looks_like_word(token: &str) -> bool {
    token.len() <= 2 && token.chars().all(|c| c.is_ascii_alphabetic())
}

fn code_spans(raw: &str) -> Vec<&str> {
    let mut spans = Vec::new();
    let mut rest = raw;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let Some(end) = after.find("```") else { break };
        let body = &after[..end];
        // drop a language tag on the opening line
        let body = match body.split_once('\n') {
            Some((first, tail)) if !first.trim().is_empty() && !lexes_as_smiles(first.trim()) => {
                tail
            }
            _ => body,
        };
        spans.push(body);
        rest = &after[end + 3..];
    }
    let mut inline = raw;
    while let Some(start) = inline.find('`') {
        if inline[start..].starts_with("```") {
            // skip over a fence and its body, already handled above
            let after = &inline[start + 3..];
            inline = match after.find("```") {
                Some(end) => &after[end + 3..],
                None => "",
            };
            continue;
        }
        let after = &inline[start + 1..];
        let Some(end) = after.find('`') else { break };
        spans.push(&after[..end]);
        inline = &after[end + 1..];
    }
    spans
}

fn first_lexing_token(text: &str) -> Option<&str> {
    text.split_whitespace()
        .map(trim_token)
        .find(|t| !t.is_empty() && lexes_as_smiles(t))
}

/// Pulls one SMILES candidate out of a free-text model reply.
///
/// Stages, first hit wins: code spans, a `SMILES:` labelled line, the
/// longest token that is a valid molecule, the longest token that merely
/// lexes. Ties between equally long tokens go to the earliest.
pub fn extract_smiles(raw: &str) -> Extraction {
    let found = |s: &str, stage| Extraction {
        smiles: Some(s.to_string()),
        stage: Some(stage),
    };

    for span in code_spans(raw) {
        if let Some(t) = first_lexing_token(span) {
            return found(t, ExtractionStage::CodeSpan);
        }
    }
    for line in raw.lines() {
        let lower = line.to_ascii_lowercase();
        if let Some(pos) = lower.find("smiles:") {
            if let Some(t) = first_lexing_token(&line[pos + "smiles:".len()..]) {
                return found(t, ExtractionStage::Labeled);
            }
        }
    }

    let tokens: Vec<&str> = raw
        .split_whitespace()
        .map(trim_token)
        .filter(|t| !t.is_empty())
        .collect();
    let single = tokens.len() == 1;
    let candidates: Vec<&str> = tokens
        .iter()
        .copied()
        .filter(|t| lexes_as_smiles(t) && (single || !looks_like_word(t)))
        .collect();
    let longest = |pred: &dyn Fn(&str) -> bool| {
        candidates.iter().copied().filter(|t| pred(t)).fold(
            None,
            |best: Option<&str>, t| match best {
                Some(b) if b.len() >= t.len() => Some(b),
                _ => Some(t),
            },
        )
    };
    if let Some(t) = longest(&is_valid) {
        return found(t, ExtractionStage::ValidToken);
    }
    if let Some(t) = longest(&|_| true) {
        return found(t, ExtractionStage::LexToken);
    }
    Extraction {
        smiles: None,
        stage: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> (Option<String>, Option<ExtractionStage>) {
        let e = extract_smiles(s);
        (e.smiles, e.stage)
    }

    #[test]
    fn stage_examples() {
        assert_eq!(
            ex("Here you go: `CCO`"),
            (Some("CCO".into()), Some(ExtractionStage::CodeSpan))
        );
        assert_eq!(
            ex("SMILES: c1ccccc1 (benzene)"),
            (Some("c1ccccc1".into()), Some(ExtractionStage::Labeled))
        );
        assert_eq!(ex("I cannot help with that."), (None, None));
        assert_eq!(
            ex("```smiles\nCC(=O)O\n```"),
            (Some("CC(=O)O".into()), Some(ExtractionStage::CodeSpan))
        );
        assert_eq!(
            ex("Try CCO or CCCCO."),
            (Some("CCCCO".into()), Some(ExtractionStage::ValidToken))
        );
        assert_eq!(
            ex("Maybe C1CCC would work"),
            (Some("C1CCC".into()), Some(ExtractionStage::LexToken))
        );
        assert_eq!(
            ex("CO"),
            (Some("CO".into()), Some(ExtractionStage::ValidToken))
        );
        assert_eq!(ex(""), (None, None));
    }

    #[test]
    fn idempotent_on_examples() {
        for s in [
            "Here you go: `CCO`",
            "**CCN**,",
            "The answer is 'c1ccncc1'.",
            "SMILES: C(",
            "x = CC#N;",
        ] {
            let once = extract_smiles(s).smiles.unwrap();
            assert_eq!(
                extract_smiles(&once).smiles.as_deref(),
                Some(once.as_str()),
                "{s}"
            );
        }
    }
}
