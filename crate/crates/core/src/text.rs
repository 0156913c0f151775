//! Tokenization and query augmentation.
//!
//! Token ids are derived from the token surface with a 64-bit FNV-1a hash so
//! that documents, queries and the lexicon agree on ids without sharing a
//! vocabulary table. Ids 0 and 1 are reserved for `[CLS]` and `[MASK]`.

use crate::embed::{Embedder, Embedding};
use crate::error::{Error, Result};

pub const CLS_ID: u64 = 0;
pub const MASK_ID: u64 = 1;
/// Smallest id a wordpiece can receive.
pub const WORDPIECE_BASE: u64 = 2;

pub const CLS_SURFACE: &str = "[CLS]";
pub const MASK_SURFACE: &str = "[MASK]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    WordPiece,
    Cls,
    Mask,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: u64,
    pub surface: String,
    pub kind: TokenKind,
    pub position: usize,
}

impl Token {
    pub fn wordpiece(surface: impl Into<String>, position: usize) -> Self {
        let surface = surface.into();
        Token {
            id: wordpiece_id(&surface),
            surface,
            kind: TokenKind::WordPiece,
            position,
        }
    }

    pub fn cls() -> Self {
        Token {
            id: CLS_ID,
            surface: CLS_SURFACE.to_string(),
            kind: TokenKind::Cls,
            position: 0,
        }
    }

    pub fn mask(position: usize) -> Self {
        Token {
            id: MASK_ID,
            surface: MASK_SURFACE.to_string(),
            kind: TokenKind::Mask,
            position,
        }
    }
}

/// Stable id for a wordpiece surface form. Always `>= WORDPIECE_BASE`.
pub fn wordpiece_id(surface: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let hash = surface
        .bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME));
    WORDPIECE_BASE + hash % (u64::MAX - WORDPIECE_BASE)
}

/// Lowercases, splits on Unicode whitespace and strips every character that
/// is not alphanumeric. Pieces that end up empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|piece| {
            piece
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|piece| !piece.is_empty())
        .collect()
}

/// Wordpiece tokens for a document, positions starting at 0.
pub fn document_tokens(text: &str) -> Vec<Token> {
    tokenize(text)
        .into_iter()
        .enumerate()
        .map(|(pos, surface)| Token::wordpiece(surface, pos))
        .collect()
}

/// `[CLS]` followed by the query wordpieces, padded with `[MASK]` to exactly
/// `q_len` tokens. Wordpieces beyond `q_len - 1` are truncated.
pub fn tokenize_and_augment(query_text: &str, q_len: usize) -> Result<Vec<Token>> {
    if q_len < 2 {
        return Err(Error::config(format!("q_len must be >= 2 (got {q_len})")));
    }
    if query_text.trim().is_empty() {
        return Err(Error::input("query is empty"));
    }
    let words = tokenize(query_text);
    if words.is_empty() {
        return Err(Error::input(format!(
            "query {query_text:?} contains no indexable terms"
        )));
    }

    let mut tokens = Vec::with_capacity(q_len);
    tokens.push(Token::cls());
    for word in words.into_iter().take(q_len - 1) {
        let position = tokens.len();
        tokens.push(Token::wordpiece(word, position));
    }
    while tokens.len() < q_len {
        let position = tokens.len();
        tokens.push(Token::mask(position));
    }
    Ok(tokens)
}

/// A query as seen by the engine: augmented tokens and one embedding per
/// token.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRepresentation {
    tokens: Vec<Token>,
    embeddings: Vec<Embedding>,
}

impl QueryRepresentation {
    pub fn new(tokens: Vec<Token>, embeddings: Vec<Embedding>) -> Result<Self> {
        if tokens.len() != embeddings.len() {
            return Err(Error::input(format!(
                "{} tokens but {} embeddings",
                tokens.len(),
                embeddings.len()
            )));
        }
        if tokens.first().map(|t| t.kind) != Some(TokenKind::Cls) {
            return Err(Error::input("query must start with [CLS]"));
        }
        let mut seen_mask = false;
        for (pos, token) in tokens.iter().enumerate() {
            if token.position != pos {
                return Err(Error::input(format!(
                    "token {:?} has position {} at index {pos}",
                    token.surface, token.position
                )));
            }
            match token.kind {
                TokenKind::Cls if pos != 0 => return Err(Error::input("[CLS] may only appear at position 0")),
                TokenKind::Mask => seen_mask = true,
                TokenKind::WordPiece if seen_mask => return Err(Error::input("wordpiece after [MASK] padding")),
                _ => {}
            }
        }
        if let Some(first) = embeddings.first() {
            let dim = first.dim();
            if embeddings.iter().any(|e| e.dim() != dim) {
                return Err(Error::input("query embeddings have mixed dimensions"));
            }
        }
        Ok(QueryRepresentation { tokens, embeddings })
    }

    /// Tokenizes, augments and embeds a query.
    pub fn encode(query_text: &str, q_len: usize, embedder: &Embedder) -> Result<Self> {
        let tokens = tokenize_and_augment(query_text, q_len)?;
        let embeddings = embedder.embed_tokens(&tokens);
        QueryRepresentation::new(tokens, embeddings)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn q_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.first().map_or(0, Embedding::dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn augments_short_query_with_masks() {
        let tokens = tokenize_and_augment("why do zebras have stripes", 8).unwrap();
        assert_eq!(
            surfaces(&tokens),
            ["[CLS]", "why", "do", "zebras", "have", "stripes", "[MASK]", "[MASK]"]
        );
        assert_eq!(tokens[6].kind, TokenKind::Mask);
        assert!(tokens.iter().enumerate().all(|(i, t)| t.position == i));
    }

    #[test]
    fn exact_fit_needs_no_padding() {
        let tokens = tokenize_and_augment("a", 2).unwrap();
        assert_eq!(surfaces(&tokens), ["[CLS]", "a"]);
    }

    #[test]
    fn long_query_is_truncated() {
        let words: Vec<String> = (0..40).map(|i| format!("word{i}")).collect();
        let tokens = tokenize_and_augment(&words.join(" "), 32).unwrap();
        assert_eq!(tokens.len(), 32);
        assert_eq!(tokens[0].kind, TokenKind::Cls);
        // hand count: 31 wordpieces word0..word30, no masks
        assert_eq!(tokens[31].surface, "word30");
        assert!(tokens[1..].iter().all(|t| t.kind == TokenKind::WordPiece));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(tokenize_and_augment("   \t", 8), Err(Error::InvalidInput(_))));
        assert!(matches!(tokenize_and_augment("query", 1), Err(Error::InvalidConfig(_))));
        assert!(matches!(tokenize_and_augment("?! ...", 8), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tokenizer_lowercases_and_strips_punctuation() {
        assert_eq!(
            tokenize("Why, do ZEBRAS\thave\u{2003}stripes?!"),
            ["why", "do", "zebras", "have", "stripes"]
        );
        assert_eq!(tokenize("don't -- stop"), ["dont", "stop"]);
    }

    #[test]
    fn wordpiece_ids_avoid_reserved_range() {
        for word in ["", "a", "the", "zebra", "[cls]"] {
            assert!(wordpiece_id(word) >= WORDPIECE_BASE);
        }
        assert_eq!(wordpiece_id("zebra"), wordpiece_id("zebra"));
        assert_ne!(wordpiece_id("zebra"), wordpiece_id("stripes"));
    }

    #[test]
    fn representation_rejects_mask_before_wordpiece() {
        let embedder = Embedder::new(4, 1).unwrap();
        let tokens = vec![Token::cls(), Token::mask(1), Token::wordpiece("x", 2)];
        let embs = embedder.embed_tokens(&tokens);
        assert!(QueryRepresentation::new(tokens, embs).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn output_length_is_q_len(text in "[a-z]{1,6}( [a-z]{1,6}){0,50}", q_len in 2usize..48) {
                let tokens = tokenize_and_augment(&text, q_len).unwrap();
                prop_assert_eq!(tokens.len(), q_len);
                prop_assert_eq!(tokens.iter().filter(|t| t.kind == TokenKind::Cls).count(), 1);
                prop_assert_eq!(tokens[0].kind, TokenKind::Cls);
                let first_mask = tokens.iter().position(|t| t.kind == TokenKind::Mask).unwrap_or(q_len);
                prop_assert!(tokens[first_mask..].iter().all(|t| t.kind == TokenKind::Mask));
            }
        }
    }
}
