use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lexicon::Lexicon;
use crate::text::{QueryRepresentation, TokenKind};

/// How query embeddings are prioritised for the first stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Occurrence order: CLS, query tokens, masked tokens.
    First,
    /// Wordpieces by ascending collection frequency, then CLS, then MASKs.
    Icf,
    /// Wordpieces by descending `ln((N + 1) / (df + 1))`, then CLS, then MASKs.
    Idf,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::First, Strategy::Icf, Strategy::Idf];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::First => "first",
            Strategy::Icf => "icf",
            Strategy::Idf => "idf",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "first" => Ok(Strategy::First),
            "icf" => Ok(Strategy::Icf),
            "idf" => Ok(Strategy::Idf),
            other => Err(Error::config(format!(
                "unknown strategy {other:?} (expected first, icf or idf)"
            ))),
        }
    }
}

pub fn idf(lexicon: &Lexicon, token_id: u64) -> f64 {
    ((lexicon.num_docs() as f64 + 1.0) / (lexicon.df(token_id) as f64 + 1.0)).ln()
}

/// Returns a permutation of `0..q_len`: the order in which query embeddings
/// are processed by the first stage. Unseen wordpieces have cf = df = 0 and
/// therefore come first under ICF and IDF. All sorts are stable, so equal
/// keys keep occurrence order.
pub fn order_embeddings(query: &QueryRepresentation, lexicon: &Lexicon, strategy: Strategy) -> Vec<usize> {
    let tokens = query.tokens();
    if strategy == Strategy::First {
        return (0..tokens.len()).collect();
    }

    let positions_of = |kind: TokenKind| {
        tokens
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.kind == kind)
            .map(|(i, _)| i)
    };
    let mut wordpieces: Vec<usize> = positions_of(TokenKind::WordPiece).collect();
    match strategy {
        Strategy::Icf => wordpieces.sort_by_key(|&i| lexicon.cf(tokens[i].id)),
        Strategy::Idf => wordpieces.sort_by(|&a, &b| idf(lexicon, tokens[b].id).total_cmp(&idf(lexicon, tokens[a].id))),
        Strategy::First => unreachable!(),
    }

    let mut order = wordpieces;
    order.extend(positions_of(TokenKind::Cls));
    order.extend(positions_of(TokenKind::Mask));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Embedder;
    use crate::text::document_tokens;

    fn lexicon(docs: &[&str]) -> Lexicon {
        let toks: Vec<_> = docs.iter().map(|d| document_tokens(d)).collect();
        Lexicon::from_documents(toks.iter().map(Vec::as_slice)).unwrap()
    }

    fn query(text: &str, q_len: usize) -> QueryRepresentation {
        QueryRepresentation::encode(text, q_len, &Embedder::new(4, 0).unwrap()).unwrap()
    }

    #[test]
    fn icf_puts_rare_first_then_cls_then_masks() {
        // cf(the) = 1000, cf(zebra) = 3
        let mut docs = vec!["the"; 997];
        docs.extend(["the zebra", "the zebra", "the zebra"]);
        let lex = lexicon(&docs);
        let q = query("the zebra", 5);
        assert_eq!(order_embeddings(&q, &lex, Strategy::Icf), [2, 1, 0, 3, 4]);
    }

    #[test]
    fn first_is_identity() {
        let lex = lexicon(&["a b c"]);
        let q = query("c b a", 8);
        assert_eq!(order_embeddings(&q, &lex, Strategy::First), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn equal_frequencies_keep_occurrence_order() {
        let lex = lexicon(&["a b c d", "c d"]);
        let q = query("d a c b", 6);
        // cf: a=1, b=1, c=2, d=2
        assert_eq!(order_embeddings(&q, &lex, Strategy::Icf), [2, 4, 1, 3, 0, 5]);
    }

    #[test]
    fn unseen_tokens_lead_and_duplicates_keep_slots() {
        let lex = lexicon(&["common common", "common"]);
        let q = query("common novel common", 5);
        assert_eq!(order_embeddings(&q, &lex, Strategy::Icf), [2, 1, 3, 0, 4]);
        assert_eq!(order_embeddings(&q, &lex, Strategy::Idf), [2, 1, 3, 0, 4]);
    }

    #[test]
    fn idf_orders_by_document_frequency() {
        // x: cf 4 df 1, y: cf 2 df 2. ICF prefers y, IDF prefers x.
        let lex = lexicon(&["x x x x y", "y", "z"]);
        let q = query("y x", 3);
        assert_eq!(order_embeddings(&q, &lex, Strategy::Icf), [1, 2, 0]);
        assert_eq!(order_embeddings(&q, &lex, Strategy::Idf), [2, 1, 0]);
    }

    #[test]
    fn parses_names() {
        assert_eq!("ICF".parse::<Strategy>().unwrap(), Strategy::Icf);
        assert!("bm25".parse::<Strategy>().is_err());
    }
}
