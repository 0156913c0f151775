//! Collection statistics per token: collection frequency and document
//! frequency.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::corpus::DocumentEntry;
use crate::error::{Error, Result};
use crate::text::{wordpiece_id, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermStats {
    pub surface: String,
    /// Total occurrences across the collection.
    pub cf: u64,
    /// Number of documents containing the token.
    pub df: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    entries: HashMap<u64, TermStats>,
    num_docs: u64,
    num_tokens: u64,
}

pub fn build_lexicon(corpus: &[DocumentEntry]) -> Result<Lexicon> {
    Lexicon::from_documents(corpus.iter().map(DocumentEntry::tokens))
}

impl Lexicon {
    /// Counts cf/df over tokenized documents. Special tokens are ignored.
    pub fn from_documents<'a, I>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [Token]>,
    {
        let mut lex = Lexicon::default();
        let mut seen = HashSet::new();
        for doc in docs {
            lex.num_docs += 1;
            seen.clear();
            for token in doc.iter().filter(|t| t.kind == TokenKind::WordPiece) {
                lex.num_tokens += 1;
                let stats = lex.entries.entry(token.id).or_insert_with(|| TermStats {
                    surface: token.surface.clone(),
                    cf: 0,
                    df: 0,
                });
                stats.cf += 1;
                if seen.insert(token.id) {
                    stats.df += 1;
                }
            }
        }
        if lex.num_docs == 0 {
            return Err(Error::input("cannot build a lexicon from an empty corpus"));
        }
        Ok(lex)
    }

    pub fn get(&self, token_id: u64) -> Option<&TermStats> {
        self.entries.get(&token_id)
    }

    /// Collection frequency; unseen tokens count as 0.
    pub fn cf(&self, token_id: u64) -> u64 {
        self.get(token_id).map_or(0, |s| s.cf)
    }

    pub fn df(&self, token_id: u64) -> u64 {
        self.get(token_id).map_or(0, |s| s.df)
    }

    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn num_tokens(&self) -> u64 {
        self.num_tokens
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &TermStats)> {
        self.entries.iter().map(|(id, s)| (*id, s))
    }

    /// Writes `token<TAB>cf<TAB>df` lines sorted by token surface.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut rows: Vec<&TermStats> = self.entries.values().collect();
        rows.sort_by(|a, b| a.surface.cmp(&b.surface));
        for s in rows {
            writeln!(out, "{}\t{}\t{}", s.surface, s.cf, s.df)?;
        }
        Ok(())
    }

    /// Reads a TSV export. `num_docs` is not part of the file and must be
    /// supplied by the caller (the index stores it).
    pub fn read_tsv<R: BufRead>(input: R, num_docs: u64) -> Result<Self> {
        let mut lex = Lexicon {
            num_docs,
            ..Lexicon::default()
        };
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = || Error::input(format!("lexicon line {}: expected token<TAB>cf<TAB>df", lineno + 1));
            let mut fields = line.split('\t');
            let (Some(surface), Some(cf), Some(df), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad());
            };
            let cf: u64 = cf.parse().map_err(|_| bad())?;
            let df: u64 = df.parse().map_err(|_| bad())?;
            if df == 0 || df > cf || df > num_docs {
                return Err(Error::input(format!(
                    "lexicon line {}: inconsistent counts cf={cf} df={df} num_docs={num_docs}",
                    lineno + 1
                )));
            }
            let id = wordpiece_id(surface);
            lex.num_tokens += cf;
            let prev = lex.entries.insert(
                id,
                TermStats {
                    surface: surface.to_string(),
                    cf,
                    df,
                },
            );
            if prev.is_some() {
                return Err(Error::input(format!(
                    "lexicon line {}: duplicate token {surface:?}",
                    lineno + 1
                )));
            }
        }
        Ok(lex)
    }
}
