//! Synthetic corpora with planted relevance.
//!
//! Background text is drawn from a Zipfian vocabulary. Every query owns a
//! topic token that occurs nowhere except in the query's relevant documents,
//! so the rarest query token is exactly the one that identifies relevance.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::eval::Qrels;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedParams {
    pub num_docs: usize,
    pub num_queries: usize,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub doc_len: (usize, usize),
    /// Wordpieces per query, topic token included.
    pub query_len: (usize, usize),
    /// Zipf rank band (1-based, inclusive) that non-topic query words are
    /// drawn from.
    pub query_rank_band: (usize, usize),
    pub relevant_per_query: usize,
    /// Probability that a relevant document also receives each non-topic
    /// query word.
    pub word_overlap: f64,
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            num_docs: 5_000,
            num_queries: 64,
            vocab_size: 5_000,
            zipf_exponent: 1.0,
            doc_len: (20, 40),
            query_len: (4, 8),
            query_rank_band: (20, 500),
            relevant_per_query: 3,
            word_overlap: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub docs: Vec<(String, String)>,
    pub queries: Vec<(String, String)>,
    pub qrels: Qrels,
}

fn word(rank: usize) -> String {
    format!("w{rank:05}")
}

fn topic(q: usize) -> String {
    format!("topic{q:04}")
}

pub fn planted_corpus(params: &PlantedParams) -> Result<PlantedCorpus> {
    let (lo, hi) = params.query_rank_band;
    if params.num_queries * params.relevant_per_query > params.num_docs {
        return Err(Error::config(
            "not enough documents to plant every query's relevant set",
        ));
    }
    if params.doc_len.0 == 0 || params.doc_len.0 > params.doc_len.1 {
        return Err(Error::config("doc_len must be a non-empty range of positive lengths"));
    }
    if params.query_len.0 == 0 || params.query_len.0 > params.query_len.1 {
        return Err(Error::config("query_len must be a non-empty range of positive lengths"));
    }
    if lo == 0 || lo > hi || hi > params.vocab_size || hi - lo + 1 < params.query_len.1 {
        return Err(Error::config(
            "query_rank_band must fit in the vocabulary and cover a query",
        ));
    }
    let zipf =
        Zipf::new(params.vocab_size as f64, params.zipf_exponent).map_err(|e| Error::config(format!("zipf: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut doc_words: Vec<Vec<String>> = (0..params.num_docs)
        .map(|_| {
            let len = rng.random_range(params.doc_len.0..=params.doc_len.1);
            (0..len).map(|_| word(zipf.sample(&mut rng) as usize)).collect()
        })
        .collect();

    let relevant_pool = sample(
        &mut rng,
        params.num_docs,
        params.num_queries * params.relevant_per_query,
    )
    .into_vec();
    let mut queries = Vec::with_capacity(params.num_queries);
    let mut qrels = Qrels::default();
    for q in 0..params.num_queries {
        let n = rng.random_range(params.query_len.0..=params.query_len.1);
        let mut words: Vec<String> = sample(&mut rng, hi - lo + 1, n - 1)
            .into_iter()
            .map(|r| word(lo + r))
            .collect();
        let topic_word = topic(q);
        let at = rng.random_range(0..=words.len());
        words.insert(at, topic_word.clone());
        let qid = format!("q{q:03}");

        for (j, &doc) in relevant_pool[q * params.relevant_per_query..(q + 1) * params.relevant_per_query]
            .iter()
            .enumerate()
        {
            let text = &mut doc_words[doc];
            for w in &words {
                if *w == topic_word || rng.random_bool(params.word_overlap) {
                    let pos = rng.random_range(0..=text.len());
                    text.insert(pos, w.clone());
                }
            }
            qrels.insert(qid.clone(), format!("d{doc:05}"), if j == 0 { 2 } else { 1 });
        }
        queries.push((qid, words.join(" ")));
    }

    let docs = doc_words
        .into_iter()
        .enumerate()
        .map(|(i, w)| (format!("d{i:05}"), w.join(" ")))
        .collect();
    Ok(PlantedCorpus { docs, queries, qrels })
}

impl PlantedCorpus {
    /// Writes `corpus.tsv`, `queries.tsv` and `qrels.txt` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let tsv = |rows: &[(String, String)]| rows.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect::<String>();
        fs::write(dir.join("corpus.tsv"), tsv(&self.docs))?;
        fs::write(dir.join("queries.tsv"), tsv(&self.queries))?;
        let mut qrels = Vec::new();
        self.qrels.write(&mut qrels)?;
        fs::write(dir.join("qrels.txt"), qrels)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn topic_tokens_only_in_relevant_docs() {
        let params = PlantedParams {
            num_docs: 200,
            num_queries: 10,
            vocab_size: 500,
            ..PlantedParams::default()
        };
        let c = planted_corpus(&params).unwrap();
        assert_eq!(c.docs.len(), 200);
        for (qid, text) in &c.queries {
            let topic = tokenize(text).into_iter().find(|w| w.starts_with("topic")).unwrap();
            let holders: Vec<&str> = c
                .docs
                .iter()
                .filter(|(_, t)| tokenize(t).contains(&topic))
                .map(|(d, _)| d.as_str())
                .collect();
            assert_eq!(holders.len(), 3);
            assert!(holders.iter().all(|d| c.qrels.judgments(qid).is_relevant(d)));
        }
        assert_eq!(planted_corpus(&params).unwrap(), c);
    }
}
