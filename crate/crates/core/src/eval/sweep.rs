//! Effectiveness and candidate counts as a function of the number of
//! processed query embeddings.

use std::io::Write;

use rayon::prelude::*;

use super::metrics::{average_precision, candidate_counts, ndcg_at, rr_at};
use super::qrels::Qrels;
use super::stats::paired_t_test_bonferroni;
use crate::error::{Error, Result};
use crate::retrieval::{Engine, Strategy};

pub const CSV_HEADER: &str = "strategy,p,ndcg10,map,mrr10,mean_docs,mean_rel_docs,sig_ndcg10,sig_map,sig_mrr10";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub q_len: usize,
    pub k_prime: usize,
    pub n_probe: usize,
    /// Final ranking depth.
    pub k: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct QueryMetrics {
    ndcg10: f64,
    map: f64,
    mrr10: f64,
    docs: f64,
    rel_docs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub p: usize,
    pub ndcg10: f64,
    pub map: f64,
    pub mrr10: f64,
    pub mean_docs: f64,
    pub mean_rel_docs: f64,
    pub sig_ndcg10: bool,
    pub sig_map: bool,
    pub sig_mrr10: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Unpruned configuration (`p = q_len`) every row is tested against.
    pub baseline: SweepRow,
    pub rows: Vec<SweepRow>,
    pub num_queries: usize,
}

impl SweepTable {
    pub fn row(&self, strategy: Strategy, p: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.strategy == strategy && r.p == p)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
                r.strategy,
                r.p,
                r.ndcg10,
                r.map,
                r.mrr10,
                r.mean_docs,
                r.mean_rel_docs,
                r.sig_ndcg10,
                r.sig_map,
                r.sig_mrr10
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Runs every `(strategy, p)` combination over all queries. Queries are
/// processed in ascending id order and means are reduced in that order.
/// Each row's per-metric significance is a paired t-test against the
/// baseline, Bonferroni-corrected over all `rows × 3` comparisons.
pub fn sweep(
    queries: &[(String, String)],
    qrels: &Qrels,
    engine: &Engine,
    strategies: &[Strategy],
    p_values: &[usize],
    settings: &SweepSettings,
) -> Result<SweepTable> {
    if queries.is_empty() {
        return Err(Error::input("sweep needs at least one query"));
    }
    if strategies.is_empty() || p_values.is_empty() {
        return Err(Error::config("sweep needs at least one strategy and one p value"));
    }
    if settings.k == 0 {
        return Err(Error::config("k must be >= 1"));
    }
    let mut p_values = p_values.to_vec();
    p_values.sort_unstable();
    p_values.dedup();
    if let Some(bad) = p_values.iter().find(|&&p| p == 0 || p > settings.q_len) {
        return Err(Error::config(format!(
            "p must satisfy p >= 1 and p <= q_len = {} (got {bad})",
            settings.q_len
        )));
    }
    let mut strategy_list: Vec<Strategy> = Vec::new();
    for s in strategies {
        if !strategy_list.contains(s) {
            strategy_list.push(*s);
        }
    }
    let combos: Vec<(Strategy, usize)> = strategy_list
        .iter()
        .flat_map(|&s| p_values.iter().map(move |&p| (s, p)))
        .collect();

    let mut queries = queries.to_vec();
    queries.sort_by(|a, b| a.0.cmp(&b.0));

    let store = engine.store();
    // per query: (baseline, one entry per combo)
    let per_query: Vec<(QueryMetrics, Vec<QueryMetrics>)> = queries
        .par_iter()
        .map(|(qid, text)| {
            let judgments = qrels.judgments(qid);
            let mut prepared = engine.prepare(text, settings.q_len, settings.k_prime, settings.n_probe)?;
            prepared.score_all(store)?;
            let orders: Vec<Vec<usize>> = strategy_list
                .iter()
                .map(|&strategy| prepared.order(engine.lexicon(), strategy))
                .collect();
            let mut measure = |order: &[usize], p: usize| -> Result<QueryMetrics> {
                let candidates = prepared.candidates(order, p)?;
                let ranking = prepared.rank(&candidates, store, settings.k)?;
                let (docs, rel_docs) = candidate_counts(&candidates, store, judgments);
                Ok(QueryMetrics {
                    ndcg10: ndcg_at(&ranking, judgments, 10),
                    map: average_precision(&ranking, judgments),
                    mrr10: rr_at(&ranking, judgments, 10),
                    docs: docs as f64,
                    rel_docs: rel_docs as f64,
                })
            };
            let identity: Vec<usize> = (0..settings.q_len).collect();
            let baseline = measure(&identity, settings.q_len)?;
            let mut rows = Vec::with_capacity(combos.len());
            for order in &orders {
                for &p in &p_values {
                    rows.push(measure(order, p)?);
                }
            }
            Ok((baseline, rows))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per_query.len();
    let num_comparisons = combos.len() * 3;
    let baseline_of = |f: fn(&QueryMetrics) -> f64| -> Vec<f64> { per_query.iter().map(|(b, _)| f(b)).collect() };
    let base_ndcg = baseline_of(|m| m.ndcg10);
    let base_map = baseline_of(|m| m.map);
    let base_mrr = baseline_of(|m| m.mrr10);

    let significant = |row: &[f64], base: &[f64]| -> Result<bool> {
        if n < 2 {
            return Ok(false);
        }
        Ok(paired_t_test_bonferroni(row, base, num_comparisons, settings.alpha)?.significant)
    };

    let summarize = |strategy: Strategy, p: usize, metrics: Vec<QueryMetrics>, sig: bool| -> Result<SweepRow> {
        let col = |f: fn(&QueryMetrics) -> f64| -> Vec<f64> { metrics.iter().map(f).collect() };
        let (ndcg, map, mrr) = (col(|m| m.ndcg10), col(|m| m.map), col(|m| m.mrr10));
        Ok(SweepRow {
            strategy,
            p,
            ndcg10: mean(ndcg.iter().copied(), n),
            map: mean(map.iter().copied(), n),
            mrr10: mean(mrr.iter().copied(), n),
            mean_docs: mean(metrics.iter().map(|m| m.docs), n),
            mean_rel_docs: mean(metrics.iter().map(|m| m.rel_docs), n),
            sig_ndcg10: sig && significant(&ndcg, &base_ndcg)?,
            sig_map: sig && significant(&map, &base_map)?,
            sig_mrr10: sig && significant(&mrr, &base_mrr)?,
        })
    };

    let baseline = summarize(
        Strategy::First,
        settings.q_len,
        per_query.iter().map(|(b, _)| *b).collect(),
        false,
    )?;
    let rows = combos
        .iter()
        .enumerate()
        .map(|(i, &(strategy, p))| summarize(strategy, p, per_query.iter().map(|(_, r)| r[i]).collect(), true))
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepTable {
        baseline,
        rows,
        num_queries: n,
    })
}
