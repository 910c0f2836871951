//! Accuracy and semantic-error metrics on a leaf-labeled validation set.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::data::{require_leaf_labels, LabeledExample};
use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::probmodel::{rank_leaves, unconditional_probs};
use crate::training::{score, HeadModel, Scores};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub top1: f64,
    /// Top-k accuracy per k; always contains k = 1.
    pub topk: BTreeMap<usize, f64>,
    /// Mean LCA depth between truth and prediction over the mispredicted
    /// examples; `None` when nothing was mispredicted.
    pub mean_mispred_lca_depth: Option<f64>,
    pub n_examples: usize,
    pub n_mispredicted: usize,
}

/// Leaves of `h` ranked by the model, best first.
pub fn ranked_leaves(h: &Hierarchy, model: &HeadModel, features: &[f64]) -> Result<Vec<NodeId>> {
    match score(model, features)? {
        Scores::Conditional(cond) => {
            if cond.values().len() != h.len() {
                return Err(Error::LengthMismatch {
                    expected: h.len(),
                    actual: cond.values().len(),
                });
            }
            Ok(rank_leaves(h, &unconditional_probs(h, &cond)))
        }
        Scores::Leaves(p) => {
            if p.len() != h.leaves().len() {
                return Err(Error::LengthMismatch {
                    expected: h.leaves().len(),
                    actual: p.len(),
                });
            }
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
            Ok(order.into_iter().map(|i| h.leaves()[i]).collect())
        }
    }
}

/// Builds a report from per-example truth and ranked predictions.
pub fn report_from_rankings(
    h: &Hierarchy,
    truths: &[NodeId],
    rankings: &[Vec<NodeId>],
    ks: &[usize],
) -> Result<EvalReport> {
    if truths.is_empty() {
        return Err(Error::EmptyValidationSet);
    }
    let n_leaves = h.leaves().len();
    let mut ks: Vec<usize> = ks.iter().copied().chain([1]).collect();
    ks.sort_unstable();
    ks.dedup();
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n_leaves) {
        return Err(Error::KTooLarge {
            k,
            leaves: n_leaves,
        });
    }

    let mut hits: BTreeMap<usize, usize> = ks.iter().map(|&k| (k, 0)).collect();
    let mut lca_sum = 0usize;
    let mut mispredicted = 0usize;
    for (&truth, ranking) in truths.iter().zip(rankings) {
        let rank = ranking.iter().position(|&l| l == truth);
        for (&k, count) in hits.iter_mut() {
            if rank.is_some_and(|r| r < k) {
                *count += 1;
            }
        }
        if ranking[0] != truth {
            mispredicted += 1;
            lca_sum += h.lca_depth(truth, ranking[0])?;
        }
    }
    let n = truths.len() as f64;
    let topk: BTreeMap<usize, f64> = hits.into_iter().map(|(k, c)| (k, c as f64 / n)).collect();
    Ok(EvalReport {
        top1: topk[&1],
        topk,
        mean_mispred_lca_depth: (mispredicted > 0).then(|| lca_sum as f64 / mispredicted as f64),
        n_examples: truths.len(),
        n_mispredicted: mispredicted,
    })
}

pub fn evaluate(
    h: &Hierarchy,
    model: &HeadModel,
    valset: &[LabeledExample],
    ks: &[usize],
) -> Result<EvalReport> {
    if valset.is_empty() {
        return Err(Error::EmptyValidationSet);
    }
    require_leaf_labels(h, valset)?;
    let truths = valset
        .iter()
        .map(|e| h.id(&e.label))
        .collect::<Result<Vec<_>>>()?;
    let rankings = valset
        .iter()
        .map(|e| ranked_leaves(h, model, &e.features))
        .collect::<Result<Vec<_>>>()?;
    report_from_rankings(h, &truths, &rankings, ks)
}

pub(crate) fn fmt4(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.4}")
    }
}

/// Writes `metric,value` rows: `top{k}` in ascending k, then the LCA metric
/// and the counts.
pub fn write_report<W: Write>(report: &EvalReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value"])?;
    for (k, v) in &report.topk {
        w.write_record([format!("top{k}"), fmt4(*v)])?;
    }
    w.write_record([
        "mean_mispred_lca_depth".to_string(),
        fmt4(report.mean_mispred_lca_depth.unwrap_or(f64::NAN)),
    ])?;
    w.write_record(["n_examples".to_string(), report.n_examples.to_string()])?;
    w.write_record([
        "n_mispredicted".to_string(),
        report.n_mispredicted.to_string(),
    ])?;
    w.flush().map_err(|e| Error::Csv(e.into()))
}

pub fn emit_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_report(report, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> Hierarchy {
        Hierarchy::parse("A\tR\nB\tR\na1\tA\na2\tA\nb1\tB").unwrap()
    }

    fn csv_of(report: &EvalReport) -> String {
        let mut buf = Vec::new();
        write_report(report, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn oracle_and_sibling_predictions() {
        let h = t1();
        let id = |n: &str| h.id(n).unwrap();
        let truths = vec![id("a1"); 4];
        let perfect = vec![vec![id("a1"), id("a2"), id("b1")]; 4];
        let r = report_from_rankings(&h, &truths, &perfect, &[]).unwrap();
        assert_eq!(r.top1, 1.0);
        assert_eq!(r.n_mispredicted, 0);
        assert_eq!(r.mean_mispred_lca_depth, None);

        let wrong = vec![vec![id("a2"), id("b1"), id("a1")]; 4];
        let r = report_from_rankings(&h, &truths, &wrong, &[2, 3]).unwrap();
        assert_eq!(r.top1, 0.0);
        assert_eq!(r.mean_mispred_lca_depth, Some(1.0));
        assert_eq!(r.topk[&2], 0.0);
        assert_eq!(r.topk[&3], 1.0);
    }

    #[test]
    fn invalid_inputs() {
        let h = t1();
        assert!(matches!(
            report_from_rankings(&h, &[], &[], &[1]),
            Err(Error::EmptyValidationSet)
        ));
        let a1 = h.id("a1").unwrap();
        assert!(matches!(
            report_from_rankings(&h, &[a1], &[vec![a1]], &[5]),
            Err(Error::KTooLarge { k: 5, .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let report = EvalReport {
            top1: 0.5,
            topk: BTreeMap::from([(1, 0.5), (5, 0.9)]),
            mean_mispred_lca_depth: None,
            n_examples: 10,
            n_mispredicted: 5,
        };
        let text = csv_of(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            [
                "metric,value",
                "top1,0.5000",
                "top5,0.9000",
                "mean_mispred_lca_depth,nan",
                "n_examples,10",
                "n_mispredicted,5"
            ]
        );
    }
}
