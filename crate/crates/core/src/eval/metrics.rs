use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{Debug, Write as _};

use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::RelationTriple;

/// Numeric type a report is computed in.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

impl<T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug> Scalar for T {}

fn ratio<S: Scalar>(num: usize, den: usize) -> S {
    if den == 0 {
        return S::zero();
    }
    let n = S::from_usize(num).expect("count fits the scalar type");
    let d = S::from_usize(den).expect("count fits the scalar type");
    n / d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
}

impl<S: Scalar> Prf<S> {
    /// Zero whenever a denominator is zero.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision: S = ratio(tp, tp + fp);
        let recall: S = ratio(tp, tp + fn_);
        let sum = precision + recall;
        let f1 = if sum == S::zero() {
            S::zero()
        } else {
            (S::one() + S::one()) * precision * recall / sum
        };
        Prf { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    MicroF1,
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<S> {
    pub dataset_id: String,
    pub metric_name: MetricName,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub correct: usize,
    pub total: usize,
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub accuracy: S,
    pub unparseable_count: usize,
    pub per_type: BTreeMap<String, Prf<S>>,
    /// Set when the report covers no instances at all.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty_test_set: bool,
}

impl<S: Scalar> Report<S> {
    /// The headline number: f1 for extraction tasks, accuracy for choices.
    pub fn score(&self) -> S {
        match self.metric_name {
            MetricName::MicroF1 => self.f1,
            MetricName::Accuracy => self.accuracy,
        }
    }

    pub fn with_dataset(mut self, id: impl Into<String>) -> Self {
        self.dataset_id = id.into();
        self
    }

    /// Aligned plain-text rendering: one summary line, then P/R/F1 per type.
    pub fn to_text(&self) -> String {
        let f = |s: S| format!("{:.4}", s.to_f64().unwrap_or(f64::NAN));
        let mut out = String::new();
        match self.metric_name {
            MetricName::MicroF1 => {
                let _ = writeln!(
                    out,
                    "{}  micro_f1  P={}  R={}  F1={}  tp={} fp={} fn={}  unparseable={}/{}",
                    self.dataset_id,
                    f(self.precision),
                    f(self.recall),
                    f(self.f1),
                    self.tp,
                    self.fp,
                    self.fn_,
                    self.unparseable_count,
                    self.total
                );
                let width = self.per_type.keys().map(|k| k.chars().count()).max().unwrap_or(0);
                for (t, prf) in &self.per_type {
                    let pad = width - t.chars().count();
                    let _ = writeln!(
                        out,
                        "  {t}{}  P={}  R={}  F1={}",
                        " ".repeat(pad),
                        f(prf.precision),
                        f(prf.recall),
                        f(prf.f1)
                    );
                }
            }
            MetricName::Accuracy => {
                let _ = writeln!(
                    out,
                    "{}  accuracy  {}  correct={}/{}  unparseable={}",
                    self.dataset_id,
                    f(self.accuracy),
                    self.correct,
                    self.total,
                    self.unparseable_count
                );
            }
        }
        out
    }
}

/// Items scored by micro-F1 carry a type for the per-type breakdown.
pub trait Typed {
    fn item_type(&self) -> &str;
}

/// An entity compared by surface and type only; spans are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityItem {
    pub surface: String,
    pub etype: String,
}

impl EntityItem {
    pub fn new(surface: impl Into<String>, etype: impl Into<String>) -> Self {
        EntityItem {
            surface: surface.into(),
            etype: etype.into(),
        }
    }
}

impl Typed for EntityItem {
    fn item_type(&self) -> &str {
        &self.etype
    }
}

impl Typed for RelationTriple {
    fn item_type(&self) -> &str {
        &self.rtype
    }
}

impl Typed for String {
    fn item_type(&self) -> &str {
        self
    }
}

/// Per instance: tp += |g ∩ p|, fp += |p − g|, fn += |g − p|; micro
/// averages over the corpus, and the same restricted to each item type.
pub fn score_micro_f1<I, S>(gold: &[BTreeSet<I>], pred: &[BTreeSet<I>]) -> Result<Report<S>>
where
    I: Ord + Typed,
    S: Scalar,
{
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let mut by_type: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        for item in g {
            let e = by_type.entry(item.item_type()).or_default();
            if p.contains(item) {
                tp += 1;
                e.0 += 1;
            } else {
                fn_ += 1;
                e.2 += 1;
            }
        }
        for item in p.difference(g) {
            fp += 1;
            by_type.entry(item.item_type()).or_default().1 += 1;
        }
    }
    let prf = Prf::<S>::from_counts(tp, fp, fn_);
    Ok(Report {
        dataset_id: String::new(),
        metric_name: MetricName::MicroF1,
        tp,
        fp,
        fn_,
        correct: tp,
        total: gold.len(),
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        accuracy: S::zero(),
        unparseable_count: 0,
        per_type: by_type
            .into_iter()
            .map(|(t, (a, b, c))| (t.to_string(), Prf::from_counts(a, b, c)))
            .collect(),
        empty_test_set: gold.is_empty(),
    })
}

/// Exact key matches over total. A `None` choice is unparseable and counts
/// as incorrect.
pub fn score_accuracy<S: Scalar>(gold: &[String], choices: &[Option<String>]) -> Result<Report<S>> {
    if gold.len() != choices.len() {
        return Err(Error::LengthMismatch {
            gold: gold.len(),
            pred: choices.len(),
        });
    }
    let correct = gold
        .iter()
        .zip(choices)
        .filter(|(g, c)| c.as_deref() == Some(g.as_str()))
        .count();
    let unparseable_count = choices.iter().filter(|c| c.is_none()).count();
    Ok(Report {
        dataset_id: String::new(),
        metric_name: MetricName::Accuracy,
        tp: 0,
        fp: 0,
        fn_: 0,
        correct,
        total: gold.len(),
        precision: S::zero(),
        recall: S::zero(),
        f1: S::zero(),
        accuracy: ratio(correct, gold.len()),
        unparseable_count,
        per_type: BTreeMap::new(),
        empty_test_set: gold.is_empty(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn set(items: &[(&str, &str)]) -> BTreeSet<EntityItem> {
        items.iter().map(|(s, t)| EntityItem::new(*s, *t)).collect()
    }

    #[test]
    fn hand_computed_counts() {
        let gold = vec![set(&[("a", "X"), ("b", "X"), ("c", "Y"), ("d", "Y")])];
        let pred = vec![set(&[("a", "X"), ("b", "X"), ("z", "Y")])];
        let r: Report<Ratio<i64>> = score_micro_f1(&gold, &pred).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (2, 1, 2));
        assert_eq!(r.precision, Ratio::new(2, 3));
        assert_eq!(r.recall, Ratio::new(1, 2));
        assert_eq!(r.f1, Ratio::new(4, 7));
        assert_eq!(r.per_type["X"].f1, Ratio::from_integer(1));
        assert_eq!(r.per_type["Y"].precision, Ratio::from_integer(0));
    }

    #[test]
    fn empty_predictions_score_zero() {
        let gold = vec![set(&[("a", "X")])];
        let r: Report<f64> = score_micro_f1(&gold, &[BTreeSet::new()]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert!(score_micro_f1::<EntityItem, f64>(&gold, &[]).is_err());
    }

    #[test]
    fn accuracy_cases() {
        let gold: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
        let choices = vec![Some("A".into()), None, Some("A".into()), Some("A".into())];
        let r: Report<f64> = score_accuracy(&gold, &choices).unwrap();
        assert_eq!(r.accuracy, 0.25);
        assert_eq!(r.unparseable_count, 1);
        let r: Report<f32> = score_accuracy(&[], &[]).unwrap();
        assert_eq!((r.accuracy, r.total, r.empty_test_set), (0.0, 0, true));
    }

    #[test]
    fn report_serializes_fn_field() {
        let r: Report<f64> = score_micro_f1::<EntityItem, f64>(&[], &[]).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.get("fn").is_some());
        assert_eq!(v["metric_name"], "micro_f1");
    }
}
