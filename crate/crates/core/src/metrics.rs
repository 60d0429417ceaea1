//! Detection recall and gallery precision from rater labels.
//!
//! Label files are CSV with the header
//! `scope,event_id,domain_related,illustrated,relevant`. `scope` is `event`
//! (one row per detected event; `relevant` is the verdict on the event's
//! gallery pairs and stays empty for unillustrated events) or `gallery` (one
//! row per rated gallery).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transcription of the Winter Olympics evaluation: 94 events, 253 rated galleries.
pub const BUNDLED_LABELS: &str = include_str!("../data/evaluation_labels.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScope {
    Event,
    Gallery,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalLabel {
    pub scope: LabelScope,
    pub event_id: String,
    pub domain_related: bool,
    pub illustrated: bool,
    pub relevant: Option<bool>,
}

impl EvalLabel {
    fn validate(&self) -> Result<()> {
        if self.relevant.is_some() && !self.illustrated {
            return Err(Error::InvalidArgument(format!(
                "{}: relevance verdict on an unillustrated event",
                self.event_id
            )));
        }
        if self.scope == LabelScope::Gallery && !self.illustrated {
            return Err(Error::InvalidArgument(format!(
                "{}: gallery row marked unillustrated",
                self.event_id
            )));
        }
        Ok(())
    }
}

pub fn parse_labels(text: &str) -> Result<Vec<EvalLabel>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut labels = Vec::new();
    for (i, row) in reader.deserialize::<EvalLabel>().enumerate() {
        let label = row.map_err(|e| Error::Label {
            line_no: i + 2,
            reason: e.to_string(),
        })?;
        label.validate()?;
        labels.push(label);
    }
    Ok(labels)
}

pub fn load_labels(path: &Path) -> Result<Vec<EvalLabel>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub recall: f64,
    pub absolute_precision: f64,
    pub relative_precision: f64,
    pub related_events: usize,
    pub illustrated_related_events: usize,
    pub relevant_events: usize,
    pub rated_galleries: usize,
    pub relevant_galleries: usize,
}

fn ratio(num: usize, den: usize, name: &'static str) -> Result<f64> {
    if den == 0 {
        return Err(Error::UndefinedMetric(name));
    }
    Ok(num as f64 / den as f64)
}

/// recall: illustrated domain-related events over domain-related events;
/// absolute precision: relevant galleries over rated galleries; relative
/// precision: relevant events over rated illustrated domain-related events.
pub fn compute_metrics(labels: &[EvalLabel]) -> Result<Metrics> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no labels".into()));
    }
    let events: Vec<&EvalLabel> = labels
        .iter()
        .filter(|l| l.scope == LabelScope::Event)
        .collect();
    let related: Vec<&&EvalLabel> = events.iter().filter(|l| l.domain_related).collect();
    let illustrated: Vec<&&&EvalLabel> = related.iter().filter(|l| l.illustrated).collect();
    let rated_events = illustrated.iter().filter(|l| l.relevant.is_some()).count();
    let relevant_events = illustrated
        .iter()
        .filter(|l| l.relevant == Some(true))
        .count();
    let galleries: Vec<&EvalLabel> = labels
        .iter()
        .filter(|l| l.scope == LabelScope::Gallery && l.domain_related && l.relevant.is_some())
        .collect();
    let relevant_galleries = galleries
        .iter()
        .filter(|l| l.relevant == Some(true))
        .count();

    Ok(Metrics {
        recall: ratio(illustrated.len(), related.len(), "recall")?,
        absolute_precision: ratio(relevant_galleries, galleries.len(), "absolutePrecision")?,
        relative_precision: ratio(relevant_events, rated_events, "relativePrecision")?,
        related_events: related.len(),
        illustrated_related_events: illustrated.len(),
        relevant_events,
        rated_galleries: galleries.len(),
        relevant_galleries,
    })
}
