//! Planted-schedule corpus generator. A schedule names topics (token sets with
//! live spans) and the events linking them; the generator turns it into a
//! seeded document stream and derives the transitions a perfect tracker
//! would report.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use topicflow_core::transitions::{ClusterId, TransitionEdge, TransitionKind};
use topicflow_core::{normalize_token, Document};

use crate::corpus::Corpus;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid schedule: {0}")]
pub struct ScheduleError(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScheduleError> {
    Err(ScheduleError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub seed: u64,
    pub timepoints: usize,
    /// First day, `YYYY-MM-DD`.
    pub start_date: String,
    /// Documents per live topic per timepoint.
    pub docs_per_topic: usize,
    /// Tokens shared by every topic.
    #[serde(default)]
    pub bridging: Vec<String>,
    pub topics: Vec<PlantedTopic>,
    #[serde(default)]
    pub events: Vec<PlantedEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTopic {
    pub name: String,
    pub tokens: Vec<String>,
    /// Inclusive `[start, end]` timepoint ranges, ascending, separated by gaps.
    pub spans: Vec<[usize; 2]>,
    /// Annotation attached to every document of the topic; none when empty.
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Split,
    Merge,
    Absorb,
    Dissolve,
}

/// Sources end at some timepoint `t`; targets start at `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub kind: EventKind,
    pub from: Vec<String>,
    pub to: Vec<String>,
}

fn topic(name: &str, prefix: &str, range: std::ops::RangeInclusive<usize>, spans: &[[usize; 2]]) -> PlantedTopic {
    PlantedTopic {
        name: name.to_owned(),
        tokens: range.map(|i| format!("{prefix}{i}")).collect(),
        spans: spans.to_vec(),
        labels: vec![name.to_lowercase()],
    }
}

fn event(kind: EventKind, from: &[&str], to: &[&str]) -> PlantedEvent {
    PlantedEvent {
        kind,
        from: from.iter().map(|s| s.to_string()).collect(),
        to: to.iter().map(|s| s.to_string()).collect(),
    }
}

impl Schedule {
    /// Six topic families over fifteen days covering every transition kind.
    ///
    /// All topics live on the same day have the same size (ten tokens on days
    /// 0-3 and 8-14, five on days 4-7), so no topic dominates the graph's
    /// total weight.
    pub fn planted() -> Self {
        let mut bc = topic("BC", "b", 1..=5, &[[8, 14]]);
        bc.tokens.extend((1..=5).map(|i| format!("c{i}")));
        Schedule {
            seed: 20200819,
            timepoints: 15,
            start_date: "2020-08-19".into(),
            docs_per_topic: 60,
            bridging: vec!["pandemic".into(), "update".into()],
            topics: vec![
                topic("A", "a", 1..=10, &[[0, 3]]),
                topic("A2", "a", 1..=5, &[[4, 7]]),
                topic("A3", "a", 1..=10, &[[8, 14]]),
                topic("B", "b", 1..=10, &[[0, 3]]),
                topic("B1", "b", 1..=5, &[[4, 7]]),
                topic("B2", "b", 6..=10, &[[4, 5], [7, 7]]),
                topic("C", "c", 1..=5, &[[4, 7]]),
                bc,
                topic("D", "d", 1..=10, &[[0, 3]]),
                topic("E", "e", 1..=5, &[[5, 7]]),
                topic("F", "f", 1..=10, &[[8, 14]]),
            ],
            events: vec![
                event(EventKind::Dissolve, &["A"], &["A2"]),
                event(EventKind::Absorb, &["A2"], &["A3"]),
                event(EventKind::Split, &["B"], &["B1", "B2"]),
                event(EventKind::Merge, &["B1", "C"], &["BC"]),
            ],
        }
    }

    fn topic_index(&self, name: &str) -> Result<usize, ScheduleError> {
        match self.topics.iter().position(|t| t.name == name) {
            Some(i) => Ok(i),
            None => invalid(format!("unknown topic {name:?}")),
        }
    }

    fn first_day(&self) -> Result<NaiveDate, ScheduleError> {
        NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .or_else(|_| invalid(format!("bad start_date {:?}", self.start_date)))
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        self.first_day()?;
        if !self.topics.is_empty() && self.docs_per_topic == 0 {
            return invalid("docs_per_topic must be positive");
        }
        let mut names = BTreeSet::new();
        let bridging: BTreeSet<&str> = self.bridging.iter().map(String::as_str).collect();
        for t in &self.topics {
            if !names.insert(t.name.as_str()) {
                return invalid(format!("duplicate topic {:?}", t.name));
            }
            if t.tokens.is_empty() || t.spans.is_empty() {
                return invalid(format!("topic {:?} needs tokens and at least one span", t.name));
            }
            if t.labels.len() > 3 {
                return invalid(format!("topic {:?} has more than 3 labels", t.name));
            }
            if let Some(tok) = t.tokens.iter().find(|tok| bridging.contains(tok.as_str())) {
                return invalid(format!("token {tok:?} is both topical and bridging"));
            }
            let mut prev_end: Option<usize> = None;
            for &[s, e] in &t.spans {
                if s > e || e >= self.timepoints {
                    return invalid(format!("topic {:?} has span [{s}, {e}] outside 0..{}", t.name, self.timepoints));
                }
                if prev_end.is_some_and(|p| s < p + 2) {
                    return invalid(format!("topic {:?} spans must be ascending with a gap between them", t.name));
                }
                prev_end = Some(e);
            }
        }
        for t in 0..self.timepoints {
            let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
            for topic in self.topics.iter().filter(|p| p.live_at(t)) {
                for tok in &topic.tokens {
                    if let Some(other) = seen.insert(tok, &topic.name) {
                        if other != topic.name {
                            return invalid(format!("topics {other:?} and {:?} share {tok:?} at timepoint {t}", topic.name));
                        }
                    }
                }
            }
        }

        let mut sources = BTreeSet::new();
        let mut targets = BTreeSet::new();
        for ev in &self.events {
            let arity_ok = match ev.kind {
                EventKind::Split => ev.from.len() == 1 && ev.to.len() >= 2,
                EventKind::Merge => ev.from.len() >= 2 && ev.to.len() == 1,
                EventKind::Absorb | EventKind::Dissolve => ev.from.len() == 1 && ev.to.len() == 1,
            };
            if !arity_ok {
                return invalid(format!("{:?} event has the wrong number of topics", ev.kind));
            }
            for name in &ev.from {
                let t = &self.topics[self.topic_index(name)?];
                if !sources.insert(name.as_str()) {
                    return invalid(format!("topic {name:?} is the source of two events"));
                }
                let end = t.spans.last().unwrap()[1];
                for target in &ev.to {
                    let y = &self.topics[self.topic_index(target)?];
                    if y.spans[0][0] != end + 1 {
                        return invalid(format!("{target:?} must start right after {name:?} ends"));
                    }
                }
            }
            for name in &ev.to {
                if !targets.insert(name.as_str()) {
                    return invalid(format!("topic {name:?} is the target of two events"));
                }
            }
        }
        Ok(())
    }

    /// Generates the corpus, ordered by timestamp then id.
    pub fn generate(&self) -> Result<Corpus, ScheduleError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let day0 = self.first_day()?.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        let bridging: Vec<String> = self.bridging.iter().map(|b| normalize_token(b)).collect();
        let mut documents = Vec::new();
        for t in 0..self.timepoints {
            for topic in self.topics.iter().filter(|p| p.live_at(t)) {
                let tokens: Vec<String> = topic.tokens.iter().map(|tok| normalize_token(tok)).collect();
                let labels: Vec<String> = topic.labels.iter().map(|l| normalize_token(l)).collect();
                for n in 0..self.docs_per_topic {
                    let k = if tokens.len() <= 3 { tokens.len() } else { rng.gen_range(3..=tokens.len().min(8)) };
                    let mut doc_tokens: Vec<String> = tokens.choose_multiple(&mut rng, k).cloned().collect();
                    // Fuller documents mention the shared vocabulary more often.
                    let p = k.saturating_sub(2) as f64 / 7.0;
                    let mut extra = 0;
                    for b in &bridging {
                        if extra < 2 && rng.gen_bool(p.min(1.0)) {
                            doc_tokens.push(b.clone());
                            extra += 1;
                        }
                    }
                    documents.push(Document {
                        id: format!("t{t:02}-{}-{n:03}", topic.name.to_lowercase()),
                        timestamp: day0 + t as i64 * 86_400 + rng.gen_range(0..86_400),
                        tokens: doc_tokens,
                        labels: (!labels.is_empty()).then(|| labels.clone()),
                    });
                }
            }
        }
        documents.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        Ok(Corpus { documents })
    }

    /// The transitions implied by the schedule, over planted topic instances.
    pub fn ground_truth(&self) -> Result<Vec<TruthEdge>, ScheduleError> {
        self.validate()?;
        let at = |name: &str, t: usize| Some(TopicAt { topic: name.to_owned(), t });
        let mut edges = BTreeSet::new();
        let mut push = |kind: TransitionKind, from: Option<TopicAt>, to: Option<TopicAt>| {
            edges.insert(TruthEdge { kind, from, to });
        };
        let source: BTreeSet<&str> = self.events.iter().flat_map(|e| e.from.iter().map(String::as_str)).collect();
        let target: BTreeSet<&str> = self.events.iter().flat_map(|e| e.to.iter().map(String::as_str)).collect();

        for topic in &self.topics {
            let name = topic.name.as_str();
            let last = topic.spans.len() - 1;
            for (k, &[s, e]) in topic.spans.iter().enumerate() {
                if !(k == 0 && target.contains(name)) {
                    push(TransitionKind::Emerged, None, at(name, s));
                }
                if k > 0 {
                    push(TransitionKind::ReEmerged, at(name, topic.spans[k - 1][1]), at(name, s));
                }
                for t in s..e {
                    push(TransitionKind::Unchanged, at(name, t), at(name, t + 1));
                }
                if e + 1 < self.timepoints && !(k == last && source.contains(name)) {
                    push(TransitionKind::Disappeared, at(name, e), None);
                }
            }
        }
        for ev in &self.events {
            for x in &ev.from {
                let end = self.topics[self.topic_index(x)?].spans.last().unwrap()[1];
                for y in &ev.to {
                    let (from, to) = (at(x, end), at(y, end + 1));
                    match ev.kind {
                        EventKind::Split => push(TransitionKind::Split, from, to),
                        EventKind::Merge => {
                            push(TransitionKind::Absorbed, from.clone(), to.clone());
                            push(TransitionKind::Merged, from, to);
                        }
                        EventKind::Absorb => push(TransitionKind::Absorbed, from, to),
                        EventKind::Dissolve => push(TransitionKind::Dissolved, from, to),
                    }
                }
            }
        }
        Ok(edges.into_iter().collect())
    }

    /// Topic live at `t` that owns most of `members`, if one owns a strict majority.
    pub fn attribute(&self, t: usize, members: &BTreeSet<String>) -> Option<&str> {
        self.topics
            .iter()
            .filter(|p| p.live_at(t))
            .map(|p| (p, p.tokens.iter().filter(|tok| members.contains(&normalize_token(tok))).count()))
            .filter(|&(_, n)| 2 * n > members.len())
            .max_by_key(|&(_, n)| n)
            .map(|(p, _)| p.name.as_str())
    }
}

impl PlantedTopic {
    pub fn live_at(&self, t: usize) -> bool {
        self.spans.iter().any(|&[s, e]| (s..=e).contains(&t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TopicAt {
    pub topic: String,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TruthEdge {
    #[serde(with = "crate::formats::kind_name")]
    pub kind: TransitionKind,
    pub from: Option<TopicAt>,
    pub to: Option<TopicAt>,
}

/// What `synth --truth` writes next to the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub seed: u64,
    pub schedule: Schedule,
    pub edges: Vec<TruthEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub recovered: usize,
    pub expected: usize,
}

/// Scores recovered transitions against the schedule. `clusters[t][i]` are the
/// member sets the edges refer to; clusters no topic owns a majority of count
/// as mismatches.
pub fn evaluate(
    schedule: &Schedule,
    clusters: &[Vec<BTreeSet<String>>],
    edges: &[TransitionEdge],
) -> Result<Agreement, ScheduleError> {
    let truth: BTreeSet<TruthEdge> = schedule.ground_truth()?.into_iter().collect();
    let name = |id: ClusterId| {
        schedule
            .attribute(id.timepoint, &clusters[id.timepoint][id.index])
            .map(|topic| TopicAt { topic: topic.to_owned(), t: id.timepoint })
    };
    let mut recovered = BTreeSet::new();
    let mut unattributed = 0;
    for e in edges {
        let from = e.from.map(name);
        let to = e.to.map(name);
        if from == Some(None) || to == Some(None) {
            unattributed += 1;
            continue;
        }
        recovered.insert(TruthEdge { kind: e.kind, from: from.flatten(), to: to.flatten() });
    }
    let matched = recovered.intersection(&truth).count();
    let total = recovered.len() + unattributed;
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok(Agreement {
        precision: ratio(matched, total),
        recall: ratio(matched, truth.len()),
        matched,
        recovered: total,
        expected: truth.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(edges: &[TruthEdge]) -> BTreeSet<TransitionKind> {
        edges.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn planted_schedule_is_valid_and_covers_every_kind() {
        let s = Schedule::planted();
        s.validate().unwrap();
        let truth = s.ground_truth().unwrap();
        assert_eq!(kinds(&truth).len(), TransitionKind::ALL.len());
        let corpus = s.generate().unwrap();
        assert_eq!(corpus, s.generate().unwrap());
        for doc in &corpus.documents {
            let bridging = doc.tokens.iter().filter(|t| s.bridging.contains(t)).count();
            assert!(bridging <= 2);
            assert!((3..=8).contains(&(doc.tokens.len() - bridging)));
        }
    }

    #[test]
    fn split_at_five() {
        let s = Schedule {
            seed: 1,
            timepoints: 8,
            start_date: "2021-01-01".into(),
            docs_per_topic: 5,
            bridging: vec![],
            topics: vec![
                topic("X", "x", 1..=6, &[[0, 4]]),
                topic("X1", "x", 1..=3, &[[5, 7]]),
                topic("X2", "x", 4..=6, &[[5, 7]]),
                topic("Y", "y", 1..=4, &[[0, 7]]),
            ],
            events: vec![event(EventKind::Split, &["X"], &["X1", "X2"])],
        };
        let truth = s.ground_truth().unwrap();
        let splits: Vec<_> = truth.iter().filter(|e| e.kind == TransitionKind::Split).collect();
        assert_eq!(splits.len(), 2);
        assert!(splits.iter().all(|e| e.to.as_ref().unwrap().t == 5));
    }

    #[test]
    fn empty_schedule_gives_empty_corpus() {
        let s = Schedule {
            seed: 0,
            timepoints: 0,
            start_date: "2021-01-01".into(),
            docs_per_topic: 0,
            bridging: vec![],
            topics: vec![],
            events: vec![],
        };
        assert!(s.generate().unwrap().is_empty());
        assert!(s.ground_truth().unwrap().is_empty());
    }

    #[test]
    fn rejects_inconsistent_schedules() {
        let mut s = Schedule::planted();
        s.topics[4].tokens.push("a1".into());
        assert!(s.validate().unwrap_err().0.contains("share"));

        let mut s = Schedule::planted();
        s.topics[0].spans = vec![[0, 4], [5, 9]];
        assert!(s.validate().is_err());

        let mut s = Schedule::planted();
        s.events.push(event(EventKind::Absorb, &["B"], &["A"]));
        assert!(s.validate().is_err());

        let mut s = Schedule::planted();
        s.events[2].to = vec!["B1".into()];
        assert!(s.validate().is_err());

        let mut s = Schedule::planted();
        s.events[1].to = vec!["nope".into()];
        assert!(s.validate().is_err());
    }

    #[test]
    fn attribution_needs_a_majority() {
        let s = Schedule::planted();
        let set = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(s.attribute(0, &set(&["a1", "a2", "pandemic"])), Some("A"));
        assert_eq!(s.attribute(0, &set(&["a1", "b1", "pandemic"])), None);
    }
}
