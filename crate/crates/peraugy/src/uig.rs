//! Core domain model: users, documents, summaries, interaction events,
//! trajectories, and the UIG pool.
//!
//! A trajectory is one user's chronological interaction sequence; a UIG is a
//! pool of trajectories plus the document and summary stores the events
//! reference. Time-steps are dense integers `0..l-1` and are renumbered after
//! any structural edit. The graph is acyclic by construction: edges only point
//! forward in time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Node family an event points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    User,
    Doc,
    Summary,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::User => write!(f, "user"),
            NodeKind::Doc => write!(f, "doc"),
            NodeKind::Summary => write!(f, "summary"),
        }
    }
}

/// Interaction edge type.
///
/// `GenSumm` (a summarize request on a d-node) is always immediately followed
/// at the next time-step by `SummGen` on the s-node it produced; `SummGen`'s
/// summary must name the d-node at the preceding step as its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Action {
    Click,
    Skip,
    GenSumm,
    SummGen,
}

impl Action {
    /// Node kind this action is valid on.
    pub fn expected_kind(self) -> NodeKind {
        match self {
            Action::Click | Action::Skip | Action::GenSumm => NodeKind::Doc,
            Action::SummGen => NodeKind::Summary,
        }
    }
}

/// Where an event came from after augmentation.
///
/// Seed events carry no origin. Double-shuffling stamps every output event
/// with the trajectory it was copied from; `exchanged` marks events pulled
/// from a source trajectory (not the target), `wrapped` marks source reads
/// that ran past the source's end and restarted, and `demoted` marks a
/// GenSumm that was written out as a plain Click because its SummGen partner
/// did not fit in the remaining output capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventOrigin {
    pub source_user: String,
    pub source_step: u32,
    #[serde(default, skip_serializing_if = "is_false")]
    pub exchanged: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub wrapped: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub demoted: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One timed interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: u32,
    pub kind: NodeKind,
    pub id: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<EventOrigin>,
}

impl Event {
    pub fn new(t: u32, action: Action, id: impl Into<String>) -> Self {
        Event {
            t,
            kind: action.expected_kind(),
            id: id.into(),
            action,
            origin: None,
        }
    }
}

/// Which stage produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Seed,
    Ds,
    Dssmp,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance::Seed
    }
}

/// One user's chronological interaction sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub user: String,
    #[serde(default)]
    pub provenance: Provenance,
    /// Source-config tag so reports can group by augmentation config.
    #[serde(default)]
    pub config: String,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn seed(user: impl Into<String>, events: Vec<Event>) -> Self {
        Trajectory {
            user: user.into(),
            provenance: Provenance::Seed,
            config: String::new(),
            events,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Document record: title plus the stored sentence segmentation of the body.
///
/// Title-only documents (empty body) are allowed and flagged by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocRecord {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub body: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

/// Points at a stored sentence; used when a summary's text is a verbatim
/// sentence of some document (perturbation output).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc: String,
    pub index: u32,
}

/// User-specific summary of a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    pub text: String,
    pub source_doc: String,
    pub author_user: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_sentence: Option<SentenceRef>,
}

/// Pool of trajectories plus the stores their events reference.
///
/// Immutable after construction in practice: every edit in this crate builds
/// a new value, so a `Uig` can be read from many threads at once.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Uig {
    pub trajectories: Vec<Trajectory>,
    pub docs: BTreeMap<String, DocRecord>,
    pub summaries: BTreeMap<String, SummaryRecord>,
}

impl Uig {
    pub fn new(
        trajectories: Vec<Trajectory>,
        docs: BTreeMap<String, DocRecord>,
        summaries: BTreeMap<String, SummaryRecord>,
    ) -> Self {
        Uig {
            trajectories,
            docs,
            summaries,
        }
    }
}

/// One broken rule, located by trajectory and time-step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub user: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
    pub rule: String,
    pub detail: String,
}

/// Outcome of [`validate`]: `errors` break invariants, `infos` are allowed
/// but noteworthy (re-appearing d-nodes, title-only docs, l < 2 trajectories).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Violation>,
    pub infos: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, user: &str, t: Option<u32>, rule: &str, detail: String) {
        self.errors.push(Violation {
            user: user.to_string(),
            t,
            rule: rule.to_string(),
            detail,
        });
    }

    fn info(&mut self, user: &str, t: Option<u32>, rule: &str, detail: String) {
        self.infos.push(Violation {
            user: user.to_string(),
            t,
            rule: rule.to_string(),
            detail,
        });
    }
}

/// Checks every structural invariant; returns an empty report iff they all
/// hold. Never fails: problems are reported, not thrown.
pub fn validate(uig: &Uig) -> ValidationReport {
    let mut rep = ValidationReport::default();

    for (id, doc) in &uig.docs {
        if id.is_empty() {
            rep.error("", None, "empty id", "doc store contains an empty id".into());
        }
        if doc.id != *id {
            rep.error("", None, "store key mismatch", format!("doc key {id} holds record id {}", doc.id));
        }
        if doc.title.is_empty() {
            rep.error("", None, "empty title", format!("doc {id} has an empty title"));
        }
        if doc.body.is_empty() {
            rep.info("", None, "title-only doc", format!("doc {id} has no body sentences"));
        }
    }
    for (id, s) in &uig.summaries {
        if id.is_empty() {
            rep.error("", None, "empty id", "summary store contains an empty id".into());
        }
        if s.id != *id {
            rep.error("", None, "store key mismatch", format!("summary key {id} holds record id {}", s.id));
        }
        if s.text.is_empty() {
            rep.error("", None, "empty summary text", format!("summary {id} has empty text"));
        }
        if !uig.docs.contains_key(&s.source_doc) {
            rep.error("", None, "dangling node", format!("summary {id} sources unknown doc {}", s.source_doc));
        }
    }

    let mut seen_users = BTreeSet::new();
    for traj in &uig.trajectories {
        let user = traj.user.as_str();
        if user.is_empty() {
            rep.error(user, None, "empty id", "trajectory with empty user id".into());
        }
        if !seen_users.insert(user.to_string()) {
            rep.error(user, None, "duplicate user", format!("user {user} has more than one trajectory"));
        }
        if traj.events.is_empty() {
            rep.error(user, None, "empty trajectory", "trajectory has no events".into());
            continue;
        }
        if traj.events.len() < 2 {
            rep.info(user, None, "short trajectory", "l < 2: unusable for diversity metrics".into());
        }

        let mut seen_docs: BTreeSet<&str> = BTreeSet::new();
        for (i, ev) in traj.events.iter().enumerate() {
            let t = ev.t;
            if t as usize != i {
                rep.error(user, Some(t), "non-dense time-steps", format!("event at position {i} has t={t}"));
            }
            if ev.id.is_empty() {
                rep.error(user, Some(t), "empty id", "event references an empty node id".into());
            }
            if ev.kind != ev.action.expected_kind() {
                rep.error(
                    user,
                    Some(t),
                    "action-kind mismatch",
                    format!("{:?} on a {} node", ev.action, ev.kind),
                );
            }
            match ev.kind {
                NodeKind::Doc => {
                    if !uig.docs.contains_key(&ev.id) {
                        rep.error(user, Some(t), "dangling node", format!("unknown doc {}", ev.id));
                    }
                    if !seen_docs.insert(ev.id.as_str()) {
                        rep.info(user, Some(t), "re-appearing d-node", format!("doc {} re-appears", ev.id));
                    }
                }
                NodeKind::Summary => {
                    if !uig.summaries.contains_key(&ev.id) {
                        rep.error(user, Some(t), "dangling node", format!("unknown summary {}", ev.id));
                    }
                }
                NodeKind::User => {
                    rep.error(user, Some(t), "bad node kind", "events may not reference u-nodes".into());
                }
            }
            match ev.action {
                Action::SummGen => {
                    let prev = i.checked_sub(1).map(|p| &traj.events[p]);
                    match prev {
                        Some(p) if p.action == Action::GenSumm => {
                            if let Some(rec) = uig.summaries.get(&ev.id) {
                                if rec.source_doc != p.id {
                                    rep.error(
                                        user,
                                        Some(t),
                                        "summary source mismatch",
                                        format!(
                                            "summary {} sources doc {} but follows GenSumm on {}",
                                            ev.id, rec.source_doc, p.id
                                        ),
                                    );
                                }
                            }
                        }
                        _ => rep.error(user, Some(t), "orphan SummGen", format!("summary {} has no preceding GenSumm", ev.id)),
                    }
                }
                Action::GenSumm => {
                    let next = traj.events.get(i + 1);
                    if !matches!(next, Some(n) if n.action == Action::SummGen) {
                        rep.error(user, Some(t), "unpaired GenSumm", format!("GenSumm on {} not followed by SummGen", ev.id));
                    }
                }
                _ => {}
            }
        }
    }
    rep
}

/// Error for [`slice`] misuse.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("slice range {from}..{to} out of bounds for trajectory of length {len}")]
pub struct SliceError {
    pub from: usize,
    pub to: usize,
    pub len: usize,
}

/// Returns the events in `[from, to)` as a new trajectory, renumbered to
/// dense time-steps starting at 0. Provenance and origin metadata are
/// inherited unchanged.
pub fn slice(traj: &Trajectory, from: usize, to: usize) -> Result<Trajectory, SliceError> {
    let len = traj.events.len();
    if from > to || to > len {
        return Err(SliceError { from, to, len });
    }
    let mut events: Vec<Event> = traj.events[from..to].to_vec();
    for (i, ev) in events.iter_mut().enumerate() {
        ev.t = i as u32;
    }
    Ok(Trajectory {
        user: traj.user.clone(),
        provenance: traj.provenance,
        config: traj.config.clone(),
        events,
    })
}
