//! Seeded synthetic trajectory pools. Not a parser: this fabricates a
//! structurally valid pool of arbitrary size so pipelines, examples, and
//! end-to-end tests can run without any real dataset on disk.

use std::collections::BTreeMap;

use rand::Rng;

use crate::rng::derive_rng;
use crate::uig::{Action, DocRecord, Event, SummaryRecord, Trajectory, Uig};

/// Shape of a generated pool.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub users: usize,
    /// Events per trajectory.
    pub len: usize,
    /// Size of the shared document pool.
    pub docs: usize,
    /// Distinct topic labels cycled across documents.
    pub topics: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 100,
            len: 30,
            docs: 200,
            topics: 8,
            seed: 0,
        }
    }
}

/// Builds a valid pool: shared multi-sentence documents with topics, and
/// per-user trajectories mixing clicks, skips, and summary pairs placed at
/// fixed offsets so diversity intervals always exist once `len >= 5`.
pub fn synth_pool(cfg: &SynthConfig) -> Uig {
    let doc_count = cfg.docs.max(1);
    let topics = cfg.topics.max(1);
    let mut docs = BTreeMap::new();
    for i in 0..doc_count {
        let id = format!("d{i:05}");
        docs.insert(
            id.clone(),
            DocRecord {
                id: id.clone(),
                title: format!("Story {i} briefing"),
                body: vec![
                    format!("Story {i} opens on a quiet development."),
                    format!("Analysts weigh what story {i} changes."),
                    format!("A closing note places story {i} in context."),
                ],
                topic: Some(format!("t{}", i % topics)),
            },
        );
    }

    let mut summaries = BTreeMap::new();
    let mut trajectories = Vec::with_capacity(cfg.users);
    for u in 0..cfg.users {
        let user = format!("u{u:05}");
        let mut rng = derive_rng(cfg.seed, &["synth", &user]);
        let mut events = Vec::with_capacity(cfg.len);
        let mut t = 0u32;
        while (t as usize) < cfg.len {
            let doc_id = format!("d{:05}", rng.gen_range(0..doc_count));
            // a summary pair every five steps, whenever the tail still fits
            if t % 5 == 3 && (t as usize) + 1 < cfg.len {
                events.push(Event::new(t, Action::GenSumm, &doc_id));
                let sid = format!("s-{user}-{}", t + 1);
                summaries.insert(
                    sid.clone(),
                    SummaryRecord {
                        id: sid.clone(),
                        text: format!("Story {} as {user} read it.", &doc_id[1..]),
                        source_doc: doc_id.clone(),
                        author_user: user.clone(),
                        source_sentence: None,
                    },
                );
                events.push(Event::new(t + 1, Action::SummGen, &sid));
                t += 2;
            } else {
                let action = if rng.gen_bool(0.7) { Action::Click } else { Action::Skip };
                events.push(Event::new(t, action, &doc_id));
                t += 1;
            }
        }
        trajectories.push(Trajectory::seed(&user, events));
    }

    Uig::new(trajectories, docs, summaries)
}
