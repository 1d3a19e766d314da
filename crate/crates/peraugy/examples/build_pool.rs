//! Assemble a trajectory pool by hand, validate it, and round-trip it
//! through the canonical JSONL layout.

use std::collections::BTreeMap;

use peraugy::ingest::{read_jsonl_files, synth_pool, write_jsonl, SynthConfig};
use peraugy::uig::{validate, Action, DocRecord, Event, SummaryRecord, Trajectory, Uig};

fn main() -> anyhow::Result<()> {
    // two docs, one personalized summary, one user
    let mut docs = BTreeMap::new();
    for (id, topic, title) in [
        ("d-rain", "weather", "Rain returns this weekend"),
        ("d-vote", "politics", "Council vote delayed again"),
    ] {
        docs.insert(
            id.to_string(),
            DocRecord {
                id: id.into(),
                title: title.into(),
                body: vec![format!("{title}."), "More detail follows.".into()],
                topic: Some(topic.into()),
            },
        );
    }
    let mut summaries = BTreeMap::new();
    summaries.insert(
        "s-rain-ana".to_string(),
        SummaryRecord {
            id: "s-rain-ana".into(),
            text: "Weekend rain, as ana would put it.".into(),
            source_doc: "d-rain".into(),
            author_user: "ana".into(),
            source_sentence: None,
        },
    );

    // a generation pair must sit right after its source doc's step
    let events = vec![
        Event::new(0, Action::Click, "d-rain"),
        Event::new(1, Action::GenSumm, "d-rain"),
        Event::new(2, Action::SummGen, "s-rain-ana"),
        Event::new(3, Action::Skip, "d-vote"),
    ];
    let pool = Uig::new(vec![Trajectory::seed("ana", events)], docs, summaries);

    let report = validate(&pool);
    println!("hand-built pool: {} errors, {} infos", report.errors.len(), report.infos.len());
    assert!(report.is_clean());

    // break it on purpose: a dangling doc reference is caught per event
    let mut broken = pool.clone();
    broken.trajectories[0].events.push(Event::new(4, Action::Click, "d-missing"));
    let report = validate(&broken);
    println!("after a dangling click: {} error(s)", report.errors.len());
    for v in &report.errors {
        let step = v.t.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        println!("  user {} step {}: {} ({})", v.user, step, v.rule, v.detail);
    }

    // a seeded generator gives arbitrarily large well-formed pools
    let synth = synth_pool(&SynthConfig { users: 50, len: 24, docs: 80, ..SynthConfig::default() });
    assert!(validate(&synth).is_clean());
    println!(
        "synthetic pool: {} trajectories over {} docs, {} summaries",
        synth.trajectories.len(),
        synth.docs.len(),
        synth.summaries.len()
    );

    // the JSONL layout round-trips bit-for-bit
    let dir = tempfile::tempdir()?;
    let paths = write_jsonl(&synth, dir.path())?;
    let back = read_jsonl_files(&paths)?;
    assert_eq!(synth, back);
    println!("JSONL round-trip: identical");
    Ok(())
}
