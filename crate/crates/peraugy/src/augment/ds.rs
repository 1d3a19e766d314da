//! Double shuffling: splice segments from other users' trajectories into a
//! target trajectory, preserving a random prefix and keeping gap-length runs
//! of original behavior between substitutions.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng::derive_rng;
use crate::uig::{Action, Event, EventOrigin, NodeKind, Provenance, Trajectory};

use super::AugmentError;

fn default_seg_len_range() -> (usize, usize) {
    (2, 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsConfig {
    /// Trajectories per sampling round: one target plus m-1 sources.
    pub m: usize,
    /// Original target events kept intact between substitutions.
    pub gap: usize,
    /// Exact output length in splice mode.
    pub target_len: usize,
    /// Inclusive bounds for each source segment's event count.
    #[serde(default = "default_seg_len_range")]
    pub seg_len_range: (usize, usize),
    #[serde(default)]
    pub seed: u64,
    /// Strict mode: substitute within the target's own length instead of
    /// growing to `target_len`.
    #[serde(default)]
    pub in_place: bool,
}

impl Default for DsConfig {
    fn default() -> Self {
        DsConfig { m: 3, gap: 2, target_len: 150, seg_len_range: (2, 2), seed: 0, in_place: false }
    }
}

impl DsConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let mut problems = Vec::new();
        if self.m < 2 {
            problems.push(format!("m = {} (need >= 2)", self.m));
        }
        if self.target_len < 1 {
            problems.push("target_len = 0 (need >= 1)".to_string());
        }
        if self.seg_len_range.0 < 1 {
            problems.push("seg_len_range.min = 0 (need >= 1)".to_string());
        }
        if self.seg_len_range.0 > self.seg_len_range.1 {
            problems.push(format!(
                "seg_len_range min {} > max {}",
                self.seg_len_range.0, self.seg_len_range.1
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AugmentError::BadConfig(problems.join("; ")))
        }
    }
}

/// Random draws and bookkeeping for one shuffled trajectory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsReport {
    /// Effective preserved-prefix length (after any snap past a split pair).
    pub offset: usize,
    /// Unit index each source segment started at, in round order.
    pub seg_starts: Vec<usize>,
    /// Drawn length of each source segment, in round order.
    pub seg_lens: Vec<usize>,
    /// GenSumm events written as plain Clicks because their SummGen partner
    /// did not fit in the last output slot.
    pub demotions: usize,
    /// Source-segment units read past the source's end (circular reads).
    pub wraps: usize,
}

/// Draws `m` trajectories without replacement (deterministic in `seed`);
/// the remainder keeps its original relative order.
pub fn sample_without_replacement(
    pool: &[Trajectory],
    m: usize,
    seed: u64,
) -> Result<(Vec<Trajectory>, Vec<Trajectory>), AugmentError> {
    if pool.len() < m {
        return Err(AugmentError::PoolTooSmall { have: pool.len(), need: m });
    }
    let mut rng = derive_rng(seed, &["sample"]);
    let n = pool.len();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let chosen: BTreeSet<usize> = idx[..m].iter().copied().collect();
    let sample = idx[..m].iter().map(|&i| pool[i].clone()).collect();
    let remainder = pool
        .iter()
        .enumerate()
        .filter(|(i, _)| !chosen.contains(i))
        .map(|(_, t)| t.clone())
        .collect();
    Ok((sample, remainder))
}

/// Slices an event list into atomic units: single events, except that a
/// GenSumm and its SummGen always travel together.
fn units(events: &[Event]) -> Vec<&[Event]> {
    let mut out = Vec::with_capacity(events.len());
    let mut i = 0;
    while i < events.len() {
        if events[i].action == Action::GenSumm
            && events.get(i + 1).map_or(false, |e| e.action == Action::SummGen)
        {
            out.push(&events[i..i + 2]);
            i += 2;
        } else {
            out.push(&events[i..i + 1]);
            i += 1;
        }
    }
    out
}

fn unit_at(events: &[Event], i: usize) -> &[Event] {
    if events[i].action == Action::GenSumm
        && events.get(i + 1).map_or(false, |e| e.action == Action::SummGen)
    {
        &events[i..i + 2]
    } else {
        &events[i..i + 1]
    }
}

fn push_origin(out: &mut Vec<Event>, e: &Event, from: &Trajectory, exchanged: bool, wrapped: bool) {
    let mut ev = e.clone();
    ev.origin = Some(EventOrigin {
        source_user: from.user.clone(),
        source_step: e.t,
        exchanged,
        wrapped,
        demoted: false,
    });
    out.push(ev);
}

/// Appends a whole unit, demoting a pair to a single Click on its d-node when
/// only one output slot remains. Returns the number of events written.
fn push_unit(
    out: &mut Vec<Event>,
    unit: &[Event],
    from: &Trajectory,
    exchanged: bool,
    wrapped: bool,
    cap: usize,
    report: &mut DsReport,
) -> usize {
    if unit.len() == 2 && cap - out.len() == 1 {
        let g = &unit[0];
        out.push(Event {
            t: 0,
            kind: NodeKind::Doc,
            id: g.id.clone(),
            action: Action::Click,
            origin: Some(EventOrigin {
                source_user: from.user.clone(),
                source_step: g.t,
                exchanged,
                wrapped,
                demoted: true,
            }),
        });
        report.demotions += 1;
        return 1;
    }
    for e in unit {
        push_origin(out, e, from, exchanged, wrapped);
    }
    unit.len()
}

/// Builds one shuffled trajectory. RNG draw order is fixed and documented:
/// offset first, then per segment round a length and a start.
fn shuffle_one(sample: &[Trajectory], j: usize, cfg: &DsConfig) -> (Trajectory, DsReport) {
    let target = &sample[j];
    let mut rng: ChaCha8Rng = derive_rng(cfg.seed, &["ds", &target.user]);
    let l_j = target.events.len();
    let target_len = if cfg.in_place { l_j } else { cfg.target_len };

    // prefix: at least one preserved event, at least one open slot
    let upper = l_j.min(target_len) - 1;
    let mut offset = rng.gen_range(1..=upper);
    if target.events[offset - 1].action == Action::GenSumm
        && target.events.get(offset).map_or(false, |e| e.action == Action::SummGen)
    {
        offset += 1; // never split a pair; in the l=2 corner this fills the output
    }

    let mut out: Vec<Event> = Vec::with_capacity(target_len);
    let mut report = DsReport { offset, ..DsReport::default() };
    for e in &target.events[..offset.min(target_len)] {
        push_origin(&mut out, e, target, false, false);
    }

    let m = sample.len();
    let sources: Vec<&Trajectory> = (1..m).map(|d| &sample[(j + d) % m]).collect();
    let source_units: Vec<Vec<&[Event]>> = sources.iter().map(|s| units(&s.events)).collect();

    // the target cursor advances over substituted spans, so gaps resume
    // later in the original trajectory (position-preserving substitution)
    let mut tcur = offset;
    let mut round = 0usize;
    while out.len() < target_len {
        let k = round % sources.len();
        let seg_len = rng.gen_range(cfg.seg_len_range.0..=cfg.seg_len_range.1);
        let un = &source_units[k];
        let start = rng.gen_range(0..un.len());
        report.seg_starts.push(start);
        report.seg_lens.push(seg_len);
        let mut taken = 0usize;
        let mut ui = start;
        while taken < seg_len && out.len() < target_len {
            let wrapped = ui >= un.len();
            if wrapped {
                report.wraps += 1;
            }
            taken += push_unit(&mut out, un[ui % un.len()], sources[k], true, wrapped, target_len, &mut report);
            ui += 1;
        }
        tcur += taken;
        round += 1;
        if out.len() >= target_len {
            break;
        }

        // a segment cursor jump can leave the target positioned on the second
        // half of a pair; resume after it
        if tcur < l_j && target.events[tcur].action == Action::SummGen {
            tcur += 1;
        }
        let mut g = 0usize;
        while g < cfg.gap && tcur < l_j && out.len() < target_len {
            let unit = unit_at(&target.events, tcur);
            let took = push_unit(&mut out, unit, target, false, false, target_len, &mut report);
            tcur += unit.len();
            g += took;
        }
        // once the target is exhausted, gaps are empty and construction
        // continues with source segments only
    }

    for (i, e) in out.iter_mut().enumerate() {
        e.t = i as u32;
    }
    let traj = Trajectory {
        user: target.user.clone(),
        provenance: Provenance::Ds,
        config: target.config.clone(),
        events: out,
    };
    (traj, report)
}

/// Shuffles every member of the sample against the other m-1 as sources
/// (round-robin starting at its successor). Output[0..offset) is event-for-
/// event the target's prefix and the output length is exactly `target_len`.
pub fn double_shuffle(sample: &[Trajectory], cfg: &DsConfig) -> Result<Vec<Trajectory>, AugmentError> {
    Ok(double_shuffle_with_report(sample, cfg)?.into_iter().map(|(t, _)| t).collect())
}

pub fn double_shuffle_with_report(
    sample: &[Trajectory],
    cfg: &DsConfig,
) -> Result<Vec<(Trajectory, DsReport)>, AugmentError> {
    cfg.validate()?;
    if sample.len() != cfg.m {
        return Err(AugmentError::BadConfig(format!(
            "sample has {} trajectories but m = {}",
            sample.len(),
            cfg.m
        )));
    }
    for t in sample {
        if t.events.len() < 2 {
            return Err(AugmentError::ShortTrajectory { user: t.user.clone(), len: t.events.len() });
        }
    }
    if !cfg.in_place && cfg.target_len < 2 {
        return Err(AugmentError::TargetLenTooSmall(cfg.target_len));
    }
    Ok((0..sample.len()).map(|j| shuffle_one(sample, j, cfg)).collect())
}
