//! Score generated summaries: skip-bigram overlap against a reference, then
//! the per-document responsiveness/accuracy composite over a small batch.

use std::collections::BTreeMap;

use peraugy::summ_eval::{perseval, rouge_su4, EvalInstance, PersevalParams};
use peraugy::uig::DocRecord;

fn instance(doc: &str, gold: &[(&str, &str)], generated: &[(&str, &str)]) -> EvalInstance {
    let to_map = |kv: &[(&str, &str)]| -> BTreeMap<String, String> {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    };
    EvalInstance {
        doc: DocRecord { id: doc.into(), title: doc.into(), body: vec![], topic: None },
        users: gold.iter().map(|(u, _)| u.to_string()).collect(),
        gold: to_map(gold),
        generated: to_map(generated),
    }
}

fn main() -> anyhow::Result<()> {
    // skip-bigrams catch word-order damage that unigram overlap misses
    for (gen, reference) in [
        ("a b c", "a b c"),
        ("a c b", "a b c"),
        ("c b a", "a b c"),
        ("x y z", "a b c"),
    ] {
        let s = rouge_su4(gen, reference, false);
        println!("{gen:8} vs {reference}: P={:.3} R={:.3} F1={:.3}", s.precision, s.recall, s.f1);
    }

    // two docs, two users each; d-far's model output ignores who is asking
    let instances = vec![
        instance(
            "d-mix",
            &[("ana", "storm closes the coastal road"), ("bo", "council blames storm budget cuts")],
            &[("ana", "storm closes the coastal road"), ("bo", "council blames budget cuts for storm damage")],
        ),
        instance(
            "d-far",
            &[("ana", "striker scores twice in derby win"), ("bo", "referee under fire after derby")],
            &[("ana", "derby ends two one"), ("bo", "derby ends two one")],
        ),
    ];

    let report = perseval(&instances, &PersevalParams::standard())?;
    println!("\nsystem DEGRESS  = {:.4}", report.system_degress);
    println!("system PerSEval = {:.4}", report.system_perseval);
    for p in &report.pairs {
        println!(
            "  {} / {}: responsiveness {:.3}, accuracy {:.3} -> {:.3}",
            p.doc, p.user, p.degress, p.accuracy, p.perseval
        );
    }
    // identical outputs for different users cost responsiveness, so the
    // composite must not exceed it
    assert!(report.system_perseval <= report.system_degress + 1e-12);
    Ok(())
}
