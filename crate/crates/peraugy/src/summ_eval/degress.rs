//! Summary-level responsiveness: how proportionally a model's per-user
//! summaries diverge from each other compared to how the users' own gold
//! summaries diverge.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::uig::DocRecord;

use super::SummEvalError;

/// How the divergence terms are weighted across the document's users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightPolicy {
    /// Softmax over each summary's divergence from the document itself,
    /// computed per side (gold weights from gold summaries, generated
    /// weights from generated ones).
    #[default]
    DocSoftmax,
    /// Flat 1/|U|; mainly for tests and ablations.
    Uniform,
}

/// One document with the gold and model summaries of everyone who covered it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub doc: DocRecord,
    pub users: Vec<String>,
    /// user -> that user's expected (gold) summary
    pub gold: BTreeMap<String, String>,
    /// user -> the model's summary for that user
    pub generated: BTreeMap<String, String>,
}

impl EvalInstance {
    pub fn validate(&self) -> Result<(), SummEvalError> {
        let bad = |detail: String| SummEvalError::BadInstance { doc: self.doc.id.clone(), detail };
        if self.users.is_empty() {
            return Err(bad("no users".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for u in &self.users {
            if !seen.insert(u) {
                return Err(bad(format!("duplicate user {u}")));
            }
        }
        for (name, map) in [("gold", &self.gold), ("generated", &self.generated)] {
            for u in &self.users {
                if !map.contains_key(u) {
                    return Err(bad(format!("user {u} missing from the {name} summaries")));
                }
            }
            if map.len() != self.users.len() {
                return Err(bad(format!("{name} summaries keyed by unknown users")));
            }
        }
        Ok(())
    }

    /// Users in a fixed order so results cannot depend on input ordering.
    pub(crate) fn sorted_users(&self) -> Vec<&str> {
        let mut users: Vec<&str> = self.users.iter().map(String::as_str).collect();
        users.sort_unstable();
        users
    }
}

/// The document text summaries are weighed against.
pub(crate) fn doc_full_text(doc: &DocRecord) -> String {
    let mut text = doc.title.clone();
    for s in &doc.body {
        text.push(' ');
        text.push_str(s);
    }
    text
}

/// Softmax with max-subtraction; uniform when the policy says so.
fn side_weights<F>(
    texts: &[&str],
    doc_text: &str,
    policy: WeightPolicy,
    divergence: &F,
) -> Vec<f64>
where
    F: Fn(&str, &str) -> f64 + ?Sized,
{
    match policy {
        WeightPolicy::Uniform => vec![1.0 / texts.len() as f64; texts.len()],
        WeightPolicy::DocSoftmax => {
            let raw: Vec<f64> = texts.iter().map(|t| divergence(t, doc_text)).collect();
            let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = raw.iter().map(|v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        }
    }
}

/// Responsiveness of the model's summary for user `j` on this document: the
/// mean over every other user k of
/// (min(X, Y) + eps) / (max(X, Y) + eps)
/// where X is the weighted gold-to-gold divergence and Y the weighted
/// generated-to-generated divergence against user k. Near zero when the
/// model hands everyone the same summary despite distinct gold profiles.
pub fn degress_summary<F>(
    inst: &EvalInstance,
    j: &str,
    policy: WeightPolicy,
    epsilon: f64,
    divergence: &F,
) -> Result<f64, SummEvalError>
where
    F: Fn(&str, &str) -> f64 + ?Sized,
{
    inst.validate()?;
    let users = inst.sorted_users();
    if users.len() < 2 {
        return Err(SummEvalError::TooFewUsers { doc: inst.doc.id.clone(), have: users.len() });
    }
    if !users.contains(&j) {
        return Err(SummEvalError::UnknownUser { doc: inst.doc.id.clone(), user: j.to_string() });
    }

    let doc_text = doc_full_text(&inst.doc);
    let gold: Vec<&str> = users.iter().map(|u| inst.gold[*u].as_str()).collect();
    let generated: Vec<&str> = users.iter().map(|u| inst.generated[*u].as_str()).collect();
    let w_gold = side_weights(&gold, &doc_text, policy, divergence);
    let w_gen = side_weights(&generated, &doc_text, policy, divergence);

    let ji = users.iter().position(|u| *u == j).unwrap();
    let mut sum = 0.0;
    for k in 0..users.len() {
        if k == ji {
            continue;
        }
        let x = w_gold[k] * divergence(gold[ji], gold[k]);
        let y = w_gen[k] * divergence(generated[ji], generated[k]);
        sum += (x.min(y) + epsilon) / (x.max(y) + epsilon);
    }
    Ok(sum / (users.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summ_eval::rouge::rouge_su4;
    use approx::assert_relative_eq;

    const EPS: f64 = 1e-8;

    fn doc() -> DocRecord {
        DocRecord {
            id: "d1".into(),
            title: "Budget vote".into(),
            body: vec!["The council passed the city budget.".into()],
            topic: Some("politics".into()),
        }
    }

    fn instance(pairs: &[(&str, &str, &str)]) -> EvalInstance {
        EvalInstance {
            doc: doc(),
            users: pairs.iter().map(|(u, _, _)| u.to_string()).collect(),
            gold: pairs.iter().map(|(u, g, _)| (u.to_string(), g.to_string())).collect(),
            generated: pairs.iter().map(|(u, _, s)| (u.to_string(), s.to_string())).collect(),
        }
    }

    /// Divergence defined by a symmetric lookup table on exact texts;
    /// unknown pairs fall back to 0 for identical, 1 otherwise.
    fn table_divergence<'a>(
        entries: &'a [(&'a str, &'a str, f64)],
    ) -> impl Fn(&str, &str) -> f64 + Sync + 'a {
        move |a: &str, b: &str| {
            if a == b {
                return 0.0;
            }
            for (x, y, v) in entries {
                if (a == *x && b == *y) || (a == *y && b == *x) {
                    return *v;
                }
            }
            1.0
        }
    }

    #[test]
    fn identical_generated_summaries_are_nonresponsive() {
        let inst = instance(&[
            ("u1", "the mayor won the vote", "same words for everyone"),
            ("u2", "tax hikes spark protest", "same words for everyone"),
            ("u3", "budget cuts loom large", "same words for everyone"),
        ]);
        let div = |a: &str, b: &str| 1.0 - rouge_su4(a, b, false).f1;
        for j in ["u1", "u2", "u3"] {
            let v = degress_summary(&inst, j, WeightPolicy::Uniform, EPS, &div).unwrap();
            assert!(v < 1e-6, "user {j} scored {v}");
        }
    }

    #[test]
    fn matching_divergences_with_equal_weights_score_one() {
        let div = table_divergence(&[
            ("g1", "g2", 0.4),
            ("s1", "s2", 0.4),
        ]);
        let inst = instance(&[("u1", "g1", "s1"), ("u2", "g2", "s2")]);
        let v = degress_summary(&inst, "u1", WeightPolicy::Uniform, EPS, &div).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn three_user_table_matches_term_expansion() {
        let entries = [
            ("g1", "g2", 0.2),
            ("g1", "g3", 0.6),
            ("g2", "g3", 0.5),
            ("s1", "s2", 0.3),
            ("s1", "s3", 0.1),
            ("s2", "s3", 0.7),
            // divergences from the document drive the softmax weights
            ("g1", "D", 0.9),
            ("g2", "D", 0.4),
            ("g3", "D", 0.2),
            ("s1", "D", 0.5),
            ("s2", "D", 0.6),
            ("s3", "D", 0.8),
        ];
        let base = table_divergence(&entries);
        let doc_text = doc_full_text(&doc());
        let div = move |a: &str, b: &str| {
            let a = if a == doc_text { "D" } else { a };
            let b = if b == doc_text { "D" } else { b };
            base(a, b)
        };
        let inst = instance(&[("u1", "g1", "s1"), ("u2", "g2", "s2"), ("u3", "g3", "s3")]);

        let softmax = |vals: [f64; 3]| {
            let exps = vals.map(f64::exp);
            let sum: f64 = exps.iter().sum();
            exps.map(|e| e / sum)
        };
        let wg = softmax([0.9, 0.4, 0.2]);
        let ws = softmax([0.5, 0.6, 0.8]);
        // expand the two k terms for j = u1 by hand
        let x2 = wg[1] * 0.2;
        let y2 = ws[1] * 0.3;
        let x3 = wg[2] * 0.6;
        let y3 = ws[2] * 0.1;
        let want = ((x2.min(y2) + EPS) / (x2.max(y2) + EPS)
            + (x3.min(y3) + EPS) / (x3.max(y3) + EPS))
            / 2.0;

        let got = degress_summary(&inst, "u1", WeightPolicy::DocSoftmax, EPS, &div).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn single_user_instance_is_rejected() {
        let inst = instance(&[("u1", "g1", "s1")]);
        let err = degress_summary(&inst, "u1", WeightPolicy::Uniform, EPS, &|_: &str, _: &str| 1.0)
            .unwrap_err();
        assert!(matches!(err, SummEvalError::TooFewUsers { have: 1, .. }));
    }

    #[test]
    fn unknown_user_is_rejected() {
        let inst = instance(&[("u1", "g1", "s1"), ("u2", "g2", "s2")]);
        let err = degress_summary(&inst, "zz", WeightPolicy::Uniform, EPS, &|_: &str, _: &str| 1.0)
            .unwrap_err();
        assert!(matches!(err, SummEvalError::UnknownUser { user, .. } if user == "zz"));
    }

    #[test]
    fn user_order_does_not_change_the_score() {
        let div = |a: &str, b: &str| 1.0 - rouge_su4(a, b, false).f1;
        let fwd = instance(&[
            ("u1", "mayor wins the vote", "council vote passes"),
            ("u2", "tax protest grows", "protest against taxes"),
            ("u3", "budget cuts loom", "cuts coming to budget"),
        ]);
        let mut rev = fwd.clone();
        rev.users.reverse();
        for j in ["u1", "u2", "u3"] {
            let a = degress_summary(&fwd, j, WeightPolicy::DocSoftmax, EPS, &div).unwrap();
            let b = degress_summary(&rev, j, WeightPolicy::DocSoftmax, EPS, &div).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn malformed_instances_are_named() {
        let mut inst = instance(&[("u1", "g1", "s1"), ("u2", "g2", "s2")]);
        inst.gold.remove("u2");
        let err = inst.validate().unwrap_err();
        assert!(matches!(err, SummEvalError::BadInstance { doc, .. } if doc == "d1"));

        let mut dup = instance(&[("u1", "g1", "s1"), ("u2", "g2", "s2")]);
        dup.users.push("u1".into());
        assert!(dup.validate().is_err());
    }
}
