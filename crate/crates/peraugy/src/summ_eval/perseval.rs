//! Responsiveness discounted by accuracy penalties: a document-level penalty
//! for the best summary's accuracy drop, a per-user penalty for inconsistency
//! against the document average, and a sigmoid squashing of their sum.

use rayon::prelude::*;
use serde::Serialize;

use super::degress::{degress_summary, EvalInstance, WeightPolicy};
use super::rouge::rouge_su4;
use super::SummEvalError;

pub type TextDist = dyn Fn(&str, &str) -> f64 + Sync;

/// 1 - skip-bigram F1; the crate's standard summary divergence.
pub fn default_divergence(a: &str, b: &str) -> f64 {
    1.0 - rouge_su4(a, b, false).f1
}

pub struct PersevalParams<'a> {
    /// Sigmoid sharpness exponent of the combined penalty (>= 3).
    pub alpha_exp: f64,
    /// Penalty amplification exponent (>= 1).
    pub beta_exp: f64,
    /// Sharpness exponent of the two accuracy penalties (>= 4).
    pub gamma_exp: f64,
    pub epsilon: f64,
    pub weights: WeightPolicy,
    pub divergence: &'a TextDist,
    /// Per-user accuracy as a distance to the gold summary; falls back to
    /// `divergence` when absent. Expected in [0, 1] with 0 = perfect.
    pub accuracy: Option<&'a TextDist>,
    /// Set when `accuracy` reports similarity instead of distance; values
    /// are flipped to 1 - value internally.
    pub accuracy_is_similarity: bool,
}

impl PersevalParams<'static> {
    pub fn standard() -> Self {
        PersevalParams {
            alpha_exp: 3.0,
            beta_exp: 1.0,
            gamma_exp: 4.0,
            epsilon: 1e-8,
            weights: WeightPolicy::DocSoftmax,
            divergence: &default_divergence,
            accuracy: None,
            accuracy_is_similarity: false,
        }
    }
}

impl PersevalParams<'_> {
    pub fn validate(&self) -> Result<(), SummEvalError> {
        let mut problems = Vec::new();
        if self.alpha_exp < 3.0 {
            problems.push(format!("alpha_exp = {} below the floor 3", self.alpha_exp));
        }
        if self.beta_exp < 1.0 {
            problems.push(format!("beta_exp = {} below the floor 1", self.beta_exp));
        }
        if self.gamma_exp < 4.0 {
            problems.push(format!("gamma_exp = {} below the floor 4", self.gamma_exp));
        }
        if !(self.epsilon > 0.0) {
            problems.push(format!("epsilon = {} (need > 0)", self.epsilon));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SummEvalError::BadParams(problems.join("; ")))
        }
    }
}

/// Document-level accuracy-drop penalty, driven by the best (lowest)
/// accuracy distance on the document. Zero drop leaves roughly 1/10^gamma.
pub(crate) fn adp(bestacc: f64, gamma_exp: f64, epsilon: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(gamma_exp) * (-10.0 * bestacc / ((1.0 - bestacc) + epsilon)).exp())
}

/// Per-user inconsistency penalty: how far this user's accuracy sits above
/// the document's best, relative to the average gap.
pub(crate) fn acp(acc: f64, bestacc: f64, avgacc: f64, gamma_exp: f64, epsilon: f64) -> f64 {
    let ratio = (acc - bestacc) / ((avgacc - bestacc) + epsilon);
    1.0 / (1.0 + 10f64.powf(gamma_exp) * (-10.0 * ratio).exp())
}

/// Squashes the combined penalty into a multiplicative discount in (0, 1);
/// strictly decreasing in `dp`.
pub(crate) fn edp(dp: f64, alpha_exp: f64, beta_exp: f64) -> f64 {
    1.0 - 1.0 / (1.0 + 10f64.powf(alpha_exp) * (-(10f64.powf(beta_exp)) * dp).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScore {
    pub doc: String,
    pub user: String,
    pub degress: f64,
    pub accuracy: f64,
    pub adp: f64,
    pub acp: f64,
    pub edp: f64,
    pub perseval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersevalReport {
    pub pairs: Vec<PairScore>,
    /// Mean over documents of the per-document user means.
    pub system_degress: f64,
    pub system_perseval: f64,
    pub warnings: Vec<String>,
}

struct DocScores {
    doc: String,
    pairs: Vec<PairScore>,
    mean_degress: f64,
    mean_perseval: f64,
}

fn score_doc(inst: &EvalInstance, params: &PersevalParams) -> Result<DocScores, SummEvalError> {
    let users = inst.sorted_users();
    let acc_fn = params.accuracy.unwrap_or(params.divergence);
    let accs: Vec<f64> = users
        .iter()
        .map(|u| {
            let raw = acc_fn(inst.generated[*u].as_str(), inst.gold[*u].as_str());
            if params.accuracy_is_similarity {
                1.0 - raw
            } else {
                raw
            }
        })
        .collect();
    let bestacc = accs.iter().cloned().fold(f64::INFINITY, f64::min);
    let avgacc = accs.iter().sum::<f64>() / accs.len() as f64;
    let doc_adp = adp(bestacc, params.gamma_exp, params.epsilon);

    let mut pairs = Vec::with_capacity(users.len());
    for (u, acc) in users.iter().zip(&accs) {
        let degress =
            degress_summary(inst, u, params.weights, params.epsilon, params.divergence)?;
        let user_acp = acp(*acc, bestacc, avgacc, params.gamma_exp, params.epsilon);
        let user_edp = edp(doc_adp + user_acp, params.alpha_exp, params.beta_exp);
        pairs.push(PairScore {
            doc: inst.doc.id.clone(),
            user: u.to_string(),
            degress,
            accuracy: *acc,
            adp: doc_adp,
            acp: user_acp,
            edp: user_edp,
            perseval: degress * user_edp,
        });
    }
    let n = pairs.len() as f64;
    Ok(DocScores {
        doc: inst.doc.id.clone(),
        mean_degress: pairs.iter().map(|p| p.degress).sum::<f64>() / n,
        mean_perseval: pairs.iter().map(|p| p.perseval).sum::<f64>() / n,
        pairs,
    })
}

/// Scores every document and folds the system means in document-id order.
/// Documents with a single user cannot express responsiveness and are
/// skipped with a warning.
pub fn perseval(
    instances: &[EvalInstance],
    params: &PersevalParams,
) -> Result<PersevalReport, SummEvalError> {
    params.validate()?;
    if instances.is_empty() {
        return Err(SummEvalError::EmptyInstanceSet);
    }
    let scored: Vec<Result<DocScores, String>> = instances
        .par_iter()
        .map(|inst| {
            inst.validate().map_err(|e| e.to_string())?;
            if inst.users.len() < 2 {
                return Err(format!("doc {}: single user, skipped", inst.doc.id));
            }
            score_doc(inst, params).map_err(|e| e.to_string())
        })
        .collect();

    let mut docs = Vec::new();
    let mut warnings = Vec::new();
    for r in scored {
        match r {
            Ok(d) => docs.push(d),
            Err(w) => warnings.push(w),
        }
    }
    if docs.is_empty() {
        return Err(SummEvalError::NothingScored);
    }
    docs.sort_by(|a, b| a.doc.cmp(&b.doc));

    let n = docs.len() as f64;
    let system_degress = docs.iter().map(|d| d.mean_degress).sum::<f64>() / n;
    let system_perseval = docs.iter().map(|d| d.mean_perseval).sum::<f64>() / n;
    let pairs = docs.into_iter().flat_map(|d| d.pairs).collect();
    Ok(PersevalReport { pairs, system_degress, system_perseval, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uig::DocRecord;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn doc(id: &str) -> DocRecord {
        DocRecord {
            id: id.into(),
            title: format!("Headline {id}"),
            body: vec![format!("Body text of {id}.")],
            topic: None,
        }
    }

    fn instance(id: &str, rows: &[(&str, &str, &str)]) -> EvalInstance {
        EvalInstance {
            doc: doc(id),
            users: rows.iter().map(|(u, _, _)| u.to_string()).collect(),
            gold: rows.iter().map(|(u, g, _)| (u.to_string(), g.to_string())).collect(),
            generated: rows.iter().map(|(u, _, s)| (u.to_string(), s.to_string())).collect(),
        }
    }

    #[test]
    fn penalty_helpers_hit_documented_limits() {
        let eps = 1e-8;
        // zero drop: 1 / (1 + 10^4)
        assert_relative_eq!(adp(0.0, 4.0, eps), 1.0 / 10001.0, max_relative = 1e-9);
        assert_relative_eq!(acp(0.3, 0.3, 0.3, 4.0, eps), 1.0 / 10001.0, max_relative = 1e-9);
        // total drop saturates toward 1
        assert!(adp(1.0 - 1e-12, 4.0, eps) > 0.999);
    }

    #[test]
    fn penalties_are_monotone() {
        let eps = 1e-8;
        let grid: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        for w in grid.windows(2) {
            // adp saturates to exactly 1.0 in f64 once the exp underflows
            // past the unit roundoff, so strictness only holds early on
            if w[1] <= 0.8 {
                assert!(adp(w[0], 4.0, eps) < adp(w[1], 4.0, eps));
            } else {
                assert!(adp(w[0], 4.0, eps) <= adp(w[1], 4.0, eps));
            }
            assert!(acp(w[0], 0.0, 0.5, 4.0, eps) < acp(w[1], 0.0, 0.5, 4.0, eps));
            assert!(edp(w[0], 3.0, 1.0) > edp(w[1], 3.0, 1.0));
        }
    }

    #[test]
    fn perfect_accuracy_recovers_responsiveness() {
        // generated == gold everywhere, so every accuracy distance is 0
        let insts = vec![
            instance("d1", &[
                ("u1", "mayor wins city vote", "mayor wins city vote"),
                ("u2", "tax protest spreads fast", "tax protest spreads fast"),
            ]),
            instance("d2", &[
                ("u1", "storm closes the port", "storm closes the port"),
                ("u2", "ships wait out the storm", "ships wait out the storm"),
                ("u3", "port reopens after storm", "port reopens after storm"),
            ]),
        ];
        let report = perseval(&insts, &PersevalParams::standard()).unwrap();
        assert!((report.system_perseval - report.system_degress).abs() <= 1e-2);
        for p in &report.pairs {
            assert_eq!(p.accuracy, 0.0);
            assert!((p.perseval - p.degress).abs() <= 1e-2);
        }
    }

    #[test]
    fn zero_responsiveness_zeroes_the_score() {
        // identical generated summaries for distinct golds: degress ~ 0
        let insts = vec![instance("d1", &[
            ("u1", "mayor wins city vote", "one size fits all"),
            ("u2", "tax protest spreads fast", "one size fits all"),
        ])];
        let report = perseval(&insts, &PersevalParams::standard()).unwrap();
        assert!(report.system_perseval < 1e-6);
    }

    #[test]
    fn hand_set_accuracy_and_divergence_match_term_expansion() {
        // two docs, two users; divergence keyed by text pairs
        let div = |a: &str, b: &str| -> f64 {
            if a == b {
                return 0.0;
            }
            let key = if a < b { (a, b) } else { (b, a) };
            match key {
                ("gA1", "gA2") => 0.5,
                ("sA1", "sA2") => 0.25,
                ("gB1", "gB2") => 0.8,
                ("sB1", "sB2") => 0.8,
                // accuracy distances generated-vs-gold
                ("gA1", "sA1") => 0.1,
                ("gA2", "sA2") => 0.3,
                ("gB1", "sB1") => 0.0,
                ("gB2", "sB2") => 0.6,
                _ => 1.0,
            }
        };
        let insts = vec![
            instance("dA", &[("u1", "gA1", "sA1"), ("u2", "gA2", "sA2")]),
            instance("dB", &[("u1", "gB1", "sB1"), ("u2", "gB2", "sB2")]),
        ];
        let params = PersevalParams {
            weights: WeightPolicy::Uniform,
            divergence: &div,
            ..PersevalParams::standard()
        };
        let report = perseval(&insts, &params).unwrap();
        let eps = 1e-8;

        // doc A: X = 0.25, Y = 0.125 per user; accs (0.1, 0.3)
        let deg_a = (0.125 + eps) / (0.25 + eps);
        let adp_a = adp(0.1, 4.0, eps);
        let acp_a1 = acp(0.1, 0.1, 0.2, 4.0, eps);
        let acp_a2 = acp(0.3, 0.1, 0.2, 4.0, eps);
        let pse_a1 = deg_a * edp(adp_a + acp_a1, 3.0, 1.0);
        let pse_a2 = deg_a * edp(adp_a + acp_a2, 3.0, 1.0);
        // doc B: X = Y = 0.4 -> degress exactly 1; accs (0.0, 0.6)
        let adp_b = adp(0.0, 4.0, eps);
        let acp_b1 = acp(0.0, 0.0, 0.3, 4.0, eps);
        let acp_b2 = acp(0.6, 0.0, 0.3, 4.0, eps);
        let pse_b1 = 1.0 * edp(adp_b + acp_b1, 3.0, 1.0);
        let pse_b2 = 1.0 * edp(adp_b + acp_b2, 3.0, 1.0);

        let want_degress = (deg_a + 1.0) / 2.0;
        let want_pse = ((pse_a1 + pse_a2) / 2.0 + (pse_b1 + pse_b2) / 2.0) / 2.0;
        assert_relative_eq!(report.system_degress, want_degress, max_relative = 1e-12);
        assert_relative_eq!(report.system_perseval, want_pse, max_relative = 1e-12);

        let got: BTreeMap<(String, String), f64> =
            report.pairs.iter().map(|p| ((p.doc.clone(), p.user.clone()), p.perseval)).collect();
        assert_relative_eq!(got[&("dA".into(), "u1".into())], pse_a1, max_relative = 1e-12);
        assert_relative_eq!(got[&("dA".into(), "u2".into())], pse_a2, max_relative = 1e-12);
        assert_relative_eq!(got[&("dB".into(), "u1".into())], pse_b1, max_relative = 1e-12);
        assert_relative_eq!(got[&("dB".into(), "u2".into())], pse_b2, max_relative = 1e-12);
    }

    #[test]
    fn perseval_never_exceeds_degress() {
        let texts = [
            "mayor wins city vote",
            "tax protest spreads",
            "storm closes port",
            "ships wait offshore",
            "court backs new law",
        ];
        let mut insts = Vec::new();
        for i in 0..20 {
            let rows: Vec<(&str, &str, &str)> = (0..3)
                .map(|j| {
                    let u: &str = ["u1", "u2", "u3"][j];
                    (u, texts[(i + j) % texts.len()], texts[(i * 2 + j) % texts.len()])
                })
                .collect();
            insts.push(instance(&format!("d{i:02}"), &rows));
        }
        let report = perseval(&insts, &PersevalParams::standard()).unwrap();
        for p in &report.pairs {
            assert!(p.perseval <= p.degress, "{}/{}", p.doc, p.user);
            for v in [p.degress, p.adp, p.acp, p.edp, p.perseval] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert!(report.system_perseval <= report.system_degress);
    }

    #[test]
    fn similarity_oriented_accuracy_is_flipped() {
        let sim = |a: &str, b: &str| if a == b { 1.0 } else { 0.0 };
        let insts = vec![instance("d1", &[
            ("u1", "mayor wins vote", "mayor wins vote"),
            ("u2", "tax protest grows", "tax protest grows"),
        ])];
        let params = PersevalParams {
            accuracy: Some(&sim),
            accuracy_is_similarity: true,
            ..PersevalParams::standard()
        };
        let report = perseval(&insts, &params).unwrap();
        for p in &report.pairs {
            assert_eq!(p.accuracy, 0.0);
        }
    }

    #[test]
    fn single_user_docs_are_skipped_with_warning() {
        let insts = vec![
            instance("solo", &[("u1", "gold text", "generated text")]),
            instance("duo", &[("u1", "g one", "s one"), ("u2", "g two", "s two")]),
        ];
        let report = perseval(&insts, &PersevalParams::standard()).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("solo"));
        assert!(report.pairs.iter().all(|p| p.doc == "duo"));
    }

    #[test]
    fn empty_and_unscorable_sets_error() {
        let err = perseval(&[], &PersevalParams::standard()).unwrap_err();
        assert!(matches!(err, SummEvalError::EmptyInstanceSet));
        let solos = vec![instance("solo", &[("u1", "a b", "c d")])];
        let err = perseval(&solos, &PersevalParams::standard()).unwrap_err();
        assert!(matches!(err, SummEvalError::NothingScored));
    }

    #[test]
    fn exponent_floors_are_enforced() {
        for (a, b, g) in [(2.9, 1.0, 4.0), (3.0, 0.9, 4.0), (3.0, 1.0, 3.9)] {
            let params = PersevalParams {
                alpha_exp: a,
                beta_exp: b,
                gamma_exp: g,
                ..PersevalParams::standard()
            };
            assert!(params.validate().is_err());
        }
    }
}
