//! Correlate a diversity series against downstream accuracy, with the
//! leave-one-out table that shows which dataset carries the relationship.

use std::collections::BTreeMap;

use peraugy::stats::{diversity_accuracy_correlation, pearson, pearson_transfer_bound};

fn main() -> anyhow::Result<()> {
    // five augmented datasets: gap-10 through gap-160, say
    let diversity: BTreeMap<String, f64> = [
        ("g10", 0.011),
        ("g20", 0.019),
        ("g40", 0.034),
        ("g80", 0.031),
        ("g160", 0.042),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let accuracy: BTreeMap<String, f64> = [
        ("g10", 0.612),
        ("g20", 0.641),
        ("g40", 0.668),
        ("g80", 0.662),
        ("g160", 0.671),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();

    let table = diversity_accuracy_correlation(&diversity, &accuracy)?;
    let full = &table.full;
    println!(
        "full table ({} datasets): pearson {:?}, spearman {:.3}, kendall {:.3}",
        table.labels.len(),
        full.pearson,
        full.spearman,
        full.kendall
    );
    for (label, row) in &table.leave_one_out {
        println!(
            "  without {label:5}: pearson {:?}, spearman {:.3}, kendall {:.3}",
            row.pearson, row.spearman, row.kendall
        );
    }
    for note in &table.notes {
        println!("note: {note}");
    }

    // raw coefficients are also available on plain slices
    let xs: Vec<f64> = table.labels.iter().map(|l| diversity[l]).collect();
    let ys: Vec<f64> = table.labels.iter().map(|l| accuracy[l]).collect();
    println!("pearson on the raw series: {:.4}", pearson(&xs, &ys)?);

    // if diversity tracks a distorted score at r1 and the distorted score
    // tracks accuracy at r2, the original cannot correlate worse than this
    let bound = pearson_transfer_bound(0.95, 0.9)?;
    println!("transfer bound for r = 0.95 and 0.9: >= {bound:.4}");
    Ok(())
}
