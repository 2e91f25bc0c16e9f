// Benefit roll-up and ranking from raw environmental indicators plus an
// already-normalized economic and social table, then a check of how stable
// the winner is when one weight moves.
//
// ```bash
// cargo run --example table6_ranking
// ```

use std::collections::BTreeMap;
use std::fs::File;

use lid_eval::evaluator::{self, IndicatorTable, NormalizedTable, ZeroColumnPolicy};
use lid_eval::project::ProjectConfig;

pub fn run_example() -> lid_eval::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let cfg = ProjectConfig::load(format!("{dir}/sports_center.toml"))?;
    let (tree, _) = cfg.weight_tree()?;

    let read = |name: &str| -> lid_eval::Result<IndicatorTable> {
        let path = format!("{dir}/{name}");
        IndicatorTable::from_csv(File::open(&path).map_err(|e| lid_eval::Error::io(&path, e))?)
    };
    // Every environmental indicator is benefit-type.
    let env = evaluator::normalize(&read("table4.csv")?, &BTreeMap::new(), ZeroColumnPolicy::Error)?;
    let normalized = env.merged(&NormalizedTable::verbatim(&read("table5.csv")?))?;
    let report = evaluator::rollup(&tree, &normalized)?;

    let benefits = report.benefits();
    print!("scenario");
    for b in &benefits {
        print!(" {:>13}", b.name);
    }
    println!(" {:>13}", "comprehensive");
    for (m, s) in report.scenarios.iter().enumerate() {
        print!("{s:<8}");
        for b in &benefits {
            print!(" {:>13.3}", b.scores[m]);
        }
        println!(" {:>13.3}", report.comprehensive()[m]);
    }
    println!("ranking: {}", report.ranking.order.join(" > "));

    for node in ["environmental", "economic", "social"] {
        let s = evaluator::weight_sensitivity(&tree, &normalized, node, 0.05)?;
        println!(
            "{node} +/-0.05: {} / {}",
            s.plus.order.join(" > "),
            s.minus.order.join(" > ")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    run_example()
}
