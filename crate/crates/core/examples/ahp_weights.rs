// Indicator weights from pairwise judgments, with consistency checks.
//
// ```bash
// cargo run --example ahp_weights
// ```

use lid_eval::ahp::{self, PairwiseMatrix};
use lid_eval::project::ProjectConfig;

pub fn run_example() -> lid_eval::Result<()> {
    let m = PairwiseMatrix::from_upper_triangle(
        vec!["quantity".into(), "quality".into(), "delay".into()],
        &[vec![2.0, 6.0], vec![4.0]],
    )?;
    let w = ahp::derive_weights(&m)?;
    let c = ahp::consistency(&m)?;
    println!("weights {:?}", w.weights.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>());
    println!("lambda_max {:.4}, CR {:.4}, acceptable: {}", c.lambda_max, c.cr, c.pass);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/judgments.txt");
    let text = std::fs::read_to_string(path).map_err(|e| lid_eval::Error::io(path, e))?;
    let matrices = ahp::parse_matrices(&text)?;

    let cfg = ProjectConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sports_center.toml"))?;
    let (skeleton, _) = cfg.weight_tree()?;
    let (tree, reports) = ahp::weight_tree(&skeleton, &matrices, false)?;
    for (node, parent, depth) in tree.walk() {
        if depth <= 2 {
            println!("{}{} {:.3} (under {})", "  ".repeat(depth), node.name, node.weight, parent.unwrap_or("-"));
        }
    }
    for (node, r) in &reports {
        println!("{node}: CR {:.4}", r.cr);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    run_example()
}
