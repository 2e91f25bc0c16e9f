use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lid_eval::evaluator;
use lid_eval::project::config::target_depth;
use lid_eval::project::pipeline;
use lid_eval::project::report::{self, Format};
use lid_eval::project::ProjectConfig;
use lid_eval::storm_gen;
use lid_eval::{Error, Result};

#[derive(Parser)]
#[command(name = "lid-eval", version, about = "Evaluate and rank LID stormwater scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Project file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the project's output_dir or ./out.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the design-storm hyetographs.
    Storm(Common),
    /// ATRCR curve of the rain record and the depth meeting the target.
    Atrcr(Common),
    /// Simulate baseline and scenarios and write hydrographs and indicators.
    Simulate(Common),
    /// Derive or check indicator weights.
    Weights {
        #[command(flatten)]
        common: Common,
        /// Pairwise matrices to use instead of the project's weights.
        #[arg(long)]
        matrices: Option<PathBuf>,
    },
    /// Run the full pipeline.
    Evaluate(Common),
    /// Rank scenarios, optionally testing one weight's influence.
    Rank {
        #[command(flatten)]
        common: Common,
        /// Node whose weight is perturbed.
        #[arg(long)]
        sensitivity: Option<String>,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        delta: f64,
    },
    /// Render the result tables.
    Report {
        #[command(flatten)]
        common: Common,
        /// md, csv or json; repeat for several. Defaults to all three.
        #[arg(long = "format")]
        formats: Vec<String>,
    },
    /// Check a project file and list every problem found.
    Validate(Common),
}

fn out_dir(common: &Common, cfg: Option<&ProjectConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.as_ref().map(|p| c.resolve(p))))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn print_ranking(r: &evaluator::Ranking) {
    for (i, (s, v)) in r.order.iter().zip(&r.scores).enumerate() {
        println!("{:>3}. {s:<12} {v:.3}", i + 1);
    }
    if r.tie {
        println!("note: tied scores were ordered by name");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(c) => {
            let result = ProjectConfig::load(&c.config);
            if let Some(out) = &c.out {
                let errors: Vec<String> = match &result {
                    Ok(_) => Vec::new(),
                    Err(Error::InvalidConfig(list)) => list.clone(),
                    Err(e) => vec![e.to_string()],
                };
                write_json(
                    &out.join("validation.json"),
                    &serde_json::json!({ "valid": errors.is_empty(), "errors": errors }),
                )?;
            }
            let cfg = result?;
            println!(
                "{}: valid ({} subcatchments, {} scenarios, {} storms)",
                c.config.display(),
                cfg.subcatchments.len(),
                cfg.scenarios.len(),
                cfg.storm.depths_mm.len()
            );
        }
        Command::Storm(c) => {
            let cfg = ProjectConfig::load(&c.config)?;
            let out = out_dir(&c, Some(&cfg));
            let files = pipeline::write_storms(&cfg, &out)?;
            for (label, h) in cfg.storm.depths_mm.iter().zip(cfg.storms()?) {
                println!(
                    "{label} mm: {} steps of {} s, peak at {:.1} min",
                    h.len(),
                    h.step_s,
                    h.peak_index() as f64 * h.step_s as f64 / 60.0
                );
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Atrcr(c) => {
            let cfg = ProjectConfig::load(&c.config)?;
            let out = out_dir(&c, Some(&cfg));
            let record = cfg
                .rain_record()?
                .ok_or_else(|| Error::Config("storm.rain_record is not set".into()))?;
            let opts = cfg.storm.atrcr;
            let max = record.max_depth().ceil() as usize;
            let depths: Vec<f64> = (0..=max).map(|d| d as f64).collect();
            let curve = storm_gen::atrcr_curve(&record, &depths, &opts)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let path = out.join("atrcr_curve.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["depth_mm", "atrcr"])?;
            for (d, f) in &curve {
                w.write_record([d.to_string(), f.to_string()])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            let depth = storm_gen::invert_atrcr(&record, cfg.storm.target_atrcr, &opts)?;
            println!(
                "{} events; ATRCR {:.0}% needs a capture depth of {depth:.2} mm",
                record.events().len(),
                cfg.storm.target_atrcr * 100.0
            );
            if let Some(d) = target_depth(&cfg)? {
                println!("design depth used for sizing: {d:.2} mm");
            }
        }
        Command::Simulate(c) => {
            let cfg = ProjectConfig::load(&c.config)?;
            let out = out_dir(&c, Some(&cfg));
            let results = pipeline::simulate_project(&cfg)?;
            let files = pipeline::write_simulation(&cfg, &results, &out)?;
            if let Some(env) = &results.environmental {
                println!("scenario   runoff%  peak%  delay(min)");
                for (s, row) in env.scenarios.iter().zip(&env.values) {
                    println!("{s:<10} {:>7.1} {:>6.1} {:>10.0}", row[0], row[1], row[2]);
                }
            }
            if let Some(e) = results.max_closure_error() {
                println!("largest water-balance error: {:.4}%", e * 100.0);
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Weights { common, matrices } => {
            let mut cfg = ProjectConfig::load(&common.config)?;
            if let Some(m) = matrices {
                cfg.weights.matrices = Some(std::env::current_dir().map(|d| d.join(&m)).unwrap_or(m));
            }
            let out = out_dir(&common, Some(&cfg));
            let (tree, reports) = cfg.weight_tree()?;
            for (n, _, d) in tree.walk() {
                println!("{}{} {:.3}", "  ".repeat(d), n.name, n.weight);
            }
            for (node, r) in &reports {
                println!(
                    "{node}: lambda_max {:.4}, CI {:.4}, CR {:.4} {}",
                    r.lambda_max,
                    r.ci,
                    r.cr,
                    if r.pass { "ok" } else { "INCONSISTENT" }
                );
            }
            write_json(&out.join("weights.json"), &tree)?;
            if !reports.is_empty() {
                write_json(&out.join("consistency.json"), &reports)?;
            }
        }
        Command::Evaluate(c) => {
            let cfg = ProjectConfig::load(&c.config)?;
            let out = out_dir(&c, Some(&cfg));
            let manifest = pipeline::run_pipeline(&cfg, &out)?;
            if let Some(r) = &manifest.ranking {
                print_ranking(r);
            }
            for s in pipeline::noncompliant(&manifest) {
                println!("warning: scenario '{s}' does not reach the required control volume");
            }
            println!("wrote {} files to {}", manifest.files.len() + 1, out.display());
        }
        Command::Rank {
            common,
            sensitivity,
            delta,
        } => {
            let cfg = ProjectConfig::load(&common.config)?;
            let out = out_dir(&common, Some(&cfg));
            let results = pipeline::evaluate_project(&cfg)?;
            let Some(report) = &results.report else {
                println!("no scenarios to rank");
                return Ok(());
            };
            print_ranking(&report.ranking);
            write_json(&out.join("ranking.json"), &report.ranking)?;
            if let Some(node) = sensitivity {
                let tree = results.weights.as_ref().expect("report implies weights");
                let s = evaluator::weight_sensitivity(tree, &report.normalized, &node, delta)?;
                println!("\n{node} {:+}: {}", delta, s.plus.order.join(" > "));
                println!("{node} {:+}: {}", -delta, s.minus.order.join(" > "));
                println!("top scenario {}", if s.top_changed { "changes" } else { "is stable" });
                write_json(&out.join("sensitivity.json"), &s)?;
            }
        }
        Command::Report { common, formats } => {
            let cfg = ProjectConfig::load(&common.config)?;
            let out = out_dir(&common, Some(&cfg));
            let formats: Vec<Format> = if formats.is_empty() {
                vec![Format::Markdown, Format::Csv, Format::Json]
            } else {
                formats.iter().map(|f| f.parse()).collect::<Result<_>>()?
            };
            let results = pipeline::evaluate_project(&cfg)?;
            let files = report::write_report(&results, &formats, &out)?;
            if formats.contains(&Format::Markdown) {
                print!("{}", report::render_tables(&results).to_markdown());
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
