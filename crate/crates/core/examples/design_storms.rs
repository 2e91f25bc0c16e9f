// Chicago design storms for three depths and the ATRCR curve of a rain record.
//
// ```bash
// cargo run --example design_storms
// ```

use std::fs::File;

use lid_eval::storm_gen::{self, AtrcrOptions, IdfParams, RainRecord, StormShape};

pub fn run_example() -> lid_eval::Result<()> {
    let shape = StormShape {
        duration_min: 90.0,
        peak_ratio: 0.5,
        idf: IdfParams { a: 39.8, b: 11.4, n: 0.8 },
        step_s: 60,
    };
    let storms = storm_gen::design_storm_suite(&[16.0, 26.0, 36.0], &shape)?;
    for h in &storms {
        let peak = h.peak_index();
        println!(
            "{:>4.0} mm: peak {:6.1} mm/hr at minute {}, depth check {:.3} mm",
            h.total_depth_mm,
            h.intensities[peak],
            peak,
            h.depth()
        );
    }

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/rain_events.csv");
    let record = RainRecord::from_csv(File::open(path).map_err(|e| lid_eval::Error::io(path, e))?)?;
    let opts = AtrcrOptions::default();
    for (h, f) in storm_gen::atrcr_curve(&record, &[5.0, 10.0, 20.0, 26.0, 40.0], &opts)? {
        println!("capture {h:>4.0} mm -> ATRCR {:.1}%", f * 100.0);
    }
    let depth = storm_gen::invert_atrcr(&record, 0.75, &opts)?;
    println!("75% ATRCR needs {depth:.2} mm");
    Ok(())
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    run_example()
}
