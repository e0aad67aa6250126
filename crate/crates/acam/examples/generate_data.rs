//! Regenerate the bundled datasets under `data/` from fixed seeds:
//!
//! ```text
//! cargo run -p acam --example generate_data
//! ```
//!
//! Outputs are committed so experiments and tests run offline and
//! byte-reproducibly.

use acam::analysis::SinDataset;
use acam::fewshot::synth_embeddings;
use acam::VoltageRange;
use std::fmt::Write as _;
use std::path::Path;

fn main() {
    let data_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    std::fs::create_dir_all(&data_dir).expect("create data dir");

    // noisy training draw and noiseless evaluation grid of the standard
    // sin(5x) dataset
    let ds = SinDataset::default();
    let split = ds.sample(42);
    let mut train = String::from("x,y\n");
    for (x, y) in split.train_x.iter().zip(&split.train_y) {
        writeln!(train, "{x},{y}").unwrap();
    }
    std::fs::write(data_dir.join("sin5x_train.csv"), train).expect("write train csv");

    let mut test = String::from("x,y\n");
    for (x, y) in split.test_x.iter().zip(&split.test_y_true) {
        writeln!(test, "{x},{y}").unwrap();
    }
    std::fs::write(data_dir.join("sin5x_test.csv"), test).expect("write test csv");

    // well-separated synthetic embedding table (cluster std = 2% of range)
    let range = VoltageRange::default();
    let table = synth_embeddings(10, 12, 64, 0.02 * range.width(), 7, &range)
        .expect("synthesize embeddings");
    table
        .write_csv(data_dir.join("embeddings_demo.csv"))
        .expect("write embeddings csv");

    // cell-model operating point for the density study
    let calibration = "\
# Cell-model operating point for the sense-margin study.
# The partitioning range, swing, sense offset, and leakage floor are fitted
# so the margin targets hold (3 bits near 1e3, 4 bits near 1e2); this is a
# behavioral calibration, not a physical device range.
subthreshold_swing_mv = 60
i_on = 1.0
i_floor = 1e-20
v_min = -0.3
v_max = 4.5
level_count = 10
sense_offset_v = 0.18
";
    std::fs::write(data_dir.join("calibration.conf"), calibration).expect("write calibration");

    println!("wrote data/ inputs: sin5x_train.csv, sin5x_test.csv, embeddings_demo.csv, calibration.conf");
}
