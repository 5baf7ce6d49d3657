//! Drives experiments through the same entry point as the command line tool,
//! from an inline configuration, and writes a standalone plot.
//!
//! cargo run --release --example experiment_pipeline [-- <out dir>]

use std::path::PathBuf;

use gbu_lab::io::{emit_plot, parse_config, run_experiment, Experiment, PlotOptions, Series};

const CONFIG: &str = r#"
name = "demo"

[domain]
shape = "interval"
length = 1.0
h = 0.02

[solver]
p = 3.0
t_end = 0.3

[initial]
amplitude = 6.0

[sweep]
amplitudes = [0.25, 0.5, 1.0, 2.0, 6.0]
"#;

fn main() -> gbu_lab::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let cfg = parse_config(CONFIG)?;
    for exp in [Experiment::Solve, Experiment::Sweep] {
        let outcome = run_experiment(exp, &cfg, &out)?;
        println!(
            "{exp}: {} (exit status {})",
            outcome.dir.display(),
            outcome.status() as i32
        );
        for m in &outcome.manifest.monitors {
            println!("  {:<20} {}", m.name, if m.passed { "pass" } else { "FAIL" });
        }
        for f in &outcome.manifest.files {
            println!("  {:<20} {}", f.name, f.description);
        }
    }

    // The plotting helper is usable on its own.
    let curve: Vec<(f64, f64)> = (1..=50)
        .map(|i| {
            let s = i as f64 / 500.0;
            (s, std::f64::consts::FRAC_1_SQRT_2 * s.powf(-0.5))
        })
        .collect();
    let svg = emit_plot(
        &[Series::lines("d_p s^-beta", curve)],
        &PlotOptions {
            title: "Half-line profile slope".into(),
            x_label: "s".into(),
            y_label: "U'".into(),
            log_x: true,
            log_y: true,
        },
    )?;
    let path = out.join("profile_slope.svg");
    std::fs::write(&path, svg)?;
    println!("wrote {}", path.display());
    Ok(())
}
