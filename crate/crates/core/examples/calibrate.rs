//! Prints the calibrated configurations; `--write DIR` saves them as
//! `reference.json` and `observed.json`.

use triplet_sim::calibration::{observed_config, reference_config};
use triplet_sim::rates::predict_rates;

fn main() -> triplet_sim::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let out = match args.as_slice() {
        [_, flag, dir] if flag == "--write" => Some(std::path::PathBuf::from(dir)),
        _ => None,
    };
    for (name, cfg) in [("reference", reference_config()?), ("observed", observed_config()?)] {
        let r = predict_rates(&cfg)?;
        println!(
            "{name}: mu = ({:.6}, {:.6}), filter = {:.6}",
            cfg.source1.mu, cfg.source2.mu, cfg.source1.herald_filter_transmission
        );
        println!(
            "  closed form  signal {:.4}/h  noise {:.4}/h",
            r.signal_per_hour, r.noise_per_hour_per_pixel
        );
        println!(
            "  exact law    peak {:.4}/h  true {:.4}/h  background {:.4}/h",
            r.exact.peak_pixel_per_hour,
            r.exact.true_threefold_per_hour,
            r.exact.background_per_hour_per_pixel
        );
        if let Some(dir) = &out {
            let path = dir.join(format!("{name}.json"));
            std::fs::write(&path, cfg.to_json() + "\n").map_err(|e| triplet_sim::Error::io(&path, e))?;
        }
    }
    Ok(())
}
