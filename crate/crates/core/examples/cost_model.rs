//! Parameters, FLOPs under both conventions, and measured latency for the
//! main variants.

use freqhar::analysis::{acceleration_ratio, bench_latency, cost_report};
use freqhar::model::{AttentionMode, Model, ModelConfig};
use freqhar::numerics::Tensor;
use freqhar::spectral::FeatureMode;

fn main() -> freqhar::Result<()> {
    let base = ModelConfig::default();
    let variants = [
        (FeatureMode::Amplitude, AttentionMode::SensorWise),
        (FeatureMode::AmplitudePhase, AttentionMode::SensorWise),
        (FeatureMode::Amplitude, AttentionMode::Temporal),
        (FeatureMode::Time, AttentionMode::Temporal),
    ];
    println!("{:<28} {:>7} {:>10} {:>10} {:>12}", "variant", "params", "flops A", "flops B", "latency us");
    for (f, a) in variants {
        let config = base.variant(f, a);
        let model = Model::new(config.clone(), 0)?;
        let window = Tensor::filled(&[config.channels, config.window_len], 0.5);
        let features = model.featurize(&window)?;
        let latency = bench_latency(&model, &features, 50)?;
        let r = cost_report(&config, Some(latency));
        println!(
            "{:<28} {:>7} {:>10} {:>10} {:>12.1}",
            format!("{f}+{a}"),
            r.param_count,
            r.flops_a,
            r.flops_b,
            1e6 * r.latency.map_or(0.0, |l| l.mean)
        );
    }
    for t in [60, 120, 240, 480] {
        println!("acceleration ratio at T={t}: {:.2}", acceleration_ratio(t, 6, 3, 2, 64));
    }
    Ok(())
}
