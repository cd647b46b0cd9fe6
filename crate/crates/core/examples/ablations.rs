//! Feature and attention ablations on one synthetic source-target pair,
//! averaged over seeds. Usage: `ablations [epochs] [seeds]`.

use freqhar::analysis::evaluate;
use freqhar::data::source::DataSource;
use freqhar::data::synthetic::SyntheticDomain;
use freqhar::data::{split, WindowConfig};
use freqhar::model::{AttentionMode, MaskMode, ModelConfig};
use freqhar::spectral::FeatureMode;
use freqhar::training::{fit, TrainConfig};

fn main() -> freqhar::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(10, |a| a.parse().expect("epochs"));
    let seeds: u64 = args.next().map_or(2, |a| a.parse().expect("seeds"));
    let family = SyntheticDomain::family();
    let source = DataSource::Synthetic(family[0].clone()).windows(None, 20.0, &WindowConfig::default())?;
    let target = DataSource::Synthetic(family[2].clone()).windows(None, 20.0, &WindowConfig::default())?;

    let base = ModelConfig::default();
    let mut variants: Vec<(String, ModelConfig)> = Vec::new();
    for f in FeatureMode::ALL {
        for a in [AttentionMode::SensorWise, AttentionMode::Temporal] {
            variants.push((format!("{f}+{a}"), base.variant(f, a)));
        }
    }
    variants.push((
        "amplitude+sensor-wise, full mask".into(),
        ModelConfig {
            mask_mode: MaskMode::Full,
            ..base.clone()
        },
    ));

    println!("syn-a -> {}, {epochs} epochs, {seeds} seeds", family[2].name);
    for (name, config) in variants {
        let mut total = 0.0;
        for seed in 0..seeds {
            let parts = split(source.clone(), seed)?;
            let train = TrainConfig {
                seed,
                epochs,
                ..TrainConfig::default()
            };
            let (model, _) = fit(&parts, &config, &train)?;
            total += evaluate(&model, &target, "syn-a", &family[2].name)?.0.accuracy;
        }
        println!("  {name:<34} {:.1}%", total / seeds as f64);
    }
    Ok(())
}
