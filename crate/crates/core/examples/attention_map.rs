//! Averaged channel attention of a briefly trained model, one map per class.

use freqhar::analysis::export_attention;
use freqhar::data::source::DataSource;
use freqhar::data::{split, Activity, WindowConfig};
use freqhar::model::ModelConfig;
use freqhar::training::{fit, TrainConfig};

fn main() -> freqhar::Result<()> {
    let windows = DataSource::Synthetic(freqhar::data::synthetic::SyntheticDomain::family()[0].clone())
        .windows(None, 20.0, &WindowConfig::default())?;
    let parts = split(windows, 0)?;
    let train = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let (model, _) = fit(&parts, &ModelConfig::default(), &train)?;
    for class in Activity::ALL {
        let members: Vec<_> = parts.test.iter().filter(|w| w.label == class).collect();
        let mut sum = vec![0.0; 36];
        let mut labels = Vec::new();
        for w in &members {
            let e = export_attention(&model, &model.featurize(&w.values)?)?;
            sum.iter_mut().zip(e.map.values()).for_each(|(s, v)| *s += v);
            labels = e.labels;
        }
        println!("{} ({} windows)", class.name(), members.len());
        println!("      {}", labels.join("     "));
        for (i, l) in labels.iter().enumerate() {
            let row: Vec<String> = (0..6).map(|j| format!("{:.3}", sum[i * 6 + j] / members.len().max(1) as f64)).collect();
            println!("  {l}  {}", row.join("  "));
        }
    }
    Ok(())
}
