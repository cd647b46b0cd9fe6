//! Trains the default model on one synthetic domain and evaluates it on the
//! others. Usage: `train_synthetic [epochs]`.

use freqhar::analysis::evaluate;
use freqhar::data::source::DataSource;
use freqhar::data::synthetic::SyntheticDomain;
use freqhar::data::{split, WindowConfig};
use freqhar::model::ModelConfig;
use freqhar::training::{fit_with_progress, TrainConfig};

fn main() -> freqhar::Result<()> {
    let epochs = std::env::args().nth(1).map_or(20, |a| a.parse().expect("epochs"));
    let domains = SyntheticDomain::family();
    let windows = DataSource::Synthetic(domains[0].clone()).windows(None, 20.0, &WindowConfig::default())?;
    let parts = split(windows, 0)?;
    let train = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (model, report) = fit_with_progress(&parts, &ModelConfig::default(), &train, &mut |r| {
        println!("epoch {:>3}  loss {:.4}  val {:.1}%", r.epoch, r.train_loss, 100.0 * r.val_accuracy);
    })?;
    println!("best epoch {} at {:.1}%", report.best_epoch, 100.0 * report.best_val_accuracy);
    let (test, _) = evaluate(&model, &parts.test, "syn-a", "syn-a")?;
    println!("syn-a test: {:.1}%", test.accuracy);
    for d in &domains[1..] {
        let target = DataSource::Synthetic(d.clone()).windows(None, 20.0, &WindowConfig::default())?;
        let (r, _) = evaluate(&model, &target, "syn-a", &d.name)?;
        println!("{}: accuracy {:.1}%  macro-F1 {:.1}", d.name, r.accuracy, r.macro_f1);
    }
    Ok(())
}
