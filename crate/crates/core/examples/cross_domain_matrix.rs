//! Source-to-target accuracy matrix over the synthetic domain family.
//! Usage: `cross_domain_matrix [epochs]`.

use freqhar::analysis::evaluate;
use freqhar::data::source::DataSource;
use freqhar::data::synthetic::SyntheticDomain;
use freqhar::data::{split, WindowConfig};
use freqhar::model::ModelConfig;
use freqhar::training::{fit, TrainConfig};

fn main() -> freqhar::Result<()> {
    let epochs = std::env::args().nth(1).map_or(10, |a| a.parse().expect("epochs"));
    let family = SyntheticDomain::family();
    let data = family
        .iter()
        .map(|d| DataSource::Synthetic(d.clone()).windows(None, 20.0, &WindowConfig::default()))
        .collect::<freqhar::Result<Vec<_>>>()?;
    print!("{:<8}", "source");
    family.iter().for_each(|d| print!("{:>8}", d.name));
    println!();
    for (i, src) in family.iter().enumerate() {
        let parts = split(data[i].clone(), 0)?;
        let train = TrainConfig {
            epochs,
            ..TrainConfig::default()
        };
        let (model, _) = fit(&parts, &ModelConfig::default(), &train)?;
        print!("{:<8}", src.name);
        for (j, tgt) in family.iter().enumerate() {
            let windows = if i == j { &parts.test } else { &data[j] };
            let (r, _) = evaluate(&model, windows, &src.name, &tgt.name)?;
            print!("{:>8.1}", r.accuracy);
        }
        println!();
    }
    Ok(())
}
