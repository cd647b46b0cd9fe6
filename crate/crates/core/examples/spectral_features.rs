//! Feature matrices for one synthetic walking window in each feature mode.

use freqhar::data::source::DataSource;
use freqhar::data::{Activity, WindowConfig};
use freqhar::spectral::{featurize, FeatureMode, FeatureOptions};

fn main() -> freqhar::Result<()> {
    let source: DataSource = "syn-a".parse()?;
    let windows = source.windows(None, 20.0, &WindowConfig::default())?;
    let walk = windows.iter().find(|w| w.label == Activity::Walking).expect("walking window");
    let options = FeatureOptions::default();
    for mode in FeatureMode::ALL {
        let f = featurize(&walk.values, mode, &options)?;
        println!("{mode}: {:?}", f.shape());
    }

    // dominant bin of the amplitude spectrum, per channel
    let amp = featurize(&walk.values, FeatureMode::Amplitude, &options)?;
    let hz_per_bin = 20.0 / walk.len() as f64;
    for (c, name) in ["Ax", "Ay", "Az", "Gx", "Gy", "Gz"].iter().enumerate() {
        let row = amp.row(c);
        let (k, a) = row
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (k, &a)| if a > best.1 { (k, a) } else { best });
        println!("{name}: peak at bin {} ({:.2} Hz), amplitude {a:.2}", k + 1, (k + 1) as f64 * hz_per_bin);
    }
    Ok(())
}
