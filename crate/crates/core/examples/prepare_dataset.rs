//! Reads a public dataset in its published layout, resamples it to 20 Hz and
//! writes the canonical form. Usage: `prepare_dataset <uci|shoaib|motion|hhar> <in> <out>`.

use std::path::PathBuf;

use freqhar::data::{class_counts, ingest, resample, windows_from_recordings, write_canonical, Activity, DatasetKind, WindowConfig};

fn main() -> freqhar::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [kind, input, output] = args.as_slice() else {
        eprintln!("usage: prepare_dataset <uci|shoaib|motion|hhar> <in> <out>");
        std::process::exit(2);
    };
    let kind: DatasetKind = kind.parse()?;
    let raw = ingest(kind, &PathBuf::from(input))?;
    let resampled = raw.iter().map(|r| resample(r, 20.0)).collect::<freqhar::Result<Vec<_>>>()?;
    write_canonical(&PathBuf::from(output), &resampled)?;
    let windows = windows_from_recordings(&resampled, 20.0, &WindowConfig::default())?;
    println!("{} recordings, {} windows", resampled.len(), windows.len());
    for (a, n) in Activity::ALL.iter().zip(class_counts(&windows)) {
        println!("  {:<10} {n}", a.name());
    }
    Ok(())
}
