//! EMD between synthetic domains in the time, amplitude and phase
//! representations, plus a phase-scrambled copy whose amplitude spectra are
//! unchanged.

use freqhar::analysis::{shift_report, DEFAULT_BINS};
use freqhar::data::source::DataSource;
use freqhar::data::synthetic::{phase_randomized, SyntheticDomain};
use freqhar::data::{Window, WindowConfig};

fn print(report: &freqhar::analysis::ShiftReport) {
    println!("{} vs {}", report.domain_a, report.domain_b);
    for c in &report.channels {
        println!(
            "  {:<3} time {:.4}  amplitude {:.4}  phase {:.4}",
            c.channel, c.time.emd, c.amplitude.emd, c.phase.emd
        );
    }
}

fn main() -> freqhar::Result<()> {
    let config = WindowConfig::default();
    let family = SyntheticDomain::family();
    let base = DataSource::Synthetic(family[0].clone()).windows(None, 20.0, &config)?;
    for d in &family[1..] {
        let other = DataSource::Synthetic(d.clone()).windows(None, 20.0, &config)?;
        print(&shift_report(&family[0].name, &base, &d.name, &other, DEFAULT_BINS)?);
    }
    let scrambled: Vec<Window> = base.iter().enumerate().map(|(i, w)| phase_randomized(w, i as u64)).collect();
    print(&shift_report("syn-a", &base, "syn-a-scrambled", &scrambled, DEFAULT_BINS)?);
    Ok(())
}
