//! The selective attention mask for accelerometer + gyroscope, and larger
//! sensor layouts.

use freqhar::model::build_mask;

fn main() {
    let labels = ["Ax", "Ay", "Az", "Gx", "Gy", "Gz"];
    let mask = build_mask(2, 3);
    println!("     {}", labels.join("  "));
    for (i, l) in labels.iter().enumerate() {
        let row: Vec<&str> = (0..6).map(|j| if mask.admissible(i, j) { " 1" } else { " ." }).collect();
        println!("{l}  {}", row.join("  "));
    }
    println!(
        "{} of 36 admissible, {:.1}% masked",
        mask.admissible_count(),
        100.0 * mask.masked_fraction()
    );
    for (s, c) in [(1, 3), (3, 3), (4, 3)] {
        let m = build_mask(s, c);
        println!("{s} sensors x {c} axes: {} admissible, {:.1}% masked", m.admissible_count(), 100.0 * m.masked_fraction());
    }
}
