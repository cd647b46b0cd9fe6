//! Fixtures and oracles shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use freqhar::data::synthetic::{generate_recordings, SyntheticDomain};
use freqhar::data::{Activity, RawRecording};

/// Synthetic 50 Hz recordings, one per (subject, activity).
pub fn recordings(subjects: usize, seconds: f64, seed: u64) -> Vec<RawRecording> {
    generate_recordings(&SyntheticDomain::new("fixture"), subjects, seconds, 50.0, seed)
}

fn label_of(rec: &RawRecording) -> Activity {
    rec.labels[0].expect("synthetic recordings are labelled")
}

fn uci_activity(a: Activity) -> usize {
    match a {
        Activity::Walking => 1,
        Activity::Upstairs => 2,
        Activity::Downstairs => 3,
        Activity::Still => 5,
    }
}

/// `RawData/{acc,gyro}_expXX_userYY.txt` plus `labels.txt`.
pub fn write_uci(root: &Path, recs: &[RawRecording]) {
    let dir = root.join("RawData");
    fs::create_dir_all(&dir).unwrap();
    let mut labels = String::new();
    for (i, r) in recs.iter().enumerate() {
        let (exp, user) = (i + 1, r.subject.parse::<usize>().unwrap() + 1);
        for (prefix, off) in [("acc", 0), ("gyro", 3)] {
            let mut s = String::new();
            for t in 0..r.len() {
                let c = &r.channels;
                writeln!(s, "{:e} {:e} {:e}", c[off][t], c[off + 1][t], c[off + 2][t]).unwrap();
            }
            fs::write(dir.join(format!("{prefix}_exp{exp:02}_user{user:02}.txt")), s).unwrap();
        }
        writeln!(labels, "{exp} {user} {} 1 {}", uci_activity(label_of(r)), r.len()).unwrap();
    }
    fs::write(dir.join("labels.txt"), labels).unwrap();
}

fn motion_code(a: Activity) -> &'static str {
    match a {
        Activity::Still => "std",
        Activity::Walking => "wlk",
        Activity::Upstairs => "ups",
        Activity::Downstairs => "dws",
    }
}

pub const MOTION_GRAVITY: [f64; 3] = [0.1, -0.2, 0.95];

/// `A_DeviceMotion_data/<act>_<trial>/sub_<n>.csv`.
pub fn write_motion(root: &Path, recs: &[RawRecording]) {
    let base = root.join("A_DeviceMotion_data");
    for r in recs {
        let dir = base.join(format!("{}_1", motion_code(label_of(r))));
        fs::create_dir_all(&dir).unwrap();
        let mut s = String::from(
            ",attitude.roll,attitude.pitch,attitude.yaw,gravity.x,gravity.y,gravity.z,\
             rotationRate.x,rotationRate.y,rotationRate.z,\
             userAcceleration.x,userAcceleration.y,userAcceleration.z\n",
        );
        let g = MOTION_GRAVITY;
        for t in 0..r.len() {
            let c = &r.channels;
            writeln!(
                s,
                "{t},0,0,0,{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                g[0],
                g[1],
                g[2],
                c[3][t],
                c[4][t],
                c[5][t],
                c[0][t] - g[0],
                c[1][t] - g[1],
                c[2][t] - g[2]
            )
            .unwrap();
        }
        let subject = r.subject.parse::<usize>().unwrap() + 1;
        fs::write(dir.join(format!("sub_{subject}.csv")), s).unwrap();
    }
}

fn hhar_label(a: Activity) -> &'static str {
    match a {
        Activity::Still => "stand",
        Activity::Walking => "walk",
        Activity::Upstairs => "stairsup",
        Activity::Downstairs => "stairsdown",
    }
}

/// `Phones_accelerometer.csv` and `Phones_gyroscope.csv`. Each recording is a
/// contiguous block for user `u<subject>`; blocks are separated by 5 s gaps.
/// The gyroscope clock is offset by 3 ms.
pub fn write_hhar(root: &Path, recs: &[RawRecording]) {
    let header = "Index,Arrival_Time,Creation_Time,x,y,z,User,Model,Device,gt\n";
    let (mut acc, mut gyro) = (String::from(header), String::from(header));
    let mut clock: std::collections::BTreeMap<String, i64> = Default::default();
    let mut idx = 0;
    for r in recs {
        let user = format!("u{}", r.subject);
        let t0 = *clock.entry(user.clone()).or_insert(1_424_696_633_908_000_000);
        let gt = hhar_label(label_of(r));
        for t in 0..r.len() {
            let ns = t0 + t as i64 * 20_000_000;
            let c = &r.channels;
            writeln!(acc, "{idx},0,{ns},{:e},{:e},{:e},{user},nexus4,nexus4_1,{gt}", c[0][t], c[1][t], c[2][t]).unwrap();
            writeln!(
                gyro,
                "{idx},0,{},{:e},{:e},{:e},{user},nexus4,nexus4_1,{gt}",
                ns + 3_000_000,
                c[3][t],
                c[4][t],
                c[5][t]
            )
            .unwrap();
            idx += 1;
        }
        clock.insert(user, t0 + (r.len() as i64 + 250) * 20_000_000);
    }
    fs::write(root.join("Phones_accelerometer.csv"), acc).unwrap();
    fs::write(root.join("Phones_gyroscope.csv"), gyro).unwrap();
}

fn shoaib_label(a: Activity) -> &'static str {
    match a {
        Activity::Still => "standing",
        Activity::Walking => "walking",
        Activity::Upstairs => "upstairs",
        Activity::Downstairs => "downstairs",
    }
}

pub const SHOAIB_POSITIONS: [&str; 2] = ["Left_pocket", "Wrist"];

/// `DataSet/Participant_<n>.csv` with two body positions side by side; the
/// second position carries the same signal scaled by 2.
pub fn write_shoaib(root: &Path, recs: &[RawRecording]) {
    let dir = root.join("DataSet");
    fs::create_dir_all(&dir).unwrap();
    let group = ["time_stamp", "Ax", "Ay", "Az", "Lx", "Ly", "Lz", "Gx", "Gy", "Gz", "Mx", "My", "Mz", ""];
    let mut by_subject: std::collections::BTreeMap<usize, Vec<&RawRecording>> = Default::default();
    for r in recs {
        by_subject.entry(r.subject.parse::<usize>().unwrap() + 1).or_default().push(r);
    }
    for (subject, rs) in by_subject {
        let mut positions = Vec::new();
        let mut names = Vec::new();
        for p in SHOAIB_POSITIONS {
            positions.push(p.to_string());
            positions.extend(std::iter::repeat_n(String::new(), group.len() - 1));
            names.extend(group.iter().map(|s| s.to_string()));
        }
        positions.push(String::new());
        names.push("Activity_Label".into());
        let mut s = positions.join(",") + "\n" + &names.join(",") + "\n";
        let mut ts = 0u64;
        for r in rs {
            for t in 0..r.len() {
                let c = &r.channels;
                for scale in [1.0, 2.0] {
                    write!(
                        s,
                        "{ts},{:e},{:e},{:e},0,0,0,{:e},{:e},{:e},0,0,0,,",
                        scale * c[0][t],
                        scale * c[1][t],
                        scale * c[2][t],
                        scale * c[3][t],
                        scale * c[4][t],
                        scale * c[5][t]
                    )
                    .unwrap();
                }
                writeln!(s, "{}", shoaib_label(label_of(r))).unwrap();
                ts += 20;
            }
        }
        fs::write(dir.join(format!("Participant_{subject}.csv")), s).unwrap();
    }
}

/// Exact 1-D transport cost between two equal-size uniform samples, by
/// enumerating every assignment.
pub fn brute_force_emd(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permutations(&mut perm, 0, &mut |p| {
        let cost: f64 = p.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).abs()).sum();
        best = best.min(cost / n as f64);
    });
    best
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}
