//! Synthetic spectra shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::Rng;
use spectraclass::{Peak, Spectrum};

pub const NA: f64 = 22.990;
pub const MG: f64 = 24.312;
pub const AL: f64 = 26.982;
pub const SI: f64 = 27.977;
pub const K: f64 = 38.964;
pub const CA: f64 = 39.95;
pub const TI: f64 = 47.95;
pub const MN: f64 = 54.938;
pub const FE: f64 = 55.954;

pub const MINERALS: [&str; 4] = ["ILM", "AGT", "PLG", "OLV"];

/// Nominal (m/z, abundance) lines for a mineral-like spectrum. Silicon is
/// pinned at full scale in every spectrum so normalization is a no-op.
pub fn mineral_profile(class: &str) -> Vec<(f64, f64)> {
    let mut p = vec![(NA, 30.0), (SI, 100.0), (K, 20.0)];
    match class {
        "ILM" => p.extend([(FE, 100.0), (TI, 60.0), (CA, 1.0), (AL, 0.4), (MG, 5.0)]),
        "AGT" => p.extend([(CA, 80.0), (FE, 40.0), (AL, 20.0), (MG, 5.0)]),
        "PLG" => p.extend([(AL, 100.0), (CA, 100.0), (FE, 5.0), (MG, 3.0)]),
        "OLV" => p.extend([(MG, 100.0), (FE, 40.0), (MN, 20.0), (CA, 1.0), (AL, 0.4)]),
        other => panic!("unknown mineral {other}"),
    }
    p
}

/// A mineral spectrum with ±0.005 m/z jitter and up to 1% abundance
/// jitter on lines strictly between 1 and full scale.
pub fn mineral_spectrum(class: &str, id: &str, rng: &mut StdRng) -> Spectrum {
    let peaks = mineral_profile(class)
        .into_iter()
        .map(|(mz, a)| {
            let a = if !(1.0..100.0).contains(&a) { a } else { a * (1.0 + rng.gen_range(-0.01..0.01)) };
            Peak::new(mz + rng.gen_range(-0.005..0.005), a)
        })
        .collect();
    Spectrum::new(id, peaks).unwrap()
}

/// A spectrum with `n` peaks: the mineral lines plus random noise peaks
/// kept clear of every target ion.
pub fn large_spectrum(class: &str, id: &str, n: usize, rng: &mut StdRng) -> String {
    let profile = mineral_profile(class);
    let mut text = String::with_capacity(n * 16);
    let _ = writeln!(text, "# id: {id}");
    for (mz, a) in &profile {
        let _ = writeln!(text, "{mz},{a}");
    }
    let mut written = profile.len();
    while written < n {
        let mz: f64 = rng.gen_range(10.0..500.0);
        if profile.iter().any(|(t, _)| (t - mz).abs() < 1.0) || (MN - mz).abs() < 1.0 || (TI - mz).abs() < 1.0 {
            continue;
        }
        let _ = writeln!(text, "{mz:.4},{:.3}", rng.gen_range(0.0..50.0));
        written += 1;
    }
    text
}

pub fn write_spectrum(dir: &Path, s: &Spectrum) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let path = dir.join(format!("{}.csv", s.id()));
    fs::write(&path, s.to_csv()).unwrap();
    path
}

/// Writes `per_class` spectra of each mineral into `<root>/<CLASS>/`.
pub fn write_mineral_dirs(root: &Path, per_class: usize, rng: &mut StdRng) {
    for class in MINERALS {
        for k in 0..per_class {
            let s = mineral_spectrum(class, &format!("{}-{k:02}", class.to_lowercase()), rng);
            write_spectrum(&root.join(class), &s);
        }
    }
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spectraclass"));
    cmd.env_remove("SPECTRACLASS_RULES");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn spectraclass")
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// A membership CSV for a grid, in the batch output layout.
pub fn grid_csv(topology: &str, rows: usize, cols: usize, classes: &[&str], values: &[Vec<f64>]) -> String {
    let mut out = format!("# topology: {topology}\n# rows: {rows}\n# cols: {cols}\n");
    out.push_str("id,x,y,label,confidence");
    for c in classes {
        let _ = write!(out, ",mu_{c}");
    }
    out.push_str(",error\n");
    for (i, v) in values.iter().enumerate() {
        let _ = write!(out, "s{i},,,-,0");
        for x in v {
            let _ = write!(out, ",{x}");
        }
        out.push_str(",\n");
    }
    out
}
