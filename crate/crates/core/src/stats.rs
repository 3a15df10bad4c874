//! Ensemble peak statistics.
//!
//! Spectra are reduced to consolidated peak lists, peaks from all spectra
//! are grouped into m/z bins, and each bin accumulates count, sum, sum of
//! squares, minimum and maximum abundance. Comparing a class database with
//! an ensemble database surfaces candidate key ions for new rules.

use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::fmt::sig6;
use crate::spectrum::{Peak, Spectrum};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot build statistics from an empty ensemble")]
    EmptyEnsemble,
    #[error("databases are incompatible: {0}")]
    IncompatibleDBs(String),
}

/// Local maxima of `s`, with maxima closer than `eps` merged into the
/// single most abundant one. Zero-abundance points never count as peaks.
///
/// A point is a local maximum when no point adjacent to it, and within
/// `eps` of it, is more abundant.
pub fn peak_list(s: &Spectrum, eps: f64) -> Vec<Peak> {
    let pts = s.points();
    let mut maxima: Vec<Peak> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if p.abundance <= 0.0 {
            continue;
        }
        let left_ok = i == 0 || {
            let q = pts[i - 1];
            p.mz - q.mz > eps || q.abundance <= p.abundance
        };
        let right_ok = i + 1 == pts.len() || {
            let q = pts[i + 1];
            q.mz - p.mz > eps || q.abundance <= p.abundance
        };
        if left_ok && right_ok {
            maxima.push(*p);
        }
    }

    let mut out: Vec<Peak> = Vec::with_capacity(maxima.len());
    let mut last_mz = f64::NEG_INFINITY;
    for p in maxima {
        match out.last_mut() {
            Some(kept) if p.mz - last_mz <= eps => {
                if p.abundance > kept.abundance {
                    *kept = p;
                }
            }
            _ => out.push(p),
        }
        last_mz = p.mz;
    }
    out
}

/// Accumulated statistics for one m/z bin.
#[derive(Debug, Clone, PartialEq)]
pub struct StatBin {
    /// Mean m/z of the member peaks.
    pub phi: f64,
    /// Number of spectra with a peak in the bin.
    pub c: u64,
    pub a_tot: f64,
    pub a_tot2: f64,
    pub a_max: f64,
    pub a_min: f64,
}

impl StatBin {
    pub fn mean(&self) -> f64 {
        self.a_tot / self.c as f64
    }

    /// Population variance of the member abundances.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.a_tot2 / self.c as f64 - m * m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatDB {
    pub bins: Vec<StatBin>,
    pub n_spectra: u64,
    pub epsilon: f64,
}

#[derive(Clone, Copy)]
struct Member {
    spectrum: usize,
    mz: f64,
    abundance: f64,
}

/// Builds the statistics database over `spectra`.
///
/// All consolidated peaks are sorted by m/z and swept once: a peak joins
/// the current bin unless it lies more than `eps` above the bin's running
/// mean m/z, in which case it opens a new bin. If one spectrum lands two
/// peaks in the same bin only the more abundant is kept.
pub fn build_statdb(spectra: &[Spectrum], eps: f64) -> Result<StatDB, StatsError> {
    if spectra.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    let mut stream: Vec<Member> = spectra
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            peak_list(s, eps).into_iter().map(move |p| Member {
                spectrum: i,
                mz: p.mz,
                abundance: p.abundance,
            })
        })
        .collect();
    stream.sort_by(|a, b| a.mz.total_cmp(&b.mz).then(b.abundance.total_cmp(&a.abundance)));

    let mut groups: Vec<Vec<Member>> = Vec::new();
    let (mut sum_mz, mut n) = (0.0, 0usize);
    for m in stream {
        let open_new = groups.is_empty() || m.mz - sum_mz / n as f64 > eps;
        if open_new {
            groups.push(Vec::new());
            sum_mz = 0.0;
            n = 0;
        }
        sum_mz += m.mz;
        n += 1;
        groups.last_mut().unwrap().push(m);
    }

    let bins = groups.into_iter().map(finish_bin).collect();
    Ok(StatDB {
        bins,
        n_spectra: spectra.len() as u64,
        epsilon: eps,
    })
}

fn finish_bin(members: Vec<Member>) -> StatBin {
    // members are in m/z order; keep each spectrum's largest peak
    let mut kept: Vec<Member> = Vec::with_capacity(members.len());
    for m in members {
        match kept.iter_mut().find(|k| k.spectrum == m.spectrum) {
            Some(k) if m.abundance > k.abundance => *k = m,
            Some(_) => {}
            None => kept.push(m),
        }
    }
    let c = kept.len() as u64;
    let mut bin = StatBin {
        phi: 0.0,
        c,
        a_tot: 0.0,
        a_tot2: 0.0,
        a_max: f64::NEG_INFINITY,
        a_min: f64::INFINITY,
    };
    let mut sum_mz = 0.0;
    for m in &kept {
        sum_mz += m.mz;
        bin.a_tot += m.abundance;
        bin.a_tot2 += m.abundance * m.abundance;
        bin.a_max = bin.a_max.max(m.abundance);
        bin.a_min = bin.a_min.min(m.abundance);
    }
    bin.phi = sum_mz / c as f64;
    bin
}

impl StatDB {
    /// Bins present in every spectrum of the database.
    pub fn full_presence_bins(&self) -> Vec<&StatBin> {
        self.bins.iter().filter(|b| b.c == self.n_spectra).collect()
    }

    /// Nearest bin whose center lies within `epsilon` of `phi`.
    pub fn find(&self, phi: f64) -> Option<&StatBin> {
        let i = self.bins.partition_point(|b| b.phi < phi);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| self.bins.get(j))
            .filter(|b| (b.phi - phi).abs() <= self.epsilon)
            .min_by(|a, b| (a.phi - phi).abs().total_cmp(&(b.phi - phi).abs()))
    }

    /// Combines two databases built with the same epsilon from disjoint
    /// sets of spectra. Bins whose centers lie within epsilon of each
    /// other merge; the merged center is the count-weighted mean.
    pub fn merge(&self, other: &StatDB) -> Result<StatDB, StatsError> {
        if self.epsilon != other.epsilon {
            return Err(StatsError::IncompatibleDBs(format!(
                "epsilon {} vs {}",
                self.epsilon, other.epsilon
            )));
        }
        let mut all: Vec<StatBin> = self.bins.iter().chain(&other.bins).cloned().collect();
        all.sort_by(|a, b| a.phi.total_cmp(&b.phi));
        let mut bins: Vec<StatBin> = Vec::with_capacity(all.len());
        for b in all {
            match bins.last_mut() {
                Some(last) if b.phi - last.phi <= self.epsilon => {
                    let c = last.c + b.c;
                    last.phi = (last.phi * last.c as f64 + b.phi * b.c as f64) / c as f64;
                    last.c = c;
                    last.a_tot += b.a_tot;
                    last.a_tot2 += b.a_tot2;
                    last.a_max = last.a_max.max(b.a_max);
                    last.a_min = last.a_min.min(b.a_min);
                }
                _ => bins.push(b),
            }
        }
        Ok(StatDB {
            bins,
            n_spectra: self.n_spectra + other.n_spectra,
            epsilon: self.epsilon,
        })
    }
}

/// Bins with a peak in every spectrum.
pub fn full_presence_bins(db: &StatDB) -> Vec<&StatBin> {
    db.full_presence_bins()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMode {
    /// Mean over the spectra that have the peak.
    PresentMean,
    /// Mean over all spectra, counting absent peaks as zero.
    ZeroInclusiveMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    KeyCandidate,
    LowCandidate,
    Unique,
    PartialPresence,
    None,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::KeyCandidate => "key-candidate",
            Flag::LowCandidate => "low-candidate",
            Flag::Unique => "unique",
            Flag::PartialPresence => "partial-presence",
            Flag::None => "-",
        }
    }
}

/// Ratio at or above which a full-presence bin is flagged as a key
/// candidate.
pub const KEY_RATIO: f64 = 2.0;
/// Ratio at or below which a full-presence bin is flagged as a low
/// candidate.
pub const LOW_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub phi: f64,
    pub class_mean: f64,
    /// `None` when no ensemble bin matches.
    pub ensemble_mean: Option<f64>,
    /// `+inf` for bins unique to the class.
    pub ratio: f64,
    pub count: u64,
    pub n_spectra: u64,
    pub flag: Flag,
}

fn mode_mean(bin: &StatBin, n_spectra: u64, mode: MeanMode) -> f64 {
    match mode {
        MeanMode::PresentMean => bin.mean(),
        MeanMode::ZeroInclusiveMean => bin.a_tot / n_spectra as f64,
    }
}

/// Compares every class bin with the matching ensemble bin.
///
/// Full-presence class bins get a ratio of class mean to ensemble mean
/// and a key/low flag; class bins without an ensemble match get an
/// infinite ratio and the `unique` flag; the remaining bins, present in
/// only part of the class, are flagged `partial-presence`.
pub fn class_vs_ensemble_report(
    class_db: &StatDB,
    ensemble_db: &StatDB,
    mode: MeanMode,
) -> Result<Vec<ReportRow>, StatsError> {
    if class_db.epsilon != ensemble_db.epsilon {
        return Err(StatsError::IncompatibleDBs(format!(
            "epsilon {} vs {}",
            class_db.epsilon, ensemble_db.epsilon
        )));
    }
    let rows = class_db
        .bins
        .iter()
        .map(|bin| {
            let class_mean = mode_mean(bin, class_db.n_spectra, mode);
            let matched = ensemble_db.find(bin.phi);
            let ensemble_mean = matched.map(|e| mode_mean(e, ensemble_db.n_spectra, mode));
            let ratio = match ensemble_mean {
                Some(m) if m > 0.0 => class_mean / m,
                _ => f64::INFINITY,
            };
            let flag = if matched.is_none() {
                Flag::Unique
            } else if bin.c < class_db.n_spectra {
                Flag::PartialPresence
            } else if ratio >= KEY_RATIO {
                Flag::KeyCandidate
            } else if ratio <= LOW_RATIO {
                Flag::LowCandidate
            } else {
                Flag::None
            };
            ReportRow {
                phi: bin.phi,
                class_mean,
                ensemble_mean,
                ratio,
                count: bin.c,
                n_spectra: class_db.n_spectra,
                flag,
            }
        })
        .collect();
    Ok(rows)
}

/// Writes `phi,class_mean,ensemble_mean,ratio,count,n_spectra,flag`.
pub fn write_report_csv<W: Write>(out: W, rows: &[ReportRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi", "class_mean", "ensemble_mean", "ratio", "count", "n_spectra", "flag"])?;
    for r in rows {
        w.write_record([
            sig6(r.phi),
            sig6(r.class_mean),
            r.ensemble_mean.map(sig6).unwrap_or_default(),
            sig6(r.ratio),
            r.count.to_string(),
            r.n_spectra.to_string(),
            r.flag.as_str().to_string(),
        ])?;
    }
    w.flush()
}

/// Terminal bar chart of the ratio per bin.
pub fn render_histogram(title: &str, rows: &[ReportRow], width: usize) -> String {
    let finite_max = rows
        .iter()
        .map(|r| r.ratio)
        .filter(|r| r.is_finite())
        .fold(1.0, f64::max);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    for r in rows {
        let len = if r.ratio.is_finite() {
            ((r.ratio / finite_max) * width as f64).round() as usize
        } else {
            width
        };
        let _ = writeln!(
            out,
            "{:>10} | {:<width$} {} {}",
            sig6(r.phi),
            "#".repeat(len),
            sig6(r.ratio),
            r.flag.as_str(),
        );
    }
    out
}
