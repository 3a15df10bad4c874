//! Evaluating a rule base against spectra: per-class memberships, hard
//! labels with an unknown fallback, and the parallel batch driver.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::fmt::sig6;
use crate::fuzzy::{FuzzyError, MembershipFn};
use crate::rulebase::RuleBase;
use crate::spectrum::{self, Spectrum, SpectrumError, SpectrumFormat};

/// Label written for spectra that reach no class.
pub const UNK: &str = "UNK";

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("membership vector has no classes")]
    NoClasses,
    #[error("class {class}: ion `{ion}` is not declared")]
    UnknownIon { class: String, ion: String },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Per-class membership values for one spectrum, in rule-base order.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVector {
    values: Vec<(String, f64)>,
    unk: f64,
}

impl MembershipVector {
    /// Builds a vector and derives the unknown membership as the
    /// complement of the largest class membership.
    pub fn new(values: Vec<(String, f64)>) -> Result<Self, ClassifyError> {
        for &(_, v) in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(FuzzyError::DomainError(v).into());
            }
        }
        let max = values.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        Ok(Self { values, unk: 1.0 - max })
    }

    pub fn values(&self) -> &[(String, f64)] {
        &self.values
    }

    pub fn get(&self, code: &str) -> Option<f64> {
        self.values.iter().find(|(c, _)| c == code).map(|(_, v)| *v)
    }

    pub fn unk(&self) -> f64 {
        self.unk
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest membership; ties go to the earliest class.
    pub fn argmax(&self) -> Option<(&str, f64)> {
        argmax(self.values.iter().map(|(c, v)| (c.as_str(), *v)))
    }

    pub fn max(&self) -> f64 {
        self.argmax().map_or(0.0, |(_, v)| v)
    }
}

/// First maximal entry of `(code, value)` pairs.
pub(crate) fn argmax<'a, I>(items: I) -> Option<(&'a str, f64)>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut best: Option<(&str, f64)> = None;
    for (code, v) in items {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((code, v)),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Class(String),
    Unknown,
}

impl Label {
    pub fn as_str(&self) -> &str {
        match self {
            Label::Class(c) => c,
            Label::Unknown => UNK,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Label::Unknown)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: Label,
    /// Winning class membership, or the unknown membership for [`Label::Unknown`].
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardenOptions {
    pub nu: f64,
    /// When set, a spectrum with two or more class memberships at or above
    /// this value is labelled unknown instead of taking the argmax. Off by
    /// default.
    pub ambiguity_threshold: Option<f64>,
}

impl HardenOptions {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            ambiguity_threshold: None,
        }
    }
}

/// Thresholded argmax: the best class when its membership reaches `nu`,
/// otherwise unknown.
pub fn harden(mv: &MembershipVector, nu: f64) -> Result<Classification, ClassifyError> {
    harden_with(mv, &HardenOptions::new(nu))
}

pub fn harden_with(mv: &MembershipVector, opts: &HardenOptions) -> Result<Classification, ClassifyError> {
    let (code, best) = mv.argmax().ok_or(ClassifyError::NoClasses)?;
    let ambiguous = opts
        .ambiguity_threshold
        .is_some_and(|t| mv.values.iter().filter(|(_, v)| *v >= t).count() >= 2);
    if best >= opts.nu && !ambiguous {
        Ok(Classification {
            label: Label::Class(code.to_string()),
            confidence: best,
        })
    } else {
        Ok(Classification {
            label: Label::Unknown,
            confidence: mv.unk,
        })
    }
}

struct CompiledTerm<'a> {
    name: &'a str,
    mz: f64,
    membership: MembershipFn,
}

/// A rule base with ion masses resolved, ready to evaluate many spectra.
pub struct Classifier<'a> {
    rb: &'a RuleBase,
    classes: Vec<Vec<CompiledTerm<'a>>>,
    excluded: Vec<spectrum::IonTarget>,
}

impl<'a> Classifier<'a> {
    pub fn new(rb: &'a RuleBase) -> Result<Self, ClassifyError> {
        let classes = rb
            .classes
            .iter()
            .map(|class| {
                class
                    .terms
                    .iter()
                    .map(|t| {
                        let ion = rb.ion(&t.ion).ok_or_else(|| ClassifyError::UnknownIon {
                            class: class.code.clone(),
                            ion: t.ion.clone(),
                        })?;
                        Ok(CompiledTerm {
                            name: &t.name,
                            mz: ion.mz,
                            membership: t.membership,
                        })
                    })
                    .collect::<Result<Vec<_>, ClassifyError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            rb,
            classes,
            excluded: rb.excluded_ions(),
        })
    }

    pub fn rulebase(&self) -> &RuleBase {
        self.rb
    }

    /// Memberships of an already-normalized spectrum.
    pub fn memberships(&self, s: &Spectrum) -> Result<MembershipVector, ClassifyError> {
        let eps = self.rb.options.epsilon;
        let mut values = Vec::with_capacity(self.classes.len());
        for (class, terms) in self.rb.classes.iter().zip(&self.classes) {
            let truth: Vec<f64> = terms
                .iter()
                .map(|t| t.membership.eval(spectrum::peak_abundance_at(s, t.mz, eps)))
                .collect();
            let lookup = |name: &str| terms.iter().position(|t| t.name == name).map(|i| truth[i]);
            values.push((class.code.clone(), class.expr.eval_with(&lookup)?));
        }
        MembershipVector::new(values)
    }

    pub fn normalize(&self, s: &Spectrum) -> Result<Spectrum, ClassifyError> {
        Ok(spectrum::normalize(s, &self.excluded, self.rb.options.epsilon)?)
    }

    /// Normalizes, evaluates and hardens one raw spectrum.
    pub fn classify(
        &self,
        s: &Spectrum,
        opts: &HardenOptions,
    ) -> Result<(MembershipVector, Classification), ClassifyError> {
        let normalized = self.normalize(s)?;
        let mv = self.memberships(&normalized)?;
        let cls = harden_with(&mv, opts)?;
        Ok((mv, cls))
    }
}

/// Memberships of a normalized spectrum under `rb`.
pub fn memberships(s: &Spectrum, rb: &RuleBase) -> Result<MembershipVector, ClassifyError> {
    Classifier::new(rb)?.memberships(s)
}

/// Where a batch item comes from.
#[derive(Debug, Clone)]
pub enum SpectrumSource {
    /// Read from disk; format chosen from the extension, id defaults to
    /// the path as given.
    File(PathBuf),
    Text {
        id: String,
        text: String,
        format: SpectrumFormat,
    },
}

impl SpectrumSource {
    pub fn default_id(&self) -> String {
        match self {
            SpectrumSource::File(p) => p.display().to_string(),
            SpectrumSource::Text { id, .. } => id.clone(),
        }
    }

    pub fn load(&self) -> Result<Spectrum, SpectrumError> {
        match self {
            SpectrumSource::File(path) => {
                let file = File::open(path).map_err(|e| SpectrumError::Io(format!("{}: {e}", path.display())))?;
                let format = SpectrumFormat::from_extension(path.extension().and_then(|e| e.to_str()));
                spectrum::parse_spectrum(BufReader::new(file), format, &self.default_id())
            }
            SpectrumSource::Text { id, text, format } => spectrum::parse_spectrum_str(text, *format, id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub spectrum_id: String,
    pub position: Option<(f64, f64)>,
    pub membership: MembershipVector,
    pub classification: Classification,
}

/// One batch result; failures are kept in place rather than aborting.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub source: String,
    pub outcome: Result<Classified, String>,
}

impl BatchRecord {
    pub fn id(&self) -> &str {
        match &self.outcome {
            Ok(c) => &c.spectrum_id,
            Err(_) => &self.source,
        }
    }
}

/// Classifies every source on `workers` threads. Output order follows
/// input order; per-item failures become error records.
pub fn classify_batch(
    sources: &[SpectrumSource],
    rb: &RuleBase,
    workers: usize,
    opts: &HardenOptions,
) -> Result<Vec<BatchRecord>, ClassifyError> {
    if workers == 0 {
        return Err(ClassifyError::NoWorkers);
    }
    let classifier = Classifier::new(rb)?;
    let run_one = |src: &SpectrumSource| {
        let outcome = src
            .load()
            .map_err(ClassifyError::from)
            .and_then(|s| {
                let (membership, classification) = classifier.classify(&s, opts)?;
                Ok(Classified {
                    spectrum_id: s.id().to_string(),
                    position: s.position(),
                    membership,
                    classification,
                })
            })
            .map_err(|e| e.to_string());
        BatchRecord {
            source: src.default_id(),
            outcome,
        }
    };
    if workers == 1 {
        return Ok(sources.iter().map(run_one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ClassifyError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| sources.par_iter().map(run_one).collect()))
}

/// Header row of the batch CSV for the given class codes.
pub fn batch_csv_header(class_codes: &[&str]) -> Vec<String> {
    let mut header: Vec<String> = ["id", "x", "y", "label", "confidence"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(class_codes.iter().map(|c| format!("mu_{c}")));
    header.push("error".into());
    header
}

/// Writes batch results as CSV: `id,x,y,label,confidence,mu_<CLASS>...,error`.
/// Failed items carry label `ERROR` and the message in the last column.
pub fn write_batch_csv<W: Write>(
    out: W,
    class_codes: &[&str],
    records: &[BatchRecord],
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(batch_csv_header(class_codes))?;
    for rec in records {
        let mut row = vec![rec.id().to_string()];
        match &rec.outcome {
            Ok(c) => {
                let (x, y) = c
                    .position
                    .map_or((String::new(), String::new()), |(x, y)| (sig6(x), sig6(y)));
                row.extend([x, y, c.classification.label.to_string(), sig6(c.classification.confidence)]);
                for code in class_codes {
                    row.push(c.membership.get(code).map(sig6).unwrap_or_default());
                }
                row.push(String::new());
            }
            Err(msg) => {
                row.extend([String::new(), String::new(), "ERROR".into(), String::new()]);
                row.extend(class_codes.iter().map(|_| String::new()));
                row.push(msg.clone());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()
}
