//! Peak-list spectra: ingestion, rescaling to relative abundance and
//! windowed peak lookup around a target ion.

use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

/// Full scale of the relative-abundance axis after normalization.
pub const FULL_SCALE: f64 = 100.0;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("spectrum contains no data points")]
    EmptySpectrum,
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: {message}")]
    DomainError { line: usize, message: String },
    #[error("cannot normalize: no non-excluded point with positive abundance")]
    CannotNormalize,
    #[error("invalid spectrum: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One centroided peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub mz: f64,
    pub abundance: f64,
}

impl Peak {
    pub fn new(mz: f64, abundance: f64) -> Self {
        Self { mz, abundance }
    }
}

/// A target ion: chemical symbol plus nominal m/z.
#[derive(Debug, Clone, PartialEq)]
pub struct IonTarget {
    pub symbol: String,
    pub mz: f64,
}

impl IonTarget {
    pub fn new(symbol: impl Into<String>, mz: f64) -> Self {
        Self {
            symbol: symbol.into(),
            mz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumFormat {
    /// `mz,abundance` per line.
    Csv,
    /// Two whitespace-separated columns.
    MspLike,
}

impl SpectrumFormat {
    /// Picks a format from a file extension; anything other than `.csv`
    /// is treated as whitespace-separated.
    pub fn from_extension(ext: Option<&str>) -> Self {
        match ext.map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "csv" => SpectrumFormat::Csv,
            _ => SpectrumFormat::MspLike,
        }
    }
}

/// Relative abundance as a function of m/z for one desorption spot.
///
/// Points are strictly ascending in m/z with non-negative abundances and
/// there is always at least one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    id: String,
    position: Option<(f64, f64)>,
    points: Vec<Peak>,
}

impl Spectrum {
    /// Builds a spectrum from unordered points. Rows sharing an m/z are
    /// merged keeping the larger abundance.
    pub fn new(id: impl Into<String>, mut points: Vec<Peak>) -> Result<Self, SpectrumError> {
        if points.is_empty() {
            return Err(SpectrumError::EmptySpectrum);
        }
        for p in &points {
            if !(p.mz.is_finite() && p.mz > 0.0) {
                return Err(SpectrumError::Invalid(format!("m/z must be positive, got {}", p.mz)));
            }
            if !(p.abundance.is_finite() && p.abundance >= 0.0) {
                return Err(SpectrumError::Invalid(format!(
                    "abundance must be non-negative, got {}",
                    p.abundance
                )));
            }
        }
        points.sort_by(|a, b| a.mz.total_cmp(&b.mz));
        points.dedup_by(|later, kept| {
            if later.mz == kept.mz {
                kept.abundance = kept.abundance.max(later.abundance);
                true
            } else {
                false
            }
        });
        Ok(Self {
            id: id.into(),
            position: None,
            points,
        })
    }

    pub fn with_position(mut self, x: f64, y: f64) -> Self {
        self.position = Some((x, y));
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn position(&self) -> Option<(f64, f64)> {
        self.position
    }

    pub fn points(&self) -> &[Peak] {
        &self.points
    }

    pub fn max_abundance(&self) -> f64 {
        self.points.iter().map(|p| p.abundance).fold(0.0, f64::max)
    }

    /// Points whose m/z lies in the closed interval `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> &[Peak] {
        let start = self.points.partition_point(|p| p.mz < lo);
        let end = self.points.partition_point(|p| p.mz <= hi);
        if start >= end {
            &[]
        } else {
            &self.points[start..end]
        }
    }

    /// Serializes to the CSV peak-list format, including `id` and
    /// position metadata comments.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# id: {}", self.id);
        if let Some((x, y)) = self.position {
            let _ = writeln!(out, "# x: {x}");
            let _ = writeln!(out, "# y: {y}");
        }
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.mz, p.abundance);
        }
        out
    }
}

/// Parses a peak list.
///
/// Blank lines and lines starting with `#` are skipped. Comment lines of
/// the form `# id: NAME`, `# x: F` and `# y: F` set the spectrum label and
/// spot position. The returned spectrum's id defaults to `default_id`.
pub fn parse_spectrum<R: BufRead>(
    source: R,
    format: SpectrumFormat,
    default_id: &str,
) -> Result<Spectrum, SpectrumError> {
    let mut points = Vec::new();
    let mut id = default_id.to_string();
    let (mut x, mut y) = (None, None);

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| SpectrumError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "id" if !value.is_empty() => id = value.to_string(),
                    "x" => x = Some(parse_number(value, lineno)?),
                    "y" => y = Some(parse_number(value, lineno)?),
                    _ => {}
                }
            }
            continue;
        }

        let fields: Vec<&str> = match format {
            SpectrumFormat::Csv => trimmed.split(',').map(str::trim).collect(),
            SpectrumFormat::MspLike => trimmed.split_whitespace().collect(),
        };
        if fields.len() != 2 {
            return Err(SpectrumError::ParseError {
                line: lineno,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let mz = parse_number(fields[0], lineno)?;
        let abundance = parse_number(fields[1], lineno)?;
        if mz <= 0.0 {
            return Err(SpectrumError::DomainError {
                line: lineno,
                message: format!("m/z must be positive, got {mz}"),
            });
        }
        if abundance < 0.0 {
            return Err(SpectrumError::DomainError {
                line: lineno,
                message: format!("negative abundance {abundance}"),
            });
        }
        points.push(Peak::new(mz, abundance));
    }

    let mut spectrum = Spectrum::new(id, points)?;
    if let (Some(x), Some(y)) = (x, y) {
        spectrum = spectrum.with_position(x, y);
    }
    Ok(spectrum)
}

/// Convenience wrapper over [`parse_spectrum`] for in-memory text.
pub fn parse_spectrum_str(
    text: &str,
    format: SpectrumFormat,
    default_id: &str,
) -> Result<Spectrum, SpectrumError> {
    parse_spectrum(text.as_bytes(), format, default_id)
}

fn parse_number(field: &str, line: usize) -> Result<f64, SpectrumError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(SpectrumError::ParseError {
            line,
            message: format!("not a number: {field:?}"),
        }),
    }
}

fn is_excluded(mz: f64, excluded: &[IonTarget], eps: f64) -> bool {
    excluded.iter().any(|ion| (mz - ion.mz).abs() <= eps)
}

/// Rescales so the largest abundance among non-excluded points is
/// [`FULL_SCALE`]. Excluded points (within `eps` of an excluded ion) are
/// scaled by the same factor and may end up above full scale.
pub fn normalize(s: &Spectrum, excluded: &[IonTarget], eps: f64) -> Result<Spectrum, SpectrumError> {
    let reference = s
        .points
        .iter()
        .filter(|p| !is_excluded(p.mz, excluded, eps))
        .map(|p| p.abundance)
        .fold(0.0, f64::max);
    if reference <= 0.0 {
        return Err(SpectrumError::CannotNormalize);
    }
    if reference == FULL_SCALE {
        return Ok(s.clone());
    }
    let factor = FULL_SCALE / reference;
    let points = s
        .points
        .iter()
        .map(|p| Peak::new(p.mz, p.abundance * factor))
        .collect();
    Ok(Spectrum {
        id: s.id.clone(),
        position: s.position,
        points,
    })
}

/// Largest abundance within `[chi.mz - eps, chi.mz + eps]`, or 0 when the
/// window holds no points.
pub fn peak_abundance(s: &Spectrum, chi: &IonTarget, eps: f64) -> f64 {
    peak_abundance_at(s, chi.mz, eps)
}

pub(crate) fn peak_abundance_at(s: &Spectrum, mz: f64, eps: f64) -> f64 {
    s.window(mz - eps, mz + eps)
        .iter()
        .map(|p| p.abundance)
        .fold(0.0, f64::max)
}
