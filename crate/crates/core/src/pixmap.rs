//! Binary portable pixmap (P6) output for classification and membership
//! maps, one pixel per spot.

use std::collections::BTreeMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::classify::Label;
use crate::spatial::{ClassificationMap, SampleGrid};

pub type Rgb = [u8; 3];

pub const UNKNOWN_COLOR: Rgb = [0, 0, 0];

#[derive(Debug, Error, PartialEq)]
pub enum PaletteError {
    #[error("palette line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Class code to color. Unknown spots, and classes missing from the
/// palette, render black.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Palette {
    colors: BTreeMap<String, Rgb>,
}

impl Palette {
    /// Colors for the built-in basalt classes.
    pub fn basalt() -> Self {
        let mut colors = BTreeMap::new();
        colors.insert("ILM".to_string(), [128, 128, 128]);
        colors.insert("AGT".to_string(), [34, 139, 34]);
        colors.insert("PLG".to_string(), [240, 240, 240]);
        colors.insert("OLV".to_string(), [218, 165, 32]);
        Self { colors }
    }

    /// Parses `CODE R G B` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PaletteError> {
        let mut colors = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| PaletteError::Parse { line: idx + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err(format!("expected `CODE R G B`, got {} fields", fields.len())));
            }
            let mut rgb = [0u8; 3];
            for (slot, f) in rgb.iter_mut().zip(&fields[1..]) {
                *slot = f.parse().map_err(|_| err(format!("bad channel value `{f}`")))?;
            }
            colors.insert(fields[0].to_string(), rgb);
        }
        Ok(Self { colors })
    }

    pub fn insert(&mut self, code: impl Into<String>, rgb: Rgb) {
        self.colors.insert(code.into(), rgb);
    }

    pub fn color(&self, label: &Label) -> Rgb {
        match label {
            Label::Unknown => UNKNOWN_COLOR,
            Label::Class(c) => self.colors.get(c).copied().unwrap_or(UNKNOWN_COLOR),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Image {
    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        out.write_all(&bytes)
    }

    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.pixels.len() * 3 + 16);
        self.write_ppm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

pub fn render_labels(map: &ClassificationMap, palette: &Palette) -> Image {
    Image {
        width: map.cols,
        height: map.rows,
        pixels: map.spots.iter().map(|s| palette.color(&s.label)).collect(),
    }
}

/// Grayscale map of one class membership, black = 0, white = 1.
pub fn render_membership(grid: &SampleGrid, class: &str) -> Image {
    let pixels = (0..grid.len())
        .map(|i| {
            let v = grid.spot(i).and_then(|mv| mv.get(class)).unwrap_or(0.0);
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g]
        })
        .collect();
    Image {
        width: grid.cols(),
        height: grid.rows(),
        pixels,
    }
}
