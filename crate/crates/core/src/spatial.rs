//! Sample grids and neighbor-based reclassification of spots that fall
//! below the membership threshold.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::classify::{argmax, harden, Label, MembershipVector};
use crate::fmt::sig6;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("spot index {index} out of range for a grid of {len} spots")]
    BadIndex { index: usize, len: usize },
    #[error("grid is {rows}x{cols} but {found} spots were supplied")]
    SizeMismatch { rows: usize, cols: usize, found: usize },
    #[error("spot {0} has a different class set from spot 0")]
    ClassMismatch(usize),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("grid has no spots")]
    Empty,
    #[error("missing `# {0}:` header")]
    MissingHeader(&'static str),
    #[error("grid input: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Rectangular,
    /// Closest-pack layout; odd rows are shifted half a spot to the right.
    Hexagonal,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Rectangular => "rectangular",
            Topology::Hexagonal => "hexagonal",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = SpatialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangular" | "rect" => Ok(Topology::Rectangular),
            "hexagonal" | "hex" => Ok(Topology::Hexagonal),
            other => Err(SpatialError::Format(format!("unknown topology `{other}`"))),
        }
    }
}

const MOORE: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
const HEX_EVEN_ROW: [(isize, isize); 6] = [(-1, -1), (-1, 0), (0, -1), (0, 1), (1, -1), (1, 0)];
const HEX_ODD_ROW: [(isize, isize); 6] = [(-1, 0), (-1, 1), (0, -1), (0, 1), (1, 0), (1, 1)];

/// Spots laid out row-major on a rectangular or hexagonal lattice, each
/// with a membership vector over the same classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    topology: Topology,
    rows: usize,
    cols: usize,
    spacing: f64,
    classes: Vec<String>,
    spots: Vec<MembershipVector>,
}

impl SampleGrid {
    pub fn new(
        topology: Topology,
        rows: usize,
        cols: usize,
        spots: Vec<MembershipVector>,
    ) -> Result<Self, SpatialError> {
        if rows * cols != spots.len() {
            return Err(SpatialError::SizeMismatch { rows, cols, found: spots.len() });
        }
        let first = spots.first().ok_or(SpatialError::Empty)?;
        let classes: Vec<String> = first.values().iter().map(|(c, _)| c.clone()).collect();
        for (i, s) in spots.iter().enumerate() {
            let same = s.values().len() == classes.len()
                && s.values().iter().zip(&classes).all(|((c, _), k)| c == k);
            if !same {
                return Err(SpatialError::ClassMismatch(i));
            }
        }
        Ok(Self {
            topology,
            rows,
            cols,
            spacing: 1.0,
            classes,
            spots,
        })
    }

    /// Sets the center-to-center spot distance used for output positions.
    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.spots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spots.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn spot(&self, i: usize) -> Option<&MembershipVector> {
        self.spots.get(i)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn row_col(&self, i: usize) -> (usize, usize) {
        (i / self.cols, i % self.cols)
    }

    /// Cartesian position of spot `i` in spacing units.
    pub fn position(&self, i: usize) -> (f64, f64) {
        let (r, c) = self.row_col(i);
        let s = self.spacing;
        match self.topology {
            Topology::Rectangular => (c as f64 * s, r as f64 * s),
            Topology::Hexagonal => {
                let shift = if r % 2 == 1 { 0.5 * s } else { 0.0 };
                (c as f64 * s + shift, r as f64 * s * 3f64.sqrt() / 2.0)
            }
        }
    }

    fn check(&self, i: usize) -> Result<(), SpatialError> {
        if i < self.spots.len() {
            Ok(())
        } else {
            Err(SpatialError::BadIndex { index: i, len: self.spots.len() })
        }
    }

    /// In-bounds neighbors of spot `i` in ascending index order: eight on
    /// a rectangular grid, six on a hexagonal one, fewer at the edges.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>, SpatialError> {
        self.check(i)?;
        let (r, c) = self.row_col(i);
        let offsets: &[(isize, isize)] = match self.topology {
            Topology::Rectangular => &MOORE,
            Topology::Hexagonal if r % 2 == 0 => &HEX_EVEN_ROW,
            Topology::Hexagonal => &HEX_ODD_ROW,
        };
        let mut out: Vec<usize> = offsets
            .iter()
            .filter_map(|&(dr, dc)| {
                let nr = r.checked_add_signed(dr)?;
                let nc = c.checked_add_signed(dc)?;
                (nr < self.rows && nc < self.cols).then(|| self.index(nr, nc))
            })
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    fn class_pos(&self, gamma: &str) -> Result<usize, SpatialError> {
        self.classes
            .iter()
            .position(|c| c == gamma)
            .ok_or_else(|| SpatialError::UnknownClass(gamma.to_string()))
    }

    fn smoothed_at(&self, i: usize, k: usize, neighbors: &[usize]) -> f64 {
        let own = self.spots[i].values()[k].1;
        if neighbors.is_empty() {
            return own;
        }
        let sum: f64 = neighbors.iter().map(|&j| self.spots[j].values()[k].1).sum();
        own + sum / neighbors.len() as f64
    }

    /// Spot membership plus the mean membership of its neighbors, always
    /// read from the raw (unsmoothed) values. Lies in `[0, 2]`. A spot
    /// without neighbors keeps its own value.
    pub fn smoothed_membership(&self, i: usize, gamma: &str) -> Result<f64, SpatialError> {
        let k = self.class_pos(gamma)?;
        let nb = self.neighbors(i)?;
        Ok(self.smoothed_at(i, k, &nb))
    }

    /// Smoothed memberships of every class at spot `i`.
    pub fn smoothed_vector(&self, i: usize) -> Result<Vec<(String, f64)>, SpatialError> {
        let nb = self.neighbors(i)?;
        Ok((0..self.classes.len())
            .map(|k| (self.classes[k].clone(), self.smoothed_at(i, k, &nb)))
            .collect())
    }

    /// Hard labels without neighbor information.
    pub fn hard_map(&self, nu: f64) -> ClassificationMap {
        let spots = self
            .spots
            .iter()
            .map(|mv| {
                let c = harden(mv, nu).expect("grid spots have classes");
                MapSpot {
                    label: c.label,
                    confidence: c.confidence,
                    neighbor_assigned: false,
                }
            })
            .collect();
        self.map_with(spots)
    }

    /// Hard labels where spots below `nu` take the argmax of their
    /// smoothed memberships. Confident spots keep their own label. With
    /// `floor` set, a spot whose best smoothed membership is below it stays
    /// unknown.
    pub fn reclassify_map(&self, nu: f64, floor: Option<f64>) -> ClassificationMap {
        let spots = (0..self.spots.len())
            .map(|i| {
                let mv = &self.spots[i];
                let raw = harden(mv, nu).expect("grid spots have classes");
                if !raw.label.is_unknown() {
                    return MapSpot {
                        label: raw.label,
                        confidence: raw.confidence,
                        neighbor_assigned: false,
                    };
                }
                let smoothed = self.smoothed_vector(i).expect("index in range");
                let (code, best) = argmax(smoothed.iter().map(|(c, v)| (c.as_str(), *v)))
                    .expect("grid spots have classes");
                if floor.is_some_and(|f| best < f) {
                    return MapSpot {
                        label: Label::Unknown,
                        confidence: raw.confidence,
                        neighbor_assigned: false,
                    };
                }
                MapSpot {
                    label: Label::Class(code.to_string()),
                    confidence: best,
                    neighbor_assigned: true,
                }
            })
            .collect();
        self.map_with(spots)
    }

    fn map_with(&self, spots: Vec<MapSpot>) -> ClassificationMap {
        ClassificationMap {
            topology: self.topology,
            rows: self.rows,
            cols: self.cols,
            spacing: self.spacing,
            spots,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpot {
    pub label: Label,
    /// Winning membership; for neighbor-assigned spots the smoothed value,
    /// which may exceed 1.
    pub confidence: f64,
    pub neighbor_assigned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMap {
    pub topology: Topology,
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub spots: Vec<MapSpot>,
}

impl ClassificationMap {
    pub fn labels(&self) -> Vec<&Label> {
        self.spots.iter().map(|s| &s.label).collect()
    }

    pub fn unknown_count(&self) -> usize {
        self.spots.iter().filter(|s| s.label.is_unknown()).count()
    }

    fn position(&self, i: usize) -> (f64, f64) {
        let (r, c) = (i / self.cols, i % self.cols);
        let s = self.spacing;
        match self.topology {
            Topology::Rectangular => (c as f64 * s, r as f64 * s),
            Topology::Hexagonal => {
                let shift = if r % 2 == 1 { 0.5 * s } else { 0.0 };
                (c as f64 * s + shift, r as f64 * s * 3f64.sqrt() / 2.0)
            }
        }
    }

    /// Writes `x,y,label,confidence,neighbor_assigned`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "label", "confidence", "neighbor_assigned"])?;
        for (i, s) in self.spots.iter().enumerate() {
            let (x, y) = self.position(i);
            w.write_record([
                sig6(x),
                sig6(y),
                s.label.to_string(),
                sig6(s.confidence),
                s.neighbor_assigned.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Reads a grid from the batch-classification CSV annotated with
/// `# topology:`, `# rows:`, `# cols:` and optionally `# spacing:` header
/// comments. Records are taken in row-major order. `topology_override`
/// replaces (or supplies) the topology header.
pub fn read_grid_csv(text: &str, topology_override: Option<Topology>) -> Result<SampleGrid, SpatialError> {
    let (mut topology, mut rows, mut cols, mut spacing) = (None, None, None, 1.0);
    let mut body = String::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once(':') {
                let v = v.trim();
                let bad = |what: &str| SpatialError::Format(format!("bad {what} header `{v}`"));
                match k.trim() {
                    "topology" => topology = Some(v.parse::<Topology>()?),
                    "rows" => rows = Some(v.parse::<usize>().map_err(|_| bad("rows"))?),
                    "cols" => cols = Some(v.parse::<usize>().map_err(|_| bad("cols"))?),
                    "spacing" => spacing = v.parse::<f64>().map_err(|_| bad("spacing"))?,
                    _ => {}
                }
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        body.push_str(line);
        body.push('\n');
    }
    let topology = topology_override
        .or(topology)
        .ok_or(SpatialError::MissingHeader("topology"))?;
    let rows = rows.ok_or(SpatialError::MissingHeader("rows"))?;
    let cols = cols.ok_or(SpatialError::MissingHeader("cols"))?;

    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| SpatialError::Format(e.to_string()))?
        .clone();
    let mu_cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("mu_").map(|c| (i, c.to_string())))
        .collect();
    if mu_cols.is_empty() {
        return Err(SpatialError::Format("no mu_<CLASS> columns".into()));
    }
    let label_col = header.iter().position(|h| h == "label");

    let mut spots = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SpatialError::Format(e.to_string()))?;
        if label_col.and_then(|i| rec.get(i)) == Some("ERROR") {
            return Err(SpatialError::Format(format!("record {} is an error row", n + 1)));
        }
        let values = mu_cols
            .iter()
            .map(|(i, code)| {
                let field = rec.get(*i).unwrap_or("");
                field
                    .trim()
                    .parse::<f64>()
                    .map(|v| (code.clone(), v))
                    .map_err(|_| SpatialError::Format(format!("record {}: bad mu_{code} `{field}`", n + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mv = MembershipVector::new(values)
            .map_err(|e| SpatialError::Format(format!("record {}: {e}", n + 1)))?;
        spots.push(mv);
    }
    Ok(SampleGrid::new(topology, rows, cols, spots)?.with_spacing(spacing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mv(pairs: &[(&str, f64)]) -> MembershipVector {
        MembershipVector::new(pairs.iter().map(|&(c, v)| (c.to_string(), v)).collect()).unwrap()
    }

    fn uniform_grid(topology: Topology, rows: usize, cols: usize, v: f64) -> SampleGrid {
        SampleGrid::new(topology, rows, cols, (0..rows * cols).map(|_| mv(&[("A", v), ("B", 0.0)])).collect()).unwrap()
    }

    /// Enumerates offsets by brute force for the rectangular case.
    fn brute_rect(rows: usize, cols: usize, i: usize) -> Vec<usize> {
        let (r, c) = ((i / cols) as i64, (i % cols) as i64);
        let mut out = Vec::new();
        for rr in 0..rows as i64 {
            for cc in 0..cols as i64 {
                let d = (rr - r).abs().max((cc - c).abs());
                if d == 1 {
                    out.push(rr as usize * cols + cc as usize);
                }
            }
        }
        out
    }

    #[test]
    fn rectangular_neighbor_counts() {
        let g = uniform_grid(Topology::Rectangular, 3, 3, 0.0);
        assert_eq!(g.neighbors(4).unwrap().len(), 8);
        assert_eq!(g.neighbors(0).unwrap(), vec![1, 3, 4]);
        assert_eq!(g.neighbors(1).unwrap().len(), 5);
        assert_eq!(g.neighbors(9).unwrap_err(), SpatialError::BadIndex { index: 9, len: 9 });
        let g = uniform_grid(Topology::Rectangular, 4, 6, 0.0);
        for i in 0..g.len() {
            assert_eq!(g.neighbors(i).unwrap(), brute_rect(4, 6, i));
        }
    }

    #[test]
    fn hexagonal_neighbors() {
        let g = uniform_grid(Topology::Hexagonal, 4, 4, 0.0);
        // even row interior: (2,1)
        assert_eq!(g.neighbors(g.index(2, 1)).unwrap(), vec![4, 5, 8, 10, 12, 13]);
        // odd row interior: (1,1)
        assert_eq!(g.neighbors(g.index(1, 1)).unwrap(), vec![1, 2, 4, 6, 9, 10]);
        assert_eq!(g.neighbors(0).unwrap(), vec![1, 4]);
    }

    #[test]
    fn hexagonal_neighbors_are_equidistant() {
        let g = uniform_grid(Topology::Hexagonal, 5, 5, 0.0).with_spacing(30.0);
        for i in 0..g.len() {
            let (x, y) = g.position(i);
            for j in g.neighbors(i).unwrap() {
                let (u, v) = g.position(j);
                assert!(((x - u).hypot(y - v) - 30.0).abs() < 1e-9);
                assert!(g.neighbors(j).unwrap().contains(&i));
            }
        }
    }

    fn ring_grid(center: f64, ring: f64) -> SampleGrid {
        let spots = (0..9)
            .map(|i| if i == 4 { mv(&[("AGT", center), ("PLG", 0.1)]) } else { mv(&[("AGT", ring), ("PLG", 0.0)]) })
            .collect();
        SampleGrid::new(Topology::Rectangular, 3, 3, spots).unwrap()
    }

    #[test]
    fn smoothing_examples() {
        let g = ring_grid(0.3, 0.9);
        assert!((g.smoothed_membership(4, "AGT").unwrap() - 1.2).abs() < 1e-12);
        let z = uniform_grid(Topology::Rectangular, 3, 3, 0.0);
        assert_eq!(z.smoothed_membership(4, "A").unwrap(), 0.0);
        let mut spots: Vec<MembershipVector> = (0..9).map(|_| mv(&[("A", 0.0)])).collect();
        spots[0] = mv(&[("A", 0.3)]);
        for j in [1, 3, 4] {
            spots[j] = mv(&[("A", 0.6)]);
        }
        let g = SampleGrid::new(Topology::Rectangular, 3, 3, spots).unwrap();
        assert!((g.smoothed_membership(0, "A").unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(g.smoothed_membership(0, "Z").unwrap_err(), SpatialError::UnknownClass("Z".into()));
    }

    #[test]
    fn single_spot_falls_back_to_raw() {
        let g = SampleGrid::new(Topology::Rectangular, 1, 1, vec![mv(&[("A", 0.3)])]).unwrap();
        assert_eq!(g.smoothed_membership(0, "A").unwrap(), 0.3);
    }

    #[test]
    fn unknown_center_takes_ring_label() {
        let g = ring_grid(0.3, 0.9);
        let map = g.reclassify_map(0.5, None);
        assert_eq!(map.spots[4].label, Label::Class("AGT".into()));
        assert!(map.spots[4].neighbor_assigned);
        assert!((map.spots[4].confidence - 1.2).abs() < 1e-12);
        assert_eq!(map.unknown_count(), 0);
        assert_eq!(g.hard_map(0.5).spots[4].label, Label::Unknown);
    }

    #[test]
    fn confident_grid_unchanged() {
        let g = uniform_grid(Topology::Rectangular, 3, 4, 0.8);
        assert_eq!(g.reclassify_map(0.5, None), g.hard_map(0.5));
    }

    #[test]
    fn near_zero_neighbors_still_assign() {
        let spots = (0..9).map(|i| mv(&[("A", 0.01), ("B", if i == 4 { 0.02 } else { 0.0 })])).collect();
        let g = SampleGrid::new(Topology::Rectangular, 3, 3, spots).unwrap();
        let map = g.reclassify_map(0.5, None);
        // A: 0.01 + 0.01 = 0.02, B: 0.02 + 0 = 0.02 -> tie, first class wins
        assert_eq!(map.spots[4].label, Label::Class("A".into()));
        assert!(map.spots[4].neighbor_assigned);
        assert!(map.spots.iter().all(|s| s.neighbor_assigned));
        let floored = g.reclassify_map(0.5, Some(0.1));
        assert_eq!(floored.unknown_count(), 9);
        assert!(floored.spots.iter().all(|s| !s.neighbor_assigned));
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            SampleGrid::new(Topology::Rectangular, 2, 2, vec![mv(&[("A", 0.1)])]),
            Err(SpatialError::SizeMismatch { .. })
        ));
        assert_eq!(
            SampleGrid::new(Topology::Rectangular, 1, 2, vec![mv(&[("A", 0.1)]), mv(&[("B", 0.1)])]).unwrap_err(),
            SpatialError::ClassMismatch(1)
        );
    }

    #[test]
    fn reads_annotated_batch_csv() {
        let text = "# topology: hexagonal\n# rows: 1\n# cols: 2\n# spacing: 30\n\
                    id,x,y,label,confidence,mu_A,mu_B,error\n\
                    a,,,A,0.9,0.9,0,\nb,,,UNK,0.8,0.2,0.1,\n";
        let g = read_grid_csv(text, None).unwrap();
        assert_eq!(g.topology(), Topology::Hexagonal);
        assert_eq!(g.classes(), &["A".to_string(), "B".to_string()]);
        assert_eq!(g.spot(1).unwrap().get("A"), Some(0.2));
        assert_eq!(g.spacing(), 30.0);

        let no_topo = text.replace("# topology: hexagonal\n", "");
        assert_eq!(read_grid_csv(&no_topo, None).unwrap_err(), SpatialError::MissingHeader("topology"));
        assert_eq!(read_grid_csv(&no_topo, Some(Topology::Rectangular)).unwrap().topology(), Topology::Rectangular);
        let err_row = text.replace("b,,,UNK,0.8,0.2,0.1,", "b,,,ERROR,,,,boom");
        assert!(read_grid_csv(&err_row, None).is_err());
    }

    #[test]
    fn map_csv_output() {
        let map = ring_grid(0.3, 0.9).with_spacing(30.0).reclassify_map(0.5, None);
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,label,confidence,neighbor_assigned");
        assert_eq!(lines[5], "30,30,AGT,1.2,true");
        assert_eq!(lines[1], "0,0,AGT,0.9,false");
    }

    proptest! {
        #[test]
        fn confident_spots_keep_labels(
            vals in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 20),
            hex in any::<bool>(),
            nu in 0.0f64..=1.0,
        ) {
            let topo = if hex { Topology::Hexagonal } else { Topology::Rectangular };
            let spots = vals.iter().map(|&(a, b, c)| mv(&[("A", a), ("B", b), ("C", c)])).collect();
            let g = SampleGrid::new(topo, 4, 5, spots).unwrap();
            let raw = g.hard_map(nu);
            let smooth = g.reclassify_map(nu, None);
            for (i, (r, s)) in raw.spots.iter().zip(&smooth.spots).enumerate() {
                let below = g.spot(i).unwrap().max() < nu;
                if !below {
                    prop_assert_eq!(&r.label, &s.label);
                    prop_assert!(!s.neighbor_assigned);
                } else {
                    prop_assert!(s.neighbor_assigned);
                }
                let n = g.neighbors(i).unwrap().len();
                let cap = if hex { 6 } else { 8 };
                prop_assert!(n >= 2 && n <= cap);
            }
            // smoothing reads raw values only, so a second evaluation agrees
            prop_assert_eq!(g.reclassify_map(nu, None), smooth);
        }

        #[test]
        fn smoothing_translation_invariant(
            vals in prop::collection::vec(0.0f64..=1.0, 9),
            dr in 0usize..3,
            dc in 0usize..3,
        ) {
            let small = SampleGrid::new(Topology::Rectangular, 3, 3, vals.iter().map(|&v| mv(&[("A", v)])).collect()).unwrap();
            // embed the 3x3 block into a 6x6 grid at (dr, dc), zero elsewhere
            let big_spots = (0..36)
                .map(|i| {
                    let (r, c) = (i / 6, i % 6);
                    let inside = r >= dr && r < dr + 3 && c >= dc && c < dc + 3;
                    let v = if inside { vals[(r - dr) * 3 + (c - dc)] } else { 0.0 };
                    mv(&[("A", v)])
                })
                .collect();
            let big = SampleGrid::new(Topology::Rectangular, 6, 6, big_spots).unwrap();
            let centre_small = small.smoothed_membership(4, "A").unwrap();
            let centre_big = big.smoothed_membership(big.index(dr + 1, dc + 1), "A").unwrap();
            prop_assert!((centre_small - centre_big).abs() <= 1e-12);
        }
    }
}
