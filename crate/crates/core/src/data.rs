//! Measured study grids: sound level, notification outcomes, hit accuracy
//! and direction confusion.
//!
//! Grids are indexed by the five measured distances and five roundness
//! coefficients. Cells absent from a file, or fields left empty, are
//! missing and stay missing: lookups never substitute a number.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targeting::DirectionSpec;

pub const DISTANCES_MM: [f64; 5] = [500.0, 1000.0, 1500.0, 2000.0, 2500.0];
pub const ROUNDNESS: [f64; 5] = [0.001, 0.002, 0.003, 0.004, 1.0];

const ANCHOR_STUDY1: &str = include_str!("../data/study1.csv");
const ANCHOR_SOUND: &str = include_str!("../data/sound.csv");
const ANCHOR_ACCURACY: &str = include_str!("../data/accuracy.csv");
const ANCHOR_DIRECTION: &str = include_str!("../data/direction.csv");

pub const STUDY1_FILE: &str = "study1.csv";
pub const SOUND_FILE: &str = "sound.csv";
pub const ACCURACY_FILE: &str = "accuracy.csv";
pub const DIRECTION_FILE: &str = "direction.csv";

const KEY_EPS: f64 = 1e-9;

pub fn distance_index(distance_mm: f64) -> Option<usize> {
    DISTANCES_MM
        .iter()
        .position(|d| (d - distance_mm).abs() <= KEY_EPS * d)
}

pub fn roundness_index(b: f64) -> Option<usize> {
    ROUNDNESS.iter().position(|r| (r - b).abs() <= KEY_EPS * r)
}

/// A measured (distance, roundness) condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridKey {
    distance: usize,
    roundness: usize,
}

impl GridKey {
    pub fn new(distance_mm: f64, b: f64) -> Result<Self> {
        let distance = distance_index(distance_mm).ok_or_else(|| {
            Error::OutOfRange(format!(
                "distance {distance_mm} mm is not a measured distance"
            ))
        })?;
        let roundness = roundness_index(b).ok_or_else(|| {
            Error::OutOfRange(format!("roundness {b} is not a measured coefficient"))
        })?;
        Ok(Self {
            distance,
            roundness,
        })
    }

    pub fn distance_mm(&self) -> f64 {
        DISTANCES_MM[self.distance]
    }

    pub fn b(&self) -> f64 {
        ROUNDNESS[self.roundness]
    }

    pub fn all() -> impl Iterator<Item = GridKey> {
        (0..5).flat_map(|distance| {
            (0..5).map(move |roundness| GridKey {
                distance,
                roundness,
            })
        })
    }
}

impl fmt::Display for GridKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} mm, b={})", self.distance_mm(), self.b())
    }
}

/// A 5 × 5 table over [`DISTANCES_MM`] × [`ROUNDNESS`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    cells: [[Option<T>; 5]; 5],
}

impl<T> Default for Grid<T> {
    fn default() -> Self {
        Self {
            cells: Default::default(),
        }
    }
}

impl<T> Grid<T> {
    pub fn get(&self, key: GridKey) -> Option<&T> {
        self.cells[key.distance][key.roundness].as_ref()
    }

    pub fn set(&mut self, key: GridKey, value: Option<T>) {
        self.cells[key.distance][key.roundness] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (GridKey, &T)> {
        GridKey::all().filter_map(move |k| self.get(k).map(|v| (k, v)))
    }

    pub fn is_empty(&self) -> bool {
        self.iter().next().is_none()
    }

    /// Drops every cell measured at roundness `b`.
    pub fn remove_roundness(&mut self, b: f64) {
        if let Some(r) = roundness_index(b) {
            for row in &mut self.cells {
                row[r] = None;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCell {
    pub notification_rate: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub noticeability: Option<f64>,
    pub comfort: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub mean_gap_mm: Option<f64>,
    pub std_gap_mm: Option<f64>,
    pub detected: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Midline,
}

impl Side {
    /// Horizontal angles grow from the right ear (0°) through the face
    /// (90°) to the left ear (180°) and the back of the head (270°).
    pub fn of(direction: &DirectionSpec) -> Side {
        let c = direction.theta_deg.to_radians().cos();
        if c > 1e-9 {
            Side::Right
        } else if c < -1e-9 {
            Side::Left
        } else {
            Side::Midline
        }
    }
}

/// A place on the head a participant can point to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    /// Another region on the left side.
    #[serde(rename = "left")]
    LeftOther,
    /// Another region on the right side.
    #[serde(rename = "right")]
    RightOther,
    #[serde(rename = "unresolved")]
    Unresolved,
}

impl Region {
    pub const TABULATED: [Region; 7] = [
        Region::A,
        Region::B,
        Region::C,
        Region::D,
        Region::E,
        Region::F,
        Region::G,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::D => "D",
            Region::E => "E",
            Region::F => "F",
            Region::G => "G",
            Region::LeftOther => "left",
            Region::RightOther => "right",
            Region::Unresolved => "unresolved",
        }
    }

    pub fn parse(label: &str) -> Option<Region> {
        Some(match label {
            "A" => Region::A,
            "B" => Region::B,
            "C" => Region::C,
            "D" => Region::D,
            "E" => Region::E,
            "F" => Region::F,
            "G" => Region::G,
            "left" => Region::LeftOther,
            "right" => Region::RightOther,
            "unresolved" => Region::Unresolved,
            _ => return None,
        })
    }

    /// Arrival direction the region stands for, if it is a tabulated one.
    pub fn direction(&self) -> Option<DirectionSpec> {
        let (theta, phi) = match self {
            Region::A => (60.0, 0.0),
            Region::B => (120.0, 0.0),
            Region::C => (180.0, 0.0),
            Region::D => (240.0, 0.0),
            Region::E => (270.0, 30.0),
            Region::F => (300.0, 0.0),
            Region::G => (360.0, 0.0),
            _ => return None,
        };
        Some(DirectionSpec::new(theta, phi).expect("valid table direction"))
    }

    pub fn side(&self) -> Option<Side> {
        match self {
            Region::LeftOther => Some(Side::Left),
            Region::RightOther => Some(Side::Right),
            Region::Unresolved => None,
            tabulated => tabulated.direction().map(|d| Side::of(&d)),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionRow {
    pub actual: DirectionSpec,
    pub responses: Vec<(Region, f64)>,
}

impl DirectionRow {
    pub fn percent(&self, region: Region) -> f64 {
        self.responses
            .iter()
            .filter(|(r, _)| *r == region)
            .map(|(_, p)| p)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub exact_match_pct: f64,
    pub same_side_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeField {
    NotificationRate,
    MeanTime,
    Noticeability,
    Comfort,
}

impl OutcomeField {
    pub fn of(&self, cell: &OutcomeCell) -> Option<f64> {
        match self {
            OutcomeField::NotificationRate => cell.notification_rate,
            OutcomeField::MeanTime => cell.mean_time_s,
            OutcomeField::Noticeability => cell.noticeability,
            OutcomeField::Comfort => cell.comfort,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyGrids {
    pub sound: Grid<f64>,
    pub outcome: Grid<OutcomeCell>,
    pub accuracy: Grid<AccuracyCell>,
    pub direction: Vec<DirectionRow>,
}

/// Locations of the four grid files.
#[derive(Debug, Clone)]
pub struct GridPaths {
    pub study1: PathBuf,
    pub sound: PathBuf,
    pub accuracy: PathBuf,
    pub direction: PathBuf,
}

impl GridPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            study1: dir.join(STUDY1_FILE),
            sound: dir.join(SOUND_FILE),
            accuracy: dir.join(ACCURACY_FILE),
            direction: dir.join(DIRECTION_FILE),
        }
    }
}

pub fn load_grids(paths: &GridPaths) -> Result<StudyGrids> {
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| Error::file(p, e));
    Ok(StudyGrids {
        outcome: parse_study1(&read(&paths.study1)?, &paths.study1.display().to_string())?,
        sound: parse_sound(&read(&paths.sound)?, &paths.sound.display().to_string())?,
        accuracy: parse_accuracy(
            &read(&paths.accuracy)?,
            &paths.accuracy.display().to_string(),
        )?,
        direction: parse_direction(
            &read(&paths.direction)?,
            &paths.direction.display().to_string(),
        )?,
    })
}

impl StudyGrids {
    /// The grids bundled with the crate.
    pub fn anchors() -> Self {
        Self {
            outcome: parse_study1(ANCHOR_STUDY1, STUDY1_FILE).expect("bundled study1.csv"),
            sound: parse_sound(ANCHOR_SOUND, SOUND_FILE).expect("bundled sound.csv"),
            accuracy: parse_accuracy(ANCHOR_ACCURACY, ACCURACY_FILE).expect("bundled accuracy.csv"),
            direction: parse_direction(ANCHOR_DIRECTION, DIRECTION_FILE)
                .expect("bundled direction.csv"),
        }
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        load_grids(&GridPaths::in_dir(dir))
    }

    /// Writes the four files into `dir` under their standard names.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::file(p, e))
        };
        write(STUDY1_FILE, self.study1_csv())?;
        write(SOUND_FILE, self.sound_csv())?;
        write(ACCURACY_FILE, self.accuracy_csv())?;
        write(DIRECTION_FILE, self.direction_csv())?;
        Ok(())
    }

    pub fn outcome_cell(&self, key: GridKey) -> OutcomeCell {
        self.outcome.get(key).copied().unwrap_or_default()
    }

    pub fn accuracy_cell(&self, key: GridKey) -> AccuracyCell {
        self.accuracy.get(key).copied().unwrap_or_default()
    }

    pub fn lookup(&self, key: GridKey, field: OutcomeField) -> Option<f64> {
        field.of(&self.outcome_cell(key))
    }

    pub fn sound_level(&self, key: GridKey) -> Option<f64> {
        self.sound.get(key).copied()
    }

    /// `LA_max(b_hi) − LA_max(b_lo)` at one distance.
    pub fn sound_delta(&self, distance_mm: f64, b_hi: f64, b_lo: f64) -> Result<f64> {
        let hi = GridKey::new(distance_mm, b_hi)?;
        let lo = GridKey::new(distance_mm, b_lo)?;
        let level = |k: GridKey| {
            self.sound_level(k)
                .ok_or_else(|| Error::MissingData(format!("sound level {k}")))
        };
        Ok(level(hi)? - level(lo)?)
    }

    pub fn direction_row(&self, actual: &DirectionSpec) -> Result<&DirectionRow> {
        self.direction
            .iter()
            .find(|row| row.actual.separation_deg(actual) < 1e-6)
            .ok_or_else(|| {
                Error::OutOfRange(format!(
                    "no direction row for theta={} phi={}",
                    actual.theta_deg, actual.phi_deg
                ))
            })
    }

    /// Tabulated direction closest to an arbitrary arrival direction.
    pub fn nearest_direction(&self, direction: &DirectionSpec) -> Result<DirectionSpec> {
        self.direction
            .iter()
            .map(|row| row.actual)
            .min_by(|a, b| {
                a.separation_deg(direction)
                    .total_cmp(&b.separation_deg(direction))
            })
            .ok_or_else(|| Error::MissingData("direction table is empty".into()))
    }

    pub fn direction_summary(&self, actual: &DirectionSpec) -> Result<DirectionSummary> {
        let row = self.direction_row(actual)?;
        let side = Side::of(&row.actual);
        let exact = row
            .responses
            .iter()
            .filter(|(r, _)| {
                r.direction()
                    .is_some_and(|d| d.separation_deg(&row.actual) < 1e-6)
            })
            .map(|(_, p)| p)
            .sum();
        let same_side = row
            .responses
            .iter()
            .filter(|(r, _)| r.side() == Some(side))
            .map(|(_, p)| p)
            .sum();
        Ok(DirectionSummary {
            exact_match_pct: exact,
            same_side_pct: same_side,
        })
    }

    pub fn response_sampler(&self, actual: &DirectionSpec) -> Result<ResponseSampler> {
        ResponseSampler::new(self.direction_row(actual)?)
    }

    /// One response drawn from a generator seeded with `seed`.
    pub fn sample_response(&self, actual: &DirectionSpec, seed: u64) -> Result<Region> {
        let sampler = self.response_sampler(actual)?;
        Ok(sampler.draw(&mut ChaCha8Rng::seed_from_u64(seed)))
    }

    /// `count` successive responses from one seeded stream.
    pub fn sample_responses(
        &self,
        actual: &DirectionSpec,
        seed: u64,
        count: usize,
    ) -> Result<Vec<Region>> {
        let sampler = self.response_sampler(actual)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
    }

    pub fn study1_csv(&self) -> String {
        let mut out =
            String::from("distance_mm,b,notification_rate,mean_time_s,noticeability,comfort\n");
        for (k, c) in self.outcome.iter() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k.distance_mm(),
                k.b(),
                opt(c.notification_rate),
                opt(c.mean_time_s),
                opt(c.noticeability),
                opt(c.comfort)
            ));
        }
        out
    }

    pub fn sound_csv(&self) -> String {
        let mut out = String::from("distance_mm,b,la_max_db\n");
        for (k, v) in self.sound.iter() {
            out.push_str(&format!("{},{},{}\n", k.distance_mm(), k.b(), v));
        }
        out
    }

    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("distance_mm,b,mean_gap_mm,std_gap_mm,detected\n");
        for (k, c) in self.accuracy.iter() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                k.distance_mm(),
                k.b(),
                opt(c.mean_gap_mm),
                opt(c.std_gap_mm),
                c.detected.map(|d| d.to_string()).unwrap_or_default()
            ));
        }
        out
    }

    pub fn direction_csv(&self) -> String {
        let mut out = String::from("actual_theta_deg,actual_phi_deg,response_region,percent\n");
        for row in &self.direction {
            for (region, pct) in &row.responses {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.actual.theta_deg, row.actual.phi_deg, region, pct
                ));
            }
        }
        out
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Categorical draw over one direction row's response percentages.
#[derive(Debug, Clone)]
pub struct ResponseSampler {
    regions: Vec<Region>,
    index: WeightedIndex<f64>,
}

impl ResponseSampler {
    fn new(row: &DirectionRow) -> Result<Self> {
        let (regions, weights): (Vec<_>, Vec<_>) = row
            .responses
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .copied()
            .unzip();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::MissingData(format!("direction row has no responses: {e}")))?;
        Ok(Self { regions, index })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Region {
        self.regions[self.index.sample(rng)]
    }
}

struct Table<'a> {
    path: &'a str,
    reader: csv::Reader<&'a [u8]>,
}

impl<'a> Table<'a> {
    fn open(text: &'a str, path: &'a str, columns: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                path: path.into(),
                line: e.position().map_or(1, |p| p.line()),
                message: e.to_string(),
            })?
            .clone();
        let found: Vec<&str> = headers.iter().collect();
        if found.len() == 1 && found[0].is_empty() || found.is_empty() {
            return Err(Error::Validation {
                path: path.into(),
                line: 1,
                message: "file is empty".into(),
            });
        }
        if found != columns {
            return Err(Error::Parse {
                path: path.into(),
                line: reader.position().line(),
                message: format!(
                    "expected header {}, found {}",
                    columns.join(","),
                    found.join(",")
                ),
            });
        }
        Ok(Self { path, reader })
    }

    fn rows(&mut self) -> Result<Vec<(u64, csv::StringRecord)>> {
        let mut rows = Vec::new();
        for record in self.reader.records() {
            let record = record.map_err(|e| Error::Parse {
                path: self.path.into(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            rows.push((line, record));
        }
        if rows.is_empty() {
            return Err(Error::Validation {
                path: self.path.into(),
                line: self.reader.position().line(),
                message: "no data rows".into(),
            });
        }
        Ok(rows)
    }
}

struct Row<'a> {
    path: &'a str,
    line: u64,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn parse_err(&self, message: String) -> Error {
        Error::Parse {
            path: self.path.into(),
            line: self.line,
            message,
        }
    }

    fn invalid(&self, message: String) -> Error {
        Error::Validation {
            path: self.path.into(),
            line: self.line,
            message,
        }
    }

    fn number(&self, idx: usize, name: &str) -> Result<f64> {
        self.optional(idx, name)?
            .ok_or_else(|| self.parse_err(format!("{name} is required")))
    }

    fn optional(&self, idx: usize, name: &str) -> Result<Option<f64>> {
        let field = self.record.get(idx).unwrap_or("");
        if field.is_empty() {
            return Ok(None);
        }
        let v: f64 = field
            .parse()
            .map_err(|_| self.parse_err(format!("{name}: cannot parse {field:?} as a number")))?;
        if !v.is_finite() {
            return Err(self.invalid(format!("{name} must be finite")));
        }
        Ok(Some(v))
    }

    fn key(&self) -> Result<GridKey> {
        let d = self.number(0, "distance_mm")?;
        let b = self.number(1, "b")?;
        GridKey::new(d, b).map_err(|e| self.invalid(e.to_string()))
    }

    fn in_range(&self, v: Option<f64>, name: &str, lo: f64, hi: f64) -> Result<()> {
        match v {
            Some(x) if !(lo..=hi).contains(&x) => {
                Err(self.invalid(format!("{name} {x} outside [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }
}

fn insert_unique<T>(grid: &mut Grid<T>, row: &Row, key: GridKey, value: T) -> Result<()> {
    if grid.get(key).is_some() {
        return Err(row.invalid(format!("duplicate cell {key}")));
    }
    grid.set(key, Some(value));
    Ok(())
}

pub fn parse_study1(text: &str, path: &str) -> Result<Grid<OutcomeCell>> {
    let mut table = Table::open(
        text,
        path,
        &[
            "distance_mm",
            "b",
            "notification_rate",
            "mean_time_s",
            "noticeability",
            "comfort",
        ],
    )?;
    let mut grid = Grid::default();
    for (line, record) in table.rows()? {
        let row = Row {
            path,
            line,
            record: &record,
        };
        let key = row.key()?;
        let cell = OutcomeCell {
            notification_rate: row.optional(2, "notification_rate")?,
            mean_time_s: row.optional(3, "mean_time_s")?,
            noticeability: row.optional(4, "noticeability")?,
            comfort: row.optional(5, "comfort")?,
        };
        row.in_range(cell.notification_rate, "notification_rate", 0.0, 1.0)?;
        row.in_range(cell.noticeability, "noticeability", 1.0, 7.0)?;
        row.in_range(cell.comfort, "comfort", 1.0, 7.0)?;
        if let Some(t) = cell.mean_time_s {
            if t < 0.0 {
                return Err(row.invalid(format!("mean_time_s {t} is negative")));
            }
            if cell.notification_rate != Some(1.0) {
                return Err(row.invalid(
                    "mean_time_s may only be given where notification_rate is 1.0".into(),
                ));
            }
        }
        insert_unique(&mut grid, &row, key, cell)?;
    }
    Ok(grid)
}

pub fn parse_sound(text: &str, path: &str) -> Result<Grid<f64>> {
    let mut table = Table::open(text, path, &["distance_mm", "b", "la_max_db"])?;
    let mut grid = Grid::default();
    for (line, record) in table.rows()? {
        let row = Row {
            path,
            line,
            record: &record,
        };
        let key = row.key()?;
        if let Some(level) = row.optional(2, "la_max_db")? {
            row.in_range(Some(level), "la_max_db", 0.0, 200.0)?;
            insert_unique(&mut grid, &row, key, level)?;
        }
    }
    Ok(grid)
}

pub fn parse_accuracy(text: &str, path: &str) -> Result<Grid<AccuracyCell>> {
    let mut table = Table::open(
        text,
        path,
        &["distance_mm", "b", "mean_gap_mm", "std_gap_mm", "detected"],
    )?;
    let mut grid = Grid::default();
    for (line, record) in table.rows()? {
        let row = Row {
            path,
            line,
            record: &record,
        };
        let key = row.key()?;
        let detected = match record.get(4).unwrap_or("") {
            "" => None,
            "true" | "1" => Some(true),
            "false" | "0" => Some(false),
            other => return Err(row.parse_err(format!("detected: cannot parse {other:?}"))),
        };
        let cell = AccuracyCell {
            mean_gap_mm: row.optional(2, "mean_gap_mm")?,
            std_gap_mm: row.optional(3, "std_gap_mm")?,
            detected,
        };
        row.in_range(cell.mean_gap_mm, "mean_gap_mm", 0.0, f64::MAX)?;
        row.in_range(cell.std_gap_mm, "std_gap_mm", 0.0, f64::MAX)?;
        if detected == Some(false) && (cell.mean_gap_mm.is_some() || cell.std_gap_mm.is_some()) {
            return Err(row.invalid("undetected cells cannot carry gap values".into()));
        }
        insert_unique(&mut grid, &row, key, cell)?;
    }
    Ok(grid)
}

pub fn parse_direction(text: &str, path: &str) -> Result<Vec<DirectionRow>> {
    let mut table = Table::open(
        text,
        path,
        &[
            "actual_theta_deg",
            "actual_phi_deg",
            "response_region",
            "percent",
        ],
    )?;
    // first line of each direction, for diagnostics
    let mut rows: Vec<(u64, DirectionRow)> = Vec::new();
    for (line, record) in table.rows()? {
        let row = Row {
            path,
            line,
            record: &record,
        };
        let theta = row.number(0, "actual_theta_deg")?;
        let phi = row.number(1, "actual_phi_deg")?;
        let actual = DirectionSpec::new(theta, phi).map_err(|e| row.invalid(e.to_string()))?;
        let label = record.get(2).unwrap_or("");
        let region = Region::parse(label)
            .ok_or_else(|| row.invalid(format!("unknown response region {label:?}")))?;
        let pct = row.number(3, "percent")?;
        row.in_range(Some(pct), "percent", 0.0, 100.0)?;

        let entry = match rows
            .iter_mut()
            .find(|(_, r)| r.actual.separation_deg(&actual) < 1e-6)
        {
            Some((_, r)) => r,
            None => {
                rows.push((
                    line,
                    DirectionRow {
                        actual,
                        responses: Vec::new(),
                    },
                ));
                &mut rows.last_mut().expect("just pushed").1
            }
        };
        if entry.responses.iter().any(|(r, _)| *r == region) {
            return Err(row.invalid(format!("duplicate region {label} for this direction")));
        }
        entry.responses.push((region, pct));
    }

    for (line, row) in &rows {
        let total: f64 = row.responses.iter().map(|(_, p)| p).sum();
        if (total - 100.0).abs() > 0.1 {
            return Err(Error::Validation {
                path: path.into(),
                line: *line,
                message: format!(
                    "percentages for theta={} phi={} sum to {total}",
                    row.actual.theta_deg, row.actual.phi_deg
                ),
            });
        }
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// Position of `distance_mm` between measured distances: the lower index
/// and the weight of the upper one. Exact hits return weight zero.
pub fn distance_bracket(distance_mm: f64) -> Result<(usize, usize, f64)> {
    let (lo, hi) = (DISTANCES_MM[0], DISTANCES_MM[4]);
    if !(distance_mm.is_finite() && (lo..=hi).contains(&distance_mm)) {
        return Err(Error::OutOfRange(format!(
            "distance {distance_mm} mm outside [{lo}, {hi}] mm"
        )));
    }
    if let Some(i) = distance_index(distance_mm) {
        return Ok((i, i, 0.0));
    }
    let upper = DISTANCES_MM
        .iter()
        .position(|&d| d > distance_mm)
        .expect("inside range");
    let (d0, d1) = (DISTANCES_MM[upper - 1], DISTANCES_MM[upper]);
    Ok((upper - 1, upper, (distance_mm - d0) / (d1 - d0)))
}

/// Piecewise-linear blend of a per-cell quantity across distance at fixed
/// roundness; any missing contributor makes the result missing.
pub fn interpolate_in_distance<T, F>(
    grid: &Grid<T>,
    distance_mm: f64,
    b: f64,
    field: F,
) -> Result<Option<f64>>
where
    F: Fn(&T) -> Option<f64>,
{
    let r = roundness_index(b)
        .ok_or_else(|| Error::OutOfRange(format!("roundness {b} is not a measured coefficient")))?;
    let (i0, i1, t) = distance_bracket(distance_mm)?;
    let at = |i: usize| {
        grid.get(GridKey {
            distance: i,
            roundness: r,
        })
        .and_then(&field)
    };
    if i0 == i1 {
        return Ok(at(i0));
    }
    Ok(match (at(i0), at(i1)) {
        (Some(a), Some(c)) => Some(a + t * (c - a)),
        _ => None,
    })
}
