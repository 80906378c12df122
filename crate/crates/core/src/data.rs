//! Domain types and the text interchange formats for ratings and landmarks.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const RATINGS_HEADER: &str = "face_id,attribute,rater_id,rating";
pub const NUM_LANDMARKS: usize = 68;

/// The 40 social attributes (20 opposed pairs) rated in the reference dataset.
pub const DEFAULT_ATTRIBUTES: [&str; 40] = [
    "attractive",
    "unattractive",
    "happy",
    "unhappy",
    "friendly",
    "unfriendly",
    "sociable",
    "introverted",
    "kind",
    "mean",
    "caring",
    "cold",
    "calm",
    "aggressive",
    "trustworthy",
    "untrustworthy",
    "responsible",
    "irresponsible",
    "confident",
    "uncertain",
    "humble",
    "egotistical",
    "emotionally_stable",
    "emotionally_unstable",
    "normal",
    "weird",
    "intelligent",
    "unintelligent",
    "interesting",
    "boring",
    "emotional",
    "unemotional",
    "memorable",
    "forgettable",
    "typical",
    "atypical",
    "familiar",
    "unfamiliar",
    "common",
    "uncommon",
];

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c == ',' || c.is_control())
}

/// Opaque face identifier (usually the source image's file stem).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceId(String);

impl FaceId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if !valid_token(&id) {
            return Err(Error::Data(format!(
                "invalid face id {id:?}: must be nonempty without commas or control characters"
            )));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute(String);

impl Attribute {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if !valid_token(&name) {
            return Err(Error::Data(format!("invalid attribute name {name:?}")));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn defaults() -> Vec<Attribute> {
        DEFAULT_ATTRIBUTES
            .iter()
            .map(|a| Attribute(a.to_string()))
            .collect()
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rating {
    pub rater: String,
    pub score: u8,
}

/// Long-format rating table: one cell per (face, attribute), each holding the
/// individual raters' integer scores in 1..=9.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingsTable {
    cells: BTreeMap<(FaceId, Attribute), Vec<Rating>>,
}

impl RatingsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        face: FaceId,
        attribute: Attribute,
        rater: impl Into<String>,
        score: u8,
    ) -> Result<()> {
        let rater = rater.into();
        if !valid_token(&rater) {
            return Err(Error::Data(format!("invalid rater id {rater:?}")));
        }
        if !(1..=9).contains(&score) {
            return Err(Error::Data(format!("rating {score} outside 1..=9")));
        }
        let cell = self.cells.entry((face, attribute)).or_default();
        if cell.iter().any(|r| r.rater == rater) {
            return Err(Error::Duplicate(format!("rater {rater} already rated this cell")));
        }
        cell.push(Rating { rater, score });
        Ok(())
    }

    pub fn cell(&self, face: &FaceId, attribute: &Attribute) -> Option<&[Rating]> {
        self.cells
            .get(&(face.clone(), attribute.clone()))
            .map(Vec::as_slice)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&FaceId, &Attribute, &[Rating])> {
        self.cells.iter().map(|((f, a), r)| (f, a, r.as_slice()))
    }

    /// Cells for one attribute, in face-id order.
    pub fn attribute_cells<'a>(
        &'a self,
        attribute: &'a Attribute,
    ) -> impl Iterator<Item = (&'a FaceId, &'a [Rating])> + 'a {
        self.cells
            .iter()
            .filter(move |((_, a), _)| a == attribute)
            .map(|((f, _), r)| (f, r.as_slice()))
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_ratings(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    pub fn faces(&self) -> Vec<FaceId> {
        let mut faces: Vec<FaceId> = self.cells.keys().map(|(f, _)| f.clone()).collect();
        faces.dedup();
        faces
    }

    pub fn attributes(&self) -> Vec<Attribute> {
        let mut attrs: Vec<Attribute> = self.cells.keys().map(|(_, a)| a.clone()).collect();
        attrs.sort();
        attrs.dedup();
        attrs
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.split('\n').enumerate();
        match lines.next() {
            Some((_, h)) if h == RATINGS_HEADER => {}
            _ => {
                return Err(Error::parse(
                    origin,
                    1,
                    format!("expected header `{RATINGS_HEADER}`"),
                ))
            }
        }
        let mut table = Self::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 4 columns, found {}", fields.len()),
                ));
            }
            let face = FaceId::new(fields[0]).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
            let attr =
                Attribute::new(fields[1]).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
            let score: u8 = fields[3]
                .parse()
                .ok()
                .filter(|s| (1..=9).contains(s) && fields[3].bytes().all(|b| b.is_ascii_digit()))
                .ok_or_else(|| {
                    Error::parse(
                        origin,
                        lineno,
                        format!("rating {:?} is not an integer in 1..=9", fields[3]),
                    )
                })?;
            match table.insert(face, attr, fields[2], score) {
                Ok(()) => {}
                Err(Error::Duplicate(_)) => {
                    return Err(Error::Duplicate(format!(
                        "{origin}: line {lineno}: ({}, {}, {}) appears more than once",
                        fields[0], fields[1], fields[2]
                    )))
                }
                Err(e) => return Err(Error::parse(origin, lineno, e.to_string())),
            }
        }
        Ok(table)
    }

    /// Serializes in canonical order: face, attribute, then rater insertion order.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * self.num_ratings() + 64);
        out.push_str(RATINGS_HEADER);
        out.push('\n');
        for ((face, attr), ratings) in &self.cells {
            for r in ratings {
                out.push_str(&format!("{face},{attr},{},{}\n", r.rater, r.score));
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Mean rating per face for one attribute.
pub fn average_ratings(
    table: &RatingsTable,
    attribute: &Attribute,
) -> Result<BTreeMap<FaceId, f64>> {
    let out: BTreeMap<FaceId, f64> = table
        .attribute_cells(attribute)
        .filter(|(_, r)| !r.is_empty())
        .map(|(face, ratings)| {
            let sum: u32 = ratings.iter().map(|r| r.score as u32).sum();
            (face.clone(), sum as f64 / ratings.len() as f64)
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NotFound(format!("attribute `{attribute}` has no ratings")));
    }
    Ok(out)
}

/// 68 facial keypoints in image pixel coordinates (dlib/iBUG ordering).
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<[f64; 2]>,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() != NUM_LANDMARKS {
            return Err(Error::Data(format!(
                "expected {NUM_LANDMARKS} landmarks, got {}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("landmark coordinates must be finite".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    pub fn map(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        Self::new(self.points.iter().map(|&p| f(p)).collect())
    }
}

pub fn landmarks_header() -> String {
    let mut h = String::from("face_id");
    for i in 0..NUM_LANDMARKS {
        h.push_str(&format!(",x{i},y{i}"));
    }
    h
}

pub fn parse_landmarks(text: &str, origin: &str) -> Result<BTreeMap<FaceId, LandmarkSet>> {
    let mut lines = text.split('\n').enumerate();
    let header = landmarks_header();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(Error::parse(origin, 1, "expected header `face_id,x0,y0,...,x67,y67`")),
    }
    let mut out = BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + 2 * NUM_LANDMARKS {
            return Err(Error::parse(
                origin,
                lineno,
                format!(
                    "expected {} coordinate fields, found {}",
                    2 * NUM_LANDMARKS,
                    fields.len() - 1
                ),
            ));
        }
        let face = FaceId::new(fields[0]).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let mut points = Vec::with_capacity(NUM_LANDMARKS);
        for pair in fields[1..].chunks(2) {
            let mut xy = [0.0; 2];
            for (slot, s) in xy.iter_mut().zip(pair) {
                *slot = s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(origin, lineno, format!("bad coordinate {s:?}")))?;
            }
            points.push(xy);
        }
        let set = LandmarkSet::new(points).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        if out.insert(face.clone(), set).is_some() {
            return Err(Error::Duplicate(format!(
                "{origin}: line {lineno}: face `{face}` already has landmarks"
            )));
        }
    }
    Ok(out)
}

pub fn load_landmarks(path: impl AsRef<Path>) -> Result<BTreeMap<FaceId, LandmarkSet>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks(&text, &path.display().to_string())
}

pub fn landmarks_to_csv(sets: &BTreeMap<FaceId, LandmarkSet>) -> String {
    let mut out = landmarks_header();
    out.push('\n');
    for (face, set) in sets {
        out.push_str(face.as_str());
        for [x, y] in set.points() {
            out.push_str(&format!(",{x},{y}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_landmarks(sets: &BTreeMap<FaceId, LandmarkSet>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, landmarks_to_csv(sets)).map_err(|e| Error::io(path, e))
}
