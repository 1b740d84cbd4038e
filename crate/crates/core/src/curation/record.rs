use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Source dataset of an image. FairFace appears twice, once per crop margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "FairFace0.25")]
    FairFace025,
    #[serde(rename = "FairFace1.25")]
    FairFace125,
    #[serde(rename = "MIAP")]
    Miap,
    #[serde(rename = "PATA")]
    Pata,
    #[serde(rename = "Phase")]
    Phase,
}

impl Source {
    pub const ALL: [Source; 5] = [Source::FairFace025, Source::FairFace125, Source::Miap, Source::Pata, Source::Phase];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::FairFace025 => "FairFace0.25",
            Source::FairFace125 => "FairFace1.25",
            Source::Miap => "MIAP",
            Source::Pata => "PATA",
            Source::Phase => "Phase",
        }
    }

    /// Sources whose images are crops of person bounding boxes.
    pub fn uses_bbox(self) -> bool {
        matches!(self, Source::Miap | Source::Phase)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.trim().to_ascii_lowercase().chars().filter(|c| !matches!(c, '_' | '-' | ' ' | '(' | ')' | '=')).collect();
        match norm.as_str() {
            "fairface0.25" | "fairfacepadding0.25" => Ok(Source::FairFace025),
            "fairface1.25" | "fairfacepadding1.25" => Ok(Source::FairFace125),
            "miap" => Ok(Source::Miap),
            "pata" => Ok(Source::Pata),
            "phase" => Ok(Source::Phase),
            _ => Err(Error::Data(format!("unknown source dataset '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    pub fn other(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" | "man" => Ok(Gender::Male),
            "female" | "f" | "woman" => Ok(Gender::Female),
            other => Err(Error::Data(format!("unknown gender label '{other}'"))),
        }
    }
}

/// Axis-aligned box in pixels: top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// Grow the box by `padding` times its size on every side.
    pub fn padded(&self, padding: f64) -> BBox {
        BBox {
            x: self.x - padding * self.w,
            y: self.y - padding * self.h,
            w: self.w * (1.0 + 2.0 * padding),
            h: self.h * (1.0 + 2.0 * padding),
        }
    }

    pub fn parse(s: &str) -> Result<BBox> {
        let parts: Vec<f64> = s
            .split([',', ' ', ';'])
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>().map_err(|_| Error::Data(format!("bad bbox component '{p}'"))))
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [x, y, w, h] if *w > 0.0 && *h > 0.0 => Ok(BBox { x: *x, y: *y, w: *w, h: *h }),
            _ => Err(Error::Data(format!("bbox must be x,y,w,h with positive size, got '{s}'"))),
        }
    }
}

/// One curated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub source: Source,
    pub gender: Gender,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethnicity: Option<String>,
    pub age_class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    /// (width, height) in pixels of the image or crop.
    pub resolution: (u32, u32),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity: Option<String>,
}

impl ImageRecord {
    pub fn pixel_area(&self) -> u64 {
        u64::from(self.resolution.0) * u64::from(self.resolution.1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.source.uses_bbox() != self.bbox.is_some() {
            return Err(Error::Data(format!(
                "record {}: bounding box must be present exactly for MIAP and Phase images",
                self.id
            )));
        }
        if let Some(s) = self.occupation_score {
            if !(0.0..=1.0).contains(&s) || s.is_nan() {
                return Err(Error::Data(format!("record {}: occupation score {s} outside [0, 1]", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    id: String,
    #[serde(default)]
    path: Option<String>,
    source: String,
    gender: String,
    #[serde(default)]
    ethnicity: Option<String>,
    #[serde(default)]
    age_class: Option<String>,
    #[serde(default)]
    bbox: Option<String>,
    #[serde(default)]
    activity: Option<String>,
    #[serde(default)]
    width: Option<u32>,
    #[serde(default)]
    height: Option<u32>,
    #[serde(default)]
    occupation_score: Option<f64>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

/// Read a source manifest CSV with columns
/// `id, path, source, gender, ethnicity, age_class, bbox, activity`
/// and optional `width, height, occupation_score`. `bbox` is `"x,y,w,h"`.
///
/// Crop resolution is the padded bbox size when a bbox is given, otherwise the
/// `width`/`height` columns (0 when absent).
pub fn read_source_manifest<R: Read>(reader: R, padding: f64) -> Result<Vec<ImageRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ManifestRow>().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("manifest row {}: {e}", i + 1)))?;
        let source: Source = row.source.parse()?;
        let gender: Gender = row.gender.parse()?;
        let bbox = non_empty(row.bbox).map(|b| BBox::parse(&b)).transpose()?;
        let resolution = match &bbox {
            Some(b) => {
                let p = b.padded(padding);
                (p.w.round() as u32, p.h.round() as u32)
            }
            None => (row.width.unwrap_or(0), row.height.unwrap_or(0)),
        };
        let record = ImageRecord {
            id: row.id,
            path: non_empty(row.path),
            source,
            gender,
            ethnicity: non_empty(row.ethnicity),
            age_class: non_empty(row.age_class).unwrap_or_default(),
            bbox,
            resolution,
            occupation_score: row.occupation_score,
            activity: non_empty(row.activity),
        };
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

/// Read a curated JSONL manifest.
pub fn read_jsonl_manifest(text: &str) -> Result<Vec<ImageRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let r: ImageRecord = serde_json::from_str(l)?;
            r.validate()?;
            Ok(r)
        })
        .collect()
}

pub fn write_jsonl_manifest(records: &[ImageRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}
