use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rounding::round_half_up;

/// Letter grades, ordered lowest to highest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    F,
    D,
    #[serde(rename = "D+")]
    DPlus,
    C,
    #[serde(rename = "C+")]
    CPlus,
    B,
    #[serde(rename = "B+")]
    BPlus,
    A,
    #[serde(rename = "A+")]
    APlus,
}

impl Letter {
    pub fn as_str(self) -> &'static str {
        match self {
            Letter::F => "F",
            Letter::D => "D",
            Letter::DPlus => "D+",
            Letter::C => "C",
            Letter::CPlus => "C+",
            Letter::B => "B",
            Letter::BPlus => "B+",
            Letter::A => "A",
            Letter::APlus => "A+",
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `[min, max)`; the band whose `max` is 100 also contains 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeBand {
    pub letter: Letter,
    pub min: f64,
    pub max: f64,
}

/// Validated partition of `[0, 100]` into letter bands, lowest first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradeMapping {
    bands: Vec<GradeBand>,
}

impl<'de> Deserialize<'de> for GradeMapping {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            bands: Vec<GradeBand>,
        }
        let raw = Raw::deserialize(d)?;
        GradeMapping::new(raw.bands).map_err(serde::de::Error::custom)
    }
}

impl Default for GradeMapping {
    fn default() -> Self {
        use Letter::*;
        let table = [
            (F, 0.0, 60.0),
            (D, 60.0, 65.0),
            (DPlus, 65.0, 70.0),
            (C, 70.0, 75.0),
            (CPlus, 75.0, 80.0),
            (B, 80.0, 85.0),
            (BPlus, 85.0, 90.0),
            (A, 90.0, 95.0),
            (APlus, 95.0, 100.0),
        ];
        GradeMapping::new(
            table
                .into_iter()
                .map(|(letter, min, max)| GradeBand { letter, min, max })
                .collect(),
        )
        .expect("default table is a partition")
    }
}

impl GradeMapping {
    /// Bands may be given in any order; they must tile `[0, 100]` without
    /// gaps or overlaps, with letters rising alongside the bands.
    pub fn new(mut bands: Vec<GradeBand>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Config("grade mapping has no bands".into()));
        }
        bands.sort_by(|a, b| a.min.total_cmp(&b.min));
        let mut expected_min = 0.0;
        for (i, band) in bands.iter().enumerate() {
            if !(band.min < band.max) {
                return Err(Error::Config(format!(
                    "band {} has min {} not below max {}",
                    band.letter, band.min, band.max
                )));
            }
            if band.min != expected_min {
                let what = if band.min > expected_min { "gap" } else { "overlap" };
                return Err(Error::Config(format!(
                    "grade mapping has a {what} at {expected_min} (band {} starts at {})",
                    band.letter, band.min
                )));
            }
            if i > 0 && bands[i - 1].letter >= band.letter {
                return Err(Error::Config(format!(
                    "letters must rise with the bands: {} then {}",
                    bands[i - 1].letter, band.letter
                )));
            }
            expected_min = band.max;
        }
        if expected_min != 100.0 {
            return Err(Error::Config(format!(
                "grade mapping ends at {expected_min}, expected 100"
            )));
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[GradeBand] {
        &self.bands
    }

    pub fn letter_for(&self, percent: f64) -> Option<Letter> {
        if !(0.0..=100.0).contains(&percent) {
            return None;
        }
        self.bands
            .iter()
            .find(|b| percent >= b.min && (percent < b.max || (b.max == 100.0 && percent == 100.0)))
            .map(|b| b.letter)
    }
}

/// One grade on both scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualGrade {
    pub percent: f64,
    pub letter: Letter,
    /// Percent on the 0-20 scale, rounded half-up to two decimals.
    pub numeric20: f64,
}

impl DualGrade {
    pub fn numeric20_label(&self) -> String {
        format!("{:.2}", self.numeric20)
    }
}

pub fn numeric20(percent: f64) -> f64 {
    round_half_up(percent * 0.2, 2)
}

pub fn convert_grade(percent: f64, mapping: &GradeMapping) -> Result<DualGrade> {
    let letter = mapping.letter_for(percent).ok_or_else(|| {
        Error::validation("percent", format!("{percent} is outside [0, 100]"))
    })?;
    Ok(DualGrade {
        percent,
        letter,
        numeric20: numeric20(percent),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(letter: Letter, min: f64, max: f64) -> GradeBand {
        GradeBand { letter, min, max }
    }

    #[test]
    fn default_examples() {
        let m = GradeMapping::default();
        let g = convert_grade(100.0, &m).unwrap();
        assert_eq!((g.letter, g.numeric20_label()), (Letter::APlus, "20.00".into()));
        let g = convert_grade(72.8, &m).unwrap();
        assert_eq!((g.letter, g.numeric20_label()), (Letter::C, "14.56".into()));
        let g = convert_grade(0.0, &m).unwrap();
        assert_eq!((g.letter, g.numeric20_label()), (Letter::F, "0.00".into()));
    }

    #[test]
    fn band_edges() {
        let m = GradeMapping::default();
        assert_eq!(m.letter_for(95.0), Some(Letter::APlus));
        assert_eq!(m.letter_for(94.99), Some(Letter::A));
        assert_eq!(m.letter_for(59.99), Some(Letter::F));
        assert_eq!(m.letter_for(60.0), Some(Letter::D));
        assert!(convert_grade(100.01, &m).is_err());
        assert!(convert_grade(-0.1, &m).is_err());
    }

    #[test]
    fn rejects_gaps_and_overlaps_at_load() {
        let gap = GradeMapping::new(vec![band(Letter::F, 0.0, 50.0), band(Letter::A, 55.0, 100.0)]);
        assert!(matches!(gap, Err(Error::Config(m)) if m.contains("gap")));
        let overlap =
            GradeMapping::new(vec![band(Letter::F, 0.0, 60.0), band(Letter::A, 50.0, 100.0)]);
        assert!(matches!(overlap, Err(Error::Config(m)) if m.contains("overlap")));
        let short = GradeMapping::new(vec![band(Letter::F, 0.0, 90.0)]);
        assert!(short.is_err());
        let json = r#"{"bands":[{"letter":"F","min":0,"max":50},{"letter":"A","min":40,"max":100}]}"#;
        assert!(serde_json::from_str::<GradeMapping>(json).is_err());
    }

    #[test]
    fn custom_two_band_mapping() {
        let m = GradeMapping::new(vec![band(Letter::APlus, 50.0, 100.0), band(Letter::F, 0.0, 50.0)])
            .unwrap();
        assert_eq!(m.letter_for(49.9), Some(Letter::F));
        assert_eq!(m.letter_for(100.0), Some(Letter::APlus));
    }

    #[test]
    fn letters_serialize_with_plus() {
        assert_eq!(serde_json::to_string(&Letter::BPlus).unwrap(), "\"B+\"");
    }
}
