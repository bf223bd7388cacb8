//! Families of growing designs for the scaling studies.
//!
//! A family is described by a small JSON document and expands into one
//! [`Design`] per requested population size:
//!
//! ```json
//! {"kind": "equal", "sizes": [64, 128, 256], "n_ratio": 0.5}
//! ```
//!
//! * `equal`: every unit gets `n / N` with `n = round(n_ratio * N)`.
//! * `linear`: unit `i` (1-based) gets a probability proportional to
//!   `1 + i/N`, scaled so the probabilities add up to `n`.
//! * `file`: explicit design documents, one path per design; `sizes` and
//!   `n_ratio` do not apply.
//!
//! Unknown keys are rejected so that typos in family files fail loudly.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::sum::stable_sum;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// A recipe for a sequence of designs of growing size.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignFamily {
    /// All units share the probability `n / N`.
    Equal { sizes: Vec<usize>, n_ratio: f64 },
    /// Probabilities grow linearly with the unit index.
    Linear { sizes: Vec<usize>, n_ratio: f64 },
    /// Designs loaded verbatim from files.
    File { paths: Vec<PathBuf> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    kind: String,
    sizes: Option<Vec<usize>>,
    n_ratio: Option<f64>,
    paths: Option<Vec<PathBuf>>,
}

fn require<T>(value: Option<T>, kind: &str, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Parse(format!("family kind \"{kind}\" requires \"{key}\"")))
}

fn forbid<T>(value: &Option<T>, kind: &str, key: &str) -> Result<()> {
    if value.is_some() {
        return Err(Error::Parse(format!(
            "family kind \"{kind}\" does not accept \"{key}\""
        )));
    }
    Ok(())
}

impl DesignFamily {
    /// Parses a family description from JSON.
    pub fn from_json_str(text: &str) -> Result<DesignFamily> {
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match file.kind.as_str() {
            kind @ ("equal" | "linear") => {
                forbid(&file.paths, kind, "paths")?;
                let sizes = require(file.sizes, kind, "sizes")?;
                let n_ratio = require(file.n_ratio, kind, "n_ratio")?;
                if !(n_ratio > 0.0 && n_ratio < 1.0) {
                    return Err(Error::Parse(format!(
                        "n_ratio = {n_ratio} must lie strictly inside (0, 1)"
                    )));
                }
                if kind == "equal" {
                    Ok(DesignFamily::Equal { sizes, n_ratio })
                } else {
                    Ok(DesignFamily::Linear { sizes, n_ratio })
                }
            }
            "file" => {
                forbid(&file.sizes, "file", "sizes")?;
                forbid(&file.n_ratio, "file", "n_ratio")?;
                Ok(DesignFamily::File {
                    paths: require(file.paths, "file", "paths")?,
                })
            }
            other => Err(Error::Parse(format!("unknown family kind \"{other}\""))),
        }
    }

    /// Reads a family description from a JSON file.
    pub fn from_json_path(path: impl AsRef<Path>) -> Result<DesignFamily> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    /// Serialises the family back to its JSON form.
    pub fn to_json_string(&self) -> String {
        let file = match self {
            DesignFamily::Equal { sizes, n_ratio } => FamilyFile {
                kind: "equal".to_string(),
                sizes: Some(sizes.clone()),
                n_ratio: Some(*n_ratio),
                paths: None,
            },
            DesignFamily::Linear { sizes, n_ratio } => FamilyFile {
                kind: "linear".to_string(),
                sizes: Some(sizes.clone()),
                n_ratio: Some(*n_ratio),
                paths: None,
            },
            DesignFamily::File { paths } => FamilyFile {
                kind: "file".to_string(),
                sizes: None,
                n_ratio: None,
                paths: Some(paths.clone()),
            },
        };
        serde_json::to_string(&file).expect("family serialisation cannot fail")
    }

    /// Expands the recipe into concrete designs, in declaration order.
    pub fn designs(&self) -> Result<Vec<Design>> {
        match self {
            DesignFamily::Equal { sizes, n_ratio } => sizes
                .iter()
                .map(|&population| {
                    let n = round_size(population, *n_ratio);
                    let p = n as f64 / population.max(1) as f64;
                    Design::new(vec![p; population], n)
                })
                .collect(),
            DesignFamily::Linear { sizes, n_ratio } => sizes
                .iter()
                .map(|&population| {
                    let n = round_size(population, *n_ratio);
                    let weights: Vec<f64> = (1..=population)
                        .map(|i| 1.0 + i as f64 / population as f64)
                        .collect();
                    let scale = n as f64 / stable_sum(weights.iter().copied());
                    let p = weights.iter().map(|w| w * scale).collect();
                    Design::new(p, n)
                })
                .collect(),
            DesignFamily::File { paths } => {
                paths.iter().map(|path| Design::from_json_path(path)).collect()
            }
        }
    }

    /// A short label for reports.
    pub fn describe(&self) -> String {
        match self {
            DesignFamily::Equal { sizes, n_ratio } => {
                format!("equal(n_ratio={n_ratio}, sizes={sizes:?})")
            }
            DesignFamily::Linear { sizes, n_ratio } => {
                format!("linear(n_ratio={n_ratio}, sizes={sizes:?})")
            }
            DesignFamily::File { paths } => format!("file({} designs)", paths.len()),
        }
    }
}

fn round_size(population: usize, n_ratio: f64) -> usize {
    (n_ratio * population as f64).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn equal_families_share_one_probability() {
        let family = DesignFamily::Equal {
            sizes: vec![10, 20],
            n_ratio: 0.5,
        };
        let designs = family.designs().unwrap();
        assert_eq!(designs.len(), 2);
        assert_eq!(designs[0].sample_size(), 5);
        assert!(designs[0].p().iter().all(|&p| p == 0.5));
        assert_eq!(designs[1].population(), 20);
        assert_eq!(designs[1].sample_size(), 10);
    }

    #[test]
    fn equal_families_round_the_sample_size() {
        let family = DesignFamily::Equal {
            sizes: vec![10],
            n_ratio: 0.34,
        };
        let design = family.designs().unwrap().remove(0);
        assert_eq!(design.sample_size(), 3);
        assert!((design.p()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn linear_families_scale_the_ramp_to_the_sample_size() {
        let family = DesignFamily::Linear {
            sizes: vec![8],
            n_ratio: 0.5,
        };
        let design = family.designs().unwrap().remove(0);
        assert_eq!(design.sample_size(), 4);
        let p = design.p();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        let total = stable_sum(p.iter().copied());
        assert!((total - 4.0).abs() < 1e-12);
        // p_1 / p_8 = (1 + 1/8) / (1 + 8/8) = 9/16.
        assert!((p[0] / p[7] - 9.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_preserves_the_recipe() {
        let family = DesignFamily::Linear {
            sizes: vec![64, 128],
            n_ratio: 0.25,
        };
        let text = family.to_json_string();
        assert_eq!(DesignFamily::from_json_str(&text).unwrap(), family);

        let file = DesignFamily::File {
            paths: vec![PathBuf::from("a.json"), PathBuf::from("b.json")],
        };
        let text = file.to_json_string();
        assert_eq!(DesignFamily::from_json_str(&text).unwrap(), file);
    }

    #[test]
    fn unknown_keys_kinds_and_mixed_keys_are_rejected() {
        let cases = [
            r#"{"kind": "equal", "sizes": [4], "n_ratio": 0.5, "bogus": 1}"#,
            r#"{"kind": "cubic", "sizes": [4], "n_ratio": 0.5}"#,
            r#"{"kind": "equal", "sizes": [4]}"#,
            r#"{"kind": "equal", "sizes": [4], "n_ratio": 0.5, "paths": []}"#,
            r#"{"kind": "file", "paths": [], "n_ratio": 0.5}"#,
            r#"{"kind": "equal", "sizes": [4], "n_ratio": 1.5}"#,
        ];
        for text in cases {
            assert!(
                matches!(DesignFamily::from_json_str(text), Err(Error::Parse(_))),
                "accepted: {text}"
            );
        }
    }

    #[test]
    fn file_families_load_design_documents() {
        let mut handle = tempfile::NamedTempFile::new().unwrap();
        write!(handle, r#"{{"p": [0.5, 0.5, 0.5, 0.5], "n": 2}}"#).unwrap();
        let family = DesignFamily::File {
            paths: vec![handle.path().to_path_buf()],
        };
        let designs = family.designs().unwrap();
        assert_eq!(designs.len(), 1);
        assert_eq!(designs[0].population(), 4);

        let missing = DesignFamily::File {
            paths: vec![PathBuf::from("/nonexistent/design.json")],
        };
        assert!(matches!(missing.designs(), Err(Error::Io { .. })));
    }
}
