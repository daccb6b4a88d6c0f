use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Halfspace, Polytope, GEOM_TOL};
use crate::error::{Error, Result};

/// On-disk polytope description. Normals need not be unit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeFile {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<Vec<[f64; 2]>>,
}

impl PolytopeFile {
    pub fn from_polytope(p: &Polytope) -> Self {
        PolytopeFile {
            dim: p.dim(),
            halfspaces: p.halfspaces().to_vec(),
            bbox: Some(p.bounding_box().iter().map(|(a, b)| [*a, *b]).collect()),
        }
    }

    pub fn into_polytope(self) -> Result<Polytope> {
        let p = Polytope::new(self.dim, self.halfspaces)?;
        if let Some(bbox) = self.bbox {
            if bbox.len() != p.dim() {
                return Err(Error::Domain("bbox has wrong dimension".into()));
            }
            for (i, ((lo, hi), [a, b])) in p.bounding_box().iter().zip(&bbox).enumerate() {
                if *lo < a - GEOM_TOL || *hi > b + GEOM_TOL {
                    return Err(Error::Domain(format!(
                        "polytope leaves its bounding box along axis {i}: [{lo}, {hi}] vs [{a}, {b}]"
                    )));
                }
            }
        }
        Ok(p)
    }

    pub fn parse(text: &str) -> Result<Polytope> {
        serde_json::from_str::<PolytopeFile>(text)?.into_polytope()
    }

    pub fn load(path: &Path) -> Result<Polytope> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(p: &Polytope) -> String {
        serde_json::to_string_pretty(&Self::from_polytope(p)).expect("polytope serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_unnormalized() {
        let text = r#"{"dim": 1, "halfspaces": [{"normal": [2.0], "offset": 0.0},
            {"normal": [-4.0], "offset": -4.0}], "bbox": [[0.0, 1.0]]}"#;
        let p = PolytopeFile::parse(text).unwrap();
        assert_eq!(p.halfspaces()[1].normal, vec![-1.0]);
        assert_eq!(p.halfspaces()[1].offset, -1.0);
    }

    #[test]
    fn bbox_violation() {
        let text = r#"{"dim": 1, "halfspaces": [{"normal": [1.0], "offset": 0.0},
            {"normal": [-1.0], "offset": -2.0}], "bbox": [[0.0, 1.0]]}"#;
        assert!(PolytopeFile::parse(text).is_err());
    }

    #[test]
    fn roundtrip() {
        let p = crate::geometry::shapes::pentagon();
        let q = PolytopeFile::parse(&PolytopeFile::to_json(&p)).unwrap();
        assert_eq!(p, q);
    }
}
