//! JSON documents for torus maps and matrix sequences.

use ergodisc_core::torus::{builtin, IntegerLinearSpec, Phase, ShearTerm, Stage, TorusMapExpr, TrigShearSpec};
use ergodisc_core::{Matrix, MatrixSequence};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A map given either by builtin name or by an explicit stage list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapRef {
    Name(String),
    Doc(MapDoc),
}

impl MapRef {
    pub fn resolve(&self) -> Result<TorusMapExpr> {
        match self {
            MapRef::Name(name) => builtin(name).map_err(|e| Error::Config(e.to_string())),
            MapRef::Doc(doc) => doc.to_expr(),
        }
    }

    /// Name used in output file names.
    pub fn default_name(&self) -> &str {
        match self {
            MapRef::Name(name) => name,
            MapRef::Doc(_) => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub stages: Vec<StageDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StageDoc {
    Shear { modify: usize, read: usize, terms: Vec<TermDoc> },
    Linear { matrix: Vec<Vec<i64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub a: f64,
    pub freq: u32,
    pub phase: PhaseDoc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseDoc {
    Cos,
    Sin,
}

impl MapDoc {
    pub fn from_expr(expr: &TorusMapExpr) -> Self {
        let stages = expr
            .stages()
            .iter()
            .map(|s| match s {
                Stage::Shear(sh) => StageDoc::Shear {
                    modify: sh.axis_modified(),
                    read: sh.axis_read(),
                    terms: sh
                        .terms()
                        .iter()
                        .map(|t| TermDoc {
                            a: t.amplitude,
                            freq: t.frequency,
                            phase: match t.phase {
                                Phase::Cos => PhaseDoc::Cos,
                                Phase::Sin => PhaseDoc::Sin,
                            },
                        })
                        .collect(),
                },
                Stage::Linear(l) => StageDoc::Linear { matrix: l.rows() },
            })
            .collect();
        MapDoc { dim: Some(expr.dim()), stages }
    }

    /// Without an explicit `dim`, the dimension is taken from the first
    /// linear stage, or else from the largest axis a shear touches (at least 2).
    pub fn to_expr(&self) -> Result<TorusMapExpr> {
        let inferred = self
            .stages
            .iter()
            .find_map(|s| match s {
                StageDoc::Linear { matrix } => Some(matrix.len()),
                StageDoc::Shear { .. } => None,
            })
            .or_else(|| {
                self.stages
                    .iter()
                    .filter_map(|s| match s {
                        StageDoc::Shear { modify, read, .. } => Some(modify.max(read) + 1),
                        StageDoc::Linear { .. } => None,
                    })
                    .max()
                    .map(|d| d.max(2))
            });
        let dim = self
            .dim
            .or(inferred)
            .ok_or_else(|| Error::Config("map document with no stages needs a `dim`".into()))?;
        let stages = self
            .stages
            .iter()
            .map(|s| match s {
                StageDoc::Shear { modify, read, terms } => {
                    let terms = terms
                        .iter()
                        .map(|t| ShearTerm {
                            amplitude: t.a,
                            frequency: t.freq,
                            phase: match t.phase {
                                PhaseDoc::Cos => Phase::Cos,
                                PhaseDoc::Sin => Phase::Sin,
                            },
                        })
                        .collect();
                    TrigShearSpec::new(*modify, *read, terms).map(Stage::Shear)
                }
                StageDoc::Linear { matrix } => IntegerLinearSpec::new(matrix).map(Stage::Linear),
            })
            .collect::<ergodisc_core::Result<Vec<_>>>()
            .map_err(|e| Error::Config(e.to_string()))?;
        TorusMapExpr::new(dim, stages).map_err(|e| Error::Config(e.to_string()))
    }
}

/// `{dimension, matrices (row-major), translations}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceDoc {
    pub dimension: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translations: Option<Vec<Vec<f64>>>,
}

impl SequenceDoc {
    pub fn from_sequence(seq: &MatrixSequence) -> Self {
        SequenceDoc {
            dimension: seq.dim(),
            matrices: seq.matrices().map(Matrix::rows).collect(),
            translations: seq
                .has_translations()
                .then(|| (0..seq.len()).map(|i| seq.translation(i).to_vec()).collect()),
        }
    }

    pub fn to_sequence(&self) -> Result<MatrixSequence> {
        let config = |e: ergodisc_core::Error| Error::Config(e.to_string());
        let matrices = self.matrices.iter().map(|m| Matrix::from_rows(m)).collect::<ergodisc_core::Result<Vec<_>>>().map_err(config)?;
        if let Some(m) = matrices.iter().find(|m| m.dim() != self.dimension) {
            return Err(Error::Config(format!("matrix of size {} in a sequence of dimension {}", m.dim(), self.dimension)));
        }
        MatrixSequence::new(matrices, self.translations.clone()).map_err(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ergodisc_core::torus::BUILTIN_NAMES;

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN_NAMES {
            let expr = builtin(name).unwrap();
            let json = serde_json::to_string(&MapDoc::from_expr(&expr)).unwrap();
            let back: MapRef = serde_json::from_str(&json).unwrap();
            assert_eq!(back.resolve().unwrap(), expr, "{name}");
        }
    }

    #[test]
    fn parses_documented_form() {
        let json = r#"{"stages":[{"kind":"shear","modify":1,"read":0,"terms":[{"a":0.004784688995215311,"freq":17,"phase":"cos"}]},{"kind":"linear","matrix":[[2,1],[1,1]]}]}"#;
        let m: MapRef = serde_json::from_str(json).unwrap();
        let expr = m.resolve().unwrap();
        assert_eq!(expr.dim(), 2);
        assert_eq!(expr.stages().len(), 2);
        let name: MapRef = serde_json::from_str("\"anosov\"").unwrap();
        assert_eq!(name.default_name(), "anosov");
        assert!(matches!(MapRef::Name("nope".into()).resolve(), Err(Error::Config(_))));
        let bad = r#"{"stages":[{"kind":"linear","matrix":[[2,0],[0,1]]}]}"#;
        assert!(serde_json::from_str::<MapRef>(bad).unwrap().resolve().is_err());
    }

    #[test]
    fn sequence_round_trip() {
        let seq = MatrixSequence::new(
            vec![Matrix::diag(&[2.0, 0.5]), Matrix::identity(2)],
            Some(vec![vec![0.25, 0.0], vec![0.0, -0.5]]),
        )
        .unwrap();
        let doc = SequenceDoc::from_sequence(&seq);
        let json = serde_json::to_string(&doc).unwrap();
        let back: SequenceDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_sequence().unwrap(), seq);
        let plain = SequenceDoc::from_sequence(&ergodisc_core::random_sl_sequence(2, 3, 5.0, 1).unwrap());
        assert!(plain.translations.is_none());
    }
}
