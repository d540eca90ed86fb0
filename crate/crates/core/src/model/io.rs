//! JSON instance format.
//!
//! ```json
//! {"m": 2, "n": 2, "n_second": 2, "A": [[..]], "B": [[..]], "c": [..], "d": [..],
//!  "X": {"F": [[..]], "g": [..], "upper": [..] | null},
//!  "U": {"type": "budget", "w": [..]}}
//! ```
//! `n` counts first-stage variables and `n_second` second-stage variables
//! (defaults to `n`). Other set types: `{"type": "intersection", "blocks":
//! [{"support": [..], "weights": [..]}], "disjoint": bool}` and
//! `{"type": "polyhedral", "R": [[..]], "r": [..]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Block, FirstStageSet, Matrix, TwoStageInstance, UncertaintySet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstStageFile {
    #[serde(rename = "F", default)]
    pub f: Vec<Vec<f64>>,
    #[serde(default)]
    pub g: Vec<f64>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockFile {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SetFile {
    Budget {
        w: Vec<f64>,
    },
    Intersection {
        blocks: Vec<BlockFile>,
        #[serde(default)]
        disjoint: bool,
    },
    Polyhedral {
        #[serde(rename = "R")]
        rmat: Vec<Vec<f64>>,
        r: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_second: Option<usize>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    #[serde(rename = "X")]
    pub x: FirstStageFile,
    #[serde(rename = "U")]
    pub u: SetFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_nonnegative: Option<bool>,
    /// Free-form provenance (family, seed, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl SetFile {
    pub fn from_model(u: &UncertaintySet) -> Self {
        match u {
            UncertaintySet::Budget { w } => SetFile::Budget { w: w.clone() },
            UncertaintySet::IntersectionBudgets { blocks, disjoint, .. } => SetFile::Intersection {
                blocks: blocks
                    .iter()
                    .map(|b| BlockFile { support: b.support.clone(), weights: b.weights.clone() })
                    .collect(),
                disjoint: *disjoint,
            },
            UncertaintySet::GeneralPolyhedral { rmat, r } => {
                SetFile::Polyhedral { rmat: rmat.to_rows(), r: r.clone() }
            }
        }
    }

    pub fn into_model(self, m: usize) -> Result<UncertaintySet> {
        let u = match self {
            SetFile::Budget { w } => UncertaintySet::budget(w)?,
            SetFile::Intersection { blocks, disjoint } => UncertaintySet::intersection(
                m,
                blocks.into_iter().map(|b| Block::new(b.support, b.weights)).collect(),
                disjoint,
            )?,
            SetFile::Polyhedral { rmat, r } => UncertaintySet::polyhedral(Matrix::from_rows(&rmat, m)?, r)?,
        };
        if u.dim() != m {
            return Err(Error::DimensionMismatch(format!("set dimension {} but m = {m}", u.dim())));
        }
        Ok(u)
    }
}

impl InstanceFile {
    pub fn from_model(inst: &TwoStageInstance, u: &UncertaintySet, meta: Option<serde_json::Value>) -> Self {
        Self {
            m: inst.m(),
            n: inst.n_first(),
            n_second: Some(inst.n_second()),
            a: inst.a.to_rows(),
            b: inst.b.to_rows(),
            c: inst.c.clone(),
            d: inst.d.clone(),
            x: FirstStageFile {
                f: inst.first_stage.f.to_rows(),
                g: inst.first_stage.g.clone(),
                upper: inst.first_stage.upper.clone(),
            },
            u: SetFile::from_model(u),
            b_nonnegative: Some(inst.b_nonnegative()),
            meta,
        }
    }

    pub fn into_model(self) -> Result<(TwoStageInstance, UncertaintySet)> {
        let n_second = self.n_second.unwrap_or(self.n);
        let a = Matrix::from_rows(&self.a, self.n)?;
        let b = Matrix::from_rows(&self.b, n_second)?;
        if a.rows() != self.m || a.cols() != self.n || b.cols() != n_second {
            return Err(Error::DimensionMismatch("declared m/n disagree with matrix shapes".into()));
        }
        let first_stage = FirstStageSet {
            f: Matrix::from_rows(&self.x.f, self.n)?,
            g: self.x.g,
            upper: self.x.upper,
        };
        let inst = TwoStageInstance::new(a, b, self.c, self.d, first_stage)?;
        if let Some(flag) = self.b_nonnegative {
            if flag != inst.b_nonnegative() {
                return Err(Error::InvalidInstance("b_nonnegative flag disagrees with B".into()));
            }
        }
        let u = self.u.into_model(self.m)?;
        Ok((inst, u))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files contain only finite numbers")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
