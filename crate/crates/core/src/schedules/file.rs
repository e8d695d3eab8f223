//! JSON schedule files.
//!
//! ```json
//! {"n": 2,
//!  "pieces": [{"t0": 0.0, "t1": 1.0, "entries": [[0, 1, 1.5]]}],
//!  "persistence_hint": [{"from": 1, "to": 0, "class": "persistent"}]}
//! ```
//!
//! Entries are sparse `[i, j, rate]` triples for `a_ij`, indices 0-based;
//! absent entries are 0.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Edge, Persistence, Piece, ScheduleGenerator, WeightSchedule};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceEntry {
    pub t0: f64,
    pub t1: f64,
    pub entries: Vec<(usize, usize, f64)>,
}

impl PieceEntry {
    pub fn from_piece(piece: &Piece) -> Self {
        let n = piece.rates.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let r = piece.rates[(i, j)];
                if r != 0.0 {
                    entries.push((i, j, r));
                }
            }
        }
        PieceEntry { t0: piece.t0, t1: piece.t1, entries }
    }

    pub fn to_piece(&self, n: usize) -> Result<Piece> {
        let mut rates = DMatrix::zeros(n, n);
        for &(i, j, r) in &self.entries {
            if i >= n || j >= n {
                return Err(Error::InvalidSchedule(format!("entry ({i}, {j}) out of range for n = {n}")));
            }
            rates[(i, j)] = r;
        }
        Ok(Piece::new(self.t0, self.t1, rates))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HintEntry {
    pub from: usize,
    pub to: usize,
    pub class: Persistence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub n: usize,
    pub pieces: Vec<PieceEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub persistence_hint: Vec<HintEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<ScheduleGenerator>,
}

impl From<&WeightSchedule> for ScheduleFile {
    fn from(s: &WeightSchedule) -> Self {
        ScheduleFile {
            n: s.n(),
            pieces: s.pieces().iter().map(PieceEntry::from_piece).collect(),
            persistence_hint: s
                .hint()
                .iter()
                .map(|(e, &class)| HintEntry { from: e.from, to: e.to, class })
                .collect(),
            generator: s.generator().cloned(),
        }
    }
}

impl TryFrom<ScheduleFile> for WeightSchedule {
    type Error = Error;

    fn try_from(f: ScheduleFile) -> Result<Self> {
        let pieces = f.pieces.iter().map(|p| p.to_piece(f.n)).collect::<Result<Vec<_>>>()?;
        let mut hint = std::collections::BTreeMap::new();
        for h in &f.persistence_hint {
            if h.from >= f.n || h.to >= f.n {
                return Err(Error::InvalidSchedule(format!("hint edge ({}, {}) out of range", h.from, h.to)));
            }
            hint.insert(Edge::new(h.from, h.to), h.class);
        }
        let mut s = WeightSchedule::new(f.n, pieces)?.with_hint(hint);
        if let Some(g) = f.generator {
            if g.n() != f.n {
                return Err(Error::InvalidSchedule("generator agent count differs from n".into()));
            }
            s = s.with_generator(g);
        }
        Ok(s)
    }
}

impl WeightSchedule {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScheduleFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScheduleFile::from(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
