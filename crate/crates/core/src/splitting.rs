//! Coarse/fine splittings, the exact feasibility check, and the versioned
//! splitting file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{f_row_sum, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    F,
    C,
    /// Undecided; only present while a coarsener is still running.
    U,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfSplitting {
    labels: Vec<Label>,
}

impl CfSplitting {
    pub fn all(n: usize, label: Label) -> Self {
        CfSplitting { labels: vec![label; n] }
    }

    pub fn from_labels(labels: Vec<Label>) -> Self {
        CfSplitting { labels }
    }

    /// Finalized splitting with `F` exactly at `f` and `C` elsewhere.
    pub fn from_f_indices(n: usize, f: &[usize]) -> Result<Self> {
        let mut labels = vec![Label::C; n];
        for &i in f {
            if i >= n {
                return Err(Error::Dimension(format!("F index {i} out of range for n = {n}")));
            }
            labels[i] = Label::F;
        }
        Ok(CfSplitting { labels })
    }

    pub fn from_f_mask(mask: &[bool]) -> Self {
        CfSplitting {
            labels: mask.iter().map(|&f| if f { Label::F } else { Label::C }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn set(&mut self, i: usize, l: Label) {
        self.labels[i] = l;
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn is_finalized(&self) -> bool {
        !self.labels.contains(&Label::U)
    }

    pub fn ensure_finalized(&self) -> Result<()> {
        match self.labels.iter().position(|&l| l == Label::U) {
            Some(i) => Err(Error::Unfinalized(i)),
            None => Ok(()),
        }
    }

    pub fn f_indices(&self) -> Vec<usize> {
        self.indices_of(Label::F)
    }

    pub fn c_indices(&self) -> Vec<usize> {
        self.indices_of(Label::C)
    }

    fn indices_of(&self, l: Label) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == l).collect()
    }

    pub fn f_mask(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l == Label::F).collect()
    }

    pub fn n_f(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::F).count()
    }

    pub fn n_c(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::C).count()
    }

    /// `|F| / n`; an empty splitting reports 0.
    pub fn f_ratio(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.n_f() as f64 / self.labels.len() as f64
        }
    }
}

/// First F-row violating `|a_ii| >= theta Σ_{j∈F}|a_ij|`, if any.
///
/// Comparison is exact floating point with no slack, matching the constraint
/// the coarseners optimize.
pub fn first_violation(a: &CsrMatrix, s: &CfSplitting, theta: f64) -> Option<(usize, f64)> {
    let in_f = s.f_mask();
    for i in 0..s.len() {
        if !in_f[i] {
            continue;
        }
        let d = a.get(i, i).abs();
        let den = f_row_sum(a, &in_f, i);
        if d == 0.0 || d < theta * den {
            return Some((i, if den == 0.0 { 0.0 } else { d / den }));
        }
    }
    None
}

pub fn is_feasible(a: &CsrMatrix, s: &CfSplitting, theta: f64) -> bool {
    s.is_finalized() && first_violation(a, s, theta).is_none()
}

pub fn check_feasible(a: &CsrMatrix, s: &CfSplitting, theta: f64) -> Result<()> {
    s.ensure_finalized()?;
    match first_violation(a, s, theta) {
        Some((row, factor)) => Err(Error::Infeasible { row, factor, theta }),
        None => Ok(()),
    }
}

pub const SPLITTING_FORMAT_VERSION: u32 = 1;

/// On-disk splitting document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingFile {
    pub format_version: u32,
    pub n: usize,
    pub theta: f64,
    pub f_indices: Vec<usize>,
    pub method: String,
    pub seed: Option<u64>,
    #[serde(default)]
    pub provenance: serde_json::Map<String, serde_json::Value>,
}

impl SplittingFile {
    pub fn new(s: &CfSplitting, theta: f64, method: &str, seed: Option<u64>) -> Self {
        SplittingFile {
            format_version: SPLITTING_FORMAT_VERSION,
            n: s.len(),
            theta,
            f_indices: s.f_indices(),
            method: method.to_string(),
            seed,
            provenance: serde_json::Map::new(),
        }
    }

    pub fn splitting(&self) -> Result<CfSplitting> {
        if self.f_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("f_indices must be strictly increasing".into()));
        }
        CfSplitting::from_f_indices(self.n, &self.f_indices)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: SplittingFile = serde_json::from_str(text)?;
        if f.format_version != SPLITTING_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported splitting format_version {}",
                f.format_version
            )));
        }
        Ok(f)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_lists_are_sorted_and_disjoint() {
        let s = CfSplitting::from_labels(vec![Label::C, Label::F, Label::F, Label::C]);
        assert_eq!(s.f_indices(), vec![1, 2]);
        assert_eq!(s.c_indices(), vec![0, 3]);
        assert!(s.is_finalized());
        assert_eq!(s.f_ratio(), 0.5);
        assert!(!CfSplitting::all(2, Label::U).is_finalized());
    }

    #[test]
    fn file_round_trip_is_exact() {
        let s = CfSplitting::from_f_indices(6, &[0, 2, 5]).unwrap();
        let mut f = SplittingFile::new(&s, 0.56, "greedy", Some(7));
        f.provenance.insert("problem".into(), "fd5:2".into());
        let back = SplittingFile::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.splitting().unwrap(), s);
        assert_eq!(back.theta.to_bits(), 0.56f64.to_bits());
    }

    #[test]
    fn file_rejects_wrong_version_and_unsorted() {
        let s = CfSplitting::from_f_indices(3, &[1]).unwrap();
        let mut f = SplittingFile::new(&s, 0.6, "x", None);
        f.format_version = 99;
        let text = serde_json::to_string(&f).unwrap();
        assert!(SplittingFile::from_json(&text).is_err());
        f.format_version = SPLITTING_FORMAT_VERSION;
        f.f_indices = vec![2, 1];
        assert!(f.splitting().is_err());
    }
}
