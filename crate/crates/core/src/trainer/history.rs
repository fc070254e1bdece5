use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "step,total,l_pos,l_neg,hinge_frac";

/// Batch means for one optimizer step. `l_neg` and `hinge_frac` are taken
/// over the samples that had a negative; `l_neg` is NaN when none did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub total: f64,
    pub l_pos: f64,
    pub l_neg: f64,
    pub hinge_frac: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<StepRecord>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{},{}\n", r.step, r.total, r.l_pos, r.l_neg, r.hinge_frac));
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err(err(1, format!("expected header `{CSV_HEADER}`"))),
        }
        let mut records: Vec<StepRecord> = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(err(i + 1, "expected 5 columns".into()));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(i + 1, e.to_string()));
            let step: usize = f[0].parse().map_err(|e: std::num::ParseIntError| err(i + 1, e.to_string()))?;
            if records.last().is_some_and(|r| r.step >= step) {
                return Err(err(i + 1, "steps must be strictly increasing".into()));
            }
            records.push(StepRecord {
                step,
                total: num(f[1])?,
                l_pos: num(f[2])?,
                l_neg: num(f[3])?,
                hinge_frac: num(f[4])?,
            });
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, path)
    }
}
