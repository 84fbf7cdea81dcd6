use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::lhv::{SettingPair, SettingRecord};
use crate::qcore::{BipartiteState, CMatrix};
use crate::states::StateFamily;

const CONVENTION: &str = "row-major, basis index a*dB + b";

/// On-disk density matrix: `dims = [dA, dB]` and `dA·dB × dA·dB` row-major
/// `[re, im]` entries. Local states use `dims = [d, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    pub dims: [usize; 2],
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(s: &BipartiteState) -> Self {
        let (a, b) = s.dims();
        StateFile {
            convention: Some(CONVENTION.into()),
            dims: [a, b],
            matrix: s.matrix().to_pairs(),
        }
    }

    pub fn to_state(&self) -> anyhow::Result<BipartiteState> {
        let [a, b] = self.dims;
        let n = a * b;
        if n == 0 || self.matrix.len() != n * n {
            bail!(
                "state file: dims {a}x{b} need {} entries, found {}",
                n * n,
                self.matrix.len()
            );
        }
        let m = CMatrix::from_pairs(n, &self.matrix)?;
        Ok(BipartiteState::new(a, b, m)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state file serializes")
    }
}

pub fn read_state_file(path: &Path) -> anyhow::Result<BipartiteState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: StateFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing state file {}", path.display()))?;
    file.to_state()
        .with_context(|| format!("invalid state in {}", path.display()))
}

pub fn write_state_file(path: &Path, s: &BipartiteState) -> anyhow::Result<()> {
    fs::write(path, StateFile::from_state(s).to_json() + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// A family keyword or a path to a state file.
pub fn load_state(spec: &str, q: f64) -> anyhow::Result<(String, BipartiteState)> {
    if let Ok(family) = spec.parse::<StateFamily>() {
        return Ok((family.keyword().into(), family.build(q)?));
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("'{spec}' is neither a state family nor an existing file");
    }
    Ok((spec.into(), read_state_file(path)?))
}

/// `ketK` for `|K><K|` on `C^d`, or a state file with `dims = [d, 1]`.
pub fn load_local_state(spec: &str, d: usize) -> anyhow::Result<CMatrix> {
    if let Some(k) = spec.strip_prefix("ket") {
        let k: usize = k
            .parse()
            .with_context(|| format!("bad basis index in '{spec}'"))?;
        if k >= d {
            bail!("'{spec}' is outside dimension {d}");
        }
        return Ok(CMatrix::basis_projector(d, k));
    }
    let s = read_state_file(Path::new(spec))?;
    let (a, b) = s.dims();
    if b != 1 {
        bail!("local state file must have dims [d, 1], got [{a}, {b}]");
    }
    Ok(s.into_matrix())
}

/// Reads a JSON list of setting pairs in the report's `settings` layout.
pub fn read_settings_file(path: &Path) -> anyhow::Result<Vec<SettingPair>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records: Vec<SettingRecord> = serde_json::from_str(&text)
        .with_context(|| format!("invalid settings file {}", path.display()))?;
    records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            r.to_pair()
                .with_context(|| format!("invalid settings file {}: pair {k}", path.display()))
        })
        .collect()
}

/// Comma-separated list of reals.
pub fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .with_context(|| format!("'{t}' is not a number"))
        })
        .collect()
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            out: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}
