//! JSON dump of the cone programs behind a certification run.
//!
//! Matrices are stored densely as arrays of rows, so a dump can be fed to any
//! external conic solver: minimize `objective·η` subject to
//! `linear.matrix η ≤ linear.rhs` and `‖M η‖₂ ≤ linear·η + constant` for each
//! second-order cone.

use reachcert_core::linalg::Matrix;
use reachcert_core::transcribe::{build_pair_box, build_pair_normball, Layout, LinearRows, SocBlock};
use reachcert_core::{AgentScenario, ConeProgram, UncertaintyKind};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFile {
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocFile {
    pub matrix: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramFile {
    /// Input block for box scenarios, absent for norm balls.
    pub block: Option<usize>,
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub linear: LinearFile,
    pub soc: Vec<SocFile>,
    /// Half-open index ranges `[start, end)` of `y`, `θ` and auxiliary variables.
    pub direction: [usize; 2],
    pub epigraph: [usize; 2],
    pub auxiliary: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDump {
    pub version: u32,
    pub programs: Vec<ProgramFile>,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

impl ProgramFile {
    pub fn from_program(block: Option<usize>, p: &ConeProgram) -> Self {
        let r = |x: &std::ops::Range<usize>| [x.start, x.end];
        Self {
            block,
            num_vars: p.num_vars(),
            objective: p.objective.clone(),
            linear: LinearFile { matrix: rows(&p.linear.matrix), rhs: p.linear.rhs.clone() },
            soc: p
                .soc
                .iter()
                .map(|s| SocFile { matrix: rows(&s.matrix), linear: s.linear.clone(), constant: s.constant })
                .collect(),
            direction: r(&p.layout.direction),
            epigraph: r(&p.layout.epigraph),
            auxiliary: r(&p.layout.auxiliary),
        }
    }

    pub fn to_program(&self) -> Result<ConeProgram, String> {
        let n = self.num_vars;
        let matrix = |rows: &[Vec<f64>], what: &str| {
            if let Some(i) = rows.iter().position(|r| r.len() != n) {
                return Err(format!("{what} row {i} has {} entries, expected {n}", rows[i].len()));
            }
            Ok(Matrix::from_rows(rows, n))
        };
        let linear = LinearRows { matrix: matrix(&self.linear.matrix, "linear")?, rhs: self.linear.rhs.clone() };
        let soc = self
            .soc
            .iter()
            .map(|s| {
                Ok(SocBlock { matrix: matrix(&s.matrix, "soc")?, linear: s.linear.clone(), constant: s.constant })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let layout = Layout {
            direction: self.direction[0]..self.direction[1],
            epigraph: self.epigraph[0]..self.epigraph[1],
            auxiliary: self.auxiliary[0]..self.auxiliary[1],
        };
        ConeProgram::new(self.objective.clone(), linear, soc, layout).map_err(|e| e.to_string())
    }
}

/// Programs for a scenario pair: one for norm balls, one per block for boxes.
pub fn build_programs(a: &AgentScenario, b: &AgentScenario) -> reachcert_core::Result<Vec<(Option<usize>, ConeProgram)>> {
    match a.uncertainty().kind() {
        UncertaintyKind::NormBall => Ok(vec![(None, build_pair_normball(a, b)?)]),
        UncertaintyKind::Box => {
            (0..a.system().m()).map(|j| Ok((Some(j), build_pair_box(a, b, j)?))).collect()
        }
    }
}

pub fn dump(programs: &[(Option<usize>, ConeProgram)]) -> ProgramDump {
    ProgramDump {
        version: FORMAT_VERSION,
        programs: programs.iter().map(|(j, p)| ProgramFile::from_program(*j, p)).collect(),
    }
}

pub fn parse(text: &str) -> Result<ProgramDump, String> {
    let d: ProgramDump = serde_json::from_str(text).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))?;
    if d.version != FORMAT_VERSION {
        return Err(format!("unsupported program dump version {}", d.version));
    }
    Ok(d)
}
