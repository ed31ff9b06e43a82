//! Scenario files: two agents sharing relative degrees and a time grid.
//!
//! ```json
//! {
//!   "version": 1,
//!   "relative_degree": [2],
//!   "horizon": 1.0,
//!   "steps": 10,
//!   "agent_a": { "x0": [0, 0], "input": { "type": "box", "alpha": -1, "beta": 1 } },
//!   "agent_b": { "x0": [3, 0], "input": { "type": "norm_ball", "p": "inf", "ell": 1 } }
//! }
//! ```
//!
//! Scalars expand to constant sample arrays of length `steps + 1`; box bounds
//! may also be given per block, each either a scalar or an array.

use std::fmt;

use reachcert_core::{AgentScenario, IntegratorSystem, NormExponent, TimeGrid, UncertaintyModel};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}:{line}:{column}: {message}")]
    Syntax { path: String, line: usize, column: usize, message: String },
    #[error("{path}:{line}: field `{field}`: {message}")]
    Field { path: String, line: usize, field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Norm exponent as written in files: `1`, `2` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PExponent(pub NormExponent);

impl Serialize for PExponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            NormExponent::One => s.serialize_u64(1),
            NormExponent::Two => s.serialize_u64(2),
            NormExponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct PVisitor;
        impl Visitor<'_> for PVisitor {
            type Value = PExponent;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("1, 2 or \"inf\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<PExponent, E> {
                match v {
                    1 => Ok(PExponent(NormExponent::One)),
                    2 => Ok(PExponent(NormExponent::Two)),
                    _ => Err(E::invalid_value(de::Unexpected::Unsigned(v), &self)),
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<PExponent, E> {
                u64::try_from(v)
                    .map_err(|_| E::invalid_value(de::Unexpected::Signed(v), &self))
                    .and_then(|v| self.visit_u64(v))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<PExponent, E> {
                NormExponent::from_f64(v)
                    .map(PExponent)
                    .map_err(|_| E::invalid_value(de::Unexpected::Float(v), &self))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<PExponent, E> {
                match v {
                    "inf" | "infinity" => Ok(PExponent(NormExponent::Infinity)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(PVisitor)
    }
}

/// A sample array or a scalar standing for a constant one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    Scalar(f64),
    Array(Vec<f64>),
}

impl Samples {
    fn expand(&self, len: usize) -> Vec<f64> {
        match self {
            Self::Scalar(v) => vec![*v; len],
            Self::Array(v) => v.clone(),
        }
    }
}

/// Box bounds: one scalar for every block, or one entry per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockSamples {
    Scalar(f64),
    Blocks(Vec<Samples>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputFile {
    NormBall { p: PExponent, ell: Samples },
    Box { alpha: BlockSamples, beta: BlockSamples },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub x0: Vec<f64>,
    pub input: InputFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub relative_degree: Vec<usize>,
    pub horizon: f64,
    pub steps: usize,
    pub agent_a: AgentFile,
    pub agent_b: AgentFile,
}

/// A loaded scenario with the raw bytes it came from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub a: AgentScenario,
    pub b: AgentScenario,
    pub bytes: Vec<u8>,
}

impl Scenario {
    pub fn agent(&self, tag: AgentTag) -> &AgentScenario {
        match tag {
            AgentTag::A => &self.a,
            AgentTag::B => &self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AgentTag {
    A,
    B,
}

/// `(field path, message)` of the first invalid field.
type FieldError = (String, String);

impl ScenarioFile {
    pub fn samples(&self) -> usize {
        self.steps + 1
    }

    /// Copy with every shorthand expanded to full sample arrays.
    pub fn expanded(&self) -> ScenarioFile {
        let len = self.samples();
        let m = self.relative_degree.len();
        let expand_agent = |a: &AgentFile| AgentFile {
            x0: a.x0.clone(),
            input: match &a.input {
                InputFile::NormBall { p, ell } => InputFile::NormBall { p: *p, ell: Samples::Array(ell.expand(len)) },
                InputFile::Box { alpha, beta } => {
                    let blocks = |b: &BlockSamples| {
                        BlockSamples::Blocks(
                            block_arrays(b, m, len).into_iter().map(Samples::Array).collect(),
                        )
                    };
                    InputFile::Box { alpha: blocks(alpha), beta: blocks(beta) }
                }
            },
        };
        ScenarioFile {
            version: self.version,
            relative_degree: self.relative_degree.clone(),
            horizon: self.horizon,
            steps: self.steps,
            agent_a: expand_agent(&self.agent_a),
            agent_b: expand_agent(&self.agent_b),
        }
    }

    fn validate(&self) -> Result<(), FieldError> {
        let err = |f: &str, m: String| Err((f.to_string(), m));
        if self.version != FORMAT_VERSION {
            return err("version", format!("unsupported version {}, expected {FORMAT_VERSION}", self.version));
        }
        if self.relative_degree.is_empty() {
            return err("relative_degree", "needs at least one block".into());
        }
        if let Some(j) = self.relative_degree.iter().position(|r| !(1..=reachcert_core::MAX_RELATIVE_DEGREE).contains(r))
        {
            return err(
                &format!("relative_degree[{j}]"),
                format!("must be between 1 and {}", reachcert_core::MAX_RELATIVE_DEGREE),
            );
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return err("horizon", "must be a positive finite number".into());
        }
        if self.steps == 0 {
            return err("steps", "must be at least 1".into());
        }
        let n: usize = self.relative_degree.iter().sum();
        let m = self.relative_degree.len();
        let len = self.samples();
        for (tag, agent) in [("agent_a", &self.agent_a), ("agent_b", &self.agent_b)] {
            if agent.x0.len() != n {
                return err(&format!("{tag}.x0"), format!("has {} entries, expected n = {n}", agent.x0.len()));
            }
            match &agent.input {
                InputFile::NormBall { ell, .. } => {
                    check_samples(&format!("{tag}.input.ell"), ell, len)?;
                    if let Some(k) = ell.expand(len).iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                        return err(&format!("{tag}.input.ell[{k}]"), "must be positive and finite".into());
                    }
                }
                InputFile::Box { alpha, beta } => {
                    for (name, b) in [("alpha", alpha), ("beta", beta)] {
                        let field = format!("{tag}.input.{name}");
                        if let BlockSamples::Blocks(blocks) = b {
                            if blocks.len() != m {
                                return err(&field, format!("has {} blocks, expected m = {m}", blocks.len()));
                            }
                            for (j, s) in blocks.iter().enumerate() {
                                check_samples(&format!("{field}[{j}]"), s, len)?;
                            }
                        }
                    }
                    let (lo, hi) = (block_arrays(alpha, m, len), block_arrays(beta, m, len));
                    for j in 0..m {
                        for k in 0..len {
                            if !(lo[j][k].is_finite() && hi[j][k].is_finite()) {
                                return err(&format!("{tag}.input.alpha[{j}][{k}]"), "bounds must be finite".into());
                            }
                            if lo[j][k] > hi[j][k] {
                                return err(
                                    &format!("{tag}.input.alpha[{j}][{k}]"),
                                    format!("alpha {} exceeds beta {}", lo[j][k], hi[j][k]),
                                );
                            }
                        }
                    }
                }
            }
        }
        let kind = |a: &AgentFile| matches!(a.input, InputFile::Box { .. });
        if kind(&self.agent_a) != kind(&self.agent_b) {
            return err("agent_b.input.type", "both agents must use the same uncertainty type".into());
        }
        if let (InputFile::NormBall { p: pa, .. }, InputFile::NormBall { p: pb, .. }) =
            (&self.agent_a.input, &self.agent_b.input)
        {
            if pa != pb {
                return err("agent_b.input.p", "both agents must use the same norm exponent".into());
            }
        }
        Ok(())
    }

    fn build(&self) -> Result<(AgentScenario, AgentScenario), FieldError> {
        self.validate()?;
        let core = |field: &str, e: reachcert_core::Error| (field.to_string(), e.to_string());
        let sys = IntegratorSystem::new(self.relative_degree.clone()).map_err(|e| core("relative_degree", e))?;
        let grid = TimeGrid::new(self.horizon, self.steps).map_err(|e| core("steps", e))?;
        let m = self.relative_degree.len();
        let len = self.samples();
        let agent = |tag: &str, a: &AgentFile| {
            let u = match &a.input {
                InputFile::NormBall { p, ell } => UncertaintyModel::norm_ball(p.0, ell.expand(len)),
                InputFile::Box { alpha, beta } => {
                    UncertaintyModel::box_bounds(block_arrays(alpha, m, len), block_arrays(beta, m, len))
                }
            }
            .map_err(|e| core(&format!("{tag}.input"), e))?;
            AgentScenario::new(sys.clone(), a.x0.clone(), u, grid).map_err(|e| core(tag, e))
        };
        Ok((agent("agent_a", &self.agent_a)?, agent("agent_b", &self.agent_b)?))
    }
}

fn check_samples(field: &str, s: &Samples, len: usize) -> Result<(), FieldError> {
    match s {
        Samples::Array(v) if v.len() != len => {
            Err((field.to_string(), format!("has {} samples, expected steps + 1 = {len}", v.len())))
        }
        _ => Ok(()),
    }
}

fn block_arrays(b: &BlockSamples, m: usize, len: usize) -> Vec<Vec<f64>> {
    match b {
        BlockSamples::Scalar(v) => vec![vec![*v; len]; m],
        BlockSamples::Blocks(blocks) => blocks.iter().map(|s| s.expand(len)).collect(),
    }
}

/// 1-based line of the last component of a dotted field path, found by
/// scanning for each key in turn; 0 if the key cannot be found.
fn locate(text: &str, field: &str) -> usize {
    let mut at = 0;
    for key in field.split('.') {
        let key = key.split('[').next().unwrap_or(key);
        let needle = format!("\"{key}\"");
        match text[at..].find(&needle) {
            Some(i) => at += i,
            None => return 0,
        }
    }
    text[..at].lines().count().max(1)
}

/// Parses and validates scenario text; `path` is only used in diagnostics.
pub fn parse(text: &str, path: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
        // serde_json appends the position, which the diagnostic already leads with
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
        ScenarioError::Syntax { path: path.to_string(), line: e.line(), column: e.column(), message }
    })?;
    let (a, b) = file.build().map_err(|(field, message)| ScenarioError::Field {
        path: path.to_string(),
        line: locate(text, &field),
        field,
        message,
    })?;
    Ok(Scenario { file, a, b, bytes: text.as_bytes().to_vec() })
}

pub fn load(path: &str) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_string(), source })?;
    parse(&text, path)
}
