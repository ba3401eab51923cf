//! JSON and text formats for graphs and configurations.
//!
//! Configurations serialize as `{"level", "boundary", "chips"}` and also have
//! a compact one-line form `level boundary c0 c1 ...`.

use serde::{Deserialize, Serialize};

use crate::gasket::{BoundaryCondition, GasketGraph};
use crate::sandpile::Configuration;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphExport {
    pub level: u32,
    pub boundary: BoundaryCondition,
    pub vertices: Vec<[u32; 2]>,
    pub edges: Vec<[usize; 2]>,
    pub beta: Vec<u32>,
}

impl From<&GasketGraph> for GraphExport {
    fn from(g: &GasketGraph) -> Self {
        Self {
            level: g.level(),
            boundary: g.boundary(),
            vertices: g.vertices().iter().map(|c| [c.a, c.b]).collect(),
            edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect(),
            beta: g.betas().to_vec(),
        }
    }
}

pub fn graph_to_json(graph: &GasketGraph) -> Result<String> {
    Ok(serde_json::to_string(&GraphExport::from(graph))?)
}

pub fn config_to_json(config: &Configuration) -> Result<String> {
    Ok(serde_json::to_string(config)?)
}

/// Parses and validates against the graph named in the input.
pub fn config_from_json(s: &str) -> Result<Configuration> {
    let c: Configuration = serde_json::from_str(s)?;
    validated(c)
}

fn validated(c: Configuration) -> Result<Configuration> {
    let graph = GasketGraph::new(c.level(), c.boundary());
    Configuration::new(&graph, c.into_chips())
}

pub fn config_to_compact(config: &Configuration) -> String {
    let mut out = format!("{} {}", config.level(), config.boundary());
    for c in config.chips() {
        out.push(' ');
        out.push_str(&c.to_string());
    }
    out
}

pub fn config_from_compact(s: &str) -> Result<Configuration> {
    let mut words = s.split_whitespace();
    let level = words
        .next()
        .ok_or_else(|| Error::Parse("empty configuration".into()))?
        .parse::<u32>()
        .map_err(|e| Error::Parse(format!("level: {e}")))?;
    let boundary: BoundaryCondition = words
        .next()
        .ok_or_else(|| Error::Parse("missing boundary".into()))?
        .parse()?;
    let chips = words
        .map(|w| w.parse::<u64>().map_err(|e| Error::Parse(format!("chip count `{w}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    validated(Configuration::from_parts(level, boundary, chips))
}

/// Either format, told apart by a leading `{`.
pub fn parse_config(s: &str) -> Result<Configuration> {
    if s.trim_start().starts_with('{') {
        config_from_json(s)
    } else {
        config_from_compact(s)
    }
}
