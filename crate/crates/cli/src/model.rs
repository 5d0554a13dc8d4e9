use std::path::Path;

use serde::{Deserialize, Serialize};
use strlap::{Alphabet, DistanceKind, MixtureParams};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub alphabet: Vec<char>,
    pub metric: String,
    pub k: usize,
    pub components: Vec<ComponentEntry>,
    pub fit: FitMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentEntry {
    pub pi: f64,
    pub lambda: String,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitMetadata {
    pub epsilon: f64,
    pub seed: u64,
    pub restarts: usize,
    pub iters: usize,
    pub weighted_loglik: f64,
}

/// A model file after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub alphabet: Alphabet,
    pub metric: DistanceKind,
    pub params: MixtureParams,
    pub file: ModelFile,
}

impl ModelFile {
    pub fn new(alphabet: &Alphabet, metric: DistanceKind, params: &MixtureParams, fit: FitMetadata) -> Self {
        let components = (0..params.k())
            .map(|g| ComponentEntry {
                pi: params.pi[g],
                lambda: alphabet.render(&params.lambda[g]),
                rho: params.rho[g],
            })
            .collect();
        ModelFile {
            format_version: FORMAT_VERSION,
            alphabet: alphabet.letters().to_vec(),
            metric: metric.name().to_string(),
            k: params.k(),
            components,
            fit,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn validate(self) -> Result<LoadedModel, CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Input(format!("unsupported model format_version {}", self.format_version)));
        }
        let alphabet = Alphabet::new(self.alphabet.iter().copied())?;
        let metric: DistanceKind = self.metric.parse()?;
        if self.components.len() != self.k {
            return Err(CliError::Input(format!("k = {} but {} components listed", self.k, self.components.len())));
        }
        let lambda = self
            .components
            .iter()
            .map(|c| alphabet.parse(&c.lambda))
            .collect::<strlap::Result<Vec<_>>>()?;
        let params = MixtureParams::new(
            self.components.iter().map(|c| c.pi).collect(),
            lambda,
            self.components.iter().map(|c| c.rho).collect(),
        )?;
        Ok(LoadedModel { alphabet, metric, params, file: self })
    }
}

pub fn load(path: &Path) -> Result<LoadedModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    file.validate()
}
