//! JSON checkpoint format for genomes.

use serde::{Deserialize, Serialize};

use super::{Dim, Genome, LevelGene, MappingChromosome};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::workload::Model;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TileFile {
    #[serde(rename = "K")]
    k: u64,
    #[serde(rename = "C")]
    c: u64,
    #[serde(rename = "Y")]
    y: u64,
    #[serde(rename = "X")]
    x: u64,
    #[serde(rename = "R")]
    r: u64,
    #[serde(rename = "S")]
    s: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelFile {
    pi: u64,
    parallel_dim: String,
    order: String,
    tiles: TileFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingFile {
    layer: String,
    l2: LevelFile,
    l1: LevelFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenomeFile {
    model: String,
    pi_l2: u64,
    pi_l1: u64,
    mappings: Vec<MappingFile>,
}

impl LevelFile {
    fn from_gene(g: &LevelGene) -> Self {
        let [k, c, y, x, r, s] = g.tiles;
        Self {
            pi: g.pi,
            parallel_dim: g.parallel_dim.to_string(),
            order: g.order_string(),
            tiles: TileFile { k, c, y, x, r, s },
        }
    }

    fn into_gene(self, field: &str) -> Result<LevelGene> {
        let invalid = |what: String| Error::Validation(format!("{field}.{what}"));
        let parallel_dim: Dim = self
            .parallel_dim
            .parse()
            .map_err(|e| invalid(format!("parallel_dim: {e}")))?;
        let letters: Vec<char> = self.order.chars().collect();
        if letters.len() != 6 {
            return Err(invalid(format!(
                "order: '{}' must list all six dims",
                self.order
            )));
        }
        let mut order = [Dim::K; 6];
        let mut seen = [false; 6];
        for (slot, c) in order.iter_mut().zip(letters) {
            let d =
                Dim::from_letter(c).ok_or_else(|| invalid(format!("order: unknown dim '{c}'")))?;
            if std::mem::replace(&mut seen[d.index()], true) {
                return Err(invalid(format!(
                    "order: '{}' repeats dim '{c}'",
                    self.order
                )));
            }
            *slot = d;
        }
        let t = self.tiles;
        let tiles = [t.k, t.c, t.y, t.x, t.r, t.s];
        if let Some(d) = Dim::ALL.into_iter().find(|d| tiles[d.index()] == 0) {
            return Err(invalid(format!("tiles.{d}: must be >= 1")));
        }
        if self.pi == 0 {
            return Err(invalid("pi: must be >= 1".into()));
        }
        Ok(LevelGene {
            pi: self.pi,
            parallel_dim,
            order,
            tiles,
        })
    }
}

/// Serializes a genome with the owning model's layer names.
pub fn genome_to_json(genome: &Genome, model: &Model) -> String {
    let file = GenomeFile {
        model: model.name.clone(),
        pi_l2: genome.pi_l2,
        pi_l1: genome.pi_l1,
        mappings: genome
            .mappings
            .iter()
            .zip(&model.layers)
            .map(|(ch, layer)| MappingFile {
                layer: layer.name.clone(),
                l2: LevelFile::from_gene(&ch.l2),
                l1: LevelFile::from_gene(&ch.l1),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("genome serializes");
    text.push('\n');
    text
}

/// Parses a checkpoint and checks it is a legal genome for `model`.
pub fn genome_from_json(text: &str, model: &Model, platform: &Platform) -> Result<Genome> {
    let file: GenomeFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("genome checkpoint: {e}")))?;
    if file.mappings.len() != model.layers.len() {
        return Err(Error::Validation(format!(
            "mappings: checkpoint has {} layers, model '{}' has {}",
            file.mappings.len(),
            model.name,
            model.layers.len()
        )));
    }
    let mut mappings = Vec::with_capacity(file.mappings.len());
    for (i, (m, layer)) in file.mappings.into_iter().zip(&model.layers).enumerate() {
        if m.layer != layer.name {
            return Err(Error::Validation(format!(
                "mappings[{i}].layer: '{}' does not match model layer '{}'",
                m.layer, layer.name
            )));
        }
        mappings.push(MappingChromosome {
            l2: m.l2.into_gene(&format!("mappings[{i}].l2"))?,
            l1: m.l1.into_gene(&format!("mappings[{i}].l1"))?,
        });
    }
    let genome = Genome {
        pi_l2: file.pi_l2,
        pi_l1: file.pi_l1,
        mappings,
    };
    if !super::is_legal(&genome, model, platform) {
        return Err(Error::Validation(
            "genome violates tile, spatial or PE-count limits for this model and platform".into(),
        ));
    }
    Ok(genome)
}
