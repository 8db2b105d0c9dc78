//! Target platform: area budget, PE limit, linear area coefficients,
//! bandwidths and per-access energies.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Platform {
    /// mm² available for PEs and on-chip buffers.
    pub area_budget: f64,
    pub max_pes: u64,
    /// mm² per PE (MAC plus control, excluding L1).
    pub a_pe: f64,
    /// mm² per byte of SRAM.
    pub a_sram: f64,
    pub word_bytes: u64,
    /// Words per cycle between DRAM and L2.
    pub bw_dram: f64,
    /// Words per cycle between L2 and the PE array.
    pub bw_l2: f64,
    pub e_mac: f64,
    pub e_l2: f64,
    pub e_dram: f64,
    /// Optional cap on each of `pi_l1` and `pi_l2`; defaults to `max_pes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_pi_per_level: Option<u64>,
}

const EDGE: &str = include_str!("../data/platforms/edge.toml");
const CLOUD: &str = include_str!("../data/platforms/cloud.toml");

impl Platform {
    pub fn edge() -> Self {
        Self::parse(EDGE).expect("bundled edge profile is valid")
    }

    pub fn cloud() -> Self {
        Self::parse(CLOUD).expect("bundled cloud profile is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let platform: Platform =
            toml::from_str(text).map_err(|e| Error::Parse(format!("platform file: {e}")))?;
        platform.validate()?;
        Ok(platform)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    /// `edge` / `cloud` or a path to a TOML profile.
    pub fn resolve(spec: &str) -> Result<Self> {
        match spec {
            "edge" => Ok(Self::edge()),
            "cloud" => Ok(Self::cloud()),
            path => Self::load(path),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("area_budget", self.area_budget),
            ("a_pe", self.a_pe),
            ("a_sram", self.a_sram),
            ("bw_dram", self.bw_dram),
            ("bw_l2", self.bw_l2),
            ("e_mac", self.e_mac),
            ("e_l2", self.e_l2),
            ("e_dram", self.e_dram),
        ];
        for (field, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "platform field '{field}' must be positive (got {v})"
                )));
            }
        }
        for (field, v) in [
            ("max_pes", self.max_pes),
            ("word_bytes", self.word_bytes),
            ("max_pi_per_level", self.max_pi_per_level.unwrap_or(1)),
        ] {
            if v == 0 {
                return Err(Error::Validation(format!(
                    "platform field '{field}' must be >= 1"
                )));
            }
        }
        Ok(())
    }

    /// Largest value either spatial gene may take.
    pub fn pi_cap(&self) -> u64 {
        self.max_pi_per_level
            .unwrap_or(self.max_pes)
            .min(self.max_pes)
    }

    /// Allowed values for each spatial gene: powers of two up to the cap.
    pub fn pi_choices(&self) -> Vec<u64> {
        let cap = self.pi_cap();
        std::iter::successors(Some(1u64), |p| p.checked_mul(2))
            .take_while(|&p| p <= cap)
            .collect()
    }
}
