//! JSON run configuration. Missing fields take their defaults; command-line
//! flags override file values; the effective configuration is echoed into
//! every manifest.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use itnn_core::pipeline::PipelineConfig;
use itnn_core::train::{Stage, TrainingHyperparams};
use itnn_core::BlockSize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub steps: usize,
    pub lr_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub qp_set: Vec<i32>,
    pub q: usize,
    /// `"inf"` disables large-block cleansing.
    #[serde(serialize_with = "ser_gamma", deserialize_with = "de_gamma")]
    pub gamma: f64,
    pub iterations: usize,
    /// Block sizes as `"WxH"`.
    pub sizes: Vec<String>,
    pub hidden: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub stages: Vec<StageConfig>,
    pub stage_multiplier: usize,
    pub seed: u64,
}

fn ser_gamma<S: Serializer>(g: &f64, s: S) -> Result<S::Ok, S::Error> {
    if g.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*g)
    }
}

fn de_gamma<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum G {
        Num(f64),
        Text(String),
    }
    match G::deserialize(d)? {
        G::Num(v) => Ok(v),
        G::Text(t) if t == "inf" => Ok(f64::INFINITY),
        G::Text(t) => Err(serde::de::Error::custom(format!("gamma must be a number or \"inf\", got {t:?}"))),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        RunConfig {
            qp_set: p.qp_set,
            q: p.q,
            gamma: p.gamma,
            iterations: p.iterations,
            sizes: p.sizes.iter().map(|s| s.to_string()).collect(),
            hidden: p.hidden,
            batch_size: p.train.batch_size,
            learning_rate: p.train.learning_rate,
            momentum: p.train.momentum,
            weight_decay: p.train.weight_decay,
            stages: p
                .train
                .stages
                .iter()
                .map(|s| StageConfig {
                    steps: s.steps,
                    lr_multiplier: s.lr_multiplier,
                })
                .collect(),
            stage_multiplier: p.train.stage_multiplier,
            seed: p.seed,
        }
    }
}

pub fn parse_size(text: &str) -> Result<BlockSize> {
    let bad = || Error::Config(format!("block size {text:?} is not of the form WxH"));
    let (w, h) = text.split_once('x').ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    Ok(BlockSize::new(h, w))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let cfg = PipelineConfig {
            qp_set: self.qp_set.clone(),
            q: self.q,
            gamma: self.gamma,
            iterations: self.iterations,
            sizes: self.sizes.iter().map(|s| parse_size(s)).collect::<Result<_>>()?,
            hidden: self.hidden,
            train: TrainingHyperparams {
                weight_decay: self.weight_decay,
                batch_size: self.batch_size,
                learning_rate: self.learning_rate,
                momentum: self.momentum,
                stages: self
                    .stages
                    .iter()
                    .map(|s| Stage {
                        steps: s.steps,
                        lr_multiplier: s.lr_multiplier,
                    })
                    .collect(),
                stage_multiplier: self.stage_multiplier,
                seed: 0,
            },
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
