//! Training-data extraction from codec partitions, cleansing, and the
//! iterative retraining loop.
//!
//! Iteration 0 encodes every image with the classic codec and collects a
//! (context, block) pair per leaf. Later iterations encode with the NN mode
//! enabled, keep only the leaves that pass the cleansing rule, and retrain
//! each predictor starting from the previous iteration's parameters.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::codec::{encode_frame, BlockRecord, CodecConfig, Models, CTB_SIZE};
use crate::exec::Executor;
use crate::frame::{BlockSize, Corpus, LumaPlane};
use crate::hash::{self, fnv1a, TAG_INIT, TAG_QP, TAG_SHUFFLE, TAG_TRAIN};
use crate::nn::{extract_context_with_counts, preprocess, NetworkDims, NetworkParams, HIDDEN_WIDTH};
use crate::train::{init_params, train, TrainingHyperparams, TrainingSet};
use crate::{Error, Result, NN_MODE};

pub const DEFAULT_QP_SET: [i32; 5] = [22, 27, 32, 37, 42];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub qp_set: Vec<i32>,
    /// Most pairs one image may add to one size's set.
    pub q: usize,
    /// Cleansing threshold: a leaf is kept when `d_nn <= gamma * d_c`.
    pub gamma: f64,
    /// Number of iterations `l`.
    pub iterations: usize,
    /// Block sizes that get a predictor.
    pub sizes: Vec<BlockSize>,
    /// Hidden width of the predictors.
    pub hidden: usize,
    /// Optimizer settings; `stage_multiplier` is `p`. The seed is derived
    /// per iteration and size from `seed` below.
    pub train: TrainingHyperparams,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            qp_set: DEFAULT_QP_SET.to_vec(),
            q: 20,
            gamma: 1.05,
            iterations: 3,
            sizes: crate::frame::default_sizes(),
            hidden: HIDDEN_WIDTH,
            train: TrainingHyperparams::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.q == 0 {
            return bad("q must be at least 1");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if self.iterations == 0 {
            return bad("the iteration count l must be at least 1");
        }
        if self.qp_set.is_empty() || self.qp_set.iter().any(|qp| !(0..=crate::codec::MAX_QP).contains(qp)) {
            return bad("the QP set must be non-empty with QPs in 0..=51");
        }
        if self.sizes.is_empty() || self.hidden == 0 {
            return bad("at least one block size and a positive hidden width are needed");
        }
        crate::codec::sizes_to_mask(&self.sizes)?;
        self.train.validate()
    }

    pub fn dims(&self, size: BlockSize) -> NetworkDims {
        NetworkDims::with_hidden(size, self.hidden)
    }
}

/// QP for an image, uniform over `qp_set` and keyed only by the seed and
/// the image id, so it does not depend on processing order.
pub fn draw_qp(seed: u64, image_id: &str, qp_set: &[i32]) -> i32 {
    let h = hash::mix(seed, &[TAG_QP, fnv1a(image_id.as_bytes())]);
    qp_set[(h % qp_set.len() as u64) as usize]
}

/// The cleansing rule. For split transform blocks and 4x4 blocks a leaf is
/// kept only if it chose the NN mode; otherwise it is kept when
/// `d_nn <= gamma * d_c`.
pub fn cleansing_decision(record: &BlockRecord, gamma: f64) -> Result<bool> {
    if record.is_split_tbs || record.h.max(record.w) <= 4 {
        return Ok(record.s == NN_MODE);
    }
    let d_nn = record.d_nn.ok_or(Error::MissingDistortion(record.size()))?;
    // An infinite threshold accepts everything, even against d_c = 0.
    Ok(gamma == f64::INFINITY || d_nn <= gamma * record.d_c)
}

/// Where a training pair came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Provenance {
    pub image: String,
    pub x: usize,
    pub y: usize,
    pub qp: i32,
    pub iteration: usize,
}

/// One size's training set with per-pair provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeData {
    pub set: TrainingSet,
    pub provenance: Vec<Provenance>,
    /// Leaves that reached the acceptance test (size served, context in
    /// frame, cap not yet reached).
    pub examined: usize,
    pub accepted: usize,
}

/// Per-image log: every leaf in the order it was examined (after the
/// shuffle) and whether it produced a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageLog {
    pub id: String,
    pub qp: i32,
    pub records: Vec<BlockRecord>,
    pub accepted: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub iteration: usize,
    pub with_nn: bool,
    pub sizes: BTreeMap<BlockSize, SizeData>,
    pub images: Vec<ImageLog>,
}

impl Partition {
    fn new(iteration: usize, with_nn: bool, sizes: &[BlockSize]) -> Self {
        Partition {
            iteration,
            with_nn,
            sizes: sizes
                .iter()
                .map(|&s| {
                    (
                        s,
                        SizeData {
                            set: TrainingSet::new(s),
                            provenance: Vec::new(),
                            examined: 0,
                            accepted: 0,
                        },
                    )
                })
                .collect(),
            images: Vec::new(),
        }
    }
}

struct ImagePairs {
    log: ImageLog,
    pairs: Vec<(BlockSize, Vec<f32>, Vec<f32>, usize, usize)>,
    examined: BTreeMap<BlockSize, usize>,
}

fn process_image(
    id: &str,
    plane: &LumaPlane,
    cfg: &PipelineConfig,
    models: Option<&Models>,
) -> Result<ImagePairs> {
    let qp = draw_qp(cfg.seed, id, &cfg.qp_set);
    let orig = plane.pad_to_multiple(CTB_SIZE);
    let sizes = if models.is_some() { cfg.sizes.clone() } else { Vec::new() };
    let empty = Models::new();
    let encoded = encode_frame(&orig, &CodecConfig::new(qp, sizes), models.unwrap_or(&empty))?;
    let recon = encoded.recon;
    let mut records = encoded.records;
    let mut rng = hash::rng(cfg.seed, &[TAG_SHUFFLE, fnv1a(id.as_bytes())]);
    records.shuffle(&mut rng);

    let mut count: BTreeMap<BlockSize, usize> = BTreeMap::new();
    let mut examined: BTreeMap<BlockSize, usize> = BTreeMap::new();
    let mut accepted = vec![false; records.len()];
    let mut pairs = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let size = r.size();
        let n = size.min_side();
        if !cfg.sizes.contains(&size) || r.x < n || r.y < n {
            continue;
        }
        let c = count.entry(size).or_insert(0);
        if *c >= cfg.q {
            continue;
        }
        *examined.entry(size).or_insert(0) += 1;
        if models.is_some() && !cleansing_decision(r, cfg.gamma)? {
            continue;
        }
        *c += 1;
        accepted[i] = true;
        let raw = extract_context_with_counts(&recon, r.x, r.y, size, r.n0, r.n1)?;
        let pre = preprocess(&raw);
        let x_c = pre.x_c.iter().map(|&v| v as f32).collect();
        let y_c = orig
            .block(r.x, r.y, r.w, r.h)?
            .iter()
            .map(|&v| (f64::from(v) - pre.mu) as f32)
            .collect();
        pairs.push((size, x_c, y_c, r.x, r.y));
    }
    Ok(ImagePairs {
        log: ImageLog {
            id: id.into(),
            qp,
            records,
            accepted,
        },
        pairs,
        examined,
    })
}

fn collect(
    corpus: &Corpus,
    cfg: &PipelineConfig,
    models: Option<&Models>,
    iteration: usize,
    exec: &impl Executor,
) -> Result<Partition> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(m) = models {
        for &s in &cfg.sizes {
            if !m.contains_key(&s) {
                return Err(Error::MissingParams(s));
            }
        }
    }
    let results = exec.map(corpus.len(), |i| {
        let e = &corpus.entries()[i];
        process_image(&e.id, &e.plane, cfg, models)
    });
    let mut out = Partition::new(iteration, models.is_some(), &cfg.sizes);
    for result in results {
        let img = result?;
        for (size, n) in &img.examined {
            out.sizes.get_mut(size).unwrap().examined += n;
        }
        for (size, x_c, y_c, x, y) in img.pairs {
            let data = out.sizes.get_mut(&size).unwrap();
            data.set.push_slices(&x_c, &y_c)?;
            data.accepted += 1;
            data.provenance.push(Provenance {
                image: img.log.id.clone(),
                x,
                y,
                qp: img.log.qp,
                iteration,
            });
        }
        out.images.push(img.log);
    }
    Ok(out)
}

/// Dataset extraction with the classic codec: per image a seeded QP, a
/// seeded shuffle of the leaves, and at most `q` pairs per size. The block
/// is cut from the original image and the context from the reconstruction.
pub fn get_partition(corpus: &Corpus, cfg: &PipelineConfig, exec: &impl Executor) -> Result<Partition> {
    collect(corpus, cfg, None, 0, exec)
}

/// As [`get_partition`] but encoding with the NN mode on and keeping only
/// leaves that pass [`cleansing_decision`]. The cap counts kept pairs.
pub fn get_partition_nn(
    corpus: &Corpus,
    models: &Models,
    cfg: &PipelineConfig,
    iteration: usize,
    exec: &impl Executor,
) -> Result<Partition> {
    collect(corpus, cfg, Some(models), iteration, exec)
}

/// Training summary of one size in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeReport {
    pub size: BlockSize,
    pub pairs: usize,
    pub examined: usize,
    pub accepted: usize,
    /// False when the set was empty and the parameters were carried over.
    pub trained: bool,
    pub init_digest: [u8; 32],
    pub final_digest: [u8; 32],
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub index: usize,
    /// True for the NN-codec extraction with cleansing.
    pub cleansing: bool,
    pub sizes: Vec<SizeReport>,
}

/// Hooks for persisting intermediate results.
pub trait Observer {
    fn partition(&mut self, _partition: &Partition) -> Result<()> {
        Ok(())
    }

    fn trained(&mut self, _iteration: usize, _models: &Models, _report: &IterationReport) -> Result<()> {
        Ok(())
    }
}

/// An observer that does nothing.
pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub models: Models,
    pub iterations: Vec<IterationReport>,
}

fn initial_models(cfg: &PipelineConfig) -> Models {
    cfg.sizes
        .iter()
        .map(|&s| (s, init_params(hash::mix(cfg.seed, &[TAG_INIT, size_tag(s)]), s, cfg.dims(s))))
        .collect()
}

fn size_tag(s: BlockSize) -> u64 {
    (s.h as u64) << 32 | s.w as u64
}

fn train_all(
    partition: &Partition,
    start: &Models,
    cfg: &PipelineConfig,
    exec: &impl Executor,
) -> Result<(Models, IterationReport)> {
    let sizes: Vec<BlockSize> = cfg.sizes.clone();
    let results = exec.map(sizes.len(), |i| -> Result<(NetworkParams, SizeReport)> {
        let size = sizes[i];
        let data = &partition.sizes[&size];
        let init = &start[&size];
        let (params, losses, trained) = if data.set.is_empty() {
            (init.clone(), Vec::new(), false)
        } else {
            let hp = TrainingHyperparams {
                seed: hash::mix(cfg.seed, &[TAG_TRAIN, partition.iteration as u64, size_tag(size)]),
                ..cfg.train.clone()
            };
            let out = train(&data.set, init, &hp)?;
            (out.params, out.losses, true)
        };
        let report = SizeReport {
            size,
            pairs: data.set.len(),
            examined: data.examined,
            accepted: data.accepted,
            trained,
            init_digest: init.digest(),
            final_digest: params.digest(),
            losses,
        };
        Ok((params, report))
    });
    let mut models = Models::new();
    let mut reports = Vec::new();
    for r in results {
        let (params, report) = r?;
        models.insert(report.size, params);
        reports.push(report);
    }
    Ok((
        models,
        IterationReport {
            index: partition.iteration,
            cleansing: partition.with_nn,
            sizes: reports,
        },
    ))
}

/// The iterative training loop: iteration 0 extracts with the classic codec
/// and trains from seeded initial parameters; each further iteration
/// extracts with the NN codec using the previous parameters and retrains
/// from them.
pub fn iterative_train(
    corpus: &Corpus,
    cfg: &PipelineConfig,
    exec: &impl Executor,
    observer: &mut impl Observer,
) -> Result<TrainOutput> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut models = initial_models(cfg);
    let mut iterations = Vec::new();
    for it in 0..cfg.iterations {
        let wrap = |e: Error| Error::Iteration {
            index: it,
            source: Box::new(e),
        };
        let partition = if it == 0 {
            get_partition(corpus, cfg, exec)
        } else {
            get_partition_nn(corpus, &models, cfg, it, exec)
        }
        .map_err(wrap)?;
        observer.partition(&partition).map_err(wrap)?;
        let (next, report) = train_all(&partition, &models, cfg, exec).map_err(wrap)?;
        observer.trained(it, &next, &report).map_err(wrap)?;
        models = next;
        iterations.push(report);
    }
    Ok(TrainOutput { models, iterations })
}
