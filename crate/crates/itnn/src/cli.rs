//! Command-line entry point. Every subcommand is reproducible from its
//! flags, its optional JSON config and `--seed`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use itnn_core::codec::container::{self, recon_hash};
use itnn_core::codec::{CodecConfig, Models};
use itnn_core::eval::{mode_frequency_delta, prediction_report};
use itnn_core::frame::psnr;
use itnn_core::pipeline::{iterative_train, IterationReport, Observer, Partition};
use itnn_core::{BlockSize, LumaPlane, NN_MODE};

use crate::config::{parse_size, RunConfig};
use crate::corpus::{ingest, load_corpus};
use crate::curve;
use crate::error::{Error, Result};
use crate::exec::Rayon;
use crate::manifest::{self, CorpusInfo, FileEntry, IterationEntry, Manifest, SizeEntry};
use crate::model::{load_models, model_file_name, save_models};
use crate::pnm::{load_image, save_pgm};
use crate::records::{read_records, write_partition, write_records};
use crate::shard::{save_provenance, save_shard};
use crate::svg::rd_plot;
use crate::synth;

#[derive(Parser, Debug)]
#[command(name = "itnn", version, about = "Block-based intra codec with an iteratively trained neural intra mode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert PPM (P6) and PGM (P5) images to 8-bit luma PGM files.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded synthetic corpus of PGM images.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        /// Index of the first image; images with the same seed and index are identical.
        #[arg(long, default_value_t = 0)]
        first: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Encode one PGM image into a bitstream container.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        qp: i32,
        #[arg(long, value_enum, default_value_t = Toggle::Off)]
        nn: Toggle,
        /// Directory of model files; required with `--nn on`.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Write the reconstruction as PGM.
        #[arg(long)]
        recon: Option<PathBuf>,
        /// Write one CSV row per leaf: x,y,h,w,n0,n1,s,d_nn,d_c,isSplitTBs.
        #[arg(long)]
        dump_records: Option<PathBuf>,
    },
    /// Decode a bitstream container; fails if the reconstruction hash does not match.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Run the iterative training pipeline.
    ///
    /// Output is a pure function of the corpus, the effective configuration
    /// and the seed, independent of --jobs.
    TrainIter {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON run configuration; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Iteration count l.
        #[arg(long)]
        iters: Option<usize>,
        /// Cleansing threshold; "inf" disables large-block cleansing.
        #[arg(long)]
        gamma: Option<f64>,
        /// Most pairs per image and block size.
        #[arg(long)]
        q: Option<usize>,
        /// Learning-rate schedule multiplier p.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        /// Comma-separated block sizes, e.g. 4x4,8x8.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        qp_set: Option<Vec<i32>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Encode a corpus at several QPs and write an (image, qp, bpp, psnr) CSV.
    Curve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Toggle::Off)]
        nn: Toggle,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "22,27,32,37,42")]
        qps: Vec<i32>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// BD-rate of a test curve CSV against an anchor (cubic fit of log-rate over PSNR).
    Eval {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Write an RD plot of the corpus-mean curves.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write per-image BD-rates as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-size, per-QP mode selection shares of two record CSVs and their difference.
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// QP for rows without a qp column.
        #[arg(long, default_value_t = 0)]
        qp: i32,
    },
    /// Compare NN predictions of two model sets against the best classic mode at random positions.
    Report {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        models_i: PathBuf,
        #[arg(long)]
        models_j: PathBuf,
        #[arg(long, default_value = "8x8")]
        size: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write context, prediction and block panels as PGM files here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn codec_models(nn: Toggle, dir: Option<&Path>) -> Result<Models> {
    match (nn, dir) {
        (Toggle::Off, _) => Ok(Models::new()),
        (Toggle::On, Some(d)) => load_models(d),
        (Toggle::On, None) => Err(Error::Config("--nn on needs --models".into())),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { input, out } => {
            let n = ingest(&input, &out)?;
            println!("converted {n} images");
        }
        Command::Synth {
            out,
            count,
            width,
            height,
            first,
            seed,
        } => {
            if width == 0 || height == 0 {
                return Err(Error::Config("image dimensions must be positive".into()));
            }
            synth::write_corpus(&out, count, width, height, seed, first)?;
            println!("wrote {count} images");
        }
        Command::Encode {
            input,
            out,
            qp,
            nn,
            models,
            recon,
            dump_records,
        } => {
            let plane = load_image(&input)?;
            let models = codec_models(nn, models.as_deref())?;
            let cfg = CodecConfig::new(qp, models.keys().copied().collect());
            let enc = container::encode(&plane, &cfg, &models)?;
            fs::write(&out, &enc.bytes).map_err(Error::io(&out))?;
            if let Some(path) = recon {
                save_pgm(&path, &enc.recon)?;
            }
            if let Some(path) = dump_records {
                write_records(&path, &enc.frame.records)?;
            }
            let nn_leaves = enc.frame.records.iter().filter(|r| r.s == NN_MODE).count();
            println!(
                "bpp {:.6} psnr {:.4} leaves {} nn_leaves {} recon_sha256 {}",
                enc.bits_per_pixel(),
                psnr(&plane, &enc.recon, 255)?,
                enc.frame.records.len(),
                nn_leaves,
                manifest::hex(&recon_hash(&enc.recon))
            );
        }
        Command::Decode { input, out, models } => {
            let bytes = fs::read(&input).map_err(Error::io(&input))?;
            let header = container::read_header(&bytes)?;
            let models = if header.cfg.nn_enabled() {
                let dir = models.ok_or_else(|| Error::Config("stream uses the NN mode; pass --models".into()))?;
                load_models(&dir)?
            } else {
                Models::new()
            };
            let (_, plane) = container::decode(&bytes, &models)?;
            save_pgm(&out, &plane)?;
            println!("recon_sha256 {}", manifest::hex(&recon_hash(&plane)));
        }
        Command::TrainIter {
            corpus,
            out,
            config,
            iters,
            gamma,
            q,
            p,
            hidden,
            lr,
            batch,
            sizes,
            qp_set,
            seed,
            jobs,
        } => {
            let mut rc = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            macro_rules! set {
                ($($flag:ident => $field:ident),*) => {$(if let Some(v) = $flag { rc.$field = v; })*};
            }
            set!(iters => iterations, gamma => gamma, q => q, p => stage_multiplier, hidden => hidden,
                 lr => learning_rate, batch => batch_size, sizes => sizes, qp_set => qp_set, seed => seed);
            train_iter(&corpus, &out, &rc, jobs)?;
        }
        Command::Curve {
            corpus,
            out,
            nn,
            models,
            qps,
            jobs,
        } => {
            let corpus = load_corpus(&corpus)?;
            let models = codec_models(nn, models.as_deref())?;
            let rows = curve::measure(&corpus, &models, &qps, &Rayon::new(jobs)?)?;
            curve::save(&out, &rows)?;
            for &qp in &qps {
                let sel: Vec<_> = rows.iter().filter(|r| r.qp == qp).collect();
                let n = sel.len() as f64;
                println!(
                    "qp {qp}: mean bpp {:.5} mean psnr {:.4} nn share {:.4}",
                    sel.iter().map(|r| r.bpp).sum::<f64>() / n,
                    sel.iter().map(|r| r.psnr).sum::<f64>() / n,
                    curve::nn_share(&rows, qp)
                );
            }
        }
        Command::Eval { anchor, test, svg, out } => {
            let (a, t) = (curve::load(&anchor)?, curve::load(&test)?);
            let summary = curve::bd_summary(&a, &t)?;
            if let Some(path) = out {
                let csv_err = |source| Error::Csv {
                    path: path.clone(),
                    source,
                };
                let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
                w.write_record(["image", "bd_rate_percent"]).map_err(csv_err)?;
                for (id, v) in &summary.per_image {
                    w.serialize((id, v)).map_err(csv_err)?;
                }
                w.flush().map_err(Error::io(&path))?;
            }
            if let Some(path) = svg {
                let plot = rd_plot(&[("anchor", mean_curve(&a)), ("test", mean_curve(&t))]);
                fs::write(&path, plot).map_err(Error::io(&path))?;
            }
            println!("BD-rate (cubic fit, mean over {} images): {:.2}%", summary.per_image.len(), summary.mean);
        }
        Command::Stats { a, b, out, qp } => {
            let load = |p: &Path| -> Result<Vec<_>> {
                Ok(read_records(p)?.iter().map(|r| (r.qp.unwrap_or(qp), r.record())).collect())
            };
            let deltas = mode_frequency_delta(&load(&a)?, &load(&b)?)?;
            let csv_err = |source| Error::Csv {
                path: out.clone(),
                source,
            };
            let mut w = csv::Writer::from_path(&out).map_err(csv_err)?;
            w.write_record(["size", "qp", "mode", "percent_a", "percent_b", "delta"]).map_err(csv_err)?;
            for d in &deltas {
                w.serialize((d.size.to_string(), d.qp, d.mode, d.percent_a, d.percent_b, d.delta))
                    .map_err(csv_err)?;
            }
            w.flush().map_err(Error::io(&out))?;
            for d in deltas.iter().filter(|d| d.mode == NN_MODE) {
                println!("{} qp {}: NN share {:.2}% -> {:.2}%", d.size, d.qp, d.percent_a, d.percent_b);
            }
        }
        Command::Report {
            corpus,
            models_i,
            models_j,
            size,
            samples,
            seed,
            out,
            dump,
        } => {
            let corpus = load_corpus(&corpus)?;
            let size = parse_size(&size)?;
            let rows = prediction_report(&corpus, &load_models(&models_i)?, &load_models(&models_j)?, size, samples, seed)?;
            let csv_err = |source| Error::Csv {
                path: out.clone(),
                source,
            };
            let mut w = csv::Writer::from_path(&out).map_err(csv_err)?;
            w.write_record(["index", "image", "x", "y", "size", "psnr_i", "psnr_j", "psnr_classic", "best_classic_mode"])
                .map_err(csv_err)?;
            for (k, r) in rows.iter().enumerate() {
                w.serialize((k, &r.image, r.x, r.y, size.to_string(), r.psnr_i, r.psnr_j, r.psnr_classic, r.best_classic_mode))
                    .map_err(csv_err)?;
            }
            w.flush().map_err(Error::io(&out))?;
            if let Some(dir) = dump {
                create_dir(&dir)?;
                let by_id: BTreeMap<&str, &LumaPlane> =
                    corpus.entries().iter().map(|e| (e.id.as_str(), &e.plane)).collect();
                for (k, r) in rows.iter().enumerate() {
                    let panel = |v: &[u8]| LumaPlane::new(size.w, size.h, v.to_vec()).expect("block size");
                    save_pgm(&dir.join(format!("{k:04}_block.pgm")), &panel(&r.block))?;
                    save_pgm(&dir.join(format!("{k:04}_nn_i.pgm")), &panel(&r.pred_i))?;
                    save_pgm(&dir.join(format!("{k:04}_nn_j.pgm")), &panel(&r.pred_j))?;
                    save_pgm(&dir.join(format!("{k:04}_classic.pgm")), &panel(&r.pred_classic))?;
                    save_pgm(&dir.join(format!("{k:04}_context.pgm")), &context_panel(by_id[r.image.as_str()], r.x, r.y, size))?;
                }
            }
            let n = rows.len() as f64;
            let mean = |f: fn(&itnn_core::eval::PredictionRow) -> f64| {
                rows.iter().map(|r| f(r).min(100.0)).sum::<f64>() / n
            };
            println!(
                "mean psnr (capped at 100 dB): nn_i {:.3} nn_j {:.3} classic {:.3}",
                mean(|r| r.psnr_i),
                mean(|r| r.psnr_j),
                mean(|r| r.psnr_classic)
            );
        }
    }
    Ok(())
}

/// The context region with the block itself grayed out.
fn context_panel(plane: &LumaPlane, x: usize, y: usize, size: BlockSize) -> LumaPlane {
    let n = size.min_side();
    let (x0, y0) = (x - n, y - n);
    let (w, h) = (n + 2 * size.w, n + 2 * size.h);
    let mut out = Vec::with_capacity(w * h);
    for row in y0..y0 + h {
        for col in x0..x0 + w {
            out.push(if row < y || col < x { plane.get(col, row) } else { 128 });
        }
    }
    LumaPlane::new(w, h, out).expect("panel size")
}

fn mean_curve(rows: &[curve::CurveRow]) -> Vec<(f64, f64)> {
    let mut by_qp: BTreeMap<i32, (f64, f64, f64)> = BTreeMap::new();
    for r in rows {
        let e = by_qp.entry(r.qp).or_default();
        *e = (e.0 + r.bpp, e.1 + r.psnr, e.2 + 1.0);
    }
    by_qp.values().map(|&(b, p, n)| (b / n, p / n)).collect()
}

fn size_label(size: BlockSize) -> String {
    size.to_string()
}

struct Writer<'a> {
    root: &'a Path,
    entries: Vec<IterationEntry>,
    pending: BTreeMap<BlockSize, (FileEntry, FileEntry)>,
    records: Option<FileEntry>,
}

impl Writer<'_> {
    fn iter_dir(&self, it: usize) -> PathBuf {
        self.root.join(format!("iter_{it}"))
    }

    fn write(&mut self, partition: &Partition) -> Result<()> {
        let dir = self.iter_dir(partition.iteration);
        create_dir(&dir)?;
        let records = dir.join("records.csv");
        write_partition(&records, &partition.images)?;
        self.records = Some(FileEntry::new(self.root, &records)?);
        self.pending.clear();
        for (&size, data) in &partition.sizes {
            let shard = dir.join(format!("shard_{}.bin", size_label(size)));
            let prov = dir.join(format!("provenance_{}.csv", size_label(size)));
            save_shard(&shard, &data.set)?;
            save_provenance(&prov, &data.provenance)?;
            self.pending
                .insert(size, (FileEntry::new(self.root, &shard)?, FileEntry::new(self.root, &prov)?));
        }
        Ok(())
    }

    fn finish(&mut self, it: usize, models: &Models, report: &IterationReport) -> Result<()> {
        let dir = self.iter_dir(it);
        let model_dir = dir.join("models");
        save_models(&model_dir, models)?;
        let mut sizes = Vec::new();
        for s in &report.sizes {
            let losses = dir.join(format!("losses_{}.csv", size_label(s.size)));
            let mut text = String::from("step,loss\n");
            for (k, l) in s.losses.iter().enumerate() {
                text.push_str(&format!("{k},{l}\n"));
            }
            fs::write(&losses, text).map_err(Error::io(&losses))?;
            let (shard, provenance) = self.pending.remove(&s.size).expect("partition written first");
            sizes.push(SizeEntry {
                size: size_label(s.size),
                pairs: s.pairs,
                examined: s.examined,
                accepted: s.accepted,
                acceptance_ratio: (s.examined > 0).then(|| s.accepted as f64 / s.examined as f64),
                trained: s.trained,
                init_digest: manifest::hex(&s.init_digest),
                final_digest: manifest::hex(&s.final_digest),
                first_loss: s.losses.first().copied(),
                last_loss: s.losses.last().copied(),
                shard,
                provenance,
                losses: FileEntry::new(self.root, &losses)?,
                model: FileEntry::new(self.root, &model_dir.join(model_file_name(s.size)))?,
            });
            eprintln!(
                "iteration {it} {}: {} pairs, loss {} -> {}",
                s.size,
                s.pairs,
                s.losses.first().map_or("-".into(), |v| format!("{v:.3}")),
                s.losses.last().map_or("-".into(), |v| format!("{v:.3}")),
            );
        }
        self.entries.push(IterationEntry {
            index: it,
            stage: if report.cleansing { "get_partition_nn" } else { "get_partition" }.into(),
            cleansing: report.cleansing,
            records: self.records.take().expect("partition written first"),
            sizes,
        });
        Ok(())
    }
}

struct FileObserver<'a> {
    inner: Writer<'a>,
    error: Option<Error>,
}

impl FileObserver<'_> {
    // The core observer speaks the core error type; file errors are kept
    // here and surfaced after the run.
    fn keep(&mut self, r: Result<()>) -> itnn_core::Result<()> {
        r.map_err(|e| {
            let msg = e.to_string();
            self.error = Some(e);
            itnn_core::Error::InvalidConfig(msg)
        })
    }
}

impl Observer for FileObserver<'_> {
    fn partition(&mut self, partition: &Partition) -> itnn_core::Result<()> {
        let r = self.inner.write(partition);
        self.keep(r)
    }

    fn trained(&mut self, iteration: usize, models: &Models, report: &IterationReport) -> itnn_core::Result<()> {
        let r = self.inner.finish(iteration, models, report);
        self.keep(r)
    }
}

/// Runs the pipeline and writes shards, record dumps, models per iteration,
/// the final models under `out/models` and `out/manifest.json`.
pub fn train_iter(corpus_dir: &Path, out: &Path, rc: &RunConfig, jobs: usize) -> Result<Manifest> {
    let cfg = rc.pipeline()?;
    let corpus = load_corpus(corpus_dir)?;
    create_dir(out)?;
    let exec = Rayon::new(jobs)?;
    let mut obs = FileObserver {
        inner: Writer {
            root: out,
            entries: Vec::new(),
            pending: BTreeMap::new(),
            records: None,
        },
        error: None,
    };
    let result = iterative_train(&corpus, &cfg, &exec, &mut obs);
    if let Some(e) = obs.error.take() {
        return Err(e);
    }
    let output = result?;
    let model_paths = save_models(&out.join("models"), &output.models)?;
    let manifest = Manifest {
        format: manifest::FORMAT.into(),
        version: manifest::VERSION,
        config: rc.clone(),
        corpus: CorpusInfo {
            images: corpus.len(),
            digest: manifest::corpus_digest(&corpus),
        },
        iterations: obs.inner.entries,
        models: model_paths.iter().map(|p| FileEntry::new(out, p)).collect::<Result<_>>()?,
    };
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}
