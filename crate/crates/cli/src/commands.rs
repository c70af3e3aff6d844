use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ndarray::Array2;
use serde::Serialize;

use semdiv_core::bradley_terry::{bt_fit, likert_to_outcomes, read_annotations};
use semdiv_core::clustering::{kmeans_fit, l2_normalize_rows, load_model};
use semdiv_core::corpus::load_responses;
use semdiv_core::correlation::correlate_maps;
use semdiv_core::dress::{apply_nt_flags, compute_weights, focal_weight, head_clusters, render_weights, HeadPolicy};
use semdiv_core::embeddings::read_embeddings;
use semdiv_core::io_util::write_atomic;
use semdiv_core::lexical::{build_vocab_counts, lexical_report};
use semdiv_core::robustness::sement_across_ks;
use semdiv_core::sement::sem_ent;
use semdiv_core::toy::{compare_arms, Scenario, TrainHistory};
use semdiv_core::{ClusterModel, CorpusFormat, Error as CoreError, KMeansConfig, ResponseCorpus};

use crate::args::*;
use crate::plot::{distribution_chart, Series};

/// A request that cannot be run as given, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Files to write once every input has been validated, plus text for stdout.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: String,
}

impl Outputs {
    fn file(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.into(), bytes.into()));
    }

    /// Sends `text` to `path` when given, stdout otherwise.
    fn report(&mut self, path: Option<&Path>, text: String) {
        match path {
            Some(p) => self.file(p, text),
            None => self.stdout.push_str(&text),
        }
    }

    pub fn commit(self) -> Result<()> {
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        print!("{}", self.stdout);
        Ok(())
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn load_corpus(path: &Path, format: Option<FormatArg>) -> Result<ResponseCorpus> {
    let format = format.map(CorpusFormat::from).unwrap_or_else(|| CorpusFormat::from_path(path));
    Ok(load_responses(path, format)?)
}

fn load_emb(path: &Path, normalize: bool) -> Result<Array2<f64>> {
    let m = read_embeddings(path).with_context(|| format!("reading embeddings {}", path.display()))?;
    let mut x = m.to_f64();
    if normalize {
        l2_normalize_rows(&mut x);
    }
    Ok(x)
}

fn check_rows(corpus: &ResponseCorpus, x: &Array2<f64>, corpus_path: &Path, emb_path: &Path) -> Result<()> {
    if corpus.len() != x.nrows() {
        anyhow::bail!(
            "{} has {} records but {} has {} embedding rows",
            corpus_path.display(),
            corpus.len(),
            emb_path.display(),
            x.nrows()
        );
    }
    Ok(())
}

fn kmeans_config(a: &KMeansArgs) -> KMeansConfig {
    KMeansConfig {
        k: a.k,
        seed: a.seed,
        max_iter: a.max_iter,
        tol: a.tol,
    }
}

fn fit(x: &Array2<f64>, a: &KMeansArgs) -> Result<ClusterModel> {
    Ok(kmeans_fit(x.view(), &kmeans_config(a))?)
}

fn load_cluster_model(path: &Path) -> Result<ClusterModel> {
    load_model(path).with_context(|| format!("reading model {}", path.display()))
}

pub fn run(command: Command) -> Result<Outputs> {
    match command {
        Command::Metrics(a) => metrics(a),
        Command::Cluster(ClusterCommand::Fit(a)) => cluster_fit(a),
        Command::Cluster(ClusterCommand::Assign(a)) => cluster_assign(a),
        Command::Sement(a) => sement(a),
        Command::DressWeights(a) => dress_weights(a),
        Command::Simulate(a) => simulate(a),
        Command::Bt(BtCommand::Fit(a)) => bt(a),
        Command::Correlate(a) => correlate(a),
        Command::Robustness(a) => robustness(a),
    }
}

fn metrics(a: MetricsArgs) -> Result<Outputs> {
    let generated = load_corpus(&a.generated, a.format)?;
    let vocab = match &a.train {
        Some(p) => Some(build_vocab_counts(&load_corpus(p, a.format)?)),
        None => None,
    };
    let report = lexical_report(&generated, &a.ngrams, vocab.as_ref(), a.lf_threshold)?;
    let mut out = Outputs::default();
    out.report(a.out.as_deref(), json(&report)?);
    Ok(out)
}

#[derive(Serialize)]
struct FitSummary {
    k: usize,
    dims: usize,
    n: usize,
    seed: u64,
    iterations: u32,
    inertia: f64,
    cluster_probs: Vec<f64>,
}

fn cluster_fit(a: ClusterFitArgs) -> Result<Outputs> {
    let x = load_emb(&a.train_emb, a.normalize)?;
    let model = fit(&x, &a.kmeans)?;
    let dist = model.assign(x.view())?.distribution()?;
    let summary = FitSummary {
        k: model.k(),
        dims: model.dims(),
        n: x.nrows(),
        seed: model.seed,
        iterations: model.iterations_run,
        inertia: model.inertia,
        cluster_probs: dist.probs,
    };
    let mut out = Outputs::default();
    out.file(&a.out, model.to_bytes());
    out.report(None, json(&summary)?);
    Ok(out)
}

fn cluster_assign(a: ClusterAssignArgs) -> Result<Outputs> {
    let model = load_cluster_model(&a.model)?;
    let x = load_emb(&a.emb, a.normalize)?;
    let labels = model.assign(x.view())?;
    let mut out = Outputs::default();
    out.report(a.out.as_deref(), json(&labels)?);
    Ok(out)
}

#[derive(Serialize)]
struct SementReport {
    sem_ent: f64,
    k: usize,
    normalized: f64,
    n: usize,
    cluster_probs: Vec<f64>,
}

fn sement(a: SementArgs) -> Result<Outputs> {
    let test = load_emb(&a.test_emb, a.normalize)?;
    if let Some(p) = &a.test {
        check_rows(&load_corpus(p, None)?, &test, p, &a.test_emb)?;
    }
    let (model, train_probs) = match (&a.model, &a.train_emb) {
        (Some(m), _) => (load_cluster_model(m)?, None),
        (None, Some(t)) => {
            let x = load_emb(t, a.normalize)?;
            if let Some(p) = &a.train {
                check_rows(&load_corpus(p, None)?, &x, p, t)?;
            }
            let model = fit(&x, &a.kmeans)?;
            let probs = model.assign(x.view())?.distribution()?.probs;
            (model, Some(probs))
        }
        (None, None) => return Err(usage("one of --train-emb or --model is required")),
    };
    let dist = model.assign(test.view())?.distribution()?;
    let score = sem_ent(&dist);
    let report = SementReport {
        sem_ent: score.value,
        k: score.k,
        normalized: score.normalized,
        n: dist.support_n,
        cluster_probs: dist.probs.clone(),
    };

    let mut out = Outputs::default();
    if let Some(plot) = &a.plot {
        let mut series = Vec::new();
        if let Some(p) = &train_probs {
            series.push(Series { name: "training", probs: p });
        }
        series.push(Series {
            name: "generated",
            probs: &dist.probs,
        });
        let title = format!("Cluster distribution (k = {}, Sem-Ent {:.4})", score.k, score.value);
        out.file(plot, distribution_chart(&title, &series));
    }
    out.report(a.out.as_deref(), json(&report)?);
    Ok(out)
}

#[derive(Serialize)]
struct DressReport {
    k: usize,
    gamma: f64,
    n: usize,
    training_distribution: Vec<f64>,
    cluster_weights: Vec<f64>,
    head_policy: HeadPolicy,
    head_clusters: Vec<usize>,
    head_mass: f64,
    nt_flagged: usize,
    renormalized: bool,
}

fn dress_weights(a: DressWeightsArgs) -> Result<Outputs> {
    let corpus = load_corpus(&a.train, a.format)?;
    let x = load_emb(&a.train_emb, a.normalize)?;
    check_rows(&corpus, &x, &a.train, &a.train_emb)?;
    let model = match &a.model {
        Some(m) => load_cluster_model(m)?,
        None => fit(&x, &a.kmeans)?,
    };
    let labels = model.assign(x.view())?;
    let dist = labels.distribution()?;
    let heads = head_clusters(&dist, a.head.policy())?;

    let mut table = compute_weights(&corpus, &labels, &dist, a.gamma)?;
    if a.nt {
        let gen_path = a.gen_emb.as_deref().ok_or_else(|| usage("--nt requires --gen-emb"))?;
        let gen = load_emb(gen_path, a.normalize)?;
        if gen.nrows() != corpus.len() {
            anyhow::bail!(
                "{} has {} rows but the training corpus has {} records; one generated response per entry is required",
                gen_path.display(),
                gen.nrows(),
                corpus.len()
            );
        }
        let gen_labels = model.assign(gen.view())?;
        table = apply_nt_flags(&table, &gen_labels, &heads)?;
    }
    if a.renormalize {
        table = table.renormalize()?;
    }

    let report = DressReport {
        k: dist.k(),
        gamma: a.gamma,
        n: table.len(),
        cluster_weights: dist
            .probs
            .iter()
            .map(|&p| focal_weight(p, a.gamma))
            .collect::<semdiv_core::Result<_>>()?,
        training_distribution: dist.probs.clone(),
        head_policy: heads.policy,
        head_clusters: heads.clusters.iter().copied().collect(),
        head_mass: heads.mass(&dist),
        nt_flagged: table.negatives(),
        renormalized: table.renormalized,
    };
    let mut out = Outputs::default();
    out.file(&a.out, render_weights(&table));
    out.report(a.report.as_deref(), json(&report)?);
    Ok(out)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    scenario: &'a Scenario,
    #[serde(flatten)]
    comparison: &'a semdiv_core::toy::ArmComparison,
}

fn history_csv(history: &TrainHistory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &history.records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

fn simulate(a: SimulateArgs) -> Result<Outputs> {
    let scenario = Scenario {
        contexts: a.contexts,
        templates: a.templates,
        k: a.k,
        skew: a.skew,
        size: a.size,
        epochs: a.epochs,
        learning_rate: a.lr,
        gamma: a.gamma,
        nt_enabled: a.nt,
        head_policy: a.head.policy(),
    };
    let cmp = compare_arms(&scenario, a.seed)?;
    let dir = &a.out_dir;
    if dir.exists() && !dir.is_dir() {
        anyhow::bail!("{} exists and is not a directory", dir.display());
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut out = Outputs::default();
    out.file(dir.join("vanilla_history.csv"), history_csv(&cmp.vanilla.history)?);
    out.file(dir.join("dress_history.csv"), history_csv(&cmp.dress.history)?);
    out.file(
        dir.join("summary.json"),
        json(&SimulateSummary {
            scenario: &scenario,
            comparison: &cmp,
        })?,
    );
    if a.plot {
        let svg = distribution_chart(
            &format!(
                "Generation cluster distribution (Sem-Ent vanilla {:.4}, DRESS {:.4})",
                cmp.vanilla.final_sem_ent, cmp.dress.final_sem_ent
            ),
            &[
                Series {
                    name: "training",
                    probs: &cmp.training_distribution,
                },
                Series {
                    name: "vanilla",
                    probs: &cmp.vanilla.generation_distribution,
                },
                Series {
                    name: "DRESS",
                    probs: &cmp.dress.generation_distribution,
                },
            ],
        );
        out.file(dir.join("distribution.svg"), svg);
    }
    Ok(out)
}

fn bt(a: BtFitArgs) -> Result<Outputs> {
    let annotations = read_annotations(&a.annotations)?;
    let outcomes = likert_to_outcomes(&annotations, a.ties.into())?;
    let scores = bt_fit(&outcomes, a.max_iter, a.tol)?;
    let mut out = Outputs::default();
    out.report(a.out.as_deref(), json(&scores.theta)?);
    Ok(out)
}

fn read_score_map(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).with_context(|| format!("{}: expected an object of name to number", path.display()))
}

fn correlate(a: CorrelateArgs) -> Result<Outputs> {
    let scores = read_score_map(&a.scores)?;
    let metric = read_score_map(&a.metric)?;
    let report = correlate_maps(&scores, &metric)?;
    let mut out = Outputs::default();
    out.report(a.out.as_deref(), json(&report)?);
    Ok(out)
}

fn system_names(paths: &[PathBuf], names: &[String]) -> Result<Vec<String>> {
    if !names.is_empty() {
        if names.len() != paths.len() {
            return Err(usage(format!(
                "--names lists {} names for {} --emb files",
                names.len(),
                paths.len()
            )));
        }
        return Ok(names.to_vec());
    }
    let stems: Vec<String> = paths
        .iter()
        .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
        .collect();
    let unique: HashSet<&String> = stems.iter().collect();
    if unique.len() == stems.len() {
        Ok(stems)
    } else {
        Ok(paths.iter().map(|p| p.display().to_string()).collect())
    }
}

fn robustness(a: RobustnessArgs) -> Result<Outputs> {
    let names = system_names(&a.emb, &a.names)?;
    let train = load_emb(&a.train_emb, a.normalize)?;
    let systems = names
        .into_iter()
        .zip(&a.emb)
        .map(|(n, p)| Ok((n, load_emb(p, a.normalize)?)))
        .collect::<Result<Vec<_>>>()?;
    let base = KMeansConfig {
        k: 1,
        seed: a.seed,
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let report = sement_across_ks(train.view(), &systems, &a.ks, &base)?;
    if report.mean_pairwise_spearman.is_none() {
        log::warn!("rank correlations are undefined with fewer than three distinguishable systems");
    }
    let mut out = Outputs::default();
    out.report(a.out.as_deref(), json(&report)?);
    Ok(out)
}
