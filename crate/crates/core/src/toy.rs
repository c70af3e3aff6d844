//! Desk-scale DRESS demonstration.
//!
//! The "dialogue model" is a table of logits over `M` response templates for
//! each of `C` contexts, and every template belongs to a fixed semantic
//! cluster. Training is full-batch gradient descent on the (weighted) NLL,
//! which lets the weighting scheme and the negative-training loop be checked
//! without any embedding or clustering stage.

use ndarray::{Array2, ArrayView1};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clustering::{semantic_distribution, ClusterAssignment, SemanticDistribution};
use crate::dress::{compute_weights_for_ids, head_clusters, HeadClusterSet, HeadPolicy, NT_WEIGHT};
use crate::error::{Error, Result};
use crate::sement::{sem_ent, SemEntScore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyWorld {
    pub num_contexts: usize,
    pub template_cluster: Vec<usize>,
    pub k: usize,
}

impl ToyWorld {
    pub fn new(num_contexts: usize, template_cluster: Vec<usize>, k: usize) -> Result<Self> {
        if num_contexts == 0 || template_cluster.is_empty() || k == 0 {
            return Err(Error::arg("toy world needs contexts, templates and clusters"));
        }
        if let Some(&bad) = template_cluster.iter().find(|&&c| c >= k) {
            return Err(Error::arg(format!("template cluster {bad} out of range for k = {k}")));
        }
        Ok(ToyWorld {
            num_contexts,
            template_cluster,
            k,
        })
    }

    /// Template `m` belongs to cluster `m % k`.
    pub fn round_robin(num_contexts: usize, num_templates: usize, k: usize) -> Result<Self> {
        Self::new(num_contexts, (0..num_templates).map(|m| m % k.max(1)).collect(), k)
    }

    pub fn num_templates(&self) -> usize {
        self.template_cluster.len()
    }

    fn templates_of(&self, cluster: usize) -> Vec<usize> {
        (0..self.num_templates())
            .filter(|&m| self.template_cluster[m] == cluster)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    /// `(context, template)` training pairs.
    pub pairs: Vec<(usize, usize)>,
    pub labels: ClusterAssignment,
    pub distribution: SemanticDistribution,
}

impl ToyDataset {
    pub fn from_pairs(world: &ToyWorld, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(c, m)) = pairs
            .iter()
            .find(|&&(c, m)| c >= world.num_contexts || m >= world.num_templates())
        {
            return Err(Error::arg(format!("pair ({c}, {m}) out of bounds")));
        }
        let labels: Vec<usize> = pairs.iter().map(|&(_, m)| world.template_cluster[m]).collect();
        let distribution = semantic_distribution(&labels, world.k)?;
        Ok(ToyDataset {
            pairs,
            labels: ClusterAssignment { k: world.k, labels },
            distribution,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        (0..self.pairs.len()).map(|i| i.to_string()).collect()
    }
}

/// Zipf-like cluster probabilities `∝ (j + 1)^(-skew)` over the clusters that
/// own at least one template; others get 0.
pub fn zipf_cluster_probs(world: &ToyWorld, skew: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..world.k)
        .map(|j| {
            if world.templates_of(j).is_empty() {
                0.0
            } else {
                ((j + 1) as f64).powf(-skew)
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Samples `size` pairs: a cluster by Zipf rank, a uniform template inside it,
/// and a uniform context.
pub fn make_synthetic_dataset(world: &ToyWorld, skew: f64, size: usize, seed: u64) -> Result<ToyDataset> {
    if !skew.is_finite() || skew < 1.0 {
        return Err(Error::arg(format!("skew must be at least 1, got {skew}")));
    }
    if size == 0 {
        return Err(Error::arg("dataset size must be at least 1"));
    }
    let probs = zipf_cluster_probs(world, skew);
    let clusters = WeightedIndex::new(&probs).map_err(|e| Error::arg(e.to_string()))?;
    let members: Vec<Vec<usize>> = (0..world.k).map(|j| world.templates_of(j)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..size)
        .map(|_| {
            let j = clusters.sample(&mut rng);
            let m = members[j][rng.random_range(0..members[j].len())];
            let c = rng.random_range(0..world.num_contexts);
            (c, m)
        })
        .collect();
    ToyDataset::from_pairs(world, pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub logits: Array2<f64>,
}

fn log_sum_exp(row: ArrayView1<'_, f64>) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

impl ToyModel {
    pub fn zeros(world: &ToyWorld) -> Self {
        ToyModel {
            logits: Array2::zeros((world.num_contexts, world.num_templates())),
        }
    }

    pub fn log_prob(&self, context: usize, template: usize) -> f64 {
        let row = self.logits.row(context);
        row[template] - log_sum_exp(row)
    }

    /// Highest-logit template for each context, ties to the lowest index.
    pub fn greedy(&self) -> Vec<usize> {
        self.logits
            .outer_iter()
            .map(|row| {
                let mut best = 0;
                for (m, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = m;
                    }
                }
                best
            })
            .collect()
    }
}

fn check_pairs(model: &ToyModel, pairs: &[(usize, usize)], weights: &[f64]) -> Result<()> {
    if weights.len() != pairs.len() {
        return Err(Error::Alignment {
            what: "weights",
            expected: pairs.len(),
            found: weights.len(),
        });
    }
    let (c, m) = model.logits.dim();
    if pairs.iter().any(|&(ci, mi)| ci >= c || mi >= m) {
        return Err(Error::arg("training pair outside the model's shape"));
    }
    Ok(())
}

/// Weighted NLL `-Σ w log p(r | c)` over arbitrary pairs, and its gradient.
fn objective(model: &ToyModel, pairs: &[(usize, usize)], weights: &[f64]) -> (f64, Array2<f64>) {
    let lse: Vec<f64> = model.logits.outer_iter().map(log_sum_exp).collect();
    let mut loss = 0.0;
    let mut grad = Array2::zeros(model.logits.dim());
    for (&(c, r), &w) in pairs.iter().zip(weights) {
        loss -= w * (model.logits[[c, r]] - lse[c]);
        if w == 0.0 {
            continue;
        }
        let mut g = grad.row_mut(c);
        for (m, gv) in g.iter_mut().enumerate() {
            *gv += w * (model.logits[[c, m]] - lse[c]).exp();
        }
        g[r] -= w;
    }
    (loss, grad)
}

/// `-Σᵢ wᵢ log softmax(logits[cᵢ])[rᵢ]`. Weights of `-1` turn a term into
/// `+log p`.
pub fn weighted_nll(model: &ToyModel, dataset: &ToyDataset, weights: &[f64]) -> Result<f64> {
    check_pairs(model, &dataset.pairs, weights)?;
    let lse: Vec<f64> = model.logits.outer_iter().map(log_sum_exp).collect();
    Ok(dataset
        .pairs
        .iter()
        .zip(weights)
        .map(|(&(c, r), &w)| -w * (model.logits[[c, r]] - lse[c]))
        .sum())
}

/// Analytic gradient of [`weighted_nll`]: each pair adds
/// `w · (softmax(logits[c]) - onehot(r))` to row `c`.
pub fn grad_weighted_nll(model: &ToyModel, dataset: &ToyDataset, weights: &[f64]) -> Result<Array2<f64>> {
    check_pairs(model, &dataset.pairs, weights)?;
    Ok(objective(model, &dataset.pairs, weights).1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub nt_enabled: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub head_policy: HeadPolicy,
}

impl TrainConfig {
    pub fn vanilla(epochs: usize, learning_rate: f64, seed: u64) -> Self {
        TrainConfig {
            gamma: 0.0,
            nt_enabled: false,
            epochs,
            learning_rate,
            seed,
            head_policy: HeadPolicy::AboveUniform,
        }
    }

    pub fn dress(gamma: f64, epochs: usize, learning_rate: f64, seed: u64) -> Self {
        TrainConfig {
            gamma,
            nt_enabled: true,
            ..Self::vanilla(epochs, learning_rate, seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean objective per training pair, evaluated before this epoch's step
    /// (negative-training terms included).
    pub loss: f64,
    /// Sem-Ent of the greedy generations after the step.
    pub sem_ent: f64,
    /// Fraction of those generations that fall in a head cluster.
    pub head_mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Greedy generation → cluster labels → distribution → Sem-Ent.
pub fn evaluate_generations(model: &ToyModel, world: &ToyWorld) -> SemEntScore {
    sem_ent(&generation_distribution(model, world))
}

fn head_mass(model: &ToyModel, world: &ToyWorld, heads: &HeadClusterSet) -> f64 {
    let gens = model.greedy();
    let hits = gens
        .iter()
        .filter(|&&m| heads.contains(world.template_cluster[m]))
        .count();
    hits as f64 / gens.len() as f64
}

/// Focal weights plus, per epoch when enabled, one negative example for each
/// context whose greedy generation lands in a head cluster.
pub fn train(world: &ToyWorld, dataset: &ToyDataset, config: &TrainConfig) -> Result<(ToyModel, TrainHistory)> {
    let ids = dataset.ids();
    let weights = compute_weights_for_ids(
        ids.iter().map(String::as_str),
        &dataset.labels,
        &dataset.distribution,
        config.gamma,
    )?
    .weights();
    train_with_weights(world, dataset, &weights, config)
}

/// Training loop with caller-supplied per-pair weights; `config.gamma` is
/// ignored.
pub fn train_with_weights(
    world: &ToyWorld,
    dataset: &ToyDataset,
    weights: &[f64],
    config: &TrainConfig,
) -> Result<(ToyModel, TrainHistory)> {
    if config.epochs == 0 {
        return Err(Error::arg("epochs must be at least 1"));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::arg("learning rate must be positive"));
    }
    if dataset.is_empty() {
        return Err(Error::arg("empty training set"));
    }
    let mut model = ToyModel::zeros(world);
    check_pairs(&model, &dataset.pairs, weights)?;
    let heads = head_clusters(&dataset.distribution, config.head_policy)?;

    // tiny seeded jitter so initial greedy choices are not all template 0
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    model.logits.mapv_inplace(|_| rng.random_range(-1e-3..1e-3));

    let scale = 1.0 / dataset.len() as f64;
    let mut pairs = dataset.pairs.clone();
    let mut all_weights = weights.to_vec();
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        pairs.truncate(dataset.len());
        all_weights.truncate(dataset.len());
        if config.nt_enabled {
            for (c, m) in model.greedy().into_iter().enumerate() {
                if heads.contains(world.template_cluster[m]) {
                    pairs.push((c, m));
                    all_weights.push(NT_WEIGHT);
                }
            }
        }
        let (loss, grad) = objective(&model, &pairs, &all_weights);
        let loss = loss * scale;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        model.logits.scaled_add(-config.learning_rate * scale, &grad);
        if model.logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch, loss: f64::NAN });
        }
        history.records.push(EpochRecord {
            epoch,
            loss,
            sem_ent: evaluate_generations(&model, world).value,
            head_mass: head_mass(&model, world, &heads),
        });
    }
    Ok((model, history))
}

/// The standard skewed scenario: 50 contexts, 40 templates spread round-robin
/// over 8 clusters, Zipf skew 1.5, 20 pairs per context on average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub contexts: usize,
    pub templates: usize,
    pub k: usize,
    pub skew: f64,
    pub size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub nt_enabled: bool,
    pub head_policy: HeadPolicy,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            contexts: 50,
            templates: 40,
            k: 8,
            skew: 1.5,
            size: 1000,
            epochs: 200,
            learning_rate: 0.5,
            gamma: crate::dress::DEFAULT_GAMMA,
            nt_enabled: true,
            head_policy: HeadPolicy::AboveUniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub final_sem_ent: f64,
    pub final_head_mass: f64,
    pub final_loss: f64,
    /// Cluster distribution of the final greedy generations.
    pub generation_distribution: Vec<f64>,
    #[serde(skip)]
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmComparison {
    pub seed: u64,
    pub training_distribution: Vec<f64>,
    pub head_clusters: Vec<usize>,
    pub vanilla: ArmResult,
    pub dress: ArmResult,
}

/// Cluster distribution of the greedy generation for every context.
pub fn generation_distribution(model: &ToyModel, world: &ToyWorld) -> SemanticDistribution {
    let labels: Vec<usize> = model
        .greedy()
        .into_iter()
        .map(|m| world.template_cluster[m])
        .collect();
    semantic_distribution(&labels, world.k).expect("one generation per context, labels < k")
}

fn arm_result(model: &ToyModel, world: &ToyWorld, history: TrainHistory) -> ArmResult {
    let last = *history.last().expect("at least one epoch");
    ArmResult {
        final_sem_ent: last.sem_ent,
        final_head_mass: last.head_mass,
        final_loss: last.loss,
        generation_distribution: generation_distribution(model, world).probs,
        history,
    }
}

/// Trains the vanilla and DRESS arms on the same sampled dataset.
pub fn compare_arms(scenario: &Scenario, seed: u64) -> Result<ArmComparison> {
    let world = ToyWorld::round_robin(scenario.contexts, scenario.templates, scenario.k)?;
    let dataset = make_synthetic_dataset(&world, scenario.skew, scenario.size, seed)?;
    let heads = head_clusters(&dataset.distribution, scenario.head_policy)?;
    let vanilla_cfg = TrainConfig {
        head_policy: scenario.head_policy,
        ..TrainConfig::vanilla(scenario.epochs, scenario.learning_rate, seed)
    };
    let dress_cfg = TrainConfig {
        gamma: scenario.gamma,
        nt_enabled: scenario.nt_enabled,
        ..vanilla_cfg
    };
    let (vanilla_model, vanilla) = train(&world, &dataset, &vanilla_cfg)?;
    let (dress_model, dress) = train(&world, &dataset, &dress_cfg)?;
    Ok(ArmComparison {
        seed,
        training_distribution: dataset.distribution.probs.clone(),
        head_clusters: heads.clusters.iter().copied().collect(),
        vanilla: arm_result(&vanilla_model, &world, vanilla),
        dress: arm_result(&dress_model, &world, dress),
    })
}
