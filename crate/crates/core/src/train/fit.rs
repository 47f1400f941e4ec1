use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clip::{clip_gradients, global_norm};
use super::optim::{optimizer_step, OptimizerKind, OptimizerState};
use crate::data::{split_subsequences, CvSplit, MeasurementProfile};
use crate::tnn::{rollout, tbptt_gradients, TnnParameters, TnnTopology, WindowGradients};
use crate::{Error, Result};

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Nadam
}
fn default_learning_rate() -> f64 {
    1e-2
}
fn default_tbptt_len() -> usize {
    128
}
fn default_clip() -> Option<f64> {
    Some(1.0)
}
fn default_max_epochs() -> usize {
    100
}
fn default_patience() -> usize {
    10
}
fn default_theta_c_init() -> f64 {
    -2.0
}

/// Hyper-parameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Window length in samples.
    #[serde(default = "default_tbptt_len")]
    pub tbptt_len: usize,
    /// Global-norm clip threshold; `None` disables clipping.
    #[serde(default = "default_clip")]
    pub clip: Option<f64>,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default)]
    pub seed: u64,
    /// Initial value of every log10 inverse capacitance.
    #[serde(default = "default_theta_c_init")]
    pub theta_c_init: f64,
    /// Restart every window from the measured targets instead of carrying the estimate.
    #[serde(default)]
    pub reset_windows_to_truth: bool,
    /// Cut training profiles into subsequences of this many samples.
    #[serde(default)]
    pub subsequence_len: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: default_optimizer(),
            learning_rate: default_learning_rate(),
            tbptt_len: default_tbptt_len(),
            clip: default_clip(),
            max_epochs: default_max_epochs(),
            patience: default_patience(),
            seed: 0,
            theta_c_init: default_theta_c_init(),
            reset_windows_to_truth: false,
            subsequence_len: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.tbptt_len < 2 {
            return Err(Error::Argument(format!("tbptt_len must be at least 2, got {}", self.tbptt_len)));
        }
        if self.patience < 1 {
            return Err(Error::Argument("patience must be at least 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::Argument("max_epochs must be at least 1".into()));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return Err(Error::Argument(format!("clip threshold must be positive, got {c}")));
            }
        }
        if !self.theta_c_init.is_finite() {
            return Err(Error::Argument("theta_c_init must be finite".into()));
        }
        if matches!(self.subsequence_len, Some(n) if n < 2) {
            return Err(Error::Argument("subsequence_len must be at least 2".into()));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean window loss (data term only) over the epoch.
    pub train_loss: f64,
    /// Normalized-unit MSE on the validation fold; infinite if a rollout diverged.
    pub val_mse: f64,
    /// Mean pre-clip gradient norm over the epoch's updates.
    pub grad_norm: f64,
    pub failed_windows: usize,
    pub windows: usize,
    /// Seconds since the start of training.
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub stopped_epoch: usize,
    pub wall_clock: f64,
}

impl TrainReport {
    /// The report without timing fields, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_clock = 0.0;
        for e in &mut r.epochs {
            e.elapsed = 0.0;
        }
        r
    }
}

/// Patience-based stopping rule on a validation curve.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            since_best: 0,
        }
    }

    /// Records an epoch's validation score. Returns `(improved, stop)`.
    pub fn observe(&mut self, epoch: usize, value: f64) -> (bool, bool) {
        if value < self.best {
            self.best = value;
            self.best_epoch = Some(epoch);
            self.since_best = 0;
            (true, false)
        } else {
            self.since_best += 1;
            (false, self.since_best >= self.patience)
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best_epoch.map(|e| (e, self.best))
    }
}

/// Normalized MSE of full rollouts started from the measured targets at k=0.
///
/// Infinite if any rollout diverges.
pub fn validation_mse(topology: &TnnTopology, params: &TnnParameters, profiles: &[MeasurementProfile]) -> Result<f64> {
    let per_profile: Vec<Result<Option<(f64, usize)>>> = profiles
        .par_iter()
        .map(|p| match rollout(topology, params, p, p.targets(0)) {
            Ok(traj) => {
                let mut sse = 0.0;
                for k in 0..p.len() {
                    for (e, t) in traj.row(k).iter().zip(p.targets(k)) {
                        sse += (e - t) * (e - t);
                    }
                }
                Ok(Some((sse, p.len() * topology.targets)))
            }
            Err(Error::Divergence { .. } | Error::Numerical { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut sse = 0.0;
    let mut count = 0;
    for r in per_profile {
        match r? {
            Some((s, n)) => {
                sse += s;
                count += n;
            }
            None => return Ok(f64::INFINITY),
        }
    }
    if count == 0 {
        return Err(Error::Argument("no validation samples".into()));
    }
    Ok(sse / count as f64)
}

struct Chain<'a> {
    profile: &'a MeasurementProfile,
    start: usize,
    state: Vec<f64>,
}

impl Chain<'_> {
    fn window(&self, len: usize) -> Option<std::ops::Range<usize>> {
        let end = (self.start + len).min(self.profile.len());
        (end >= self.start + 2).then_some(self.start..end)
    }
}

/// Trains with early stopping on the validation fold and returns the best-epoch parameters.
pub fn fit(topology: &TnnTopology, split: &CvSplit, config: &TrainConfig) -> Result<(TnnParameters, TrainReport)> {
    fit_with_observer(topology, split, config, |_| {})
}

/// As [`fit`], calling `observer` after every epoch, including one that fails.
pub fn fit_with_observer(
    topology: &TnnTopology,
    split: &CvSplit,
    config: &TrainConfig,
    mut observer: impl FnMut(&EpochRecord),
) -> Result<(TnnParameters, TrainReport)> {
    config.validate()?;
    topology.validate()?;
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(Error::Argument("training and validation sets must be non-empty".into()));
    }
    let train: Vec<MeasurementProfile> = match config.subsequence_len {
        Some(n) => {
            let mut out = Vec::new();
            for p in &split.train {
                out.extend(split_subsequences(p, n)?);
            }
            out
        }
        None => split.train.clone(),
    };

    let started = Instant::now();
    let mut params = TnnParameters::init(topology, config.seed, config.theta_c_init);
    let mut best_params = params.clone();
    let mut optimizer = OptimizerState::new(config.optimizer);
    let mut stopping = EarlyStopping::new(config.patience);
    let mut epochs = Vec::new();

    for epoch in 1..=config.max_epochs {
        let mut chains: Vec<Chain> = train
            .iter()
            .map(|p| Chain {
                profile: p,
                start: 0,
                state: p.targets(0).to_vec(),
            })
            .collect();
        let mut windows = 0;
        let mut failed = 0;
        let mut loss_sum = 0.0;
        let mut loss_count = 0;
        let mut norm_sum = 0.0;
        let mut updates = 0;

        loop {
            let active: Vec<usize> = (0..chains.len())
                .filter(|&i| chains[i].window(config.tbptt_len).is_some())
                .collect();
            if active.is_empty() {
                break;
            }
            let results: Vec<Result<WindowGradients>> = active
                .par_iter()
                .map(|&i| {
                    let c = &chains[i];
                    let range = c.window(config.tbptt_len).expect("active");
                    tbptt_gradients(topology, &params, c.profile, range, &c.state)
                })
                .collect();

            let mut total: Option<TnnParameters> = None;
            let mut ok = 0usize;
            for (&i, result) in active.iter().zip(results) {
                let range = chains[i].window(config.tbptt_len).expect("active");
                windows += 1;
                let chain = &mut chains[i];
                chain.start = range.end - 1;
                match result {
                    Ok(w) if w.loss.is_finite() && global_norm(&w.grads).is_ok() => {
                        loss_sum += w.loss;
                        loss_count += 1;
                        ok += 1;
                        chain.state = if config.reset_windows_to_truth {
                            chain.profile.targets(range.end - 1).to_vec()
                        } else {
                            w.final_state
                        };
                        match total.as_mut() {
                            Some(t) => t.add_scaled(&w.grads, 1.0),
                            None => total = Some(w.grads),
                        }
                    }
                    Ok(_) | Err(Error::Divergence { .. } | Error::Numerical { .. }) => {
                        failed += 1;
                        chain.state = chain.profile.targets(range.end - 1).to_vec();
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(mut grads) = total {
                grads.scale(1.0 / ok as f64);
                let norm = match config.clip {
                    Some(t) => clip_gradients(&mut grads, t)?,
                    None => global_norm(&grads)?,
                };
                norm_sum += norm;
                updates += 1;
                optimizer_step(&mut optimizer, &mut params, &grads, config.learning_rate)?;
            }
        }

        let mut record = EpochRecord {
            epoch,
            train_loss: if loss_count > 0 { loss_sum / loss_count as f64 } else { f64::NAN },
            val_mse: f64::NAN,
            grad_norm: if updates > 0 { norm_sum / updates as f64 } else { 0.0 },
            failed_windows: failed,
            windows,
            elapsed: started.elapsed().as_secs_f64(),
        };
        if 2 * failed > windows {
            // the failing epoch is still reported, without a validation score
            observer(&record);
            return Err(Error::TrainingFailure(format!(
                "epoch {epoch}: {failed} of {windows} training windows diverged; try a smaller learning rate"
            )));
        }
        let val_mse = validation_mse(topology, &params, &split.validation)?;
        record.val_mse = val_mse;
        log::debug!(
            "epoch {epoch}: train {:.3e} val {:.3e} |g| {:.3e}",
            record.train_loss,
            record.val_mse,
            record.grad_norm
        );
        observer(&record);
        epochs.push(record);
        let (improved, stop) = stopping.observe(epoch, val_mse);
        if improved {
            best_params = params.clone();
        }
        if stop {
            break;
        }
    }

    let Some((best_epoch, best_val_mse)) = stopping.best() else {
        return Err(Error::TrainingFailure(
            "validation rollouts diverged in every epoch; try a smaller learning rate".into(),
        ));
    };
    let report = TrainReport {
        seed: config.seed,
        stopped_epoch: epochs.len(),
        epochs,
        best_epoch,
        best_val_mse,
        wall_clock: started.elapsed().as_secs_f64(),
    };
    Ok((best_params, report))
}

/// Result of one seed within [`repeated_fit`].
#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub result: Result<(TnnParameters, TrainReport, f64)>,
}

/// Per-seed runs plus test-MSE statistics over the successful ones.
#[derive(Debug)]
pub struct RepeatedFit {
    pub runs: Vec<SeedOutcome>,
    pub mean_test_mse: Option<f64>,
    pub min_test_mse: Option<f64>,
    pub max_test_mse: Option<f64>,
}

impl RepeatedFit {
    pub fn test_mses(&self) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|(_, _, t)| *t))
            .collect()
    }
}

/// Runs [`fit`] once per seed; the test fold is scored with the best snapshot.
///
/// A failing seed is recorded and does not stop the others.
pub fn repeated_fit(topology: &TnnTopology, split: &CvSplit, config: &TrainConfig, seeds: &[u64]) -> Result<RepeatedFit> {
    if seeds.is_empty() {
        return Err(Error::Argument("at least one seed is required".into()));
    }
    if split.test.is_empty() {
        return Err(Error::Argument("test set must be non-empty".into()));
    }
    let runs: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..config.clone() };
            let result = fit(topology, split, &cfg).and_then(|(params, report)| {
                let test = validation_mse(topology, &params, &split.test)?;
                Ok((params, report, test))
            });
            if let Err(e) = &result {
                log::warn!("seed {seed}: {e}");
            }
            SeedOutcome { seed, result }
        })
        .collect();
    let mut out = RepeatedFit {
        runs,
        mean_test_mse: None,
        min_test_mse: None,
        max_test_mse: None,
    };
    let tests = out.test_mses();
    if !tests.is_empty() {
        out.mean_test_mse = Some(tests.iter().sum::<f64>() / tests.len() as f64);
        out.min_test_mse = tests.iter().copied().reduce(f64::min);
        out.max_test_mse = tests.iter().copied().reduce(f64::max);
    }
    Ok(out)
}
