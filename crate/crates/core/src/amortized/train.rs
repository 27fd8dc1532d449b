//! Predictor pre-training and joint policy/predictor training.
//!
//! Joint training follows the greedy objective: every step of a budget-`k`
//! rollout contributes the loss of the prediction made after a Concrete-relaxed
//! selection, and the policy only receives gradient through the relaxed sample
//! of its own step. The hard (one-hot) selection that advances the rollout is
//! not differentiated.

use std::io::Write;
use std::time::Instant;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    concrete_sample, softmax_cross_entropy, tempered_softmax_backward, AdamConfig, Gradients, Mode, NetworkParams,
    OptState,
};
use crate::scalar::Real;

use super::config::{StopMetric, SubsetSource, TrainConfig};
use super::groups::GroupMatrix;
use super::mask::{mask_gradient, masked_batch};
use super::model::{exclude_selected, DfsModel, Head, Task};
use super::subsets::SubsetDistribution;

/// Targets aligned with the rows of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets<T> {
    Classes { labels: Vec<usize>, classes: usize },
    Real(Vec<T>),
}

impl<T: Real> Targets<T> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Targets::Classes { classes, .. } => Task::Classification { classes: *classes },
            Targets::Real(_) => Task::Regression,
        }
    }

    fn subset(&self, idx: &[usize]) -> Targets<T> {
        match self {
            Targets::Classes { labels, classes } => Targets::Classes {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                classes: *classes,
            },
            Targets::Real(v) => Targets::Real(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Standardized train/validation matrices with their targets.
#[derive(Debug, Clone)]
pub struct TrainingData<T> {
    pub train_x: Array2<T>,
    pub train_y: Targets<T>,
    pub val_x: Array2<T>,
    pub val_y: Targets<T>,
}

impl<T: Real> TrainingData<T> {
    fn validate(&self, groups: &GroupMatrix) -> Result<()> {
        for (name, x, y) in [("train", &self.train_x, &self.train_y), ("validation", &self.val_x, &self.val_y)] {
            if x.ncols() != groups.feature_count() {
                return Err(Error::DimensionMismatch {
                    context: "training features",
                    expected: groups.feature_count(),
                    actual: x.ncols(),
                });
            }
            if x.nrows() != y.len() || x.nrows() == 0 {
                return Err(Error::InvalidDataset(format!("{name} split has {} rows and {} targets", x.nrows(), y.len())));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("{name} split has non-finite features")));
            }
        }
        if self.train_y.task() != self.val_y.task() {
            return Err(Error::InvalidDataset("train and validation targets disagree on task".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pretrain,
    Joint,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub phase: Phase,
    pub epoch: usize,
    /// `None` during pre-training.
    pub temperature: Option<f64>,
    pub train_loss: f64,
    /// Zero-temperature validation loss for joint training; random-subset
    /// validation loss for pre-training.
    pub val_loss: f64,
    /// Validation loss with Concrete samples at this epoch's temperature.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxed_val_loss: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn epochs_at(&self, temperature: f64) -> usize {
        self.records.iter().filter(|r| r.temperature == Some(temperature)).count()
    }

    /// Best zero-temperature validation loss seen during joint training.
    pub fn best_joint_val_loss(&self) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.phase == Phase::Joint)
            .map(|r| r.val_loss)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }
}

const EVAL_CHUNK: usize = 2048;

/// Per-row loss value and `dL/d(head output)` for the predictor head.
fn loss_and_grad<T: Real>(out: ArrayView2<T>, targets: &Targets<T>, scale: T) -> Result<(T, Array2<T>)> {
    let mut grad = Array2::zeros(out.raw_dim());
    let mut total = T::zero();
    match targets {
        Targets::Classes { labels, .. } => {
            for ((row, mut g), &y) in out.rows().into_iter().zip(grad.rows_mut()).zip(labels) {
                let (loss, dl) = softmax_cross_entropy(row.as_slice().expect("contiguous row"), y)?;
                total += loss;
                for (gi, di) in g.iter_mut().zip(dl) {
                    *gi = di * scale;
                }
            }
        }
        Targets::Real(values) => {
            for ((row, mut g), &y) in out.rows().into_iter().zip(grad.rows_mut()).zip(values) {
                let r = row[0] - y;
                total += r * r;
                g[0] = T::lit(2.0) * r * scale;
            }
        }
    }
    Ok((total, grad))
}

fn loss_only<T: Real>(out: ArrayView2<T>, targets: &Targets<T>) -> Result<T> {
    loss_and_grad(out, targets, T::zero()).map(|(l, _)| l)
}

fn embed<T: Real>(head: Head, width: usize, grad: &Array2<T>) -> Array2<T> {
    let mut full = Array2::zeros((grad.nrows(), width));
    full.slice_mut(s![.., head.offset..head.offset + head.width]).assign(grad);
    full
}

fn bool_masks<T: Real>(masks: &[Vec<bool>]) -> Array2<T> {
    let g = masks.first().map_or(0, Vec::len);
    Array2::from_shape_fn((masks.len(), g), |(b, j)| if masks[b][j] { T::one() } else { T::zero() })
}

fn check_finite<T: Real>(loss: T, what: &str, epoch: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Diverged(format!("non-finite {what} loss {loss} at epoch {epoch}")));
    }
    Ok(())
}

struct Trainer<'a, T> {
    model: DfsModel<T>,
    data: &'a TrainingData<T>,
    config: &'a TrainConfig,
    rng: ChaCha8Rng,
    start: Instant,
    log: TrainingLog,
}

impl<T: Real> Trainer<'_, T> {
    fn optimizers(&self) -> Result<Vec<OptState<T>>> {
        let cfg = AdamConfig { learning_rate: self.config.learning_rate, ..AdamConfig::default() };
        self.model.nets.iter().map(|n| OptState::new(n, cfg)).collect()
    }

    fn batches(&mut self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.data.train_x.nrows()).collect();
        order.shuffle(&mut self.rng);
        order.chunks(self.config.batch_size).map(<[usize]>::to_vec).collect()
    }

    fn apply(&mut self, grads: &[Gradients<T>], opts: &mut [OptState<T>]) -> Result<()> {
        for ((net, g), opt) in self.model.nets.iter_mut().zip(grads).zip(opts) {
            opt.step(net, g)?;
        }
        Ok(())
    }

    fn record(&mut self, phase: Phase, epoch: usize, temperature: Option<f64>, train: T, val: T, relaxed: Option<T>) {
        self.log.records.push(LogRecord {
            phase,
            epoch,
            temperature,
            train_loss: train.as_f64(),
            val_loss: val.as_f64(),
            relaxed_val_loss: relaxed.map(T::as_f64),
            wall_time_s: self.start.elapsed().as_secs_f64(),
        });
    }

    /// Forward + backward of the predictor head at the given (possibly relaxed) masks.
    /// Returns the summed loss, accumulates parameter gradients, and yields `dL/d(mask)`.
    fn predictor_pass(
        &mut self,
        x: ArrayView2<T>,
        y: &Targets<T>,
        mask: ArrayView2<T>,
        scale: T,
        grads: &mut [Gradients<T>],
    ) -> Result<(T, Array2<T>)> {
        let head = self.model.predictor_head;
        let input = masked_batch(x, mask, self.model.groups());
        let net = &self.model.nets[head.net];
        let (out, tape) = net.forward_batch(input.view(), Mode::Train, &mut self.rng)?;
        let cols = self.model.head_columns(head, &out);
        let (loss, g) = loss_and_grad(cols.view(), y, scale)?;
        let (pg, input_grad) = net.gradient(&tape, embed(head, net.output_dim(), &g).view())?;
        grads[head.net].add_assign(&pg);
        Ok((loss, mask_gradient(x, input_grad.view(), self.model.groups())))
    }

    fn pretrain(&mut self) -> Result<()> {
        let g = self.model.groups().group_count();
        let dist = SubsetDistribution::all(g);
        // frozen validation masks so the early-stopping signal is comparable across epochs
        let mut val_rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5e_ed0f_7a11);
        let val_masks: Vec<Vec<bool>> =
            (0..self.data.val_x.nrows()).map(|_| dist.sample(g, &mut val_rng)).collect();
        let val_masks = bool_masks::<T>(&val_masks);

        let mut opts = self.optimizers()?;
        let mut best = (self.pretrain_val_loss(&val_masks)?, self.model.nets.clone());
        let mut stall = 0;
        for epoch in 0..self.config.pretrain_epochs {
            let mut epoch_loss = T::zero();
            for idx in self.batches() {
                let x = self.data.train_x.select(Axis(0), &idx);
                let y = self.data.train_y.subset(&idx);
                let masks: Vec<Vec<bool>> = idx.iter().map(|_| dist.sample(g, &mut self.rng)).collect();
                let masks = bool_masks::<T>(&masks);
                let mut grads: Vec<Gradients<T>> = self.model.nets.iter().map(Gradients::zeros_like).collect();
                let scale = T::one() / T::lit(idx.len() as f64);
                let (loss, _) = self.predictor_pass(x.view(), &y, masks.view(), scale, &mut grads)?;
                check_finite(loss, "pre-training", epoch)?;
                epoch_loss += loss;
                self.apply(&grads, &mut opts)?;
            }
            let train = epoch_loss / T::lit(self.data.train_x.nrows() as f64);
            let val = self.pretrain_val_loss(&val_masks)?;
            check_finite(val, "pre-training validation", epoch)?;
            self.record(Phase::Pretrain, epoch, None, train, val, None);
            if val < best.0 {
                best = (val, self.model.nets.clone());
                stall = 0;
            } else {
                stall += 1;
                if stall >= self.config.patience {
                    break;
                }
            }
        }
        self.model.nets = best.1;
        Ok(())
    }

    fn pretrain_val_loss(&self, masks: &Array2<T>) -> Result<T> {
        let n = self.data.val_x.nrows();
        let mut total = T::zero();
        for start in (0..n).step_by(EVAL_CHUNK) {
            let end = (start + EVAL_CHUNK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let out = self.model.predictor_outputs_batch(
                self.data.val_x.slice(s![start..end, ..]),
                masks.slice(s![start..end, ..]),
            )?;
            total += loss_only(out.view(), &self.data.val_y.subset(&idx))?;
        }
        Ok(total / T::lit(n as f64))
    }

    /// One optimization step of the joint objective on a minibatch.
    fn joint_batch(&mut self, idx: &[usize], temperature: T, opts: &mut [OptState<T>]) -> Result<T> {
        let groups = self.model.groups().clone();
        let g = groups.group_count();
        let k = self.config.budget;
        let x = self.data.train_x.select(Axis(0), idx);
        let y = self.data.train_y.subset(idx);
        let b = idx.len();
        let scale = T::one() / T::lit(b as f64);
        let policy_head = self.model.policy_head;
        let random_states = SubsetDistribution::below_budget(k);

        let mut grads: Vec<Gradients<T>> = self.model.nets.iter().map(Gradients::zeros_like).collect();
        let mut hard = Array2::<T>::zeros((b, g));
        let mut total = T::zero();

        for _step in 0..k {
            let state = match self.config.subset_source {
                SubsetSource::PolicyRollout => hard.clone(),
                SubsetSource::RandomUniform => {
                    let masks: Vec<Vec<bool>> = (0..b).map(|_| random_states.sample(g, &mut self.rng)).collect();
                    bool_masks(&masks)
                }
            };

            let policy_input = masked_batch(x.view(), state.view(), &groups);
            let policy_net = &self.model.nets[policy_head.net];
            let (out, policy_tape) = policy_net.forward_batch(policy_input.view(), Mode::Train, &mut self.rng)?;
            let mut logits = self.model.head_columns(policy_head, &out);
            exclude_selected(&mut logits, state.view());

            let mut relaxed = Array2::<T>::zeros((b, g));
            let mut chosen = Vec::with_capacity(b);
            for (row, mut r) in logits.rows().into_iter().zip(relaxed.rows_mut()) {
                let sample = concrete_sample(row.as_slice().expect("contiguous row"), temperature, &mut self.rng)?;
                r.assign(&ndarray::ArrayView1::from(sample.relaxed.as_slice()));
                chosen.push(sample.index);
            }
            // max(m, relaxed); acquired entries are 1 and carry no gradient
            let mut relaxed_mask = relaxed.clone();
            ndarray::Zip::from(&mut relaxed_mask).and(&state).for_each(|r, &m| *r = r.max(m));

            let (loss, mask_grad) = self.predictor_pass(x.view(), &y, relaxed_mask.view(), scale, &mut grads)?;
            total += loss;

            let mut logit_grad = Array2::<T>::zeros((b, g));
            for bi in 0..b {
                let upstream: Vec<T> = (0..g)
                    .map(|j| if state[[bi, j]] > T::zero() { T::zero() } else { mask_grad[[bi, j]] })
                    .collect();
                let r = relaxed.row(bi);
                let dl = tempered_softmax_backward(r.as_slice().expect("contiguous row"), &upstream, temperature);
                for (j, v) in dl.into_iter().enumerate() {
                    logit_grad[[bi, j]] = v;
                }
            }
            let policy_net = &self.model.nets[policy_head.net];
            let (pg, _) = policy_net.gradient(&policy_tape, embed(policy_head, policy_net.output_dim(), &logit_grad).view())?;
            grads[policy_head.net].add_assign(&pg);

            if self.config.subset_source == SubsetSource::PolicyRollout {
                for (bi, &j) in chosen.iter().enumerate() {
                    hard[[bi, j]] = T::one();
                }
            }
        }
        self.apply(&grads, opts)?;
        Ok(total)
    }

    fn joint(&mut self) -> Result<()> {
        let mut opts = self.optimizers()?;
        let k = self.config.budget;
        let mut best = (zero_temperature_loss(&self.model, self.data.val_x.view(), &self.data.val_y, k)?, self.model.nets.clone());
        let steps = T::lit((k * self.data.train_x.nrows()) as f64);
        let mut epoch_counter = 0;
        for (t_index, &temperature) in self.config.temperatures.iter().enumerate() {
            let tau = T::lit(temperature);
            // the same Gumbel noise every epoch keeps the relaxed loss comparable
            let val_seed = self.config.seed ^ (0x7e3a_u64 << 16) ^ t_index as u64;
            let mut best_here: Option<(T, Vec<NetworkParams<T>>)> = None;
            let mut stall = 0;
            for _ in 0..self.config.max_epochs {
                let mut epoch_loss = T::zero();
                for idx in self.batches() {
                    let loss = self.joint_batch(&idx, tau, &mut opts)?;
                    check_finite(loss, "joint training", epoch_counter)?;
                    epoch_loss += loss;
                }
                let val = zero_temperature_loss(&self.model, self.data.val_x.view(), &self.data.val_y, k)?;
                check_finite(val, "zero-temperature validation", epoch_counter)?;
                let relaxed = relaxed_loss(
                    &self.model,
                    self.data.val_x.view(),
                    &self.data.val_y,
                    k,
                    tau,
                    &mut ChaCha8Rng::seed_from_u64(val_seed),
                )?;
                check_finite(relaxed, "relaxed validation", epoch_counter)?;
                self.record(Phase::Joint, epoch_counter, Some(temperature), epoch_loss / steps, val, Some(relaxed));
                epoch_counter += 1;
                if val < best.0 {
                    best = (val, self.model.nets.clone());
                }
                let watched = match self.config.early_stopping {
                    StopMetric::Relaxed => relaxed,
                    StopMetric::ZeroTemperature => val,
                };
                if best_here.as_ref().is_none_or(|(b, _)| watched < *b) {
                    best_here = Some((watched, self.model.nets.clone()));
                    stall = 0;
                } else {
                    stall += 1;
                    if stall >= self.config.patience {
                        break;
                    }
                }
            }
            if let Some((_, nets)) = best_here {
                self.model.nets = nets;
            }
        }
        self.model.nets = best.1;
        Ok(())
    }
}

/// Mean per-step validation loss of rollouts that predict from Concrete-relaxed
/// masks at `temperature`, advancing with the hard sample.
pub fn relaxed_loss<T: Real, R: rand::Rng + ?Sized>(
    model: &DfsModel<T>,
    x: ArrayView2<T>,
    y: &Targets<T>,
    budget: usize,
    temperature: T,
    rng: &mut R,
) -> Result<T> {
    let n = x.nrows();
    let g = model.groups().group_count();
    let steps = budget.min(g);
    let mut total = T::zero();
    for start in (0..n).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(n);
        let xb = x.slice(s![start..end, ..]);
        let idx: Vec<usize> = (start..end).collect();
        let yb = y.subset(&idx);
        let mut hard = Array2::<T>::zeros((end - start, g));
        for _ in 0..steps {
            let logits = model.policy_logits_batch(xb, hard.view())?;
            let mut relaxed = hard.clone();
            let mut chosen = Vec::with_capacity(end - start);
            for (bi, row) in logits.rows().into_iter().enumerate() {
                let sample = concrete_sample(row.as_slice().expect("contiguous row"), temperature, rng)?;
                for (j, &r) in sample.relaxed.as_slice().iter().enumerate() {
                    relaxed[[bi, j]] = relaxed[[bi, j]].max(r);
                }
                chosen.push(sample.index);
            }
            let out = model.predictor_outputs_batch(xb, relaxed.view())?;
            total += loss_only(out.view(), &yb)?;
            for (bi, &j) in chosen.iter().enumerate() {
                hard[[bi, j]] = T::one();
            }
        }
    }
    Ok(total / T::lit((n * steps.max(1)) as f64))
}

/// Mean per-step loss of deterministic (argmax, no Gumbel noise) rollouts of length `budget`.
pub fn zero_temperature_loss<T: Real>(model: &DfsModel<T>, x: ArrayView2<T>, y: &Targets<T>, budget: usize) -> Result<T> {
    let n = x.nrows();
    let g = model.groups().group_count();
    let mut total = T::zero();
    for start in (0..n).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(n);
        let xb = x.slice(s![start..end, ..]);
        let idx: Vec<usize> = (start..end).collect();
        let yb = y.subset(&idx);
        let mut mask = Array2::<T>::zeros((end - start, g));
        for _ in 0..budget.min(g) {
            let logits = model.policy_logits_batch(xb, mask.view())?;
            for (bi, row) in logits.rows().into_iter().enumerate() {
                let j = crate::numerics::argmax(row.as_slice().expect("contiguous row")).ok_or(Error::AllSelected)?;
                mask[[bi, j]] = T::one();
            }
            let out = model.predictor_outputs_batch(xb, mask.view())?;
            total += loss_only(out.view(), &yb)?;
        }
    }
    Ok(total / T::lit((n * budget.min(g).max(1)) as f64))
}

/// Initializes a model and pre-trains its predictor on random subsets of every size.
pub fn pretrain_predictor<T: Real>(
    data: &TrainingData<T>,
    groups: GroupMatrix,
    config: &TrainConfig,
) -> Result<(DfsModel<T>, TrainingLog)> {
    config.validate(groups.group_count())?;
    data.validate(&groups)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = DfsModel::init(groups, data.train_y.task(), &config.hidden, config.dropout, config.share_backbone, &mut rng)?;
    let mut trainer = Trainer { model, data, config, rng, start: Instant::now(), log: TrainingLog::default() };
    trainer.pretrain()?;
    Ok((trainer.model, trainer.log))
}

/// Joint training over the temperature sequence, returning the checkpoint with the
/// best zero-temperature validation loss across all temperatures.
pub fn train_joint<T: Real>(
    data: &TrainingData<T>,
    model: DfsModel<T>,
    config: &TrainConfig,
) -> Result<(DfsModel<T>, TrainingLog)> {
    config.validate(model.groups().group_count())?;
    data.validate(model.groups())?;
    if data.train_y.task() != model.task() {
        return Err(Error::TaskMismatch { expected: "matching model and data" });
    }
    let rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut trainer = Trainer { model, data, config, rng, start: Instant::now(), log: TrainingLog::default() };
    trainer.joint()?;
    Ok((trainer.model, trainer.log))
}

/// Pre-training followed by joint training, with both logs concatenated.
pub fn fit<T: Real>(data: &TrainingData<T>, groups: GroupMatrix, config: &TrainConfig) -> Result<(DfsModel<T>, TrainingLog)> {
    let (model, mut log) = pretrain_predictor(data, groups, config)?;
    let (model, joint) = train_joint(data, model, config)?;
    log.records.extend(joint.records);
    Ok((model, log))
}

/// Deterministic greedy rollout of a trained model on one standardized instance.
pub fn rollout_selections<T: Real>(model: &DfsModel<T>, x: &[T], budget: usize) -> Result<Vec<usize>> {
    let g = model.groups().group_count();
    let mut mask = vec![T::zero(); g];
    let mut picks = Vec::with_capacity(budget);
    for _ in 0..budget.min(g) {
        let j = model.policy_select(x, &mask)?;
        mask[j] = T::one();
        picks.push(j);
    }
    Ok(picks)
}
