//! Gradients, the Adam optimizer, evaluation and the per-graph training loop.

mod gradcheck;

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bosonic::{basis_size, DEFAULT_BASIS_CAP};
use crate::dataset::{Dataset, Task};
use crate::diffusion::{target_of, Model};
use crate::error::{Error, Result};
use crate::graph::{Graph, Label};

pub use gradcheck::{gradcheck_cases, run_gradcheck, GradcheckCase, GradcheckOutcome, GradcheckSpec, GRAD_FLOOR, GRAD_TOL};

/// Partial derivatives in the model's canonical parameter order
/// (see [`crate::diffusion::ParamLayout`]).
pub type GradVector = Vec<f64>;

pub const FD_STEP: f64 = 1e-5;

/// Analytic gradient of the loss of `model` on the labelled graph `g`.
pub fn grad(model: &Model, g: &Graph) -> Result<GradVector> {
    model.loss_and_grad(g).map(|(_, gr)| gr)
}

/// `(f(θ + h eᵢ) − f(θ − h eᵢ)) / 2h` for every coordinate.
pub fn central_difference<F>(theta: &[f64], h: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..theta.len())
        .into_par_iter()
        .map(|i| {
            let mut t = theta.to_vec();
            t[i] = theta[i] + h;
            let plus = f(&t)?;
            t[i] = theta[i] - h;
            let minus = f(&t)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

pub fn finite_diff_grad(model: &Model, g: &Graph, h: f64) -> Result<GradVector> {
    central_difference(model.params(), h, |theta| {
        let mut m = model.clone();
        m.params_mut().copy_from_slice(theta);
        m.loss(g)
    })
}

/// Largest relative disagreement between two gradients, over coordinates
/// where `|a| + |b| > floor`. Returns `(index, error)`.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> Option<(usize, f64)> {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| x.abs() + y.abs() > floor)
        .map(|(i, (x, y))| (i, (x - y).abs() / (x.abs() + y.abs())))
        .max_by(|l, r| l.1.total_cmp(&r.1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptState {
    pub fn new(num_params: usize, lr: f64) -> OptState {
        OptState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut OptState) -> Result<()> {
    if params.len() != grads.len() || grads.len() != state.m.len() {
        return Err(Error::Dimension(format!(
            "{} parameters, {} gradients, {} optimizer slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient entry {i}")));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let mhat = state.m[i] / c1;
        let vhat = state.v[i] / c2;
        params[i] -= state.lr * mhat / (vhat.sqrt() + state.eps);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy(f64),
    Regression { mse: f64, mae: f64 },
}

impl Metric {
    /// The headline number: accuracy, or MSE for regression.
    pub fn value(&self) -> f64 {
        match *self {
            Metric::Accuracy(a) => a,
            Metric::Regression { mse, .. } => mse,
        }
    }
}

/// Index of the largest logit; ties go to the lower class.
pub fn predicted_class(logits: &[f64]) -> usize {
    let mut best = 0;
    for (k, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = k;
        }
    }
    best
}

pub fn metric_from_predictions(task: Task, preds: &[Vec<f64>], targets: &[Label]) -> Result<Metric> {
    if preds.is_empty() {
        return Err(Error::Dataset("cannot evaluate on an empty dataset".into()));
    }
    let n = preds.len() as f64;
    match task {
        Task::Classification { .. } => {
            let correct = preds
                .iter()
                .zip(targets)
                .filter(|(p, t)| matches!(t, Label::Class(c) if *c == predicted_class(p)))
                .count();
            Ok(Metric::Accuracy(correct as f64 / n))
        }
        Task::Regression => {
            let mut mse = 0.0;
            let mut mae = 0.0;
            for (p, t) in preds.iter().zip(targets) {
                let Label::Target(y) = t else {
                    return Err(Error::Dataset("regression target missing".into()));
                };
                let e = p[0] - y;
                mse += e * e;
                mae += e.abs();
            }
            Ok(Metric::Regression {
                mse: mse / n,
                mae: mae / n,
            })
        }
    }
}

pub fn evaluate(model: &Model, d: &Dataset) -> Result<Metric> {
    let preds: Vec<Vec<f64>> = d.graphs().par_iter().map(|g| model.predict(g)).collect::<Result<_>>()?;
    let targets: Vec<Label> = d.graphs().iter().map(target_of).collect::<Result<_>>()?;
    metric_from_predictions(model.config().task, &preds, &targets)
}

/// Mean loss over a dataset, summed in dataset order.
pub fn mean_loss(model: &Model, d: &Dataset) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::Dataset("cannot average a loss over an empty dataset".into()));
    }
    let losses: Vec<f64> = d.graphs().par_iter().map(|g| model.loss(g)).collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Engine limits a dataset must respect before training starts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Graphs must have strictly fewer nodes than this.
    pub max_nodes: usize,
    /// Largest two-boson Fock sector allowed in boson-2 mode.
    pub max_states: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_nodes: 70,
            max_states: DEFAULT_BASIS_CAP,
        }
    }
}

/// Errors name the first graph (by dataset index) that breaks a cap or does not fit the model.
pub fn check_dataset(model: &Model, d: &Dataset, caps: &Caps) -> Result<()> {
    let boson = model.config().mode == "boson-2";
    for (i, g) in d.graphs().iter().enumerate() {
        let tag = |e: Error| Error::Dataset(format!("{} graph {i}: {e}", d.name()));
        if g.n() >= caps.max_nodes {
            return Err(tag(Error::InvalidArgument(format!(
                "{} nodes, engine cap is fewer than {}",
                g.n(),
                caps.max_nodes
            ))));
        }
        if boson {
            let states = basis_size(g.n(), 2).unwrap_or(usize::MAX);
            if states > caps.max_states {
                return Err(tag(Error::TooLarge {
                    what: "two-boson sector".into(),
                    size: states,
                    cap: caps.max_states,
                }));
            }
        }
        model.check_graph(g).map_err(tag)?;
        target_of(g).map_err(tag)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss after the epoch's updates.
    pub train_loss: f64,
    pub metric: Metric,
    pub steps: u64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: String,
    pub seed: u64,
    pub train_graphs: usize,
    pub test_graphs: usize,
    pub initial_train_loss: f64,
    pub initial_metric: Metric,
    pub epochs: Vec<EpochRecord>,
    pub checkpoint: Option<PathBuf>,
}

impl TrainReport {
    pub fn final_train_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_train_loss, |e| e.train_loss)
    }

    pub fn final_metric(&self) -> Metric {
        self.epochs.last().map_or(self.initial_metric, |e| e.metric)
    }

    /// Loss curve as `epoch,train_loss,metric` (epoch 0 is the untrained model).
    pub fn loss_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,metric\n");
        s.push_str(&format!("0,{},{}\n", self.initial_train_loss, self.initial_metric.value()));
        for e in &self.epochs {
            s.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.metric.value()));
        }
        s
    }

    /// Same report with timings zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> TrainReport {
        let mut r = self.clone();
        r.epochs.iter_mut().for_each(|e| e.wall_time_s = 0.0);
        r
    }
}

/// Per-graph Adam training over a seeded shuffle of `train`, evaluating on
/// `test` after every epoch. Returns the trained model and its report.
pub fn train_loop(mut model: Model, train: &Dataset, test: &Dataset, config: &TrainConfig) -> Result<(Model, TrainReport)> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::Dataset("training and test splits must both be non-empty".into()));
    }
    check_dataset(&model, train, &config.caps)?;
    check_dataset(&model, test, &config.caps)?;
    let mut opt = OptState::new(model.num_params(), config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let initial_train_loss = mean_loss(&model, train)?;
    let initial_metric = evaluate(&model, test)?;
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        for &i in &order {
            let g = &train.graphs()[i];
            let (loss, gr) = model
                .loss_and_grad(g)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, graph {i}: {e}")))?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss {loss} at epoch {epoch}, graph {i}")));
            }
            adam_step(model.params_mut(), &gr, &mut opt)?;
        }
        if let Some(i) = model.params().iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i} after epoch {epoch}")));
        }
        let train_loss = mean_loss(&model, train)?;
        let metric = evaluate(&model, test)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            metric,
            steps: opt.step,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    let report = TrainReport {
        mode: model.config().mode.clone(),
        seed: config.seed,
        train_graphs: train.len(),
        test_graphs: test.len(),
        initial_train_loss,
        initial_metric,
        epochs,
        checkpoint: None,
    };
    Ok((model, report))
}
