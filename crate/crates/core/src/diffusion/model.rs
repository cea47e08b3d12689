use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coin_params::{coin_backward, coin_with_spectrum, generator_len, CoinParams};
use super::kernel::{kernel_registry, WalkKernel};
use crate::dataset::Task;
use crate::error::{Error, Result};
use crate::graph::{Graph, Label};
use crate::linalg::{HermitianEigen, RMatrix};
use crate::walk::{CoinBank, ProbabilityMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Walk kernel name, see [`kernel_registry`].
    pub mode: String,
    pub walk_length: usize,
    pub hidden: usize,
    #[serde(default)]
    pub pooling: Pooling,
    #[serde(default = "one")]
    pub layers: usize,
    /// Coin dimension; must cover the maximum degree of every input graph.
    pub coin_dim: usize,
    pub feature_dim: usize,
    pub task: Task,
}

fn one() -> usize {
    1
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let kernel = kernel_registry().get(&self.mode)?;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.walk_length == 0 {
            return bad("walk length must be at least 1".into());
        }
        if self.hidden == 0 {
            return bad("hidden size must be at least 1".into());
        }
        if self.layers == 0 {
            return bad("at least one diffusion layer is required".into());
        }
        if self.feature_dim == 0 {
            return bad("feature dimension must be at least 1".into());
        }
        if kernel.uses_coins() && self.coin_dim == 0 {
            return bad("coin dimension must be at least 1".into());
        }
        if self.task.output_dim() == 0 {
            return bad("classification needs at least one class".into());
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<&'static dyn WalkKernel> {
        kernel_registry().get(&self.mode)
    }
}

/// Offsets into the flat parameter vector. The order is fixed:
/// coin generators `[layer][t][generator][d²]` (features first, bias last),
/// then `W₁` (F × H, row-major), `b₁`, `W₂` (H × out, row-major), `b₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub coins_per_layer: usize,
    pub layers: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub total: usize,
    f: usize,
    h: usize,
    out: usize,
}

impl ParamLayout {
    pub fn new(c: &ModelConfig) -> Result<ParamLayout> {
        let kernel = c.kernel()?;
        let coins_per_layer = if kernel.uses_coins() {
            c.walk_length * (c.feature_dim + 1) * generator_len(c.coin_dim)
        } else {
            0
        };
        let (f, h, out) = (c.feature_dim, c.hidden, c.task.output_dim());
        let w1 = coins_per_layer * c.layers;
        let b1 = w1 + f * h;
        let w2 = b1 + h;
        let b2 = w2 + h * out;
        Ok(ParamLayout {
            coins_per_layer,
            layers: c.layers,
            w1,
            b1,
            w2,
            b2,
            total: b2 + out,
            f,
            h,
            out,
        })
    }

    pub fn coin_range(&self, layer: usize) -> std::ops::Range<usize> {
        let o = layer * self.coins_per_layer;
        o..o + self.coins_per_layer
    }

    /// True for biases, which start at zero.
    pub fn is_bias(&self, i: usize) -> bool {
        (self.b1..self.w2).contains(&i) || i >= self.b2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    layout: ParamLayout,
    seed: u64,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for the backward pass.
pub struct ForwardPass {
    layers: Vec<LayerCache>,
    pooled: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    pub output: Vec<f64>,
}

struct LayerCache {
    x_in: RMatrix,
    coins: Option<CoinBank>,
    spectra: Vec<Vec<HermitianEigen>>,
    p: ProbabilityMatrix,
}

impl ForwardPass {
    /// Diffused features of the last layer.
    pub fn diffused(&self) -> Result<RMatrix> {
        let last = self.layers.last().expect("at least one layer");
        last.p.diffuse(&last.x_in)
    }

    pub fn probability(&self, layer: usize) -> &ProbabilityMatrix {
        &self.layers[layer].p
    }

    /// Hidden-layer inputs before the ReLU.
    pub fn pre_activations(&self) -> &[f64] {
        &self.pre
    }
}

impl Model {
    /// Coins and weights uniform in (−0.1, 0.1) from a ChaCha8 stream seeded
    /// with `seed`, biases zero.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Model> {
        config.validate()?;
        let layout = ParamLayout::new(&config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..layout.total)
            .map(|i| if layout.is_bias(i) { 0.0 } else { rng.gen_range(-0.1..0.1) })
            .collect();
        Ok(Model {
            config,
            layout,
            seed,
            params,
        })
    }

    pub fn from_params(config: ModelConfig, seed: u64, params: Vec<f64>) -> Result<Model> {
        config.validate()?;
        let layout = ParamLayout::new(&config)?;
        if params.len() != layout.total {
            return Err(Error::Dimension(format!(
                "{} parameters, model needs {}",
                params.len(),
                layout.total
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i}")));
        }
        Ok(Model {
            config,
            layout,
            seed,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn coin_params(&self, layer: usize) -> CoinParams {
        let c = &self.config;
        CoinParams::from_values(
            c.coin_dim,
            c.feature_dim,
            c.walk_length,
            self.params[self.layout.coin_range(layer)].to_vec(),
        )
        .expect("layout sizes the coin block")
    }

    /// Check that `g` fits this model.
    pub fn check_graph(&self, g: &Graph) -> Result<()> {
        if g.feature_dim() != self.config.feature_dim {
            return Err(Error::Dimension(format!(
                "graph has {} features, model expects {}",
                g.feature_dim(),
                self.config.feature_dim
            )));
        }
        if self.config.kernel()?.uses_coins() && g.max_degree() > self.config.coin_dim {
            return Err(Error::Dimension(format!(
                "graph degree {} exceeds coin dimension {}",
                g.max_degree(),
                self.config.coin_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, g: &Graph) -> Result<ForwardPass> {
        self.check_graph(g)?;
        let kernel = self.config.kernel()?;
        let mut x = g.features().clone();
        let mut layers = Vec::with_capacity(self.config.layers);
        for layer in 0..self.config.layers {
            let (coins, spectra) = if kernel.uses_coins() {
                let (bank, spectra) = build_coins(&self.coin_params(layer), &x)?;
                (Some(bank), spectra)
            } else {
                (None, Vec::new())
            };
            let p = kernel.probability(g, coins.as_ref(), self.config.walk_length)?;
            let next = p.diffuse(&x)?;
            layers.push(LayerCache {
                x_in: x,
                coins,
                spectra,
                p,
            });
            x = next;
        }
        let pooled = mean_rows(&x);
        let (pre, hidden, output) = self.head(&pooled);
        if output.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model output".into()));
        }
        Ok(ForwardPass {
            layers,
            pooled,
            pre,
            hidden,
            output,
        })
    }

    fn head(&self, pooled: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ParamLayout { f, h, out, .. } = self.layout;
        let p = &self.params;
        let l = &self.layout;
        let pre: Vec<f64> = (0..h)
            .map(|j| p[l.b1 + j] + (0..f).map(|i| p[l.w1 + i * h + j] * pooled[i]).sum::<f64>())
            .collect();
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let output = (0..out)
            .map(|k| p[l.b2 + k] + (0..h).map(|j| p[l.w2 + j * out + k] * hidden[j]).sum::<f64>())
            .collect();
        (pre, hidden, output)
    }

    /// Readout applied to already diffused features.
    pub fn readout(&self, xhat: &RMatrix) -> Result<Vec<f64>> {
        if xhat.cols() != self.config.feature_dim || xhat.rows() == 0 {
            return Err(Error::Dimension(format!(
                "readout expects n x {} features, got {} x {}",
                self.config.feature_dim,
                xhat.rows(),
                xhat.cols()
            )));
        }
        Ok(self.head(&mean_rows(xhat)).2)
    }

    pub fn predict(&self, g: &Graph) -> Result<Vec<f64>> {
        Ok(self.forward(g)?.output)
    }

    pub fn loss(&self, g: &Graph) -> Result<f64> {
        let out = self.predict(g)?;
        loss(&out, target_of(g)?, self.config.task)
    }

    /// Loss and its gradient with respect to every parameter, in layout order.
    pub fn loss_and_grad(&self, g: &Graph) -> Result<(f64, Vec<f64>)> {
        let fp = self.forward(g)?;
        let task = self.config.task;
        let target = target_of(g)?;
        let l = loss(&fp.output, target, task)?;
        if !l.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        let dout = loss_grad(&fp.output, target, task)?;
        Ok((l, self.backward(g, &fp, &dout)?))
    }

    fn backward(&self, g: &Graph, fp: &ForwardPass, dout: &[f64]) -> Result<Vec<f64>> {
        let ParamLayout { f, h, out, .. } = self.layout;
        let lay = self.layout;
        let p = &self.params;
        let mut grad = vec![0.0; lay.total];

        let mut dhidden = vec![0.0; h];
        for j in 0..h {
            for k in 0..out {
                grad[lay.w2 + j * out + k] = fp.hidden[j] * dout[k];
                dhidden[j] += p[lay.w2 + j * out + k] * dout[k];
            }
        }
        grad[lay.b2..lay.b2 + out].copy_from_slice(dout);
        let dpre: Vec<f64> = dhidden
            .iter()
            .zip(&fp.pre)
            .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
            .collect();
        let mut dpooled = vec![0.0; f];
        for i in 0..f {
            for j in 0..h {
                grad[lay.w1 + i * h + j] = fp.pooled[i] * dpre[j];
                dpooled[i] += p[lay.w1 + i * h + j] * dpre[j];
            }
        }
        grad[lay.b1..lay.b1 + h].copy_from_slice(&dpre);

        let n = g.n();
        let kernel = self.config.kernel()?;
        let steps = self.config.walk_length;
        let mut dxhat = RMatrix::from_fn(n, f, |_, i| dpooled[i] / n as f64);
        for (layer, cache) in fp.layers.iter().enumerate().rev() {
            let pm = cache.p.matrix();
            // X̂ = P X  =>  dP = dX̂ Xᵀ,  dX = Pᵀ dX̂
            let dp = dxhat.matmul(&cache.x_in.transpose())?;
            let mut dx = pm.transpose().matmul(&dxhat)?;
            if let Some(bank) = &cache.coins {
                let params = self.coin_params(layer);
                let gc = kernel.coin_gradient(g, bank, steps, &dp)?;
                let gl = &mut grad[lay.coin_range(layer)];
                let glen = generator_len(params.coin_dim());
                for t in 0..steps {
                    for v in 0..n {
                        let gg = coin_backward(&cache.spectra[t][v], &gc[t][v]);
                        let x = cache.x_in.row(v);
                        let bias = params.offset(t, params.bias_index());
                        for (a, b) in gl[bias..bias + glen].iter_mut().zip(&gg) {
                            *a += b;
                        }
                        for (fi, &xf) in x.iter().enumerate() {
                            let o = params.offset(t, fi);
                            for (a, b) in gl[o..o + glen].iter_mut().zip(&gg) {
                                *a += xf * b;
                            }
                            let theta = params.generator_values(t, fi);
                            dx[(v, fi)] += theta.iter().zip(&gg).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
            }
            dxhat = dx;
        }
        if let Some(i) = grad.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i}")));
        }
        Ok(grad)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let lay = self.layout;
        let c = &self.config;
        let p = &self.params;
        let glen = generator_len(c.coin_dim);
        let coins = (0..lay.layers)
            .map(|layer| {
                let block = &p[lay.coin_range(layer)];
                block
                    .chunks(glen * (c.feature_dim + 1))
                    .map(|step| step.chunks(glen).map(<[f64]>::to_vec).collect())
                    .collect()
            })
            .collect();
        let matrix = |start: usize, rows: usize, cols: usize| -> Vec<Vec<f64>> {
            (0..rows).map(|r| p[start + r * cols..start + (r + 1) * cols].to_vec()).collect()
        };
        Checkpoint {
            config: c.clone(),
            seed: self.seed,
            params: CheckpointParams {
                coins,
                w1: matrix(lay.w1, lay.f, lay.h),
                b1: p[lay.b1..lay.w2].to_vec(),
                w2: matrix(lay.w2, lay.h, lay.out),
                b2: p[lay.b2..].to_vec(),
            },
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Model> {
        let mut flat = Vec::new();
        if ck.config.kernel()?.uses_coins() {
            for step in ck.params.coins.iter().flatten() {
                for gen in step {
                    flat.extend_from_slice(gen);
                }
            }
        } else if ck.params.coins.iter().any(|l| !l.is_empty()) {
            return Err(Error::Dimension(format!("mode {} has no coin parameters", ck.config.mode)));
        }
        let shape_err = |what: &str| Error::Dimension(format!("checkpoint {what} has the wrong shape"));
        let layout = ParamLayout::new(&ck.config)?;
        if flat.len() != layout.w1 {
            return Err(shape_err("coins"));
        }
        let ragged = |m: &[Vec<f64>], rows: usize, cols: usize| m.len() != rows || m.iter().any(|r| r.len() != cols);
        if ragged(&ck.params.w1, layout.f, layout.h) {
            return Err(shape_err("w1"));
        }
        if ragged(&ck.params.w2, layout.h, layout.out) {
            return Err(shape_err("w2"));
        }
        flat.extend(ck.params.w1.iter().flatten());
        flat.extend(&ck.params.b1);
        flat.extend(ck.params.w2.iter().flatten());
        flat.extend(&ck.params.b2);
        Model::from_params(ck.config, ck.seed, flat)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_checkpoint(serde_json::from_str(&text)?)
    }
}

/// Model checkpoint. Floats are written in shortest round-trip form, so
/// save followed by load reproduces every parameter bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub seed: u64,
    pub params: CheckpointParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointParams {
    /// `[layer][t][generator][d²]`
    pub coins: Vec<Vec<Vec<Vec<f64>>>>,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

/// Per-node, per-step coins from node features, with their spectra.
fn build_coins(params: &CoinParams, x: &RMatrix) -> Result<(CoinBank, Vec<Vec<HermitianEigen>>)> {
    let n = x.rows();
    let built: Vec<Vec<_>> = (0..params.steps())
        .into_par_iter()
        .map(|t| (0..n).map(|v| coin_with_spectrum(params, t, x.row(v))).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut coins = Vec::with_capacity(built.len());
    let mut spectra = Vec::with_capacity(built.len());
    for step in built {
        let (c, s): (Vec<_>, Vec<_>) = step.into_iter().unzip();
        coins.push(c);
        spectra.push(s);
    }
    Ok((CoinBank::new(coins)?, spectra))
}

fn mean_rows(x: &RMatrix) -> Vec<f64> {
    let n = x.rows() as f64;
    let mut m = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for (a, b) in m.iter_mut().zip(x.row(r)) {
            *a += b;
        }
    }
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// `X̂ = P X` for one layer of `steps` walk steps. Quantum kernels build
/// their coins from `params` conditioned on the rows of `x`.
pub fn diffusion_forward(
    g: &Graph,
    kernel: &dyn WalkKernel,
    params: Option<&CoinParams>,
    steps: usize,
    x: &RMatrix,
) -> Result<RMatrix> {
    if x.rows() != g.n() {
        return Err(Error::Dimension(format!(
            "feature matrix has {} rows for {} nodes",
            x.rows(),
            g.n()
        )));
    }
    let coins = match (kernel.uses_coins(), params) {
        (false, _) => None,
        (true, Some(p)) => Some(build_coins(p, x)?.0),
        (true, None) => {
            return Err(Error::InvalidArgument(format!("{} mode needs coin parameters", kernel.name())))
        }
    };
    kernel.probability(g, coins.as_ref(), steps)?.diffuse(x)
}

pub fn target_of(g: &Graph) -> Result<Label> {
    g.label()
        .ok_or_else(|| Error::Dataset("graph has no label to train against".into()))
}

/// Softmax cross-entropy for classification, squared error for regression.
pub fn loss(pred: &[f64], target: Label, task: Task) -> Result<f64> {
    match (task, target) {
        (Task::Classification { num_classes }, Label::Class(c)) => {
            if c >= num_classes || pred.len() != num_classes {
                return Err(Error::InvalidArgument(format!(
                    "class {c} with {} logits for {num_classes} classes",
                    pred.len()
                )));
            }
            Ok(log_sum_exp(pred) - pred[c])
        }
        (Task::Regression, Label::Target(y)) => {
            if pred.len() != 1 {
                return Err(Error::Dimension(format!("regression prediction has {} values", pred.len())));
            }
            Ok((pred[0] - y).powi(2))
        }
        (task, target) => Err(Error::InvalidArgument(format!("target {target:?} does not fit task {task:?}"))),
    }
}

/// `∂loss/∂pred`.
pub fn loss_grad(pred: &[f64], target: Label, task: Task) -> Result<Vec<f64>> {
    loss(pred, target, task)?;
    Ok(match target {
        Label::Class(c) => {
            let lse = log_sum_exp(pred);
            pred.iter()
                .enumerate()
                .map(|(k, &z)| (z - lse).exp() - if k == c { 1.0 } else { 0.0 })
                .collect()
        }
        Label::Target(y) => vec![2.0 * (pred[0] - y)],
    })
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: &str, task: Task) -> ModelConfig {
        ModelConfig {
            mode: mode.into(),
            walk_length: 2,
            hidden: 3,
            pooling: Pooling::Mean,
            layers: 1,
            coin_dim: 2,
            feature_dim: 2,
            task,
        }
    }

    fn labelled_edge(label: Label) -> Graph {
        Graph::build(&[(0, 1)], 2, RMatrix::identity(2)).unwrap().with_label(label)
    }

    #[test]
    fn loss_examples() {
        let cls = Task::Classification { num_classes: 2 };
        for c in 0..2 {
            let l = loss(&[0.3, 0.3], Label::Class(c), cls).unwrap();
            assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        }
        assert_eq!(loss(&[3.0], Label::Target(3.0), Task::Regression).unwrap(), 0.0);
        let big = loss(&[1000.0, 0.0], Label::Class(0), cls).unwrap();
        assert!(big.is_finite() && big.abs() < 1e-300);
        assert!(loss(&[0.0, 0.0], Label::Class(2), cls).is_err());
        let g = loss_grad(&[1000.0, 0.0], Label::Class(1), cls).unwrap();
        assert_eq!(g, vec![1.0, -1.0]);
    }

    #[test]
    fn layout_and_init() {
        let m = Model::new(cfg("quantum-1", Task::Classification { num_classes: 2 }), 3).unwrap();
        let l = *m.layout();
        assert_eq!(l.w1, 2 * 3 * 4);
        assert_eq!(l.total, 24 + 6 + 3 + 6 + 2);
        for (i, &p) in m.params().iter().enumerate() {
            if l.is_bias(i) {
                assert_eq!(p, 0.0);
            } else {
                assert!(p.abs() < 0.1);
            }
        }
        assert_eq!(Model::new(m.config().clone(), 3).unwrap(), m);
        let c = Model::new(cfg("classical", Task::Regression), 3).unwrap();
        assert_eq!(c.layout().w1, 0);
        let mut bad = cfg("quantum-1", Task::Regression);
        bad.walk_length = 0;
        assert!(Model::new(bad, 0).is_err());
        assert!(Model::new(cfg("nope", Task::Regression), 0).is_err());
    }

    #[test]
    fn readout_examples() {
        let mut c = cfg("classical", Task::Regression);
        c.feature_dim = 1;
        c.hidden = 1;
        let zero = Model::from_params(c.clone(), 0, vec![0.0; 4]).unwrap();
        assert_eq!(zero.readout(&RMatrix::from_rows(&[vec![2.0]]).unwrap()).unwrap(), vec![0.0]);
        let unit = Model::from_params(c, 0, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(unit.readout(&RMatrix::from_rows(&[vec![2.0]]).unwrap()).unwrap(), vec![2.0]);
        let twice = RMatrix::from_rows(&[vec![2.0], vec![2.0]]).unwrap();
        assert_eq!(unit.readout(&twice).unwrap(), vec![2.0]);
    }

    #[test]
    fn single_edge_diffusion_swaps_rows() {
        let g = labelled_edge(Label::Class(0));
        let x = RMatrix::identity(2);
        let swapped = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let c = diffusion_forward(&g, kernel_registry().get("classical").unwrap(), None, 1, &x).unwrap();
        assert_eq!(c.to_rows(), swapped);
        let zero = CoinParams::zeros(1, 2, 1);
        let q = diffusion_forward(&g, kernel_registry().get("quantum-1").unwrap(), Some(&zero), 1, &x).unwrap();
        assert_eq!(q.to_rows(), swapped);
    }

    #[test]
    fn regression_at_target_has_zero_output_bias_gradient() {
        let m = Model::new(cfg("quantum-1", Task::Regression), 1).unwrap();
        let g0 = labelled_edge(Label::Target(0.0));
        let pred = m.predict(&g0).unwrap()[0];
        let g = labelled_edge(Label::Target(pred));
        let (l, grad) = m.loss_and_grad(&g).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(grad[m.layout().b2], 0.0);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        for mode in ["quantum-1", "classical", "boson-2"] {
            let mut c = cfg(mode, Task::Classification { num_classes: 3 });
            c.layers = 2;
            let mut m = Model::new(c, 17).unwrap();
            m.params_mut()[0] = 0.1 + 0.2;
            m.params_mut()[1] = -1e-300;
            let text = serde_json::to_string(&m.to_checkpoint()).unwrap();
            let back = Model::from_checkpoint(serde_json::from_str(&text).unwrap()).unwrap();
            assert!(back.params().iter().zip(m.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
            assert_eq!(back, m);
        }
        let text = r#"{"config":{"mode":"classical","walk_length":1,"hidden":1,"coin_dim":0,"feature_dim":1,
            "task":"regression"},"seed":0,"params":{"coins":[[]],"w1":[[1]],"b1":[0],"w2":[[1]],"b2":[0]},"x":1}"#;
        assert!(serde_json::from_str::<Checkpoint>(text).is_err());
    }

    /// Analytic gradient against central differences for every parameter.
    #[test]
    fn gradient_matches_central_differences() {
        let tri = Graph::build(&[(0, 1), (1, 2), (0, 2)], 3, RMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap())
            .unwrap();
        for (mode, layers, task, label) in [
            ("quantum-1", 1, Task::Classification { num_classes: 2 }, Label::Class(1)),
            ("boson-2", 1, Task::Regression, Label::Target(0.7)),
            ("quantum-1", 2, Task::Regression, Label::Target(-0.3)),
            ("classical", 2, Task::Classification { num_classes: 3 }, Label::Class(2)),
        ] {
            let mut c = cfg(mode, task);
            c.layers = layers;
            let mut m = Model::new(c, 5).unwrap();
            // Larger parameters give the coins and the head real work to do.
            for p in m.params_mut() {
                *p *= 8.0;
            }
            let g = tri.clone().with_label(label);
            let (_, grad) = m.loss_and_grad(&g).unwrap();
            let h = 1e-5;
            for i in 0..m.num_params() {
                let mut plus = m.clone();
                plus.params_mut()[i] += h;
                let mut minus = m.clone();
                minus.params_mut()[i] -= h;
                let fd = (plus.loss(&g).unwrap() - minus.loss(&g).unwrap()) / (2.0 * h);
                let scale = grad[i].abs() + fd.abs();
                if scale > 1e-8 {
                    assert!((grad[i] - fd).abs() / scale < 1e-4, "{mode} L={layers} param {i}: {} vs {fd}", grad[i]);
                }
            }
        }
    }
}
