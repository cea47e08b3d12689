use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{finite_diff_grad, grad, max_relative_error, FD_STEP};
use crate::dataset::Task;
use crate::diffusion::{Model, ModelConfig, Pooling};
use crate::error::Result;
use crate::graph::{random_graph, Graph, Label};

/// Relative-error bound between analytic and finite-difference gradients.
pub const GRAD_TOL: f64 = 1e-4;
/// Coordinates with `|analytic| + |numeric|` below this are not compared.
pub const GRAD_FLOOR: f64 = 1e-8;
/// Pre-activations closer than this to the ReLU kink are resampled, since a
/// central difference straddling the kink measures neither one-sided slope.
const KINK_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSpec {
    pub mode: String,
    pub cases: usize,
    pub seed: u64,
    pub max_nodes: usize,
    pub max_steps: usize,
    pub hidden: usize,
    pub feature_dim: usize,
    pub layers: usize,
    /// Parameters are drawn from `(−scale, scale)`.
    pub scale: f64,
}

impl GradcheckSpec {
    pub fn new(mode: &str) -> GradcheckSpec {
        GradcheckSpec {
            mode: mode.into(),
            cases: 20,
            seed: 0,
            max_nodes: 8,
            max_steps: 4,
            hidden: 4,
            feature_dim: 2,
            layers: 1,
            scale: 1.0,
        }
    }
}

pub struct GradcheckCase {
    pub model: Model,
    pub graph: Graph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckOutcome {
    pub mode: String,
    pub cases: usize,
    pub params_checked: usize,
    /// Worst relative error, with its case and parameter index.
    pub worst: Option<(usize, usize, f64)>,
}

impl GradcheckOutcome {
    pub fn max_error(&self) -> f64 {
        self.worst.map_or(0.0, |w| w.2)
    }

    pub fn passed(&self) -> bool {
        self.max_error() <= GRAD_TOL
    }
}

/// Random labelled graph and model pairs, reproducible from `spec.seed`.
pub fn gradcheck_cases(spec: &GradcheckSpec) -> Result<Vec<GradcheckCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.cases);
    while out.len() < spec.cases {
        let n = rng.gen_range(2..=spec.max_nodes.max(2));
        let g = random_graph(&mut rng, n, 0.45, spec.feature_dim)?;
        let regression = rng.gen_bool(0.5);
        let (task, label) = if regression {
            (Task::Regression, Label::Target(rng.gen_range(-1.0..1.0)))
        } else {
            (Task::Classification { num_classes: 3 }, Label::Class(rng.gen_range(0..3)))
        };
        let config = ModelConfig {
            mode: spec.mode.clone(),
            walk_length: rng.gen_range(1..=spec.max_steps.max(1)),
            hidden: spec.hidden,
            pooling: Pooling::Mean,
            layers: spec.layers,
            coin_dim: g.max_degree().max(1),
            feature_dim: spec.feature_dim,
            task,
        };
        let mut model = Model::new(config, rng.gen())?;
        for p in model.params_mut() {
            *p = rng.gen_range(-spec.scale..spec.scale);
        }
        let graph = g.with_label(label);
        if near_kink(&model, &graph)? {
            continue;
        }
        out.push(GradcheckCase { model, graph });
    }
    Ok(out)
}

fn near_kink(model: &Model, g: &Graph) -> Result<bool> {
    let fp = model.forward(g)?;
    Ok(fp.pre_activations().iter().any(|z| z.abs() < KINK_MARGIN))
}

/// Compare [`grad`] with [`finite_diff_grad`] on every case. `corrupt`
/// perturbs one analytic entry per case; it exists to prove the check can fail.
pub fn run_gradcheck(spec: &GradcheckSpec, corrupt: bool) -> Result<GradcheckOutcome> {
    let cases = gradcheck_cases(spec)?;
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut checked = 0;
    for (ci, case) in cases.iter().enumerate() {
        let mut analytic = grad(&case.model, &case.graph)?;
        let numeric = finite_diff_grad(&case.model, &case.graph, FD_STEP)?;
        if corrupt && !analytic.is_empty() {
            let last = analytic.len() - 1;
            analytic[last] += 1e-2 * (1.0 + analytic[last].abs());
        }
        checked += analytic.len();
        if let Some((pi, err)) = max_relative_error(&analytic, &numeric, GRAD_FLOOR) {
            if worst.is_none_or(|w| err > w.2) {
                worst = Some((ci, pi, err));
            }
        }
    }
    Ok(GradcheckOutcome {
        mode: spec.mode.clone(),
        cases: cases.len(),
        params_checked: checked,
        worst,
    })
}
