use std::sync::Arc;

use crate::autodiff::{glorot_uniform, BoundParams, ParamSet, Tape, Var};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::{mean_adjacency, normalize_adjacency, CsrMatrix};
use crate::rng::Rng;

use super::layers::{air_combine, branch_forward, prediction_head, sparse_dropout};
use super::spec::{Base, ModelSpec, Variant};

/// Propagation matrix and sparse feature matrix shared by every forward pass
/// on one graph.
#[derive(Debug, Clone)]
pub struct GraphInputs {
    pub propagation: Arc<CsrMatrix>,
    pub features: Arc<CsrMatrix>,
}

impl GraphInputs {
    /// Normalizes `adjacency` for `base` and stores `features` sparsely.
    pub fn new(base: Base, adjacency: &CsrMatrix, features: &Matrix) -> Result<Self> {
        if adjacency.n_rows() != features.rows() {
            return Err(Error::shape("GraphInputs", adjacency.n_rows(), features.rows()));
        }
        let propagation = match base {
            Base::Gcn => normalize_adjacency(adjacency)?,
            Base::SageMean => mean_adjacency(adjacency)?,
        };
        Ok(Self {
            propagation: Arc::new(propagation),
            features: Arc::new(features.to_csr()),
        })
    }

    pub fn n(&self) -> usize {
        self.propagation.n_rows()
    }
}

/// Intermediate representations of the interaction family.
#[derive(Debug, Clone, Copy)]
pub struct AirTrace {
    pub h_agg: Var,
    /// Second branch; equal to `h_agg` for self-interaction.
    pub h_agg_bar: Var,
    /// `h_agg ⊙ h̄_agg` (or `h_agg + h̄_agg` for the DP ablation).
    pub h_ir: Var,
    pub h_air: Var,
}

#[derive(Debug, Clone)]
pub struct Forward {
    /// Prediction output: `z_air` for the interaction family, the single
    /// head otherwise.
    pub output: Var,
    /// Auxiliary heads in loss order (`z_agg`, then `z̄_agg` when present).
    pub aux: Vec<Var>,
    pub trace: Option<AirTrace>,
}

impl Forward {
    /// All heads in loss-weight order: output first.
    pub fn heads(&self) -> impl Iterator<Item = Var> + '_ {
        std::iter::once(self.output).chain(self.aux.iter().copied())
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
}

fn layer_names(branch: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{branch}/w{i}")).collect()
}

/// Allocates Glorot-initialized parameters for `spec` and returns the model
/// that consumes them.
///
/// First-layer weights are flagged for weight decay, the rest are not.
pub fn build_variant(spec: &ModelSpec, rng: &mut Rng) -> Result<(Model, ParamSet)> {
    spec.validate()?;
    let (m, d, c, k) = (spec.input_dim, spec.hidden_dim, spec.output_dim, spec.k_layers);
    let mut params = ParamSet::new();
    let add_branch = |params: &mut ParamSet, branch: &str, rng: &mut Rng| {
        for (i, name) in layer_names(branch, k).into_iter().enumerate() {
            let fan_in = if i == 0 { m } else { d };
            params.insert(name, glorot_uniform(fan_in, d, rng), i == 0);
        }
    };
    match spec.variant {
        Variant::Base => {
            add_branch(&mut params, "agg", rng);
            params.insert("head/out", glorot_uniform(d, c, rng), false);
        }
        Variant::Air | Variant::Dp => {
            add_branch(&mut params, "agg", rng);
            add_branch(&mut params, "inter", rng);
            for head in ["head/air", "head/agg", "head/agg_bar"] {
                params.insert(head, glorot_uniform(d, c, rng), false);
            }
        }
        Variant::SelfIr => {
            add_branch(&mut params, "agg", rng);
            for head in ["head/air", "head/agg"] {
                params.insert(head, glorot_uniform(d, c, rng), false);
            }
        }
        Variant::Linear => {
            params.insert("linear/w", glorot_uniform(m, c, rng), true);
        }
    }
    debug_assert_eq!(params.count(), spec.parameter_count());
    Ok((Model { spec: *spec }, params))
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn branch(
        &self,
        tape: &mut Tape,
        inputs: &GraphInputs,
        params: &BoundParams,
        name: &str,
        rng: Option<&mut Rng>,
    ) -> Result<Var> {
        let weights = layer_names(name, self.spec.k_layers)
            .iter()
            .map(|n| params.get(n))
            .collect::<Result<Vec<_>>>()?;
        branch_forward(
            tape,
            &inputs.propagation,
            &inputs.features,
            &weights,
            self.spec.dropout,
            rng,
        )
    }

    fn head(&self, tape: &mut Tape, inputs: &GraphInputs, h: Var, w: Var, rng: Option<&mut Rng>) -> Result<Var> {
        let h = match rng {
            Some(rng) => tape.dropout(h, self.spec.dropout, true, rng)?,
            None => h,
        };
        prediction_head(tape, &inputs.propagation, h, w)
    }

    /// Runs the model. Passing a generator enables training-mode dropout;
    /// `None` gives the deterministic inference pass.
    pub fn forward(
        &self,
        tape: &mut Tape,
        inputs: &GraphInputs,
        params: &BoundParams,
        mut rng: Option<&mut Rng>,
    ) -> Result<Forward> {
        if inputs.features.n_cols() != self.spec.input_dim {
            return Err(Error::shape(
                "forward",
                format!("{} input features", self.spec.input_dim),
                inputs.features.n_cols(),
            ));
        }
        match self.spec.variant {
            Variant::Base => {
                let h = self.branch(tape, inputs, params, "agg", rng.as_deref_mut())?;
                let h = tape.relu(h);
                let output = self.head(tape, inputs, h, params.get("head/out")?, rng)?;
                Ok(Forward {
                    output,
                    aux: Vec::new(),
                    trace: None,
                })
            }
            Variant::Air | Variant::Dp => {
                let h_agg = self.branch(tape, inputs, params, "agg", rng.as_deref_mut())?;
                let h_agg_bar = self.branch(tape, inputs, params, "inter", rng.as_deref_mut())?;
                let (h_ir, h_air) = if self.spec.variant == Variant::Air {
                    air_combine(tape, h_agg, h_agg_bar)?
                } else {
                    let h_ir = tape.add(h_agg, h_agg_bar)?;
                    let a = tape.relu(h_agg);
                    let b = tape.relu(h_ir);
                    (h_ir, tape.add(a, b)?)
                };
                let output = self.head(tape, inputs, h_air, params.get("head/air")?, rng.as_deref_mut())?;
                let z_agg = self.head(tape, inputs, h_agg, params.get("head/agg")?, rng.as_deref_mut())?;
                let z_agg_bar = self.head(tape, inputs, h_agg_bar, params.get("head/agg_bar")?, rng)?;
                Ok(Forward {
                    output,
                    aux: vec![z_agg, z_agg_bar],
                    trace: Some(AirTrace {
                        h_agg,
                        h_agg_bar,
                        h_ir,
                        h_air,
                    }),
                })
            }
            Variant::SelfIr => {
                let h_agg = self.branch(tape, inputs, params, "agg", rng.as_deref_mut())?;
                let (h_ir, h_air) = air_combine(tape, h_agg, h_agg)?;
                let output = self.head(tape, inputs, h_air, params.get("head/air")?, rng.as_deref_mut())?;
                let z_agg = self.head(tape, inputs, h_agg, params.get("head/agg")?, rng)?;
                Ok(Forward {
                    output,
                    aux: vec![z_agg],
                    trace: Some(AirTrace {
                        h_agg,
                        h_agg_bar: h_agg,
                        h_ir,
                        h_air,
                    }),
                })
            }
            Variant::Linear => {
                let features = match rng {
                    Some(rng) if self.spec.dropout > 0.0 => {
                        Arc::new(sparse_dropout(&inputs.features, self.spec.dropout, rng)?)
                    }
                    _ => Arc::clone(&inputs.features),
                };
                let mut h = tape.spmm(&features, params.get("linear/w")?)?;
                for _ in 0..=self.spec.k_layers {
                    h = tape.spmm(&inputs.propagation, h)?;
                }
                Ok(Forward {
                    output: h,
                    aux: Vec::new(),
                    trace: None,
                })
            }
        }
    }
}

/// Raw edge scores `z_i · z_j` for each pair; the sigmoid is left to the
/// loss or metric.
pub fn gae_decode(tape: &mut Tape, z: Var, pairs: &Arc<Vec<(usize, usize)>>) -> Result<Var> {
    tape.pair_dot(z, pairs)
}
