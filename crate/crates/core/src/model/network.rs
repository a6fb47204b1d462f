use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Architecture, ModelConfig, ModelError, Temporal, Topological};
use crate::graph::{MultilayerTopology, SnapshotSequence};
use crate::layers::{
    BoundParams, Decoder, GatLayer, GcnLayer, GraphContext, GruCell, LstmCell, ParameterStore,
    TemporalAttention, DECODER_HIDDEN,
};
use crate::tensor::{bce_value, Activation, DenseMatrix, Gradients, SparseMatrix, Tape, Var};

/// A window together with one 0/1 label per node.
#[derive(Debug, Clone)]
pub struct LabeledWindow {
    pub sequence: SnapshotSequence,
    pub labels: Arc<Vec<f64>>,
}

impl LabeledWindow {
    pub fn new(sequence: SnapshotSequence, labels: Vec<f64>) -> Result<Self, ModelError> {
        if labels.len() != sequence.topology().n() {
            return Err(ModelError::Dimension(format!(
                "{} labels for {} nodes",
                labels.len(),
                sequence.topology().n()
            )));
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(ModelError::Dimension("labels must be 0 or 1".into()));
        }
        Ok(Self {
            sequence,
            labels: Arc::new(labels),
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// Per-window inputs computed once and reused across epochs.
#[derive(Debug, Clone)]
pub struct PreparedWindow {
    pub labels: Arc<Vec<f64>>,
    graph: Option<GraphContext>,
    pool: Option<Arc<SparseMatrix>>,
    inputs: Vec<DenseMatrix>,
}

impl PreparedWindow {
    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    /// Temporal attention weights when the architecture has them.
    pub beta: Option<Vec<f64>>,
}

pub(crate) struct TapeOutput {
    pub probabilities: Var,
    pub beta: Option<Var>,
}

/// `n × nl` matrix averaging each node's replicas.
pub fn replica_pool(topology: &MultilayerTopology) -> SparseMatrix {
    let (n, l) = (topology.n(), topology.layers());
    let w = 1.0 / l as f64;
    let triplets: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..l).map(move |k| (i, k * n + i, w)))
        .collect();
    SparseMatrix::from_triplets(n, n * l, triplets).expect("pool coordinates are unique")
}

/// Window features with the behavioural columns replaced by their mean
/// over the window and everything else taken from the last snapshot.
pub fn static_features(sequence: &SnapshotSequence, behavioural: &[usize]) -> DenseMatrix {
    let feats = sequence.features();
    let mut out = feats[feats.len() - 1].clone();
    let tau = feats.len() as f64;
    for r in 0..out.rows() {
        for &c in behavioural {
            let mean = feats.iter().map(|f| f.get(r, c)).sum::<f64>() / tau;
            out.set(r, c, mean);
        }
    }
    out
}

/// Concatenates each node's feature rows over all snapshots (`n × τd`),
/// reading the first-layer replica.
pub fn flatten_window(sequence: &SnapshotSequence) -> DenseMatrix {
    let n = sequence.topology().n();
    let d = sequence.feature_dim();
    let tau = sequence.len();
    let mut out = DenseMatrix::zeros(n, tau * d);
    for (t, f) in sequence.features().iter().enumerate() {
        for i in 0..n {
            out.row_mut(i)[t * d..(t + 1) * d].copy_from_slice(f.row(i));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParameterStore,
}

impl Model {
    /// Builds the parameter store with seeded Glorot initialization
    /// (logistic regression starts at zero).
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        match config.architecture {
            Architecture::Graph {
                topological,
                temporal,
                attention,
            } => {
                let d = config.embedding;
                for k in 0..config.gnn_depth {
                    let input = if k == 0 { config.features } else { d };
                    match topological {
                        Topological::Gcn => gcn(k, input, d).init(&mut params, &mut rng)?,
                        Topological::Gat => gat(&config, k, input).init(&mut params, &mut rng)?,
                    }
                }
                match temporal {
                    Temporal::Lstm => lstm(d).init(&mut params, &mut rng)?,
                    Temporal::Gru => gru(d).init(&mut params, &mut rng)?,
                    Temporal::Static => {}
                }
                if attention {
                    attention_layer(&config).init(&mut params, &mut rng)?;
                }
                decoder(&config).init(&mut params, &mut rng)?;
            }
            Architecture::LogisticRegression => {
                params.insert_zeros("logreg.w", config.features * config.window_len, 1)?;
                params.insert_zeros("logreg.b", 1, 1)?;
            }
            Architecture::FeedForward => {
                let widths = [
                    config.features * config.window_len,
                    MLP_HIDDEN[0],
                    MLP_HIDDEN[1],
                    1,
                ];
                for k in 0..3 {
                    let (i, o) = (widths[k], widths[k + 1]);
                    params.insert_glorot(format!("mlp.w{}", k + 1), i, o, i, o, &mut rng)?;
                    params.insert_zeros(format!("mlp.b{}", k + 1), 1, o)?;
                }
            }
        }
        Ok(Self { config, params })
    }

    /// Rebuilds a model from a config and a matching parameter store.
    pub fn from_parts(config: ModelConfig, params: ParameterStore) -> Result<Self, ModelError> {
        let template = Model::new(config.clone())?;
        let expected: Vec<_> = template
            .params
            .iter()
            .map(|(k, v)| (k.clone(), v.shape()))
            .collect();
        let found: Vec<_> = params.iter().map(|(k, v)| (k.clone(), v.shape())).collect();
        if expected != found {
            return Err(ModelError::Dimension(
                "parameter names or shapes do not match the config".into(),
            ));
        }
        Ok(Self { config, params })
    }

    /// Validates a window against the config and precomputes its inputs.
    pub fn prepare(&self, window: &LabeledWindow) -> Result<PreparedWindow, ModelError> {
        let seq = &window.sequence;
        let cfg = &self.config;
        if seq.feature_dim() != cfg.features {
            return Err(ModelError::Dimension(format!(
                "window has {} features, model expects {}",
                seq.feature_dim(),
                cfg.features
            )));
        }
        let arch = cfg.architecture;
        let flat = matches!(
            arch,
            Architecture::LogisticRegression | Architecture::FeedForward
        );
        if flat && seq.len() != cfg.window_len {
            return Err(ModelError::Dimension(format!(
                "window has {} snapshots, baseline expects {}",
                seq.len(),
                cfg.window_len
            )));
        }
        let inputs = match arch {
            Architecture::Graph {
                temporal: Temporal::Static,
                ..
            } => vec![static_features(seq, &cfg.behavioural)],
            Architecture::Graph { .. } => seq.features().to_vec(),
            _ => vec![flatten_window(seq)],
        };
        let (graph, pool) = if arch.is_graph() {
            (
                Some(GraphContext::new(seq.topology())),
                Some(Arc::new(replica_pool(seq.topology()))),
            )
        } else {
            (None, None)
        };
        Ok(PreparedWindow {
            labels: window.labels.clone(),
            graph,
            pool,
            inputs,
        })
    }

    pub(crate) fn forward_tape(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        window: &PreparedWindow,
        training: bool,
        seed: u64,
    ) -> Result<TapeOutput, ModelError> {
        let cfg = &self.config;
        match cfg.architecture {
            Architecture::Graph {
                topological,
                temporal,
                attention,
            } => {
                let ctx = window
                    .graph
                    .as_ref()
                    .expect("graph windows carry a context");
                let pool = window.pool.as_ref().expect("graph windows carry a pool");
                let encode = |tape: &mut Tape, x: &DenseMatrix| -> Result<Var, ModelError> {
                    let mut h = tape.constant(x.clone());
                    for k in 0..cfg.gnn_depth {
                        if k > 0 {
                            h = tape.activation(Activation::RELU, h)?;
                        }
                        let input = if k == 0 { cfg.features } else { cfg.embedding };
                        h = match topological {
                            Topological::Gcn => {
                                gcn(k, input, cfg.embedding).forward(tape, p, &ctx.normalized, h)?
                            }
                            Topological::Gat => {
                                gat(cfg, k, input).forward(tape, p, &ctx.edges, h)?
                            }
                        };
                    }
                    Ok(h)
                };
                let (embedding, beta) = if temporal == Temporal::Static {
                    (encode(tape, &window.inputs[0])?, None)
                } else {
                    let rows = window.inputs[0].rows();
                    let zero = tape.constant(DenseMatrix::zeros(rows, cfg.embedding));
                    let (mut h, mut c) = (zero, zero);
                    let mut hidden = Vec::with_capacity(window.inputs.len());
                    for x in &window.inputs {
                        let z = encode(tape, x)?;
                        h = match temporal {
                            Temporal::Lstm => {
                                let (h2, c2) = lstm(cfg.embedding).forward(tape, p, z, h, c)?;
                                c = c2;
                                h2
                            }
                            _ => gru(cfg.embedding).forward(tape, p, z, h)?,
                        };
                        hidden.push(h);
                    }
                    if attention {
                        let (h_att, beta) = attention_layer(cfg).forward(tape, p, &hidden)?;
                        (h_att, Some(beta))
                    } else {
                        (h, None)
                    }
                };
                let pooled = tape.spmm(pool.clone(), embedding)?;
                let probabilities = decoder(cfg).forward(tape, p, pooled, training, seed)?;
                Ok(TapeOutput {
                    probabilities,
                    beta,
                })
            }
            Architecture::LogisticRegression => {
                let x = tape.constant(window.inputs[0].clone());
                let o = tape.matmul(x, p.get("logreg.w")?)?;
                let o = tape.add(o, p.get("logreg.b")?)?;
                Ok(TapeOutput {
                    probabilities: tape.sigmoid(o)?,
                    beta: None,
                })
            }
            Architecture::FeedForward => {
                let mut h = tape.constant(window.inputs[0].clone());
                for k in 1..=3 {
                    h = tape.matmul(h, p.get(&format!("mlp.w{k}"))?)?;
                    h = tape.add(h, p.get(&format!("mlp.b{k}"))?)?;
                    if k < 3 {
                        h = tape.activation(Activation::RELU, h)?;
                        h = tape.dropout(
                            h,
                            cfg.dropout,
                            training,
                            crate::seed::derive(seed, 0xd0, k as u64),
                        )?;
                    }
                }
                Ok(TapeOutput {
                    probabilities: tape.sigmoid(h)?,
                    beta: None,
                })
            }
        }
    }

    /// Inference-mode forward pass on a prepared window.
    pub fn predict_prepared(&self, window: &PreparedWindow) -> Result<Prediction, ModelError> {
        let mut tape = Tape::new();
        let p = self.params.bind(&mut tape);
        let out = self.forward_tape(&mut tape, &p, window, false, 0)?;
        Ok(Prediction {
            probabilities: tape.value(out.probabilities).values().to_vec(),
            beta: out.beta.map(|b| tape.value(b).values().to_vec()),
        })
    }

    /// Inference on any window the architecture accepts; static graph models
    /// collapse the window first.
    pub fn predict(&self, window: &LabeledWindow) -> Result<Prediction, ModelError> {
        self.predict_prepared(&self.prepare(window)?)
    }

    /// Dynamic forward pass over every snapshot of the window. Static
    /// architectures are rejected for windows longer than one snapshot.
    pub fn forward_window(&self, window: &LabeledWindow) -> Result<Prediction, ModelError> {
        if self.config.architecture.is_static() && window.sequence.len() > 1 {
            return Err(ModelError::Config(
                "static model on a multi-snapshot window; use static_gnn_forward".into(),
            ));
        }
        if !self.config.architecture.is_graph() {
            return Err(ModelError::Config(
                "forward_window needs a graph architecture".into(),
            ));
        }
        self.predict(window)
    }

    /// Static baseline pass: last topology, behavioural columns averaged.
    pub fn static_gnn_forward(&self, window: &LabeledWindow) -> Result<Prediction, ModelError> {
        if !self.config.architecture.is_static() {
            return Err(ModelError::Config(
                "static_gnn_forward needs a static architecture".into(),
            ));
        }
        self.predict(window)
    }

    /// Training-mode loss and parameter gradients for one window, with the
    /// dropout mask drawn from `dropout_seed`.
    pub fn loss_and_gradients(
        &self,
        window: &PreparedWindow,
        dropout_seed: u64,
    ) -> Result<(f64, Gradients), ModelError> {
        let mut tape = Tape::new();
        let p = self.params.bind(&mut tape);
        let out = self.forward_tape(&mut tape, &p, window, true, dropout_seed)?;
        let loss = tape.bce(out.probabilities, Arc::clone(&window.labels))?;
        Ok((tape.value(loss).item()?, tape.backward(loss)?))
    }

    /// Copy of `window` with every feature `k` where `!present[k]` replaced by
    /// `baseline[k]` in all snapshots (and all flattened time slots).
    pub fn mask_features(
        &self,
        window: &PreparedWindow,
        present: &[bool],
        baseline: &[f64],
    ) -> Result<PreparedWindow, ModelError> {
        let d = self.config.features;
        if present.len() != d || baseline.len() != d {
            return Err(ModelError::Dimension(format!(
                "mask of {} and baseline of {} for {d} features",
                present.len(),
                baseline.len()
            )));
        }
        let mut out = window.clone();
        for m in &mut out.inputs {
            let cols = m.cols();
            for r in 0..m.rows() {
                let row = m.row_mut(r);
                for c in 0..cols {
                    if !present[c % d] {
                        row[c] = baseline[c % d];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Mean binary cross-entropy of the inference-mode predictions.
    pub fn loss(&self, window: &PreparedWindow) -> Result<f64, ModelError> {
        let pred = self.predict_prepared(window)?;
        Ok(bce_value(&pred.probabilities, &window.labels))
    }
}

const MLP_HIDDEN: [usize; 2] = [64, 32];

fn gcn(k: usize, input: usize, output: usize) -> GcnLayer {
    GcnLayer {
        prefix: format!("gnn{k}"),
        input,
        output,
    }
}

fn gat(cfg: &ModelConfig, k: usize, input: usize) -> GatLayer {
    GatLayer {
        prefix: format!("gnn{k}"),
        input,
        output: cfg.embedding,
        heads: cfg.gat_heads,
        slope: cfg.gat_slope,
    }
}

fn lstm(d: usize) -> LstmCell {
    LstmCell {
        prefix: "lstm".into(),
        input: d,
        hidden: d,
    }
}

fn gru(d: usize) -> GruCell {
    GruCell {
        prefix: "gru".into(),
        input: d,
        hidden: d,
    }
}

fn attention_layer(cfg: &ModelConfig) -> TemporalAttention {
    TemporalAttention {
        prefix: "att".into(),
        capacity: cfg.attention_nodes,
        hidden: cfg.embedding,
    }
}

fn decoder(cfg: &ModelConfig) -> Decoder {
    Decoder {
        prefix: "dec".into(),
        input: cfg.embedding,
        hidden: DECODER_HIDDEN,
        dropout: cfg.dropout,
    }
}
