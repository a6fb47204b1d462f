use std::fmt;
use std::str::FromStr;

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topological {
    Gcn,
    Gat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Temporal {
    Lstm,
    Gru,
    Static,
}

/// Model family. The eight dynamic configurations are
/// `{GCN, GAT} × {LSTM, GRU} × {attention on, off}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Graph {
        topological: Topological,
        temporal: Temporal,
        attention: bool,
    },
    LogisticRegression,
    FeedForward,
}

impl Architecture {
    pub fn is_graph(self) -> bool {
        matches!(self, Architecture::Graph { .. })
    }

    pub fn has_attention(self) -> bool {
        matches!(
            self,
            Architecture::Graph {
                attention: true,
                ..
            }
        )
    }

    pub fn is_static(self) -> bool {
        matches!(
            self,
            Architecture::Graph {
                temporal: Temporal::Static,
                ..
            }
        )
    }

    /// The eight dynamic graph configurations in a fixed order.
    pub fn dynamic_variants() -> Vec<Architecture> {
        let mut out = Vec::with_capacity(8);
        for topological in [Topological::Gcn, Topological::Gat] {
            for temporal in [Temporal::Lstm, Temporal::Gru] {
                for attention in [false, true] {
                    out.push(Architecture::Graph {
                        topological,
                        temporal,
                        attention,
                    });
                }
            }
        }
        out
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Architecture::LogisticRegression => f.write_str("logreg"),
            Architecture::FeedForward => f.write_str("mlp"),
            Architecture::Graph {
                topological,
                temporal,
                attention,
            } => {
                let gnn = match topological {
                    Topological::Gcn => "gcn",
                    Topological::Gat => "gat",
                };
                match temporal {
                    Temporal::Static => write!(f, "static-{gnn}"),
                    Temporal::Lstm => {
                        write!(f, "{gnn}-lstm{}", if attention { "-att" } else { "" })
                    }
                    Temporal::Gru => write!(f, "{gnn}-gru{}", if attention { "-att" } else { "" }),
                }
            }
        }
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::Config(format!("unknown model {s:?}"));
        match s {
            "logreg" => return Ok(Architecture::LogisticRegression),
            "mlp" => return Ok(Architecture::FeedForward),
            _ => {}
        }
        let parts: Vec<&str> = s.split('-').collect();
        let gnn = |p: &str| match p {
            "gcn" => Ok(Topological::Gcn),
            "gat" => Ok(Topological::Gat),
            _ => Err(bad()),
        };
        match parts.as_slice() {
            ["static", g] => Ok(Architecture::Graph {
                topological: gnn(g)?,
                temporal: Temporal::Static,
                attention: false,
            }),
            [g, rnn, rest @ ..] => {
                let temporal = match *rnn {
                    "lstm" => Temporal::Lstm,
                    "gru" => Temporal::Gru,
                    _ => return Err(bad()),
                };
                let attention = match rest {
                    [] => false,
                    ["att"] => true,
                    _ => return Err(bad()),
                };
                Ok(Architecture::Graph {
                    topological: gnn(g)?,
                    temporal,
                    attention,
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Mean,
}

/// Everything needed to rebuild a network's parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// Embedding size `D`.
    pub embedding: usize,
    pub gnn_depth: usize,
    pub gat_heads: usize,
    pub gat_slope: f64,
    pub dropout: f64,
    pub pooling: Pooling,
    pub seed: u64,
    /// Node feature width `d`.
    pub features: usize,
    /// Snapshots per window `τ`; fixes the flattened width of the baselines.
    pub window_len: usize,
    /// Width of the node attention vector `a_h` (largest supra size seen in training).
    pub attention_nodes: usize,
    /// Feature columns averaged over the window by the static baselines.
    pub behavioural: Vec<usize>,
}

impl ModelConfig {
    pub fn new(
        architecture: Architecture,
        features: usize,
        window_len: usize,
        attention_nodes: usize,
    ) -> Self {
        Self {
            architecture,
            embedding: 16,
            gnn_depth: 1,
            gat_heads: 2,
            gat_slope: 0.2,
            dropout: 0.5,
            pooling: Pooling::Mean,
            seed: 0,
            features,
            window_len,
            attention_nodes,
            behavioural: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.features == 0 || self.window_len == 0 {
            return err("feature width and window length must be positive");
        }
        if self.architecture.is_graph() {
            if self.embedding == 0 || self.gnn_depth == 0 {
                return err("embedding size and GNN depth must be positive");
            }
            if self.gat_heads == 0 {
                return err("GAT needs at least one head");
            }
            if self.architecture.has_attention() && self.attention_nodes == 0 {
                return err("attention width must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err("dropout must lie in [0, 1)");
        }
        if !self.gat_slope.is_finite() {
            return err("LeakyReLU slope must be finite");
        }
        if let Some(&b) = self.behavioural.iter().find(|&&b| b >= self.features) {
            return Err(ModelError::Config(format!(
                "behavioural column {b} out of range"
            )));
        }
        Ok(())
    }

    /// Ordered key/value form used by checkpoints and run manifests. Floats
    /// are written as exact bit patterns.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let behavioural = self
            .behavioural
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(",");
        [
            ("model", self.architecture.to_string()),
            ("embedding", self.embedding.to_string()),
            ("gnn_depth", self.gnn_depth.to_string()),
            ("gat_heads", self.gat_heads.to_string()),
            ("gat_slope", format!("{:#018x}", self.gat_slope.to_bits())),
            ("dropout", format!("{:#018x}", self.dropout.to_bits())),
            ("pooling", "mean".to_string()),
            ("seed", self.seed.to_string()),
            ("features", self.features.to_string()),
            ("window_len", self.window_len.to_string()),
            ("attention_nodes", self.attention_nodes.to_string()),
            ("behavioural", behavioural),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, ModelError> {
        let get = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| ModelError::Config(format!("missing config key {key}")))
        };
        let int = |key: &str| -> Result<u64, ModelError> {
            get(key)?
                .parse()
                .map_err(|_| ModelError::Config(format!("bad integer for {key}")))
        };
        let float = |key: &str| -> Result<f64, ModelError> {
            let v = get(key)?;
            let bits = v
                .strip_prefix("0x")
                .and_then(|h| u64::from_str_radix(h, 16).ok())
                .ok_or_else(|| ModelError::Config(format!("bad float bits for {key}")))?;
            Ok(f64::from_bits(bits))
        };
        if let Some((k, _)) = pairs
            .iter()
            .find(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
        {
            return Err(ModelError::Config(format!("unknown config key {k}")));
        }
        if get("pooling")? != "mean" {
            return Err(ModelError::Config("only mean pooling is supported".into()));
        }
        let behavioural = match get("behavioural")? {
            "" => Vec::new(),
            s => s
                .split(',')
                .map(|b| {
                    b.parse()
                        .map_err(|_| ModelError::Config("bad behavioural list".into()))
                })
                .collect::<Result<_, _>>()?,
        };
        let cfg = Self {
            architecture: get("model")?.parse()?,
            embedding: int("embedding")? as usize,
            gnn_depth: int("gnn_depth")? as usize,
            gat_heads: int("gat_heads")? as usize,
            gat_slope: float("gat_slope")?,
            dropout: float("dropout")?,
            pooling: Pooling::Mean,
            seed: int("seed")?,
            features: int("features")? as usize,
            window_len: int("window_len")? as usize,
            attention_nodes: int("attention_nodes")? as usize,
            behavioural,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

const KNOWN_KEYS: [&str; 12] = [
    "model",
    "embedding",
    "gnn_depth",
    "gat_heads",
    "gat_slope",
    "dropout",
    "pooling",
    "seed",
    "features",
    "window_len",
    "attention_nodes",
    "behavioural",
];
