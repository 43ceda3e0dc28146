//! The five forecasters (seasonal naive, FFNN, LSTM, BiLSTM, MSVR) behind
//! one spec/fit/predict surface, plus a versioned binary model format.

pub mod ffnn;
pub mod lstm;
pub mod msvr;
pub mod naive;
pub mod nn;

use std::io::{Read as _, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windowing::WindowedDataset;

pub use ffnn::Ffnn;
pub use lstm::{BiLstm, Lstm};
pub use msvr::{fit_msvr, fit_msvr_kernel, Kernel, MsvrModel, MsvrParams};
pub use naive::NaiveModel;
pub use nn::{
    batch_loss, finite_difference_check, train, Adam, EpochLog, Network, TrainConfig, TrainingLog,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecasterKind {
    Naive,
    Ffnn,
    Lstm,
    Bilstm,
    Msvr,
}

pub const ALL_KINDS: [ForecasterKind; 5] = [
    ForecasterKind::Naive,
    ForecasterKind::Ffnn,
    ForecasterKind::Lstm,
    ForecasterKind::Bilstm,
    ForecasterKind::Msvr,
];

impl ForecasterKind {
    pub fn name(&self) -> &'static str {
        match self {
            ForecasterKind::Naive => "naive",
            ForecasterKind::Ffnn => "ffnn",
            ForecasterKind::Lstm => "lstm",
            ForecasterKind::Bilstm => "bilstm",
            ForecasterKind::Msvr => "msvr",
        }
    }

    /// Delay-embedded input windows only make sense for models that treat
    /// the window as a flat vector (or ignore it entirely). The recurrent
    /// models consume the raw hourly sequence, and MSVR's kernel is tuned
    /// to the flat sequential layout.
    pub fn supports_phase_space(&self) -> bool {
        matches!(self, ForecasterKind::Naive | ForecasterKind::Ffnn)
    }
}

impl FromStr for ForecasterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(ForecasterKind::Naive),
            "ffnn" => Ok(ForecasterKind::Ffnn),
            "lstm" => Ok(ForecasterKind::Lstm),
            "bilstm" => Ok(ForecasterKind::Bilstm),
            "msvr" => Ok(ForecasterKind::Msvr),
            other => Err(Error::InvalidParameter(format!(
                "unknown forecaster '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for ForecasterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_hidden() -> usize {
    64
}
fn default_hidden_layers() -> usize {
    1
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_batch_size() -> usize {
    32
}
fn default_max_epochs() -> usize {
    100
}
fn default_patience() -> usize {
    10
}
fn default_c() -> f64 {
    10.0
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_max_samples() -> usize {
    1000
}

/// Hyperparameters for one forecaster. Network fields are ignored by
/// naive/msvr and the msvr fields by everything else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecasterSpec {
    pub kind: ForecasterKind,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_hidden_layers")]
    pub hidden_layers: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// RBF width; `None` = 1 / input width.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_max_samples")]
    pub max_samples: usize,
}

impl ForecasterSpec {
    pub fn new(kind: ForecasterKind) -> Self {
        Self {
            kind,
            hidden: default_hidden(),
            hidden_layers: default_hidden_layers(),
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            max_epochs: default_max_epochs(),
            patience: default_patience(),
            c: default_c(),
            epsilon: default_epsilon(),
            gamma: None,
            max_samples: default_max_samples(),
        }
    }

    fn msvr_params(&self) -> MsvrParams {
        MsvrParams {
            c: self.c,
            epsilon: self.epsilon,
            gamma: self.gamma,
            max_samples: self.max_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForecastModel {
    Naive(NaiveModel),
    Ffnn(Ffnn),
    Lstm(Lstm),
    Bilstm(BiLstm),
    Msvr(MsvrModel),
}

impl ForecastModel {
    pub fn kind(&self) -> ForecasterKind {
        match self {
            ForecastModel::Naive(_) => ForecasterKind::Naive,
            ForecastModel::Ffnn(_) => ForecasterKind::Ffnn,
            ForecastModel::Lstm(_) => ForecasterKind::Lstm,
            ForecastModel::Bilstm(_) => ForecasterKind::Bilstm,
            ForecastModel::Msvr(_) => ForecasterKind::Msvr,
        }
    }

    /// One forecast in the model's (scaled) target space.
    pub fn predict_scaled(&self, ds: &WindowedDataset, i: usize) -> Vec<f64> {
        match self {
            ForecastModel::Naive(m) => m.predict(ds.history(i)),
            ForecastModel::Ffnn(m) => m.forward(ds.input(i)),
            ForecastModel::Lstm(m) => m.forward(ds.input(i)),
            ForecastModel::Bilstm(m) => m.forward(ds.input(i)),
            ForecastModel::Msvr(m) => m.predict(ds.input(i)),
        }
    }

    /// One forecast in physical units (inverse of the target scaler).
    pub fn predict(&self, ds: &WindowedDataset, i: usize) -> Vec<f64> {
        self.predict_scaled(ds, i)
            .into_iter()
            .map(|z| ds.to_physical(z))
            .collect()
    }
}

pub struct FitOutcome {
    pub model: ForecastModel,
    pub log: Option<TrainingLog>,
    /// IRWLS objective trace (MSVR only).
    pub objective_trace: Option<Vec<f64>>,
    pub train_seconds: f64,
}

/// Fit one forecaster on pre-windowed data. `seed` fixes both the
/// parameter init and the shuffling, so equal inputs give equal models.
pub fn fit(
    spec: &ForecasterSpec,
    train_ds: &WindowedDataset,
    val_ds: &WindowedDataset,
    seed: u64,
) -> Result<FitOutcome> {
    if train_ds.phase_space && !spec.kind.supports_phase_space() {
        return Err(Error::IncompatibleFeatureGroup {
            group: "phase_space".into(),
            model: spec.kind.name().into(),
        });
    }
    let start = Instant::now();
    let train_cfg = TrainConfig {
        learning_rate: spec.learning_rate,
        batch_size: spec.batch_size,
        max_epochs: spec.max_epochs,
        patience: spec.patience,
        seed,
    };
    let out_len = train_ds.out_len;
    match spec.kind {
        ForecasterKind::Naive => Ok(FitOutcome {
            model: ForecastModel::Naive(NaiveModel {
                in_len: train_ds.in_len,
                out_len,
            }),
            log: None,
            objective_trace: None,
            train_seconds: start.elapsed().as_secs_f64(),
        }),
        ForecasterKind::Ffnn => {
            let mut net = Ffnn::new(
                train_ds.flat_width(),
                spec.hidden,
                spec.hidden_layers,
                out_len,
                seed,
            );
            let log = train(&mut net, train_ds, val_ds, &train_cfg)?;
            Ok(FitOutcome {
                model: ForecastModel::Ffnn(net),
                log: Some(log),
                objective_trace: None,
                train_seconds: start.elapsed().as_secs_f64(),
            })
        }
        ForecasterKind::Lstm => {
            let mut net = Lstm::new(
                train_ds.steps,
                train_ds.n_features,
                spec.hidden,
                out_len,
                seed,
            );
            let log = train(&mut net, train_ds, val_ds, &train_cfg)?;
            Ok(FitOutcome {
                model: ForecastModel::Lstm(net),
                log: Some(log),
                objective_trace: None,
                train_seconds: start.elapsed().as_secs_f64(),
            })
        }
        ForecasterKind::Bilstm => {
            let mut net = BiLstm::new(
                train_ds.steps,
                train_ds.n_features,
                spec.hidden,
                out_len,
                seed,
            );
            let log = train(&mut net, train_ds, val_ds, &train_cfg)?;
            Ok(FitOutcome {
                model: ForecastModel::Bilstm(net),
                log: Some(log),
                objective_trace: None,
                train_seconds: start.elapsed().as_secs_f64(),
            })
        }
        ForecasterKind::Msvr => {
            let (model, trace) = fit_msvr(
                &train_ds.inputs,
                &train_ds.targets,
                train_ds.n,
                train_ds.flat_width(),
                out_len,
                &spec.msvr_params(),
            )?;
            Ok(FitOutcome {
                model: ForecastModel::Msvr(model),
                log: None,
                objective_trace: Some(trace),
                train_seconds: start.elapsed().as_secs_f64(),
            })
        }
    }
}

/// Analytic-vs-finite-difference gradient agreement for the network
/// forecasters; `None` for models without gradients.
pub fn gradient_check(spec: &ForecasterSpec, ds: &WindowedDataset, n: usize, seed: u64) -> Option<f64> {
    let n = n.min(ds.n);
    let inputs = &ds.inputs[..n * ds.flat_width()];
    let targets = &ds.targets[..n * ds.out_len];
    match spec.kind {
        ForecasterKind::Ffnn => {
            let mut net = Ffnn::new(ds.flat_width(), spec.hidden, spec.hidden_layers, ds.out_len, seed);
            Some(finite_difference_check(&mut net, inputs, targets, n, 1e-5))
        }
        ForecasterKind::Lstm => {
            let mut net = Lstm::new(ds.steps, ds.n_features, spec.hidden, ds.out_len, seed);
            Some(finite_difference_check(&mut net, inputs, targets, n, 1e-5))
        }
        ForecasterKind::Bilstm => {
            let mut net = BiLstm::new(ds.steps, ds.n_features, spec.hidden, ds.out_len, seed);
            Some(finite_difference_check(&mut net, inputs, targets, n, 1e-5))
        }
        _ => None,
    }
}

// --- binary model format -------------------------------------------------

const MODEL_MAGIC: &[u8; 8] = b"LOADCAST";
const MODEL_VERSION: u32 = 1;

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.u32(vs.len() as u32);
        for v in vs {
            self.f64(*v);
        }
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::CorruptModelFile("truncated model file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn save_model(model: &ForecastModel, path: &Path) -> Result<()> {
    let mut w = ByteWriter {
        buf: MODEL_MAGIC.to_vec(),
    };
    w.u32(MODEL_VERSION);
    match model {
        ForecastModel::Naive(m) => {
            w.u8(0);
            w.u32(m.in_len as u32);
            w.u32(m.out_len as u32);
        }
        ForecastModel::Ffnn(m) => {
            w.u8(1);
            w.u32(m.sizes.len() as u32);
            for s in &m.sizes {
                w.u32(*s as u32);
            }
            w.f64s(&m.params);
        }
        ForecastModel::Lstm(m) => {
            w.u8(2);
            w.u32(m.steps as u32);
            w.u32(m.shape.n_features as u32);
            w.u32(m.shape.hidden as u32);
            w.u32(m.out_len as u32);
            w.f64s(&m.params);
        }
        ForecastModel::Bilstm(m) => {
            w.u8(3);
            w.u32(m.steps as u32);
            w.u32(m.shape.n_features as u32);
            w.u32(m.shape.hidden as u32);
            w.u32(m.out_len as u32);
            w.f64s(&m.params);
        }
        ForecastModel::Msvr(m) => {
            w.u8(4);
            match m.kernel {
                Kernel::Rbf { gamma } => {
                    w.u8(0);
                    w.f64(gamma);
                }
                Kernel::Linear => w.u8(1),
            }
            w.u32(m.n_features as u32);
            w.u32(m.out_len as u32);
            w.f64s(&m.support);
            w.f64s(&m.beta);
            w.f64s(&m.bias);
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    file.write_all(&w.buf).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_model(path: &Path) -> Result<ForecastModel> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    let mut r = ByteReader { buf: &buf, pos: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(Error::CorruptModelFile("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelVersionMismatch {
            expected: MODEL_VERSION,
            got: version,
        });
    }
    let model = match r.u8()? {
        0 => ForecastModel::Naive(NaiveModel {
            in_len: r.u32()? as usize,
            out_len: r.u32()? as usize,
        }),
        1 => {
            let n_sizes = r.u32()? as usize;
            let sizes: Vec<usize> = (0..n_sizes)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<_>>()?;
            let params = r.f64s()?;
            let expected: usize = sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
            if sizes.len() < 2 || params.len() != expected {
                return Err(Error::CorruptModelFile("ffnn shape mismatch".into()));
            }
            ForecastModel::Ffnn(Ffnn { sizes, params })
        }
        2 => {
            let steps = r.u32()? as usize;
            let n_features = r.u32()? as usize;
            let hidden = r.u32()? as usize;
            let out_len = r.u32()? as usize;
            let params = r.f64s()?;
            let shape = lstm::LstmShape { hidden, n_features };
            if params.len() != shape.n_params() + out_len * hidden + out_len {
                return Err(Error::CorruptModelFile("lstm shape mismatch".into()));
            }
            ForecastModel::Lstm(Lstm {
                shape,
                steps,
                out_len,
                params,
            })
        }
        3 => {
            let steps = r.u32()? as usize;
            let n_features = r.u32()? as usize;
            let hidden = r.u32()? as usize;
            let out_len = r.u32()? as usize;
            let params = r.f64s()?;
            let shape = lstm::LstmShape { hidden, n_features };
            if params.len() != 2 * shape.n_params() + out_len * 2 * hidden + out_len {
                return Err(Error::CorruptModelFile("bilstm shape mismatch".into()));
            }
            ForecastModel::Bilstm(BiLstm {
                shape,
                steps,
                out_len,
                params,
            })
        }
        4 => {
            let kernel = match r.u8()? {
                0 => Kernel::Rbf { gamma: r.f64()? },
                1 => Kernel::Linear,
                _ => return Err(Error::CorruptModelFile("unknown kernel tag".into())),
            };
            let n_features = r.u32()? as usize;
            let out_len = r.u32()? as usize;
            let support = r.f64s()?;
            let beta = r.f64s()?;
            let bias = r.f64s()?;
            let n = if n_features == 0 { 0 } else { support.len() / n_features };
            if support.len() != n * n_features || beta.len() != n * out_len || bias.len() != out_len {
                return Err(Error::CorruptModelFile("msvr shape mismatch".into()));
            }
            ForecastModel::Msvr(MsvrModel {
                kernel,
                n_features,
                out_len,
                support,
                beta,
                bias,
            })
        }
        other => {
            return Err(Error::CorruptModelFile(format!(
                "unknown model kind tag {other}"
            )))
        }
    };
    if r.pos != buf.len() {
        return Err(Error::CorruptModelFile("trailing bytes".into()));
    }
    Ok(model)
}
