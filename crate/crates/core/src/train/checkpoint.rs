//! Binary checkpoints.
//!
//! Layout: the magic bytes `HCRN`, a little-endian `u32` format version, a
//! little-endian `u64` manifest length, the UTF-8 JSON manifest, then every
//! tensor's values as little-endian IEEE-754 numbers back to back. The
//! manifest lists each tensor's name, shape, dtype, and byte offset into the
//! payload.
//!
//! Tensor names carry a group: `param/` for model parameters, and for
//! training sessions `adadelta.eg2/`, `adadelta.edx2/`, and `best/`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Adadelta, EpochRecord, PhaseConfig, Session, Stopper};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::model::{FlatRnn, Hcrn, Model, ModelSpec, SentenceClassifier};
use crate::real::{DType, Real};
use crate::rng::RngState;
use crate::tape::{Tape, Var};
use crate::tensor::{ParamStore, Tensor};

pub const MAGIC: &[u8; 4] = b"HCRN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: DType,
    pub offset: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub frozen: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingState {
    pub phase: PhaseConfig,
    pub epoch: usize,
    pub rng: RngState,
    pub stopper: Stopper,
    pub stopped: bool,
    pub history: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub dtype: DType,
    pub model: ModelSpec,
    pub tensors: Vec<TensorEntry>,
    pub payload_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingState>,
}

/// Manifest plus tensor values, in manifest order.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub manifest: Manifest,
    pub tensors: Vec<Tensor<T>>,
}

fn format_err<X>(msg: impl Into<String>) -> Result<X> {
    Err(Error::Format(msg.into()))
}

impl<T: Real> Checkpoint<T> {
    fn build(model: ModelSpec, named: Vec<(String, Tensor<T>, bool)>, training: Option<TrainingState>) -> Self {
        let mut offset = 0u64;
        let mut entries = Vec::with_capacity(named.len());
        let mut tensors = Vec::with_capacity(named.len());
        for (name, t, frozen) in named {
            entries.push(TensorEntry { name, shape: t.shape().to_vec(), dtype: T::DTYPE, offset, frozen });
            offset += (t.len() * T::DTYPE.size()) as u64;
            tensors.push(t);
        }
        let manifest = Manifest {
            version: FORMAT_VERSION,
            dtype: T::DTYPE,
            model,
            tensors: entries,
            payload_bytes: offset,
            training,
        };
        Checkpoint { manifest, tensors }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let json = serde_json::to_vec(&self.manifest).expect("manifest serializes");
        let mut out = Vec::with_capacity(16 + json.len() + self.manifest.payload_bytes as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &self.tensors {
            for &v in t.data() {
                v.write_le(&mut out);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (manifest, payload) = split_manifest(bytes)?;
        if manifest.dtype != T::DTYPE {
            return format_err(format!("checkpoint stores {:?} values, {:?} requested", manifest.dtype, T::DTYPE));
        }
        if payload.len() as u64 != manifest.payload_bytes {
            return format_err(format!(
                "payload has {} bytes, manifest promises {}",
                payload.len(),
                manifest.payload_bytes
            ));
        }
        let size = T::DTYPE.size();
        let mut expected = 0u64;
        let mut tensors = Vec::with_capacity(manifest.tensors.len());
        for e in &manifest.tensors {
            if e.offset != expected || e.dtype != manifest.dtype {
                return format_err(format!("tensor {:?} at offset {}, expected {}", e.name, e.offset, expected));
            }
            let n: usize = e.shape.iter().product();
            let end = expected + (n * size) as u64;
            if end > manifest.payload_bytes {
                return format_err(format!("tensor {:?} runs past the payload", e.name));
            }
            let raw = &payload[expected as usize..end as usize];
            let data = raw.chunks_exact(size).map(T::read_le).collect();
            tensors.push(Tensor::new(e.shape.clone(), data).map_err(|e| Error::Format(e.to_string()))?);
            expected = end;
        }
        if expected != manifest.payload_bytes {
            return format_err("payload has bytes no tensor claims");
        }
        Ok(Checkpoint { manifest, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    fn group(&self, prefix: &str) -> Vec<(&TensorEntry, &Tensor<T>)> {
        self.manifest.tensors.iter().zip(&self.tensors).filter(|(e, _)| e.name.starts_with(prefix)).collect()
    }

    /// Overwrites every parameter of `params` from the `param/` group; names,
    /// order, and shapes must agree exactly.
    fn fill_params(&self, params: &mut ParamStore<T>) -> Result<()> {
        let group = self.group("param/");
        if group.len() != params.len() {
            return format_err(format!("checkpoint has {} parameters, model has {}", group.len(), params.len()));
        }
        for (p, (e, t)) in params.iter_mut().zip(group) {
            if e.name["param/".len()..] != p.name || t.shape() != p.value.shape() {
                return format_err(format!("checkpoint tensor {:?} {:?} does not match parameter {:?} {:?}", e.name, e.shape, p.name, p.value.shape()));
            }
            p.value = t.clone();
            p.frozen = e.frozen;
        }
        Ok(())
    }
}

fn split_manifest(bytes: &[u8]) -> Result<(Manifest, &[u8])> {
    if bytes.len() < 16 {
        return format_err("file too short for a checkpoint header");
    }
    if &bytes[..4] != MAGIC {
        return format_err("not a checkpoint (bad magic bytes)");
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return format_err(format!("checkpoint format version {version}, this build reads {FORMAT_VERSION}"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let rest = &bytes[16..];
    if len > rest.len() as u64 {
        return format_err("truncated manifest");
    }
    let (json, payload) = rest.split_at(len as usize);
    let manifest: Manifest = serde_json::from_slice(json).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if manifest.version != version {
        return format_err("manifest version disagrees with header");
    }
    Ok((manifest, payload))
}

/// Reads only the header and manifest.
pub fn peek_manifest(path: &Path) -> Result<Manifest> {
    let bytes = std::fs::read(path)?;
    Ok(split_manifest(&bytes)?.0)
}

/// Models that can be rebuilt from their description.
pub trait Restore<T: Real>: Model<T> + Sized {
    fn from_spec(spec: &ModelSpec) -> Result<Self>;
}

fn scratch_rng() -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(0)
}

impl<T: Real> Restore<T> for Hcrn<T> {
    fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Hcrn(c) => Hcrn::new(c.clone(), &mut scratch_rng()),
            ModelSpec::Flat(_) => Err(Error::Config("checkpoint holds a flat baseline, not a hierarchical model".into())),
        }
    }
}

impl<T: Real> Restore<T> for FlatRnn<T> {
    fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Flat(c) => FlatRnn::new(c.clone(), &mut scratch_rng()),
            ModelSpec::Hcrn(_) => Err(Error::Config("checkpoint holds a hierarchical model, not a flat baseline".into())),
        }
    }
}

/// Either model kind, for code that loads whatever a checkpoint holds.
#[derive(Clone, Debug)]
pub enum AnyModel<T> {
    Hcrn(Hcrn<T>),
    Flat(FlatRnn<T>),
}

impl<T: Real> Model<T> for AnyModel<T> {
    fn params(&self) -> &ParamStore<T> {
        match self {
            AnyModel::Hcrn(m) => m.params(),
            AnyModel::Flat(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> &mut ParamStore<T> {
        match self {
            AnyModel::Hcrn(m) => m.params_mut(),
            AnyModel::Flat(m) => m.params_mut(),
        }
    }

    fn spec(&self) -> ModelSpec {
        match self {
            AnyModel::Hcrn(m) => m.spec(),
            AnyModel::Flat(m) => m.spec(),
        }
    }
}

impl<T: Real> SentenceClassifier<T> for AnyModel<T> {
    fn num_classes(&self) -> usize {
        match self {
            AnyModel::Hcrn(m) => m.num_classes(),
            AnyModel::Flat(m) => m.num_classes(),
        }
    }

    fn sentence_logits(&self, tape: &mut Tape<T>, sentence: &Sentence) -> Result<Var> {
        match self {
            AnyModel::Hcrn(m) => m.sentence_logits(tape, sentence),
            AnyModel::Flat(m) => m.sentence_logits(tape, sentence),
        }
    }
}

impl<T: Real> Restore<T> for AnyModel<T> {
    fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Ok(match spec {
            ModelSpec::Hcrn(_) => AnyModel::Hcrn(Hcrn::from_spec(spec)?),
            ModelSpec::Flat(_) => AnyModel::Flat(FlatRnn::from_spec(spec)?),
        })
    }
}

fn param_entries<T: Real>(params: &ParamStore<T>) -> Vec<(String, Tensor<T>, bool)> {
    params.iter().map(|p| (format!("param/{}", p.name), p.value.clone(), p.frozen)).collect()
}

pub fn model_checkpoint<T: Real, M: Model<T>>(model: &M) -> Checkpoint<T> {
    Checkpoint::build(model.spec(), param_entries(model.params()), None)
}

pub fn save_model<T: Real, M: Model<T>>(model: &M, path: &Path) -> Result<()> {
    model_checkpoint(model).save(path)
}

/// Loads the model of any checkpoint, including a session checkpoint.
pub fn load_model<T: Real, M: Restore<T>>(path: &Path) -> Result<M> {
    let ck = Checkpoint::<T>::load(path)?;
    model_from(&ck)
}

fn model_from<T: Real, M: Restore<T>>(ck: &Checkpoint<T>) -> Result<M> {
    let mut model = M::from_spec(&ck.manifest.model)?;
    ck.fill_params(model.params_mut())?;
    Ok(model)
}

impl<T: Real, M: Model<T>> Session<T, M> {
    pub fn checkpoint(&self) -> Checkpoint<T> {
        let params = self.model.params();
        let mut named = param_entries(params);
        for (p, t) in params.iter().zip(&self.optimizer.eg2) {
            named.push((format!("adadelta.eg2/{}", p.name), t.clone(), false));
        }
        for (p, t) in params.iter().zip(&self.optimizer.edx2) {
            named.push((format!("adadelta.edx2/{}", p.name), t.clone(), false));
        }
        if let Some(best) = &self.best {
            for (p, t) in params.iter().zip(best) {
                named.push((format!("best/{}", p.name), t.clone(), false));
            }
        }
        let training = TrainingState {
            phase: self.config.clone(),
            epoch: self.epoch,
            rng: self.rng_state(),
            stopper: self.stopper,
            stopped: self.stopped,
            history: self.history.clone(),
        };
        Checkpoint::build(self.model.spec(), named, Some(training))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.checkpoint().save(path)
    }
}

impl<T: Real, M: Restore<T>> Session<T, M> {
    pub fn from_checkpoint(ck: &Checkpoint<T>) -> Result<Self> {
        let training = ck
            .manifest
            .training
            .as_ref()
            .ok_or_else(|| Error::Format("checkpoint has no training state; start a new session instead".into()))?;
        let model: M = model_from(ck)?;
        let n = model.params().len();
        let take = |prefix: &str| -> Result<Vec<Tensor<T>>> {
            let g: Vec<Tensor<T>> = ck.group(prefix).into_iter().map(|(_, t)| t.clone()).collect();
            if g.len() != n {
                return format_err(format!("checkpoint has {} {prefix} tensors for {n} parameters", g.len()));
            }
            Ok(g)
        };
        let optimizer = Adadelta { config: training.phase.optimizer, eg2: take("adadelta.eg2/")?, edx2: take("adadelta.edx2/")? };
        let best = if ck.group("best/").is_empty() { None } else { Some(take("best/")?) };
        Ok(Session {
            model,
            config: training.phase.clone(),
            optimizer,
            shuffle: training.rng.restore(),
            epoch: training.epoch,
            history: training.history.clone(),
            stopper: training.stopper,
            best,
            stopped: training.stopped,
        })
    }

    pub fn resume(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HcrnConfig, Stage};
    use crate::rng::{stream, Stream};

    fn model() -> Hcrn<f64> {
        let mut c = HcrnConfig::with_sizes(&[4], &[3], &[2], 3).at_stage(Stage::Discourse);
        c.mlp_hidden = 5;
        Hcrn::new(c, &mut stream(0, Stream::Init)).unwrap()
    }

    #[test]
    fn model_round_trip_bit_identical() {
        let mut m = model();
        m.params_mut().set_frozen(&["cc."], true);
        let bytes = model_checkpoint(&m).to_bytes();
        let ck = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        let back: Hcrn<f64> = model_from(&ck).unwrap();
        for (a, b) in m.params().iter().zip(back.params().iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.frozen, b.frozen);
            assert!(a.value.data().iter().zip(b.value.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(model_checkpoint(&back).to_bytes(), bytes);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = model_checkpoint(&model()).to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::<f64>::from_bytes(&bad), Err(Error::Format(_))));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(Checkpoint::<f64>::from_bytes(&bad), Err(Error::Format(m)) if m.contains("version")));

        assert!(matches!(Checkpoint::<f64>::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(Checkpoint::<f64>::from_bytes(&bytes[..10]), Err(Error::Format(_))));
        assert!(matches!(Checkpoint::<f32>::from_bytes(&bytes), Err(Error::Format(_))));

        let mut ck = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        ck.manifest.tensors[1].offset += 8;
        assert!(matches!(Checkpoint::<f64>::from_bytes(&ck.to_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn f32_round_trip() {
        let c = HcrnConfig::with_sizes(&[4], &[3], &[2], 3).at_stage(Stage::Sentence);
        let m = Hcrn::<f32>::new(c, &mut stream(0, Stream::Init)).unwrap();
        let bytes = model_checkpoint(&m).to_bytes();
        let back: Hcrn<f32> = model_from(&Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back.params().by_name("cw.layer0.Wz").unwrap().value, m.params().by_name("cw.layer0.Wz").unwrap().value);
    }

    #[test]
    fn wrong_model_kind() {
        let bytes = model_checkpoint(&model()).to_bytes();
        let ck = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        assert!(model_from::<f64, FlatRnn<f64>>(&ck).is_err());
        assert!(matches!(model_from::<f64, AnyModel<f64>>(&ck), Ok(AnyModel::Hcrn(_))));
    }
}
