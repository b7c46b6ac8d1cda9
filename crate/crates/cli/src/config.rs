//! Run configuration: defaults, then a `key = value` file, then overrides.

use std::path::{Path, PathBuf};

use hcrn::corpus::TagSet;
use hcrn::model::{FlatConfig, HcrnConfig, Stage, WordEncoderConfig};
use hcrn::train::{AdadeltaConfig, PhaseConfig, StoppingRule};
use hcrn::DType;
use serde::Serialize;

use crate::UsageError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: String,
    pub seed: u64,
    pub dtype: DType,
    /// `hcrn` or `flat`.
    pub model: String,
    /// `chars` or `lookup`.
    pub word_encoder: String,
    pub cc: Option<Vec<usize>>,
    pub cw: Option<Vec<usize>>,
    pub cs: Option<Vec<usize>>,
    pub char_embed_dim: Option<usize>,
    pub mlp_hidden: Option<usize>,
    pub init_scale: Option<f64>,
    pub speaker_input: bool,
    pub lookup_dim: Option<usize>,
    pub cutoff: usize,
    pub flat_layers: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub freeze_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub min_relative: Option<f64>,
    pub clip: f64,
    pub rho: f64,
    pub eps: f64,
    pub truncate: Option<usize>,
    pub valid_fraction: Option<f64>,
    pub tagset: Option<PathBuf>,
    pub train_ids: Option<PathBuf>,
    pub valid_ids: Option<PathBuf>,
    pub test_ids: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adadelta = AdadeltaConfig::default();
        RunConfig {
            preset: "small".into(),
            seed: 1,
            dtype: DType::F64,
            model: "hcrn".into(),
            word_encoder: "chars".into(),
            cc: None,
            cw: None,
            cs: None,
            char_embed_dim: None,
            mlp_hidden: None,
            init_scale: None,
            speaker_input: true,
            lookup_dim: None,
            cutoff: 5,
            flat_layers: None,
            epochs: None,
            batch_size: None,
            freeze_epochs: None,
            patience: None,
            min_relative: None,
            clip: 5.0,
            rho: adadelta.rho,
            eps: adadelta.eps,
            truncate: None,
            valid_fraction: None,
            tagset: None,
            train_ids: None,
            valid_ids: None,
            test_ids: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, UsageError> {
    value.parse().map_err(|_| UsageError(format!("bad value {value:?} for {key}")))
}

fn sizes(key: &str, value: &str) -> Result<Vec<usize>, UsageError> {
    let v: Vec<usize> = value.split(',').map(|s| parse(key, s.trim())).collect::<Result<_, _>>()?;
    if v.is_empty() || v.contains(&0) {
        return Err(UsageError(format!("{key} needs positive comma-separated sizes, got {value:?}")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), UsageError> {
        let value = value.trim();
        match key.trim() {
            "preset" => {
                HcrnConfig::preset(value, 1).map_err(|e| UsageError(e.to_string()))?;
                self.preset = value.into();
            }
            "seed" => self.seed = parse(key, value)?,
            "dtype" => self.dtype = value.parse().map_err(UsageError)?,
            "model" => match value {
                "hcrn" | "flat" => self.model = value.into(),
                _ => return Err(UsageError(format!("model must be hcrn or flat, got {value:?}"))),
            },
            "word_encoder" => match value {
                "chars" | "lookup" => self.word_encoder = value.into(),
                _ => return Err(UsageError(format!("word_encoder must be chars or lookup, got {value:?}"))),
            },
            "cc" => self.cc = Some(sizes(key, value)?),
            "cw" => self.cw = Some(sizes(key, value)?),
            "cs" => self.cs = Some(sizes(key, value)?),
            "flat_layers" => self.flat_layers = Some(sizes(key, value)?),
            "char_embed_dim" => self.char_embed_dim = Some(parse(key, value)?),
            "mlp_hidden" => self.mlp_hidden = Some(parse(key, value)?),
            "init_scale" => self.init_scale = Some(parse(key, value)?),
            "speaker_input" => self.speaker_input = parse(key, value)?,
            "lookup_dim" => self.lookup_dim = Some(parse(key, value)?),
            "cutoff" => self.cutoff = parse(key, value)?,
            "epochs" => self.epochs = Some(parse(key, value)?),
            "batch_size" => self.batch_size = Some(parse(key, value)?),
            "freeze_epochs" => self.freeze_epochs = Some(parse(key, value)?),
            "patience" => self.patience = Some(parse(key, value)?),
            "min_relative" => self.min_relative = Some(parse(key, value)?),
            "clip" => self.clip = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "truncate" => self.truncate = Some(parse(key, value)?),
            "valid_fraction" => self.valid_fraction = Some(parse(key, value)?),
            "tagset" => self.tagset = Some(value.into()),
            "train_ids" => self.train_ids = Some(value.into()),
            "valid_ids" => self.valid_ids = Some(value.into()),
            "test_ids" => self.test_ids = Some(value.into()),
            other => return Err(UsageError(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), UsageError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| UsageError(format!("expected key=value, got {pair:?}")))?;
        self.set(k, v)
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), UsageError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line).map_err(|e| UsageError(format!("config line {}: {}", n + 1, e.0)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Ok(self.apply_text(&text)?)
    }

    /// Tag list: the `tagset` key, else `<corpus>.tags` next to the corpus,
    /// else the 42 SWBD-DAMSL classes.
    pub fn tagset_for(&self, corpus: Option<&Path>) -> anyhow::Result<TagSet> {
        if let Some(p) = &self.tagset {
            return Ok(TagSet::load(p)?);
        }
        if let Some(side) = corpus.map(tags_path).filter(|p| p.exists()) {
            log::info!("using tag list {}", side.display());
            return Ok(TagSet::load(&side)?);
        }
        Ok(TagSet::swbd_damsl())
    }

    pub fn hcrn_config(&self, stage: Stage, num_classes: usize) -> anyhow::Result<HcrnConfig> {
        let mut c = HcrnConfig::preset(&self.preset, num_classes)?;
        let WordEncoderConfig::Compositional { char_embed_dim, layers } = &mut c.word else {
            unreachable!("presets are compositional")
        };
        if let Some(d) = self.char_embed_dim {
            *char_embed_dim = d;
        }
        if let Some(cc) = &self.cc {
            *layers = cc.clone();
        }
        let cc_top = *layers.last().expect("non-empty cc");
        if self.word_encoder == "lookup" {
            c.word = WordEncoderConfig::Lookup { dim: self.lookup_dim.unwrap_or(cc_top), cutoff: self.cutoff, words: Vec::new() };
        }
        if let Some(cw) = &self.cw {
            c.cw = cw.clone();
        }
        if let Some(cs) = &self.cs {
            c.cs = cs.clone();
        }
        if let Some(h) = self.mlp_hidden {
            c.mlp_hidden = h;
        }
        if let Some(s) = self.init_scale {
            c.init_scale = s;
        }
        c.speaker_input = self.speaker_input;
        Ok(c.at_stage(stage))
    }

    /// Flat baseline with as many hidden units per layer as CC followed by CW.
    pub fn flat_config(&self, num_classes: usize) -> anyhow::Result<FlatConfig> {
        let h = self.hcrn_config(Stage::Sentence, num_classes)?;
        let layers = match (&self.flat_layers, &h.word) {
            (Some(l), _) => l.clone(),
            (None, WordEncoderConfig::Compositional { layers, .. }) => layers.iter().chain(&h.cw).copied().collect(),
            (None, WordEncoderConfig::Lookup { .. }) => h.cw.clone(),
        };
        let mut f = FlatConfig::new(&layers, num_classes);
        if let Some(d) = self.char_embed_dim {
            f.char_embed_dim = d;
        }
        f.mlp_hidden = h.mlp_hidden;
        f.init_scale = h.init_scale;
        Ok(f)
    }

    pub fn phase_config(&self, stage: Stage, pretrained: bool) -> anyhow::Result<PhaseConfig> {
        let mut p = match stage {
            Stage::Word => PhaseConfig::word(self.seed),
            Stage::Sentence => PhaseConfig::sentence(self.seed, pretrained),
            Stage::Discourse => PhaseConfig::discourse(self.seed, pretrained),
        };
        if let Some(e) = self.epochs {
            p.max_epochs = e;
        }
        if let Some(b) = self.batch_size {
            p.batch_size = b;
        }
        if let Some(f) = self.freeze_epochs {
            p.freeze_epochs = if pretrained { f } else { 0 };
        }
        match (&mut p.stopping, self.patience, self.min_relative) {
            (StoppingRule::Patience { patience }, Some(n), _) => *patience = n,
            (StoppingRule::RelativeImprovement { epochs, .. }, Some(n), _) => *epochs = n,
            _ => {}
        }
        if let (StoppingRule::RelativeImprovement { min_relative, .. }, Some(r)) = (&mut p.stopping, self.min_relative) {
            *min_relative = r;
        }
        p.clip = self.clip;
        p.optimizer = AdadeltaConfig { rho: self.rho, eps: self.eps };
        if stage == Stage::Discourse {
            p.truncate = self.truncate;
        }
        if let Some(v) = self.valid_fraction {
            p.valid_fraction = v;
        }
        p.validate()?;
        Ok(p)
    }
}

/// `<corpus>.tags`
pub fn tags_path(corpus: &Path) -> PathBuf {
    let mut s = corpus.as_os_str().to_owned();
    s.push(".tags");
    PathBuf::from(s)
}
