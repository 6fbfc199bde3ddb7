//! Run configuration: a serializable bag of optional settings, merged with
//! precedence flags over config file over built-in family defaults.

use serde::{Deserialize, Serialize};

use crate::convergence::SeqOpts;
use crate::error::{Error, Result};
use crate::vmetric::VOpts;

/// One cover piece in a patch run: a ball plus a named approximant from the
/// corpus (`const:c` and `linear:a,b` are accepted).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub approximant: String,
    /// Sequence index for approximants drawn from a sequence family.
    #[serde(default)]
    pub index: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: Option<String>,
    pub horizon: Option<usize>,
    pub probes: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub member: Option<usize>,
    /// Sequence index used by `vdist` (defaults to the horizon).
    pub index: Option<usize>,
    pub k_max: Option<u32>,
    pub tol_stall: Option<f64>,
    pub stall_span: Option<u32>,
    pub base_depth: Option<u32>,
    pub margin: Option<f64>,
    pub min_tail: Option<usize>,
    pub tail_window: Option<usize>,
    pub uniform_depth: Option<u32>,
    pub cover: Option<Vec<CoverSpec>>,
    /// Patch target object name.
    pub target: Option<String>,
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("tol_stall", self.tol_stall),
            ("margin", self.margin),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::InvalidSpec(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        if let (Some(h), Some(w)) = (self.horizon, self.tail_window) {
            if h < w {
                return Err(Error::InvalidSpec(format!(
                    "horizon {h} shorter than tail_window {w}"
                )));
            }
        }
        Ok(())
    }

    /// Overlay: any setting present in `flags` wins over `self`.
    pub fn overlaid(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(
            family,
            horizon,
            probes,
            epsilon,
            member,
            index,
            k_max,
            tol_stall,
            stall_span,
            base_depth,
            margin,
            min_tail,
            tail_window,
            uniform_depth,
            cover,
            target
        );
        self
    }

    /// Family-tuned sequence options with the config's overrides applied.
    pub fn seq_opts(&self, base: SeqOpts) -> SeqOpts {
        let mut o = base;
        o.v = self.v_opts(o.v);
        if let Some(v) = self.epsilon {
            o.epsilon = v;
        }
        if let Some(v) = self.min_tail {
            o.min_tail = v;
        }
        if let Some(v) = self.tail_window {
            o.tail_window = v;
        }
        if let Some(v) = self.uniform_depth {
            o.uniform_depth = v;
        }
        if let Some(v) = self.margin {
            o.margin = v;
        }
        o
    }

    pub fn v_opts(&self, base: VOpts) -> VOpts {
        let mut v = base;
        if let Some(x) = self.k_max {
            v.k_max = x;
        }
        if let Some(x) = self.tol_stall {
            v.tol_stall = x;
        }
        if let Some(x) = self.stall_span {
            v.stall_span = x;
        }
        if let Some(x) = self.base_depth {
            v.base_depth = x;
        }
        if let Some(x) = self.margin {
            v.margin = x;
        }
        v
    }
}
