//! Solved policies as per-slot alpha-vector sets, and their file format.
//!
//! The file is line-oriented text:
//!
//! ```text
//! beamtrack-policy 1
//! states 64
//! horizon 10
//! actions 70
//! pilots 4
//! config_hash 0123456789abcdef0123456789abcdef
//! slot 1 17
//! 0 2 3 5 : 1.25 0.5 ...
//! ...
//! end
//! ```
//!
//! Each vector line lists the action columns, a colon, then one value per
//! state printed with shortest round-trip formatting, so reloading is exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::model::PilotPomdp;
use crate::sensing::{ActionVector, ACTION_TIE_TOL};

use super::prune::Alpha;

pub const POLICY_FORMAT_VERSION: u32 = 1;

const MAGIC: &str = "beamtrack-policy";

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    pub action: ActionVector,
}

impl AlphaVector {
    pub fn value(&self, belief: &Belief) -> f64 {
        belief.dot(&self.values)
    }
}

/// `slots[k - 1]` represents `V^k`, the optimal value from slot `k` to the
/// horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVectorSet {
    n_states: usize,
    n_actions: usize,
    n_pilots: usize,
    config_hash: Option<String>,
    slots: Vec<Vec<AlphaVector>>,
}

impl AlphaVectorSet {
    pub(crate) fn from_solver(model: &PilotPomdp, slots: Vec<Vec<Alpha>>) -> Self {
        let slots = slots
            .into_iter()
            .map(|set| {
                set.into_iter()
                    .map(|a| AlphaVector {
                        values: a.values,
                        action: model.action(a.action).clone(),
                    })
                    .collect()
            })
            .collect();
        Self {
            n_states: model.n_states(),
            n_actions: model.n_actions(),
            n_pilots: model.n_pilots(),
            config_hash: None,
            slots,
        }
    }

    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    pub fn config_hash(&self) -> Option<&str> {
        self.config_hash.as_deref()
    }

    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Vectors for slot `k` (1-based).
    pub fn slot(&self, k: usize) -> &[AlphaVector] {
        assert!(
            (1..=self.horizon()).contains(&k),
            "slot {k} outside 1..={}",
            self.horizon()
        );
        &self.slots[k - 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.slots.iter().map(Vec::len).collect()
    }

    /// `V^k(belief)`.
    pub fn value(&self, belief: &Belief, k: usize) -> f64 {
        self.best(belief, k).1
    }

    /// Maximizing action at slot `k`; near-ties go to the lexicographically
    /// smallest action.
    pub fn optimal_action(&self, belief: &Belief, k: usize) -> &ActionVector {
        &self.slot(k)[self.best(belief, k).0].action
    }

    fn best(&self, belief: &Belief, k: usize) -> (usize, f64) {
        let set = self.slot(k);
        let values: Vec<f64> = set.iter().map(|a| a.value(belief)).collect();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pick = (0..set.len())
            .filter(|&i| values[i] >= max - ACTION_TIE_TOL)
            .min_by(|&i, &j| set[i].action.cmp(&set[j].action))
            .expect("slot sets are never empty");
        (pick, max)
    }

    /// Rejects a policy solved for another model.
    pub fn check_model(&self, model: &PilotPomdp, config_hash: &str) -> Result<()> {
        if let Some(expected) = &self.config_hash {
            if expected != config_hash {
                return Err(Error::ConfigMismatch {
                    expected: expected.clone(),
                    found: config_hash.to_string(),
                });
            }
        }
        if self.n_states != model.n_states()
            || self.n_actions != model.n_actions()
            || self.n_pilots != model.n_pilots()
        {
            return Err(Error::PolicyFormat(format!(
                "policy has {} states / {} actions / {} pilots, model has {} / {} / {}",
                self.n_states,
                self.n_actions,
                self.n_pilots,
                model.n_states(),
                model.n_actions(),
                model.n_pilots()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {POLICY_FORMAT_VERSION}");
        let _ = writeln!(out, "states {}", self.n_states);
        let _ = writeln!(out, "horizon {}", self.horizon());
        let _ = writeln!(out, "actions {}", self.n_actions);
        let _ = writeln!(out, "pilots {}", self.n_pilots);
        let _ = writeln!(out, "config_hash {}", self.config_hash.as_deref().unwrap_or("-"));
        for (k, set) in self.slots.iter().enumerate() {
            let _ = writeln!(out, "slot {} {}", k + 1, set.len());
            for alpha in set {
                let _ = write!(out, "{} :", alpha.action);
                for v in &alpha.values {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::PolicyFormat(format!("unexpected end of file, expected {what}")))
        };
        let header = next("header")?;
        match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            [MAGIC, v] if *v == POLICY_FORMAT_VERSION.to_string() => {}
            [MAGIC, v] => {
                return Err(Error::PolicyFormat(format!("unsupported format version {v}")));
            }
            _ => return Err(Error::PolicyFormat("not a policy file".into())),
        }
        let n_states = keyed(next("states")?, "states")?;
        let horizon = keyed(next("horizon")?, "horizon")?;
        let n_actions = keyed(next("actions")?, "actions")?;
        let n_pilots: usize = keyed(next("pilots")?, "pilots")?;
        let hash_line = next("config_hash")?;
        let config_hash = match hash_line.strip_prefix("config_hash ").map(str::trim) {
            Some("-") => None,
            Some(h) => Some(h.to_string()),
            None => return Err(Error::PolicyFormat(format!("expected config_hash, got {hash_line:?}"))),
        };
        let mut slots = Vec::with_capacity(horizon);
        for k in 1..=horizon {
            let line = next("slot header")?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let count = match parts.as_slice() {
                ["slot", idx, count] if idx.parse::<usize>().ok() == Some(k) => count
                    .parse::<usize>()
                    .map_err(|_| Error::PolicyFormat(format!("bad vector count in {line:?}")))?,
                _ => return Err(Error::PolicyFormat(format!("expected slot {k}, got {line:?}"))),
            };
            let mut set = Vec::with_capacity(count);
            for _ in 0..count {
                set.push(parse_vector(next("alpha vector")?, n_states, n_pilots)?);
            }
            slots.push(set);
        }
        if next("end")? != "end" {
            return Err(Error::PolicyFormat("trailing data after last slot".into()));
        }
        Ok(Self {
            n_states,
            n_actions,
            n_pilots,
            config_hash,
            slots,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::PolicyFormat(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

fn keyed(line: &str, key: &str) -> Result<usize> {
    line.strip_prefix(key)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| Error::PolicyFormat(format!("expected `{key} <n>`, got {line:?}")))
}

fn parse_vector(line: &str, n_states: usize, n_pilots: usize) -> Result<AlphaVector> {
    let bad = |why: &str| Error::PolicyFormat(format!("{why} in vector line {line:?}"));
    let (cols, values) = line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
    let cols: Vec<usize> = cols
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("bad column"))?;
    if cols.len() != n_pilots || cols.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("action is not canonical"));
    }
    let values: Vec<f64> = values
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("bad value"))?;
    if values.len() != n_states {
        return Err(bad("wrong number of values"));
    }
    let n_tx = cols.last().map_or(0, |c| c + 1);
    Ok(AlphaVector {
        values,
        action: ActionVector::new(cols, n_tx)?,
    })
}
