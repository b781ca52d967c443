//! Weight vectors over the `(i, j, k)` interaction terms and the named
//! presets that recover the classic trilinear models.
//!
//! ω is flattened in lexicographic `(i, j, k)` order, `i` and `j` ranging
//! over the entity embeddings of head and tail and `k` over the relation
//! embeddings. For two embeddings the order is
//!
//! ```text
//! (1,1,1) (1,1,2) (1,2,1) (1,2,2) (2,1,1) (2,1,2) (2,2,1) (2,2,2)
//! ```
//!
//! so an 8-entry custom vector such as `0,0,20,0,0,1,0,0` can be pasted in
//! as-is.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weight_learning::{restrict, RestrictionKind};

/// Standard deviation of the raw parameters of a freshly initialized
/// learnable weight vector.
pub const LEARNABLE_INIT_STD: f64 = 0.1;

const DISTMULT: [f64; 8] = [1., 0., 0., 0., 0., 0., 0., 0.];
const COMPLEX: [f64; 8] = [1., 0., 0., 1., 0., -1., 1., 0.];
const COMPLEX_EQUIV_1: [f64; 8] = [1., 0., 0., -1., 0., 1., 1., 0.];
const COMPLEX_EQUIV_2: [f64; 8] = [0., 1., -1., 0., 1., 0., 0., 1.];
const COMPLEX_EQUIV_3: [f64; 8] = [0., 1., 1., 0., -1., 0., 0., 1.];
const CP: [f64; 8] = [0., 0., 1., 0., 0., 0., 0., 0.];
const CPH: [f64; 8] = [0., 0., 1., 0., 0., 1., 0., 0.];
const CPH_EQUIV: [f64; 8] = [0., 0., 0., 1., 1., 0., 0., 0.];

/// Nonzero `(i, j, k, ω)` terms of the quaternion model, 0-based.
const QUATERNION_TERMS: [(usize, usize, usize, f64); 16] = [
    (0, 0, 0, 1.),
    (1, 1, 0, 1.),
    (2, 2, 0, 1.),
    (3, 3, 0, 1.),
    (0, 1, 1, 1.),
    (1, 0, 1, -1.),
    (2, 3, 1, 1.),
    (3, 2, 1, -1.),
    (0, 2, 2, 1.),
    (1, 3, 2, -1.),
    (2, 0, 2, -1.),
    (3, 1, 2, 1.),
    (0, 3, 3, 1.),
    (1, 2, 3, 1.),
    (2, 1, 3, -1.),
    (3, 0, 3, -1.),
];

/// Names accepted by [`Preset::from_str`].
pub const PRESET_NAMES: &[&str] = &[
    "distmult",
    "complex",
    "complex_equiv_1",
    "complex_equiv_2",
    "complex_equiv_3",
    "cp",
    "cph",
    "cph_equiv",
    "quaternion",
    "uniform",
];

/// How the weight vector of a model is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    DistMult,
    ComplEx,
    ComplExEquiv1,
    ComplExEquiv2,
    ComplExEquiv3,
    Cp,
    CpH,
    CpHEquiv,
    Quaternion,
    /// All ones.
    Uniform,
    /// User-supplied ω in lexicographic order.
    Custom { omega: Vec<f64> },
    /// ω learned jointly with the embeddings.
    Learnable {
        restriction: RestrictionKind,
        sparse: bool,
    },
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "distmult" => Self::DistMult,
            "complex" => Self::ComplEx,
            "complex_equiv_1" => Self::ComplExEquiv1,
            "complex_equiv_2" => Self::ComplExEquiv2,
            "complex_equiv_3" => Self::ComplExEquiv3,
            "cp" => Self::Cp,
            "cph" => Self::CpH,
            "cph_equiv" => Self::CpHEquiv,
            "quaternion" => Self::Quaternion,
            "uniform" => Self::Uniform,
            _ => {
                return Err(Error::UnknownPreset {
                    name: s.to_string(),
                    valid: PRESET_NAMES.join(", "),
                })
            }
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DistMult => f.write_str("distmult"),
            Self::ComplEx => f.write_str("complex"),
            Self::ComplExEquiv1 => f.write_str("complex_equiv_1"),
            Self::ComplExEquiv2 => f.write_str("complex_equiv_2"),
            Self::ComplExEquiv3 => f.write_str("complex_equiv_3"),
            Self::Cp => f.write_str("cp"),
            Self::CpH => f.write_str("cph"),
            Self::CpHEquiv => f.write_str("cph_equiv"),
            Self::Quaternion => f.write_str("quaternion"),
            Self::Uniform => f.write_str("uniform"),
            Self::Custom { .. } => f.write_str("custom"),
            Self::Learnable { restriction, sparse } => {
                write!(f, "learnable_{restriction}")?;
                if *sparse {
                    f.write_str("_sparse")?;
                }
                Ok(())
            }
        }
    }
}

impl Preset {
    /// Embedding counts `(n_e, n_r)` used when none are configured.
    pub fn default_shape(&self) -> (usize, usize) {
        match self {
            Self::DistMult => (1, 1),
            Self::Quaternion => (4, 4),
            Self::Custom { omega } => {
                // n_e = n_r = n with n³ entries
                let n = (omega.len() as f64).cbrt().round() as usize;
                (n.max(1), n.max(1))
            }
            _ => (2, 2),
        }
    }

    /// Whether `(n_e, n_r)` is a valid shape for this preset.
    pub fn check_shape(&self, n_e: usize, n_r: usize) -> Result<()> {
        let ok = match self {
            Self::DistMult => (n_e, n_r) == (1, 1) || (n_e, n_r) == (2, 2),
            Self::ComplEx
            | Self::ComplExEquiv1
            | Self::ComplExEquiv2
            | Self::ComplExEquiv3
            | Self::Cp
            | Self::CpH
            | Self::CpHEquiv => (n_e, n_r) == (2, 2),
            Self::Quaternion => (n_e, n_r) == (4, 4),
            Self::Uniform | Self::Learnable { .. } => n_e > 0 && n_r > 0,
            Self::Custom { omega } => n_e > 0 && n_r > 0 && omega.len() == n_e * n_e * n_r,
        };
        if ok {
            return Ok(());
        }
        let expected = match self {
            Self::DistMult => "n_e = n_r = 1 (or 2 with the 8-term layout)".to_string(),
            Self::Quaternion => "n_e = n_r = 4".to_string(),
            Self::Custom { omega } => {
                format!("n_e·n_e·n_r = {} (length of the custom vector)", omega.len())
            }
            Self::Uniform | Self::Learnable { .. } => "n_e, n_r > 0".to_string(),
            _ => "n_e = n_r = 2".to_string(),
        };
        Err(Error::Config(format!(
            "preset {self} requires {expected}, got n_e = {n_e}, n_r = {n_r}"
        )))
    }

    /// Builds the weight vector for the given shape. Learnable presets draw
    /// their raw parameters from `N(0, 0.1²)` using `seed`.
    pub fn weight_vector(&self, n_e: usize, n_r: usize, seed: u64) -> Result<WeightVector> {
        self.check_shape(n_e, n_r)?;
        let omega = match self {
            Self::DistMult if n_e == 1 => vec![1.0],
            Self::DistMult => DISTMULT.to_vec(),
            Self::ComplEx => COMPLEX.to_vec(),
            Self::ComplExEquiv1 => COMPLEX_EQUIV_1.to_vec(),
            Self::ComplExEquiv2 => COMPLEX_EQUIV_2.to_vec(),
            Self::ComplExEquiv3 => COMPLEX_EQUIV_3.to_vec(),
            Self::Cp => CP.to_vec(),
            Self::CpH => CPH.to_vec(),
            Self::CpHEquiv => CPH_EQUIV.to_vec(),
            Self::Quaternion => {
                let mut w = vec![0.0; 64];
                for &(i, j, k, v) in &QUATERNION_TERMS {
                    w[(i * 4 + j) * 4 + k] = v;
                }
                w
            }
            Self::Uniform => vec![1.0; n_e * n_e * n_r],
            Self::Custom { omega } => omega.clone(),
            Self::Learnable { restriction, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0, LEARNABLE_INIT_STD).expect("valid std");
                let raw = (0..n_e * n_e * n_r).map(|_| normal.sample(&mut rng)).collect();
                return WeightVector::learnable(n_e, n_r, *restriction, raw);
            }
        };
        WeightVector::fixed(n_e, n_r, omega)
    }
}

/// Returns the fixed weight vector of a named preset in its canonical
/// layout: the 8-term two-embedding layout for the two-embedding family
/// (DistMult included), 64 terms for the quaternion model.
pub fn preset_weight_vector(name: &str) -> Result<WeightVector> {
    let preset: Preset = name.parse()?;
    let (n_e, n_r) = match preset {
        Preset::Quaternion => (4, 4),
        _ => (2, 2),
    };
    preset.weight_vector(n_e, n_r, 0)
}

/// Raw parameters and restriction of a learnable weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnableWeights {
    pub restriction: RestrictionKind,
    pub raw: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Term {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub w: f64,
}

/// ω over `[n_e] × [n_e] × [n_r]`, fixed or learnable.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    n_e: usize,
    n_r: usize,
    omega: Vec<f64>,
    learnable: Option<LearnableWeights>,
    terms: Vec<Term>,
}

impl WeightVector {
    pub fn fixed(n_e: usize, n_r: usize, omega: Vec<f64>) -> Result<Self> {
        check_len(n_e, n_r, omega.len())?;
        if let Some(bad) = omega.iter().find(|w| !w.is_finite()) {
            return Err(Error::Config(format!("non-finite weight {bad}")));
        }
        let mut w = Self {
            n_e,
            n_r,
            omega,
            learnable: None,
            terms: Vec::new(),
        };
        w.rebuild_terms();
        Ok(w)
    }

    pub fn learnable(
        n_e: usize,
        n_r: usize,
        restriction: RestrictionKind,
        raw: Vec<f64>,
    ) -> Result<Self> {
        check_len(n_e, n_r, raw.len())?;
        let mut w = Self {
            n_e,
            n_r,
            omega: restrict(&raw, restriction),
            learnable: Some(LearnableWeights { restriction, raw }),
            terms: Vec::new(),
        };
        w.rebuild_terms();
        Ok(w)
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_e + j) * self.n_r + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.omega[self.index(i, j, k)]
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn is_learnable(&self) -> bool {
        self.learnable.is_some()
    }

    pub fn learnable_params(&self) -> Option<&LearnableWeights> {
        self.learnable.as_ref()
    }

    /// Replaces the raw parameters and recomputes ω. No-op on fixed vectors.
    pub fn set_raw(&mut self, raw: &[f64]) {
        if let Some(l) = self.learnable.as_mut() {
            l.raw.copy_from_slice(raw);
            self.omega = restrict(&l.raw, l.restriction);
            self.rebuild_terms();
        }
    }

    /// Mutable access to raw parameters; call [`Self::refresh`] afterwards.
    pub(crate) fn raw_mut(&mut self) -> Option<&mut [f64]> {
        self.learnable.as_mut().map(|l| l.raw.as_mut_slice())
    }

    /// Recomputes ω from the raw parameters of a learnable vector.
    pub fn refresh(&mut self) {
        if let Some(l) = self.learnable.as_ref() {
            self.omega = restrict(&l.raw, l.restriction);
            self.rebuild_terms();
        }
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of terms with a nonzero weight.
    pub fn nonzero_count(&self) -> usize {
        self.terms.len()
    }

    fn rebuild_terms(&mut self) {
        let (n_e, n_r) = (self.n_e, self.n_r);
        self.terms.clear();
        for i in 0..n_e {
            for j in 0..n_e {
                for k in 0..n_r {
                    let w = self.omega[(i * n_e + j) * n_r + k];
                    if w != 0.0 {
                        self.terms.push(Term { i, j, k, w });
                    }
                }
            }
        }
    }
}

fn check_len(n_e: usize, n_r: usize, len: usize) -> Result<()> {
    if n_e == 0 || n_r == 0 {
        return Err(Error::Config("n_e and n_r must be positive".into()));
    }
    if len != n_e * n_e * n_r {
        return Err(Error::Config(format!(
            "weight vector has {len} entries, expected n_e·n_e·n_r = {}",
            n_e * n_e * n_r
        )));
    }
    Ok(())
}
