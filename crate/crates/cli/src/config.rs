use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use caserec_core::{Error, Result};
use serde::Deserialize;

/// A run definition: the corpus, global knobs, and the method list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Only the first N tokens of each document feed the text methods.
    pub token_limit: Option<usize>,
    #[serde(default = "default_buckets")]
    pub n_buckets: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, rename = "method")]
    pub methods: Vec<MethodConfig>,
}

fn default_k() -> usize {
    5
}
fn default_buckets() -> usize {
    8
}
fn default_seed() -> u64 {
    1
}
fn default_workers() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One `[[method]]` block. Which optional knobs apply depends on the family;
/// setting one that does not fit is a config error, not a silent no-op.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
    pub family: String,
    pub dim: Option<usize>,
    pub window: Option<usize>,
    pub negatives: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub min_count: Option<usize>,
    pub subsample: Option<f64>,
    pub max_features: Option<usize>,
    pub token_limit: Option<usize>,
    pub walks_per_node: Option<usize>,
    pub walk_length: Option<usize>,
    pub num_scales: Option<usize>,
    pub levels: Option<usize>,
    pub nmf_iterations: Option<usize>,
    pub burn_in_epochs: Option<usize>,
    pub burn_in_factor: Option<f64>,
    /// Poincare retrieval metric: "cosine" (default) or "hyperbolic".
    pub distance: Option<String>,
    pub path: Option<PathBuf>,
    pub parts: Option<Vec<String>>,
    pub normalize_parts: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Tfidf,
    SgnsAvg,
    PvDbow,
    Deepwalk,
    Walklets,
    Boostne,
    Poincare,
    Import,
    Concat,
    Sum,
    Random,
}

pub const FAMILY_NAMES: &[(&str, Family)] = &[
    ("tfidf", Family::Tfidf),
    ("sgns-avg", Family::SgnsAvg),
    ("pv-dbow", Family::PvDbow),
    ("deepwalk", Family::Deepwalk),
    ("walklets", Family::Walklets),
    ("boostne", Family::Boostne),
    ("poincare", Family::Poincare),
    ("import", Family::Import),
    ("concat", Family::Concat),
    ("sum", Family::Sum),
    ("random", Family::Random),
];

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        FAMILY_NAMES
            .iter()
            .find(|(name, _)| *name == s)
            .map(|&(_, f)| f)
            .ok_or_else(|| {
                let known: Vec<&str> = FAMILY_NAMES.iter().map(|&(n, _)| n).collect();
                Error::InvalidParameter(format!(
                    "unknown family {s:?}; expected one of {known:?}"
                ))
            })
    }

    /// Families with a training step that produces a `.vec` file.
    pub fn trainable(self) -> bool {
        matches!(
            self,
            Family::SgnsAvg
                | Family::PvDbow
                | Family::Deepwalk
                | Family::Walklets
                | Family::Boostne
                | Family::Poincare
        )
    }

    /// Families whose evaluation yields dense per-document vectors, i.e. the
    /// ones a hybrid can combine.
    pub fn dense(self) -> bool {
        self.trainable() || self == Family::Import
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = FAMILY_NAMES
            .iter()
            .find(|&&(_, fam)| fam == *self)
            .map(|&(n, _)| n)
            .expect("every family is named");
        f.write_str(name)
    }
}

impl MethodConfig {
    pub fn family(&self) -> Result<Family> {
        Family::parse(&self.family)
    }

    /// Checks that every set knob belongs to the family and required ones are
    /// present.
    fn validate(&self) -> Result<Family> {
        let family = self.family()?;
        let mut set: Vec<&str> = Vec::new();
        macro_rules! collect {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { set.push(stringify!($field)); })*
            };
        }
        collect!(
            dim,
            window,
            negatives,
            epochs,
            learning_rate,
            min_count,
            subsample,
            max_features,
            token_limit,
            walks_per_node,
            walk_length,
            num_scales,
            levels,
            nmf_iterations,
            burn_in_epochs,
            burn_in_factor,
            distance,
            path,
            parts,
            normalize_parts
        );
        let allowed: &[&str] = match family {
            Family::Tfidf => &["max_features"],
            Family::SgnsAvg => &[
                "dim",
                "window",
                "negatives",
                "epochs",
                "learning_rate",
                "min_count",
                "subsample",
                "token_limit",
            ],
            Family::PvDbow => &[
                "dim",
                "negatives",
                "epochs",
                "learning_rate",
                "min_count",
                "subsample",
            ],
            Family::Deepwalk => &[
                "dim",
                "walks_per_node",
                "walk_length",
                "window",
                "negatives",
                "epochs",
                "learning_rate",
            ],
            Family::Walklets => &[
                "dim",
                "num_scales",
                "walks_per_node",
                "walk_length",
                "window",
                "negatives",
                "epochs",
                "learning_rate",
            ],
            Family::Boostne => &["dim", "levels", "nmf_iterations"],
            Family::Poincare => &[
                "dim",
                "epochs",
                "negatives",
                "learning_rate",
                "burn_in_epochs",
                "burn_in_factor",
                "distance",
            ],
            Family::Import => &["path"],
            Family::Concat => &["parts", "normalize_parts"],
            Family::Sum => &["parts"],
            Family::Random => &[],
        };
        for knob in &set {
            if !allowed.contains(knob) {
                return Err(Error::InvalidParameter(format!(
                    "method {:?}: parameter {knob:?} does not apply to family {family}",
                    self.name
                )));
            }
        }
        match family {
            Family::Import if self.path.is_none() => Err(Error::InvalidParameter(format!(
                "method {:?}: family import requires `path`",
                self.name
            ))),
            Family::Concat | Family::Sum
                if self.parts.as_ref().map_or(0, Vec::len) < 2 =>
            {
                Err(Error::InvalidParameter(format!(
                    "method {:?}: family {family} requires `parts` with at least two entries",
                    self.name
                )))
            }
            Family::Poincare
                if self
                    .distance
                    .as_deref()
                    .is_some_and(|d| d != "cosine" && d != "hyperbolic") =>
            {
                Err(Error::InvalidParameter(format!(
                    "method {:?}: distance must be \"cosine\" or \"hyperbolic\"",
                    self.name
                )))
            }
            _ => Ok(family),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| {
            let line = e.span().map_or(0, |s| {
                let upto = s.start.min(text.len());
                text.as_bytes()[..upto].iter().filter(|&&b| b == b'\n').count() + 1
            });
            Error::parse(path, line, e.message())
        })?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if self.n_buckets == 0 {
            return Err(Error::InvalidParameter("n_buckets must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        let mut seen: Vec<&str> = Vec::new();
        for method in &self.methods {
            if seen.contains(&method.name.as_str()) {
                return Err(Error::DuplicateId(method.name.clone()));
            }
            seen.push(&method.name);
            method.validate()?;
            if let Some(parts) = &method.parts {
                for part in parts {
                    let target = self
                        .methods
                        .iter()
                        .find(|m| &m.name == part)
                        .ok_or_else(|| {
                            Error::InvalidParameter(format!(
                                "method {:?}: part {part:?} is not a configured method",
                                method.name
                            ))
                        })?;
                    if !target.family()?.dense() {
                        return Err(Error::InvalidParameter(format!(
                            "method {:?}: part {part:?} (family {}) has no dense vectors to combine",
                            method.name, target.family
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn method(&self, name: &str) -> Result<&MethodConfig> {
        self.methods
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("method {name:?} is not configured")))
    }

    /// Methods restricted to `names` when given, in config order.
    pub fn selected(&self, names: &[String]) -> Result<Vec<&MethodConfig>> {
        if names.is_empty() {
            return Ok(self.methods.iter().collect());
        }
        for name in names {
            self.method(name)?;
        }
        Ok(self
            .methods
            .iter()
            .filter(|m| names.contains(&m.name))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidParameter(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("corpus = \"docs.jsonl\"\n").unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.n_buckets, 8);
        assert_eq!(c.seed, 1);
        assert_eq!(c.workers, 1);
        assert_eq!(c.out, PathBuf::from("out"));
        assert!(c.methods.is_empty());
    }

    #[test]
    fn unknown_family_is_rejected() {
        let err = parse(
            "corpus = \"x\"\n[[method]]\nname = \"m\"\nfamily = \"word2vec\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("word2vec"), "{err}");
    }

    #[test]
    fn misplaced_parameter_is_rejected() {
        let err = parse(
            "corpus = \"x\"\n[[method]]\nname = \"m\"\nfamily = \"tfidf\"\nwindow = 5\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("window"), "{err}");
        assert!(err.to_string().contains("tfidf"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_by_serde() {
        let err = parse("corpus = \"x\"\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn hybrid_parts_must_exist_and_be_dense() {
        let missing = parse(
            "corpus = \"x\"\n[[method]]\nname = \"h\"\nfamily = \"concat\"\nparts = [\"a\", \"b\"]\n",
        )
        .unwrap_err();
        assert!(missing.to_string().contains("\"a\""), "{missing}");

        let sparse_part = parse(
            "corpus = \"x\"\n\
             [[method]]\nname = \"t\"\nfamily = \"tfidf\"\n\
             [[method]]\nname = \"d\"\nfamily = \"deepwalk\"\n\
             [[method]]\nname = \"h\"\nfamily = \"sum\"\nparts = [\"t\", \"d\"]\n",
        )
        .unwrap_err();
        assert!(sparse_part.to_string().contains("dense"), "{sparse_part}");
    }

    #[test]
    fn duplicate_method_names_are_rejected()  {
        let err = parse(
            "corpus = \"x\"\n\
             [[method]]\nname = \"m\"\nfamily = \"tfidf\"\n\
             [[method]]\nname = \"m\"\nfamily = \"random\"\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn poincare_distance_values_are_checked() {
        let ok = parse(
            "corpus = \"x\"\n[[method]]\nname = \"p\"\nfamily = \"poincare\"\ndistance = \"hyperbolic\"\n",
        );
        assert!(ok.is_ok());
        let err = parse(
            "corpus = \"x\"\n[[method]]\nname = \"p\"\nfamily = \"poincare\"\ndistance = \"euclid\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("hyperbolic"), "{err}");
    }

    #[test]
    fn selection_preserves_config_order() {
        let c = parse(
            "corpus = \"x\"\n\
             [[method]]\nname = \"b\"\nfamily = \"tfidf\"\n\
             [[method]]\nname = \"a\"\nfamily = \"random\"\n",
        )
        .unwrap();
        let all: Vec<&str> = c.selected(&[]).unwrap().iter().map(|m| m.name.as_str()).collect();
        assert_eq!(all, ["b", "a"]);
        let picked = c
            .selected(&["a".to_string(), "b".to_string()])
            .unwrap()
            .iter()
            .map(|m| m.name.as_str())
            .collect::<Vec<_>>();
        assert_eq!(picked, ["b", "a"]);
        assert!(c.selected(&["zzz".to_string()]).is_err());
    }
}
