//! Experiment configuration: a JSON file plus command-line overrides,
//! validated into a [`ResolvedConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_bigint::BigInt;
use ramstat_core::arith::DEFAULT_SEED;
use ramstat_core::cover::{make_quadratic_cover, CoverSpec, CoverSpecJson, JsonInt};
use ramstat_core::poly::IntPoly;
use ramstat_core::ramify::{CountingMode, SmallPrimePolicy};
use ramstat_core::stats::FilterTag;
use serde::{Deserialize, Serialize};

use crate::sweep::DEFAULT_CHUNK_SIZE;

pub const DEFAULT_K_MAX: u32 = 8;
pub const WORKERS_ENV: &str = "RAMSTAT_WORKERS";

/// A configuration problem tied to one field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Ram,
    Sweep,
    Moments,
    Cdf,
    Density,
    NormalOrder,
    Lemma5Audit,
    Lemma6,
    Halberstam,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Ram,
        Experiment::Sweep,
        Experiment::Moments,
        Experiment::Cdf,
        Experiment::Density,
        Experiment::NormalOrder,
        Experiment::Lemma5Audit,
        Experiment::Lemma6,
        Experiment::Halberstam,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Ram => "ram",
            Experiment::Sweep => "sweep",
            Experiment::Moments => "moments",
            Experiment::Cdf => "cdf",
            Experiment::Density => "density",
            Experiment::NormalOrder => "normal-order",
            Experiment::Lemma5Audit => "lemma5-audit",
            Experiment::Lemma6 => "lemma6",
            Experiment::Halberstam => "halberstam",
        }
    }

    /// Needs the normalization r·ln ln N, hence N >= 3.
    fn needs_normalization(&self) -> bool {
        matches!(
            self,
            Experiment::Moments | Experiment::Cdf | Experiment::Halberstam
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?}; expected csv or json")),
        }
    }
}

/// On-disk configuration; every field optional so command-line flags can
/// fill the gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverSpecJson>,
    /// Shorthand for the cover Q(T, sqrt f(T)).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_f: Option<Vec<JsonInt>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    /// Single point for the `ram` experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CountingMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_prime_policy: Option<SmallPrimePolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiments: Option<Vec<Experiment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_size: Option<u64>,
    /// Normal-order band width ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Threshold C of the density experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_c: Option<f64>,
    /// Index a of the m_a moments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma6_a: Option<u32>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            // serde_json names the offending field in unknown-field and
            // type errors; keep its message intact.
            ConfigError::new("<file>", e.to_string())
        })
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: ExperimentConfig) -> ExperimentConfig {
        let (cover, quadratic_f) = if other.cover.is_some() || other.quadratic_f.is_some() {
            (other.cover, other.quadratic_f)
        } else {
            (self.cover, self.quadratic_f)
        };
        macro_rules! pick {
            ($($f:ident),*) => {
                ExperimentConfig { cover, quadratic_f, $($f: other.$f.or(self.$f)),* }
            };
        }
        pick!(
            n_max,
            n,
            k_max,
            mode,
            small_prime_policy,
            filter,
            experiments,
            seed,
            workers,
            output,
            out_path,
            chunk_size,
            eps,
            density_c,
            lemma6_a
        )
    }

    /// Validates and fills defaults. `env_workers` is the value of
    /// `RAMSTAT_WORKERS`, used only when no worker count was given.
    pub fn resolve(&self, env_workers: Option<&str>) -> Result<ResolvedConfig, ConfigError> {
        let spec = match (&self.cover, &self.quadratic_f) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "cover",
                    "give either `cover` or `quadratic_f`, not both",
                ))
            }
            (None, None) => {
                return Err(ConfigError::new(
                    "cover",
                    "missing; supply a cover JSON or the quadratic_f shorthand",
                ))
            }
            (Some(cover), None) => cover
                .build()
                .map_err(|e| ConfigError::new("cover", e.to_string()))?,
            (None, Some(f)) => {
                let poly = IntPoly::new(f.iter().map(|c| c.0.clone()).collect());
                make_quadratic_cover(poly)
                    .map_err(|e| ConfigError::new("quadratic_f", e.to_string()))?
            }
        };
        let quadratic = spec.is_quadratic();

        let k_max = self.k_max.unwrap_or(DEFAULT_K_MAX);
        if k_max == 0 {
            return Err(ConfigError::new("k_max", "must be at least 1"));
        }
        let mode = self.mode.unwrap_or(if quadratic {
            CountingMode::Oracle
        } else {
            CountingMode::Criterion
        });
        if mode == CountingMode::Oracle && !quadratic {
            return Err(ConfigError::new(
                "mode",
                "oracle mode requires the quadratic family",
            ));
        }
        if mode == CountingMode::Superset && spec.disc_poly().is_none() {
            return Err(ConfigError::new(
                "mode",
                "superset mode requires cover.disc_poly",
            ));
        }
        let policy = self
            .small_prime_policy
            .unwrap_or_else(|| SmallPrimePolicy::default_for(&spec));
        if policy == SmallPrimePolicy::Oracle && !quadratic {
            return Err(ConfigError::new(
                "small_prime_policy",
                "policy `oracle` requires the quadratic family",
            ));
        }
        let filter = self.filter.unwrap_or_default();
        if filter == FilterTag::Hilbert && !quadratic {
            return Err(ConfigError::new(
                "filter",
                "hilbert filter requires the quadratic family",
            ));
        }

        let experiments = self.experiments.clone().unwrap_or_default();
        if let Some(n_max) = self.n_max {
            if n_max == 0 {
                return Err(ConfigError::new("N", "must be a positive integer"));
            }
        }
        if let Some(exp) = experiments.iter().find(|e| e.needs_normalization()) {
            match self.n_max {
                Some(n) if n >= 3 => {}
                _ => {
                    return Err(ConfigError::new(
                        "N",
                        format!("experiment `{exp}` needs N >= 3"),
                    ))
                }
            }
        }
        if experiments.iter().any(|e| *e != Experiment::Ram) && self.n_max.is_none() {
            return Err(ConfigError::new("N", "missing; sweeps need an upper bound"));
        }
        if experiments.contains(&Experiment::Ram) {
            match self.n {
                Some(n) if n >= 1 => {}
                _ => return Err(ConfigError::new("n", "ram needs a positive point n")),
            }
        }

        let workers = match self.workers {
            Some(w) => w,
            None => match env_workers {
                Some(raw) => raw.trim().parse::<usize>().map_err(|_| {
                    ConfigError::new(WORKERS_ENV, format!("not a positive integer: {raw:?}"))
                })?,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        if workers == 0 {
            return Err(ConfigError::new("workers", "must be at least 1"));
        }
        let chunk_size = self.chunk_size.unwrap_or(DEFAULT_CHUNK_SIZE);
        if chunk_size == 0 {
            return Err(ConfigError::new("chunk_size", "must be at least 1"));
        }
        let eps = self.eps.unwrap_or(0.5);
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(ConfigError::new("eps", "must be a positive real"));
        }
        let density_c = self.density_c.unwrap_or(1.0);
        if !density_c.is_finite() {
            return Err(ConfigError::new("density_c", "must be finite"));
        }
        let lemma6_a = self.lemma6_a.unwrap_or(2);
        if lemma6_a < 2 {
            return Err(ConfigError::new(
                "lemma6_a",
                "must be at least 2; for a = 1 the m_a moments are those of ω and grow with N",
            ));
        }

        Ok(ResolvedConfig {
            spec,
            n_max: self.n_max,
            n: self.n,
            k_max,
            mode,
            policy,
            filter,
            experiments,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            workers,
            format: self.output.unwrap_or_default(),
            out_path: self.out_path.clone(),
            chunk_size,
            eps,
            density_c,
            lemma6_a,
            source: self.clone(),
        })
    }
}

/// Parses "0,1" or "-2, 0, 0, 1" (ascending coefficients).
pub fn parse_coeff_list(text: &str) -> Result<Vec<JsonInt>, String> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<BigInt>()
                .map(JsonInt)
                .map_err(|_| format!("not an integer: {:?}", part.trim()))
        })
        .collect()
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub spec: CoverSpec,
    pub n_max: Option<u64>,
    pub n: Option<u64>,
    pub k_max: u32,
    pub mode: CountingMode,
    pub policy: SmallPrimePolicy,
    pub filter: FilterTag,
    pub experiments: Vec<Experiment>,
    pub seed: u64,
    pub workers: usize,
    pub format: OutputFormat,
    pub out_path: Option<PathBuf>,
    pub chunk_size: u64,
    pub eps: f64,
    pub density_c: f64,
    pub lemma6_a: u32,
    /// The configuration as given, for the manifest.
    pub source: ExperimentConfig,
}

impl ResolvedConfig {
    /// The effective configuration written back out (cover in full form).
    pub fn echo(&self) -> ExperimentConfig {
        let cover = CoverSpecJson::from(&self.spec);
        ExperimentConfig {
            cover: Some(cover),
            quadratic_f: None,
            n_max: self.n_max,
            n: self.n,
            k_max: Some(self.k_max),
            mode: Some(self.mode),
            small_prime_policy: Some(self.policy),
            filter: Some(self.filter),
            experiments: Some(self.experiments.clone()),
            seed: Some(self.seed),
            workers: Some(self.workers),
            output: Some(self.format),
            out_path: self.out_path.clone(),
            chunk_size: Some(self.chunk_size),
            eps: Some(self.eps),
            density_c: Some(self.density_c),
            lemma6_a: Some(self.lemma6_a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(f: &str) -> ExperimentConfig {
        ExperimentConfig {
            quadratic_f: Some(parse_coeff_list(f).unwrap()),
            ..Default::default()
        }
    }

    #[test]
    fn parses_file_and_rejects_unknown_fields() {
        let cfg = ExperimentConfig::from_json(
            r#"{"quadratic_f":[0,1],"N":1000,"experiments":["moments","normal-order"],"mode":"oracle"}"#,
        )
        .unwrap();
        let resolved = cfg.resolve(Some("3")).unwrap();
        assert_eq!(resolved.n_max, Some(1000));
        assert_eq!(resolved.workers, 3);
        assert_eq!(
            resolved.experiments,
            vec![Experiment::Moments, Experiment::NormalOrder]
        );

        let err = ExperimentConfig::from_json(r#"{"quadratic_f":[0,1],"Nmax":5}"#).unwrap_err();
        assert!(err.message.contains("Nmax"), "{err}");
    }

    #[test]
    fn field_level_errors() {
        let mut cfg = quad("0,1");
        cfg.experiments = Some(vec![Experiment::Moments]);
        cfg.n_max = Some(2);
        assert_eq!(cfg.resolve(None).unwrap_err().field, "N");

        let mut generic =
            ExperimentConfig::from_json(r#"{"cover":{"orbits":[{"coeffs":[0,1],"e":3}]},"N":100}"#)
                .unwrap();
        generic.mode = Some(CountingMode::Oracle);
        assert_eq!(generic.resolve(None).unwrap_err().field, "mode");
        generic.mode = None;
        generic.filter = Some(FilterTag::Hilbert);
        assert_eq!(generic.resolve(None).unwrap_err().field, "filter");

        let mut a1 = quad("0,1");
        a1.lemma6_a = Some(1);
        assert_eq!(a1.resolve(None).unwrap_err().field, "lemma6_a");

        assert_eq!(
            quad("0,1").resolve(Some("x")).unwrap_err().field,
            WORKERS_ENV
        );
        assert_eq!(quad("0,0").resolve(None).unwrap_err().field, "quadratic_f");
    }

    #[test]
    fn overlay_prefers_flags() {
        let file = ExperimentConfig {
            n_max: Some(10),
            workers: Some(2),
            ..quad("0,1")
        };
        let flags = ExperimentConfig {
            n_max: Some(20),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.n_max, Some(20));
        assert_eq!(merged.workers, Some(2));
        assert!(merged.quadratic_f.is_some());
    }

    #[test]
    fn echo_round_trips() {
        let resolved = quad("1,0,1").resolve(None).unwrap();
        let text = serde_json::to_string(&resolved.echo()).unwrap();
        let again = ExperimentConfig::from_json(&text)
            .unwrap()
            .resolve(None)
            .unwrap();
        assert_eq!(again.spec.product_poly(), resolved.spec.product_poly());
        assert!(again.spec.is_quadratic());
    }

    #[test]
    fn coefficient_lists() {
        assert!(parse_coeff_list("-2, 0,0,1").is_ok());
        assert!(parse_coeff_list("1,x").is_err());
    }
}
