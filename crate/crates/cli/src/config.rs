//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment. Sweep axes are comma-separated
//! lists under `sweep.<axis>`; `sweep.ab` takes `a/b` pairs.

use std::path::PathBuf;

use ranger_core::correlation::{DEFAULT_MIN_BASELINE, DEFAULT_THRESHOLD_K};
use ranger_core::engine::RunConfig;
use ranger_core::quantum::{BellPairSpec, BiasModel};
use ranger_core::scheme::{SamplingMode, SchemeConfig, SchemeVariant, Window};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Seed used when neither flag, config nor environment provides one.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            csv: true,
            json: true,
            svg: false,
        }
    }
}

impl Formats {
    pub fn all() -> Self {
        Self {
            csv: true,
            json: true,
            svg: true,
        }
    }

    fn render(&self) -> String {
        let mut v = Vec::new();
        if self.csv {
            v.push("csv");
        }
        if self.json {
            v.push("json");
        }
        if self.svg {
            v.push("svg");
        }
        v.join(",")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepAxis {
    A(Vec<f64>),
    B(Vec<f64>),
    /// Paired `(a, b)` values swept together.
    Ab(Vec<(f64, f64)>),
    Pairs(Vec<u64>),
    Reflectivity(Vec<f64>),
    HitIndex(Vec<usize>),
}

impl SweepAxis {
    pub fn len(&self) -> usize {
        match self {
            SweepAxis::A(v) | SweepAxis::B(v) | SweepAxis::Reflectivity(v) => v.len(),
            SweepAxis::Ab(v) => v.len(),
            SweepAxis::Pairs(v) => v.len(),
            SweepAxis::HitIndex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::A(_) => "a",
            SweepAxis::B(_) => "b",
            SweepAxis::Ab(_) => "ab",
            SweepAxis::Pairs(_) => "pairs",
            SweepAxis::Reflectivity(_) => "reflectivity",
            SweepAxis::HitIndex(_) => "hit_index",
        }
    }

    fn render(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            SweepAxis::A(v) | SweepAxis::B(v) | SweepAxis::Reflectivity(v) => join(v),
            SweepAxis::Ab(v) => v.iter().map(|(a, b)| format!("{a}/{b}")).collect::<Vec<_>>().join(","),
            SweepAxis::Pairs(v) => join(v),
            SweepAxis::HitIndex(v) => join(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub k: f64,
    pub min_baseline: usize,
    pub out: Option<PathBuf>,
    pub formats: Formats,
    pub sweep: Vec<SweepAxis>,
    /// Whether the config text itself named a seed.
    pub seed_in_config: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            k: DEFAULT_THRESHOLD_K,
            min_baseline: DEFAULT_MIN_BASELINE,
            out: None,
            formats: Formats::default(),
            sweep: Vec::new(),
            seed_in_config: false,
        }
    }
}

fn invalid(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("invalid {key}: {reason}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse {v:?}")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn boolean(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(invalid(key, format!("expected true/false, got {other:?}"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        let mut a = 1.0;
        let mut b = 0.0;
        let mut phase = 0.0;

        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!("line {}: expected key = value", n + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            let run = &mut cfg.run;
            match key {
                "pairs" => run.pairs = num(key, value)?,
                "locations" => run.scheme.locations = num(key, value)?,
                "scheme" => {
                    run.scheme.variant =
                        SchemeVariant::parse(value).ok_or_else(|| invalid(key, format!("unknown scheme {value:?}")))?
                }
                "reflectivity" => run.scheme.reflectivity = num(key, value)?,
                "measure_probability" => run.scheme.measure_probability = num(key, value)?,
                "segment_path" => run.scheme.segment_path = num(key, value)?,
                "window" => {
                    run.scheme.window = match value {
                        "none" | "" => None,
                        _ => {
                            let bounds: Vec<usize> = list(key, value)?;
                            let [lo, hi] = bounds[..] else {
                                return Err(invalid(key, "expected lo,hi"));
                            };
                            Some(Window { lo, hi })
                        }
                    }
                }
                "a" => a = num(key, value)?,
                "b" => b = num(key, value)?,
                "phase" => phase = num(key, value)?,
                "hit_index" => {
                    run.hit_index = match value {
                        "none" => None,
                        _ => Some(num(key, value)?),
                    }
                }
                "penetration_width" => run.penetration_width = num(key, value)?,
                "seed" => {
                    run.seed = num(key, value)?;
                    cfg.seed_in_config = true;
                }
                "sampling_mode" => {
                    run.sampling_mode =
                        SamplingMode::parse(value).ok_or_else(|| invalid(key, format!("unknown mode {value:?}")))?
                }
                "log_events" => run.log_events = boolean(key, value)?,
                "k" => cfg.k = num(key, value)?,
                "min_baseline" => cfg.min_baseline = num(key, value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                "formats" => {
                    let mut f = Formats {
                        csv: false,
                        json: false,
                        svg: false,
                    };
                    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        match item {
                            "csv" => f.csv = true,
                            "json" => f.json = true,
                            "svg" => f.svg = true,
                            other => return Err(invalid(key, format!("unknown format {other:?}"))),
                        }
                    }
                    if !(f.csv || f.json || f.svg) {
                        return Err(invalid(key, "need at least one of csv, json, svg"));
                    }
                    cfg.formats = f;
                }
                _ if key.starts_with("sweep.") => {
                    let axis = match &key["sweep.".len()..] {
                        "a" => SweepAxis::A(list(key, value)?),
                        "b" => SweepAxis::B(list(key, value)?),
                        "pairs" => SweepAxis::Pairs(list(key, value)?),
                        "reflectivity" => SweepAxis::Reflectivity(list(key, value)?),
                        "hit_index" => SweepAxis::HitIndex(list(key, value)?),
                        "ab" => SweepAxis::Ab(
                            value
                                .split(',')
                                .map(str::trim)
                                .filter(|s| !s.is_empty())
                                .map(|pair| {
                                    let (x, y) =
                                        pair.split_once('/').ok_or_else(|| invalid(key, "expected a/b pairs"))?;
                                    Ok((num(key, x)?, num(key, y)?))
                                })
                                .collect::<Result<_, CliError>>()?,
                        ),
                        other => return Err(invalid(key, format!("unknown sweep axis {other:?}"))),
                    };
                    if axis.is_empty() {
                        return Err(invalid(key, "sweep axis has no values"));
                    }
                    cfg.sweep.push(axis);
                }
                _ => return Err(CliError::Validation(format!("unknown key {key:?}"))),
            }
        }

        cfg.run.bias = bias(a, b)?;
        cfg.run.source = BellPairSpec::new(phase);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.run.validate().map_err(CliError::from)?;
        if self.k.is_nan() || self.k <= 0.0 {
            return Err(invalid("k", "must be positive"));
        }
        if self.min_baseline == 0 {
            return Err(invalid("min_baseline", "must be at least 1"));
        }
        Ok(())
    }

    /// Canonical text form: every key in fixed order, seed resolved.
    pub fn to_text(&self) -> String {
        let run = &self.run;
        let s = &run.scheme;
        let mut lines = vec![
            format!("pairs = {}", run.pairs),
            format!("scheme = {}", s.variant.name()),
            format!("locations = {}", s.locations),
            format!("reflectivity = {}", s.reflectivity),
            format!("measure_probability = {}", s.measure_probability),
            format!("segment_path = {}", s.segment_path),
            format!(
                "window = {}",
                s.window.map_or("none".to_string(), |w| format!("{},{}", w.lo, w.hi))
            ),
            format!("a = {}", run.bias.a()),
            format!("b = {}", run.bias.b()),
            format!("phase = {}", run.source.phase),
            format!(
                "hit_index = {}",
                run.hit_index.map_or("none".to_string(), |h| h.to_string())
            ),
            format!("penetration_width = {}", run.penetration_width),
            format!("seed = {}", run.seed),
            format!("sampling_mode = {}", run.sampling_mode.name()),
            format!("log_events = {}", run.log_events),
            format!("k = {}", self.k),
            format!("min_baseline = {}", self.min_baseline),
            format!("formats = {}", self.formats.render()),
        ];
        for axis in &self.sweep {
            lines.push(format!("sweep.{} = {}", axis.key(), axis.render()));
        }
        lines.join("\n") + "\n"
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_text().as_bytes()))
    }

    /// Applies the seed precedence: explicit flag, then the config file,
    /// then `RANGER_SEED`, then [`DEFAULT_SEED`].
    pub fn resolve_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<(), CliError> {
        if let Some(seed) = flag {
            self.run.seed = seed;
        } else if !self.seed_in_config {
            self.run.seed = match env {
                Some(v) => num("RANGER_SEED", v)?,
                None => DEFAULT_SEED,
            };
        }
        Ok(())
    }

    /// Returns a copy with one sweep point applied.
    pub fn with_point(&self, point: &[SweepValue]) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        cfg.sweep.clear();
        let (mut a, mut b) = (cfg.run.bias.a(), cfg.run.bias.b());
        for v in point {
            match *v {
                SweepValue::A(x) => a = x,
                SweepValue::B(x) => b = x,
                SweepValue::Ab(x, y) => (a, b) = (x, y),
                SweepValue::Pairs(n) => cfg.run.pairs = n,
                SweepValue::Reflectivity(r) => cfg.run.scheme.reflectivity = r,
                SweepValue::HitIndex(h) => cfg.run.hit_index = Some(h),
            }
        }
        cfg.run.bias = bias(a, b)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cartesian product of all sweep axes, in axis declaration order.
    pub fn sweep_points(&self) -> Vec<Vec<SweepValue>> {
        let mut points: Vec<Vec<SweepValue>> = vec![Vec::new()];
        for axis in &self.sweep {
            let values: Vec<SweepValue> = match axis {
                SweepAxis::A(v) => v.iter().map(|&x| SweepValue::A(x)).collect(),
                SweepAxis::B(v) => v.iter().map(|&x| SweepValue::B(x)).collect(),
                SweepAxis::Ab(v) => v.iter().map(|&(x, y)| SweepValue::Ab(x, y)).collect(),
                SweepAxis::Pairs(v) => v.iter().map(|&x| SweepValue::Pairs(x)).collect(),
                SweepAxis::Reflectivity(v) => v.iter().map(|&x| SweepValue::Reflectivity(x)).collect(),
                SweepAxis::HitIndex(v) => v.iter().map(|&x| SweepValue::HitIndex(x)).collect(),
            };
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepValue {
    A(f64),
    B(f64),
    Ab(f64, f64),
    Pairs(u64),
    Reflectivity(f64),
    HitIndex(usize),
}

impl SweepValue {
    pub fn key(&self) -> &'static str {
        match self {
            SweepValue::A(_) => "a",
            SweepValue::B(_) => "b",
            SweepValue::Ab(..) => "ab",
            SweepValue::Pairs(_) => "pairs",
            SweepValue::Reflectivity(_) => "reflectivity",
            SweepValue::HitIndex(_) => "hit_index",
        }
    }

    pub fn render(&self) -> String {
        match *self {
            SweepValue::A(x) | SweepValue::B(x) | SweepValue::Reflectivity(x) => x.to_string(),
            SweepValue::Ab(x, y) => format!("{x}/{y}"),
            SweepValue::Pairs(n) => n.to_string(),
            SweepValue::HitIndex(h) => h.to_string(),
        }
    }
}

fn bias(a: f64, b: f64) -> Result<BiasModel, CliError> {
    BiasModel::new(a, b).map_err(CliError::from)
}

/// The configuration the Fig.-4 style preset starts from.
pub fn fig4_preset(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        run: RunConfig {
            pairs: 1_000_000,
            scheme: SchemeConfig::chain(1000, 0.001).with_segment_path(0.1),
            hit_index: Some(600),
            bias: BiasModel::new(1.0, 0.0).expect("valid"),
            seed,
            ..RunConfig::default()
        },
        formats: Formats::all(),
        seed_in_config: true,
        ..ExperimentConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# Fig.-4 style run
pairs = 20000
locations = 100
reflectivity = 0.01
hit_index = 60   # inclusive
a = 0.9
b = 0.1
seed = 7
sampling_mode = uniform_location
formats = csv, json, svg
window = 10,100
";

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.run.pairs, 20_000);
        assert_eq!(cfg.run.scheme.locations, 100);
        assert_eq!(cfg.run.hit_index, Some(60));
        assert_eq!(cfg.run.bias.a(), 0.9);
        assert_eq!(cfg.run.sampling_mode, SamplingMode::UniformLocation);
        assert_eq!(cfg.run.scheme.window, Some(Window { lo: 10, hi: 100 }));
        assert!(cfg.formats.svg);
        assert!(cfg.seed_in_config);
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg.to_text(), again.to_text());
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn rejects_excess_bias_naming_keys() {
        let err = ExperimentConfig::parse("a = 0.8\nb = 0.4\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("a, b"), "{msg}");
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        for text in [
            "bogus = 1",
            "pairs = many",
            "pairs",
            "formats = ",
            "sweep.a = ",
            "sweep.zz = 1",
            "window = 5",
            "hit_index = 2000",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn seed_precedence() {
        let mut cfg = ExperimentConfig::parse("seed = 5").unwrap();
        cfg.resolve_seed(None, Some("9")).unwrap();
        assert_eq!(cfg.run.seed, 5);
        cfg.resolve_seed(Some(11), Some("9")).unwrap();
        assert_eq!(cfg.run.seed, 11);

        let mut cfg = ExperimentConfig::parse("").unwrap();
        cfg.resolve_seed(None, Some("9")).unwrap();
        assert_eq!(cfg.run.seed, 9);
        let mut cfg = ExperimentConfig::parse("").unwrap();
        cfg.resolve_seed(None, None).unwrap();
        assert_eq!(cfg.run.seed, DEFAULT_SEED);
        assert!(cfg.resolve_seed(None, Some("x")).is_err());
    }

    #[test]
    fn sweep_product() {
        let cfg = ExperimentConfig::parse("sweep.ab = 0.5/0.5, 1/0\nsweep.pairs = 10,20,30").unwrap();
        let points = cfg.sweep_points();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0], vec![SweepValue::Ab(0.5, 0.5), SweepValue::Pairs(10)]);
        let p = cfg.with_point(&points[5]).unwrap();
        assert_eq!((p.run.bias.a(), p.run.bias.b(), p.run.pairs), (1.0, 0.0, 30));
        assert!(p.sweep.is_empty());
    }

    #[test]
    fn sweep_point_validation() {
        let cfg = ExperimentConfig::parse("a = 0.5\nb = 0.5\nsweep.a = 0.5, 0.7").unwrap();
        let points = cfg.sweep_points();
        assert!(cfg.with_point(&points[0]).is_ok());
        assert!(cfg.with_point(&points[1]).is_err());
    }
}
