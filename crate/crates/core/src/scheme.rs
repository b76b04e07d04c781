//! Measurement-scheme geometry: where along photon 2's path a pair is
//! measured, with what probability, and how a location maps to range.

use crate::error::{Error, Result};
use crate::stream::PairStream;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeVariant {
    /// Chain of weak asymmetric splitters, each followed by a PBS.
    ChainOfSplitters,
    /// A single PBS swept along the path, one location per block of pairs.
    MovingAnalyzer,
    /// Folded mirror cavity; each pass over the splitter is one location.
    /// Statistically identical to the splitter chain.
    FoldedCavity,
}

impl SchemeVariant {
    pub fn name(self) -> &'static str {
        match self {
            SchemeVariant::ChainOfSplitters => "chain",
            SchemeVariant::MovingAnalyzer => "moving",
            SchemeVariant::FoldedCavity => "folded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "chain" | "I" | "chain_of_splitters" => Some(SchemeVariant::ChainOfSplitters),
            "moving" | "II" | "moving_analyzer" => Some(SchemeVariant::MovingAnalyzer),
            "folded" | "III" | "folded_cavity" => Some(SchemeVariant::FoldedCavity),
            _ => None,
        }
    }

    fn is_chain(self) -> bool {
        !matches!(self, SchemeVariant::MovingAnalyzer)
    }
}

/// How detection locations are drawn for the chain variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    /// Geometric thinning: extracted at location `i` with `R (1-R)^(i-lo)`.
    #[default]
    ChainDecay,
    /// Same total detection probability, spread evenly over the locations.
    UniformLocation,
}

impl SamplingMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplingMode::ChainDecay => "chain_decay",
            SamplingMode::UniformLocation => "uniform_location",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "chain_decay" | "chain" | "decay" => Some(SamplingMode::ChainDecay),
            "uniform_location" | "uniform" => Some(SamplingMode::UniformLocation),
            _ => None,
        }
    }
}

/// Inclusive location bounds for bounded-range mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub variant: SchemeVariant,
    /// Number of measurement locations `M`.
    pub locations: usize,
    /// Splitter reflectivity `R` (chain and folded variants).
    pub reflectivity: f64,
    /// Probability that the moving analyzer measures the pair at its slot.
    pub measure_probability: f64,
    /// Meters of optical path per location index.
    pub segment_path: f64,
    pub window: Option<Window>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            variant: SchemeVariant::ChainOfSplitters,
            locations: 1000,
            reflectivity: 0.001,
            measure_probability: 1.0,
            segment_path: 0.1,
            window: None,
        }
    }
}

/// Position of one pair within the emission sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSlot {
    pub index: u64,
    pub total: u64,
}

impl SchemeConfig {
    pub fn chain(locations: usize, reflectivity: f64) -> Self {
        Self {
            locations,
            reflectivity,
            ..Self::default()
        }
    }

    pub fn moving(locations: usize, measure_probability: f64) -> Self {
        Self {
            variant: SchemeVariant::MovingAnalyzer,
            locations,
            measure_probability,
            ..Self::default()
        }
    }

    pub fn with_variant(mut self, variant: SchemeVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_segment_path(mut self, meters: f64) -> Self {
        self.segment_path = meters;
        self
    }

    pub fn with_window(mut self, lo: usize, hi: usize) -> Self {
        self.window = Some(Window { lo, hi });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.locations < 2 {
            return Err(Error::validation(
                "locations",
                format!("need at least 2, got {}", self.locations),
            ));
        }
        if self.variant.is_chain() && !(self.reflectivity > 0.0 && self.reflectivity < 1.0) {
            return Err(Error::validation(
                "reflectivity",
                format!("must lie strictly between 0 and 1, got {}", self.reflectivity),
            ));
        }
        if !(0.0..=1.0).contains(&self.measure_probability) {
            return Err(Error::validation(
                "measure_probability",
                format!("must lie in [0, 1], got {}", self.measure_probability),
            ));
        }
        if !(self.segment_path > 0.0 && self.segment_path.is_finite()) {
            return Err(Error::validation("segment_path", "must be positive"));
        }
        if let Some(w) = self.window {
            if !(1 <= w.lo && w.lo < w.hi && w.hi <= self.locations) {
                return Err(Error::validation(
                    "window",
                    format!("need 1 <= lo < hi <= {}, got [{}, {}]", self.locations, w.lo, w.hi),
                ));
            }
        }
        Ok(())
    }

    /// First and last location that carries a detector.
    pub fn active_span(&self) -> (usize, usize) {
        match self.window {
            Some(w) => (w.lo, w.hi),
            None => (1, self.locations),
        }
    }

    fn span_len(&self) -> usize {
        let (lo, hi) = self.active_span();
        hi - lo + 1
    }

    /// Location the moving analyzer occupies while pair `slot` passes.
    ///
    /// Pairs are assigned in contiguous emission-order blocks of
    /// `ceil(total / span)` pairs per location.
    pub fn active_location(&self, slot: PairSlot) -> usize {
        let (lo, _) = self.active_span();
        let span = self.span_len() as u64;
        let block = slot.total.div_ceil(span).max(1);
        lo + (slot.index / block) as usize
    }

    /// Probability that photon 2 is never extracted.
    pub fn undetected_probability(&self, slot: Option<PairSlot>) -> f64 {
        match self.variant {
            SchemeVariant::MovingAnalyzer => match slot {
                Some(_) => 1.0 - self.measure_probability,
                None => 1.0,
            },
            _ => (1.0 - self.reflectivity).powi(self.span_len() as i32),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.locations {
            return Err(Error::validation(
                "location",
                format!("index {i} outside [1, {}]", self.locations),
            ));
        }
        Ok(())
    }
}

/// Probability that a pair's photon 2 is extracted and measured at location
/// `i`. The moving analyzer needs the pair's slot to know where it stands;
/// without one it measures nothing.
pub fn detection_probability(cfg: &SchemeConfig, i: usize, slot: Option<PairSlot>) -> Result<f64> {
    cfg.check_index(i)?;
    let (lo, hi) = cfg.active_span();
    if i < lo || i > hi {
        return Ok(0.0);
    }
    Ok(match cfg.variant {
        SchemeVariant::MovingAnalyzer => match slot {
            Some(s) if cfg.active_location(s) == i => cfg.measure_probability,
            _ => 0.0,
        },
        _ => cfg.reflectivity * (1.0 - cfg.reflectivity).powi((i - lo) as i32),
    })
}

/// Precomputed inverse-CDF sampler for one scheme and sampling mode.
#[derive(Clone, Debug)]
pub struct DetectionSampler {
    variant: SchemeVariant,
    mode: SamplingMode,
    lo: usize,
    span: usize,
    ln_transmit: f64,
    detect_total: f64,
    measure_probability: f64,
    scheme: SchemeConfig,
}

impl DetectionSampler {
    pub fn new(cfg: &SchemeConfig, mode: SamplingMode) -> Self {
        let (lo, _) = cfg.active_span();
        let span = cfg.span_len();
        Self {
            variant: cfg.variant,
            mode,
            lo,
            span,
            ln_transmit: (-cfg.reflectivity).ln_1p(),
            detect_total: -((span as f64) * (-cfg.reflectivity).ln_1p()).exp_m1(),
            measure_probability: cfg.measure_probability,
            scheme: cfg.clone(),
        }
    }

    /// Draws the detection location of one pair, or `None` when photon 2
    /// leaves the setup unmeasured. Consumes exactly one uniform.
    #[inline]
    pub fn sample(&self, slot: PairSlot, stream: &mut PairStream) -> Option<usize> {
        let u = stream.uniform();
        match self.variant {
            SchemeVariant::MovingAnalyzer => (u < self.measure_probability).then(|| self.scheme.active_location(slot)),
            _ => match self.mode {
                SamplingMode::ChainDecay => {
                    // Number of splitters passed before extraction.
                    let passed = ((1.0 - u).ln() / self.ln_transmit).floor();
                    (passed < self.span as f64).then(|| self.lo + passed as usize)
                }
                SamplingMode::UniformLocation => {
                    if u < self.detect_total {
                        let k = ((u / self.detect_total) * self.span as f64) as usize;
                        Some(self.lo + k.min(self.span - 1))
                    } else {
                        None
                    }
                }
            },
        }
    }
}

pub fn sample_detection(
    cfg: &SchemeConfig,
    mode: SamplingMode,
    slot: PairSlot,
    stream: &mut PairStream,
) -> Option<usize> {
    DetectionSampler::new(cfg, mode).sample(slot, stream)
}

/// One-way target distance whose photon-1 flight matches photon 2's optical
/// path at location `i`.
pub fn index_to_range(cfg: &SchemeConfig, i: usize) -> Result<f64> {
    cfg.check_index(i)?;
    Ok(i as f64 * cfg.segment_path)
}

/// Flight time over an optical path in a medium of group index `group_index`.
pub fn path_to_seconds(path: f64, group_index: f64) -> f64 {
    path * group_index / SPEED_OF_LIGHT
}

/// Locations needed to cover `range_max` at the given depth resolution.
pub fn required_locations(range_max: f64, resolution: f64) -> Result<usize> {
    if !(range_max > 0.0 && range_max.is_finite()) {
        return Err(Error::validation("range_max", "must be positive"));
    }
    if !(resolution > 0.0 && resolution <= range_max) {
        return Err(Error::validation("resolution", "must lie in (0, range_max]"));
    }
    let q = range_max / resolution;
    let nearest = q.round();
    // 100 / 0.1 must give 1000, not 1001.
    let m = if (q - nearest).abs() <= 1e-9 * q {
        nearest
    } else {
        q.ceil()
    };
    let m = m as usize;
    if m < 2 {
        log::warn!("range {range_max} m at resolution {resolution} m needs only {m} location");
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::StreamFamily;

    fn slot(index: u64, total: u64) -> PairSlot {
        PairSlot { index, total }
    }

    #[test]
    fn chain_probabilities() {
        let cfg = SchemeConfig::chain(1000, 0.001);
        assert_eq!(detection_probability(&cfg, 1, None).unwrap(), 0.001);
        let half = SchemeConfig::chain(10, 0.5);
        assert_eq!(detection_probability(&half, 2, None).unwrap(), 0.25);
        let total: f64 = (1..=1000).map(|i| detection_probability(&cfg, i, None).unwrap()).sum();
        assert!((total - (1.0 - 0.999f64.powi(1000))).abs() < 1e-12);
        assert!((total - 0.63230).abs() < 1e-5);
        assert!(detection_probability(&cfg, 0, None).is_err());
        assert!(detection_probability(&cfg, 1001, None).is_err());
    }

    #[test]
    fn probability_closure() {
        for (m, r) in [(2usize, 0.3), (50, 0.05), (1000, 0.001), (10_000, 0.0002)] {
            let cfg = SchemeConfig::chain(m, r);
            let mass: f64 = (1..=m)
                .map(|i| detection_probability(&cfg, i, None).unwrap())
                .sum::<f64>()
                + cfg.undetected_probability(None);
            assert!((mass - 1.0).abs() < 1e-10, "M={m}: {mass}");
        }
        let w = SchemeConfig::chain(1000, 0.001).with_window(900, 1000);
        let mass: f64 = (1..=1000)
            .map(|i| detection_probability(&w, i, None).unwrap())
            .sum::<f64>()
            + w.undetected_probability(None);
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_decay_is_monotone() {
        let cfg = SchemeConfig::chain(500, 0.01).with_variant(SchemeVariant::FoldedCavity);
        let p: Vec<f64> = (1..=500)
            .map(|i| detection_probability(&cfg, i, None).unwrap())
            .collect();
        assert!(p.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn near_unit_reflectivity_extracts_at_first() {
        let cfg = SchemeConfig::chain(100, 0.999_999);
        let s = DetectionSampler::new(&cfg, SamplingMode::ChainDecay);
        let fam = StreamFamily::new(8);
        let first = (0..10_000)
            .filter(|&p| s.sample(slot(p, 10_000), &mut fam.pair(p)) == Some(1))
            .count();
        assert!(first >= 9_990);
    }

    #[test]
    fn chain_detected_fraction() {
        // 10^6 pairs, p = 1 - 0.999^1000, 4 sigma = 0.0019.
        let cfg = SchemeConfig::chain(1000, 0.001);
        let s = DetectionSampler::new(&cfg, SamplingMode::ChainDecay);
        let fam = StreamFamily::new(31);
        let n = 1_000_000u64;
        let det = (0..n)
            .filter(|&p| s.sample(slot(p, n), &mut fam.pair(p)).is_some())
            .count();
        let frac = det as f64 / n as f64;
        assert!((frac - 0.6323).abs() <= 0.0019, "{frac}");
    }

    #[test]
    fn uniform_mode_matches_chain_total() {
        let cfg = SchemeConfig::chain(1000, 0.001);
        let s = DetectionSampler::new(&cfg, SamplingMode::UniformLocation);
        let fam = StreamFamily::new(32);
        let n = 400_000u64;
        let mut counts = vec![0u64; 1001];
        let mut det = 0;
        for p in 0..n {
            if let Some(i) = s.sample(slot(p, n), &mut fam.pair(p)) {
                counts[i] += 1;
                det += 1;
            }
        }
        let p = 1.0 - 0.999f64.powi(1000);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((det as f64 / n as f64 - p).abs() <= 4.0 * sigma);
        let first: u64 = counts[1..=500].iter().sum();
        let sd = (det as f64 * 0.25).sqrt();
        assert!(((first as f64) - (det as f64) / 2.0).abs() <= 4.0 * sd);
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn moving_analyzer_blocks() {
        let cfg = SchemeConfig::moving(10, 1.0);
        cfg.validate().unwrap();
        let s = DetectionSampler::new(&cfg, SamplingMode::ChainDecay);
        let fam = StreamFamily::new(1);
        let n = 95u64;
        let mut seen = [0u64; 11];
        for p in 0..n {
            let loc = s.sample(slot(p, n), &mut fam.pair(p)).expect("always measured");
            seen[loc] += 1;
            assert_eq!(detection_probability(&cfg, loc, Some(slot(p, n))).unwrap(), 1.0);
        }
        // ceil(95 / 10) = 10 pairs per location, last block short.
        assert_eq!(&seen[1..], &[10, 10, 10, 10, 10, 10, 10, 10, 10, 5]);
        assert_eq!(detection_probability(&cfg, 3, Some(slot(0, n))).unwrap(), 0.0);
    }

    #[test]
    fn window_restricts_locations() {
        let cfg = SchemeConfig::chain(1000, 0.001).with_window(900, 1000);
        cfg.validate().unwrap();
        assert_eq!(detection_probability(&cfg, 899, None).unwrap(), 0.0);
        assert_eq!(detection_probability(&cfg, 900, None).unwrap(), 0.001);
        let fam = StreamFamily::new(4);
        for mode in [SamplingMode::ChainDecay, SamplingMode::UniformLocation] {
            let s = DetectionSampler::new(&cfg, mode);
            for p in 0..20_000 {
                if let Some(i) = s.sample(slot(p, 20_000), &mut fam.pair(p)) {
                    assert!((900..=1000).contains(&i));
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(SchemeConfig::chain(1, 0.1).validate().is_err());
        assert!(SchemeConfig::chain(10, 0.0).validate().is_err());
        assert!(SchemeConfig::chain(10, 1.0).validate().is_err());
        assert!(SchemeConfig::chain(10, 0.1).with_window(5, 5).validate().is_err());
        assert!(SchemeConfig::chain(10, 0.1).with_window(0, 5).validate().is_err());
        assert!(SchemeConfig::chain(10, 0.1).with_window(3, 11).validate().is_err());
        assert!(SchemeConfig::chain(10, 0.1).with_segment_path(0.0).validate().is_err());
        // reflectivity is irrelevant to the moving analyzer
        let mut m = SchemeConfig::moving(10, 0.5);
        m.reflectivity = 0.0;
        assert!(m.validate().is_ok());
    }

    #[test]
    fn ranges() {
        let cfg = SchemeConfig::chain(1000, 0.001).with_segment_path(0.1);
        assert!((index_to_range(&cfg, 600).unwrap() - 60.0).abs() < 1e-9);
        assert!((index_to_range(&cfg, 1).unwrap() - 0.1).abs() < 1e-15);
        let fine = SchemeConfig::chain(1000, 0.001).with_segment_path(0.01);
        assert!((index_to_range(&fine, 1000).unwrap() - 10.0).abs() < 1e-9);
        assert!(index_to_range(&cfg, 1001).is_err());
        assert!((path_to_seconds(SPEED_OF_LIGHT, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn budget() {
        assert_eq!(required_locations(100.0, 0.1).unwrap(), 1000);
        assert_eq!(required_locations(100.0, 0.01).unwrap(), 10_000);
        assert_eq!(required_locations(1.0, 1.0).unwrap(), 1);
        assert_eq!(required_locations(10.0, 3.0).unwrap(), 4);
        assert!(required_locations(0.0, 0.1).is_err());
        assert!(required_locations(1.0, 0.0).is_err());
        assert!(required_locations(1.0, 2.0).is_err());
    }
}
