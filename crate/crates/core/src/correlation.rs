//! Spatial correlation series over adjacent measurement locations, hit
//! detection and range estimation.
//!
//! The normative statistic couples locations `i` and `i + 1`:
//!
//! ```text
//! G_H(i) = n_H(i) n_H(i+1) / (n_H(i) + n_H(i+1))
//! G(i)   = |G_H(i) - G_V(i)|
//! ```
//!
//! While photon 2 is still entangled its H/V outcomes are balanced and `G`
//! only fluctuates. Once photon 1 has hit a target with a biased collapse,
//! one polarization dominates and `G` jumps to a plateau of roughly half the
//! per-location count difference.

use crate::engine::{run, CountsTable, RunConfig};
use crate::error::{Error, Result};
use crate::quantum::Polarization;
use crate::scheme::{index_to_range, SchemeConfig};

pub const DEFAULT_THRESHOLD_K: f64 = 5.0;
pub const DEFAULT_MIN_BASELINE: usize = 50;

/// Product-over-sum of two adjacent counts; 0 when both are zero.
#[inline]
pub fn g_pol(n_i: u64, n_next: u64) -> f64 {
    let sum = n_i + n_next;
    if sum == 0 {
        return 0.0;
    }
    (n_i as f64 * n_next as f64) / sum as f64
}

/// `G(i)` for `i` in `first..first + values.len()`, together with the signed
/// deviation `G_H(i) - G_V(i)` it is the magnitude of.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSeries {
    first: usize,
    values: Vec<f64>,
    deviation: Vec<f64>,
}

impl CorrelationSeries {
    /// A series known only through its values; the values double as the
    /// deviation.
    pub fn new(first: usize, values: Vec<f64>) -> Self {
        Self {
            first,
            deviation: values.clone(),
            values,
        }
    }

    pub fn from_deviation(first: usize, deviation: Vec<f64>) -> Self {
        Self {
            first,
            values: deviation.iter().map(|d| d.abs()).collect(),
            deviation,
        }
    }

    /// Signed `G_H(i) - G_V(i)`.
    pub fn deviation(&self) -> &[f64] {
        &self.deviation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Location index of the first entry.
    pub fn first_index(&self) -> usize {
        self.first
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `G(i)`, or `None` outside the series.
    pub fn get(&self, i: usize) -> Option<f64> {
        i.checked_sub(self.first).and_then(|k| self.values.get(k).copied())
    }

    /// `(i, G(i))` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &g)| (self.first + k, g))
    }

    /// Entries coupling two locations inside `[lo, hi]`, i.e. `i in [lo, hi - 1]`.
    pub fn restricted(&self, lo: usize, hi: usize) -> Self {
        let from = lo.max(self.first);
        let to = hi.saturating_sub(1).min(self.first + self.values.len() - 1);
        if to < from {
            return Self::new(from, Vec::new());
        }
        let range = from - self.first..=to - self.first;
        Self {
            first: from,
            values: self.values[range.clone()].to_vec(),
            deviation: self.deviation[range].to_vec(),
        }
    }

    /// Mean of `G(i)` over `i >= from`.
    pub fn mean_from(&self, from: usize) -> f64 {
        let tail: Vec<f64> = self.iter().filter(|&(i, _)| i >= from).map(|(_, g)| g).collect();
        if tail.is_empty() {
            0.0
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }
}

pub fn g_series(table: &CountsTable) -> CorrelationSeries {
    let m = table.locations();
    let deviation = (1..m)
        .map(|i| g_pol(table.h(i), table.h(i + 1)) - g_pol(table.v(i), table.v(i + 1)))
        .collect();
    CorrelationSeries::from_deviation(1, deviation)
}

/// The ratio form `<X Y> / (<X><Y>)` per polarization, with counts taken as
/// single-trial estimates of their own means. Entries whose mean is zero are
/// masked and reported as 0. Diagnostic only; ranging uses [`g_series`].
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSeries {
    pub h: Vec<f64>,
    pub v: Vec<f64>,
    pub h_defined: Vec<bool>,
    pub v_defined: Vec<bool>,
}

pub fn g_ratio_series(table: &CountsTable) -> RatioSeries {
    fn ratio(counts: &[u64]) -> (Vec<f64>, Vec<bool>) {
        counts
            .windows(2)
            .map(|w| {
                let (x, y) = (w[0] as f64, w[1] as f64);
                let (mean_x, mean_y) = (x, y);
                if mean_x > 0.0 && mean_y > 0.0 {
                    ((x * y) / (mean_x * mean_y), true)
                } else {
                    (0.0, false)
                }
            })
            .unzip()
    }
    let (h, h_defined) = ratio(table.n_h());
    let (v, v_defined) = ratio(table.n_v());
    RatioSeries {
        h,
        v,
        h_defined,
        v_defined,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitReport {
    pub g_hit: f64,
    pub argmax: usize,
    pub crossing_index: Option<usize>,
    pub estimated_hit_location: Option<usize>,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub snr: f64,
    pub threshold_k: f64,
}

impl HitReport {
    pub fn detected(&self) -> bool {
        self.crossing_index.is_some()
    }

    pub fn threshold(&self) -> f64 {
        self.baseline_mean + self.threshold_k * self.baseline_std
    }
}

#[derive(Default, Clone, Copy)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0).sqrt()
        }
    }
}

/// Finds the first entry that exceeds `baseline_mean + k * baseline_std`.
///
/// `baseline_mean` is the mean of `G` over the baseline; `baseline_std` is
/// the spread of the signed deviation `G_H - G_V` there, which is close to
/// Gaussian while `G` itself is folded at zero. The baseline starts as the
/// first `min_baseline` entries and grows with every entry scanned past it
/// until a crossing. Because `G(i)` couples locations `i` and `i + 1`, the
/// first affected entry sits one location before the hit, so the estimate is
/// `crossing + 1`.
pub fn detect_hit(series: &CorrelationSeries, k: f64, min_baseline: usize) -> Result<HitReport> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::validation("k", format!("must be positive, got {k}")));
    }
    if min_baseline == 0 || series.len() < min_baseline + 1 {
        return Err(Error::validation(
            "min_baseline",
            format!(
                "series of {} entries too short for a baseline of {min_baseline}",
                series.len()
            ),
        ));
    }
    let g = series.values();
    let (mut argmax, mut g_hit) = (0usize, g[0]);
    for (j, &x) in g.iter().enumerate() {
        if x > g_hit {
            g_hit = x;
            argmax = j;
        }
    }

    let d = series.deviation();
    let mut level = Running::default();
    let mut spread = Running::default();
    for j in 0..min_baseline {
        level.push(g[j]);
        spread.push(d[j]);
    }
    let mut crossing = None;
    for (j, &x) in g.iter().enumerate() {
        if x > level.mean + k * spread.std() {
            crossing = Some(j);
            break;
        }
        if j >= min_baseline {
            level.push(x);
            spread.push(d[j]);
        }
    }

    let baseline_std = spread.std();
    let snr = if baseline_std > 0.0 {
        g_hit / baseline_std
    } else if g_hit > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let first = series.first_index();
    Ok(HitReport {
        g_hit,
        argmax: first + argmax,
        crossing_index: crossing.map(|j| first + j),
        estimated_hit_location: crossing.map(|j| first + j + 1),
        baseline_mean: level.mean,
        baseline_std,
        snr,
        threshold_k: k,
    })
}

/// Runs [`detect_hit`] on the part of the series the scheme actually
/// measures (the bounded-range window when one is set).
pub fn analyze(
    table: &CountsTable,
    scheme: &SchemeConfig,
    k: f64,
    min_baseline: usize,
) -> Result<(CorrelationSeries, HitReport)> {
    let series = g_series(table);
    let (lo, hi) = scheme.active_span();
    let report = detect_hit(&series.restricted(lo, hi), k, min_baseline)?;
    Ok((series, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeReport {
    pub detected: bool,
    pub estimated_hit_location: Option<usize>,
    pub range_m: Option<f64>,
    pub resolution_m: f64,
    pub g_hit: f64,
    pub snr: f64,
    pub efficiency: f64,
}

/// Converts a hit report into a range. A report without a crossing yields a
/// "not detected" range report rather than an error.
pub fn estimate_range(report: &HitReport, cfg: &SchemeConfig, efficiency: f64) -> Result<RangeReport> {
    let range_m = report
        .estimated_hit_location
        .map(|i| index_to_range(cfg, i))
        .transpose()?;
    Ok(RangeReport {
        detected: report.detected(),
        estimated_hit_location: report.estimated_hit_location,
        range_m,
        resolution_m: cfg.segment_path,
        g_hit: report.g_hit,
        snr: report.snr,
        efficiency,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub n: u32,
    pub c_n: f64,
    pub variance: f64,
    pub samples: usize,
}

/// `C_n = <x^n> - <x>^n` and `sigma^2 = <x^2> - <x>^2` over the sample.
pub fn moments(values: &[f64], n: u32) -> Result<MomentReport> {
    if n == 0 {
        return Err(Error::validation("n", "moment order must be at least 1"));
    }
    if values.is_empty() {
        return Err(Error::validation("events", "need at least one outcome"));
    }
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let mean_n = values.iter().map(|x| x.powi(n as i32)).sum::<f64>() / len;
    let mean_sq = values.iter().map(|x| x * x).sum::<f64>() / len;
    Ok(MomentReport {
        n,
        c_n: mean_n - mean.powi(n as i32),
        variance: (mean_sq - mean * mean).max(0.0),
        samples: values.len(),
    })
}

/// [`moments`] over polarization outcomes encoded as H = +1, V = -1.
pub fn outcome_moments(events: &[Polarization], n: u32) -> Result<MomentReport> {
    let values: Vec<f64> = events.iter().map(|p| p.sign()).collect();
    moments(&values, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub pairs: u64,
    pub plateau: f64,
}

/// Mean of `G(i)` over entries that couple two fully post-hit locations.
pub fn post_hit_plateau(series: &CorrelationSeries, config: &RunConfig) -> Result<f64> {
    let hit = config
        .hit_index
        .ok_or_else(|| Error::validation("hit_index", "plateau needs a target"))?;
    Ok(series.mean_from(hit + config.penetration_width))
}

/// Runs each configuration and reports its post-hit plateau. The
/// configurations must differ only in their pair count.
pub fn snr_scaling(configs: &[RunConfig]) -> Result<Vec<ScalingRow>> {
    let Some(reference) = configs.first() else {
        return Err(Error::validation("configs", "need at least one configuration"));
    };
    for c in configs {
        let normalized = RunConfig {
            pairs: reference.pairs,
            ..c.clone()
        };
        if &normalized != reference {
            return Err(Error::validation("configs", "must differ only in pairs"));
        }
    }
    configs
        .iter()
        .map(|c| {
            let out = run(c)?;
            let plateau = post_hit_plateau(&g_series(&out.counts), c)?;
            Ok(ScalingRow {
                pairs: c.pairs,
                plateau,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(h: &[u64], v: &[u64]) -> CountsTable {
        CountsTable::from_arrays(h.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn g_pol_examples() {
        assert_eq!(g_pol(10, 10), 5.0);
        assert_eq!(g_pol(0, 0), 0.0);
        assert_eq!(g_pol(0, 500), 0.0);
    }

    #[test]
    fn hand_table() {
        let s = g_series(&table(&[4, 4, 0], &[4, 4, 8]));
        assert_eq!(s.len(), 2);
        assert_eq!(s.values()[0], 0.0);
        assert!((s.values()[1] - 32.0 / 12.0).abs() < 1e-12);
        assert_eq!(s.get(2), Some(s.values()[1]));
        assert_eq!(s.get(0), None);
    }

    #[test]
    fn balanced_table_is_null() {
        let n = [3, 9, 0, 14, 14, 2];
        assert!(g_series(&table(&n, &n)).values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn ratio_form() {
        let r = g_ratio_series(&table(&[2, 8], &[5, 5]));
        assert_eq!(r.h, vec![1.0]);
        assert_eq!(r.v, vec![1.0]);
        let r = g_ratio_series(&table(&[3, 0, 3], &[7, 7, 7]));
        assert_eq!(r.h, vec![0.0, 0.0]);
        assert_eq!(r.h_defined, vec![false, false]);
        assert!(r.v.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn detect_on_step() {
        let mut values = [1.0, 2.0, 1.5, 0.5, 1.0].repeat(20);
        values.extend([50.0; 10]);
        let series = CorrelationSeries::new(1, values);
        let r = detect_hit(&series, 5.0, 50).unwrap();
        assert_eq!(r.crossing_index, Some(101));
        assert_eq!(r.estimated_hit_location, Some(102));
        assert_eq!(r.g_hit, 50.0);
        assert_eq!(r.argmax, 101);
        assert!(r.crossing_index.unwrap() <= r.argmax);
        assert!((r.baseline_mean - 1.2).abs() < 1e-12);
    }

    #[test]
    fn detect_on_zero_series() {
        let r = detect_hit(&CorrelationSeries::new(1, vec![0.0; 100]), 5.0, 50).unwrap();
        assert!(!r.detected());
        assert_eq!(r.g_hit, 0.0);
        assert_eq!(r.snr, 0.0);
    }

    #[test]
    fn detect_rejects_short_series() {
        let s = CorrelationSeries::new(1, vec![0.0; 50]);
        assert!(detect_hit(&s, 5.0, 50).is_err());
        assert!(detect_hit(&s, 0.0, 10).is_err());
        assert!(detect_hit(&s, 5.0, 49).is_ok());
    }

    #[test]
    fn restriction_keeps_absolute_indices() {
        let s = CorrelationSeries::new(1, (1..=9).map(|x| x as f64).collect());
        let w = s.restricted(4, 7);
        assert_eq!(w.first_index(), 4);
        assert_eq!(w.values(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn range_estimates() {
        let cfg = SchemeConfig::chain(1000, 0.001).with_segment_path(0.1);
        let hit = HitReport {
            g_hit: 10.0,
            argmax: 600,
            crossing_index: Some(599),
            estimated_hit_location: Some(600),
            baseline_mean: 1.0,
            baseline_std: 1.0,
            snr: 10.0,
            threshold_k: 5.0,
        };
        let r = estimate_range(&hit, &cfg, 0.63).unwrap();
        assert!(r.detected);
        assert!((r.range_m.unwrap() - 60.0).abs() < 1e-9);
        assert_eq!(r.resolution_m, 0.1);

        let fine = SchemeConfig::chain(1000, 0.001).with_segment_path(0.01);
        let first = HitReport {
            crossing_index: Some(0),
            estimated_hit_location: Some(1),
            ..hit.clone()
        };
        assert!((estimate_range(&first, &fine, 0.5).unwrap().range_m.unwrap() - 0.01).abs() < 1e-15);

        let none = HitReport {
            crossing_index: None,
            estimated_hit_location: None,
            ..hit
        };
        let r = estimate_range(&none, &cfg, 0.63).unwrap();
        assert!(!r.detected);
        assert_eq!(r.range_m, None);
    }

    #[test]
    fn moment_examples() {
        let all_h = outcome_moments(&[Polarization::H; 7], 3).unwrap();
        assert_eq!((all_h.c_n, all_h.variance), (0.0, 0.0));
        let two = outcome_moments(&[Polarization::H, Polarization::V], 2).unwrap();
        assert_eq!((two.c_n, two.variance), (1.0, 1.0));
        assert!(moments(&[], 2).is_err());
        assert!(moments(&[1.0], 0).is_err());
    }

    #[test]
    fn scaling_requires_matching_configs() {
        let a = RunConfig {
            pairs: 10,
            ..RunConfig::default()
        };
        let b = RunConfig { seed: 99, ..a.clone() };
        assert!(snr_scaling(&[a.clone(), b]).is_err());
        assert!(snr_scaling(&[]).is_err());
        let rows = snr_scaling(&[RunConfig { pairs: 0, ..a }]).unwrap();
        assert_eq!(rows, vec![ScalingRow { pairs: 0, plateau: 0.0 }]);
    }

    #[test]
    fn exhaustive_g_pol_bound() {
        for x in 0..=1000u64 {
            for y in 0..=1000u64 {
                assert!(g_pol(x, y) <= x.min(y) as f64);
            }
        }
    }

    proptest! {
        #[test]
        fn swap_symmetry(h in prop::collection::vec(0u64..500, 2..40), seed in any::<u64>()) {
            let v: Vec<u64> = h.iter().enumerate().map(|(i, x)| (x ^ seed.rotate_left(i as u32)) % 500).collect();
            let t = table(&h, &v);
            let (a, b) = (g_series(&t), g_series(&t.swapped()));
            prop_assert_eq!(a.values(), b.values());
        }

        #[test]
        fn homogeneous_of_degree_one(h in prop::collection::vec(0u64..300, 2..30), v in prop::collection::vec(0u64..300, 30), c in 1u64..20) {
            let v = &v[..h.len()];
            let t = table(&h, v);
            let base = g_series(&t);
            let scaled = g_series(&t.scaled(c));
            for (a, b) in base.values().iter().zip(scaled.values()) {
                prop_assert!((a * c as f64 - b).abs() <= 1e-9 * b.max(1.0));
            }
        }

        #[test]
        fn series_non_negative_and_bounded(h in prop::collection::vec(0u64..1000, 2..30), v in prop::collection::vec(0u64..1000, 30)) {
            let v = &v[..h.len()];
            let t = table(&h, v);
            for (i, g) in g_series(&t).iter() {
                let cap = [t.h(i), t.h(i + 1), t.v(i), t.v(i + 1)].into_iter().max().unwrap() as f64;
                prop_assert!(g.is_finite() && g >= 0.0 && g <= cap);
            }
        }
    }
}
