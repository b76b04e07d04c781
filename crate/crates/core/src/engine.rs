//! The Monte Carlo engine: streams pairs through a scheme and accumulates
//! per-location H/V counts.

use std::io::{BufRead, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::{post_hit_distribution, sample_joint, sample_outcome, BellPairSpec, BiasModel, Polarization};
use crate::scheme::{DetectionSampler, PairSlot, SamplingMode, SchemeConfig};
use crate::stream::StreamFamily;

/// Pairs simulated per work unit. Units are merged in index order, so the
/// result does not depend on how units land on workers.
const CHUNK_PAIRS: u64 = 1 << 15;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pairs: u64,
    pub scheme: SchemeConfig,
    pub source: BellPairSpec,
    pub bias: BiasModel,
    /// Location at which photon 1 reaches the target; `None` for no target.
    pub hit_index: Option<usize>,
    /// Per-pair hit location is uniform over `[hit_index, hit_index + w]`.
    pub penetration_width: usize,
    pub seed: u64,
    pub sampling_mode: SamplingMode,
    pub log_events: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pairs: 1_000_000,
            scheme: SchemeConfig::default(),
            source: BellPairSpec::default(),
            bias: BiasModel::new(1.0, 0.0).expect("valid"),
            hit_index: Some(600),
            penetration_width: 0,
            seed: 1,
            sampling_mode: SamplingMode::ChainDecay,
            log_events: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        let m = self.scheme.locations;
        if let Some(h) = self.hit_index {
            if h == 0 || h > m {
                return Err(Error::validation("hit_index", format!("{h} outside [1, {m}]")));
            }
            if h + self.penetration_width > m {
                return Err(Error::validation(
                    "penetration_width",
                    format!(
                        "hit_index + width = {} exceeds {m} locations",
                        h + self.penetration_width
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Per-location detected photon counts, 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsTable {
    n_h: Vec<u64>,
    n_v: Vec<u64>,
}

impl CountsTable {
    pub fn new(locations: usize) -> Self {
        Self {
            n_h: vec![0; locations],
            n_v: vec![0; locations],
        }
    }

    pub fn from_arrays(n_h: Vec<u64>, n_v: Vec<u64>) -> Result<Self> {
        if n_h.len() != n_v.len() {
            return Err(Error::validation("counts", "H and V arrays differ in length"));
        }
        Ok(Self { n_h, n_v })
    }

    pub fn locations(&self) -> usize {
        self.n_h.len()
    }

    #[inline]
    pub fn h(&self, i: usize) -> u64 {
        self.n_h[i - 1]
    }

    #[inline]
    pub fn v(&self, i: usize) -> u64 {
        self.n_v[i - 1]
    }

    pub fn n_h(&self) -> &[u64] {
        &self.n_h
    }

    pub fn n_v(&self) -> &[u64] {
        &self.n_v
    }

    #[inline]
    pub fn record(&mut self, location: usize, outcome: Polarization) {
        match outcome {
            Polarization::H => self.n_h[location - 1] += 1,
            Polarization::V => self.n_v[location - 1] += 1,
        }
    }

    pub fn detected(&self) -> u64 {
        self.n_h.iter().chain(&self.n_v).sum()
    }

    pub fn merge(&mut self, other: &CountsTable) {
        for (a, b) in self.n_h.iter_mut().zip(&other.n_h) {
            *a += b;
        }
        for (a, b) in self.n_v.iter_mut().zip(&other.n_v) {
            *a += b;
        }
    }

    /// The same table with H and V exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            n_h: self.n_v.clone(),
            n_v: self.n_h.clone(),
        }
    }

    pub fn scaled(&self, c: u64) -> Self {
        Self {
            n_h: self.n_h.iter().map(|x| x * c).collect(),
            n_v: self.n_v.iter().map(|x| x * c).collect(),
        }
    }

    /// Pooled `(H, H + V)` over the inclusive location range.
    pub fn pooled(&self, from: usize, to: usize) -> (u64, u64) {
        let h: u64 = self.n_h[from - 1..to].iter().sum();
        let v: u64 = self.n_v[from - 1..to].iter().sum();
        (h, h + v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub detected: u64,
    pub emitted: u64,
    pub wall_time: f64,
    pub seed: u64,
    pub config: RunConfig,
}

impl RunSummary {
    /// Collection efficiency; 0 when nothing was emitted.
    pub fn efficiency(&self) -> f64 {
        if self.emitted == 0 {
            0.0
        } else {
            self.detected as f64 / self.emitted as f64
        }
    }

    pub fn undetected(&self) -> u64 {
        self.emitted - self.detected
    }
}

/// One realized photon-2 measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectionEvent {
    pub pair_index: u64,
    pub location: usize,
    pub outcome: Polarization,
}

/// Raw detections in emission order.
///
/// Text form: a `# locations=M` header line, then one `pair_index,location,outcome`
/// record per line with outcome `H` or `V`. Other `#` lines are comments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    pub locations: usize,
    pub events: Vec<DetectionEvent>,
}

impl EventLog {
    pub fn new(locations: usize) -> Self {
        Self {
            locations,
            events: Vec::new(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# locations={}", self.locations)?;
        for e in &self.events {
            writeln!(w, "{},{},{}", e.pair_index, e.location, e.outcome.as_char())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }

    /// Parses the text form. Errors carry the 1-based line number.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut locations = None;
        let mut events = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let record = n + 1;
            let line = line.map_err(|e| Error::parse(record, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("locations=") {
                    let m = v
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::parse(record, format!("bad location count {v:?}")))?;
                    locations = Some(m);
                }
                continue;
            }
            let m = locations.ok_or_else(|| Error::parse(record, "record before '# locations=' header"))?;
            let mut fields = line.split(',');
            let (Some(p), Some(l), Some(o), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(record, "expected pair_index,location,outcome"));
            };
            let pair_index = p
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::parse(record, format!("bad pair index {p:?}")))?;
            let location = l
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(record, format!("bad location {l:?}")))?;
            if location == 0 || location > m {
                return Err(Error::parse(record, format!("location {location} outside [1, {m}]")));
            }
            let mut chars = o.trim().chars();
            let outcome = match (chars.next().and_then(Polarization::from_char), chars.next()) {
                (Some(pol), None) => pol,
                _ => return Err(Error::parse(record, format!("bad outcome {o:?}"))),
            };
            events.push(DetectionEvent {
                pair_index,
                location,
                outcome,
            });
        }
        let locations = locations.ok_or_else(|| Error::parse(0, "missing '# locations=' header"))?;
        Ok(Self { locations, events })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

/// Rebuilds the counts table from a raw event log.
pub fn replay_counts(log: &EventLog) -> Result<CountsTable> {
    let mut table = CountsTable::new(log.locations);
    for (n, e) in log.events.iter().enumerate() {
        if e.location == 0 || e.location > log.locations {
            return Err(Error::parse(
                n + 1,
                format!("location {} outside [1, {}]", e.location, log.locations),
            ));
        }
        table.record(e.location, e.outcome);
    }
    Ok(table)
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub counts: CountsTable,
    pub summary: RunSummary,
    pub events: Option<EventLog>,
}

struct Partial {
    counts: CountsTable,
    events: Vec<DetectionEvent>,
}

impl Partial {
    fn join(mut self, other: Partial) -> Partial {
        self.counts.merge(&other.counts);
        self.events.extend(other.events);
        self
    }
}

struct Kernel {
    family: StreamFamily,
    sampler: DetectionSampler,
    pre_hit: [f64; 4],
    post_hit: crate::quantum::OutcomeDistribution,
    hit: Option<usize>,
    width: u64,
    total: u64,
    locations: usize,
    log_events: bool,
}

impl Kernel {
    fn new(config: &RunConfig) -> Self {
        Self {
            family: StreamFamily::new(config.seed),
            sampler: DetectionSampler::new(&config.scheme, config.sampling_mode),
            pre_hit: config.source.cumulative(),
            post_hit: post_hit_distribution(&config.bias),
            hit: config.hit_index,
            width: config.penetration_width as u64,
            total: config.pairs,
            locations: config.scheme.locations,
            log_events: config.log_events,
        }
    }

    fn chunk(&self, chunk: u64) -> Partial {
        let start = chunk * CHUNK_PAIRS;
        let end = (start + CHUNK_PAIRS).min(self.total);
        let mut counts = CountsTable::new(self.locations);
        let mut events = Vec::new();
        for index in start..end {
            let mut stream = self.family.pair(index);
            let hit = self.hit.map(|h| {
                if self.width > 0 {
                    h + stream.below_inclusive(self.width) as usize
                } else {
                    h
                }
            });
            let slot = PairSlot {
                index,
                total: self.total,
            };
            let Some(location) = self.sampler.sample(slot, &mut stream) else {
                continue;
            };
            let outcome = match hit {
                Some(h) if location >= h => sample_outcome(&self.post_hit, &mut stream),
                _ => sample_joint(&self.pre_hit, &mut stream).1,
            };
            counts.record(location, outcome);
            if self.log_events {
                events.push(DetectionEvent {
                    pair_index: index,
                    location,
                    outcome,
                });
            }
        }
        Partial { counts, events }
    }
}

/// Runs the simulation on the current thread pool.
///
/// Every pair draws from its own `(seed, pair_index)` stream, so the output
/// is identical for any number of workers.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let clock = Clock::start();
    let kernel = Kernel::new(config);
    let chunks = config.pairs.div_ceil(CHUNK_PAIRS);
    let empty = || Partial {
        counts: CountsTable::new(config.scheme.locations),
        events: Vec::new(),
    };

    #[cfg(feature = "parallel")]
    let merged = (0..chunks)
        .into_par_iter()
        .map(|c| kernel.chunk(c))
        .reduce(empty, Partial::join);
    #[cfg(not(feature = "parallel"))]
    let merged = (0..chunks).map(|c| kernel.chunk(c)).fold(empty(), Partial::join);

    let detected = merged.counts.detected();
    let summary = RunSummary {
        detected,
        emitted: config.pairs,
        wall_time: clock.elapsed(),
        seed: config.seed,
        config: config.clone(),
    };
    let events = config.log_events.then_some(EventLog {
        locations: config.scheme.locations,
        events: merged.events,
    });
    Ok(RunOutput {
        counts: merged.counts,
        summary,
        events,
    })
}

/// Runs on a dedicated pool of `threads` workers (0 = rayon default).
#[cfg(feature = "parallel")]
pub fn run_with_threads(config: &RunConfig, threads: usize) -> Result<RunOutput> {
    if threads == 0 {
        return run(config);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::validation("threads", e.to_string()))?;
    pool.install(|| run(config))
}

struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}
