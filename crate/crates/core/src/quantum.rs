//! Two-photon polarization states and the target-interaction outcome models.
//!
//! Amplitudes are kept in polar form. H/V projective probabilities only ever
//! read the modulus, so every outcome distribution produced here is exactly
//! independent of the relative phase.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::stream::PairStream;

/// Tolerance used when validating that probabilities are normalized.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    /// Eigenvalue used for moment statistics: H is +1, V is -1.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Polarization::H => 1.0,
            Polarization::V => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'H' | 'h' => Some(Polarization::H),
            'V' | 'v' => Some(Polarization::V),
            _ => None,
        }
    }
}

/// Complex amplitude stored as modulus and phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarAmplitude {
    pub modulus: f64,
    pub phase: f64,
}

impl PolarAmplitude {
    pub const ZERO: Self = Self {
        modulus: 0.0,
        phase: 0.0,
    };

    pub fn new(modulus: f64, phase: f64) -> Self {
        Self { modulus, phase }
    }

    #[inline]
    pub fn probability(self) -> f64 {
        self.modulus * self.modulus
    }
}

/// Pure two-photon polarization state over the basis `HH, HV, VH, VV`
/// (photon 1 first).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPhotonState {
    pub amplitudes: [PolarAmplitude; 4],
}

/// Joint H/V outcomes in basis order.
pub const JOINT_OUTCOMES: [(Polarization, Polarization); 4] = [
    (Polarization::H, Polarization::H),
    (Polarization::H, Polarization::V),
    (Polarization::V, Polarization::H),
    (Polarization::V, Polarization::V),
];

impl TwoPhotonState {
    /// `(|H1 V2> + e^{i phase} |V1 H2>) / sqrt(2)`.
    pub fn anti_correlated(phase: f64) -> Self {
        Self {
            amplitudes: [
                PolarAmplitude::ZERO,
                PolarAmplitude::new(FRAC_1_SQRT_2, 0.0),
                PolarAmplitude::new(FRAC_1_SQRT_2, phase),
                PolarAmplitude::ZERO,
            ],
        }
    }

    /// `(|H1 H2> + |V1 V2>) / sqrt(2)`.
    pub fn correlated() -> Self {
        Self {
            amplitudes: [
                PolarAmplitude::new(FRAC_1_SQRT_2, 0.0),
                PolarAmplitude::ZERO,
                PolarAmplitude::ZERO,
                PolarAmplitude::new(FRAC_1_SQRT_2, 0.0),
            ],
        }
    }

    /// Normalized joint H/V outcome probabilities in basis order.
    pub fn joint_distribution(&self) -> [f64; 4] {
        let raw = self.amplitudes.map(PolarAmplitude::probability);
        let norm: f64 = raw.iter().sum();
        raw.map(|p| p / norm)
    }

    /// Unnormalized weight of photon 2 being found in H, and total weight.
    fn photon2_h_weights(&self) -> (f64, f64) {
        let raw = self.amplitudes.map(PolarAmplitude::probability);
        (raw[0] + raw[2], raw.iter().sum())
    }
}

/// The source state: anti-correlated in H/V, with a free relative phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellPairSpec {
    pub phase: f64,
}

impl Default for BellPairSpec {
    fn default() -> Self {
        Self { phase: 0.0 }
    }
}

impl BellPairSpec {
    pub fn new(phase: f64) -> Self {
        Self { phase }
    }

    pub fn state(&self) -> TwoPhotonState {
        TwoPhotonState::anti_correlated(self.phase)
    }

    /// Cumulative joint distribution used for inverse-CDF sampling.
    pub fn cumulative(&self) -> [f64; 4] {
        let p = self.state().joint_distribution();
        let mut acc = 0.0;
        p.map(|x| {
            acc += x;
            acc
        })
    }
}

/// Draws the H/V outcome of both photons of an untouched pair.
pub fn pre_hit_outcome(spec: &BellPairSpec, stream: &mut PairStream) -> (Polarization, Polarization) {
    sample_joint(&spec.cumulative(), stream)
}

#[inline]
pub(crate) fn sample_joint(cumulative: &[f64; 4], stream: &mut PairStream) -> (Polarization, Polarization) {
    let u = stream.uniform();
    let idx = cumulative.iter().position(|&c| u < c).unwrap_or(3);
    JOINT_OUTCOMES[idx]
}

/// Density-matrix mixture describing what the target does to the pair:
/// photon 1 lost, depolarized, or reflected with a phase shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionMixture {
    a_lost: f64,
    b_mixed: f64,
    c_coherent: f64,
    phase: f64,
}

impl InteractionMixture {
    pub fn new(a_lost: f64, b_mixed: f64, c_coherent: f64, phase: f64) -> Result<Self> {
        for (key, v) in [("a_lost", a_lost), ("b_mixed", b_mixed), ("c_coherent", c_coherent)] {
            check_probability(key, v)?;
        }
        let sum = a_lost + b_mixed + c_coherent;
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::validation(
                "a_lost, b_mixed, c_coherent",
                format!("components must sum to 1, got {sum}"),
            ));
        }
        if !phase.is_finite() {
            return Err(Error::validation("phase", "must be finite"));
        }
        Ok(Self {
            a_lost,
            b_mixed,
            c_coherent,
            phase,
        })
    }

    pub fn a_lost(&self) -> f64 {
        self.a_lost
    }

    pub fn b_mixed(&self) -> f64 {
        self.b_mixed
    }

    pub fn c_coherent(&self) -> f64 {
        self.c_coherent
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// Probability that photon 2 is found in H under the interaction mixture.
///
/// Each component is H/V balanced on photon 2 (the lost branch leaves it
/// completely mixed, the depolarized branch is an even `HH`/`VV` mixture, the
/// coherent branch only moves a phase), so the result is exactly 1/2 for
/// every valid mixture. A ranging signal therefore needs the separate
/// [`BiasModel`].
pub fn mixture_marginal(m: &InteractionMixture) -> f64 {
    // Completely mixed photon 2: equal H and V weight.
    let lost = (0.5, 1.0);
    let mixed = TwoPhotonState::correlated().photon2_h_weights();
    let coherent = TwoPhotonState::anti_correlated(m.phase).photon2_h_weights();

    let mut h = 0.0;
    let mut total = 0.0;
    for (w, (ph, pt)) in [(m.a_lost, lost), (m.b_mixed, mixed), (m.c_coherent, coherent)] {
        h += w * (ph / pt);
        total += w;
    }
    h / total
}

/// Post-hit outcome probabilities for photon 2: `a` for H, `b` for V,
/// the remainder `1 - a - b` leaves photon 2 completely mixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasModel {
    a: f64,
    b: f64,
}

impl BiasModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_probability("a", a)?;
        check_probability("b", b)?;
        if a + b > 1.0 + PROBABILITY_TOLERANCE {
            return Err(Error::validation(
                "a, b",
                format!("a + b must not exceed 1 (a={a}, b={b})"),
            ));
        }
        Ok(Self { a, b })
    }

    /// No bias at all: the hit is invisible.
    pub fn unbiased() -> Self {
        Self { a: 0.5, b: 0.5 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Observable bias `p_h - p_v = a - b`.
    pub fn contrast(&self) -> f64 {
        self.a - self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeDistribution {
    p_h: f64,
    p_v: f64,
}

impl OutcomeDistribution {
    pub fn new(p_h: f64, p_v: f64) -> Result<Self> {
        check_probability("p_h", p_h)?;
        check_probability("p_v", p_v)?;
        if (p_h + p_v - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::validation("p_h, p_v", "must sum to 1"));
        }
        Ok(Self { p_h, p_v })
    }

    pub fn flat() -> Self {
        Self { p_h: 0.5, p_v: 0.5 }
    }

    pub fn p_h(&self) -> f64 {
        self.p_h
    }

    pub fn p_v(&self) -> f64 {
        self.p_v
    }
}

pub fn post_hit_distribution(bias: &BiasModel) -> OutcomeDistribution {
    let rest = (1.0 - bias.a - bias.b).max(0.0);
    OutcomeDistribution {
        p_h: bias.a + rest / 2.0,
        p_v: bias.b + rest / 2.0,
    }
}

#[inline]
pub fn sample_outcome(d: &OutcomeDistribution, stream: &mut PairStream) -> Polarization {
    if stream.uniform() < d.p_h {
        Polarization::H
    } else {
        Polarization::V
    }
}

fn check_probability(key: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::validation(key, format!("must lie in [0, 1], got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::StreamFamily;
    use proptest::prelude::*;

    #[test]
    fn pre_hit_is_always_anti_correlated() {
        let fam = StreamFamily::new(3);
        let spec = BellPairSpec::default();
        for p in 0..50_000 {
            let (a, b) = pre_hit_outcome(&spec, &mut fam.pair(p));
            assert_ne!(a, b);
        }
    }

    #[test]
    fn pre_hit_marginal_is_half() {
        // 10^6 binomial draws, sigma = 0.0005, 4 sigma = 0.002.
        let fam = StreamFamily::new(2024);
        let spec = BellPairSpec::default();
        let n = 1_000_000u64;
        let h = (0..n)
            .filter(|&p| pre_hit_outcome(&spec, &mut fam.pair(p)).1 == Polarization::H)
            .count();
        let frac = h as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.002, "H fraction {frac}");
    }

    #[test]
    fn phase_does_not_change_outcomes() {
        assert_eq!(
            BellPairSpec::new(0.0).cumulative(),
            BellPairSpec::new(std::f64::consts::PI).cumulative()
        );
        let fam = StreamFamily::new(11);
        for p in 0..1000 {
            assert_eq!(
                pre_hit_outcome(&BellPairSpec::new(0.0), &mut fam.pair(p)),
                pre_hit_outcome(&BellPairSpec::new(std::f64::consts::PI), &mut fam.pair(p)),
            );
        }
    }

    #[test]
    fn post_hit_examples() {
        let d = post_hit_distribution(&BiasModel::new(1.0, 0.0).unwrap());
        assert_eq!((d.p_h(), d.p_v()), (1.0, 0.0));
        let d = post_hit_distribution(&BiasModel::new(0.5, 0.5).unwrap());
        assert_eq!((d.p_h(), d.p_v()), (0.5, 0.5));
        let d = post_hit_distribution(&BiasModel::new(0.2, 0.1).unwrap());
        assert!((d.p_h() - 0.55).abs() < 1e-12);
        assert!((d.p_v() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn bias_rejects_excess_mass() {
        let err = BiasModel::new(0.8, 0.4).unwrap_err();
        assert!(err.to_string().contains("a, b"), "{err}");
        assert!(BiasModel::new(-0.1, 0.4).is_err());
        assert!(BiasModel::new(0.5, 0.5 + 1e-13).is_ok());
    }

    #[test]
    fn mixture_examples() {
        let m = |a, b, c, phi| mixture_marginal(&InteractionMixture::new(a, b, c, phi).unwrap());
        assert_eq!(m(1.0, 0.0, 0.0, 0.0), 0.5);
        assert_eq!(m(0.0, 1.0, 0.0, 0.0), 0.5);
        assert_eq!(m(0.2, 0.3, 0.5, 1.3), 0.5);
        assert!(InteractionMixture::new(0.5, 0.5, 0.5, 0.0).is_err());
        assert!(InteractionMixture::new(1.2, -0.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn mixture_flat_over_simplex_grid() {
        for i in 0..=20 {
            for j in 0..=(20 - i) {
                let a = i as f64 * 0.05;
                let b = j as f64 * 0.05;
                let c = 1.0 - a - b;
                let c = if c.abs() < 1e-15 { 0.0 } else { c };
                let m = InteractionMixture::new(a, b, c, 0.7 * i as f64).unwrap();
                assert_eq!(mixture_marginal(&m), 0.5, "grid point ({a}, {b}, {c})");
            }
        }
    }

    #[test]
    fn sample_outcome_degenerate() {
        let fam = StreamFamily::new(5);
        let h = OutcomeDistribution::new(1.0, 0.0).unwrap();
        let v = OutcomeDistribution::new(0.0, 1.0).unwrap();
        for p in 0..1000 {
            assert_eq!(sample_outcome(&h, &mut fam.pair(p)), Polarization::H);
            assert_eq!(sample_outcome(&v, &mut fam.pair(p)), Polarization::V);
        }
    }

    #[test]
    fn sample_outcome_balanced() {
        // 10^5 draws, 4 sigma = 4 * sqrt(0.25 / 1e5) = 0.0063.
        let fam = StreamFamily::new(77);
        let d = OutcomeDistribution::flat();
        let n = 100_000u64;
        let h = (0..n)
            .filter(|&p| sample_outcome(&d, &mut fam.pair(p)) == Polarization::H)
            .count();
        assert!((h as f64 / n as f64 - 0.5).abs() <= 0.0063);
    }

    proptest! {
        #[test]
        fn post_hit_normalized(a in 0.0f64..=1.0, frac in 0.0f64..=1.0) {
            let b = (1.0 - a) * frac;
            let d = post_hit_distribution(&BiasModel::new(a, b).unwrap());
            prop_assert!((d.p_h() + d.p_v() - 1.0).abs() <= PROBABILITY_TOLERANCE);
            prop_assert!((d.p_h() - d.p_v() - (a - b)).abs() <= 1e-12);
        }

        #[test]
        fn phase_invariance(phi1 in -10.0f64..10.0, phi2 in -10.0f64..10.0) {
            prop_assert_eq!(
                TwoPhotonState::anti_correlated(phi1).joint_distribution(),
                TwoPhotonState::anti_correlated(phi2).joint_distribution()
            );
            let m1 = InteractionMixture::new(0.1, 0.2, 0.7, phi1).unwrap();
            let m2 = InteractionMixture::new(0.1, 0.2, 0.7, phi2).unwrap();
            prop_assert_eq!(mixture_marginal(&m1), mixture_marginal(&m2));
        }
    }
}
