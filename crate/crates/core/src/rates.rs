//! Per-link ergodic rates for every (test point, station, pattern) triple.
//!
//! Rates are precomputed once into a dense tensor so the optimization layers
//! treat them as constants. Fading draws use one dedicated stream per link, so
//! the same fade realizations are shared by all patterns (common random
//! numbers) and the build is deterministic regardless of evaluation order.

use crate::error::{Error, Result};
use crate::patterns::PatternSet;
use crate::scenario::{derive_seed, DemandConfig, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RateMode {
    /// Unit channel power on every link.
    Deterministic,
    /// Mean over Rayleigh fading draws, |h|^2 ~ Exp(1).
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct RateTensor {
    k_count: usize,
    b_count: usize,
    i_count: usize,
    /// Laid out with k fastest: data[(i * B + b) * K + k].
    data: Vec<f64>,
    pub mode: RateMode,
    pub scenario_hash: [u8; 32],
    pub pattern_hash: [u8; 32],
}

pub fn scenario_digest(scenario: &Scenario) -> [u8; 32] {
    // The demand block is canonicalized away before hashing: link rates depend
    // on layout and propagation only, so a run that merely overrides demands
    // must keep hitting the same cache entry.
    let mut config = scenario.to_config().clone();
    config.demand = DemandConfig { uniform_bps: None, per_test_point: None };
    let json = serde_json::to_string(&config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(json.as_bytes());
    h.finalize().into()
}

pub fn pattern_digest(patterns: &PatternSet) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(patterns.to_json().as_bytes());
    h.finalize().into()
}

/// Instantaneous SINR of link (b, k) under pattern i, given per-station
/// channel power draws `h2[l]` = |h_{lk}|^2.
pub fn sinr(scenario: &Scenario, patterns: &PatternSet, k: usize, b: usize, i: usize, h2: &[f64]) -> f64 {
    if !patterns.is_on(i, b) {
        return 0.0;
    }
    let own = scenario.bss[b].tx_psd * scenario.channel_gain(b, k) * h2[b];
    let mut den = scenario.noise_psd;
    for l in 0..scenario.b_count() {
        if l != b && patterns.is_on(i, l) {
            den += scenario.bss[l].tx_psd * scenario.channel_gain(l, k) * h2[l];
        }
    }
    own / den
}

/// Fading power draws for link (b, k): inverse-CDF Exp(1) on a per-link stream.
fn link_draws(seed: u64, k: usize, b: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xfade, k as u64, b as u64));
    (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect()
}

/// Ergodic rate in bit/s of link (b, k) under pattern i.
pub fn ergodic_rate(
    scenario: &Scenario,
    patterns: &PatternSet,
    k: usize,
    b: usize,
    i: usize,
    mode: &RateMode,
) -> f64 {
    let w = scenario.bandwidth_hz;
    match mode {
        RateMode::Deterministic => {
            let h2 = vec![1.0; scenario.b_count()];
            w * (1.0 + sinr(scenario, patterns, k, b, i, &h2)).log2()
        }
        RateMode::MonteCarlo { samples, seed } => {
            if !patterns.is_on(i, b) {
                return 0.0;
            }
            let n = *samples;
            let draws: Vec<Vec<f64>> = (0..scenario.b_count())
                .map(|l| link_draws(*seed, k, l, n))
                .collect();
            let mut acc = 0.0;
            let mut h2 = vec![0.0; scenario.b_count()];
            for j in 0..n {
                for l in 0..scenario.b_count() {
                    h2[l] = draws[l][j];
                }
                acc += (1.0 + sinr(scenario, patterns, k, b, i, &h2)).log2();
            }
            w * acc / n as f64
        }
    }
}

pub fn build_rate_tensor(scenario: &Scenario, patterns: &PatternSet, mode: &RateMode) -> Result<RateTensor> {
    let b_count = scenario.b_count();
    let k_count = scenario.k_count();
    let i_count = patterns.len();
    if patterns.b_count() != b_count {
        return Err(Error::invariant(
            "patterns",
            format!("pattern rows cover {} stations, scenario has {b_count}", patterns.b_count()),
        ));
    }
    if let RateMode::MonteCarlo { samples, .. } = mode {
        if *samples == 0 {
            return Err(Error::invariant("rates.samples", "must be positive"));
        }
    }

    let n = match mode {
        RateMode::Deterministic => 1,
        RateMode::MonteCarlo { samples, .. } => *samples,
    };
    // draws[k][l][j]; deterministic mode reuses the unit draw.
    let draws: Vec<Vec<Vec<f64>>> = match mode {
        RateMode::Deterministic => vec![vec![vec![1.0]; b_count]; k_count],
        RateMode::MonteCarlo { seed, .. } => (0..k_count)
            .map(|k| (0..b_count).map(|l| link_draws(*seed, k, l, n)).collect())
            .collect(),
    };

    let w = scenario.bandwidth_hz;
    let mut recv = vec![0.0; b_count * k_count];
    for b in 0..b_count {
        for k in 0..k_count {
            recv[b * k_count + k] = scenario.bss[b].tx_psd * scenario.channel_gain(b, k);
        }
    }

    let mut data = vec![0.0; i_count * b_count * k_count];
    let inv_n = 1.0 / n as f64;
    for i in 0..i_count {
        for k in 0..k_count {
            let kd = &draws[k];
            for j in 0..n {
                // Total received power under this pattern, then carve out each
                // serving station's own term: keeps the inner loop O(B) per draw.
                let mut total = 0.0;
                for l in 0..b_count {
                    if patterns.is_on(i, l) {
                        total += recv[l * k_count + k] * kd[l][j];
                    }
                }
                for b in 0..b_count {
                    if patterns.is_on(i, b) {
                        let own = recv[b * k_count + k] * kd[b][j];
                        let s = own / (scenario.noise_psd + (total - own));
                        data[(i * b_count + b) * k_count + k] += w * (1.0 + s).log2() * inv_n;
                    }
                }
            }
        }
    }

    Ok(RateTensor {
        k_count,
        b_count,
        i_count,
        data,
        mode: mode.clone(),
        scenario_hash: scenario_digest(scenario),
        pattern_hash: pattern_digest(patterns),
    })
}

impl RateTensor {
    /// Tensor from raw values (k-major order), for synthetic instances.
    pub fn from_raw(k_count: usize, b_count: usize, i_count: usize, kbi_data: Vec<f64>) -> Result<RateTensor> {
        if kbi_data.len() != k_count * b_count * i_count {
            return Err(Error::invariant(
                "rates",
                format!(
                    "expected {} entries, got {}",
                    k_count * b_count * i_count,
                    kbi_data.len()
                ),
            ));
        }
        let mut data = vec![0.0; kbi_data.len()];
        for k in 0..k_count {
            for b in 0..b_count {
                for i in 0..i_count {
                    data[(i * b_count + b) * k_count + k] = kbi_data[(k * b_count + b) * i_count + i];
                }
            }
        }
        Ok(RateTensor {
            k_count,
            b_count,
            i_count,
            data,
            mode: RateMode::Deterministic,
            scenario_hash: [0; 32],
            pattern_hash: [0; 32],
        })
    }

    pub fn k_count(&self) -> usize {
        self.k_count
    }

    pub fn b_count(&self) -> usize {
        self.b_count
    }

    pub fn i_count(&self) -> usize {
        self.i_count
    }

    #[inline]
    pub fn rate(&self, k: usize, b: usize, i: usize) -> f64 {
        self.data[(i * self.b_count + b) * self.k_count + k]
    }

    /// The K-vector slab for pattern i and station b.
    #[inline]
    pub(crate) fn slab(&self, b: usize, i: usize) -> &[f64] {
        let start = (i * self.b_count + b) * self.k_count;
        &self.data[start..start + self.k_count]
    }

    /// Tensor restricted to a subset of pattern rows (given by index).
    pub fn select_patterns(&self, indices: &[usize]) -> RateTensor {
        let mut data = Vec::with_capacity(indices.len() * self.b_count * self.k_count);
        for &i in indices {
            let start = i * self.b_count * self.k_count;
            data.extend_from_slice(&self.data[start..start + self.b_count * self.k_count]);
        }
        RateTensor {
            k_count: self.k_count,
            b_count: self.b_count,
            i_count: indices.len(),
            data,
            mode: self.mode.clone(),
            scenario_hash: self.scenario_hash,
            pattern_hash: [0; 32],
        }
    }

    pub fn max_rate_for(&self, k: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.i_count {
            for b in 0..self.b_count {
                best = best.max(self.rate(k, b, i));
            }
        }
        best
    }

    /// Smallest strictly positive rate for test point k, if any.
    pub fn min_positive_rate_for(&self, k: usize) -> Option<f64> {
        let mut best = f64::MAX;
        for i in 0..self.i_count {
            for b in 0..self.b_count {
                let r = self.rate(k, b, i);
                if r > 0.0 && r < best {
                    best = r;
                }
            }
        }
        (best < f64::MAX).then_some(best)
    }

    /// Sum over (k, b) of the best rate across patterns; a provable upper
    /// bound on any achievable sum rate, used to bound the balancing LP.
    pub fn sum_rate_bound(&self) -> f64 {
        let mut total = 0.0;
        for k in 0..self.k_count {
            for b in 0..self.b_count {
                let mut best = 0.0f64;
                for i in 0..self.i_count {
                    best = best.max(self.rate(k, b, i));
                }
                total += best;
            }
        }
        total
    }

    /// Entries must be finite, nonnegative, and zero exactly on muted links.
    pub fn check_invariants(&self, patterns: &PatternSet) -> Result<()> {
        for i in 0..self.i_count {
            for b in 0..self.b_count {
                for k in 0..self.k_count {
                    let r = self.rate(k, b, i);
                    if !r.is_finite() || r < 0.0 {
                        return Err(Error::invariant(
                            "rates",
                            format!("rate({k},{b},{i}) = {r}"),
                        ));
                    }
                    if patterns.is_on(i, b) != (r > 0.0) {
                        return Err(Error::invariant(
                            "rates",
                            format!(
                                "rate({k},{b},{i}) = {r} but station is {}",
                                if patterns.is_on(i, b) { "on" } else { "off" }
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Muting stations never hurts anyone else: for every row pair where the
    /// second row's active set is a subset of the first, rates of shared
    /// active stations must not decrease. Returns the violation count.
    pub fn monotonicity_violations(&self, patterns: &PatternSet) -> usize {
        let mut violations = 0;
        for i in 0..self.i_count {
            for j in 0..self.i_count {
                let (mi, mj) = (patterns.mask(i), patterns.mask(j));
                if i == j || mj & !mi != 0 {
                    continue;
                }
                // j's active set is a subset of i's.
                for b in 0..self.b_count {
                    if mj >> b & 1 == 0 {
                        continue;
                    }
                    for k in 0..self.k_count {
                        let (ri, rj) = (self.rate(k, b, i), self.rate(k, b, j));
                        if rj < ri - 1e-12 * ri.max(1.0) {
                            violations += 1;
                        }
                    }
                }
            }
        }
        violations
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"HSRT")?;
        f.write_all(&1u32.to_le_bytes())?;
        for v in [self.k_count as u64, self.b_count as u64, self.i_count as u64] {
            f.write_all(&v.to_le_bytes())?;
        }
        match &self.mode {
            RateMode::Deterministic => {
                f.write_all(&[0u8])?;
                f.write_all(&0u64.to_le_bytes())?;
                f.write_all(&0u64.to_le_bytes())?;
            }
            RateMode::MonteCarlo { samples, seed } => {
                f.write_all(&[1u8])?;
                f.write_all(&(*samples as u64).to_le_bytes())?;
                f.write_all(&seed.to_le_bytes())?;
            }
        }
        f.write_all(&self.scenario_hash)?;
        f.write_all(&self.pattern_hash)?;
        // File order is (k, b, i) row-major.
        for k in 0..self.k_count {
            for b in 0..self.b_count {
                for i in 0..self.i_count {
                    f.write_all(&self.rate(k, b, i).to_le_bytes())?;
                }
            }
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<RateTensor> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != b"HSRT" {
            return Err(Error::Cache("bad magic".to_string()));
        }
        let mut u32b = [0u8; 4];
        f.read_exact(&mut u32b)?;
        if u32::from_le_bytes(u32b) != 1 {
            return Err(Error::Cache("unsupported version".to_string()));
        }
        let mut u64b = [0u8; 8];
        let mut next_u64 = |f: &mut dyn Read| -> Result<u64> {
            f.read_exact(&mut u64b)?;
            Ok(u64::from_le_bytes(u64b))
        };
        let k_count = next_u64(&mut f)? as usize;
        let b_count = next_u64(&mut f)? as usize;
        let i_count = next_u64(&mut f)? as usize;
        let mut tag = [0u8; 1];
        f.read_exact(&mut tag)?;
        let samples = next_u64(&mut f)? as usize;
        let seed = next_u64(&mut f)?;
        let mode = match tag[0] {
            0 => RateMode::Deterministic,
            1 => RateMode::MonteCarlo { samples, seed },
            t => return Err(Error::Cache(format!("unknown mode tag {t}"))),
        };
        let mut scenario_hash = [0u8; 32];
        f.read_exact(&mut scenario_hash)?;
        let mut pattern_hash = [0u8; 32];
        f.read_exact(&mut pattern_hash)?;
        let total = k_count
            .checked_mul(b_count)
            .and_then(|x| x.checked_mul(i_count))
            .ok_or_else(|| Error::Cache("dimension overflow".to_string()))?;
        let mut kbi = vec![0.0f64; total];
        let mut buf = [0u8; 8];
        for v in kbi.iter_mut() {
            f.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        let mut t = RateTensor::from_raw(k_count, b_count, i_count, kbi)?;
        t.mode = mode;
        t.scenario_hash = scenario_hash;
        t.pattern_hash = pattern_hash;
        Ok(t)
    }

    /// Reads the cache if it matches scenario, patterns, and mode; rebuilds
    /// (and rewrites the cache) otherwise.
    pub fn load_or_build(
        path: &Path,
        scenario: &Scenario,
        patterns: &PatternSet,
        mode: &RateMode,
    ) -> Result<RateTensor> {
        if path.exists() {
            if let Ok(t) = RateTensor::read_cache(path) {
                if t.scenario_hash == scenario_digest(scenario)
                    && t.pattern_hash == pattern_digest(patterns)
                    && t.mode == *mode
                    && t.k_count == scenario.k_count()
                    && t.b_count == scenario.b_count()
                    && t.i_count == patterns.len()
                {
                    return Ok(t);
                }
            }
        }
        let t = build_rate_tensor(scenario, patterns, mode)?;
        t.write_cache(path)?;
        Ok(t)
    }

    pub fn export_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "k,b,i,rate_bps")?;
        for k in 0..self.k_count {
            for b in 0..self.b_count {
                for i in 0..self.i_count {
                    writeln!(out, "{k},{b},{i},{}", self.rate(k, b, i))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{enumerate_all, reuse1};
    use crate::scenario::{build_scenario, BsKind, ScenarioConfig, StationSpec, TestPointSpec};

    fn two_station_scenario() -> Scenario {
        let mut config = ScenarioConfig::default();
        config.network.stations = Some(vec![
            StationSpec { kind: BsKind::Macro, x_m: -400.0, y_m: 0.0, tx_power_w: None, q: None },
            StationSpec { kind: BsKind::Macro, x_m: 400.0, y_m: 0.0, tx_power_w: None, q: None },
        ]);
        config.network.test_points = Some(vec![
            TestPointSpec { x_m: -300.0, y_m: 0.0 },
            TestPointSpec { x_m: 350.0, y_m: 50.0 },
        ]);
        build_scenario(&config).unwrap()
    }

    #[test]
    fn sinr_zero_when_station_muted() {
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        let h2 = vec![1.0; 2];
        // pattern 1 = only station 0 on.
        assert_eq!(sinr(&sc, &p, 0, 1, 1, &h2), 0.0);
        assert!(sinr(&sc, &p, 0, 0, 1, &h2) > 0.0);
    }

    #[test]
    fn sinr_single_station_is_snr() {
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        let h2 = vec![1.0; 2];
        let expected = sc.bss[0].tx_psd * sc.channel_gain(0, 0) / sc.noise_psd;
        let got = sinr(&sc, &p, 0, 0, 1, &h2);
        assert!((got / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interference_lowers_sinr() {
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        let h2 = vec![1.0; 2];
        let alone = sinr(&sc, &p, 0, 0, 1, &h2);
        let both = sinr(&sc, &p, 0, 0, 3, &h2);
        assert!(both < alone);
    }

    #[test]
    fn deterministic_rate_closed_form() {
        // Single station, channel tuned so SINR = 3 exactly: rate = W * log2(4).
        let mut config = ScenarioConfig::default();
        config.network.stations = Some(vec![StationSpec {
            kind: BsKind::Macro,
            x_m: 0.0,
            y_m: 0.0,
            tx_power_w: None,
            q: None,
        }]);
        config.network.test_points = Some(vec![TestPointSpec { x_m: 0.0, y_m: 0.0 }]);
        let sc = build_scenario(&config).unwrap();
        let p = reuse1(1).unwrap();
        let s = sinr(&sc, &p, 0, 0, 0, &[1.0]);
        let r = ergodic_rate(&sc, &p, 0, 0, 0, &RateMode::Deterministic);
        let expected = sc.bandwidth_hz * (1.0 + s).log2();
        assert!((r / expected - 1.0).abs() < 1e-12);
    }

    /// Adaptive Simpson quadrature of f over [a, b].
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for j in 1..n {
            let x = a + h * j as f64;
            acc += f(x) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn monte_carlo_mean_matches_quadrature() {
        // One station; scale tx power so mean SNR is exactly 3. Then the
        // fading-averaged spectral efficiency is E[log2(1 + 3 X)], X ~ Exp(1),
        // which by quadrature (and via exp(1/3) E1(1/3) / ln 2) is 1.6689...
        let oracle = simpson(&|x: f64| (1.0 + 3.0 * x).ln() * (-x).exp(), 0.0, 60.0, 20000)
            / std::f64::consts::LN_2;
        assert!((oracle - 1.66895).abs() < 1e-4, "quadrature drifted: {oracle}");

        let mut config = ScenarioConfig::default();
        config.network.stations = Some(vec![StationSpec {
            kind: BsKind::Macro,
            x_m: 0.0,
            y_m: 0.0,
            tx_power_w: None,
            q: None,
        }]);
        config.network.test_points = Some(vec![TestPointSpec { x_m: 1000.0, y_m: 0.0 }]);
        config.propagation.macro_cell.antenna_gain_db = 0.0;
        let probe = build_scenario(&config).unwrap();
        let snr = probe.bss[0].tx_psd * probe.channel_gain(0, 0) / probe.noise_psd;
        config.power.macro_tx_power_w *= 3.0 / snr;
        let sc = build_scenario(&config).unwrap();

        let p = reuse1(1).unwrap();
        let n = 100_000;
        let mode = RateMode::MonteCarlo { samples: n, seed: 11 };
        let got = ergodic_rate(&sc, &p, 0, 0, 0, &mode) / sc.bandwidth_hz;
        // std of log2(1+3X) is below 1.1; allow 3 standard errors.
        let se = 1.1 / (n as f64).sqrt();
        assert!(
            (got - oracle).abs() < 3.0 * se,
            "MC mean {got} vs quadrature {oracle} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn tensor_matches_pointwise_rates_and_mc_is_deterministic() {
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        let mode = RateMode::MonteCarlo { samples: 64, seed: 5 };
        let t1 = build_rate_tensor(&sc, &p, &mode).unwrap();
        let t2 = build_rate_tensor(&sc, &p, &mode).unwrap();
        for k in 0..2 {
            for b in 0..2 {
                for i in 0..4 {
                    assert_eq!(t1.rate(k, b, i), t2.rate(k, b, i));
                    let single = ergodic_rate(&sc, &p, k, b, i, &mode);
                    let got = t1.rate(k, b, i);
                    assert!(
                        (got - single).abs() <= 1e-9 * single.max(1.0),
                        "tensor {got} vs pointwise {single}"
                    );
                }
            }
        }
    }

    #[test]
    fn tensor_invariants_on_small_network() {
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        for mode in [RateMode::Deterministic, RateMode::MonteCarlo { samples: 32, seed: 1 }] {
            let t = build_rate_tensor(&sc, &p, &mode).unwrap();
            t.check_invariants(&p).unwrap();
            assert_eq!(t.monotonicity_violations(&p), 0);
            // all-off row is identically zero.
            for k in 0..2 {
                for b in 0..2 {
                    assert_eq!(t.rate(k, b, 0), 0.0);
                }
            }
        }
    }

    #[test]
    fn corrupted_tensor_fails_invariants() {
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        let t = build_rate_tensor(&sc, &p, &RateMode::Deterministic).unwrap();
        let mut kbi = Vec::new();
        for k in 0..2 {
            for b in 0..2 {
                for i in 0..4 {
                    kbi.push(t.rate(k, b, i));
                }
            }
        }
        kbi[3] = -1.0; // (k=0, b=0, i=3)
        let bad = RateTensor::from_raw(2, 2, 4, kbi).unwrap();
        assert!(bad.check_invariants(&p).is_err());
    }

    #[test]
    fn cache_roundtrip_and_mismatch_rebuild() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rates.bin");
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        let mode = RateMode::Deterministic;
        let t = RateTensor::load_or_build(&path, &sc, &p, &mode).unwrap();
        let reread = RateTensor::read_cache(&path).unwrap();
        assert_eq!(reread.scenario_hash, t.scenario_hash);
        for k in 0..2 {
            for b in 0..2 {
                for i in 0..4 {
                    assert_eq!(reread.rate(k, b, i), t.rate(k, b, i));
                }
            }
        }
        // Provenance mismatch (different patterns) forces a rebuild.
        let p2 = reuse1(2).unwrap();
        let t2 = RateTensor::load_or_build(&path, &sc, &p2, &mode).unwrap();
        assert_eq!(t2.i_count(), 1);
        let reread2 = RateTensor::read_cache(&path).unwrap();
        assert_eq!(reread2.pattern_hash, pattern_digest(&p2));
    }

    #[test]
    fn cache_key_ignores_demand_overrides() {
        let base = two_station_scenario();
        let mut config = base.to_config().clone();
        config.demand.uniform_bps = Some(7.5e5);
        let heavier = build_scenario(&config).unwrap();
        assert_eq!(
            scenario_digest(&base),
            scenario_digest(&heavier),
            "a demand change must not invalidate the rate cache"
        );
        let mut moved = base.to_config().clone();
        moved.network.test_points =
            Some(vec![TestPointSpec { x_m: -300.0, y_m: 0.0 }, TestPointSpec { x_m: 0.0, y_m: 0.0 }]);
        let relocated = build_scenario(&moved).unwrap();
        assert_ne!(
            scenario_digest(&base),
            scenario_digest(&relocated),
            "a layout change must invalidate the rate cache"
        );
    }

    #[test]
    fn csv_export_shape() {
        let sc = two_station_scenario();
        let p = reuse1(2).unwrap();
        let t = build_rate_tensor(&sc, &p, &RateMode::Deterministic).unwrap();
        let mut buf = Vec::new();
        t.export_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert_eq!(lines[0], "k,b,i,rate_bps");
        assert!(lines[1].starts_with("0,0,0,"));
    }

    #[test]
    fn select_patterns_slices_rows() {
        let sc = two_station_scenario();
        let p = enumerate_all(2).unwrap();
        let t = build_rate_tensor(&sc, &p, &RateMode::Deterministic).unwrap();
        let sub = t.select_patterns(&[1, 3]);
        assert_eq!(sub.i_count(), 2);
        for k in 0..2 {
            for b in 0..2 {
                assert_eq!(sub.rate(k, b, 0), t.rate(k, b, 1));
                assert_eq!(sub.rate(k, b, 1), t.rate(k, b, 3));
            }
        }
    }
}
