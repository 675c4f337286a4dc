//! Network scenario: base stations, test points, propagation and power models.
//!
//! A scenario is built from a JSON config. Generated layouts (macro ring, picos
//! dropped inside their parent cell, test points over the coverage region) are
//! fully determined by the config seed; a built scenario serializes back to the
//! same schema with explicit positions, and rebuilding from that file is
//! byte-identical.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsKind {
    Macro,
    Pico,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub kind: BsKind,
    /// Planar position in meters.
    pub position: (f64, f64),
    /// Transmit power spectral density in W/Hz (flat over the band).
    pub tx_psd: f64,
    /// Operational power draw at full load, in watts.
    pub op_power_max: f64,
    /// Load-independent share of the operational power (q in [0, 1]).
    pub fixed_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestPoint {
    pub id: usize,
    pub position: (f64, f64),
    /// Demanded rate in bit/s.
    pub demand: f64,
}

/// Distance-based path loss, evaluated in dB with distance in kilometers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub slope_db_per_decade: f64,
    pub antenna_gain_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub macro_cell: PathLossModel,
    pub pico_cell: PathLossModel,
    /// Log-normal shadowing standard deviation in dB; 0 disables shadowing.
    #[serde(default)]
    pub shadowing_std_db: f64,
    /// Distances are clamped below this value before the path-loss evaluation.
    #[serde(default = "default_min_distance")]
    pub min_distance_m: f64,
}

fn default_min_distance() -> f64 {
    10.0
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            macro_cell: PathLossModel {
                intercept_db: 128.1,
                slope_db_per_decade: 37.6,
                antenna_gain_db: 15.0,
            },
            pico_cell: PathLossModel {
                intercept_db: 140.7,
                slope_db_per_decade: 36.7,
                antenna_gain_db: 5.0,
            },
            shadowing_std_db: 0.0,
            min_distance_m: default_min_distance(),
        }
    }
}

/// Affine operational power model per station class: slope * tx_watts + intercept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpPowerModel {
    pub macro_slope: f64,
    pub macro_intercept_w: f64,
    pub pico_slope: f64,
    pub pico_intercept_w: f64,
}

impl Default for OpPowerModel {
    fn default() -> Self {
        OpPowerModel {
            macro_slope: 22.6 / 3.0,
            macro_intercept_w: 412.4 / 3.0,
            pico_slope: 5.5,
            pico_intercept_w: 32.0,
        }
    }
}

impl OpPowerModel {
    /// Operational power draw (W) of a station transmitting at `tx_watts`.
    pub fn power(&self, kind: BsKind, tx_watts: f64) -> Result<f64> {
        if !(tx_watts >= 0.0) {
            return Err(Error::invariant(
                "tx_power_watts",
                format!("must be nonnegative, got {tx_watts}"),
            ));
        }
        Ok(match kind {
            BsKind::Macro => self.macro_slope * tx_watts + self.macro_intercept_w,
            BsKind::Pico => self.pico_slope * tx_watts + self.pico_intercept_w,
        })
    }
}

/// Operational power under the default model.
pub fn operational_power(kind: BsKind, tx_watts: f64) -> Result<f64> {
    OpPowerModel::default().power(kind, tx_watts)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerConfig {
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_noise_psd")]
    pub noise_psd_w_per_hz: f64,
    #[serde(default = "default_macro_tx")]
    pub macro_tx_power_w: f64,
    #[serde(default = "default_pico_tx")]
    pub pico_tx_power_w: f64,
    #[serde(default)]
    pub op_model: OpPowerModel,
    /// Load-independent operational power fraction per class.
    #[serde(default = "default_q_macro")]
    pub q_macro: f64,
    #[serde(default = "default_q_pico")]
    pub q_pico: f64,
}

fn default_bandwidth() -> f64 {
    1.0e7
}
// Thermal noise at -174 dBm/Hz plus a 9 dB receiver noise figure.
fn default_noise_psd() -> f64 {
    1.0e-3 * 10f64.powf((-174.0 + 9.0) / 10.0)
}
fn default_macro_tx() -> f64 {
    40.0
}
fn default_pico_tx() -> f64 {
    1.0
}
fn default_q_macro() -> f64 {
    1.0
}
fn default_q_pico() -> f64 {
    0.5
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            bandwidth_hz: default_bandwidth(),
            noise_psd_w_per_hz: default_noise_psd(),
            macro_tx_power_w: default_macro_tx(),
            pico_tx_power_w: default_pico_tx(),
            op_model: OpPowerModel::default(),
            q_macro: default_q_macro(),
            q_pico: default_q_pico(),
        }
    }
}

/// Explicit station placement; tx power and q fall back to the class defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationSpec {
    pub kind: BsKind,
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestPointSpec {
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default = "default_macro_count")]
    pub macro_count: usize,
    #[serde(default = "default_picos_per_macro")]
    pub picos_per_macro: usize,
    #[serde(default = "default_macro_radius")]
    pub macro_radius_m: f64,
    #[serde(default = "default_tp_count")]
    pub test_point_count: usize,
    /// When present these override the generated layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stations: Option<Vec<StationSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_points: Option<Vec<TestPointSpec>>,
}

fn default_macro_count() -> usize {
    3
}
fn default_picos_per_macro() -> usize {
    4
}
fn default_macro_radius() -> f64 {
    500.0
}
fn default_tp_count() -> usize {
    50
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            macro_count: default_macro_count(),
            picos_per_macro: default_picos_per_macro(),
            macro_radius_m: default_macro_radius(),
            test_point_count: default_tp_count(),
            stations: None,
            test_points: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandConfig {
    /// Uniform demand applied to every test point, bit/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_bps: Option<f64>,
    /// Per-test-point overrides by id; takes precedence over `uniform_bps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_test_point: Option<std::collections::BTreeMap<usize, f64>>,
}

impl Default for DemandConfig {
    fn default() -> Self {
        DemandConfig {
            uniform_bps: Some(1.0e6),
            per_test_point: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub power: PowerConfig,
    #[serde(default)]
    pub demand: DemandConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            network: NetworkConfig::default(),
            propagation: PropagationConfig::default(),
            power: PowerConfig::default(),
            demand: DemandConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub bss: Vec<BaseStation>,
    pub tps: Vec<TestPoint>,
    pub bandwidth_hz: f64,
    pub noise_psd: f64,
    pub gain_model: PropagationConfig,
    pub rng_seed: u64,
    config: ScenarioConfig,
    /// Linear shadowing factor per (b, k), frozen at build time.
    shadow: Vec<f64>,
}

/// splitmix64; used to derive independent per-entity RNG seeds from one seed.
pub(crate) fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(base: u64, tag: u64, a: u64, b: u64) -> u64 {
    mix_seed(base ^ mix_seed(tag ^ mix_seed(a).wrapping_add(b.wrapping_mul(0x2545f4914f6cdd1d))))
}

/// One standard normal draw via Box-Muller from a dedicated stream.
fn normal_draw(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn macro_centers(count: usize, radius: f64) -> Vec<(f64, f64)> {
    if count == 1 {
        return vec![(0.0, 0.0)];
    }
    // Ring layout; adjacent cells overlap so the coverage region is connected.
    (0..count)
        .map(|j| {
            let ang = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            (radius * ang.cos(), radius * ang.sin())
        })
        .collect()
}

fn point_in_disk(rng: &mut ChaCha8Rng, center: (f64, f64), radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let ang = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    (center.0 + r * ang.cos(), center.1 + r * ang.sin())
}

pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    validate_config(config)?;
    let net = &config.network;
    let power = &config.power;

    let station_specs: Vec<StationSpec> = match &net.stations {
        Some(list) => list.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x10, 0, 0));
            let centers = macro_centers(net.macro_count, net.macro_radius_m);
            let mut specs = Vec::new();
            for &(x, y) in &centers {
                specs.push(StationSpec {
                    kind: BsKind::Macro,
                    x_m: x,
                    y_m: y,
                    tx_power_w: None,
                    q: None,
                });
            }
            for &center in &centers {
                for _ in 0..net.picos_per_macro {
                    let (x, y) = point_in_disk(&mut rng, center, net.macro_radius_m);
                    specs.push(StationSpec {
                        kind: BsKind::Pico,
                        x_m: x,
                        y_m: y,
                        tx_power_w: None,
                        q: None,
                    });
                }
            }
            specs
        }
    };

    let tp_specs: Vec<TestPointSpec> = match &net.test_points {
        Some(list) => list.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x11, 0, 0));
            let centers = macro_centers(net.macro_count, net.macro_radius_m);
            let r = net.macro_radius_m;
            let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for &(x, y) in &centers {
                lo_x = lo_x.min(x - r);
                hi_x = hi_x.max(x + r);
                lo_y = lo_y.min(y - r);
                hi_y = hi_y.max(y + r);
            }
            let mut specs = Vec::with_capacity(net.test_point_count);
            while specs.len() < net.test_point_count {
                let x = rng.gen_range(lo_x..hi_x);
                let y = rng.gen_range(lo_y..hi_y);
                let covered = centers
                    .iter()
                    .any(|&(cx, cy)| (x - cx).hypot(y - cy) <= r);
                if covered {
                    specs.push(TestPointSpec { x_m: x, y_m: y });
                }
            }
            specs
        }
    };

    let bss: Vec<BaseStation> = station_specs
        .iter()
        .enumerate()
        .map(|(id, s)| {
            let tx = s.tx_power_w.unwrap_or(match s.kind {
                BsKind::Macro => power.macro_tx_power_w,
                BsKind::Pico => power.pico_tx_power_w,
            });
            let q = s.q.unwrap_or(match s.kind {
                BsKind::Macro => power.q_macro,
                BsKind::Pico => power.q_pico,
            });
            Ok(BaseStation {
                id,
                kind: s.kind,
                position: (s.x_m, s.y_m),
                tx_psd: tx / power.bandwidth_hz,
                op_power_max: power.op_model.power(s.kind, tx)?,
                fixed_fraction: q,
            })
        })
        .collect::<Result<_>>()?;

    let demands = resolve_demands(&config.demand, tp_specs.len())?;
    let tps: Vec<TestPoint> = tp_specs
        .iter()
        .zip(demands)
        .enumerate()
        .map(|(id, (t, demand))| TestPoint {
            id,
            position: (t.x_m, t.y_m),
            demand,
        })
        .collect();

    // Shadowing is frozen here so channel_gain is a pure function afterwards.
    let std_db = config.propagation.shadowing_std_db;
    let mut shadow = vec![1.0; bss.len() * tps.len()];
    if std_db > 0.0 {
        for b in 0..bss.len() {
            for k in 0..tps.len() {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    config.seed,
                    0x5ad0,
                    b as u64,
                    k as u64,
                ));
                shadow[b * tps.len() + k] = 10f64.powf(std_db * normal_draw(&mut rng) / 10.0);
            }
        }
    }

    // Canonical config for serialization: explicit layout, everything else kept.
    let mut canonical = config.clone();
    canonical.network.stations = Some(station_specs);
    canonical.network.test_points = Some(tp_specs);

    Ok(Scenario {
        bss,
        tps,
        bandwidth_hz: power.bandwidth_hz,
        noise_psd: power.noise_psd_w_per_hz,
        gain_model: config.propagation.clone(),
        rng_seed: config.seed,
        config: canonical,
        shadow,
    })
}

fn resolve_demands(demand: &DemandConfig, k_count: usize) -> Result<Vec<f64>> {
    let base = demand.uniform_bps.unwrap_or(0.0);
    let mut out = vec![base; k_count];
    if let Some(map) = &demand.per_test_point {
        for (&id, &d) in map {
            if id >= k_count {
                return Err(Error::invariant(
                    "demand.per_test_point",
                    format!("test point id {id} out of range (K = {k_count})"),
                ));
            }
            out[id] = d;
        }
    }
    for (k, &d) in out.iter().enumerate() {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::invariant(
                "demand",
                format!("demand for test point {k} must be finite and nonnegative, got {d}"),
            ));
        }
    }
    Ok(out)
}

fn validate_config(config: &ScenarioConfig) -> Result<()> {
    let net = &config.network;
    let b_count = net
        .stations
        .as_ref()
        .map(|s| s.len())
        .unwrap_or(net.macro_count + net.macro_count * net.picos_per_macro);
    let k_count = net
        .test_points
        .as_ref()
        .map(|t| t.len())
        .unwrap_or(net.test_point_count);
    if b_count == 0 {
        return Err(Error::invariant("network", "at least one base station required"));
    }
    if b_count > 64 {
        return Err(Error::invariant(
            "network",
            format!("at most 64 base stations supported, got {b_count}"),
        ));
    }
    if k_count == 0 {
        return Err(Error::invariant("network", "at least one test point required"));
    }
    if net.stations.is_none() && net.macro_count == 0 {
        return Err(Error::invariant("network.macro_count", "must be positive"));
    }
    if net.stations.is_none() && !(net.macro_radius_m > 0.0) {
        return Err(Error::invariant("network.macro_radius_m", "must be positive"));
    }
    let p = &config.power;
    if !(p.bandwidth_hz > 0.0) {
        return Err(Error::invariant("power.bandwidth_hz", "must be positive"));
    }
    if !(p.noise_psd_w_per_hz > 0.0) {
        return Err(Error::invariant("power.noise_psd_w_per_hz", "must be positive"));
    }
    if !(p.macro_tx_power_w > 0.0) || !(p.pico_tx_power_w > 0.0) {
        return Err(Error::invariant("power.tx_power", "must be positive"));
    }
    for (name, q) in [("power.q_macro", p.q_macro), ("power.q_pico", p.q_pico)] {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invariant(name, format!("must lie in [0, 1], got {q}")));
        }
    }
    if let Some(stations) = &net.stations {
        for (i, s) in stations.iter().enumerate() {
            if let Some(q) = s.q {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::invariant(
                        "network.stations",
                        format!("station {i}: q must lie in [0, 1], got {q}"),
                    ));
                }
            }
            if let Some(tx) = s.tx_power_w {
                if !(tx > 0.0) {
                    return Err(Error::invariant(
                        "network.stations",
                        format!("station {i}: tx_power_w must be positive"),
                    ));
                }
            }
        }
    }
    let g = &config.propagation;
    if !(g.min_distance_m > 0.0) {
        return Err(Error::invariant("propagation.min_distance_m", "must be positive"));
    }
    if !(g.shadowing_std_db >= 0.0) {
        return Err(Error::invariant("propagation.shadowing_std_db", "must be nonnegative"));
    }
    Ok(())
}

impl Scenario {
    pub fn b_count(&self) -> usize {
        self.bss.len()
    }

    pub fn k_count(&self) -> usize {
        self.tps.len()
    }

    pub fn demands(&self) -> Vec<f64> {
        self.tps.iter().map(|t| t.demand).collect()
    }

    /// Config with explicit layout; `build_scenario` on it reproduces `self`.
    pub fn to_config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.config)?)
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        build_scenario(&config)
    }

    /// Average channel power gain of link (b, k), shadowing included.
    pub fn channel_gain(&self, b: usize, k: usize) -> f64 {
        let bs = &self.bss[b];
        let tp = &self.tps[k];
        let model = match bs.kind {
            BsKind::Macro => &self.gain_model.macro_cell,
            BsKind::Pico => &self.gain_model.pico_cell,
        };
        let d_m = (bs.position.0 - tp.position.0)
            .hypot(bs.position.1 - tp.position.1)
            .max(self.gain_model.min_distance_m);
        let pl_db = model.intercept_db + model.slope_db_per_decade * (d_m / 1000.0).log10();
        10f64.powf((model.antenna_gain_db - pl_db) / 10.0) * self.shadow[b * self.tps.len() + k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_is_fifteen_cells() {
        let sc = build_scenario(&ScenarioConfig::default()).unwrap();
        assert_eq!(sc.b_count(), 15);
        assert_eq!(sc.bss.iter().filter(|b| b.kind == BsKind::Macro).count(), 3);
        assert_eq!(sc.bss.iter().filter(|b| b.kind == BsKind::Pico).count(), 12);
        assert_eq!(sc.k_count(), 50);
    }

    #[test]
    fn operational_power_examples() {
        let p = operational_power(BsKind::Macro, 40.0).unwrap();
        assert!((p - 438.8).abs() < 0.05, "macro at 40 W: {p}");
        let p = operational_power(BsKind::Pico, 1.0).unwrap();
        assert!((p - 37.5).abs() < 0.01, "pico at 1 W: {p}");
        let p = operational_power(BsKind::Macro, 0.0).unwrap();
        assert!((p - 412.4 / 3.0).abs() < 1e-12, "macro idle: {p}");
        assert!(operational_power(BsKind::Pico, -1.0).is_err());
    }

    #[test]
    fn operational_power_is_affine_in_tx_power() {
        let m = OpPowerModel::default();
        let p0 = m.power(BsKind::Macro, 10.0).unwrap();
        let p1 = m.power(BsKind::Macro, 20.0).unwrap();
        let p2 = m.power(BsKind::Macro, 30.0).unwrap();
        assert!((p2 - p1 - (p1 - p0)).abs() < 1e-9);
    }

    fn single_link_config() -> ScenarioConfig {
        let mut config = ScenarioConfig::default();
        config.network.stations = Some(vec![StationSpec {
            kind: BsKind::Macro,
            x_m: 0.0,
            y_m: 0.0,
            tx_power_w: None,
            q: None,
        }]);
        config.network.test_points = Some(vec![TestPointSpec { x_m: 1000.0, y_m: 0.0 }]);
        config
    }

    #[test]
    fn channel_gain_matches_path_loss_formula() {
        let mut config = single_link_config();
        config.propagation.macro_cell.antenna_gain_db = 0.0;
        let sc = build_scenario(&config).unwrap();
        // PL(1 km) = 128.1 dB.
        let expected = 10f64.powf(-12.81);
        let g = sc.channel_gain(0, 0);
        assert!((g / expected - 1.0).abs() < 1e-12, "gain {g} vs {expected}");
    }

    #[test]
    fn distances_below_clamp_share_one_gain() {
        let mut config = single_link_config();
        config.network.test_points = Some(vec![
            TestPointSpec { x_m: 3.0, y_m: 0.0 },
            TestPointSpec { x_m: 0.0, y_m: 9.99 },
            TestPointSpec { x_m: 10.0, y_m: 0.0 },
        ]);
        let sc = build_scenario(&config).unwrap();
        assert_eq!(sc.channel_gain(0, 0), sc.channel_gain(0, 2));
        assert_eq!(sc.channel_gain(0, 1), sc.channel_gain(0, 2));
    }

    #[test]
    fn gain_decreases_with_distance() {
        let mut config = single_link_config();
        let tps: Vec<TestPointSpec> = (1..40)
            .map(|j| TestPointSpec { x_m: 25.0 * j as f64, y_m: 0.0 })
            .collect();
        config.network.test_points = Some(tps);
        let sc = build_scenario(&config).unwrap();
        for k in 1..sc.k_count() {
            assert!(
                sc.channel_gain(0, k) < sc.channel_gain(0, k - 1),
                "gain must fall with distance (k = {k})"
            );
        }
    }

    #[test]
    fn zero_test_points_rejected() {
        let mut config = ScenarioConfig::default();
        config.network.test_point_count = 0;
        match build_scenario(&config) {
            Err(Error::Invariant { field, .. }) => assert_eq!(field, "network"),
            other => panic!("expected invariant error, got {other:?}"),
        }
    }

    #[test]
    fn bad_field_is_named_in_error() {
        let mut config = ScenarioConfig::default();
        config.power.bandwidth_hz = 0.0;
        match build_scenario(&config) {
            Err(Error::Invariant { field, .. }) => assert_eq!(field, "power.bandwidth_hz"),
            other => panic!("expected invariant error, got {other:?}"),
        }
    }

    #[test]
    fn same_seed_serializes_identically() {
        let config = ScenarioConfig::default();
        let a = build_scenario(&config).unwrap().to_json().unwrap();
        let b = build_scenario(&config).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let mut other = config.clone();
        other.seed = 1;
        let c = build_scenario(&other).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn roundtrip_through_json_is_stable() {
        let sc = build_scenario(&ScenarioConfig::default()).unwrap();
        let json = sc.to_json().unwrap();
        let back = Scenario::from_json(&json).unwrap();
        assert_eq!(json, back.to_json().unwrap());
        assert_eq!(sc.bss.len(), back.bss.len());
        for (x, y) in sc.bss.iter().zip(back.bss.iter()) {
            assert_eq!(x.position, y.position);
            assert_eq!(x.op_power_max, y.op_power_max);
        }
    }

    #[test]
    fn shadowing_is_frozen_per_link() {
        let mut config = ScenarioConfig::default();
        config.propagation.shadowing_std_db = 8.0;
        let a = build_scenario(&config).unwrap();
        let b = build_scenario(&config).unwrap();
        for bs in 0..a.b_count() {
            for k in 0..a.k_count() {
                assert_eq!(a.channel_gain(bs, k), b.channel_gain(bs, k));
            }
        }
        // Different seed, different shadowing.
        config.seed = 99;
        let c = build_scenario(&config).unwrap();
        let same = (0..a.b_count())
            .flat_map(|bs| (0..a.k_count()).map(move |k| (bs, k)))
            .all(|(bs, k)| a.channel_gain(bs, k) == c.channel_gain(bs, k));
        assert!(!same);
    }

    #[test]
    fn picos_lie_inside_parent_cells() {
        let sc = build_scenario(&ScenarioConfig::default()).unwrap();
        let centers: Vec<_> = sc
            .bss
            .iter()
            .filter(|b| b.kind == BsKind::Macro)
            .map(|b| b.position)
            .collect();
        for bs in sc.bss.iter().filter(|b| b.kind == BsKind::Pico) {
            let inside = centers.iter().any(|&(cx, cy)| {
                (bs.position.0 - cx).hypot(bs.position.1 - cy) <= 500.0 + 1e-9
            });
            assert!(inside, "pico {} outside every macro cell", bs.id);
        }
    }
}
