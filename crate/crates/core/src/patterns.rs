//! Interference patterns: binary on/off rows over the base stations.
//!
//! A pattern row says which stations transmit simultaneously; the solver mixes
//! rows in time/frequency shares. Full enumeration is exponential in the
//! station count, so larger networks use curated preselection families.

use crate::error::{Error, Result};
use crate::scenario::{BsKind, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    b_count: usize,
    rows: Vec<u64>,
    labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    AllOn,
    LeaveOneOut,
    MacrosOnly,
    SingleBs,
    MacroWithLocalPicos,
    Random { count: usize, seed: u64 },
}

impl PatternSet {
    fn from_rows(b_count: usize, rows: Vec<u64>, labels: Vec<String>) -> Self {
        debug_assert_eq!(rows.len(), labels.len());
        PatternSet { b_count, rows, labels }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn b_count(&self) -> usize {
        self.b_count
    }

    /// True when station `b` transmits under pattern `i`.
    pub fn is_on(&self, i: usize, b: usize) -> bool {
        self.rows[i] >> b & 1 == 1
    }

    pub fn mask(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn on_count(&self, i: usize) -> usize {
        self.rows[i].count_ones() as usize
    }

    /// Index of the all-on row, when present.
    pub fn all_on_index(&self) -> Option<usize> {
        let full = full_mask(self.b_count);
        self.rows.iter().position(|&r| r == full)
    }

    /// Appends rows of `other`, dropping duplicates; first occurrence wins.
    pub fn union(&self, other: &PatternSet) -> Result<PatternSet> {
        if self.b_count != other.b_count {
            return Err(Error::invariant(
                "patterns",
                format!(
                    "union of pattern sets over {} and {} stations",
                    self.b_count, other.b_count
                ),
            ));
        }
        let mut rows = self.rows.clone();
        let mut labels = self.labels.clone();
        for (row, label) in other.rows.iter().zip(&other.labels) {
            if !rows.contains(row) {
                rows.push(*row);
                labels.push(label.clone());
            }
        }
        Ok(PatternSet::from_rows(self.b_count, rows, labels))
    }

    /// Rows whose active stations all belong to `keep` (a station-index mask).
    pub fn restrict_to(&self, keep: u64) -> PatternSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (row, label) in self.rows.iter().zip(&self.labels) {
            if row & !keep == 0 {
                rows.push(*row);
                labels.push(label.clone());
            }
        }
        PatternSet::from_rows(self.b_count, rows, labels)
    }

    /// Indices of `self` rows in the original set ordering after `restrict_to`.
    pub fn restricted_indices(&self, keep: u64) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&i| self.rows[i] & !keep == 0)
            .collect()
    }

    /// Bit-string form, station 0 leftmost: "110" means stations 0 and 1 on.
    pub fn to_bit_strings(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|row| {
                (0..self.b_count)
                    .map(|b| if row >> b & 1 == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }

    pub fn from_bit_strings(strings: &[String]) -> Result<PatternSet> {
        if strings.is_empty() {
            return Err(Error::invariant("patterns", "empty pattern list"));
        }
        let b_count = strings[0].len();
        if b_count == 0 || b_count > 64 {
            return Err(Error::invariant(
                "patterns",
                format!("row width must be 1..=64, got {b_count}"),
            ));
        }
        let mut rows = Vec::with_capacity(strings.len());
        for (i, s) in strings.iter().enumerate() {
            if s.len() != b_count {
                return Err(Error::invariant(
                    "patterns",
                    format!("row {i} has width {} but row 0 has width {b_count}", s.len()),
                ));
            }
            let mut mask = 0u64;
            for (b, c) in s.chars().enumerate() {
                match c {
                    '1' => mask |= 1 << b,
                    '0' => {}
                    other => {
                        return Err(Error::invariant(
                            "patterns",
                            format!("row {i}: unexpected character {other:?}"),
                        ))
                    }
                }
            }
            if rows.contains(&mask) {
                return Err(Error::invariant("patterns", format!("row {i} is a duplicate")));
            }
            rows.push(mask);
        }
        let labels = vec!["loaded".to_string(); rows.len()];
        Ok(PatternSet::from_rows(b_count, rows, labels))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_bit_strings()).expect("bit strings serialize")
    }

    pub fn from_json(text: &str) -> Result<PatternSet> {
        let strings: Vec<String> =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        PatternSet::from_bit_strings(&strings)
    }
}

fn full_mask(b_count: usize) -> u64 {
    if b_count == 64 {
        u64::MAX
    } else {
        (1u64 << b_count) - 1
    }
}

/// All 2^B on/off rows, row i being the binary expansion of i.
pub fn enumerate_all(b_count: usize) -> Result<PatternSet> {
    enumerate_all_with_cap(b_count, ENUMERATION_CAP)
}

pub fn enumerate_all_with_cap(b_count: usize, cap: usize) -> Result<PatternSet> {
    if b_count == 0 {
        return Err(Error::invariant("patterns", "no base stations"));
    }
    if b_count > cap {
        return Err(Error::PatternCap { cells: b_count, cap });
    }
    let n = 1usize << b_count;
    let rows: Vec<u64> = (0..n as u64).collect();
    let labels = vec!["enumerated".to_string(); n];
    Ok(PatternSet::from_rows(b_count, rows, labels))
}

/// The single everything-on row (classic full frequency reuse).
pub fn reuse1(b_count: usize) -> Result<PatternSet> {
    if b_count == 0 || b_count > 64 {
        return Err(Error::invariant("patterns", format!("bad station count {b_count}")));
    }
    Ok(PatternSet::from_rows(
        b_count,
        vec![full_mask(b_count)],
        vec!["all_on".to_string()],
    ))
}

/// Index of the nearest macro for each station (parent cell for picos).
fn parent_macro(scenario: &Scenario) -> Vec<usize> {
    let macros: Vec<usize> = (0..scenario.b_count())
        .filter(|&b| scenario.bss[b].kind == BsKind::Macro)
        .collect();
    scenario
        .bss
        .iter()
        .map(|bs| {
            let mut best = macros.first().copied().unwrap_or(0);
            let mut best_d = f64::MAX;
            for &m in &macros {
                let c = scenario.bss[m].position;
                let d = (bs.position.0 - c.0).hypot(bs.position.1 - c.1);
                if d < best_d {
                    best_d = d;
                    best = m;
                }
            }
            best
        })
        .collect()
}

/// Every built-in deterministic family; the usual choice when the full
/// enumeration is out of reach.
pub fn standard_strategies() -> Vec<Strategy> {
    vec![
        Strategy::AllOn,
        Strategy::LeaveOneOut,
        Strategy::MacrosOnly,
        Strategy::MacroWithLocalPicos,
        Strategy::SingleBs,
    ]
}

/// Curated pattern families; the all-on row is always included first.
pub fn preselect(scenario: &Scenario, strategies: &[Strategy]) -> Result<PatternSet> {
    let b_count = scenario.b_count();
    if b_count > 64 {
        return Err(Error::invariant("patterns", "more than 64 stations"));
    }
    let full = full_mask(b_count);
    let mut rows = vec![full];
    let mut labels = vec!["all_on".to_string()];
    let push = |mask: u64, label: String, rows: &mut Vec<u64>, labels: &mut Vec<String>| {
        if !rows.contains(&mask) {
            rows.push(mask);
            labels.push(label);
        }
    };
    for strategy in strategies {
        match strategy {
            Strategy::AllOn => {}
            Strategy::LeaveOneOut => {
                for b in 0..b_count {
                    push(full & !(1 << b), format!("leave_one_out({b})"), &mut rows, &mut labels);
                }
            }
            Strategy::MacrosOnly => {
                let mask = scenario
                    .bss
                    .iter()
                    .filter(|bs| bs.kind == BsKind::Macro)
                    .fold(0u64, |m, bs| m | 1 << bs.id);
                if mask != 0 {
                    push(mask, "macros_only".to_string(), &mut rows, &mut labels);
                }
            }
            Strategy::SingleBs => {
                for b in 0..b_count {
                    push(1 << b, format!("single_bs({b})"), &mut rows, &mut labels);
                }
            }
            Strategy::MacroWithLocalPicos => {
                let parents = parent_macro(scenario);
                for m in (0..b_count).filter(|&b| scenario.bss[b].kind == BsKind::Macro) {
                    let mask = (0..b_count)
                        .filter(|&b| b == m || (scenario.bss[b].kind == BsKind::Pico && parents[b] == m))
                        .fold(0u64, |acc, b| acc | 1 << b);
                    push(mask, format!("macro_with_local_picos({m})"), &mut rows, &mut labels);
                }
            }
            Strategy::Random { count, seed } => {
                let space = if b_count >= 63 { u64::MAX as u128 } else { 1u128 << b_count };
                if *count as u128 + rows.len() as u128 > space {
                    return Err(Error::invariant(
                        "patterns",
                        format!("cannot draw {count} distinct rows over {b_count} stations"),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut drawn = 0usize;
                while drawn < *count {
                    let mask = rng.gen::<u64>() & full;
                    if !rows.contains(&mask) {
                        rows.push(mask);
                        labels.push(format!("random({drawn})"));
                        drawn += 1;
                    }
                }
            }
        }
    }
    Ok(PatternSet::from_rows(b_count, rows, labels))
}
