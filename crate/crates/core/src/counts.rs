//! Coincidence count tables with detector-efficiency correction.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One analyzer outcome within one measurement setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub setting: String,
    pub outcome: String,
    pub raw: u64,
    /// Product of the relative efficiencies of the detectors involved.
    pub efficiency: f64,
    /// `raw / efficiency`.
    pub corrected: f64,
}

impl CountRow {
    pub fn new(
        setting: impl Into<String>,
        outcome: impl Into<String>,
        raw: u64,
        efficiency: f64,
    ) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "efficiency {efficiency} outside (0, 1]"
            )));
        }
        Ok(Self {
            setting: setting.into(),
            outcome: outcome.into(),
            raw,
            efficiency,
            corrected: raw as f64 / efficiency,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    rows: Vec<CountRow>,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: Vec<CountRow>) -> Self {
        Self { rows }
    }

    pub fn push(&mut self, row: CountRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[CountRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_raw(&self) -> u64 {
        self.rows.iter().map(|r| r.raw).sum()
    }

    pub fn total_corrected(&self) -> f64 {
        self.rows.iter().map(|r| r.corrected).sum()
    }

    /// Corrected counts keyed by setting, then outcome.
    pub fn by_setting(&self) -> BTreeMap<&str, BTreeMap<&str, f64>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for r in &self.rows {
            *out.entry(&r.setting)
                .or_default()
                .entry(&r.outcome)
                .or_insert(0.0) += r.corrected;
        }
        out
    }

    /// Same table with new raw counts (in row order); corrected counts are
    /// recomputed with the stored efficiencies.
    pub fn with_raw(&self, raw: &[u64]) -> CountTable {
        assert_eq!(raw.len(), self.rows.len(), "one raw count per row");
        let rows = self
            .rows
            .iter()
            .zip(raw)
            .map(|(r, &n)| CountRow {
                raw: n,
                corrected: n as f64 / r.efficiency,
                ..r.clone()
            })
            .collect();
        CountTable { rows }
    }

    /// Rows whose setting starts with `prefix`, with the prefix stripped.
    pub fn strip_prefix(&self, prefix: &str) -> CountTable {
        let rows = self
            .rows
            .iter()
            .filter_map(|r| {
                r.setting.strip_prefix(prefix).map(|s| CountRow {
                    setting: s.to_string(),
                    ..r.clone()
                })
            })
            .collect();
        CountTable { rows }
    }

    /// Copies every row of `other` with `prefix` prepended to its setting.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &CountTable) {
        self.rows.extend(other.rows.iter().map(|r| CountRow {
            setting: format!("{prefix}{}", r.setting),
            ..r.clone()
        }));
    }

    /// Sums tables row-wise by (setting, outcome). Efficiencies must agree.
    pub fn pooled<'a>(tables: impl IntoIterator<Item = &'a CountTable>) -> Result<CountTable> {
        let mut acc: BTreeMap<(String, String), (u64, f64)> = BTreeMap::new();
        let mut order = Vec::new();
        for t in tables {
            for r in &t.rows {
                let key = (r.setting.clone(), r.outcome.clone());
                match acc.get_mut(&key) {
                    Some((raw, eff)) => {
                        if (*eff - r.efficiency).abs() > 1e-12 {
                            return Err(Error::Tomography(format!(
                                "efficiency mismatch for {}/{}",
                                r.setting, r.outcome
                            )));
                        }
                        *raw += r.raw;
                    }
                    None => {
                        order.push(key.clone());
                        acc.insert(key, (r.raw, r.efficiency));
                    }
                }
            }
        }
        order
            .into_iter()
            .map(|key| {
                let (raw, eff) = acc[&key];
                CountRow::new(key.0, key.1, raw, eff)
            })
            .collect::<Result<Vec<_>>>()
            .map(CountTable::from_rows)
    }

    /// Flat CSV with header `setting,outcome,raw,efficiency,corrected`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<CountTable> {
        let mut rd = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for rec in rd.deserialize() {
            let r: CountRow = rec?;
            rows.push(CountRow::new(r.setting, r.outcome, r.raw, r.efficiency)?);
        }
        Ok(CountTable { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_efficiency_is_identity() {
        let r = CountRow::new("Z", "+", 17, 1.0).unwrap();
        assert_eq!(r.corrected, 17.0);
        assert!(CountRow::new("Z", "+", 1, 0.0).is_err());
        assert!(CountRow::new("Z", "+", 1, 1.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = CountTable::from_rows(vec![
            CountRow::new("ZX", "+-", 12, 0.5).unwrap(),
            CountRow::new("ZX", "--", 0, 1.0).unwrap(),
        ]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("setting,outcome,raw,efficiency,corrected\n"));
        assert_eq!(CountTable::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn pooling_and_prefixes() {
        let a = CountTable::from_rows(vec![CountRow::new("Z", "+", 3, 1.0).unwrap()]);
        let b = CountTable::from_rows(vec![CountRow::new("Z", "+", 4, 1.0).unwrap()]);
        let p = CountTable::pooled([&a, &b]).unwrap();
        assert_eq!(p.rows()[0].raw, 7);

        let mut all = CountTable::new();
        all.extend_prefixed("H/", &a);
        all.extend_prefixed("V/", &b);
        assert_eq!(all.strip_prefix("V/"), b);
    }
}
