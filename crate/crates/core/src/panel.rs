//! Balanced panel data: ingestion, validation and cross-sections.

use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

/// Column names of a long-format panel file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub id: String,
    pub time: String,
    pub value: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            id: "id".into(),
            time: "time".into(),
            value: "value".into(),
        }
    }
}

/// `n` individuals observed at `m` strictly increasing times.
///
/// Values are stored time-major so that a cross-section is a contiguous slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelDataset {
    ids: Vec<String>,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PanelDataset {
    /// Builds a panel from `columns[i][j] = Y_j(times[i])`.
    pub fn new(ids: Vec<String>, times: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::InvalidParameter("panel has no individuals".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidParameter("panel has no time points".into()));
        }
        if columns.len() != times.len() {
            return Err(Error::InvalidParameter(format!(
                "{} columns for {} time points",
                columns.len(),
                times.len()
            )));
        }
        for w in times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "times must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite time {t}")));
        }
        let mut seen = HashMap::with_capacity(n);
        for id in &ids {
            if seen.insert(id.as_str(), ()).is_some() {
                return Err(Error::DuplicateObservation {
                    id: id.clone(),
                    time: times[0],
                });
            }
        }
        let mut values = Vec::with_capacity(n * times.len());
        for (col, &t) in columns.into_iter().zip(&times) {
            if col.len() != n {
                return Err(Error::UnbalancedPanel {
                    id: ids.get(col.len()).cloned().unwrap_or_default(),
                    time: t,
                });
            }
            for (j, &v) in col.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidOutcome {
                        id: ids[j].clone(),
                        time: t,
                        value: v,
                    });
                }
            }
            values.extend(col);
        }
        Ok(Self { ids, times, values })
    }

    /// Builds a panel from long-format `(id, time, value)` records in any order.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, f64, f64)>,
    {
        let mut ids: Vec<String> = Vec::new();
        let mut id_index: HashMap<String, usize> = HashMap::new();
        let mut cells: BTreeMap<OrderedTime, HashMap<usize, f64>> = BTreeMap::new();
        for (id, time, value) in records {
            if !time.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite time {time}")));
            }
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidOutcome { id, time, value });
            }
            let j = *id_index.entry(id.clone()).or_insert_with(|| {
                ids.push(id.clone());
                ids.len() - 1
            });
            let row = cells.entry(OrderedTime(time)).or_default();
            if row.insert(j, value).is_some() {
                return Err(Error::DuplicateObservation { id, time });
            }
        }
        let times: Vec<f64> = cells.keys().map(|t| t.0).collect();
        let mut columns = Vec::with_capacity(times.len());
        for (t, row) in cells {
            let mut col = Vec::with_capacity(ids.len());
            for (j, id) in ids.iter().enumerate() {
                match row.get(&j) {
                    Some(&v) => col.push(v),
                    None => {
                        return Err(Error::UnbalancedPanel {
                            id: id.clone(),
                            time: t.0,
                        })
                    }
                }
            }
            columns.push(col);
        }
        Self::new(ids, times, columns)
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn m(&self) -> usize {
        self.times.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Grid index of time `t`.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&x| x == t)
            .ok_or(Error::UnknownTime(t))
    }

    /// Outcomes of all individuals at grid index `i`, in individual order.
    pub fn column(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    /// The cross-section at time `t`.
    pub fn cross_section(&self, t: f64) -> Result<CrossSection> {
        let i = self.time_index(t)?;
        Ok(CrossSection::new(self.column(i).to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrderedTime(f64);

impl Eq for OrderedTime {}

impl PartialOrd for OrderedTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Reads a long-format CSV panel (`id,time,value` by default).
pub fn load_panel(path: impl AsRef<Path>, format: &ColumnMapping) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_panel(file, format)
}

/// Parses a long-format CSV panel from any reader.
pub fn read_panel(reader: impl std::io::Read, format: &ColumnMapping) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or(Error::Parse {
            row: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (ci, ct, cv) = (col(&format.id)?, col(&format.time)?, col(&format.value)?);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| {
            rec.get(c).ok_or(Error::Parse {
                row,
                message: format!("missing field {c}"),
            })
        };
        let id = field(ci)?.to_string();
        let number = |c: usize, what: &str| -> Result<f64> {
            let raw = field(c)?;
            raw.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("{what} `{raw}` is not a number"),
            })
        };
        let time = number(ct, "time")?;
        let value = number(cv, "value")?;
        records.push((id, time, value));
    }
    PanelDataset::from_records(records)
}

/// Outcomes at one time with their order statistics and ranks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSection {
    values: Vec<f64>,
    sorted: Vec<f64>,
    ranks: Vec<usize>,
}

impl CrossSection {
    /// Sorts `values`; ties are ranked in input order.
    pub fn new(values: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut ranks = vec![0; values.len()];
        let mut sorted = Vec::with_capacity(values.len());
        for (pos, &j) in order.iter().enumerate() {
            ranks[j] = pos + 1;
            sorted.push(values[j]);
        }
        Self {
            values,
            sorted,
            ranks,
        }
    }

    /// Order statistics only; ranks are left empty. Used on hot simulation paths.
    pub fn from_sorted_unchecked(sorted: Vec<f64>) -> Self {
        Self {
            values: Vec::new(),
            sorted,
            ranks: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Y_{1,n} <= ... <= Y_{n,n}`.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Rank of each input observation (1-based).
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Number of observations `<= y`.
    #[inline]
    pub fn count_at_or_below(&self, y: f64) -> usize {
        self.sorted.partition_point(|&v| v <= y)
    }
}

/// `Q_n = #{j : Y_j <= z}`; the boundary `Y_j = z` counts.
pub fn headcount(section: &CrossSection, z: f64) -> usize {
    section.count_at_or_below(z)
}

/// Right-continuous empirical CDF `G_n(y)`.
pub fn empirical_cdf(section: &CrossSection, y: f64) -> f64 {
    let n = section.n();
    if n == 0 {
        return 0.0;
    }
    section.count_at_or_below(y) as f64 / n as f64
}

/// Poverty line per grid time, bounded away from zero and infinity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSchedule {
    entries: Vec<(f64, f64)>,
}

impl ThresholdSchedule {
    pub fn from_pairs(mut entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidThreshold("empty schedule".into()));
        }
        for &(t, z) in &entries {
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::InvalidThreshold(format!(
                    "threshold at time {t} must be finite and > 0, got {z}"
                )));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidThreshold(format!(
                    "time {} listed twice",
                    w[0].0
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn constant(z: f64, times: &[f64]) -> Result<Self> {
        Self::from_pairs(times.iter().map(|&t| (t, z)).collect())
    }

    /// `Z(t)`.
    pub fn at(&self, t: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|e| e.0 == t)
            .map(|e| e.1)
            .ok_or_else(|| Error::InvalidThreshold(format!("no threshold for time {t}")))
    }

    /// Lower bound `Z₁`.
    pub fn lower(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min)
    }

    /// Upper bound `Z₂`.
    pub fn upper(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    /// Checks that every grid time has a threshold.
    pub fn covers(&self, times: &[f64]) -> Result<()> {
        times.iter().try_for_each(|&t| self.at(t).map(|_| ()))
    }
}

/// Reads a `time,z` CSV schedule.
pub fn load_thresholds(path: impl AsRef<Path>) -> Result<ThresholdSchedule> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    row,
                    message: format!("expected `time,z`, got {:?}", rec),
                })
        };
        pairs.push((parse(0)?, parse(1)?));
    }
    ThresholdSchedule::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, t: f64, v: f64) -> (String, f64, f64) {
        (id.to_string(), t, v)
    }

    #[test]
    fn builds_balanced_panel() {
        let p = PanelDataset::from_records(vec![
            rec("a", 1.0, 5.0),
            rec("a", 2.0, 6.0),
            rec("b", 1.0, 7.0),
            rec("b", 2.0, 8.0),
        ])
        .unwrap();
        assert_eq!((p.n(), p.m()), (2, 2));
        assert_eq!(p.column(1), &[6.0, 8.0]);
    }

    #[test]
    fn rejects_missing_cell() {
        let err = PanelDataset::from_records(vec![
            rec("a", 1.0, 5.0),
            rec("a", 2.0, 6.0),
            rec("b", 1.0, 7.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::UnbalancedPanel { ref id, time } if id == "b" && time == 2.0));
    }

    #[test]
    fn rejects_negative_and_duplicates() {
        let err = PanelDataset::from_records(vec![rec("a", 1.0, -1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidOutcome { .. }));
        let err =
            PanelDataset::from_records(vec![rec("a", 1.0, 1.0), rec("a", 1.0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateObservation { .. }));
    }

    #[test]
    fn csv_parse_error_reports_row() {
        let data = "id,time,value\na,1,5\na,2,x\n";
        let err = read_panel(data.as_bytes(), &ColumnMapping::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn csv_with_custom_columns_and_unsorted_times() {
        let data = "who,year,income\nb,2006,8\na,2001,5\nb,2001,7\na,2006,6\n";
        let fmt = ColumnMapping {
            id: "who".into(),
            time: "year".into(),
            value: "income".into(),
        };
        let p = read_panel(data.as_bytes(), &fmt).unwrap();
        assert_eq!(p.times(), &[2001.0, 2006.0]);
        assert_eq!(p.ids(), &["b".to_string(), "a".to_string()]);
        assert_eq!(p.column(0), &[7.0, 5.0]);
    }

    #[test]
    fn cross_section_sorts_and_ranks() {
        let s = CrossSection::new(vec![3.0, 1.0, 2.0]);
        assert_eq!(s.sorted(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.ranks(), &[3, 1, 2]);
        let s = CrossSection::new(vec![4.0]);
        assert_eq!(s.sorted(), &[4.0]);
        assert_eq!(s.ranks(), &[1]);
    }

    #[test]
    fn ties_ranked_by_input_order() {
        let s = CrossSection::new(vec![2.0, 2.0, 1.0]);
        assert_eq!(s.ranks(), &[2, 3, 1]);
    }

    #[test]
    fn unknown_time() {
        let p = PanelDataset::new(vec!["a".into()], vec![1.0], vec![vec![1.0]]).unwrap();
        assert!(matches!(p.cross_section(2.0), Err(Error::UnknownTime(_))));
    }

    #[test]
    fn headcount_and_ecdf() {
        let s = CrossSection::new(vec![2.0, 4.0, 12.0, 20.0]);
        assert_eq!(headcount(&s, 10.0), 2);
        assert_eq!(headcount(&s, 1.0), 0);
        assert_eq!(headcount(&s, 12.0), 3);
        let s = CrossSection::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(empirical_cdf(&s, 2.0), 2.0 / 3.0);
        assert_eq!(empirical_cdf(&s, 0.5), 0.0);
        assert_eq!(empirical_cdf(&s, 3.0), 1.0);
        let s = CrossSection::new(vec![2.0, 2.0, 5.0]);
        assert_eq!(empirical_cdf(&s, 2.0), 2.0 / 3.0);
    }

    #[test]
    fn threshold_schedule_bounds() {
        let z = ThresholdSchedule::from_pairs(vec![(2.0, 12.0), (1.0, 10.0)]).unwrap();
        assert_eq!(z.at(1.0).unwrap(), 10.0);
        assert_eq!((z.lower(), z.upper()), (10.0, 12.0));
        assert!(ThresholdSchedule::from_pairs(vec![(1.0, 0.0)]).is_err());
        assert!(z.covers(&[1.0, 3.0]).is_err());
    }
}
