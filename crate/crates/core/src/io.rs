//! CSV serialization of room lists and result tables.
//!
//! Room lists use one column per realization and one row per room, closed by
//! a `SUM` row (total capacity) and a `DEMAND` row:
//!
//! ```text
//! room,Realization 1,Realization 2
//! 0,113,77
//! 1,54,102
//! SUM,167,179
//! DEMAND,150,161
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{AveragedSeries, EfficiencySeries, Metric};
use crate::model::{ProblemInstance, RoomId};
use crate::montecarlo::Realization;
use crate::rational::RationalValue;

/// Parsed room-list file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceTable {
    pub labels: Vec<String>,
    pub rooms: Vec<RoomId>,
    /// `columns[k][i]` is the capacity of room `i` in column `k`.
    pub columns: Vec<Vec<u64>>,
    pub demands: Vec<u64>,
}

impl InstanceTable {
    pub fn from_realizations(realizations: &[Realization]) -> Self {
        let n = realizations.first().map_or(0, |r| r.capacities.len());
        Self {
            labels: (1..=realizations.len())
                .map(|k| format!("Realization {k}"))
                .collect(),
            rooms: (0..n).map(RoomId).collect(),
            columns: realizations.iter().map(|r| r.capacities.clone()).collect(),
            demands: realizations.iter().map(|r| r.demand).collect(),
        }
    }

    /// Column index for a label, or a 1-based column number.
    pub fn column_index(&self, selector: &str) -> Result<usize> {
        let selector = selector.trim();
        if let Some(k) = self.labels.iter().position(|l| l == selector) {
            return Ok(k);
        }
        match selector.parse::<usize>() {
            Ok(k) if (1..=self.labels.len()).contains(&k) => Ok(k - 1),
            _ => Err(Error::InvalidInput(format!(
                "no column {selector:?}; available: {}",
                self.labels.join(", ")
            ))),
        }
    }

    /// The covering instance of one column with proctors from `rate`.
    pub fn instance(&self, column: usize, rate: u64) -> Result<ProblemInstance> {
        let caps = self.columns[column].clone();
        let proctors = crate::model::proctors_from_rate(&caps, rate)?;
        ProblemInstance::with_ids(caps, proctors, self.demands[column], self.rooms.clone())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["room".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (i, room) in self.rooms.iter().enumerate() {
            let mut row = vec![room.to_string()];
            row.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&row)?;
        }
        let mut sum = vec!["SUM".to_string()];
        sum.extend(
            self.columns
                .iter()
                .map(|c| c.iter().sum::<u64>().to_string()),
        );
        w.write_record(&sum)?;
        let mut demand = vec!["DEMAND".to_string()];
        demand.extend(self.demands.iter().map(u64::to_string));
        w.write_record(&demand)?;
        finish(w)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Data(
                "room list needs at least one data column".into(),
            ));
        }
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rooms = Vec::new();
        let mut columns = vec![Vec::new(); labels.len()];
        let mut demands = None;
        for record in reader.records() {
            let record = record?;
            let key = record.get(0).unwrap_or_default();
            let cells = record
                .iter()
                .skip(1)
                .map(|cell| {
                    cell.parse::<u64>().map_err(|_| {
                        Error::Data(format!("row {key:?}: {cell:?} is not an integer"))
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            match key {
                "SUM" => {}
                "DEMAND" => demands = Some(cells),
                _ => {
                    let room = key
                        .parse::<usize>()
                        .map_err(|_| Error::Data(format!("bad room label {key:?}")))?;
                    rooms.push(RoomId(room));
                    for (column, value) in columns.iter_mut().zip(cells) {
                        column.push(value);
                    }
                }
            }
        }
        let demands = demands.ok_or_else(|| Error::Data("missing DEMAND row".into()))?;
        if rooms.is_empty() {
            return Err(Error::Data("room list has no rooms".into()));
        }
        Ok(Self {
            labels,
            rooms,
            columns,
            demands,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

fn cell(value: Option<RationalValue>) -> String {
    value.map(|v| v.to_fixed(2)).unwrap_or_default()
}

/// One row per height, one column per metric.
pub fn series_csv(series: &EfficiencySeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["height".to_string()];
    header.extend(Metric::ALL.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for row in &series.rows {
        let mut record = vec![row.height.to_string()];
        record.extend(Metric::ALL.iter().map(|&m| cell(row.value(m))));
        w.write_record(&record)?;
    }
    finish(w)
}

/// One row per height, one column per metric, for an averaged series.
pub fn averaged_csv(series: &AveragedSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["height".to_string()];
    header.extend(Metric::ALL.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for h in 0..=series.height() {
        let mut record = vec![h.to_string()];
        record.extend(Metric::ALL.iter().map(|&m| cell(series.value(m, h))));
        w.write_record(&record)?;
    }
    finish(w)
}

/// One metric across a strategy domain: one row per height, one column per value.
pub fn metric_table(
    variable: &str,
    domain: &[(String, &AveragedSeries)],
    metric: Metric,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["height".to_string()];
    header.extend(
        domain
            .iter()
            .map(|(label, _)| format!("{variable}={label}")),
    );
    w.write_record(&header)?;
    let height = domain.iter().map(|(_, s)| s.height()).max().unwrap_or(0);
    for h in 0..=height {
        let mut record = vec![h.to_string()];
        record.extend(domain.iter().map(|(_, s)| cell(s.value(metric, h))));
        w.write_record(&record)?;
    }
    finish(w)
}

/// Long-format plot data: `height,metric,strategy,value`.
pub fn plot_csv(domain: &[(String, &AveragedSeries)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["height", "metric", "strategy", "value"])?;
    for &metric in &Metric::EFFICIENCIES {
        for (label, series) in domain {
            for h in 0..=series.height() {
                if let Some(v) = series.value(metric, h) {
                    w.write_record([
                        h.to_string(),
                        metric.to_string(),
                        label.clone(),
                        v.to_fixed(2),
                    ])?;
                }
            }
        }
    }
    finish(w)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{average_series, series_from_sums};

    fn table() -> InstanceTable {
        InstanceTable {
            labels: vec!["Realization 1".into(), "Realization 2".into()],
            rooms: (0..3).map(RoomId).collect(),
            columns: vec![vec![100, 40, 60], vec![50, 50, 50]],
            demands: vec![40, 120],
        }
    }

    #[test]
    fn instance_round_trip() {
        let t = table();
        let text = t.to_csv().unwrap();
        assert_eq!(
            text,
            "room,Realization 1,Realization 2\n0,100,50\n1,40,50\n2,60,50\nSUM,200,150\nDEMAND,40,120\n"
        );
        assert_eq!(InstanceTable::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn column_selection() {
        let t = table();
        assert_eq!(t.column_index("Realization 2").unwrap(), 1);
        assert_eq!(t.column_index("1").unwrap(), 0);
        assert!(t.column_index("3").is_err());
        assert!(t.column_index("Realization 9").is_err());
        let inst = t.instance(0, 54).unwrap();
        assert_eq!(inst.proctors(), &[2, 1, 2]);
        assert_eq!(inst.demand(), 40);
    }

    #[test]
    fn malformed_input() {
        assert!(InstanceTable::from_csv("room,A\n0,10\n").is_err());
        assert!(InstanceTable::from_csv("room,A\n0,x\nDEMAND,5\n").is_err());
        assert!(InstanceTable::from_csv("room\n0\nDEMAND\n").is_err());
        assert!(InstanceTable::from_csv("room,A\nDEMAND,5\n").is_err());
    }

    #[test]
    fn tables_render_two_decimals() {
        let s = series_from_sums(&[
            (RationalValue::new(1412, 100), 15, 16),
            (RationalValue::new(1425, 100), 16, 16),
        ]);
        let text = series_csv(&s).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("height,LRS,DPS,GAS,GbE_LRS"));
        assert_eq!(lines[1], "0,14.12,15.00,16.00,0.00,0.00,0.00,,,,6.67,5.87");

        let avg = average_series(&[s]).unwrap();
        let table = metric_table("r", &[("54".into(), &avg)], Metric::GbeDps).unwrap();
        assert_eq!(table, "height,r=54\n0,0.00\n1,6.67\n");
        let plot = plot_csv(&[("54".into(), &avg)]).unwrap();
        assert!(plot.starts_with("height,metric,strategy,value\n0,GbE_LRS,54,0.00\n"));
        assert!(averaged_csv(&avg).unwrap().lines().count() == 3);
    }
}
