//! Run statistics and the append-only stats CSV.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use crate::adapt::{MasterTimers, WorkerTimers};
use crate::schemes::SchemeKind;

/// One scheme change during an adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchEvent {
    pub from: &'static str,
    pub to: &'static str,
    /// Number of work items issued when the switch fired.
    pub item_index: u64,
}

/// Everything measured during one run.
#[derive(Debug, Clone)]
pub struct RunStats {
    pub scheme: SchemeKind,
    pub wall: Duration,
    pub master: MasterTimers,
    /// Worker timers by rank (index 0 = rank 1); `None` when the worker ran
    /// in another process and its timers stayed there.
    pub workers: Vec<Option<WorkerTimers>>,
    pub messages_sent: u64,
    pub messages_received: u64,
    pub items_issued: u64,
    pub switches: Vec<SwitchEvent>,
}

impl RunStats {
    /// Item index of the first switch, or -1 when none fired.
    pub fn first_switch_index(&self) -> i64 {
        self.switches.first().map_or(-1, |s| s.item_index as i64)
    }
}

pub const CSV_HEADER: &str = "scheme,size,workers,granularity,ratio,maxresult,wall_seconds,master_t_add,master_t_wait,items_issued,switch_item_index,result_terms,result_is_zero";

/// One CSV row describing a finished run.
#[derive(Debug, Clone)]
pub struct StatsRow {
    pub scheme: String,
    pub size: u32,
    pub workers: u32,
    pub granularity: u64,
    pub ratio: f64,
    pub maxresult: u32,
    pub wall_seconds: f64,
    pub master_t_add: f64,
    pub master_t_wait: f64,
    pub items_issued: u64,
    pub switch_item_index: i64,
    pub result_terms: u64,
    pub result_is_zero: bool,
}

impl StatsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
            self.scheme,
            self.size,
            self.workers,
            self.granularity,
            self.ratio,
            self.maxresult,
            self.wall_seconds,
            self.master_t_add,
            self.master_t_wait,
            self.items_issued,
            self.switch_item_index,
            self.result_terms,
            self.result_is_zero
        )
    }
}

/// Appends rows (and per-switch `switch,<from>,<to>,<item_index>` lines) to
/// the stats file, writing the header first when the file is new or empty.
pub fn append_stats(
    path: &Path,
    rows: &[(StatsRow, Vec<SwitchEvent>)],
) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let needs_header = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if needs_header {
        writeln!(file, "{CSV_HEADER}")?;
    }
    for (row, switches) in rows {
        writeln!(file, "{}", row.to_csv_line())?;
        for s in switches {
            writeln!(file, "switch,{},{},{}", s.from, s.to, s.item_index)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> StatsRow {
        StatsRow {
            scheme: "mw".into(),
            size: 4,
            workers: 2,
            granularity: 1,
            ratio: 1.0,
            maxresult: 16,
            wall_seconds: 0.25,
            master_t_add: 0.1,
            master_t_wait: 0.05,
            items_issued: 8,
            switch_item_index: -1,
            result_terms: 800,
            result_is_zero: false,
        }
    }

    #[test]
    fn header_written_once() {
        let dir = std::env::temp_dir().join(format!("sptensor-stats-{}", std::process::id()));
        let path = dir.join("stats.csv");
        let _ = std::fs::remove_file(&path);
        append_stats(&path, &[(sample_row(), vec![])]).unwrap();
        append_stats(
            &path,
            &[(
                sample_row(),
                vec![SwitchEvent {
                    from: "mw",
                    to: "addworker",
                    item_index: 3,
                }],
            )],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.iter().filter(|l| l.starts_with("scheme,")).count(), 1);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "switch,mw,addworker,3");
        std::fs::remove_dir_all(&dir).ok();
    }
}
