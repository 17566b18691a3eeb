//! Per-evaluation metrics rows and their CSV form.

use std::{io::Write, path::Path};

use crate::{SimError, SimResult};

pub const METRICS_HEADER: &str =
    "round,global_acc,personalized_acc,mean_train_loss,participants,params_exchanged";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub round: usize,
    pub global_acc: f64,
    pub personalized_acc: f64,
    pub mean_train_loss: f64,
    /// Clients that trained in this round (0 for the initial row).
    pub participants: usize,
    /// Scalars downloaded plus uploaded, cumulative up to this round.
    pub params_exchanged: u64,
}

fn check_rows(rows: &[MetricsRow]) -> SimResult<()> {
    for pair in rows.windows(2) {
        if pair[1].round <= pair[0].round {
            return Err(SimError::Metrics(format!(
                "rows out of round order: {} after {}",
                pair[1].round, pair[0].round
            )));
        }
        if pair[1].params_exchanged < pair[0].params_exchanged {
            return Err(SimError::Metrics(format!(
                "params_exchanged decreases at round {}",
                pair[1].round
            )));
        }
    }
    for row in rows {
        for acc in [row.global_acc, row.personalized_acc] {
            if !(0.0..=1.0).contains(&acc) {
                return Err(SimError::Metrics(format!(
                    "accuracy {acc} outside [0, 1] at round {}",
                    row.round
                )));
            }
        }
    }
    Ok(())
}

/// Renders rows as CSV text: fixed header, six-decimal floats.
pub fn render_metrics_csv(rows: &[MetricsRow]) -> SimResult<String> {
    check_rows(rows)?;
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{},{}\n",
            r.round,
            r.global_acc,
            r.personalized_acc,
            r.mean_train_loss,
            r.participants,
            r.params_exchanged
        ));
    }
    Ok(out)
}

pub fn emit_metrics_csv(rows: &[MetricsRow], path: impl AsRef<Path>) -> SimResult<()> {
    let text = render_metrics_csv(rows)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn parse_metrics_csv(text: &str) -> SimResult<Vec<MetricsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == METRICS_HEADER => {}
        other => {
            return Err(SimError::Metrics(format!(
                "unexpected header {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |what: &str| SimError::Metrics(format!("line {}: {what}", i + 2));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid number"));
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad("invalid integer"));
        rows.push(MetricsRow {
            round: int(fields[0])? as usize,
            global_acc: float(fields[1])?,
            personalized_acc: float(fields[2])?,
            mean_train_loss: float(fields[3])?,
            participants: int(fields[4])? as usize,
            params_exchanged: int(fields[5])?,
        });
    }
    check_rows(&rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(round: usize, acc: f64, sent: u64) -> MetricsRow {
        MetricsRow {
            round,
            global_acc: acc,
            personalized_acc: acc / 2.0,
            mean_train_loss: 1.234567891,
            participants: 3,
            params_exchanged: sent,
        }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(
            render_metrics_csv(&[]).unwrap(),
            format!("{METRICS_HEADER}\n")
        );
    }

    #[test]
    fn six_decimals() {
        let text = render_metrics_csv(&[row(0, 0.1, 0)]).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "0,0.100000,0.050000,1.234568,3,0"
        );
    }

    #[test]
    fn roundtrip() {
        let rows = vec![
            row(0, 0.123456789, 0),
            row(5, 0.5, 100),
            row(10, 0.987654321, 250),
        ];
        let parsed = parse_metrics_csv(&render_metrics_csv(&rows).unwrap()).unwrap();
        assert_eq!(parsed.len(), 3);
        for (a, b) in rows.iter().zip(&parsed) {
            assert_eq!(a.round, b.round);
            assert!((a.global_acc - b.global_acc).abs() <= 1e-6);
            assert!((a.personalized_acc - b.personalized_acc).abs() <= 1e-6);
            assert!((a.mean_train_loss - b.mean_train_loss).abs() <= 1e-6);
            assert_eq!(a.params_exchanged, b.params_exchanged);
        }
    }

    #[test]
    fn order_is_enforced() {
        let err = render_metrics_csv(&[row(5, 0.1, 0), row(3, 0.1, 0)]).unwrap_err();
        assert!(err.to_string().contains("out of round order"));
        assert!(render_metrics_csv(&[row(1, 0.1, 0), row(1, 0.1, 0)]).is_err());
        assert!(render_metrics_csv(&[row(1, 0.1, 10), row(2, 0.1, 5)]).is_err());
        assert!(render_metrics_csv(&[row(1, 1.5, 0)]).is_err());
    }

    #[test]
    fn file_output() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        emit_metrics_csv(&[row(0, 0.2, 0)], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            render_metrics_csv(&[row(0, 0.2, 0)]).unwrap()
        );
        assert!(emit_metrics_csv(&[], dir.path().join("missing/m.csv")).is_err());
    }

    #[test]
    fn malformed_input() {
        assert!(parse_metrics_csv("a,b\n").is_err());
        assert!(parse_metrics_csv(&format!("{METRICS_HEADER}\n1,2\n")).is_err());
        assert!(parse_metrics_csv(&format!("{METRICS_HEADER}\n1,x,0,0,0,0\n")).is_err());
    }
}
