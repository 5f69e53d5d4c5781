//! Plain-text correlation tables.

use std::fmt::Write as _;

use crate::stats::pearson;

fn fmt_corr(c: Option<f64>) -> String {
    c.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"))
}

fn render(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                write!(line, "{cell:<w$}", w = widths[0]).unwrap();
            } else {
                write!(line, "  {cell:>w$}", w = widths[c]).unwrap();
            }
        }
        writeln!(out, "{}", line.trim_end()).unwrap();
    }
    out
}

/// Lower-triangular Pearson matrix with numbered rows and columns.
pub fn correlation_matrix(labels: &[String], columns: &[Vec<f64>]) -> String {
    assert_eq!(labels.len(), columns.len());
    let k = labels.len();
    let mut rows = vec![std::iter::once(String::new())
        .chain((1..=k).map(|i| i.to_string()))
        .collect::<Vec<_>>()];
    for i in 0..k {
        let mut row = vec![format!("{}.{}", i + 1, labels[i])];
        for j in 0..=i {
            row.push(if i == j {
                "1.000".to_string()
            } else {
                fmt_corr(pearson(&columns[i], &columns[j]))
            });
        }
        rows.push(row);
    }
    render(&rows)
}

/// One row per feature, one column per window, each cell the correlation
/// with the response.
pub fn window_table(
    features: &[String],
    windows: &[i32],
    cells: &[Vec<Option<f64>>],
) -> String {
    let mut rows = vec![std::iter::once(String::new())
        .chain(windows.iter().map(|w| w.to_string()))
        .collect::<Vec<_>>()];
    for (i, f) in features.iter().enumerate() {
        let mut row = vec![format!("{}.{f}", i + 1)];
        row.extend(cells[i].iter().map(|&c| fmt_corr(c)));
        rows.push(row);
    }
    render(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_layout() {
        let text = correlation_matrix(
            &["Pcite".into(), "A".into(), "B".into()],
            &[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.5], vec![3.0, 2.0, 1.0]],
        );
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1.Pcite") && lines[1].ends_with("1.000"));
        assert!(lines[3].starts_with("3.B"));
        assert!(lines[3].contains("-1.000"));
        assert_eq!(lines[3].split_whitespace().count(), 4);
    }

    #[test]
    fn window_layout() {
        let text = window_table(&["HCTCD.W.Sum".into()], &[1, 16], &[vec![Some(0.3234), None]]);
        assert!(text.lines().nth(1).unwrap().ends_with("0.323  NA"));
    }
}
