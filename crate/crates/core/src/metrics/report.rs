use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

/// One line of the machine-readable evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    /// Corruption kind key, or `"all"` for pooled rows.
    pub kind: String,
    /// `"pixel"` or `"sample"`.
    pub level: String,
    pub ap: f64,
    /// Positive fraction, which is also the AP of a random scorer.
    pub prevalence: f64,
    pub n: usize,
    /// Positive count.
    pub num_pos: usize,
}

/// Writes rows as JSON lines.
pub fn write_jsonl(rows: &[ReportRow], mut out: impl Write) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Per-kind table: pixel and sample AP next to their random baselines
/// (the prevalences), with the pooled rows last as `Total`.
pub fn format_kind_table(rows: &[ReportRow]) -> String {
    let mut kinds: Vec<&str> = Vec::new();
    for r in rows {
        if r.kind != "all" && !kinds.contains(&r.kind.as_str()) {
            kinds.push(&r.kind);
        }
    }
    kinds.push("all");
    let find = |kind: &str, level: &str| rows.iter().find(|r| r.kind == kind && r.level == level);
    let cell = |r: Option<&ReportRow>| match r {
        Some(r) => format!("{:>9.3} {:>9.3}", r.ap, r.prevalence),
        None => format!("{:>9} {:>9}", "-", "-"),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>9} {:>9} {:>9} {:>9} {:>10}",
        "kind", "pixel AP", "random", "sample AP", "random", "positives"
    );
    for kind in kinds {
        let pixel = find(kind, "pixel");
        let sample = find(kind, "sample");
        if pixel.is_none() && sample.is_none() {
            continue;
        }
        let label = if kind == "all" { "Total" } else { kind };
        let positives = pixel.map_or(0, |r| r.num_pos);
        let _ = writeln!(s, "{:<20} {} {} {:>10}", label, cell(pixel), cell(sample), positives);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_lines() {
        let row = ReportRow {
            dataset: "brain".into(),
            kind: "all".into(),
            level: "pixel".into(),
            ap: 0.5,
            prevalence: 0.01,
            n: 100,
            num_pos: 1,
        };
        let mut buf = Vec::new();
        write_jsonl(&[row.clone(), row.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: ReportRow = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, row);
        let table = format_kind_table(&[row.clone(), ReportRow { kind: "local_blur".into(), ..row }]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("local_blur"));
        assert!(lines[2].starts_with("Total"));
    }
}
