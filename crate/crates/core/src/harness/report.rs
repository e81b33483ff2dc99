//! Rendering of fit reports: a structured JSON-like text record per bound,
//! and the scan series as two-column CSV.

use super::FitReport;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

/// Shortest round-trip decimal; non-finite values render as bare tokens,
/// which keeps the record readable though not strict JSON.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// One structured text record for the whole report.
pub fn render_text(report: &FitReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"name\": {},\n", quote(&report.spec.name)));
    out.push_str(&format!("  \"form\": {},\n", quote(&report.spec.form)));
    out.push_str(&format!("  \"grid\": {},\n", quote(&report.spec.grid)));
    out.push_str("  \"constants\": {\n");
    for (i, (k, v)) in report.constants.iter().enumerate() {
        let comma = if i + 1 < report.constants.len() { "," } else { "" };
        out.push_str(&format!("    {}: {}{comma}\n", quote(k), num(*v)));
    }
    out.push_str("  },\n");
    out.push_str(&format!("  \"max_ratio\": {},\n", num(report.max_ratio)));
    out.push_str(&format!("  \"drift\": {},\n", num(report.drift)));
    out.push_str(&format!(
        "  \"drift_threshold\": {},\n",
        num(report.drift_threshold)
    ));
    out.push_str(&format!("  \"pass\": {},\n", report.pass));
    out.push_str(&format!(
        "  \"series\": {{ \"x\": {}, \"y\": {}, \"points\": {} }},\n",
        quote(&report.series_labels.0),
        quote(&report.series_labels.1),
        report.series.len()
    ));
    out.push_str("  \"notes\": [\n");
    for (i, note) in report.notes.iter().enumerate() {
        let comma = if i + 1 < report.notes.len() { "," } else { "" };
        out.push_str(&format!("    {}{comma}\n", quote(note)));
    }
    out.push_str("  ]\n}\n");
    out
}

/// The scan series as a two-column CSV with a labeled header.
pub fn render_csv(report: &FitReport) -> String {
    let clean = |s: &str| s.replace(',', ";");
    let mut out = format!(
        "{},{}\n",
        clean(&report.series_labels.0),
        clean(&report.series_labels.1)
    );
    for &(x, y) in &report.series {
        out.push_str(&format!("{},{}\n", num(x), num(y)));
    }
    out
}
