//! Plain-text SVG charts.

use std::fmt::Write;

use crate::metrics::ConfusionMatrix;
use crate::tree::FeatureImportance;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// White to dark blue.
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(247.0, 8.0),
        lerp(251.0, 48.0),
        lerp(255.0, 107.0)
    )
}

/// 2x2 heatmap, actual class by row, predicted class by column. Each count
/// is a `<text class="count" data-cell="tp|fp|fn|tn">` element.
pub fn confusion_svg(title: &str, cm: &ConfusionMatrix) -> String {
    let cells = [
        ("tn", cm.tn, 0, 0),
        ("fp", cm.fp, 0, 1),
        ("fn", cm.fn_, 1, 0),
        ("tp", cm.tp, 1, 1),
    ];
    let max = cells.iter().map(|c| c.1).max().unwrap_or(0).max(1) as f64;
    let (x0, y0, size) = (110.0, 60.0, 120.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="380" height="350" viewBox="0 0 380 350" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="190" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="230" y="48" text-anchor="middle" font-size="12">Predicted</text>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="30" y="180" text-anchor="middle" font-size="12" transform="rotate(-90 30 180)">Actual</text>"#
    );
    for (i, label) in ["0", "1"].iter().enumerate() {
        let c = x0 + size * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{c}" y="{}" text-anchor="middle" font-size="12">{label}</text>"#,
            y0 + 2.0 * size + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{label}</text>"#,
            x0 - 8.0,
            y0 + size * (i as f64 + 0.5) + 4.0
        );
    }
    for (name, count, row, col) in cells {
        let t = count as f64 / max;
        let (x, y) = (x0 + size * col as f64, y0 + size * row as f64);
        let ink = if t > 0.5 { "#ffffff" } else { "#000000" };
        let _ = writeln!(
            s,
            r##"<rect x="{x}" y="{y}" width="{size}" height="{size}" fill="{}" stroke="#444444"/>"##,
            shade(t)
        );
        let _ = writeln!(
            s,
            r#"<text class="count" data-cell="{name}" x="{}" y="{}" text-anchor="middle" font-size="18" fill="{ink}">{count}</text>"#,
            x + size / 2.0,
            y + size / 2.0 + 6.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars, largest first.
pub fn importance_svg(title: &str, imp: &FeatureImportance) -> String {
    let items = imp.sorted();
    let (label_w, bar_w, row_h, top) = (180.0, 320.0, 22.0, 44.0);
    let height = top + row_h * items.len() as f64 + 16.0;
    let max = items.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" viewBox="0 0 {w} {height}" font-family="sans-serif">"#,
        w = label_w + bar_w + 80.0
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="10" y="24" font-size="15">{}</text>"#,
        escape(title)
    );
    for (i, (name, v)) in items.iter().enumerate() {
        let y = top + row_h * i as f64;
        let w = if max > 0.0 { bar_w * v / max } else { 0.0 };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{}</text>"#,
            label_w - 6.0,
            y + 14.0,
            escape(name)
        );
        let _ = writeln!(
            s,
            r##"<rect class="bar" data-feature="{}" x="{label_w}" y="{}" width="{w:.3}" height="{}" fill="#2b6cb0"/>"##,
            escape(name),
            y + 3.0,
            row_h - 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11">{v:.4}</text>"#,
            label_w + w + 6.0,
            y + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}
