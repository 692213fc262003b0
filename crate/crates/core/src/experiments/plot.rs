use std::fmt::Write as _;

use super::report::{Report, Verdict};

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

/// Log-log scatter of observed ratio and bound against `δ/M`.
///
/// Returns `None` when the report has no plottable record.
pub fn render_svg(report: &Report) -> Option<String> {
    let pts: Vec<(f64, f64, f64, Verdict)> = report
        .records
        .iter()
        .filter_map(|r| {
            let ratio = r.observed_ratio?;
            let x = r.delta / r.m;
            (x > 0.0 && ratio > 0.0 && r.bound > 0.0).then_some((
                x.log10(),
                ratio.log10(),
                r.bound.log10(),
                r.verdict,
            ))
        })
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, a, b, _) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(a).min(b);
        y1 = y1.max(a).max(b);
    }
    let (x0, x1) = (x0.floor().min(x1 - 1.0), x1.ceil().max(x0 + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for e in (x0 as i64)..=(x1 as i64) {
        let x = sx(e as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="gray"/><text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#,
            H - PAD,
            H - PAD + 5.0,
            H - PAD + 20.0
        );
    }
    for e in (y0 as i64)..=(y1 as i64) {
        let y = sy(e as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{PAD}" y2="{y:.2}" stroke="gray"/><text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            PAD - 5.0,
            PAD - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">delta / M</text>"#,
        W / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}">{}: ratio (dots), squared bound (crosses)</text>"#,
        PAD - 20.0,
        report.experiment
    );
    for &(x, a, b, v) in &pts {
        let color = match v {
            Verdict::Fail | Verdict::Error => "red",
            Verdict::Advisory => "orange",
            Verdict::OutOfScope => "gray",
            _ => "steelblue",
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
            sx(x),
            sy(a)
        );
        let (cx, cy) = (sx(x), sy(b));
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2}l6,6m0,-6l-6,6" stroke="black"/>"#,
            cx - 3.0,
            cy - 3.0
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}
