//! Minimal bar charts with optional error bars.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let (w, h, left, bottom, top) = (80.0 + 60.0 * bars.len().max(1) as f64, 320.0, 60.0, 60.0, 40.0);
    let finite = |v: &f64| v.is_finite();
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for b in bars {
        for v in [Some(b.value), b.lo, b.hi].into_iter().flatten().filter(finite) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let plot_h = h - bottom - top;
    let y = |v: f64| top + (hi - v) / (hi - lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, esc(title));
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#, top + plot_h / 2.0, top + plot_h / 2.0, esc(y_label));
    let _ = writeln!(s, r#"<line x1="{left}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, y(0.0), w - 10.0, y(0.0));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{hi:.2}</text>"#, left - 4.0, y(hi) + 4.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{lo:.2}</text>"#, left - 4.0, y(lo) + 4.0);
    for (i, b) in bars.iter().enumerate() {
        let x = left + 10.0 + 60.0 * i as f64;
        let cx = x + 20.0;
        if b.value.is_finite() {
            let (y0, y1) = (y(b.value.max(0.0)), y(b.value.min(0.0)));
            let _ = writeln!(s, r##"<rect x="{x:.1}" y="{y0:.1}" width="40" height="{:.1}" fill="#4c72b0"/>"##, (y1 - y0).max(0.5));
        }
        if let (Some(l), Some(u)) = (b.lo, b.hi) {
            if l.is_finite() && u.is_finite() {
                let _ = writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, y(l), y(u));
            }
        }
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-35 {cx:.1} {:.1})">{}</text>"#, h - bottom + 14.0, h - bottom + 14.0, esc(&b.label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_every_bar() {
        let bars = vec![
            Bar { label: "a<b".into(), value: 1.5, lo: Some(1.0), hi: Some(2.0) },
            Bar { label: "c".into(), value: -0.5, lo: None, hi: None },
        ];
        let s = bar_chart("t", "y", &bars);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<rect").count(), 2);
        assert!(s.contains("a&lt;b"));
        assert_eq!(s, bar_chart("t", "y", &bars));
    }
}
