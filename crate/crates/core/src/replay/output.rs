//! Table and plot writers. Every writer takes a preamble line that is
//! emitted first, verbatim.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::io::{self, Write};

use super::{FrontierPoint, PolicySummary, WindowResult};

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "corpus",
    "policy",
    "session_id",
    "participant_id",
    "synchrony",
    "stability",
    "coherence",
    "legibility",
    "flip_rate",
    "cache_hit_rate",
    "n_turns",
];
pub const FRONTIER_COLUMNS: [&str; 4] = [
    "policy",
    "mean_stability",
    "mean_synchrony",
    "mean_coherence",
];
pub const WINDOW_COLUMNS: [&str; 3] = ["window", "predictive_synchrony", "n_sessions"];

/// Fixed float formatting shared by all tables.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

/// Quotes a field when it contains a delimiter, quote or line break.
pub fn csv_field(s: &str) -> Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(s)
    }
}

fn write_preamble(w: &mut (impl Write + ?Sized), preamble: &str) -> io::Result<()> {
    writeln!(w, "{}", preamble.trim_end_matches('\n'))
}

/// One row per policy × session, policies in run order, sessions by id.
pub fn write_summary_csv(
    w: &mut (impl Write + ?Sized),
    preamble: &str,
    corpus: &str,
    summaries: &[PolicySummary],
    with_header: bool,
) -> io::Result<()> {
    if with_header {
        write_preamble(w, preamble)?;
        writeln!(w, "{}", SUMMARY_COLUMNS.join(","))?;
    }
    for ps in summaries {
        for s in &ps.sessions {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(corpus),
                csv_field(&ps.policy),
                csv_field(&s.session_id),
                csv_field(&s.participant_id),
                fmt_f64(s.synchrony),
                fmt_f64(s.stability),
                fmt_f64(s.coherence),
                fmt_f64(s.legibility),
                fmt_f64(s.flip_rate),
                fmt_f64(s.cache_hit_rate),
                s.n_turns
            )?;
        }
    }
    Ok(())
}

pub fn write_frontier_csv(
    w: &mut (impl Write + ?Sized),
    preamble: &str,
    points: &[FrontierPoint],
) -> io::Result<()> {
    write_preamble(w, preamble)?;
    writeln!(w, "{}", FRONTIER_COLUMNS.join(","))?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{}",
            csv_field(&p.policy),
            fmt_f64(p.mean_stability),
            fmt_f64(p.mean_synchrony),
            fmt_f64(p.mean_coherence)
        )?;
    }
    Ok(())
}

/// Windows without eligible turns are written as `NA`.
pub fn write_window_csv(
    w: &mut (impl Write + ?Sized),
    preamble: &str,
    rows: &[WindowResult],
) -> io::Result<()> {
    write_preamble(w, preamble)?;
    writeln!(w, "{}", WINDOW_COLUMNS.join(","))?;
    for r in rows {
        let v = r
            .predictive_synchrony
            .map_or_else(|| "NA".to_string(), fmt_f64);
        writeln!(w, "{},{},{}", r.window, v, r.n_sessions)?;
    }
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Stability (x) against synchrony (y), one labelled dot per policy.
pub fn frontier_svg(preamble: &str, points: &[FrontierPoint]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let range = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(1.0f64, f64::min);
        let hi = vals.iter().copied().fold(1.0f64, f64::max);
        let pad = ((hi - lo) * 0.05).max(0.01);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = range(points.iter().map(|p| p.mean_stability).collect());
    let (y0, y1) = range(points.iter().map(|p| p.mean_synchrony).collect());
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<!-- {} -->",
        xml_escape(preamble.trim_start_matches("# ").trim_end())
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{M}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{M}" y1="{M}" x2="{M}" y2="{b}" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    for (v, anchor_x) in [(x0, M), (x1, W - M)] {
        let _ = writeln!(
            s,
            r#"<text x="{anchor_x}" y="{}" text-anchor="middle">{v:.2}</text>"#,
            H - M + 16.0
        );
    }
    for (v, anchor_y) in [(y0, H - M), (y1, M)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{anchor_y}" text-anchor="end">{v:.2}</text>"#,
            M - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">mean stability</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">mean synchrony</text>"#,
        H / 2.0,
        H / 2.0
    );
    for p in points {
        let (cx, cy) = (px(p.mean_stability), py(p.mean_synchrony));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="steelblue"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            cx + 8.0,
            cy - 6.0,
            xml_escape(&p.policy)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(policy: &str, s: f64, y: f64) -> FrontierPoint {
        FrontierPoint {
            policy: policy.into(),
            mean_stability: s,
            mean_synchrony: y,
            mean_coherence: 0.5,
        }
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn frontier_table() {
        let mut buf = Vec::new();
        write_frontier_csv(&mut buf, "# head", &[pt("static", 1.0, 0.25)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# head\npolicy,mean_stability,mean_synchrony,mean_coherence\nstatic,1.000000,0.250000,0.500000\n"
        );
    }

    #[test]
    fn window_na() {
        let mut buf = Vec::new();
        let rows = [
            WindowResult {
                window: 1,
                predictive_synchrony: Some(0.5),
                n_sessions: 3,
            },
            WindowResult {
                window: 8,
                predictive_synchrony: None,
                n_sessions: 0,
            },
        ];
        write_window_csv(&mut buf, "# h", &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.ends_with("1,0.500000,3\n8,NA,0\n"));
    }

    #[test]
    fn svg_has_points() {
        let svg = frontier_svg("# v", &[pt("static", 1.0, 0.2), pt("a<b", 0.3, 1.0)]);
        assert!(svg.starts_with("<!-- v -->\n<svg"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
