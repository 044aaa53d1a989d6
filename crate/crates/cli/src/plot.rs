//! Horizontal rank-interval chart as a standalone SVG.

use std::fmt::Write as _;

use crate::report::RanksReport;

const ROW: f64 = 20.0;
const LABEL: f64 = 140.0;
const PLOT: f64 = 480.0;
const TOP: f64 = 30.0;

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
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

/// One row per item, sorted by estimate (ties by input position); each bar
/// spans `[rank_lower, rank_upper]`.
pub fn render_svg(report: &RanksReport) -> String {
    let n = report.items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| report.items[a].y.total_cmp(&report.items[b].y).then(a.cmp(&b)));

    let width = LABEL + PLOT + 20.0;
    let height = TOP + ROW * n as f64 + 30.0;
    let step = PLOT / n.max(1) as f64;
    let x_at = |rank: f64| LABEL + (rank - 0.5) * step;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{LABEL}" y="18">{} rank intervals, alpha = {}</text>"#,
        report.method, report.alpha_nominal
    );
    for (row, &i) in order.iter().enumerate() {
        let it = &report.items[i];
        let y = TOP + ROW * (row as f64 + 0.5);
        let (x0, x1) = (x_at(it.rank_lower as f64), x_at(it.rank_upper as f64));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LABEL - 8.0,
            y + 4.0,
            escape(&it.id)
        );
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="black" stroke-width="2"/>"#);
        let _ = writeln!(s, r#"<circle cx="{x0}" cy="{y}" r="3"/>"#);
        let _ = writeln!(s, r#"<circle cx="{x1}" cy="{y}" r="3"/>"#);
    }
    let axis = TOP + ROW * n as f64 + 5.0;
    let _ = writeln!(s, r#"<line x1="{LABEL}" y1="{axis}" x2="{}" y2="{axis}" stroke="gray"/>"#, LABEL + PLOT);
    let tick_every = (n / 10).max(1);
    for rank in (1..=n).filter(|r| r % tick_every == 0 || *r == 1) {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="gray">{rank}</text>"#,
            x_at(rank as f64),
            axis + 15.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::ItemReport;
    use rankgauge::Method;

    fn item(id: &str, y: f64, lo: usize, hi: usize) -> ItemReport {
        ItemReport { id: id.into(), y, sigma: 1.0, rank_lower: lo, rank_upper: hi }
    }

    #[test]
    fn escapes_ids_and_sorts_rows() {
        let rep = RanksReport {
            method: Method::Tukey,
            alpha_nominal: 0.1,
            alpha_effective: 0.1,
            seed: 0,
            items: vec![item("b<&>", 2.0, 2, 2), item("a\"'", 1.0, 1, 1)],
            rankability: None,
        };
        let svg = render_svg(&rep);
        assert!(svg.contains("b&lt;&amp;&gt;"));
        assert!(svg.contains("a&quot;&apos;"));
        assert!(svg.find("a&quot;").unwrap() < svg.find("b&lt;").unwrap());
        assert_eq!(svg, render_svg(&rep));
    }
}
