//! Static SVG heatmap of recovery rate over the `(m, α)` grid.

use std::fmt::Write;

use rodeodb_core::experiments::CellSummary;

const CELL: f64 = 48.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;

/// Grey level for a rate: 1 (all recovered) is white, 0 is black.
fn shade(rate: f64) -> String {
    let v = (rate.clamp(0.0, 1.0) * 255.0).round() as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

/// `m` increases upwards, `α` to the right; each cell is labelled with its rate.
pub fn phase_heatmap(cells: &[CellSummary], title: &str) -> String {
    let mut ms: Vec<usize> = cells.iter().map(|c| c.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut alphas: Vec<f64> = cells.iter().map(|c| c.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let width = MARGIN_LEFT + CELL * alphas.len() as f64 + MARGIN_RIGHT;
    let height = MARGIN_TOP + CELL * ms.len() as f64 + MARGIN_BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ =
        writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, width / 2.0, escape(title));
    for c in cells {
        let col = alphas.iter().position(|a| a.total_cmp(&c.alpha).is_eq()).unwrap_or(0);
        let row = ms.len() - 1 - ms.iter().position(|&m| m == c.m).unwrap_or(0);
        let x = MARGIN_LEFT + CELL * col as f64;
        let y = MARGIN_TOP + CELL * row as f64;
        let ink = if c.rate > 0.5 { "#000000" } else { "#ffffff" };
        let _ = writeln!(
            s,
            r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="#808080" stroke-width="0.5"><title>m={} alpha={} rate={:.3} ({}/{})</title></rect>"##,
            shade(c.rate),
            c.m,
            c.alpha,
            c.rate,
            c.recovered,
            c.trials
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{:.2}</text>"#,
            x + CELL / 2.0,
            y + CELL / 2.0 + 4.0,
            c.rate
        );
    }
    for (row, m) in ms.iter().rev().enumerate() {
        let y = MARGIN_TOP + CELL * row as f64 + CELL / 2.0 + 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{m}</text>"#, MARGIN_LEFT - 6.0);
    }
    let base = MARGIN_TOP + CELL * ms.len() as f64;
    for (col, a) in alphas.iter().enumerate() {
        let x = MARGIN_LEFT + CELL * col as f64 + CELL / 2.0;
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{a}</text>"#, base + 16.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">outlier fraction alpha</text>"#,
        MARGIN_LEFT + CELL * alphas.len() as f64 / 2.0,
        base + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">anchors m</text>"#,
        MARGIN_TOP + CELL * ms.len() as f64 / 2.0,
        MARGIN_TOP + CELL * ms.len() as f64 / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(m: usize, alpha: f64, rate: f64) -> CellSummary {
        CellSummary { m, alpha, trials: 4, recovered: (rate * 4.0) as usize, rate }
    }

    #[test]
    fn one_rect_per_cell_with_shade() {
        let cells = vec![cell(10, 0.1, 0.0), cell(10, 0.3, 0.25), cell(40, 0.1, 1.0), cell(40, 0.3, 0.5)];
        let svg = phase_heatmap(&cells, "sensors <d=2>");
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.contains(r##"fill="#ffffff""##) && svg.contains(r##"fill="#000000""##));
        assert!(svg.contains("sensors &lt;d=2&gt;"));
    }

    #[test]
    fn larger_m_is_drawn_higher() {
        let svg = phase_heatmap(&[cell(10, 0.1, 0.0), cell(40, 0.1, 1.0)], "");
        let y_of = |needle: &str| {
            let i = svg.find(needle).unwrap();
            let line = svg[..i].rsplit('\n').next().unwrap();
            let y = line.split("y=\"").nth(1).unwrap().split('"').next().unwrap();
            y.parse::<f64>().unwrap()
        };
        assert!(y_of("m=40 ") < y_of("m=10 "));
    }
}
