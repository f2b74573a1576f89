//! Minimal standalone SVG writer for the two-state figure: three expected-
//! utility lines over the belief plus the two indifference markers. No
//! external references, no scripts.

use robim::plot::PlotData;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 48.0;

struct Mapper {
    y_min: f64,
    y_max: f64,
}

impl Mapper {
    fn x(&self, mu: f64) -> f64 {
        MARGIN + mu * (W - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        H - MARGIN - (v - self.y_min) / span * (H - 2.0 * MARGIN)
    }
}

fn polyline(map: &Mapper, pts: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
    let coords: Vec<String> = pts
        .map(|(mu, v)| format!("{:.2},{:.2}", map.x(mu), map.y(v)))
        .collect();
    format!(
        "  <polyline fill=\"none\" {style} points=\"{}\"/>\n",
        coords.join(" ")
    )
}

pub fn render(data: &PlotData) -> String {
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for r in &data.rows {
        for v in [r.eu_a, r.eu_ahat, r.eu_b] {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    let pad = 0.05 * (y_max - y_min).max(1e-9);
    let map = Mapper {
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // axes
    s.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#555\"/>\n",
        map.x(0.0),
        H - MARGIN,
        map.x(1.0),
        H - MARGIN
    ));
    s.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#555\"/>\n",
        map.x(0.0),
        MARGIN,
        map.x(0.0),
        H - MARGIN
    ));
    s.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#333\">belief in state 1</text>\n",
        W / 2.0 - 40.0,
        H - 12.0
    ));

    s.push_str(&polyline(
        &map,
        data.rows.iter().map(|r| (r.mu, r.eu_a)),
        "stroke=\"#1f6fb2\" stroke-width=\"2\"",
    ));
    s.push_str(&polyline(
        &map,
        data.rows.iter().map(|r| (r.mu, r.eu_ahat)),
        "stroke=\"#c23b3b\" stroke-width=\"2\" stroke-dasharray=\"7,4\"",
    ));
    s.push_str(&polyline(
        &map,
        data.rows.iter().map(|r| (r.mu, r.eu_b)),
        "stroke=\"#3a9e4d\" stroke-width=\"2\" stroke-dasharray=\"2,3\"",
    ));

    // indifference markers sit on the rival's line
    let line_b = |mu: f64| {
        let first = &data.rows[0];
        let last = &data.rows[data.rows.len() - 1];
        first.eu_b + (last.eu_b - first.eu_b) * mu
    };
    for (mu, label) in [(data.mu_bar, "mu_bar"), (data.mu_hat, "mu_hat")] {
        if (0.0..=1.0).contains(&mu) {
            let (cx, cy) = (map.x(mu), map.y(line_b(mu)));
            s.push_str(&format!(
                "  <circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"#222\"/>\n"
            ));
            s.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#222\">{label} = \
                 {mu:.4}</text>\n",
                cx + 6.0,
                cy - 6.0
            ));
        }
    }

    // legend
    let legend = [
        ("incumbent", "#1f6fb2"),
        ("candidate", "#c23b3b"),
        ("rival", "#3a9e4d"),
    ];
    for (i, (name, color)) in legend.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        s.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" \
             stroke-width=\"3\"/>\n",
            W - MARGIN - 90.0,
            W - MARGIN - 64.0
        ));
        s.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#333\">{name}</text>\n",
            W - MARGIN - 58.0,
            y + 4.0
        ));
    }
    s.push_str("</svg>\n");
    s
}
