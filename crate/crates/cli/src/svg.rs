//! Small deterministic SVG charts. Every number is printed with fixed
//! precision so regenerating a figure from the same data is byte-identical.

use std::fmt::Write;

const FONT: &str = "font-family=\"sans-serif\"";

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
    title: String,
    run_id: String,
}

impl Svg {
    pub fn new(width: f64, height: f64, title: &str, run_id: &str) -> Svg {
        let mut s = Svg { width, height, body: String::new(), title: title.to_string(), run_id: run_id.to_string() };
        s.text(width / 2.0, 22.0, title, 15.0, "middle");
        s
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>",
            w.max(0.0),
            h.max(0.0)
        );
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64) {
        let _ = writeln!(self.body, "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"#444\"/>");
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, size: f64, anchor: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" {FONT} font-size=\"{size:.0}\" text-anchor=\"{anchor}\">{}</text>",
            esc(s)
        );
    }

    /// Text rotated -90 degrees about its anchor point.
    pub fn vtext(&mut self, x: f64, y: f64, s: &str, size: f64) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" {FONT} font-size=\"{size:.0}\" text-anchor=\"end\" transform=\"rotate(-90 {x:.2} {y:.2})\">{}</text>",
            esc(s)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n\
             <title>{}</title>\n<metadata>run_id={}</metadata>\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            esc(&self.title),
            esc(&self.run_id),
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Blue for positive (male-leaning) values, red for negative, white at zero.
pub fn diverging(v: f64, scale: f64) -> String {
    let t = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |c: f64| (255.0 - (255.0 - c) * t.abs()).round() as u8;
    let (r, g, b) = if t >= 0.0 { (fade(33.0), fade(102.0), fade(172.0)) } else { (fade(178.0), fade(24.0), fade(43.0)) };
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn heatmap(title: &str, rows: &[String], cols: &[String], values: &[Vec<Option<f64>>], run_id: &str) -> String {
    let cell = 18.0;
    let (left, top) = (140.0, 150.0);
    let width = left + cell * cols.len() as f64 + 40.0;
    let height = top + cell * rows.len() as f64 + 50.0;
    let scale = values.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut svg = Svg::new(width.max(320.0), height, title, run_id);
    for (j, c) in cols.iter().enumerate() {
        svg.vtext(left + cell * (j as f64 + 0.7), top - 6.0, c, 10.0);
    }
    for (i, r) in rows.iter().enumerate() {
        let y = top + cell * i as f64;
        svg.text(left - 6.0, y + cell * 0.7, r, 10.0, "end");
        for (j, v) in values[i].iter().enumerate() {
            let fill = match v {
                Some(v) => diverging(*v, scale),
                None => "#dddddd".to_string(),
            };
            svg.rect(left + cell * j as f64, y, cell - 1.0, cell - 1.0, &fill);
        }
    }
    svg.text(
        left,
        height - 20.0,
        &format!("blue: male-leaning, red: female-leaning, |max| = {scale:.3}"),
        10.0,
        "start",
    );
    svg.finish()
}

/// Horizontal bars; `items` are drawn top to bottom.
pub fn hbar(title: &str, items: &[(String, f64)], color: &str, run_id: &str) -> String {
    let (left, top, bar, span) = (150.0, 40.0, 22.0, 260.0);
    let height = top + bar * items.len().max(1) as f64 + 30.0;
    let max = items.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let mut svg = Svg::new(left + span + 80.0, height, title, run_id);
    for (i, (label, v)) in items.iter().enumerate() {
        let y = top + bar * i as f64;
        let w = if max > 0.0 { span * v.abs() / max } else { 0.0 };
        svg.text(left - 6.0, y + bar * 0.65, label, 11.0, "end");
        svg.rect(left, y + 2.0, w, bar - 4.0, color);
        svg.text(left + w + 4.0, y + bar * 0.65, &format!("{v:.3}"), 10.0, "start");
    }
    svg.line(left, top, left, top + bar * items.len().max(1) as f64);
    svg.finish()
}

/// Vertical bars on a fixed [0, y_max] axis.
pub fn vbar(title: &str, items: &[(String, f64)], y_max: f64, run_id: &str) -> String {
    let (left, top, plot_h, bar) = (50.0, 40.0, 220.0, 36.0);
    let width = left + bar * items.len().max(1) as f64 + 30.0;
    let mut svg = Svg::new(width.max(300.0), top + plot_h + 140.0, title, run_id);
    let base = top + plot_h;
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = base - plot_h * k as f64 / 4.0;
        svg.text(left - 6.0, y + 4.0, &format!("{v:.2}"), 10.0, "end");
    }
    for (i, (label, v)) in items.iter().enumerate() {
        let x = left + bar * i as f64;
        let h = if y_max > 0.0 { plot_h * (v / y_max).clamp(0.0, 1.0) } else { 0.0 };
        svg.rect(x + 4.0, base - h, bar - 8.0, h, "#4a6fa5");
        svg.vtext(x + bar * 0.6, base + 8.0, label, 10.0);
    }
    svg.line(left, base, left + bar * items.len().max(1) as f64, base);
    svg.line(left, top, left, base);
    svg.finish()
}

const SERIES_COLORS: [&str; 4] = ["#4a6fa5", "#c0504d", "#9bbb59", "#8064a2"];

/// Groups of bars in [0, 1]: one group per category, one bar per series.
pub fn grouped_bars(title: &str, categories: &[String], series: &[String], values: &[Vec<f64>], run_id: &str) -> String {
    let (left, top, plot_h) = (50.0, 40.0, 200.0);
    let bar = 12.0;
    let group = bar * series.len() as f64 + 10.0;
    let width = left + group * categories.len().max(1) as f64 + 160.0;
    let mut svg = Svg::new(width.max(320.0), top + plot_h + 130.0, title, run_id);
    let base = top + plot_h;
    for k in 0..=4 {
        let y = base - plot_h * k as f64 / 4.0;
        svg.text(left - 6.0, y + 4.0, &format!("{:.2}", k as f64 / 4.0), 10.0, "end");
    }
    for (c, label) in categories.iter().enumerate() {
        let x0 = left + group * c as f64 + 5.0;
        for (s, _) in series.iter().enumerate() {
            let h = plot_h * values[c][s].clamp(0.0, 1.0);
            svg.rect(x0 + bar * s as f64, base - h, bar - 2.0, h, SERIES_COLORS[s % SERIES_COLORS.len()]);
        }
        svg.vtext(x0 + group / 2.0, base + 8.0, label, 10.0);
    }
    svg.line(left, base, left + group * categories.len().max(1) as f64, base);
    let lx = left + group * categories.len().max(1) as f64 + 20.0;
    for (s, name) in series.iter().enumerate() {
        let y = top + 16.0 * s as f64;
        svg.rect(lx, y, 10.0, 10.0, SERIES_COLORS[s % SERIES_COLORS.len()]);
        svg.text(lx + 14.0, y + 9.0, name, 10.0, "start");
    }
    svg.finish()
}
