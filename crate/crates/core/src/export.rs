//! Self-describing CSV files and minimal SVG plots.

use std::fmt::Write;

use crate::integrate::Trajectory;
use crate::reach::EndpointCloud;

fn header_comment(out: &mut String, config_json: &str) {
    for line in config_json.lines() {
        let _ = writeln!(out, "# {line}");
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x,y,theta_z,phi_1..phi_N,u1,u2`, preceded by the config as `#` comment lines.
pub fn trajectory_csv(traj: &Trajectory<f64>, config_json: &str) -> String {
    let mut out = String::new();
    header_comment(&mut out, config_json);
    let n = traj.states.first().map_or(3, |s| s.len()) - 3;
    out.push_str("t,x,y,theta_z");
    for i in 1..=n {
        let _ = write!(out, ",phi_{i}");
    }
    out.push_str(",u1,u2\n");
    for (k, t) in traj.times.iter().enumerate() {
        out.push_str(&num(*t));
        for v in &traj.states[k] {
            out.push(',');
            out.push_str(&num(*v));
        }
        for v in traj.controls[k] {
            out.push(',');
            out.push_str(&num(v));
        }
        out.push('\n');
    }
    out
}

/// `run,eta1..eta6,x,y,theta_z,phi_1..phi_N`, one row per successful run.
pub fn endpoints_csv(cloud: &EndpointCloud, config_json: &str) -> String {
    let mut out = String::new();
    header_comment(&mut out, config_json);
    let n = cloud.records.first().map_or(3, |r| r.endpoint.len()) - 3;
    out.push_str("run,eta1,eta2,eta3,eta4,eta5,eta6,x,y,theta_z");
    for i in 1..=n {
        let _ = write!(out, ",phi_{i}");
    }
    out.push('\n');
    for r in &cloud.records {
        let _ = write!(out, "{}", r.run);
        for v in r.eta.iter().chain(&r.endpoint) {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    out
}

enum Layer {
    Line { pts: Vec<[f64; 2]>, color: String, dashed: bool },
    Points { pts: Vec<[f64; 2]>, color: String, radius: f64 },
}

/// Scatter and line plots with labelled axes.
pub struct SvgPlot {
    title: String,
    x_label: String,
    y_label: String,
    window: Option<[f64; 4]>,
    equal_aspect: bool,
    layers: Vec<Layer>,
    legend: Vec<(String, String)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

impl SvgPlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            window: None,
            equal_aspect: false,
            layers: Vec::new(),
            legend: Vec::new(),
        }
    }

    /// Fixes the plotted range to `[x_min, x_max, y_min, y_max]`; data outside is clipped.
    pub fn window(mut self, w: [f64; 4]) -> Self {
        self.window = Some(w);
        self
    }

    pub fn equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }

    pub fn line(&mut self, pts: Vec<[f64; 2]>, color: &str, dashed: bool, label: Option<&str>) -> &mut Self {
        if let Some(l) = label {
            self.legend.push((l.into(), color.into()));
        }
        self.layers.push(Layer::Line { pts, color: color.into(), dashed });
        self
    }

    pub fn points(&mut self, pts: Vec<[f64; 2]>, color: &str, radius: f64, label: Option<&str>) -> &mut Self {
        if let Some(l) = label {
            self.legend.push((l.into(), color.into()));
        }
        self.layers.push(Layer::Points { pts, color: color.into(), radius });
        self
    }

    fn bounds(&self) -> [f64; 4] {
        if let Some(w) = self.window {
            return w;
        }
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for layer in &self.layers {
            let pts = match layer {
                Layer::Line { pts, .. } | Layer::Points { pts, .. } => pts,
            };
            for p in pts.iter().filter(|p| p[0].is_finite() && p[1].is_finite()) {
                b[0] = b[0].min(p[0]);
                b[1] = b[1].max(p[0]);
                b[2] = b[2].min(p[1]);
                b[3] = b[3].max(p[1]);
            }
        }
        if !b[0].is_finite() {
            return [-1.0, 1.0, -1.0, 1.0];
        }
        for (lo, hi) in [(0, 1), (2, 3)] {
            let pad = if b[hi] > b[lo] { 0.05 * (b[hi] - b[lo]) } else { 0.5 * b[lo].abs().max(1e-12) };
            b[lo] -= pad;
            b[hi] += pad;
        }
        if self.equal_aspect {
            let sx = (b[1] - b[0]) / (WIDTH - 2.0 * MARGIN);
            let sy = (b[3] - b[2]) / (HEIGHT - 2.0 * MARGIN);
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]));
            let (hx, hy) = (0.5 * s * (WIDTH - 2.0 * MARGIN), 0.5 * s * (HEIGHT - 2.0 * MARGIN));
            b = [cx - hx, cx + hx, cy - hy, cy + hy];
        }
        b
    }

    pub fn render(&self) -> String {
        let b = self.bounds();
        let px = |x: f64| MARGIN + (x - b[0]) / (b[1] - b[0]) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - b[2]) / (b[3] - b[2]) * (HEIGHT - 2.0 * MARGIN);
        let inside = |p: &[f64; 2]| p[0] >= b[0] && p[0] <= b[1] && p[1] >= b[2] && p[1] <= b[3];
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let x = b[0] + f * (b[1] - b[0]);
            let y = b[2] + f * (b[3] - b[2]);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.3e}</text>"#,
                px(x),
                HEIGHT - MARGIN + 16.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.3e}</text>"#,
                MARGIN - 4.0,
                py(y) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="30" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        for layer in &self.layers {
            match layer {
                Layer::Line { pts, color, dashed } => {
                    let mut d = String::new();
                    for p in pts.iter().filter(|p| inside(p)) {
                        let _ = write!(d, "{:.2},{:.2} ", px(p[0]), py(p[1]));
                    }
                    let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        d.trim_end()
                    );
                }
                Layer::Points { pts, color, radius } => {
                    for p in pts.iter().filter(|p| inside(p)) {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{color}"/>"#,
                            px(p[0]),
                            py(p[1])
                        );
                    }
                }
            }
        }
        for (k, (label, color)) in self.legend.iter().enumerate() {
            let y = MARGIN + 16.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                WIDTH - MARGIN - 120.0,
                y - 9.0,
                WIDTH - MARGIN - 105.0,
                y,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
