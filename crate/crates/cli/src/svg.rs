use std::fmt::Write;

use diffdrive_topp::format::fmt_sig;
use diffdrive_topp::trajectory::{slow_regions, TimedTrajectory};

const WIDTH: f64 = 900.0;
const PAD: f64 = 20.0;

/// Path drawn segment by segment, blue when slow and red at the speed cap. The
/// slowest point of every interior stretch below 90 % of `v_max` is circled.
pub fn render(tt: &TimedTrajectory, vcap: &[f64], v_max: f64) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for n in &tt.nodes {
        x0 = x0.min(n.x);
        x1 = x1.max(n.x);
        y0 = y0.min(n.y);
        y1 = y1.max(n.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (WIDTH - 2.0 * PAD) / span;
    let height = (y1 - y0) * scale + 2.0 * PAD;
    let px = |x: f64| fmt_sig(PAD + (x - x0) * scale);
    let py = |y: f64| fmt_sig(height - PAD - (y - y0) * scale);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">"#,
        fmt_sig(WIDTH),
        fmt_sig(height)
    );
    for (k, w) in tt.nodes.windows(2).enumerate() {
        let cap = vcap[k].min(vcap[k + 1]).max(1e-12);
        let ratio = (0.5 * (w[0].v + w[1].v) / cap).clamp(0.0, 1.0);
        let red = (255.0 * ratio).round() as u8;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="rgb({red},0,{})" stroke-width="2"/>"#,
            px(w[0].x),
            py(w[0].y),
            px(w[1].x),
            py(w[1].y),
            255 - red
        );
    }
    for r in slow_regions(tt, 0.9 * v_max, 2.0) {
        let n = &tt.nodes[r.slowest];
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="6" fill="none" stroke="black"/>"#,
            px(n.x),
            py(n.y)
        );
    }
    out.push_str("</svg>\n");
    out
}
