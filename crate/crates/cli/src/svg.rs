//! SVG rendering of a plan: grid, partitions, per-UAV tours, the UGV cycle
//! and release points.

use std::fmt::Write;

use supercycle::{GridSpec, SupercyclePlan};

const WIDTH: f64 = 960.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn render(plan: &SupercyclePlan, grid: &GridSpec) -> String {
    let scale = (WIDTH - 2.0 * MARGIN) / grid.x_max;
    let height = grid.y_max * scale + 2.0 * MARGIN;
    let x = |v: f64| MARGIN + v * scale;
    // Flip so +y points up.
    let y = |v: f64| height - MARGIN - v * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let _ = writeln!(s, r##"<g id="grid" stroke="#dddddd" stroke-width="0.5">"##);
    for c in 0..=grid.x_bar {
        let v = c as f64 * grid.d;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            x(v),
            y(0.0),
            x(v),
            y(grid.y_max)
        );
    }
    for r in 0..=grid.y_bar {
        let v = r as f64 * grid.d;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            x(0.0),
            y(v),
            x(grid.x_max),
            y(v)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r##"<g id="partitions" fill="none" stroke="#333333" stroke-width="1.5">"##
    );
    for p in &plan.partitions.partitions {
        let (x0, y0) = (p.anchor_col as f64 * grid.d, p.anchor_row as f64 * grid.d);
        let (w, h) = (p.a1 as f64 * grid.d, p.a2 as f64 * grid.d);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
            x(x0),
            y(y0 + h),
            w * scale,
            h * scale
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="tours" fill="none" stroke-width="1">"#);
    for a in &plan.assignments {
        let pts: Vec<String> = a.route(grid).iter().map(|p| format!("{},{}", x(p.x), y(p.y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline stroke="{}" points="{}"/>"#,
            PALETTE[a.slot % PALETTE.len()],
            pts.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");

    let cycle: Vec<String> = (0..=plan.partition_order.len())
        .map(|i| plan.release_point(i))
        .map(|p| format!("{},{}", x(p.x), y(p.y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline id="supercycle" fill="none" stroke="#000000" stroke-width="3" stroke-dasharray="8 4" points="{}"/>"##,
        cycle.join(" ")
    );

    let _ = writeln!(s, r##"<g id="release-points" fill="#000000">"##);
    for (i, _) in plan.partition_order.iter().enumerate() {
        let p = plan.release_point(i);
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="4"/>"#, x(p.x), y(p.y));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use supercycle::{build_plan, FleetParams, PlanOptions};

    #[test]
    fn has_every_layer() {
        let g = GridSpec::new(8.0, 8.0, 1.0, 0.5).unwrap();
        let f = FleetParams {
            n: 2,
            m: 1,
            e_bar: 20.0,
            beta_minus: 1.0,
            beta_plus: 2.0,
            uav_speed: 1.0,
            ugv_speed: 1.0,
        };
        let plan = build_plan(&g, &f, 4, 4, &PlanOptions::default()).unwrap();
        let svg = render(&plan, &g);
        for id in ["grid", "partitions", "tours", "supercycle", "release-points"] {
            assert!(svg.contains(&format!(r#"id="{id}""#)), "missing layer {id}");
        }
        assert_eq!(svg.matches("<polyline stroke=").count(), 8);
        assert_eq!(svg.matches("<circle").count(), 4);
    }
}
