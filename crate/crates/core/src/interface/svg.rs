use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::InterfaceError;
use crate::geometry::Polygon;
use crate::packing::{layout_metrics, Layout};

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7"];

/// SVG drawing of `layout`: y points up, as in the layout coordinates.
pub fn render_svg(pieces: &[Polygon], layout: &Layout) -> String {
    let m = layout_metrics(pieces, layout);
    let (l, h) = (layout.length, layout.height);
    let stroke = 1e-3 * l.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {l:.4} {h:.4}" width="{:.0}" height="{:.0}">"#,
        800.0 * l / l.max(h),
        800.0 * h / l.max(h)
    );
    let _ = writeln!(s, "<title>L={:.2}, waste={:.2}%</title>", m.length, 100.0 * m.waste_ratio);
    let _ = writeln!(s, r#"<g transform="translate(0 {h:.4}) scale(1 -1)">"#);
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{l:.4}" height="{h:.4}" fill="none" stroke="black" stroke-width="{:.4}"/>"#,
        2.0 * stroke
    );
    for (i, p) in layout.posed(pieces).iter().enumerate() {
        let mut d = String::new();
        for (k, v) in p.vertices().iter().enumerate() {
            let _ = write!(d, "{}{:.4} {:.4} ", if k == 0 { "M" } else { "L" }, v.x, v.y);
        }
        d.push('Z');
        let _ = writeln!(
            s,
            r#"<path id="piece-{i}" d="{d}" fill="{}" fill-opacity="0.8" stroke="black" stroke-width="{stroke:.4}"/>"#,
            PALETTE[i % PALETTE.len()]
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn write_svg(pieces: &[Polygon], layout: &Layout, path: &Path) -> Result<(), InterfaceError> {
    fs::write(path, render_svg(pieces, layout))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Pose};

    #[test]
    fn one_path_per_piece_and_exact_viewbox() {
        let sq = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)]).unwrap();
        let pieces = vec![sq.clone(), sq];
        let layout = Layout { height: 1.0, length: 2.0, poses: vec![Pose::new(0.5, 0.5, 0.0), Pose::new(1.5, 0.5, 0.0)] };
        let svg = render_svg(&pieces, &layout);
        assert_eq!(svg.matches("<path ").count(), 2);
        assert!(svg.contains(r#"viewBox="0 0 2.0000 1.0000""#));
        assert!(svg.contains("<title>L=2.00, waste=0.00%</title>"));
        assert_eq!(svg, render_svg(&pieces, &layout));
    }
}
