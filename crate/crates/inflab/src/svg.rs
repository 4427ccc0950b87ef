//! SVG heatmaps of grid functions with a fixed 256-step diverging ramp.

use std::fmt::Write;

use inflab_core::grid::{CellClass, GridFunction};

const LOW: [i32; 3] = [59, 76, 192];
const MID: [i32; 3] = [221, 221, 221];
const HIGH: [i32; 3] = [180, 4, 38];

/// Color of ramp step `i`: blue through light grey to red.
pub fn ramp(i: u8) -> [u8; 3] {
    let (a, b, t) = if i < 128 { (LOW, MID, i as i32) } else { (MID, HIGH, i as i32 - 128) };
    let mut c = [0u8; 3];
    for k in 0..3 {
        c[k] = (a[k] as f64 + ((b[k] - a[k]) * t) as f64 / 127.0).round() as u8;
    }
    c
}

fn step(v: f64, lo: f64, hi: f64) -> u8 {
    if hi > lo {
        ((v - lo) / (hi - lo) * 256.0).floor().clamp(0.0, 255.0) as u8
    } else {
        128
    }
}

/// Renders the valued cells of `f` (in 3D, the cell layer nearest `x3 = 0`)
/// with `x2` pointing up. Equal colors along a row are merged into one
/// rectangle.
pub fn heatmap(f: &GridFunction) -> String {
    let mask = f.mask();
    let spec = mask.spec();
    let ext = spec.extent();
    let (nx, ny) = (ext[0], ext[1]);
    let layer = if spec.dim() == 3 {
        let z = ((0.0 - spec.origin()[2]) / spec.h()).round();
        (z.max(0.0) as usize).min(ext[2] - 1)
    } else {
        0
    };
    let cell_at = |i: usize, j: usize| {
        let idx = if spec.dim() == 3 { spec.index(&[i, j, layer]) } else { spec.index(&[i, j]) };
        (mask.class(idx) != CellClass::Outside).then(|| f.value(idx))
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..ny {
        for i in 0..nx {
            if let Some(v) = cell_at(i, j) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let px = (512 / nx.max(ny)).max(1);
    let (w, hgt) = (nx * px, ny * px);
    let bar = 16;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" shape-rendering="crispEdges">"#,
        w + 3 * bar,
        hgt
    );
    for j in 0..ny {
        let y = (ny - 1 - j) * px;
        let mut i = 0;
        while i < nx {
            let Some(v) = cell_at(i, j) else {
                i += 1;
                continue;
            };
            let c = step(v, lo, hi);
            let start = i;
            i += 1;
            while i < nx && cell_at(i, j).map(|v| step(v, lo, hi)) == Some(c) {
                i += 1;
            }
            let [r, g, b] = ramp(c);
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{y}" width="{}" height="{px}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                start * px,
                (i - start) * px
            );
        }
    }
    // color bar, high values on top
    for k in 0..256usize {
        let [r, g, b] = ramp(k as u8);
        let y0 = hgt - (k + 1) * hgt / 256;
        let y1 = hgt - k * hgt / 256;
        if y1 > y0 {
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{y0}" width="{bar}" height="{}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                w + bar,
                y1 - y0
            );
        }
    }
    let _ = writeln!(s, "<!-- min {lo:.16e} max {hi:.16e} -->");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use inflab_core::domain::Ball;
    use inflab_core::grid::{rasterize_domain, GridSpec};
    use std::sync::Arc;

    #[test]
    fn ramp_endpoints_and_midpoint() {
        assert_eq!(ramp(0), [59, 76, 192]);
        assert_eq!(ramp(127), [221, 221, 221]);
        assert_eq!(ramp(128), [221, 221, 221]);
        assert_eq!(ramp(255), [180, 4, 38]);
    }

    #[test]
    fn ramp_is_monotone_per_half() {
        for i in 1..128u8 {
            let (a, b) = (ramp(i - 1), ramp(i));
            assert!(b[0] >= a[0] && b[1] >= a[1] && b[2] >= a[2]);
        }
        for i in 129..=255u8 {
            let (a, b) = (ramp(i - 1), ramp(i));
            assert!(b[0] <= a[0] && b[1] <= a[1] && b[2] <= a[2]);
        }
    }

    #[test]
    fn heatmap_is_deterministic_and_covers_cells() {
        let spec = GridSpec::centered(2, 1.0 / 16.0, &[0.0, 0.0], 1.0, 1).unwrap();
        let mask = Arc::new(rasterize_domain(Arc::new(Ball::unit(2)), spec, 1).unwrap());
        let f = GridFunction::from_fn(&mask, |x| x[0]);
        let a = heatmap(&f);
        assert_eq!(a, heatmap(&f));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("#3b4cc0") && a.contains("#b40426"));
        let constant = GridFunction::constant(&mask, 2.0);
        assert!(heatmap(&constant).contains("#dddddd"));
    }

    #[test]
    fn three_dimensional_slice() {
        let spec = GridSpec::centered(3, 0.25, &[0.0; 3], 1.0, 1).unwrap();
        let mask = Arc::new(rasterize_domain(Arc::new(Ball::unit(3)), spec, 1).unwrap());
        let f = GridFunction::from_fn(&mask, |x| x[1]);
        assert!(heatmap(&f).contains("<rect"));
    }
}
