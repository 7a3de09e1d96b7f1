//! Deterministic SVG light-cone diagrams for (1+1)-Minkowski embeddings.

use super::{Embedding, Location, Poset, SpacetimeError};
use crate::prob::rational::rational_to_f64;

/// Renders variable locations with their past/future light cones. Space runs
/// along the horizontal axis, time along the vertical (up is later).
pub fn render_svg(e: &Embedding) -> Result<String, SpacetimeError> {
    let Poset::Minkowski { dim: 2 } = e.poset else {
        return Err(SpacetimeError::NotMinkowski);
    };
    let pts: Vec<(String, f64, f64)> = e
        .locations
        .iter()
        .map(|(id, loc)| match loc {
            Location::Point(c) => Ok((id.clone(), rational_to_f64(&c[1]), rational_to_f64(&c[0]))),
            Location::Named(n) => Err(SpacetimeError::UnknownElement(n.clone())),
        })
        .collect::<Result<_, _>>()?;
    let (mut xmin, mut xmax, mut tmin, mut tmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (_, x, t) in &pts {
        xmin = xmin.min(*x);
        xmax = xmax.max(*x);
        tmin = tmin.min(*t);
        tmax = tmax.max(*t);
    }
    let pad = ((xmax - xmin).max(tmax - tmin).max(1.0)) * 0.5;
    let (x0, x1, t0, t1) = (xmin - pad, xmax + pad, tmin - pad, tmax + pad);
    let w = 480.0;
    let h = 480.0;
    let sx = |x: f64| (x - x0) / (x1 - x0) * w;
    let sy = |t: f64| h - (t - t0) / (t1 - t0) * h;
    let cone_len = pad.max((x1 - x0) + (t1 - t0));

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (id, x, t) in &pts {
        for (dxs, dts, style) in [
            (1.0, 1.0, "stroke:#888;stroke-width:1"),
            (-1.0, 1.0, "stroke:#888;stroke-width:1"),
            (1.0, -1.0, "stroke:#ccc;stroke-width:1;stroke-dasharray:4 3"),
            (
                -1.0,
                -1.0,
                "stroke:#ccc;stroke-width:1;stroke-dasharray:4 3",
            ),
        ] {
            out.push_str(&format!(
                "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" style=\"{style}\"/>\n",
                sx(*x),
                sy(*t),
                sx(x + dxs * cone_len),
                sy(t + dts * cone_len),
            ));
        }
        let _ = id;
    }
    for (id, x, t) in &pts {
        out.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"black\"/>\n",
            sx(*x),
            sy(*t)
        ));
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" font-family=\"monospace\">{id}</text>\n",
            sx(*x) + 7.0,
            sy(*t) - 7.0
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::Accessible;
    use std::collections::BTreeMap;

    #[test]
    fn svg_is_deterministic_and_labels_points() {
        let e = Embedding {
            poset: Poset::Minkowski { dim: 2 },
            locations: BTreeMap::from([
                ("A".to_string(), Location::point(&[-1, -1])),
                ("B".to_string(), Location::point(&[0, 0])),
            ]),
            accessible: Accessible::Future,
        };
        let s1 = render_svg(&e).unwrap();
        let s2 = render_svg(&e).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.contains(">A</text>"));
        assert!(s1.contains(">B</text>"));
        assert!(s1.starts_with("<svg"));
    }
}
