//! Geometry of the traced diagonal segment: slope of its image and the
//! angular gap to the vertical axis per radius.

use std::f64::consts::FRAC_PI_2;

use crate::flow_map::FlowState;

#[derive(Clone, Debug, PartialEq)]
pub struct WedgeReport {
    pub t: f64,
    /// min over image nodes of Phi^2 / Phi^1 (infinite if a node reached x1 <= 0).
    pub min_slope: f64,
    /// (r, pi/2 - theta*(r)) where theta*(r) is the largest polar angle at
    /// which the image polyline crosses the circle r; `None` if it does not.
    pub gaps: Vec<(f64, Option<f64>)>,
}

pub fn case_ii_wedge_diagnostic(image: &FlowState, radii: &[f64]) -> WedgeReport {
    let pts = &image.positions;
    let min_slope = pts
        .iter()
        .map(|p| if p[0] > 0.0 { p[1] / p[0] } else { f64::INFINITY })
        .fold(f64::INFINITY, f64::min);
    let polar: Vec<(f64, f64)> = pts.iter().map(|p| (p[0].hypot(p[1]), p[1].atan2(p[0]))).collect();
    let gaps = radii
        .iter()
        .map(|&r0| {
            let best = polar
                .windows(2)
                .filter_map(|w| {
                    let ((ra, ta), (rb, tb)) = (w[0], w[1]);
                    if (ra - r0) * (rb - r0) > 0.0 || ra == rb {
                        return if ra == r0 { Some(ta) } else { None };
                    }
                    let s = (r0 - ra) / (rb - ra);
                    Some(ta + s * (tb - ta))
                })
                .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
            (r0, best.map(|t| FRAC_PI_2 - t))
        })
        .collect();
    WedgeReport {
        t: image.t,
        min_slope,
        gaps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_map::SegmentSpec;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn diagonal_at_launch() {
        let seg = SegmentSpec::for_n(64.0, 40).unwrap();
        let st = seg.state();
        let r_mid = 0.05;
        let rep = case_ii_wedge_diagnostic(&st, &[r_mid, 0.9]);
        assert!((rep.min_slope - 1.0).abs() < 1e-15);
        assert!((rep.gaps[0].1.unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(rep.gaps[1].1, None);
    }

    #[test]
    fn tilted_image() {
        let mut st = FlowState::new(vec![[0.01, 0.02], [0.02, 0.08], [0.03, 0.2]]);
        st.positions = st.launch.clone();
        let rep = case_ii_wedge_diagnostic(&st, &[0.1]);
        assert!((rep.min_slope - 2.0).abs() < 1e-15);
        let g = rep.gaps[0].1.unwrap();
        assert!(g > 0.0 && g < FRAC_PI_4);
    }
}
