//! |grad w(t)|_2 / |grad w0|_2 along a trajectory.

use crate::error::{Error, Result};
use crate::fields::VorticityField;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GrowthSeries {
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    initial: f64,
}

impl GrowthSeries {
    pub fn new(omega0: &VorticityField) -> Result<Self> {
        let initial = omega0.h1_seminorm();
        if initial == 0.0 {
            return Err(Error::invalid("initial gradient vanishes; ratio undefined"));
        }
        Ok(GrowthSeries {
            times: vec![omega0.time()],
            ratios: vec![1.0],
            initial,
        })
    }

    pub fn push(&mut self, omega: &VorticityField) {
        self.times.push(omega.time());
        self.ratios.push(omega.h1_seminorm() / self.initial);
    }

    /// (time, ratio) of the largest ratio.
    pub fn max(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(&self.ratios)
            .fold((self.times[0], f64::NEG_INFINITY), |acc, (&t, &r)| if r > acc.1 { (t, r) } else { acc })
    }
}

pub fn growth_ratio(trajectory: &[VorticityField]) -> Result<GrowthSeries> {
    let first = trajectory.first().ok_or_else(|| Error::config("empty trajectory"))?;
    let mut g = GrowthSeries::new(first)?;
    for w in &trajectory[1..] {
        g.push(w);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Symmetry;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn stationary_mode_has_unit_ratio() {
        let g = Grid::new(64).unwrap();
        let w = VorticityField::new(
            g,
            g.sample(|x, y| (PI * x).sin() * (PI * y).sin()),
            Symmetry::OddOdd,
            0.0,
        );
        let s = growth_ratio(&[w.clone(), w.clone().with_time(1.0)]).unwrap();
        assert_eq!(s.ratios[0], 1.0);
        assert!((s.ratios[1] - 1.0).abs() < 1e-10);
        assert!(growth_ratio(&[VorticityField::zeros(g)]).is_err());
    }
}
