//! Measured seconds-per-step tables.
//!
//! File format (CSV): header `fabric,use_case,density,n,sec_per_step`, one
//! measurement per row. Values are interpolated piecewise-linearly in `n`
//! within a `(fabric, use_case, density)` series, then linearly in density
//! between the two nearest measured densities. Nothing is extrapolated.
//! NGJ rows ignore density (stored as 0).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::UseCase;
use crate::selector::Fabric;

pub const CALIBRATION_HEADER: &str = "fabric,use_case,density,n,sec_per_step";

const DENSITY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationPoint {
    pub fabric: Fabric,
    pub use_case: UseCase,
    pub density: f64,
    pub n: usize,
    pub sec_per_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct Series {
    density: f64,
    /// Sorted by `n`, unique.
    points: Vec<(usize, f64)>,
}

impl Series {
    fn at(&self, n: usize) -> Option<f64> {
        let idx = self.points.partition_point(|&(pn, _)| pn < n);
        let &(n_hi, t_hi) = self.points.get(idx)?;
        if n_hi == n {
            return Some(t_hi);
        }
        let &(n_lo, t_lo) = self.points.get(idx.checked_sub(1)?)?;
        let frac = (n - n_lo) as f64 / (n_hi - n_lo) as f64;
        Some(t_lo + (t_hi - t_lo) * frac)
    }

    fn grid(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().map(|&(n, _)| n)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Calibration {
    /// Series per (fabric, use case), sorted by density.
    series: BTreeMap<(Fabric, UseCase), Vec<Series>>,
}

impl Calibration {
    pub fn from_points(points: impl IntoIterator<Item = CalibrationPoint>) -> Result<Self> {
        let mut cal = Calibration::default();
        for p in points {
            cal.insert(p)?;
        }
        Ok(cal)
    }

    pub fn insert(&mut self, p: CalibrationPoint) -> Result<()> {
        if !p.sec_per_step.is_finite() || p.sec_per_step <= 0.0 {
            return Err(Error::Config(format!("sec_per_step must be finite and > 0, got {}", p.sec_per_step)));
        }
        if !(0.0..=1.0).contains(&p.density) {
            return Err(Error::Config(format!("density {} outside [0, 1]", p.density)));
        }
        let density = if p.use_case == UseCase::Ngj { 0.0 } else { p.density };
        let list = self.series.entry((p.fabric, p.use_case)).or_default();
        let idx = list.partition_point(|s| s.density < density - DENSITY_EPS);
        if list.get(idx).is_none_or(|s| (s.density - density).abs() > DENSITY_EPS) {
            list.insert(
                idx,
                Series {
                    density,
                    points: Vec::new(),
                },
            );
        }
        let series = &mut list[idx];
        match series.points.binary_search_by_key(&p.n, |&(n, _)| n) {
            Ok(_) => Err(Error::Config(format!(
                "duplicate calibration entry for {} {} density {} n {}",
                p.fabric, p.use_case, density, p.n
            ))),
            Err(pos) => {
                series.points.insert(pos, (p.n, p.sec_per_step));
                Ok(())
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn has_series(&self, fabric: Fabric, use_case: UseCase) -> bool {
        self.series.contains_key(&(fabric, use_case))
    }

    /// The one or two series that bracket `density`, with the blend weight
    /// of the upper one.
    fn bracket(&self, fabric: Fabric, use_case: UseCase, density: f64) -> Option<(&Series, &Series, f64)> {
        let list = self.series.get(&(fabric, use_case))?;
        if use_case == UseCase::Ngj {
            let s = list.first()?;
            return Some((s, s, 0.0));
        }
        let idx = list.partition_point(|s| s.density < density - DENSITY_EPS);
        let hi = list.get(idx)?;
        if (hi.density - density).abs() <= DENSITY_EPS {
            return Some((hi, hi, 0.0));
        }
        let lo = list.get(idx.checked_sub(1)?)?;
        Some((lo, hi, (density - lo.density) / (hi.density - lo.density)))
    }

    /// Interpolated seconds per step, or `None` outside the measured range.
    pub fn sec_per_step(&self, fabric: Fabric, use_case: UseCase, density: f64, n: usize) -> Option<f64> {
        let (lo, hi, w) = self.bracket(fabric, use_case, density)?;
        let (a, b) = (lo.at(n)?, hi.at(n)?);
        Some(if w == 0.0 { a } else { a + (b - a) * w })
    }

    /// Network sizes at which `sec_per_step` is anchored for this query.
    pub fn grid(&self, fabric: Fabric, use_case: UseCase, density: f64) -> Vec<usize> {
        let Some((lo, hi, _)) = self.bracket(fabric, use_case, density) else {
            return Vec::new();
        };
        let mut g: Vec<usize> = lo.grid().chain(hi.grid()).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    pub fn points(&self) -> Vec<CalibrationPoint> {
        self.series
            .iter()
            .flat_map(|(&(fabric, use_case), list)| {
                list.iter().flat_map(move |s| {
                    s.points.iter().map(move |&(n, t)| CalibrationPoint {
                        fabric,
                        use_case,
                        density: s.density,
                        n,
                        sec_per_step: t,
                    })
                })
            })
            .collect()
    }

    /// Every time multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_points(self.points().into_iter().map(|p| CalibrationPoint {
            sec_per_step: p.sec_per_step * factor,
            ..p
        }))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CALIBRATION_HEADER);
        out.push('\n');
        for p in self.points() {
            writeln!(
                out,
                "{},{},{},{},{}",
                p.fabric,
                p.use_case.to_string().to_lowercase(),
                p.density,
                p.n,
                p.sec_per_step
            )
            .unwrap();
        }
        out
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CALIBRATION_HEADER => {}
            Some((r, h)) => {
                return Err(Error::parse(
                    path,
                    r + 1,
                    1,
                    format!("expected header {CALIBRATION_HEADER:?}, found {:?}", h.trim()),
                ))
            }
            None => return Err(Error::parse(path, 1, 1, "empty calibration file")),
        }
        let mut cal = Calibration::default();
        for (r, line) in lines {
            let row = r + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::parse(path, row, fields.len().min(5) + 1, format!("expected 5 fields, found {}", fields.len())));
            }
            let err = |col: usize, what: &str| Error::parse(path, row, col, format!("invalid {what} {:?}", fields[col - 1]));
            let point = CalibrationPoint {
                fabric: fields[0].parse().map_err(|_| err(1, "fabric"))?,
                use_case: fields[1].parse().map_err(|_| err(2, "use case"))?,
                density: fields[2].parse().map_err(|_| err(3, "density"))?,
                n: fields[3].parse().map_err(|_| err(4, "network size"))?,
                sec_per_step: fields[4].parse().map_err(|_| err(5, "sec_per_step"))?,
            };
            cal.insert(point).map_err(|e| Error::parse(path, row, 1, e.to_string()))?;
        }
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(fabric: Fabric, use_case: UseCase, density: f64, n: usize, t: f64) -> CalibrationPoint {
        CalibrationPoint {
            fabric,
            use_case,
            density,
            n,
            sec_per_step: t,
        }
    }

    fn sample() -> Calibration {
        Calibration::from_points([
            pt(Fabric::Gpu, UseCase::Rgj, 0.5, 100, 1.0),
            pt(Fabric::Gpu, UseCase::Rgj, 0.5, 300, 3.0),
            pt(Fabric::Gpu, UseCase::Rgj, 1.0, 100, 2.0),
            pt(Fabric::Gpu, UseCase::Rgj, 1.0, 300, 6.0),
            pt(Fabric::Dfe, UseCase::Ngj, 0.7, 96, 5.0),
        ])
        .unwrap()
    }

    #[test]
    fn interpolates_in_n_then_density() {
        let c = sample();
        assert_eq!(c.sec_per_step(Fabric::Gpu, UseCase::Rgj, 0.5, 200), Some(2.0));
        assert_eq!(c.sec_per_step(Fabric::Gpu, UseCase::Rgj, 1.0, 300), Some(6.0));
        assert_eq!(c.sec_per_step(Fabric::Gpu, UseCase::Rgj, 0.75, 200), Some(3.0));
        assert_eq!(c.sec_per_step(Fabric::Gpu, UseCase::Rgj, 0.75, 100), Some(1.5));
    }

    #[test]
    fn no_extrapolation() {
        let c = sample();
        assert_eq!(c.sec_per_step(Fabric::Gpu, UseCase::Rgj, 0.5, 99), None);
        assert_eq!(c.sec_per_step(Fabric::Gpu, UseCase::Rgj, 0.5, 301), None);
        assert_eq!(c.sec_per_step(Fabric::Gpu, UseCase::Rgj, 0.25, 200), None);
        assert_eq!(c.sec_per_step(Fabric::Phi, UseCase::Rgj, 0.5, 200), None);
    }

    #[test]
    fn ngj_ignores_density() {
        let c = sample();
        assert_eq!(c.sec_per_step(Fabric::Dfe, UseCase::Ngj, 0.0, 96), Some(5.0));
        assert_eq!(c.sec_per_step(Fabric::Dfe, UseCase::Ngj, 1.0, 96), Some(5.0));
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(Calibration::from_points([pt(Fabric::Dfe, UseCase::Rgj, 1.0, 96, 0.0)]).is_err());
        assert!(Calibration::from_points([
            pt(Fabric::Dfe, UseCase::Rgj, 1.0, 96, 1.0),
            pt(Fabric::Dfe, UseCase::Rgj, 1.0, 96, 2.0)
        ])
        .is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let c = sample();
        let text = c.to_csv();
        assert!(text.starts_with("fabric,use_case,density,n,sec_per_step\n"));
        assert_eq!(Calibration::parse_csv(&text, Path::new("c.csv")).unwrap(), c);

        let bad = "fabric,use_case,density,n,sec_per_step\nDFE,rgj,1.0,abc,1e-5\n";
        let err = Calibration::parse_csv(bad, Path::new("c.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, col: 4, .. }), "{err}");
        assert!(Calibration::parse_csv("n,fabric\n", Path::new("c.csv")).is_err());
        let neg = "fabric,use_case,density,n,sec_per_step\nGPU,sgj,0.5,96,-1\n";
        assert!(Calibration::parse_csv(neg, Path::new("c.csv")).is_err());
    }

    #[test]
    fn grid_is_union_of_bracketing_series() {
        let mut c = sample();
        c.insert(pt(Fabric::Gpu, UseCase::Rgj, 1.0, 200, 4.0)).unwrap();
        assert_eq!(c.grid(Fabric::Gpu, UseCase::Rgj, 0.75), vec![100, 200, 300]);
        assert_eq!(c.grid(Fabric::Gpu, UseCase::Rgj, 0.5), vec![100, 300]);
    }
}
