//! Figure-curve CSV files.
//!
//! Layout: `#`-prefixed metadata lines (`qchan-figure`, axis names, the side
//! of the curve that is forbidden), then a `x,bound,model` header and one row
//! per grid point. `model` holds the sharpness-family point at the same
//! abscissa and is empty where the family has no member or for curves
//! without a model series. Numbers carry 12 significant digits.

use std::fmt::Write as _;

use crate::bounds::{collapse_general_bound, collapse_unbiased_bound, heisenberg_unbiased_bound};
use crate::error::{Error, Result};
use crate::models::{delta_from_disturbance, fluorescence_delta_bound, SharpnessFamily};

pub const DEFAULT_POINTS: usize = 256;
pub const MIN_POINTS: usize = 16;
/// Right end of the `Σ/|x−y|` axis.
pub const FIG5_X_MAX: f64 = 3.0;
/// Right end of the time axis.
pub const FIG4_T_MAX: f64 = 5.0;

/// Which side of the bound curve no transfer can reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Forbidden {
    Below,
    Above,
}

impl Forbidden {
    pub fn as_str(self) -> &'static str {
        match self {
            Forbidden::Below => "below",
            Forbidden::Above => "above",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureId {
    /// Σ against Δ.
    SigmaDisturbance = 2,
    /// δ against Δ.
    DeltaDisturbance = 3,
    /// δ against time under fluorescence.
    Fluorescence = 4,
    /// Coherence against Σ/|x−y|.
    CoherenceSigma = 5,
    /// Coherence against δ.
    CoherenceDelta = 6,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [
        FigureId::SigmaDisturbance,
        FigureId::DeltaDisturbance,
        FigureId::Fluorescence,
        FigureId::CoherenceSigma,
        FigureId::CoherenceDelta,
    ];

    pub fn from_number(n: u32) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.number() == n)
            .ok_or_else(|| Error::OutOfRange(format!("unknown figure id {n}; expected 2..6")))
    }

    pub fn number(self) -> u32 {
        self as u32
    }

    pub fn axes(self) -> (&'static str, &'static str) {
        match self {
            FigureId::SigmaDisturbance => ("Delta", "Sigma"),
            FigureId::DeltaDisturbance => ("Delta", "delta"),
            FigureId::Fluorescence => ("t", "delta"),
            FigureId::CoherenceSigma => ("Sigma/|x-y|", "coherence"),
            FigureId::CoherenceDelta => ("delta", "coherence"),
        }
    }

    pub fn forbidden(self) -> Forbidden {
        match self {
            FigureId::SigmaDisturbance | FigureId::DeltaDisturbance | FigureId::Fluorescence => Forbidden::Below,
            FigureId::CoherenceSigma | FigureId::CoherenceDelta => Forbidden::Above,
        }
    }

    fn range(self) -> (f64, f64) {
        match self {
            FigureId::SigmaDisturbance | FigureId::DeltaDisturbance => (0.0, 0.5),
            FigureId::Fluorescence => (0.0, FIG4_T_MAX),
            FigureId::CoherenceSigma => (0.0, FIG5_X_MAX),
            FigureId::CoherenceDelta => (0.0, 0.5),
        }
    }

    /// Grid of `points` abscissae. The Σ–Δ curve diverges at `Δ = 0`, so its
    /// grid starts one step in.
    pub fn grid(self, points: usize) -> Vec<f64> {
        let (lo, hi) = self.range();
        match self {
            FigureId::SigmaDisturbance => (1..=points).map(|i| hi * i as f64 / points as f64).collect(),
            _ => (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect(),
        }
    }

    /// Bound curve at `x`.
    pub fn bound(self, x: f64) -> f64 {
        match self {
            FigureId::SigmaDisturbance => heisenberg_unbiased_bound(x, 1.0),
            FigureId::DeltaDisturbance => delta_from_disturbance(x),
            FigureId::Fluorescence => fluorescence_delta_bound(x),
            FigureId::CoherenceSigma => collapse_unbiased_bound(x, 1.0).expect("unit gap"),
            FigureId::CoherenceDelta => collapse_general_bound(x).expect("grid inside [0, 1/2]"),
        }
    }

    /// Sharpness-family point at `x`, if the figure has a model series and
    /// the family reaches `x`.
    pub fn model(self, x: f64) -> Option<f64> {
        match self {
            FigureId::SigmaDisturbance => {
                let fam = SharpnessFamily::new(sharpness_for_disturbance(x)?).ok()?;
                Some(fam.sigma())
            }
            FigureId::DeltaDisturbance => {
                let fam = SharpnessFamily::new(sharpness_for_disturbance(x)?).ok()?;
                Some(fam.delta())
            }
            FigureId::CoherenceDelta => SharpnessFamily::new(x).ok().map(|f| f.coherence()),
            FigureId::Fluorescence | FigureId::CoherenceSigma => None,
        }
    }
}

/// `p` with `½ − √(p(1−p)) = Δ`, i.e. `p = ½ − √(¼ − (½ − Δ)²)`.
pub fn sharpness_for_disturbance(disturbance: f64) -> Option<f64> {
    if !(0.0..=0.5).contains(&disturbance) {
        return None;
    }
    Some(delta_from_disturbance(disturbance))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FigureRow {
    pub x: f64,
    pub bound: f64,
    pub model: Option<f64>,
}

pub fn figure_rows(id: FigureId, points: usize) -> Result<Vec<FigureRow>> {
    if points < MIN_POINTS {
        return Err(Error::OutOfRange(format!(
            "{points} points; at least {MIN_POINTS} required"
        )));
    }
    Ok(id
        .grid(points)
        .into_iter()
        .map(|x| FigureRow {
            x,
            bound: id.bound(x),
            model: id.model(x),
        })
        .collect())
}

pub fn figure_csv(id: FigureId, points: usize) -> Result<String> {
    let rows = figure_rows(id, points)?;
    let (xa, ya) = id.axes();
    let mut s = String::new();
    let _ = writeln!(s, "# qchan-figure: {}", id.number());
    let _ = writeln!(s, "# x-axis: {xa}");
    let _ = writeln!(s, "# y-axis: {ya}");
    let _ = writeln!(s, "# forbidden: {}", id.forbidden().as_str());
    s.push_str("x,bound,model\n");
    for r in rows {
        let model = r.model.map(|m| format!("{m:.11e}")).unwrap_or_default();
        let _ = writeln!(s, "{:.11e},{:.11e},{model}", r.x, r.bound);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_shape() {
        for id in FigureId::ALL {
            let csv = figure_csv(id, 32).unwrap();
            let mut lines = csv.lines();
            assert_eq!(lines.next().unwrap(), format!("# qchan-figure: {}", id.number()));
            assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 33);
            let xs: Vec<f64> = figure_rows(id, 32).unwrap().iter().map(|r| r.x).collect();
            assert!(xs.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(figure_csv(FigureId::Fluorescence, 8).is_err());
        assert!(FigureId::from_number(7).is_err());
    }

    #[test]
    fn model_points_lie_on_curves() {
        for id in [
            FigureId::SigmaDisturbance,
            FigureId::DeltaDisturbance,
            FigureId::CoherenceDelta,
        ] {
            let rows = figure_rows(id, 64).unwrap();
            assert!(rows.iter().filter(|r| r.model.is_some()).count() >= 62);
            for r in rows {
                if let Some(m) = r.model {
                    assert!((m - r.bound).abs() < 1e-6 * r.bound.max(1.0), "{id:?} {r:?}");
                }
            }
        }
    }

    #[test]
    fn named_points() {
        assert_eq!(FigureId::CoherenceSigma.bound(0.0), 0.0);
        let t1 = FigureId::Fluorescence.bound(1.0);
        assert!((t1 - (0.5 - 0.5 * (1.0 - (-1.5f64).exp()).sqrt())).abs() < 1e-15);
        assert!(FigureId::Fluorescence.model(1.0).is_none());
    }
}
