use serde::Serialize;

use crate::error::{Error, Result};

/// Errors at or below this value are treated as numerical floor.
pub const ERROR_FLOOR: f64 = 1e-24;
pub const MIN_FIT_POINTS: usize = 20;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Least-squares line through `(i, ln e_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub first_iter: usize,
}

/// Fits `ln e_i ≈ intercept + slope · i` over the last `tail_fraction` of
/// the entries above [`ERROR_FLOOR`]. Indices are positions in `trace`.
pub fn fit_rate(trace: &[f64], tail_fraction: f64) -> Result<RateFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let usable: Vec<(f64, f64)> = trace
        .iter()
        .enumerate()
        .filter(|(_, &e)| e.is_finite() && e > ERROR_FLOOR)
        .map(|(i, &e)| (i as f64, e.ln()))
        .collect();
    let take = ((usable.len() as f64) * tail_fraction).ceil() as usize;
    if take < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            usable: take,
            required: MIN_FIT_POINTS,
        });
    }
    let pts = &usable[usable.len() - take..];
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
        first_iter: pts[0].0 as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_geometric_trace() {
        let trace: Vec<f64> = (0..200).map(|i| 0.9f64.powi(i)).collect();
        let fit = fit_rate(&trace, 0.5).unwrap();
        assert!((fit.slope - 0.9f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.points, 100);
    }

    #[test]
    fn floor_points_are_excluded() {
        let trace: Vec<f64> = (0..700).map(|i| 0.9f64.powi(i).max(ERROR_FLOOR)).collect();
        let fit = fit_rate(&trace, 0.5).unwrap();
        assert!((fit.slope - 0.9f64.ln()).abs() < 1e-12);
        let above = trace.iter().filter(|&&e| e > ERROR_FLOOR).count();
        assert_eq!(fit.points, above.div_ceil(2));
    }

    #[test]
    fn too_few_points() {
        let trace: Vec<f64> = (0..30).map(|i| 0.5f64.powi(i)).collect();
        assert!(matches!(
            fit_rate(&trace, 0.5),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(fit_rate(&trace, 1.5).is_err());
    }
}
