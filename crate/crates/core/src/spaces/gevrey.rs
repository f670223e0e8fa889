use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::ops::derivative;
use crate::spectral::{spectral_lp_norm, SpectralField};

/// Least-squares fit `log(‖∂^m_{x₁} f‖_p / m!) ≈ log M − m log ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyFit {
    pub rho_estimate: f64,
    #[serde(rename = "M_estimate")]
    pub m_estimate: f64,
    /// RMS deviation of the points from the fitted line.
    pub linearity_residual: f64,
}

/// `(slope, intercept, rms residual)` of the least-squares line through `(x, y)`.
pub fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// `log(‖∂^m_{x₁} f‖_p / m!)` for `m = 0..=max_order`.
pub fn log_derivative_profile(f: &SpectralField, p: f64, max_order: u32) -> Result<Vec<f64>> {
    let limit = f.grid().resolution() as u32 / 4;
    if max_order > limit {
        return Err(Error::param(
            "max_order",
            format!("{max_order} exceeds N/4 = {limit}"),
        ));
    }
    let mut out = Vec::with_capacity(max_order as usize + 1);
    let mut log_fact = 0.0;
    for m in 0..=max_order {
        if m > 0 {
            log_fact += (m as f64).ln();
        }
        let d = derivative(f, 0, m)?;
        let v = spectral_lp_norm(&d, p)?;
        let y = v.ln() - log_fact;
        if !y.is_finite() {
            return Err(Error::Overflow(format!(
                "derivative of order {m} has norm {v:e}; no Gevrey bound at this precision"
            )));
        }
        out.push(y);
    }
    Ok(out)
}

pub fn gevrey_membership(f: &SpectralField, p: f64, max_order: u32) -> Result<GevreyFit> {
    if max_order < 2 {
        return Err(Error::param("max_order", "a line fit needs at least three orders"));
    }
    let y = log_derivative_profile(f, p, max_order)?;
    let x: Vec<f64> = (0..=max_order).map(|m| m as f64).collect();
    let (slope, intercept, residual) = line_fit(&x, &y);
    Ok(GevreyFit {
        rho_estimate: (-slope).exp(),
        m_estimate: intercept.exp(),
        linearity_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    fn radial_decay(grid: &Grid, amp: impl Fn(f64) -> f64) -> SpectralField {
        SpectralField::from_fn(grid, 1, |_, k| {
            let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            Complex64::new(amp(r), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn exponential_decay_gives_unit_radius() {
        let g = Grid::new(2, 128).unwrap();
        let f = radial_decay(&g, |r| (-r).exp());
        let fit = gevrey_membership(&f, 2.0, 12).unwrap();
        assert!(fit.rho_estimate > 0.7 && fit.rho_estimate < 1.3, "{fit:?}");
        assert!(fit.linearity_residual < 0.1, "{fit:?}");
    }

    #[test]
    fn geometric_decay_gives_log_two_radius() {
        let g = Grid::new(2, 128).unwrap();
        let f = radial_decay(&g, |r| 2f64.powf(-r));
        let fit = gevrey_membership(&f, 2.0, 12).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!(fit.rho_estimate > 0.7 * ln2 && fit.rho_estimate < 1.3 * ln2, "{fit:?}");
    }

    #[test]
    fn single_mode_is_entire() {
        let g = Grid::new(2, 32).unwrap();
        let mut f = SpectralField::zeros(&g, 1);
        f.set_coeff_at(0, &[1, 0], Complex64::new(0.5, 0.0)).unwrap();
        f.set_coeff_at(0, &[-1, 0], Complex64::new(0.5, 0.0)).unwrap();
        let y = log_derivative_profile(&f, f64::INFINITY, 8).unwrap();
        let mut lf = 0.0;
        for (m, v) in y.iter().enumerate() {
            if m > 0 {
                lf += (m as f64).ln();
            }
            assert!((v + lf).abs() < 1e-12);
        }
        let a = gevrey_membership(&f, f64::INFINITY, 4).unwrap();
        let b = gevrey_membership(&f, f64::INFINITY, 8).unwrap();
        assert!(b.rho_estimate > a.rho_estimate && a.rho_estimate > 1.0);
    }

    #[test]
    fn order_limit_and_zero_field() {
        let g = Grid::new(2, 32).unwrap();
        let f = SpectralField::zeros(&g, 1);
        assert!(matches!(gevrey_membership(&f, 2.0, 9), Err(Error::InvalidParameter { .. })));
        assert!(matches!(gevrey_membership(&f, 2.0, 4), Err(Error::Overflow(_))));
    }
}
