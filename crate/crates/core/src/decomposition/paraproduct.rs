use crate::error::{Error, Result};
use crate::spectral::ops::{apply_real_table, product};
use crate::spectral::SpectralField;

use super::dyadic::{dyadic_block, DyadicSystem};

#[derive(Debug, Clone)]
pub struct Paraproduct {
    /// `Σ_j S_{j−1}f · Δ_j g`
    pub low_high: SpectralField,
    /// `Σ_j S_j g · Δ_j f`
    pub high_low: SpectralField,
    /// `mean(f)·mean(g)`, the only piece of `fg` in neither sum.
    pub mean_product: f64,
}

impl Paraproduct {
    /// `low_high + high_low + mean(f)mean(g)`.
    pub fn recombine(&self) -> Result<SpectralField> {
        let mut out = self.low_high.add(&self.high_low)?;
        out.coeffs_mut()[0] += self.mean_product;
        Ok(out)
    }
}

pub fn paraproduct_split(
    f: &SpectralField,
    g: &SpectralField,
    sys: &DyadicSystem,
) -> Result<Paraproduct> {
    if f.components() != 1 || g.components() != 1 {
        return Err(Error::RejectedInput("paraproduct expects scalar fields".into()));
    }
    let grid = f.grid();
    let mut low_high = SpectralField::zeros(grid, 1);
    let mut high_low = SpectralField::zeros(grid, 1);
    for j in sys.shells() {
        let dg = dyadic_block(g, j, sys)?;
        let df = dyadic_block(f, j, sys)?;
        let sf = apply_real_table(f, &sys.low_table(j - 1))?;
        let sg = apply_real_table(g, &sys.low_table(j))?;
        if dg.max_abs() > 0.0 {
            low_high = low_high.add(&product(&sf, &dg)?)?;
        }
        if df.max_abs() > 0.0 {
            high_low = high_low.add(&product(&sg, &df)?)?;
        }
    }
    Ok(Paraproduct {
        low_high,
        high_low,
        mean_product: f.mean(0) * g.mean(0),
    })
}
