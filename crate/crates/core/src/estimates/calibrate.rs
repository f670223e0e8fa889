use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{verify_with, EnsembleSpec, VerificationReport, VerifyOptions};
use crate::error::{Error, Result};
use crate::spaces::NormFamily;

/// Empirical constants for one `(α, n, N, family)`, as consumed by the
/// smallness check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub alpha: f64,
    pub n_dims: usize,
    pub resolution: usize,
    pub family: NormFamily,
    pub seed: u64,
    pub ensemble: EnsembleSpec,
    /// `C_emp` of each verified id.
    pub constants: BTreeMap<String, f64>,
    pub c_emp: f64,
    /// sha256 of the record serialized with an empty digest.
    pub digest: String,
}

impl CalibrationRecord {
    fn content_digest(&self) -> Result<String> {
        let blank = CalibrationRecord {
            digest: String::new(),
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&blank)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn digest_matches(&self) -> Result<bool> {
        Ok(self.content_digest()? == self.digest)
    }
}

fn ids_for(family: NormFamily) -> &'static [&'static str] {
    match family {
        NormFamily::Besov => &["semigroup_besov", "duhamel_besov", "bilinear_besov"],
        NormFamily::Modulation | NormFamily::ExpModulation => &["linear_modulation", "product_modulation"],
    }
}

/// Runs the ids behind the `family` fixed-point argument on `[N/2, N]` and
/// combines them as linear ∨ linear·bilinear. Any failing id refuses the
/// calibration.
pub fn calibrate(
    alpha: f64,
    n_dims: usize,
    resolution: usize,
    family: NormFamily,
    ensemble: &EnsembleSpec,
) -> Result<CalibrationRecord> {
    if resolution < 32 || resolution % 8 != 0 {
        return Err(Error::validation(
            "calibration.resolution",
            format!("{resolution} must be a multiple of 8 that is at least 32"),
        ));
    }
    let spec = EnsembleSpec {
        resolutions: vec![resolution / 2, resolution],
        n_dims,
        ..ensemble.clone()
    };
    let opts = VerifyOptions {
        alphas: vec![alpha],
        ..Default::default()
    };
    let mut constants = BTreeMap::new();
    for id in ids_for(family) {
        let r: VerificationReport = verify_with(id, &spec, &opts)?;
        if !r.pass {
            return Err(Error::CalibrationRefused(format!(
                "`{id}` failed (C_emp {:e}, drift {:.3}, {} non-finite samples)",
                r.c_emp,
                r.resolution_drift,
                r.failures.len()
            )));
        }
        constants.insert(id.to_string(), r.c_emp);
    }
    let c = |id: &str| constants[id];
    let c_emp = match family {
        NormFamily::Besov => c("semigroup_besov").max(c("duhamel_besov") * c("bilinear_besov")),
        _ => c("linear_modulation").max(c("linear_modulation") * c("product_modulation")),
    };
    let mut rec = CalibrationRecord {
        alpha,
        n_dims,
        resolution,
        family,
        seed: spec.seed,
        ensemble: spec,
        constants,
        c_emp,
        digest: String::new(),
    };
    rec.digest = rec.content_digest()?;
    Ok(rec)
}
