use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integrability or summability exponent in `[1, ∞]`. Serializes as a
/// number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    pub fn check(self, name: &str) -> Result<()> {
        if self.0.is_nan() || self.0 < 1.0 {
            Err(Error::param(name, format!("{} is outside [1, inf]", self.0)))
        } else {
            Ok(())
        }
    }
}

impl From<f64> for Exponent {
    fn from(v: f64) -> Self {
        Exponent(v)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_inf() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number >= 1 or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "∞" => Ok(Exponent::INF),
                    other => other
                        .parse::<f64>()
                        .map(Exponent)
                        .map_err(|_| E::custom(format!("bad exponent {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFamily {
    Besov,
    Modulation,
    ExpModulation,
}

/// How `|k|` is measured in exponential-modulation weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreqMetric {
    #[default]
    Euclidean,
    L1,
}

impl FreqMetric {
    pub fn length(self, k: &[i64]) -> f64 {
        match self {
            FreqMetric::Euclidean => (k.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt(),
            FreqMetric::L1 => k.iter().map(|v| v.abs() as f64).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    #[default]
    None,
    /// `e^{c√t Λ}`
    ExpSqrtTLambda,
    /// `e^{c t Λ}`
    ExpLinearTLambda,
    /// `e^{c t^{power} Λ}`
    ExpPowerTLambda,
    /// `2^{s(t)|k|}` on uniform blocks, `s(t) = c·t` (optionally `c·(clamp ∧ t)`).
    ExpModulationRate,
}

/// A time-dependent exponential frequency weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(default)]
    pub kind: WeightKind,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default)]
    pub clamp: Option<f64>,
}

fn default_power() -> f64 {
    1.0
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::none()
    }
}

impl WeightSpec {
    pub fn none() -> Self {
        WeightSpec {
            kind: WeightKind::None,
            rate: 0.0,
            power: 1.0,
            clamp: None,
        }
    }

    pub fn sqrt_t(rate: f64) -> Self {
        WeightSpec {
            kind: WeightKind::ExpSqrtTLambda,
            rate,
            power: 0.5,
            clamp: None,
        }
    }

    pub fn linear_t(rate: f64) -> Self {
        WeightSpec {
            kind: WeightKind::ExpLinearTLambda,
            rate,
            power: 1.0,
            clamp: None,
        }
    }

    pub fn power_t(rate: f64, power: f64) -> Self {
        WeightSpec {
            kind: WeightKind::ExpPowerTLambda,
            rate,
            power,
            clamp: None,
        }
    }

    /// `2^{s(t)|k|}` with `s(t) = rate·t`, or `rate·(clamp ∧ t)`.
    pub fn modulation(rate: f64, clamp: Option<f64>) -> Self {
        WeightSpec {
            kind: WeightKind::ExpModulationRate,
            rate,
            power: 1.0,
            clamp,
        }
    }

    /// The weight natural to dissipation order `α`: `√t` for α = 1, linear
    /// for α = 1/2, `t^{1/2α}` otherwise.
    pub fn for_alpha(alpha: f64, rate: f64) -> Self {
        if (alpha - 1.0).abs() < 1e-15 {
            Self::sqrt_t(rate)
        } else if (alpha - 0.5).abs() < 1e-15 {
            Self::linear_t(rate)
        } else {
            Self::power_t(rate, 1.0 / (2.0 * alpha))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(Error::param("weight.rate", format!("{} is not finite and >= 0", self.rate)));
        }
        if self.kind == WeightKind::ExpPowerTLambda && !(self.power > 0.5 && self.power <= 1.0) {
            return Err(Error::param(
                "weight.power",
                format!("{} is outside (1/2, 1]", self.power),
            ));
        }
        if let Some(c) = self.clamp {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::param("weight.clamp", format!("{c} is not positive")));
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.kind == WeightKind::None || self.rate == 0.0
    }

    /// Acts through `e^{w(t)|ξ|₁}` on the field.
    pub fn is_lambda(&self) -> bool {
        matches!(
            self.kind,
            WeightKind::ExpSqrtTLambda | WeightKind::ExpLinearTLambda | WeightKind::ExpPowerTLambda
        )
    }

    pub fn is_modulation(&self) -> bool {
        self.kind == WeightKind::ExpModulationRate
    }

    /// The power of `t` this weight grows with.
    pub fn time_power(&self) -> f64 {
        match self.kind {
            WeightKind::ExpSqrtTLambda => 0.5,
            WeightKind::ExpPowerTLambda => self.power,
            _ => 1.0,
        }
    }

    /// `w(t)` (natural log per unit `|ξ|₁`) for Λ weights, `s(t)` (log₂ per
    /// unit `|k|`) for modulation weights.
    pub fn exponent(&self, t: f64) -> f64 {
        let t = match self.clamp {
            Some(c) => t.min(c),
            None => t,
        };
        match self.kind {
            WeightKind::None => 0.0,
            WeightKind::ExpSqrtTLambda => self.rate * t.max(0.0).sqrt(),
            WeightKind::ExpLinearTLambda | WeightKind::ExpModulationRate => self.rate * t,
            WeightKind::ExpPowerTLambda => self.rate * t.max(0.0).powf(self.power),
        }
    }
}

/// Which norm to compute: `(s, p, q)`, optional time exponent `γ` and weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub family: NormFamily,
    #[serde(default)]
    pub s: f64,
    pub p: Exponent,
    pub q: Exponent,
    #[serde(default)]
    pub gamma: Option<Exponent>,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default)]
    pub metric: FreqMetric,
}

impl NormSpec {
    pub fn besov(s: f64, p: f64, q: f64) -> Self {
        NormSpec {
            family: NormFamily::Besov,
            s,
            p: Exponent(p),
            q: Exponent(q),
            gamma: None,
            weight: None,
            metric: FreqMetric::Euclidean,
        }
    }

    pub fn modulation(s: f64, p: f64, q: f64) -> Self {
        NormSpec {
            family: NormFamily::Modulation,
            ..Self::besov(s, p, q)
        }
    }

    pub fn exp_modulation(s: f64, p: f64, q: f64) -> Self {
        NormSpec {
            family: NormFamily::ExpModulation,
            ..Self::besov(s, p, q)
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(Exponent(gamma));
        self
    }

    pub fn with_weight(mut self, w: WeightSpec) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn weight(&self) -> WeightSpec {
        self.weight.unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.p.check("p")?;
        self.q.check("q")?;
        if let Some(g) = self.gamma {
            g.check("gamma")?;
        }
        if !self.s.is_finite() {
            return Err(Error::param("s", "must be finite"));
        }
        if self.family == NormFamily::ExpModulation && self.s < 0.0 {
            return Err(Error::param("s", format!("{} < 0 for exp_modulation", self.s)));
        }
        if let Some(w) = &self.weight {
            w.validate()?;
            if w.is_modulation() && self.family == NormFamily::Besov {
                return Err(Error::param(
                    "weight.kind",
                    "modulation-rate weights act on uniform blocks, not dyadic shells",
                ));
            }
        }
        Ok(())
    }
}
