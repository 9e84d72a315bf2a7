use serde::{Deserialize, Serialize};

use super::function::CoefficientFn;
use super::set::CoefficientSet;
use super::CoeffError;
use crate::scalar::Scalar;

/// JSON description of one coefficient function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

impl FunctionSpec {
    pub fn constant(v: f64) -> Self {
        Self {
            kind: "constant".into(),
            knots: None,
            value: Some(v),
            values: None,
            coeffs: None,
            order: None,
        }
    }

    pub fn pwlinear(knots: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            kind: "pwlinear".into(),
            knots: Some(knots),
            value: None,
            values: Some(values),
            coeffs: None,
            order: None,
        }
    }

    pub fn build<S: Scalar>(&self, horizon: S, name: &str) -> Result<CoefficientFn<S>, CoeffError> {
        let conv = |v: &[f64]| v.iter().map(|&x| S::of(x)).collect::<Vec<S>>();
        let knots = |name: &str| {
            self.knots
                .as_deref()
                .map(conv)
                .ok_or_else(|| CoeffError::Parse(format!("{name}: missing \"knots\"")))
        };
        let values = |name: &str| {
            self.values
                .as_deref()
                .map(conv)
                .ok_or_else(|| CoeffError::Parse(format!("{name}: missing \"values\"")))
        };
        let f = match self.kind.as_str() {
            "constant" => {
                let v = match (self.value, self.values.as_deref()) {
                    (Some(v), None) => v,
                    (None, Some([v])) => *v,
                    _ => {
                        return Err(CoeffError::Parse(format!(
                            "{name}: constant needs \"value\" or a single-entry \"values\""
                        )))
                    }
                };
                if let Some(k) = &self.knots {
                    if k.first() != Some(&0.0) || k.last().map(|&t| S::of(t)) != Some(horizon) {
                        return Err(CoeffError::InvalidKnots(format!(
                            "{name}: constant knots must span [0, T]"
                        )));
                    }
                }
                CoefficientFn::constant(S::of(v), horizon)
            }
            "pwlinear" => CoefficientFn::piecewise_linear(knots(name)?, values(name)?)?,
            "pwpoly" => {
                let coeffs = self
                    .coeffs
                    .as_ref()
                    .ok_or_else(|| CoeffError::Parse(format!("{name}: missing \"coeffs\"")))?
                    .iter()
                    .map(|c| conv(c))
                    .collect();
                CoefficientFn::piecewise_polynomial(knots(name)?, coeffs)?
            }
            "table" => {
                let order = self.order.unwrap_or(1);
                CoefficientFn::table(knots(name)?, values(name)?, order)?
            }
            other => {
                return Err(CoeffError::Parse(format!("{name}: unknown kind \"{other}\"")));
            }
        };
        if f.horizon() != horizon {
            return Err(CoeffError::InvalidKnots(format!(
                "{name}: last knot {} differs from T = {horizon}",
                f.horizon()
            )));
        }
        Ok(f)
    }
}

/// JSON description of a coefficient set. Omitted off-diagonal entries are
/// zero; an omitted `H23` is synthesized as `-H33 H13`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SystemSpec {
    pub T: f64,
    pub H11: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub H12: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub H13: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub H21: Option<FunctionSpec>,
    pub H22: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub H23: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub H31: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub H32: Option<FunctionSpec>,
    pub H33: FunctionSpec,
    pub h22: FunctionSpec,
}

pub type CoefficientSpec = SystemSpec;

impl SystemSpec {
    pub fn build<S: Scalar>(&self) -> Result<CoefficientSet<S>, CoeffError> {
        if !(self.T > 0.0) || !self.T.is_finite() {
            return Err(CoeffError::InvalidHorizon(self.T));
        }
        let horizon = S::of(self.T);
        let req = |f: &FunctionSpec, name| f.build(horizon, name);
        let opt = |f: &Option<FunctionSpec>, name| match f {
            Some(f) => f.build(horizon, name),
            None => Ok(CoefficientFn::constant(S::zero(), horizon)),
        };
        let h23 = match &self.H23 {
            Some(f) => Some(f.build(horizon, "H23")?),
            None => None,
        };
        CoefficientSet::new(
            horizon,
            req(&self.H11, "H11")?,
            opt(&self.H12, "H12")?,
            opt(&self.H13, "H13")?,
            opt(&self.H21, "H21")?,
            req(&self.H22, "H22")?,
            h23,
            opt(&self.H31, "H31")?,
            opt(&self.H32, "H32")?,
            req(&self.H33, "H33")?,
            req(&self.h22, "h22")?,
        )
    }
}

/// Parses a JSON coefficient document.
pub fn parse_coefficient_set<S: Scalar>(text: &str) -> Result<CoefficientSet<S>, CoeffError> {
    let spec: SystemSpec = serde_json::from_str(text).map_err(|e| CoeffError::Parse(e.to_string()))?;
    spec.build()
}
