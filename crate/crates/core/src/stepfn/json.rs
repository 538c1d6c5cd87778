use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stepfn::{Partition1D, StepFunction1D, StepFunction2D};

/// Wire form of one fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberJson {
    pub lens: Vec<f64>,
    pub vals: Vec<f64>,
}

/// Wire form of a [`StepFunction2D`]: `{"base": [...], "fibers": [{"lens", "vals"}, ...]}`.
///
/// Parsing into this type only checks the shape; converting to
/// [`StepFunction2D`] checks the partition invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunctionJson {
    pub base: Vec<f64>,
    pub fibers: Vec<FiberJson>,
}

impl From<&StepFunction2D> for StepFunctionJson {
    fn from(f: &StepFunction2D) -> Self {
        Self {
            base: f.base().lengths().to_vec(),
            fibers: f
                .fibers()
                .iter()
                .map(|fib| FiberJson {
                    lens: fib.partition().lengths().to_vec(),
                    vals: fib.values().to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<StepFunctionJson> for StepFunction2D {
    type Error = Error;

    fn try_from(raw: StepFunctionJson) -> Result<Self> {
        let base = Partition1D::from_lengths(raw.base)?;
        let fibers = raw
            .fibers
            .into_iter()
            .enumerate()
            .map(|(i, fib)| {
                let part = Partition1D::from_lengths(fib.lens).map_err(|e| {
                    Error::InvalidPartition(format!("fiber {i}: {e}"))
                })?;
                StepFunction1D::new(part, fib.vals)
            })
            .collect::<Result<Vec<_>>>()?;
        StepFunction2D::new(base, fibers)
    }
}

impl Serialize for StepFunction2D {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepFunctionJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepFunction2D {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StepFunctionJson::deserialize(d)?;
        StepFunction2D::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let f = StepFunction2D::from_grid(
            &[0.0, 0.1, 1.0 / 3.0, 1.0],
            &[0.0, 1.0 / 7.0, 1.0],
            &[vec![0.1, 2.0 / 3.0], vec![1e-300, -5.5], vec![3.0, 1.0 / 9.0]],
        )
        .unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: StepFunction2D = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn shape_and_invariant_errors_are_distinguished() {
        assert!(serde_json::from_str::<StepFunctionJson>("{\"base\": 3}").is_err());
        let raw: StepFunctionJson =
            serde_json::from_str(r#"{"base":[0.5,0.4],"fibers":[{"lens":[1],"vals":[1]},{"lens":[1],"vals":[1]}]}"#)
                .unwrap();
        assert!(matches!(
            StepFunction2D::try_from(raw),
            Err(Error::InvalidPartition(_))
        ));
    }
}
