//! JSON body descriptors: `{"kind": ..., "n": ..., "params": {...}}`.
//!
//! Kinds and parameters:
//! - `cube`, `ball`, `simplex`: no parameters
//! - `lp_ball`: `p` (number >= 1 or `"inf"`)
//! - `cone`: optional `height` (default `n`), optional `base` descriptor
//!   without `n` (default `{"kind": "cube"}`)
//! - `polytope`: `halfspaces` (`[{"normal": [...], "offset": b}]`, meaning
//!   `normal . x <= b`), optional `volume_samples` and `seed`

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{make_body, make_polytope, BodyKind, BodySpec, Halfspace, DEFAULT_VOLUME_SAMPLES};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyDescriptor {
    pub kind: String,
    pub n: usize,
    #[serde(default = "empty_params")]
    pub params: Value,
}

fn empty_params() -> Value {
    Value::Object(Map::new())
}

impl BodyDescriptor {
    pub fn new(kind: &str, n: usize) -> Self {
        BodyDescriptor {
            kind: kind.to_string(),
            n,
            params: empty_params(),
        }
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let d: BodyDescriptor = serde_json::from_str(text)?;
        Ok(d)
    }

    pub fn build(&self) -> Result<BodySpec> {
        build_kind(&self.kind, self.n, &self.params)
    }
}

fn param_f64(params: &Value, key: &str) -> Result<Option<f64>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(x)) => Ok(x.as_f64()),
        Some(Value::String(s)) if s == "inf" => Ok(Some(f64::INFINITY)),
        Some(other) => Err(Error::invalid(format!(
            "parameter {key}: expected a number, got {other}"
        ))),
    }
}

fn build_kind(kind: &str, n: usize, params: &Value) -> Result<BodySpec> {
    if !params.is_object() {
        return Err(Error::invalid("params must be an object"));
    }
    match kind {
        "cube" => BodySpec::cube(n),
        "ball" => BodySpec::ball(n),
        "simplex" => BodySpec::simplex(n),
        "lp_ball" => {
            let p = param_f64(params, "p")?
                .ok_or_else(|| Error::invalid("lp_ball needs parameter p"))?;
            BodySpec::lp_ball(n, p)
        }
        "cone" => {
            if n < 2 {
                return Err(Error::invalid("cone needs n >= 2"));
            }
            let height = param_f64(params, "height")?.unwrap_or(n as f64);
            let base = match params.get("base") {
                None | Some(Value::Null) => BodySpec::cube(n - 1)?,
                Some(b) => {
                    let bkind = b
                        .get("kind")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::invalid("cone base needs a kind"))?;
                    let bparams = b.get("params").cloned().unwrap_or_else(empty_params);
                    build_kind(bkind, n - 1, &bparams)?
                }
            };
            make_body(
                BodyKind::Cone {
                    base: Box::new(base),
                    height,
                },
                n,
            )
        }
        "polytope" => {
            let hs = params
                .get("halfspaces")
                .ok_or_else(|| Error::invalid("polytope needs halfspaces"))?;
            let halfspaces: Vec<Halfspace> = serde_json::from_value(hs.clone())?;
            let samples = params
                .get("volume_samples")
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .unwrap_or(DEFAULT_VOLUME_SAMPLES);
            let seed = params.get("seed").and_then(Value::as_u64).unwrap_or(0);
            make_polytope(halfspaces, n, samples, seed)
        }
        other => Err(Error::invalid(format!("unknown body kind {other:?}"))),
    }
}

impl BodySpec {
    /// Descriptor that rebuilds this body.
    pub fn descriptor(&self) -> BodyDescriptor {
        let (kind, params) = kind_params(self);
        BodyDescriptor {
            kind: kind.to_string(),
            n: self.dim,
            params,
        }
    }
}

fn kind_params(body: &BodySpec) -> (&'static str, Value) {
    match &body.kind {
        BodyKind::Cube => ("cube", empty_params()),
        BodyKind::EuclideanBall => ("ball", empty_params()),
        BodyKind::Simplex => ("simplex", empty_params()),
        BodyKind::LpBall { p } => {
            let p = if p.is_infinite() {
                json!("inf")
            } else {
                json!(p)
            };
            ("lp_ball", json!({ "p": p }))
        }
        BodyKind::Cone { base, height } => {
            let (bkind, bparams) = kind_params(base);
            (
                "cone",
                json!({ "height": height, "base": { "kind": bkind, "params": bparams } }),
            )
        }
        BodyKind::OraclePolytope { halfspaces } => {
            let samples = body
                .volume
                .map(|v| v.samples)
                .unwrap_or(DEFAULT_VOLUME_SAMPLES);
            (
                "polytope",
                json!({ "halfspaces": halfspaces, "volume_samples": samples }),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let d = BodyDescriptor::parse(r#"{"kind":"lp_ball","n":5,"params":{"p":"inf"}}"#).unwrap();
        let k = d.build().unwrap();
        assert_eq!(k.name(), "lp_ball(p=inf)");
        assert_eq!(k.descriptor(), d);

        let d = BodyDescriptor::parse(r#"{"kind":"cone","n":4,"params":{"base":{"kind":"ball"}}}"#)
            .unwrap();
        let k = d.build().unwrap();
        assert_eq!(k.name(), "cone(ball)");
        let again = k.descriptor().build().unwrap();
        assert_eq!(again.scale, k.scale);
    }

    #[test]
    fn missing_kind_is_an_error() {
        assert!(BodyDescriptor::parse(r#"{"n":3}"#).is_err());
        assert!(BodyDescriptor::new("dodecahedron", 3).build().is_err());
        assert!(BodyDescriptor::new("lp_ball", 3).build().is_err());
    }
}
