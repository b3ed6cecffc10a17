//! JSON-lines messages exchanged with an external evaluator process.
//!
//! ```text
//! parent -> child  {"type":"hello","protocol":1}
//! child -> parent  {"type":"hello","protocol":1,"name":"..."}
//! parent -> child  {"type":"eval","id":7,"combination":{"network":"...",...},"input_size":513}
//! child -> parent  {"type":"result","id":7,"status":"ok","accuracy":0.61,"time_s":0.39}
//! parent -> child  {"type":"shutdown"}
//! ```

use std::collections::BTreeMap;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::evaluators::{Evaluation, Status};

pub const PROTOCOL_VERSION: u32 = 1;

/// Dimension name to label, serialized as a JSON object in dimension order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelMap(pub Vec<(String, String)>);

impl LabelMap {
    pub fn get(&self, dimension: &str) -> Option<&str> {
        self.0.iter().find(|(d, _)| d == dimension).map(|(_, l)| l.as_str())
    }
}

impl Serialize for LabelMap {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for LabelMap {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct LabelVisitor;

        impl<'de> Visitor<'de> for LabelVisitor {
            type Value = LabelMap;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an object of dimension name to label")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<LabelMap, A::Error> {
                let mut out = Vec::new();
                let mut seen = BTreeMap::new();
                while let Some((k, v)) = access.next_entry::<String, String>()? {
                    if seen.insert(k.clone(), ()).is_some() {
                        return Err(serde::de::Error::custom(format!("duplicate dimension `{k}`")));
                    }
                    out.push((k, v));
                }
                Ok(LabelMap(out))
            }
        }

        de.deserialize_map(LabelVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParentMessage {
    Hello { protocol: u32 },
    Eval { id: u64, combination: LabelMap, input_size: u32 },
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChildMessage {
    Hello { protocol: u32, name: String },
    Result(ResultMessage),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMessage {
    pub id: u64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ResultMessage {
    pub fn ok(id: u64, accuracy: f64, time_s: f64) -> Self {
        ResultMessage {
            id,
            status: "ok".into(),
            accuracy: Some(accuracy),
            time_s: Some(time_s),
            detail: None,
        }
    }

    pub fn failed(id: u64, status: &str, detail: impl Into<String>) -> Self {
        ResultMessage { id, status: status.into(), accuracy: None, time_s: None, detail: Some(detail.into()) }
    }

    pub fn from_evaluation(id: u64, evaluation: &Evaluation) -> Self {
        match evaluation.status() {
            Status::Ok => ResultMessage::ok(
                id,
                evaluation.accuracy().expect("ok has accuracy"),
                evaluation.time_s().expect("ok has time"),
            ),
            Status::ProtocolError => ResultMessage::failed(id, "error", "protocol_error"),
            other => ResultMessage::failed(id, other.as_str(), other.as_str()),
        }
    }

    /// Converts a reply into an [`Evaluation`]. Anything that does not fit
    /// the grammar becomes `protocol_error`; a child-side `error` does too.
    pub fn to_evaluation(&self) -> Evaluation {
        match self.status.as_str() {
            "ok" => match (self.accuracy, self.time_s) {
                (Some(acc), Some(time)) => {
                    Evaluation::ok(acc, time).unwrap_or_else(|_| Evaluation::failure(Status::ProtocolError))
                }
                _ => Evaluation::failure(Status::ProtocolError),
            },
            "incompatible" => Evaluation::failure(Status::Incompatible),
            "resource_exhausted" => Evaluation::failure(Status::ResourceExhausted),
            "timeout" => Evaluation::failure(Status::Timeout),
            _ => Evaluation::failure(Status::ProtocolError),
        }
    }
}

pub fn encode<T: Serialize>(message: &T) -> String {
    serde_json::to_string(message).expect("protocol messages serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        assert_eq!(encode(&ParentMessage::Hello { protocol: 1 }), r#"{"type":"hello","protocol":1}"#);
        assert_eq!(encode(&ParentMessage::Shutdown), r#"{"type":"shutdown"}"#);
        let eval = ParentMessage::Eval {
            id: 3,
            combination: LabelMap(vec![
                ("network".into(), "n".into()),
                ("framework".into(), "f".into()),
                ("compression".into(), "none".into()),
            ]),
            input_size: 513,
        };
        let line = encode(&eval);
        assert_eq!(
            line,
            r#"{"type":"eval","id":3,"combination":{"network":"n","framework":"f","compression":"none"},"input_size":513}"#
        );
        assert_eq!(serde_json::from_str::<ParentMessage>(&line).unwrap(), eval);
        assert_eq!(
            encode(&ChildMessage::Result(ResultMessage::ok(3, 0.5, 1.0))),
            r#"{"type":"result","id":3,"status":"ok","accuracy":0.5,"time_s":1.0}"#
        );
    }

    #[test]
    fn replies_map_to_evaluations() {
        let parse = |s: &str| match serde_json::from_str::<ChildMessage>(s).unwrap() {
            ChildMessage::Result(r) => r.to_evaluation(),
            other => panic!("{other:?}"),
        };
        assert_eq!(
            parse(r#"{"type":"result","id":1,"status":"ok","accuracy":0.5,"time_s":1.0}"#).m(),
            Some(0.5)
        );
        assert_eq!(
            parse(r#"{"type":"result","id":1,"status":"ok","accuracy":1.5,"time_s":1.0}"#).status(),
            Status::ProtocolError
        );
        assert_eq!(
            parse(r#"{"type":"result","id":1,"status":"ok","accuracy":0.5,"time_s":0}"#).status(),
            Status::ProtocolError
        );
        assert_eq!(parse(r#"{"type":"result","id":1,"status":"ok"}"#).status(), Status::ProtocolError);
        assert_eq!(
            parse(r#"{"type":"result","id":1,"status":"incompatible","detail":"x"}"#).status(),
            Status::Incompatible
        );
        assert_eq!(
            parse(r#"{"type":"result","id":1,"status":"error","detail":"boom"}"#).status(),
            Status::ProtocolError
        );
        assert_eq!(parse(r#"{"type":"result","id":1,"status":"weird"}"#).status(), Status::ProtocolError);
    }

    #[test]
    fn duplicate_dimension_rejected() {
        let line = r#"{"type":"eval","id":1,"combination":{"a":"x","a":"y"},"input_size":1}"#;
        assert!(serde_json::from_str::<ParentMessage>(line).is_err());
    }
}
