//! JSON wire protocol shared by the subprocess and HTTP adapters.
//!
//! One object per request:
//!   request:  {"id": string, "image_png_b64": string, "ground_truth": int}
//!   response: {"id": string, "predicted": int, "confidence_true": float,
//!              "scores": [float] (optional)}
//!
//! Images travel as base64 of the exact 8-bit RGB PNG the compositor saves.
//! Scores, when present, must be probabilities consistent with `predicted`
//! and `confidence_true`; servers returning logits must normalize first.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::compositor::Image;
use crate::error::{Error, Result};
use crate::oracle::{LabelId, Prediction};

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    id: &'a str,
    image_png_b64: &'a str,
    ground_truth: LabelId,
}

#[derive(Debug, Deserialize)]
pub(crate) struct WireResponse {
    pub id: String,
    pub predicted: LabelId,
    pub confidence_true: f64,
    #[serde(default)]
    pub scores: Option<Vec<f64>>,
}

pub(crate) fn encode_image(image: &Image) -> Result<String> {
    Ok(BASE64.encode(image.to_png_bytes()?))
}

/// One request line (no trailing newline).
pub(crate) fn encode_request(id: &str, image_png_b64: &str, ground_truth: LabelId) -> String {
    serde_json::to_string(&WireRequest {
        id,
        image_png_b64,
        ground_truth,
    })
    .expect("request serialization cannot fail")
}

/// Parses one response object; malformed payloads become protocol errors
/// carrying the raw text.
pub(crate) fn decode_response(text: &str) -> Result<WireResponse> {
    serde_json::from_str(text).map_err(|e| Error::Protocol {
        reason: e.to_string(),
        payload: text.to_string(),
    })
}

/// Converts a decoded response into a [`Prediction`], enforcing the
/// prediction invariants against the optional score vector.
pub(crate) fn response_to_prediction(
    resp: WireResponse,
    ground_truth: LabelId,
    raw: &str,
) -> Result<Prediction> {
    if let Some(scores) = resp.scores {
        let derived = Prediction::from_scores(scores, ground_truth).map_err(|e| Error::Protocol {
            reason: e.to_string(),
            payload: raw.to_string(),
        })?;
        if derived.predicted != resp.predicted {
            return Err(Error::Protocol {
                reason: format!(
                    "predicted {} disagrees with scores argmax {}",
                    resp.predicted, derived.predicted
                ),
                payload: raw.to_string(),
            });
        }
        if (derived.true_class_confidence - resp.confidence_true).abs() > 1e-6 {
            return Err(Error::Protocol {
                reason: format!(
                    "confidence_true {} disagrees with scores[{ground_truth}] = {}",
                    resp.confidence_true, derived.true_class_confidence
                ),
                payload: raw.to_string(),
            });
        }
        return Ok(derived);
    }
    if !(resp.confidence_true.is_finite() && (0.0..=1.0).contains(&resp.confidence_true)) {
        return Err(Error::Protocol {
            reason: format!(
                "confidence_true must be a probability in [0,1], got {}",
                resp.confidence_true
            ),
            payload: raw.to_string(),
        });
    }
    Ok(Prediction {
        predicted: resp.predicted,
        true_class_confidence: resp.confidence_true,
        scores: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_has_the_documented_shape() {
        let line = encode_request("q-1", "QUJD", 7);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["id"], "q-1");
        assert_eq!(v["image_png_b64"], "QUJD");
        assert_eq!(v["ground_truth"], 7);
        assert!(!line.contains('\n'));
    }

    #[test]
    fn missing_fields_are_protocol_errors_naming_the_field() {
        let err = decode_response(r#"{"id":"q-1"}"#).unwrap_err();
        match err {
            Error::Protocol { reason, payload } => {
                assert!(reason.contains("predicted"), "reason: {reason}");
                assert_eq!(payload, r#"{"id":"q-1"}"#);
            }
            other => panic!("expected protocol error, got {other:?}"),
        }
    }

    #[test]
    fn scoreless_response_passes_through() {
        let raw = r#"{"id":"a","predicted":1,"confidence_true":0.1}"#;
        let p = response_to_prediction(decode_response(raw).unwrap(), 0, raw).unwrap();
        assert_eq!(p.predicted, 1);
        assert_eq!(p.true_class_confidence, 0.1);
        assert!(p.scores.is_none());
    }

    #[test]
    fn inconsistent_scores_are_rejected() {
        let raw = r#"{"id":"a","predicted":0,"confidence_true":0.1,"scores":[0.1,0.9]}"#;
        assert!(matches!(
            response_to_prediction(decode_response(raw).unwrap(), 0, raw),
            Err(Error::Protocol { .. })
        ));
        let raw = r#"{"id":"a","predicted":1,"confidence_true":0.5,"scores":[0.1,0.9]}"#;
        assert!(matches!(
            response_to_prediction(decode_response(raw).unwrap(), 0, raw),
            Err(Error::Protocol { .. })
        ));
    }

    #[test]
    fn out_of_range_confidence_is_rejected() {
        let raw = r#"{"id":"a","predicted":1,"confidence_true":1.5}"#;
        assert!(matches!(
            response_to_prediction(decode_response(raw).unwrap(), 0, raw),
            Err(Error::Protocol { .. })
        ));
    }
}
