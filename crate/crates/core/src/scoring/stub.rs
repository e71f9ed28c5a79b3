//! A deterministic stand-in for the external scorer, speaking the same wire
//! protocol. Certainty is 5.5 minus the hedge count, clamped; probability is
//! uncertain when any hedge is present, number is certain when the text has
//! a digit.

use serde_json::{json, Value};

use super::clamp_certainty;
use crate::corpus::{Aspect, AspectLabel, AspectLabels};
use crate::lexicon::{count_hedges, Lexicon};

pub fn stub_scores(text: &str, hedges: &Lexicon) -> (f64, AspectLabels) {
    let h = count_hedges(text, hedges);
    let mut aspects = AspectLabels::default();
    aspects.set(Aspect::Probability, if h > 0 { AspectLabel::Uncertain } else { AspectLabel::Certain });
    if text.chars().any(|c| c.is_ascii_digit()) {
        aspects.set(Aspect::Number, AspectLabel::Certain);
    }
    (clamp_certainty(5.5 - h as f64), aspects)
}

/// Response line (without newline) for one request line. Malformed requests
/// get an error object carrying the request id when one can be read.
pub fn respond(line: &str, hedges: &Lexicon) -> String {
    let parsed: Result<Value, _> = serde_json::from_str(line);
    let id = parsed.as_ref().ok().and_then(|v| v.get("id")).and_then(Value::as_str).map(str::to_string);
    let text = parsed.as_ref().ok().and_then(|v| v.get("text")).and_then(Value::as_str);
    match (&id, text) {
        (Some(id), Some(text)) => {
            let (certainty, aspects) = stub_scores(text, hedges);
            json!({ "id": id, "sentence_certainty": certainty, "aspects": aspects }).to_string()
        }
        _ => json!({ "id": id, "error": "request must be an object with string fields id and text" }).to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::external::parse_response;

    #[test]
    fn responses_validate() {
        let lex = Lexicon::default_hedges();
        let r = parse_response(&respond(r#"{"id":"a","text":"It may rise by 3%."}"#, &lex)).unwrap();
        assert_eq!(r.id, "a");
        assert_eq!(r.sentence_certainty, 4.5);
        assert_eq!(r.aspects.get(Aspect::Probability), AspectLabel::Uncertain);
        assert_eq!(r.aspects.get(Aspect::Number), AspectLabel::Certain);
        let empty = parse_response(&respond(r#"{"id":"e","text":""}"#, &lex)).unwrap();
        assert_eq!(empty.sentence_certainty, 5.5);
    }

    #[test]
    fn malformed_requests_get_error_objects() {
        let lex = Lexicon::default_hedges();
        let v: Value = serde_json::from_str(&respond("{not json", &lex)).unwrap();
        assert!(v["error"].is_string() && v["id"].is_null());
        let v: Value = serde_json::from_str(&respond(r#"{"id":"x"}"#, &lex)).unwrap();
        assert_eq!(v["id"], "x");
    }
}
