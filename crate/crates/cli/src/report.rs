//! Report envelope and numeric formatting shared by every command.

use quadcvx::linalg::ToleranceConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Significant digits of every printed number.
pub const SIG_DIGITS: usize = 12;

/// Rounds `v` to `SIG_DIGITS` significant digits; non-finite values pass through.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Text form of `round_sig(v)`.
pub fn fmt_sig(v: f64) -> String {
    format!("{}", round_sig(v))
}

/// Rounds every number in a JSON tree to `SIG_DIGITS` significant digits.
pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes `x` with numbers rounded to `SIG_DIGITS` digits.
pub fn to_rounded_value<T: Serialize>(x: &T) -> Value {
    let mut v = serde_json::to_value(x).unwrap_or(Value::Null);
    round_value(&mut v);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Arguments after the program name.
    pub command: Vec<String>,
    /// SHA-256 of the canonical map JSON, when the command reads a map.
    pub map_fingerprint: Option<String>,
    pub seed: Option<u64>,
    pub tolerances: ToleranceConfig,
    pub status: String,
    pub exit_code: i32,
    pub result: Value,
    pub wall_time_s: f64,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_value(&mut v);
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(-2.0 / 3.0 * 1e-5), "-0.00000666666666667");
        assert_eq!(fmt_sig(0.0), "0");
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn round_value_reaches_nested_numbers() {
        let mut v = json!({"a": [1.0 / 3.0, {"b": 2.0 / 3.0}], "n": 7});
        round_value(&mut v);
        assert_eq!(v, json!({"a": [0.333333333333, {"b": 0.666666666667}], "n": 7}));
    }

    #[test]
    fn report_round_trips() {
        let r = AnalysisReport {
            command: vec!["zmax".into(), "map.json".into()],
            map_fingerprint: Some("ab".into()),
            seed: Some(3),
            tolerances: ToleranceConfig::default(),
            status: "Ok".into(),
            exit_code: 0,
            result: json!({"z_max": 1.0 / 3.0, "c": [0.1, -0.25]}),
            wall_time_s: 0.123456789,
        };
        let text = r.to_json();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_json(), text);
    }

    proptest! {
        #[test]
        fn rounding_is_idempotent(x in -1e12f64..1e12) {
            let r = round_sig(x);
            prop_assert_eq!(round_sig(r), r);
            prop_assert!((r - x).abs() <= 1e-11 * x.abs());
        }
    }
}
