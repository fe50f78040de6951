//! Canonical JSON: sorted keys, floats with 17 significant digits, fixed
//! layout. Equal values always serialize to equal bytes, so file digests are
//! stable across platforms and runs.
//!
//! Layout: objects are pretty-printed one key per line; an array of scalars
//! stays on one line; an array of containers puts each element on its own
//! line in compact form.

use serde_json::{Map, Number, Value};

/// 17 significant digits with trailing zeros removed; integral values keep
/// a `.0`. Non-finite input is a caller bug (JSON cannot carry it).
pub fn format_f64(x: f64) -> String {
    assert!(x.is_finite(), "non-finite float in canonical output");
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if (-5..17).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            let (int, frac) = if digits.len() > int_len {
                (digits[..int_len].to_string(), &digits[int_len..])
            } else {
                (format!("{digits:0<int_len$}"), "")
            };
            let frac = if frac.is_empty() { "0" } else { frac };
            format!("{sign}{int}.{frac}")
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            format!("{sign}0.{zeros}{digits}")
        }
    } else {
        let (head, tail) = digits.split_at(1);
        let tail = if tail.is_empty() { "0" } else { tail };
        format!("{sign}{head}.{tail}e{exp}")
    }
}

/// JSON number for `x`, or `null` when `x` is not finite.
pub fn num(x: f64) -> Value {
    Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn write_number(n: &Number, out: &mut String) {
    if n.is_f64() {
        out.push_str(&format_f64(n.as_f64().expect("f64")));
    } else {
        out.push_str(&n.to_string());
    }
}

fn write_scalar(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        _ => unreachable!("containers handled by the callers"),
    }
}

fn write_compact(v: &Value, out: &mut String) {
    match v {
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_compact(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_scalar(&Value::String(k.clone()), out);
                out.push(':');
                write_compact(item, out);
            }
            out.push('}');
        }
        scalar => write_scalar(scalar, out),
    }
}

fn indent(out: &mut String, level: usize) {
    out.extend(std::iter::repeat_n(' ', 2 * level));
}

fn write_object(map: &Map<String, Value>, level: usize, out: &mut String) {
    if map.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for (i, (k, v)) in map.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        indent(out, level + 1);
        write_scalar(&Value::String(k.clone()), out);
        out.push_str(": ");
        write_pretty(v, level + 1, out);
    }
    out.push('\n');
    indent(out, level);
    out.push('}');
}

fn write_pretty(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Object(map) => write_object(map, level, out),
        Value::Array(items) if items.iter().any(|x| x.is_array() || x.is_object()) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(",\n");
                }
                indent(out, level + 1);
                write_compact(item, out);
            }
            out.push('\n');
            indent(out, level);
            out.push(']');
        }
        other => write_compact(other, out),
    }
}

/// Canonical text of `v`, newline-terminated.
pub fn to_string(v: &Value) -> String {
    let mut out = String::new();
    write_pretty(v, 0, &mut out);
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn float_formatting() {
        let cases = [
            (1.0, "1.0"),
            (256.0, "256.0"),
            (0.5, "0.5"),
            (0.1, "0.10000000000000001"),
            (-2.25, "-2.25"),
            (1e-7, "9.9999999999999995e-8"),
            (1e20, "1.0e20"),
            (123456789.0, "123456789.0"),
            (0.0001, "0.0001"),
            (-0.0, "-0.0"),
            (3389.5, "3389.5"),
        ];
        for (x, want) in cases {
            assert_eq!(format_f64(x), want, "{x:e}");
        }
    }

    #[test]
    fn layout_is_fixed() {
        let v = json!({
            "z": 1,
            "a": [1.0, 2.5],
            "rows": [{"b": 2.0, "a": "x"}, {"a": "y", "b": null}],
            "nested": {"k": true, "e": {}}
        });
        let want = "{\n  \"a\": [1.0,2.5],\n  \"nested\": {\n    \"e\": {},\n    \"k\": true\n  },\n  \"rows\": [\n    {\"a\":\"x\",\"b\":2.0},\n    {\"a\":\"y\",\"b\":null}\n  ],\n  \"z\": 1\n}\n";
        assert_eq!(to_string(&v), want);
        let back: Value = serde_json::from_str(&to_string(&v)).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(num(f64::NAN), Value::Null);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn floats_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
            let via_json: f64 = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(via_json.to_bits(), x.to_bits());
        }
    }
}
