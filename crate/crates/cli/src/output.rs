//! JSON-lines result records with numbers printed to 17 significant digits.

use std::io::{self, Write};

/// Formats `x` like C's `%.17g`, which round-trips every finite double.
pub fn format_number(x: f64) -> String {
    assert!(x.is_finite(), "records hold finite numbers");
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// The value attached to one name in a record's `assignment` object.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub rank: usize,
    pub cost: f64,
    pub probability: Option<f64>,
    pub assignment: Vec<(String, Value)>,
    pub hypotheses: Option<Vec<String>>,
}

impl Record {
    /// One line of JSON with fields in a fixed order and no whitespace.
    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{{\"rank\":{},\"cost\":{}",
            self.rank,
            format_number(self.cost)
        );
        if let Some(p) = self.probability {
            line.push_str(&format!(",\"probability\":{}", format_number(p)));
        }
        let assignment: Vec<String> = self
            .assignment
            .iter()
            .map(|(name, value)| {
                let value = match value {
                    Value::Bool(b) => b.to_string(),
                    Value::Str(s) => quote(s),
                };
                format!("{}:{value}", quote(name))
            })
            .collect();
        line.push_str(&format!(",\"assignment\":{{{}}}", assignment.join(",")));
        if let Some(h) = &self.hypotheses {
            let names: Vec<String> = h.iter().map(|n| quote(n)).collect();
            line.push_str(&format!(",\"hypotheses\":[{}]", names.join(",")));
        }
        line.push('}');
        line
    }

    pub fn write(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "{}", self.to_line())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_match_printf_g17() {
        assert_eq!(format_number(8.0), "8");
        assert_eq!(format_number(-3.0), "-3");
        assert_eq!(format_number(0.294), "0.29399999999999998");
        assert_eq!(format_number(0.1), "0.10000000000000001");
        assert_eq!(format_number(1e-9), "1.0000000000000001e-09");
        assert_eq!(format_number(1e20), "1e+20");
        assert_eq!(format_number(123456.5), "123456.5");
        assert_eq!(format_number(0.0001), "0.0001");
        assert_eq!(format_number(0.0), "0");
    }

    #[test]
    fn formatted_numbers_round_trip() {
        for x in [
            0.294,
            1.0 / 3.0,
            -std::f64::consts::PI,
            6.02e23,
            5e-324,
            f64::MAX,
        ] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn record_layout() {
        let r = Record {
            rank: 1,
            cost: 8.0,
            probability: None,
            assignment: vec![
                ("a\"b".into(), Value::Bool(true)),
                ("c".into(), Value::Str("v".into())),
            ],
            hypotheses: Some(vec!["a\"b".into()]),
        };
        assert_eq!(
            r.to_line(),
            r#"{"rank":1,"cost":8,"assignment":{"a\"b":true,"c":"v"},"hypotheses":["a\"b"]}"#
        );
        let line: serde_json::Value = serde_json::from_str(&r.to_line()).unwrap();
        assert_eq!(line["hypotheses"][0], "a\"b");
    }
}
