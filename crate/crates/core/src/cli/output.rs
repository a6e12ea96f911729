//! Deterministic CSV and JSON rendering.
//!
//! Every number is rounded to 12 significant digits and printed in its
//! shortest round-trip form, so reruns are byte-identical.

use serde::Serialize;
use serde_json::{Map, Value};

/// Round to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// A number as it appears in CSV and JSON output.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let r = sig12(x);
    if r.fract() == 0.0 && r.abs() < 1e15 {
        return format!("{}", r as i64);
    }
    serde_json::Number::from_f64(r)
        .map(|n| n.to_string())
        .unwrap_or_else(|| "NaN".into())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Serialize and round every float in the tree.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    let mut value = serde_json::to_value(v).expect("plain data serializes");
    round_floats(&mut value);
    value
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            *v = serde_json::Number::from_f64(sig12(x))
                .map(Value::Number)
                .unwrap_or(Value::Null);
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}
