//! Command output: one `key=value` line per field for people, followed by a
//! single JSON object line for scripts.

use std::fmt::Write as _;

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
enum Field {
    Float(f64),
    Count(u64),
    Flag(bool),
    Text(String),
    Floats(Vec<f64>),
}

impl Field {
    fn human(&self) -> String {
        match self {
            Field::Float(x) => format!("{x:?}"),
            Field::Count(n) => n.to_string(),
            Field::Flag(b) => b.to_string(),
            Field::Text(s) => s.clone(),
            Field::Floats(xs) => xs
                .iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(","),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Float(x) => Value::from(*x),
            Field::Count(n) => Value::from(*n),
            Field::Flag(b) => Value::from(*b),
            Field::Text(s) => Value::from(s.as_str()),
            Field::Floats(xs) => Value::from(xs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    fields: Vec<(String, Field)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut report = Self::default();
        report.text("command", command);
        report
    }

    fn push(&mut self, key: &str, field: Field) {
        self.fields.push((key.to_string(), field));
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.push(key, Field::Float(value));
    }

    pub fn count(&mut self, key: &str, value: usize) {
        self.push(key, Field::Count(value as u64));
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.push(key, Field::Flag(value));
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) {
        self.push(key, Field::Text(value.into()));
    }

    pub fn floats(&mut self, key: &str, values: &[f64]) {
        self.push(key, Field::Floats(values.to_vec()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut record = Map::new();
        for (key, field) in &self.fields {
            let _ = writeln!(out, "{key}={}", field.human());
            record.insert(key.clone(), field.json());
        }
        out.push_str(&Value::Object(record).to_string());
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_table_then_json() {
        let mut r = Report::new("eval");
        r.float("abs_rel", 0.2);
        r.count("pixel_count", 12);
        r.floats("normal", &[0.0, 1.0, 0.0]);
        let text = r.render();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "command=eval");
        assert_eq!(lines[1], "abs_rel=0.2");
        assert_eq!(lines[3], "normal=0.0,1.0,0.0");
        let json: Value = serde_json::from_str(lines[4]).unwrap();
        assert_eq!(json["abs_rel"], 0.2);
        assert_eq!(json["pixel_count"], 12);
    }
}
