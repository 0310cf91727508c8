//! JSON and CSV emission with every float written to 17 significant digits.

use std::fmt::Write as _;

/// A value in an output record.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    UInt(u64),
    Bool(bool),
    Str(String),
    Null,
    List(Vec<Field>),
    Object(Record),
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Num(v)
    }
}

impl From<i64> for Field {
    fn from(v: i64) -> Self {
        Field::Int(v)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::UInt(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::UInt(v as u64)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Str(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Str(v)
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field::List(v.into_iter().map(Field::Num).collect())
    }
}

impl<T: Into<Field>> From<Option<T>> for Field {
    fn from(v: Option<T>) -> Self {
        v.map_or(Field::Null, Into::into)
    }
}

impl From<Record> for Field {
    fn from(v: Record) -> Self {
        Field::Object(v)
    }
}

/// Ordered key-value record, serialized as a JSON object.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record(pub Vec<(String, Field)>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Field>) -> Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Field> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write_object(&mut out, self);
        out
    }

    /// Header line plus one value line.
    pub fn to_csv(&self) -> String {
        let header: Vec<&str> = self.0.iter().map(|(k, _)| k.as_str()).collect();
        let values: Vec<String> = self.0.iter().map(|(_, v)| csv_cell(v)).collect();
        format!("{}\n{}\n", header.join(","), values.join(","))
    }
}

/// Column-named rows, serialized as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `%.17g`: 17 significant digits, trailing zeros removed. Round-trips
/// every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_cell(v: &Field) -> String {
    match v {
        Field::Num(x) => fmt_f64(*x),
        Field::Int(i) => i.to_string(),
        Field::UInt(u) => u.to_string(),
        Field::Bool(b) => b.to_string(),
        Field::Str(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Field::Str(s) => s.clone(),
        Field::Null => String::new(),
        Field::List(items) => {
            let inner: Vec<String> = items.iter().map(csv_cell).collect();
            format!("\"{}\"", inner.join(";"))
        }
        Field::Object(r) => format!("\"{}\"", r.to_json().replace('"', "\"\"")),
    }
}

fn write_object(out: &mut String, r: &Record) {
    out.push('{');
    for (i, (k, v)) in r.0.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&serde_json::to_string(k).expect("string keys serialize"));
        out.push_str(": ");
        write_field(out, v);
    }
    out.push('}');
}

fn write_field(out: &mut String, v: &Field) {
    match v {
        Field::Num(x) if x.is_finite() => out.push_str(&fmt_f64(*x)),
        Field::Num(_) | Field::Null => out.push_str("null"),
        Field::Int(i) => write!(out, "{i}").unwrap(),
        Field::UInt(u) => write!(out, "{u}").unwrap(),
        Field::Bool(b) => write!(out, "{b}").unwrap(),
        Field::Str(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Field::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_field(out, item);
            }
            out.push(']');
        }
        Field::Object(r) => write_object(out, r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 0.7285714285714286, 1e-7, 123456789.125, 2.5e20, -0.72258, 5e-324] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_f64(2.4), "2.3999999999999999");
    }

    #[test]
    fn json_is_valid() {
        let r = Record::new()
            .with("delta", 2.4)
            .with("name", "a \"b\"")
            .with("n", 3u64)
            .with("bad", f64::NAN)
            .with("list", vec![0.5, 1.0])
            .with("nested", Record::new().with("ok", true));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["delta"].as_f64(), Some(2.4));
        assert_eq!(v["name"], "a \"b\"");
        assert!(v["bad"].is_null());
        assert_eq!(v["list"][1].as_f64(), Some(1.0));
        assert_eq!(v["nested"]["ok"], true);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["k", "pi_hat"]);
        t.push(vec![0u64.into(), 0.25.into()]);
        t.push(vec![1u64.into(), 0.75.into()]);
        assert_eq!(t.to_csv(), "k,pi_hat\n0,0.25\n1,0.75\n");
        let r = Record::new().with("a", 1i64).with("b", "x,y");
        assert_eq!(r.to_csv(), "a,b\n1,\"x,y\"\n");
    }
}
