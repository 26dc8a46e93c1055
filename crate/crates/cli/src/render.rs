use serde_json::Value;

use npir_core::SessionReport;

use crate::Format;

pub struct Output {
    format: Format,
    quiet: bool,
}

impl Output {
    pub fn new(format: Format, quiet: bool) -> Self {
        Self { format, quiet }
    }

    pub fn format(&self) -> Format {
        self.format
    }

    /// Appends a line that `--quiet` suppresses.
    pub fn detail(&self, buffer: &mut String, line: &str) {
        if !self.quiet {
            buffer.push_str(line);
        }
    }

    pub fn emit(&self, table: &str, json: &Value, csv: &str) {
        match self.format {
            Format::Table => print!("{table}"),
            Format::Json => println!("{}", serde_json::to_string_pretty(json).expect("serializable")),
            Format::Csv => print!("{csv}"),
        }
    }

    /// Flat record: `key: value` lines, one JSON object, or a CSV row.
    pub fn emit_record(&self, value: &Value) {
        let table = if self.quiet {
            // success fraction is the headline of a simulation
            format!("{}\n", value["success_rate"])
        } else {
            record_table(value)
        };
        self.emit(&table, value, &record_csv(value));
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

pub fn record_table(value: &Value) -> String {
    let Some(map) = value.as_object() else {
        return format!("{value}\n");
    };
    let width = map.keys().map(String::len).max().unwrap_or(0);
    map.iter().map(|(k, v)| format!("{k:<width$}  {}\n", cell(v))).collect()
}

fn record_csv(value: &Value) -> String {
    let Some(map) = value.as_object() else {
        return format!("{value}\n");
    };
    let keys: Vec<&str> = map.keys().map(String::as_str).collect();
    let cells: Vec<String> = map.values().map(cell).collect();
    format!("{}\n{}\n", keys.join(","), cells.join(","))
}

pub fn report_value(report: &SessionReport) -> Value {
    let mut v = serde_json::to_value(report).expect("serializable");
    v["success_rate"] = serde_json::json!(report.success_rate());
    v
}

pub fn bits(b: &[u8]) -> String {
    b.iter().map(|&x| if x == 1 { '1' } else { '0' }).collect()
}
