use serde_json::Value;

use crate::spec::Format;

pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => format!("{value}\n"),
        Format::Csv => {
            let mut rows = vec![("key".to_string(), "value".to_string())];
            flatten("", value, &mut rows);
            rows.iter().map(|(k, v)| format!("{k},{v}\n")).collect()
        }
    }
}

/// One `path,value` row per leaf, with object keys and array indices
/// joined by dots.
fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |key: &str| if prefix.is_empty() { key.to_string() } else { format!("{prefix}.{key}") };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&join(k), v, rows)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&join(&i.to_string()), v, rows)),
        Value::String(s) => rows.push((prefix.to_string(), quote(s))),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_flattens_nested_values() {
        let v = json!({"exact": "1/25", "estimate": {"mean": 0.04, "seed": {"seed": 7}}, "xs": [1, 2]});
        let csv = render(&v, Format::Csv);
        assert_eq!(csv, "key,value\nestimate.mean,0.04\nestimate.seed.seed,7\nexact,1/25\nxs.0,1\nxs.1,2\n");
        assert_eq!(quote("a,b"), "\"a,b\"");
    }
}
