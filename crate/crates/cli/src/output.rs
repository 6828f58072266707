//! Report rendering: key/value text or a single JSON object, plus the
//! CSV writer for boundary sweeps.

use std::path::Path;

use shadowhull::relax::{SupportOutcome, SupportSample};

pub struct Report {
    command: String,
    entries: Vec<(String, serde_json::Value)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: serde_json::Value) {
        self.entries.push((key.to_string(), value));
    }

    pub fn emit(&self, json: bool) {
        if json {
            let mut map = serde_json::Map::new();
            map.insert(
                "command".into(),
                serde_json::Value::String(self.command.clone()),
            );
            for (k, v) in &self.entries {
                // repeated keys (notes, hypotheses) become arrays
                match map.get_mut(k) {
                    Some(serde_json::Value::Array(arr)) => arr.push(v.clone()),
                    Some(existing) => {
                        let prev = existing.take();
                        *existing = serde_json::Value::Array(vec![prev, v.clone()]);
                    }
                    None => {
                        map.insert(k.clone(), v.clone());
                    }
                }
            }
            println!("{}", serde_json::Value::Object(map));
        } else {
            for (k, v) in &self.entries {
                match v {
                    serde_json::Value::String(s) => println!("{k}: {s}"),
                    other => println!("{k}: {other}"),
                }
            }
        }
    }
}

pub fn write_json<T: serde::Serialize>(
    path: &Path,
    value: &T,
) -> Result<(), crate::InputError> {
    let text = serde_json::to_string_pretty(value).map_err(crate::InputError::from)?;
    std::fs::write(path, text).map_err(crate::InputError::from)
}

/// Formats with 12 significant digits, plain decimal where reasonable.
pub fn fmt_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0.000000000000".into();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (11 - mag).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

/// CSV rows `theta,ux,uy,support`, ordered by direction index.
/// Unbounded directions print `inf`; inaccurate ones `nan`.
pub fn render_csv(samples: &[SupportSample]) -> String {
    let mut out = String::from("theta,ux,uy,support\n");
    for s in samples {
        let support = match &s.support {
            SupportOutcome::Value(v) => fmt_sig12(*v),
            SupportOutcome::Unbounded => "inf".into(),
            SupportOutcome::Inaccurate(_) => "nan".into(),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig12(s.theta),
            fmt_sig12(s.ux),
            fmt_sig12(s.uy),
            support
        ));
    }
    out
}
