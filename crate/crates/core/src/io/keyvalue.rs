use crate::error::{parse_err, Result};

/// `key=value` lines. Blank lines and `#` comments are skipped; keys and
/// values are trimmed; a later duplicate key overrides an earlier one.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, format!("expected key=value, found {line:?}")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(parse_err(i + 1, "empty key"));
        }
        let v = v.trim().to_string();
        match out.iter_mut().find(|(key, _)| key == k) {
            Some(slot) => slot.1 = v,
            None => out.push((k.to_string(), v)),
        }
    }
    Ok(out)
}
