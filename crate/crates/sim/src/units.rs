//! Textual values with optional units.

use risfd_core::system::dbm_to_watts;

/// Power in watts from `"20dBm"`, `"100mW"`, `"0.1W"` or a bare number of
/// watts.
pub fn parse_power(text: &str) -> Option<f64> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    let (num, scale): (&str, fn(f64) -> f64) = if let Some(n) = lower.strip_suffix("dbm") {
        (n, dbm_to_watts)
    } else if let Some(n) = lower.strip_suffix("mw") {
        (n, |v| v * 1e-3)
    } else if let Some(n) = lower.strip_suffix('w') {
        (n, |v| v)
    } else {
        (lower.as_str(), |v| v)
    };
    let v: f64 = num.trim().parse().ok()?;
    let w = scale(v);
    w.is_finite().then_some(w)
}

pub fn parse_f64(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_bool(text: &str) -> Option<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Comma-separated list; ranges `a..b` (exclusive) expand for integers.
pub fn parse_seeds(text: &str) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            out.extend(a..b);
        } else {
            out.push(part.parse().ok()?);
        }
    }
    Some(out)
}

pub fn parse_list(text: &str) -> Option<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse_f64)
        .collect()
}
