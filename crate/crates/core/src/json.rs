//! Minimal JSON writer with fixed 17-significant-digit numbers.
//!
//! serde_json prints the shortest round-trip representation; reports need a
//! stable digit count instead.

/// `v` with exactly 17 significant digits; positional notation for decimal
/// exponents in `[-5, 17)`, scientific otherwise. Non-finite values become
/// `null`.
pub fn number(v: f64) -> String {
    if !v.is_finite() {
        return "null".to_string();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp < 0 {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{sign}{digits}{}.0", "0".repeat(point - digits.len()))
        } else {
            format!("{sign}{}.{}", &digits[..point], &digits[point..])
        }
    }
}

pub fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn array<I: IntoIterator<Item = String>>(items: I) -> String {
    format!("[{}]", items.into_iter().collect::<Vec<_>>().join(","))
}

/// Object from already-encoded `(key, value)` pairs, keys in the given order.
pub fn object(fields: &[(&str, String)]) -> String {
    let body: Vec<String> = fields.iter().map(|(k, v)| format!("{}:{}", string(k), v)).collect();
    format!("{{{}}}", body.join(","))
}
