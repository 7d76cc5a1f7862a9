use std::io::{self, Write};
use std::path::Path;

use emeter_core::numfmt::sig17;
use serde::Serialize;

/// Compact JSON with every float at 17 significant digits.
struct Sig17Formatter;

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

pub fn emit(text: &str, output: Option<&Path>) -> io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_sig17() {
        let s = to_json(&serde_json::json!({"a": 0.5, "b": [1.0, -0.25], "c": null}));
        assert_eq!(
            s,
            "{\"a\":5.0000000000000000e-1,\"b\":[1.0000000000000000e0,-2.5000000000000000e-1],\"c\":null}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"], 0.5);
    }
}
