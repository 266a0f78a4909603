//! Float formatting and line tokenization shared by all file formats.

use super::IoError;

/// Formats a float with 9 significant digits, the fixed serialization
/// precision of every file format. `-0.0` is normalized to `0.0` so equal
/// values always produce equal bytes.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.8e}", x)
}

/// A whitespace-tokenized line with its 1-based line number, consumed
/// left to right.
pub(crate) struct Record<'a> {
    pub line: usize,
    tokens: std::str::SplitWhitespace<'a>,
}

impl<'a> Record<'a> {
    pub fn new(line: usize, text: &'a str) -> Record<'a> {
        Record {
            line,
            tokens: text.split_whitespace(),
        }
    }

    pub fn tag(&mut self) -> Option<&'a str> {
        self.tokens.next()
    }

    pub fn str(&mut self, what: &str) -> Result<&'a str, IoError> {
        self.tokens
            .next()
            .ok_or_else(|| IoError::parse(self.line, format!("missing field: {what}")))
    }

    pub fn usize(&mut self, what: &str) -> Result<usize, IoError> {
        let tok = self.str(what)?;
        tok.parse()
            .map_err(|_| IoError::parse(self.line, format!("bad integer for {what}: {tok:?}")))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64, IoError> {
        let tok = self.str(what)?;
        tok.parse()
            .map_err(|_| IoError::parse(self.line, format!("bad float for {what}: {tok:?}")))
    }

    pub fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>, IoError> {
        (0..count).map(|_| self.f64(what)).collect()
    }

    pub fn bool01(&mut self, what: &str) -> Result<bool, IoError> {
        match self.str(what)? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(IoError::parse(
                self.line,
                format!("bad flag for {what}: {other:?} (want 0 or 1)"),
            )),
        }
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        match self.tokens.next() {
            None => Ok(()),
            Some(extra) => Err(IoError::parse(
                self.line,
                format!("unexpected trailing token: {extra:?}"),
            )),
        }
    }
}

/// Iterates non-empty, non-comment lines with 1-based numbering.
pub(crate) fn records(text: &str) -> impl Iterator<Item = Record<'_>> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let trimmed = l.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some(Record::new(i + 1, trimmed))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.00000000e-1");
        assert_eq!(fmt_f64(-0.0), "0.00000000e0");
        assert_eq!(fmt_f64(123456.789), "1.23456789e5");
    }

    #[test]
    fn round_trips_within_precision() {
        for &x in &[std::f64::consts::PI, 1e-12, -3.25e9, 0.1] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert!((back - x).abs() <= x.abs() * 5e-9);
        }
    }

    #[test]
    fn quantization_is_idempotent() {
        for &x in &[std::f64::consts::PI, 0.1234567891234, -9.87654321e-7] {
            let once: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(fmt_f64(once), fmt_f64(once.abs() * once.signum()));
            let twice: f64 = fmt_f64(once).parse().unwrap();
            assert_eq!(once, twice);
        }
    }
}
