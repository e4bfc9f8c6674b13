//! CSV tables with a commented metadata preamble.

use std::fmt::Write as _;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    /// Emitted as `# key=value` lines before the header.
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            ..Self::default()
        }
    }

    pub fn meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Probabilities and other reals in fixed scientific notation.
pub fn fmt_prob(p: f64) -> String {
    if p.is_nan() {
        "NaN".to_string()
    } else {
        format!("{p:.6e}")
    }
}

pub fn fmt_db(db: f64) -> String {
    format!("{db:.4}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["w".into(), "wtb".into()]).meta("scenario_hash", "abc");
        t.push(vec!["0".into(), fmt_prob(0.5)]);
        t.push(vec!["1".into(), fmt_prob(f64::NAN)]);
        assert_eq!(t.to_csv(), "# scenario_hash=abc\nw,wtb\n0,5.000000e-1\n1,NaN\n");
        assert_eq!(t.column("wtb"), Some(1));
    }
}
