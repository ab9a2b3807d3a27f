use std::fmt::Display;

/// Ordered `key value` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportDocument {
    entries: Vec<(String, String)>,
}

impl ReportDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push(' ');
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_in_insertion_order() {
        let mut r = ReportDocument::new();
        r.push("b", 1);
        r.push("a", "x y");
        assert_eq!(r.render(), "b 1\na x y\n");
        assert_eq!(r.get("a"), Some("x y"));
    }
}
