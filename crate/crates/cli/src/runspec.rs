//! The resolved command line echoed before any other output.

use std::fmt;

/// A command line with every default filled in. Rendering it and running
/// the result repeats the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    parts: Vec<String>,
}

fn quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./:=,+".contains(c)) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

impl RunSpec {
    pub fn new(seed: u64, command: &[&str]) -> Self {
        let mut parts = vec!["graphpool".to_string(), "--seed".to_string(), seed.to_string()];
        parts.extend(command.iter().map(|c| c.to_string()));
        Self { parts }
    }

    pub fn flag(&mut self, name: &str, value: impl fmt::Display) -> &mut Self {
        self.parts.push(format!("--{name}"));
        self.parts.push(value.to_string());
        self
    }

    pub fn flag_opt(&mut self, name: &str, value: Option<impl fmt::Display>) -> &mut Self {
        if let Some(v) = value {
            self.flag(name, v);
        }
        self
    }

    pub fn positional(&mut self, value: impl fmt::Display) -> &mut Self {
        self.parts.push(value.to_string());
        self
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| quote(p)).collect();
        write!(f, "# runspec: {}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_and_quotes() {
        let mut s = RunSpec::new(7, &["eval", "spectral"]);
        s.flag("graph", "grid2d")
            .flag("op-arg", "topk:ratio=0.25")
            .flag_opt("out", None::<&str>)
            .positional("my file.g");
        assert_eq!(
            s.to_string(),
            "# runspec: graphpool --seed 7 eval spectral --graph grid2d --op-arg topk:ratio=0.25 'my file.g'"
        );
    }
}
