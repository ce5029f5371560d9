//! CSV and JSON artifacts with atomic writes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;

/// Locale-independent float with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.16e}", x + 0.0)
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    num(x.unwrap_or(f64::NAN))
}

pub struct Csv {
    text: String,
}

impl Csv {
    /// Starts a CSV with the digest comment line and the header.
    pub fn new(digest: &str, header: &str) -> Self {
        Csv { text: format!("# config_digest={digest}\n{header}\n") }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Collects the artifacts of one subcommand run.
pub struct Run {
    pub command: &'static str,
    pub out_dir: PathBuf,
    started: chrono::DateTime<chrono::Utc>,
    clock: Instant,
    artifacts: Vec<String>,
}

impl Run {
    pub fn new(command: &'static str, out_dir: PathBuf) -> Self {
        Run {
            command,
            out_dir,
            started: chrono::Utc::now(),
            clock: Instant::now(),
            artifacts: Vec::new(),
        }
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.out_dir.join(format!("{}{suffix}", self.command.replace('-', "_")))
    }

    pub fn write(&mut self, suffix: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(suffix);
        write_atomic(&path, contents)?;
        self.artifacts.push(path.display().to_string());
        Ok(path)
    }

    pub fn write_csv(&mut self, csv: Csv) -> Result<PathBuf, CliError> {
        self.write(".csv", &csv.into_string())
    }

    /// Writes `<command>.json` with the run summary and returns its path.
    pub fn finish(mut self, config: &Config, status: &str, result: Value) -> Result<PathBuf, CliError> {
        let path = self.path(".json");
        self.artifacts.push(path.display().to_string());
        let summary = json!({
            "command": self.command,
            "config": config.values(),
            "config_digest": config.digest(),
            "version": intertwined::VERSION,
            "started": self.started.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            "elapsed_s": self.clock.elapsed().as_secs_f64(),
            "status": status,
            "artifacts": self.artifacts,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&summary).expect("summary is serializable");
        let _ = writeln!(text);
        write_atomic(&path, &text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.1), "-1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(opt_num(None), "nan");
        assert_eq!(num(-0.0), "0.0000000000000000e0");
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new("abc", "a,b");
        csv.row(["1", "2"]);
        assert_eq!(csv.into_string(), "# config_digest=abc\na,b\n1,2\n");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
