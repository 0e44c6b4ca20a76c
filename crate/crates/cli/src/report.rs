//! Human-readable `report.txt`: PASS/FAIL/INFO lines followed by the config echo.

use crate::config::ScenarioConfig;

/// Marker line separating the check lines from the TOML config echo.
pub const CONFIG_MARKER: &str = "---- config ----";

#[derive(Debug, Clone, Default)]
pub struct Report {
    lines: Vec<String>,
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl Report {
    pub fn pass(&mut self, name: &str, detail: impl AsRef<str>) {
        self.lines.push(format!("PASS {name}: {}", detail.as_ref()));
    }

    pub fn fail(&mut self, name: &str, detail: impl AsRef<str>) {
        self.lines.push(format!("FAIL {name}: {}", detail.as_ref()));
    }

    pub fn check(&mut self, ok: bool, name: &str, detail: impl AsRef<str>) -> bool {
        if ok {
            self.pass(name, detail);
        } else {
            self.fail(name, detail);
        }
        ok
    }

    pub fn info(&mut self, name: &str, detail: impl AsRef<str>) {
        self.lines.push(format!("INFO {name}: {}", detail.as_ref()));
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn render(&self, command: &str, cfg: &ScenarioConfig) -> String {
        let mut out = format!("respo {command}\n\n");
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push('\n');
        out.push_str(CONFIG_MARKER);
        out.push('\n');
        out.push_str(&cfg.to_toml());
        out
    }
}

/// The configuration echoed at the end of a rendered report.
pub fn config_echo(report: &str) -> Option<&str> {
    report.split_once(&format!("{CONFIG_MARKER}\n")).map(|(_, cfg)| cfg)
}
