use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;

/// Provenance lines written at the top of every output, each prefixed with `# `.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Header {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    /// Header lines without the `# ` prefix.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("emopipe {}", env!("CARGO_PKG_VERSION")),
            format!("command: {}", self.command),
            format!("config_sha256: {}", self.config_hash),
            format!("seed: {}", self.seed),
        ];
        out.extend(self.extra.iter().map(|(k, v)| format!("{k}: {v}")));
        out
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for l in self.lines() {
            writeln!(w, "# {l}")?;
        }
        Ok(())
    }

    /// Creates `path`, writes the header, then lets `body` fill the rest.
    pub fn write_file<F>(&self, path: &Path, body: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
    {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        body(&mut w)?;
        w.flush().with_context(|| format!("cannot write {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

/// File contents with leading `#` lines removed.
pub fn read_body(path: &Path) -> anyhow::Result<String> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut body = String::new();
    let mut in_header = true;
    for line in BufReader::new(file).lines() {
        let line = line.with_context(|| format!("cannot read {}", path.display()))?;
        if in_header && line.starts_with('#') {
            continue;
        }
        in_header = false;
        body.push_str(&line);
        body.push('\n');
    }
    Ok(body)
}
