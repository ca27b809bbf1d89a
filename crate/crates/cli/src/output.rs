//! Output directories, number formatting and run manifests.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    /// Six significant digits.
    #[value(name = "6")]
    Six,
    /// Shortest representation that round-trips.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

/// Flags shared by every command that writes files.
#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Root output directory; files go to <OUT>/<command>/<label>/.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Run label; defaults to a digest of the command, config and inputs.
    #[arg(long)]
    pub label: Option<String>,
    /// Replace an existing run directory.
    #[arg(long)]
    pub force: bool,
    /// Numeric precision of written values.
    #[arg(long, value_enum, default_value = "6")]
    pub precision: Precision,
    /// Output table format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

impl OutputArgs {
    pub fn formatter(&self) -> impl Fn(f64) -> String + Copy {
        let p = self.precision;
        move |x| fmt_num(x, p)
    }
}

pub fn fmt_num(x: f64, precision: Precision) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let v = match precision {
        Precision::Full => x,
        // Round through scientific notation, then print the shortest form.
        Precision::Six => format!("{x:.5e}").parse::<f64>().unwrap_or(x),
    };
    if v == 0.0 {
        "0".into()
    } else {
        v.to_string()
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct OutputDigest {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: &'a [String],
    config: &'a Value,
    inputs: &'a [InputDigest],
    seed: Option<u64>,
    warnings: &'a [String],
    outputs: Vec<OutputDigest>,
}

/// One command run: collects inputs and warnings, owns the output directory,
/// and writes `manifest.json` last.
pub struct Run {
    command: String,
    argv: Vec<String>,
    config: Value,
    inputs: Vec<InputDigest>,
    seed: Option<u64>,
    warnings: Vec<String>,
    outputs: Vec<String>,
    dir: Option<PathBuf>,
}

impl Run {
    pub fn new(command: &str, argv: &[String], config: Value) -> Run {
        Run {
            command: command.to_string(),
            argv: argv.to_vec(),
            config,
            inputs: Vec::new(),
            seed: None,
            warnings: Vec::new(),
            outputs: Vec::new(),
            dir: None,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Records a warning and echoes it to stderr as a JSON line.
    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        eprintln!("{}", serde_json::json!({ "warning": message }));
        self.warnings.push(message);
    }

    fn default_label(&self) -> String {
        let key = serde_json::json!({
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs.iter().map(|i| &i.sha256).collect::<Vec<_>>(),
            "seed": self.seed,
        });
        hex(&Sha256::digest(key.to_string().as_bytes()))[..12].to_string()
    }

    /// Creates `<out>/<command>/<label>/`. An existing directory is an error
    /// unless `--force` is given, in which case it is emptied first.
    pub fn open_dir(&mut self, out: &OutputArgs) -> Result<PathBuf> {
        let label = out.label.clone().unwrap_or_else(|| self.default_label());
        if label.is_empty() || label.contains(['/', '\\']) || label == "." || label == ".." {
            bail!("invalid label `{label}`");
        }
        let dir = out.out.join(&self.command).join(label);
        if dir.exists() {
            if !out.force {
                bail!("output directory {} exists; pass --force to overwrite", dir.display());
            }
            fs::remove_dir_all(&dir).with_context(|| format!("cannot clear {}", dir.display()))?;
        }
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        self.dir = Some(dir.clone());
        Ok(dir)
    }

    pub fn path(&mut self, file: &str) -> PathBuf {
        self.outputs.push(file.to_string());
        self.dir.as_ref().expect("output directory opened").join(file)
    }

    pub fn finish(self) -> Result<PathBuf> {
        let dir = self.dir.clone().expect("output directory opened");
        let outputs = self
            .outputs
            .iter()
            .map(|f| {
                Ok(OutputDigest {
                    file: f.clone(),
                    sha256: sha256_file(&dir.join(f))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            tool: "epec",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            argv: &self.argv,
            config: &self.config,
            inputs: &self.inputs,
            seed: self.seed,
            warnings: &self.warnings,
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(dir)
    }
}
