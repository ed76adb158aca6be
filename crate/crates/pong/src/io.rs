//! Text files of a presentation stream.
//!
//! * inputs: one line per tick, the spiking input nodes separated by single
//!   spaces; an empty line is a silent tick;
//! * targets: one line per tick, the spiking label node or `-`;
//! * windows: `# learning_time=<tick>`, a `start<TAB>label` header, then one
//!   row per presentation window with its ground-truth label.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::dataset::{AssembledStream, WindowInfo};
use crate::error::{Error, Result};
use crate::world::Label;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamPaths {
    pub inputs: PathBuf,
    pub targets: PathBuf,
    pub windows: PathBuf,
}

impl StreamPaths {
    /// Standard file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        StreamPaths {
            inputs: dir.join("inpstaticperm.txt"),
            targets: dir.join("inpstatictargetperm.txt"),
            windows: dir.join("windows.tsv"),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(io_err(path))?))
}

pub fn write_stream(stream: &AssembledStream, paths: &StreamPaths) -> Result<()> {
    let mut w = create(&paths.inputs)?;
    let mut line = String::new();
    for tick in &stream.inputs {
        line.clear();
        for (i, n) in tick.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&n.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())
            .map_err(io_err(&paths.inputs))?;
    }
    w.flush().map_err(io_err(&paths.inputs))?;

    let mut w = create(&paths.targets)?;
    for t in &stream.targets {
        match t {
            Some(n) => writeln!(w, "{n}"),
            None => writeln!(w, "-"),
        }
        .map_err(io_err(&paths.targets))?;
    }
    w.flush().map_err(io_err(&paths.targets))?;

    let mut w = create(&paths.windows)?;
    let mut text = format!("# learning_time={}\nstart\tlabel\n", stream.learning_time);
    for win in &stream.windows {
        text.push_str(&format!("{}\t{}\n", win.start, win.label.as_str()));
    }
    w.write_all(text.as_bytes())
        .map_err(io_err(&paths.windows))?;
    w.flush().map_err(io_err(&paths.windows))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io_err(path))
}

pub fn read_stream(paths: &StreamPaths) -> Result<AssembledStream> {
    let mut inputs = Vec::new();
    for (i, line) in read_lines(&paths.inputs)?.iter().enumerate() {
        let tick = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u16>()
                    .map_err(|_| parse_err(&paths.inputs, i + 1, format!("bad node index {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        inputs.push(tick);
    }

    let mut targets = Vec::new();
    for (i, line) in read_lines(&paths.targets)?.iter().enumerate() {
        let t = line.trim();
        targets.push(if t == "-" {
            None
        } else {
            Some(t.parse::<u16>().map_err(|_| {
                parse_err(
                    &paths.targets,
                    i + 1,
                    format!("expected a node index or '-', got {t:?}"),
                )
            })?)
        });
    }
    if targets.len() != inputs.len() {
        return Err(parse_err(
            &paths.targets,
            targets.len(),
            format!(
                "{} target lines for {} input lines",
                targets.len(),
                inputs.len()
            ),
        ));
    }

    let lines = read_lines(&paths.windows)?;
    let p = &paths.windows;
    let learning_time = lines
        .first()
        .and_then(|l| l.strip_prefix("# learning_time="))
        .ok_or_else(|| parse_err(p, 1, "expected '# learning_time=<tick>'"))?
        .trim()
        .parse::<usize>()
        .map_err(|_| parse_err(p, 1, "bad learning time"))?;
    if lines.get(1).map(|l| l.trim()) != Some("start\tlabel") {
        return Err(parse_err(p, 2, "expected the 'start<TAB>label' header"));
    }
    let mut windows = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(2) {
        let mut cols = line.split('\t');
        let (Some(start), Some(label), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(p, i + 1, "expected two tab-separated columns"));
        };
        let start = start
            .parse::<usize>()
            .map_err(|_| parse_err(p, i + 1, format!("bad window start {start:?}")))?;
        if start >= inputs.len() {
            return Err(parse_err(
                p,
                i + 1,
                "window starts past the end of the stream",
            ));
        }
        let label = label.parse::<Label>().map_err(|m| parse_err(p, i + 1, m))?;
        windows.push(WindowInfo { start, label });
    }
    Ok(AssembledStream {
        inputs,
        targets,
        windows,
        learning_time,
    })
}
