//! File helpers shared by the commands.

use std::path::Path;

use crate::error::{HarnessError, HarnessResult};

pub fn read_text(path: &Path) -> HarnessResult<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::InvalidData {
            HarnessError::Usage(format!("{} is not valid UTF-8", path.display()))
        } else {
            HarnessError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        }
    })
}

/// Round-trip float formatting (17 significant digits).
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV writer into memory; LF line endings, every field quoted only if needed.
pub fn csv_buffer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn finish_csv(w: csv::Writer<Vec<u8>>, path: &Path) -> HarnessResult<()> {
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Io(std::io::Error::other(e.to_string())))?;
    std::fs::write(path, bytes)
        .map_err(|e| HarnessError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Whitespace-separated values of type `T`.
pub fn parse_whitespace<T: std::str::FromStr>(text: &str, what: &str) -> HarnessResult<Vec<T>> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            tok.parse::<T>()
                .map_err(|_| HarnessError::Usage(format!("{what} {i} ('{tok}') does not parse")))
        })
        .collect()
}
