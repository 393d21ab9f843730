use std::io::Write;
use std::path::Path;

use nvspin_core::{MeasuredPeak, TransitionRecord};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::Format;
use crate::Failure;

/// Serialized command output, written in one go.
pub struct Payload(Vec<u8>);

impl Payload {
    pub fn csv<T: Serialize>(rows: &[T]) -> Result<Self, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)
                .map_err(|e| Failure::invalid(format!("csv output: {e}")))?;
        }
        w.into_inner()
            .map(Payload)
            .map_err(|e| Failure::invalid(format!("csv output: {e}")))
    }

    pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<Self, Failure> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Failure::invalid(format!("json output: {e}")))?;
        bytes.push(b'\n');
        Ok(Payload(bytes))
    }

    pub fn rows<T: Serialize>(format: Format, rows: &[T]) -> Result<Self, Failure> {
        match format {
            Format::Csv => Self::csv(rows),
            Format::Json => Self::json(rows),
        }
    }
}

/// Writes to stdout, or to `path` through a sibling temp file and rename.
pub fn emit(path: Option<&Path>, payload: &Payload, flag: &str) -> Result<(), Failure> {
    let fail = |e: &dyn std::fmt::Display| match path {
        Some(p) => Failure::invalid(format!("{flag} {}: {e}", p.display())),
        None => Failure::invalid(format!("stdout: {e}")),
    };
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(&payload.0)
            .and_then(|_| out.flush())
            .map_err(|e| fail(&e));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(&payload.0).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn read_table<T: DeserializeOwned>(path: &Path, flag: &str) -> Result<Vec<T>, Failure> {
    let fail =
        |e: &dyn std::fmt::Display| Failure::invalid(format!("{flag} {}: {e}", path.display()));
    let bytes = std::fs::read(path).map_err(|e| fail(&e))?;
    if path
        .extension()
        .is_some_and(|x| x.eq_ignore_ascii_case("json"))
    {
        return serde_json::from_slice(&bytes).map_err(|e| fail(&e));
    }
    csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| fail(&e))
}

pub fn read_transitions(path: &Path) -> Result<Vec<TransitionRecord>, Failure> {
    read_table(path, "--transitions")
}

pub fn read_peaks(path: &Path) -> Result<Vec<MeasuredPeak>, Failure> {
    read_table(path, "--peaks")
}
