use std::path::Path;

use crate::audio_io::{read_wav, AudioSignal};
use crate::error::{Error, Result};

/// A clip and the name it is reported under.
pub type NamedSignal = (String, AudioSignal);

/// Every `*.wav` directly inside `dir`, sorted by file name.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<NamedSignal>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput);
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, read_wav(&p)?))
        })
        .collect()
}

/// Truncates both signals to the shorter length when they differ by at
/// most two samples (resampler rounding).
pub fn align_lengths<'a>(a: &'a [f64], b: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
    if a.len().abs_diff(b.len()) > 2 {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len().min(b.len());
    Ok((&a[..n], &b[..n]))
}
