use std::fmt::Write as _;
use std::path::Path;

use crate::audio_io::AudioSignal;
use crate::error::{Error, Result};

use super::metrics::{log_power_spectrogram, LsdConfig};

/// Dynamic range mapped onto the image's gray levels, in nats of power
/// (80 dB).
const IMAGE_RANGE: f64 = 8.0 * std::f64::consts::LN_10;

/// Writes the log-power spectrogram as a grayscale PNG (time left to right,
/// low frequencies at the bottom, top 80 dB) or as CSV (one row per frame,
/// header of bin frequencies in Hz), chosen by the file extension.
pub fn spectrogram_dump(signal: &AudioSignal, config: &LsdConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = log_power_spectrogram(signal.samples(), config)?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("csv") => {
            let bins = spec[0].len();
            let mut s = String::from("frame");
            for k in 0..bins {
                let _ = write!(s, ",{}", k as f64 * signal.rate() / config.fft_size as f64);
            }
            s.push('\n');
            for (f, row) in spec.iter().enumerate() {
                let _ = write!(s, "{f}");
                for v in row {
                    let _ = write!(s, ",{v:.6}");
                }
                s.push('\n');
            }
            std::fs::write(path, s).map_err(|e| Error::io(path, e))
        }
        Some("png") => {
            let (w, h) = (spec.len() as u32, spec[0].len() as u32);
            let max = spec.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
            let img = image::GrayImage::from_fn(w, h, |x, y| {
                let v = spec[x as usize][(h - 1 - y) as usize];
                let level = ((v - (max - IMAGE_RANGE)) / IMAGE_RANGE).clamp(0.0, 1.0);
                image::Luma([(level * 255.0).round() as u8])
            });
            img.save(path).map_err(|e| Error::io(path, std::io::Error::other(e)))
        }
        _ => Err(Error::UnsupportedFormat(format!("{}: expected .png or .csv", path.display()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone() -> AudioSignal {
        AudioSignal::new((0..8000).map(|i| (i as f64 * 0.3).sin()).collect(), 16000.0).unwrap()
    }

    #[test]
    fn csv_dump_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        spectrogram_dump(&tone(), &LsdConfig::default(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 1 + (8000 - 2048) / 512);
        assert_eq!(lines[0].split(',').count(), 1 + 1025);
        assert!(lines[0].starts_with("frame,0,7.8125,"));
    }

    #[test]
    fn png_dump_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.png");
        spectrogram_dump(&tone(), &LsdConfig::default(), &p).unwrap();
        let img = image::open(&p).unwrap();
        assert_eq!((img.width(), img.height()), (12, 1025));
    }

    #[test]
    fn unknown_extension() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            spectrogram_dump(&tone(), &LsdConfig::default(), dir.path().join("s.bmp")),
            Err(Error::UnsupportedFormat(_))
        ));
    }
}
