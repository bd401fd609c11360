use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::AudioSignal;
use crate::error::{Error, Result};

/// On-disk sample encoding for [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Pcm16,
    Float32,
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::Unsupported => Error::UnsupportedFormat("codec not supported".into()),
        other => Error::UnsupportedFormat(other.to_string()),
    }
}

/// Reads a PCM or IEEE-float WAV file, averaging channels down to mono.
/// Integer PCM is scaled by `1 / 2^(bits - 1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Int, bits @ 8..=32) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{fmt:?} with {bits} bits per sample")));
        }
    };
    if interleaved.len() < channels {
        return Err(Error::ZeroLength);
    }
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    AudioSignal::new(mono, spec.sample_rate as f64)
}

/// Writes a mono WAV file. The rate is rounded to the nearest integer Hz, as
/// the RIFF header stores it as an integer.
pub fn write_wav(signal: &AudioSignal, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    if signal.samples().iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("samples to write"));
    }
    let rate = signal.rate().round();
    if !(1.0..=u32::MAX as f64).contains(&rate) {
        return Err(Error::InvalidRate(signal.rate()));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: match depth {
            BitDepth::Pcm16 => 16,
            BitDepth::Float32 => 32,
        },
        sample_format: match depth {
            BitDepth::Pcm16 => SampleFormat::Int,
            BitDepth::Float32 => SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in signal.samples() {
        let r = match depth {
            BitDepth::Pcm16 => writer.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
            BitDepth::Float32 => writer.write_sample(s as f32),
        };
        r.map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw_i16(path: &Path, rate: u32, channels: u16, data: &[i16]) {
        let spec = WavSpec { channels, sample_rate: rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &d in data {
            w.write_sample(d).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn pcm16_scaling_and_header_rate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_raw_i16(&p, 48000, 1, &[16384, -32768, 0]);
        let s = read_wav(&p).unwrap();
        assert_eq!(s.samples(), &[0.5, -1.0, 0.0]);
        assert_eq!(s.rate(), 48000.0);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_raw_i16(&p, 8000, 2, &[16384, 0, -16384, -16384]);
        let s = read_wav(&p).unwrap();
        assert_eq!(s.samples(), &[0.25, -0.5]);
    }

    #[test]
    fn empty_data_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.wav");
        write_raw_i16(&p, 8000, 1, &[]);
        assert!(matches!(read_wav(&p), Err(Error::ZeroLength)));
        assert_eq!(read_wav(&p).unwrap_err().to_string(), "zero-length audio");
    }

    #[test]
    fn missing_file_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_wav(dir.path().join("nope.wav")), Err(Error::Io { .. })));
        let p = dir.path().join("junk.wav");
        std::fs::write(&p, b"definitely not riff data").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<f64> = (0..500).map(|i| ((i as f64 * 0.37).sin() * 0.9) as f32 as f64).collect();
        let sig = AudioSignal::new(samples, 22050.0).unwrap();

        let p = dir.path().join("f.wav");
        write_wav(&sig, &p, BitDepth::Float32).unwrap();
        let back = read_wav(&p).unwrap();
        assert_eq!(back, sig);

        let p = dir.path().join("i.wav");
        write_wav(&sig, &p, BitDepth::Pcm16).unwrap();
        let back = read_wav(&p).unwrap();
        let max = back.samples().iter().zip(sig.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max <= 1.0 / 32768.0, "{max}");
    }

    #[test]
    fn full_scale_positive_clamps_within_bound() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.wav");
        let sig = AudioSignal::new(vec![1.0, -1.0], 8000.0).unwrap();
        write_wav(&sig, &p, BitDepth::Pcm16).unwrap();
        let back = read_wav(&p).unwrap();
        assert!((back.samples()[0] - 1.0).abs() <= 1.0 / 32768.0);
        assert_eq!(back.samples()[1], -1.0);
    }

    #[test]
    fn unwritable_path() {
        let sig = AudioSignal::new(vec![0.0], 8000.0).unwrap();
        let r = write_wav(&sig, "/nonexistent-dir/x/y.wav", BitDepth::Pcm16);
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
