use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::{AudioClip, DEFAULT_SAMPLE_RATE};

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::Parse(format!("truncated WAV data: {e}"))
        }
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::FormatError(msg) => Error::Parse(format!("malformed WAV: {msg}")),
        hound::Error::TooWide => Error::Format {
            field: "bits_per_sample",
            detail: "sample wider than the container".into(),
        },
        hound::Error::UnfinishedSample => Error::Parse("truncated WAV data: partial sample".into()),
        hound::Error::Unsupported => Error::Format {
            field: "format",
            detail: "unsupported WAV encoding".into(),
        },
        hound::Error::InvalidSampleFormat => Error::Format {
            field: "sample_format",
            detail: "invalid sample format".into(),
        },
    }
}

/// Reads 16-bit mono PCM at `sample_rate`. Anything else is a
/// [`Error::Format`] naming the offending field.
pub fn read_wav_expecting<R: Read + Seek>(reader: R, sample_rate: u32) -> Result<AudioClip> {
    let mut r = WavReader::new(reader).map_err(map_hound)?;
    let spec = r.spec();
    if spec.sample_format != SampleFormat::Int {
        return Err(Error::Format {
            field: "sample_format",
            detail: "expected integer PCM".into(),
        });
    }
    if spec.bits_per_sample != 16 {
        return Err(Error::Format {
            field: "bits_per_sample",
            detail: format!("expected 16, got {}", spec.bits_per_sample),
        });
    }
    if spec.channels != 1 {
        return Err(Error::Format {
            field: "channels",
            detail: format!("expected mono, got {}", spec.channels),
        });
    }
    if spec.sample_rate != sample_rate {
        return Err(Error::Format {
            field: "sample_rate",
            detail: format!("expected {sample_rate} Hz, got {}", spec.sample_rate),
        });
    }
    let samples = r
        .samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| match e {
            // hound reports a short data chunk as a plain read failure
            hound::Error::IoError(e) => Error::Parse(format!("truncated WAV data: {e}")),
            e => map_hound(e),
        })?;
    Ok(AudioClip::new(samples, sample_rate))
}

pub fn load_wav_expecting(path: impl AsRef<Path>, sample_rate: u32) -> Result<AudioClip> {
    let f = std::fs::File::open(path)?;
    read_wav_expecting(std::io::BufReader::new(f), sample_rate)
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    load_wav_expecting(path, DEFAULT_SAMPLE_RATE)
}

pub fn write_wav_to<W: Write + Seek>(clip: &AudioClip, w: W) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut wr = WavWriter::new(w, spec).map_err(map_hound)?;
    for &s in &clip.samples {
        wr.write_sample(s).map_err(map_hound)?;
    }
    wr.finalize().map_err(map_hound)
}

pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_wav_to(clip, std::io::BufWriter::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn encode(clip: &AudioClip) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        write_wav_to(clip, &mut buf).unwrap();
        buf.into_inner()
    }

    fn encode_spec(spec: WavSpec, n: usize) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        let mut w = WavWriter::new(&mut buf, spec).unwrap();
        for i in 0..n * spec.channels as usize {
            if spec.bits_per_sample == 8 {
                w.write_sample(i as i8).unwrap();
            } else {
                w.write_sample(i as i16).unwrap();
            }
        }
        w.finalize().unwrap();
        buf.into_inner()
    }

    fn mono16(rate: u32) -> WavSpec {
        WavSpec {
            channels: 1,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        }
    }

    #[test]
    fn round_trip() {
        let clip = AudioClip::new(vec![0, 1, -1, i16::MAX, i16::MIN, 1234], 16_000);
        let back = read_wav_expecting(Cursor::new(encode(&clip)), 16_000).unwrap();
        assert_eq!(back.samples, clip.samples);
        assert_eq!(back.sample_rate, 16_000);
    }

    #[test]
    fn wrong_rate_is_a_format_error() {
        let bytes = encode_spec(mono16(44_100), 10);
        match read_wav_expecting(Cursor::new(bytes), 16_000) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "sample_rate"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stereo_and_8_bit_are_rejected() {
        let stereo = WavSpec { channels: 2, ..mono16(16_000) };
        match read_wav_expecting(Cursor::new(encode_spec(stereo, 10)), 16_000) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "channels"),
            other => panic!("{other:?}"),
        }
        let narrow = WavSpec { bits_per_sample: 8, ..mono16(16_000) };
        match read_wav_expecting(Cursor::new(encode_spec(narrow, 10)), 16_000) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "bits_per_sample"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_data_is_a_parse_error() {
        let clip = AudioClip::new(vec![7; 100], 16_000);
        let mut bytes = encode(&clip);
        bytes.truncate(bytes.len() - 51);
        let r = read_wav_expecting(Cursor::new(bytes), 16_000);
        assert!(matches!(r, Err(Error::Parse(_))), "{r:?}");
    }

    #[test]
    fn garbage_is_a_parse_error() {
        let r = read_wav_expecting(Cursor::new(b"RIFX not a wave file".to_vec()), 16_000);
        assert!(matches!(r, Err(Error::Parse(_))), "{r:?}");
    }
}
