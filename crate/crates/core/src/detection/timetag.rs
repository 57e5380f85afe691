//! Binary time-tag files.
//!
//! Layout, all little-endian: magic `PHCT`, version u16 = 2, a 32-byte
//! hash (the config hash when written by the CLI), a u8 seed flag and u64
//! seed (zero when the flag is 0), duration_ps u64, event_count u64, then
//! per event a u64 timestamp in ps and a u8 detector id. Events are sorted
//! by timestamp.

use super::events::{PhotonEventStream, StreamMeta};
use std::io::{self, Read, Write};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"PHCT";
pub const VERSION: u16 = 2;
/// Detector ids a file may carry.
pub const MAX_DETECTOR_ID: u8 = 1;
/// Bytes before the first event.
pub const HEADER_LEN: usize = 63;

#[derive(Debug, Error)]
pub enum TimeTagError {
    #[error("not a time-tag file (bad magic)")]
    BadMagic,
    #[error("unsupported time-tag version {0}")]
    UnsupportedVersion(u16),
    #[error("events not sorted at index {index}")]
    Unsorted { index: u64 },
    #[error("duplicate timestamp {timestamp} ps on detector {detector}")]
    DuplicateTimestamp { timestamp: u64, detector: u8 },
    #[error("detector id {0} out of range")]
    BadDetectorId(u8),
    #[error("timestamp {timestamp} ps outside the {duration} ps window")]
    TimestampOutOfRange { timestamp: u64, duration: u64 },
    #[error("file ends early: {0}")]
    Truncated(io::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_timetags<W: Write>(s: &PhotonEventStream, mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&s.meta.params_hash)?;
    w.write_all(&[s.meta.seed.is_some() as u8])?;
    w.write_all(&s.meta.seed.unwrap_or(0).to_le_bytes())?;
    w.write_all(&s.duration.to_le_bytes())?;
    w.write_all(&(s.len() as u64).to_le_bytes())?;
    for (&t, &d) in s.timestamps.iter().zip(&s.detector_ids) {
        w.write_all(&t.to_le_bytes())?;
        w.write_all(&[d])?;
    }
    w.flush()
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], TimeTagError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => TimeTagError::Truncated(e),
        _ => TimeTagError::Io(e),
    })?;
    Ok(buf)
}

pub fn read_timetags<R: Read>(mut r: R) -> Result<PhotonEventStream, TimeTagError> {
    if &read_exact::<_, 4>(&mut r)? != MAGIC {
        return Err(TimeTagError::BadMagic);
    }
    let version = u16::from_le_bytes(read_exact(&mut r)?);
    if version != VERSION {
        return Err(TimeTagError::UnsupportedVersion(version));
    }
    let params_hash = read_exact::<_, 32>(&mut r)?;
    let [has_seed] = read_exact::<_, 1>(&mut r)?;
    let seed = u64::from_le_bytes(read_exact(&mut r)?);
    let seed = (has_seed != 0).then_some(seed);
    let duration = u64::from_le_bytes(read_exact(&mut r)?);
    let count = u64::from_le_bytes(read_exact(&mut r)?);

    let cap = count.min(1 << 24) as usize;
    let mut timestamps = Vec::with_capacity(cap);
    let mut detector_ids = Vec::with_capacity(cap);
    let mut last: [Option<u64>; (MAX_DETECTOR_ID + 1) as usize] = [None; (MAX_DETECTOR_ID + 1) as usize];
    let mut channels = Vec::new();
    for index in 0..count {
        let t = u64::from_le_bytes(read_exact(&mut r)?);
        let [d] = read_exact::<_, 1>(&mut r)?;
        if d > MAX_DETECTOR_ID {
            return Err(TimeTagError::BadDetectorId(d));
        }
        if t >= duration {
            return Err(TimeTagError::TimestampOutOfRange { timestamp: t, duration });
        }
        if timestamps.last().is_some_and(|&prev| t < prev) {
            return Err(TimeTagError::Unsorted { index });
        }
        if last[d as usize] == Some(t) {
            return Err(TimeTagError::DuplicateTimestamp { timestamp: t, detector: d });
        }
        last[d as usize] = Some(t);
        if !channels.contains(&d) {
            channels.push(d);
        }
        timestamps.push(t);
        detector_ids.push(d);
    }
    channels.sort_unstable();
    Ok(PhotonEventStream {
        timestamps,
        detector_ids,
        duration,
        channels,
        meta: StreamMeta { seed, params_hash, attenuation: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PhotonEventStream {
        PhotonEventStream {
            timestamps: vec![5, 5, 17, 1_000_000],
            detector_ids: vec![0, 1, 1, 0],
            duration: 2_000_000,
            channels: vec![0, 1],
            meta: StreamMeta { seed: Some(3), params_hash: [7; 32], attenuation: Some(0.5) },
        }
    }

    fn encode(s: &PhotonEventStream) -> Vec<u8> {
        let mut buf = Vec::new();
        write_timetags(s, &mut buf).unwrap();
        buf
    }

    #[test]
    fn header_layout() {
        let buf = encode(&sample());
        assert_eq!(&buf[..4], b"PHCT");
        assert_eq!(&buf[4..6], &[2, 0]);
        assert_eq!(&buf[6..38], &[7; 32]);
        assert_eq!(buf[38], 1);
        assert_eq!(u64::from_le_bytes(buf[39..47].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[47..55].try_into().unwrap()), 2_000_000);
        assert_eq!(u64::from_le_bytes(buf[55..63].try_into().unwrap()), 4);
        assert_eq!(buf.len(), HEADER_LEN + 4 * 9);
        let back = read_timetags(&buf[..]).unwrap();
        assert_eq!(back.timestamps, sample().timestamps);
        assert_eq!(back.detector_ids, sample().detector_ids);
        assert_eq!(back.meta.params_hash, [7; 32]);
        assert_eq!(back.meta.seed, Some(3));
    }

    #[test]
    fn rejects_malformed_files() {
        let good = encode(&sample());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(read_timetags(&bad[..]), Err(TimeTagError::BadMagic)));

        let mut unsorted = sample();
        unsorted.timestamps.swap(2, 3);
        assert!(matches!(read_timetags(&encode(&unsorted)[..]), Err(TimeTagError::Unsorted { index: 3 })));

        let mut dup = sample();
        dup.detector_ids[1] = 0;
        assert!(matches!(read_timetags(&encode(&dup)[..]), Err(TimeTagError::DuplicateTimestamp { .. })));

        let mut id = sample();
        id.detector_ids[0] = 4;
        assert!(matches!(read_timetags(&encode(&id)[..]), Err(TimeTagError::BadDetectorId(4))));

        let mut late = sample();
        late.duration = 1_000_000;
        assert!(matches!(read_timetags(&encode(&late)[..]), Err(TimeTagError::TimestampOutOfRange { .. })));

        assert!(matches!(read_timetags(&good[..good.len() - 3]), Err(TimeTagError::Truncated(_))));

        let mut version = good;
        version[4] = 1;
        assert!(matches!(read_timetags(&version[..]), Err(TimeTagError::UnsupportedVersion(1))));
    }
}
