use super::DetectionError;
use crate::dynamics::EnvelopeTrajectory;
use crate::params::{per_phonon_count_rate, pump_count_rate, DetectionParams, Side, SystemParams};
use crate::provenance::Hash;
use crate::rng::{stream, Purpose};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

/// Picoseconds per second.
pub const PS_PER_S: f64 = 1e12;

pub fn seconds_to_ps(t: f64) -> u64 {
    (t * PS_PER_S).round() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamMeta {
    pub seed: Option<u64>,
    #[serde(with = "hex_hash")]
    pub params_hash: Hash,
    pub attenuation: Option<f64>,
}

mod hex_hash {
    pub fn serialize<S: serde::Serializer>(h: &crate::provenance::Hash, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(h))
    }
}

/// Time-ordered clicks with integer picosecond timestamps.
///
/// `channels` lists the detectors the stream covers, including those
/// that recorded no event.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonEventStream {
    pub timestamps: Vec<u64>,
    pub detector_ids: Vec<u8>,
    pub duration: u64,
    pub channels: Vec<u8>,
    pub meta: StreamMeta,
}

impl PhotonEventStream {
    pub fn empty(duration: u64, channel: u8, meta: StreamMeta) -> Self {
        PhotonEventStream { timestamps: Vec::new(), detector_ids: Vec::new(), duration, channels: vec![channel], meta }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.duration as f64 / PS_PER_S
    }

    /// Timestamps recorded by one detector.
    pub fn channel(&self, id: u8) -> Vec<u64> {
        self.timestamps
            .iter()
            .zip(&self.detector_ids)
            .filter(|(_, &d)| d == id)
            .map(|(&t, _)| t)
            .collect()
    }

    /// Mean click rate of one detector (counts/s).
    pub fn rate(&self, id: u8) -> f64 {
        let n = self.detector_ids.iter().filter(|&&d| d == id).count();
        n as f64 / self.duration_s()
    }

    /// Smallest gap between consecutive clicks on the same detector.
    pub fn min_same_detector_gap(&self) -> Option<u64> {
        self.channels
            .iter()
            .filter_map(|&c| self.channel(c).windows(2).map(|w| w[1] - w[0]).min())
            .min()
    }

    /// Sorted by time, strictly increasing per detector, all inside the
    /// window and on a listed channel.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.timestamps.len() != self.detector_ids.len() {
            return Err("timestamp and detector id counts differ".into());
        }
        let mut last: [Option<u64>; 256] = [None; 256];
        let mut prev = 0;
        for (&t, &d) in self.timestamps.iter().zip(&self.detector_ids) {
            if t < prev {
                return Err(format!("timestamps not sorted at {t} ps"));
            }
            if t >= self.duration {
                return Err(format!("timestamp {t} ps outside window of {} ps", self.duration));
            }
            if !self.channels.contains(&d) {
                return Err(format!("detector id {d} not among channels {:?}", self.channels));
            }
            if last[d as usize] == Some(t) {
                return Err(format!("duplicate timestamp {t} ps on detector {d}"));
            }
            last[d as usize] = Some(t);
            prev = t;
        }
        Ok(())
    }

    /// Time-ordered union of two streams over the same window. Ties keep
    /// `self` first.
    pub fn merge(&self, other: &PhotonEventStream) -> PhotonEventStream {
        let (a, b) = (self, other);
        let mut timestamps = Vec::with_capacity(a.len() + b.len());
        let mut detector_ids = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a.timestamps[i] <= b.timestamps[j]);
            if take_a {
                timestamps.push(a.timestamps[i]);
                detector_ids.push(a.detector_ids[i]);
                i += 1;
            } else {
                timestamps.push(b.timestamps[j]);
                detector_ids.push(b.detector_ids[j]);
                j += 1;
            }
        }
        let mut channels = a.channels.clone();
        for c in &b.channels {
            if !channels.contains(c) {
                channels.push(*c);
            }
        }
        channels.sort_unstable();
        PhotonEventStream {
            timestamps,
            detector_ids,
            duration: a.duration.max(b.duration),
            channels,
            meta: a.meta.clone(),
        }
    }
}

/// Homogeneous Poisson clicks on one detector over [0, duration_ps).
pub fn poisson_stream(rate: f64, duration_ps: u64, channel: u8, rng: &mut ChaCha8Rng, meta: StreamMeta) -> PhotonEventStream {
    let mut out = PhotonEventStream::empty(duration_ps, channel, meta);
    if rate <= 0.0 {
        return out;
    }
    let horizon = duration_ps as f64 / PS_PER_S;
    let mut t = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap / rate;
        if t >= horizon {
            break;
        }
        push_unique(&mut out, seconds_to_ps(t).min(duration_ps - 1), channel);
    }
    out
}

fn push_unique(s: &mut PhotonEventStream, t: u64, id: u8) {
    // events landing on the same picosecond tick of one detector merge
    if s.timestamps.last() == Some(&t) && s.detector_ids.last() == Some(&id) {
        return;
    }
    s.timestamps.push(t);
    s.detector_ids.push(id);
}

/// Rates feeding the event generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRates {
    /// Counts/s per phonon, Γ_SB,0.
    pub per_phonon: f64,
    /// Pump bleed-through counts/s.
    pub pump: f64,
    /// Blue-side scattering goes as n + 1.
    pub blue: bool,
}

impl EventRates {
    pub fn new(p: &SystemParams, d: &DetectionParams, side: Side, n_c: f64) -> Result<Self, DetectionError> {
        d.validate()?;
        Ok(EventRates {
            per_phonon: per_phonon_count_rate(p, d, n_c)?,
            pump: pump_count_rate(p, d, n_c),
            blue: side == Side::Blue,
        })
    }

    /// Instantaneous sideband rate at occupancy n.
    pub fn sideband(&self, n: f64) -> f64 {
        self.per_phonon * if self.blue { n + 1.0 } else { n }
    }
}

/// Sideband, pump and (no) dark clicks on detector 0, with an optional cap
/// on the instantaneous sideband rate.
pub fn generate_events_capped(
    traj: &EnvelopeTrajectory,
    rates: &EventRates,
    seed: u64,
    ceiling: Option<f64>,
) -> Result<PhotonEventStream, DetectionError> {
    let duration_ps = seconds_to_ps(traj.duration());
    let meta = StreamMeta { seed: Some(seed), params_hash: traj.params_hash, attenuation: None };
    if traj.is_empty() {
        return Ok(PhotonEventStream::empty(duration_ps, 0, meta));
    }

    let n: Vec<f64> = traj.occupancy().collect();
    let peak = rates.sideband(n.iter().cloned().fold(0.0, f64::max));
    if let Some(cap) = ceiling {
        if peak > cap {
            return Err(DetectionError::RateCeilingExceeded { peak, ceiling: cap });
        }
    }

    let mut sideband = PhotonEventStream::empty(duration_ps, 0, meta.clone());
    if peak > 0.0 {
        let mut rng = stream(seed, Purpose::Events, 0);
        let horizon = traj.duration();
        let last = n.len() - 1;
        let mut t = 0.0;
        loop {
            let gap: f64 = rng.sample(Exp1);
            t += gap / peak;
            if t >= horizon {
                break;
            }
            let x = t / traj.dt;
            let k = (x as usize).min(last);
            let occ = if k < last {
                let f = x - k as f64;
                n[k] + f * (n[k + 1] - n[k])
            } else {
                n[last]
            };
            let u: f64 = rng.random();
            if u * peak < rates.sideband(occ) {
                push_unique(&mut sideband, seconds_to_ps(t).min(duration_ps - 1), 0);
            }
        }
    }

    let mut pump_rng = stream(seed, Purpose::Pump, 0);
    let pump = poisson_stream(rates.pump, duration_ps, 0, &mut pump_rng, meta);
    Ok(dedup(sideband.merge(&pump)))
}

/// Inhomogeneous Poisson clicks from n(t) by thinning, plus pump
/// bleed-through. Dark counts are added per detector by [`apply_detector`].
pub fn generate_sideband_events(
    traj: &EnvelopeTrajectory,
    p: &SystemParams,
    d: &DetectionParams,
    side: Side,
    n_c: f64,
    seed: u64,
) -> Result<PhotonEventStream, DetectionError> {
    let rates = EventRates::new(p, d, side, n_c)?;
    let mut s = generate_events_capped(traj, &rates, seed, None)?;
    s.meta.attenuation = Some(d.attenuation);
    Ok(s)
}

/// Drops same-detector repeats of a timestamp.
fn dedup(s: PhotonEventStream) -> PhotonEventStream {
    let mut out = PhotonEventStream { timestamps: Vec::with_capacity(s.len()), detector_ids: Vec::with_capacity(s.len()), ..s.clone() };
    let mut k = 0;
    while k < s.len() {
        let t = s.timestamps[k];
        let mut seen = [false; 256];
        while k < s.len() && s.timestamps[k] == t {
            let d = s.detector_ids[k] as usize;
            if !seen[d] {
                seen[d] = true;
                out.timestamps.push(t);
                out.detector_ids.push(s.detector_ids[k]);
            }
            k += 1;
        }
    }
    out
}

/// Routes each click to detector 0 with probability `ratio`, otherwise to
/// detector 1. Input detector ids are ignored.
pub fn hbt_split(s: &PhotonEventStream, ratio: f64, seed: u64) -> (PhotonEventStream, PhotonEventStream) {
    let mut rng = stream(seed, Purpose::Split, 0);
    let mut a = PhotonEventStream::empty(s.duration, 0, s.meta.clone());
    let mut b = PhotonEventStream::empty(s.duration, 1, s.meta.clone());
    for &t in &s.timestamps {
        let u: f64 = rng.random();
        if u < ratio {
            a.timestamps.push(t);
            a.detector_ids.push(0);
        } else {
            b.timestamps.push(t);
            b.detector_ids.push(1);
        }
    }
    (a, b)
}

/// Single-photon detector response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Reset time (s).
    pub dead_time: f64,
    /// Dark counts/s.
    pub dark_rate: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { efficiency: 0.70, dead_time: 40e-9, dark_rate: 4.0 }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<(), DetectionError> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(DetectionError::InvalidDetector(format!("efficiency {} outside (0, 1]", self.efficiency)));
        }
        if !(self.dead_time >= 0.0) || !(self.dark_rate >= 0.0) {
            return Err(DetectionError::InvalidDetector("dead time and dark rate must be non-negative".into()));
        }
        Ok(())
    }
}

/// Efficiency thinning, dark counts, then non-paralyzable dead time, each
/// per channel.
pub fn apply_detector(s: &PhotonEventStream, m: &DetectorModel, seed: u64) -> PhotonEventStream {
    let dead_ps = seconds_to_ps(m.dead_time);
    let mut merged: Option<PhotonEventStream> = None;
    for &c in &s.channels {
        let mut rng = stream(seed, Purpose::Detector, c as u32);
        let mut kept = PhotonEventStream::empty(s.duration, c, s.meta.clone());
        for (&t, &d) in s.timestamps.iter().zip(&s.detector_ids) {
            if d == c {
                let u: f64 = rng.random();
                if u < m.efficiency {
                    kept.timestamps.push(t);
                    kept.detector_ids.push(c);
                }
            }
        }
        let dark = poisson_stream(m.dark_rate, s.duration, c, &mut rng, s.meta.clone());
        let with_dark = dedup(kept.merge(&dark));
        let mut out = PhotonEventStream::empty(s.duration, c, s.meta.clone());
        let mut last: Option<u64> = None;
        for &t in &with_dark.timestamps {
            if last.is_none_or(|l| t - l >= dead_ps) {
                out.timestamps.push(t);
                out.detector_ids.push(c);
                last = Some(t);
            }
        }
        merged = Some(match merged {
            None => out,
            Some(m) => m.merge(&out),
        });
    }
    merged.unwrap_or_else(|| PhotonEventStream { channels: Vec::new(), ..s.clone() })
}
