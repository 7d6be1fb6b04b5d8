//! `.lab` annotation tracks and duration-weighted recall over reduced
//! vocabularies.
//!
//! Tracks are time-ordered labeled segments. Gaps are treated as the
//! no-chord class, which is a regular class of every alphabet, so they are
//! evaluated rather than skipped.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::alphabet::{class_of, AlphabetId, ChordClass};
use crate::syntax::{ChordLabel, PitchClass};

/// Default frame hop: 2048 samples at 44100 Hz.
pub const DEFAULT_HOP_SECONDS: f64 = 2048.0 / 44100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("segments overlap at {at} s")]
    Overlap { at: f64 },
    #[error("segment at {at} s has non-positive duration")]
    BadInterval { at: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("reference track has no segments")]
    EmptyReference,
}

/// A labeled time span, `start < end`, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T> {
    pub start: f64,
    pub end: f64,
    pub label: T,
}

fn validate_segments<T>(segments: &[Segment<T>]) -> Result<(), LabError> {
    for s in segments {
        if !(s.start >= 0.0 && s.end > s.start) {
            return Err(LabError::BadInterval { at: s.start });
        }
    }
    for pair in segments.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(LabError::Overlap { at: pair[1].start });
        }
    }
    Ok(())
}

fn segment_at<T>(segments: &[Segment<T>], t: f64) -> Option<&Segment<T>> {
    let idx = segments.partition_point(|s| s.start <= t);
    if idx == 0 {
        return None;
    }
    let candidate = &segments[idx - 1];
    (t < candidate.end).then_some(candidate)
}

/// Time-ordered, non-overlapping chord segments. Gaps read as `N`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChordTrack {
    segments: Vec<Segment<ChordLabel>>,
}

impl ChordTrack {
    pub fn new(mut segments: Vec<Segment<ChordLabel>>) -> Result<Self, LabError> {
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        validate_segments(&segments)?;
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment<ChordLabel>] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.segments.first().map(|s| s.start).unwrap_or(0.0)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map(|s| s.end).unwrap_or(0.0)
    }

    /// Label at time `t`; gaps and out-of-range times are `N`.
    pub fn label_at(&self, t: f64) -> ChordLabel {
        segment_at(&self.segments, t)
            .map(|s| s.label.clone())
            .unwrap_or(ChordLabel::NoChord)
    }

    /// Reduced class at time `t`.
    pub fn class_at(&self, t: f64, alphabet: AlphabetId) -> ChordClass {
        class_of(&self.label_at(t), alphabet)
    }

    /// Segment boundaries, sorted and deduplicated.
    fn boundaries_into(&self, out: &mut Vec<f64>) {
        for s in &self.segments {
            out.push(s.start);
            out.push(s.end);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyMode {
    Major,
    Minor,
}

/// An annotated key: tonic pitch class plus mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key {
    pub tonic: PitchClass,
    pub mode: KeyMode,
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            KeyMode::Major => write!(f, "{}:major", self.tonic),
            KeyMode::Minor => write!(f, "{}:minor", self.tonic),
        }
    }
}

/// Time-ordered key annotation segments. Gaps mean "no key annotated".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyTrack {
    segments: Vec<Segment<Key>>,
}

impl KeyTrack {
    pub fn new(mut segments: Vec<Segment<Key>>) -> Result<Self, LabError> {
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        validate_segments(&segments)?;
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment<Key>] {
        &self.segments
    }

    pub fn key_at(&self, t: f64) -> Option<Key> {
        segment_at(&self.segments, t).map(|s| s.label)
    }
}

fn parse_lab_lines<T>(
    text: &str,
    mut parse_label: impl FnMut(&str, usize) -> Result<Option<T>, LabError>,
) -> Result<Vec<Segment<T>>, LabError> {
    let mut segments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (start, end, label) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(s), Some(e), Some(l), None) => (s, e, l),
            _ => {
                return Err(LabError::MalformedLine {
                    line: line_no,
                    message: "expected `start end label`".to_owned(),
                })
            }
        };
        let start: f64 = start.parse().map_err(|_| LabError::MalformedLine {
            line: line_no,
            message: format!("bad start time `{start}`"),
        })?;
        let end: f64 = end.parse().map_err(|_| LabError::MalformedLine {
            line: line_no,
            message: format!("bad end time `{end}`"),
        })?;
        if let Some(label) = parse_label(label, line_no)? {
            segments.push(Segment { start, end, label });
        }
    }
    Ok(segments)
}

/// Parse a chord `.lab` file: `start end label` per line, `#` comments and
/// blank lines skipped. Reports the line number of the first malformed line.
pub fn parse_lab(text: &str) -> Result<ChordTrack, LabError> {
    let segments = parse_lab_lines(text, |label, line| {
        ChordLabel::parse(label)
            .map(Some)
            .map_err(|e| LabError::MalformedLine {
                line,
                message: e.to_string(),
            })
    })?;
    ChordTrack::new(segments)
}

/// Parse a key `.lab` file. Labels are `Tonic` or `Tonic:mode` with mode
/// one of maj/major/min/minor; `N` and `Silence` spans carry no key.
pub fn parse_key_lab(text: &str) -> Result<KeyTrack, LabError> {
    let segments = parse_lab_lines(text, |label, line| {
        if label == "N" || label.eq_ignore_ascii_case("silence") {
            return Ok(None);
        }
        let (tonic, mode) = match label.split_once(':') {
            Some((t, m)) => (t, m),
            None => (label, "major"),
        };
        let tonic = PitchClass::parse_name(tonic).ok_or_else(|| LabError::MalformedLine {
            line,
            message: format!("bad key tonic `{tonic}`"),
        })?;
        let mode = match mode {
            "maj" | "major" => KeyMode::Major,
            "min" | "minor" => KeyMode::Minor,
            other => {
                return Err(LabError::MalformedLine {
                    line,
                    message: format!("bad key mode `{other}`"),
                })
            }
        };
        Ok(Some(Key { tonic, mode }))
    })?;
    KeyTrack::new(segments)
}

/// MIREX-style evaluation vocabulary, mapped onto an alphabet reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalVocabulary {
    MajMin,
    Sevenths,
    Tetrads,
}

impl EvalVocabulary {
    pub const ALL: [EvalVocabulary; 3] = [
        EvalVocabulary::MajMin,
        EvalVocabulary::Sevenths,
        EvalVocabulary::Tetrads,
    ];

    pub fn alphabet(self) -> AlphabetId {
        match self {
            EvalVocabulary::MajMin => AlphabetId::A0,
            EvalVocabulary::Sevenths => AlphabetId::A1,
            EvalVocabulary::Tetrads => AlphabetId::A2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalVocabulary::MajMin => "majmin",
            EvalVocabulary::Sevenths => "sevenths",
            EvalVocabulary::Tetrads => "tetrads",
        }
    }
}

impl fmt::Display for EvalVocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalVocabulary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "majmin" | "maj/min" | "majormimor" | "majorminor" => Ok(EvalVocabulary::MajMin),
            "sevenths" => Ok(EvalVocabulary::Sevenths),
            "tetrads" => Ok(EvalVocabulary::Tetrads),
            other => Err(format!(
                "unknown vocabulary `{other}` (expected majmin, sevenths, or tetrads)"
            )),
        }
    }
}

/// Duration-weighted recall of one (reference, estimate) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub recall: f64,
    pub evaluated_duration: f64,
}

/// Sorted, deduplicated boundary times of both tracks, clamped to a window.
fn sweep_points(reference: &ChordTrack, estimate: &ChordTrack, lo: f64, hi: f64) -> Vec<f64> {
    let mut points = vec![lo, hi];
    reference.boundaries_into(&mut points);
    estimate.boundaries_into(&mut points);
    points.retain(|&t| t >= lo && t <= hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Compare both tracks over the reference's time span, reduced into the
/// vocabulary's alphabet. Recall is the duration where the reduced classes
/// agree divided by the reference duration; gaps on either side read as `N`.
pub fn score(
    reference: &ChordTrack,
    estimate: &ChordTrack,
    vocab: EvalVocabulary,
) -> Result<PairScore, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let alphabet = vocab.alphabet();
    let (lo, hi) = (reference.start(), reference.end());
    let points = sweep_points(reference, estimate, lo, hi);
    let mut matched = 0.0;
    for pair in points.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        if t1 <= t0 {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        if reference.class_at(mid, alphabet) == estimate.class_at(mid, alphabet) {
            matched += t1 - t0;
        }
    }
    let duration = hi - lo;
    Ok(PairScore {
        recall: matched / duration,
        evaluated_duration: duration,
    })
}

/// Classes sampled at frame centers `(k + 1/2) * hop` for `k` covering
/// `[0, duration)`. Times past the last segment read as `N`.
pub fn frame_sample(
    track: &ChordTrack,
    alphabet: AlphabetId,
    hop: f64,
    duration: f64,
) -> Vec<ChordClass> {
    assert!(hop > 0.0, "hop must be positive");
    let mut frames = Vec::new();
    let mut k = 0usize;
    loop {
        let center = (k as f64 + 0.5) * hop;
        if center >= duration {
            break;
        }
        frames.push(track.class_at(center, alphabet));
        k += 1;
    }
    frames
}

/// Score of one reference/estimate file pair.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SongScore {
    pub name: String,
    pub recall: f64,
    pub duration: f64,
}

/// Corpus-level report. Both averaging conventions are reported:
/// `weighted_recall` weights songs by evaluated duration, `mean_recall`
/// weights them equally.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScoreReport {
    pub weighted_recall: f64,
    pub mean_recall: f64,
    pub total_duration: f64,
    pub per_song: Vec<SongScore>,
}

impl ScoreReport {
    pub fn aggregate(per_song: Vec<SongScore>) -> Self {
        let total_duration: f64 = per_song.iter().map(|s| s.duration).sum();
        let weighted_recall = if total_duration > 0.0 {
            per_song.iter().map(|s| s.recall * s.duration).sum::<f64>() / total_duration
        } else {
            0.0
        };
        let mean_recall = if per_song.is_empty() {
            0.0
        } else {
            per_song.iter().map(|s| s.recall).sum::<f64>() / per_song.len() as f64
        };
        Self {
            weighted_recall,
            mean_recall,
            total_duration,
            per_song,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "name,recall,duration")?;
        for song in &self.per_song {
            writeln!(out, "{},{},{}", song.name, song.recall, song.duration)?;
        }
        Ok(())
    }
}
