//! Chord-label syntax: parsing, printing, and transposition.
//!
//! Labels follow the `root:quality(extensions)/bass` convention used by
//! reference annotation datasets. Extensions and bass are carried through
//! verbatim; classification never reads them.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Semitone index in `0..=11`, with C = 0.
///
/// Enharmonic spellings (C# / Db, double accidentals) collapse to the same
/// value at construction time. Canonical printing uses sharps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PitchClass(u8);

const PITCH_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

impl PitchClass {
    pub fn new(semitones: i32) -> Self {
        Self(semitones.rem_euclid(12) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn transposed(self, semitones: i32) -> Self {
        Self::new(i32::from(self.0) + semitones)
    }

    /// Canonical sharp spelling ("C", "C#", ..., "B").
    pub fn name(self) -> &'static str {
        PITCH_NAMES[self.0 as usize]
    }

    /// Interval from `self` up to `other`, in semitones (0..=11).
    pub fn interval_to(self, other: PitchClass) -> u8 {
        (i32::from(other.0) - i32::from(self.0)).rem_euclid(12) as u8
    }

    /// Parse a note name: a letter A-G followed by accidentals (`#`, `b`).
    pub fn parse_name(name: &str) -> Option<Self> {
        let mut chars = name.chars();
        let natural = match chars.next()? {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return None,
        };
        let mut offset = 0;
        for c in chars {
            match c {
                '#' => offset += 1,
                'b' => offset -= 1,
                _ => return None,
            }
        }
        Some(Self::new(natural + offset))
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The fourteen chord qualities of the largest alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quality {
    Maj,
    Min,
    Dim,
    Aug,
    Maj6,
    Min6,
    Maj7,
    MinMaj7,
    Min7,
    Seventh,
    Dim7,
    HalfDim7,
    Sus2,
    Sus4,
}

impl Quality {
    /// All qualities, in the fixed order used for class indexing.
    pub const ALL: [Quality; 14] = [
        Quality::Maj,
        Quality::Min,
        Quality::Dim,
        Quality::Aug,
        Quality::Maj6,
        Quality::Min6,
        Quality::Maj7,
        Quality::MinMaj7,
        Quality::Min7,
        Quality::Seventh,
        Quality::Dim7,
        Quality::HalfDim7,
        Quality::Sus2,
        Quality::Sus4,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Quality::Maj => "maj",
            Quality::Min => "min",
            Quality::Dim => "dim",
            Quality::Aug => "aug",
            Quality::Maj6 => "maj6",
            Quality::Min6 => "min6",
            Quality::Maj7 => "maj7",
            Quality::MinMaj7 => "minmaj7",
            Quality::Min7 => "min7",
            Quality::Seventh => "7",
            Quality::Dim7 => "dim7",
            Quality::HalfDim7 => "hdim7",
            Quality::Sus2 => "sus2",
            Quality::Sus4 => "sus4",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Quality::ALL.into_iter().find(|q| q.token() == token)
    }

    /// Chord-tone intervals above the root, in semitones.
    pub fn intervals(self) -> &'static [u8] {
        match self {
            Quality::Maj => &[0, 4, 7],
            Quality::Min => &[0, 3, 7],
            Quality::Dim => &[0, 3, 6],
            Quality::Aug => &[0, 4, 8],
            Quality::Maj6 => &[0, 4, 7, 9],
            Quality::Min6 => &[0, 3, 7, 9],
            Quality::Maj7 => &[0, 4, 7, 11],
            Quality::MinMaj7 => &[0, 3, 7, 11],
            Quality::Min7 => &[0, 3, 7, 10],
            Quality::Seventh => &[0, 4, 7, 10],
            Quality::Dim7 => &[0, 3, 6, 9],
            Quality::HalfDim7 => &[0, 3, 6, 10],
            Quality::Sus2 => &[0, 2, 7],
            Quality::Sus4 => &[0, 5, 7],
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A parsed chord label: either the no-chord marker `N` or a chord with a
/// root, a quality, and verbatim extension/bass tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChordLabel {
    NoChord,
    Chord {
        root: PitchClass,
        quality: Quality,
        extensions: Vec<String>,
        bass: Option<String>,
    },
}

impl ChordLabel {
    pub fn chord(root: PitchClass, quality: Quality) -> Self {
        ChordLabel::Chord {
            root,
            quality,
            extensions: Vec::new(),
            bass: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Parser::new(text.trim()).run()
    }

    pub fn is_no_chord(&self) -> bool {
        matches!(self, ChordLabel::NoChord)
    }

    pub fn root(&self) -> Option<PitchClass> {
        match self {
            ChordLabel::NoChord => None,
            ChordLabel::Chord { root, .. } => Some(*root),
        }
    }

    pub fn quality(&self) -> Option<Quality> {
        match self {
            ChordLabel::NoChord => None,
            ChordLabel::Chord { quality, .. } => Some(*quality),
        }
    }

    /// Drop extensions and bass, keeping root and quality. `N` maps to itself.
    pub fn strip_to_core(&self) -> Self {
        match self {
            ChordLabel::NoChord => ChordLabel::NoChord,
            ChordLabel::Chord { root, quality, .. } => ChordLabel::chord(*root, *quality),
        }
    }

    /// Shift the root by `semitones` (mod 12). `N` is a fixed point.
    pub fn transpose(&self, semitones: i32) -> Self {
        match self {
            ChordLabel::NoChord => ChordLabel::NoChord,
            ChordLabel::Chord {
                root,
                quality,
                extensions,
                bass,
            } => ChordLabel::Chord {
                root: root.transposed(semitones),
                quality: *quality,
                extensions: extensions.clone(),
                bass: bass.clone(),
            },
        }
    }
}

impl fmt::Display for ChordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChordLabel::NoChord => f.write_str("N"),
            ChordLabel::Chord {
                root,
                quality,
                extensions,
                bass,
            } => {
                write!(f, "{}:{}", root, quality)?;
                if !extensions.is_empty() {
                    write!(f, "({})", extensions.join(","))?;
                }
                if let Some(b) = bass {
                    write!(f, "/{}", b)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ChordLabel {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChordLabel::parse(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown chord quality `{token}` at position {position}")]
    UnknownQuality { position: usize, token: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } => *position,
            ParseError::UnknownQuality { position, .. } => *position,
        }
    }
}

/// Characters permitted in extension and bass interval tokens ("b9", "*3", "11").
fn is_interval_char(c: u8) -> bool {
    matches!(c, b'#' | b'b' | b'*' | b'0'..=b'9')
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<ChordLabel, ParseError> {
        if self.bytes.is_empty() {
            return Err(self.error("empty chord label"));
        }
        if self.bytes == b"N" {
            return Ok(ChordLabel::NoChord);
        }
        let root = self.root()?;
        let quality = if self.peek() == Some(b':') {
            self.bump();
            self.quality()?
        } else {
            // A bare root is a major chord by annotation convention.
            Quality::Maj
        };
        let extensions = if self.peek() == Some(b'(') {
            self.bump();
            self.extension_list()?
        } else {
            Vec::new()
        };
        let bass = if self.peek() == Some(b'/') {
            self.bump();
            Some(self.interval_token("bass")?)
        } else {
            None
        };
        if self.pos != self.bytes.len() {
            return Err(self.error(format!(
                "unexpected character `{}`",
                self.bytes[self.pos] as char
            )));
        }
        Ok(ChordLabel::Chord {
            root,
            quality,
            extensions,
            bass,
        })
    }

    fn root(&mut self) -> Result<PitchClass, ParseError> {
        let natural = match self.peek() {
            Some(b'C') => 0,
            Some(b'D') => 2,
            Some(b'E') => 4,
            Some(b'F') => 5,
            Some(b'G') => 7,
            Some(b'A') => 9,
            Some(b'B') => 11,
            Some(b'N') => return Err(self.error("`N` takes no quality, extensions, or bass")),
            _ => return Err(self.error("expected a root note letter A-G or `N`")),
        };
        self.bump();
        let mut offset: i32 = 0;
        while let Some(c) = self.peek() {
            match c {
                b'#' => offset += 1,
                b'b' => offset -= 1,
                _ => break,
            }
            self.bump();
        }
        Ok(PitchClass::new(natural + offset))
    }

    fn quality(&mut self) -> Result<Quality, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_lowercase() || c.is_ascii_digit() {
                self.bump();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.error("expected a quality after `:`"));
        }
        // Safe: the scanned range is ASCII.
        let token = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        Quality::from_token(token).ok_or(ParseError::UnknownQuality {
            position: start,
            token: token.to_owned(),
        })
    }

    fn extension_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut extensions = vec![self.interval_token("extension")?];
        loop {
            match self.peek() {
                Some(b',') => {
                    self.bump();
                    extensions.push(self.interval_token("extension")?);
                }
                Some(b')') => {
                    self.bump();
                    return Ok(extensions);
                }
                _ => return Err(self.error("expected `,` or `)` in extension list")),
            }
        }
    }

    fn interval_token(&mut self, what: &str) -> Result<String, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_interval_char(c) {
                self.bump();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.error(format!("expected an interval token for {what}")));
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .to_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pc(v: i32) -> PitchClass {
        PitchClass::new(v)
    }

    #[test]
    fn parses_full_label() {
        let label = ChordLabel::parse("F:maj7(11)/3").unwrap();
        assert_eq!(
            label,
            ChordLabel::Chord {
                root: pc(5),
                quality: Quality::Maj7,
                extensions: vec!["11".to_owned()],
                bass: Some("3".to_owned()),
            }
        );
    }

    #[test]
    fn parses_no_chord() {
        assert_eq!(ChordLabel::parse("N").unwrap(), ChordLabel::NoChord);
    }

    #[test]
    fn bare_root_is_major() {
        assert_eq!(
            ChordLabel::parse("C").unwrap(),
            ChordLabel::chord(pc(0), Quality::Maj)
        );
    }

    #[test]
    fn bare_root_with_bass() {
        let label = ChordLabel::parse("C/3").unwrap();
        assert_eq!(label.quality(), Some(Quality::Maj));
        assert_eq!(label.to_string(), "C:maj/3");
    }

    #[test]
    fn enharmonic_roots_collapse() {
        for (a, b) in [("C#", "Db"), ("Cb", "B"), ("E#", "F"), ("C##", "D"), ("Dbb", "C")] {
            assert_eq!(
                ChordLabel::parse(a).unwrap().root(),
                ChordLabel::parse(b).unwrap().root(),
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn multiple_extensions() {
        let label = ChordLabel::parse("C:7(b9,11)").unwrap();
        match &label {
            ChordLabel::Chord { extensions, .. } => {
                assert_eq!(extensions, &vec!["b9".to_owned(), "11".to_owned()]);
            }
            _ => panic!("expected chord"),
        }
    }

    #[test]
    fn omit_degree_token_kept_verbatim() {
        let label = ChordLabel::parse("C:maj7(*5)").unwrap();
        assert_eq!(label.to_string(), "C:maj7(*5)");
    }

    #[test]
    fn unknown_quality_is_distinct_error() {
        match ChordLabel::parse("X:wrong") {
            Err(ParseError::Syntax { position: 0, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        match ChordLabel::parse("C:wrong") {
            Err(ParseError::UnknownQuality { token, position }) => {
                assert_eq!(token, "wrong");
                assert_eq!(position, 2);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = ChordLabel::parse("C:maj7(11").unwrap_err();
        assert_eq!(err.position(), 9);
        let err = ChordLabel::parse("C:maj)").unwrap_err();
        assert_eq!(err.position(), 5);
    }

    #[test]
    fn no_chord_takes_no_modifiers() {
        assert!(ChordLabel::parse("N/3").is_err());
        assert!(ChordLabel::parse("N:maj").is_err());
    }

    #[test]
    fn empty_and_whitespace_rejected() {
        assert!(ChordLabel::parse("").is_err());
        assert!(ChordLabel::parse("   ").is_err());
    }

    #[test]
    fn strip_removes_extensions_and_bass() {
        let label = ChordLabel::parse("F:maj7(11)/3").unwrap();
        assert_eq!(
            label.strip_to_core(),
            ChordLabel::chord(pc(5), Quality::Maj7)
        );
        assert_eq!(ChordLabel::NoChord.strip_to_core(), ChordLabel::NoChord);
        let label = ChordLabel::parse("C:min7/b7").unwrap();
        assert_eq!(label.strip_to_core().to_string(), "C:min7");
    }

    #[test]
    fn format_uses_sharp_spelling() {
        assert_eq!(ChordLabel::chord(pc(10), Quality::Min).to_string(), "A#:min");
        assert_eq!(ChordLabel::parse("Bb:min").unwrap().to_string(), "A#:min");
        assert_eq!(ChordLabel::NoChord.to_string(), "N");
    }

    #[test]
    fn transpose_examples() {
        let c_maj = ChordLabel::parse("C:maj").unwrap();
        assert_eq!(c_maj.transpose(2).to_string(), "D:maj");
        assert_eq!(ChordLabel::NoChord.transpose(5), ChordLabel::NoChord);
        let b_min7 = ChordLabel::parse("B:min7").unwrap();
        assert_eq!(b_min7.transpose(1).to_string(), "C:min7");
    }

    #[test]
    fn round_trip_fixture_corpus() {
        let fixtures = [
            "N",
            "C",
            "C:maj",
            "A#:min",
            "F:maj7(11)/3",
            "G:7",
            "B:hdim7",
            "D:sus4",
            "E:minmaj7(b9,11)/5",
            "F#:dim7/b3",
            "C:maj(9)",
            "A:min6",
        ];
        for s in fixtures {
            let parsed = ChordLabel::parse(s).unwrap();
            let reparsed = ChordLabel::parse(&parsed.to_string()).unwrap();
            assert_eq!(parsed, reparsed, "round trip failed for {s}");
        }
    }

    #[test]
    fn quality_tokens_round_trip() {
        for q in Quality::ALL {
            assert_eq!(Quality::from_token(q.token()), Some(q));
        }
    }

    proptest! {
        #[test]
        fn parse_never_panics(input in "\\PC*") {
            let _ = ChordLabel::parse(&input);
        }

        #[test]
        fn parse_never_panics_on_bytes(input in proptest::collection::vec(any::<u8>(), 0..32)) {
            if let Ok(s) = std::str::from_utf8(&input) {
                let _ = ChordLabel::parse(s);
            }
        }

        #[test]
        fn transpose_round_trip(root in 0i32..12, q in 0usize..14, k in -6i32..=6) {
            let label = ChordLabel::chord(PitchClass::new(root), Quality::ALL[q]);
            prop_assert_eq!(label.transpose(k).transpose(-k), label.clone());
            prop_assert_eq!(label.transpose(12), label);
        }

        #[test]
        fn display_parse_round_trip(root in 0i32..12, q in 0usize..14) {
            let label = ChordLabel::chord(PitchClass::new(root), Quality::ALL[q]);
            prop_assert_eq!(ChordLabel::parse(&label.to_string()).unwrap(), label);
        }
    }
}
