//! Chord distances: categorical (D0), Tonnetz path length (D1), and
//! Euclidean distance between binary pitch vectors (D2).

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::alphabet::{enumerate_classes, quality_parent, AlphabetId, ChordClass};
use crate::syntax::{ChordLabel, PitchClass, Quality};

/// 12-bit indicator of the pitch classes present in a chord.
/// The no-chord label maps to the all-zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PitchVector {
    bits: [u8; 12],
}

impl PitchVector {
    pub fn components(&self) -> [u8; 12] {
        self.bits
    }

    pub fn contains(&self, pc: PitchClass) -> bool {
        self.bits[pc.value() as usize] == 1
    }

    pub fn cardinality(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// True when every pitch of `other` is also in `self`.
    pub fn contains_all(&self, other: &PitchVector) -> bool {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .all(|(&a, &b)| b == 0 || a == 1)
    }
}

/// Binary pitch vector of a (core) label: quality template rotated by root.
pub fn pitch_vector(label: &ChordLabel) -> PitchVector {
    let mut bits = [0u8; 12];
    if let (Some(root), Some(quality)) = (label.root(), label.quality()) {
        for &interval in quality.intervals() {
            bits[root.transposed(i32::from(interval)).value() as usize] = 1;
        }
    }
    PitchVector { bits }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriadMode {
    Maj,
    Min,
}

/// One of the 24 major/minor triads of the Tonnetz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TriadNode {
    pub root: PitchClass,
    pub mode: TriadMode,
}

impl TriadNode {
    pub fn new(root: PitchClass, mode: TriadMode) -> Self {
        Self { root, mode }
    }

    fn index(self) -> usize {
        usize::from(self.root.value()) * 2 + if self.mode == TriadMode::Min { 1 } else { 0 }
    }

    fn from_index(index: usize) -> Self {
        Self {
            root: PitchClass::new((index / 2) as i32),
            mode: if index % 2 == 1 { TriadMode::Min } else { TriadMode::Maj },
        }
    }

    /// Relative transformation: major to its relative minor and back.
    pub fn relative(self) -> Self {
        match self.mode {
            TriadMode::Maj => Self::new(self.root.transposed(9), TriadMode::Min),
            TriadMode::Min => Self::new(self.root.transposed(3), TriadMode::Maj),
        }
    }

    /// Parallel transformation: same root, opposite mode.
    pub fn parallel(self) -> Self {
        Self::new(
            self.root,
            match self.mode {
                TriadMode::Maj => TriadMode::Min,
                TriadMode::Min => TriadMode::Maj,
            },
        )
    }

    /// Leading-tone exchange: in a major triad the root moves down a
    /// semitone; in a minor triad the fifth moves up a semitone.
    pub fn leading_tone(self) -> Self {
        match self.mode {
            TriadMode::Maj => Self::new(self.root.transposed(4), TriadMode::Min),
            TriadMode::Min => Self::new(self.root.transposed(8), TriadMode::Maj),
        }
    }
}

/// The 24-triad graph generated by the relative, parallel, and leading-tone
/// transformations, each with unit edge cost. Shortest paths are precomputed.
pub struct TonnetzGraph {
    dist: [[u8; 24]; 24],
    diameter: u8,
}

impl TonnetzGraph {
    pub fn new() -> Self {
        let mut dist = [[u8::MAX; 24]; 24];
        for start in 0..24 {
            // BFS from each node over the three transformations.
            let mut queue = std::collections::VecDeque::new();
            dist[start][start] = 0;
            queue.push_back(start);
            while let Some(current) = queue.pop_front() {
                let node = TriadNode::from_index(current);
                for next in [node.relative(), node.parallel(), node.leading_tone()] {
                    let n = next.index();
                    if dist[start][n] == u8::MAX {
                        dist[start][n] = dist[start][current] + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        let diameter = *dist.iter().flatten().max().unwrap();
        assert!(diameter < u8::MAX, "Tonnetz graph must be connected");
        Self { dist, diameter }
    }

    pub fn global() -> &'static TonnetzGraph {
        static GRAPH: OnceLock<TonnetzGraph> = OnceLock::new();
        GRAPH.get_or_init(TonnetzGraph::new)
    }

    pub fn neighbors(node: TriadNode) -> [TriadNode; 3] {
        [node.relative(), node.parallel(), node.leading_tone()]
    }

    /// Minimal number of transformations between two triads.
    pub fn path_length(&self, a: TriadNode, b: TriadNode) -> u32 {
        u32::from(self.dist[a.index()][b.index()])
    }

    /// Longest shortest path in the graph.
    pub fn diameter(&self) -> u32 {
        u32::from(self.diameter)
    }
}

impl Default for TonnetzGraph {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    D0,
    D1,
    D2,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 3] = [DistanceKind::D0, DistanceKind::D1, DistanceKind::D2];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::D0 => "D0",
            DistanceKind::D1 => "D1",
            DistanceKind::D2 => "D2",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "D0" => Ok(DistanceKind::D0),
            "D1" => Ok(DistanceKind::D1),
            "D2" => Ok(DistanceKind::D2),
            other => Err(format!("unknown distance `{other}` (expected D0, D1, or D2)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DistanceError {
    #[error("chord classes come from different alphabets ({left} vs {right})")]
    AlphabetMismatch { left: AlphabetId, right: AlphabetId },
}

fn check_alphabets(a: &ChordClass, b: &ChordClass) -> Result<AlphabetId, DistanceError> {
    if a.alphabet() == b.alphabet() {
        Ok(a.alphabet())
    } else {
        Err(DistanceError::AlphabetMismatch {
            left: a.alphabet(),
            right: b.alphabet(),
        })
    }
}

/// Tunables for the Tonnetz distance. The surcharge is the extra cost paid
/// per operand that had to be reduced to a triad before the path search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TonnetzConfig {
    pub reduction_surcharge: f64,
}

impl Default for TonnetzConfig {
    fn default() -> Self {
        Self {
            reduction_surcharge: 1.0,
        }
    }
}

/// Categorical distance: 0 when the classes coincide, 1 otherwise.
pub fn d0(a: &ChordClass, b: &ChordClass) -> Result<f64, DistanceError> {
    check_alphabets(a, b)?;
    Ok(if a == b { 0.0 } else { 1.0 })
}

/// Tonnetz distance with the default unit surcharge.
pub fn d1(a: &ChordClass, b: &ChordClass) -> Result<f64, DistanceError> {
    d1_with(a, b, &TonnetzConfig::default())
}

/// Tonnetz distance: shortest PLR path between the A0 reductions, plus the
/// surcharge for every operand that was not already an A0 class.
///
/// Identical classes are at distance 0. Pairs where either side has no triad
/// reduction (the `N` class, or chords whose ancestry ends in `N`) take the
/// maximum distance attainable between triad-reducible chords of the same
/// alphabet, which keeps every matrix entry finite.
pub fn d1_with(
    a: &ChordClass,
    b: &ChordClass,
    config: &TonnetzConfig,
) -> Result<f64, DistanceError> {
    let alphabet = check_alphabets(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    match (triad_reduction(a), triad_reduction(b)) {
        (Some(ta), Some(tb)) => {
            let path = f64::from(TonnetzGraph::global().path_length(ta, tb));
            Ok(path + reduction_cost(a, config) + reduction_cost(b, config))
        }
        _ => Ok(max_finite_d1(alphabet, config)),
    }
}

/// Euclidean distance between the binary pitch vectors of the two classes.
pub fn d2(a: &ChordClass, b: &ChordClass) -> Result<f64, DistanceError> {
    check_alphabets(a, b)?;
    let va = pitch_vector(&a.label()).components();
    let vb = pitch_vector(&b.label()).components();
    let sum: f64 = va
        .iter()
        .zip(vb.iter())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

pub fn distance(kind: DistanceKind, a: &ChordClass, b: &ChordClass) -> Result<f64, DistanceError> {
    match kind {
        DistanceKind::D0 => d0(a, b),
        DistanceKind::D1 => d1(a, b),
        DistanceKind::D2 => d2(a, b),
    }
}

fn triad_reduction(class: &ChordClass) -> Option<TriadNode> {
    let quality = class.quality()?;
    let mode = match quality_parent(quality, AlphabetId::A0) {
        Some(Quality::Maj) => TriadMode::Maj,
        Some(Quality::Min) => TriadMode::Min,
        _ => return None,
    };
    Some(TriadNode::new(class.root()?, mode))
}

fn reduction_cost(class: &ChordClass, config: &TonnetzConfig) -> f64 {
    match class.quality() {
        Some(Quality::Maj) | Some(Quality::Min) | None => 0.0,
        Some(_) => config.reduction_surcharge,
    }
}

/// Largest D1 value over pairs of triad-reducible chords in the alphabet.
fn max_finite_d1(alphabet: AlphabetId, config: &TonnetzConfig) -> f64 {
    let graph = TonnetzGraph::global();
    let qualities = alphabet.qualities();
    let mut best: f64 = 0.0;
    for &qa in qualities {
        let Some(ma) = triad_mode(qa) else { continue };
        let sa = if matches!(qa, Quality::Maj | Quality::Min) {
            0.0
        } else {
            config.reduction_surcharge
        };
        for &qb in qualities {
            let Some(mb) = triad_mode(qb) else { continue };
            let sb = if matches!(qb, Quality::Maj | Quality::Min) {
                0.0
            } else {
                config.reduction_surcharge
            };
            for offset in 0..12 {
                let a = TriadNode::new(PitchClass::new(0), ma);
                let b = TriadNode::new(PitchClass::new(offset), mb);
                best = best.max(f64::from(graph.path_length(a, b)) + sa + sb);
            }
        }
    }
    best
}

fn triad_mode(quality: Quality) -> Option<TriadMode> {
    match quality_parent(quality, AlphabetId::A0) {
        Some(Quality::Maj) => Some(TriadMode::Maj),
        Some(Quality::Min) => Some(TriadMode::Min),
        _ => None,
    }
}

/// A precomputed square distance matrix over one alphabet.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    kind: DistanceKind,
    alphabet: AlphabetId,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn alphabet(&self) -> AlphabetId {
        self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Build a matrix from raw entries (row-major). Intended for tests and
    /// experimentation; `distance_matrix` is the production constructor.
    pub fn from_entries(
        kind: DistanceKind,
        alphabet: AlphabetId,
        entries: Vec<f64>,
    ) -> Option<Self> {
        (entries.len() == alphabet.size() * alphabet.size()).then_some(Self {
            kind,
            alphabet,
            entries,
        })
    }

    /// Write the matrix as CSV with canonical chord labels as headers.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        let classes = enumerate_classes(self.alphabet);
        write!(out, "label")?;
        for c in &classes {
            write!(out, ",{}", c.label())?;
        }
        writeln!(out)?;
        for (i, c) in classes.iter().enumerate() {
            write!(out, "{}", c.label())?;
            for j in 0..classes.len() {
                write!(out, ",{}", self.get(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Precompute all pairwise distances over an alphabet.
pub fn distance_matrix(kind: DistanceKind, alphabet: AlphabetId) -> DistanceMatrix {
    distance_matrix_with(kind, alphabet, &TonnetzConfig::default())
}

/// As `distance_matrix`, with an explicit Tonnetz configuration.
///
/// For D2 the `N` row and column are replaced by the maximum chord-chord
/// entry so that `N` is maximally dissimilar to every chord and the
/// similarity construction stays well conditioned; the pairwise `d2`
/// function itself is the plain Euclidean formula.
pub fn distance_matrix_with(
    kind: DistanceKind,
    alphabet: AlphabetId,
    config: &TonnetzConfig,
) -> DistanceMatrix {
    let classes = enumerate_classes(alphabet);
    let n = classes.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let value = match kind {
                DistanceKind::D0 => d0(&classes[i], &classes[j]).unwrap(),
                DistanceKind::D1 => d1_with(&classes[i], &classes[j], config).unwrap(),
                DistanceKind::D2 => d2(&classes[i], &classes[j]).unwrap(),
            };
            entries[i * n + j] = value;
        }
    }
    if kind == DistanceKind::D2 {
        let mut max_chord_chord: f64 = 0.0;
        for i in 1..n {
            for j in 1..n {
                max_chord_chord = max_chord_chord.max(entries[i * n + j]);
            }
        }
        for j in 1..n {
            entries[j] = max_chord_chord;
            entries[j * n] = max_chord_chord;
        }
    }
    DistanceMatrix {
        kind,
        alphabet,
        entries,
    }
}
