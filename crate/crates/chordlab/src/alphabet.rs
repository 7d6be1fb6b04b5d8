//! Chord alphabets: the A0/A1/A2 class sets, class indexing, and the
//! quality-reduction hierarchy.
//!
//! The parent table lives in `resources/quality_hierarchy.csv` so that code,
//! tests, and documentation share one source of truth. A quality without a
//! parent at the target level reduces to the no-chord class `N`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::syntax::{ChordLabel, PitchClass, Quality};

/// The CSV parent table shipped with the crate (`quality, parent_A1, parent_A0`).
pub const QUALITY_HIERARCHY_CSV: &str = include_str!("../resources/quality_hierarchy.csv");

/// One of the three chord alphabets, ordered by precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlphabetId {
    /// Major/minor triads plus `N`: 25 classes.
    A0,
    /// Triads of the harmonized major scale plus sevenths: 73 classes.
    A1,
    /// Fourteen qualities: 169 classes.
    A2,
}

impl AlphabetId {
    pub const ALL: [AlphabetId; 3] = [AlphabetId::A0, AlphabetId::A1, AlphabetId::A2];

    /// The quality set of this alphabet, in class-index order.
    pub fn qualities(self) -> &'static [Quality] {
        match self {
            AlphabetId::A0 => &[Quality::Maj, Quality::Min],
            AlphabetId::A1 => &[
                Quality::Maj,
                Quality::Min,
                Quality::Dim,
                Quality::Maj7,
                Quality::Min7,
                Quality::Seventh,
            ],
            AlphabetId::A2 => &Quality::ALL,
        }
    }

    /// Number of classes: `1 + 12 * |qualities|`.
    pub fn size(self) -> usize {
        1 + 12 * self.qualities().len()
    }

    pub fn contains_quality(self, quality: Quality) -> bool {
        self.qualities().contains(&quality)
    }

    pub fn name(self) -> &'static str {
        match self {
            AlphabetId::A0 => "A0",
            AlphabetId::A1 => "A1",
            AlphabetId::A2 => "A2",
        }
    }
}

impl fmt::Display for AlphabetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlphabetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "A0" => Ok(AlphabetId::A0),
            "A1" => Ok(AlphabetId::A1),
            "A2" => Ok(AlphabetId::A2),
            other => Err(format!("unknown alphabet `{other}` (expected A0, A1, or A2)")),
        }
    }
}

impl serde::Serialize for AlphabetId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for AlphabetId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A class in a fixed alphabet.
///
/// Index 0 is the no-chord class `N` in every alphabet; the rest are ordered
/// by root pitch class (C..B), then by the alphabet's fixed quality order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChordClass {
    alphabet: AlphabetId,
    index: usize,
}

impl ChordClass {
    pub fn new(alphabet: AlphabetId, index: usize) -> Option<Self> {
        (index < alphabet.size()).then_some(Self { alphabet, index })
    }

    pub fn no_chord(alphabet: AlphabetId) -> Self {
        Self { alphabet, index: 0 }
    }

    fn from_parts(alphabet: AlphabetId, root: PitchClass, quality: Quality) -> Self {
        let qualities = alphabet.qualities();
        let rank = qualities
            .iter()
            .position(|&q| q == quality)
            .expect("quality not in alphabet");
        Self {
            alphabet,
            index: 1 + usize::from(root.value()) * qualities.len() + rank,
        }
    }

    pub fn alphabet(&self) -> AlphabetId {
        self.alphabet
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn is_no_chord(&self) -> bool {
        self.index == 0
    }

    pub fn root(&self) -> Option<PitchClass> {
        if self.index == 0 {
            return None;
        }
        let per_root = self.alphabet.qualities().len();
        Some(PitchClass::new(((self.index - 1) / per_root) as i32))
    }

    pub fn quality(&self) -> Option<Quality> {
        if self.index == 0 {
            return None;
        }
        let qualities = self.alphabet.qualities();
        Some(qualities[(self.index - 1) % qualities.len()])
    }

    /// The canonical label of this class (`N` or a bare root:quality chord).
    pub fn label(&self) -> ChordLabel {
        match (self.root(), self.quality()) {
            (Some(root), Some(quality)) => ChordLabel::chord(root, quality),
            _ => ChordLabel::NoChord,
        }
    }

    /// The class of the same root/quality transposed by `semitones`.
    /// `N` is a fixed point.
    pub fn transpose(&self, semitones: i32) -> Self {
        match (self.root(), self.quality()) {
            (Some(root), Some(quality)) => {
                Self::from_parts(self.alphabet, root.transposed(semitones), quality)
            }
            _ => *self,
        }
    }
}

impl fmt::Display for ChordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

struct HierarchyTable {
    // Indexed by position in Quality::ALL; None means the parent is N.
    a1: [Option<Quality>; 14],
    a0: [Option<Quality>; 14],
}

fn hierarchy() -> &'static HierarchyTable {
    static TABLE: OnceLock<HierarchyTable> = OnceLock::new();
    TABLE.get_or_init(|| parse_hierarchy_csv(QUALITY_HIERARCHY_CSV))
}

fn parse_hierarchy_csv(csv: &str) -> HierarchyTable {
    let mut a1 = [None; 14];
    let mut a0 = [None; 14];
    let mut seen = [false; 14];
    for line in csv.lines().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let quality = fields
            .next()
            .and_then(Quality::from_token)
            .unwrap_or_else(|| panic!("bad quality in hierarchy csv: {line}"));
        let parse_parent = |tok: Option<&str>| match tok {
            Some("N") => None,
            Some(t) => Some(
                Quality::from_token(t)
                    .unwrap_or_else(|| panic!("bad parent in hierarchy csv: {line}")),
            ),
            None => panic!("missing field in hierarchy csv: {line}"),
        };
        let rank = quality_rank(quality);
        a1[rank] = parse_parent(fields.next());
        a0[rank] = parse_parent(fields.next());
        seen[rank] = true;
    }
    assert!(seen.iter().all(|&s| s), "hierarchy csv must cover all 14 qualities");
    HierarchyTable { a1, a0 }
}

fn quality_rank(quality: Quality) -> usize {
    Quality::ALL.iter().position(|&q| q == quality).unwrap()
}

/// Parent of `quality` at the target level, or `None` when the image is `N`.
///
/// At A2 every quality is its own parent.
pub fn quality_parent(quality: Quality, target: AlphabetId) -> Option<Quality> {
    let table = hierarchy();
    match target {
        AlphabetId::A2 => Some(quality),
        AlphabetId::A1 => table.a1[quality_rank(quality)],
        AlphabetId::A0 => table.a0[quality_rank(quality)],
    }
}

/// Reduce a (core) label into the target alphabet.
///
/// Extensions and bass are ignored; a quality without an ancestor at the
/// target level lands in the no-chord class. Total over parsed labels.
pub fn reduce(label: &ChordLabel, target: AlphabetId) -> ChordClass {
    match (label.root(), label.quality()) {
        (Some(root), Some(quality)) => match quality_parent(quality, target) {
            Some(parent) => ChordClass::from_parts(target, root, parent),
            None => ChordClass::no_chord(target),
        },
        _ => ChordClass::no_chord(target),
    }
}

/// `reduce` after `strip_to_core`: the class of an arbitrary parsed label.
pub fn class_of(label: &ChordLabel, target: AlphabetId) -> ChordClass {
    reduce(&label.strip_to_core(), target)
}

/// All classes of the alphabet in index order.
pub fn enumerate_classes(target: AlphabetId) -> Vec<ChordClass> {
    (0..target.size())
        .map(|index| ChordClass { alphabet: target, index })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ChordLabel {
        ChordLabel::parse(s).unwrap()
    }

    #[test]
    fn alphabet_sizes() {
        assert_eq!(AlphabetId::A0.size(), 25);
        assert_eq!(AlphabetId::A1.size(), 73);
        assert_eq!(AlphabetId::A2.size(), 169);
    }

    #[test]
    fn enumerate_lengths_match_sizes() {
        for a in AlphabetId::ALL {
            assert_eq!(enumerate_classes(a).len(), a.size());
        }
    }

    #[test]
    fn index_zero_is_no_chord_everywhere() {
        for a in AlphabetId::ALL {
            let classes = enumerate_classes(a);
            assert!(classes[0].is_no_chord());
            assert_eq!(classes[0].label(), ChordLabel::NoChord);
        }
    }

    #[test]
    fn indices_ordered_by_root_then_quality() {
        let classes = enumerate_classes(AlphabetId::A0);
        assert_eq!(classes[1].to_string(), "C:maj");
        assert_eq!(classes[2].to_string(), "C:min");
        assert_eq!(classes[3].to_string(), "C#:maj");
        assert_eq!(classes[24].to_string(), "B:min");
    }

    #[test]
    fn label_round_trips_through_class() {
        for a in AlphabetId::ALL {
            for class in enumerate_classes(a) {
                assert_eq!(class_of(&class.label(), a), class);
            }
        }
    }

    #[test]
    fn reduce_keeps_resident_qualities() {
        assert_eq!(
            reduce(&parse("F:maj7"), AlphabetId::A1).label(),
            parse("F:maj7")
        );
    }

    #[test]
    fn maj7_descends_to_maj() {
        assert_eq!(
            reduce(&parse("C:maj7"), AlphabetId::A0).label(),
            parse("C:maj")
        );
    }

    #[test]
    fn sus4_has_no_a1_parent() {
        assert!(reduce(&parse("C:sus4"), AlphabetId::A1).is_no_chord());
    }

    #[test]
    fn dim7_reduces_to_no_chord_at_a0() {
        assert!(class_of(&parse("G:dim7"), AlphabetId::A0).is_no_chord());
    }

    #[test]
    fn class_of_strips_extensions() {
        assert_eq!(
            class_of(&parse("F:maj7(11)/3"), AlphabetId::A1).label(),
            parse("F:maj7")
        );
        assert_eq!(class_of(&parse("N"), AlphabetId::A2).index(), 0);
    }

    #[test]
    fn reduction_is_idempotent_on_residents() {
        for a in AlphabetId::ALL {
            for class in enumerate_classes(a) {
                assert_eq!(reduce(&class.label(), a), class);
            }
        }
    }

    #[test]
    fn reduction_commutes_down_the_chain() {
        for class in enumerate_classes(AlphabetId::A2) {
            let via_a1 = reduce(&reduce(&class.label(), AlphabetId::A1).label(), AlphabetId::A0);
            let direct = reduce(&class.label(), AlphabetId::A0);
            assert_eq!(via_a1, direct, "chain broke at {}", class.label());
        }
    }

    #[test]
    fn reduction_preserves_root_or_maps_to_n() {
        for class in enumerate_classes(AlphabetId::A2) {
            for target in AlphabetId::ALL {
                let reduced = reduce(&class.label(), target);
                if !reduced.is_no_chord() {
                    assert_eq!(reduced.root(), class.root());
                }
            }
        }
    }

    #[test]
    fn transposition_equivariance() {
        for class in enumerate_classes(AlphabetId::A2) {
            for k in [-6i32, -1, 1, 5, 6] {
                for target in AlphabetId::ALL {
                    let lhs = class_of(&class.label().transpose(k), target);
                    let rhs = class_of(&class.label(), target).transpose(k);
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn a0_parents_are_maj_min_or_n() {
        for q in Quality::ALL {
            let parent = quality_parent(q, AlphabetId::A0);
            assert!(
                matches!(parent, None | Some(Quality::Maj) | Some(Quality::Min)),
                "{q} has A0 parent {parent:?}"
            );
        }
    }

    #[test]
    fn hierarchy_csv_is_transitively_consistent() {
        // The A0 column must equal A1 parent followed by its A0 parent.
        for q in Quality::ALL {
            let direct = quality_parent(q, AlphabetId::A0);
            let via_a1 =
                quality_parent(q, AlphabetId::A1).and_then(|p| quality_parent(p, AlphabetId::A0));
            assert_eq!(direct, via_a1, "inconsistent rows for {q}");
        }
    }

    #[test]
    fn a1_parents_live_in_a1() {
        for q in Quality::ALL {
            if let Some(p) = quality_parent(q, AlphabetId::A1) {
                assert!(AlphabetId::A1.contains_quality(p));
            }
        }
    }
}
