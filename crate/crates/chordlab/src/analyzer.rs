//! Error analysis for chord predictions: which misclassifications are
//! musically meaningful substitutions, and how targets and predictions
//! relate as harmonic degrees of the annotated key.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::alphabet::{quality_parent, AlphabetId, ChordClass};
use crate::distance::pitch_vector;
use crate::evaluation::{ChordTrack, EvalError, Key, KeyMode, KeyTrack};
use crate::syntax::{PitchClass, Quality};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzerError {
    #[error("no key available for degree analysis")]
    MissingKey,
}

/// One misclassified span: the annotated class, the predicted class, how
/// long it lasted, and the key annotated at that time (when any).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPair {
    pub target: ChordClass,
    pub predicted: ChordClass,
    pub duration: f64,
    pub key: Option<Key>,
}

impl ErrorPair {
    pub fn new(target: ChordClass, predicted: ChordClass, duration: f64, key: Option<Key>) -> Self {
        debug_assert!(target != predicted, "an error pair needs distinct classes");
        Self {
            target,
            predicted,
            duration,
            key,
        }
    }
}

/// A0 triad mode of a class, when its quality has a maj/min ancestor.
fn a0_mode(class: &ChordClass) -> Option<Quality> {
    quality_parent(class.quality()?, AlphabetId::A0)
}

/// True when the quality descends from the dominant-seventh family.
fn is_dominant(class: &ChordClass) -> bool {
    class
        .quality()
        .map(|q| quality_parent(q, AlphabetId::A1) == Some(Quality::Seventh))
        .unwrap_or(false)
}

fn root_interval(from: &ChordClass, to: &ChordClass) -> Option<u8> {
    Some(from.root()?.interval_to(to.root()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubstitutionRule {
    /// Same root, both major: one pitch set contains the other.
    InclMaj,
    /// Same root, both minor: one pitch set contains the other.
    InclMin,
    /// Target is minor, predicted its relative major.
    RelMaj,
    /// Target is major, predicted its relative minor.
    RelMin,
    /// Tonic substitution other than the relative (a third apart).
    TonicSubs2,
    /// Same root, minor predicted as major.
    MinToMaj,
    /// Same root, major predicted as minor.
    MajToMin,
    /// Both dominant sevenths, roots a tritone apart.
    TritoneSubs,
    /// Predicted dominant seventh rooted a fifth above the target root.
    SubsDominant,
    /// Both diminished sevenths with identical pitch content.
    Dim7Equiv,
}

impl SubstitutionRule {
    pub const ALL: [SubstitutionRule; 10] = [
        SubstitutionRule::InclMaj,
        SubstitutionRule::InclMin,
        SubstitutionRule::RelMaj,
        SubstitutionRule::RelMin,
        SubstitutionRule::TonicSubs2,
        SubstitutionRule::MinToMaj,
        SubstitutionRule::MajToMin,
        SubstitutionRule::TritoneSubs,
        SubstitutionRule::SubsDominant,
        SubstitutionRule::Dim7Equiv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SubstitutionRule::InclMaj => "incl_maj",
            SubstitutionRule::InclMin => "incl_min",
            SubstitutionRule::RelMaj => "rel_M",
            SubstitutionRule::RelMin => "rel_m",
            SubstitutionRule::TonicSubs2 => "tonic_subs_2",
            SubstitutionRule::MinToMaj => "m_to_M",
            SubstitutionRule::MajToMin => "M_to_m",
            SubstitutionRule::TritoneSubs => "tritone_subs",
            SubstitutionRule::SubsDominant => "subs_dominant",
            SubstitutionRule::Dim7Equiv => "dim7_equiv",
        }
    }

    pub fn matches(self, pair: &ErrorPair) -> bool {
        let target = &pair.target;
        let predicted = &pair.predicted;
        match self {
            SubstitutionRule::InclMaj | SubstitutionRule::InclMin => {
                let mode = if self == SubstitutionRule::InclMaj {
                    Quality::Maj
                } else {
                    Quality::Min
                };
                if root_interval(target, predicted) != Some(0)
                    || a0_mode(target) != Some(mode)
                    || a0_mode(predicted) != Some(mode)
                {
                    return false;
                }
                let vt = pitch_vector(&target.label());
                let vp = pitch_vector(&predicted.label());
                vt.contains_all(&vp) || vp.contains_all(&vt)
            }
            SubstitutionRule::RelMin => {
                a0_mode(target) == Some(Quality::Maj)
                    && a0_mode(predicted) == Some(Quality::Min)
                    && root_interval(target, predicted) == Some(9)
            }
            SubstitutionRule::RelMaj => {
                a0_mode(target) == Some(Quality::Min)
                    && a0_mode(predicted) == Some(Quality::Maj)
                    && root_interval(target, predicted) == Some(3)
            }
            SubstitutionRule::TonicSubs2 => {
                let up = a0_mode(target) == Some(Quality::Maj)
                    && a0_mode(predicted) == Some(Quality::Min)
                    && root_interval(target, predicted) == Some(4);
                let down = a0_mode(target) == Some(Quality::Min)
                    && a0_mode(predicted) == Some(Quality::Maj)
                    && root_interval(target, predicted) == Some(8);
                up || down
            }
            SubstitutionRule::MinToMaj => {
                root_interval(target, predicted) == Some(0)
                    && a0_mode(target) == Some(Quality::Min)
                    && a0_mode(predicted) == Some(Quality::Maj)
            }
            SubstitutionRule::MajToMin => {
                root_interval(target, predicted) == Some(0)
                    && a0_mode(target) == Some(Quality::Maj)
                    && a0_mode(predicted) == Some(Quality::Min)
            }
            SubstitutionRule::TritoneSubs => {
                is_dominant(target)
                    && is_dominant(predicted)
                    && root_interval(target, predicted) == Some(6)
            }
            SubstitutionRule::SubsDominant => {
                is_dominant(predicted) && root_interval(target, predicted) == Some(7)
            }
            SubstitutionRule::Dim7Equiv => {
                target.quality() == Some(Quality::Dim7)
                    && predicted.quality() == Some(Quality::Dim7)
                    && root_interval(target, predicted).map(|i| i % 3) == Some(0)
            }
        }
    }
}

impl fmt::Display for SubstitutionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All rules whose predicates hold for the pair, in declaration order.
pub fn match_substitutions(pair: &ErrorPair) -> Vec<SubstitutionRule> {
    SubstitutionRule::ALL
        .into_iter()
        .filter(|rule| rule.matches(pair))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriadQuality {
    Maj,
    Min,
    Dim,
}

/// A roman-numeral degree: position in the scale plus triad quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DegreeNumeral {
    /// 1-based scale degree.
    pub degree: u8,
    pub quality: TriadQuality,
}

impl DegreeNumeral {
    /// Sort key putting major-quality numerals first, then by degree; this
    /// yields the conventional pair names (`I~vi`, `IV~ii`, ...).
    fn order_key(&self) -> (u8, u8) {
        ((self.quality != TriadQuality::Maj) as u8, self.degree)
    }
}

impl fmt::Display for DegreeNumeral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NUMERALS: [&str; 7] = ["I", "II", "III", "IV", "V", "VI", "VII"];
        let numeral = NUMERALS[(self.degree - 1) as usize];
        match self.quality {
            TriadQuality::Maj => f.write_str(numeral),
            TriadQuality::Min => f.write_str(&numeral.to_lowercase()),
            TriadQuality::Dim => write!(f, "{}°", numeral.to_lowercase()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DegreeOutcome {
    Diatonic(DegreeNumeral),
    NonDiatonic,
}

impl fmt::Display for DegreeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeOutcome::Diatonic(n) => write!(f, "{n}"),
            DegreeOutcome::NonDiatonic => f.write_str("non-diatonic"),
        }
    }
}

/// Diatonic triads per mode: (semitones above tonic, degree, quality).
/// Minor keys use the natural minor scale.
fn diatonic_table(mode: KeyMode) -> &'static [(u8, u8, TriadQuality)] {
    match mode {
        KeyMode::Major => &[
            (0, 1, TriadQuality::Maj),
            (2, 2, TriadQuality::Min),
            (4, 3, TriadQuality::Min),
            (5, 4, TriadQuality::Maj),
            (7, 5, TriadQuality::Maj),
            (9, 6, TriadQuality::Min),
            (11, 7, TriadQuality::Dim),
        ],
        KeyMode::Minor => &[
            (0, 1, TriadQuality::Min),
            (2, 2, TriadQuality::Dim),
            (3, 3, TriadQuality::Maj),
            (5, 4, TriadQuality::Min),
            (7, 5, TriadQuality::Min),
            (8, 6, TriadQuality::Maj),
            (10, 7, TriadQuality::Maj),
        ],
    }
}

/// Triad quality of a class's reduced form; the diminished family is kept
/// distinct so leading-tone chords can land on their degree.
fn triad_quality(class: &ChordClass) -> Option<TriadQuality> {
    match quality_parent(class.quality()?, AlphabetId::A1)? {
        Quality::Maj | Quality::Maj7 | Quality::Seventh => Some(TriadQuality::Maj),
        Quality::Min | Quality::Min7 => Some(TriadQuality::Min),
        Quality::Dim => Some(TriadQuality::Dim),
        _ => None,
    }
}

/// The harmonic degree of a chord in a key: a numeral when the chord's root
/// sits on a scale degree and its reduced triad matches the diatonic triad
/// on that degree, non-diatonic otherwise.
pub fn degree_of(class: &ChordClass, key: Option<&Key>) -> Result<DegreeOutcome, AnalyzerError> {
    let key = key.ok_or(AnalyzerError::MissingKey)?;
    let (Some(root), Some(triad)) = (class.root(), triad_quality(class)) else {
        return Ok(DegreeOutcome::NonDiatonic);
    };
    let position = key.tonic.interval_to(root);
    for &(semitones, degree, quality) in diatonic_table(key.mode) {
        if semitones == position {
            return Ok(if quality == triad {
                DegreeOutcome::Diatonic(DegreeNumeral { degree, quality })
            } else {
                DegreeOutcome::NonDiatonic
            });
        }
    }
    Ok(DegreeOutcome::NonDiatonic)
}

/// Canonical unordered tag for a degree substitution, e.g. `I~vi`.
pub fn degree_pair_tag(a: DegreeNumeral, b: DegreeNumeral) -> String {
    let (first, second) = if a.order_key() <= b.order_key() {
        (a, b)
    } else {
        (b, a)
    };
    format!("{first}~{second}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Weighting {
    /// Weight each error by its duration in seconds.
    Duration,
    /// Weight each error equally.
    Count,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub weighting: Weighting,
    /// Degree pairs other than the six conventional ones are reported only
    /// when their fraction reaches this threshold.
    pub degree_pair_threshold: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            weighting: Weighting::Duration,
            degree_pair_threshold: 0.0,
        }
    }
}

/// Degree pairs always reported, matching the conventional table columns.
pub const NAMED_DEGREE_PAIRS: [&str; 6] = ["I~IV", "I~V", "IV~V", "I~vi", "IV~ii", "I~iii"];

/// Aggregate statistics over a set of error pairs.
///
/// Rule fractions are independent (an error may satisfy several rules);
/// `explained_fraction` counts each error at most once. Fractions over all
/// errors use the full weight as denominator; the degree fields are
/// fractions of the errors whose target is diatonic in the annotated key.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ErrorReport {
    pub weighting: Weighting,
    pub total_errors: usize,
    pub total_duration: f64,
    /// Fraction of errors matching at least one substitution rule.
    pub explained_fraction: f64,
    pub rule_fractions: BTreeMap<String, f64>,
    /// Fraction of all errors whose target is non-diatonic (keyed errors
    /// only can contribute; keyless errors are reported separately).
    pub non_diatonic_target_fraction: f64,
    /// Fraction of all errors carrying no key annotation.
    pub keyless_fraction: f64,
    pub diatonic_target_errors: usize,
    /// Of diatonic-target errors: fraction predicting outside the key.
    pub non_diatonic_prediction_fraction: f64,
    /// Of diatonic-target errors: fraction predicting the same degree.
    pub degree_preserving_fraction: f64,
    /// Of diatonic-target errors: fraction per unordered degree pair.
    pub degree_pair_fractions: BTreeMap<String, f64>,
}

/// Classify every error pair and aggregate the report.
pub fn analyze(errors: &[ErrorPair], options: &AnalyzeOptions) -> ErrorReport {
    let weight = |pair: &ErrorPair| match options.weighting {
        Weighting::Duration => pair.duration,
        Weighting::Count => 1.0,
    };
    let total_weight: f64 = errors.iter().map(weight).sum();
    let total_duration: f64 = errors.iter().map(|p| p.duration).sum();

    let mut explained = 0.0;
    let mut rule_weights: BTreeMap<&str, f64> = SubstitutionRule::ALL
        .iter()
        .map(|r| (r.name(), 0.0))
        .collect();
    let mut keyless = 0.0;
    let mut non_diatonic_target = 0.0;
    let mut diatonic_weight = 0.0;
    let mut diatonic_count = 0usize;
    let mut non_diatonic_pred = 0.0;
    let mut degree_preserving = 0.0;
    let mut pair_weights: BTreeMap<String, f64> = BTreeMap::new();

    for pair in errors {
        let w = weight(pair);
        let rules = match_substitutions(pair);
        if !rules.is_empty() {
            explained += w;
        }
        for rule in rules {
            *rule_weights.get_mut(rule.name()).unwrap() += w;
        }
        let Some(key) = pair.key.as_ref() else {
            keyless += w;
            continue;
        };
        let target_degree = degree_of(&pair.target, Some(key)).unwrap();
        let predicted_degree = degree_of(&pair.predicted, Some(key)).unwrap();
        match target_degree {
            DegreeOutcome::NonDiatonic => non_diatonic_target += w,
            DegreeOutcome::Diatonic(target_numeral) => {
                diatonic_weight += w;
                diatonic_count += 1;
                match predicted_degree {
                    DegreeOutcome::NonDiatonic => non_diatonic_pred += w,
                    DegreeOutcome::Diatonic(predicted_numeral) => {
                        if predicted_numeral == target_numeral {
                            degree_preserving += w;
                        } else {
                            *pair_weights
                                .entry(degree_pair_tag(target_numeral, predicted_numeral))
                                .or_insert(0.0) += w;
                        }
                    }
                }
            }
        }
    }

    let frac = |x: f64, denom: f64| if denom > 0.0 { x / denom } else { 0.0 };
    let mut degree_pair_fractions: BTreeMap<String, f64> = NAMED_DEGREE_PAIRS
        .iter()
        .map(|&t| (t.to_owned(), 0.0))
        .collect();
    for (tag, w) in pair_weights {
        let fraction = frac(w, diatonic_weight);
        if NAMED_DEGREE_PAIRS.contains(&tag.as_str())
            || fraction >= options.degree_pair_threshold
        {
            degree_pair_fractions.insert(tag, fraction);
        }
    }

    ErrorReport {
        weighting: options.weighting,
        total_errors: errors.len(),
        total_duration,
        explained_fraction: frac(explained, total_weight),
        rule_fractions: rule_weights
            .into_iter()
            .map(|(name, w)| (name.to_owned(), frac(w, total_weight)))
            .collect(),
        non_diatonic_target_fraction: frac(non_diatonic_target, total_weight),
        keyless_fraction: frac(keyless, total_weight),
        diatonic_target_errors: diatonic_count,
        non_diatonic_prediction_fraction: frac(non_diatonic_pred, diatonic_weight),
        degree_preserving_fraction: frac(degree_preserving, diatonic_weight),
        degree_pair_fractions,
    }
}

/// Intersect reference and estimate tracks over the reference's span and
/// collect the mismatching spans as error pairs, with the key looked up at
/// each span. Key changes split spans, so each pair has a single key.
pub fn align_errors(
    reference: &ChordTrack,
    estimate: &ChordTrack,
    keys: Option<&KeyTrack>,
    alphabet: AlphabetId,
) -> Result<Vec<ErrorPair>, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let (lo, hi) = (reference.start(), reference.end());
    let mut points = vec![lo, hi];
    for s in reference.segments() {
        points.push(s.start);
        points.push(s.end);
    }
    for s in estimate.segments() {
        points.push(s.start);
        points.push(s.end);
    }
    if let Some(keys) = keys {
        for s in keys.segments() {
            points.push(s.start);
            points.push(s.end);
        }
    }
    points.retain(|&t| t >= lo && t <= hi);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut pairs: Vec<ErrorPair> = Vec::new();
    for window in points.windows(2) {
        let (t0, t1) = (window[0], window[1]);
        if t1 <= t0 {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        let target = reference.class_at(mid, alphabet);
        let predicted = estimate.class_at(mid, alphabet);
        if target == predicted {
            continue;
        }
        let key = keys.and_then(|k| k.key_at(mid));
        // Merge with the previous span when nothing changed across the cut.
        if let Some(last) = pairs.last_mut() {
            if last.target == target && last.predicted == predicted && last.key == key {
                last.duration += t1 - t0;
                continue;
            }
        }
        pairs.push(ErrorPair::new(target, predicted, t1 - t0, key));
    }
    Ok(pairs)
}

/// CSV export of classified error pairs: one row per pair with its matched
/// rules and degree outcomes.
pub fn write_pairs_csv<W: std::io::Write>(
    pairs: &[ErrorPair],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "target,predicted,duration,key,rules,target_degree,predicted_degree"
    )?;
    for pair in pairs {
        let rules = match_substitutions(pair)
            .iter()
            .map(|r| r.name())
            .collect::<Vec<_>>()
            .join("+");
        let (key, target_degree, predicted_degree) = match pair.key.as_ref() {
            Some(key) => (
                key.to_string(),
                degree_of(&pair.target, Some(key)).unwrap().to_string(),
                degree_of(&pair.predicted, Some(key)).unwrap().to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            pair.target.label(),
            pair.predicted.label(),
            pair.duration,
            key,
            rules,
            target_degree,
            predicted_degree
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::class_of;
    use crate::evaluation::parse_lab;
    use crate::syntax::ChordLabel;

    fn class(s: &str) -> ChordClass {
        class_of(&ChordLabel::parse(s).unwrap(), AlphabetId::A2)
    }

    fn pair(target: &str, predicted: &str) -> ErrorPair {
        ErrorPair::new(class(target), class(predicted), 1.0, Some(c_major()))
    }

    fn c_major() -> Key {
        Key {
            tonic: PitchClass::new(0),
            mode: KeyMode::Major,
        }
    }

    fn rule_names(pair: &ErrorPair) -> Vec<&'static str> {
        match_substitutions(pair).iter().map(|r| r.name()).collect()
    }

    #[test]
    fn inclusion_in_correct_triad() {
        assert_eq!(rule_names(&pair("C:maj7", "C:maj")), vec!["incl_maj"]);
        assert_eq!(rule_names(&pair("C:min7", "C:min")), vec!["incl_min"]);
        // Same A0 triad but neither pitch set contains the other.
        assert!(rule_names(&pair("C:maj7", "C:7")).is_empty());
    }

    #[test]
    fn relative_substitutions_are_directional() {
        assert_eq!(rule_names(&pair("C:maj", "A:min")), vec!["rel_m"]);
        assert_eq!(rule_names(&pair("A:min", "C:maj")), vec!["rel_M"]);
    }

    #[test]
    fn tonic_substitution_two() {
        assert_eq!(rule_names(&pair("C:maj7", "E:min7")), vec!["tonic_subs_2"]);
        assert_eq!(rule_names(&pair("E:min", "C:maj")), vec!["tonic_subs_2"]);
    }

    #[test]
    fn mode_flips_on_same_root() {
        assert_eq!(rule_names(&pair("C:maj", "C:min")), vec!["M_to_m"]);
        assert_eq!(rule_names(&pair("D:min", "D:maj")), vec!["m_to_M"]);
    }

    #[test]
    fn tritone_substitution_requires_dominants() {
        assert_eq!(rule_names(&pair("G:7", "C#:7")), vec!["tritone_subs"]);
        assert!(rule_names(&pair("G:maj", "C#:maj")).is_empty());
    }

    #[test]
    fn substitute_dominant_is_a_fifth_above() {
        assert_eq!(rule_names(&pair("C:maj", "G:7")), vec!["subs_dominant"]);
        assert!(!rule_names(&pair("C:maj", "F:7")).contains(&"subs_dominant"));
    }

    #[test]
    fn dim7_equivalence_mod_minor_thirds() {
        let p = pair("C:dim7", "D#:dim7");
        assert_eq!(rule_names(&p), vec!["dim7_equiv"]);
        // Cross-module consistency: those pairs are at pitch distance zero.
        assert_eq!(crate::distance::d2(&p.target, &p.predicted).unwrap(), 0.0);
        assert!(rule_names(&pair("C:dim7", "C#:dim7")).is_empty());
    }

    #[test]
    fn degree_examples_in_c_major() {
        let key = c_major();
        assert_eq!(
            degree_of(&class("A:min"), Some(&key)).unwrap().to_string(),
            "vi"
        );
        assert_eq!(
            degree_of(&class("C#:maj"), Some(&key)).unwrap(),
            DegreeOutcome::NonDiatonic
        );
        assert_eq!(
            degree_of(&class("D:min7"), Some(&key)).unwrap().to_string(),
            "ii"
        );
        assert_eq!(
            degree_of(&class("B:hdim7"), Some(&key)).unwrap().to_string(),
            "vii°"
        );
        // Root on a scale degree but the wrong triad quality.
        assert_eq!(
            degree_of(&class("C:min"), Some(&key)).unwrap(),
            DegreeOutcome::NonDiatonic
        );
        assert_eq!(
            degree_of(&class("N"), Some(&key)).unwrap(),
            DegreeOutcome::NonDiatonic
        );
    }

    #[test]
    fn missing_key_is_an_error() {
        assert_eq!(
            degree_of(&class("C:maj"), None),
            Err(AnalyzerError::MissingKey)
        );
    }

    #[test]
    fn natural_minor_degrees() {
        let key = Key {
            tonic: PitchClass::new(9),
            mode: KeyMode::Minor,
        };
        assert_eq!(
            degree_of(&class("A:min"), Some(&key)).unwrap().to_string(),
            "i"
        );
        assert_eq!(
            degree_of(&class("C:maj"), Some(&key)).unwrap().to_string(),
            "III"
        );
        assert_eq!(
            degree_of(&class("G:7"), Some(&key)).unwrap().to_string(),
            "VII"
        );
        assert_eq!(
            degree_of(&class("B:dim"), Some(&key)).unwrap().to_string(),
            "ii°"
        );
    }

    #[test]
    fn degree_is_transposition_equivariant() {
        for t in 0..12 {
            let key = Key {
                tonic: PitchClass::new(t),
                mode: KeyMode::Major,
            };
            for (chord, expected) in [("C:maj", "I"), ("F:maj7", "IV"), ("A:min", "vi")] {
                let shifted = class_of(
                    &ChordLabel::parse(chord).unwrap().transpose(t),
                    AlphabetId::A2,
                );
                assert_eq!(degree_of(&shifted, Some(&key)).unwrap().to_string(), expected);
            }
        }
    }

    #[test]
    fn degree_pair_tags_put_major_first() {
        let numeral = |s: &str, q: TriadQuality, d: u8| {
            let n = DegreeNumeral { degree: d, quality: q };
            assert_eq!(n.to_string(), s);
            n
        };
        let i = numeral("I", TriadQuality::Maj, 1);
        let iv = numeral("IV", TriadQuality::Maj, 4);
        let ii = numeral("ii", TriadQuality::Min, 2);
        let vi = numeral("vi", TriadQuality::Min, 6);
        assert_eq!(degree_pair_tag(i, iv), "I~IV");
        assert_eq!(degree_pair_tag(iv, i), "I~IV");
        assert_eq!(degree_pair_tag(vi, i), "I~vi");
        assert_eq!(degree_pair_tag(ii, iv), "IV~ii");
    }

    #[test]
    fn empty_error_list_gives_zero_report() {
        let report = analyze(&[], &AnalyzeOptions::default());
        assert_eq!(report.total_errors, 0);
        assert_eq!(report.explained_fraction, 0.0);
        assert!(report.rule_fractions.values().all(|&v| v == 0.0));
        assert_eq!(report.non_diatonic_target_fraction, 0.0);
        assert_eq!(report.diatonic_target_errors, 0);
    }

    #[test]
    fn single_inclusion_pair_report() {
        let report = analyze(&[pair("C:maj7", "C:maj")], &AnalyzeOptions::default());
        assert_eq!(report.total_errors, 1);
        assert_eq!(report.explained_fraction, 1.0);
        assert_eq!(report.rule_fractions["incl_maj"], 1.0);
        assert_eq!(report.rule_fractions["rel_m"], 0.0);
        // Same degree on both sides: preserved, not a substitution pair.
        assert_eq!(report.degree_preserving_fraction, 1.0);
        assert!(report
            .degree_pair_fractions
            .values()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn duration_and_count_weighting_coincide_on_uniform_durations() {
        let pairs = vec![pair("C:maj", "A:min"), pair("C:maj", "G:7")];
        let by_duration = analyze(
            &pairs,
            &AnalyzeOptions {
                weighting: Weighting::Duration,
                ..AnalyzeOptions::default()
            },
        );
        let by_count = analyze(
            &pairs,
            &AnalyzeOptions {
                weighting: Weighting::Count,
                ..AnalyzeOptions::default()
            },
        );
        assert_eq!(by_duration.explained_fraction, by_count.explained_fraction);
        assert_eq!(by_duration.rule_fractions, by_count.rule_fractions);
    }

    #[test]
    fn align_identical_tracks_is_empty() {
        let t = parse_lab("0.0 2.0 C:maj").unwrap();
        assert!(align_errors(&t, &t, None, AlphabetId::A0).unwrap().is_empty());
    }

    #[test]
    fn align_worked_example() {
        let reference = parse_lab("0.0 2.0 C:maj").unwrap();
        let estimate = parse_lab("0.0 2.0 A:min").unwrap();
        let keys = crate::evaluation::parse_key_lab("0.0 10.0 C:major").unwrap();
        let pairs = align_errors(&reference, &estimate, Some(&keys), AlphabetId::A0).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].duration, 2.0);
        let key = pairs[0].key.unwrap();
        let t = degree_of(&pairs[0].target, Some(&key)).unwrap();
        let p = degree_of(&pairs[0].predicted, Some(&key)).unwrap();
        let (DegreeOutcome::Diatonic(t), DegreeOutcome::Diatonic(p)) = (t, p) else {
            panic!("expected diatonic degrees");
        };
        assert_eq!(degree_pair_tag(t, p), "I~vi");
    }

    #[test]
    fn key_gap_excluded_from_degree_stats_only() {
        let reference = parse_lab("0.0 2.0 C:maj").unwrap();
        let estimate = parse_lab("0.0 2.0 C:min").unwrap();
        // Key annotation stops before the error.
        let keys = crate::evaluation::parse_key_lab("5.0 10.0 C:major").unwrap();
        let pairs = align_errors(&reference, &estimate, Some(&keys), AlphabetId::A0).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].key.is_none());
        let report = analyze(&pairs, &AnalyzeOptions::default());
        assert_eq!(report.rule_fractions["M_to_m"], 1.0);
        assert_eq!(report.keyless_fraction, 1.0);
        assert_eq!(report.diatonic_target_errors, 0);
    }

    #[test]
    fn align_splits_on_key_changes() {
        let reference = parse_lab("0.0 4.0 C:maj").unwrap();
        let estimate = parse_lab("0.0 4.0 A:min").unwrap();
        let keys =
            crate::evaluation::parse_key_lab("0.0 2.0 C:major\n2.0 4.0 G:major").unwrap();
        let pairs = align_errors(&reference, &estimate, Some(&keys), AlphabetId::A0).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].key.unwrap().to_string(), "C:major");
        assert_eq!(pairs[1].key.unwrap().to_string(), "G:major");
    }

    #[test]
    fn pairs_csv_lists_rules_and_degrees() {
        let pairs = vec![pair("C:maj7", "C:maj")];
        let mut buf = Vec::new();
        write_pairs_csv(&pairs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("C:maj7,C:maj,1,C:major,incl_maj,I,I"));
    }
}
