//! Multi-photon terms and states with exact amplitudes.
//!
//! A [`PhotonTerm`] is a canonically ordered product ket such as
//! |H⟩_{c_2}|V⟩_{c_1}|H⟩_{b_2}; a [`PhotonState`] is a map from terms to
//! exact amplitudes. Photons are distinguishable records, so term identity
//! covers the whole record including the frequency tag: photons from
//! different down-conversion events never interfere. State comparison
//! ([`states_equal`]) works on the tag-stripped physical content
//! (polarization, mode, time bin), which is what the closed-form target
//! states specify — they carry no tag assignment.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::amplitude::{Amplitude, DyadicSum, Sign};
use crate::error::{Error, Result};
use crate::photon::{FreqTag, Mode, Photon, Polarization, TimeBin};

/// An ordered product of photons. Construct via [`PhotonTerm::new`], which
/// canonicalizes and enforces single occupancy.
#[derive(Debug, Clone)]
pub struct PhotonTerm {
    photons: Vec<Photon>,
}

impl PhotonTerm {
    /// Canonicalize a photon list into a term: sort by
    /// (mode, time bin, polarization, frequency) and reject duplicate
    /// occupancy. Idempotent.
    pub fn new(mut photons: Vec<Photon>) -> Result<PhotonTerm> {
        photons.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        for pair in photons.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateOccupancy(pair[0].to_string()));
            }
        }
        Ok(PhotonTerm { photons })
    }

    pub fn photons(&self) -> &[Photon] {
        &self.photons
    }

    pub fn len(&self) -> usize {
        self.photons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.photons.is_empty()
    }

    /// True if any photon sits in `mode`.
    pub fn occupies(&self, mode: &Mode) -> bool {
        self.photons.iter().any(|p| &p.mode == mode)
    }

    /// True if any photon carries a pump (root) frequency tag.
    pub fn has_pump_tag(&self) -> bool {
        self.photons.iter().any(|p| p.freq.is_pump())
    }

    /// The physical content of the term with frequency tags erased, in
    /// canonical order.
    pub fn stripped(&self) -> StrippedTerm {
        self.photons
            .iter()
            .map(|p| (p.mode.clone(), p.timebin, p.polarization))
            .collect()
    }
}

/// A term's physical content: per photon, (mode, time bin, polarization).
pub type StrippedTerm = Vec<(Mode, TimeBin, Polarization)>;

impl PartialEq for PhotonTerm {
    fn eq(&self, other: &Self) -> bool {
        self.photons == other.photons
    }
}

impl Eq for PhotonTerm {}

impl PartialOrd for PhotonTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PhotonTerm {
    fn cmp(&self, other: &Self) -> Ordering {
        self.photons
            .iter()
            .map(|p| p.sort_key())
            .cmp(other.photons.iter().map(|p| p.sort_key()))
    }
}

impl std::hash::Hash for PhotonTerm {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.photons.hash(state);
    }
}

impl fmt::Display for PhotonTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.photons.is_empty() {
            return write!(f, "|vac⟩");
        }
        for p in &self.photons {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// A superposition of canonical terms with exact amplitudes. Zero
/// amplitudes are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhotonState {
    terms: BTreeMap<PhotonTerm, Amplitude>,
}

impl PhotonState {
    pub fn empty() -> PhotonState {
        PhotonState::default()
    }

    /// A single-term state with amplitude +1.
    pub fn single(term: PhotonTerm) -> PhotonState {
        let mut state = PhotonState::empty();
        state.terms.insert(term, Amplitude::one());
        state
    }

    pub fn from_terms(entries: Vec<(Amplitude, PhotonTerm)>) -> Result<PhotonState> {
        let mut state = PhotonState::empty();
        for (amp, term) in entries {
            state.add_term(term, amp)?;
        }
        Ok(state)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PhotonTerm, &Amplitude)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, term: &PhotonTerm) -> Option<Amplitude> {
        self.terms.get(term).copied()
    }

    /// Amplitude of the unique term matching `term`'s physical content,
    /// regardless of frequency-tag assignment. `None` if no term or more
    /// than one term matches.
    pub fn amplitude_ignoring_tags(&self, term: &PhotonTerm) -> Option<Amplitude> {
        let key = term.stripped();
        let mut found = None;
        for (t, amp) in &self.terms {
            if t.stripped() == key {
                if found.is_some() {
                    return None;
                }
                found = Some(*amp);
            }
        }
        found
    }

    /// Add `amp`·`term`. Amplitudes on identical terms combine exactly;
    /// exact cancellation removes the entry.
    pub fn add_term(&mut self, term: PhotonTerm, amp: Amplitude) -> Result<()> {
        match self.terms.get(&term).copied() {
            None => {
                self.terms.insert(term, amp);
            }
            Some(existing) => match existing.checked_add(amp)? {
                None => {
                    self.terms.remove(&term);
                }
                Some(sum) => {
                    self.terms.insert(term, sum);
                }
            },
        }
        Ok(())
    }

    /// Exact Σ|amp|² over all terms.
    pub fn norm_squared(&self) -> DyadicSum {
        let mut sum = DyadicSum::zero();
        for amp in self.terms.values() {
            sum.add_pow2(amp.prob_log2_denom());
        }
        sum
    }

    /// True iff Σ|amp|² = 1 exactly.
    pub fn is_normalized(&self) -> bool {
        self.norm_squared().is_one()
    }

    /// Flip the sign of every amplitude.
    pub fn negated(&self) -> PhotonState {
        let terms = self
            .terms
            .iter()
            .map(|(t, a)| (t.clone(), a.negated()))
            .collect();
        PhotonState { terms }
    }

    /// Split off every term that occupies one of `modes`.
    ///
    /// Returns the kept state (amplitudes untouched) and the exact
    /// probability mass of the removed terms. Renormalization is left to
    /// the caller so that nothing is discarded silently.
    pub fn partition_by_modes(&self, modes: &[Mode]) -> (PhotonState, DyadicSum) {
        let mut kept = PhotonState::empty();
        let mut dropped = DyadicSum::zero();
        for (term, amp) in &self.terms {
            if modes.iter().any(|m| term.occupies(m)) {
                dropped.add_pow2(amp.prob_log2_denom());
            } else {
                kept.terms.insert(term.clone(), *amp);
            }
        }
        (kept, dropped)
    }

    /// Rescale so that Σ|amp|² = 1, staying inside the exact ring.
    ///
    /// Only masses of the form 2^(−t) can be renormalized exactly; anything
    /// else is an error rather than an approximation.
    pub fn renormalized(&self) -> Result<PhotonState> {
        let mass = self.norm_squared();
        let t = mass
            .as_pow2()
            .ok_or_else(|| Error::NonRenormalizableMass(mass.to_string()))?;
        if t == 0 {
            return Ok(self.clone());
        }
        let mut terms = BTreeMap::new();
        for (term, amp) in &self.terms {
            if amp.half_pow < t {
                return Err(Error::NonRenormalizableMass(format!(
                    "amplitude {amp} cannot absorb 2^{}",
                    t
                )));
            }
            terms.insert(term.clone(), Amplitude::new(amp.sign, amp.half_pow - t));
        }
        Ok(PhotonState { terms })
    }

    /// Deterministic text rendering: one term per line in canonical order,
    /// amplitudes as ±(1/√2)^k.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(term, amp)| format!("{amp} {term}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Audit the frequency tags of every term: per pump root, the tags must
    /// be exactly the leaves of one binary down-conversion tree (unique,
    /// prefix-free, and energy-complete), and the number of roots must match
    /// the number of injected pump photons.
    pub fn check_energy_conservation(&self, expected_roots: usize) -> Result<()> {
        for term in self.terms.keys() {
            let mut by_root: BTreeMap<u32, Vec<FreqTag>> = BTreeMap::new();
            for p in term.photons() {
                by_root.entry(p.freq.root).or_default().push(p.freq);
            }
            if by_root.len() != expected_roots {
                return Err(Error::InvalidQuery(format!(
                    "term {term} has {} pump roots, expected {expected_roots}",
                    by_root.len()
                )));
            }
            for tags in by_root.values() {
                check_leaf_set(tags, term)?;
            }
        }
        Ok(())
    }
}

/// Check that `tags` is the exact leaf set of one full binary tree:
/// no duplicates, prefix-free, and Kraft sum Σ 2^(−depth) equal to 1.
fn check_leaf_set(tags: &[FreqTag], term: &PhotonTerm) -> Result<()> {
    let mut sorted = tags.to_vec();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::InvalidQuery(format!(
                "term {term} repeats frequency tag {}",
                pair[0]
            )));
        }
    }
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if a.is_ancestor_of(b) || b.is_ancestor_of(a) {
                return Err(Error::InvalidQuery(format!(
                    "term {term} has nested frequency tags {a} and {b}"
                )));
            }
        }
    }
    let mut kraft = DyadicSum::zero();
    for tag in &sorted {
        kraft.add_pow2(tag.depth);
    }
    if !kraft.is_one() {
        return Err(Error::InvalidQuery(format!(
            "term {term} does not conserve pump energy (Kraft sum {kraft})"
        )));
    }
    Ok(())
}

fn stripped_entries(state: &PhotonState) -> Vec<(StrippedTerm, Amplitude)> {
    let mut entries: Vec<_> = state
        .terms
        .iter()
        .map(|(term, amp)| (term.stripped(), *amp))
        .collect();
    entries.sort();
    entries
}

/// Exact equality of two states' physical content (amplitudes and
/// tag-stripped kets, compared as multisets), optionally up to a global −1.
pub fn states_equal(a: &PhotonState, b: &PhotonState, up_to_global_phase: bool) -> bool {
    let ea = stripped_entries(a);
    let eb = stripped_entries(b);
    if ea == eb {
        return true;
    }
    if !up_to_global_phase {
        return false;
    }
    ea == stripped_entries(&b.negated())
}

/// One branch of a two-branch GHZ pattern: per photon slot, the mode and
/// time bin it should occupy.
pub type BranchPattern = [(Mode, TimeBin)];

/// Build the four-term product state
/// (1/2)·(|pol⟩ + |pol̄⟩) ⊗ (branch A + branch B)
/// and compare it against `state` up to a global phase.
///
/// The polarization pattern fills branch slots in order; its flipped partner
/// supplies the second GHZ component. Spatial-mode factorization uses two
/// mode branches with empty time bins; time-bin factorization uses the same
/// modes in both branches with T1/T2 bins.
pub fn tensor_factor_check(
    state: &PhotonState,
    pol_pattern: &[Polarization],
    branch_a: &BranchPattern,
    branch_b: &BranchPattern,
) -> Result<bool> {
    if pol_pattern.len() != branch_a.len() || pol_pattern.len() != branch_b.len() {
        return Err(Error::PatternArity {
            expected: pol_pattern.len(),
            got: branch_a.len().max(branch_b.len()),
        });
    }
    if state.is_empty() {
        return Err(Error::InvalidQuery("empty state".into()));
    }
    let flipped: Vec<Polarization> = pol_pattern.iter().map(|p| p.flipped()).collect();
    let mut expected = PhotonState::empty();
    for pols in [pol_pattern, flipped.as_slice()] {
        for branch in [branch_a, branch_b] {
            let photons = pols
                .iter()
                .zip(branch.iter())
                .map(|(&pol, (mode, bin))| {
                    Photon::new(pol, mode.label().as_str()).with_timebin(*bin)
                })
                .collect();
            expected.add_term(PhotonTerm::new(photons)?, Amplitude::new(Sign::Plus, 2))?;
        }
    }
    Ok(states_equal(state, &expected, true))
}
