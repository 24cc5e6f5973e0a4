//! Optical elements as exact state transformations.
//!
//! Each element acts on declared modes and maps every photon independently;
//! amplitudes stay in the ±(1/√2)^k ring. Photons in modes an element does
//! not declare pass through untouched (unless strict wiring is requested),
//! which is how already-finished cascade outputs coexist with later stages.

use std::collections::BTreeMap;
use std::fmt;

use crate::amplitude::{Amplitude, Sign};
use crate::error::{Error, Result};
use crate::photon::{Mode, Photon, Polarization, TimeBin};
use crate::state::{PhotonState, PhotonTerm};

/// Half-wave plate angles with exact matrices. Other angles would produce
/// coefficients outside the amplitude ring and are rejected up front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwpAngle {
    /// 22.5°: |H⟩ → (|H⟩+|V⟩)/√2, |V⟩ → (|H⟩−|V⟩)/√2.
    ///
    /// The V row is the standard half-wave-plate convention (rotation by 2θ
    /// with a reflection); the circuits here only ever send |H⟩ through a
    /// 22.5° plate, so the V row is untestable against them.
    Deg22_5,
    /// 45°: |H⟩ ↔ |V⟩.
    Deg45,
}

impl HwpAngle {
    pub fn from_degrees(theta: f64) -> Result<HwpAngle> {
        if theta == 22.5 {
            Ok(HwpAngle::Deg22_5)
        } else if theta == 45.0 {
            Ok(HwpAngle::Deg45)
        } else {
            Err(Error::UnsupportedAngle(theta))
        }
    }

    pub fn degrees(&self) -> f64 {
        match self {
            HwpAngle::Deg22_5 => 22.5,
            HwpAngle::Deg45 => 45.0,
        }
    }
}

/// Polarizing-beam-splitter wiring: (input mode, polarization) → output mode.
/// At most two input and two output modes per pass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PbsWiring {
    routes: BTreeMap<(Mode, Polarization), Mode>,
}

impl PbsWiring {
    pub fn new() -> PbsWiring {
        PbsWiring::default()
    }

    pub fn route(mut self, input: impl Into<Mode>, pol: Polarization, output: impl Into<Mode>) -> PbsWiring {
        self.routes.insert((input.into(), pol), output.into());
        self
    }

    pub fn inputs(&self) -> Vec<&Mode> {
        let mut modes: Vec<&Mode> = self.routes.keys().map(|(m, _)| m).collect();
        modes.dedup();
        modes
    }

    pub fn outputs(&self) -> Vec<&Mode> {
        let mut modes: Vec<&Mode> = self.routes.values().collect();
        modes.sort();
        modes.dedup();
        modes
    }

    /// The reverse wiring: sending a routed photon through the inverse
    /// restores its original mode.
    pub fn inverted(&self) -> PbsWiring {
        let mut inv = PbsWiring::new();
        for ((input, pol), output) in &self.routes {
            inv.routes.insert((output.clone(), *pol), input.clone());
        }
        inv
    }

    fn lookup(&self, mode: &Mode, pol: Polarization) -> Option<&Mode> {
        self.routes.get(&(mode.clone(), pol))
    }

    fn touches(&self, mode: &Mode) -> bool {
        self.routes.keys().any(|(m, _)| m == mode)
    }
}

impl fmt::Display for PbsWiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .routes
            .iter()
            .map(|((m, p), out)| format!("{m}:{p}→{out}"))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Frequency class seen by a dichroic mirror.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FreqClass {
    Pump,
    DownConverted,
}

/// Dichroic-mirror wiring: (mode, frequency class) → output mode.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DmWiring {
    routes: BTreeMap<(Mode, FreqClass), Mode>,
}

impl DmWiring {
    pub fn new() -> DmWiring {
        DmWiring::default()
    }

    pub fn route(mut self, input: impl Into<Mode>, class: FreqClass, output: impl Into<Mode>) -> DmWiring {
        self.routes.insert((input.into(), class), output.into());
        self
    }

    fn lookup(&self, mode: &Mode, class: FreqClass) -> Option<&Mode> {
        self.routes.get(&(mode.clone(), class))
    }

    pub fn routes(&self) -> impl Iterator<Item = (&(Mode, FreqClass), &Mode)> {
        self.routes.iter()
    }
}

impl fmt::Display for DmWiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .routes
            .iter()
            .map(|((m, c), out)| {
                let class = match c {
                    FreqClass::Pump => "pump",
                    FreqClass::DownConverted => "dc",
                };
                format!("{m}:{class}→{out}")
            })
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// One optical element with its mode wiring.
#[derive(Debug, Clone, PartialEq)]
pub enum OpticalElement {
    Hwp {
        angle: HwpAngle,
        modes: Vec<Mode>,
    },
    Pbs {
        wiring: PbsWiring,
        strict: bool,
    },
    Npbs {
        in1: Mode,
        in2: Option<Mode>,
        out1: Mode,
        out2: Mode,
    },
    Dm {
        wiring: DmWiring,
    },
    Crystal {
        id: u32,
        modes: Vec<Mode>,
        max_depth: u32,
    },
    LongPass {
        mode: Mode,
    },
    DelayTagger {
        mode: Mode,
        bin: TimeBin,
    },
}

impl OpticalElement {
    /// Apply the element to a state, producing a new state.
    pub fn apply(&self, state: &PhotonState) -> Result<PhotonState> {
        match self {
            OpticalElement::Hwp { angle, modes } => {
                let mut out = state.clone();
                for mode in modes {
                    out = apply_hwp_exact(&out, mode, *angle)?;
                }
                Ok(out)
            }
            OpticalElement::Pbs { wiring, strict } => apply_pbs(state, wiring, *strict),
            OpticalElement::Npbs {
                in1,
                in2,
                out1,
                out2,
            } => apply_npbs_wired(state, in1, in2.as_ref(), out1, out2),
            OpticalElement::Dm { wiring } => apply_dm(state, wiring),
            OpticalElement::Crystal {
                id,
                modes,
                max_depth,
            } => {
                let mut out = state.clone();
                for mode in modes {
                    out = apply_crystal(&out, mode, *id, *max_depth)?;
                }
                Ok(out)
            }
            OpticalElement::LongPass { mode } => Ok(apply_longpass(state, mode)),
            OpticalElement::DelayTagger { mode, bin } => apply_delay_tag(state, mode, *bin),
        }
    }

    /// One deterministic description line, used by the circuit dump.
    pub fn describe(&self) -> String {
        match self {
            OpticalElement::Hwp { angle, modes } => {
                let list: Vec<String> = modes.iter().map(|m| m.to_string()).collect();
                format!("HWP({}°) @ {}", angle.degrees(), list.join(","))
            }
            OpticalElement::Pbs { wiring, .. } => format!("PBS [{wiring}]"),
            OpticalElement::Npbs {
                in1,
                in2,
                out1,
                out2,
            } => match in2 {
                Some(in2) => format!("NPBS ({in1},{in2}) → ({out1}+{out2}, {out1}-{out2})"),
                None => format!("NPBS {in1} → ({out1}+{out2})"),
            },
            OpticalElement::Dm { wiring } => format!("DM [{wiring}]"),
            OpticalElement::Crystal { id, modes, .. } => {
                let list: Vec<String> = modes.iter().map(|m| m.to_string()).collect();
                format!("ppKTP_{id} @ {}", list.join(","))
            }
            OpticalElement::LongPass { mode } => format!("LP @ {mode}"),
            OpticalElement::DelayTagger { mode, bin } => format!("DELAY @ {mode} tag {bin}"),
        }
    }

    pub fn is_crystal(&self) -> bool {
        matches!(self, OpticalElement::Crystal { .. })
    }
}

/// One photon's fate under an element: untouched, or replaced by weighted
/// branches of one or more photons.
enum Fate {
    Keep,
    Branches(Vec<(Amplitude, Vec<Photon>)>),
}

/// Rebuild a state by mapping each photon of each term through `f` and
/// expanding the branch products with exact amplitude bookkeeping.
fn map_photons<F>(state: &PhotonState, f: F) -> Result<PhotonState>
where
    F: Fn(&Photon) -> Result<Fate>,
{
    let mut out = PhotonState::empty();
    for (term, amp) in state.terms() {
        // Each entry: (accumulated amplitude, photons so far).
        let mut branches: Vec<(Amplitude, Vec<Photon>)> = vec![(*amp, Vec::new())];
        for photon in term.photons() {
            match f(photon)? {
                Fate::Keep => {
                    for (_, photons) in branches.iter_mut() {
                        photons.push(photon.clone());
                    }
                }
                Fate::Branches(options) => {
                    let mut next = Vec::with_capacity(branches.len() * options.len());
                    for (acc, photons) in &branches {
                        for (factor, replacement) in &options {
                            let mut grown = photons.clone();
                            grown.extend(replacement.iter().cloned());
                            next.push((*acc * *factor, grown));
                        }
                    }
                    branches = next;
                }
            }
        }
        for (amp, photons) in branches {
            out.add_term(PhotonTerm::new(photons)?, amp)?;
        }
    }
    Ok(out)
}

/// Half-wave plate on one mode at an exact angle given in degrees.
pub fn apply_hwp(state: &PhotonState, mode: &Mode, theta_degrees: f64) -> Result<PhotonState> {
    apply_hwp_exact(state, mode, HwpAngle::from_degrees(theta_degrees)?)
}

fn apply_hwp_exact(state: &PhotonState, mode: &Mode, angle: HwpAngle) -> Result<PhotonState> {
    map_photons(state, |photon| {
        if &photon.mode != mode {
            return Ok(Fate::Keep);
        }
        match angle {
            HwpAngle::Deg45 => {
                let mut flipped = photon.clone();
                flipped.polarization = photon.polarization.flipped();
                Ok(Fate::Branches(vec![(Amplitude::one(), vec![flipped])]))
            }
            HwpAngle::Deg22_5 => {
                let mut h = photon.clone();
                h.polarization = Polarization::H;
                let mut v = photon.clone();
                v.polarization = Polarization::V;
                let second_sign = match photon.polarization {
                    Polarization::H => Sign::Plus,
                    Polarization::V => Sign::Minus,
                };
                Ok(Fate::Branches(vec![
                    (Amplitude::new(Sign::Plus, 1), vec![h]),
                    (Amplitude::new(second_sign, 1), vec![v]),
                ]))
            }
        }
    })
}

/// Polarizing beam splitter: each photon in a wired input mode is relabeled
/// to its polarization's output mode; amplitudes are unchanged.
pub fn apply_pbs(state: &PhotonState, wiring: &PbsWiring, strict: bool) -> Result<PhotonState> {
    map_photons(state, |photon| {
        match wiring.lookup(&photon.mode, photon.polarization) {
            Some(output) => {
                let mut moved = photon.clone();
                moved.mode = output.clone();
                Ok(Fate::Branches(vec![(Amplitude::one(), vec![moved])]))
            }
            None => {
                if strict && !wiring.touches(&photon.mode) {
                    Err(Error::UnwiredMode(photon.mode.to_string()))
                } else if strict {
                    // Mode is declared but this polarization is not routed.
                    Err(Error::UnwiredMode(format!(
                        "{} ({})",
                        photon.mode, photon.polarization
                    )))
                } else {
                    Ok(Fate::Keep)
                }
            }
        }
    })
}

/// 50:50 non-polarizing beam splitter.
///
/// Sign convention: a photon entering `in1` leaves as (out1 + out2)/√2, a
/// photon entering `in2` as (out1 − out2)/√2. This is the single place the
/// convention is chosen; it fixes the relative minus sign on the discarded
/// interferometer port.
pub fn apply_npbs(
    state: &PhotonState,
    in1: &Mode,
    in2: &Mode,
    out1: &Mode,
    out2: &Mode,
) -> Result<PhotonState> {
    apply_npbs_wired(state, in1, Some(in2), out1, out2)
}

fn apply_npbs_wired(
    state: &PhotonState,
    in1: &Mode,
    in2: Option<&Mode>,
    out1: &Mode,
    out2: &Mode,
) -> Result<PhotonState> {
    map_photons(state, |photon| {
        let second_sign = if &photon.mode == in1 {
            Sign::Plus
        } else if in2 == Some(&photon.mode) {
            Sign::Minus
        } else {
            return Ok(Fate::Keep);
        };
        let mut transmitted = photon.clone();
        transmitted.mode = out1.clone();
        let mut reflected = photon.clone();
        reflected.mode = out2.clone();
        Ok(Fate::Branches(vec![
            (Amplitude::new(Sign::Plus, 1), vec![transmitted]),
            (Amplitude::new(second_sign, 1), vec![reflected]),
        ]))
    })
}

/// Down-conversion crystal acting on one mode.
///
/// Every H-polarized photon in the mode is replaced by an ordered (H, V)
/// photon pair in the same mode carrying two fresh child frequency tags; the
/// time bin is copied to both children. V-polarized photons are not phase
/// matched and pass unchanged.
pub fn apply_crystal(
    state: &PhotonState,
    mode: &Mode,
    _crystal_id: u32,
    max_depth: u32,
) -> Result<PhotonState> {
    map_photons(state, |photon| {
        if &photon.mode != mode || photon.polarization != Polarization::H {
            return Ok(Fate::Keep);
        }
        if photon.freq.depth + 1 > max_depth {
            return Err(Error::DepthExceeded {
                mode: mode.to_string(),
                depth: photon.freq.depth + 1,
                max: max_depth,
            });
        }
        let (signal_tag, idler_tag) = photon.freq.children();
        let signal = Photon {
            polarization: Polarization::H,
            mode: photon.mode.clone(),
            timebin: photon.timebin,
            freq: signal_tag,
        };
        let idler = Photon {
            polarization: Polarization::V,
            mode: photon.mode.clone(),
            timebin: photon.timebin,
            freq: idler_tag,
        };
        Ok(Fate::Branches(vec![(
            Amplitude::one(),
            vec![signal, idler],
        )]))
    })
}

/// Dichroic mirror: relabel photons by frequency class.
pub fn apply_dm(state: &PhotonState, wiring: &DmWiring) -> Result<PhotonState> {
    map_photons(state, |photon| {
        let class = if photon.freq.is_pump() {
            FreqClass::Pump
        } else {
            FreqClass::DownConverted
        };
        match wiring.lookup(&photon.mode, class) {
            Some(output) => {
                let mut moved = photon.clone();
                moved.mode = output.clone();
                Ok(Fate::Branches(vec![(Amplitude::one(), vec![moved])]))
            }
            None => Ok(Fate::Keep),
        }
    })
}

/// Long-pass filter: delete every term that still carries a pump-tagged
/// photon in the filtered mode. Remaining amplitudes are kept as-is so that
/// any deletion stays visible to the caller.
pub fn apply_longpass(state: &PhotonState, mode: &Mode) -> PhotonState {
    let mut out = PhotonState::empty();
    for (term, amp) in state.terms() {
        let blocked = term
            .photons()
            .iter()
            .any(|p| &p.mode == mode && p.freq.is_pump());
        if !blocked {
            // Terms survive unchanged; re-adding canonical terms cannot fail.
            out.add_term(term.clone(), *amp).expect("canonical term");
        }
    }
    out
}

/// Tag photons in one interferometer arm with a time bin.
pub fn apply_delay_tag(state: &PhotonState, mode: &Mode, bin: TimeBin) -> Result<PhotonState> {
    map_photons(state, |photon| {
        if &photon.mode != mode {
            return Ok(Fate::Keep);
        }
        if photon.timebin != TimeBin::None {
            return Err(Error::DoubleTagging(mode.to_string()));
        }
        let mut tagged = photon.clone();
        tagged.timebin = bin;
        Ok(Fate::Branches(vec![(Amplitude::one(), vec![tagged])]))
    })
}

/// Tag the short arm with T1 and the long arm with T2.
pub fn apply_delay_tagger(
    state: &PhotonState,
    short_mode: &Mode,
    long_mode: &Mode,
) -> Result<PhotonState> {
    let tagged = apply_delay_tag(state, short_mode, TimeBin::T1)?;
    apply_delay_tag(&tagged, long_mode, TimeBin::T2)
}
