//! Photon labels: polarization, spatial mode, time bin, and frequency tag.

use std::fmt;

/// Photon polarization, horizontal or vertical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    /// H↔V. An involution.
    pub fn flipped(self) -> Polarization {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "H"),
            Polarization::V => write!(f, "V"),
        }
    }
}

/// Time-bin label. `None` is used throughout the polarization–spatial
/// scheme; the polarization–time-bin scheme tags every photon with the
/// short-arm bin `T1` or the long-arm bin `T2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum TimeBin {
    #[default]
    None,
    T1,
    T2,
}

impl fmt::Display for TimeBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBin::None => Ok(()),
            TimeBin::T1 => write!(f, "t1"),
            TimeBin::T2 => write!(f, "t2"),
        }
    }
}

/// Spatial-mode label, e.g. `a_2`, `c_1`, `4`.
///
/// Stored as a family string plus an optional numeric index so that mode
/// ordering is numeric (`d_2` < `d_10`), which keeps canonical term order
/// stable for every cascade size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    family: String,
    index: Option<u32>,
}

impl Mode {
    /// Parse a label of the form `family`, `family_index`, or a bare index.
    pub fn new(label: &str) -> Mode {
        let trimmed = label.trim();
        let digits_at = trimmed
            .char_indices()
            .rev()
            .take_while(|(_, c)| c.is_ascii_digit())
            .last()
            .map(|(i, _)| i);
        match digits_at {
            Some(i) if i < trimmed.len() => {
                let index = trimmed[i..].parse::<u32>().ok();
                let mut family = &trimmed[..i];
                if let Some(stripped) = family.strip_suffix('_') {
                    family = stripped;
                }
                Mode {
                    family: family.to_string(),
                    index,
                }
            }
            _ => Mode {
                family: trimmed.to_string(),
                index: None,
            },
        }
    }

    pub fn indexed(family: &str, index: u32) -> Mode {
        Mode {
            family: family.to_string(),
            index: Some(index),
        }
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn index(&self) -> Option<u32> {
        self.index
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.family.is_empty(), self.index) {
            (false, Some(i)) => write!(f, "{}_{}", self.family, i),
            (false, None) => write!(f, "{}", self.family),
            (true, Some(i)) => write!(f, "{i}"),
            (true, None) => write!(f, "?"),
        }
    }
}

impl From<&str> for Mode {
    fn from(label: &str) -> Mode {
        Mode::new(label)
    }
}

/// Symbolic frequency tag.
///
/// A pump photon carries the root tag of its own binary tree; every
/// down-conversion replaces one tag with its two children. The leaf set of a
/// term therefore records how the pump energy was partitioned, which is the
/// discrete form of ħω_p = Σ ħω_i checked by the energy audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreqTag {
    /// Which injected pump photon this tag descends from.
    pub root: u32,
    /// Depth in the down-conversion tree; 0 is the pump itself.
    pub depth: u32,
    /// Left/right choices from the root, packed little-endian.
    pub path: u64,
}

impl FreqTag {
    pub fn pump(root: u32) -> FreqTag {
        FreqTag {
            root,
            depth: 0,
            path: 0,
        }
    }

    pub fn is_pump(&self) -> bool {
        self.depth == 0
    }

    /// The two fresh child tags of one down-conversion event.
    pub fn children(&self) -> (FreqTag, FreqTag) {
        assert!(self.depth < 63, "frequency tree too deep");
        let left = FreqTag {
            root: self.root,
            depth: self.depth + 1,
            path: self.path << 1,
        };
        let right = FreqTag {
            root: self.root,
            depth: self.depth + 1,
            path: (self.path << 1) | 1,
        };
        (left, right)
    }

    /// True if `self` lies on the path from the root to `other`.
    pub fn is_ancestor_of(&self, other: &FreqTag) -> bool {
        self.root == other.root
            && self.depth < other.depth
            && (other.path >> (other.depth - self.depth)) == self.path
    }
}

impl fmt::Display for FreqTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ω{}", self.root)?;
        for level in (0..self.depth).rev() {
            write!(f, ".{}", (self.path >> level) & 1)?;
        }
        Ok(())
    }
}

/// One photon: polarization, spatial mode, time bin, and frequency tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Photon {
    pub polarization: Polarization,
    pub mode: Mode,
    pub timebin: TimeBin,
    pub freq: FreqTag,
}

impl Photon {
    pub fn new(polarization: Polarization, mode: impl Into<Mode>) -> Photon {
        Photon {
            polarization,
            mode: mode.into(),
            timebin: TimeBin::None,
            freq: FreqTag::pump(0),
        }
    }

    pub fn with_timebin(mut self, timebin: TimeBin) -> Photon {
        self.timebin = timebin;
        self
    }

    pub fn with_freq(mut self, freq: FreqTag) -> Photon {
        self.freq = freq;
        self
    }

    /// Canonical sort key. Frequency tags participate only as a final
    /// tiebreak; term identity is decided by (mode, time bin, polarization).
    pub fn sort_key(&self) -> (&Mode, TimeBin, Polarization, FreqTag) {
        (&self.mode, self.timebin, self.polarization, self.freq)
    }

    /// The identity key used for term equality and ordering.
    pub fn identity_key(&self) -> (&Mode, TimeBin, Polarization) {
        (&self.mode, self.timebin, self.polarization)
    }
}

impl fmt::Display for Photon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.timebin {
            TimeBin::None => write!(f, "|{}⟩_{}", self.polarization, self.mode),
            bin => write!(f, "|{}{}⟩_{}", self.polarization, bin, self.mode),
        }
    }
}
