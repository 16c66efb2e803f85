//! Power-management block: turns 2-bit clock requests into a divided enable
//! strobe for the tracking block.
//!
//! The divider is a counter in the system-clock domain. The tracking block is
//! enabled on the edge where the counter sits at zero, so the first edge after
//! reset enables it and later enables follow every `ratio` edges. A new ratio
//! is latched only at that boundary, so an interval in progress always runs to
//! its full length.

use std::fmt;

use crate::error::{Error, Result};
use crate::tracking::ClockRequestCode;

/// Division ratios selectable through the clock-request bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum DividerRatio {
    #[default]
    R2,
    R20,
    R200,
    R2000,
}

impl DividerRatio {
    /// Indexed by request code.
    pub const ALL: [DividerRatio; 4] = [
        DividerRatio::R2,
        DividerRatio::R20,
        DividerRatio::R200,
        DividerRatio::R2000,
    ];

    pub fn value(self) -> u32 {
        match self {
            DividerRatio::R2 => 2,
            DividerRatio::R20 => 20,
            DividerRatio::R200 => 200,
            DividerRatio::R2000 => 2000,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_value(value: u32) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.value() == value)
            .ok_or_else(|| Error::Domain(format!("{value} is not a supported divider ratio")))
    }
}

impl fmt::Display for DividerRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value().fmt(f)
    }
}

pub fn decode_request(code: ClockRequestCode) -> DividerRatio {
    DividerRatio::ALL[usize::from(code.code())]
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PowerMgmtState {
    active: DividerRatio,
    pending: Option<DividerRatio>,
    counter: u32,
}

impl PowerMgmtState {
    /// Reset: fastest ratio, counter at zero.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn active_ratio(&self) -> DividerRatio {
        self.active
    }

    pub fn pending_ratio(&self) -> Option<DividerRatio> {
        self.pending
    }

    pub fn cycle_counter(&self) -> u32 {
        self.counter
    }

    /// Records a request; the last request before the next boundary wins.
    pub fn submit_request(&mut self, code: ClockRequestCode) {
        let ratio = decode_request(code);
        self.pending = (ratio != self.active).then_some(ratio);
    }

    /// Advances one system-clock edge and reports whether the tracker is enabled on it.
    pub fn divider_tick(&mut self) -> bool {
        let enable = self.counter == 0;
        if enable {
            if let Some(ratio) = self.pending.take() {
                self.active = ratio;
            }
        }
        self.counter = (self.counter + 1) % self.active.value();
        enable
    }
}
