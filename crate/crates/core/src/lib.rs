//! Cycle-accurate model of a digital Maximum Power Point Tracking controller.
//!
//! The controller is three synchronous blocks sharing one system clock:
//!
//! * [`tracking`]: sample averaging and Perturb & Observe with a variable step,
//!   producing an 8-bit PWM compare value and a 2-bit clock request;
//! * [`power_mgmt`]: a request-driven clock divider (2, 20, 200 or 2000) that
//!   strobes the tracker;
//! * [`pwm`]: an 8-bit counter/comparator with a static prescaler.
//!
//! [`controller`] wires them together, [`plant`] provides a reference energy
//! harvester with a brute-force optimum, [`power_model`] estimates the
//! controller's own consumption from measured PVT data, and [`harness`] runs
//! scenarios, writes traces and computes tracking metrics.

pub mod controller;
pub mod error;
pub mod harness;
pub mod plant;
pub mod power_mgmt;
pub mod power_model;
pub mod pwm;
pub mod signals;
pub mod tracking;

pub use controller::{ControllerConfig, SystemState, TraceRecord};
pub use error::{Error, Result};
pub use plant::{IrradianceEvent, PlantModel};
pub use signals::{AdcCode, CompareValue, PowerValue};
