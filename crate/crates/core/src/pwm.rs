//! Counter/comparator PWM stage.
//!
//! An 8-bit counter advances once per prescaler period and wraps from 255 to
//! 0. The output is high while the counter is below the active compare value.
//! Compare updates from the tracker are held pending and only take effect when
//! the counter overflows, so a period is never cut short or stretched.

use crate::signals::CompareValue;

/// Counter steps in one PWM period.
pub const PERIOD_STEPS: u32 = 256;

/// High fraction of one PWM period, in percent.
pub fn duty_cycle(compare: CompareValue) -> f64 {
    f64::from(compare.get()) / f64::from(PERIOD_STEPS) * 100.0
}

/// Commanded duty ratio in [0, 1).
pub fn duty_ratio(compare: CompareValue) -> f64 {
    f64::from(compare.get()) / f64::from(PERIOD_STEPS)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PwmState {
    counter: u8,
    compare_active: CompareValue,
    compare_pending: Option<CompareValue>,
    prescale_code: u8,
    prescale_counter: u8,
    output: bool,
}

impl PwmState {
    pub fn new(prescale_code: u8, compare: CompareValue) -> Self {
        PwmState {
            counter: 0,
            compare_active: compare,
            compare_pending: None,
            prescale_code,
            prescale_counter: 0,
            output: 0 < compare.get(),
        }
    }

    pub fn counter(&self) -> u8 {
        self.counter
    }

    pub fn compare_active(&self) -> CompareValue {
        self.compare_active
    }

    pub fn compare_pending(&self) -> Option<CompareValue> {
        self.compare_pending
    }

    pub fn prescale_code(&self) -> u8 {
        self.prescale_code
    }

    pub fn output(&self) -> bool {
        self.output
    }

    /// System-clock ticks in one PWM period.
    pub fn period_ticks(&self) -> u32 {
        PERIOD_STEPS * (u32::from(self.prescale_code) + 1)
    }

    pub fn load_compare(&mut self, value: CompareValue) {
        self.compare_pending = Some(value);
    }

    /// Advances one system-clock tick and returns the output bit.
    pub fn pwm_tick(&mut self) -> bool {
        if self.prescale_counter == self.prescale_code {
            self.prescale_counter = 0;
            let (next, overflow) = self.counter.overflowing_add(1);
            self.counter = next;
            if overflow {
                if let Some(value) = self.compare_pending.take() {
                    self.compare_active = value;
                }
            }
        } else {
            self.prescale_counter += 1;
        }
        self.output = self.counter < self.compare_active.get();
        self.output
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duty_cycle_values() {
        assert_eq!(duty_cycle(CompareValue(128)), 50.0);
        assert_eq!(duty_cycle(CompareValue(0)), 0.0);
        assert_eq!(duty_cycle(CompareValue(192)), 75.0);
        assert_eq!(duty_cycle(CompareValue(255)), 255.0 / 256.0 * 100.0);
    }

    #[test]
    fn comparison_is_strict() {
        let mut s = PwmState::new(0, CompareValue(128));
        for _ in 0..5 {
            s.pwm_tick();
        }
        assert_eq!(s.counter(), 5);
        assert!(s.output());
        for _ in 5..128 {
            s.pwm_tick();
        }
        assert_eq!(s.counter(), 128);
        assert!(!s.output());
    }

    #[test]
    fn prescaler_zero_advances_every_tick() {
        let mut s = PwmState::new(0, CompareValue(10));
        for k in 1..=256u32 {
            s.pwm_tick();
            assert_eq!(u32::from(s.counter()), k % 256);
        }
        assert_eq!(s.period_ticks(), 256);
    }

    #[test]
    fn prescaler_divides_counter_rate() {
        let mut s = PwmState::new(3, CompareValue(10));
        let counters: Vec<u8> = (0..9)
            .map(|_| {
                s.pwm_tick();
                s.counter()
            })
            .collect();
        assert_eq!(counters, vec![0, 0, 0, 1, 1, 1, 1, 2, 2]);
    }

    #[test]
    fn load_waits_for_overflow() {
        let mut s = PwmState::new(0, CompareValue(128));
        for _ in 0..10 {
            s.pwm_tick();
        }
        s.load_compare(CompareValue(200));
        for _ in 10..255 {
            s.pwm_tick();
            assert_eq!(s.compare_active(), CompareValue(128));
        }
        assert_eq!(s.counter(), 255);
        s.pwm_tick();
        assert_eq!(s.counter(), 0);
        assert_eq!(s.compare_active(), CompareValue(200));
        assert_eq!(s.compare_pending(), None);
    }

    #[test]
    fn latest_pending_wins() {
        let mut s = PwmState::new(0, CompareValue(128));
        s.pwm_tick();
        s.load_compare(CompareValue(20));
        s.load_compare(CompareValue(30));
        for _ in 0..255 {
            s.pwm_tick();
        }
        assert_eq!(s.compare_active(), CompareValue(30));
    }

    #[test]
    fn load_on_overflow_tick() {
        // Within a system cycle the tracker loads before the PWM ticks. A load
        // in the cycle whose tick overflows the counter is latched by that same
        // overflow and governs the period that starts there.
        let mut s = PwmState::new(0, CompareValue(128));
        for _ in 0..255 {
            s.pwm_tick();
        }
        assert_eq!(s.counter(), 255);
        s.load_compare(CompareValue(64));
        s.pwm_tick();
        assert_eq!(s.counter(), 0);
        assert_eq!(s.compare_active(), CompareValue(64));

        // A load one tick later misses that overflow and waits a full period.
        s.load_compare(CompareValue(32));
        let mut ticks = 0;
        while s.compare_active() != CompareValue(32) {
            s.pwm_tick();
            ticks += 1;
        }
        assert_eq!(ticks, 256);
    }

    #[test]
    fn high_time_matches_compare_exactly() {
        for c in [0u8, 1, 127, 128, 200, 255] {
            let mut s = PwmState::new(0, CompareValue(c));
            let high = (0..256).filter(|_| s.pwm_tick()).count();
            assert_eq!(high, usize::from(c));
        }
    }
}
