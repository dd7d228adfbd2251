/// Simulated time source. Advances only when told to, by modeled durations.
///
/// One clock belongs to one experiment; it is not shared between threads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VirtualClock {
    now: f64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seconds since the clock was created.
    pub fn now(&self) -> f64 {
        self.now
    }

    /// Moves the clock forward by `seconds` and returns the step taken.
    pub fn advance(&mut self, seconds: f64) -> f64 {
        debug_assert!(seconds >= 0.0, "virtual time cannot run backwards");
        self.now += seconds;
        seconds
    }

    /// Advances by the time needed to move `bytes` at `rate` bytes/s.
    pub fn transfer(&mut self, bytes: f64, rate: f64) -> f64 {
        self.advance(bytes / rate)
    }
}
