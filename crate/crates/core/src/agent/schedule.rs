/// Linearly decaying exploration probability with an upward boost on
/// discoveries. After a boost the decay resumes with the original slope.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonSchedule {
    start: f64,
    end: f64,
    slope: f64,
    value: f64,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, decay_steps: usize) -> Self {
        assert!(end <= start, "epsilon must decay");
        let slope = if decay_steps == 0 { start - end } else { (start - end) / decay_steps as f64 };
        Self { start, end, slope, value: start }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Advances one environment step.
    pub fn advance(&mut self) {
        self.value = (self.value - self.slope).max(self.end);
    }

    /// Raises epsilon to at least `floor`.
    pub fn boost(&mut self, floor: f64) {
        self.value = self.value.max(floor).min(self.start.max(floor));
    }
}

/// `max(epsilon, floor)`.
pub fn epb_on_discovery(epsilon: f64, floor: f64) -> f64 {
    epsilon.max(floor)
}
