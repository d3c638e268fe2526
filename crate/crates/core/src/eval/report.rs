use crate::delay::Slot;

/// Expected reward of one policy over a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueReport {
    pub label: String,
    pub total: f64,
    /// Expected reward per slot, first slot (`m`) first.
    pub per_slot: Vec<f64>,
    /// Standard error of `total` for Monte Carlo estimates.
    pub stderr: Option<f64>,
    pub config: Vec<(String, String)>,
}

impl ValueReport {
    pub fn exact(label: impl Into<String>, per_slot: Vec<f64>, config: Vec<(String, String)>) -> Self {
        let total = per_slot.iter().sum();
        Self { label: label.into(), total, per_slot, stderr: None, config }
    }

    pub fn horizon(&self) -> Slot {
        self.per_slot.len() as Slot
    }

    /// Expected reward in `slot` (counted down from the horizon).
    pub fn slot(&self, slot: Slot) -> f64 {
        self.per_slot[(self.horizon() - slot) as usize]
    }

    /// Average reward per slot.
    pub fn rate(&self) -> f64 {
        self.total / self.per_slot.len() as f64
    }
}

/// Percentage by which `value` falls short of `reference`.
pub fn percent_gap(reference: f64, value: f64) -> f64 {
    (reference - value) / reference * 100.0
}
