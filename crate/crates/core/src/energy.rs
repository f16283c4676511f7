//! Battery accounting: per-packet radio energy, cause-tagged draws, drain-rate
//! smoothing and remaining lifetime.

use crate::engine::SimTime;

/// Radio interface electrical parameters.
///
/// Energy for a packet is `current * voltage * airtime`, with airtime
/// `size_bits / bandwidth`. Overhearing costs the same as receiving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// Amperes drawn while transmitting.
    pub tx_current: f64,
    /// Amperes drawn while receiving (and overhearing).
    pub rx_current: f64,
    pub voltage: f64,
    /// Bits per second.
    pub bandwidth: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            tx_current: 0.280,
            rx_current: 0.240,
            voltage: 0.5,
            bandwidth: 2_000_000.0,
        }
    }
}

impl EnergyModel {
    pub fn is_valid(&self) -> bool {
        [self.tx_current, self.rx_current, self.voltage, self.bandwidth]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }

    /// Seconds needed to put `size` bytes on the air.
    pub fn packet_airtime(&self, size: usize) -> SimTime {
        (size as f64 * 8.0) / self.bandwidth
    }

    pub fn tx_energy(&self, size: usize) -> f64 {
        self.tx_current * self.voltage * self.packet_airtime(size)
    }

    pub fn rx_energy(&self, size: usize) -> f64 {
        self.rx_current * self.voltage * self.packet_airtime(size)
    }

    pub fn overhear_energy(&self, size: usize) -> f64 {
        self.rx_energy(size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrawCause {
    Tx,
    Rx,
    Overhear,
}

/// Energy drawn so far, split by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DrawLedger {
    pub tx: f64,
    pub rx: f64,
    pub overhear: f64,
}

impl DrawLedger {
    pub fn record(&mut self, cause: DrawCause, amount: f64) {
        match cause {
            DrawCause::Tx => self.tx += amount,
            DrawCause::Rx => self.rx += amount,
            DrawCause::Overhear => self.overhear += amount,
        }
    }

    pub fn total(&self) -> f64 {
        self.tx + self.rx + self.overhear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawOutcome {
    Alive,
    /// This draw emptied the battery.
    Depleted,
    /// The battery was already empty; nothing was drawn.
    AlreadyDead,
}

/// Residual energy is recomputed from the running total of draws rather than
/// decremented in place, so that `initial - residual` does not accumulate one
/// rounding error per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    initial: f64,
    pre_drained: f64,
    consumed: f64,
    depleted: bool,
    drawn: DrawLedger,
}

impl Battery {
    pub const DEFAULT_INITIAL: f64 = 1200.0;

    pub fn new(initial: f64) -> Self {
        Battery::with_residual(initial, initial)
    }

    /// A battery that has already lost `initial - residual` joules before the
    /// run starts. The pre-drained amount is not attributed to any cause.
    pub fn with_residual(initial: f64, residual: f64) -> Self {
        assert!(initial >= 0.0 && (0.0..=initial).contains(&residual));
        Battery {
            initial,
            pre_drained: initial - residual,
            consumed: 0.0,
            depleted: residual == 0.0,
            drawn: DrawLedger::default(),
        }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn residual(&self) -> f64 {
        if self.depleted {
            0.0
        } else {
            ((self.initial - self.pre_drained) - self.consumed).max(0.0)
        }
    }

    pub fn drawn(&self) -> &DrawLedger {
        &self.drawn
    }

    pub fn used(&self) -> f64 {
        if self.depleted {
            self.initial
        } else {
            self.pre_drained + self.consumed
        }
    }

    pub fn is_alive(&self) -> bool {
        !self.depleted
    }

    /// Draws up to `amount` joules. The residual floors at zero and only the
    /// energy actually removed is logged, so `initial - residual` always equals
    /// the logged total (plus any pre-drain).
    pub fn draw(&mut self, amount: f64, cause: DrawCause) -> (DrawOutcome, f64) {
        debug_assert!(amount >= 0.0);
        if self.depleted {
            return (DrawOutcome::AlreadyDead, 0.0);
        }
        let residual = self.residual();
        if amount >= residual {
            self.consumed += residual;
            self.depleted = true;
            self.drawn.record(cause, residual);
            (DrawOutcome::Depleted, residual)
        } else {
            self.consumed += amount;
            self.drawn.record(cause, amount);
            (DrawOutcome::Alive, amount)
        }
    }
}

/// Exponentially weighted drain-rate estimate, in joules per second.
///
/// `update` is called once per `sample_interval`; the sample is the energy
/// consumed over the window divided by its length, and the estimate becomes
/// `alpha * old + (1 - alpha) * sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrainRateEstimator {
    dr_current: f64,
    alpha: f64,
    sample_interval: SimTime,
    energy_at_window_start: f64,
    window_start: SimTime,
}

impl DrainRateEstimator {
    pub const DEFAULT_ALPHA: f64 = 0.3;
    pub const DEFAULT_SAMPLE_INTERVAL: SimTime = 1.0;

    pub fn new(alpha: f64, sample_interval: SimTime, battery: &Battery) -> Self {
        assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0, 1]");
        assert!(sample_interval > 0.0);
        DrainRateEstimator {
            dr_current: 0.0,
            alpha,
            sample_interval,
            energy_at_window_start: battery.residual(),
            window_start: 0.0,
        }
    }

    /// Starts from a known drain rate instead of zero.
    pub fn with_rate(mut self, dr: f64) -> Self {
        assert!(dr >= 0.0);
        self.dr_current = dr;
        self
    }

    pub fn drain_rate(&self) -> f64 {
        self.dr_current
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sample_interval(&self) -> SimTime {
        self.sample_interval
    }

    /// Folds one raw sample into the estimate.
    pub fn push_sample(&mut self, sample: f64) {
        let sample = sample.max(0.0);
        self.dr_current = self.alpha * self.dr_current + (1.0 - self.alpha) * sample;
    }

    /// Closes the current window at `now`, folds its sample in and opens the
    /// next window.
    pub fn update(&mut self, battery: &Battery, now: SimTime) {
        let sample = (self.energy_at_window_start - battery.residual()) / self.sample_interval;
        self.push_sample(sample);
        self.energy_at_window_start = battery.residual();
        self.window_start = now;
    }

    pub fn window_start(&self) -> SimTime {
        self.window_start
    }
}

/// Seconds until the battery is predicted to run dry. A zero drain rate gives
/// `f64::INFINITY`, which compares greater than every finite duration.
pub fn remaining_lifetime(battery: &Battery, est: &DrainRateEstimator) -> SimTime {
    lifetime_from(battery.residual(), est.drain_rate())
}

pub fn lifetime_from(residual: f64, drain_rate: f64) -> SimTime {
    if residual <= 0.0 {
        0.0
    } else if drain_rate <= 0.0 {
        f64::INFINITY
    } else {
        residual / drain_rate
    }
}
