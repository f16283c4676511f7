use rand::Rng;

use crate::energy::{DrawCause, EnergyModel};
use crate::mobility::Point;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    /// Unit-disk radius in meters.
    pub range: f64,
    pub propagation_delay: f64,
    /// Independent per-receiver loss probability, in `[0, 1)`.
    pub loss_probability: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            range: 250.0,
            propagation_delay: 1e-5,
            loss_probability: 0.0,
        }
    }
}

impl RadioConfig {
    pub fn in_range(&self, a: &Point, b: &Point) -> bool {
        a.distance(b) <= self.range
    }
}

/// The view of the node population the radio needs: where everyone is, who
/// is alive, and a way to bill them.
pub trait Stations {
    fn station_count(&self) -> usize;
    fn position(&self, id: NodeId) -> Point;
    fn is_alive(&self, id: NodeId) -> bool;
    fn charge(&mut self, id: NodeId, amount: f64, cause: DrawCause);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastOutcome {
    pub receivers: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnicastFailure {
    OutOfRange,
    DestinationDead,
    Lost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnicastOutcome {
    Delivered { overheard_by: Vec<NodeId> },
    Failed { reason: UnicastFailure, overheard_by: Vec<NodeId> },
    /// The sender had no energy left; nothing was transmitted.
    SenderDead,
}

impl UnicastOutcome {
    pub fn is_delivered(&self) -> bool {
        matches!(self, UnicastOutcome::Delivered { .. })
    }
}

/// Idealized shared medium: no collisions, no contention, optional i.i.d.
/// loss per receiver. All energy is billed at transmission time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub radio: RadioConfig,
    pub energy: EnergyModel,
}

impl Medium {
    pub fn new(radio: RadioConfig, energy: EnergyModel) -> Self {
        Medium { radio, energy }
    }

    fn lost<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.radio.loss_probability > 0.0 && rng.random_bool(self.radio.loss_probability)
    }

    /// Transmits `size` bytes to everyone in range. Returns `None` when the
    /// sender is dead.
    pub fn broadcast<S: Stations + ?Sized, R: Rng + ?Sized>(
        &self,
        stations: &mut S,
        sender: NodeId,
        size: usize,
        rng: &mut R,
    ) -> Option<BroadcastOutcome> {
        if !stations.is_alive(sender) {
            return None;
        }
        stations.charge(sender, self.energy.tx_energy(size), DrawCause::Tx);
        let origin = stations.position(sender);
        let rx = self.energy.rx_energy(size);
        let mut receivers = Vec::new();
        for id in 0..stations.station_count() {
            if id == sender || !stations.is_alive(id) {
                continue;
            }
            if !self.radio.in_range(&origin, &stations.position(id)) || self.lost(rng) {
                continue;
            }
            stations.charge(id, rx, DrawCause::Rx);
            receivers.push(id);
        }
        Some(BroadcastOutcome { receivers })
    }

    /// Transmits `size` bytes addressed to `dest`. Every other live node in
    /// range that hears the frame pays overhearing energy.
    pub fn unicast<S: Stations + ?Sized, R: Rng + ?Sized>(
        &self,
        stations: &mut S,
        sender: NodeId,
        dest: NodeId,
        size: usize,
        rng: &mut R,
    ) -> UnicastOutcome {
        if !stations.is_alive(sender) {
            return UnicastOutcome::SenderDead;
        }
        stations.charge(sender, self.energy.tx_energy(size), DrawCause::Tx);
        let origin = stations.position(sender);
        let rx = self.energy.rx_energy(size);
        let overhear = self.energy.overhear_energy(size);
        let mut overheard_by = Vec::new();
        let mut failure = Some(UnicastFailure::OutOfRange);
        for id in 0..stations.station_count() {
            if id == sender {
                continue;
            }
            let alive = stations.is_alive(id);
            let in_range = self.radio.in_range(&origin, &stations.position(id));
            if id == dest {
                failure = match (in_range, alive) {
                    (false, _) => Some(UnicastFailure::OutOfRange),
                    (true, false) => Some(UnicastFailure::DestinationDead),
                    (true, true) if self.lost(rng) => Some(UnicastFailure::Lost),
                    (true, true) => {
                        stations.charge(id, rx, DrawCause::Rx);
                        None
                    }
                };
            } else if alive && in_range && !self.lost(rng) {
                stations.charge(id, overhear, DrawCause::Overhear);
                overheard_by.push(id);
            }
        }
        match failure {
            None => UnicastOutcome::Delivered { overheard_by },
            Some(reason) => UnicastOutcome::Failed { reason, overheard_by },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RandomStream;
    use crate::energy::{Battery, DrawLedger};

    struct Field {
        pos: Vec<Point>,
        batt: Vec<Battery>,
        log: Vec<DrawLedger>,
    }

    impl Field {
        fn new(pos: Vec<Point>) -> Self {
            let n = pos.len();
            Field { pos, batt: vec![Battery::new(10.0); n], log: vec![DrawLedger::default(); n] }
        }
    }

    impl Stations for Field {
        fn station_count(&self) -> usize {
            self.pos.len()
        }
        fn position(&self, id: NodeId) -> Point {
            self.pos[id]
        }
        fn is_alive(&self, id: NodeId) -> bool {
            self.batt[id].is_alive()
        }
        fn charge(&mut self, id: NodeId, amount: f64, cause: DrawCause) {
            let (_, taken) = self.batt[id].draw(amount, cause);
            self.log[id].record(cause, taken);
        }
    }

    fn star(n_in_range: usize) -> Field {
        let mut pos = vec![Point::new(0.0, 0.0)];
        for i in 0..n_in_range {
            pos.push(Point::new(100.0 + i as f64, 0.0));
        }
        pos.push(Point::new(900.0, 900.0));
        Field::new(pos)
    }

    #[test]
    fn broadcast_bills_sender_once_and_each_receiver() {
        let medium = Medium::new(RadioConfig::default(), EnergyModel::default());
        let mut f = star(3);
        let mut rng = RandomStream::new(0).substream("channel");
        let out = medium.broadcast(&mut f, 0, 512, &mut rng).unwrap();
        assert_eq!(out.receivers, vec![1, 2, 3]);
        let e = EnergyModel::default();
        assert_eq!(f.log[0].tx, e.tx_energy(512));
        for id in 1..=3 {
            assert_eq!(f.log[id].rx, e.rx_energy(512));
        }
        assert_eq!(f.log[4].total(), 0.0);
    }

    #[test]
    fn broadcast_into_silence_still_costs_tx() {
        let medium = Medium::new(RadioConfig::default(), EnergyModel::default());
        let mut f = star(0);
        let mut rng = RandomStream::new(0).substream("channel");
        let out = medium.broadcast(&mut f, 0, 72, &mut rng).unwrap();
        assert!(out.receivers.is_empty());
        assert!(f.log[0].tx > 0.0);
    }

    #[test]
    fn dead_sender_transmits_nothing() {
        let medium = Medium::new(RadioConfig::default(), EnergyModel::default());
        let mut f = star(2);
        f.batt[0] = Battery::with_residual(10.0, 0.0);
        let mut rng = RandomStream::new(0).substream("channel");
        assert!(medium.broadcast(&mut f, 0, 72, &mut rng).is_none());
        assert_eq!(medium.unicast(&mut f, 0, 1, 72, &mut rng), UnicastOutcome::SenderDead);
        assert_eq!(f.log.iter().map(DrawLedger::total).sum::<f64>(), 0.0);
    }

    #[test]
    fn unicast_charges_bystanders_overhearing() {
        let medium = Medium::new(RadioConfig::default(), EnergyModel::default());
        let mut f = star(3);
        let mut rng = RandomStream::new(0).substream("channel");
        let out = medium.unicast(&mut f, 0, 2, 512, &mut rng);
        assert_eq!(out, UnicastOutcome::Delivered { overheard_by: vec![1, 3] });
        let e = EnergyModel::default();
        assert_eq!(f.log[2].rx, e.rx_energy(512));
        assert_eq!(f.log[1].overhear, e.rx_energy(512));
        assert_eq!(f.log[3].overhear, e.rx_energy(512));
        assert_eq!(f.log[0].tx, e.tx_energy(512));
    }

    #[test]
    fn unicast_without_bystanders_charges_one_rx() {
        let medium = Medium::new(RadioConfig::default(), EnergyModel::default());
        let mut f = star(1);
        let mut rng = RandomStream::new(0).substream("channel");
        assert!(medium.unicast(&mut f, 0, 1, 512, &mut rng).is_delivered());
        let rx_total: f64 = f.log.iter().map(|l| l.rx + l.overhear).sum();
        assert_eq!(rx_total, EnergyModel::default().rx_energy(512));
    }

    #[test]
    fn unicast_out_of_range_fails_but_costs_tx() {
        let medium = Medium::new(RadioConfig::default(), EnergyModel::default());
        let mut f = star(1);
        let mut rng = RandomStream::new(0).substream("channel");
        let out = medium.unicast(&mut f, 0, 2, 512, &mut rng);
        assert!(matches!(out, UnicastOutcome::Failed { reason: UnicastFailure::OutOfRange, .. }));
        assert!(f.log[0].tx > 0.0);
    }

    /// Binomial check: with loss 1 - 0.2, 2000 single-receiver trials should
    /// land within 4.5 standard deviations of 400 receptions.
    #[test]
    fn heavy_loss_matches_binomial_rate() {
        let radio = RadioConfig { loss_probability: 0.8, ..Default::default() };
        let medium = Medium::new(radio, EnergyModel::default());
        let mut rng = RandomStream::new(5).substream("channel");
        let trials = 2000;
        let mut received = 0;
        for _ in 0..trials {
            let mut f = star(1);
            received += medium.broadcast(&mut f, 0, 32, &mut rng).unwrap().receivers.len();
        }
        let mean = trials as f64 * 0.2;
        let sd = (trials as f64 * 0.2 * 0.8).sqrt();
        assert!((received as f64 - mean).abs() < 4.5 * sd, "received {received}");
    }
}
