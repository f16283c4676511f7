//! Random waypoint movement over a rectangular terrain.

use rand::Rng;

use crate::engine::SimTime;

/// Speeds below this are redrawn so that travel time stays finite.
pub const MIN_EFFECTIVE_SPEED: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terrain {
    pub width: f64,
    pub height: f64,
}

impl Default for Terrain {
    fn default() -> Self {
        Terrain { width: 1000.0, height: 1000.0 }
    }
}

impl Terrain {
    pub fn contains(&self, p: &Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            rng.random_range(0.0..=self.width),
            rng.random_range(0.0..=self.height),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointConfig {
    pub pause_time: SimTime,
    pub min_speed: f64,
    pub max_speed: f64,
}

impl Default for WaypointConfig {
    fn default() -> Self {
        WaypointConfig {
            pause_time: 20.0,
            min_speed: 0.0,
            max_speed: 10.0,
        }
    }
}

impl WaypointConfig {
    /// True when no positive speed can ever be drawn.
    pub fn is_static(&self) -> bool {
        self.max_speed < MIN_EFFECTIVE_SPEED
    }

    fn draw_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = if self.max_speed > self.min_speed {
                rng.random_range(self.min_speed..=self.max_speed)
            } else {
                self.min_speed
            };
            if v >= MIN_EFFECTIVE_SPEED {
                return v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Moving,
    Paused,
}

/// One leg of a random waypoint trajectory: travel from `origin` to
/// `destination` starting at `departure`, then pause until `pause_until`.
///
/// A static leg has zero speed and `pause_until == f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointState {
    pub origin: Point,
    pub destination: Point,
    pub speed: f64,
    pub departure: SimTime,
    pub pause_until: SimTime,
}

impl WaypointState {
    /// A node parked at `position` forever.
    pub fn stationary(position: Point) -> Self {
        WaypointState {
            origin: position,
            destination: position,
            speed: 0.0,
            departure: 0.0,
            pause_until: f64::INFINITY,
        }
    }

    pub fn travel_time(&self) -> SimTime {
        let d = self.origin.distance(&self.destination);
        if d == 0.0 {
            0.0
        } else if self.speed > 0.0 {
            d / self.speed
        } else {
            f64::INFINITY
        }
    }

    pub fn arrival(&self) -> SimTime {
        self.departure + self.travel_time()
    }

    pub fn phase_at(&self, t: SimTime) -> Phase {
        if t < self.arrival() {
            Phase::Moving
        } else {
            Phase::Paused
        }
    }

    /// Position along the leg, clamped at the destination.
    pub fn position_at(&self, t: SimTime) -> Point {
        let elapsed = (t - self.departure).max(0.0);
        let total = self.origin.distance(&self.destination);
        if total == 0.0 || self.speed == 0.0 {
            return if total == 0.0 { self.destination } else { self.origin };
        }
        let travelled = self.speed * elapsed;
        if travelled >= total {
            return self.destination;
        }
        let f = travelled / total;
        Point::new(
            self.origin.x + f * (self.destination.x - self.origin.x),
            self.origin.y + f * (self.destination.y - self.origin.y),
        )
    }

    /// Time at which the next leg should be drawn (`INFINITY` for a static
    /// node).
    pub fn leg_end(&self) -> SimTime {
        self.pause_until
    }
}

/// Draws the leg that starts at `now` from `from`. The destination is uniform
/// over the terrain and the speed uniform over the configured range; after
/// arriving the node pauses for exactly `pause_time`.
pub fn next_waypoint<R: Rng + ?Sized>(
    from: Point,
    now: SimTime,
    terrain: &Terrain,
    config: &WaypointConfig,
    rng: &mut R,
) -> WaypointState {
    if config.is_static() {
        return WaypointState {
            departure: now,
            ..WaypointState::stationary(from)
        };
    }
    let destination = terrain.random_point(rng);
    let speed = config.draw_speed(rng);
    let mut leg = WaypointState {
        origin: from,
        destination,
        speed,
        departure: now,
        pause_until: 0.0,
    };
    leg.pause_until = leg.arrival() + config.pause_time;
    leg
}
