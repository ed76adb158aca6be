//! Ball-and-racket world on a 10 x 10 cm square with a frozen racket on the
//! left border.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Half of the square's side, cm.
pub const HALF_SIZE: f64 = 5.0;
/// Half of the racket's length, cm.
pub const RACKET_HALF: f64 = 0.9;
pub const MIN_SPEED: f64 = 10.0;
pub const MAX_SPEED: f64 = 33.3;
/// Smallest horizontal speed after a reset, cm/s.
pub const MIN_VX: f64 = 10.0;
/// One tick, s.
pub const DT: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub ball_x: f64,
    pub ball_y: f64,
    pub ball_vx: f64,
    pub ball_vy: f64,
    /// Racket center.
    pub racket_y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    HitRacket,
    HitLeftWall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Good,
    Bad,
}

impl Label {
    pub fn from_event(e: Event) -> Self {
        match e {
            Event::HitRacket => Label::Good,
            Event::HitLeftWall => Label::Bad,
        }
    }

    pub fn is_good(self) -> bool {
        self == Label::Good
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Good => "good",
            Label::Bad => "bad",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "good" => Ok(Label::Good),
            "bad" => Ok(Label::Bad),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

impl WorldState {
    pub fn speed(&self) -> f64 {
        self.ball_vx.hypot(self.ball_vy)
    }
}

/// Advances the world by one tick. The ball reflects elastically off the
/// top, bottom and right walls. Reaching the left border is an event; the
/// ball bounces back if the racket covers it.
pub fn step_world(s: &WorldState) -> (WorldState, Option<Event>) {
    let mut n = *s;
    n.ball_x += n.ball_vx * DT;
    n.ball_y += n.ball_vy * DT;
    if n.ball_y > HALF_SIZE {
        n.ball_y = 2.0 * HALF_SIZE - n.ball_y;
        n.ball_vy = -n.ball_vy;
    } else if n.ball_y < -HALF_SIZE {
        n.ball_y = -2.0 * HALF_SIZE - n.ball_y;
        n.ball_vy = -n.ball_vy;
    }
    if n.ball_x > HALF_SIZE {
        n.ball_x = 2.0 * HALF_SIZE - n.ball_x;
        n.ball_vx = -n.ball_vx;
    }
    if n.ball_x <= -HALF_SIZE {
        if (n.ball_y - n.racket_y).abs() <= RACKET_HALF {
            n.ball_x = -2.0 * HALF_SIZE - n.ball_x;
            n.ball_vx = -n.ball_vx;
            return (n, Some(Event::HitRacket));
        }
        return (n, Some(Event::HitLeftWall));
    }
    (n, None)
}

/// Puts the ball on the middle vertical line with a random velocity and the
/// racket at a random position fully inside the square.
pub fn reset_world<R: Rng + ?Sized>(rng: &mut R) -> WorldState {
    let speed = rng.gen_range(MIN_SPEED..=MAX_SPEED);
    let max_angle = (MIN_VX / speed).min(1.0).acos();
    let angle = if max_angle > 0.0 {
        rng.gen_range(-max_angle..=max_angle)
    } else {
        0.0
    };
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    WorldState {
        ball_x: 0.0,
        ball_y: rng.gen_range(-HALF_SIZE..=HALF_SIZE),
        ball_vx: sign * speed * angle.cos(),
        ball_vy: speed * angle.sin(),
        racket_y: rng.gen_range(-(HALF_SIZE - RACKET_HALF)..=HALF_SIZE - RACKET_HALF),
    }
}

/// Whether the frozen-racket future of `s` reaches the racket (`Good`) or
/// the left wall (`Bad`) within `horizon` ticks.
pub fn label_state(s: &WorldState, horizon: usize) -> Option<Label> {
    let mut cur = *s;
    for _ in 0..horizon {
        let (next, event) = step_world(&cur);
        if let Some(e) = event {
            return Some(Label::from_event(e));
        }
        cur = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(x: f64, y: f64, vx: f64, vy: f64, r: f64) -> WorldState {
        WorldState {
            ball_x: x,
            ball_y: y,
            ball_vx: vx,
            ball_vy: vy,
            racket_y: r,
        }
    }

    #[test]
    fn linear_motion() {
        let (n, e) = step_world(&state(0.0, 0.0, 20.0, 0.0, 0.0));
        assert!(e.is_none());
        assert!((n.ball_x - 0.02).abs() < 1e-15);
        assert_eq!(n.ball_y, 0.0);
    }

    #[test]
    fn right_wall_bounce() {
        let (n, e) = step_world(&state(4.999, 2.0, 20.0, 0.0, 0.0));
        assert!(e.is_none());
        assert!((n.ball_x - 4.981).abs() < 1e-12);
        assert_eq!(n.ball_vx, -20.0);
    }

    #[test]
    fn top_and_bottom_bounce() {
        let (n, _) = step_world(&state(0.0, 4.99, 0.0, 20.0, 0.0));
        assert!((n.ball_y - 4.99).abs() < 1e-12);
        assert_eq!(n.ball_vy, -20.0);
        let (n, _) = step_world(&state(0.0, -4.99, 0.0, -20.0, 0.0));
        assert!((n.ball_y + 4.99).abs() < 1e-12);
        assert_eq!(n.ball_vy, 20.0);
    }

    #[test]
    fn left_border_events() {
        let (n, e) = step_world(&state(-4.99, 1.0, -20.0, 0.0, 1.0));
        assert_eq!(e, Some(Event::HitRacket));
        assert_eq!(n.ball_vx, 20.0);
        let (_, e) = step_world(&state(-4.99, 0.9, -20.0, 0.0, 0.0));
        assert_eq!(e, Some(Event::HitRacket));
        let (_, e) = step_world(&state(-4.99, 4.0, -20.0, 0.0, -4.0));
        assert_eq!(e, Some(Event::HitLeftWall));
    }

    #[test]
    fn labels() {
        assert_eq!(
            label_state(&state(-4.99, 0.0, -20.0, 0.0, 0.0), 300),
            Some(Label::Good)
        );
        assert_eq!(
            label_state(&state(-4.99, 4.0, -20.0, 0.0, -4.0), 300),
            Some(Label::Bad)
        );
        assert_eq!(label_state(&state(4.9, 0.0, 10.0, 0.0, 0.0), 300), None);
        assert_eq!(
            label_state(&state(4.9, 0.0, 10.0, 0.0, 0.0), 1100),
            Some(Label::Good)
        );
    }

    #[test]
    fn resets_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut signs = [0usize; 2];
        for _ in 0..10_000 {
            let s = reset_world(&mut rng);
            assert_eq!(s.ball_x, 0.0);
            assert!(s.ball_y.abs() <= HALF_SIZE);
            let v = s.speed();
            assert!((MIN_SPEED - 1e-9..=MAX_SPEED + 1e-9).contains(&v));
            assert!(s.ball_vx.abs() >= MIN_VX - 1e-9);
            assert!(s.racket_y.abs() <= HALF_SIZE - RACKET_HALF);
            signs[(s.ball_vx > 0.0) as usize] += 1;
        }
        assert!(signs[0] > 4500 && signs[1] > 4500);
    }
}
