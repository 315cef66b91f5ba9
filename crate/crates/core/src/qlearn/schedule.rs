use crate::Real;

/// `start + (end − start)·min(t/duration, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSchedule {
    pub start: f64,
    pub end: f64,
    pub duration: u64,
}

impl LinearSchedule {
    pub const fn new(start: f64, end: f64, duration: u64) -> Self {
        LinearSchedule { start, end, duration }
    }

    pub const fn constant(value: f64) -> Self {
        LinearSchedule::new(value, value, 0)
    }

    pub fn value(&self, t: u64) -> f64 {
        if self.duration == 0 || t >= self.duration {
            return self.end;
        }
        let frac = t as f64 / self.duration as f64;
        self.start + (self.end - self.start) * frac
    }

    pub fn value_as<F: Real>(&self, t: u64) -> F {
        F::lit(self.value(t))
    }
}

pub fn schedule_value(s: &LinearSchedule, t: u64) -> f64 {
    s.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilemma_epsilon_examples() {
        let s = LinearSchedule::new(1.0, 0.05, 2000);
        assert_eq!(schedule_value(&s, 0), 1.0);
        assert_eq!(schedule_value(&s, 2000), 0.05);
        assert!((schedule_value(&s, 1000) - 0.525).abs() < 1e-15);
        assert_eq!(schedule_value(&s, 1_000_000), 0.05);
    }

    #[test]
    fn monotone_then_flat() {
        let s = LinearSchedule::new(0.4, 1.0, 300);
        let vals: Vec<f64> = (0..400).map(|t| s.value(t)).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        assert!(vals[300..].iter().all(|&v| v == 1.0));
        assert_eq!(LinearSchedule::constant(0.3).value(0), 0.3);
    }
}
