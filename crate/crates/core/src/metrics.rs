//! Outcome measurements over one round: cooperation level, payoff
//! inequality, connectivity (CR), effective connection (EC), link
//! connection (LC), and link proportion (LP).

use crate::lattice::{offers_toward, DilemmaAction, Lattice, RoundOutcome, SelectionAction, DEGREE};
use crate::Real;

/// Gini coefficient via the rank formula
/// `Σ (2i − n − 1)·r_(i) / (n·Σ r)` over ascending payoffs. Zero for an
/// empty or all-zero vector.
pub fn gini<F: Real>(payoffs: &[F]) -> F {
    let n = payoffs.len();
    if n == 0 {
        return F::zero();
    }
    let mut sorted = payoffs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("payoffs are not NaN"));
    let total = sorted.iter().fold(F::zero(), |acc, &x| acc + x);
    if total == F::zero() {
        return F::zero();
    }
    let nf = F::lit(n as f64);
    let weighted = sorted.iter().enumerate().fold(F::zero(), |acc, (k, &r)| {
        let rank = F::lit((k + 1) as f64);
        acc + (F::lit(2.0) * rank - nf - F::one()) * r
    });
    weighted / (nf * total)
}

/// Share of neighbours offering to the agent.
pub fn connectivity_ratio<F: Real>(offers_toward_agent: SelectionAction) -> F {
    F::lit(offers_toward_agent.count() as f64) / F::lit(DEGREE as f64)
}

/// Share of neighbour slots with a mutual offer.
pub fn effective_connection<F: Real>(own_offers: SelectionAction, offers_toward_agent: SelectionAction) -> F {
    let mutual = (0..DEGREE)
        .filter(|&s| own_offers.offers(s) && offers_toward_agent.offers(s))
        .count();
    F::lit(mutual as f64) / F::lit(DEGREE as f64)
}

/// Undirected edge classes by endpoint strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkClass {
    CC,
    /// Mixed edge (CD and DC merged).
    CD,
    DD,
}

impl LinkClass {
    pub const ALL: [LinkClass; 3] = [LinkClass::CC, LinkClass::CD, LinkClass::DD];

    pub fn of(a: DilemmaAction, b: DilemmaAction) -> Self {
        match (a.is_cooperate(), b.is_cooperate()) {
            (true, true) => LinkClass::CC,
            (false, false) => LinkClass::DD,
            _ => LinkClass::CD,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkMetrics {
    /// Edges per class (CC, CD, DD).
    pub edges: [usize; 3],
    /// Edges per class with mutual offers.
    pub mutual: [usize; 3],
}

impl LinkMetrics {
    pub fn total_edges(&self) -> usize {
        self.edges.iter().sum()
    }

    /// Fraction of the class's edges carrying a mutual offer; `None` for an
    /// empty class.
    pub fn link_connection(&self, class: LinkClass) -> Option<f64> {
        let k = class.slot();
        (self.edges[k] > 0).then(|| self.mutual[k] as f64 / self.edges[k] as f64)
    }

    /// Share of all edges belonging to the class.
    pub fn link_proportion(&self, class: LinkClass) -> Option<f64> {
        let total = self.total_edges();
        (total > 0).then(|| self.edges[class.slot()] as f64 / total as f64)
    }
}

/// Classify every lattice edge once and count the mutual offers per class.
pub fn link_metrics(lattice: &Lattice, dilemmas: &[DilemmaAction], selections: &[SelectionAction]) -> LinkMetrics {
    let mut out = LinkMetrics::default();
    for (i, slot, j) in lattice.edges() {
        let k = LinkClass::of(dilemmas[i], dilemmas[j]).slot();
        out.edges[k] += 1;
        if selections[i].offers(slot) && selections[j].offers(crate::lattice::opposite_slot(slot)) {
            out.mutual[k] += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (`n − 1` denominator; zero for one value).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let std = if n > 1 {
            (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary {
            count: n,
            mean,
            median,
            std,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffStats {
    pub population: Option<Summary>,
    pub cooperators: Option<Summary>,
    pub defectors: Option<Summary>,
}

pub fn strategy_payoff_stats<F: Real>(final_payoffs: &[F], dilemmas: &[DilemmaAction]) -> PayoffStats {
    let all: Vec<f64> = final_payoffs.iter().map(|x| x.as_f64()).collect();
    let split = |want: DilemmaAction| -> Vec<f64> {
        all.iter()
            .zip(dilemmas)
            .filter(|(_, &a)| a == want)
            .map(|(&x, _)| x)
            .collect()
    };
    PayoffStats {
        population: Summary::of(&all),
        cooperators: Summary::of(&split(DilemmaAction::Cooperate)),
        defectors: Summary::of(&split(DilemmaAction::Defect)),
    }
}

/// One row of the metrics CSV. `None` marks an undefined value (e.g. the
/// defector payoff when nobody defects).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsRecord {
    pub coop_frac: Option<f64>,
    pub gini: Option<f64>,
    pub pay_mean: Option<f64>,
    pub pay_coop: Option<f64>,
    pub pay_def: Option<f64>,
    pub cr_c: Option<f64>,
    pub cr_d: Option<f64>,
    pub ec_c: Option<f64>,
    pub ec_d: Option<f64>,
    pub lc_cc: Option<f64>,
    pub lc_cd: Option<f64>,
    pub lc_dd: Option<f64>,
    pub lp_cc: Option<f64>,
    pub lp_cd: Option<f64>,
    pub lp_dd: Option<f64>,
}

impl MetricsRecord {
    /// Metric column names in CSV order.
    pub const COLUMNS: [&'static str; 15] = [
        "coop_frac",
        "gini",
        "pay_mean",
        "pay_coop",
        "pay_def",
        "cr_c",
        "cr_d",
        "ec_c",
        "ec_d",
        "lc_cc",
        "lc_cd",
        "lc_dd",
        "lp_cc",
        "lp_cd",
        "lp_dd",
    ];

    pub fn values(&self) -> [Option<f64>; 15] {
        [
            self.coop_frac,
            self.gini,
            self.pay_mean,
            self.pay_coop,
            self.pay_def,
            self.cr_c,
            self.cr_d,
            self.ec_c,
            self.ec_d,
            self.lc_cc,
            self.lc_cd,
            self.lc_dd,
            self.lp_cc,
            self.lp_cd,
            self.lp_dd,
        ]
    }

    pub fn from_values(v: [Option<f64>; 15]) -> Self {
        MetricsRecord {
            coop_frac: v[0],
            gini: v[1],
            pay_mean: v[2],
            pay_coop: v[3],
            pay_def: v[4],
            cr_c: v[5],
            cr_d: v[6],
            ec_c: v[7],
            ec_d: v[8],
            lc_cc: v[9],
            lc_cd: v[10],
            lc_dd: v[11],
            lp_cc: v[12],
            lp_cd: v[13],
            lp_dd: v[14],
        }
    }

    /// All metrics for one round. Payoff metrics use the memory-weighted
    /// payoffs; CR/EC are averaged over agents grouped by their dilemma
    /// action this round.
    pub fn from_outcome<F: Real>(lattice: &Lattice, outcome: &RoundOutcome<F>) -> Self {
        let n = lattice.len();
        let d = &outcome.dilemmas;
        let s = &outcome.selections;
        let coops = d.iter().filter(|a| a.is_cooperate()).count();
        let stats = strategy_payoff_stats(&outcome.final_payoffs, d);

        let mut cr = [0.0f64; 2];
        let mut ec = [0.0f64; 2];
        for i in 0..n {
            let toward = offers_toward(lattice, s, i);
            let k = d[i].index();
            cr[k] += connectivity_ratio::<f64>(toward);
            ec[k] += effective_connection::<f64>(s[i], toward);
        }
        let class_mean = |sum: f64, count: usize| (count > 0).then(|| sum / count as f64);
        let links = link_metrics(lattice, d, s);

        MetricsRecord {
            coop_frac: Some(coops as f64 / n as f64),
            gini: Some(gini(&outcome.final_payoffs).as_f64()),
            pay_mean: stats.population.map(|x| x.mean),
            pay_coop: stats.cooperators.map(|x| x.mean),
            pay_def: stats.defectors.map(|x| x.mean),
            cr_c: class_mean(cr[0], coops),
            cr_d: class_mean(cr[1], n - coops),
            ec_c: class_mean(ec[0], coops),
            ec_d: class_mean(ec[1], n - coops),
            lc_cc: links.link_connection(LinkClass::CC),
            lc_cd: links.link_connection(LinkClass::CD),
            lc_dd: links.link_connection(LinkClass::DD),
            lp_cc: links.link_proportion(LinkClass::CC),
            lp_cd: links.link_proportion(LinkClass::CD),
            lp_dd: links.link_proportion(LinkClass::DD),
        }
    }
}

/// Running per-column means over several records; absent values are
/// skipped column by column.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    sums: [f64; 15],
    counts: [usize; 15],
    records: usize,
}

impl MetricsAccumulator {
    pub fn add(&mut self, record: &MetricsRecord) {
        for (k, v) in record.values().iter().enumerate() {
            if let Some(x) = v {
                self.sums[k] += x;
                self.counts[k] += 1;
            }
        }
        self.records += 1;
    }

    pub fn records(&self) -> usize {
        self.records
    }

    pub fn mean(&self) -> MetricsRecord {
        let mut out = [None; 15];
        for (k, slot) in out.iter_mut().enumerate() {
            if self.counts[k] > 0 {
                *slot = Some(self.sums[k] / self.counts[k] as f64);
            }
        }
        MetricsRecord::from_values(out)
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use DilemmaAction::*;

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]), 0.0);
        assert_relative_eq!(gini(&[0.0, 0.0, 1.0]), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(gini(&[0.0f64; 5]), 0.0);
        assert_relative_eq!(gini(&[0.0, 0.0, 0.0, 7.0]), 0.75, epsilon = 1e-15);
    }

    fn sel(bits: [u8; 4]) -> SelectionAction {
        SelectionAction::from_bits(bits.map(|b| b == 1))
    }

    #[test]
    fn cr_and_ec_examples() {
        assert_eq!(connectivity_ratio::<f64>(SelectionAction::ALL), 1.0);
        assert_eq!(connectivity_ratio::<f64>(sel([1, 0, 1, 1])), 0.75);
        assert_eq!(connectivity_ratio::<f64>(SelectionAction::NONE), 0.0);
        assert_eq!(effective_connection::<f64>(sel([1, 1, 0, 0]), sel([1, 0, 1, 0])), 0.25);
        assert_eq!(effective_connection::<f64>(SelectionAction::ALL, SelectionAction::ALL), 1.0);
        assert_eq!(effective_connection::<f64>(SelectionAction::NONE, SelectionAction::ALL), 0.0);
    }

    #[test]
    fn link_metrics_by_hand() {
        let m = LinkMetrics {
            edges: [2, 1, 1],
            mutual: [1, 0, 1],
        };
        assert_eq!(m.link_proportion(LinkClass::CC), Some(0.5));
        assert_eq!(m.link_proportion(LinkClass::CD), Some(0.25));
        assert_eq!(m.link_connection(LinkClass::CC), Some(0.5));
        let empty = LinkMetrics {
            edges: [4, 0, 0],
            mutual: [4, 0, 0],
        };
        assert_eq!(empty.link_connection(LinkClass::DD), None);
    }

    #[test]
    fn all_cooperate_all_offer() {
        let l = Lattice::new(4).unwrap();
        let m = link_metrics(&l, &[Cooperate; 16], &[SelectionAction::ALL; 16]);
        assert_eq!(m.link_proportion(LinkClass::CC), Some(1.0));
        assert_eq!(m.link_connection(LinkClass::CC), Some(1.0));
    }

    #[test]
    fn payoff_stats_singletons_and_median() {
        let s = strategy_payoff_stats(&[3.52, 1.41], &[Cooperate, Defect]);
        assert_eq!(s.cooperators.unwrap().mean, 3.52);
        assert_eq!(s.defectors.unwrap().mean, 1.41);
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        let none = strategy_payoff_stats(&[1.0, 2.0], &[Cooperate, Cooperate]);
        assert!(none.defectors.is_none());
    }

    #[test]
    fn accumulator_skips_absent_values() {
        let mut acc = MetricsAccumulator::default();
        acc.add(&MetricsRecord {
            coop_frac: Some(1.0),
            pay_def: None,
            ..Default::default()
        });
        acc.add(&MetricsRecord {
            coop_frac: Some(0.5),
            pay_def: Some(2.0),
            ..Default::default()
        });
        let m = acc.mean();
        assert_eq!(m.coop_frac, Some(0.75));
        assert_eq!(m.pay_def, Some(2.0));
        assert_eq!(m.gini, None);
    }
}
