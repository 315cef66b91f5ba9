//! Counterfactual utility: the reward both Q-networks learn from. It weighs
//! an agent's own smoothed payoff against the population's average payoff
//! for the dilemma action it did not take, scaled by how many neighbours
//! took each action.

use crate::lattice::{DilemmaAction, DEGREE};
use crate::Real;

/// Mean final payoff per dilemma action over one arena at one timestep.
/// A class with no members has mean zero and count zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PopulationAverages<F> {
    pub mean_cooperate: F,
    pub mean_defect: F,
    pub count_cooperate: usize,
    pub count_defect: usize,
}

impl<F: Real> PopulationAverages<F> {
    pub fn mean(&self, action: DilemmaAction) -> F {
        match action {
            DilemmaAction::Cooperate => self.mean_cooperate,
            DilemmaAction::Defect => self.mean_defect,
        }
    }

    pub fn count(&self, action: DilemmaAction) -> usize {
        match action {
            DilemmaAction::Cooperate => self.count_cooperate,
            DilemmaAction::Defect => self.count_defect,
        }
    }
}

pub fn population_averages<F: Real>(final_payoffs: &[F], dilemmas: &[DilemmaAction]) -> PopulationAverages<F> {
    assert_eq!(final_payoffs.len(), dilemmas.len());
    let (mut sum_c, mut sum_d) = (F::zero(), F::zero());
    let (mut n_c, mut n_d) = (0usize, 0usize);
    for (&r, &a) in final_payoffs.iter().zip(dilemmas) {
        match a {
            DilemmaAction::Cooperate => {
                sum_c = sum_c + r;
                n_c += 1;
            }
            DilemmaAction::Defect => {
                sum_d = sum_d + r;
                n_d += 1;
            }
        }
    }
    let mean = |sum: F, n: usize| if n == 0 { F::zero() } else { sum / F::lit(n as f64) };
    PopulationAverages {
        mean_cooperate: mean(sum_c, n_c),
        mean_defect: mean(sum_d, n_d),
        count_cooperate: n_c,
        count_defect: n_d,
    }
}

/// `U = [(ω(a)+1)·R − ω(ã)·R̄(ã)] / (ω(C)+ω(D)+1)` where `ω` counts
/// neighbours per action and `ã` is the action not taken.
pub fn counterfactual_utility<F: Real>(
    own_final_payoff: F,
    own_action: DilemmaAction,
    neighbour_actions: &[DilemmaAction; DEGREE],
    averages: &PopulationAverages<F>,
) -> F {
    let same = neighbour_actions.iter().filter(|&&a| a == own_action).count();
    let other = DEGREE - same;
    if other == 0 {
        return own_final_payoff;
    }
    let counter = own_action.other();
    let num = F::lit((same + 1) as f64) * own_final_payoff - F::lit(other as f64) * averages.mean(counter);
    num / F::lit((DEGREE + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use DilemmaAction::*;

    #[test]
    fn averages_examples() {
        let a = population_averages(&[1.0, 3.0], &[Cooperate, Cooperate]);
        assert_eq!((a.mean_cooperate, a.mean_defect, a.count_defect), (2.0, 0.0, 0));

        let a = population_averages(&[1.0, 2.0], &[Defect, Defect]);
        assert_eq!((a.mean_cooperate, a.count_cooperate), (0.0, 0));

        let a = population_averages(&[1.0, 2.0, 3.0, 6.0], &[Cooperate, Defect, Cooperate, Defect]);
        assert_eq!((a.mean_cooperate, a.mean_defect), (2.0, 4.0));
    }

    #[test]
    fn utility_examples() {
        let avg = PopulationAverages {
            mean_cooperate: 1.0,
            mean_defect: 0.5,
            count_cooperate: 1,
            count_defect: 1,
        };
        assert_eq!(counterfactual_utility(2.5, Defect, &[Defect; 4], &avg), 2.5);
        assert_relative_eq!(
            counterfactual_utility(1.0, Cooperate, &[Cooperate, Cooperate, Defect, Defect], &avg),
            0.4,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            counterfactual_utility(1.2, Defect, &[Cooperate; 4], &avg),
            -0.56,
            epsilon = 1e-15
        );
    }

    #[test]
    fn identical_payoffs_expand_by_hand() {
        let r = 1.7;
        let avg = PopulationAverages {
            mean_cooperate: r,
            mean_defect: r,
            count_cooperate: 3,
            count_defect: 2,
        };
        let nbs = [Cooperate, Defect, Defect, Defect];
        // own C: ω(a)=1, ω(ã)=3
        assert_relative_eq!(counterfactual_utility(r, Cooperate, &nbs, &avg), r * (1.0 + 1.0 - 3.0) / 5.0);
        // own D: ω(a)=3, ω(ã)=1
        assert_relative_eq!(counterfactual_utility(r, Defect, &nbs, &avg), r * (3.0 + 1.0 - 1.0) / 5.0);
    }
}
