use serde::{Deserialize, Serialize};

use crate::integrator::FrontEntry;

/// One highlighted design of the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub chromosome: Vec<usize>,
    pub synthesized_area: f64,
    pub accuracy_test: f64,
    /// `1 - area / exact_area`.
    pub area_reduction: f64,
}

/// Headline numbers, all relative to the all-exact netlist and measured on
/// the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub exact_synthesized_area: f64,
    pub exact_accuracy_test: f64,
    /// Smallest design at least as accurate as the exact one.
    pub iso_accuracy: SummaryPoint,
    /// Smallest design losing at most `max_accuracy_drop`.
    pub bounded_drop: SummaryPoint,
    pub max_accuracy_drop: f64,
}

fn point(e: &FrontEntry, exact_area: f64) -> SummaryPoint {
    SummaryPoint {
        chromosome: e.chromosome.clone(),
        synthesized_area: e.synthesized_area,
        accuracy_test: e.accuracy_test,
        area_reduction: 1.0 - e.synthesized_area / exact_area,
    }
}

fn smallest_with<'a>(candidates: impl Iterator<Item = &'a FrontEntry>, min_accuracy: f64) -> Option<&'a FrontEntry> {
    candidates.filter(|e| e.accuracy_test >= min_accuracy).min_by(|a, b| {
        a.synthesized_area
            .total_cmp(&b.synthesized_area)
            .then_with(|| b.accuracy_test.total_cmp(&a.accuracy_test))
            .then_with(|| a.chromosome.cmp(&b.chromosome))
    })
}

/// Area reductions at iso-accuracy and within a 5-point accuracy drop. The
/// exact design always qualifies, so both points exist.
pub fn report_summary(front: &[FrontEntry], exact: &FrontEntry) -> Summary {
    const DROP: f64 = 0.05;
    let area = exact.synthesized_area;
    let pool = || front.iter().chain(std::iter::once(exact));
    let iso = smallest_with(pool(), exact.accuracy_test).unwrap_or(exact);
    // tolerance keeps an exactly-five-point drop inside the bound
    let drop = smallest_with(pool(), exact.accuracy_test - DROP - 1e-12).unwrap_or(exact);
    Summary {
        exact_synthesized_area: area,
        exact_accuracy_test: exact.accuracy_test,
        iso_accuracy: point(iso, area),
        bounded_drop: point(drop, area),
        max_accuracy_drop: DROP,
    }
}
