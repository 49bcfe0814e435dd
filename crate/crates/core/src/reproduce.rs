//! Side-by-side comparison of equalized sensitivities with the published
//! reference values, under the infinite-plane model and with interferers
//! confined to the normalization disk.

use crate::analytic::{
    equalize_sensitivities, equalize_sensitivities_finite_disk, reception_probabilities,
    reception_probabilities_finite_disk, to_dbm, Scenario, PUBLISHED_EQUALIZED_DBM,
};
use crate::channel::mw_to_dbm;
use crate::error::Result;

/// Legal sensitivity range `(-137, -121]` dBm.
pub const LEGAL_RANGE_DBM: (f64, f64) = (-137.0, -121.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceDomain {
    InfinitePlane,
    FiniteDisk,
}

impl InterferenceDomain {
    pub fn name(&self) -> &'static str {
        match self {
            InterferenceDomain::InfinitePlane => "infinite-plane",
            InterferenceDomain::FiniteDisk => "finite-disk",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub sf: u8,
    pub reference_dbm: f64,
    /// Published equalized value, when the SF appears in the published table.
    pub published_dbm: Option<f64>,
    /// `None` when the class cannot be equalized in this domain.
    pub equalized_dbm: Option<f64>,
    /// Reception probability under the scenario's own thresholds.
    pub pi_reference: f64,
}

impl ComparisonRow {
    /// Signed `computed - published` in dB.
    pub fn delta_db(&self) -> Option<f64> {
        Some(self.equalized_dbm? - self.published_dbm?)
    }
}

/// Qualitative structure expected of an equalized threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureCheck {
    pub feasible: bool,
    /// Thresholds strictly increase from the weakest class (largest SF) up.
    pub increasing: bool,
    pub within_legal_range: bool,
    /// SF 10, 11 and 12 have the three lowest reception probabilities under
    /// the reference thresholds at the stress density.
    pub weakest_lowest: bool,
}

impl StructureCheck {
    pub fn holds(&self) -> bool {
        self.feasible && self.increasing && self.within_legal_range && self.weakest_lowest
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainComparison {
    pub domain: InterferenceDomain,
    pub rows: Vec<ComparisonRow>,
    pub structure: StructureCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedComparison {
    pub target_pi: f64,
    pub n_nodes: f64,
    pub stress_nodes: f64,
    pub disk_radius_m: f64,
    pub domains: Vec<DomainComparison>,
}

impl PublishedComparison {
    pub fn any_domain_holds(&self) -> bool {
        self.domains.iter().any(|d| d.structure.holds())
    }
}

fn published_value(sf: u8) -> Option<f64> {
    PUBLISHED_EQUALIZED_DBM
        .iter()
        .find(|&&(s, _)| s == sf)
        .map(|&(_, d)| d)
}

/// Equalizes `scn` to `target_pi` in both domains and checks the structure,
/// judging the "weakest classes are worst" property at `stress_nodes`.
pub fn compare_with_published(
    scn: &Scenario,
    target_pi: f64,
    stress_nodes: f64,
) -> Result<PublishedComparison> {
    scn.validate()?;
    let radius = scn.norm_radius_m;
    let stress = scn.clone().with_nodes(stress_nodes);
    let mut domains = Vec::new();
    for domain in [
        InterferenceDomain::InfinitePlane,
        InterferenceDomain::FiniteDisk,
    ] {
        let (equalized, pi_ref, pi_stress) = match domain {
            InterferenceDomain::InfinitePlane => (
                equalize_sensitivities(scn, target_pi)?
                    .into_iter()
                    .map(Some)
                    .collect::<Vec<_>>(),
                reception_probabilities(scn)?,
                reception_probabilities(&stress)?,
            ),
            InterferenceDomain::FiniteDisk => (
                equalize_sensitivities_finite_disk(scn, target_pi, radius)?,
                reception_probabilities_finite_disk(scn, radius)?,
                reception_probabilities_finite_disk(&stress, radius)?,
            ),
        };
        let rows = scn
            .classes
            .iter()
            .zip(&equalized)
            .zip(&pi_ref)
            .map(|((class, eq), r)| {
                Ok(ComparisonRow {
                    sf: class.sf,
                    reference_dbm: class.sensitivity_dbm(),
                    published_dbm: published_value(class.sf),
                    equalized_dbm: eq.map(mw_to_dbm).transpose()?,
                    pi_reference: r.pi,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let structure = check_structure(
            &rows,
            &pi_stress.iter().map(|r| (r.sf, r.pi)).collect::<Vec<_>>(),
        );
        domains.push(DomainComparison {
            domain,
            rows,
            structure,
        });
    }
    Ok(PublishedComparison {
        target_pi,
        n_nodes: scn.n_nodes(),
        stress_nodes,
        disk_radius_m: radius,
        domains,
    })
}

fn check_structure(rows: &[ComparisonRow], stress_pi: &[(u8, f64)]) -> StructureCheck {
    let values: Option<Vec<f64>> = rows.iter().map(|r| r.equalized_dbm).collect();
    let feasible = values.is_some();
    let values = values.unwrap_or_default();
    let increasing = feasible && values.windows(2).all(|w| w[0] < w[1]);
    let (lo, hi) = LEGAL_RANGE_DBM;
    let within_legal_range = feasible && values.iter().all(|&v| v > lo && v <= hi);
    StructureCheck {
        feasible,
        increasing,
        within_legal_range,
        weakest_lowest: weakest_three_lowest(stress_pi),
    }
}

/// True when SF 10, 11 and 12 hold the three smallest probabilities.
pub fn weakest_three_lowest(pis: &[(u8, f64)]) -> bool {
    let mut sorted = pis.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut lowest: Vec<u8> = sorted.iter().take(3).map(|&(sf, _)| sf).collect();
    lowest.sort_unstable();
    lowest == [10, 11, 12]
}

/// Equalized thresholds in dBm (infinite plane), weakest first.
pub fn equalized_dbm(scn: &Scenario, target_pi: f64) -> Result<Vec<f64>> {
    to_dbm(&equalize_sensitivities(scn, target_pi)?)
}
