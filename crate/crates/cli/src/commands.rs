//! The five commands. Each returns the full text it would print so tests can
//! drive them without spawning a process.

use lorasg_core::analytic::{
    equalize_sensitivities, homogeneous_equivalent, reception_probabilities,
    reception_probabilities_finite_disk, reception_probability, to_dbm, Scenario,
};
use lorasg_core::lora_phy::packet_airtime;
use lorasg_core::montecarlo::simulate_class;
use lorasg_core::reproduce::compare_with_published;
use lorasg_core::{ClassResult, FadingModel, RadioConfig, SimMode};

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::output::{
    dbm, opt_dbm, prob, scenario_header, seconds, signed_db, sim_header, Csv, McColumns, ResultRow,
    MC_COLUMNS, RESULT_COLUMNS,
};

/// Command output plus whether an oracle disagreement was detected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub text: String,
    pub disagreement: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Report {
            text,
            disagreement: false,
        }
    }
}

/// `|z|` above this makes `simulate` exit with the disagreement status.
pub const Z_FAIL: f64 = 4.0;

/// Density points parsed from `A:B:STEP` (node counts in the normalization disk).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl NodeRange {
    pub const FIGURE_DEFAULT: NodeRange = NodeRange {
        start: 100.0,
        stop: 2000.0,
        step: 100.0,
    };

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || CliError::Usage(format!("--nodes expects A:B:STEP, got {text:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        Ok(NodeRange {
            start: v[0],
            stop: v[1],
            step: v[2],
        })
    }

    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let finite = self.start.is_finite() && self.stop.is_finite() && self.step.is_finite();
        if !finite || self.step <= 0.0 || self.start < 0.0 || self.start > self.stop {
            return Err(CliError::Usage(format!(
                "empty node range {}:{}:{}",
                self.start, self.stop, self.step
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| self.start + k as f64 * self.step)
            .collect())
    }
}

fn row_from(class: &ClassResult, scn: &Scenario) -> ResultRow {
    ResultRow {
        n: class.index_n,
        sf: class.sf,
        sensitivity_dbm: scn.classes[class.index_n - 1].sensitivity_dbm(),
        window_s: class.window_s,
        pi_analytic: class.pi,
        mc: None,
    }
}

pub fn airtime(sf: u8, radio: &RadioConfig) -> Result<Report, CliError> {
    let at = packet_airtime(sf, radio)?;
    let mut csv = Csv::new();
    csv.comment("lorasg airtime");
    csv.comment(format!(
        "radio: bw_hz={} n_preamble_extra={} payload_bytes={} header={} low_rate_opt={} cr=4/{}",
        radio.bandwidth_hz,
        radio.n_preamble_extra,
        radio.payload_bytes,
        radio.header_flag,
        radio.low_rate_opt,
        radio.cr_code + 4
    ));
    csv.row([
        "sf",
        "symbol_s",
        "preamble_s",
        "payload_symbols",
        "payload_s",
        "total_s",
        "lock_window_s",
        "vulnerability_s",
    ]);
    csv.row([
        sf.to_string(),
        seconds(at.symbol_s),
        seconds(at.preamble_s),
        at.payload_symbols.to_string(),
        seconds(at.payload_s),
        seconds(at.total_s),
        seconds(at.lock_window_s),
        seconds(at.vulnerability_s),
    ]);
    Ok(Report::ok(csv.finish()))
}

pub fn analyze(cfg: &ResolvedConfig, nodes: Option<&NodeRange>) -> Result<Report, CliError> {
    let scn = &cfg.scenario;
    let mut csv = Csv::new();
    scenario_header(&mut csv, "analyze", scn, &cfg.class_preset);
    match nodes {
        None => {
            csv.row(RESULT_COLUMNS);
            for r in reception_probabilities(scn)? {
                csv.row(row_from(&r, scn).cells());
            }
        }
        Some(range) => {
            let points = range.points()?;
            csv.comment(format!(
                "sweep: n_nodes from {} to {} step {}",
                range.start, range.stop, range.step
            ));
            csv.row(std::iter::once("n_nodes").chain(RESULT_COLUMNS));
            for n_nodes in points {
                let s = scn.clone().with_nodes(n_nodes);
                for r in reception_probabilities(&s)? {
                    csv.row(std::iter::once(node_label(n_nodes)).chain(row_from(&r, &s).cells()));
                }
            }
        }
    }
    Ok(Report::ok(csv.finish()))
}

fn node_label(n: f64) -> String {
    format!("{n}")
}

pub fn equalize(
    cfg: &ResolvedConfig,
    target_pi: f64,
    compare_published: bool,
    stress_nodes: f64,
) -> Result<Report, CliError> {
    let scn = &cfg.scenario;
    let mut csv = Csv::new();
    scenario_header(&mut csv, "equalize", scn, &cfg.class_preset);
    csv.comment(format!("target_pi={}", target_pi));
    let equalized_mw = equalize_sensitivities(scn, target_pi)?;
    let equalized = to_dbm(&equalized_mw)?;
    let check = scn.with_sensitivities_mw(&equalized_mw)?;
    let recomputed = reception_probabilities(&check)?;

    csv.row([
        "n",
        "sf",
        "sensitivity_dbm_equalized",
        "sensitivity_dbm_reference",
        "pi_equalized",
    ]);
    for ((class, eq), r) in scn.classes.iter().zip(&equalized).zip(&recomputed) {
        csv.row([
            class.index_n.to_string(),
            class.sf.to_string(),
            dbm(*eq),
            dbm(class.sensitivity_dbm()),
            prob(r.pi),
        ]);
    }
    let worst = recomputed
        .iter()
        .map(|r| (r.pi - target_pi).abs())
        .fold(0.0f64, f64::max);
    let per_sf: Vec<String> = recomputed
        .iter()
        .map(|r| format!("SF{}={}", r.sf, prob(r.pi)))
        .collect();
    csv.comment(format!(
        "self-check: recomputed pi {} (max deviation {:.1e})",
        per_sf.join(" "),
        worst
    ));

    if compare_published {
        let cmp = compare_with_published(scn, target_pi, stress_nodes)?;
        csv.comment("");
        csv.comment(format!(
            "published comparison: target_pi={} n_nodes={} stress_nodes={} disk_radius_m={}",
            cmp.target_pi,
            node_label(cmp.n_nodes),
            node_label(cmp.stress_nodes),
            cmp.disk_radius_m
        ));
        csv.comment(
            "finite-disk is an extension mode: interferers confined to the normalization disk",
        );
        csv.row([
            "domain",
            "sf",
            "reference_dbm",
            "published_dbm",
            "computed_dbm",
            "delta_db",
            "pi_reference",
        ]);
        for d in &cmp.domains {
            for row in &d.rows {
                csv.row([
                    d.domain.name().to_string(),
                    row.sf.to_string(),
                    dbm(row.reference_dbm),
                    opt_dbm(row.published_dbm),
                    opt_dbm(row.equalized_dbm),
                    signed_db(row.delta_db()),
                    prob(row.pi_reference),
                ]);
            }
        }
        for d in &cmp.domains {
            let s = d.structure;
            csv.comment(format!(
                "structure {}: feasible={} increasing={} within_legal_range={} weakest_lowest={} holds={}",
                d.domain.name(),
                s.feasible,
                s.increasing,
                s.within_legal_range,
                s.weakest_lowest,
                s.holds()
            ));
        }
        csv.comment(format!(
            "qualitative structure holds in at least one domain: {}",
            cmp.any_domain_holds()
        ));
    }
    Ok(Report::ok(csv.finish()))
}

pub fn simulate(cfg: &ResolvedConfig, mode: SimMode) -> Result<Report, CliError> {
    let scn = &cfg.scenario;
    let sim = &cfg.sim;
    sim.validate()?;
    let mut csv = Csv::new();
    scenario_header(&mut csv, "simulate", scn, &cfg.class_preset);
    sim_header(&mut csv, sim, mode.name());
    let analytic = match sim.disk_truncation_m {
        Some(radius) => {
            csv.comment(format!(
                "finite-disk mode (extension): interferers within {radius} m, pi_analytic is the matching finite-disk value"
            ));
            reception_probabilities_finite_disk(scn, radius)?
        }
        None => reception_probabilities(scn)?,
    };
    csv.row(RESULT_COLUMNS.iter().chain(MC_COLUMNS.iter()));
    let mut disagreement = false;
    for r in &analytic {
        let est = simulate_class(scn, r.index_n, sim, mode)?;
        let z = est.z_score(r.pi);
        if z.is_some_and(|z| z.abs() > Z_FAIL) {
            disagreement = true;
        }
        let mut row = row_from(r, scn);
        row.mc = Some(McColumns {
            pi_mc: est.p_hat,
            mc_stderr: est.stderr,
            z_score: z,
        });
        csv.row(row.cells());
    }
    Ok(Report {
        text: csv.finish(),
        disagreement,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Figure2,
    Figure3,
    Figure4,
}

impl SweepKind {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "figure2" => Ok(SweepKind::Figure2),
            "figure3" => Ok(SweepKind::Figure3),
            "figure4" => Ok(SweepKind::Figure4),
            other => Err(CliError::Usage(format!(
                "unknown sweep kind {other:?}; expected figure2, figure3 or figure4"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Figure2 => "figure2",
            SweepKind::Figure3 => "figure3",
            SweepKind::Figure4 => "figure4",
        }
    }
}

/// Log-normal spread used in the fading comparison when the scenario does not set one.
pub const FIGURE3_SIGMA_DB: f64 = 2.0;
/// Density decay exponent of the inhomogeneous sweep.
pub const FIGURE4_ALPHA: f64 = -0.2;

pub fn sweep(cfg: &ResolvedConfig, kind: SweepKind, nodes: &NodeRange) -> Result<Report, CliError> {
    let points = nodes.points()?;
    let mut scn = cfg.scenario.clone();
    match kind {
        SweepKind::Figure2 => scn.fading = FadingModel::Rayleigh,
        SweepKind::Figure3 => {}
        SweepKind::Figure4 => scn.alpha = FIGURE4_ALPHA,
    }
    scn.validate()?;
    let mut csv = Csv::new();
    scenario_header(
        &mut csv,
        &format!("sweep {}", kind.name()),
        &scn,
        &cfg.class_preset,
    );
    csv.comment(format!(
        "sweep: n_nodes from {} to {} step {}",
        nodes.start, nodes.stop, nodes.step
    ));
    match kind {
        SweepKind::Figure2 => {
            csv.row(std::iter::once("n_nodes").chain(RESULT_COLUMNS));
            for n_nodes in points {
                let s = scn.clone().with_nodes(n_nodes);
                for r in reception_probabilities(&s)? {
                    csv.row(std::iter::once(node_label(n_nodes)).chain(row_from(&r, &s).cells()));
                }
            }
        }
        SweepKind::Figure3 => {
            let n = scn
                .classes
                .iter()
                .find(|c| c.sf == 12)
                .map(|c| c.index_n)
                .ok_or_else(|| CliError::Usage("figure3 needs an SF12 class".into()))?;
            let sigma_db = match scn.fading {
                FadingModel::LogNormal { sigma_db } => sigma_db,
                _ => FIGURE3_SIGMA_DB,
            };
            let models = [
                FadingModel::NoFading,
                FadingModel::Rayleigh,
                FadingModel::LogNormal { sigma_db },
            ];
            csv.comment(format!("class n={n} (SF12); lognormal sigma_db={sigma_db}"));
            csv.row([
                "n_nodes",
                "sf",
                "sensitivity_dbm",
                "pi_none",
                "pi_rayleigh",
                "pi_lognormal",
            ]);
            for n_nodes in points {
                let mut cells = vec![
                    node_label(n_nodes),
                    "12".to_string(),
                    dbm(scn.classes[n - 1].sensitivity_dbm()),
                ];
                for model in models {
                    let s = scn.clone().with_nodes(n_nodes).with_fading(model);
                    cells.push(prob(reception_probability(&s, n)?.pi));
                }
                csv.row(cells);
            }
        }
        SweepKind::Figure4 => {
            csv.comment(format!(
                "alpha={FIGURE4_ALPHA}; pi_homogeneous is the equivalent homogeneous scenario"
            ));
            csv.row(
                std::iter::once("n_nodes")
                    .chain(RESULT_COLUMNS)
                    .chain(["pi_homogeneous"]),
            );
            for n_nodes in points {
                let s = scn.clone().with_nodes(n_nodes);
                let equiv = reception_probabilities(&homogeneous_equivalent(&s)?)?;
                for (r, h) in reception_probabilities(&s)?.iter().zip(&equiv) {
                    csv.row(
                        std::iter::once(node_label(n_nodes))
                            .chain(row_from(r, &s).cells())
                            .chain([prob(h.pi)]),
                    );
                }
            }
        }
    }
    Ok(Report::ok(csv.finish()))
}
