//! CSV rendering. Every document starts with a `#` block describing the
//! resolved scenario, then one header row, then data rows.

use std::fmt::Write as _;

use lorasg_core::analytic::Scenario;
use lorasg_core::{FadingModel, SimConfig};

/// Fixed column order for class results.
pub const RESULT_COLUMNS: [&str; 5] = ["n", "sf", "sensitivity_dbm", "window_s", "pi_analytic"];
pub const MC_COLUMNS: [&str; 3] = ["pi_mc", "mc_stderr", "z_score"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McColumns {
    pub pi_mc: f64,
    pub mc_stderr: f64,
    /// `None` when the estimate has zero spread.
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub sf: u8,
    pub sensitivity_dbm: f64,
    pub window_s: f64,
    pub pi_analytic: f64,
    pub mc: Option<McColumns>,
}

impl ResultRow {
    pub fn cells(&self) -> Vec<String> {
        let mut cells = vec![
            self.n.to_string(),
            self.sf.to_string(),
            dbm(self.sensitivity_dbm),
            seconds(self.window_s),
            prob(self.pi_analytic),
        ];
        if let Some(mc) = &self.mc {
            cells.push(prob(mc.pi_mc));
            cells.push(prob(mc.mc_stderr));
            cells.push(
                mc.z_score
                    .map_or_else(|| "NA".to_string(), |z| format!("{z:.3}")),
            );
        }
        cells
    }
}

pub fn dbm(x: f64) -> String {
    format!("{x:.2}")
}

pub fn signed_db(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| format!("{v:+.2}"))
}

pub fn opt_dbm(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), dbm)
}

/// Microsecond resolution; every LoRa airtime is a multiple of 1 µs at 125 kHz.
pub fn seconds(x: f64) -> String {
    format!("{x:.6}")
}

/// Six significant digits, switching to exponent form for tiny values.
pub fn prob(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if mag < -4 {
        format!("{x:.5e}")
    } else {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// Shortest round-trip rendering for echoed parameters; exponent form when tiny.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, line: impl AsRef<str>) {
        let line = line.as_ref();
        if line.is_empty() {
            self.buf.push_str("#\n");
        } else {
            let _ = writeln!(self.buf, "# {line}");
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: impl IntoIterator<Item = S>) {
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(c.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Echo of the resolved scenario.
pub fn scenario_header(csv: &mut Csv, command: &str, scn: &Scenario, class_preset: &str) {
    csv.comment(format!("lorasg {command}"));
    csv.comment(format!(
        "network: n_nodes={} lambda_s={} norm_radius_m={} lambda_t={} alpha={}",
        num(scn.n_nodes()),
        num(scn.lambda_s),
        num(scn.norm_radius_m),
        num(scn.lambda_t),
        num(scn.alpha)
    ));
    let fading = match scn.fading {
        FadingModel::LogNormal { sigma_db } => format!("lognormal sigma_db={}", num(sigma_db)),
        other => other.name().to_string(),
    };
    csv.comment(format!(
        "channel: beta={} kappa={} p_tr_dbm={} fading={}",
        num(scn.pathloss.beta),
        num(scn.pathloss.kappa),
        lorasg_core::channel::mw_to_dbm(scn.p_tr_mw).map_or_else(|_| "NA".into(), dbm),
        fading
    ));
    let r = &scn.radio;
    csv.comment(format!(
        "radio: bw_hz={} n_preamble_extra={} payload_bytes={} header={} low_rate_opt={} cr=4/{}",
        num(r.bandwidth_hz),
        r.n_preamble_extra,
        r.payload_bytes,
        r.header_flag,
        r.low_rate_opt,
        r.cr_code + 4
    ));
    let classes: Vec<String> = scn
        .classes
        .iter()
        .map(|c| format!("SF{}:{}", c.sf, dbm(c.sensitivity_dbm())))
        .collect();
    csv.comment(format!("classes ({class_preset}): {}", classes.join(" ")));
    csv.comment(format!(
        "note: transmissions received below P_1 = {} dBm are lost before any collision \
         logic; pi values are conditional on the class the packet is received in",
        dbm(scn.classes[0].sensitivity_dbm())
    ));
}

pub fn sim_header(csv: &mut Csv, sim: &SimConfig, mode: &str) {
    csv.comment(format!(
        "sim: mode={mode} replications={} seed={} tail_epsilon={} disk_truncation_m={}",
        sim.replications,
        sim.seed,
        num(sim.tail_epsilon),
        sim.disk_truncation_m.map_or_else(|| "none".into(), num)
    ));
}
