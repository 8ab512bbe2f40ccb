use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{AircraftState, Maneuver};
use crate::engine::EpisodeRow;
use crate::error::{Error, Result};
use crate::geometry::{terminal_status, Outcome, RewardConfig};

/// Column order of trajectory files. Angles are radians.
pub const CSV_COLUMNS: [&str; 23] = [
    "step", "t_s", "v_r", "x_r", "y_r", "z_r", "theta_r", "psi_r", "bank_r", "maneuver_r", "v_b",
    "x_b", "y_b", "z_b", "theta_b", "psi_b", "bank_b", "maneuver_b", "aa_red", "ata_red",
    "range_m", "reward_red", "reward_blue",
];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    step: u32,
    t_s: f64,
    v_r: f64,
    x_r: f64,
    y_r: f64,
    z_r: f64,
    theta_r: f64,
    psi_r: f64,
    bank_r: f64,
    maneuver_r: Option<Maneuver>,
    v_b: f64,
    x_b: f64,
    y_b: f64,
    z_b: f64,
    theta_b: f64,
    psi_b: f64,
    bank_b: f64,
    maneuver_b: Option<Maneuver>,
    aa_red: f64,
    ata_red: f64,
    range_m: f64,
    reward_red: f64,
    reward_blue: f64,
}

impl From<&EpisodeRow> for CsvRow {
    fn from(r: &EpisodeRow) -> Self {
        Self {
            step: r.step,
            t_s: r.t_s,
            v_r: r.red.v,
            x_r: r.red.x,
            y_r: r.red.y,
            z_r: r.red.z,
            theta_r: r.red.theta,
            psi_r: r.red.psi,
            bank_r: r.red.bank,
            maneuver_r: r.maneuver_red,
            v_b: r.blue.v,
            x_b: r.blue.x,
            y_b: r.blue.y,
            z_b: r.blue.z,
            theta_b: r.blue.theta,
            psi_b: r.blue.psi,
            bank_b: r.blue.bank,
            maneuver_b: r.maneuver_blue,
            aa_red: r.aa_red,
            ata_red: r.ata_red,
            range_m: r.range_m,
            reward_red: r.reward_red,
            reward_blue: r.reward_blue,
        }
    }
}

impl From<CsvRow> for EpisodeRow {
    fn from(r: CsvRow) -> Self {
        let craft = |v, x, y, z, theta, psi, bank| AircraftState {
            v,
            x,
            y,
            z,
            theta,
            psi,
            bank,
        };
        Self {
            step: r.step,
            t_s: r.t_s,
            red: craft(r.v_r, r.x_r, r.y_r, r.z_r, r.theta_r, r.psi_r, r.bank_r),
            blue: craft(r.v_b, r.x_b, r.y_b, r.z_b, r.theta_b, r.psi_b, r.bank_b),
            maneuver_red: r.maneuver_r,
            maneuver_blue: r.maneuver_b,
            aa_red: r.aa_red,
            ata_red: r.ata_red,
            range_m: r.range_m,
            reward_red: r.reward_red,
            reward_blue: r.reward_blue,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Format(format!("trajectory line {}: {e}", p.line())),
        None => Error::Format(format!("trajectory: {e}")),
    }
}

pub fn write_trajectory<W: Write>(out: W, rows: &[EpisodeRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in rows {
        w.serialize(CsvRow::from(r)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trajectory file. Errors carry the 1-based line number.
pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<EpisodeRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Format(format!(
            "trajectory line 1: header does not match the expected columns `{}`",
            CSV_COLUMNS.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<CsvRow>() {
        rows.push(EpisodeRow::from(rec.map_err(csv_error)?));
    }
    Ok(rows)
}

/// Outcome implied by the last row of a trajectory.
pub fn infer_outcome(rows: &[EpisodeRow], reward: &RewardConfig, max_steps: u32) -> Result<Outcome> {
    match rows.last() {
        Some(last) => Ok(terminal_status(&last.combat_state(), max_steps, reward)?),
        None => Ok(Outcome::Ongoing),
    }
}
