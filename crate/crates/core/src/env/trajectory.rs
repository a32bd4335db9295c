//! Per-step trajectory logs in CSV (one row per vehicle per step).
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a dump recovers the exact bits and metric recomputation is lossless.

use super::sim::{StepEvents, VehicleId};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub const TRAJECTORY_HEADER: &str = "episode,step,vehicle,x,y,heading,speed,option,option_started,reward,collided,lane_change_completed,lane_change_failed,off_track,travel";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub episode: u32,
    pub step: u32,
    pub vehicle: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    /// Option executed during this step (-1 for scripted vehicles).
    pub option: i8,
    /// Set on the step where the option began.
    pub option_started: bool,
    /// Team reward received by this vehicle this step (0 for scripted).
    pub reward: f64,
    pub collided: bool,
    pub lane_change_completed: bool,
    pub lane_change_failed: bool,
    pub off_track: bool,
    pub travel: f64,
}

impl TrajectoryRow {
    pub fn event_flags(id: VehicleId, events: &StepEvents) -> (bool, bool, bool, bool) {
        (
            events.collided(id),
            events.lane_change_completed.contains(&id),
            events.lane_change_failed.contains(&id),
            events.off_track.contains(&id),
        )
    }
}

pub fn write_header(out: &mut impl Write) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    Ok(())
}

pub fn write_row(out: &mut impl Write, r: &TrajectoryRow) -> Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.episode,
        r.step,
        r.vehicle,
        r.x,
        r.y,
        r.heading,
        r.speed,
        r.option,
        r.option_started as u8,
        r.reward,
        r.collided as u8,
        r.lane_change_completed as u8,
        r.lane_change_failed as u8,
        r.off_track as u8,
        r.travel,
    )?;
    Ok(())
}

pub fn read_rows(reader: impl BufRead) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if i == 0 {
            if line != TRAJECTORY_HEADER {
                return Err(Error::MalformedLog {
                    line: 1,
                    message: "unexpected header".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        rows.push(parse_row(&line, line_no)?);
    }
    Ok(rows)
}

fn parse_row(line: &str, line_no: usize) -> Result<TrajectoryRow> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 15 {
        return Err(Error::MalformedLog {
            line: line_no,
            message: format!("expected 15 fields, got {}", fields.len()),
        });
    }
    let bad = |what: &str| Error::MalformedLog {
        line: line_no,
        message: format!("bad {what}"),
    };
    let parse_f64 = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
    let parse_bool = |s: &str, what: &str| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(bad(what)),
    };
    Ok(TrajectoryRow {
        episode: fields[0].parse().map_err(|_| bad("episode"))?,
        step: fields[1].parse().map_err(|_| bad("step"))?,
        vehicle: fields[2].parse().map_err(|_| bad("vehicle"))?,
        x: parse_f64(fields[3], "x")?,
        y: parse_f64(fields[4], "y")?,
        heading: parse_f64(fields[5], "heading")?,
        speed: parse_f64(fields[6], "speed")?,
        option: fields[7].parse().map_err(|_| bad("option"))?,
        option_started: parse_bool(fields[8], "option_started")?,
        reward: parse_f64(fields[9], "reward")?,
        collided: parse_bool(fields[10], "collided")?,
        lane_change_completed: parse_bool(fields[11], "lane_change_completed")?,
        lane_change_failed: parse_bool(fields[12], "lane_change_failed")?,
        off_track: parse_bool(fields[13], "off_track")?,
        travel: parse_f64(fields[14], "travel")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufReader;

    fn sample_row() -> TrajectoryRow {
        TrajectoryRow {
            episode: 3,
            step: 7,
            vehicle: 1,
            x: 1.0 / 3.0,
            y: -0.125,
            heading: 0.523_598_775_598_298_8,
            speed: 0.072,
            option: 3,
            option_started: true,
            reward: -13.85,
            collided: false,
            lane_change_completed: true,
            lane_change_failed: false,
            off_track: false,
            travel: 0.1,
        }
    }

    #[test]
    fn round_trip_preserves_bits() {
        let mut buf = Vec::new();
        write_header(&mut buf).unwrap();
        write_row(&mut buf, &sample_row()).unwrap();
        let rows = read_rows(BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(rows, vec![sample_row()]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{TRAJECTORY_HEADER}\n1,2,3,nope\n");
        let err = read_rows(BufReader::new(text.as_bytes())).unwrap_err();
        match err {
            Error::MalformedLog { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}
