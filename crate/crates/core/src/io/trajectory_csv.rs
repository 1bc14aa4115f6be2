//! Trajectory CSV.
//!
//! ```text
//! # propsim trajectory
//! # scenario: {"c0":1000,...}
//! # termination: Bankrupt
//! step,t,capital,avg_maturity,implied,vega,aged_vega,trade,realized_pnl,implied_pnl,total_pnl,denom_margin
//! 0,0,1000,5,20,100,99.8,0.399201596806,0,1.99201596806,1.99201596806,0.501
//! ...
//! 623,6.23,99.9...,,,,,,
//! ```
//!
//! Row `i` holds state `i` and the breakdown of the step leaving it, so the
//! breakdown columns are empty on the final row. Numbers carry 12
//! significant digits.

use crate::error::{Error, Result};
use crate::io::sig12;
use crate::model::{FundState, StepBreakdown};
use crate::scenario::parse_scenario;
use crate::trajectory::{Termination, Trajectory};

pub const COLUMNS: [&str; 12] = [
    "step",
    "t",
    "capital",
    "avg_maturity",
    "implied",
    "vega",
    "aged_vega",
    "trade",
    "realized_pnl",
    "implied_pnl",
    "total_pnl",
    "denom_margin",
];

const MAGIC: &str = "# propsim trajectory";
const SCENARIO_TAG: &str = "# scenario: ";
const TERMINATION_TAG: &str = "# termination: ";

pub fn serialize_trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(SCENARIO_TAG);
    out.push_str(&traj.scenario.to_json());
    out.push('\n');
    out.push_str(TERMINATION_TAG);
    out.push_str(traj.termination.name());
    out.push('\n');

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for (i, s) in traj.states.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            sig12(s.t),
            sig12(s.capital),
            sig12(s.avg_maturity),
            sig12(s.implied),
            sig12(s.vega),
        ];
        match traj.breakdowns.get(i) {
            Some(b) => row.extend(
                [
                    b.aged_vega,
                    b.trade,
                    b.realized_pnl,
                    b.implied_pnl,
                    b.total_pnl,
                    b.denom_margin,
                ]
                .map(sig12),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&row).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

fn at_line(line: u64, message: impl Into<String>) -> Error {
    Error::schema(format!("line {line}"), message)
}

pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let mut scenario = None;
    let mut termination = Termination::HorizonReached;
    for (n, line) in text.lines().enumerate() {
        if !line.starts_with('#') {
            continue;
        }
        let line_no = n as u64 + 1;
        if let Some(json) = line.strip_prefix(SCENARIO_TAG) {
            scenario = Some(parse_scenario(json).map_err(|e| at_line(line_no, e.to_string()))?);
        } else if let Some(name) = line.strip_prefix(TERMINATION_TAG) {
            termination = name.trim().parse().map_err(|e: String| at_line(line_no, e))?;
        }
    }
    let scenario = scenario.ok_or_else(|| Error::schema("scenario", "missing `# scenario:` header"))?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::schema("header", e.to_string()))?
        .clone();
    if header.is_empty() {
        // Header-only document: nothing but the scenario survived.
        return Ok(Trajectory {
            states: vec![scenario.initial_state()],
            scenario,
            breakdowns: Vec::new(),
            termination,
        });
    }
    if header.iter().ne(COLUMNS) {
        return Err(Error::schema("header", format!("expected columns {}", COLUMNS.join(","))));
    }

    let mut states = Vec::new();
    let mut breakdowns = Vec::new();
    let mut open_step = false;
    let mut last_line = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            at_line(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        last_line = line;
        if open_step {
            return Err(at_line(line, "row follows the final state"));
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| at_line(line, format!("column `{}`: `{}` is not a number", COLUMNS[i], &record[i])))
        };
        let step: usize = record[0]
            .parse()
            .map_err(|_| at_line(line, format!("bad step `{}`", &record[0])))?;
        if step != states.len() {
            return Err(at_line(line, format!("expected step {}, found {step}", states.len())));
        }
        states.push(FundState {
            t: num(1)?,
            capital: num(2)?,
            avg_maturity: num(3)?,
            implied: num(4)?,
            vega: num(5)?,
        });
        if (6..12).all(|i| record[i].is_empty()) {
            open_step = true;
        } else {
            breakdowns.push(StepBreakdown {
                aged_vega: num(6)?,
                trade: num(7)?,
                realized_pnl: num(8)?,
                implied_pnl: num(9)?,
                total_pnl: num(10)?,
                new_vega: 0.0,
                denom_margin: num(11)?,
            });
        }
    }

    if states.is_empty() {
        return Ok(Trajectory {
            states: vec![scenario.initial_state()],
            scenario,
            breakdowns,
            termination,
        });
    }
    if !open_step {
        return Err(at_line(last_line + 1, "truncated: last row still has a step breakdown"));
    }
    // New vega is not a column; it is the next state's vega by construction.
    for (b, s) in breakdowns.iter_mut().zip(&states[1..]) {
        b.new_vega = s.vega;
    }
    Ok(Trajectory {
        scenario,
        states,
        breakdowns,
        termination,
    })
}
