//! CSV ingestion for recorded EMG (`t,ch1,ch2,ch3`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EmgError, EmgSample};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    ch1: f64,
    ch2: f64,
    ch3: f64,
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<EmgSample>, EmgError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out: Vec<EmgSample> = Vec::new();
    for row in reader.deserialize() {
        let row: Row = row?;
        let sample = EmgSample {
            t: row.t,
            channels: [row.ch1, row.ch2, row.ch3],
        };
        if let Some(&bad) = sample
            .channels
            .iter()
            .chain([&sample.t])
            .find(|v| !v.is_finite())
        {
            return Err(EmgError::NonFinite(bad));
        }
        if let Some(prev) = out.last() {
            if sample.t < prev.t {
                return Err(EmgError::NonMonotonic {
                    prev: prev.t,
                    next: sample.t,
                });
            }
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(output: W, samples: &[EmgSample]) -> Result<(), EmgError> {
    let mut writer = csv::Writer::from_writer(output);
    for s in samples {
        writer.serialize(Row {
            t: s.t,
            ch1: s.channels[0],
            ch2: s.channels[1],
            ch3: s.channels[2],
        })?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
