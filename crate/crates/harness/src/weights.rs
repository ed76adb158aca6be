//! Weight dumps as CSV: `neuron_index,synapse_index,input_section,W,w`.
//! Floats are written in their shortest round-trip form.

use std::path::Path;

use colanet_core::WeightRow;

use crate::error::{Error, Result};

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

pub fn write_weights(path: &Path, rows: &[WeightRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_weights(path: &Path) -> Result<Vec<WeightRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(path))
}
