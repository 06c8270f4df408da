use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use mixren::exchangeable::Sequence;
use mixren::inference::SequenceSet;

use crate::error::{CliError, CliResult};

/// Reads long-format `seq_id,time` data, sequences in order of first appearance.
pub fn read_sequences(path: &Path) -> CliResult<SequenceSet> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_sequences(file, &path.display().to_string())
}

pub fn parse_sequences<R: io::Read>(reader: R, name: &str) -> CliResult<SequenceSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::Data(format!("{name}: {e}")))?.clone();
    if headers.len() != 2 || &headers[0] != "seq_id" || &headers[1] != "time" {
        return Err(CliError::Data(format!("{name}: header must be 'seq_id,time'")));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut times: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(CliError::Data(format!("{name}:{line}: expected 2 fields, found {}", record.len())));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(CliError::Data(format!("{name}:{line}: empty seq_id")));
        }
        let t: f64 = record[1]
            .parse()
            .map_err(|_| CliError::Data(format!("{name}:{line}: time '{}' is not a number", &record[1])))?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Data(format!("{name}:{line}: time {t} must be positive and finite")));
        }
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            times.push(Vec::new());
            ids.len() - 1
        });
        times[slot].push(t);
    }
    if ids.is_empty() {
        return Err(CliError::Data(format!("{name}: no data rows")));
    }
    let sequences = times.into_iter().map(Sequence::new).collect::<Result<Vec<_>, _>>()?;
    Ok(SequenceSet::new(sequences, ids)?)
}

/// Output sink: a file, or stdout when no path is given.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::BufWriter::new(io::stdout()))),
    }
}

/// Writes a headered CSV table. Floats use Rust's `Display`, which always
/// prints `.` as the decimal separator.
pub fn write_table(path: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(open_output(path)?);
    let io_err = |e: csv::Error| CliError::Data(format!("write failed: {e}"));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("write failed: {e}")))
}

pub fn write_sequences(path: Option<&Path>, data: &SequenceSet) -> CliResult<()> {
    let rows = data
        .ids()
        .iter()
        .zip(data.sequences())
        .flat_map(|(id, s)| s.times().iter().map(move |t| vec![id.clone(), t.to_string()]));
    write_table(path, &["seq_id", "time"], rows)
}
