//! File formats: the `BSL1` dictionary text format, signal and observation
//! JSON, and number formatting for JSON and CSV output.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use bsl_core::{BlockSparseVector, BlockedDictionary, Matrix};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

/// Errors reading or writing the file formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    /// Underlying IO failure.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: String,
        /// Cause.
        source: io::Error,
    },
    /// Malformed content.
    #[error("{0}")]
    Parse(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses `BSL1 L=<int> M=<int> d=<int>`.
fn parse_header(line: &str) -> Result<(usize, usize, usize), FormatError> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("BSL1") {
        return Err(FormatError::Parse(format!(
            "expected header 'BSL1 L=<int> M=<int> d=<int>', got '{}'",
            line.trim()
        )));
    }
    let mut dims = [None; 3];
    for p in parts {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| FormatError::Parse(format!("malformed header field '{p}'")))?;
        let slot = match key {
            "L" => 0,
            "M" => 1,
            "d" => 2,
            _ => return Err(FormatError::Parse(format!("unknown header field '{key}'"))),
        };
        let v: usize = value
            .parse()
            .map_err(|_| FormatError::Parse(format!("header field {key}='{value}' is not an integer")))?;
        dims[slot] = Some(v);
    }
    match dims {
        [Some(l), Some(m), Some(d)] => Ok((l, m, d)),
        _ => Err(FormatError::Parse("header must set L, M and d".into())),
    }
}

/// Reads a `BSL1` dictionary.
pub fn read_dictionary(reader: impl Read) -> Result<BlockedDictionary, FormatError> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| FormatError::Parse(e.to_string()))?,
        None => return Err(FormatError::Parse("empty dictionary file".into())),
    };
    let (l, m, d) = parse_header(&header)?;
    let n = m * d;
    if l == 0 || n == 0 {
        return Err(FormatError::Parse("L, M and d must be positive".into()));
    }
    let mut data = Vec::with_capacity(l * n);
    let mut rows = 0;
    for line in lines {
        let line = line.map_err(|e| FormatError::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > l {
            return Err(FormatError::Parse(format!("more than L = {l} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| FormatError::Parse(format!("row {rows}: '{tok}' is not a number")))?;
            data.push(v);
        }
        if data.len() - before != n {
            return Err(FormatError::Parse(format!(
                "row {rows} has {} entries, expected N = {n}",
                data.len() - before
            )));
        }
    }
    if rows != l {
        return Err(FormatError::Parse(format!("found {rows} rows, expected L = {l}")));
    }
    let atoms = Matrix::from_row_major(l, n, &data).map_err(|e| FormatError::Parse(e.to_string()))?;
    BlockedDictionary::new(atoms, d).map_err(|e| FormatError::Parse(e.to_string()))
}

/// Writes a `BSL1` dictionary. Values use the shortest round-trip representation.
pub fn write_dictionary(dict: &BlockedDictionary, mut w: impl Write) -> io::Result<()> {
    let a = dict.atoms();
    writeln!(
        w,
        "BSL1 L={} M={} d={}",
        dict.measurements(),
        dict.num_blocks(),
        dict.block_size()
    )?;
    let mut line = String::new();
    for r in 0..a.rows() {
        line.clear();
        for c in 0..a.cols() {
            if c > 0 {
                line.push(' ');
            }
            line.push_str(&a.get(r, c).to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

/// Loads a dictionary file.
pub fn load_dictionary(path: &Path) -> Result<BlockedDictionary, FormatError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    read_dictionary(f).map_err(|e| match e {
        FormatError::Parse(m) => FormatError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Saves a dictionary file.
pub fn save_dictionary(dict: &BlockedDictionary, path: &Path) -> Result<(), FormatError> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    write_dictionary(dict, io::BufWriter::new(f)).map_err(io_err(path))
}

/// Observation file `{"values": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    /// `y`, length `L`.
    pub values: Vec<f64>,
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| FormatError::Parse(format!("{}: {e}", path.display())))
}

/// Loads a signal file `{"d": ..., "values": [...]}`.
pub fn load_signal(path: &Path) -> Result<BlockSparseVector, FormatError> {
    load_json(path)
}

/// Loads an observation file.
pub fn load_observation(path: &Path) -> Result<Observation, FormatError> {
    load_json(path)
}

/// JSON formatter printing every float with 17 significant digits.
struct SigFormatter(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),+ $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )+
    };
}

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", sig17(value))
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

/// `value` with 17 significant digits in exponent notation, e.g. `3.7000000000000000e1`.
pub fn sig17(value: f64) -> String {
    format!("{value:.16e}")
}

/// Pretty JSON with full-precision floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// `value` with 6 significant digits, `%g` style: fixed notation for
/// exponents in `[-4, 6)`, scientific otherwise, trailing zeros removed.
pub fn sig6(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{value:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_round_trip_is_exact() {
        let dict = bsl_core::dictgen::generate_dictionary(4, 3, 2, 5).unwrap();
        let mut buf = Vec::new();
        write_dictionary(&dict, &mut buf).unwrap();
        let back = read_dictionary(buf.as_slice()).unwrap();
        assert_eq!(back.atoms().as_slice(), dict.atoms().as_slice());
        assert_eq!(back.block_size(), 2);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let text = "BSL1 L=2 M=1 d=2\n1 0\n0 1\n0 0\n";
        assert!(read_dictionary(text.as_bytes()).is_err());
        let text = "BSL1 L=2 M=2 d=1\n1 0\n0\n";
        assert!(read_dictionary(text.as_bytes()).is_err());
        assert!(read_dictionary("BSL2 L=1 M=1 d=1\n1\n".as_bytes()).is_err());
        assert!(read_dictionary("BSL1 L=1 M=1\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn six_digit_formatting() {
        assert_eq!(sig6(5.0), "5");
        assert_eq!(sig6(0.1234567), "0.123457");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(1.5e-5), "1.5e-5");
        assert_eq!(sig6(-2.5e7), "-2.5e7");
        assert_eq!(sig6(0.0001), "0.0001");
    }

    #[test]
    fn json_floats_round_trip() {
        let v = vec![0.1, 1.0 / 3.0, 37.0, -2.5e-300];
        let text = to_json(&v);
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert!(text.contains("3.7000000000000000e1"));
    }
}
