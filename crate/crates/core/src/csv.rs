//! Minimal CSV output: comma separator, `.` decimals, one header row, LF line
//! endings. Floats use Rust's shortest round-trip formatting so files are
//! byte-stable across runs and platforms.

use std::fmt::Display;

#[derive(Debug, Default)]
pub struct CsvWriter {
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut w = CsvWriter { buf: String::new(), columns: header.len() };
        w.push_fields(header.iter().map(|h| h.as_ref().to_string()));
        w
    }

    pub fn row<I, T>(&mut self, fields: I)
    where
        I: IntoIterator<Item = T>,
        T: Display,
    {
        let fields: Vec<String> = fields.into_iter().map(|f| f.to_string()).collect();
        debug_assert_eq!(fields.len(), self.columns, "column count mismatch");
        self.push_fields(fields);
    }

    fn push_fields(&mut self, fields: impl IntoIterator<Item = String>) {
        for (i, f) in fields.into_iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            if f.contains([',', '"', '\n']) {
                self.buf.push('"');
                self.buf.push_str(&f.replace('"', "\"\""));
                self.buf.push('"');
            } else {
                self.buf.push_str(&f);
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dialect() {
        let mut w = CsvWriter::new(&["a", "b"]);
        w.row([0.1f64.to_string(), "x,y".to_string()]);
        w.row([0.25, 2.0]);
        w.row(["say \"hi\"", "a\nb"]);
        assert_eq!(w.finish(), "a,b\n0.1,\"x,y\"\n0.25,2\n\"say \"\"hi\"\"\",\"a\nb\"\n");
    }
}
