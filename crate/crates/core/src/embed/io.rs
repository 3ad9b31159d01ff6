//! word2vec/fastText-compatible text vectors.
//!
//! The first line is `<count> <dimension>`; each following line is a token
//! and its components separated by single spaces, six decimals per value.
//! Token escapes: `\\` for a backslash and `\uXXXX` (four uppercase hex
//! digits) for any whitespace codepoint, so character n-grams that span a
//! space or newline survive the space-separated layout.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{EmbeddingTable, Vocab};
use crate::{Error, Result};

pub fn escape_token(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        if c == '\\' {
            out.push_str("\\\\");
        } else if c.is_whitespace() {
            write!(out, "\\u{:04X}", c as u32).expect("writing to a String");
        } else {
            out.push(c);
        }
    }
    out
}

/// Inverse of [`escape_token`]; unknown escapes are kept verbatim.
pub fn unescape_token(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(pos) = rest.find('\\') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(after) = tail.strip_prefix("\\\\") {
            out.push('\\');
            rest = after;
            continue;
        }
        if let Some(hex) = tail.get(2..6).filter(|_| tail[1..].starts_with('u')) {
            if let Some(c) = u32::from_str_radix(hex, 16).ok().and_then(char::from_u32) {
                out.push(c);
                rest = &tail[6..];
                continue;
            }
        }
        out.push('\\');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

pub fn write_vectors(table: &EmbeddingTable, out: impl Write) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{} {}", table.len(), table.dim())?;
    let mut line = String::new();
    for (i, token) in table.vocab().tokens().iter().enumerate() {
        line.clear();
        line.push_str(&escape_token(token));
        for x in table.vector(i as u32) {
            write!(line, " {x:.6}").expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

pub fn save_vectors(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_vectors(table, file).map_err(|e| Error::io(path, e))
}

pub fn read_vectors(input: impl BufRead) -> Result<EmbeddingTable> {
    let mut lines = input.lines().enumerate();
    let fmt_err = |line: usize, reason: String| Error::VectorFormat { line, reason };

    let (count, dim) = loop {
        let Some((n, line)) = lines.next() else {
            return Err(fmt_err(1, "missing header".into()));
        };
        let line = line.map_err(|e| fmt_err(n + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let parsed = match fields.as_slice() {
            [c, d] => c.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
            _ => None,
        };
        match parsed {
            Some((c, d)) if d > 0 => break (c, d),
            _ => return Err(fmt_err(n + 1, format!("bad header `{line}`"))),
        }
    };

    let mut tokens = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (n, line) in lines {
        let lineno = n + 1;
        let line = line.map_err(|e| fmt_err(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        if tokens.len() == count {
            return Err(fmt_err(lineno, format!("more than the declared {count} rows")));
        }
        let mut fields = line.split_ascii_whitespace();
        let token = fields.next().expect("non-blank line has a field");
        let start = data.len();
        for field in fields {
            let x: f32 = field
                .parse()
                .map_err(|_| fmt_err(lineno, format!("non-numeric component `{field}`")))?;
            data.push(x);
        }
        let got = data.len() - start;
        if got != dim {
            return Err(fmt_err(
                lineno,
                format!("dimension {got} does not match header dimension {dim}"),
            ));
        }
        tokens.push(unescape_token(token));
    }
    if tokens.len() != count {
        return Err(fmt_err(
            0,
            format!("row count {} does not match header count {count}", tokens.len()),
        ));
    }
    let vocab = Vocab::from_tokens(tokens)?;
    EmbeddingTable::new(vocab, dim, data)
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_vectors(BufReader::new(file))
}
