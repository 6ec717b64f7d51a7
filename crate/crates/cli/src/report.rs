use std::io::{self, Write};

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned columns for reading.
    #[default]
    Text,
    /// Tab-separated values with a header line.
    Tsv,
}

/// Rows of a report, rendered as aligned text or TSV.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = cells.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, out: &mut impl Write, format: Format) -> io::Result<()> {
        match format {
            Format::Tsv => {
                writeln!(out, "{}", self.header.join("\t"))?;
                for r in &self.rows {
                    writeln!(out, "{}", r.join("\t"))?;
                }
            }
            Format::Text => {
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
                for r in &self.rows {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let line = |cells: &mut dyn Iterator<Item = &str>| {
                    let padded: Vec<String> =
                        cells.zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
                    padded.join("  ").trim_end().to_string()
                };
                writeln!(out, "{}", line(&mut self.header.iter().copied()))?;
                for r in &self.rows {
                    writeln!(out, "{}", line(&mut r.iter().map(String::as_str)))?;
                }
            }
        }
        Ok(())
    }
}

/// Key/value report: `key: value` lines as text, two TSV columns otherwise.
pub fn pairs(out: &mut impl Write, format: Format, items: &[(&str, String)]) -> io::Result<()> {
    match format {
        Format::Text => {
            let w = items.iter().map(|(k, _)| k.len()).max().unwrap_or(0) + 1;
            for (k, v) in items {
                writeln!(out, "{:<w$} {v}", format!("{k}:"))?;
            }
        }
        Format::Tsv => {
            writeln!(out, "key\tvalue")?;
            for (k, v) in items {
                writeln!(out, "{k}\t{v}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_columns_align_and_tsv_is_plain() {
        let mut t = Table::new(&["ref", "amount"]);
        t.row(["535D3D0C", "1812.24"]);
        t.row(["7E35D4FA", "370632.11"]);
        let mut text = Vec::new();
        t.write(&mut text, Format::Text).unwrap();
        assert_eq!(
            String::from_utf8(text).unwrap(),
            "ref       amount\n535D3D0C  1812.24\n7E35D4FA  370632.11\n"
        );
        let mut tsv = Vec::new();
        t.write(&mut tsv, Format::Tsv).unwrap();
        assert_eq!(String::from_utf8(tsv).unwrap(), "ref\tamount\n535D3D0C\t1812.24\n7E35D4FA\t370632.11\n");
    }
}
