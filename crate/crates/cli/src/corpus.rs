use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use clap::ValueEnum;
use strlap::{Alphabet, Str};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One string per line; a blank line is the empty string.
    Lines,
    /// `>` headers start records; sequence lines are concatenated.
    Fasta,
}

/// Alphabet given on the command line, or inferred from the input.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphabetSpec {
    Infer,
    Explicit(Alphabet),
}

impl std::str::FromStr for AlphabetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "infer" {
            Ok(AlphabetSpec::Infer)
        } else {
            Alphabet::from_letters(s).map(AlphabetSpec::Explicit).map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub alphabet: Alphabet,
    pub ids: Vec<String>,
    pub strings: Vec<Str>,
}

pub fn ingest(path: &Path, format: InputFormat, alphabet: &AlphabetSpec) -> Result<Corpus, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_corpus(&text, format, alphabet)
}

pub fn parse_corpus(text: &str, format: InputFormat, alphabet: &AlphabetSpec) -> Result<Corpus, CliError> {
    if text.is_empty() {
        return Err(CliError::Input("input is empty".into()));
    }
    let records = match format {
        InputFormat::Lines => lines_records(text),
        InputFormat::Fasta => fasta_records(text)?,
    };
    let alphabet = match alphabet {
        AlphabetSpec::Explicit(a) => a.clone(),
        AlphabetSpec::Infer => {
            let seen: BTreeSet<char> = records.iter().flat_map(|(_, s)| s.chars()).collect();
            Alphabet::new(seen)?
        }
    };
    let mut ids = Vec::with_capacity(records.len());
    let mut strings = Vec::with_capacity(records.len());
    for (id, raw) in records {
        let s = alphabet.parse(&raw).map_err(|e| match e {
            strlap::Error::UnknownSymbol { position, ch } => CliError::Symbol { record: id.clone(), position, ch },
            other => other.into(),
        })?;
        ids.push(id);
        strings.push(s);
    }
    Ok(Corpus { alphabet, ids, strings })
}

fn lines_records(text: &str) -> Vec<(String, String)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n')
        .enumerate()
        .map(|(i, line)| ((i + 1).to_string(), line.strip_suffix('\r').unwrap_or(line).to_string()))
        .collect()
}

fn fasta_records(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut records: Vec<(String, String)> = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(CliError::Input(format!("line {}: FASTA header without an id", n + 1)));
            }
            if !seen.insert(id.clone()) {
                return Err(CliError::Input(format!("duplicate record id {id}")));
            }
            records.push((id, String::new()));
        } else if !line.is_empty() {
            match records.last_mut() {
                Some((_, seq)) => seq.push_str(line.trim()),
                None => return Err(CliError::Input(format!("line {}: sequence before the first header", n + 1))),
            }
        }
    }
    if records.is_empty() {
        return Err(CliError::Input("no FASTA records found".into()));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_input() {
        let c = parse_corpus("ab\nab\nac", InputFormat::Lines, &AlphabetSpec::Infer).unwrap();
        assert_eq!(c.strings.len(), 3);
        assert_eq!(c.alphabet.letters(), &['a', 'b', 'c']);
        assert_eq!(c.ids, vec!["1", "2", "3"]);
        let c = parse_corpus("ab\n\nb\n", InputFormat::Lines, &AlphabetSpec::Infer).unwrap();
        assert_eq!(c.strings.len(), 3);
        assert!(c.strings[1].is_empty());
        let c = parse_corpus("ab\r\nba\r\n", InputFormat::Lines, &AlphabetSpec::Infer).unwrap();
        assert_eq!(c.alphabet.letters(), &['a', 'b']);
    }

    #[test]
    fn fasta_input() {
        let text = ">r1 first\nAC\nGT\n>r2\nTTGA\n";
        let c = parse_corpus(text, InputFormat::Fasta, &AlphabetSpec::Infer).unwrap();
        assert_eq!(c.ids, vec!["r1", "r2"]);
        assert_eq!(c.alphabet.render(&c.strings[0]), "ACGT");
        assert!(parse_corpus("AC\n>r1\nAC\n", InputFormat::Fasta, &AlphabetSpec::Infer).is_err());
        assert!(parse_corpus(">a\nA\n>a\nC\n", InputFormat::Fasta, &AlphabetSpec::Infer).is_err());
    }

    #[test]
    fn explicit_alphabet_errors_name_the_record() {
        let spec: AlphabetSpec = "acgt".parse().unwrap();
        let err = parse_corpus(">x1\nacg\n>x2\nacnt\n", InputFormat::Fasta, &spec).unwrap_err();
        assert!(matches!(&err, CliError::Symbol { record, position: 3, ch: 'n' } if record == "x2"));
        assert!(err.to_string().contains("x2"));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(parse_corpus("", InputFormat::Lines, &AlphabetSpec::Infer).is_err());
        assert!(parse_corpus("\n", InputFormat::Lines, &AlphabetSpec::Infer).is_err());
        assert!(parse_corpus("\n", InputFormat::Lines, &"ab".parse().unwrap()).is_ok());
    }
}
