//! File formats: embedding CSV, protected-template files and score CSV.
//!
//! Embedding CSV: header `identity_id,sample_id,f0,...,f{d-1}`, one sample per
//! row, values written with 17 significant digits.
//!
//! Template file: a header line
//! `# mlphash-templates scheme=<name> length=<n> digest=<16 hex>` followed by
//! one `identity_id,sample_id,<payload>` line per template, where the payload
//! is the packed bit string in hex (see [`BitVector::to_hex`]) or the index
//! list as comma-separated integers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::protocol::{Identity, IdentityDataset, Sample};
use crate::scalar::Scalar;
use crate::schemes::{BitVector, ParamsDigest, Payload, ProtectedTemplate, SchemeKind};

const TEMPLATE_MAGIC: &str = "# mlphash-templates";

/// Parse embedding rows. Identities keep the order of their first row.
pub fn read_embeddings_csv<T: Scalar, R: Read>(reader: R) -> Result<IdentityDataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .clone();
    if header.len() < 3 || &header[0] != "identity_id" || &header[1] != "sample_id" {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with identity_id,sample_id followed by features".into(),
        });
    }
    let mut dim = None;
    let mut identities: Vec<Identity<T>> = Vec::new();
    let mut index = std::collections::HashMap::<String, usize>::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_error(e, line)
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() < 3 {
            return Err(Error::Parse {
                line,
                message: "row needs identity_id, sample_id and at least one feature".into(),
            });
        }
        let found = record.len() - 2;
        let expected = *dim.get_or_insert(found);
        if found != expected {
            return Err(Error::RowDimension {
                line,
                expected,
                found,
            });
        }
        let values = record
            .iter()
            .skip(2)
            .map(|f| {
                f.parse::<f64>().map(T::of).map_err(|_| Error::Parse {
                    line,
                    message: format!("'{f}' is not a number"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        let embedding = EmbeddingVector::new(values).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let id = record[0].to_string();
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            identities.push(Identity {
                id,
                samples: Vec::new(),
            });
            identities.len() - 1
        });
        identities[slot].samples.push(Sample {
            id: record[1].to_string(),
            embedding,
        });
    }
    let dim = dim.ok_or(Error::Parse {
        line: 2,
        message: "no data rows".into(),
    })?;
    IdentityDataset::new(dim, identities)
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn load_embeddings_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<IdentityDataset<T>> {
    read_embeddings_csv(BufReader::new(File::open(path)?))
}

pub fn write_embeddings_csv<T: Scalar, W: Write>(ds: &IdentityDataset<T>, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    write!(w, "identity_id,sample_id")?;
    for i in 0..ds.dim() {
        write!(w, ",f{i}")?;
    }
    writeln!(w)?;
    for ident in ds.identities() {
        for s in &ident.samples {
            write!(w, "{},{}", ident.id, s.id)?;
            for v in s.embedding.iter() {
                write!(w, ",{:.16e}", v.as_f64())?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_embeddings_csv<T: Scalar>(ds: &IdentityDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    write_embeddings_csv(ds, create_new(path)?)
}

/// Open a file for writing, refusing to overwrite.
pub fn create_new(path: impl AsRef<Path>) -> Result<File> {
    Ok(std::fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateRecord {
    pub identity_id: String,
    pub sample_id: String,
    pub template: ProtectedTemplate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateFile {
    pub scheme: SchemeKind,
    pub length: usize,
    pub digest: ParamsDigest,
    pub records: Vec<TemplateRecord>,
}

impl TemplateFile {
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(
            w,
            "{TEMPLATE_MAGIC} scheme={} length={} digest={}",
            self.scheme, self.length, self.digest
        )?;
        for r in &self.records {
            if r.identity_id.contains(',') || r.sample_id.contains(',') {
                return Err(Error::InvalidParameter(format!(
                    "ids may not contain commas: {},{}",
                    r.identity_id, r.sample_id
                )));
            }
            if r.template.scheme != self.scheme
                || r.template.params_digest != self.digest
                || r.template.len() != self.length
            {
                return Err(Error::SchemeMismatch);
            }
            let payload = match &r.template.payload {
                Payload::Bits(b) => b.to_hex(),
                Payload::Indices(ix) => ix
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            };
            writeln!(w, "{},{},{}", r.identity_id, r.sample_id, payload)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let (scheme, length, digest) = parse_template_header(&header)?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let perr = |m: String| Error::Parse {
                line: line_no,
                message: m,
            };
            let mut parts = line.splitn(3, ',');
            let (Some(ident), Some(sample), Some(payload)) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(perr("expected identity_id,sample_id,payload".into()));
            };
            let payload = if scheme.is_binary() {
                Payload::Bits(BitVector::from_hex(payload, length).map_err(|e| perr(e.to_string()))?)
            } else {
                let ix = payload
                    .split(',')
                    .map(|t| t.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| perr(e.to_string()))?;
                if ix.len() != length {
                    return Err(perr(format!("expected {length} indices, found {}", ix.len())));
                }
                Payload::Indices(ix)
            };
            records.push(TemplateRecord {
                identity_id: ident.to_string(),
                sample_id: sample.to_string(),
                template: ProtectedTemplate {
                    scheme,
                    payload,
                    params_digest: digest,
                },
            });
        }
        Ok(TemplateFile {
            scheme,
            length,
            digest,
            records,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }
}

fn parse_template_header(header: &str) -> Result<(SchemeKind, usize, ParamsDigest)> {
    let perr = |m: &str| Error::Parse {
        line: 1,
        message: m.to_string(),
    };
    let rest = header
        .strip_prefix(TEMPLATE_MAGIC)
        .ok_or_else(|| perr("missing template header"))?;
    let (mut scheme, mut length, mut digest) = (None, None, None);
    for field in rest.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(|| perr("malformed header field"))?;
        match k {
            "scheme" => scheme = Some(v.parse::<SchemeKind>().map_err(|e| perr(&e.to_string()))?),
            "length" => length = Some(v.parse::<usize>().map_err(|_| perr("bad length"))?),
            "digest" => digest = Some(v.parse::<ParamsDigest>().map_err(|e| perr(&e.to_string()))?),
            _ => {}
        }
    }
    match (scheme, length, digest) {
        (Some(s), Some(l), Some(d)) => Ok((s, l, d)),
        _ => Err(perr("header needs scheme, length and digest")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreLabel {
    Genuine,
    Impostor,
    Mated,
    NonMated,
}

impl ScoreLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreLabel::Genuine => "genuine",
            ScoreLabel::Impostor => "impostor",
            ScoreLabel::Mated => "mated",
            ScoreLabel::NonMated => "nonmated",
        }
    }
}

/// Score CSV writer: `trial,label,score`.
pub struct ScoreCsvWriter<W: Write> {
    out: BufWriter<W>,
}

impl<W: Write> ScoreCsvWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut out = BufWriter::new(writer);
        writeln!(out, "trial,label,score")?;
        Ok(ScoreCsvWriter { out })
    }

    pub fn write_all(&mut self, trial: usize, label: ScoreLabel, scores: &[f64]) -> Result<()> {
        for s in scores {
            writeln!(self.out, "{trial},{},{s:.17e}", label.as_str())?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{synth_generate, SynthParams};
    use crate::schemes::SchemeConfig;
    use crate::UserKey;

    #[test]
    fn two_rows_two_identities() {
        let csv = "identity_id,sample_id,f0,f1,f2,f3\na,0,1,2,3,4\nb,0,0.5,0,0,-1\n";
        let ds: IdentityDataset<f64> = read_embeddings_csv(csv.as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 4);
        assert!(ds.identities().iter().all(|i| i.samples.len() == 1));
    }

    #[test]
    fn short_row_names_its_line() {
        let csv = "identity_id,sample_id,f0,f1,f2,f3\na,0,1,2,3,4\nb,0,1,2,3\n";
        let err = read_embeddings_csv::<f64, _>(csv.as_bytes()).unwrap_err();
        assert!(
            matches!(err, Error::RowDimension { line: 3, expected: 4, found: 3 }),
            "{err:?}"
        );
    }

    #[test]
    fn bad_number_names_its_line() {
        let csv = "identity_id,sample_id,f0\na,0,1\na,1,x\n";
        let err = read_embeddings_csv::<f64, _>(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn synthetic_round_trip() {
        let ds = synth_generate::<f64>(&SynthParams {
            identities: 5,
            samples_per_identity: 3,
            dim: 16,
            within_sigma: 0.2,
            seed: 8,
        })
        .unwrap();
        let mut buf = Vec::new();
        write_embeddings_csv(&ds, &mut buf).unwrap();
        let back: IdentityDataset<f64> = read_embeddings_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), ds.len());
        for (a, b) in ds.identities().iter().zip(back.identities()) {
            assert_eq!(a.id, b.id);
            for (x, y) in a.samples.iter().zip(&b.samples) {
                for (p, q) in x.embedding.iter().zip(y.embedding.iter()) {
                    assert!((p - q).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn template_file_round_trip() {
        let u = EmbeddingVector::new(vec![0.3, -0.2, 0.9, 0.1]).unwrap();
        for kind in SchemeKind::ALL {
            let cfg = SchemeConfig::default_for(kind, 4);
            let t = cfg.keyed::<f64>(UserKey(5)).unwrap().protect_template(&u).unwrap();
            let file = TemplateFile {
                scheme: kind,
                length: t.len(),
                digest: t.params_digest,
                records: vec![TemplateRecord {
                    identity_id: "a".into(),
                    sample_id: "0".into(),
                    template: t,
                }],
            };
            let mut buf = Vec::new();
            file.write(&mut buf).unwrap();
            assert_eq!(TemplateFile::read(buf.as_slice()).unwrap(), file);
        }
    }

    #[test]
    fn template_header_is_required() {
        assert!(TemplateFile::read("a,0,ff\n".as_bytes()).is_err());
    }
}
