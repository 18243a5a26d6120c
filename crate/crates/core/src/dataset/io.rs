use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{validate_features, DeviceInput, DeviceRecord, RowViolation, Violation};
use super::summary::{class_distribution, CorpusSummary};
use crate::error::{Error, Result};
use crate::nvd::RiskClass;

pub const CORPUS_HEADER: [&str; 12] = [
    "brand",
    "product_type",
    "category",
    "price_usd",
    "protocols",
    "data_storage",
    "personal_information",
    "location_track",
    "communication_capability",
    "authorisation_encryption",
    "risk_score",
    "synthetic",
];

/// Corpus header without `risk_score`.
pub const DEVICE_HEADER: [&str; 11] = [
    "brand",
    "product_type",
    "category",
    "price_usd",
    "protocols",
    "data_storage",
    "personal_information",
    "location_track",
    "communication_capability",
    "authorisation_encryption",
    "synthetic",
];

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::format(format!(
            "header mismatch: expected `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn parse_price(s: &str, out: &mut Vec<Violation>) -> f64 {
    match s.trim().parse::<f64>() {
        Ok(v) => v,
        Err(_) => {
            out.push(Violation {
                field: "price_usd",
                message: if s.trim().is_empty() {
                    "empty field".into()
                } else {
                    format!("{s:?} is not a number")
                },
            });
            0.0
        }
    }
}

fn parse_bool(s: &str, out: &mut Vec<Violation>) -> bool {
    match s.trim() {
        "true" => true,
        "false" => false,
        other => {
            out.push(Violation {
                field: "synthetic",
                message: format!("{other:?} is not true|false"),
            });
            false
        }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(input)
}

/// Reads a corpus; any invalid row aborts with every violation listed.
pub fn read_corpus(input: impl Read) -> Result<Vec<DeviceRecord>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &CORPUS_HEADER)?;
    let mut records = Vec::new();
    let mut bad = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let mut v = Vec::new();
        let price_usd = parse_price(&row[3], &mut v);
        let risk_score = match row[10].parse::<RiskClass>() {
            Ok(c) => c,
            Err(_) => {
                v.push(Violation {
                    field: "risk_score",
                    message: format!("{:?} is not Low|Medium|High|Critical", &row[10]),
                });
                RiskClass::Low
            }
        };
        let synthetic = parse_bool(&row[11], &mut v);
        let rec = DeviceRecord {
            brand: row[0].to_string(),
            product_type: row[1].to_string(),
            category: row[2].to_string(),
            price_usd,
            protocols: row[4].to_string(),
            data_storage: row[5].to_string(),
            personal_information: row[6].to_string(),
            location_track: row[7].to_string(),
            communication_capability: row[8].to_string(),
            authorisation_encryption: row[9].to_string(),
            risk_score,
            synthetic,
        };
        if v.iter().all(|x| x.field != "price_usd") {
            v.extend(validate_features(&rec));
        } else {
            v.extend(validate_features(&rec).into_iter().filter(|x| x.field != "price_usd"));
        }
        if v.is_empty() {
            records.push(rec);
        } else {
            bad.push(RowViolation {
                row: i + 1,
                violations: v,
            });
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvalidRows(bad));
    }
    Ok(records)
}

/// Reads unlabelled device rows for scoring.
pub fn read_devices(input: impl Read) -> Result<Vec<DeviceInput>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &DEVICE_HEADER)?;
    let mut devices = Vec::new();
    let mut bad = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let mut v = Vec::new();
        let price_usd = parse_price(&row[3], &mut v);
        let synthetic = parse_bool(&row[10], &mut v);
        let dev = DeviceInput {
            brand: row[0].to_string(),
            product_type: row[1].to_string(),
            category: row[2].to_string(),
            price_usd,
            protocols: row[4].to_string(),
            data_storage: row[5].to_string(),
            personal_information: row[6].to_string(),
            location_track: row[7].to_string(),
            communication_capability: row[8].to_string(),
            authorisation_encryption: row[9].to_string(),
            synthetic,
        };
        let price_bad = v.iter().any(|x| x.field == "price_usd");
        v.extend(
            validate_features(&dev)
                .into_iter()
                .filter(|x| !(price_bad && x.field == "price_usd")),
        );
        if v.is_empty() {
            devices.push(dev);
        } else {
            bad.push(RowViolation {
                row: i + 1,
                violations: v,
            });
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvalidRows(bad));
    }
    Ok(devices)
}

fn price_text(p: f64) -> String {
    // `{}` on f64 is the shortest string that parses back to the same value.
    format!("{p}")
}

pub fn write_corpus(out: impl Write, records: &[DeviceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CORPUS_HEADER)?;
    for r in records {
        w.write_record([
            r.brand.as_str(),
            &r.product_type,
            &r.category,
            &price_text(r.price_usd),
            &r.protocols,
            &r.data_storage,
            &r.personal_information,
            &r.location_track,
            &r.communication_capability,
            &r.authorisation_encryption,
            r.risk_score.name(),
            if r.synthetic { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io("<corpus>", e))?;
    Ok(())
}

pub fn write_devices(out: impl Write, devices: &[DeviceInput]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DEVICE_HEADER)?;
    for r in devices {
        w.write_record([
            r.brand.as_str(),
            &r.product_type,
            &r.category,
            &price_text(r.price_usd),
            &r.protocols,
            &r.data_storage,
            &r.personal_information,
            &r.location_track,
            &r.communication_capability,
            &r.authorisation_encryption,
            if r.synthetic { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io("<devices>", e))?;
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<(Vec<DeviceRecord>, CorpusSummary)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = read_corpus(f)?;
    let summary = class_distribution(&records)?;
    Ok((records, summary))
}

pub fn save_corpus(path: &Path, records: &[DeviceRecord]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(f, records)
}

pub fn load_devices(path: &Path) -> Result<Vec<DeviceInput>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_devices(f)
}

pub fn save_devices(path: &Path, devices: &[DeviceInput]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_devices(f, devices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_record;

    #[test]
    fn shuffled_header_rejected() {
        let text = "product_type,brand,category,price_usd,protocols,data_storage,personal_information,location_track,communication_capability,authorisation_encryption,risk_score,synthetic\n";
        assert!(matches!(read_corpus(text.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn invalid_rows_all_listed() {
        let mut a = sample_record();
        a.price_usd = -1.0;
        let mut b = sample_record();
        b.category = "Toaster".into();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &[a, sample_record(), b]).unwrap();
        match read_corpus(&buf[..]) {
            Err(Error::InvalidRows(rows)) => {
                assert_eq!(rows.iter().map(|r| r.row).collect::<Vec<_>>(), vec![1, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quoted_fields_round_trip() {
        let mut r = sample_record();
        r.brand = "Acme, Inc. \"Pro\"".into();
        r.price_usd = 0.1 + 0.2;
        let mut buf = Vec::new();
        write_corpus(&mut buf, std::slice::from_ref(&r)).unwrap();
        assert_eq!(read_corpus(&buf[..]).unwrap(), vec![r]);
    }

    #[test]
    fn devices_header() {
        let d = sample_record().input();
        let mut buf = Vec::new();
        write_devices(&mut buf, std::slice::from_ref(&d)).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(&DEVICE_HEADER.join(",")));
        assert_eq!(read_devices(&buf[..]).unwrap(), vec![d]);
    }
}
