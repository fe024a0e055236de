//! FER2013 CSV reader and writer.
//!
//! Layout: header `emotion,pixels,Usage`, then one row per image with an
//! integer label 0–6, 2304 space-separated 8-bit intensities (48×48,
//! row-major) and a usage tag. The two-column `emotion,pixels` variant found
//! in some redistributions is accepted; its rows carry no usage tag.

use std::io::{Read, Write};

use super::dataset::{Dataset, Sample, Source, Usage};
use super::image::{Image, CANONICAL_SIDE};
use super::label::EmotionLabel;
use crate::error::{Error, Result};

pub const FER2013_PIXELS: usize = CANONICAL_SIDE * CANONICAL_SIDE;
const HEADER: [&str; 3] = ["emotion", "pixels", "Usage"];

pub fn parse_fer2013_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::Parse { row: 0, message: "missing header row".into() }),
    };
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    let with_usage = match header.as_slice() {
        h if h == HEADER => true,
        h if h == &HEADER[..2] => false,
        other => {
            return Err(Error::Parse {
                row: 0,
                message: format!("expected header 'emotion,pixels,Usage', got '{}'", other.join(",")),
            })
        }
    };
    let expected_fields = if with_usage { 3 } else { 2 };

    let mut items = Vec::new();
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let fail = |message: String| Error::Parse { row, message };
        if record.len() != expected_fields {
            return Err(fail(format!(
                "expected {expected_fields} fields, found {}",
                record.len()
            )));
        }

        let code: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| fail(format!("label '{}' is not an integer", &record[0])))?;
        let label =
            EmotionLabel::from_code(code).map_err(|_| fail(format!("label {code} outside 0..=6")))?;

        let mut bytes = Vec::with_capacity(FER2013_PIXELS);
        for tok in record[1].split_ascii_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| fail(format!("pixel '{tok}' is not an integer")))?;
            if v > 255 {
                return Err(fail(format!("pixel value {v} outside 0..=255")));
            }
            bytes.push(v as u8);
        }
        if bytes.len() != FER2013_PIXELS {
            return Err(fail(format!(
                "expected {FER2013_PIXELS} pixels, found {}",
                bytes.len()
            )));
        }

        let usage = if with_usage {
            match record[2].trim() {
                "" => None,
                tag => Some(tag.parse::<Usage>().map_err(|e| fail(e.to_string()))?),
            }
        } else {
            None
        };

        let image = Image::from_u8(CANONICAL_SIDE, CANONICAL_SIDE, &bytes)
            .map_err(|e| fail(e.to_string()))?;
        items.push(Sample { image, label, usage });
    }
    Dataset::new(items, Source::Fer2013)
}

/// Writes `ds` in the three-column layout with quoted pixel strings.
/// Pixels are quantized with `round(p * 255)`; untagged items get an empty
/// usage field.
pub fn write_fer2013_csv<W: Write>(ds: &Dataset, mut out: W) -> std::io::Result<()> {
    if let Some((w, h)) = ds.image_shape() {
        if (w, h) != (CANONICAL_SIDE, CANONICAL_SIDE) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("FER2013 rows must be 48x48, dataset is {w}x{h}"),
            ));
        }
    }
    writeln!(out, "{}", HEADER.join(","))?;
    let mut line = String::with_capacity(FER2013_PIXELS * 4 + 32);
    for s in ds.items() {
        line.clear();
        line.push_str(&s.label.code().to_string());
        line.push_str(",\"");
        for (i, b) in s.image.to_u8().into_iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(itoa_u8(b));
        }
        line.push_str("\",");
        if let Some(u) = s.usage {
            line.push_str(u.as_str());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

fn itoa_u8(b: u8) -> &'static str {
    static TABLE: std::sync::OnceLock<Vec<String>> = std::sync::OnceLock::new();
    &TABLE.get_or_init(|| (0..=255u16).map(|v| v.to_string()).collect())[b as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::summarize;
    use proptest::prelude::*;

    fn row(label: &str, pixel: &str, count: usize, usage: &str) -> String {
        format!("{label},\"{}\",{usage}\n", vec![pixel; count].join(" "))
    }

    fn header() -> String {
        "emotion,pixels,Usage\n".to_string()
    }

    #[test]
    fn single_row_is_scaled_by_255() {
        let text = header() + &row("3", "128", 2304, "Training");
        let ds = parse_fer2013_csv(text.as_bytes()).unwrap();
        assert_eq!(ds.len(), 1);
        let s = &ds.items()[0];
        assert_eq!(s.label, EmotionLabel::Happy);
        assert_eq!(s.usage, Some(Usage::Training));
        assert!(s.image.pixels().iter().all(|&p| p == 128.0 / 255.0));
    }

    #[test]
    fn header_only_is_empty() {
        let ds = parse_fer2013_csv(header().as_bytes()).unwrap();
        assert!(ds.is_empty());
        assert_eq!(summarize(&ds).total, 0);
    }

    #[test]
    fn unquoted_pixels_are_accepted() {
        let text = format!("emotion,pixels,Usage\n0,{},PublicTest\n", vec!["7"; 2304].join(" "));
        let ds = parse_fer2013_csv(text.as_bytes()).unwrap();
        assert_eq!(ds.items()[0].usage, Some(Usage::PublicTest));
    }

    fn row_error(text: String) -> (usize, String) {
        match parse_fer2013_csv(text.as_bytes()) {
            Err(Error::Parse { row, message }) => (row, message),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_name_their_index() {
        let good = row("1", "0", 2304, "Training");
        let (r, m) = row_error(header() + &good + &row("2", "0", 2303, "Training"));
        assert_eq!(r, 2);
        assert!(m.contains("2304"), "{m}");

        let (r, m) = row_error(header() + &row("7", "0", 2304, "Training"));
        assert_eq!(r, 1);
        assert!(m.contains("label"), "{m}");

        let (r, m) = row_error(header() + &good + &good + &row("0", "256", 2304, "Training"));
        assert_eq!(r, 3);
        assert!(m.contains("256"), "{m}");

        let (r, _) = row_error(header() + "0,1 2 3\n");
        assert_eq!(r, 1);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_fer2013_csv("label,data\n".as_bytes()).is_err());
        assert!(parse_fer2013_csv("".as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn write_then_parse_reproduces_pixel_integers(
            rows in proptest::collection::vec(
                (0usize..7, proptest::collection::vec(any::<u8>(), 2304), 0usize..4),
                0..4,
            )
        ) {
            let mut text = header();
            for (label, px, usage) in &rows {
                let tag = ["Training", "PublicTest", "PrivateTest", ""][*usage];
                let px: Vec<String> = px.iter().map(|b| b.to_string()).collect();
                text.push_str(&format!("{label},\"{}\",{tag}\n", px.join(" ")));
            }
            let ds = parse_fer2013_csv(text.as_bytes()).unwrap();
            let mut out = Vec::new();
            write_fer2013_csv(&ds, &mut out).unwrap();
            prop_assert_eq!(String::from_utf8(out).unwrap(), text);
        }
    }
}
