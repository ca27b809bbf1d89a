mod common;

use std::io::Write;

use epec::pipeline::{read_locations, write_locations, ElectionFileName, RowErrorKind};
use epec::{read_results, write_results, LocationRecord, PipelineError, VoteRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ten_thousand_rows() -> Vec<VoteRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    // 20 regions × 10 districts × 10 stations × 5 candidates.
    let mut records = common::hierarchical_records(&mut rng, 20, 10, 10, &[1.0, 0.8, 0.5, 0.2, 0.05]);
    records.pop();
    records.push(VoteRecord::pseudo("R20|D10|S10", "blank", 4));
    records
}

#[test]
fn gzip_round_trip_is_lossless() {
    let records = ten_thousand_rows();
    assert_eq!(records.len(), 10_000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("xx_2020_general.csv.gz");
    write_results(&path, &records).unwrap();
    let head = std::fs::read(&path).unwrap();
    assert_eq!(&head[..2], &[0x1f, 0x8b]);
    let back = read_results(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!((&a.polling_id, &a.candidate, a.value, a.rank), (&b.polling_id, &b.candidate, b.value, b.rank));
        assert_eq!(a.is_real_candidate, b.is_real_candidate);
    }
}

#[test]
fn gzip_output_is_byte_reproducible() {
    let records = ten_thousand_rows();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv.gz"), dir.path().join("b.csv.gz"));
    write_results(&a, &records).unwrap();
    write_results(&b, &records).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn malformed_rows_report_their_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "polling_id,candidate,value,rank,flag_candidates,rate").unwrap();
    writeln!(f, "R1|S1,A,10,1,true,0.5").unwrap();
    writeln!(f, "R1|S1,B,-5,2,true,0.5").unwrap();
    writeln!(f, "R1|S2,A,7,1,true,1").unwrap();
    writeln!(f, "R1|S2,B,seven,2,true,0").unwrap();
    writeln!(f, "R1|S3,A,1,1,maybe,1").unwrap();
    writeln!(f, "R1|S3,B,1,1").unwrap();
    drop(f);
    let err = read_results(&path).unwrap_err();
    let lines: Vec<u64> = err.row_errors().iter().map(|e| e.line).collect();
    assert_eq!(lines, [3, 5, 6, 7]);
    assert!(matches!(err.row_errors()[0].kind, RowErrorKind::BadInteger { .. }));
    assert!(matches!(err.row_errors()[2].kind, RowErrorKind::BadBool { .. }));
    assert!(matches!(err.row_errors()[3].kind, RowErrorKind::FieldCount { expected: 6, found: 4 }));
    assert!(err.to_string().contains("line 3"));
}

#[test]
fn line_numbers_survive_gzip() {
    let mut records = ten_thousand_rows();
    records.truncate(50);
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.csv");
    write_results(&plain, &records).unwrap();
    let mut text = std::fs::read_to_string(&plain).unwrap();
    text = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i + 1 == 42 { l.replacen(",true,", ",yes please,", 1) } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    let gz = dir.path().join("corrupt.csv.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(text.as_bytes()).unwrap();
    enc.finish().unwrap();
    let err = read_results(&gz).unwrap_err();
    assert_eq!(err.row_errors().len(), 1);
    assert_eq!(err.row_errors()[0].line, 42);
}

#[test]
fn truncated_gzip_is_reported() {
    let records = ten_thousand_rows();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv.gz");
    write_results(&path, &records).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(read_results(&path), Err(PipelineError::GzipCorrupt(_))));
}

#[test]
fn missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(&path, "polling_id,candidate,rank\nA,B,1\n").unwrap();
    match read_results(&path) {
        Err(PipelineError::MissingColumn(c)) => assert_eq!(c, "value"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn location_files_round_trip() {
    let locs = vec![
        LocationRecord {
            polling_id: "R01|P1|S1".into(),
            levels: vec![("region".into(), "R01".into()), ("province".into(), "P1".into()), ("station".into(), "S1".into())],
            value: Some(12),
            rate: None,
        },
        LocationRecord {
            polling_id: "R01|P1|S2".into(),
            levels: vec![("region".into(), "R01".into()), ("province".into(), "P1".into()), ("station".into(), "S2".into())],
            value: None,
            rate: Some(0.25),
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cl_2021_first_round_location.csv.gz");
    write_locations(&path, &locs).unwrap();
    assert_eq!(read_locations(&path).unwrap(), locs);
}

#[test]
fn file_names_follow_the_convention() {
    let f = ElectionFileName::parse("chile_2021_first_round.csv.gz").unwrap();
    assert_eq!((f.country.as_str(), f.year, f.round.as_str(), f.is_location), ("chile", 2021, "first_round", false));
    assert_eq!(f.location_file(), "chile_2021_first_round_location.csv.gz");
    assert!(ElectionFileName::parse("chile_2021_second.csv.gz").is_err());
}

#[test]
fn crlf_and_mixed_line_endings_keep_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("crlf.csv");
    let text = "polling_id,candidate,value,rank,flag_candidates,rate\r\n\
                R1|S1,A,10,1,true,0.5\r\n\
                R1|S1,B,10,2,true,0.5\n\
                R1|S2,A,x,1,true,1\r\n\
                \r\n\
                R1|S2,B,-1,2,true,0\r\n";
    std::fs::write(&path, text).unwrap();
    let err = read_results(&path).unwrap_err();
    let lines: Vec<u64> = err.row_errors().iter().map(|e| e.line).collect();
    assert_eq!(lines, [4, 6]);

    std::fs::write(&path, text.replace(",x,", ",3,").replace(",-1,", ",1,")).unwrap();
    let ok = read_results(&path).unwrap();
    assert_eq!(ok.len(), 4);
    assert_eq!(ok[3].rate, 0.0);
    assert_eq!(ok[3].polling_id, "R1|S2");
}
