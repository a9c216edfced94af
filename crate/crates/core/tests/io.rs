use std::fs;
use std::path::Path;

use shapeinv::io::{
    read_certificates, read_curve, read_dataset, read_measure, write_certificates, write_curve, write_dataset,
    write_measure,
};
use shapeinv::certify::CertificateRow;
use shapeinv::model::{simulate, SimConfig};
use shapeinv::study::{emit_report, read_study_results, DistanceRow, ReportFormat, StudyResults, DISTANCES_HEADER};
use shapeinv::{Complex64, DiscreteMeasure, Error, FourierCurve, GridDensity, ShiftMeasure};

fn fixture_results() -> StudyResults {
    let mut rows = Vec::new();
    for (n, base) in [(50usize, 0.41), (200, 0.27), (800, 0.16)] {
        for replicate in 0..2 {
            for iter in 0..3 {
                rows.push(DistanceRow {
                    n,
                    replicate,
                    iter: 100 + 10 * iter,
                    hellinger: base + 0.013 * iter as f64 - 0.004 * replicate as f64,
                    std_error: 0.002 + 0.0005 * iter as f64,
                });
            }
        }
    }
    StudyResults {
        smoothness: 1.0,
        quantile: 0.5,
        rows,
    }
}

#[test]
fn report_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&fixture_results(), dir.path(), &[ReportFormat::Csv, ReportFormat::Svg]).unwrap();
    assert_eq!(files.len(), 4);
    for f in &files {
        let name = f.file_name().unwrap();
        let got = fs::read(f).unwrap();
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            fs::create_dir_all(&golden).unwrap();
            fs::write(golden.join(name), &got).unwrap();
        }
        let want = fs::read(golden.join(name)).unwrap();
        assert!(got == want, "{} differs from the golden copy", name.to_string_lossy());
    }
}

#[test]
fn report_header_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let res = fixture_results();
    emit_report(&res, dir.path(), &[ReportFormat::Csv]).unwrap();
    assert!(!dir.path().join("contraction.svg").exists());
    let text = fs::read_to_string(dir.path().join("distances.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, DISTANCES_HEADER);
    assert_eq!(read_study_results(dir.path()).unwrap(), res);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.contains("# reference_exponent=-0.25"));
}

#[test]
fn empty_report_is_an_error_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let empty = StudyResults {
        smoothness: 1.0,
        quantile: 0.5,
        rows: vec![],
    };
    assert!(matches!(emit_report(&empty, &out, &[ReportFormat::Csv]), Err(Error::EmptyResults)));
    assert!(!out.exists());
}

#[test]
fn dataset_round_trip_is_bit_exact() {
    let f0 = FourierCurve::from_pairs([(1, Complex64::new(1.0, 0.2)), (-2, Complex64::new(0.1, -0.7))]);
    let g0 = DiscreteMeasure::from_atoms([(0.1, 0.3), (0.4, 0.7)]).unwrap();
    let data = simulate(&SimConfig::new(f0, g0.into(), 37, 3), 123_456_789).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_dataset(&path, &data).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.seed(), 123_456_789);
    assert!(dir.path().join("data.shifts.csv").exists());
}

#[test]
fn malformed_dataset_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "# seed=1\n# cutoff=1\nobs,freq,re,im\n0,-1,0.5,0\n0,0,oops,0\n0,1,0,0\n").unwrap();
    match read_dataset(&path) {
        Err(Error::Parse { line, msg, .. }) => {
            assert_eq!(line, 5);
            assert!(msg.contains("oops"), "{msg}");
        }
        other => panic!("unexpected {other:?}"),
    }
    fs::write(&path, "# seed=1\n# cutoff=1\nobs,freq,re,im\n0,-1,0.5,0\n0,1,0,0\n").unwrap();
    assert!(matches!(read_dataset(&path), Err(Error::Parse { line: 5, .. })));
}

#[test]
fn curve_measure_and_certificate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let curve = FourierCurve::from_pairs([(2, Complex64::new(0.1 + 0.2, 1.0 / 3.0))]);
    write_curve(&dir.path().join("f.csv"), &curve).unwrap();
    assert_eq!(read_curve(&dir.path().join("f.csv")).unwrap(), curve);

    let atoms: ShiftMeasure = DiscreteMeasure::from_atoms([(0.1, 1.0 / 3.0), (0.7, 2.0 / 3.0)]).unwrap().into();
    write_measure(&dir.path().join("g.csv"), &atoms).unwrap();
    assert_eq!(read_measure(&dir.path().join("g.csv")).unwrap(), atoms);

    let grid: ShiftMeasure = GridDensity::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap().into();
    write_measure(&dir.path().join("h.csv"), &grid).unwrap();
    assert_eq!(read_measure(&dir.path().join("h.csv")).unwrap(), grid);

    let rows = vec![
        CertificateRow::new("a", 0.1, 0.2, true),
        CertificateRow::new("b/1", 1.0 / 7.0, 0.1, false),
    ];
    write_certificates(&dir.path().join("c.csv"), &rows).unwrap();
    assert_eq!(read_certificates(&dir.path().join("c.csv")).unwrap(), rows);
}
