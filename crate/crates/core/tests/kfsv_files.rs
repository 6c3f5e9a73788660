use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use kfree::arith::mu_k;
use kfree::sieves::{kfree_flags, KfreeTable};

#[test]
fn table_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k3.kfsv");
    let table = kfree_flags(1_000_001, 1_050_000, 3).unwrap();
    {
        let mut w = BufWriter::new(File::create(&path).unwrap());
        table.write_kfsv(&mut w).unwrap();
        w.flush().unwrap();
    }
    let header = KfreeTable::read_kfsv_header(File::open(&path).unwrap()).unwrap();
    assert_eq!(header, (3, 1_000_001, 1_050_000));
    let back = KfreeTable::read_kfsv(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back, table);
    for n in (1_000_001..=1_050_000u64).step_by(97) {
        assert_eq!(back.is_kfree(n), mu_k(n as i64, 3) == 1);
    }
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.kfsv");
    let table = kfree_flags(1, 100, 2).unwrap();
    let mut bytes = Vec::new();
    table.write_kfsv(&mut bytes).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(KfreeTable::read_kfsv(File::open(&path).unwrap()).is_err());
}
