use std::io::Write;

use superhedge::io::{read_payoff_csv, read_scenarios_csv, read_schedule_csv};
use superhedge::Error;

fn file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn payoff_table_interpolates() {
    let f = file("# source: test\nx,value\n90,0\n100,0\n110,10\n");
    let g = read_payoff_csv(f.path()).unwrap();
    assert_eq!(g.eval(105.0), 5.0);
    assert_eq!(g.eval(200.0), 10.0);
}

#[test]
fn wrong_header_is_a_table_error() {
    let f = file("strike,value\n1,2\n3,4\n");
    assert!(matches!(read_payoff_csv(f.path()), Err(Error::Table(_))));
    let f = file("x,value\n1,abc\n2,3\n");
    assert!(matches!(read_payoff_csv(f.path()), Err(Error::Table(_))));
}

#[test]
fn scenario_and_schedule_tables() {
    let f = file("G,density\n10,0.8\n0,1.1\n");
    assert_eq!(read_scenarios_csv(f.path()).unwrap(), vec![(10.0, 0.8), (0.0, 1.1)]);
    let f = file("t,rate\n0,1.2\n0.5,0.4\n");
    assert_eq!(read_schedule_csv(f.path()).unwrap(), vec![(0.0, 1.2), (0.5, 0.4)]);
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_payoff_csv(&dir.path().join("absent.csv")), Err(Error::Io(_))));
}
