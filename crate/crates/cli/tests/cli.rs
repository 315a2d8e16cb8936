use std::path::Path;
use std::process::{Command, Output};

use wsds::archive::{Structure, HEADER_LEN};

fn wsds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsds")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fig1_archive(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let input = dir.join("fig1.txt");
    std::fs::write(&input, "cafgaehbhfd").unwrap();
    let out = dir.join(format!("fig1{}.wsds", extra.join("")));
    let mut args = vec!["build", p(&input), p(&out), "--text"];
    args.extend_from_slice(extra);
    let o = wsds(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn build_prints_summary_and_root_bitmap() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("fig1.txt");
    std::fs::write(&input, "cafgaehbhfd").unwrap();
    let out = dir.path().join("a.wsds");
    let o = wsds(&["build", p(&input), p(&out), "--width", "8", "--variant", "tree", "--algo", "packed"]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    for key in ["n=11", "sigma=8", "bytes=", "work=", "span=", "wall_ms="] {
        assert!(line.contains(key), "{line}");
    }
    let s = Structure::from_bytes(&std::fs::read(&out).unwrap()).unwrap();
    let Structure::Tree(t) = s else { panic!("expected a tree") };
    assert_eq!(t.bitmap(0, 0).unwrap().to_bit_string(), "00110110110");
}

#[test]
fn queries_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for variant in ["tree", "shaped", "multiary", "matrix"] {
        let a = fig1_archive(dir.path(), &["--variant", variant]);
        let a = p(&a);
        let q = |args: &[&str]| {
            let mut v = vec!["query", a];
            v.extend_from_slice(args);
            wsds(&v)
        };
        assert_eq!(stdout(&q(&["access", "5"])), (b'e' as u64).to_string());
        assert_eq!(stdout(&q(&["rank", "102", "10"])), "2");
        assert_eq!(stdout(&q(&["select", "102", "2"])), "9");
        assert_eq!(stdout(&q(&["rankle", "100", "10"])), "5");
        let o = q(&["select", "102", "3"]);
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("occurrence out of range"));
        let o = q(&["access", "11"]);
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("index out of range"));
        assert_eq!(code(&q(&["rank", "1"])), 1);
    }
}

#[test]
fn corrupt_and_unsupported_archives_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let a = fig1_archive(dir.path(), &[]);
    let bytes = std::fs::read(&a).unwrap();
    let bad = dir.path().join("bad.wsds");
    for mutate in [
        |b: &mut Vec<u8>| b.truncate(b.len() - 3),
        |b: &mut Vec<u8>| b[5] = 9,
        |b: &mut Vec<u8>| b[0] = b'X',
        |b: &mut Vec<u8>| {
            let last = b.len() - 1;
            b[last] ^= 0x10;
        },
    ] {
        let mut b = bytes.clone();
        mutate(&mut b);
        std::fs::write(&bad, &b).unwrap();
        assert_eq!(code(&wsds(&["query", p(&bad), "access", "0"])), 3);
    }
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("odd.bin");
    std::fs::write(&input, [1u8, 2, 3]).unwrap();
    let out = dir.path().join("o.wsds");
    assert_eq!(code(&wsds(&["build", p(&input), p(&out), "--width", "16"])), 1);
    assert_eq!(code(&wsds(&["build", p(&input), p(&out), "--width", "12"])), 1);
    assert_eq!(code(&wsds(&["build", p(&input), p(&out), "--degree", "4"])), 1);
    assert_eq!(code(&wsds(&["build", p(&input), p(&out), "--variant", "matrix", "--algo", "domain"])), 1);
    assert_eq!(code(&wsds(&["build", p(&dir.path().join("missing")), p(&out)])), 1);
    assert_eq!(code(&wsds(&["nonsense"])), 1);
    assert_eq!(code(&wsds(&["--help"])), 0);
}

#[test]
fn wide_symbols_and_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("w32.bin");
    let syms: [u32; 5] = [70000, 5, 70000, 1 << 31, 5];
    std::fs::write(&input, syms.iter().flat_map(|s| s.to_le_bytes()).collect::<Vec<u8>>()).unwrap();
    let out = dir.path().join("w.wsds");
    assert_eq!(code(&wsds(&["build", p(&input), p(&out), "--width", "32", "--variant", "matrix"])), 0);
    assert_eq!(stdout(&wsds(&["query", p(&out), "access", "3"])), (1u64 << 31).to_string());
    assert_eq!(stdout(&wsds(&["query", p(&out), "rank", "70000", "4"])), "2");

    let empty = dir.path().join("empty.bin");
    std::fs::write(&empty, []).unwrap();
    for variant in ["tree", "shaped", "multiary", "matrix"] {
        let o = wsds(&["build", p(&empty), p(&out), "--variant", variant]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).starts_with("n=0 "));
        let s = Structure::from_bytes(&std::fs::read(&out).unwrap()).unwrap();
        assert_eq!(s.len(), 0);
        assert_eq!(code(&wsds(&["query", p(&out), "access", "0"])), 2);
    }
}

#[test]
fn builders_give_identical_structure_sections() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("text.txt");
    let text: String = (0..5000).map(|i| (b'a' + ((i * i + 7 * i) % 23) as u8) as char).collect();
    std::fs::write(&input, text).unwrap();
    let mut archives = Vec::new();
    for (algo, extra) in [("packed", "1"), ("sorted", "1"), ("domain", "7"), ("naive", "1")] {
        let out = dir.path().join(format!("{algo}.wsds"));
        let o = wsds(&["build", p(&input), p(&out), "--text", "--algo", algo, "--parts", extra, "--tau", "3"]);
        assert_eq!(code(&o), 0);
        archives.push(std::fs::read(&out).unwrap());
    }
    for a in &archives[1..] {
        assert_eq!(&a[HEADER_LEN..], &archives[0][HEADER_LEN..]);
        assert_eq!(a, &archives[0]);
    }
}

#[test]
fn threads_flag_and_env_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("text.txt");
    std::fs::write(&input, "abracadabra".repeat(500)).unwrap();
    let mut seen: Option<(Vec<u8>, String)> = None;
    for t in ["1", "2", "8"] {
        let out = dir.path().join(format!("t{t}.wsds"));
        let o = Command::new(env!("CARGO_BIN_EXE_wsds"))
            .args(["build", p(&input), p(&out), "--text", "--algo", "sorted"])
            .env("WSDS_THREADS", t)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        let line = stdout(&o);
        let work = line.split_whitespace().find(|w| w.starts_with("work=")).unwrap().to_string();
        let bytes = std::fs::read(&out).unwrap();
        match &seen {
            None => seen = Some((bytes, work)),
            Some((b, w)) => {
                assert_eq!(b, &bytes);
                assert_eq!(w, &work);
            }
        }
    }
}

#[test]
fn verify_passes_and_catches_injected_faults() {
    let o = wsds(&["verify", "--n", "400", "--sigma", "20", "--seeds", "6"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS 24 instances"));
    assert_eq!(code(&wsds(&["verify", "--n", "0", "--seeds", "3"])), 0);
    assert_eq!(code(&wsds(&["verify", "--n", "300", "--sigma", "64", "--variant", "multiary", "--seeds", "4..8", "--algo-set", "packed,sorted"])), 0);

    let o = wsds(&["verify", "--n", "300", "--variant", "matrix", "--seeds", "2", "--inject-fault"]);
    assert_eq!(code(&o), 4);
    let out = stdout(&o);
    assert!(out.contains("payload mismatch at node 0"), "{out}");
    assert!(out.contains("reproduce: wsds verify --n "), "{out}");
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = wsds(&[
        "bench", "--n", "4096,16384", "--sigma", "256", "--algo", "naive,packed,domain", "--threads", "1,2", "--csv", p(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algorithm,n,sigma,d,tau,P,threads,wall_ms,work_ops,span_ops,table_bytes,structure_bytes"
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 3);
    for r in &rows {
        assert_eq!(r.len(), 12);
        assert!(r[7].parse::<f64>().unwrap() > 0.0);
    }
    // work is the same for every thread count
    for a in &rows {
        for b in &rows {
            if a[0] == b[0] && a[1] == b[1] {
                assert_eq!(a[8], b[8]);
            }
        }
    }
    assert_eq!(code(&wsds(&["bench", "--reps", "2"])), 1);
    assert_eq!(code(&wsds(&["bench", "--n", "10", "--csv", "/nonexistent/dir/x.csv"])), 1);
}
