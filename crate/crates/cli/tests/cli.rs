use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn zipper(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zipper"))
        .args(args)
        .current_dir(dir)
        .env("ZIPPER_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PERTURBED: &str = r#"{"dimension":2,
 "maps":[{"matrix":[0.1,0,0.1,0.8],"translation":[0,-0.2]},
         {"matrix":[0.8,0.1,0,0.1],"translation":[0.2,0]}],
 "vertices":[[0,-1],[0.1,-0.2],[1,0]],
 "signature":[0,0],"weights":[0.5,0.5]}"#;

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&zipper(d, &["validate", "--preset", "derham", "--omega", "0.1"])), 0);

    fs::write(d.join("bad.json"), PERTURBED).unwrap();
    let o = zipper(d, &["validate", "--zipper", "bad.json"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert_eq!(code(&zipper(d, &["pressure", "--zipper", "bad.json"])), 1);

    assert_eq!(code(&zipper(d, &["validate", "--zipper", "missing.json"])), 2);
    assert_eq!(code(&zipper(d, &["pressure", "--preset", "derham", "--omega", "0.1", "--t", "1:0:0.1"])), 2);
    assert_eq!(code(&zipper(d, &["pressure", "--preset", "derham", "--omega", "0.1", "--t", "0:1"])), 2);
    assert_eq!(code(&zipper(d, &["pressure", "--preset", "derham", "--omega", "0.1", "--depths", "8,4"])), 2);
    assert_eq!(code(&zipper(d, &["render", "--preset", "derham"])), 2);
    assert_eq!(code(&zipper(d, &["render", "--preset", "derham", "--omega", "0.7"])), 2);
    assert_eq!(code(&zipper(d, &["frobnicate"])), 2);
}

#[test]
fn json_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("z.json"), PERTURBED.replace("[0.8,0.1,0,0.1]", "[0.8,0.1,0]")).unwrap();
    let o = zipper(d, &["validate", "--zipper", "z.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("maps[1].matrix"), "{}", stderr(&o));

    fs::write(d.join("z.json"), PERTURBED.replace("\"translation\":[0,-0.2]", "\"translation\":[0,\"a\"]")).unwrap();
    let o = zipper(d, &["validate", "--zipper", "z.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("maps[0].translation[1]"), "{}", stderr(&o));
}

#[test]
fn pressure_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = zipper(d, &["pressure", "--preset", "derham", "--omega", "0.1", "--t", "-1:1:0.5", "--depths", "4,6,8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(d.join("pressure.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,P_4,P_6,P_8,P,P_prime,residual");
    assert_eq!(lines.len(), 1 + 5 + 1);
    let trailer = lines.last().unwrap();
    let hash = trailer.strip_prefix("# config-hash=").expect("hash trailer");
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    let zero: Vec<f64> = lines[3].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(zero[0], 0.0);
    for p in &zero[1..5] {
        assert!((p + 1.0).abs() < 1e-12, "{}", lines[3]);
    }
}

#[test]
fn render_point_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = zipper(d, &["render", "--preset", "derham", "--omega", "0.1", "--out", "pics"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("pics/curve.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 4097);
    let svg = fs::read_to_string(d.join("pics/curve.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(points.split(' ').count(), 4097);
}

#[test]
fn spectrum_peaks_at_the_typical_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = zipper(
        d,
        &["spectrum", "--preset", "derham", "--omega", "0.1", "--t", "-2:2:0.05", "--depths", "6,8,10", "--counting-r", "0.001"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(d.join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,D,t_star,window_tag"));
    let rows: Vec<Vec<String>> = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    let best = rows
        .iter()
        .max_by(|a, b| a[1].parse::<f64>().unwrap().total_cmp(&b[1].parse().unwrap()))
        .unwrap();
    assert!((best[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-9, "{best:?}");
    assert!(best[2].parse::<f64>().unwrap().abs() < 1e-6, "{best:?}");
    let counting = fs::read_to_string(d.join("counting.csv")).unwrap();
    assert!(counting.starts_with("beta,D_count,bin_count\n"));
}

#[test]
fn reruns_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["holder", "--preset", "derham", "--omega", "0.2", "--random", "4", "--seed", "7", "--depth", "16"];
    assert_eq!(code(&zipper(a.path(), &args)), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_zipper"))
        .args(args)
        .current_dir(b.path())
        .env("ZIPPER_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let x = fs::read(a.path().join("holder.csv")).unwrap();
    let y = fs::read(b.path().join("holder.csv")).unwrap();
    assert_eq!(x, y);
    assert!(String::from_utf8(x).unwrap().starts_with("x,symbolic_final,direct_min,direct_regression\n"));
}

#[test]
fn cones_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = zipper(d, &["cones", "--preset", "derham", "--omega", "0.2", "--samples", "200"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("cones.json")).unwrap()).unwrap();
    let records = v.as_array().unwrap();
    assert!(!records.is_empty());
    for r in records {
        for key in ["condition", "pass", "margin", "witness"] {
            assert!(r.get(key).is_some(), "{r}");
        }
    }
    // the raw matrices have zero entries; a coordinate change fixes that
    let positivity = records.iter().find(|r| r["condition"] == "positivity").unwrap();
    assert_eq!(positivity["pass"], false);
    assert_eq!(positivity["witness"], "map 0, entry (0, 1)");
    let conj = records.iter().find(|r| r["condition"] == "conjugation").unwrap();
    assert_eq!(conj["pass"], true);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_zipper"))
        .args(["validate", "--preset", "derham", "--omega", "0.1"])
        .current_dir(dir.path())
        .env("ZIPPER_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
