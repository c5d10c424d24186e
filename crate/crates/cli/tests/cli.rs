use std::path::Path;
use std::process::{Command, Output};

fn svreid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svreid"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = svreid(dir, args);
    assert!(
        out.status.success(),
        "svreid {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path, name: &str, seed: &str) {
    ok(
        dir,
        &[
            "--seed", seed, "simulate", "--objects", "2", "--frames", "14", "--cuts", "7", "--dim", "8", "--out",
            &format!("{name}.svfb"), "--gt", &format!("{name}.csv"),
        ],
    );
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn staged_commands_match_pipeline_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "v", "5");
    let summary = ok(d, &["pipeline", "--input", "v.svfb", "--out", "run", "--dump-intermediates"]);
    assert!(summary.contains("2 shots"), "{summary}");
    for f in ["tracks.csv", "trajectories.jsonl", "majors.jsonl", "detections.csv", "shots.json", "attention.bin", "manifest.json"] {
        assert!(d.join("run").join(f).is_file(), "missing {f}");
    }

    ok(d, &["fuse", "--input", "v.svfb", "--out", "det.csv"]);
    assert_eq!(read(d.join("det.csv")), read(d.join("run/detections.csv")));
    ok(d, &["track", "--input", "v.svfb", "--detections", "det.csv", "--out", "tracks.csv"]);
    assert_eq!(read(d.join("tracks.csv")), read(d.join("run/tracks.csv")));
    ok(d, &["reid", "--input", "v.svfb", "--tracks", "tracks.csv", "--out", "traj.jsonl", "--majors", "majors.jsonl"]);
    assert_eq!(read(d.join("traj.jsonl")), read(d.join("run/trajectories.jsonl")));
    assert_eq!(read(d.join("majors.jsonl")), read(d.join("run/majors.jsonl")));

    ok(d, &["pipeline", "--replay", "run/manifest.json", "--out", "again"]);
    for f in ["tracks.csv", "trajectories.jsonl", "majors.jsonl", "detections.csv", "shots.json", "attention.bin"] {
        assert_eq!(read(d.join("run").join(f)), read(d.join("again").join(f)), "{f} differs on replay");
    }
}

#[test]
fn fusion_off_equals_all_attentions_off() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "v", "8");
    ok(d, &["--fusion", "off", "fuse", "--input", "v.svfb", "--out", "off.csv"]);
    ok(
        d,
        &["--set", "attn_ls=false", "--set", "attn_ll=false", "--set", "attn_gs=false", "fuse", "--input", "v.svfb", "--out", "none.csv"],
    );
    assert_eq!(read(d.join("off.csv")), read(d.join("none.csv")));
}

#[test]
fn evaluators_on_ground_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "v", "3");
    // ground truth rewritten as tracks and as detections
    let gt = String::from_utf8(read(d.join("v.csv"))).unwrap();
    let mut tracks = String::from("frame,track_id,cx,cy,w,h,conf,class,shot_id\n");
    let mut dets = String::from("frame,id,cx,cy,w,h,conf,class,visible\n");
    for line in gt.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[8] != "1" && f[8] != "true" {
            continue;
        }
        tracks.push_str(&format!("{},{},{},{},{},{},1,{},0\n", f[0], f[1], f[2], f[3], f[4], f[5], f[7]));
        dets.push_str(&format!("{},-1,{},{},{},{},0.9,{},1\n", f[0], f[2], f[3], f[4], f[5], f[7]));
    }
    std::fs::write(d.join("t.csv"), tracks).unwrap();
    std::fs::write(d.join("d.csv"), dets).unwrap();
    let mot = ok(d, &["eval-mot", "--gt", "v.csv", "--tracks", "t.csv", "--json", "mot.json"]);
    assert!(mot.starts_with("MOTA 1.0000"), "{mot}");
    let report: serde_json::Value = serde_json::from_slice(&read(d.join("mot.json"))).unwrap();
    assert_eq!(report["ids"], 0);
    let map = ok(d, &["eval-map", "--gt", "v.csv", "--detections", "d.csv"]);
    assert!(map.contains("mAP 1.0000"), "{map}");

    std::fs::write(d.join("q.csv"), "item,label,feature\n0,0,1 0\n1,1,0 1\n").unwrap();
    std::fs::write(d.join("g.csv"), "item,label,feature\n10,0,1 0.1\n11,1,0.1 1\n12,2,1 1\n").unwrap();
    let rank = ok(d, &["eval-rank", "--query", "q.csv", "--gallery", "g.csv", "--k", "1,3"]);
    assert_eq!(rank, "Rank-1 1.0000\nRank-3 1.0000\n");
}

#[test]
fn retrieval_puts_the_query_itself_first() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::create_dir(d.join("gallery")).unwrap();
    simulate(&d.join("gallery"), "a", "1");
    simulate(&d.join("gallery"), "b", "2");
    ok(d, &["--jobs", "2", "retrieve", "--query", "gallery/b.svfb", "--gallery", "gallery", "--out", "r.csv"]);
    let csv = String::from_utf8(read(d.join("r.csv"))).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..3], &["b", "1", "b"]);
    assert!((rows[0][3].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(rows[0][4], "match");
    // cached second run gives the same bytes
    ok(d, &["retrieve", "--query", "gallery/b.svfb", "--gallery", "gallery", "--out", "r2.csv"]);
    assert_eq!(read(d.join("r.csv")), read(d.join("r2.csv")));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "v", "1");
    std::fs::write(d.join("bad.cfg"), "tua = 3\n").unwrap();
    assert_eq!(svreid(d, &["--config", "bad.cfg", "fuse", "--input", "v.svfb", "--out", "x.csv"]).status.code(), Some(2));
    std::fs::write(d.join("junk.svfb"), b"not a frames file").unwrap();
    assert_eq!(svreid(d, &["fuse", "--input", "junk.svfb", "--out", "x.csv"]).status.code(), Some(3));
    std::fs::create_dir(d.join("empty")).unwrap();
    let out = svreid(d, &["retrieve", "--query", "v.svfb", "--gallery", "empty", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(d.join("short.csv"), "frame,id,cx,cy,w,h,conf,class,visible\n").unwrap();
    let out = svreid(d, &["eval-mot", "--gt", "short.csv", "--tracks", "short.csv"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = svreid(d, &["eval-map", "--gt", "short.csv", "--detections", "short.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(svreid(d, &["no-such-command"]).status.code(), Some(2));
    let out = svreid(d, &["simulate", "--frames", "6", "--degrade", "1,2", "--out", "x.svfb", "--gt", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_with_degradation_and_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &["simulate", "--objects", "2", "--frames", "12", "--drift", "0.01", "--degrade", "1,3,0.2", "--out", "v.svfb", "--gt", "v.csv"],
    );
    let gt = String::from_utf8(read(d.join("v.csv"))).unwrap();
    assert_eq!(gt.lines().count(), 1 + 2 * 12);
}
