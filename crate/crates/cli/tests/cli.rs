use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vlcphy(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlcphy"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

#[test]
fn modes_lists_every_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = vlcphy(&["modes", "--csv"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phy,index,modulation,rll,clock_hz,rs_n,rs_k,cc_rate,data_rate_bps"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 23);
    assert_eq!(rows[0], "PHY-I,0,OOK,Manchester,200000,15,7,1/4,11666.667");
    assert_eq!(rows[22], "PHY-II,13,OOK,8B10B,120000000,,,,96000000.000");

    let table = stdout(&vlcphy(&["modes"], dir.path()));
    assert!(table.contains("266.7 kb/s") && table.contains("96 Mb/s"), "{table}");
}

#[test]
fn describe_fec_names_the_codes() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&vlcphy(&["describe-fec"], dir.path()));
    assert!(text.contains("primitive_poly=0x13"));
    assert!(text.contains("primitive_poly=0x11d"));
    assert!(text.contains("generators_octal=133,171,165"));
    assert!(text.contains("header PHY-I rs=RS(15,7) cc=1/4"));
}

#[test]
fn encode_dump_has_sections() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p"), b"abc").unwrap();
    let dump = stdout(&vlcphy(&["encode", "-i", "p", "--dump"], dir.path()));
    assert!(dump.starts_with("SHR 124 bits\n  000000: 5555555555555555\n"));
    assert!(dump.contains("\nPHR ") && dump.contains("\nPSDU "));

    let out = vlcphy(&["--phy", "2", "--mode", "13", "encode", "-i", "p", "-o", "bits.txt"], dir.path());
    assert!(out.status.success());
    let bits = fs::read_to_string(dir.path().join("bits.txt")).unwrap();
    assert!(bits.trim_end().bytes().all(|b| b == b'0' || b == b'1'));
}

#[test]
fn waveform_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<u8> = (0..=255).collect();
    fs::write(dir.path().join("data"), &data).unwrap();
    for (phy, mode) in [("1", "1"), ("1", "7"), ("2", "0"), ("2", "11")] {
        let out = vlcphy(&["--phy", phy, "--mode", mode, "--dimming", "30", "modulate", "-i", "data", "-o", "w.f32"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let meta: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("w.f32.json")).unwrap()).unwrap();
        for key in ["sample_rate", "oversample", "phy", "mode_index", "dimming"] {
            assert!(meta.get(key).is_some(), "sidecar lacks {key}");
        }
        let samples = fs::metadata(dir.path().join("w.f32")).unwrap().len();
        assert_eq!(samples % 4, 0);

        let out = vlcphy(&["decode", "-i", "w.f32", "-o", "back"], dir.path());
        assert!(out.status.success());
        let report = stdout(&out);
        assert_eq!(field(&report, "status"), Some("ok"));
        assert_eq!(field(&report, "dimming"), Some("30"));
        assert_eq!(fs::read(dir.path().join("back")).unwrap(), data);

        let out = vlcphy(&["demodulate", "-i", "w.f32", "-o", "chips"], dir.path());
        assert!(out.status.success());
        let chips = fs::read_to_string(dir.path().join("chips")).unwrap();
        assert!(chips.starts_with("0101010101"));
    }
}

#[test]
fn decode_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p"), b"payload").unwrap();
    assert!(vlcphy(&["modulate", "-i", "p", "-o", "w.f32"], dir.path()).status.success());
    // Keep the sidecar, replace the samples with steady light.
    let len = fs::metadata(dir.path().join("w.f32")).unwrap().len() as usize;
    fs::write(dir.path().join("w.f32"), 0.5f32.to_le_bytes().repeat(len / 4)).unwrap();
    let out = vlcphy(&["decode", "-i", "w.f32", "-o", "back"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(field(&stdout(&out), "status"), Some("failed"));
    assert_eq!(field(&stdout(&out), "stage"), Some("detection"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--phy", "3", "modes"][..],
        &["--mode", "40", "simulate"],
        &["frobnicate"],
        &["decode", "-i", "missing.f32"],
        &["--channel", "missing.json", "simulate"],
    ] {
        assert_eq!(vlcphy(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulate_reports_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = vlcphy(&["--mode", "3", "--seed", "5", "simulate", "--length", "80"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(field(&text, "payload_match"), Some("true"));
    assert_eq!(field(&text, "chip_errors"), Some("0"));

    fs::write(dir.path().join("ch.json"), r#"{"noise_sigma": 2.0}"#).unwrap();
    let out = vlcphy(&["--mode", "4", "--channel", "ch.json", "simulate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = vlcphy(&["--mode", "4", "--seed", "3", "sweep", "--snr", "4,inf", "--frames", "5", "--length", "16"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,ber,fer,ci_lo,ci_hi,corrected");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("inf,0"));
    assert_eq!(text, stdout(&vlcphy(&["--mode", "4", "--seed", "3", "sweep", "--snr", "4,inf", "--frames", "5", "--length", "16"], dir.path())));
}

#[test]
fn sendfile_every_phy1_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<u8> = (0..3000u32).map(|i| (i * 7 + i / 13) as u8).collect();
    fs::write(dir.path().join("file"), &data).unwrap();
    fs::write(
        dir.path().join("ch.json"),
        r#"{"gain": {"kind": "direct", "gain": 0.8}, "ambient_dc": 0.1, "noise_sigma": 0.1}"#,
    )
    .unwrap();
    for mode in 0..9 {
        let m = mode.to_string();
        let out = vlcphy(
            &["--mode", &m, "--channel", "ch.json", "--seed", &m, "sendfile", "-i", "file", "-o", "copy", "--chunk", "700"],
            dir.path(),
        );
        let text = stdout(&out);
        assert!(out.status.success(), "mode {mode}: {text}");
        assert_eq!(field(&text, "digest_match"), Some("true"));
        assert_eq!(field(&text, "frames"), Some("5"));
        assert_eq!(fs::read(dir.path().join("copy")).unwrap(), data);
    }
}
