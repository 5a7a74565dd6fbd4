use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ensalign::synth::{self, SynthConfig};
use ensalign::textgrid::{Interval, IntervalTier, Tier};
use ensalign::TextGrid;

fn ensalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensalign"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Audio, transcripts, dictionary and reference TextGrids for `n` synthetic files.
struct Corpus {
    _dir: tempfile::TempDir,
    root: PathBuf,
    audio: PathBuf,
    text: PathBuf,
    refs: PathBuf,
    dict: PathBuf,
}

fn corpus(n: u64) -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let (audio, text, refs) = (root.join("audio"), root.join("text"), root.join("refs"));
    for d in [&audio, &text, &refs] {
        fs::create_dir_all(d).unwrap();
    }
    let classes = synth::default_classes();
    let dict: String = classes.iter().map(|c| format!("{}  {}\n", c.name.to_uppercase(), c.name)).collect();
    let dict_path = root.join("toy.dict");
    fs::write(&dict_path, dict).unwrap();
    for i in 0..n {
        let id = format!("utt{i}");
        let u = synth::utterance(&id, &classes, &SynthConfig::default(), 500 + i);
        u.audio
            .write_wav(fs::File::create(audio.join(format!("{id}.wav"))).unwrap())
            .unwrap();
        fs::write(text.join(format!("{id}.txt")), u.labels.join(" ")).unwrap();
        let mut start = 0.0;
        let intervals = u
            .labels
            .iter()
            .zip(&u.boundaries_s)
            .map(|(l, &end)| {
                let iv = Interval {
                    start_s: start,
                    end_s: end,
                    text: l.clone(),
                };
                start = end;
                iv
            })
            .collect();
        let xmax = u.audio.duration_s();
        let grid = TextGrid {
            xmin_s: 0.0,
            xmax_s: xmax,
            tiers: vec![Tier::Interval(IntervalTier {
                name: "phones".into(),
                xmin_s: 0.0,
                xmax_s: xmax,
                intervals,
            })],
        };
        fs::write(refs.join(format!("{id}.TextGrid")), grid.write().unwrap()).unwrap();
    }
    Corpus {
        _dir: dir,
        root,
        audio,
        text,
        refs,
        dict: dict_path,
    }
}

fn train(dir: &Path, members: usize, seed: u64) -> Output {
    ensalign(&[
        "train-ensemble",
        "--out-dir",
        p(dir),
        "--members",
        &members.to_string(),
        "--seed",
        &seed.to_string(),
        "--train-utterances",
        "12",
        "--epochs",
        "15",
    ])
}

fn align(c: &Corpus, models: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "align",
        "--audio-dir",
        p(&c.audio),
        "--text-dir",
        p(&c.text),
        "--dict",
        p(&c.dict),
        "--models",
        models,
        "--out-dir",
        p(out),
    ];
    args.extend_from_slice(extra);
    ensalign(&args)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn train_align_evaluate_and_tabulate() {
    let c = corpus(3);
    let models = c.root.join("models");
    let o = train(&models, 4, 1);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = models.join("manifest.txt");
    let listed = fs::read_to_string(&manifest).unwrap();
    assert_eq!(listed.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(listed.contains("member_03.model seed=4"));

    // same seeds, same bytes
    let again = c.root.join("models2");
    assert!(train(&again, 4, 1).status.success());
    assert_eq!(read_dir_sorted(&models), read_dir_sorted(&again));

    let out = c.root.join("out");
    let o = align(&c, p(&manifest), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for i in 0..3 {
        let grid = TextGrid::read(&fs::read_to_string(out.join(format!("utt{i}.TextGrid"))).unwrap()).unwrap();
        let names: Vec<&str> = grid.tiers.iter().map(Tier::name).collect();
        assert_eq!(names, ["words", "phones", "ci"]);
        let ci = fs::read_to_string(out.join(format!("utt{i}.ci.csv"))).unwrap();
        assert!(ci.starts_with("source_id,boundary_index,label,median_s,ci_lo_s,ci_hi_s,width_s\n"));
    }

    // worker count does not change any byte
    let serial = c.root.join("out_serial");
    let o = align(&c, p(&manifest), &serial, &["--workers", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_dir_sorted(&out), read_dir_sorted(&serial));

    let eval_out = c.root.join("eval");
    let o = ensalign(&[
        "evaluate",
        "--ref-dir",
        p(&c.refs),
        "--hyp-dir",
        p(&out),
        "--out-dir",
        p(&eval_out),
        "--data",
        "Synthetic",
        "--transcription",
        "Manual",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(eval_out.join("errors.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "data,transcription,eval_method,mean_abs_err_ms,median_abs_err_ms,adj_mean_abs_err_ms,adj_median_abs_err_ms"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], ["Synthetic", "Manual", "Manual"]);
    let adj_median: f64 = row[6].parse().unwrap();
    assert!(adj_median <= 20.0, "adjusted median {adj_median} ms");

    let o = ensalign(&["ci-table", "--out-dir", p(&out), "--data", "Synthetic", "--transcription", "Manual"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let combined = fs::read_to_string(out.join("ci_table.csv")).unwrap();
    let per_file: usize = (0..3)
        .map(|i| fs::read_to_string(out.join(format!("utt{i}.ci.csv"))).unwrap().lines().count() - 1)
        .sum();
    assert_eq!(combined.lines().count(), per_file + 1);
    let widths = fs::read_to_string(out.join("ci_widths.csv")).unwrap();
    assert!(widths.starts_with("data,transcription,mean_width_ms,median_width_ms\nSynthetic,Manual,"));
}

#[test]
fn zero_members_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = train(dir.path(), 0, 0);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--members"));
}

#[test]
fn single_member_omits_ci_tier_and_missing_transcript_fails_one_file() {
    let c = corpus(3);
    let models = c.root.join("models");
    assert!(train(&models, 1, 3).status.success());
    fs::remove_file(c.text.join("utt1.txt")).unwrap();
    let out = c.root.join("out");
    let o = align(&c, p(&models.join("member_00.model")), &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("aligned 2 of 3"), "{err}");
    assert!(err.contains("utt1"), "{err}");
    assert!(err.contains("suppressed"), "{err}");
    assert!(!out.join("utt1.TextGrid").exists());
    let grid = TextGrid::read(&fs::read_to_string(out.join("utt0.TextGrid")).unwrap()).unwrap();
    assert!(grid.tier("ci").is_none());
    assert!(grid.tier("phones").is_some());
    let ci = fs::read_to_string(out.join("utt0.ci.csv")).unwrap();
    assert!(ci.lines().nth(1).unwrap().ends_with(",,,"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let c = corpus(1);
    let models = c.root.join("models");
    assert!(train(&models, 3, 5).status.success());
    let conf = c.root.join("job.conf");
    fs::write(
        &conf,
        format!(
            "# toy job\naudio-dir = {}\ntext-dir = {}\ndict = {}\nmodels = {}\nrank = 2\n",
            p(&c.audio),
            p(&c.text),
            p(&c.dict),
            p(&models.join("manifest.txt"))
        ),
    )
    .unwrap();
    // rank 2 needs 4 members: suppressed
    let out = c.root.join("a");
    let o = ensalign(&["align", "--config", p(&conf), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(TextGrid::read(&fs::read_to_string(out.join("utt0.TextGrid")).unwrap())
        .unwrap()
        .tier("ci")
        .is_none());
    // the flag wins over the file
    let out = c.root.join("b");
    let o = ensalign(&["align", "--config", p(&conf), "--out-dir", p(&out), "--rank", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(TextGrid::read(&fs::read_to_string(out.join("utt0.TextGrid")).unwrap())
        .unwrap()
        .tier("ci")
        .is_some());

    fs::write(&conf, "colour = blue\n").unwrap();
    let o = ensalign(&["align", "--config", p(&conf), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
}

#[test]
fn precomputed_matrices_align_without_audio() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let (text, m1, m2, out) = (root.join("text"), root.join("m1"), root.join("m2"), root.join("out"));
    for d in [&text, &m1, &m2] {
        fs::create_dir_all(d).unwrap();
    }
    fs::write(root.join("d.dict"), "LAS  l a s\n").unwrap();
    fs::write(text.join("f.txt"), "las").unwrap();
    let matrix = |a: f64| {
        format!(
            "5 3 0.01\nl a s\n0.8 0.1 0.1\n{a} {} 0.1\n0.1 0.8 0.1\n0.1 0.1 0.8\n0.1 0.1 0.8\n",
            0.9 - a
        )
    };
    fs::write(m1.join("f.prob"), matrix(0.7)).unwrap();
    fs::write(m2.join("f.prob"), matrix(0.1)).unwrap();
    let models = format!("{},{}", p(&m1), p(&m2));
    let o = ensalign(&[
        "align",
        "--text-dir",
        p(&text),
        "--dict",
        p(&root.join("d.dict")),
        "--models",
        &models,
        "--out-dir",
        p(&out),
        "--rank",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ci = fs::read_to_string(out.join("f.ci.csv")).unwrap();
    let rows: Vec<&str> = ci.lines().skip(1).collect();
    // members put the first boundary at 0.02 and 0.01 s
    assert_eq!(rows[0], "f,1,l,0.015,0.01,0.02,0.01");
    assert_eq!(rows[1], "f,2,a,0.03,0.03,0.03,0");
    assert_eq!(rows[2], "f,3,s,0.05,0.05,0.05,0");
}

#[test]
fn evaluate_errors() {
    let c = corpus(2);
    let empty = c.root.join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = c.root.join("eval");
    // empty hypothesis directory
    let o = ensalign(&["evaluate", "--ref-dir", p(&c.refs), "--hyp-dir", p(&empty), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty evaluation set"), "{}", stderr(&o));
    // empty reference directory
    let o = ensalign(&["evaluate", "--ref-dir", p(&empty), "--hyp-dir", p(&c.refs), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty reference set"));
    // identical grids score zero; missing tier is reported per file
    let o = ensalign(&["evaluate", "--ref-dir", p(&c.refs), "--hyp-dir", p(&c.refs), "--out-dir", p(&out), "--method", "dtw"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().ends_with(",DTW,0.00,0.00,0.00,0.00"), "{table}");
    let o = ensalign(&["evaluate", "--ref-dir", p(&c.refs), "--hyp-dir", p(&c.refs), "--out-dir", p(&out), "--tier", "words"]);
    assert_eq!(o.status.code(), Some(2));
}
