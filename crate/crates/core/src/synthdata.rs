//! Synthetic paired-stream datasets whose class labels depend only on the
//! relation between the two streams, never on either stream alone. Each
//! stream's marginal distribution is identical across classes by
//! construction, which is what makes per-stream baselines collapse to
//! chance while relation-aware models succeed.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::cells::SequencePair;
use crate::error::{Error, Result};
use crate::jsonio;
use crate::numkernel::{DenseVector, Prng};

pub const DATASET_VERSION: &str = "colstsm-ds-v1";

/// Relation classes of the default scheme, in label order.
pub const RELATION_NAMES: [&str; 4] = ["mirror", "lagged", "anti-phase", "independent"];

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seq_len: usize,
    pub input_dim: usize,
    pub motif_pool: usize,
    pub lag: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            classes: 4,
            train_per_class: 200,
            test_per_class: 50,
            seq_len: 30,
            input_dim: 4,
            motif_pool: 8,
            lag: 3,
            noise_sigma: 0.1,
            seed: 42,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.classes > RELATION_NAMES.len() {
            return Err(Error::InvalidConfig(format!(
                "classes must be between 2 and {}, got {}",
                RELATION_NAMES.len(),
                self.classes
            )));
        }
        if self.lag < 1 {
            return Err(Error::InvalidConfig("lag must be at least 1".into()));
        }
        if self.seq_len <= self.lag {
            return Err(Error::InvalidConfig(format!(
                "seq_len ({}) must exceed lag ({})",
                self.seq_len, self.lag
            )));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::InvalidConfig("per-class sample counts must be positive".into()));
        }
        if self.input_dim == 0 || self.motif_pool == 0 {
            return Err(Error::InvalidConfig("input_dim and motif_pool must be positive".into()));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<SequencePair>,
    pub test: Vec<SequencePair>,
    pub config: GenConfig,
}

/// One smooth signal: per channel, the sum of three unit-amplitude
/// sinusoids with frequencies in [0.5, 3] cycles per sequence and random
/// phases. Values are bounded by 3 in magnitude.
type Motif = Vec<DenseVector>; // seq_len entries of input_dim

fn draw_motif(cfg: &GenConfig, prng: &mut Prng) -> Motif {
    let t_len = cfg.seq_len;
    let n = cfg.input_dim;
    let mut components = Vec::with_capacity(n);
    for _ in 0..n {
        let mut per_channel = [(0.0, 0.0); 3];
        for comp in per_channel.iter_mut() {
            let freq = prng.uniform(0.5, 3.0);
            let phase = prng.uniform(0.0, 2.0 * std::f64::consts::PI);
            *comp = (freq, phase);
        }
        components.push(per_channel);
    }
    (0..t_len)
        .map(|t| {
            let phase_t = t as f64 / t_len as f64;
            DenseVector::from_vec(
                components
                    .iter()
                    .map(|comps| {
                        comps
                            .iter()
                            .map(|(f, p)| (2.0 * std::f64::consts::PI * f * phase_t + p).sin())
                            .sum()
                    })
                    .collect(),
            )
        })
        .collect()
}

fn noisy(base: &[DenseVector], sigma: f64, prng: &mut Prng) -> Vec<DenseVector> {
    base.iter()
        .map(|v| v.map(|x| x + sigma * prng.gaussian()))
        .collect()
}

/// Stream b's noise-free part for the given relation class.
fn relation_base(class: usize, motif: &Motif, other: &Motif, lag: usize) -> Vec<DenseVector> {
    let t_len = motif.len();
    let n = motif[0].len();
    match class {
        // mirror: b repeats a's motif
        0 => motif.clone(),
        // lagged: b follows a's motif after `lag` steps, zero before that
        1 => (0..t_len)
            .map(|t| {
                if t >= lag {
                    motif[t - lag].clone()
                } else {
                    DenseVector::zeros(n)
                }
            })
            .collect(),
        // anti-phase: b opposes a's motif
        2 => motif.iter().map(|v| v.scale(-1.0)).collect(),
        // independent: b runs its own motif
        3 => other.clone(),
        _ => unreachable!("validated class count"),
    }
}

fn generate_sample(
    cfg: &GenConfig,
    motifs: &[Motif],
    class: usize,
    prng: &mut Prng,
) -> SequencePair {
    let motif = &motifs[prng.below(cfg.motif_pool)];
    let other = if class == 3 {
        &motifs[prng.below(cfg.motif_pool)]
    } else {
        motif
    };
    let a = noisy(motif, cfg.noise_sigma, prng);
    let base_b = relation_base(class, motif, other, cfg.lag);
    let b = noisy(&base_b, cfg.noise_sigma, prng);
    SequencePair { a, b, label: class }
}

fn generate_split(
    cfg: &GenConfig,
    motifs: &[Motif],
    per_class: usize,
    prng: &mut Prng,
) -> Vec<SequencePair> {
    let mut out = Vec::with_capacity(cfg.classes * per_class);
    for class in 0..cfg.classes {
        for _ in 0..per_class {
            out.push(generate_sample(cfg, motifs, class, prng));
        }
    }
    out
}

/// Deterministic generation: the motif pool is drawn first, then the train
/// split, then the test split, all from one generator stream.
pub fn generate_dataset(cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut prng = Prng::new(cfg.seed);
    let motifs: Vec<Motif> = (0..cfg.motif_pool).map(|_| draw_motif(cfg, &mut prng)).collect();
    let train = generate_split(cfg, &motifs, cfg.train_per_class, &mut prng);
    let test = generate_split(cfg, &motifs, cfg.test_per_class, &mut prng);
    Ok(Dataset {
        train,
        test,
        config: cfg.clone(),
    })
}

fn split_path(stem: &Path, split: &str) -> PathBuf {
    PathBuf::from(format!("{}.{}.jsonl", stem.display(), split))
}

fn config_json(cfg: &GenConfig) -> String {
    format!(
        "{{\"classes\":{},\"train_per_class\":{},\"test_per_class\":{},\"seq_len\":{},\"input_dim\":{},\"motif_pool\":{},\"lag\":{},\"noise_sigma\":{},\"seed\":{}}}",
        cfg.classes,
        cfg.train_per_class,
        cfg.test_per_class,
        cfg.seq_len,
        cfg.input_dim,
        cfg.motif_pool,
        cfg.lag,
        jsonio::fmt_f64(cfg.noise_sigma),
        cfg.seed
    )
}

/// Header line of a dataset file.
pub fn header_json(cfg: &GenConfig, split: &str) -> String {
    format!(
        "{{\"version\":\"{}\",\"split\":\"{}\",\"k\":{},\"T\":{},\"n\":{},\"config\":{}}}",
        DATASET_VERSION,
        split,
        cfg.classes,
        cfg.seq_len,
        cfg.input_dim,
        config_json(cfg)
    )
}

fn record_json(pair: &SequencePair) -> String {
    let stream = |xs: &[DenseVector]| {
        let mut s = String::from("[");
        for (i, v) in xs.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&jsonio::fmt_f64_slice(v.as_slice()));
        }
        s.push(']');
        s
    };
    format!(
        "{{\"label\":{},\"a\":{},\"b\":{}}}",
        pair.label,
        stream(&pair.a),
        stream(&pair.b)
    )
}

fn write_split(path: &Path, cfg: &GenConfig, split: &str, pairs: &[SequencePair]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut out = String::new();
    out.push_str(&header_json(cfg, split));
    out.push('\n');
    for pair in pairs {
        out.push_str(&record_json(pair));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes `<stem>.train.jsonl` and `<stem>.test.jsonl`, one record per line
/// behind a header line, reals carrying 17 significant digits.
pub fn write_dataset(ds: &Dataset, stem: &Path) -> Result<()> {
    write_split(&split_path(stem, "train"), &ds.config, "train", &ds.train)?;
    write_split(&split_path(stem, "test"), &ds.config, "test", &ds.test)?;
    Ok(())
}

fn parse_config(doc: &serde_json::Value) -> std::result::Result<GenConfig, String> {
    Ok(GenConfig {
        classes: jsonio::get_usize(doc, "classes")?,
        train_per_class: jsonio::get_usize(doc, "train_per_class")?,
        test_per_class: jsonio::get_usize(doc, "test_per_class")?,
        seq_len: jsonio::get_usize(doc, "seq_len")?,
        input_dim: jsonio::get_usize(doc, "input_dim")?,
        motif_pool: jsonio::get_usize(doc, "motif_pool")?,
        lag: jsonio::get_usize(doc, "lag")?,
        noise_sigma: jsonio::get_f64(doc, "noise_sigma")?,
        seed: jsonio::get_u64(doc, "seed")?,
    })
}

fn stream_from(doc: &serde_json::Value, key: &str, t_len: usize, n: usize)
    -> std::result::Result<Vec<DenseVector>, String>
{
    let rows = jsonio::matrix_values(jsonio::get(doc, key)?, key)?;
    if rows.len() != t_len {
        return Err(format!(
            "stream \"{key}\" has {} timesteps, expected {t_len}",
            rows.len()
        ));
    }
    let mut out = Vec::with_capacity(t_len);
    for (t, row) in rows.into_iter().enumerate() {
        if row.len() != n {
            return Err(format!(
                "stream \"{key}\" timestep {t} has {} channels, expected {n}",
                row.len()
            ));
        }
        out.push(DenseVector::from_vec(row));
    }
    Ok(out)
}

fn read_split(path: &Path, split: &str) -> Result<(GenConfig, Vec<SequencePair>)> {
    let display = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::DatasetFormat {
        path: display.clone(),
        line: 0,
        message: format!("cannot open: {e}"),
    })?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let fail = |line: usize, message: String| Error::DatasetFormat {
        path: display.clone(),
        line,
        message,
    };

    let header_line = match lines.next() {
        Some(Ok(l)) => l,
        Some(Err(e)) => return Err(fail(1, format!("unreadable header: {e}"))),
        None => return Err(fail(1, "file is empty".into())),
    };
    let header: serde_json::Value =
        serde_json::from_str(&header_line).map_err(|e| fail(1, format!("malformed header: {e}")))?;
    let version = jsonio::get_str(&header, "version").map_err(|m| fail(1, m))?;
    if version != DATASET_VERSION {
        return Err(fail(
            1,
            format!("unsupported version \"{version}\", expected \"{DATASET_VERSION}\""),
        ));
    }
    let file_split = jsonio::get_str(&header, "split").map_err(|m| fail(1, m))?;
    if file_split != split {
        return Err(fail(
            1,
            format!("split \"{file_split}\" where \"{split}\" was expected"),
        ));
    }
    let k = jsonio::get_usize(&header, "k").map_err(|m| fail(1, m))?;
    let t_len = jsonio::get_usize(&header, "T").map_err(|m| fail(1, m))?;
    let n = jsonio::get_usize(&header, "n").map_err(|m| fail(1, m))?;
    let cfg = parse_config(jsonio::get(&header, "config").map_err(|m| fail(1, m))?)
        .map_err(|m| fail(1, format!("bad config: {m}")))?;
    if cfg.classes != k || cfg.seq_len != t_len || cfg.input_dim != n {
        return Err(fail(1, "header k/T/n disagree with the embedded config".into()));
    }

    let mut pairs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| fail(line_no, format!("unreadable line: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| fail(line_no, format!("malformed record: {e}")))?;
        let label = jsonio::get_usize(&doc, "label").map_err(|m| fail(line_no, m))?;
        if label >= k {
            return Err(fail(line_no, format!("label {label} out of range for {k} classes")));
        }
        let a = stream_from(&doc, "a", t_len, n).map_err(|m| fail(line_no, m))?;
        let b = stream_from(&doc, "b", t_len, n).map_err(|m| fail(line_no, m))?;
        pairs.push(SequencePair { a, b, label });
    }
    Ok((cfg, pairs))
}

fn check_balance(path: &Path, pairs: &[SequencePair], classes: usize, per_class: usize) -> Result<()> {
    let mut counts = vec![0usize; classes];
    for p in pairs {
        counts[p.label] += 1;
    }
    if counts.iter().any(|&c| c != per_class) {
        return Err(Error::DatasetFormat {
            path: path.display().to_string(),
            line: 0,
            message: format!("class counts {counts:?} do not match {per_class} per class"),
        });
    }
    Ok(())
}

/// Reads the pair of files written by `write_dataset`.
pub fn read_dataset(stem: &Path) -> Result<Dataset> {
    let train_path = split_path(stem, "train");
    let test_path = split_path(stem, "test");
    let (cfg_train, train) = read_split(&train_path, "train")?;
    let (cfg_test, test) = read_split(&test_path, "test")?;
    if cfg_train != cfg_test {
        return Err(Error::DatasetFormat {
            path: test_path.display().to_string(),
            line: 1,
            message: "train and test headers carry different configurations".into(),
        });
    }
    check_balance(&train_path, &train, cfg_train.classes, cfg_train.train_per_class)?;
    check_balance(&test_path, &test, cfg_train.classes, cfg_train.test_per_class)?;
    Ok(Dataset {
        train,
        test,
        config: cfg_train,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(noise: f64) -> GenConfig {
        GenConfig {
            classes: 4,
            train_per_class: 3,
            test_per_class: 2,
            seq_len: 8,
            input_dim: 2,
            motif_pool: 4,
            lag: 3,
            noise_sigma: noise,
            seed: 7,
        }
    }

    #[test]
    fn mirror_class_without_noise_copies_the_stream() {
        let ds = generate_dataset(&tiny_config(0.0)).unwrap();
        for pair in ds.train.iter().filter(|p| p.label == 0) {
            for (va, vb) in pair.a.iter().zip(&pair.b) {
                assert_eq!(va.as_slice(), vb.as_slice());
            }
        }
    }

    #[test]
    fn lagged_class_without_noise_shifts_and_zero_pads() {
        let cfg = tiny_config(0.0);
        let ds = generate_dataset(&cfg).unwrap();
        for pair in ds.train.iter().filter(|p| p.label == 1) {
            for t in 0..cfg.lag {
                assert_eq!(pair.b[t].as_slice(), &[0.0, 0.0]);
            }
            for t in cfg.lag..cfg.seq_len {
                assert_eq!(pair.b[t].as_slice(), pair.a[t - cfg.lag].as_slice());
            }
        }
    }

    #[test]
    fn anti_phase_class_without_noise_negates_the_stream() {
        let ds = generate_dataset(&tiny_config(0.0)).unwrap();
        for pair in ds.train.iter().filter(|p| p.label == 2) {
            for (va, vb) in pair.a.iter().zip(&pair.b) {
                for (x, y) in va.iter().zip(vb.iter()) {
                    assert_eq!(*x, -*y);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = tiny_config(0.1);
        let d1 = generate_dataset(&cfg).unwrap();
        let d2 = generate_dataset(&cfg).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn class_balance_and_magnitude_bounds() {
        let cfg = tiny_config(0.1);
        let ds = generate_dataset(&cfg).unwrap();
        assert_eq!(ds.train.len(), 4 * 3);
        assert_eq!(ds.test.len(), 4 * 2);
        for split in [&ds.train, &ds.test] {
            let mut counts = vec![0usize; 4];
            for p in split.iter() {
                counts[p.label] += 1;
            }
            assert!(counts.iter().all(|&c| c == counts[0]));
        }
        let bound = 3.0 + 6.0 * cfg.noise_sigma;
        for pair in ds.train.iter().chain(&ds.test) {
            for v in pair.a.iter().chain(&pair.b) {
                for x in v.iter() {
                    assert!(x.is_finite());
                    assert!(x.abs() <= bound, "{x} exceeds {bound}");
                }
            }
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("ds");
        let ds = generate_dataset(&tiny_config(0.1)).unwrap();
        write_dataset(&ds, &stem).unwrap();
        let back = read_dataset(&stem).unwrap();
        assert_eq!(back.config, ds.config);
        assert_eq!(back.train.len(), ds.train.len());
        for (p, q) in ds.train.iter().zip(&back.train).chain(ds.test.iter().zip(&back.test)) {
            assert_eq!(p.label, q.label);
            for (va, vb) in p.a.iter().zip(&q.a).chain(p.b.iter().zip(&q.b)) {
                for (x, y) in va.iter().zip(vb.iter()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("ds");
        let ds = generate_dataset(&tiny_config(0.0)).unwrap();
        write_dataset(&ds, &stem).unwrap();

        let train = super::split_path(&stem, "train");
        let mut content = std::fs::read_to_string(&train).unwrap();
        content.push_str("{not json\n");
        std::fs::write(&train, content).unwrap();

        let err = read_dataset(&stem).unwrap_err();
        let msg = err.to_string();
        // header + 12 records, so the bad line is 14
        assert!(msg.contains("line 14"), "{msg}");
    }

    #[test]
    fn short_stream_reports_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("ds");
        let cfg = tiny_config(0.0);
        let ds = generate_dataset(&cfg).unwrap();
        write_dataset(&ds, &stem).unwrap();

        let train = super::split_path(&stem, "train");
        let content = std::fs::read_to_string(&train).unwrap();
        let mut lines: Vec<&str> = content.lines().collect();
        // truncate record 2's "a" by one timestep
        let doc: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
        let mut arr = doc["a"].as_array().unwrap().clone();
        arr.pop();
        let patched = format!(
            "{{\"label\":{},\"a\":{},\"b\":{}}}",
            doc["label"], serde_json::Value::Array(arr), doc["b"]
        );
        lines[2] = &patched;
        std::fs::write(&train, lines.join("\n")).unwrap();

        let err = read_dataset(&stem).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("timesteps"), "{msg}");
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("ds");
        let ds = generate_dataset(&tiny_config(0.0)).unwrap();
        write_dataset(&ds, &stem).unwrap();

        let train = super::split_path(&stem, "train");
        let content = std::fs::read_to_string(&train).unwrap();
        let patched = content.replacen("{\"label\":0,", "{\"label\":9,", 1);
        std::fs::write(&train, patched).unwrap();

        let err = read_dataset(&stem).unwrap_err();
        assert!(err.to_string().contains("label 9 out of range"), "{err}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = tiny_config(0.1);
        cfg.seq_len = 3;
        cfg.lag = 3;
        assert!(matches!(generate_dataset(&cfg), Err(Error::InvalidConfig(_))));

        let mut cfg = tiny_config(0.1);
        cfg.classes = 7;
        assert!(generate_dataset(&cfg).is_err());

        let mut cfg = tiny_config(0.1);
        cfg.noise_sigma = -1.0;
        assert!(generate_dataset(&cfg).is_err());
    }
}
