//! Simulated EPRB runs: configuration, per-pair shot generation, shot files
//! and correlation estimation.
//!
//! Shots are generated in blocks, one configured setting pair at a time.
//! Each pair draws from its own `(seed, pair)` random stream, so the data of
//! one pair never depends on which other pairs are configured.
//!
//! Shot files are line-delimited JSON, one record per line:
//!
//! ```json
//! {"run_index":0,"setting_a":"A","setting_b":"B'","outcome_a":1,"outcome_b":-1}
//! ```
//!
//! The run summary is `{"AB": {"E": ..., "SE": ..., "N": ...}, ...}`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consistency::{CorrelationAccumulator, CorrelationEstimate, CorrelationSet};
use crate::error::{Error, Result};
use crate::labels::{Outcome, Pair, Setting};
use crate::lhv::{LhvModel, LhvSampler};
use crate::quantum::{bell_state, joint_probabilities, Angle, DensityOperator};
use crate::rng::{self, StreamRng};

pub const SUMMARY_FILE: &str = "summary.json";

/// One experimental run at a single setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawShot")]
pub struct ShotRecord {
    pub run_index: u64,
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
}

#[derive(Deserialize)]
struct RawShot {
    run_index: u64,
    setting_a: Setting,
    setting_b: Setting,
    outcome_a: Outcome,
    outcome_b: Outcome,
}

impl TryFrom<RawShot> for ShotRecord {
    type Error = Error;

    fn try_from(r: RawShot) -> Result<Self> {
        ShotRecord::new(
            r.run_index,
            r.setting_a,
            r.setting_b,
            r.outcome_a,
            r.outcome_b,
        )
    }
}

impl ShotRecord {
    pub fn new(
        run_index: u64,
        setting_a: Setting,
        setting_b: Setting,
        outcome_a: Outcome,
        outcome_b: Outcome,
    ) -> Result<Self> {
        if !setting_a.is_port_a() {
            return Err(Error::InvalidLabel(format!("{setting_a} at port α")));
        }
        if setting_b.is_port_a() {
            return Err(Error::InvalidLabel(format!("{setting_b} at port β")));
        }
        Ok(ShotRecord {
            run_index,
            setting_a,
            setting_b,
            outcome_a,
            outcome_b,
        })
    }

    pub fn pair(&self) -> Pair {
        Pair::from_settings(self.setting_a, self.setting_b)
            .expect("port settings always form a measured pair")
    }

    /// `a_i · b_i`.
    pub fn product(&self) -> i8 {
        self.outcome_a.value() * self.outcome_b.value()
    }
}

/// Analyzer angles in radians per setting label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingAngles {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "A'")]
    pub a_prime: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "B'")]
    pub b_prime: f64,
}

impl SettingAngles {
    /// `(0, π/4, π/8, 3π/8)`, where the Bell state reaches `S = 2√2`.
    pub fn tsirelson() -> Self {
        use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
        SettingAngles {
            a: 0.0,
            a_prime: FRAC_PI_4,
            b: FRAC_PI_8,
            b_prime: 3.0 * FRAC_PI_8,
        }
    }

    pub fn from_array([a, a_prime, b, b_prime]: [f64; 4]) -> Self {
        SettingAngles {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    pub fn get(&self, s: Setting) -> Angle {
        Angle::new(match s {
            Setting::A => self.a,
            Setting::APrime => self.a_prime,
            Setting::B => self.b,
            Setting::BPrime => self.b_prime,
        })
    }
}

/// Inline model or path to a model file. Relative paths are resolved
/// against the config file's directory by [`ExperimentConfig::from_file`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(PathBuf),
    Inline(Box<LhvModel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// Bell state `(|++⟩ + |−−⟩)/√2` measured at the given angles.
    Qm {
        angles: SettingAngles,
    },
    Lhv {
        model: ModelRef,
    },
}

fn all_pairs() -> Vec<Pair> {
    Pair::MEASURED.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: Source,
    pub shots_per_pair: u64,
    pub seed: u64,
    #[serde(default = "all_pairs")]
    pub pairs: Vec<Pair>,
}

impl ExperimentConfig {
    pub fn qm(angles: SettingAngles, shots_per_pair: u64, seed: u64) -> Self {
        ExperimentConfig {
            source: Source::Qm { angles },
            shots_per_pair,
            seed,
            pairs: all_pairs(),
        }
    }

    pub fn lhv(model: LhvModel, shots_per_pair: u64, seed: u64) -> Self {
        ExperimentConfig {
            source: Source::Lhv {
                model: ModelRef::Inline(Box::new(model)),
            },
            shots_per_pair,
            seed,
            pairs: all_pairs(),
        }
    }

    /// Reads a JSON config, resolving a relative model path against the
    /// config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Source::Lhv {
            model: ModelRef::Path(p),
        } = &mut config.source
        {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_pair == 0 {
            return Err(Error::Config("shots_per_pair must be at least 1".into()));
        }
        if self.pairs.is_empty() {
            return Err(Error::Config("no setting pairs configured".into()));
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if !p.is_measured() {
                return Err(Error::Config(format!("{p} is not a measurable pair")));
            }
            if self.pairs[..i].contains(p) {
                return Err(Error::Config(format!("pair {p} listed twice")));
            }
        }
        if let Source::Qm { angles } = &self.source {
            let a = [angles.a, angles.a_prime, angles.b, angles.b_prime];
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("non-finite angle".into()));
            }
        }
        Ok(())
    }

    /// Loads the model (if any) and precomputes what shot generation needs.
    pub fn prepare(&self) -> Result<PreparedSource> {
        self.validate()?;
        Ok(match &self.source {
            Source::Qm { angles } => PreparedSource::Qm {
                state: bell_state().density(),
                angles: *angles,
            },
            Source::Lhv { model } => PreparedSource::Lhv(match model {
                ModelRef::Inline(m) => m.clone(),
                ModelRef::Path(p) => Box::new(LhvModel::from_file(p).map_err(|e| {
                    Error::Config(format!("invalid model reference {}: {e}", p.display()))
                })?),
            }),
        })
    }
}

#[derive(Debug, Clone)]
pub enum PreparedSource {
    Qm {
        state: DensityOperator,
        angles: SettingAngles,
    },
    Lhv(Box<LhvModel>),
}

enum Draw<'a> {
    /// Cumulative Born probabilities over (++, +−, −+, −−).
    Qm {
        cumulative: [f64; 4],
        last: usize,
    },
    Lhv(LhvSampler<'a>),
}

/// Sequential shot stream for one setting pair.
pub struct PairShots<'a> {
    draw: Draw<'a>,
    rng: StreamRng,
    setting_a: Setting,
    setting_b: Setting,
    next_index: u64,
    end: u64,
}

/// Random stream id of a pair: its position in (AB, AB′, A′B, A′B′).
pub fn stream_id(pair: Pair) -> u64 {
    pair.index() as u64
}

/// Stream of `n` shots for `pair`, keyed on `(seed, pair)`.
pub fn pair_shots(source: &PreparedSource, pair: Pair, n: u64, seed: u64) -> Result<PairShots<'_>> {
    if !pair.is_measured() {
        return Err(Error::Config(format!("{pair} is not a measurable pair")));
    }
    let (setting_a, setting_b) = pair.settings();
    let draw = match source {
        PreparedSource::Qm { state, angles } => {
            let p = joint_probabilities(state, angles.get(setting_a), angles.get(setting_b))?
                .as_array();
            let mut cumulative = [0.0; 4];
            let mut acc = 0.0;
            for (c, v) in cumulative.iter_mut().zip(p) {
                acc += v;
                *c = acc;
            }
            let last = p.iter().rposition(|v| *v > 0.0).unwrap_or(3);
            Draw::Qm { cumulative, last }
        }
        PreparedSource::Lhv(model) => Draw::Lhv(model.sampler()),
    };
    Ok(PairShots {
        draw,
        rng: rng::stream(seed, stream_id(pair)),
        setting_a,
        setting_b,
        next_index: 0,
        end: n,
    })
}

impl Iterator for PairShots<'_> {
    type Item = ShotRecord;

    fn next(&mut self) -> Option<ShotRecord> {
        if self.next_index >= self.end {
            return None;
        }
        let (outcome_a, outcome_b) = match &self.draw {
            Draw::Qm { cumulative, last } => {
                let u: f64 = self.rng.random();
                let k = cumulative.iter().position(|c| u < *c).unwrap_or(*last);
                (Outcome::from_sign(k < 2), Outcome::from_sign(k % 2 == 0))
            }
            Draw::Lhv(sampler) => sampler
                .sample(self.setting_a, self.setting_b, &mut self.rng)
                .expect("pair settings sit on their own ports"),
        };
        let record = ShotRecord {
            run_index: self.next_index,
            setting_a: self.setting_a,
            setting_b: self.setting_b,
            outcome_a,
            outcome_b,
        };
        self.next_index += 1;
        Some(record)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next_index) as usize;
        (left, Some(left))
    }
}

/// Per-pair `{E, SE, N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    #[serde(rename = "E", with = "crate::sig17")]
    pub correlation: f64,
    #[serde(rename = "SE", with = "crate::sig17")]
    pub std_error: f64,
    #[serde(rename = "N")]
    pub n: u64,
}

impl From<CorrelationEstimate> for PairSummary {
    fn from(e: CorrelationEstimate) -> Self {
        PairSummary {
            correlation: e.value,
            std_error: e.std_error,
            n: e.n,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RunSummary {
    pub pairs: BTreeMap<Pair, PairSummary>,
}

impl RunSummary {
    pub fn correlations(&self) -> Result<CorrelationSet> {
        let mut c = CorrelationSet::new();
        for (p, s) in &self.pairs {
            c.insert_entry(
                *p,
                crate::consistency::CorrelationEntry {
                    value: s.correlation,
                    std_error: Some(s.std_error),
                },
            )?;
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub shot_files: BTreeMap<Pair, PathBuf>,
    pub summary_file: PathBuf,
}

pub fn shot_file_name(pair: Pair) -> String {
    format!("shots_{}.jsonl", pair.file_token())
}

fn write_pair(
    source: &PreparedSource,
    config: &ExperimentConfig,
    pair: Pair,
    path: &Path,
) -> Result<PairSummary> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut acc = CorrelationAccumulator::new();
    for record in pair_shots(source, pair, config.shots_per_pair, config.seed)? {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        acc.push(&record)?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(acc.finish()?.into())
}

/// Generates every configured pair, writes one shot file per pair plus
/// `summary.json` into `out_dir`, and returns the summary.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let source = config.prepare()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results: Vec<(Pair, PathBuf, PairSummary)> = config
        .pairs
        .par_iter()
        .map(|&pair| {
            let path = out_dir.join(shot_file_name(pair));
            let summary = write_pair(&source, config, pair, &path)?;
            Ok((pair, path, summary))
        })
        .collect::<Result<_>>()?;
    let mut summary = RunSummary::default();
    let mut shot_files = BTreeMap::new();
    for (pair, path, s) in results {
        summary.pairs.insert(pair, s);
        shot_files.insert(pair, path);
    }
    let summary_file = out_dir.join(SUMMARY_FILE);
    std::fs::write(&summary_file, summary.to_json()? + "\n")
        .map_err(|e| Error::io(&summary_file, e))?;
    Ok(RunOutput {
        summary,
        shot_files,
        summary_file,
    })
}

/// Same shots as [`run_experiment`], reduced to the summary without
/// touching the filesystem.
pub fn simulate_summary(config: &ExperimentConfig) -> Result<RunSummary> {
    let source = config.prepare()?;
    let pairs: Vec<(Pair, PairSummary)> = config
        .pairs
        .par_iter()
        .map(|&pair| {
            let mut acc = CorrelationAccumulator::new();
            for r in pair_shots(&source, pair, config.shots_per_pair, config.seed)? {
                acc.push(&r)?;
            }
            Ok((pair, acc.finish()?.into()))
        })
        .collect::<Result<_>>()?;
    Ok(RunSummary {
        pairs: pairs.into_iter().collect(),
    })
}

fn pair_from_file_name(path: &Path) -> Option<Pair> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("shots_")?
        .strip_suffix(".jsonl")?
        .parse()
        .ok()
}

/// Reads and validates one shot file: records parse, run indices strictly
/// increase, and every record has the same setting pair (matching the file
/// name when it follows the `shots_<pair>.jsonl` pattern).
pub fn read_shot_file(path: &Path) -> Result<CorrelationEstimate> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let named = pair_from_file_name(path);
    let malformed = |line: usize, message: String| Error::MalformedRecord {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut acc = CorrelationAccumulator::new();
    let mut last_index: Option<u64> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ShotRecord =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        if let Some(prev) = last_index {
            if record.run_index <= prev {
                return Err(malformed(
                    line_no,
                    format!("run_index {} does not follow {prev}", record.run_index),
                ));
            }
        }
        last_index = Some(record.run_index);
        if let Some(p) = named {
            if record.pair() != p {
                return Err(malformed(
                    line_no,
                    format!("pair {} in a file named for {p}", record.pair()),
                ));
            }
        }
        acc.push(&record)
            .map_err(|e| malformed(line_no, e.to_string()))?;
    }
    if acc.count() == 0 {
        return Err(match named {
            Some(p) => Error::EmptyPair(p),
            None => malformed(0, "no records".into()),
        });
    }
    acc.finish()
}

/// Correlations (with standard errors) from a set of shot files, one file
/// per setting pair. `AA′` and `BB′` are never produced.
pub fn estimate(paths: &[PathBuf]) -> Result<CorrelationSet> {
    if paths.is_empty() {
        return Err(Error::NoPairs);
    }
    let estimates: Vec<CorrelationEstimate> = paths
        .par_iter()
        .map(|p| read_shot_file(p))
        .collect::<Result<_>>()?;
    let mut c = CorrelationSet::new();
    for e in estimates {
        if c.contains(e.pair) {
            return Err(Error::DuplicatePair(e.pair));
        }
        c.insert_entry(e.pair, e.entry())?;
    }
    Ok(c)
}

/// Shot files (`*.jsonl`) in `dir`, sorted by name.
pub fn shot_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn estimate_dir(dir: &Path) -> Result<CorrelationSet> {
    estimate(&shot_files_in(dir)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_json_shape() {
        let r = ShotRecord::new(
            3,
            Setting::A,
            Setting::BPrime,
            Outcome::Plus,
            Outcome::Minus,
        )
        .unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"run_index":3,"setting_a":"A","setting_b":"B'","outcome_a":1,"outcome_b":-1}"#
        );
        assert_eq!(serde_json::from_str::<ShotRecord>(&s).unwrap(), r);
        assert!(serde_json::from_str::<ShotRecord>(&s.replace("\"B'\"", "\"A'\"")).is_err());
        assert!(serde_json::from_str::<ShotRecord>(&s.replace(":-1", ":0")).is_err());
    }

    #[test]
    fn equal_angles_always_agree() {
        let config = ExperimentConfig {
            pairs: vec![Pair::AB],
            ..ExperimentConfig::qm(SettingAngles::from_array([0.3, 0.0, 0.3, 0.0]), 1000, 9)
        };
        let source = config.prepare().unwrap();
        let shots: Vec<_> = pair_shots(&source, Pair::AB, 1000, 9).unwrap().collect();
        assert_eq!(shots.len(), 1000);
        assert!(shots.iter().all(|s| s.product() == 1));
        assert!(shots.windows(2).all(|w| w[0].run_index < w[1].run_index));
        let summary = simulate_summary(&config).unwrap();
        assert_eq!(summary.pairs[&Pair::AB].correlation, 1.0);
    }

    #[test]
    fn streams_do_not_depend_on_other_pairs() {
        let angles = SettingAngles::tsirelson();
        let full = simulate_summary(&ExperimentConfig::qm(angles, 5000, 1)).unwrap();
        let alone = simulate_summary(&ExperimentConfig {
            pairs: vec![Pair::APrimeB],
            ..ExperimentConfig::qm(angles, 5000, 1)
        })
        .unwrap();
        assert_eq!(full.pairs[&Pair::APrimeB], alone.pairs[&Pair::APrimeB]);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::qm(SettingAngles::tsirelson(), 0, 1);
        assert!(c.validate().is_err());
        c.shots_per_pair = 1;
        c.pairs = vec![Pair::AB, Pair::AB];
        assert!(c.validate().is_err());
        c.pairs = vec![Pair::BBPrime];
        assert!(c.validate().is_err());
        c.pairs = vec![];
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults_pairs() {
        let text = r#"{"source":{"kind":"qm","angles":{"A":0,"A'":0.7853981633974483,"B":0.39269908169872414,"B'":1.1780972450961724}},"shots_per_pair":10,"seed":3}"#;
        let c: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.pairs, Pair::MEASURED.to_vec());
        let lhv = r#"{"source":{"kind":"lhv","model":"model.json"},"shots_per_pair":10,"seed":3}"#;
        let c: ExperimentConfig = serde_json::from_str(lhv).unwrap();
        assert_eq!(
            c.source,
            Source::Lhv {
                model: ModelRef::Path("model.json".into())
            }
        );
    }

    #[test]
    fn missing_model_file_is_config_error() {
        let c = ExperimentConfig {
            source: Source::Lhv {
                model: ModelRef::Path("/nonexistent/model.json".into()),
            },
            shots_per_pair: 1,
            seed: 0,
            pairs: all_pairs(),
        };
        assert!(
            matches!(c.prepare(), Err(Error::Config(m)) if m.contains("invalid model reference"))
        );
    }

    #[test]
    fn file_name_pairs() {
        for p in Pair::MEASURED {
            assert_eq!(pair_from_file_name(Path::new(&shot_file_name(p))), Some(p));
        }
        assert_eq!(pair_from_file_name(Path::new("other.jsonl")), None);
    }
}
