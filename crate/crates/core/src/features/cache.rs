use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Encoding, FeatureError, Normalizer, PreparedData, Sample};

const CACHE_FORMAT: u32 = 1;

/// Everything the cached samples depend on. A cache is reused only if its
/// header equals the one the caller would produce now.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheHeader {
    pub format: u32,
    pub encoding: Encoding,
    pub normalizer: Normalizer,
    pub activity_vocab: String,
    pub role_vocab: String,
}

impl CacheHeader {
    pub fn new(encoding: Encoding, normalizer: Normalizer, activity_vocab: String, role_vocab: String) -> Self {
        Self {
            format: CACHE_FORMAT,
            encoding,
            normalizer,
            activity_vocab,
            role_vocab,
        }
    }
}

/// Column-per-field layout of one split.
#[derive(Serialize, Deserialize)]
struct Columns {
    case_id: Vec<String>,
    k: Vec<usize>,
    activities: Vec<Vec<usize>>,
    roles: Vec<Vec<usize>>,
    times: Vec<Vec<[f64; 3]>>,
    targets: Vec<super::TaskTargets>,
    target_times: Vec<[f64; 3]>,
}

impl Columns {
    fn from_samples(samples: &[Sample]) -> Self {
        Self {
            case_id: samples.iter().map(|s| s.case_id.clone()).collect(),
            k: samples.iter().map(|s| s.k).collect(),
            activities: samples.iter().map(|s| s.activities.clone()).collect(),
            roles: samples.iter().map(|s| s.roles.clone()).collect(),
            times: samples.iter().map(|s| s.times.clone()).collect(),
            targets: samples.iter().map(|s| s.targets).collect(),
            target_times: samples.iter().map(|s| s.target_times).collect(),
        }
    }

    fn into_samples(self) -> Vec<Sample> {
        let mut acts = self.activities.into_iter();
        let mut roles = self.roles.into_iter();
        let mut times = self.times.into_iter();
        self.case_id
            .into_iter()
            .zip(self.k)
            .zip(self.targets.into_iter().zip(self.target_times))
            .filter_map(|((case_id, k), (targets, target_times))| {
                Some(Sample {
                    case_id,
                    k,
                    activities: acts.next()?,
                    roles: roles.next()?,
                    times: times.next()?,
                    targets,
                    target_times,
                })
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    header: CacheHeader,
    activity_classes: usize,
    role_classes: usize,
    truncated: usize,
    clamped: usize,
    train: Columns,
    validation: Columns,
    test: Columns,
}

pub fn write_cache(path: &Path, header: &CacheHeader, data: &PreparedData) -> Result<(), FeatureError> {
    let file = CacheFile {
        header: header.clone(),
        activity_classes: data.activity_classes,
        role_classes: data.role_classes,
        truncated: data.truncated,
        clamped: data.clamped,
        train: Columns::from_samples(&data.train),
        validation: Columns::from_samples(&data.validation),
        test: Columns::from_samples(&data.test),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &file)?;
    w.flush()?;
    Ok(())
}

/// Loads a cache, failing with `StaleCache` if `expected` disagrees with
/// the stored header.
pub fn read_cache(path: &Path, expected: &CacheHeader) -> Result<PreparedData, FeatureError> {
    let file: CacheFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let h = &file.header;
    if h.format != expected.format {
        return Err(FeatureError::StaleCache("format"));
    }
    if h.encoding != expected.encoding {
        return Err(FeatureError::StaleCache("encoding"));
    }
    if h.normalizer != expected.normalizer {
        return Err(FeatureError::StaleCache("normalizer"));
    }
    if h.activity_vocab != expected.activity_vocab {
        return Err(FeatureError::StaleCache("activity vocabulary"));
    }
    if h.role_vocab != expected.role_vocab {
        return Err(FeatureError::StaleCache("role vocabulary"));
    }
    Ok(PreparedData {
        encoding: h.encoding,
        normalizer: h.normalizer,
        train: file.train.into_samples(),
        validation: file.validation.into_samples(),
        test: file.test.into_samples(),
        activity_classes: file.activity_classes,
        role_classes: file.role_classes,
        truncated: file.truncated,
        clamped: file.clamped,
    })
}
