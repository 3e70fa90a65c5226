//! Annotation manifests, the 16-folder train/valid/test split, top-K tag
//! selection and feature storage accounting.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mel::MelConfig;
use crate::mspec::HEADER_LEN;

/// Folder names of the MTAT layout, in split order.
pub const MTAT_FOLDERS: [&str; 16] = [
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "a", "b", "c", "d", "e", "f",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub clip_id: String,
    pub audio_path: String,
    pub folder: String,
    pub tag_flags: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub tag_names: Vec<String>,
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, item) in self.items.iter().enumerate() {
            if item.tag_flags.len() != self.tag_names.len() {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!(
                        "{} tag flags for {} tags",
                        item.tag_flags.len(),
                        self.tag_names.len()
                    ),
                });
            }
            if item.tag_flags.iter().any(|&f| f > 1) {
                return Err(Error::Parse {
                    row: i + 1,
                    message: "tag flags must be 0 or 1".into(),
                });
            }
            if !seen.insert(item.clip_id.as_str()) {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("duplicate clip_id {:?}", item.clip_id),
                });
            }
        }
        Ok(())
    }

    /// Positive count per tag, in column order.
    pub fn tag_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.tag_names.len()];
        for item in &self.items {
            for (c, &f) in counts.iter_mut().zip(&item.tag_flags) {
                *c += f as usize;
            }
        }
        counts
    }

    pub fn folders(&self) -> BTreeSet<&str> {
        self.items.iter().map(|i| i.folder.as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }
}

fn folder_of(path: &str) -> &str {
    path.split(['/', '\\']).next().unwrap_or("")
}

/// Parse a tab-separated annotation file: `clip_id`, tag columns, audio path.
/// Row numbers in errors are 1-based file lines.
pub fn parse_annotations(text: &str) -> Result<DatasetManifest> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        row: 1,
        message: "missing header row".into(),
    })?;
    let columns: Vec<&str> = header
        .split('\t')
        .map(|c| c.trim().trim_matches('"'))
        .collect();
    if columns.len() < 2 {
        return Err(Error::Parse {
            row: 1,
            message: "header needs clip_id and audio path columns".into(),
        });
    }
    let tag_names: Vec<String> = columns[1..columns.len() - 1]
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let cells: Vec<&str> = line
            .split('\t')
            .map(|c| c.trim().trim_matches('"'))
            .collect();
        if cells.len() != columns.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", columns.len(), cells.len()),
            });
        }
        let clip_id = cells[0].to_string();
        if !seen.insert(clip_id.clone()) {
            return Err(Error::Parse {
                row,
                message: format!("duplicate clip_id {clip_id:?}"),
            });
        }
        let tag_flags = cells[1..cells.len() - 1]
            .iter()
            .zip(&tag_names)
            .map(|(c, tag)| match *c {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::Parse {
                    row,
                    message: format!("tag {tag:?} has non-binary value {other:?}"),
                }),
            })
            .collect::<Result<Vec<u8>>>()?;
        let audio_path = cells[cells.len() - 1].to_string();
        items.push(ManifestItem {
            clip_id,
            folder: folder_of(&audio_path).to_string(),
            audio_path,
            tag_flags,
        });
    }
    Ok(DatasetManifest { tag_names, items })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitScheme {
    /// Folders 1-12 train, 13 valid, 14-16 test.
    Mtat12_1_3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: BTreeSet<String>,
    pub valid: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl SplitAssignment {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }

    pub fn split_of(&self, clip_id: &str) -> Option<Split> {
        if self.train.contains(clip_id) {
            Some(Split::Train)
        } else if self.valid.contains(clip_id) {
            Some(Split::Valid)
        } else if self.test.contains(clip_id) {
            Some(Split::Test)
        } else {
            None
        }
    }

    fn insert(&mut self, split: Split, clip_id: String) {
        match split {
            Split::Train => self.train.insert(clip_id),
            Split::Valid => self.valid.insert(clip_id),
            Split::Test => self.test.insert(clip_id),
        };
    }
}

/// Assign every clip by its folder. Folders must belong to the 16-folder
/// layout; a folder with no clips simply contributes nothing.
pub fn canonical_split(manifest: &DatasetManifest, scheme: SplitScheme) -> Result<SplitAssignment> {
    match scheme {
        SplitScheme::Mtat12_1_3 => {
            let unknown: Vec<&str> = manifest
                .folders()
                .into_iter()
                .filter(|f| !MTAT_FOLDERS.contains(f))
                .collect();
            if !unknown.is_empty() {
                return Err(Error::UnsupportedLayout(format!(
                    "expected the 16 folders 0-9, a-f; found {unknown:?}"
                )));
            }
            let mut out = SplitAssignment::default();
            for item in &manifest.items {
                let pos = MTAT_FOLDERS
                    .iter()
                    .position(|f| *f == item.folder)
                    .expect("checked above");
                let split = match pos {
                    0..=11 => Split::Train,
                    12 => Split::Valid,
                    _ => Split::Test,
                };
                out.insert(split, item.clip_id.clone());
            }
            Ok(out)
        }
    }
}

/// Read an externally supplied `clip_id<TAB>split` mapping (e.g. for MSD).
pub fn parse_split_mapping(text: &str) -> Result<SplitAssignment> {
    let mut out = SplitAssignment::default();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = idx + 1;
        let (id, split) = line.split_once('\t').ok_or_else(|| Error::Parse {
            row,
            message: "expected clip_id<TAB>split".into(),
        })?;
        let split = match split.trim() {
            "train" => Split::Train,
            "valid" | "validation" => Split::Valid,
            "test" => Split::Test,
            other => {
                return Err(Error::Parse {
                    row,
                    message: format!("unknown split {other:?}"),
                })
            }
        };
        let id = id.trim().to_string();
        if out.split_of(&id).is_some() {
            return Err(Error::Parse {
                row,
                message: format!("clip {id:?} assigned twice"),
            });
        }
        out.insert(split, id);
    }
    Ok(out)
}

/// Keep the `k` most frequent tags (ties broken by name), preserving the
/// original column order among the kept tags.
pub fn top_k_tags(manifest: &DatasetManifest, k: usize) -> Result<DatasetManifest> {
    let n = manifest.tag_names.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must be in 1..={n}, got {k}")));
    }
    let counts = manifest.tag_counts();
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        counts[b]
            .cmp(&counts[a])
            .then_with(|| manifest.tag_names[a].cmp(&manifest.tag_names[b]))
    });
    let mut keep: Vec<usize> = ranked[..k].to_vec();
    keep.sort_unstable();

    Ok(DatasetManifest {
        tag_names: keep
            .iter()
            .map(|&i| manifest.tag_names[i].clone())
            .collect(),
        items: manifest
            .items
            .iter()
            .map(|item| ManifestItem {
                tag_flags: keep.iter().map(|&i| item.tag_flags[i]).collect(),
                ..item.clone()
            })
            .collect(),
    })
}

/// Bytes of one MSPEC1 file: payload plus the fixed header.
pub fn storage_size(config: &MelConfig, n_frames: usize, bytes_per_value: usize) -> u64 {
    payload_size(config.n_mels, n_frames, bytes_per_value) + HEADER_LEN as u64
}

pub fn payload_size(n_mels: usize, n_frames: usize, bytes_per_value: usize) -> u64 {
    (n_mels * n_frames * bytes_per_value) as u64
}
