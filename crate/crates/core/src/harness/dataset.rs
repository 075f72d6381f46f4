use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Share of malformed lines above which a dataset is rejected outright.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchItem {
    pub image_path: PathBuf,
    pub question: String,
    pub options: Option<Vec<String>>,
    /// Gold option letter when `options` is present, free text otherwise.
    pub answer: String,
}

impl BenchItem {
    /// Index of the gold option for multiple-choice items.
    pub fn gold_index(&self) -> Option<usize> {
        let opts = self.options.as_ref()?;
        let mut chars = self.answer.trim().chars();
        let letter = chars.next()?.to_ascii_uppercase();
        if chars.next().is_some() || !letter.is_ascii_uppercase() {
            return None;
        }
        let idx = (letter as u8 - b'A') as usize;
        (idx < opts.len()).then_some(idx)
    }
}

#[derive(Debug, Deserialize)]
struct RawItem {
    image: String,
    question: String,
    #[serde(default)]
    options: Option<Vec<String>>,
    answer: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<BenchItem>,
    pub malformed: usize,
}

/// Reads one JSON record per line: `{image, question, options?, answer}`.
/// Relative image paths resolve against the dataset's directory.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Dataset {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut items = Vec::new();
    let mut malformed = 0;
    let mut total = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match parse_line(line, base) {
            Ok(item) => items.push(item),
            Err(reason) => {
                log::debug!("{}:{}: {reason}", path.display(), lineno + 1);
                malformed += 1;
            }
        }
    }
    if malformed > 0 {
        log::warn!("{}: skipped {malformed} malformed line(s)", path.display());
    }
    if total > 0 && malformed as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        return Err(HarnessError::TooManyMalformed {
            path: path.display().to_string(),
            malformed,
            total,
        });
    }
    Ok(Dataset { items, malformed })
}

fn parse_line(line: &str, base: &Path) -> Result<BenchItem, String> {
    let raw: RawItem = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.question.trim().is_empty() {
        return Err("empty question".into());
    }
    let image = PathBuf::from(&raw.image);
    let item = BenchItem {
        image_path: if image.is_absolute() {
            image
        } else {
            base.join(image)
        },
        question: raw.question,
        options: raw.options.filter(|o| !o.is_empty()),
        answer: raw.answer,
    };
    if item.options.is_some() && item.gold_index().is_none() {
        return Err(format!("answer {:?} is not an option letter", item.answer));
    }
    Ok(item)
}
