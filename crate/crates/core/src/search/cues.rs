//! Visual cue generation and parsing.

use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::geometry::SourceImage;
use crate::oracle::{generate_text, ChatTurn, OracleBackend, OracleRequest, GENERATE_MAX_TOKENS};

const CUE_MARKER: &str = "following objects:";
const CUE_QUERY_PREFIX: &str = "Question: ";
const CUE_QUERY_SUFFIX: &str =
    " If you want to answer the question, which objects' information do you need?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueType {
    /// A specific object, searched best-first until one patch answers.
    Type1,
    /// A collective "all …" cue, searched exhaustively at shallow depth.
    Type2,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VisualCue {
    pub phrase: String,
    pub cue_type: CueType,
}

impl VisualCue {
    /// Classifies by the first word: `all …` is type 2.
    pub fn new(phrase: impl Into<String>) -> Self {
        let phrase = phrase.into();
        let collective = phrase
            .split_whitespace()
            .next()
            .is_some_and(|w| w.eq_ignore_ascii_case("all"));
        Self {
            cue_type: if collective {
                CueType::Type2
            } else {
                CueType::Type1
            },
            phrase,
        }
    }
}

/// In-context (question, completion) pairs used to prompt cue generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueExemplars {
    pairs: Vec<(String, String)>,
}

impl CueExemplars {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self, SearchError> {
        if pairs.is_empty() {
            return Err(SearchError::InvalidInput("cue exemplars must not be empty".into()));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn from_static(pairs: &[(&str, &str)]) -> Self {
        Self {
            pairs: pairs
                .iter()
                .map(|(q, o)| (q.to_string(), o.to_string()))
                .collect(),
        }
    }

    /// Exemplars tuned for single- and paired-object questions.
    pub fn v_star() -> Self {
        Self::from_static(&V_STAR)
    }

    /// Exemplars that additionally cover counting ("all …") questions.
    pub fn hr_bench() -> Self {
        Self::from_static(&HR_BENCH)
    }

    fn turns(&self) -> Vec<ChatTurn> {
        self.pairs
            .iter()
            .map(|(q, o)| ChatTurn {
                user: q.clone(),
                assistant: o.clone(),
            })
            .collect()
    }
}

const BOY_Q: &str = "Question: What is the color of the boy's bag? If you want to answer the question, which objects' information do you need?";
const BOY_A: &str = "To answer the question, I need know the location of the boy with a bag so that I can determine the color of the bag. So I need the information about the following objects: boy with a bag.";
const CARS_Q: &str = "Is the yellow car on the left or right side of the white car?";
const CARS_A: &str = "To answer the question, I need know the location of the yellow car and the white car so that I can determine the positional relationship between the two of them. So I need the information about the following objects: white car and yellow car.";
const GIRL_Q: &str = "Is the girl with pink hair on the left or right side of the man with backpack?";
const GIRL_A: &str = "To answer the question, I need know the location of the girl with pink hair and the man with backpack so that I can determine the positional relationship between the two of them. So I need the information about the following objects: girl with pink hair and man with backpack.";
const SIGN_Q: &str = "What kind of animal is on the red sign?";
const SIGN_A: &str = "To answer the question, I need know the location of the red sign so that I can determine the kind of animal on it. So I need the information about the following objects: red sign.";

const V_STAR: [(&str, &str); 6] = [
    (BOY_Q, BOY_A),
    (CARS_Q, CARS_A),
    (
        "Tell me the number on the black board.",
        "To answer the question, I need know the location of the black board so that I can determine the number on it. So I need the information about the following objects: black board",
    ),
    (GIRL_Q, GIRL_A),
    (SIGN_Q, SIGN_A),
    (
        "From the information on that advertising board, what is the type of this shop?",
        "To answer the question, I need know the location of the advertising board so that I can determine the type of the shop. So I need the information about the following objects: advertising board.",
    ),
];

const HR_BENCH: [(&str, &str); 6] = [
    (BOY_Q, BOY_A),
    (CARS_Q, CARS_A),
    (
        "Tell me the number on the black board above the dog.",
        "To answer the question, I need know the location of the black board above the dog so that I can determine the number on it. So I need the information about the following objects: black board above the dog.",
    ),
    (GIRL_Q, GIRL_A),
    (SIGN_Q, SIGN_A),
    (
        "How many cars in the image?",
        "To answer the question, I need know the location of all cars so that I can determine the number of cars. So I need the information about the following objects: all cars.",
    ),
];

/// The user turn asking which objects a question needs.
pub fn cue_query(question: &str) -> String {
    format!("{CUE_QUERY_PREFIX}{question}{CUE_QUERY_SUFFIX}")
}

/// Recovers the bare question from a [`cue_query`] (or returns the input
/// unchanged when it is not one).
pub fn strip_cue_query(text: &str) -> &str {
    text.strip_prefix(CUE_QUERY_PREFIX)
        .and_then(|t| t.strip_suffix(CUE_QUERY_SUFFIX))
        .unwrap_or(text)
}

/// Cues parsed from a completion. `degraded` marks output that did not
/// follow the exemplar format.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedCues {
    pub cues: Vec<VisualCue>,
    pub degraded: bool,
}

/// Extracts the object list after the last `following objects:` marker,
/// up to the first period, split on `and` and commas.
pub fn parse_cues(completion: &str) -> ParsedCues {
    let trimmed = completion.trim();
    if trimmed.is_empty() {
        return ParsedCues {
            cues: Vec::new(),
            degraded: true,
        };
    }
    // ASCII lowercasing keeps byte offsets aligned with the original
    let lowered = trimmed.to_ascii_lowercase();
    let Some(pos) = lowered.rfind(CUE_MARKER) else {
        return ParsedCues {
            cues: vec![VisualCue {
                phrase: trimmed.to_string(),
                cue_type: CueType::Type1,
            }],
            degraded: true,
        };
    };
    let rest = &trimmed[pos + CUE_MARKER.len()..];
    let list = rest.split('.').next().unwrap_or_default();
    let cues = list
        .split(',')
        .flat_map(|part| part.split(" and "))
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(VisualCue::new)
        .collect::<Vec<_>>();
    ParsedCues {
        degraded: cues.is_empty(),
        cues,
    }
}

/// Asks the backend which objects `question` needs, prompting with the
/// exemplars as prior chat turns. Falls back to the raw question as a
/// single type-1 cue when nothing parses.
pub fn generate_cues(
    backend: &dyn OracleBackend,
    source: &SourceImage,
    question: &str,
    exemplars: &CueExemplars,
) -> Result<ParsedCues, SearchError> {
    if question.trim().is_empty() {
        return Err(SearchError::InvalidInput("empty question".into()));
    }
    let request = OracleRequest::generate(source, Vec::new(), cue_query(question), GENERATE_MAX_TOKENS)
        .with_history(exemplars.turns());
    let completion = generate_text(backend, &request)?;
    let parsed = parse_cues(&completion.text);
    if parsed.cues.is_empty() {
        log::warn!("no cues parsed for {question:?}; searching for the question itself");
        return Ok(ParsedCues {
            cues: vec![VisualCue {
                phrase: question.trim().to_string(),
                cue_type: CueType::Type1,
            }],
            degraded: true,
        });
    }
    Ok(parsed)
}
