use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 42-class dialogue-act tagset, most to least frequent.
pub const SWBD_DAMSL: [&str; 42] = [
    "Non-Opinion",
    "Backchannel",
    "Opinion",
    "Abandoned",
    "Agreement",
    "Appreciation",
    "Yes-No-Question",
    "Non-verbal",
    "Yes answer",
    "Closing",
    "Wh-question",
    "No answer",
    "Acknowledgment",
    "Hedge",
    "Declarative question",
    "Backchannel(question)",
    "Quotation",
    "Summarize",
    "Non-yes answer",
    "Action-directive",
    "Completion",
    "Repeat phrase",
    "Open question",
    "Rhetorical question",
    "Hold before answer",
    "Reject",
    "Non-no answer",
    "Non-understand",
    "Other answers",
    "Opening",
    "Or clause",
    "Dispreferred answer",
    "3rd party talk",
    "Offers",
    "Self talk",
    "Downplayer",
    "Accept part",
    "Tag question",
    "Declartive question",
    "Apology",
    "Thanking",
    "Others",
];

/// Ordered class names; a label's id is its position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TagSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl TagSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("empty tagset".into()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate class name {n:?}")));
            }
        }
        Ok(TagSet { names, index })
    }

    pub fn swbd_damsl() -> Self {
        Self::new(SWBD_DAMSL.iter().map(|s| s.to_string()).collect()).expect("unique names")
    }

    /// Synthetic labels `c0`, `c1`, ...
    pub fn numbered(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("c{i}")).collect()).expect("unique names")
    }

    /// One class name per line; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.names.iter().map(|n| format!("{n}\n")).collect()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl TryFrom<Vec<String>> for TagSet {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        TagSet::new(names)
    }
}

impl From<TagSet> for Vec<String> {
    fn from(t: TagSet) -> Self {
        t.names
    }
}
