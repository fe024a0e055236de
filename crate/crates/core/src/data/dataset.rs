use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::image::Image;
use super::label::{EmotionLabel, NUM_CLASSES};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Fer2013,
    Ckplus,
    Synthetic,
    Augmented,
}

/// FER2013 `Usage` column values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Usage {
    Training,
    PublicTest,
    PrivateTest,
}

impl Usage {
    pub fn as_str(self) -> &'static str {
        match self {
            Usage::Training => "Training",
            Usage::PublicTest => "PublicTest",
            Usage::PrivateTest => "PrivateTest",
        }
    }
}

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Usage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Training" => Ok(Usage::Training),
            "PublicTest" => Ok(Usage::PublicTest),
            "PrivateTest" => Ok(Usage::PrivateTest),
            other => Err(Error::invalid(format!("unknown usage tag '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image: Image,
    pub label: EmotionLabel,
    pub usage: Option<Usage>,
}

impl Sample {
    pub fn new(image: Image, label: EmotionLabel) -> Self {
        Self {
            image,
            label,
            usage: None,
        }
    }
}

/// Ordered collection of labelled images sharing one shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    items: Vec<Sample>,
    source: Source,
}

impl Dataset {
    pub fn new(items: Vec<Sample>, source: Source) -> Result<Self> {
        if let Some(first) = items.first() {
            let shape = (first.image.width(), first.image.height());
            if let Some((i, s)) = items
                .iter()
                .enumerate()
                .find(|(_, s)| (s.image.width(), s.image.height()) != shape)
            {
                return Err(Error::shape(format!(
                    "item {i} is {}x{}, dataset images are {}x{}",
                    s.image.width(),
                    s.image.height(),
                    shape.0,
                    shape.1
                )));
            }
        }
        Ok(Self { items, source })
    }

    pub fn empty(source: Source) -> Self {
        Self {
            items: Vec::new(),
            source,
        }
    }

    pub fn items(&self) -> &[Sample] {
        &self.items
    }

    pub fn into_items(self) -> Vec<Sample> {
        self.items
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.items
            .first()
            .map(|s| (s.image.width(), s.image.height()))
    }

    pub fn labels(&self) -> Vec<EmotionLabel> {
        self.items.iter().map(|s| s.label).collect()
    }

    /// New dataset holding clones of the items at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            source: self.source,
        }
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for s in &self.items {
            counts[s.label.code()] += 1;
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total: usize,
    pub per_class: BTreeMap<EmotionLabel, usize>,
    /// `(width, height)`; `None` for an empty dataset.
    pub image_shape: Option<(usize, usize)>,
}

pub fn summarize(ds: &Dataset) -> DatasetSummary {
    let counts = ds.class_counts();
    DatasetSummary {
        total: ds.len(),
        per_class: EmotionLabel::ALL
            .iter()
            .map(|&l| (l, counts[l.code()]))
            .collect(),
        image_shape: ds.image_shape(),
    }
}
