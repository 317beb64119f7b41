use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Serialize, Serializer};

use super::skill::SkillTag;
use super::tree::RationaleTree;

/// Node counts per skill, nested nodes included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkillHistogram {
    counts: [u64; 9],
}

impl SkillHistogram {
    pub fn get(&self, skill: SkillTag) -> u64 {
        self.counts[skill.index()]
    }

    pub fn increment(&mut self, skill: SkillTag) {
        self.counts[skill.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SkillTag, u64)> + '_ {
        SkillTag::ALL.into_iter().map(|s| (s, self.get(s)))
    }

    pub fn add_tree(&mut self, tree: &RationaleTree) {
        for node in tree.nodes() {
            self.increment(node.skill);
        }
    }

    pub fn from_counts(pairs: impl IntoIterator<Item = (SkillTag, u64)>) -> Self {
        let mut h = Self::default();
        for (s, c) in pairs {
            h.counts[s.index()] += c;
        }
        h
    }
}

impl Add for SkillHistogram {
    type Output = SkillHistogram;

    fn add(mut self, rhs: SkillHistogram) -> SkillHistogram {
        self += rhs;
        self
    }
}

impl AddAssign for SkillHistogram {
    fn add_assign(&mut self, rhs: SkillHistogram) {
        for (a, b) in self.counts.iter_mut().zip(rhs.counts) {
            *a += b;
        }
    }
}

impl<'a> FromIterator<&'a RationaleTree> for SkillHistogram {
    fn from_iter<I: IntoIterator<Item = &'a RationaleTree>>(iter: I) -> Self {
        let mut h = SkillHistogram::default();
        for tree in iter {
            h.add_tree(tree);
        }
        h
    }
}

impl Serialize for SkillHistogram {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, u64> = self.iter().map(|(s, c)| (s.name(), c)).collect();
        map.serialize(serializer)
    }
}

/// Counts every skill node across `trees`.
pub fn skill_histogram(trees: &[RationaleTree]) -> SkillHistogram {
    trees.iter().collect()
}
