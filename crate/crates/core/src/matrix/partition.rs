use crate::error::{Error, Result};

/// Balanced assignment of the `d` coordinates to `c` nodes.
///
/// Every block holds exactly `s = d / c` coordinates, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    // position of each coordinate inside its block
    local_index: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Block `l` is `{l*s, ..., (l+1)*s - 1}`.
    pub fn contiguous(d: usize, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidPartition(
                "node count must be at least 1".into(),
            ));
        }
        if d == 0 || !d.is_multiple_of(c) {
            return Err(Error::NonDivisible { d, c });
        }
        let s = d / c;
        Self::from_assignment((0..d).map(|i| i / s).collect(), c)
    }

    /// Builds a partition from a per-coordinate node id, requiring balanced blocks.
    pub fn from_assignment(block_of: Vec<usize>, c: usize) -> Result<Self> {
        let d = block_of.len();
        if c == 0 {
            return Err(Error::InvalidPartition(
                "node count must be at least 1".into(),
            ));
        }
        if d == 0 || !d.is_multiple_of(c) {
            return Err(Error::NonDivisible { d, c });
        }
        let mut blocks = vec![Vec::with_capacity(d / c); c];
        let mut local_index = vec![0; d];
        for (i, &l) in block_of.iter().enumerate() {
            if l >= c {
                return Err(Error::InvalidPartition(format!(
                    "coordinate {i} assigned to node {l}, but c = {c}"
                )));
            }
            local_index[i] = blocks[l].len();
            blocks[l].push(i);
        }
        let s = d / c;
        if let Some((l, b)) = blocks.iter().enumerate().find(|(_, b)| b.len() != s) {
            return Err(Error::InvalidPartition(format!(
                "block {l} has {} coordinates, expected s = {s}",
                b.len()
            )));
        }
        Ok(Self {
            block_of,
            local_index,
            blocks,
        })
    }

    /// Number of nodes `c`.
    pub fn nodes(&self) -> usize {
        self.blocks.len()
    }

    /// Block size `s`.
    pub fn block_size(&self) -> usize {
        self.blocks[0].len()
    }

    /// Total coordinates `d`.
    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.block_of
    }

    /// Position of coordinate `i` inside its own block.
    pub fn local_index(&self, i: usize) -> usize {
        self.local_index[i]
    }

    pub fn block(&self, l: usize) -> &[usize] {
        &self.blocks[l]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contiguous_blocks() {
        let p = Partition::contiguous(6, 2).unwrap();
        assert_eq!(p.block(0), &[0, 1, 2]);
        assert_eq!(p.block(1), &[3, 4, 5]);
        assert_eq!(p.block_size(), 3);

        let one = Partition::contiguous(6, 1).unwrap();
        assert_eq!(one.block(0), &[0, 1, 2, 3, 4, 5]);

        assert!(matches!(
            Partition::contiguous(5, 2),
            Err(Error::NonDivisible { d: 5, c: 2 })
        ));
    }

    #[test]
    fn assignment_consistency() {
        let p = Partition::from_assignment(vec![1, 0, 1, 0], 2).unwrap();
        assert_eq!(p.block(0), &[1, 3]);
        assert_eq!(p.block(1), &[0, 2]);
        for l in 0..2 {
            for (pos, &i) in p.block(l).iter().enumerate() {
                assert_eq!(p.block_of(i), l);
                assert_eq!(p.local_index(i), pos);
            }
        }
    }

    #[test]
    fn unbalanced_assignment_rejected() {
        assert!(Partition::from_assignment(vec![0, 0, 0, 1], 2).is_err());
        assert!(Partition::from_assignment(vec![0, 2], 2).is_err());
    }
}
