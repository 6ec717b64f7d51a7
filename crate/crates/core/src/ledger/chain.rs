use crate::model::{CanonicalEncode, Digest, PrimaryBlock, SecondaryBlock};

pub trait Chained: CanonicalEncode {
    fn prev_digest(&self) -> Digest;
    fn set_prev_digest(&mut self, d: Digest);
}

impl Chained for PrimaryBlock {
    fn prev_digest(&self) -> Digest {
        self.prev_digest
    }
    fn set_prev_digest(&mut self, d: Digest) {
        self.prev_digest = d;
    }
}

impl Chained for SecondaryBlock {
    fn prev_digest(&self) -> Digest {
        self.prev_digest
    }
    fn set_prev_digest(&mut self, d: Digest) {
        self.prev_digest = d;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainReport {
    pub ok: bool,
    pub first_bad: Option<usize>,
    pub blocks: usize,
}

/// Append-only sequence where each block commits to the digest of the one
/// before it. The head digest is kept separately so a dropped or altered
/// final block is still caught.
#[derive(Clone, Debug)]
pub struct Chain<B> {
    blocks: Vec<B>,
    head: Digest,
}

impl<B> Default for Chain<B> {
    fn default() -> Self {
        Self { blocks: Vec::new(), head: Digest::ZERO }
    }
}

impl<B: Chained> Chain<B> {
    /// Wraps blocks read from elsewhere without checking them.
    pub fn from_parts(blocks: Vec<B>, head: Digest) -> Self {
        Self { blocks, head }
    }

    pub fn push(&mut self, mut block: B) -> usize {
        block.set_prev_digest(self.head);
        self.head = block.digest();
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    pub fn into_parts(self) -> (Vec<B>, Digest) {
        (self.blocks, self.head)
    }

    pub fn head(&self) -> Digest {
        self.head
    }

    pub fn blocks(&self) -> &[B] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn verify(&self) -> ChainReport {
        let mut expected = Digest::ZERO;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.prev_digest() != expected {
                return ChainReport { ok: false, first_bad: Some(i), blocks: self.blocks.len() };
            }
            expected = b.digest();
        }
        if expected != self.head {
            return ChainReport {
                ok: false,
                first_bad: Some(self.blocks.len().saturating_sub(1)),
                blocks: self.blocks.len(),
            };
        }
        ChainReport { ok: true, first_bad: None, blocks: self.blocks.len() }
    }
}
